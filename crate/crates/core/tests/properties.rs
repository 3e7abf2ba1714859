//! Property tests for the structural invariants.

use mamass::bounds::InequalityReport;
use mamass::bounds::Verdict;
use mamass::frames::{adapted_frame, frame_hermitian_defect, frame_hessian};
use mamass::functions::{eval_ambient, parse_spec};
use mamass::geometry::{ambient_to_hopf, hopf_to_ambient, AmbientPoint};
use mamass::linalg::generalized_eigenvalues;
use mamass::mass::{mixed_wedge_ratio, slice, transversal_state};
use mamass::quadrature::IntegrationScheme;
use mamass::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

type CMat = DMatrix<C64>;

const MEMBERS_1: [&str; 5] = [
    "radial(profile=log,c=1.3)",
    "loglinear(A=[[1,1],[0,1]])",
    "monomial_ideal(m=[[1,0],[0,2]],w=[1,1])",
    "lse_toric(a=[1,2],beta=2)",
    "sqrt_compose(radial(profile=log,c=1))",
];

const MEMBERS_2: [&str; 4] = [
    "radial(profile=log,c=0.7)",
    "loglinear(A=[[1,1,0],[0,1,1],[0,0,1]])",
    "monomial_ideal(m=[[1,0,0],[0,1,0],[0,0,2]],w=[1,1,1])",
    "lse_toric(a=[1,1,2],beta=2)",
];

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

/// A point of the punctured ball with `|z| ∈ [0.05, 0.9]`.
fn ball_point(m: usize) -> impl Strategy<Value = AmbientPoint> {
    (prop::collection::vec(complex(), m), 0.05f64..0.9)
        .prop_filter("nonzero", |(z, _)| {
            z.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-3
        })
        .prop_map(|(z, r)| {
            let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            AmbientPoint::new(z.into_iter().map(|c| c * (r / norm)).collect())
        })
}

fn matrix(m: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(complex(), m * m).prop_map(move |v| CMat::from_vec(m, m, v))
}

fn hermitian(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_covariance(idx in 0usize..MEMBERS_1.len(), t in -20.0f64..-2.0, s in prop::sample::select(vec![0.5, 3.0])) {
        let base = parse_spec(MEMBERS_1[idx]).unwrap();
        let scaled = parse_spec(&format!("scale({s},{})", MEMBERS_1[idx])).unwrap();
        let scheme = IntegrationScheme::tensor(8);
        let a = slice(&base, 1, t, &scheme).unwrap();
        let b = slice(&scaled, 1, t, &scheme).unwrap();
        let expected = s * s * a.mass.value;
        prop_assert!((b.mass.value - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{} vs {}", b.mass.value, expected);
    }

    #[test]
    fn hopf_round_trip(z in ball_point(3)) {
        let back = hopf_to_ambient(&ambient_to_hopf(&z).unwrap()).unwrap();
        for (a, b) in z.z.iter().zip(&back.z) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn frames_are_unitary_and_equivariant(z in ball_point(3), theta in 0.0..std::f64::consts::TAU) {
        let f = adapted_frame(&z).unwrap();
        prop_assert!(f.unitarity_defect() <= 1e-12);
        let g = adapted_frame(&z.rotate(theta)).unwrap();
        let phase = C64::from_polar(1.0, theta);
        for i in 0..3 {
            let (u, v) = (f.vector(i) * phase, g.vector(i));
            prop_assert!((u - v).norm() <= 1e-10, "e_{} not equivariant", i);
        }
    }

    #[test]
    fn frame_components_are_hermitian(idx in 0usize..MEMBERS_2.len(), z in ball_point(3)) {
        let f = parse_spec(MEMBERS_2[idx]).unwrap();
        let fh = frame_hessian(&f, &z).unwrap();
        prop_assert!(frame_hermitian_defect(&fh) <= 1e-9);
    }

    #[test]
    fn congruence_preserves_mixed_wedges(a in matrix(3), b in matrix(3), p in matrix(3)) {
        let g = &a * a.adjoint() + CMat::identity(3, 3) * C64::new(0.5, 0.0);
        let h = hermitian(&b);
        let det = p.determinant().norm();
        prop_assume!(det > 0.05);
        let (g2, h2) = (p.adjoint() * &g * &p, p.adjoint() * &h * &p);
        let mut e1 = generalized_eigenvalues(&g, &h).unwrap();
        let mut e2 = generalized_eigenvalues(&g2, &h2).unwrap();
        e1.sort_by(f64::total_cmp);
        e2.sort_by(f64::total_cmp);
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).abs() <= 1e-7 * x.abs().max(1.0), "{:?} vs {:?}", e1, e2);
        }
        for k in 0..=3 {
            let (r1, r2) = (mixed_wedge_ratio(&g, &h, k).unwrap(), mixed_wedge_ratio(&g2, &h2, k).unwrap());
            prop_assert!((r1 - r2).abs() <= 1e-7 * r1.abs().max(1.0));
        }
    }

    #[test]
    fn alternating_density_matches_pointwise(idx in 0usize..MEMBERS_2.len(), t in -30.0f64..-1.0, z in prop::collection::vec(complex(), 2)) {
        let f = parse_spec(MEMBERS_2[idx]).unwrap();
        let st = transversal_state(&f, t, &z, 0).unwrap();
        let direct: f64 = st.mass_summands().iter().sum();
        let alt = st.alternating_density();
        prop_assert!((direct - alt).abs() <= 1e-8 * direct.abs().max(1.0), "{} vs {}", direct, alt);
    }

    #[test]
    fn transversal_positivity(idx in 0usize..MEMBERS_2.len(), t in -30.0f64..-1.0, z in prop::collection::vec(complex(), 2)) {
        let f = parse_spec(MEMBERS_2[idx]).unwrap();
        let st = transversal_state(&f, t, &z, 0).unwrap();
        let eigs = st.theta_eigs();
        let scale = eigs.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        prop_assert!(eigs.iter().all(|e| *e >= -1e-6 * scale), "{:?}", eigs);
        prop_assert!(st.u_dot >= -1e-9);
    }

    #[test]
    fn circle_invariance(idx in 0usize..MEMBERS_2.len(), z in ball_point(3), theta in 0.0..std::f64::consts::TAU) {
        let f = parse_spec(MEMBERS_2[idx]).unwrap();
        let a = eval_ambient(&f, &z).unwrap().value;
        let b = eval_ambient(&f, &z.rotate(theta)).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn inequality_verdicts(lhs in -10.0f64..10.0, gap in 0.0f64..5.0, unc in 0.0f64..1.0) {
        prop_assert_eq!(InequalityReport::new("x", lhs, lhs + gap, unc).verdict, Verdict::Pass);
        prop_assert_eq!(InequalityReport::new("x", lhs + gap + unc + 1e-6, lhs, unc).verdict, Verdict::Fail);
    }
}
