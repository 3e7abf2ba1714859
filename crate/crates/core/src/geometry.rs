//! Hopf coordinates on `ℂ^{n+1}∖{0}`, the Fubini–Study metric on ℂPⁿ and the
//! contact data of the unit sphere.
//!
//! The canonical chart is the single-valued trivialization
//! `z^c = e^{t+iθ}(1+|ζ|²)^{-1/2}`, `z^{j} = z^c ζ^α` for the remaining
//! indices `j` in increasing order. The multi-valued chart with the factor
//! `ϱ = Π(ζ̄^α/|ζ^α|)^{1/2}` is available only through [`psi_chart_to_ambient`]
//! on the principal branch, as a check of the contact-form formula.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::linalg::{CMat, CVec};
use crate::{Error, Result, C64};

/// A point of `ℂ^{n+1}∖{0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint {
    pub z: Vec<C64>,
}

impl AmbientPoint {
    pub fn new(z: Vec<C64>) -> Self {
        Self { z }
    }

    /// Point from real and imaginary parts.
    pub fn from_parts(parts: &[(f64, f64)]) -> Self {
        Self::new(parts.iter().map(|&(x, y)| C64::new(x, y)).collect())
    }

    /// Projective dimension `n`.
    pub fn n(&self) -> usize {
        self.z.len().saturating_sub(1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `e^{iθ} z`.
    pub fn rotate(&self, theta: f64) -> Self {
        let w = C64::from_polar(1.0, theta);
        Self::new(self.z.iter().map(|c| c * w).collect())
    }

    /// `s z` for real `s`.
    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.z.iter().map(|c| c * s).collect())
    }

    pub fn as_vector(&self) -> CVec {
        CVec::from_column_slice(&self.z)
    }
}

/// `(t, θ, ζ, chart)` coordinates of a point of the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfPoint {
    pub t: f64,
    pub theta: f64,
    pub zeta: Vec<C64>,
    pub chart: usize,
}

/// Fubini–Study coefficient matrix, `ω = i Σ G_{αβ̄} dζ^α∧dζ̄^β`.
#[derive(Debug, Clone, PartialEq)]
pub struct FSMetric {
    pub g: CMat,
}

/// Ambient index of the `α`-th chart coordinate (`α` is zero based).
pub fn chart_index(chart: usize, alpha: usize) -> usize {
    if alpha < chart {
        alpha
    } else {
        alpha + 1
    }
}

fn zeta_norm_sqr(zeta: &[C64]) -> f64 {
    zeta.iter().map(|c| c.norm_sqr()).sum()
}

/// Canonical chart map `(t, θ, ζ) ↦ z`.
pub fn hopf_to_ambient(p: &HopfPoint) -> Result<AmbientPoint> {
    let n = p.zeta.len();
    if p.chart > n {
        return Err(Error::BadChart { chart: p.chart, n });
    }
    let zc = C64::from_polar(p.t.exp(), p.theta) / (1.0 + zeta_norm_sqr(&p.zeta)).sqrt();
    let mut z = vec![C64::new(0.0, 0.0); n + 1];
    z[p.chart] = zc;
    for (alpha, c) in p.zeta.iter().enumerate() {
        z[chart_index(p.chart, alpha)] = zc * c;
    }
    Ok(AmbientPoint::new(z))
}

/// Chart with the largest coordinate modulus, lowest index on ties.
pub fn preferred_chart(z: &[C64]) -> usize {
    let mut best = 0;
    for (j, c) in z.iter().enumerate() {
        if c.norm() > z[best].norm() {
            best = j;
        }
    }
    best
}

/// Inverse of [`hopf_to_ambient`] in the chart `argmax |z^j|`.
pub fn ambient_to_hopf(z: &AmbientPoint) -> Result<HopfPoint> {
    ambient_to_hopf_in_chart(z, preferred_chart(&z.z))
}

/// Inverse of [`hopf_to_ambient`] in a prescribed chart.
pub fn ambient_to_hopf_in_chart(z: &AmbientPoint, chart: usize) -> Result<HopfPoint> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::ZeroPoint);
    }
    let n = z.n();
    if chart > n {
        return Err(Error::BadChart { chart, n });
    }
    let zc = z.z[chart];
    if zc.norm() == 0.0 {
        return Err(Error::OnAxis { index: chart });
    }
    let zeta = (0..n).map(|a| z.z[chart_index(chart, a)] / zc).collect();
    Ok(HopfPoint {
        t: r.ln(),
        theta: zc.arg().rem_euclid(2.0 * PI),
        zeta,
        chart,
    })
}

/// Fubini–Study matrix `G_{αβ̄} = ½[(1+|ζ|²)δ − ζ̄^α ζ^β]/(1+|ζ|²)²`.
pub fn fs_metric_at(zeta: &[C64]) -> FSMetric {
    let n = zeta.len();
    let s = 1.0 + zeta_norm_sqr(zeta);
    let g = CMat::from_fn(n, n, |a, b| {
        let d = if a == b { s } else { 0.0 };
        (C64::new(d, 0.0) - zeta[a].conj() * zeta[b]) * (0.5 / (s * s))
    });
    FSMetric { g }
}

/// Holomorphic tangent vectors of `ζ ↦ z(t, 0, ζ)` corrected along the
/// radial direction: `V_α = z^c e_{j(α)} − ζ̄^α z/(1+|ζ|²)`.
///
/// For an S¹-invariant `u`, `V^T (∂∂̄u) V̄ − u̇ G` is the chart Hessian of
/// `ζ ↦ u(z(t,0,ζ))`.
pub fn transversal_vectors(
    t: f64,
    zeta: &[C64],
    chart: usize,
) -> Result<(AmbientPoint, Vec<CVec>)> {
    let z = hopf_to_ambient(&HopfPoint {
        t,
        theta: 0.0,
        zeta: zeta.to_vec(),
        chart,
    })?;
    let s = 1.0 + zeta_norm_sqr(zeta);
    let zc = z.z[chart];
    let vs = (0..zeta.len())
        .map(|a| {
            let mut v = z.as_vector() * (-zeta[a].conj() / s);
            v[chart_index(chart, a)] += zc;
            v
        })
        .collect();
    Ok((z, vs))
}

/// `cos κ_α = 1 − 2|ζ^α|²/(1+|ζ|²)` for the contact-form expression
/// `η = ¼{dθ − Σ cos κ_α Im(dζ^α/ζ^α)}`.
pub fn contact_form_coeffs(zeta: &[C64]) -> Result<Vec<f64>> {
    if let Some(index) = zeta.iter().position(|c| c.norm() == 0.0) {
        return Err(Error::OnAxis { index });
    }
    let s = 1.0 + zeta_norm_sqr(zeta);
    Ok(zeta.iter().map(|c| 1.0 - 2.0 * c.norm_sqr() / s).collect())
}

/// Chart map with the factor `ϱ` on the principal square-root branch,
/// `z^0 = r e^{iθ/2} ϱ (1+|ζ|²)^{-1/2}`, `z^α = z^0 ζ^α`.
pub fn psi_chart_to_ambient(r: f64, theta: f64, zeta: &[C64]) -> Result<AmbientPoint> {
    if let Some(index) = zeta.iter().position(|c| c.norm() == 0.0) {
        return Err(Error::OnAxis { index });
    }
    let rho = zeta.iter().fold(C64::new(1.0, 0.0), |acc, c| {
        acc * (c.conj() / c.norm()).sqrt()
    });
    let z0 = C64::from_polar(r, theta / 2.0) * rho / (1.0 + zeta_norm_sqr(zeta)).sqrt();
    let mut z = vec![z0];
    z.extend(zeta.iter().map(|c| z0 * c));
    Ok(AmbientPoint::new(z))
}

/// Outcome of [`contact_selfcheck`].
#[derive(Debug, Clone, Serialize)]
pub struct ContactCheck {
    pub points: usize,
    /// Worst `|η₀(ξ₀) − 1|`.
    pub reeb_normalization: f64,
    /// Worst `|ι_{ξ₀} dη₀|`.
    pub reeb_contraction: f64,
    /// Worst `|dη − ω_FS|` in the canonical chart.
    pub fubini_study: f64,
    /// Worst deviation of the pulled back `η` from the `cos κ` formula in the
    /// `ϱ` chart.
    pub cos_kappa_formula: f64,
    pub max_residual: f64,
}

/// Real coordinates `(x⁰, y⁰, x¹, y¹, …)` of `z`.
fn to_real(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn from_real(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// Standard contact form `η₀ = |z|⁻² Σ (y dx − x dy)` scaled by `1+perturb`,
/// as a covector in real coordinates.
fn eta0(x: &[f64], perturb: f64) -> Vec<f64> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let k = (1.0 + perturb) / r2;
    x.chunks(2).flat_map(|p| [k * p[1], -k * p[0]]).collect()
}

/// Reeb field `ξ₀ = Σ (y∂x − x∂y)`.
fn xi0(x: &[f64]) -> Vec<f64> {
    x.chunks(2).flat_map(|p| [p[1], -p[0]]).collect()
}

/// `dα(e_i, e_j) = ∂_i α_j − ∂_j α_i` by central differences.
fn exterior_derivative(alpha: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let m = x.len();
    let mut jac = vec![vec![0.0; m]; m];
    for i in 0..m {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let ap = alpha(&xp);
        let am = alpha(&xm);
        for j in 0..m {
            jac[i][j] = (ap[j] - am[j]) / (2.0 * h);
        }
    }
    (0..m)
        .map(|i| (0..m).map(|j| jac[i][j] - jac[j][i]).collect())
        .collect()
}

/// Pullback of the normalized contact form `η = −η₀/2` along a chart map
/// `φ: ℝ^m → ℂ^{n+1}`, by central differences of `φ`.
fn pullback_eta(phi: &dyn Fn(&[f64]) -> Vec<C64>, x: &[f64], h: f64, perturb: f64) -> Vec<f64> {
    let z = phi(x);
    let e = eta0(&to_real(&z), perturb);
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let v: Vec<f64> = to_real(&phi(&xp))
                .iter()
                .zip(to_real(&phi(&xm)))
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            -0.5 * e.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect()
}

/// Finite-difference verification of the contact structure.
///
/// At `samples` random unit-sphere points it checks `η₀(ξ₀) = 1` and
/// `ι_{ξ₀}dη₀ = 0`; at random chart points it checks that `dη` pulled back by
/// the canonical chart is `ω_FS`, and that the `ϱ`-chart pullback of `η`
/// matches the `cos κ` expression. Points with some `|ζ^α|` below
/// `axis_exclusion` are skipped in the `ϱ`-chart check. `perturb` rescales
/// `η` by `1+perturb` (fault injection).
pub fn contact_selfcheck(
    n: usize,
    samples: usize,
    seed: u64,
    axis_exclusion: f64,
    perturb: f64,
) -> Result<ContactCheck> {
    let tol = crate::tolerances::CONTACT_RESIDUAL;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = ContactCheck {
        points: samples,
        reeb_normalization: 0.0,
        reeb_contraction: 0.0,
        fubini_study: 0.0,
        cos_kappa_formula: 0.0,
        max_residual: 0.0,
    };
    let mut witness = String::new();
    let note = |what: &str, r: f64, at: String, slot: &mut f64, w: &mut String| {
        if r > *slot {
            *slot = r;
        }
        if r > tol && w.is_empty() {
            *w = format!("{what} at {at}");
        }
    };
    let h = 1e-5;
    for _ in 0..samples {
        let g = gaussian_vec(&mut rng, n + 1);
        let r = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let x = to_real(&g.iter().map(|c| c / r).collect::<Vec<_>>());
        let e = eta0(&x, perturb);
        let xi = xi0(&x);
        let val: f64 = e.iter().zip(&xi).map(|(a, b)| a * b).sum();
        note(
            "η₀(ξ₀)",
            (val - 1.0).abs(),
            format!("{x:?}"),
            &mut worst.reeb_normalization,
            &mut witness,
        );
        let d = exterior_derivative(&|y| eta0(y, perturb), &x, h);
        let contraction = (0..x.len())
            .map(|j| (0..x.len()).map(|i| xi[i] * d[i][j]).sum::<f64>().abs())
            .fold(0.0, f64::max);
        note(
            "ι_ξ dη₀",
            contraction,
            format!("{x:?}"),
            &mut worst.reeb_contraction,
            &mut witness,
        );

        // canonical chart: coordinates (θ, Re ζ, Im ζ) at r = 1
        let zeta = gaussian_vec(&mut rng, n);
        let chart_map = |y: &[f64]| {
            hopf_to_ambient(&HopfPoint {
                t: 0.0,
                theta: y[0],
                zeta: from_real(&y[1..]),
                chart: 0,
            })
            .expect("valid chart")
            .z
        };
        let mut y = vec![0.3];
        y.extend(to_real(&zeta));
        let d_eta = exterior_derivative(&|p| pullback_eta(&chart_map, p, h, perturb), &y, 1e-4);
        let gm = fs_metric_at(&zeta).g;
        let omega = |i: usize, j: usize| {
            // real tangent directions e_i, e_j in ζ coordinates
            let dir = |k: usize| {
                let mut v = vec![C64::new(0.0, 0.0); n];
                if k > 0 {
                    let a = (k - 1) / 2;
                    v[a] = if (k - 1) % 2 == 0 {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 1.0)
                    };
                }
                v
            };
            let (xv, yv) = (dir(i), dir(j));
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    acc += gm[(a, b)] * xv[a] * yv[b].conj();
                }
            }
            -2.0 * acc.im
        };
        let mut fs: f64 = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                fs = fs.max((d_eta[i][j] - omega(i, j)).abs());
            }
        }
        note(
            "dη = ω_FS",
            fs,
            format!("ζ={zeta:?}"),
            &mut worst.fubini_study,
            &mut witness,
        );

        // ϱ chart, principal branch, away from the axes and the branch cut
        let zeta = loop {
            let cand = gaussian_vec(&mut rng, n);
            if cand
                .iter()
                .all(|c| c.norm() >= axis_exclusion.max(1e-12) && c.arg().abs() < PI - 0.05)
            {
                break cand;
            }
        };
        let psi_map = |p: &[f64]| {
            psi_chart_to_ambient(1.0, p[0], &from_real(&p[1..]))
                .expect("off axis")
                .z
        };
        let mut p = vec![0.7];
        p.extend(to_real(&zeta));
        let hp = 1e-6 * zeta.iter().map(|c| c.norm()).fold(1.0, f64::min);
        let got = pullback_eta(&psi_map, &p, hp, perturb);
        let cos = contact_form_coeffs(&zeta)?;
        let mut expected = vec![0.25];
        for (c, k) in zeta.iter().zip(&cos) {
            let m2 = c.norm_sqr();
            expected.push(0.25 * k * c.im / m2);
            expected.push(-0.25 * k * c.re / m2);
        }
        let dev = got
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        note(
            "cos κ formula",
            dev,
            format!("ζ={zeta:?}"),
            &mut worst.cos_kappa_formula,
            &mut witness,
        );
    }
    worst.max_residual = worst
        .reeb_normalization
        .max(worst.reeb_contraction)
        .max(worst.fubini_study)
        .max(worst.cos_kappa_formula);
    if worst.max_residual > tol {
        return Err(Error::check(
            "contact structure",
            worst.max_residual,
            tol,
            witness,
        ));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn chart_examples() {
        let p = HopfPoint {
            t: 0.0,
            theta: 0.0,
            zeta: vec![c(1.0, 0.0)],
            chart: 0,
        };
        let z = hopf_to_ambient(&p).unwrap();
        let s = 0.5f64.sqrt();
        assert!((z.z[0] - c(s, 0.0)).norm() < 1e-15 && (z.z[1] - c(s, 0.0)).norm() < 1e-15);

        let h = ambient_to_hopf(&AmbientPoint::from_parts(&[
            (0.0, 0.0),
            ((-2.0f64).exp(), 0.0),
        ]))
        .unwrap();
        assert_eq!(h.chart, 1);
        assert!((h.t + 2.0).abs() < 1e-15 && h.zeta[0].norm() == 0.0);

        let h = ambient_to_hopf(&AmbientPoint::from_parts(&[(s, 0.0), (0.0, s)])).unwrap();
        assert_eq!(h.chart, 0);
        assert!((h.zeta[0] - c(0.0, 1.0)).norm() < 1e-15 && h.t.abs() < 1e-15);
        assert_eq!(
            ambient_to_hopf(&AmbientPoint::from_parts(&[(0.0, 0.0)])),
            Err(Error::ZeroPoint)
        );
    }

    #[test]
    fn metric_examples() {
        let g = fs_metric_at(&[c(0.0, 0.0), c(0.0, 0.0)]).g;
        assert!((g.clone() - CMat::identity(2, 2).scale(0.5)).norm() < 1e-16);
        let g = fs_metric_at(&[c(1.0, 0.0)]).g;
        assert!((g[(0, 0)].re - 0.125).abs() < 1e-16);
    }

    #[test]
    fn cos_kappa_examples() {
        assert!(contact_form_coeffs(&[c(1.0, 0.0)]).unwrap()[0].abs() < 1e-16);
        let k = contact_form_coeffs(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(k.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert!((contact_form_coeffs(&[c(1e-9, 0.0)]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert_eq!(
            contact_form_coeffs(&[c(1.0, 0.0), c(0.0, 0.0)]),
            Err(Error::OnAxis { index: 1 })
        );
    }

    #[test]
    fn contact_structure_checks() {
        let ok = contact_selfcheck(1, 64, 3, 0.0, 0.0).unwrap();
        assert!(ok.max_residual < 1e-6, "{ok:?}");
        assert!(contact_selfcheck(2, 16, 4, 1e-3, 0.0).is_ok());
        assert!(matches!(
            contact_selfcheck(1, 8, 3, 0.0, 1e-3),
            Err(Error::CheckFailed { .. })
        ));
    }
}
