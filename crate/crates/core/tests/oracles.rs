//! Library results against independently computed values.

use mamass::bounds::{bell_constants, dimensional_constant};
use mamass::geometry::contact_selfcheck;
use mamass::functions::parse_spec;
use mamass::invariants::{directional_profile, lelong_estimate};
use mamass::mass::slice;
use mamass::quadrature::{Estimate, IntegrationScheme};
use mamass::tolerances::CONTACT_RESIDUAL;

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Bell numbers from the Bell triangle.
fn bell_triangle(count: usize) -> Vec<u128> {
    let mut out = vec![1u128];
    let mut row = vec![1u128];
    while out.len() < count {
        let mut next = vec![*row.last().unwrap()];
        for x in &row {
            next.push(next.last().unwrap() + x);
        }
        out.push(next[0]);
        row = next;
    }
    out
}

/// `C_n` from the separate even and odd formulas.
fn c_by_parity(n: usize, b: &[u128]) -> u128 {
    let m = n / 2;
    if n % 2 == 0 {
        (0..=m).map(|k| binom(2 * m as u128 + 1, 2 * k as u128 + 1) * b[2 * m - 2 * k]).sum()
    } else {
        (0..=m).map(|k| binom(2 * m as u128 + 2, 2 * k as u128 + 1) * b[2 * m - 2 * k + 1]).sum()
    }
}

#[test]
fn bell_constants_match_triangle() {
    let lib: Vec<String> = bell_constants(24).iter().map(|x| x.to_string()).collect();
    let tri: Vec<String> = bell_triangle(25).iter().map(|x| x.to_string()).collect();
    assert_eq!(lib, tri);
}

#[test]
fn dimensional_constants_match_parity_formulas() {
    let b = bell_triangle(30);
    for n in 1..=24 {
        assert_eq!(dimensional_constant(n).unwrap().to_string(), c_by_parity(n, &b).to_string(), "n = {n}");
    }
    assert_eq!(
        [1, 2, 3].map(|n| dimensional_constant(n).unwrap().to_string()),
        ["2", "7", "24"].map(String::from)
    );
}

fn ipow(x: i128, k: usize) -> i128 {
    x.pow(k as u32)
}

/// Both sides of the difference factorization at an integer point.
fn difference_factorization(n: usize, m: i128, a: i128, b: i128, c: i128) -> (i128, i128) {
    let lhs: i128 = (0..=n)
        .map(|k| {
            binom(n as u128 + 1, k as u128) as i128
                * (ipow(m, n + 1 - k) - ipow(c, n + 1 - k))
                * ipow(a, n - k)
                * ipow(b, k)
        })
        .sum();
    let rhs = (m - c) * (0..=n).map(|k| ipow(m * a + b, n - k) * ipow(c * a + b, k)).sum::<i128>();
    (lhs, rhs)
}

/// Both sides of the alternating-sum identity at an integer point.
fn alternating_sum(n: usize, a: i128, b: i128, c: i128) -> (i128, i128) {
    let lhs: i128 = (0..=n)
        .map(|k| binom(n as u128 + 1, k as u128) as i128 * ipow(c, n + 1 - k) * ipow(a, n - k) * ipow(b, k))
        .sum();
    let rhs: i128 = (0..=n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * binom(n as u128 + 1, j as u128 + 1) as i128
                * ipow(c * a + b, n - j)
                * ipow(c, j + 1)
                * ipow(a, j)
        })
        .sum();
    (lhs, rhs)
}

#[test]
fn identities_hold_at_integer_points() {
    let values = [-3i128, -1, 0, 2, 5];
    for n in 1..=8 {
        for &m in &values {
            for &a in &values {
                for &b in &values {
                    for &c in &values {
                        let (l, r) = difference_factorization(n, m, a, b, c);
                        assert_eq!(l, r, "difference factorization n={n} at {:?}", (m, a, b, c));
                    }
                    let (l, r) = alternating_sum(n, m, a, b);
                    assert_eq!(l, r, "alternating sum n={n}");
                }
            }
        }
    }
}

#[test]
fn binomial_ratio_identity_by_cross_multiplication() {
    for n in 1..=12u128 {
        for k in 1..=n {
            let lhs = binom(n, k) * (n - k + 1) + n * binom(n - 1, k - 1);
            assert_eq!(lhs, binom(n + 1, k) * (n - k + 1), "n={n}, k={k}");
        }
    }
}

fn close(est: Estimate, exact: f64) -> bool {
    (est.value - exact).abs() <= 3.0 * est.stderr + 1e-6 * exact.abs().max(1.0)
}

#[test]
fn toric_mass_is_product_of_exponents() {
    let scheme = IntegrationScheme::tensor(16);
    for (a, b) in [(1, 1), (1, 2), (2, 3)] {
        for s in [
            format!("monomial_ideal(m=[[{a},0],[0,{b}]],w=[1,1])"),
            format!("lse_toric(a=[{a},{b}],beta=2)"),
        ] {
            let f = parse_spec(&s).unwrap();
            for t in [-4.0, -9.0] {
                let m = slice(&f, 1, t, &scheme).unwrap().mass;
                assert!(close(m, (a * b) as f64), "{s} at t={t}: {m:?}");
            }
        }
    }
}

#[test]
fn radial_mass_is_power_of_slope() {
    for n in 1..=2 {
        let scheme = if n == 1 { IntegrationScheme::tensor(16) } else { IntegrationScheme::mc(4000, 3) };
        for c in [0.5, 1.0, 2.5] {
            let f = parse_spec(&format!("radial(profile=log,c={c})")).unwrap();
            let m = slice(&f, n, -6.0, &scheme).unwrap().mass;
            assert!(close(m, f64::powi(c, n as i32 + 1)), "c={c}, n={n}: {m:?}");
            let g = parse_spec(&format!("sqrt_compose(radial(profile=log,c={c}))")).unwrap();
            for t in [-3.0, -12.0] {
                let m = slice(&g, n, t, &scheme).unwrap().mass;
                let slope = 0.5 * (c / -t).sqrt();
                assert!(close(m, slope.powi(n as i32 + 1)), "sqrt c={c}, n={n}, t={t}: {m:?}");
            }
        }
    }
}

#[test]
fn monomial_lelong_numbers_are_extreme_exponents() {
    let scheme = IntegrationScheme::tensor(16);
    let f = parse_spec("monomial_ideal(m=[[1,0],[0,3]],w=[1,1])").unwrap();
    let nu = lelong_estimate(&f, 1, &[-5.0, -10.0, -20.0, -40.0], &scheme).unwrap();
    assert!((nu.by_i - 1.0).abs() <= 1e-2, "ν by I = {}", nu.by_i);
    assert!((nu.by_slope - 1.0).abs() <= 1e-2, "ν by slope = {}", nu.by_slope);
    let lam = directional_profile(&f, 1, &[4.0, 8.0, 16.0, 32.0], 64, &scheme).unwrap();
    assert!((lam.lambda - 3.0).abs() <= 2e-2, "λ = {}", lam.lambda);
}

#[test]
fn contact_data_is_consistent() {
    for n in 1..=3 {
        let ok = contact_selfcheck(n, 64, 5, 1e-3, 0.0).unwrap();
        assert!(ok.max_residual <= CONTACT_RESIDUAL, "n={n}: {}", ok.max_residual);
        let faulty = contact_selfcheck(n, 64, 5, 1e-3, 1e-3);
        assert!(faulty.map_or(true, |c| c.max_residual > CONTACT_RESIDUAL), "fault missed at n={n}");
    }
}
