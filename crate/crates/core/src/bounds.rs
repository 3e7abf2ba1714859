//! Exact combinatorics (Bell-type constants `B_k`, dimensional constants
//! `C_n`), exact polynomial identities in commuting symbols `M, a, b, c`, and
//! the inequality harness for residual-mass estimates.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::functions::FunctionSpec;
use crate::invariants::{directional_profile, DirectionalProfile};
use crate::mass::{residual_from_trace, slices, BoundaryMassTrace, Slice};
use crate::quadrature::{extrapolate_limit, IntegrationScheme};
use crate::tolerances::{ROUNDING_REL, SIGMAS};
use crate::{Error, Result};

/// Symbols of [`IntPolynomial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    M,
    A,
    B,
    C,
}

impl Var {
    fn index(self) -> usize {
        self as usize
    }
}

const VAR_NAMES: [&str; 4] = ["M", "a", "b", "c"];

/// Polynomial with arbitrary-precision integer coefficients in the commuting
/// symbols `M, a, b, c`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntPolynomial {
    terms: BTreeMap<[u32; 4], BigInt>,
}

impl IntPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero();
        p.add_term([0; 4], c.into());
        p
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn var(v: Var) -> Self {
        let mut e = [0; 4];
        e[v.index()] = 1;
        let mut p = Self::zero();
        p.add_term(e, BigInt::one());
        p
    }

    /// Monomial `coeff·M^e₀ a^e₁ b^e₂ c^e₃`.
    pub fn monomial(coeff: impl Into<BigInt>, exps: [u32; 4]) -> Self {
        let mut p = Self::zero();
        p.add_term(exps, coeff.into());
        p
    }

    fn add_term(&mut self, e: [u32; 4], c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `M^e₀ a^e₁ b^e₂ c^e₃`.
    pub fn coefficient(&self, exps: [u32; 4]) -> BigInt {
        self.terms.get(&exps).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        let mut p = Self::zero();
        for (e, v) in &self.terms {
            p.add_term(*e, v * c);
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Value at a point, for spot checks.
    pub fn eval(&self, x: [f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c.to_f64().unwrap_or(f64::NAN)
                    * (0..4).map(|i| x[i].powi(e[i] as i32)).product::<f64>()
            })
            .sum()
    }
}

impl Add for &IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(*e, c.clone());
        }
        p
    }
}

impl Sub for &IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: &IntPolynomial) -> IntPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &IntPolynomial {
    type Output = IntPolynomial;
    fn neg(self) -> IntPolynomial {
        self.scale(&BigInt::from(-1))
    }
}

impl Mul for &IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        let mut p = IntPolynomial::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                p.add_term(e, c1 * c2);
            }
        }
        p
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let sign = if c.is_negative() {
                "-"
            } else if i > 0 {
                "+"
            } else {
                ""
            };
            let mag = c.abs();
            let sep = if i > 0 { " " } else { "" };
            write!(
                f,
                "{sep}{sign}{}",
                if i > 0 || c.is_negative() { " " } else { "" }
            )?;
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || e.iter().all(|&x| x == 0) {
                factors.push(mag.to_string());
            }
            for (v, &k) in VAR_NAMES.iter().zip(e) {
                match k {
                    0 => {}
                    1 => factors.push(v.to_string()),
                    _ => factors.push(format!("{v}^{k}")),
                }
            }
            write!(f, "{}", factors.join("·"))?;
        }
        Ok(())
    }
}

/// Exact binomial coefficient.
pub fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `B_0, …, B_{k_max}` with `B_0 = 1` and `B_{k+1} = Σ_j C(k,j) B_j`.
pub fn bell_constants(k_max: usize) -> Vec<BigUint> {
    let mut b = vec![BigUint::one()];
    for k in 0..k_max {
        let next = (0..=k)
            .map(|j| binomial_big(k as u64, j as u64) * &b[j])
            .sum();
        b.push(next);
    }
    b
}

/// Dimensional constant `C_n`:
/// `C_{2m} = Σ_{k=0}^m C(2m+1,2k+1) B_{2m−2k}` and
/// `C_{2m+1} = Σ_{k=0}^m C(2m+2,2k+1) B_{2m−2k+1}`.
pub fn dimensional_constant(n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "dimensional constant needs n ≥ 1".into(),
        ));
    }
    let b = bell_constants(n);
    // Both parities reduce to `Σ_{k ≤ n/2} C(n+1,2k+1) B_{n−2k}`.
    let c: BigUint = (0..=n / 2)
        .map(|k| binomial_big(n as u64 + 1, 2 * k as u64 + 1) * &b[n - 2 * k])
        .sum();
    assert!(c >= BigUint::from(n + 1), "C_n below n+1 for n = {n}");
    Ok(c)
}

fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Outcome of an exact identity verification.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub name: String,
    /// Largest `n` checked.
    pub n: usize,
    /// Number of exact comparisons made.
    pub cases: usize,
}

fn bin(n: usize, k: usize) -> BigInt {
    BigInt::from(binomial_big(n as u64, k as u64))
}

/// `C(n,k) + n/(n−k+1)·C(n−1,k−1) = C(n+1,k)` over the rationals for all
/// `1 ≤ k ≤ n ≤ n_max`. `mutate` perturbs the middle coefficient.
pub fn verify_identity_binomial_ratio(n_max: usize, mutate: bool) -> Result<IdentityReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut cases = 0;
    for n in 1..=n_max {
        for k in 1..=n {
            let denom = n - k + 1 + usize::from(mutate);
            let lhs = BigRational::from_integer(bin(n, k))
                + BigRational::new(BigInt::from(n), BigInt::from(denom))
                    * BigRational::from_integer(bin(n - 1, k - 1));
            let rhs = BigRational::from_integer(bin(n + 1, k));
            cases += 1;
            if lhs != rhs {
                return Err(Error::CounterexampleFound(format!(
                    "n={n}, k={k}: {lhs} ≠ {rhs}"
                )));
            }
        }
    }
    Ok(IdentityReport {
        name: "binomial_ratio".into(),
        n: n_max,
        cases,
    })
}

fn compare(name: &str, n: usize, lhs: &IntPolynomial, rhs: &IntPolynomial) -> Result<()> {
    let diff = lhs - rhs;
    if diff.is_zero() {
        Ok(())
    } else {
        Err(Error::CounterexampleFound(format!(
            "{name}, n={n}: lhs − rhs = {diff}"
        )))
    }
}

/// `Σ_k C(n+1,k) M^{n+1−k}a^{n−k}b^k − Σ_k C(n+1,k) c^{n+1−k}a^{n−k}b^k =
/// (M−c) Σ_k (Ma+b)^{n−k}(ca+b)^k`, `k = 0..=n`, as exact polynomials.
/// `mutate` bumps one binomial coefficient.
pub fn verify_identity_difference_factorization(n: usize, mutate: bool) -> Result<IdentityReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let (m, a, b, c) = (Var::M, Var::A, Var::B, Var::C);
    let (pm, pa, pb, pc) = (
        IntPolynomial::var(m),
        IntPolynomial::var(a),
        IntPolynomial::var(b),
        IntPolynomial::var(c),
    );
    let mut lhs = IntPolynomial::zero();
    for k in 0..=n {
        let mut coeff = bin(n + 1, k);
        if mutate && k == 1 {
            coeff += 1;
        }
        let (p, q) = ((n + 1 - k) as u32, (n - k) as u32);
        lhs = &lhs + &IntPolynomial::monomial(coeff.clone(), [p, q, k as u32, 0]);
        lhs = &lhs - &IntPolynomial::monomial(coeff, [0, q, k as u32, p]);
    }
    let ma_b = &(&pm * &pa) + &pb;
    let ca_b = &(&pc * &pa) + &pb;
    let mut sum = IntPolynomial::zero();
    for k in 0..=n {
        sum = &sum + &(&ma_b.pow((n - k) as u32) * &ca_b.pow(k as u32));
    }
    let rhs = &(&pm - &pc) * &sum;
    compare("difference_factorization", n, &lhs, &rhs)?;
    Ok(IdentityReport {
        name: "difference_factorization".into(),
        n,
        cases: 1,
    })
}

/// `Σ_k C(n+1,k) c^{n+1−k}a^{n−k}b^k = Σ_j C(n+1,j+1)(−1)^j (ca+b)^{n−j} c^{j+1} a^j`
/// as exact polynomials. `mutate` flips the sign of the `j = 1` term.
pub fn verify_identity_alternating_sum(n: usize, mutate: bool) -> Result<IdentityReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let (pa, pb, pc) = (
        IntPolynomial::var(Var::A),
        IntPolynomial::var(Var::B),
        IntPolynomial::var(Var::C),
    );
    let mut lhs = IntPolynomial::zero();
    for k in 0..=n {
        lhs = &lhs
            + &IntPolynomial::monomial(
                bin(n + 1, k),
                [0, (n - k) as u32, k as u32, (n + 1 - k) as u32],
            );
    }
    let e = &(&pc * &pa) + &pb;
    let mut rhs = IntPolynomial::zero();
    for j in 0..=n {
        let mut sign = if j % 2 == 0 { 1 } else { -1 };
        if mutate && j == 1 {
            sign = -sign;
        }
        let term = &e.pow((n - j) as u32) * &(&pc.pow(j as u32 + 1) * &pa.pow(j as u32));
        rhs = &rhs + &term.scale(&(bin(n + 1, j + 1) * sign));
    }
    compare("alternating_sum", n, &lhs, &rhs)?;
    Ok(IdentityReport {
        name: "alternating_sum".into(),
        n,
        cases: 1,
    })
}

/// Verdict of an inequality report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Inputs or uncertainty are not finite.
    Inconclusive,
}

/// One numerical inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub uncertainty: f64,
    pub verdict: Verdict,
    /// `|slack|` is within the uncertainty plus the rounding floor.
    pub tight: bool,
    /// Whether the inequality is a proven statement that must hold.
    pub asserted: bool,
    pub note: String,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, uncertainty: f64) -> Self {
        let slack = rhs - lhs;
        let budget = uncertainty + ROUNDING_REL * lhs.abs().max(rhs.abs()).max(1.0);
        let verdict = if !(lhs.is_finite() && rhs.is_finite() && uncertainty.is_finite()) {
            Verdict::Inconclusive
        } else if lhs <= rhs + budget {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            uncertainty,
            verdict,
            tight: slack.abs() <= budget,
            asserted: true,
            note: String::new(),
        }
    }

    fn unasserted(mut self, note: &str) -> Self {
        self.asserted = false;
        self.note = note.into();
        self
    }
}

/// Estimated invariants feeding [`check_estimate_suite`]; every
/// uncertainty is an absolute half-width.
#[derive(Debug, Clone, Serialize)]
pub struct ReportInputs {
    pub nu: f64,
    pub nu_uncertainty: f64,
    pub lambda: f64,
    pub lambda_uncertainty: f64,
    pub tau: f64,
    pub tau_uncertainty: f64,
    /// `A` at which `M_A` was taken.
    pub a: f64,
    /// `M_A` inflated by its refinement gap.
    pub m_a: f64,
    /// Slices at `t < −A`.
    pub slices: Vec<Slice>,
}

/// Estimates `ν`, `λ`, `τ` and `M_A` for `f`. `ν` extrapolates
/// `I(u_t)/πⁿ`, `τ` the boundary mass and `λ` the profile `M_A`; the bound
/// checks use the smallest `A` of `a_grid`.
pub fn estimate_inputs(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    a_grid: &[f64],
    grid_density: usize,
    scheme: &IntegrationScheme,
) -> Result<(ReportInputs, BoundaryMassTrace, DirectionalProfile)> {
    let sl = slices(f, n, t_grid, scheme)?;
    let trace = BoundaryMassTrace::from_slices(sl);
    let (tau, tau_unc) = residual_from_trace(&trace)?;
    let i_vals: Vec<f64> = trace.slices.iter().map(|s| s.i_over_pin().value).collect();
    let (nu, nu_ext) = extrapolate_limit(t_grid, &i_vals)?;
    let nu_last = trace.slices.last().map_or(0.0, |s| s.i_over_pin().stderr);
    let profile = directional_profile(f, n, a_grid, grid_density, scheme)?;
    let a = profile.a_grid[0];
    let inputs = ReportInputs {
        nu: nu.max(0.0),
        nu_uncertainty: nu_ext + SIGMAS * nu_last,
        lambda: profile.lambda,
        lambda_uncertainty: profile.lambda_uncertainty,
        tau,
        tau_uncertainty: tau_unc,
        a,
        m_a: profile.conservative(0),
        slices: trace.slices.iter().filter(|s| s.t < -a).cloned().collect(),
    };
    Ok((inputs, trace, profile))
}

/// Inequality reports for the estimated invariants of an `n`-dimensional
/// member:
///
/// - (a) `ν^{n+1} ≤ τ`;
/// - (b) `τ ≤ 2C_n λⁿ ν`;
/// - (c) `τ ≤ (n+1) λ^{n+1}`;
/// - (d) `mass(t) ≤ C_n M_Aⁿ I(u_t)/πⁿ` and `mass(t) ≤ (n+1) M_A^{n+1}` for `t < −A`;
/// - (e) `π^{−n}∫u̇^{n+1−k} ω^{n−k}∧Θ₂^k ≤ B_k M_Aⁿ I(u_t)/πⁿ` per `k`;
/// - (f) for `n = 1`, `ν² ≤ τ ≤ 2λν + ν²`;
/// - (g) `τ ≤ C_n λⁿ ν`, reported but not asserted.
pub fn check_estimate_suite(n: usize, inp: &ReportInputs) -> Result<Vec<InequalityReport>> {
    let cn = to_f64(&dimensional_constant(n)?);
    let bk: Vec<f64> = bell_constants(n).iter().map(to_f64).collect();
    let nf = n as f64;
    let (nu, du) = (inp.nu, inp.nu_uncertainty);
    let (lam, dl) = (inp.lambda, inp.lambda_uncertainty);
    let (tau, dt) = (inp.tau, inp.tau_uncertainty);
    let lam_n = lam.powi(n as i32);
    let d_lam_n = nf * lam.abs().powi(n as i32 - 1) * dl;
    let mut out = Vec::new();

    out.push(InequalityReport::new(
        "(a) nu^(n+1) <= tau",
        nu.powi(n as i32 + 1),
        tau,
        (nf + 1.0) * nu.abs().powi(n as i32) * du + dt,
    ));
    out.push(InequalityReport::new(
        "(b) tau <= 2 C_n lambda^n nu",
        tau,
        2.0 * cn * lam_n * nu,
        dt + 2.0 * cn * (d_lam_n * nu.abs() + lam_n.abs() * du),
    ));
    out.push(InequalityReport::new(
        "(c) tau <= (n+1) lambda^(n+1)",
        tau,
        (nf + 1.0) * lam.powi(n as i32 + 1),
        dt + (nf + 1.0) * (nf + 1.0) * lam_n.abs() * dl,
    ));
    let ma_n = inp.m_a.powi(n as i32);
    for s in &inp.slices {
        let i = s.i_over_pin();
        out.push(InequalityReport::new(
            format!("(d) mass(t={}) <= C_n M_A^n I/pi^n", s.t),
            s.mass.value,
            cn * ma_n * i.value,
            SIGMAS * s.mass.stderr + cn * ma_n * SIGMAS * i.stderr,
        ));
        out.push(InequalityReport::new(
            format!("(d') mass(t={}) <= (n+1) M_A^(n+1)", s.t),
            s.mass.value,
            (nf + 1.0) * inp.m_a.powi(n as i32 + 1),
            SIGMAS * s.mass.stderr,
        ));
        for (k, term) in s.theta_terms.iter().enumerate() {
            out.push(InequalityReport::new(
                format!("(e) k={k} t={}: theta term <= B_k M_A^n I/pi^n", s.t),
                term.value,
                bk[k] * ma_n * i.value,
                SIGMAS * term.stderr + bk[k] * ma_n * SIGMAS * i.stderr,
            ));
        }
    }
    if n == 1 {
        out.push(InequalityReport::new(
            "(f) nu^2 <= tau",
            nu * nu,
            tau,
            2.0 * nu.abs() * du + dt,
        ));
        out.push(InequalityReport::new(
            "(f) tau <= 2 lambda nu + nu^2",
            tau,
            2.0 * lam * nu + nu * nu,
            dt + 2.0 * (dl * nu.abs() + lam.abs() * du) + 2.0 * nu.abs() * du,
        ));
    }
    out.push(
        InequalityReport::new(
            "(g) tau <= C_n lambda^n nu",
            tau,
            cn * lam_n * nu,
            dt + cn * (d_lam_n * nu.abs() + lam_n.abs() * du),
        )
        .unasserted("improved, unproven here"),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_and_dimensional_constants() {
        let b: Vec<u64> = bell_constants(5)
            .iter()
            .map(|x| x.to_u64().unwrap())
            .collect();
        assert_eq!(b, vec![1, 1, 2, 5, 15, 52]);
        let c: Vec<u64> = (1..=4)
            .map(|n| dimensional_constant(n).unwrap().to_u64().unwrap())
            .collect();
        assert_eq!(c, vec![2, 7, 24, 96]);
        assert!(dimensional_constant(0).is_err());
    }

    #[test]
    fn polynomial_arithmetic() {
        let a = IntPolynomial::var(Var::A);
        let b = IntPolynomial::var(Var::B);
        let sq = (&a + &b).pow(2);
        assert_eq!(sq.coefficient([0, 1, 1, 0]), BigInt::from(2));
        assert_eq!(sq.num_terms(), 3);
        assert!((&sq - &sq).is_zero());
        assert_eq!(format!("{}", &a - &b), "a - b");
    }

    #[test]
    fn identities_hold_and_mutations_are_caught() {
        verify_identity_binomial_ratio(12, false).unwrap();
        for n in 1..=8 {
            verify_identity_difference_factorization(n, false).unwrap();
            verify_identity_alternating_sum(n, false).unwrap();
        }
        assert!(matches!(
            verify_identity_binomial_ratio(4, true),
            Err(Error::CounterexampleFound(_))
        ));
        assert!(matches!(
            verify_identity_difference_factorization(3, true),
            Err(Error::CounterexampleFound(_))
        ));
        assert!(matches!(
            verify_identity_alternating_sum(3, true),
            Err(Error::CounterexampleFound(_))
        ));
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(
            InequalityReport::new("x", 1.0, 2.0, 0.1).verdict,
            Verdict::Pass
        );
        assert_eq!(
            InequalityReport::new("x", 2.05, 2.0, 0.1).verdict,
            Verdict::Pass
        );
        assert!(InequalityReport::new("x", 2.05, 2.0, 0.1).tight);
        assert_eq!(
            InequalityReport::new("x", 3.0, 2.0, 0.1).verdict,
            Verdict::Fail
        );
        assert_eq!(
            InequalityReport::new("x", f64::NAN, 2.0, 0.1).verdict,
            Verdict::Inconclusive
        );
    }
}
