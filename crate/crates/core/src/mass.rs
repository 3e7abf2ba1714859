//! Mixed-wedge kernel, transversal positivity, boundary Monge–Ampère mass on
//! spheres, its alternating form, the ambient shell oracle and the residual
//! mass.
//!
//! With `λ` the eigenvalues of `H` against `G`, `ω^{n−k}∧(i∂∂̄u_t)^k =
//! σ_k(λ)/C(n,k)·ωⁿ`. The normalized boundary mass on `S_r`, `r = e^t`, is
//!
//! `π^{−(n+1)}∫_{S_r} d^cu∧(dd^cu)^n = π^{−n} Σ_k C(n+1,k) ∫ u̇^{n+1−k} σ_k(λ)/C(n,k) ωⁿ`.
//!
//! Only the restriction of `dd^cu` to the sphere enters, so the radial
//! cross terms of the ambient Hessian are never formed.

use std::f64::consts::PI;

use serde::Serialize;

use crate::functions::{eval_ambient, eval_transversal, FunctionSpec, TransversalEval};
use crate::geometry::fs_metric_at;
use crate::linalg::{
    all_elementary_symmetric, binomial, factorial, generalized_eigenvalues,
    generalized_symmetric_functions, CMat,
};
use crate::quadrature::{
    integrate_cpn_vec, integrate_shell_vec, mixture_sphere_points, purpose, uniforms, CpnPoint,
    Estimate, IntegrationScheme,
};
use crate::tolerances::{depth_for, POSITIVITY_MIN};
use crate::{Error, Result, C64};

/// Transversal data at one chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalState {
    pub u_t: f64,
    pub u_dot: f64,
    pub g: CMat,
    pub h: CMat,
    /// `Θ₂ = u̇G + H`.
    pub theta2: CMat,
    /// Eigenvalues of `H` against `G`, ascending.
    pub eigs: Vec<f64>,
    /// `σ_k` of the eigenvalues of `H` against `G`.
    pub sym_h: Vec<f64>,
    /// `σ_k` of the eigenvalues of `Θ₂` against `G`.
    pub sym_theta: Vec<f64>,
}

impl TransversalState {
    /// `σ_k(λ)/C(n,k)` for `k = 0..=n`.
    pub fn ratios(&self) -> Vec<f64> {
        normalize(&self.sym_h)
    }

    /// Eigenvalues of `Θ₂ = u̇G + H` against `G`.
    pub fn theta_eigs(&self) -> Vec<f64> {
        self.eigs.iter().map(|l| l + self.u_dot).collect()
    }

    /// Summands `C(n+1,k) u̇^{n+1−k} σ_k(λ)/C(n,k)` of the boundary-mass
    /// density.
    pub fn mass_summands(&self) -> Vec<f64> {
        let n = self.eigs.len();
        self.ratios()
            .iter()
            .enumerate()
            .map(|(k, r)| binomial(n + 1, k) * self.u_dot.powi((n + 1 - k) as i32) * r)
            .collect()
    }

    /// Alternating density `Σ_j C(n+1,j+1)(−1)^j u̇^{j+1} σ_{n−j}(u̇+λ)/C(n,n−j)`.
    pub fn alternating_density(&self) -> f64 {
        let n = self.eigs.len();
        let r = normalize(&self.sym_theta);
        (0..=n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                binomial(n + 1, j + 1) * sign * self.u_dot.powi(j as i32 + 1) * r[n - j]
            })
            .sum()
    }
}

fn normalize(sym: &[f64]) -> Vec<f64> {
    let n = sym.len() - 1;
    sym.iter()
        .enumerate()
        .map(|(k, s)| s / binomial(n, k))
        .collect()
}

/// `σ_k` of the generalized eigenvalues; mixed determinants up to `n = 3`,
/// eigenvalues beyond.
fn symmetric_functions(g: &CMat, m: &CMat) -> Result<Vec<f64>> {
    if g.nrows() <= 3 {
        generalized_symmetric_functions(g, m)
    } else {
        Ok(all_elementary_symmetric(&generalized_eigenvalues(g, m)?))
    }
}

/// Transversal state of `f` at `(t, ζ)` in `chart`.
pub fn transversal_state(
    f: &FunctionSpec,
    t: f64,
    zeta: &[C64],
    chart: usize,
) -> Result<TransversalState> {
    state_from_transversal(eval_transversal(f, t, zeta, chart)?, zeta)
}

/// Transversal state from already evaluated transversal data at chart
/// coordinates `ζ`.
pub fn state_from_transversal(tv: TransversalEval, zeta: &[C64]) -> Result<TransversalState> {
    let g = fs_metric_at(zeta).g;
    let eigs = generalized_eigenvalues(&g, &tv.h)?;
    let sym_h = symmetric_functions(&g, &tv.h)?;
    let sym_theta = symmetric_functions(&g, &tv.theta2)?;
    Ok(TransversalState {
        u_t: tv.u_t,
        u_dot: tv.u_dot,
        g,
        h: tv.h,
        theta2: tv.theta2,
        eigs,
        sym_h,
        sym_theta,
    })
}

/// `[k!(n−k)!/n!]·σ_k(eig(G⁻¹H))`; `1` for `k = 0`.
pub fn mixed_wedge_ratio(g: &CMat, h: &CMat, k: usize) -> Result<f64> {
    let n = g.nrows();
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    Ok(normalize(&symmetric_functions(g, h)?)[k])
}

/// Outcome of [`positivity_check`].
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub points: usize,
    /// Smallest eigenvalue of `u̇G + H` against `G`, divided by
    /// `max(1, largest |eigenvalue|)`.
    pub min_scaled_eigenvalue: f64,
    pub witness_t: f64,
    pub witness_zeta: Vec<(f64, f64)>,
    pub witness_chart: usize,
}

/// Transversal positivity: the eigenvalues of `u̇G + H` against `G` are
/// `≥ −10⁻⁶` (relative to the spectral scale) at `samples` points, cycling
/// through `t_grid` with tail-aware directions.
pub fn positivity_check(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<PositivityReport> {
    f.check_dim(n)?;
    if t_grid.is_empty() {
        return Err(Error::InsufficientData("empty t grid".into()));
    }
    let mut rep = PositivityReport {
        points: samples,
        min_scaled_eigenvalue: f64::INFINITY,
        witness_t: 0.0,
        witness_zeta: Vec::new(),
        witness_chart: 0,
    };
    let per_t = samples.div_ceil(t_grid.len());
    let mut done = 0;
    for (it, &t) in t_grid.iter().enumerate() {
        let count = per_t.min(samples - done);
        done += count;
        let dirs = mixture_sphere_points(
            n,
            count,
            seed.wrapping_add(it as u64),
            purpose::CHECK,
            depth_for(t),
        );
        for d in dirs {
            let p = CpnPoint::from_representative(&d);
            let st = transversal_state(f, t, &p.zeta, p.chart)?;
            let th = st.theta_eigs();
            let scale = th.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            let v = th[0] / scale;
            if v < rep.min_scaled_eigenvalue {
                rep.min_scaled_eigenvalue = v;
                rep.witness_t = t;
                rep.witness_zeta = p.zeta.iter().map(|c| (c.re, c.im)).collect();
                rep.witness_chart = p.chart;
            }
        }
    }
    if rep.min_scaled_eigenvalue < POSITIVITY_MIN {
        return Err(Error::check(
            "transversal positivity",
            -rep.min_scaled_eigenvalue,
            -POSITIVITY_MIN,
            format!(
                "t={}, chart {}, ζ={:?}",
                rep.witness_t, rep.witness_chart, rep.witness_zeta
            ),
        ));
    }
    Ok(rep)
}

/// All slice integrals at one `t`, from one set of samples.
#[derive(Debug, Clone, Serialize)]
pub struct Slice {
    pub t: f64,
    /// Normalized summands `π^{−n} C(n+1,k) ∫ u̇^{n+1−k} σ_k/C(n,k) ωⁿ`.
    pub per_k: Vec<Estimate>,
    /// Normalized boundary mass (sum of `per_k`, integrated pointwise).
    pub mass: Estimate,
    /// Alternating form of the same mass.
    pub alternating: Estimate,
    /// Pointwise difference `mass − alternating`.
    pub difference: Estimate,
    /// `π^{−n}∫ u̇^p ωⁿ` for `p = 1..=n+1`.
    pub udot_powers: Vec<Estimate>,
    /// `π^{−n}ℐ(u_t) = π^{−n}∫ u_t ωⁿ`.
    pub cal_i_over_pin: Estimate,
    /// Energies `E_{n,k} = ∫ u̇^{n+1−k} ω^{n−k}∧(i∂∂̄u_t)^k`.
    pub energies: Vec<Estimate>,
    /// Pluricomplex energy `∫(−u_t)(i∂∂̄u_t)ⁿ`.
    pub pluricomplex: Estimate,
    /// `π^{−n}∫ u̇^{n+1−k} ω^{n−k}∧Θ₂^k` for `k = 0..=n`.
    pub theta_terms: Vec<Estimate>,
}

impl Slice {
    /// `π^{−n} I(u_t)`.
    pub fn i_over_pin(&self) -> Estimate {
        self.udot_powers[0]
    }
}

/// Integrates the slice quantities of `f` at `t`.
pub fn slice(f: &FunctionSpec, n: usize, t: f64, scheme: &IntegrationScheme) -> Result<Slice> {
    f.check_dim(n)?;
    f.require_catalog()?;
    let dim = (n + 1) + 3 + (n + 1) + 1 + 1 + (n + 1);
    let est = integrate_cpn_vec(n, scheme, depth_for(t), f.quadrature_symmetry(), dim, |p| {
        let st = transversal_state(f, t, &p.zeta, p.chart)?;
        let mut row = st.mass_summands();
        let total: f64 = row.iter().sum();
        let alt = st.alternating_density();
        row.push(total);
        row.push(alt);
        row.push(total - alt);
        for pw in 1..=n + 1 {
            row.push(st.u_dot.powi(pw as i32));
        }
        row.push(st.u_t);
        row.push(-st.u_t * st.ratios()[n]);
        for (k, r) in normalize(&st.sym_theta).iter().enumerate() {
            row.push(st.u_dot.powi((n + 1 - k) as i32) * r);
        }
        Ok(row)
    })?;
    let pin = PI.powi(n as i32);
    let norm: Vec<Estimate> = est.iter().map(|e| e.scaled(1.0 / pin)).collect();
    let per_k = norm[..=n].to_vec();
    let energies = per_k
        .iter()
        .enumerate()
        .map(|(k, e)| e.scaled(pin / binomial(n + 1, k)))
        .collect();
    Ok(Slice {
        t,
        mass: norm[n + 1],
        alternating: norm[n + 2],
        difference: norm[n + 3],
        udot_powers: norm[n + 4..n + 5 + n].to_vec(),
        cal_i_over_pin: norm[2 * n + 5],
        per_k,
        energies,
        pluricomplex: est[2 * n + 6],
        theta_terms: norm[2 * n + 7..].to_vec(),
    })
}

/// Normalized boundary mass `π^{−(n+1)}∫_{S_r} d^cu∧(dd^cu)^n` at `r = e^t`.
pub fn boundary_mass(
    f: &FunctionSpec,
    n: usize,
    t: f64,
    scheme: &IntegrationScheme,
) -> Result<Estimate> {
    Ok(slice(f, n, t, scheme)?.mass)
}

/// The same mass through the alternating form in `Θ₂ = u̇G + H`.
pub fn boundary_mass_alternating(
    f: &FunctionSpec,
    n: usize,
    t: f64,
    scheme: &IntegrationScheme,
) -> Result<Estimate> {
    Ok(slice(f, n, t, scheme)?.alternating)
}

/// `π^{−(n+1)}∫_{e^{t1}<|z|<e^{t2}} (dd^cu)^{n+1}` from the ambient Hessian,
/// `(dd^cu)^{n+1} = (n+1)! 2^{n+1} det(∂∂̄u) dV`.
pub fn shell_oracle(
    f: &FunctionSpec,
    n: usize,
    t1: f64,
    t2: f64,
    scheme: &IntegrationScheme,
) -> Result<Estimate> {
    f.check_dim(n)?;
    if !(t1 < t2) {
        return Err(Error::InvalidArgument(format!(
            "need t1 < t2, got t1={t1}, t2={t2}"
        )));
    }
    let factor = factorial(n + 1) * 2f64.powi(n as i32 + 1) / PI.powi(n as i32 + 1);
    let est = integrate_shell_vec(
        n,
        t1.exp(),
        t2.exp(),
        scheme,
        depth_for(t1),
        f.quadrature_symmetry(),
        1,
        |z| {
            let e = eval_ambient(f, z)?;
            Ok(vec![e.hess.determinant().re])
        },
    )?;
    Ok(est[0].scaled(factor))
}

/// Boundary masses along a `t` grid.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryMassTrace {
    pub t_grid: Vec<f64>,
    pub mass: Vec<f64>,
    pub stderr: Vec<f64>,
    pub per_k: Vec<Vec<f64>>,
    pub slices: Vec<Slice>,
}

impl BoundaryMassTrace {
    pub fn from_slices(slices: Vec<Slice>) -> Self {
        Self {
            t_grid: slices.iter().map(|s| s.t).collect(),
            mass: slices.iter().map(|s| s.mass.value).collect(),
            stderr: slices.iter().map(|s| s.mass.stderr).collect(),
            per_k: slices
                .iter()
                .map(|s| s.per_k.iter().map(|e| e.value).collect())
                .collect(),
            slices,
        }
    }
}

/// Slices along a decreasing `t` grid with every `t ≤ −1`.
pub fn slices(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
) -> Result<Vec<Slice>> {
    check_t_grid(t_grid)?;
    t_grid.iter().map(|&t| slice(f, n, t, scheme)).collect()
}

pub(crate) fn check_t_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "t grid must be strictly decreasing".into(),
        ));
    }
    if t_grid.iter().any(|&t| !(t <= -1.0)) {
        return Err(Error::InvalidArgument("t grid must satisfy t ≤ −1".into()));
    }
    Ok(())
}

/// Residual mass `τ` by extrapolating the boundary mass along `t_grid`;
/// the uncertainty adds the extrapolation error and `3σ` of the last slice.
pub fn residual_mass(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
) -> Result<(f64, f64, BoundaryMassTrace)> {
    let trace = BoundaryMassTrace::from_slices(slices(f, n, t_grid, scheme)?);
    let (tau, unc) = residual_from_trace(&trace)?;
    Ok((tau, unc, trace))
}

/// Extrapolated `τ` and its uncertainty from a computed trace.
pub fn residual_from_trace(trace: &BoundaryMassTrace) -> Result<(f64, f64)> {
    let (tau, u) = crate::quadrature::extrapolate_limit(&trace.t_grid, &trace.mass)?;
    let last = trace.stderr.last().copied().unwrap_or(0.0);
    Ok((tau, u + crate::tolerances::SIGMAS * last))
}

/// Deterministic sample of `(t, ζ, chart)` points for spot checks.
pub fn sample_chart_points(
    n: usize,
    t_grid: &[f64],
    count: usize,
    seed: u64,
) -> Vec<(f64, CpnPoint)> {
    let u = uniforms(count, seed, purpose::CHECK + 7);
    let deepest = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    mixture_sphere_points(n, count, seed, purpose::CHECK + 8, depth_for(deepest))
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            (
                t_grid[(u[i] * t_grid.len() as f64) as usize % t_grid.len()],
                CpnPoint::from_representative(&d),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::parse_spec;
    use crate::linalg::scaled_identity;

    #[test]
    fn mixed_wedge_examples() {
        let g = scaled_identity(3, 0.7);
        for k in 0..=3 {
            assert!((mixed_wedge_ratio(&g, &g, k).unwrap() - 1.0).abs() < 1e-14);
        }
        assert_eq!(mixed_wedge_ratio(&g, &CMat::zeros(3, 3), 2).unwrap(), 0.0);
        let h = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        assert!((mixed_wedge_ratio(&scaled_identity(2, 1.0), &h, 1).unwrap() - 1.5).abs() < 1e-14);
        assert_eq!(
            mixed_wedge_ratio(&scaled_identity(2, -1.0), &h, 1),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn radial_mass_is_exact() {
        let f = parse_spec("radial(profile=log,c=1.5)").unwrap();
        let m = boundary_mass(&f, 1, -3.0, &IntegrationScheme::tensor(8)).unwrap();
        assert!((m.value - 2.25).abs() < 1e-10, "{m:?}");
        let m = boundary_mass(&f, 2, -3.0, &IntegrationScheme::mc(2000, 1)).unwrap();
        assert!((m.value - 3.375).abs() < 1e-10, "{m:?}");
        let s = shell_oracle(&f, 1, -3.0, -2.0, &IntegrationScheme::mc(2000, 1)).unwrap();
        assert!(s.value.abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn monomial_mass_near_two() {
        let f = parse_spec("monomial_ideal(m=[[1,0],[0,2]],w=[1,1])").unwrap();
        let s = slice(&f, 1, -20.0, &IntegrationScheme::tensor(8)).unwrap();
        assert!((s.mass.value - 2.0).abs() < 2e-2, "{:?}", s.mass);
        assert!(s.difference.value.abs() < 1e-9);
    }
}
