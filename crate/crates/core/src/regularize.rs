//! Mollification `u_ε = u∗ρ_ε` on `ℂ²` and its convergence checks.
//!
//! The bump `ρ(w) ∝ exp(−1/(1−|w|²))` on the unit ball of `ℝ⁴` is sampled
//! exactly by rejection, so every convolution is a Monte Carlo mean over
//! `z − εw`. Samples are shared across points and across `ε`, which makes
//! comparisons between them low-noise. Derivatives of `u_ε` are the means of
//! the analytic derivatives of `u`, i.e. the exact derivatives of the
//! sampled convolution.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::functions::{
    eval_ambient, fd_gradient_hessian, transversal_from_ambient, AmbientEval, FunctionSpec,
};
use crate::geometry::AmbientPoint;
use crate::invariants::{max_directional, maximize_over_cpn, Maximum};
use crate::linalg::{hermitian_eigenvalues, CMat, CVec};
use crate::mass::{state_from_transversal, transversal_state};
use crate::quadrature::{
    gauss_legendre, integrate_shell, purpose, stream_rng, tensor_nodes_cp1, Estimate,
    IntegrationScheme, SchemeKind,
};
use crate::tolerances::{MOLLIFIED_PSD, MOLLIFIER_NORM, ROUNDING_REL, SIGMAS};
use crate::{Error, Result, C64};

/// Convolution samples when the scheme is deterministic.
const DEFAULT_MOLLIFY_SAMPLES: usize = 16_384;
/// Convolution samples per objective evaluation in the slope bound.
const SLOPE_SAMPLES: usize = 4096;
/// Covering points of the slope-bound maximization.
const SLOPE_COVER: usize = 256;
/// Batches used for the spread of mollified masses.
const BATCHES: usize = 8;
/// Radial depth of the `ℂP¹` rule for mollified masses; `u_ε` is smooth, so
/// no deep tail is needed.
const MOLLIFIED_DEPTH: f64 = 16.0;
/// `δ` of the Friedrichs estimate: points lie in `B_{1−2δ}` and the gradient
/// norm is taken over `B_{1−δ}`.
const FRIEDRICHS_DELTA: f64 = 0.1;
/// Points of the mollified Hessian check.
const PSD_POINTS: usize = 4;

/// The normalized bump `ρ_ε(w) = ε⁻⁴ρ(w/ε)` on `ℝ⁴ = ℂ²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Mollifier {
    pub epsilon: f64,
    /// `1/∫_{|w|<1} exp(−1/(1−|w|²)) dV`.
    pub normalization: f64,
    /// `κ = ∫|w|²ρ(w) dV`, so that `(|z|²)_ε = |z|² + κε²`.
    pub second_moment: f64,
}

fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// `2π²∫_0^1 r^{3+p} bump(r) dr` with `order` Gauss–Legendre nodes on ten
/// panels.
fn radial_moment(p: i32, order: usize) -> f64 {
    let (xs, ws) = gauss_legendre(order);
    let panels = 10;
    let mut acc = 0.0;
    for k in 0..panels {
        let (lo, hi) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
        for (x, w) in xs.iter().zip(&ws) {
            let r = lo + 0.5 * (hi - lo) * (x + 1.0);
            acc += 0.5 * (hi - lo) * w * r.powi(3 + p) * bump(r);
        }
    }
    2.0 * PI * PI * acc
}

impl Mollifier {
    /// Normalizes the bump with two rules of different order; they must agree
    /// to `10⁻⁶`.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ε must be positive, got {epsilon}"
            )));
        }
        let coarse = radial_moment(0, 12);
        let fine = radial_moment(0, 24);
        let rel = (coarse - fine).abs() / fine;
        if rel > MOLLIFIER_NORM {
            return Err(Error::check(
                "mollifier normalization",
                rel,
                MOLLIFIER_NORM,
                "radial rule",
            ));
        }
        Ok(Self {
            epsilon,
            normalization: 1.0 / fine,
            second_moment: radial_moment(2, 24) / fine,
        })
    }

    /// `ρ(w)` on the unit ball (without the `ε` scaling).
    pub fn density(&self, w: &[C64]) -> f64 {
        let r = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.normalization * bump(r)
    }

    /// `count` draws from `ρ` on the unit ball of `ℂ²`, by rejection from the
    /// uniform ball.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<[C64; 2]> {
        let mut rng = stream_rng(seed, purpose::MOLLIFY, 0);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let g = [
                crate::quadrature::gaussian(&mut rng),
                crate::quadrature::gaussian(&mut rng),
            ];
            let norm = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
            let r: f64 = rng.random::<f64>().powf(0.25);
            let accept: f64 = rng.random();
            // bump(r)/bump(0) = exp(1 − 1/(1−r²))
            if accept < (1.0 - 1.0 / (1.0 - r * r)).exp() {
                out.push([g[0] * (r / norm), g[1] * (r / norm)]);
            }
        }
        out
    }
}

fn require_c2(f: &FunctionSpec, z: &[C64]) -> Result<()> {
    if z.len() != 2 {
        return Err(Error::UnsupportedDimension(z.len().saturating_sub(1)));
    }
    f.check_dim(1)
}

fn sample_count(scheme: &IntegrationScheme) -> usize {
    match scheme.kind {
        SchemeKind::Mc => scheme.samples,
        SchemeKind::Tensor => DEFAULT_MOLLIFY_SAMPLES,
    }
}

fn shifted(z: &[C64], eps: f64, w: &[C64; 2]) -> AmbientPoint {
    AmbientPoint::new(vec![z[0] - eps * w[0], z[1] - eps * w[1]])
}

fn mean_estimate(values: &[f64]) -> Estimate {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Estimate {
        value: mean,
        stderr: (var / m).sqrt(),
        samples_used: values.len(),
    }
}

/// `∫ u(z − εw)ρ(w) dV` over the sampled bump, without the distance guard.
fn convolve_value(f: &FunctionSpec, z: &[C64], eps: f64, ws: &[[C64; 2]]) -> Result<Estimate> {
    let vals: Vec<f64> = ws
        .par_iter()
        .map(|w| eval_ambient(f, &shifted(z, eps, w)).map(|e| e.value))
        .collect::<Result<_>>()?;
    Ok(mean_estimate(&vals))
}

/// `u_ε(z)` for `n = 1` and `|z| > 2ε`.
pub fn mollify_at(
    f: &FunctionSpec,
    z: &AmbientPoint,
    epsilon: f64,
    scheme: &IntegrationScheme,
) -> Result<Estimate> {
    require_c2(f, &z.z)?;
    if z.norm() <= 2.0 * epsilon {
        return Err(Error::TooCloseToOrigin {
            norm: z.norm(),
            twice_eps: 2.0 * epsilon,
        });
    }
    let ws = Mollifier::new(epsilon)?.samples(sample_count(scheme), scheme.seed);
    convolve_value(f, &z.z, epsilon, &ws)
}

/// One point of [`monotone_regularization_check`].
#[derive(Debug, Clone, Serialize)]
pub struct MonotonePoint {
    pub z: Vec<(f64, f64)>,
    pub u: f64,
    /// `u_ε(z)` per `ε`.
    pub values: Vec<Estimate>,
}

/// Outcome of [`monotone_regularization_check`].
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneReport {
    pub epsilons: Vec<f64>,
    pub points: Vec<MonotonePoint>,
}

/// Checks `u_{ε₁} ≥ u_{ε₂} ≥ u` along a strictly decreasing `ε` list at each
/// point, up to `3σ` of the paired differences (all `ε` share the samples).
pub fn monotone_regularization_check(
    f: &FunctionSpec,
    points: &[AmbientPoint],
    epsilon_list: &[f64],
    scheme: &IntegrationScheme,
) -> Result<MonotoneReport> {
    f.check_dim(1)?;
    if epsilon_list.is_empty() || epsilon_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "ε list must be non-empty and strictly decreasing".into(),
        ));
    }
    let ws = Mollifier::new(epsilon_list[0])?.samples(sample_count(scheme), scheme.seed);
    let mut out = Vec::with_capacity(points.len());
    for z in points {
        require_c2(f, &z.z)?;
        let largest = epsilon_list[0];
        if z.norm() <= 2.0 * largest {
            return Err(Error::TooCloseToOrigin {
                norm: z.norm(),
                twice_eps: 2.0 * largest,
            });
        }
        let u = eval_ambient(f, z)?.value;
        let rows: Vec<Vec<f64>> = ws
            .par_iter()
            .map(|w| {
                epsilon_list
                    .iter()
                    .map(|&e| Ok(eval_ambient(f, &shifted(&z.z, e, w))?.value))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let column = |i: usize| -> Vec<f64> { rows.iter().map(|r| r[i]).collect() };
        let values: Vec<Estimate> = (0..epsilon_list.len())
            .map(|i| mean_estimate(&column(i)))
            .collect();
        let witness = format!("z={:?}", z.z);
        for (i, v) in values.iter().enumerate() {
            let below = u - v.value;
            let tol = SIGMAS * v.stderr + ROUNDING_REL * u.abs().max(1.0);
            if below > tol {
                return Err(Error::check(
                    "u_ε ≥ u",
                    below,
                    tol,
                    format!("{witness}, ε={}", epsilon_list[i]),
                ));
            }
        }
        for i in 1..epsilon_list.len() {
            let diff: Vec<f64> = rows.iter().map(|r| r[i - 1] - r[i]).collect();
            let d = mean_estimate(&diff);
            let tol = SIGMAS * d.stderr + ROUNDING_REL * u.abs().max(1.0);
            if -d.value > tol {
                return Err(Error::check(
                    "u_ε decreases with ε",
                    -d.value,
                    tol,
                    format!("{witness}, ε={}", epsilon_list[i]),
                ));
            }
        }
        out.push(MonotonePoint {
            z: z.z.iter().map(|c| (c.re, c.im)).collect(),
            u,
            values,
        });
    }
    Ok(MonotoneReport {
        epsilons: epsilon_list.to_vec(),
        points: out,
    })
}

/// Value, gradient and Hessian of the sampled convolution at `z`, from the
/// samples in `ws`.
fn convolve_ambient(f: &FunctionSpec, z: &[C64], eps: f64, ws: &[[C64; 2]]) -> Result<AmbientEval> {
    let m = ws.len() as f64;
    let evals: Vec<AmbientEval> = ws
        .iter()
        .map(|w| eval_ambient(f, &shifted(z, eps, w)))
        .collect::<Result<_>>()?;
    let mut value = 0.0;
    let mut grad = CVec::zeros(2);
    let mut hess = CMat::zeros(2, 2);
    for e in &evals {
        value += e.value;
        grad += &e.grad;
        hess += &e.hess;
    }
    let s = C64::new(1.0 / m, 0.0);
    Ok(AmbientEval {
        value: value / m,
        grad: grad * s,
        hess: hess * s,
    })
}

/// One point of [`friedrichs_check`].
#[derive(Debug, Clone, Serialize)]
pub struct FriedrichsPoint {
    pub z: Vec<(f64, f64)>,
    /// `r∂_r(u∗ρ_ε)(z) − r(∂_r u∗ρ_ε)(z)`.
    pub lhs: Estimate,
}

/// Outcome of [`friedrichs_check`].
#[derive(Debug, Clone, Serialize)]
pub struct FriedrichsReport {
    pub epsilon: f64,
    /// `∫_{B_{1−δ}} |∇u| dV`.
    pub gradient_norm: Estimate,
    /// `2εK`.
    pub bound: f64,
    pub points: Vec<FriedrichsPoint>,
}

/// Checks `|r∂_r(u∗ρ_ε)(z) − r(∂_r u∗ρ_ε)(z)| ≤ 2ε‖∇u‖_{L¹(B_{1−δ})}` with
/// `δ = 0.1` at points of `B_{1−2δ}` with `|z| > ε`, `ε < δ`.
pub fn friedrichs_check(
    f: &FunctionSpec,
    points: &[AmbientPoint],
    epsilon: f64,
    scheme: &IntegrationScheme,
) -> Result<FriedrichsReport> {
    let delta = FRIEDRICHS_DELTA;
    if !(epsilon > 0.0 && epsilon < delta) {
        return Err(Error::InvalidArgument(format!(
            "ε must lie in (0, {delta}), got {epsilon}"
        )));
    }
    for z in points {
        require_c2(f, &z.z)?;
        if !(z.norm() < 1.0 - 2.0 * delta && z.norm() > epsilon) {
            return Err(Error::InvalidArgument(format!(
                "point of norm {} outside (ε, 1−2δ)",
                z.norm()
            )));
        }
    }
    let shell_scheme = match scheme.kind {
        SchemeKind::Mc => *scheme,
        SchemeKind::Tensor => IntegrationScheme::default(),
    };
    let k = integrate_shell(
        |z| Ok(2.0 * eval_ambient(f, z)?.grad.norm()),
        1,
        0.0,
        1.0 - delta,
        &shell_scheme,
    )?;
    let bound = 2.0 * epsilon * k.value;
    let ws = Mollifier::new(epsilon)?.samples(sample_count(scheme), scheme.seed);
    let mut out = Vec::with_capacity(points.len());
    for z in points {
        let r = z.norm();
        let diffs: Vec<f64> = ws
            .par_iter()
            .map(|w| {
                let p = shifted(&z.z, epsilon, w);
                let e = eval_ambient(f, &p)?;
                let pn = p.norm();
                Ok(2.0
                    * (0..2)
                        .map(|j| (z.z[j] - p.z[j] * (r / pn)) * e.grad[j])
                        .sum::<C64>()
                        .re)
            })
            .collect::<Result<_>>()?;
        let lhs = mean_estimate(&diffs);
        let tol = bound + SIGMAS * lhs.stderr;
        if lhs.value.abs() > tol {
            return Err(Error::check(
                "Friedrichs estimate",
                lhs.value.abs(),
                tol,
                format!("z={:?}, ε={epsilon}", z.z),
            ));
        }
        out.push(FriedrichsPoint {
            z: z.z.iter().map(|c| (c.re, c.im)).collect(),
            lhs,
        });
    }
    Ok(FriedrichsReport {
        epsilon,
        gradient_norm: k,
        bound,
        points: out,
    })
}

/// One `ε` of [`mollified_slope_bound`].
#[derive(Debug, Clone, Serialize)]
pub struct SlopeBoundEntry {
    pub epsilon: f64,
    /// Sampled `M_B(u_ε)`.
    pub m_b: Maximum,
    /// `ε < ½min{e^{−A} − e^{−B}, e^{−B}}`.
    pub within_lemma_range: bool,
}

/// Outcome of [`mollified_slope_bound`].
#[derive(Debug, Clone, Serialize)]
pub struct SlopeBoundReport {
    pub a: f64,
    pub b: f64,
    /// `M_A(u)` inflated by its refinement gap.
    pub m_a: f64,
    pub entries: Vec<SlopeBoundEntry>,
    /// Slope of the two-point fit of `M_B(u_ε)` in `ε`, clamped at 0.
    pub c_hat: f64,
    /// Intercept of the fit.
    pub intercept: f64,
}

/// `M_B(u_ε) ≤ 2M_A(u) + Ĉε` for every `ε` of `epsilon_list`, with `Ĉ` from
/// the two smallest `ε`.
pub fn mollified_slope_bound(
    f: &FunctionSpec,
    a: f64,
    b: f64,
    epsilon_list: &[f64],
    scheme: &IntegrationScheme,
) -> Result<SlopeBoundReport> {
    f.check_dim(1)?;
    if !(1.0 < a && a < b) {
        return Err(Error::InvalidArgument(format!(
            "need 1 < A < B, got A={a}, B={b}"
        )));
    }
    if epsilon_list.len() < 2 || epsilon_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument(
            "need at least two positive ε".into(),
        ));
    }
    let ma = max_directional(f, 1, a, crate::tolerances::DEFAULT_GRID_DENSITY, scheme)?;
    let m_a = ma.value + ma.gap;
    let eps0 = 0.5 * ((-a).exp() - (-b).exp()).min((-b).exp());
    let mut eps: Vec<f64> = epsilon_list.to_vec();
    eps.sort_by(f64::total_cmp);
    let mut entries = Vec::with_capacity(eps.len());
    for &e in &eps {
        let ws = Mollifier::new(e)?.samples(SLOPE_SAMPLES, scheme.seed);
        let m_b = maximize_over_cpn(
            1,
            SLOPE_COVER,
            scheme.seed,
            crate::tolerances::depth_for(-b),
            |p| {
                let z: Vec<C64> = p.z.iter().map(|c| c * (-b).exp()).collect();
                let total: f64 = ws
                    .iter()
                    .map(|w| {
                        let e = eval_ambient(f, &shifted(&z, e, w))?;
                        Ok(e.radial_derivative(&z))
                    })
                    .sum::<Result<f64>>()?;
                Ok(total / ws.len() as f64)
            },
        )?;
        entries.push(SlopeBoundEntry {
            epsilon: e,
            m_b,
            within_lemma_range: e < eps0,
        });
    }
    let (e1, m1) = (entries[0].epsilon, entries[0].m_b.value);
    let (e2, m2) = (entries[1].epsilon, entries[1].m_b.value);
    let c_hat = ((m2 - m1) / (e2 - e1)).max(0.0);
    let intercept = m1 - c_hat * e1;
    for en in &entries {
        let rhs = 2.0 * m_a + c_hat * en.epsilon;
        let tol = en.m_b.gap + 1e-9 * rhs.abs().max(1.0);
        if en.m_b.value > rhs + tol {
            return Err(Error::check(
                "mollified slope bound",
                en.m_b.value - rhs,
                tol,
                format!("A={a}, B={b}, ε={}", en.epsilon),
            ));
        }
    }
    Ok(SlopeBoundReport {
        a,
        b,
        m_a,
        entries,
        c_hat,
        intercept,
    })
}

/// One `ε` of [`mass_convergence_check`].
#[derive(Debug, Clone, Serialize)]
pub struct MassConvergenceEntry {
    pub epsilon: f64,
    /// Boundary mass of `u_ε`; the error is the batch-mean spread.
    pub mass: Estimate,
    /// `|mass(u_ε) − mass(u)|`.
    pub gap: f64,
}

/// Outcome of [`mass_convergence_check`].
#[derive(Debug, Clone, Serialize)]
pub struct MassConvergenceReport {
    pub t: f64,
    /// Boundary mass of `u` on the same nodes.
    pub reference: f64,
    pub entries: Vec<MassConvergenceEntry>,
    /// `ε → 0` limit of the mass by Richardson extrapolation in `ε²` over the
    /// two smallest `ε`.
    pub extrapolated: Estimate,
    /// Whether the raw gap at the smallest `ε` is already within `3σ`.
    pub final_gap_within_3sigma: bool,
    /// Smallest scaled eigenvalue of the finite-difference Hessian of `u_ε`
    /// over the checked points.
    pub min_hessian_eigenvalue: f64,
}

/// Eliminates the `ε²` term of the mollification bias between two entries.
fn richardson(coarse: &MassConvergenceEntry, fine: &MassConvergenceEntry) -> Estimate {
    let q = (fine.epsilon / coarse.epsilon).powi(2);
    let value = (fine.mass.value - q * coarse.mass.value) / (1.0 - q);
    let stderr = fine.mass.stderr.hypot(q * coarse.mass.stderr) / (1.0 - q);
    Estimate {
        value,
        stderr,
        samples_used: fine.mass.samples_used,
    }
}

/// Boundary mass of `u_ε` on `S_{e^t}` for a decreasing list of `ε`, against
/// the mass of `u` on the same `ℂP¹` nodes. The gaps must shrink (up to `3σ`)
/// and the `ε → 0` extrapolation of the mass must meet the reference within
/// `3σ`. Also checks that the mollified Hessian is
/// positive semidefinite up to `−10⁻⁴` at a few points.
pub fn mass_convergence_check(
    f: &FunctionSpec,
    t: f64,
    epsilon_list: &[f64],
    scheme: &IntegrationScheme,
) -> Result<MassConvergenceReport> {
    f.check_dim(1)?;
    f.require_catalog()?;
    if !(t <= -2.0) {
        return Err(Error::InvalidArgument(format!(
            "t must be at most −2, got {t}"
        )));
    }
    if epsilon_list.is_empty() || epsilon_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "ε list must be non-empty and strictly decreasing".into(),
        ));
    }
    if let Some(&e) = epsilon_list
        .iter()
        .find(|&&e| !(e > 0.0 && t.exp() > 2.0 * e))
    {
        return Err(Error::TooCloseToOrigin {
            norm: t.exp(),
            twice_eps: 2.0 * e,
        });
    }
    let order = scheme.chart_order.max(2);
    let nodes = tensor_nodes_cp1(order, MOLLIFIED_DEPTH, f.is_toric());
    let reference: f64 = nodes
        .par_iter()
        .map(|(p, w)| {
            let st = transversal_state(f, t, &p.zeta, p.chart)?;
            Ok(w * st.mass_summands().iter().sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        / PI;
    let count = sample_count(scheme).div_ceil(BATCHES) * BATCHES;
    let mut entries = Vec::with_capacity(epsilon_list.len());
    let mut min_eig = f64::INFINITY;
    for &eps in epsilon_list {
        let ws = Mollifier::new(eps)?.samples(count, scheme.seed);
        let per_batch = count / BATCHES;
        let rows: Vec<Vec<f64>> = nodes
            .par_iter()
            .map(|(p, w)| {
                let z: Vec<C64> = p.z.iter().map(|c| c * t.exp()).collect();
                let mut row = Vec::with_capacity(BATCHES + 1);
                let density = |samples: &[[C64; 2]]| -> Result<f64> {
                    let e = convolve_ambient(f, &z, eps, samples)?;
                    let tv = transversal_from_ambient(&e, t, &p.zeta, p.chart)?;
                    Ok(state_from_transversal(tv, &p.zeta)?
                        .mass_summands()
                        .iter()
                        .sum())
                };
                row.push(w * density(&ws)?);
                for b in 0..BATCHES {
                    row.push(w * density(&ws[b * per_batch..(b + 1) * per_batch])?);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let col = |i: usize| rows.iter().map(|r| r[i]).sum::<f64>() / PI;
        let full = col(0);
        let batch: Vec<f64> = (1..=BATCHES).map(col).collect();
        let spread = mean_estimate(&batch).stderr;
        let mass = Estimate {
            value: full,
            stderr: spread,
            samples_used: count,
        };
        entries.push(MassConvergenceEntry {
            epsilon: eps,
            mass,
            gap: (full - reference).abs(),
        });

        let psd_ws = &ws[..ws.len().min(DEFAULT_MOLLIFY_SAMPLES / 4)];
        for i in 0..PSD_POINTS {
            let p = &nodes[(i * nodes.len()) / PSD_POINTS].0;
            let z: Vec<C64> = p.z.iter().map(|c| c * t.exp()).collect();
            let h = 1e-2 * eps;
            let (_, hess) =
                fd_gradient_hessian(&|x| Ok(convolve_value(f, x, eps, psd_ws)?.value), &z, h)?;
            let eig = hermitian_eigenvalues(&(hess * C64::new(t.exp().powi(2), 0.0)));
            let scale = eig.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            min_eig = min_eig.min(eig[0] / scale);
        }
    }
    if min_eig < -MOLLIFIED_PSD {
        return Err(Error::check(
            "mollified Hessian PSD",
            -min_eig,
            MOLLIFIED_PSD,
            format!("t={t}"),
        ));
    }
    for (i, w) in entries.windows(2).enumerate() {
        let tol = SIGMAS * w[0].mass.stderr.hypot(w[1].mass.stderr);
        if w[1].gap > w[0].gap + tol {
            return Err(Error::check(
                "mollified mass gaps shrink",
                w[1].gap - w[0].gap,
                tol,
                format!("ε={}", epsilon_list[i + 1]),
            ));
        }
    }
    let last = entries.last().expect("non-empty ε list");
    let final_gap_within_3sigma = last.gap <= SIGMAS * last.mass.stderr;
    let extrapolated = match entries.len() {
        1 => last.mass,
        len => richardson(&entries[len - 2], last),
    };
    let tol = SIGMAS * extrapolated.stderr;
    let miss = (extrapolated.value - reference).abs();
    if miss > tol {
        return Err(Error::check(
            "mollified mass converges",
            miss,
            tol,
            format!("ε→0 from ε={}", last.epsilon),
        ));
    }
    Ok(MassConvergenceReport {
        t,
        reference,
        entries,
        extrapolated,
        final_gap_within_3sigma,
        min_hessian_eigenvalue: min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::parse_spec;

    #[test]
    fn mollifier_is_normalized() {
        let m = Mollifier::new(0.1).unwrap();
        // Independent check: Monte Carlo over the uniform ball of ℝ⁴.
        let us = crate::quadrature::uniform_sphere_points(1, 200_000, 3, purpose::CHECK);
        let rs = crate::quadrature::uniforms(200_000, 3, purpose::CHECK + 1);
        let vol = PI * PI / 2.0;
        let mean = us
            .iter()
            .zip(&rs)
            .map(|(d, r)| {
                let r = r.powf(0.25);
                m.density(&[d[0] * r, d[1] * r])
            })
            .sum::<f64>()
            / us.len() as f64;
        assert!((mean * vol - 1.0).abs() < 1e-2, "{}", mean * vol);
        assert!(m.second_moment > 0.0 && m.second_moment < 1.0);
    }

    #[test]
    fn quadratic_gains_second_moment() {
        let f = parse_spec("smooth_poly(terms=[(1,[1,0],[1,0]),(1,[0,1],[0,1])])").unwrap();
        let z = AmbientPoint::from_parts(&[(0.3, 0.1), (0.2, -0.2)]);
        let eps = 0.05;
        let got = mollify_at(&f, &z, eps, &IntegrationScheme::mc(100_000, 2)).unwrap();
        let want = z.norm_sqr() + Mollifier::new(eps).unwrap().second_moment * eps * eps;
        assert!(
            (got.value - want).abs() < SIGMAS * got.stderr + 1e-12,
            "{got:?} vs {want}"
        );
    }

    #[test]
    fn guards() {
        let f = parse_spec("radial(profile=log,c=1)").unwrap();
        let z = AmbientPoint::from_parts(&[(0.01, 0.0), (0.0, 0.0)]);
        assert!(matches!(
            mollify_at(&f, &z, 0.01, &IntegrationScheme::tensor(4)),
            Err(Error::TooCloseToOrigin { .. })
        ));
        let z3 = AmbientPoint::from_parts(&[(0.3, 0.0), (0.0, 0.0), (0.1, 0.0)]);
        assert!(matches!(
            mollify_at(&f, &z3, 0.01, &IntegrationScheme::tensor(4)),
            Err(Error::UnsupportedDimension(2))
        ));
    }
}
