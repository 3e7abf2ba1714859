//! Lelong-type invariants: spherical-mean slopes, `L^p` Lelong functionals,
//! directional Lelong numbers, maximal directional Lelong numbers `M_A` and
//! `λ`, and the functionals `I(u_t) = ∫u̇_t ωⁿ`, `ℐ(u_t) = ∫u_t ωⁿ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::functions::{eval_ambient, eval_transversal, FunctionSpec};
use crate::geometry::{hopf_to_ambient, AmbientPoint, HopfPoint};
use crate::mass::check_t_grid;
use crate::quadrature::{
    extrapolate_limit, integrate_cpn_vec, mixture_sphere_points, purpose, sphere_mean_vec,
    CpnPoint, Estimate, IntegrationScheme,
};
use crate::tolerances::{depth_for, INFIMUM_GAP_SLACK, PRIMITIVE_REL, SIGMAS, SLOPE_DELTA};
use crate::{Error, Result, C64};

/// Candidates refined by local ascent.
const REFINE_CANDIDATES: usize = 4;
/// Golden-section iterations per coordinate sweep.
const GOLDEN_ITERATIONS: usize = 60;
/// Half-widths of the three coordinate-wise refinement rounds.
const ROUND_WIDTHS: [f64; 3] = [0.5, 0.05, 0.005];
/// Step of the finite-difference primitive check.
const PRIMITIVE_STEP: f64 = 1e-3;
/// Evaluations of `M_T` in the infimum-gap trapezoid.
const GAP_NODES: usize = 8;

/// Per-`t` estimates with an extrapolated limit as `t → −∞`.
#[derive(Debug, Clone, Serialize)]
pub struct LimitTrace {
    pub t_grid: Vec<f64>,
    pub values: Vec<Estimate>,
    pub limit: f64,
    /// Extrapolation error plus `3σ` of the deepest estimate.
    pub uncertainty: f64,
    /// Whether the values are non-increasing as `t` decreases, up to `3σ`.
    pub monotone: bool,
}

impl LimitTrace {
    fn new(t_grid: &[f64], values: Vec<Estimate>) -> Result<Self> {
        let v: Vec<f64> = values.iter().map(|e| e.value).collect();
        let (limit, ext) = extrapolate_limit(t_grid, &v)?;
        let last = values.last().map_or(0.0, |e| e.stderr);
        let monotone = values.windows(2).all(|w| {
            w[1].value
                <= w[0].value
                    + SIGMAS * w[0].stderr.hypot(w[1].stderr)
                    + 1e-9 * w[0].value.abs().max(1.0)
        });
        Ok(Self {
            t_grid: t_grid.to_vec(),
            values,
            limit,
            uncertainty: ext + SIGMAS * last,
            monotone,
        })
    }
}

/// Lelong number `ν_u(0)` estimated two ways.
#[derive(Debug, Clone, Serialize)]
pub struct LelongEstimate {
    /// Extrapolated slope of spherical means.
    pub by_slope: f64,
    pub by_slope_uncertainty: f64,
    /// Extrapolated `I(u_t)/πⁿ`.
    #[serde(rename = "by_I")]
    pub by_i: f64,
    #[serde(rename = "by_I_uncertainty")]
    pub by_i_uncertainty: f64,
    /// `(t, slope, I/πⁿ)` per grid point.
    pub t_trace: Vec<(f64, f64, f64)>,
}

/// Slope `[S_u(0,e^t) − S_u(0,e^{t−δ})]/δ` of spherical means with `δ = 0.25`
/// along a decreasing grid of `t ≤ −1`, both means sharing directions.
pub fn lelong_by_slope(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
) -> Result<LimitTrace> {
    f.check_dim(n)?;
    check_t_grid(t_grid)?;
    let shrink = (-SLOPE_DELTA).exp();
    let values = t_grid
        .iter()
        .map(|&t| {
            let est = sphere_mean_vec(n, t.exp(), scheme, f.quadrature_symmetry(), 1, |z| {
                let outer = eval_ambient(f, z)?.value;
                let inner = eval_ambient(f, &z.scale(shrink))?.value;
                Ok(vec![(outer - inner) / SLOPE_DELTA])
            })?;
            Ok(est[0])
        })
        .collect::<Result<Vec<_>>>()?;
    LimitTrace::new(t_grid, values)
}

/// `π^{−n}∫ u̇_t^p ωⁿ` along a decreasing grid; the limit approximates `ν^p`.
pub fn lelong_by_i(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
    p: usize,
) -> Result<LimitTrace> {
    f.check_dim(n)?;
    f.require_catalog()?;
    check_t_grid(t_grid)?;
    if !(1..=n + 1).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "p must lie in 1..={}, got {p}",
            n + 1
        )));
    }
    let pin = PI.powi(n as i32);
    let values = t_grid
        .iter()
        .map(|&t| {
            let est =
                integrate_cpn_vec(n, scheme, depth_for(t), f.quadrature_symmetry(), 1, |q| {
                    let z = ambient_at(q, t);
                    Ok(vec![eval_ambient(f, &z)?
                        .radial_derivative(&z.z)
                        .powi(p as i32)])
                })?;
            Ok(est[0].scaled(1.0 / pin))
        })
        .collect::<Result<Vec<_>>>()?;
    LimitTrace::new(t_grid, values)
}

/// Both Lelong estimates on one grid.
pub fn lelong_estimate(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
) -> Result<LelongEstimate> {
    let slope = lelong_by_slope(f, n, t_grid, scheme)?;
    let by_i = lelong_by_i(f, n, t_grid, scheme, 1)?;
    let t_trace = t_grid
        .iter()
        .zip(slope.values.iter().zip(&by_i.values))
        .map(|(&t, (s, i))| (t, s.value, i.value))
        .collect();
    Ok(LelongEstimate {
        by_slope: slope.limit,
        by_slope_uncertainty: slope.uncertainty,
        by_i: by_i.limit,
        by_i_uncertainty: by_i.uncertainty,
        t_trace,
    })
}

/// Lelong number of the restriction to the line through `ζ`: `u̇_t(ζ)` on
/// `t ∈ t_min·{1/8, 1/4, 1/2, 1}`, extrapolated.
pub fn directional_lelong(
    f: &FunctionSpec,
    zeta: &[C64],
    chart: usize,
    t_min: f64,
) -> Result<LimitTrace> {
    if !(t_min <= -8.0) {
        return Err(Error::InvalidArgument(format!(
            "t_min must be at most −8, got {t_min}"
        )));
    }
    let t_grid: Vec<f64> = [0.125, 0.25, 0.5, 1.0].iter().map(|s| s * t_min).collect();
    let values = t_grid
        .iter()
        .map(|&t| Ok(Estimate::exact(eval_transversal(f, t, zeta, chart)?.u_dot)))
        .collect::<Result<Vec<_>>>()?;
    LimitTrace::new(&t_grid, values)
}

/// Result of a sampled maximization over `ℂPⁿ`.
#[derive(Debug, Clone, Serialize)]
pub struct Maximum {
    /// Best value found; a lower bound of the supremum.
    pub value: f64,
    /// Improvement made by the last refinement round.
    pub gap: f64,
    pub chart: usize,
    pub zeta: Vec<(f64, f64)>,
}

/// Point of `ℂPⁿ` with chart coordinates `ζ` in `chart`.
pub fn chart_point(chart: usize, zeta: &[C64]) -> Result<CpnPoint> {
    let z = hopf_to_ambient(&HopfPoint {
        t: 0.0,
        theta: 0.0,
        zeta: zeta.to_vec(),
        chart,
    })?
    .z;
    Ok(CpnPoint {
        z,
        chart,
        zeta: zeta.to_vec(),
    })
}

fn ambient_at(p: &CpnPoint, t: f64) -> AmbientPoint {
    AmbientPoint::new(p.z.iter().map(|c| c * t.exp()).collect())
}

fn golden_max(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = g(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes `objective` over a covering sample of `count` mixture-proposal
/// points of depth `depth` plus the chart origins, then refines the best
/// candidates by coordinate-wise golden-section search on `Re ζ`, `Im ζ`
/// in three rounds of shrinking width.
pub fn maximize_over_cpn<F>(
    n: usize,
    count: usize,
    seed: u64,
    depth: f64,
    objective: F,
) -> Result<Maximum>
where
    F: Fn(&CpnPoint) -> Result<f64> + Sync,
{
    let mut points: Vec<CpnPoint> = (0..=n)
        .map(|c| chart_point(c, &vec![C64::new(0.0, 0.0); n]))
        .collect::<Result<_>>()?;
    points.extend(
        mixture_sphere_points(n, count, seed, purpose::COVER, depth)
            .iter()
            .map(|z| CpnPoint::from_representative(z)),
    );
    let values: Vec<Result<f64>> = points.par_iter().map(|p| objective(p)).collect();
    let mut scored = Vec::with_capacity(points.len());
    let mut first_err = None;
    for (p, v) in points.into_iter().zip(values) {
        match v {
            Ok(v) if v.is_finite() => scored.push((v, p)),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if scored.is_empty() {
        return Err(first_err
            .unwrap_or_else(|| Error::InsufficientData("no finite objective values".into())));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(REFINE_CANDIDATES);
    let refined: Vec<(f64, f64, CpnPoint)> = scored
        .into_par_iter()
        .map(|(v, p)| refine(&objective, v, p))
        .collect();
    let (value, gap, best) = refined
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one candidate");
    Ok(Maximum {
        value,
        gap,
        chart: best.chart,
        zeta: best.zeta.iter().map(|c| (c.re, c.im)).collect(),
    })
}

fn refine<F>(objective: &F, start: f64, p: CpnPoint) -> (f64, f64, CpnPoint)
where
    F: Fn(&CpnPoint) -> Result<f64> + Sync,
{
    let chart = p.chart;
    let mut zeta = p.zeta.clone();
    let mut best = start;
    let mut gap = 0.0;
    let eval = |z: &[C64]| -> f64 {
        chart_point(chart, z)
            .and_then(|q| objective(&q))
            .ok()
            .filter(|v| v.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    };
    for w in ROUND_WIDTHS {
        let before = best;
        for coord in 0..2 * zeta.len() {
            let (a, imag) = (coord / 2, coord % 2 == 1);
            let x0 = if imag { zeta[a].im } else { zeta[a].re };
            let line = |x: f64| {
                let mut z = zeta.clone();
                if imag {
                    z[a].im = x;
                } else {
                    z[a].re = x;
                }
                eval(&z)
            };
            let (x, v) = golden_max(&line, x0 - w, x0 + w);
            if v > best {
                best = v;
                if imag {
                    zeta[a].im = x;
                } else {
                    zeta[a].re = x;
                }
            }
        }
        gap = best - before;
    }
    let point = chart_point(chart, &zeta).unwrap_or(p);
    (best, gap, point)
}

/// `M_A(u) = sup_ζ u̇_{−A}(ζ)`, estimated from `grid_density` covering points
/// refined by local ascent; the seed comes from `scheme`.
pub fn max_directional(
    f: &FunctionSpec,
    n: usize,
    a: f64,
    grid_density: usize,
    scheme: &IntegrationScheme,
) -> Result<Maximum> {
    f.check_dim(n)?;
    f.require_catalog()?;
    if !(a >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "A must be at least 1, got {a}"
        )));
    }
    maximize_over_cpn(n, grid_density, scheme.seed, depth_for(-a), |p| {
        let z = ambient_at(p, -a);
        Ok(eval_ambient(f, &z)?.radial_derivative(&z.z))
    })
}

/// `M_A` along an increasing grid of `A` and the extrapolated `λ`.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionalProfile {
    #[serde(rename = "A_grid")]
    pub a_grid: Vec<f64>,
    #[serde(rename = "M_values")]
    pub m_values: Vec<f64>,
    /// Refinement gaps of the `M_A` estimates.
    pub gaps: Vec<f64>,
    pub lambda: f64,
    pub lambda_uncertainty: f64,
}

impl DirectionalProfile {
    /// `M_A` inflated by its refinement gap, for upper-bound use.
    pub fn conservative(&self, i: usize) -> f64 {
        self.m_values[i] + self.gaps[i]
    }
}

/// `M_A` on `a_grid` and the extrapolated `λ`.
pub fn directional_profile(
    f: &FunctionSpec,
    n: usize,
    a_grid: &[f64],
    grid_density: usize,
    scheme: &IntegrationScheme,
) -> Result<DirectionalProfile> {
    if a_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "A grid must be strictly increasing".into(),
        ));
    }
    let maxima = a_grid
        .iter()
        .map(|&a| max_directional(f, n, a, grid_density, scheme))
        .collect::<Result<Vec<_>>>()?;
    let mut profile = DirectionalProfile {
        a_grid: a_grid.to_vec(),
        m_values: maxima.iter().map(|m| m.value).collect(),
        gaps: maxima.iter().map(|m| m.gap).collect(),
        lambda: f64::NAN,
        lambda_uncertainty: f64::NAN,
    };
    let (lambda, unc) = lambda_extrapolate(&profile)?;
    profile.lambda = lambda;
    profile.lambda_uncertainty = unc;
    Ok(profile)
}

/// `λ = lim_{A→∞} M_A`, clamped to `[0, min M_A]`, with its uncertainty.
pub fn lambda_extrapolate(profile: &DirectionalProfile) -> Result<(f64, f64)> {
    if profile.a_grid.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 values of A, got {}",
            profile.a_grid.len()
        )));
    }
    let ts: Vec<f64> = profile.a_grid.iter().map(|a| -a).collect();
    let (l, unc) = extrapolate_limit(&ts, &profile.m_values)?;
    let min = profile
        .m_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let gap = profile.gaps.iter().copied().fold(0.0, f64::max);
    Ok((l.clamp(0.0, min.max(0.0)), unc + gap))
}

/// `I(u_t)`, `ℐ(u_t)` and the centred difference of `ℐ` at `t`.
#[derive(Debug, Clone, Serialize)]
pub struct Functionals {
    pub t: f64,
    #[serde(rename = "I")]
    pub i: Estimate,
    #[serde(rename = "calI")]
    pub cal_i: Estimate,
    /// `[ℐ(u_{t+h}) − ℐ(u_{t−h})]/2h` with `h = 10⁻³`, on the same samples.
    pub derivative: Estimate,
}

/// `I(u_t) = ∫u̇_t ωⁿ` and `ℐ(u_t) = ∫u_t ωⁿ` at `t ≤ −1`, checking that `ℐ` is
/// a primitive of `I` to relative accuracy `10⁻⁴`.
pub fn functionals_i(
    f: &FunctionSpec,
    n: usize,
    t: f64,
    scheme: &IntegrationScheme,
) -> Result<Functionals> {
    f.check_dim(n)?;
    f.require_catalog()?;
    if !(t <= -1.0) {
        return Err(Error::InvalidArgument(format!(
            "t must be at most −1, got {t}"
        )));
    }
    let h = PRIMITIVE_STEP;
    let est = integrate_cpn_vec(n, scheme, depth_for(t), f.quadrature_symmetry(), 3, |p| {
        let z = ambient_at(p, t);
        let e = eval_ambient(f, &z)?;
        let up = eval_ambient(f, &ambient_at(p, t + h))?.value;
        let down = eval_ambient(f, &ambient_at(p, t - h))?.value;
        Ok(vec![
            e.radial_derivative(&z.z),
            e.value,
            (up - down) / (2.0 * h),
        ])
    })?;
    let out = Functionals {
        t,
        i: est[0],
        cal_i: est[1],
        derivative: est[2],
    };
    let residual = (out.derivative.value - out.i.value).abs();
    let tol = PRIMITIVE_REL * out.i.value.abs().max(1e-12);
    if residual > tol {
        return Err(Error::check(
            "ℐ primitive of I",
            residual,
            tol,
            format!("t={t}"),
        ));
    }
    Ok(out)
}

/// Outcome of [`infimum_gap_check`].
#[derive(Debug, Clone, Serialize)]
pub struct InfimumGap {
    /// `−inf_{S_{R2}} u`.
    pub lhs: f64,
    /// `∫_{A1}^{A2} M_T dT − inf_{S_{R1}} u` with gap-inflated `M_T`.
    pub rhs: f64,
    pub slack: f64,
    pub integral: f64,
    pub inf_r1: f64,
    pub inf_r2: f64,
    /// `(T, M_T, gap)` at the trapezoid nodes.
    pub m_trace: Vec<(f64, f64, f64)>,
}

/// Sampled infimum of `u` on `S_R`, `R = e^{−A}`.
pub fn sphere_infimum(
    f: &FunctionSpec,
    n: usize,
    a: f64,
    grid_density: usize,
    seed: u64,
) -> Result<Maximum> {
    let m = maximize_over_cpn(n, grid_density, seed, depth_for(-a), |p| {
        Ok(-eval_ambient(f, &ambient_at(p, -a))?.value)
    })?;
    Ok(Maximum {
        value: -m.value,
        ..m
    })
}

/// Checks `−inf_{S_{R2}} u ≤ ∫_{A1}^{A2} M_T dT − inf_{S_{R1}} u` with
/// `R_i = e^{−A_i}`, the integral by the trapezoid rule over 8 nodes.
pub fn infimum_gap_check(
    f: &FunctionSpec,
    n: usize,
    a1: f64,
    a2: f64,
    scheme: &IntegrationScheme,
) -> Result<InfimumGap> {
    f.check_dim(n)?;
    f.require_catalog()?;
    if !(1.0 < a1 && a1 < a2) {
        return Err(Error::InvalidArgument(format!(
            "need 1 < A1 < A2, got A1={a1}, A2={a2}"
        )));
    }
    let density = crate::tolerances::DEFAULT_GRID_DENSITY;
    let step = (a2 - a1) / (GAP_NODES - 1) as f64;
    let m_trace = (0..GAP_NODES)
        .map(|i| {
            let a = a1 + i as f64 * step;
            let m = max_directional(f, n, a, density, scheme)?;
            Ok((a, m.value, m.gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let integral: f64 = m_trace
        .windows(2)
        .map(|w| 0.5 * step * (w[0].1 + w[0].2 + w[1].1 + w[1].2))
        .sum();
    let inf_r1 = sphere_infimum(f, n, a1, density, scheme.seed)?.value;
    let inf_r2 = sphere_infimum(f, n, a2, density, scheme.seed)?.value;
    let lhs = -inf_r2;
    let rhs = integral - inf_r1;
    let out = InfimumGap {
        lhs,
        rhs,
        slack: rhs - lhs,
        integral,
        inf_r1,
        inf_r2,
        m_trace,
    };
    if out.slack < -INFIMUM_GAP_SLACK {
        return Err(Error::check(
            "infimum gap",
            -out.slack,
            INFIMUM_GAP_SLACK,
            format!("A1={a1}, A2={a2}, lhs={lhs}, rhs={rhs}"),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::parse_spec;

    fn spec(s: &str) -> FunctionSpec {
        parse_spec(s).unwrap()
    }

    #[test]
    fn radial_invariants_are_exact() {
        let f = spec("radial(profile=log,c=3)");
        let tensor = IntegrationScheme::tensor(6);
        let s = lelong_by_slope(&f, 1, &[-5.0, -10.0, -20.0], &tensor).unwrap();
        assert!(s.values.iter().all(|e| (e.value - 3.0).abs() < 1e-9));
        let i = lelong_by_i(&f, 1, &[-5.0, -10.0, -20.0], &tensor, 2).unwrap();
        assert!((i.limit - 9.0).abs() < 1e-9);
        let d = directional_lelong(&f, &[C64::new(0.3, -0.2)], 0, -16.0).unwrap();
        assert!((d.limit - 3.0).abs() < 1e-12);
        let m = max_directional(&f, 1, 4.0, 64, &IntegrationScheme::default()).unwrap();
        assert!((m.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_interior_maximum() {
        let (x, v) = golden_max(&|x| -(x - 0.3).powi(2), -1.0, 1.0);
        assert!((x - 0.3).abs() < 1e-8 && v.abs() < 1e-15);
    }

    #[test]
    fn primitive_check_holds_for_radial() {
        let f = spec("radial(profile=log,c=2)");
        let out = functionals_i(&f, 1, -3.0, &IntegrationScheme::tensor(6)).unwrap();
        assert!((out.i.value - 2.0 * PI).abs() < 1e-10);
        assert!((out.cal_i.value - 2.0 * -3.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn lambda_needs_three_values() {
        let p = DirectionalProfile {
            a_grid: vec![4.0, 8.0],
            m_values: vec![1.0, 1.0],
            gaps: vec![0.0, 0.0],
            lambda: 0.0,
            lambda_uncertainty: 0.0,
        };
        assert!(matches!(
            lambda_extrapolate(&p),
            Err(Error::InsufficientData(_))
        ));
    }
}
