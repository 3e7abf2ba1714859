//! Integration on ℂPⁿ, on spheres and over radial shells, and limit
//! extrapolation along `t → −∞`.
//!
//! Monte Carlo points are unit vectors of `ℂ^{n+1}`: the uniform measure on
//! `S^{2n+1}` pushes forward to `ωⁿ/πⁿ`, so no chart partition is needed.
//! Integrands of interest concentrate on tubes `|z_S|² ≈ e^{2mt}` around
//! coordinate subspaces, which uniform sampling never visits for large `|t|`.
//! Sampling therefore draws from a defensive mixture of the uniform measure
//! and, for every proper coordinate subset `S`, a component where
//! `s_S = Σ_{j∈S}|z^j|²` is log-uniform on `[e^{−D}, 1]` with both blocks
//! uniform given `s_S`. Estimates are self-normalized importance averages,
//! exact for constant integrands. `D = 0` is plain uniform sampling.
//!
//! Every random stream is derived from `(seed, purpose, chunk)` and partial
//! results are reduced by pairwise summation in sample order, so results do
//! not depend on the number of worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{chart_index, hopf_to_ambient, preferred_chart, AmbientPoint, HopfPoint};
use crate::linalg::{factorial, pairwise_sum};
use crate::tolerances::{
    DEFAULT_CHART_ORDER, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TAIL_FRACTION,
};
use crate::{Error, Result, C64};

const CHUNK: usize = 1024;

/// Random-stream tags, so that different integrals never share samples by
/// accident.
pub mod purpose {
    pub const CPN: u64 = 1;
    pub const SPHERE: u64 = 2;
    pub const SHELL: u64 = 3;
    pub const COVER: u64 = 4;
    pub const CHECK: u64 = 5;
    pub const MOLLIFY: u64 = 6;
}

/// Quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Mc,
    Tensor,
}

/// Integration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationScheme {
    pub kind: SchemeKind,
    pub samples: usize,
    pub seed: u64,
    /// Gauss–Legendre nodes per panel of the tensor rule.
    pub chart_order: usize,
    /// Fraction of Monte Carlo samples drawn from the tail components.
    pub tail_fraction: f64,
}

impl Default for IntegrationScheme {
    fn default() -> Self {
        Self::mc(DEFAULT_SAMPLES, DEFAULT_SEED)
    }
}

impl IntegrationScheme {
    pub fn mc(samples: usize, seed: u64) -> Self {
        Self {
            kind: SchemeKind::Mc,
            samples,
            seed,
            chart_order: DEFAULT_CHART_ORDER,
            tail_fraction: DEFAULT_TAIL_FRACTION,
        }
    }

    pub fn tensor(chart_order: usize) -> Self {
        Self {
            kind: SchemeKind::Tensor,
            samples: 0,
            seed: 0,
            chart_order,
            tail_fraction: 0.0,
        }
    }

    /// Same scheme with another seed.
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Tensor rules exist only for `n = 1`; Monte Carlo needs `≥ 10³` samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            SchemeKind::Tensor if n != 1 => Err(Error::InvalidArgument(format!(
                "tensor quadrature is only available for n = 1 (got n = {n})"
            ))),
            SchemeKind::Tensor if self.chart_order < 2 => Err(Error::InvalidArgument(
                "chart order must be at least 2".into(),
            )),
            SchemeKind::Mc if self.samples < 1000 => Err(Error::InvalidArgument(format!(
                "Monte Carlo needs at least 1000 samples (got {})",
                self.samples
            ))),
            SchemeKind::Mc if !(0.0..1.0).contains(&self.tail_fraction) => Err(
                Error::InvalidArgument("tail fraction must lie in [0, 1)".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.kind == SchemeKind::Tensor
    }
}

/// A quadrature estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples_used: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            samples_used: 0,
        }
    }

    /// `a·self + b·other`, treating the two as independent.
    pub fn combine(self, a: f64, other: Estimate, b: f64) -> Estimate {
        Estimate {
            value: a * self.value + b * other.value,
            stderr: ((a * self.stderr).powi(2) + (b * other.stderr).powi(2)).sqrt(),
            samples_used: self.samples_used.max(other.samples_used),
        }
    }

    pub fn scaled(self, a: f64) -> Estimate {
        Estimate {
            value: a * self.value,
            stderr: a.abs() * self.stderr,
            samples_used: self.samples_used,
        }
    }
}

/// Symmetries an integrand is known to have; they let the tensor rule drop
/// angular nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Symmetry {
    /// Invariant under `z ↦ e^{iθ}z`.
    pub fiber_invariant: bool,
    /// Invariant under independent rotations of every coordinate.
    pub toric: bool,
}

/// A point of ℂPⁿ: a unit representative together with its preferred chart.
#[derive(Debug, Clone, PartialEq)]
pub struct CpnPoint {
    pub z: Vec<C64>,
    pub chart: usize,
    pub zeta: Vec<C64>,
}

impl CpnPoint {
    /// Point from any nonzero representative; `z` is normalized.
    pub fn from_representative(z: &[C64]) -> Self {
        let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let z: Vec<C64> = z.iter().map(|c| c / r).collect();
        let chart = preferred_chart(&z);
        let n = z.len() - 1;
        let zeta = (0..n)
            .map(|a| z[chart_index(chart, a)] / z[chart])
            .collect();
        Self { z, chart, zeta }
    }
}

/// Area of the unit sphere `S^{2n+1} ⊂ ℂ^{n+1}`, `2π^{n+1}/n!`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powi(n as i32 + 1) / factorial(n)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 0 { 1.0 } else { p1 };
            let pm = if order == 1 { 1.0 } else { p0 };
            dp = order as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]` with unit-width panels.
pub(crate) fn panel_rule(a: f64, b: f64, order: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(order);
    let panels = ((b - a).ceil() as usize).max(1);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((lo + 0.5 * width * (x + 1.0), 0.5 * width * w));
        }
    }
    out
}

pub(crate) fn stream_rng(seed: u64, purpose: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | chunk as u64);
    rng
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// `ln B(k, m)` for positive integers.
fn ln_beta(k: usize, m: usize) -> f64 {
    factorial(k - 1).ln() + factorial(m - 1).ln() - factorial(k + m - 1).ln()
}

/// Mixture proposal on `S^{2n+1}`.
struct Proposal {
    n: usize,
    depth: f64,
    alpha: f64,
    subsets: Vec<u32>,
}

impl Proposal {
    fn new(n: usize, depth: f64, tail_fraction: f64) -> Self {
        let full = (1u32 << (n + 1)) - 1;
        let subsets: Vec<u32> = (1..full).collect();
        let alpha = if depth > 0.0 && !subsets.is_empty() {
            1.0 - tail_fraction
        } else {
            1.0
        };
        Self {
            n,
            depth,
            alpha,
            subsets,
        }
    }

    /// Draws a unit vector and its importance weight (uniform density over
    /// proposal density).
    fn draw(&self, rng: &mut ChaCha8Rng) -> (Vec<C64>, f64) {
        let mut g: Vec<C64> = (0..=self.n).map(|_| gaussian(rng)).collect();
        let pick: f64 = rng.random();
        if pick < self.alpha {
            let r = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            g.iter_mut().for_each(|c| *c /= r);
        } else if rng.random::<f64>() < 0.5 {
            // Chart coordinates with independent log-uniform moduli.
            let chart = rng.random_range(0..=self.n);
            let phase = C64::from_polar(1.0, 2.0 * PI * rng.random::<f64>());
            for (j, c) in g.iter_mut().enumerate() {
                *c = if j == chart {
                    phase
                } else {
                    let v: f64 = rng.random();
                    let th = 2.0 * PI * rng.random::<f64>();
                    phase * C64::from_polar((-0.5 * self.depth * v).exp(), th)
                };
            }
            let r = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            g.iter_mut().for_each(|c| *c /= r);
        } else {
            let mask = self.subsets[rng.random_range(0..self.subsets.len())];
            let v: f64 = rng.random();
            let log_s = -self.depth * v;
            let (mut a, mut b) = (0.0, 0.0);
            for (j, c) in g.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    a += c.norm_sqr();
                } else {
                    b += c.norm_sqr();
                }
            }
            let s = log_s.exp();
            let sa = (s / a).sqrt();
            let sb = (-(log_s.exp_m1()) / b).sqrt();
            for (j, c) in g.iter_mut().enumerate() {
                *c *= if mask >> j & 1 == 1 { sa } else { sb };
            }
        }
        let w = self.weight(&g);
        (g, w)
    }

    fn weight(&self, z: &[C64]) -> f64 {
        if self.alpha >= 1.0 {
            return 1.0;
        }
        let n1 = self.n + 1;
        let mut logs = vec![self.alpha.ln()];
        let half = (0.5 * (1.0 - self.alpha)).ln();
        let base = half - (self.subsets.len() as f64).ln() - self.depth.ln();
        for &mask in &self.subsets {
            let (mut s, mut c) = (0.0, 0.0);
            for (j, v) in z.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    s += v.norm_sqr();
                } else {
                    c += v.norm_sqr();
                }
            }
            let ln_s = s.ln();
            if ln_s < -self.depth {
                continue;
            }
            let k = mask.count_ones() as usize;
            let m = n1 - k;
            logs.push(base + ln_beta(k, m) - k as f64 * ln_s - (m as f64 - 1.0) * c.ln());
        }
        let chart = preferred_chart(z);
        let top_sq = z[chart].norm_sqr();
        let ratios: Vec<f64> = (0..n1)
            .filter(|&j| j != chart)
            .map(|j| z[j].norm_sqr() / top_sq)
            .collect();
        if ratios.iter().all(|q| q.ln() >= -self.depth) {
            let n = self.n as f64;
            let sum: f64 = ratios.iter().sum();
            logs.push(
                half - (n1 as f64).ln()
                    - n * self.depth.ln()
                    - ratios.iter().map(|q| q.ln()).sum::<f64>()
                    + n1 as f64 * sum.ln_1p()
                    - factorial(self.n).ln(),
            );
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        (-lse).exp()
    }
}

/// Self-normalized weighted means of a vector-valued function of a unit
/// vector and `extra` auxiliary uniforms.
#[allow(clippy::too_many_arguments)]
fn weighted_means<F>(
    n: usize,
    samples: usize,
    seed: u64,
    stream: u64,
    depth: f64,
    tail_fraction: f64,
    dim: usize,
    extra: usize,
    f: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&[C64], &[f64]) -> Result<Vec<f64>> + Sync,
{
    let proposal = Proposal::new(n, depth, tail_fraction);
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<Result<Vec<(f64, Vec<f64>)>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, stream, c);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let (z, w) = proposal.draw(&mut rng);
                let aux: Vec<f64> = (0..extra).map(|_| rng.random()).collect();
                let vals = f(&z, &aux).map_err(|e| match e {
                    Error::EvalFailure { .. } => e,
                    other => Error::EvalFailure {
                        location: format!("{z:?}"),
                        reason: other.to_string(),
                    },
                })?;
                if vals.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: vals.len(),
                    });
                }
                out.push((w, vals));
            }
            Ok(out)
        })
        .collect();
    let mut rows = Vec::with_capacity(samples);
    for chunk in per_chunk {
        rows.extend(chunk?);
    }
    let ws: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let wsum = pairwise_sum(&ws);
    (0..dim)
        .map(|d| {
            let wf: Vec<f64> = rows.iter().map(|r| r.0 * r.1[d]).collect();
            let mean = pairwise_sum(&wf) / wsum;
            let dev: Vec<f64> = rows
                .iter()
                .map(|r| (r.0 * (r.1[d] - mean)).powi(2))
                .collect();
            let var = pairwise_sum(&dev) / (wsum * wsum);
            if !mean.is_finite() {
                return Err(Error::EvalFailure {
                    location: format!("component {d}"),
                    reason: "non-finite estimate".into(),
                });
            }
            Ok(Estimate {
                value: mean,
                stderr: var.sqrt(),
                samples_used: samples,
            })
        })
        .collect()
}

/// Nodes `(point, weight)` of the deterministic rule for `∫_{ℂP¹} f ω`.
///
/// Each hemisphere `{|ζ| ≤ 1}` of the two charts is parametrized by
/// `s = |ζ|²/(1+|ζ|²) = e^{−x}` and the angle `φ`, where `ω = ½ ds dφ`. The
/// `x`-integral over `[ln 2, X]` uses unit-width Gauss–Legendre panels; the
/// cap `s < e^{−X}` is approximated by the value at `ζ = 0`.
pub fn tensor_nodes_cp1(order: usize, depth: f64, toric: bool) -> Vec<(CpnPoint, f64)> {
    let x_max = depth.max(8.0);
    let radial = panel_rule(std::f64::consts::LN_2, x_max, order);
    let n_phi = if toric { 1 } else { 4 * order };
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::new();
    for chart in 0..2 {
        for &(x, w) in &radial {
            let s = (-x).exp();
            let rho = (s / (1.0 - s)).sqrt();
            for k in 0..n_phi {
                let phi = k as f64 * dphi;
                let zeta = vec![C64::from_polar(rho, phi)];
                let z = hopf_to_ambient(&HopfPoint {
                    t: 0.0,
                    theta: 0.0,
                    zeta: zeta.clone(),
                    chart,
                })
                .expect("valid chart")
                .z;
                nodes.push((CpnPoint { z, chart, zeta }, 0.5 * w * s * dphi));
            }
        }
        let z = hopf_to_ambient(&HopfPoint {
            t: 0.0,
            theta: 0.0,
            zeta: vec![C64::new(0.0, 0.0)],
            chart,
        })
        .expect("valid chart")
        .z;
        nodes.push((
            CpnPoint {
                z,
                chart,
                zeta: vec![C64::new(0.0, 0.0)],
            },
            PI * (-x_max).exp(),
        ));
    }
    nodes
}

fn tensor_sum<F>(nodes: &[(CpnPoint, f64)], dim: usize, f: F) -> Result<Vec<Estimate>>
where
    F: Fn(&CpnPoint) -> Result<Vec<f64>> + Sync,
{
    let vals: Vec<Result<Vec<f64>>> = nodes.par_iter().map(|(p, _)| f(p)).collect();
    let mut rows = Vec::with_capacity(nodes.len());
    for (v, (p, _)) in vals.into_iter().zip(nodes) {
        let v = v.map_err(|e| Error::EvalFailure {
            location: format!("chart {} ζ={:?}", p.chart, p.zeta),
            reason: e.to_string(),
        })?;
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        rows.push(v);
    }
    Ok((0..dim)
        .map(|d| {
            let terms: Vec<f64> = rows.iter().zip(nodes).map(|(r, (_, w))| w * r[d]).collect();
            Estimate {
                value: pairwise_sum(&terms),
                stderr: 0.0,
                samples_used: nodes.len(),
            }
        })
        .collect())
}

/// Tensor estimates at `order` whose `stderr` is the embedded error
/// estimate `|Q_order − Q_{order/2}|`, a pessimistic bound on the truncation
/// error of the higher rule.
fn embedded<F>(order: usize, rule: F) -> Result<Vec<Estimate>>
where
    F: Fn(usize) -> Result<Vec<Estimate>>,
{
    let hi = rule(order)?;
    let lo = rule((order / 2).max(1))?;
    Ok(hi
        .into_iter()
        .zip(lo)
        .map(|(h, l)| Estimate {
            stderr: (h.value - l.value).abs(),
            ..h
        })
        .collect())
}

/// `∫_{ℂPⁿ} f ωⁿ` for a vector-valued `f`.
///
/// `depth` is the log-depth `D` of the proposal (Monte Carlo) or of the
/// compactified radial rule (tensor); see [`crate::tolerances::depth_for`].
pub fn integrate_cpn_vec<F>(
    n: usize,
    scheme: &IntegrationScheme,
    depth: f64,
    sym: Symmetry,
    dim: usize,
    f: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&CpnPoint) -> Result<Vec<f64>> + Sync,
{
    scheme.validate(n)?;
    let vol = PI.powi(n as i32);
    match scheme.kind {
        SchemeKind::Tensor => embedded(scheme.chart_order, |order| {
            tensor_sum(&tensor_nodes_cp1(order, depth, sym.toric), dim, &f)
        }),
        SchemeKind::Mc => {
            let est = weighted_means(
                n,
                scheme.samples,
                scheme.seed,
                purpose::CPN,
                depth,
                scheme.tail_fraction,
                dim,
                0,
                |z, _| f(&CpnPoint::from_representative(z)),
            )?;
            Ok(est.into_iter().map(|e| e.scaled(vol)).collect())
        }
    }
}

/// `∫_{ℂPⁿ} f ωⁿ` with uniform sampling (Monte Carlo) or the default-depth
/// tensor rule.
pub fn integrate_cpn<F>(f: F, n: usize, scheme: &IntegrationScheme) -> Result<Estimate>
where
    F: Fn(&CpnPoint) -> Result<f64> + Sync,
{
    let depth = match scheme.kind {
        SchemeKind::Mc => 0.0,
        SchemeKind::Tensor => 40.0,
    };
    Ok(
        integrate_cpn_vec(n, scheme, depth, Symmetry::default(), 1, |p| {
            f(p).map(|v| vec![v])
        })?[0],
    )
}

/// `∫_{r1<|z|<r2} g dV` in `ℂ^{n+1}`.
pub fn integrate_shell<F>(
    g: F,
    n: usize,
    r1: f64,
    r2: f64,
    scheme: &IntegrationScheme,
) -> Result<Estimate>
where
    F: Fn(&AmbientPoint) -> Result<f64> + Sync,
{
    let depth = match scheme.kind {
        SchemeKind::Mc => 0.0,
        SchemeKind::Tensor => 40.0,
    };
    Ok(
        integrate_shell_vec(n, r1, r2, scheme, depth, Symmetry::default(), 1, |z| {
            g(z).map(|v| vec![v])
        })?[0],
    )
}

/// Vector-valued shell integral with a tail-aware direction proposal.
///
/// With `r1 > 0` the radius is log-uniform on `[r1, r2]`; with `r1 = 0` it is
/// drawn with density `∝ ρ^{2n+1}`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_shell_vec<F>(
    n: usize,
    r1: f64,
    r2: f64,
    scheme: &IntegrationScheme,
    depth: f64,
    sym: Symmetry,
    dim: usize,
    g: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&AmbientPoint) -> Result<Vec<f64>> + Sync,
{
    if !(r1 >= 0.0 && r1 < r2 && r2 <= 1.0) {
        return Err(Error::BadRadii { r1, r2 });
    }
    let real_dim = 2 * n + 2;
    match scheme.kind {
        SchemeKind::Tensor => {
            scheme.validate(n)?;
            if r1 == 0.0 {
                return Err(Error::InvalidArgument(
                    "tensor shell rule needs r1 > 0".into(),
                ));
            }
            embedded(scheme.chart_order, |order| {
                let nodes = tensor_nodes_cp1(order, depth, sym.toric);
                let radial = panel_rule(r1.ln(), r2.ln(), order);
                let n_theta = if sym.fiber_invariant { 1 } else { 4 * order };
                let mut acc = vec![Vec::new(); dim];
                for &(lr, wr) in &radial {
                    let rho = lr.exp();
                    // dV = ρ^{2n+1} dρ dσ and ∫_{S} f dσ = (a/πⁿ)∫ (fiber mean) ωⁿ
                    let jac = wr * rho.powi(real_dim as i32) * sphere_area(n) / PI.powi(n as i32);
                    let est = tensor_sum(&nodes, dim, |p| {
                        let mut sum = vec![0.0; dim];
                        for k in 0..n_theta {
                            let th = 2.0 * PI * k as f64 / n_theta as f64;
                            let w = C64::from_polar(rho, th);
                            let z = AmbientPoint::new(p.z.iter().map(|c| c * w).collect());
                            for (s, v) in sum.iter_mut().zip(g(&z)?) {
                                *s += v / n_theta as f64;
                            }
                        }
                        Ok(sum)
                    })?;
                    for (a, e) in acc.iter_mut().zip(est) {
                        a.push(jac * e.value);
                    }
                }
                Ok(acc
                    .iter()
                    .map(|v| Estimate {
                        value: pairwise_sum(v),
                        stderr: 0.0,
                        samples_used: radial.len() * nodes.len(),
                    })
                    .collect())
            })
        }
        SchemeKind::Mc => {
            scheme.validate(n)?;
            let (factor, log_uniform) = if r1 > 0.0 {
                (sphere_area(n) * (r2 / r1).ln(), true)
            } else {
                (
                    PI.powi(n as i32 + 1) * r2.powi(real_dim as i32) / factorial(n + 1),
                    false,
                )
            };
            let est = weighted_means(
                n,
                scheme.samples,
                scheme.seed,
                purpose::SHELL,
                depth,
                scheme.tail_fraction,
                dim,
                1,
                |u, aux| {
                    let (rho, jac) = if log_uniform {
                        let rho = r1 * (r2 / r1).powf(aux[0]);
                        (rho, rho.powi(real_dim as i32))
                    } else {
                        (r2 * aux[0].powf(1.0 / real_dim as f64), 1.0)
                    };
                    let z = AmbientPoint::new(u.iter().map(|c| c * rho).collect());
                    Ok(g(&z)?.into_iter().map(|v| v * jac).collect())
                },
            )?;
            Ok(est.into_iter().map(|e| e.scaled(factor)).collect())
        }
    }
}

/// Spherical mean `S_u(0, r) = (1/a_{2n+1}) ∫_{|ξ|=1} u(rξ) dσ` with uniform
/// directions.
pub fn sphere_mean<F>(u: F, n: usize, r: f64, scheme: &IntegrationScheme) -> Result<Estimate>
where
    F: Fn(&AmbientPoint) -> Result<f64> + Sync,
{
    sphere_mean_vec(n, r, scheme, Symmetry::default(), 1, |z| {
        u(z).map(|v| vec![v])
    })
    .map(|v| v[0])
}

/// Vector-valued spherical mean; all components share the directions.
pub fn sphere_mean_vec<F>(
    n: usize,
    r: f64,
    scheme: &IntegrationScheme,
    sym: Symmetry,
    dim: usize,
    u: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&AmbientPoint) -> Result<Vec<f64>> + Sync,
{
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sphere radius must lie in (0,1), got {r}"
        )));
    }
    scheme.validate(n)?;
    match scheme.kind {
        SchemeKind::Tensor => embedded(scheme.chart_order, |order| {
            let nodes = tensor_nodes_cp1(order, 40.0, sym.toric);
            let n_theta = if sym.fiber_invariant { 1 } else { 4 * order };
            let est = tensor_sum(&nodes, dim, |p| {
                let mut sum = vec![0.0; dim];
                for k in 0..n_theta {
                    let w = C64::from_polar(r, 2.0 * PI * k as f64 / n_theta as f64);
                    let z = AmbientPoint::new(p.z.iter().map(|c| c * w).collect());
                    for (s, v) in sum.iter_mut().zip(u(&z)?) {
                        *s += v / n_theta as f64;
                    }
                }
                Ok(sum)
            })?;
            Ok(est.into_iter().map(|e| e.scaled(1.0 / PI)).collect())
        }),
        SchemeKind::Mc => weighted_means(
            n,
            scheme.samples,
            scheme.seed,
            purpose::SPHERE,
            0.0,
            0.0,
            dim,
            0,
            |d, _| u(&AmbientPoint::new(d.iter().map(|c| c * r).collect())),
        ),
    }
}

/// Deterministic stream of uniform unit vectors in `ℂ^{n+1}`, for covering
/// samples and spot checks.
pub fn uniform_sphere_points(n: usize, count: usize, seed: u64, stream: u64) -> Vec<Vec<C64>> {
    let chunks = count.div_ceil(CHUNK);
    let mut out = Vec::with_capacity(count);
    for c in 0..chunks {
        let mut rng = stream_rng(seed, stream, c);
        for _ in 0..CHUNK.min(count - c * CHUNK) {
            let g: Vec<C64> = (0..=n).map(|_| gaussian(&mut rng)).collect();
            let r = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            out.push(g.into_iter().map(|v| v / r).collect());
        }
    }
    out
}

/// Deterministic draws from the mixture proposal of depth `depth`, for
/// covering samples that must reach thin tubes around coordinate subspaces.
pub fn mixture_sphere_points(
    n: usize,
    count: usize,
    seed: u64,
    stream: u64,
    depth: f64,
) -> Vec<Vec<C64>> {
    let proposal = Proposal::new(n, depth, 0.5);
    let chunks = count.div_ceil(CHUNK);
    let mut out = Vec::with_capacity(count);
    for c in 0..chunks {
        let mut rng = stream_rng(seed, stream, c);
        for _ in 0..CHUNK.min(count - c * CHUNK) {
            out.push(proposal.draw(&mut rng).0);
        }
    }
    out
}

/// Uniform numbers in `[0,1)` from a dedicated stream.
pub fn uniforms(count: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream, 0);
    (0..count).map(|_| rng.random()).collect()
}

/// Exponential model `v = L + c e^{κt}` through three points; `None` when the
/// difference ratio is outside the model's range.
fn fit_exponential(t: [f64; 3], v: [f64; 3]) -> Option<(f64, f64, f64)> {
    let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
    let r = d2 / d1;
    let linear = (t[2] - t[1]) / (t[1] - t[0]);
    if !(r > 0.0 && r < linear) {
        return None;
    }
    let ratio =
        |k: f64| ((k * t[2]).exp() - (k * t[1]).exp()) / ((k * t[1]).exp() - (k * t[0]).exp());
    let (mut lo, mut hi) = (1e-12, 1.0);
    while ratio(hi) > r {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let c = d2 / ((k * t[2]).exp() - (k * t[1]).exp());
    let l = v[2] - c * (k * t[2]).exp();
    l.is_finite().then_some((l, c, k))
}

/// Power model `v = L + c|t|^{−p}` through three points (all `t < 0`).
fn fit_power(t: [f64; 3], v: [f64; 3]) -> Option<(f64, f64, f64)> {
    if t.iter().any(|x| *x >= 0.0) {
        return None;
    }
    let a = t.map(|x| x.abs());
    let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
    let r = d2 / d1;
    let limit = (a[2] / a[1]).ln() / (a[1] / a[0]).ln();
    if !(r > 0.0 && r < limit) {
        return None;
    }
    let ratio = |p: f64| (a[2].powf(-p) - a[1].powf(-p)) / (a[1].powf(-p) - a[0].powf(-p));
    let (mut lo, mut hi) = (1e-12, 1.0);
    while ratio(hi) > r {
        hi *= 2.0;
        if hi > 1e4 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let c = d2 / (a[2].powf(-p) - a[1].powf(-p));
    let l = v[2] - c * a[2].powf(-p);
    l.is_finite().then_some((l, c, p))
}

/// Limit of `values` as `ts → −∞` with an uncertainty.
///
/// When the last two differences share a sign, an exponential model
/// `L + c e^{κt}` and a power model `L + c|t|^{−p}` are fitted through the last
/// three points; with four or more points the model that better predicts the
/// preceding point is kept. The uncertainty is the distance from `L` to the
/// last value. Otherwise the last value is returned with uncertainty
/// `|last − previous|`.
pub fn extrapolate_limit(ts: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if ts.len() != values.len() {
        return Err(Error::InvalidArgument(
            "ts and values differ in length".into(),
        ));
    }
    if ts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 samples, got {}",
            ts.len()
        )));
    }
    if ts.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "ts must be strictly decreasing".into(),
        ));
    }
    let m = ts.len();
    let t = [ts[m - 3], ts[m - 2], ts[m - 1]];
    let v = [values[m - 3], values[m - 2], values[m - 1]];
    let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
    let scale = v.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    if d1.abs() <= 1e-14 * scale && d2.abs() <= 1e-14 * scale {
        return Ok((v[2], d2.abs()));
    }
    if d1 * d2 > 0.0 {
        let exp = fit_exponential(t, v);
        let pow = fit_power(t, v);
        let chosen = match (exp, pow) {
            (Some(e), Some(p)) if m >= 4 => {
                let t0 = ts[m - 4];
                let pe = e.0 + e.1 * (e.2 * t0).exp();
                let pp = p.0 + p.1 * t0.abs().powf(-p.2);
                if (pp - values[m - 4]).abs() < (pe - values[m - 4]).abs() {
                    p.0
                } else {
                    e.0
                }
            }
            (Some(e), _) => e.0,
            (None, Some(p)) => p.0,
            (None, None) => return Ok((v[2], d2.abs())),
        };
        return Ok((chosen, (chosen - v[2]).abs()));
    }
    Ok((v[2], d2.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn volumes() {
        let one = |_: &CpnPoint| Ok(1.0);
        let t = integrate_cpn(one, 1, &IntegrationScheme::tensor(8)).unwrap();
        assert!((t.value - PI).abs() < 1e-12);
        for n in 1..=3 {
            let e = integrate_cpn(one, n, &IntegrationScheme::mc(4000, 1)).unwrap();
            assert!((e.value - PI.powi(n as i32)).abs() < 1e-12);
        }
        let disc =
            integrate_shell(|_| Ok(1.0), 0, 0.0, 1.0, &IntegrationScheme::mc(4000, 2)).unwrap();
        assert!((disc.value - PI).abs() < 1e-12);
        let ball =
            integrate_shell(|_| Ok(1.0), 1, 0.0, 1.0, &IntegrationScheme::mc(4000, 2)).unwrap();
        assert!((ball.value - PI * PI / 2.0).abs() < 1e-12);
        assert!(matches!(
            integrate_shell(|_| Ok(1.0), 1, 0.5, 0.2, &IntegrationScheme::mc(4000, 2)),
            Err(Error::BadRadii { .. })
        ));
    }

    #[test]
    fn weighted_proposal_is_exact_for_constants_and_unbiased() {
        let s = IntegrationScheme::mc(20_000, 5);
        let f = |p: &CpnPoint| Ok(vec![1.0, p.z[0].norm_sqr()]);
        let e = integrate_cpn_vec(2, &s, 30.0, Symmetry::default(), 2, f).unwrap();
        assert!((e[0].value - PI * PI).abs() < 1e-9);
        // ∫|z⁰|² ω² / π² = 1/3
        assert!(
            (e[1].value - PI * PI / 3.0).abs() < 3.0 * e[1].stderr + 1e-9,
            "{:?}",
            e[1]
        );
    }

    #[test]
    fn extrapolation_examples() {
        assert_eq!(
            extrapolate_limit(&[-1.0, -2.0, -3.0], &[7.0; 3]).unwrap(),
            (7.0, 0.0)
        );
        let ts = [-4.0, -8.0, -16.0];
        let v: Vec<f64> = ts.iter().map(|t: &f64| 2.0 + t.exp()).collect();
        let (l, u) = extrapolate_limit(&ts, &v).unwrap();
        assert!((l - 2.0).abs() < 1e-2 && u < 1e-2);
        let (l, u) = extrapolate_limit(&[-1.0, -2.0, -3.0, -4.0], &[1.0, 2.0, 1.0, 2.0]).unwrap();
        assert_eq!((l, u), (2.0, 1.0));
        assert!(matches!(
            extrapolate_limit(&[-1.0, -2.0], &[1.0, 1.0]),
            Err(Error::InsufficientData(_))
        ));
    }
}
