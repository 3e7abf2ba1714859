//! Energies `E_{n,k}(u_t) = ∫ u̇_t^{n+1−k} ω^{n−k}∧(i∂∂̄u_t)^k`, the
//! pluricomplex energy `𝓔(u_t) = ∫(−u_t)(i∂∂̄u_t)ⁿ`, concavity of the
//! primitive of the boundary mass along `t`, and the zero-mass statement.

use std::f64::consts::PI;

use serde::Serialize;

use crate::functions::FunctionSpec;
use crate::linalg::binomial;
use crate::mass::{check_t_grid, slice, slices, transversal_state, Slice};
use crate::quadrature::{integrate_cpn_vec, Estimate, IntegrationScheme};
use crate::tolerances::{
    depth_for, ENERGY_DERIVATIVE_REL, ROUNDING_REL, SIGMAS, ZERO_MASS_THRESHOLD,
};
use crate::{Error, Result};

/// Step of the centred difference of `𝓔` in `t`.
const ENERGY_STEP: f64 = 1e-2;
/// Relative floor of the concavity tolerance, covering the truncation error
/// of deterministic rules.
const QUADRATURE_FLOOR: f64 = 1e-6;

/// Energies along a `t` grid.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyTrace {
    pub t_grid: Vec<f64>,
    /// `E_{n,0..=n}` per `t`.
    #[serde(rename = "E")]
    pub e: Vec<Vec<Estimate>>,
    /// Normalized boundary mass per `t`.
    #[serde(rename = "M_prime")]
    pub m_prime: Vec<Estimate>,
    /// Pluricomplex energy per `t`.
    #[serde(rename = "calE")]
    pub cal_e: Vec<Estimate>,
}

impl EnergyTrace {
    pub fn from_slices(sl: &[Slice]) -> Self {
        Self {
            t_grid: sl.iter().map(|s| s.t).collect(),
            e: sl.iter().map(|s| s.energies.clone()).collect(),
            m_prime: sl.iter().map(|s| s.mass).collect(),
            cal_e: sl.iter().map(|s| s.pluricomplex).collect(),
        }
    }

    /// `π^{−n} Σ_k C(n+1,k) E_{n,k}` per `t`; equals the boundary mass.
    pub fn recombined(&self) -> Vec<f64> {
        self.e
            .iter()
            .map(|row| {
                let n = row.len() - 1;
                row.iter()
                    .enumerate()
                    .map(|(k, e)| binomial(n + 1, k) * e.value)
                    .sum::<f64>()
                    / PI.powi(n as i32)
            })
            .collect()
    }
}

/// Energies along a decreasing grid of `t ≤ −1`.
pub fn energy_trace(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
) -> Result<EnergyTrace> {
    Ok(EnergyTrace::from_slices(&slices(f, n, t_grid, scheme)?))
}

/// `E_{n,0}, …, E_{n,n}` at `t ≤ −1`.
pub fn energy_terms(
    f: &FunctionSpec,
    n: usize,
    t: f64,
    scheme: &IntegrationScheme,
) -> Result<Vec<Estimate>> {
    check_t_grid(&[t])?;
    Ok(slice(f, n, t, scheme)?.energies)
}

/// Pluricomplex energy with its derivative cross-check.
#[derive(Debug, Clone, Serialize)]
pub struct PluricomplexEnergy {
    pub t: f64,
    #[serde(rename = "calE")]
    pub value: Estimate,
    /// `[𝓔(t+h) − 𝓔(t−h)]/2h`, `h = 10⁻²`, on common samples.
    pub derivative: Estimate,
    /// `(n+1)E_{n,n}(t)`.
    pub top_energy: Estimate,
    /// Pointwise `d𝓔/dt + (n+1)E_{n,n}`.
    pub residual: Estimate,
}

/// `𝓔(u_t) = ∫(−u_t)(i∂∂̄u_t)ⁿ` at `t ≤ −1`, checking
/// `d𝓔/dt = −(n+1)E_{n,n}` to relative accuracy `10⁻³` plus `3σ`.
pub fn pluricomplex_energy(
    f: &FunctionSpec,
    n: usize,
    t: f64,
    scheme: &IntegrationScheme,
) -> Result<PluricomplexEnergy> {
    f.check_dim(n)?;
    f.require_catalog()?;
    check_t_grid(&[t])?;
    let h = ENERGY_STEP;
    let est = integrate_cpn_vec(
        n,
        scheme,
        depth_for(t - h),
        f.quadrature_symmetry(),
        4,
        |p| {
            let energy_at = |s: f64| -> Result<(f64, f64)> {
                let st = transversal_state(f, s, &p.zeta, p.chart)?;
                let top = st.ratios()[n];
                Ok((-st.u_t * top, st.u_dot * top))
            };
            let (e0, top) = energy_at(t)?;
            let (ep, _) = energy_at(t + h)?;
            let (em, _) = energy_at(t - h)?;
            let d = (ep - em) / (2.0 * h);
            let k = (n + 1) as f64 * top;
            Ok(vec![e0, d, k, d + k])
        },
    )?;
    let out = PluricomplexEnergy {
        t,
        value: est[0],
        derivative: est[1],
        top_energy: est[2],
        residual: est[3],
    };
    let scale = out.derivative.value.abs().max(out.top_energy.value.abs());
    let tol = ENERGY_DERIVATIVE_REL * scale + SIGMAS * out.residual.stderr + ROUNDING_REL;
    if out.residual.value.abs() > tol {
        return Err(Error::check(
            "d𝓔/dt = −(n+1)E_{n,n}",
            out.residual.value.abs(),
            tol,
            format!("t={t}"),
        ));
    }
    Ok(out)
}

/// Shape of the primitive of `−mass` along `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Concavity {
    /// Second differences vanish within tolerance: a geodesic ray.
    Affine,
    Concave,
}

/// Outcome of [`concavity_check`].
#[derive(Debug, Clone, Serialize)]
pub struct ConcavityReport {
    /// Increasing `t`.
    pub t_grid: Vec<f64>,
    pub mass: Vec<Estimate>,
    /// Trapezoid antiderivative of `−mass`, zero at the largest `t`.
    pub primitive: Vec<f64>,
    /// Divided second differences of `primitive`.
    pub second_differences: Vec<f64>,
    /// `3σ` tolerance per second difference.
    pub tolerances: Vec<f64>,
    pub verdict: Concavity,
}

/// Concavity in `t` of the primitive of `−mass(t)`, which holds because the
/// boundary mass is non-decreasing in `t`. Fails when a second difference
/// exceeds its `3σ` tolerance.
pub fn concavity_check(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
) -> Result<ConcavityReport> {
    if t_grid.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 t values, got {}",
            t_grid.len()
        )));
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    check_t_grid(&grid)?;
    let sl = slices(f, n, &grid, scheme)?;
    grid.reverse();
    let mass: Vec<Estimate> = sl.iter().rev().map(|s| s.mass).collect();
    let m = grid.len();
    let mut primitive = vec![0.0; m];
    for i in (0..m - 1).rev() {
        primitive[i] =
            primitive[i + 1] + 0.5 * (grid[i + 1] - grid[i]) * (mass[i].value + mass[i + 1].value);
    }
    let mut second = Vec::with_capacity(m - 2);
    let mut tols = Vec::with_capacity(m - 2);
    for i in 0..m - 2 {
        let (h0, h1) = (grid[i + 1] - grid[i], grid[i + 2] - grid[i + 1]);
        let d0 = (primitive[i + 1] - primitive[i]) / h0;
        let d1 = (primitive[i + 2] - primitive[i + 1]) / h1;
        let span = 0.5 * (h0 + h1);
        second.push((d1 - d0) / span);
        let sig = mass[i].stderr.hypot(mass[i + 2].stderr) / (2.0 * span);
        let scale = mass[i..i + 3]
            .iter()
            .fold(1.0f64, |a, e| a.max(e.value.abs()));
        tols.push(SIGMAS * sig + QUADRATURE_FLOOR * scale);
    }
    if let Some((i, (d, tol))) = second
        .iter()
        .zip(&tols)
        .enumerate()
        .find(|(_, (d, tol))| **d > **tol)
    {
        return Err(Error::check(
            "concavity of the mass primitive",
            *d,
            *tol,
            format!("t={}", grid[i + 1]),
        ));
    }
    let verdict = if second.iter().zip(&tols).all(|(d, tol)| d.abs() <= *tol) {
        Concavity::Affine
    } else {
        Concavity::Concave
    };
    Ok(ConcavityReport {
        t_grid: grid,
        mass,
        primitive,
        second_differences: second,
        tolerances: tols,
        verdict,
    })
}

/// Outcome of [`zero_mass_energy_check`].
#[derive(Debug, Clone, Serialize)]
pub struct ZeroMassReport {
    pub t_grid: Vec<f64>,
    pub mass: Vec<Estimate>,
    /// `π^{−n} Σ_{k≥1} C(n+1,k) E_{n,k}` per `t`.
    pub higher: Vec<Estimate>,
}

/// For a member with vanishing Lelong number: along the decreasing grid the
/// boundary mass and the `k ≥ 1` energy part shrink in magnitude (up to
/// `3σ`) and end below `10⁻²`.
pub fn zero_mass_energy_check(
    f: &FunctionSpec,
    n: usize,
    t_grid: &[f64],
    scheme: &IntegrationScheme,
) -> Result<ZeroMassReport> {
    let sl = slices(f, n, t_grid, scheme)?;
    let mass: Vec<Estimate> = sl.iter().map(|s| s.mass).collect();
    let higher: Vec<Estimate> = sl
        .iter()
        .map(|s| {
            let v: f64 = s.per_k[1..].iter().map(|e| e.value).sum();
            let se: f64 = s.per_k[1..].iter().map(|e| e.stderr).sum();
            Estimate {
                value: v,
                stderr: se,
                samples_used: s.mass.samples_used,
            }
        })
        .collect();
    for (name, series) in [("boundary mass", &mass), ("k ≥ 1 energies", &higher)] {
        for (i, w) in series.windows(2).enumerate() {
            let tol = SIGMAS * w[0].stderr.hypot(w[1].stderr) + ROUNDING_REL;
            if w[1].value.abs() > w[0].value.abs() + tol {
                return Err(Error::check(
                    &format!("{name} shrinks as t decreases"),
                    w[1].value.abs() - w[0].value.abs(),
                    tol,
                    format!("t={}", t_grid[i + 1]),
                ));
            }
        }
        let last = series.last().expect("non-empty grid");
        if last.value.abs() > ZERO_MASS_THRESHOLD {
            return Err(Error::check(
                &format!("{name} vanishes"),
                last.value.abs(),
                ZERO_MASS_THRESHOLD,
                format!("t={}", t_grid[t_grid.len() - 1]),
            ));
        }
    }
    Ok(ZeroMassReport {
        t_grid: t_grid.to_vec(),
        mass,
        higher,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::parse_spec;

    #[test]
    fn radial_energies() {
        let f = parse_spec("radial(profile=log,c=2)").unwrap();
        let e = energy_terms(&f, 1, -3.0, &IntegrationScheme::tensor(6)).unwrap();
        assert!((e[0].value - 4.0 * PI).abs() < 1e-9);
        assert!(e[1].value.abs() < 1e-12);
        let p = pluricomplex_energy(&f, 1, -3.0, &IntegrationScheme::tensor(6)).unwrap();
        assert!(p.value.value.abs() < 1e-12);
    }

    #[test]
    fn radial_is_affine_and_guard_fails() {
        let f = parse_spec("radial(profile=log,c=1)").unwrap();
        let r = concavity_check(
            &f,
            1,
            &[-2.0, -4.0, -8.0, -16.0],
            &IntegrationScheme::tensor(6),
        )
        .unwrap();
        assert_eq!(r.verdict, Concavity::Affine);
        assert!(
            zero_mass_energy_check(&f, 1, &[-5.0, -10.0], &IntegrationScheme::tensor(6)).is_err()
        );
    }
}
