//! Closed-form evaluation, transversal data and finite-difference oracles.

use serde::Serialize;

use super::{FunctionSpec, PolyTerm, Profile};
use crate::geometry::{
    fs_metric_at, hopf_to_ambient, transversal_vectors, AmbientPoint, HopfPoint,
};
use crate::linalg::{hermitian_eigenvalues, CMat, CVec};
use crate::quadrature::{mixture_sphere_points, purpose, uniforms};
use crate::{Error, Result, C64};

/// Value, gradient `∂u/∂z^j` and complex Hessian `∂²u/∂z^j∂z̄^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientEval {
    pub value: f64,
    pub grad: CVec,
    pub hess: CMat,
}

impl AmbientEval {
    fn scaled(self, c: f64) -> Self {
        Self {
            value: c * self.value,
            grad: self.grad * C64::new(c, 0.0),
            hess: self.hess * C64::new(c, 0.0),
        }
    }

    /// `φ∘u` for a scalar profile with derivatives `(φ, φ′, φ″)` at `u`.
    fn compose(self, phi: (f64, f64, f64)) -> Self {
        let (p0, p1, p2) = phi;
        let m = self.grad.len();
        let hess = CMat::from_fn(m, m, |j, k| {
            self.hess[(j, k)] * p1 + self.grad[j] * self.grad[k].conj() * p2
        });
        Self {
            value: p0,
            grad: self.grad * C64::new(p1, 0.0),
            hess,
        }
    }

    /// `r∂_r u = 2 Re Σ z^j ∂_j u`.
    pub fn radial_derivative(&self, z: &[C64]) -> f64 {
        2.0 * z
            .iter()
            .zip(self.grad.iter())
            .map(|(a, b)| a * b)
            .sum::<C64>()
            .re
    }
}

/// Transversal data at a Hopf chart point: `u_t(ζ)`, `u̇_t = r∂_r u` and the
/// chart Hessian `H_{αβ̄} = ∂²u_t/∂ζ^α∂ζ̄^β`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalEval {
    pub u_t: f64,
    pub u_dot: f64,
    pub h: CMat,
    /// `Θ₂ = u̇G + H`.
    pub theta2: CMat,
}

fn zero_cvec(m: usize) -> CVec {
    CVec::zeros(m)
}

/// `1/c` without forming `|c|²`, which underflows below `|c| ≈ 1e-154`.
fn recip(c: C64) -> C64 {
    C64::from_polar(1.0 / c.norm(), -c.arg())
}

/// `u = (scale/2) log Σ_i w_i Π_k |z^k|^{2e_{ik}}` with `e = 0` or `e ≥ 1`.
fn toric(exps: &[Vec<f64>], log_w: &[f64], scale: f64, z: &[C64]) -> Result<AmbientEval> {
    let m = z.len();
    let ln_abs: Vec<f64> = z.iter().map(|c| c.norm().ln()).collect();
    let log_t = |i: usize, drop: Option<usize>| -> f64 {
        let mut s = log_w[i];
        for k in 0..m {
            let e = exps[i][k];
            if e != 0.0 && Some(k) != drop {
                s += 2.0 * e * ln_abs[k];
            }
        }
        s
    };
    for (k, c) in z.iter().enumerate() {
        if c.norm() == 0.0 && exps.iter().any(|r| r[k] > 0.0 && r[k] < 1.0) {
            return Err(Error::OutsideDomain(format!(
                "|z^{k}|^(2e) with 0<e<1 is not C² at z^{k} = 0"
            )));
        }
    }
    let logs: Vec<f64> = (0..exps.len()).map(|i| log_t(i, None)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::OutsideDomain("all monomials vanish (origin)".into()));
    }
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    let norm = |l: f64| (l - top).exp() / sum;
    // Probabilities p_i = T_i/S; the Hessian is the p-covariance of the
    // vectors (e_ij/z^j)_j, written without cancellation.
    let p: Vec<f64> = logs.iter().map(|&l| norm(l)).collect();
    let mean: Vec<f64> = (0..m)
        .map(|j| (0..exps.len()).map(|i| p[i] * exps[i][j]).sum())
        .collect();
    let half = 0.5 * scale;
    let mut a = zero_cvec(m);
    let mut hess = CMat::zeros(m, m);
    for j in 0..m {
        if z[j].norm() == 0.0 {
            // only the factor-dropped terms with e_ij = 1 survive
            let d: f64 = (0..exps.len())
                .filter(|&i| exps[i][j] == 1.0)
                .map(|i| norm(log_t(i, Some(j))))
                .sum();
            hess[(j, j)] = C64::new(half * d, 0.0);
            continue;
        }
        a[j] = recip(z[j]) * mean[j];
        for k in 0..m {
            if z[k].norm() == 0.0 {
                continue;
            }
            let cov: f64 = (0..exps.len())
                .map(|i| p[i] * (exps[i][j] - mean[j]) * (exps[i][k] - mean[k]))
                .sum();
            hess[(j, k)] = recip(z[j]) * recip(z[k]).conj() * (cov * half);
        }
    }
    Ok(AmbientEval {
        value: half * (top + sum.ln()),
        grad: a * C64::new(half, 0.0),
        hess,
    })
}

/// `½ log |z|²` with its derivatives.
fn half_log_norm(z: &[C64]) -> AmbientEval {
    let m = z.len();
    let q: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let grad = CVec::from_fn(m, |j, _| z[j].conj() / (2.0 * q));
    let hess = CMat::from_fn(m, m, |j, k| {
        let d = if j == k { 1.0 / q } else { 0.0 };
        (C64::new(d, 0.0) - z[j].conj() * z[k] / (q * q)) * 0.5
    });
    AmbientEval {
        value: 0.5 * q.ln(),
        grad,
        hess,
    }
}

fn sqrt_profile(s: f64) -> Result<(f64, f64, f64)> {
    if s > -1.0 {
        return Err(Error::OutsideDomain(format!(
            "sqrt_compose needs F ≤ −1, got F = {s}"
        )));
    }
    let r = (-s).sqrt();
    Ok((-r, 0.5 / r, 0.25 / (r * r * r)))
}

/// `∂^{a}` of `z^e` as `(coefficient, exponent)`.
fn d_monomial(e: &[u32], j: usize) -> Option<(f64, Vec<u32>)> {
    if e[j] == 0 {
        return None;
    }
    let mut e2 = e.to_vec();
    e2[j] -= 1;
    Some((e[j] as f64, e2))
}

fn monomial(z: &[C64], e: &[u32], conj: bool) -> C64 {
    z.iter().zip(e).fold(C64::new(1.0, 0.0), |acc, (c, &k)| {
        let c = if conj { c.conj() } else { *c };
        acc * c.powu(k)
    })
}

fn smooth_poly(terms: &[PolyTerm], z: &[C64]) -> AmbientEval {
    let m = z.len();
    // P = Σ c z^α z̄^β; ∂_j P, ∂̄_j P and ∂_j∂̄_k P.
    let mut p = C64::new(0.0, 0.0);
    let mut dp = zero_cvec(m);
    let mut dbp = zero_cvec(m);
    let mut ddp = CMat::zeros(m, m);
    for t in terms {
        let za = monomial(z, &t.z_exp, false);
        let zb = monomial(z, &t.zbar_exp, true);
        p += za * zb * t.coeff;
        for j in 0..m {
            if let Some((c, e)) = d_monomial(&t.z_exp, j) {
                dp[j] += monomial(z, &e, false) * zb * (c * t.coeff);
                for k in 0..m {
                    if let Some((c2, e2)) = d_monomial(&t.zbar_exp, k) {
                        ddp[(j, k)] +=
                            monomial(z, &e, false) * monomial(z, &e2, true) * (c * c2 * t.coeff);
                    }
                }
            }
            if let Some((c, e)) = d_monomial(&t.zbar_exp, j) {
                dbp[j] += za * monomial(z, &e, true) * (c * t.coeff);
            }
        }
    }
    let grad = CVec::from_fn(m, |j, _| (dp[j] + dbp[j].conj()) * 0.5);
    let hess = CMat::from_fn(m, m, |j, k| (ddp[(j, k)] + ddp[(k, j)].conj()) * 0.5);
    AmbientEval {
        value: p.re,
        grad,
        hess,
    }
}

fn eval_inner(f: &FunctionSpec, z: &[C64]) -> Result<AmbientEval> {
    match f {
        FunctionSpec::Radial { profile, c } => {
            let base = half_log_norm(z);
            match profile {
                Profile::Log => Ok(base.scaled(*c)),
                Profile::SqrtLog => {
                    let phi = sqrt_profile(base.value)?;
                    Ok(base.compose(phi).scaled(*c))
                }
            }
        }
        FunctionSpec::LogLinear { a } => {
            let m = z.len();
            let w: Vec<C64> = a
                .iter()
                .map(|row| row.iter().zip(z).map(|(x, c)| c * *x).sum())
                .collect();
            let q: f64 = w.iter().map(|c| c.norm_sqr()).sum();
            let dq = CVec::from_fn(m, |j, _| (0..m).map(|i| w[i].conj() * a[i][j]).sum::<C64>());
            let grad = dq.clone() / C64::new(2.0 * q, 0.0);
            let hess = CMat::from_fn(m, m, |j, k| {
                let ata: f64 = (0..m).map(|i| a[i][j] * a[i][k]).sum();
                (C64::new(ata / q, 0.0) - dq[j] * dq[k].conj() / (q * q)) * 0.5
            });
            Ok(AmbientEval {
                value: 0.5 * q.ln(),
                grad,
                hess,
            })
        }
        FunctionSpec::MonomialIdeal { m, w } => {
            let log_w: Vec<f64> = w.iter().map(|x| x.ln()).collect();
            toric(m, &log_w, 1.0, z)
        }
        FunctionSpec::LseToric { a, beta } => {
            let exps: Vec<Vec<f64>> = (0..a.len())
                .map(|i| {
                    (0..a.len())
                        .map(|k| if k == i { beta * a[i] } else { 0.0 })
                        .collect()
                })
                .collect();
            toric(&exps, &vec![0.0; a.len()], 1.0 / beta, z)
        }
        FunctionSpec::SqrtCompose(inner) => {
            let base = eval_inner(inner, z)?;
            let phi = sqrt_profile(base.value)?;
            Ok(base.compose(phi))
        }
        FunctionSpec::Scale { c, inner } => Ok(eval_inner(inner, z)?.scaled(*c)),
        FunctionSpec::SmoothPoly { terms } => Ok(smooth_poly(terms, z)),
    }
}

/// Closed-form value, gradient and complex Hessian at `z`.
pub fn eval_ambient(f: &FunctionSpec, z: &AmbientPoint) -> Result<AmbientEval> {
    if let Some(d) = f.ambient_dim() {
        if d != z.z.len() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: z.z.len(),
            });
        }
    }
    if f.is_catalog_member() && z.norm_sqr() == 0.0 {
        return Err(Error::ZeroPoint);
    }
    let e = eval_inner(f, &z.z)?;
    if !e.value.is_finite()
        || e.grad
            .iter()
            .chain(e.hess.iter())
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(Error::EvalFailure {
            location: format!("{:?}", z.z),
            reason: "non-finite derivative".into(),
        });
    }
    Ok(e)
}

fn require_invariant(f: &FunctionSpec) -> Result<()> {
    if f.is_s1_invariant() {
        Ok(())
    } else {
        Err(Error::NotInvariant(format!(
            "`{f}` has unbalanced z/z̄ degrees"
        )))
    }
}

/// Transversal data from the ambient chain rule: with `V_α` from
/// [`transversal_vectors`], `H = V^T (∂∂̄u) V̄ − u̇ G`.
pub fn eval_transversal(
    f: &FunctionSpec,
    t: f64,
    zeta: &[C64],
    chart: usize,
) -> Result<TransversalEval> {
    require_invariant(f)?;
    let (z, _) = transversal_vectors(t, zeta, chart)?;
    let e = eval_ambient(f, &z)?;
    transversal_from_ambient(&e, t, zeta, chart)
}

/// Transversal data from ambient derivatives `e` taken at `z(t, 0, ζ)`.
pub fn transversal_from_ambient(
    e: &AmbientEval,
    t: f64,
    zeta: &[C64],
    chart: usize,
) -> Result<TransversalEval> {
    let (z, vs) = transversal_vectors(t, zeta, chart)?;
    let u_dot = e.radial_derivative(&z.z);
    let n = zeta.len();
    let g = fs_metric_at(zeta).g;
    let hv: Vec<CVec> = vs.iter().map(|v| &e.hess * v.map(|c| c.conj())).collect();
    let theta2 = CMat::from_fn(n, n, |a, b| {
        vs[a].iter().zip(hv[b].iter()).map(|(x, y)| x * y).sum()
    });
    let theta2 = crate::linalg::hermitian_part(&theta2);
    let h = &theta2 - &g * C64::new(u_dot, 0.0);
    Ok(TransversalEval {
        u_t: e.value,
        u_dot,
        h,
        theta2,
    })
}

/// Gradient and complex Hessian of a real function of complex variables by
/// central differences with one Richardson halving; `h` is the absolute step.
pub fn fd_gradient_hessian(
    value: &dyn Fn(&[C64]) -> Result<f64>,
    z: &[C64],
    h: f64,
) -> Result<(CVec, CMat)> {
    let once = |h: f64| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let m = 2 * z.len();
        let at = |shift: &[(usize, f64)]| -> Result<f64> {
            let mut w = z.to_vec();
            for &(i, s) in shift {
                if i % 2 == 0 {
                    w[i / 2].re += s;
                } else {
                    w[i / 2].im += s;
                }
            }
            value(&w)
        };
        let f0 = at(&[])?;
        let mut g = vec![0.0; m];
        let mut hs = vec![vec![0.0; m]; m];
        for i in 0..m {
            let (fp, fm) = (at(&[(i, h)])?, at(&[(i, -h)])?);
            g[i] = (fp - fm) / (2.0 * h);
            hs[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..i {
                let v =
                    (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                        + at(&[(i, -h), (j, -h)])?)
                        / (4.0 * h * h);
                hs[i][j] = v;
                hs[j][i] = v;
            }
        }
        Ok((g, hs))
    };
    let (g1, h1) = once(h)?;
    let (g2, h2) = once(h / 2.0)?;
    let rich = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    let m = z.len();
    let grad = CVec::from_fn(m, |j, _| {
        let gx = rich(g1[2 * j], g2[2 * j]);
        let gy = rich(g1[2 * j + 1], g2[2 * j + 1]);
        C64::new(0.5 * gx, -0.5 * gy)
    });
    let d = |a: usize, b: usize| rich(h1[a][b], h2[a][b]);
    let hess = CMat::from_fn(m, m, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        C64::new(
            0.25 * (d(xj, xk) + d(yj, yk)),
            0.25 * (d(xj, yk) - d(yj, xk)),
        )
    });
    Ok((grad, hess))
}

/// Transversal data by finite differences of `ζ ↦ u(z(t,0,ζ))`, with step
/// `h_rel·max(1, |ζ|)`; `u̇` is a central difference in `t`.
pub fn eval_transversal_fd(
    f: &FunctionSpec,
    t: f64,
    zeta: &[C64],
    chart: usize,
    h_rel: f64,
) -> Result<TransversalEval> {
    require_invariant(f)?;
    let u_at = |t: f64, zeta: &[C64]| -> Result<f64> {
        let z = hopf_to_ambient(&HopfPoint {
            t,
            theta: 0.0,
            zeta: zeta.to_vec(),
            chart,
        })?;
        Ok(eval_ambient(f, &z)?.value)
    };
    let scale = zeta
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    let (_, h) = fd_gradient_hessian(&|w| u_at(t, w), zeta, h_rel * scale)?;
    let g = fs_metric_at(zeta).g;
    let ht = h_rel;
    let d1 = (u_at(t + ht, zeta)? - u_at(t - ht, zeta)?) / (2.0 * ht);
    let d2 = (u_at(t + ht / 2.0, zeta)? - u_at(t - ht / 2.0, zeta)?) / ht;
    let u_dot = (4.0 * d2 - d1) / 3.0;
    let theta2 = &h + &g * C64::new(u_dot, 0.0);
    Ok(TransversalEval {
        u_t: u_at(t, zeta)?,
        u_dot,
        h,
        theta2,
    })
}

/// Outcome of [`psh_check`].
#[derive(Debug, Clone, Serialize)]
pub struct PshReport {
    pub points: usize,
    /// Smallest eigenvalue of `|z|²·∂∂̄u` relative to its spectral scale.
    pub min_scaled_eigenvalue: f64,
    pub worst_point: Vec<(f64, f64)>,
    /// Largest `|u(e^{iθ}z) − u(z)|/max(1,|u|)`.
    pub invariance_residual: f64,
}

/// Plurisubharmonicity and S¹-invariance at `samples` points of `B₁*` with
/// `t = log|z|` uniform in `[−40, −1.5]` and directions drawn from the
/// tail-aware mixture.
pub fn psh_check(f: &FunctionSpec, n: usize, samples: usize, seed: u64) -> Result<PshReport> {
    f.check_dim(n)?;
    let dirs = mixture_sphere_points(n, samples, seed, purpose::CHECK, 60.0);
    let us = uniforms(2 * samples, seed, purpose::CHECK + 100);
    let mut rep = PshReport {
        points: samples,
        min_scaled_eigenvalue: f64::INFINITY,
        worst_point: Vec::new(),
        invariance_residual: 0.0,
    };
    let mut inv_witness = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let t = -1.5 - 38.5 * us[2 * i];
        let z = AmbientPoint::new(d.iter().map(|c| c * t.exp()).collect());
        let e = eval_ambient(f, &z)?;
        let eig = hermitian_eigenvalues(&(e.hess.clone() * C64::new(z.norm_sqr(), 0.0)));
        let scale = eig.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let rel = eig[0] / scale;
        if rel < rep.min_scaled_eigenvalue {
            rep.min_scaled_eigenvalue = rel;
            rep.worst_point = z.z.iter().map(|c| (c.re, c.im)).collect();
        }
        let theta = 2.0 * std::f64::consts::PI * us[2 * i + 1];
        let rotated = eval_ambient(f, &z.rotate(theta))?.value;
        let res = (rotated - e.value).abs() / e.value.abs().max(1.0);
        if res > rep.invariance_residual {
            rep.invariance_residual = res;
            inv_witness = z.z.iter().map(|c| (c.re, c.im)).collect();
        }
    }
    if rep.min_scaled_eigenvalue < -crate::tolerances::PSH_EIG_REL {
        return Err(Error::check(
            "plurisubharmonicity",
            -rep.min_scaled_eigenvalue,
            crate::tolerances::PSH_EIG_REL,
            format!("z={:?}", rep.worst_point),
        ));
    }
    if rep.invariance_residual > crate::tolerances::INVARIANCE_ABS {
        return Err(Error::check(
            "S¹-invariance",
            rep.invariance_residual,
            crate::tolerances::INVARIANCE_ABS,
            format!("z={inv_witness:?}"),
        ));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::parse_spec;

    fn pt(parts: &[(f64, f64)]) -> AmbientPoint {
        AmbientPoint::from_parts(parts)
    }

    #[test]
    fn radial_and_quadratic_examples() {
        let f = parse_spec("radial(profile=log,c=2)").unwrap();
        let z = pt(&[(0.3, 0.1), (-0.2, 0.4)]);
        let e = eval_ambient(&f, &z).unwrap();
        assert!((e.value - 2.0 * z.norm().ln()).abs() < 1e-15);
        assert!(e.hess.determinant().norm() < 1e-12);
        let q = parse_spec("smooth_poly(terms=[(1,[1,0],[1,0]),(1,[0,1],[0,1])])").unwrap();
        let e = eval_ambient(&q, &z).unwrap();
        assert!((e.hess - CMat::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn monomial_derivatives_match_fd_near_axis() {
        let f = parse_spec("monomial_ideal(m=[[1,0],[0,2]],w=[1,1])").unwrap();
        let z = pt(&[((-5.0f64).exp(), 0.0), (0.0, 0.0)]);
        let e = eval_ambient(&f, &z).unwrap();
        let (g, h) = fd_gradient_hessian(
            &|w| Ok(eval_ambient(&f, &AmbientPoint::new(w.to_vec()))?.value),
            &z.z,
            1e-3 * z.norm(),
        )
        .unwrap();
        let scale = 1.0 / z.norm_sqr();
        assert!((&g - &e.grad).norm() <= 1e-6 * e.grad.norm());
        assert!((&h - &e.hess).norm() <= 1e-6 * scale, "{h} vs {}", e.hess);
    }

    #[test]
    fn transversal_examples() {
        let r = parse_spec("radial(profile=log,c=1.5)").unwrap();
        let tv = eval_transversal(&r, -3.0, &[C64::new(0.4, -0.7)], 0).unwrap();
        assert!((tv.u_dot - 1.5).abs() < 1e-12 && tv.h.norm() < 1e-12);
        let l = parse_spec("loglinear(A=[[1,1],[0,1]])").unwrap();
        let tv = eval_transversal(&l, -7.0, &[C64::new(0.2, 0.5)], 1).unwrap();
        assert!((tv.u_dot - 1.0).abs() < 1e-12);
        let m = parse_spec("monomial_ideal(m=[[1,0],[0,2]],w=[1,1])").unwrap();
        let tv = eval_transversal(&m, -10.0, &[C64::new(0.0, 0.0)], 1).unwrap();
        assert!((tv.u_dot - 2.0).abs() < 1e-3);
        let p = parse_spec("smooth_poly(terms=[(1,[2,0],[0,0])])").unwrap();
        assert!(matches!(
            eval_transversal(&p, -1.0, &[C64::new(0.0, 0.0)], 0),
            Err(Error::NotInvariant(_))
        ));
    }

    #[test]
    fn psh_examples() {
        let neg = parse_spec("smooth_poly(terms=[(-1,[1,0],[1,0]),(-1,[0,1],[0,1])])").unwrap();
        assert!(matches!(
            psh_check(&neg, 1, 50, 1),
            Err(Error::CheckFailed { .. })
        ));
        let m = parse_spec("monomial_ideal(m=[[1,0],[0,2]],w=[1,1])").unwrap();
        let rep = psh_check(&m, 1, 200, 1).unwrap();
        assert!(rep.invariance_residual <= 1e-10);
        let z = pt(&[(0.01, 0.02), (0.03, -0.01)]);
        let a = eval_ambient(&m, &z).unwrap().value;
        let b = eval_ambient(&m, &z.rotate(1.3)).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sqrt_compose_domain() {
        let s = parse_spec("sqrt_compose(radial(profile=log,c=1))").unwrap();
        assert!(matches!(
            eval_ambient(&s, &pt(&[(0.9, 0.0), (0.0, 0.0)])),
            Err(Error::OutsideDomain(_))
        ));
        let tv = eval_transversal(&s, -16.0, &[C64::new(0.3, 0.0)], 0).unwrap();
        assert!((tv.u_dot - 0.125).abs() < 1e-12);
    }
}
