//! Adapted unitary frames `e₀ = z/|z|, e₁, …, e_n` and the frame form of
//! the complex Hessian.
//!
//! The coframe is `ω^A = a^A_B dz^B` with `a` unitary, so `e_A` is the
//! conjugate of row `A` of `a` and `∂∂̄u = K_{AB̄} ω^A∧ω̄^B` with
//! `K_{AB̄} = e_A^T (∂∂̄u) ē_B`. Along a sphere `S_r`, `r = e^t`, the coframe
//! `θ^α = e^{−t}ω^α` is the Fubini–Study coframe of ℂPⁿ.
//!
//! Frame derivative scalars follow the lower-index convention: `u_A = ∂u(e_A)`,
//! `u_Ā = conj(u_A)`, and for a scalar field `F` the coefficients of
//! `dF = F_{,0} e^{−t}ω⁰ + F_{,0̄} e^{−t}ω̄⁰ + F_{,α} θ^α + F_{,ᾱ} θ̄^α`.
//! They are obtained by central differences of `w ↦ u_B̄(w)` along the frame
//! directions of the smoothly varying adapted frame.

use serde::Serialize;

use crate::functions::{eval_ambient, FunctionSpec};
use crate::geometry::{ambient_to_hopf, transversal_vectors, AmbientPoint};
use crate::linalg::{hermitian_defect, max_abs, CMat, CVec};
use crate::mass::transversal_state;
use crate::tolerances::{FRAME_FD_STEP, FRAME_RESIDUAL};
use crate::{Error, Result, C64};

/// Adapted unitary frame at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryFrame {
    /// Coframe coefficients: row `A` holds `a^A_B`, so `e_A = conj(row A)`.
    pub a: CMat,
    pub base: AmbientPoint,
    /// Coordinate dropped from the Gram–Schmidt completion.
    pub pivot: usize,
}

impl UnitaryFrame {
    /// Frame vector `e_A`.
    pub fn vector(&self, index: usize) -> CVec {
        self.a.row(index).transpose().map(|c| c.conj())
    }

    /// `max |a a† − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.a.nrows();
        max_abs(&(&self.a * self.a.adjoint() - CMat::identity(m, m)))
    }
}

fn pivot_of(z: &[C64]) -> usize {
    (0..z.len()).fold(0, |p, j| if z[j].norm() > z[p].norm() { j } else { p })
}

/// Frame vectors as rows, `e₀ = w/|w|`, completed by Gram–Schmidt on the
/// standard basis without `pivot` and rotated by the phase of `w^pivot`. The
/// phase factor makes `e_A(λw) = (λ/|λ|) e_A(w)` for every `A`.
fn frame_rows(w: &[C64], pivot: usize) -> Result<CMat> {
    let m = w.len();
    let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroPoint);
    }
    if w[pivot].norm() == 0.0 {
        return Err(Error::OnAxis { index: pivot });
    }
    let phase = w[pivot] / w[pivot].norm();
    let mut rows: Vec<CVec> = vec![CVec::from_fn(m, |j, _| w[j] / norm)];
    for j in (0..m).filter(|&j| j != pivot) {
        let mut v = CVec::zeros(m);
        v[j] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for e in &rows {
                let c: C64 = e.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                v -= e * c;
            }
        }
        let len = v.norm();
        rows.push(v / C64::new(len, 0.0));
    }
    Ok(CMat::from_fn(m, m, |a, j| {
        if a == 0 {
            rows[0][j]
        } else {
            rows[a][j] * phase
        }
    }))
}

/// Adapted frame with `e₀ = z/|z|`; the completion drops the coordinate of
/// largest modulus.
pub fn adapted_frame(z: &AmbientPoint) -> Result<UnitaryFrame> {
    let pivot = pivot_of(&z.z);
    let e = frame_rows(&z.z, pivot)?;
    Ok(UnitaryFrame {
        a: e.map(|c| c.conj()),
        base: z.clone(),
        pivot,
    })
}

/// Coefficients of `∂∂̄u` in the coframe, with the named scalars of the
/// sphere decomposition.
#[derive(Debug, Clone)]
pub struct FrameHessian {
    /// `K_{AB̄}` with `∂∂̄u = K_{AB̄} ω^A∧ω̄^B`.
    pub components: CMat,
    /// `e^t K_{00̄} = u_{0,0̄} + ½u_0̄`.
    pub radial: f64,
    /// `e^t K_{α0̄} = u_{α,0̄}`, the coefficient of `θ^α∧ω̄⁰`.
    pub mixed: Vec<C64>,
    /// `e^{2t} K_{αβ̄} = e^t(u_0̄ δ_{αβ} + u_{αβ̄})`, the coefficient of
    /// `θ^α∧θ̄^β`.
    pub transversal: CMat,
    pub frame: UnitaryFrame,
}

fn split(k: CMat, frame: UnitaryFrame) -> FrameHessian {
    let r = frame.base.norm();
    let n = k.nrows() - 1;
    FrameHessian {
        radial: r * k[(0, 0)].re,
        mixed: (1..=n).map(|a| k[(a, 0)] * r).collect(),
        transversal: k.view((1, 1), (n, n)) * C64::new(r * r, 0.0),
        components: k,
        frame,
    }
}

/// Frame components of the complex Hessian of `f` at `z` by unitary
/// congruence of the ambient Hessian.
pub fn frame_hessian(f: &FunctionSpec, z: &AmbientPoint) -> Result<FrameHessian> {
    let frame = adapted_frame(z)?;
    let e = eval_ambient(f, z)?;
    let k = frame.a.map(|c| c.conj()) * &e.hess * frame.a.transpose();
    Ok(split(k, frame))
}

/// Central difference with one Richardson halving.
fn richardson<T, F>(h: f64, at: F) -> Result<T>
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Clone,
    F: Fn(f64) -> Result<T>,
{
    let d1 = (at(h)? - at(-h)?) * (0.5 / h);
    let d2 = (at(h / 2.0)? - at(-h / 2.0)?) * (1.0 / h);
    Ok(d2 * (4.0 / 3.0) - d1 * (1.0 / 3.0))
}

/// Frame derivative scalars of `u` at a point.
#[derive(Debug, Clone)]
pub struct FrameDerivatives {
    pub frame: UnitaryFrame,
    pub t: f64,
    /// `u_Ā`.
    pub u_bar: CVec,
    /// `u_{C,B̄}` at `(C, B)`: `e^t ∂(u_B̄)(e_C)`.
    pub holo: CMat,
    /// `u_{C̄,B̄}` at `(C, B)`: `e^t ∂̄(u_B̄)(ē_C)`.
    pub anti: CMat,
    /// `u_{αβ̄}`: the `θ^α` coefficient of `∇u_β̄ = du_β̄ − u_γ̄ conj(θ^γ_β)`
    /// with `θ^γ_β = ω^γ_β − ω⁰₀ δ^γ_β`.
    pub transversal: CMat,
    /// Connection matrices `ω^C_A(v)` along `v = e_D` and `v = i e_D`.
    pub connection: Vec<(CMat, CMat)>,
}

impl FrameDerivatives {
    fn n(&self) -> usize {
        self.u_bar.len() - 1
    }
}

/// Frame derivative scalars by central differences of step
/// `fd_step·|z|`, holding the pivot of the base point fixed.
pub fn frame_derivatives(
    f: &FunctionSpec,
    z: &AmbientPoint,
    fd_step: f64,
) -> Result<FrameDerivatives> {
    if !(fd_step > 0.0 && fd_step < 1e-1) {
        return Err(Error::InvalidArgument(format!(
            "fd_step must lie in (0, 0.1), got {fd_step}"
        )));
    }
    let frame = adapted_frame(z)?;
    let m = z.z.len();
    let r = z.norm();
    let h = fd_step * r;
    let pivot = frame.pivot;
    // `u_B̄(w)` and the frame rows at `w`.
    let fields = |w: &[C64]| -> Result<(CVec, CMat)> {
        let rows = frame_rows(w, pivot)?;
        let grad = eval_ambient(f, &AmbientPoint::new(w.to_vec()))?.grad;
        let ub = CVec::from_fn(m, |b, _| {
            rows.row(b)
                .iter()
                .zip(grad.iter())
                .map(|(e, g)| e * g)
                .sum::<C64>()
                .conj()
        });
        Ok((ub, rows))
    };
    let along = |v: &CVec| -> Result<(CVec, CMat)> {
        let at = |s: f64| -> Result<Pair> {
            let w: Vec<C64> = z.z.iter().zip(v.iter()).map(|(a, b)| a + b * s).collect();
            let (ub, rows) = fields(&w)?;
            Ok(Pair(ub, rows))
        };
        let Pair(du, de) = richardson(h, at)?;
        Ok((du, de))
    };
    let (u_bar, _) = fields(&z.z)?;
    let i = C64::new(0.0, 1.0);
    let mut holo = CMat::zeros(m, m);
    let mut anti = CMat::zeros(m, m);
    let mut connection = Vec::with_capacity(m);
    for c in 0..m {
        let e = frame.vector(c);
        let (du, de) = along(&e)?;
        let (dui, dei) = along(&(&e * i))?;
        for b in 0..m {
            holo[(c, b)] = (du[b] - i * dui[b]) * (0.5 * r);
            anti[(c, b)] = (du[b] + i * dui[b]) * (0.5 * r);
        }
        connection.push((&frame.a * de.transpose(), &frame.a * dei.transpose()));
    }
    let n = m - 1;
    let transversal = CMat::from_fn(n, n, |a0, b0| {
        let (al, be) = (a0 + 1, b0 + 1);
        // ω(ē_α) is the (0,1) part of ω evaluated on ē_α.
        let (ce, cie) = &connection[al];
        let w_bar = |g: usize, k: usize| (ce[(g, k)] + i * cie[(g, k)]) * 0.5;
        let mut s = holo[(al, be)];
        for g in 1..m {
            s -= u_bar[g] * w_bar(g, be).conj() * r;
        }
        s + u_bar[be] * w_bar(0, 0).conj() * r
    });
    Ok(FrameDerivatives {
        t: r.ln(),
        frame,
        u_bar,
        holo,
        anti,
        transversal,
        connection,
    })
}

struct Pair(CVec, CMat);

impl std::ops::Sub for Pair {
    type Output = Pair;
    fn sub(self, o: Pair) -> Pair {
        Pair(self.0 - o.0, self.1 - o.1)
    }
}

impl std::ops::Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, s: f64) -> Pair {
        let s = C64::new(s, 0.0);
        Pair(self.0 * s, self.1 * s)
    }
}

impl Clone for Pair {
    fn clone(&self) -> Self {
        Pair(self.0.clone(), self.1.clone())
    }
}

/// Residuals of one frame check, relative to the Hessian scale.
#[derive(Debug, Clone, Serialize)]
pub struct FrameCheck {
    pub point: Vec<(f64, f64)>,
    /// Worst relative residual over the compared components.
    pub residual: f64,
    pub tolerance: f64,
    /// Component attaining `residual`.
    pub worst: String,
    /// Named partial residuals.
    pub parts: Vec<(String, f64)>,
}

fn point_parts(z: &AmbientPoint) -> Vec<(f64, f64)> {
    z.z.iter().map(|c| (c.re, c.im)).collect()
}

fn frame_tolerance(fd_step: f64) -> f64 {
    FRAME_RESIDUAL.max(20.0 * fd_step)
}

fn conclude(
    check: &str,
    z: &AmbientPoint,
    parts: Vec<(String, f64)>,
    tolerance: f64,
) -> Result<FrameCheck> {
    let (worst, residual) = parts.iter().fold((String::new(), 0.0f64), |acc, (k, v)| {
        if *v > acc.1 || v.is_nan() {
            (k.clone(), *v)
        } else {
            acc
        }
    });
    if !(residual <= tolerance) {
        return Err(Error::check(
            check,
            residual,
            tolerance,
            format!("{worst} at z={:?}", point_parts(z)),
        ));
    }
    Ok(FrameCheck {
        point: point_parts(z),
        residual,
        tolerance,
        worst,
        parts,
    })
}

fn block_residual(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

/// Decomposition of `∂∂̄u` in the adapted coframe,
///
/// `∂∂̄u = e^{−t}(u_{0,0̄} + ½u_0̄) ω⁰∧ω̄⁰ + u_{ᾱ,0} ω⁰∧θ̄^α + u_{α,0̄} θ^α∧ω̄⁰
///        + e^t(u_0̄ δ_{αβ} + u_{αβ̄}) θ^α∧θ̄^β`,
///
/// assembled from finite-difference frame scalars and compared with
/// [`frame_hessian`]. Also checks the commutation relations
/// `u_{ᾱ,0̄} = u_{0̄,ᾱ} + ½u_ᾱ` and `u_{ᾱ,0} = u_{0,ᾱ} + ½u_ᾱ`. Residuals are
/// relative to the largest frame component; the tolerance is
/// `max(10⁻⁵, 20·fd_step)`.
pub fn hessian_decomposition_check(
    f: &FunctionSpec,
    z: &AmbientPoint,
    fd_step: f64,
) -> Result<FrameCheck> {
    let fh = frame_hessian(f, z)?;
    let d = frame_derivatives(f, z, fd_step)?;
    let n = d.n();
    let r = z.norm();
    let k = &fh.components;
    let scale = max_abs(k)
        .max(d.u_bar.iter().fold(0.0f64, |a, c| a.max(c.norm())) / r)
        .max(f64::MIN_POSITIVE);
    // u_{ᾱ,0} = e^t ∂̄(u_0)(ē_α) = conj(u_{α,0̄}) because u_0 = conj(u_0̄).
    let assembled = CMat::from_fn(n + 1, n + 1, |a, b| match (a, b) {
        (0, 0) => (d.holo[(0, 0)] + d.u_bar[0] * 0.5) / r,
        (0, be) => d.holo[(be, 0)].conj() / r,
        (al, 0) => d.holo[(al, 0)] / r,
        (al, be) => {
            let delta = if al == be {
                d.u_bar[0]
            } else {
                C64::new(0.0, 0.0)
            };
            (delta + d.transversal[(al - 1, be - 1)]) / r
        }
    });
    let mut parts = vec![(
        "ω⁰∧ω̄⁰".to_string(),
        (assembled[(0, 0)] - k[(0, 0)]).norm() / scale,
    )];
    let mixed = (1..=n).fold(0.0f64, |acc, a| {
        acc.max((assembled[(a, 0)] - k[(a, 0)]).norm())
            .max((assembled[(0, a)] - k[(0, a)]).norm())
    });
    parts.push(("mixed".to_string(), mixed / scale));
    let tb = block_residual(
        &assembled.view((1, 1), (n, n)).into_owned(),
        &k.view((1, 1), (n, n)).into_owned(),
    );
    parts.push(("θ^α∧θ̄^β".to_string(), tb / scale));
    let (mut anti_rel, mut holo_rel) = (0.0f64, 0.0f64);
    for a in 1..=n {
        anti_rel = anti_rel.max((d.anti[(a, 0)] - d.anti[(0, a)] - d.u_bar[a] * 0.5).norm());
        holo_rel = holo_rel.max((d.holo[(a, 0)].conj() - d.holo[(0, a)] - d.u_bar[a] * 0.5).norm());
    }
    parts.push((
        "u_{ᾱ,0̄} = u_{0̄,ᾱ} + ½u_ᾱ".to_string(),
        anti_rel / (r * scale),
    ));
    parts.push((
        "u_{ᾱ,0} = u_{0,ᾱ} + ½u_ᾱ".to_string(),
        holo_rel / (r * scale),
    ));
    conclude(
        "frame decomposition of ∂∂̄u",
        z,
        parts,
        frame_tolerance(fd_step),
    )
}

/// Restriction of `i∂∂̄u` to `S_r` for S¹-invariant `u`:
///
/// `i e^t{(u_0̄ δ_{αβ} + u_{αβ̄}) θ^α∧θ̄^β + d^T u_0̄ ∧ conj(ω⁰₀)}`,
///
/// compared with the restriction of the frame Hessian (where `ω⁰∧ω̄⁰`
/// vanishes and `ω⁰ = e^t ω⁰₀`). `u_0̄` must be real. The transversal block is
/// then mapped to the chart at the matching Hopf point and compared with
/// `Θ₂ = u̇G + H` of the mass kernel, together with `u̇ = 2e^t u_0̄`.
/// Residuals are relative; the tolerance is `10⁻⁵`.
pub fn restriction_check(f: &FunctionSpec, z: &AmbientPoint) -> Result<FrameCheck> {
    if !f.is_s1_invariant() {
        return Err(Error::NotInvariant(format!(
            "`{f}` has unbalanced z/z̄ degrees"
        )));
    }
    let fh = frame_hessian(f, z)?;
    let d = frame_derivatives(f, z, FRAME_FD_STEP)?;
    let n = d.n();
    let r = z.norm();
    let k2 = &fh.components * C64::new(r * r, 0.0);
    let scale = max_abs(&k2)
        .max(r * d.u_bar[0].norm())
        .max(f64::MIN_POSITIVE);
    let mut parts = Vec::new();
    let target = CMat::from_fn(n, n, |a, b| {
        let delta = if a == b {
            d.u_bar[0]
        } else {
            C64::new(0.0, 0.0)
        };
        (delta + d.transversal[(a, b)]) * r
    });
    parts.push((
        "θ^α∧θ̄^β".to_string(),
        block_residual(&fh.transversal, &target) / scale,
    ));
    // ω⁰₀∧θ^α carries e^{2t}K_{α0̄}; ω⁰₀∧θ̄^α carries e^{2t}K_{0ᾱ}.
    let coupling = (1..=n).fold(0.0f64, |acc, a| {
        acc.max((k2[(a, 0)] - d.holo[(a, 0)] * r).norm())
            .max((k2[(0, a)] - d.anti[(a, 0)] * r).norm())
    });
    parts.push(("d^T u_0̄ coupling".to_string(), coupling / scale));
    parts.push(("Im u_0̄".to_string(), r * d.u_bar[0].im.abs() / scale));

    let hop = ambient_to_hopf(z)?;
    let (z0, vs) = transversal_vectors(hop.t, &hop.zeta, hop.chart)?;
    let st = transversal_state(f, hop.t, &hop.zeta, hop.chart)?;
    let d0 = frame_derivatives(f, &z0, FRAME_FD_STEP)?;
    let r0 = z0.norm();
    let block = CMat::from_fn(n, n, |a, b| {
        let delta = if a == b {
            d0.u_bar[0]
        } else {
            C64::new(0.0, 0.0)
        };
        (delta + d0.transversal[(a, b)]) / r0
    });
    let c = CMat::from_fn(n, n, |a, g| {
        let e = d0.frame.vector(g + 1);
        e.iter().zip(vs[a].iter()).map(|(x, v)| x.conj() * v).sum()
    });
    let chart = &c * block * c.adjoint();
    let bridge_scale = max_abs(&st.theta2)
        .max(st.u_dot.abs())
        .max(f64::MIN_POSITIVE);
    parts.push((
        "Θ₂ bridge".to_string(),
        block_residual(&chart, &st.theta2) / bridge_scale,
    ));
    parts.push((
        "u̇ bridge".to_string(),
        (2.0 * r0 * d0.u_bar[0].re - st.u_dot).abs() / bridge_scale,
    ));
    conclude("restriction of i∂∂̄u to S_r", z, parts, FRAME_RESIDUAL)
}

/// Connection residual `max_v |z|·|ω(v) + ω(v)†|` over the `2n+2` real
/// directions `e_D`, `i e_D`, with `ω(v) = a·(∂_v ā)^T` from central
/// differences of `frame` with step `fd_step·|z|`.
pub fn antisymmetry_check_with(
    z: &AmbientPoint,
    fd_step: f64,
    frame: &dyn Fn(&[C64]) -> Result<CMat>,
) -> Result<FrameCheck> {
    if !(fd_step > 0.0 && fd_step < 1e-1) {
        return Err(Error::InvalidArgument(format!(
            "fd_step must lie in (0, 0.1), got {fd_step}"
        )));
    }
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::ZeroPoint);
    }
    let a = frame(&z.z)?;
    let m = z.z.len();
    let base = adapted_frame(z)?;
    let mut parts = Vec::with_capacity(2 * m);
    for dir in 0..m {
        for (label, mult) in [("e", C64::new(1.0, 0.0)), ("ie", C64::new(0.0, 1.0))] {
            let v = base.vector(dir) * mult;
            let Pair(_, da) = richardson(fd_step * r, |s| {
                let w: Vec<C64> = z.z.iter().zip(v.iter()).map(|(x, y)| x + y * s).collect();
                Ok(Pair(CVec::zeros(0), frame(&w)?))
            })?;
            let omega = &a * da.map(|c| c.conj()).transpose();
            let defect = max_abs(&(&omega + omega.adjoint())) * r;
            parts.push((format!("{label}_{dir}"), defect));
        }
    }
    conclude("ω^A_B + conj(ω^B_A) = 0", z, parts, 20.0 * fd_step)
}

/// [`antisymmetry_check_with`] for the adapted frame, pivot held fixed.
pub fn antisymmetry_check(z: &AmbientPoint, fd_step: f64) -> Result<FrameCheck> {
    let pivot = pivot_of(&z.z);
    antisymmetry_check_with(z, fd_step, &|w| Ok(frame_rows(w, pivot)?.map(|c| c.conj())))
}

/// Adapted frame scaled by `1 + |w|²`; not unitary, for fault injection.
pub fn non_unitary_frame(w: &[C64]) -> Result<CMat> {
    let q: f64 = w.iter().map(|c| c.norm_sqr()).sum();
    Ok(frame_rows(w, pivot_of(w))?.map(|c| c.conj() * (1.0 + q)))
}

/// `max |K − K†|` of the frame components.
pub fn frame_hermitian_defect(fh: &FrameHessian) -> f64 {
    hermitian_defect(&fh.components)
}
