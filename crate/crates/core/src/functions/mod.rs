//! Catalog of test functions on `ℂ^{n+1}∖{0}`.
//!
//! Functions are written in a small mini-language (see [`parse_spec`]) and
//! evaluated with closed-form chain rules: value, gradient `∂u/∂z^j` and
//! complex Hessian `∂²u/∂z^j∂z̄^k`. Transversal data `(u_t, u̇_t, H)` on a Hopf
//! chart follow from the ambient derivatives.

mod eval;
mod parse;

use std::fmt;

pub use eval::{
    eval_ambient, eval_transversal, eval_transversal_fd, fd_gradient_hessian, psh_check,
    transversal_from_ambient, AmbientEval, PshReport, TransversalEval,
};
pub use parse::parse_spec;

use crate::{Error, Result};

/// Radial profile of `radial(...)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `u = c log|z|`.
    Log,
    /// `u = −c(−log|z|)^{1/2}`.
    SqrtLog,
}

/// One term `coeff·z^α z̄^β` of a `smooth_poly`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub coeff: f64,
    pub z_exp: Vec<u32>,
    pub zbar_exp: Vec<u32>,
}

/// Parsed function description.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Radial {
        profile: Profile,
        c: f64,
    },
    /// `u = log|Az|` for an invertible real matrix `A`.
    LogLinear {
        a: Vec<Vec<f64>>,
    },
    /// `u = ½ log Σ w_i |z^{m_i}|²`.
    MonomialIdeal {
        m: Vec<Vec<f64>>,
        w: Vec<f64>,
    },
    /// `u = (2β)⁻¹ log Σ |z^j|^{2βa_j}`.
    LseToric {
        a: Vec<f64>,
        beta: f64,
    },
    /// `u = −(−F)^{1/2}`.
    SqrtCompose(Box<FunctionSpec>),
    /// `u = c·F`.
    Scale {
        c: f64,
        inner: Box<FunctionSpec>,
    },
    /// `u = Re Σ c z^α z̄^β`.
    SmoothPoly {
        terms: Vec<PolyTerm>,
    },
}

impl FunctionSpec {
    /// Number of ambient coordinates `n+1` fixed by the spec, if any.
    pub fn ambient_dim(&self) -> Option<usize> {
        match self {
            FunctionSpec::Radial { .. } => None,
            FunctionSpec::LogLinear { a } => Some(a.len()),
            FunctionSpec::MonomialIdeal { m, .. } => m.first().map(|r| r.len()),
            FunctionSpec::LseToric { a, .. } => Some(a.len()),
            FunctionSpec::SqrtCompose(f) | FunctionSpec::Scale { inner: f, .. } => f.ambient_dim(),
            FunctionSpec::SmoothPoly { terms } => terms.first().map(|t| t.z_exp.len()),
        }
    }

    /// Checks that the spec lives on `ℂ^{n+1}`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.ambient_dim() {
            Some(d) if d != n + 1 => Err(Error::DimensionMismatch {
                expected: n + 1,
                found: d,
            }),
            _ => Ok(()),
        }
    }

    /// Invariance under `z ↦ e^{iθ}z`, decided structurally.
    pub fn is_s1_invariant(&self) -> bool {
        match self {
            FunctionSpec::SmoothPoly { terms } => terms
                .iter()
                .all(|t| t.z_exp.iter().sum::<u32>() == t.zbar_exp.iter().sum::<u32>()),
            FunctionSpec::SqrtCompose(f) | FunctionSpec::Scale { inner: f, .. } => {
                f.is_s1_invariant()
            }
            _ => true,
        }
    }

    /// Invariance under independent rotations of each coordinate.
    pub fn is_toric(&self) -> bool {
        match self {
            FunctionSpec::Radial { .. }
            | FunctionSpec::MonomialIdeal { .. }
            | FunctionSpec::LseToric { .. } => true,
            FunctionSpec::SqrtCompose(f) | FunctionSpec::Scale { inner: f, .. } => f.is_toric(),
            FunctionSpec::LogLinear { .. } | FunctionSpec::SmoothPoly { .. } => false,
        }
    }

    /// Members of the log-singular catalog (everything except `smooth_poly`).
    pub fn is_catalog_member(&self) -> bool {
        match self {
            FunctionSpec::SmoothPoly { .. } => false,
            FunctionSpec::SqrtCompose(f) | FunctionSpec::Scale { inner: f, .. } => {
                f.is_catalog_member()
            }
            _ => true,
        }
    }

    /// Fails with `NotInvariant` unless the function is a log-singular
    /// catalog member.
    pub fn require_catalog(&self) -> Result<()> {
        if self.is_catalog_member() {
            Ok(())
        } else {
            Err(Error::NotInvariant(format!(
                "`{self}` is not an S¹-invariant catalog member"
            )))
        }
    }

    pub fn quadrature_symmetry(&self) -> crate::quadrature::Symmetry {
        crate::quadrature::Symmetry {
            fiber_invariant: self.is_s1_invariant(),
            toric: self.is_toric(),
        }
    }

    /// `scale(s, self)`.
    pub fn scaled(&self, s: f64) -> FunctionSpec {
        FunctionSpec::Scale {
            c: s,
            inner: Box::new(self.clone()),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[f64]) -> fmt::Result {
    write!(f, "[")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "]")
}

fn write_matrix(f: &mut fmt::Formatter<'_>, rows: &[Vec<f64>]) -> fmt::Result {
    write!(f, "[")?;
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write_list(f, r)?;
    }
    write!(f, "]")
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Radial { profile, c } => {
                let p = match profile {
                    Profile::Log => "log",
                    Profile::SqrtLog => "sqrtlog",
                };
                write!(f, "radial(profile={p},c={c})")
            }
            FunctionSpec::LogLinear { a } => {
                write!(f, "loglinear(A=")?;
                write_matrix(f, a)?;
                write!(f, ")")
            }
            FunctionSpec::MonomialIdeal { m, w } => {
                write!(f, "monomial_ideal(m=")?;
                write_matrix(f, m)?;
                write!(f, ",w=")?;
                write_list(f, w)?;
                write!(f, ")")
            }
            FunctionSpec::LseToric { a, beta } => {
                write!(f, "lse_toric(a=")?;
                write_list(f, a)?;
                write!(f, ",beta={beta})")
            }
            FunctionSpec::SqrtCompose(inner) => write!(f, "sqrt_compose({inner})"),
            FunctionSpec::Scale { c, inner } => write!(f, "scale({c},{inner})"),
            FunctionSpec::SmoothPoly { terms } => {
                write!(f, "smooth_poly(terms=[")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({},", t.coeff)?;
                    write_list(f, &t.z_exp.iter().map(|&e| e as f64).collect::<Vec<_>>())?;
                    write!(f, ",")?;
                    write_list(f, &t.zbar_exp.iter().map(|&e| e as f64).collect::<Vec<_>>())?;
                    write!(f, ")")?;
                }
                write!(f, "])")
            }
        }
    }
}
