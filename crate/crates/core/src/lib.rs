//! Numerical and exact verification of the Monge–Ampère machinery for
//! S¹-invariant plurisubharmonic functions on the punctured unit ball of
//! ℂ^{n+1}.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: Hopf coordinates `(t, θ, ζ)`, the Fubini–Study metric and
//!   contact data on the unit sphere.
//! - [`quadrature`]: deterministic and Monte Carlo integration on ℂPⁿ, on
//!   spheres and over radial shells, plus limit extrapolation in `t`.
//! - [`functions`]: the test-function mini-language with analytic value,
//!   gradient, complex Hessian and transversal data.
//! - [`invariants`]: Lelong numbers, directional Lelong numbers, `M_A`, `λ`
//!   and the functionals `I`, `ℐ`.
//! - [`mass`]: the mixed-wedge eigenvalue kernel, transversal positivity,
//!   boundary mass (direct and alternating form), the shell oracle and the
//!   residual mass.
//! - [`bounds`]: Bell-type constants, dimensional constants, exact
//!   polynomial identities and the inequality harness.
//! - [`regularize`]: mollification in ℂ² and its convergence checks.
//! - [`energy`]: the energies `E_{n,k}`, pluricomplex energy and concavity.
//! - [`frames`]: adapted unitary frames and the frame decomposition of the
//!   complex Hessian.
//! - [`report`]: the JSON/CSV/SVG report used by the `mamass` binary.
//!
//! Conventions: `d^c = (i/2)(∂̄ − ∂)`, so `dd^c = i∂∂̄`; the Fubini–Study form
//! is `ω = (1/2) dd^c log(1+|ζ|²)` with `∫_{ℂPⁿ} ωⁿ = πⁿ`. Complex Hessians are
//! stored as `M[(j,k)] = ∂²u/∂z^j∂z̄^k`.

pub mod bounds;
pub mod energy;
pub mod error;
pub mod frames;
pub mod functions;
pub mod geometry;
pub mod invariants;
pub mod linalg;
pub mod mass;
pub mod quadrature;
pub mod regularize;
pub mod report;
pub mod tolerances;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
