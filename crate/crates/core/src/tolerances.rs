//! Default tolerances, grids and numerical parameters.
//!
//! Every threshold used by a check lives here so that the CLI can echo and
//! override them from one place.

/// Relative round-trip tolerance for ambient ↔ Hopf conversions.
pub const ROUND_TRIP_REL: f64 = 1e-12;

/// Residual allowed in the contact-form self check.
pub const CONTACT_RESIDUAL: f64 = 1e-6;

/// Smallest admissible eigenvalue of a psh Hessian, relative to its spectral
/// scale.
pub const PSH_EIG_REL: f64 = 1e-9;

/// S¹-invariance spot-check tolerance on function values.
pub const INVARIANCE_ABS: f64 = 1e-10;

/// Lower bound for `u̇_t` on psh catalog members.
pub const UDOT_MIN: f64 = -1e-9;

/// Lower bound for generalized eigenvalues of `u̇G + H` against `G`.
pub const POSITIVITY_MIN: f64 = -1e-6;

/// Relative step for finite differences in ζ and t.
pub const FD_STEP: f64 = 1e-4;

/// Relative step for frame finite differences.
pub const FRAME_FD_STEP: f64 = 1e-5;

/// Residual bound for the frame checks (before the `20·h` floor).
pub const FRAME_RESIDUAL: f64 = 1e-5;

/// Slope differencing step δ for spherical means.
pub const SLOPE_DELTA: f64 = 0.25;

/// Number of standard errors used by statistical comparisons.
pub const SIGMAS: f64 = 3.0;

/// Relative rounding floor added to statistical tolerances, so that
/// deterministic schemes (zero standard error) compare values that agree to
/// rounding.
pub const ROUNDING_REL: f64 = 1e-9;

/// Relative tolerance of the `dℐ/dt = I` cross check.
pub const PRIMITIVE_REL: f64 = 1e-4;

/// Relative tolerance of `(n+1)E_{n,n} + d𝓔/dt = 0`.
pub const ENERGY_DERIVATIVE_REL: f64 = 1e-3;

/// Slack allowed in the infimum-gap check.
pub const INFIMUM_GAP_SLACK: f64 = 1e-3;

/// Zero-mass threshold at the deepest `t`.
pub const ZERO_MASS_THRESHOLD: f64 = 1e-2;

/// Tolerance for PSD-ness of mollified Hessians.
pub const MOLLIFIED_PSD: f64 = 1e-4;

/// Self-check tolerance for the mollifier normalization.
pub const MOLLIFIER_NORM: f64 = 1e-6;

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 200_000;

/// Default seed.
pub const DEFAULT_SEED: u64 = 1;

/// Default Gauss–Legendre order per panel for the tensor rule.
pub const DEFAULT_CHART_ORDER: usize = 16;

/// Default fraction of Monte Carlo samples drawn from the log-scale tail
/// components of the proposal.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Default `t` grid.
pub const DEFAULT_T_GRID: [f64; 4] = [-5.0, -10.0, -20.0, -40.0];

/// Default `A` grid.
pub const DEFAULT_A_GRID: [f64; 4] = [4.0, 8.0, 16.0, 32.0];

/// Covering sample size for `M_A`.
pub const DEFAULT_GRID_DENSITY: usize = 2048;

/// Log-depth of the tail proposal used at slice `t`: concentrations of the
/// catalog functions sit at `|z^j|²/|z|² ≈ e^{2mt}` for small integer `m`.
pub fn depth_for(t: f64) -> f64 {
    (6.0 * t.abs() + 30.0).min(600.0)
}

/// Absolute tolerance for comparing two estimates with standard errors
/// `s1`, `s2` and magnitude `scale`.
pub fn combined(s1: f64, s2: f64, scale: f64) -> f64 {
    SIGMAS * (s1 * s1 + s2 * s2).sqrt() + ROUNDING_REL * scale.abs().max(1.0)
}

/// Default `t` grid of the verification suites; the consecutive pairs feed
/// the shell oracle.
pub const VERIFY_T_GRID: [f64; 4] = [-2.0, -4.0, -8.0, -16.0];

/// Sampled `(t, ζ)` points of the positivity check.
pub const POSITIVITY_SAMPLES: usize = 10_000;

/// Random points per function in the frame suite.
pub const FRAME_POINTS: usize = 20;

/// Tolerance of `E_{n,0}/πⁿ → ν^{n+1}`.
pub const ENERGY_LIMIT_ABS: f64 = 2e-2;
