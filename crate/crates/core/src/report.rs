//! Run configuration, the analysis pipeline, the verification suites and
//! their JSON, CSV and SVG renderings.
//!
//! The JSON report (schema `mamass-report/1`) is canonical; CSV and SVG are
//! views of its `trace`. Reports carry no timings or host data, so equal
//! configurations give byte-identical JSON.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{
    bell_constants, check_estimate_suite, dimensional_constant, estimate_inputs,
    verify_identity_alternating_sum, verify_identity_binomial_ratio,
    verify_identity_difference_factorization, IdentityReport, InequalityReport, Verdict,
};
use crate::energy::{concavity_check, pluricomplex_energy, EnergyTrace};
use crate::frames::{
    antisymmetry_check, antisymmetry_check_with, hessian_decomposition_check, non_unitary_frame,
    restriction_check,
};
use crate::functions::{parse_spec, FunctionSpec};
use crate::geometry::{contact_selfcheck, AmbientPoint};
use crate::invariants::lelong_estimate;
use crate::mass::{positivity_check, shell_oracle, slices};
use crate::quadrature::{
    extrapolate_limit, purpose, uniform_sphere_points, uniforms, IntegrationScheme,
};
use crate::regularize::{
    friedrichs_check, mass_convergence_check, mollified_slope_bound, monotone_regularization_check,
};
use crate::tolerances::{
    combined, DEFAULT_A_GRID, DEFAULT_CHART_ORDER, DEFAULT_GRID_DENSITY, DEFAULT_SAMPLES,
    DEFAULT_SEED, DEFAULT_T_GRID, ENERGY_LIMIT_ABS, FRAME_FD_STEP, FRAME_POINTS,
    POSITIVITY_SAMPLES, ROUNDING_REL, SIGMAS, VERIFY_T_GRID,
};
use crate::{Error, Result};

/// Schema tag of every JSON document.
pub const SCHEMA: &str = "mamass-report/1";
/// Version echoed in reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output paths; JSON goes to stdout when `json` is absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub json: Option<String>,
    pub csv: Option<String>,
    pub svg: Option<String>,
}

/// Tensor rule in dimension 1, Monte Carlo otherwise.
pub fn default_scheme(n: usize, seed: u64) -> IntegrationScheme {
    if n == 1 {
        IntegrationScheme::tensor(DEFAULT_CHART_ORDER).with_seed(seed)
    } else {
        IntegrationScheme::mc(DEFAULT_SAMPLES, seed)
    }
}

/// Validated parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// Function specs; `analyze` takes exactly one, an empty list selects the
    /// suite's default catalog.
    pub functions: Vec<String>,
    pub n: usize,
    pub t_grid: Vec<f64>,
    #[serde(rename = "A_grid")]
    pub a_grid: Vec<f64>,
    pub scheme: IntegrationScheme,
    /// Covering points for `M_A`.
    pub grid_density: usize,
    /// Relative finite-difference step of the frame checks.
    pub fd_step: f64,
    /// Sampled points of the positivity check.
    pub positivity_samples: usize,
    pub outputs: Outputs,
}

impl RunConfig {
    /// Defaults for `command` on `functions` in dimension `n`.
    pub fn new(command: &str, functions: Vec<String>, n: usize) -> Self {
        let t_grid = if command == "analyze" {
            DEFAULT_T_GRID.to_vec()
        } else {
            VERIFY_T_GRID.to_vec()
        };
        Self {
            command: command.to_string(),
            functions,
            n,
            t_grid,
            a_grid: DEFAULT_A_GRID.to_vec(),
            scheme: default_scheme(n, DEFAULT_SEED),
            grid_density: DEFAULT_GRID_DENSITY,
            fd_step: FRAME_FD_STEP,
            positivity_samples: POSITIVITY_SAMPLES,
            outputs: Outputs::default(),
        }
    }

    /// Checks every field before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument(
                "dimension n must be at least 1".into(),
            ));
        }
        if self.t_grid.len() < 2 {
            return Err(Error::InvalidArgument(
                "t grid needs at least 2 values".into(),
            ));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] < w[0]))
            || self.t_grid.iter().any(|&t| !(t <= -1.0))
        {
            return Err(Error::InvalidArgument(
                "t grid must be strictly decreasing with t ≤ −1".into(),
            ));
        }
        if self.command == "analyze" {
            if self.a_grid.len() < 3 {
                return Err(Error::InvalidArgument(
                    "A grid needs at least 3 values".into(),
                ));
            }
            if self.a_grid.windows(2).any(|w| !(w[1] > w[0]))
                || self.a_grid.iter().any(|&a| !(a >= 1.0))
            {
                return Err(Error::InvalidArgument(
                    "A grid must be strictly increasing with A ≥ 1".into(),
                ));
            }
            if self.functions.len() != 1 {
                return Err(Error::InvalidArgument(
                    "analyze takes exactly one --function".into(),
                ));
            }
        }
        if self.grid_density < 16 {
            return Err(Error::InvalidArgument(
                "grid density must be at least 16".into(),
            ));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 1e-2) {
            return Err(Error::InvalidArgument(format!(
                "fd step must lie in (0, 0.01), got {}",
                self.fd_step
            )));
        }
        if self.positivity_samples == 0 {
            return Err(Error::InvalidArgument(
                "positivity samples must be positive".into(),
            ));
        }
        self.scheme.validate(self.n)
    }

    fn parsed(&self) -> Result<Vec<(String, FunctionSpec)>> {
        self.functions
            .iter()
            .map(|s| {
                let f = parse_spec(s)?;
                f.check_dim(self.n)?;
                Ok((s.clone(), f))
            })
            .collect()
    }
}

/// A named pass/fail verdict with its supporting data.
#[derive(Debug, Clone, Serialize)]
pub struct NamedCheck {
    pub name: String,
    pub function: Option<String>,
    pub passed: bool,
    pub error: Option<String>,
    pub detail: Value,
}

impl NamedCheck {
    fn threshold(name: &str, function: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            function: Some(function.to_string()),
            passed: residual <= tolerance,
            error: None,
            detail: json!({ "residual": residual, "tolerance": tolerance }),
        }
    }
}

/// Turns a check result into a verdict; failures of the check itself become
/// `passed = false`, any other error propagates.
fn outcome<T: Serialize>(name: &str, function: Option<&str>, r: Result<T>) -> Result<NamedCheck> {
    let function = function.map(str::to_string);
    match r {
        Ok(v) => Ok(NamedCheck {
            name: name.to_string(),
            function,
            passed: true,
            error: None,
            detail: serde_json::to_value(v).unwrap_or(Value::Null),
        }),
        Err(e @ (Error::CheckFailed { .. } | Error::CounterexampleFound(_))) => Ok(NamedCheck {
            name: name.to_string(),
            function,
            passed: false,
            error: Some(e.to_string()),
            detail: Value::Null,
        }),
        Err(e) => Err(e),
    }
}

/// Lelong number section.
#[derive(Debug, Clone, Serialize)]
pub struct NuSection {
    pub by_slope: f64,
    pub by_slope_uncertainty: f64,
    #[serde(rename = "by_I")]
    pub by_i: f64,
    #[serde(rename = "by_I_uncertainty")]
    pub by_i_uncertainty: f64,
    pub extrapolated: f64,
    pub uncertainty: f64,
}

/// Maximal directional Lelong number section.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaSection {
    #[serde(rename = "A_grid")]
    pub a_grid: Vec<f64>,
    #[serde(rename = "M_A")]
    pub m_a: Vec<f64>,
    pub gaps: Vec<f64>,
    pub extrapolated: f64,
    pub uncertainty: f64,
}

/// Residual mass section.
#[derive(Debug, Clone, Serialize)]
pub struct TauSection {
    pub t_grid: Vec<f64>,
    pub trace: Vec<f64>,
    pub stderr: Vec<f64>,
    pub extrapolated: f64,
    pub uncertainty: f64,
}

/// Quadrature summary.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureSection {
    pub scheme: IntegrationScheme,
    pub samples: usize,
    pub seed: u64,
    pub max_stderr: f64,
    pub mean_stderr: f64,
}

/// One `t` of the trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub boundary_mass: f64,
    pub stderr: f64,
    #[serde(rename = "I_over_pin")]
    pub i_over_pin: f64,
    /// `E_{n,0..=n}`.
    #[serde(rename = "E")]
    pub e: Vec<f64>,
}

/// The `analyze` report.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub nu: NuSection,
    pub lambda: LambdaSection,
    pub tau: TauSection,
    pub inequalities: Vec<InequalityReport>,
    pub checks: Vec<NamedCheck>,
    pub quadrature: QuadratureSection,
    pub trace: Vec<TraceRow>,
    /// All asserted inequalities and all checks pass.
    pub passed: bool,
}

/// Full pipeline for one function: `ν` (slope and `I`), `λ` from `M_A`, `τ`
/// from the boundary mass, the inequality suite and consistency checks.
pub fn analyze(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let (spec, f) = config.parsed()?.remove(0);
    f.require_catalog()?;
    let (n, scheme) = (config.n, &config.scheme);
    let lel = lelong_estimate(&f, n, &config.t_grid, scheme)?;
    let (inputs, trace, profile) = estimate_inputs(
        &f,
        n,
        &config.t_grid,
        &config.a_grid,
        config.grid_density,
        scheme,
    )?;
    let inequalities = check_estimate_suite(n, &inputs)?;
    let sl = &trace.slices;

    let mut checks = vec![outcome(
        "positivity of u̇G + H",
        Some(&spec),
        positivity_check(
            &f,
            n,
            &config.t_grid,
            config.positivity_samples,
            scheme.seed,
        ),
    )?];
    let worst = |pairs: Vec<(f64, f64)>| {
        pairs.into_iter().fold(
            (0.0f64, 1.0f64),
            |a, (r, t)| if r / t > a.0 / a.1 { (r, t) } else { a },
        )
    };
    let (r, t) = worst(
        sl.iter()
            .map(|s| {
                (
                    s.difference.value.abs(),
                    SIGMAS * s.difference.stderr + ROUNDING_REL * s.mass.value.abs().max(1.0),
                )
            })
            .collect(),
    );
    checks.push(NamedCheck::threshold(
        "boundary mass = alternating form",
        &spec,
        r,
        t,
    ));
    for (name, series) in [
        (
            "boundary mass non-decreasing in t",
            sl.iter().map(|s| s.mass).collect::<Vec<_>>(),
        ),
        (
            "I/π^n non-decreasing in t",
            sl.iter().map(|s| s.i_over_pin()).collect(),
        ),
    ] {
        let (r, t) = worst(
            series
                .windows(2)
                .map(|w| {
                    (
                        w[1].value - w[0].value,
                        combined(w[0].stderr, w[1].stderr, w[0].value),
                    )
                })
                .collect(),
        );
        checks.push(NamedCheck::threshold(name, &spec, r, t));
    }
    let energies = EnergyTrace::from_slices(sl);
    let (r, t) = worst(
        energies
            .recombined()
            .iter()
            .zip(sl)
            .map(|(e, s)| {
                (
                    (e - s.mass.value).abs(),
                    combined(s.mass.stderr, 0.0, s.mass.value),
                )
            })
            .collect(),
    );
    checks.push(NamedCheck::threshold(
        "π^-n Σ C(n+1,k) E_{n,k} = boundary mass",
        &spec,
        r,
        t,
    ));
    checks.push(NamedCheck::threshold(
        "ν by slope = ν by I",
        &spec,
        (lel.by_slope - lel.by_i).abs(),
        lel.by_slope_uncertainty + lel.by_i_uncertainty + ROUNDING_REL,
    ));

    let stderrs: Vec<f64> = sl.iter().map(|s| s.mass.stderr).collect();
    let quadrature = QuadratureSection {
        scheme: *scheme,
        samples: scheme.samples,
        seed: scheme.seed,
        max_stderr: stderrs.iter().copied().fold(0.0, f64::max),
        mean_stderr: stderrs.iter().sum::<f64>() / stderrs.len() as f64,
    };
    let rows = sl
        .iter()
        .map(|s| TraceRow {
            t: s.t,
            boundary_mass: s.mass.value,
            stderr: s.mass.stderr,
            i_over_pin: s.i_over_pin().value,
            e: s.energies.iter().map(|e| e.value).collect(),
        })
        .collect();
    let passed = inequalities
        .iter()
        .all(|r| !r.asserted || r.verdict == Verdict::Pass)
        && checks.iter().all(|c| c.passed);
    Ok(Report {
        schema: SCHEMA.into(),
        tool_version: TOOL_VERSION.into(),
        config: config.clone(),
        nu: NuSection {
            by_slope: lel.by_slope,
            by_slope_uncertainty: lel.by_slope_uncertainty,
            by_i: lel.by_i,
            by_i_uncertainty: lel.by_i_uncertainty,
            extrapolated: inputs.nu,
            uncertainty: inputs.nu_uncertainty,
        },
        lambda: LambdaSection {
            a_grid: profile.a_grid.clone(),
            m_a: profile.m_values.clone(),
            gaps: profile.gaps.clone(),
            extrapolated: profile.lambda,
            uncertainty: profile.lambda_uncertainty,
        },
        tau: TauSection {
            t_grid: trace.t_grid.clone(),
            trace: trace.mass.clone(),
            stderr: trace.stderr.clone(),
            extrapolated: inputs.tau,
            uncertainty: inputs.tau_uncertainty,
        },
        inequalities,
        checks,
        quadrature,
        trace: rows,
        passed,
    })
}

/// CSV view of the trace: `t, boundary_mass, stderr, I_over_pin, E_0..E_n`.
pub fn trace_csv(report: &Report) -> String {
    let n = report.config.n;
    let mut out = String::from("t,boundary_mass,stderr,I_over_pin");
    for k in 0..=n {
        let _ = write!(out, ",E_{k}");
    }
    out.push('\n');
    for r in &report.trace {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.t, r.boundary_mass, r.stderr, r.i_over_pin
        );
        for e in &r.e {
            let _ = write!(out, ",{e}");
        }
        out.push('\n');
    }
    out
}

/// SVG line plot of the boundary mass and `I/πⁿ` against `t`.
pub fn trace_svg(report: &Report) -> String {
    let ts: Vec<f64> = report.trace.iter().map(|r| r.t).collect();
    line_plot(
        &format!("{} (n = {})", report.config.functions[0], report.config.n),
        "t",
        &ts,
        &[
            (
                "boundary mass",
                report.trace.iter().map(|r| r.boundary_mass).collect(),
            ),
            ("I/π^n", report.trace.iter().map(|r| r.i_over_pin).collect()),
        ],
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG 1.1 document with one polyline per series; non-finite points are
/// dropped.
pub fn line_plot(title: &str, x_label: &str, xs: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    const COLORS: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    ];
    let (w, h, m) = (640.0, 400.0, 60.0);
    let finite = |v: &f64| v.is_finite();
    let range = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals
            .filter(finite)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(&mut xs.iter().copied());
    let (y0, y1) = range(&mut series.iter().flat_map(|(_, v)| v.iter().copied()));
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#,
        h - m,
        w - m,
        h - m,
        h - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        w / 2.0,
        h - 20.0,
        xml_escape(x_label)
    );
    for (v, anchor, x, y) in [
        (x0, "middle", px(x0), h - m + 16.0),
        (x1, "middle", px(x1), h - m + 16.0),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.3}</text>"#
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{v:.4}</text>"#,
            m - 4.0,
            py(v) + 3.0
        );
    }
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = m + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{color}">{}</text>"#,
            w - m - 120.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Exact constants `B_0..B_{max_n+1}` and `C_1..C_{max_n}` as decimal
/// strings.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsTable {
    pub schema: String,
    pub bell: Vec<String>,
    pub dimensional: Vec<String>,
}

/// Constants table for `max_n ≥ 1`.
pub fn constants_table(max_n: usize) -> Result<ConstantsTable> {
    if max_n == 0 {
        return Err(Error::InvalidArgument("max n must be at least 1".into()));
    }
    Ok(ConstantsTable {
        schema: SCHEMA.into(),
        bell: bell_constants(max_n + 1)
            .iter()
            .map(|b| b.to_string())
            .collect(),
        dimensional: (1..=max_n)
            .map(|n| dimensional_constant(n).map(|c| c.to_string()))
            .collect::<Result<_>>()?,
    })
}

/// Verdicts of the exact identities up to `max_n`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityTable {
    pub schema: String,
    pub checks: Vec<NamedCheck>,
    pub passed: bool,
}

/// Runs the three exact identity verifiers for every `n ≤ max_n`; `mutate`
/// injects a coefficient fault into each.
pub fn identity_table(max_n: usize, mutate: bool) -> Result<IdentityTable> {
    if max_n == 0 {
        return Err(Error::InvalidArgument("max n must be at least 1".into()));
    }
    let mut checks = vec![outcome(
        "binomial_ratio",
        None,
        verify_identity_binomial_ratio(max_n, mutate),
    )?];
    for n in 1..=max_n {
        checks.push(outcome(
            &format!("difference_factorization n={n}"),
            None,
            verify_identity_difference_factorization(n, mutate),
        )?);
        checks.push(outcome(
            &format!("alternating_sum n={n}"),
            None,
            verify_identity_alternating_sum(n, mutate),
        )?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(IdentityTable {
        schema: SCHEMA.into(),
        checks,
        passed,
    })
}

/// Report shape of [`IdentityReport`] kept for the JSON detail.
pub type IdentityDetail = IdentityReport;

/// Verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Boundary mass against its alternating form and the shell oracle.
    MassOracles,
    /// Generalized eigenvalues of `u̇G + H` at sampled points.
    Positivity,
    /// Energy recombination, `d𝓔/dt`, the `E_{n,0}` limit and concavity.
    Energy,
    /// Frame decomposition, restriction and connection antisymmetry.
    Frames,
    /// Mollification checks (`n = 1`).
    Regularize,
    /// Contact-form self check.
    Contact,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::MassOracles => "mass-oracles",
            Suite::Positivity => "positivity",
            Suite::Energy => "energy",
            Suite::Frames => "frames",
            Suite::Regularize => "regularize",
            Suite::Contact => "contact",
        }
    }

    /// Default functions of the suite in dimension `n`.
    pub fn default_functions(self, n: usize) -> Vec<String> {
        let m = n + 1;
        let diag = |f: &dyn Fn(usize) -> String| (0..m).map(f).collect::<Vec<_>>().join(",");
        let radial = "radial(profile=log,c=1)".to_string();
        let loglinear = format!(
            "loglinear(A=[{}])",
            (0..m)
                .map(|i| format!(
                    "[{}]",
                    (0..m)
                        .map(|j| if j == i || j == i + 1 { "1" } else { "0" })
                        .collect::<Vec<_>>()
                        .join(",")
                ))
                .collect::<Vec<_>>()
                .join(",")
        );
        let unit = |i: usize| {
            (0..m)
                .map(|j| if j == i { "1" } else { "0" })
                .collect::<Vec<_>>()
                .join(",")
        };
        let monomial = format!(
            "monomial_ideal(m=[{}],w=[{}])",
            (0..m)
                .map(|i| format!(
                    "[{}]",
                    (0..m)
                        .map(|j| if j != i {
                            "0"
                        } else if i == n {
                            "2"
                        } else {
                            "1"
                        })
                        .collect::<Vec<_>>()
                        .join(",")
                ))
                .collect::<Vec<_>>()
                .join(","),
            diag(&|_| "1".to_string())
        );
        let lse = format!(
            "lse_toric(a=[{}],beta=2)",
            diag(&|i| if i == n { "2".into() } else { "1".into() })
        );
        let norm_sq: Vec<String> = (0..m)
            .map(|i| format!("(1,[{}],[{}])", unit(i), unit(i)))
            .collect();
        let skew = |lead: [usize; 2]| {
            (0..m)
                .map(|j| {
                    if j < 2 {
                        lead[j].to_string()
                    } else {
                        "0".into()
                    }
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut non_sym = norm_sq.clone();
        non_sym.push(format!("(0.25,[{}],[{}])", skew([2, 1]), skew([0, 1])));
        non_sym.push(format!("(0.25,[{}],[{}])", skew([0, 1]), skew([2, 1])));
        let poly = |terms: &[String]| format!("smooth_poly(terms=[{}])", terms.join(","));
        match self {
            Suite::Frames => vec![poly(&norm_sq), radial, loglinear, monomial, poly(&non_sym)],
            Suite::Regularize => vec![radial, monomial, lse],
            Suite::Contact => vec![],
            _ => vec![
                radial,
                "radial(profile=sqrtlog,c=1)".into(),
                loglinear,
                monomial,
                lse,
                "sqrt_compose(radial(profile=log,c=1))".into(),
            ],
        }
    }
}

/// The `verify` report.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub suite: Suite,
    pub checks: Vec<NamedCheck>,
    pub passed: bool,
    /// `(title, t, per-k summand series)` for the optional SVG view.
    #[serde(skip)]
    pub plot: Option<(String, Vec<f64>, Vec<(String, Vec<f64>)>)>,
}

/// Mollification parameters of the regularize suite.
const MONOTONE_EPS: [f64; 3] = [0.04, 0.02, 0.01];
const FRIEDRICHS_EPS: f64 = 0.02;
const SLOPE_A: f64 = 3.0;
const SLOPE_B: f64 = 6.0;
const SLOPE_EPS: [f64; 2] = [0.02, 0.01];
const CONVERGENCE_T: f64 = -2.0;
const CONVERGENCE_EPS: [f64; 3] = [0.02, 0.01, 0.005];
const REGULARIZE_POINTS: usize = 16;
const CONTACT_SAMPLES: usize = 64;
const CONTACT_AXIS_EXCLUSION: f64 = 1e-3;
const CONTACT_FAULT: f64 = 1e-3;

/// Seeded points `|z| ∈ [lo, hi]` in `ℂ^{n+1}`.
pub fn sample_points(n: usize, count: usize, seed: u64, lo: f64, hi: f64) -> Vec<AmbientPoint> {
    let dirs = uniform_sphere_points(n, count, seed, purpose::CHECK + 11);
    let us = uniforms(count, seed, purpose::CHECK + 12);
    dirs.into_iter()
        .zip(us)
        .map(|(d, u)| {
            let r = lo + (hi - lo) * u;
            AmbientPoint::new(d.into_iter().map(|c| c * r).collect())
        })
        .collect()
}

/// Runs `suite` on the configured (or default) functions. `inject_fault`
/// perturbs the frame (frames) or the contact form (contact); other suites
/// have no fault hook and refuse it.
pub fn verify(config: &RunConfig, suite: Suite, inject_fault: bool) -> Result<VerifyReport> {
    config.validate()?;
    let n = config.n;
    if suite == Suite::Regularize && n != 1 {
        return Err(Error::UnsupportedDimension(n));
    }
    if inject_fault && !matches!(suite, Suite::Frames | Suite::Contact) {
        return Err(Error::InvalidArgument(format!(
            "suite {} has no fault hook",
            suite.name()
        )));
    }
    let mut config = config.clone();
    if config.functions.is_empty() {
        config.functions = suite.default_functions(n);
    }
    let functions = config.parsed()?;
    let scheme = config.scheme;
    let seed = scheme.seed;
    let t_grid = &config.t_grid;
    let mut checks = Vec::new();
    let mut plot = None;
    match suite {
        Suite::MassOracles => {
            for (spec, f) in &functions {
                f.require_catalog()?;
                let sl = slices(f, n, t_grid, &scheme)?;
                for s in &sl {
                    let tol =
                        SIGMAS * s.difference.stderr + ROUNDING_REL * s.mass.value.abs().max(1.0);
                    checks.push(NamedCheck::threshold(
                        &format!("alternating form t={}", s.t),
                        spec,
                        s.difference.value.abs(),
                        tol,
                    ));
                }
                for w in sl.windows(2) {
                    let shell = shell_oracle(f, n, w[1].t, w[0].t, &scheme)?;
                    let delta = w[0].mass.value - w[1].mass.value;
                    let sd = w[0].mass.stderr.hypot(w[1].mass.stderr);
                    checks.push(NamedCheck::threshold(
                        &format!("shell oracle ({}, {})", w[1].t, w[0].t),
                        spec,
                        (delta - shell.value).abs(),
                        combined(sd, shell.stderr, delta),
                    ));
                }
                if plot.is_none() {
                    let series = (0..=n)
                        .map(|k| {
                            (
                                format!("k = {k}"),
                                sl.iter().map(|s| s.per_k[k].value).collect(),
                            )
                        })
                        .collect();
                    plot = Some((format!("per-k summands, {spec}"), t_grid.clone(), series));
                }
            }
        }
        Suite::Positivity => {
            for (spec, f) in &functions {
                f.require_catalog()?;
                checks.push(outcome(
                    "positivity of u̇G + H",
                    Some(spec),
                    positivity_check(f, n, t_grid, config.positivity_samples, seed),
                )?);
            }
        }
        Suite::Energy => {
            let pin = PI.powi(n as i32);
            for (spec, f) in &functions {
                f.require_catalog()?;
                let sl = slices(f, n, t_grid, &scheme)?;
                let trace = EnergyTrace::from_slices(&sl);
                let (r, t) =
                    trace
                        .recombined()
                        .iter()
                        .zip(&sl)
                        .fold((0.0f64, 1.0f64), |acc, (e, s)| {
                            let (r, t) = (
                                (e - s.mass.value).abs(),
                                combined(s.mass.stderr, 0.0, s.mass.value),
                            );
                            if r / t > acc.0 / acc.1 {
                                (r, t)
                            } else {
                                acc
                            }
                        });
                checks.push(NamedCheck::threshold("energy recombination", spec, r, t));
                for &t in t_grid {
                    checks.push(outcome(
                        &format!("d𝓔/dt = −(n+1)E_n,n t={t}"),
                        Some(spec),
                        pluricomplex_energy(f, n, t, &scheme),
                    )?);
                }
                let e0: Vec<f64> = sl.iter().map(|s| s.energies[0].value / pin).collect();
                let iv: Vec<f64> = sl.iter().map(|s| s.i_over_pin().value).collect();
                let (e_lim, e_unc) = extrapolate_limit(t_grid, &e0)?;
                let (nu, nu_unc) = extrapolate_limit(t_grid, &iv)?;
                let target = nu.max(0.0).powi(n as i32 + 1);
                let spread = e_unc + (n as f64 + 1.0) * nu.abs().powi(n as i32) * nu_unc;
                checks.push(NamedCheck {
                    name: "E_n,0/π^n → ν^(n+1)".into(),
                    function: Some(spec.clone()),
                    passed: (e_lim - target).abs() <= ENERGY_LIMIT_ABS + spread,
                    error: None,
                    detail: json!({ "limit": e_lim, "nu_power": target, "tolerance": ENERGY_LIMIT_ABS + spread }),
                });
                if t_grid.len() >= 4 {
                    checks.push(outcome(
                        "concavity of the mass primitive",
                        Some(spec),
                        concavity_check(f, n, t_grid, &scheme),
                    )?);
                }
            }
        }
        Suite::Frames => {
            let points = sample_points(n, FRAME_POINTS, seed, 0.05, 0.95);
            for (spec, f) in &functions {
                let dec: Vec<_> = points
                    .iter()
                    .map(|z| hessian_decomposition_check(f, z, config.fd_step))
                    .collect();
                checks.push(outcome(
                    "frame decomposition",
                    Some(spec),
                    dec.into_iter().collect::<Result<Vec<_>>>().map(worst_frame),
                )?);
                if f.is_s1_invariant() {
                    let res: Vec<_> = points.iter().map(|z| restriction_check(f, z)).collect();
                    checks.push(outcome(
                        "restriction to S_r",
                        Some(spec),
                        res.into_iter().collect::<Result<Vec<_>>>().map(worst_frame),
                    )?);
                }
            }
            let anti: Result<Vec<_>> = points
                .iter()
                .map(|z| {
                    if inject_fault {
                        antisymmetry_check_with(z, config.fd_step, &non_unitary_frame)
                    } else {
                        antisymmetry_check(z, config.fd_step)
                    }
                })
                .collect();
            checks.push(outcome(
                "connection antisymmetry",
                None,
                anti.map(worst_frame),
            )?);
        }
        Suite::Regularize => {
            let mscheme = IntegrationScheme::tensor(DEFAULT_CHART_ORDER).with_seed(seed);
            let points = sample_points(1, REGULARIZE_POINTS, seed, 0.2, 0.7);
            for (spec, f) in &functions {
                checks.push(outcome(
                    "u_ε decreases to u",
                    Some(spec),
                    monotone_regularization_check(f, &points, &MONOTONE_EPS, &mscheme),
                )?);
                checks.push(outcome(
                    "Friedrichs estimate",
                    Some(spec),
                    friedrichs_check(f, &points, FRIEDRICHS_EPS, &mscheme),
                )?);
                checks.push(outcome(
                    "mollified slope bound",
                    Some(spec),
                    mollified_slope_bound(f, SLOPE_A, SLOPE_B, &SLOPE_EPS, &mscheme),
                )?);
                checks.push(outcome(
                    "mollified mass convergence",
                    Some(spec),
                    mass_convergence_check(f, CONVERGENCE_T, &CONVERGENCE_EPS, &mscheme),
                )?);
            }
        }
        Suite::Contact => {
            let perturb = if inject_fault { CONTACT_FAULT } else { 0.0 };
            checks.push(outcome(
                "contact form",
                None,
                contact_selfcheck(n, CONTACT_SAMPLES, seed, CONTACT_AXIS_EXCLUSION, perturb),
            )?);
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        schema: SCHEMA.into(),
        tool_version: TOOL_VERSION.into(),
        config,
        suite,
        checks,
        passed,
        plot,
    })
}

fn worst_frame(checks: Vec<crate::frames::FrameCheck>) -> Value {
    let worst = checks
        .iter()
        .max_by(|a, b| a.residual.total_cmp(&b.residual));
    json!({
        "points": checks.len(),
        "max_residual": worst.map(|c| c.residual),
        "tolerance": worst.map(|c| c.tolerance),
        "worst_component": worst.map(|c| c.worst.clone()),
    })
}

/// SVG of the per-`k` summands when the suite produced them.
pub fn verify_svg(report: &VerifyReport) -> Option<String> {
    report.plot.as_ref().map(|(title, xs, series)| {
        let s: Vec<(&str, Vec<f64>)> = series
            .iter()
            .map(|(k, v)| (k.as_str(), v.clone()))
            .collect();
        line_plot(title, "t", xs, &s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalogs_parse() {
        for suite in [Suite::MassOracles, Suite::Frames, Suite::Regularize] {
            for n in 1..=3 {
                for s in suite.default_functions(n) {
                    let f = parse_spec(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
                    if suite != Suite::Regularize || n == 1 {
                        f.check_dim(n).unwrap_or_else(|e| panic!("{s}: {e}"));
                    }
                }
            }
        }
        let f = parse_spec(&Suite::Frames.default_functions(1)[4]).unwrap();
        assert!(!f.is_s1_invariant());
    }

    #[test]
    fn constants_and_identities() {
        let t = constants_table(4).unwrap();
        assert_eq!(t.dimensional, ["2", "7", "24", "96"]);
        assert_eq!(t.bell, ["1", "1", "2", "5", "15", "52"]);
        assert!(identity_table(3, false).unwrap().passed);
        assert!(!identity_table(2, true).unwrap().passed);
        assert!(constants_table(0).is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let s = line_plot(
            "a < b & c",
            "t",
            &[-1.0, -2.0],
            &[("x", vec![1.0, 2.0]), ("y", vec![f64::NAN, 3.0])],
        );
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("a &lt; b &amp; c"));
    }
}
