//! Acceptance criteria 1–14, one PASS/FAIL line per criterion.
//!
//! Lines go straight to the process stderr so they appear in the test log
//! even when the test passes.

use std::io::Write;
use std::time::{Duration, Instant};

use mamass::bounds::{
    bell_constants, dimensional_constant, verify_identity_alternating_sum,
    verify_identity_binomial_ratio, verify_identity_difference_factorization, Verdict,
};
use mamass::energy::{concavity_check, Concavity};
use mamass::functions::{parse_spec, FunctionSpec};
use mamass::invariants::{directional_profile, lelong_estimate};
use mamass::mass::{boundary_mass, positivity_check, shell_oracle, slices};
use mamass::quadrature::IntegrationScheme;
use mamass::report::{analyze, default_scheme, verify, RunConfig, Suite};
use mamass::tolerances::{
    combined, DEFAULT_A_GRID, DEFAULT_GRID_DENSITY, DEFAULT_SEED, DEFAULT_T_GRID, SIGMAS,
};
use mamass::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: mamass::Result<T>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

fn spec(s: &str) -> FunctionSpec {
    parse_spec(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn line(text: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

struct Runner {
    failures: Vec<String>,
}

impl Runner {
    fn run(&mut self, id: u32, name: &str, budget_s: u64, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget_s);
        let timing = format!("{:.1}s of {budget_s}s", elapsed.as_secs_f64());
        match result {
            Ok(detail) => line(&format!(
                "PASS criterion {id:>2} {name}: {detail} [{timing}{}]",
                if over { ", over budget" } else { "" }
            )),
            Err(why) => {
                line(&format!("FAIL criterion {id:>2} {name}: {why} [{timing}]"));
                self.failures.push(format!("{id} {name}"));
            }
        }
    }
}

/// Catalog of psh members in dimension `n` used by the cross-oracle criteria.
fn catalog(n: usize) -> Vec<String> {
    Suite::MassOracles.default_functions(n)
}

fn c1_constants() -> Outcome {
    let b: Vec<u64> = bell_constants(5)
        .iter()
        .map(|v| v.try_into().expect("small"))
        .collect();
    ensure(b == [1, 1, 2, 5, 15, 52], || format!("B_0..B_5 = {b:?}"))?;
    let c: Vec<u64> = (1..=4)
        .map(|n| dimensional_constant(n).unwrap().try_into().expect("small"))
        .collect();
    ensure(c == [2, 7, 24, 96], || format!("C_1..C_4 = {c:?}"))?;
    Ok(format!("B = {b:?}, C = {c:?}"))
}

fn c2_identities() -> Outcome {
    let mut cases = ok(verify_identity_binomial_ratio(8, false), "binomial_ratio")?.cases;
    for n in 1..=8 {
        cases += ok(
            verify_identity_difference_factorization(n, false),
            "difference_factorization",
        )?
        .cases;
        cases += ok(verify_identity_alternating_sum(n, false), "alternating_sum")?.cases;
    }
    ensure(verify_identity_binomial_ratio(8, true).is_err(), || {
        "mutated binomial_ratio passed".into()
    })?;
    ensure(
        verify_identity_difference_factorization(3, true).is_err(),
        || "mutated difference_factorization passed".into(),
    )?;
    ensure(verify_identity_alternating_sum(3, true).is_err(), || {
        "mutated alternating_sum passed".into()
    })?;
    Ok(format!(
        "{cases} exact comparisons for n ≤ 8; mutations detected"
    ))
}

fn c3_radial() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for c in [0.5, 1.0, 1.5] {
            let s = format!("radial(profile=log,c={c})");
            let cfg = RunConfig::new("analyze", vec![s.clone()], n);
            let r = ok(analyze(&cfg), &s)?;
            let exact = f64::powi(c, n as i32 + 1);
            for (t, (m, sd)) in r
                .tau
                .t_grid
                .iter()
                .zip(r.tau.trace.iter().zip(&r.tau.stderr))
            {
                let err = (m - exact).abs();
                if n == 1 {
                    ensure(err <= 1e-6, || {
                        format!("{s} n={n} t={t}: mass {m} vs {exact}")
                    })?;
                } else {
                    ensure(err <= combined(*sd, 0.0, exact), || {
                        format!("{s} n={n} t={t}: mass {m} ± {sd} vs {exact}")
                    })?;
                    ensure(*sd <= 1e-3 * exact, || {
                        format!("{s} n={n}: σ = {sd} exceeds 1e-3·c^(n+1)")
                    })?;
                }
                worst = worst.max(err / exact);
            }
            for (what, v) in [
                ("ν by slope", r.nu.by_slope),
                ("ν by I", r.nu.by_i),
                ("ν", r.nu.extrapolated),
                ("λ", r.lambda.extrapolated),
            ] {
                ensure((v - c).abs() <= 1e-9, || {
                    format!("{s} n={n}: {what} = {v}, expected {c}")
                })?;
            }
            if let Some(bad) = r
                .inequalities
                .iter()
                .find(|i| i.asserted && i.verdict != Verdict::Pass)
            {
                return Err(format!(
                    "{s} n={n}: {} failed ({} > {})",
                    bad.name, bad.lhs, bad.rhs
                ));
            }
            ensure(r.passed, || format!("{s} n={n}: report checks failed"))?;
        }
    }
    Ok(format!("9 cases, worst relative mass error {worst:.2e}"))
}

fn c4_stokes() -> Outcome {
    let cases = [
        (1, "loglinear(A=[[1,1],[0,1]])"),
        (1, "loglinear(A=[[2,1],[1,1]])"),
        (2, "loglinear(A=[[1,1,0],[0,1,1],[0,0,1]])"),
        (2, "loglinear(A=[[1,0,1],[1,2,0],[0,1,1]])"),
    ];
    let mut worst = 0.0f64;
    for (n, s) in cases {
        let f = spec(s);
        for sl in ok(
            slices(&f, n, &[-5.0, -10.0], &default_scheme(n, DEFAULT_SEED)),
            s,
        )? {
            for (k, e) in sl.per_k.iter().enumerate().skip(1) {
                let tol = combined(e.stderr, 0.0, 1.0);
                ensure(e.value.abs() <= tol, || {
                    format!("{s} t={} k={k}: {} ± {}", sl.t, e.value, e.stderr)
                })?;
                worst = worst.max(e.value.abs());
            }
            let tol = combined(sl.mass.stderr, 0.0, 1.0);
            ensure((sl.mass.value - 1.0).abs() <= tol, || {
                format!(
                    "{s} t={}: mass {} ± {}",
                    sl.t, sl.mass.value, sl.mass.stderr
                )
            })?;
        }
    }
    Ok(format!("4 maps, largest |k ≥ 1 summand| {worst:.2e}"))
}

fn c5_shell() -> Outcome {
    let cases = [
        (1, "monomial_ideal(m=[[1,0],[0,2]],w=[1,1])"),
        (1, "lse_toric(a=[1,2],beta=2)"),
        (2, "monomial_ideal(m=[[1,0,0],[0,1,0],[0,0,2]],w=[1,1,1])"),
        (2, "lse_toric(a=[1,1,2],beta=2)"),
    ];
    let (t1, t2) = (-8.0, -4.0);
    let mut worst = 0.0f64;
    for (n, s) in cases {
        let f = spec(s);
        let scheme = default_scheme(n, DEFAULT_SEED);
        let m1 = ok(boundary_mass(&f, n, t1, &scheme), s)?;
        let m2 = ok(boundary_mass(&f, n, t2, &scheme), s)?;
        let shell = ok(shell_oracle(&f, n, t1, t2, &scheme), s)?;
        let delta = m2.value - m1.value;
        let tol = combined(m1.stderr.hypot(m2.stderr), shell.stderr, delta);
        let miss = (delta - shell.value).abs();
        ensure(miss <= tol, || {
            format!(
                "{s} n={n}: Δmass {delta} vs shell {} (tol {tol})",
                shell.value
            )
        })?;
        worst = worst.max(miss / tol);
    }
    Ok(format!("4 members, worst miss {worst:.2} of the tolerance"))
}

fn c6_multiplicity() -> Outcome {
    let s = "monomial_ideal(m=[[1,0],[0,2]],w=[1,1])";
    let r = ok(analyze(&RunConfig::new("analyze", vec![s.into()], 1)), s)?;
    let (nu, lam, tau) = (r.nu.extrapolated, r.lambda.extrapolated, r.tau.extrapolated);
    ensure((nu - 1.0).abs() <= 1e-2, || format!("ν = {nu}"))?;
    ensure((lam - 2.0).abs() <= 2e-2, || format!("λ = {lam}"))?;
    ensure((tau - 2.0).abs() <= 2e-2, || format!("τ = {tau}"))?;
    for name in [
        "(f) nu^2 <= tau",
        "(f) tau <= 2 lambda nu + nu^2",
        "(b) tau <= 2 C_n lambda^n nu",
    ] {
        let i = r
            .inequalities
            .iter()
            .find(|i| i.name == name)
            .ok_or_else(|| format!("missing {name}"))?;
        ensure(i.verdict == Verdict::Pass && i.slack > 0.0, || {
            format!("{name}: slack {}", i.slack)
        })?;
    }
    ensure(r.passed, || "report checks failed".into())?;
    Ok(format!("ν = {nu:.6}, λ = {lam:.6}, τ = {tau:.6}"))
}

fn c7_zero_mass() -> Outcome {
    let grid = [-5.0, -10.0, -20.0, -40.0];
    let mut out = Vec::new();
    for n in 1..=2 {
        let monomial = if n == 1 {
            "monomial_ideal(m=[[1,0],[0,2]],w=[1,1])".to_string()
        } else {
            "monomial_ideal(m=[[1,0,0],[0,1,0],[0,0,2]],w=[1,1,1])".to_string()
        };
        for inner in ["radial(profile=log,c=1)".to_string(), monomial] {
            let s = format!("sqrt_compose({inner})");
            let f = spec(&s);
            let scheme = default_scheme(n, DEFAULT_SEED);
            let lel = ok(lelong_estimate(&f, n, &grid, &scheme), &s)?;
            ensure(lel.by_i <= 1e-2 && lel.by_slope <= 1e-2, || {
                format!("{s} n={n}: ν = {} / {}", lel.by_i, lel.by_slope)
            })?;
            let sl = ok(slices(&f, n, &grid, &scheme), &s)?;
            for w in sl.windows(2) {
                let tol = combined(w[0].mass.stderr, w[1].mass.stderr, w[0].mass.value);
                ensure(w[1].mass.value <= w[0].mass.value + tol, || {
                    format!(
                        "{s} n={n}: mass rises from {} to {} at t={}",
                        w[0].mass.value, w[1].mass.value, w[1].t
                    )
                })?;
            }
            let last = sl.last().expect("grid").mass;
            ensure(last.value <= 1e-2, || {
                format!("{s} n={n}: mass(−40) = {}", last.value)
            })?;
            out.push(format!("{:.1e}", last.value));
        }
    }
    Ok(format!("mass(−40) = {}", out.join(", ")))
}

fn c8_positivity() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for n in 1..=3 {
        for s in catalog(n) {
            let r = ok(
                positivity_check(&spec(&s), n, &DEFAULT_T_GRID, 10_000, DEFAULT_SEED),
                &s,
            )?;
            ensure(r.min_scaled_eigenvalue >= -1e-6, || {
                format!("{s} n={n}: {}", r.min_scaled_eigenvalue)
            })?;
            worst = worst.min(r.min_scaled_eigenvalue);
            count += 1;
        }
    }
    Ok(format!(
        "{count} member/dimension pairs, min scaled eigenvalue {worst:.2e}"
    ))
}

fn c9_alternating() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=2 {
        for s in catalog(n) {
            for sl in ok(
                slices(
                    &spec(&s),
                    n,
                    &DEFAULT_T_GRID,
                    &default_scheme(n, DEFAULT_SEED),
                ),
                &s,
            )? {
                let tol = combined(sl.mass.stderr, sl.alternating.stderr, sl.mass.value);
                let miss = (sl.mass.value - sl.alternating.value).abs();
                ensure(miss <= tol, || {
                    format!(
                        "{s} n={n} t={}: {} vs {}",
                        sl.t, sl.mass.value, sl.alternating.value
                    )
                })?;
                worst = worst.max(miss);
            }
        }
    }
    Ok(format!("largest |mass − alternating| {worst:.2e}"))
}

fn c10_monotone() -> Outcome {
    let mut checks = 0;
    for n in 1..=2 {
        let scheme = default_scheme(n, DEFAULT_SEED);
        for s in catalog(n) {
            let f = spec(&s);
            let sl = ok(slices(&f, n, &DEFAULT_T_GRID, &scheme), &s)?;
            for w in sl.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let tol = combined(a.mass.stderr, b.mass.stderr, a.mass.value);
                ensure(b.mass.value <= a.mass.value + tol, || {
                    format!("{s} n={n}: mass rises at t={}", b.t)
                })?;
                let (ia, ib) = (a.i_over_pin(), b.i_over_pin());
                let tol = combined(ia.stderr, ib.stderr, ia.value);
                ensure(ib.value <= ia.value + tol, || {
                    format!("{s} n={n}: I rises at t={}", b.t)
                })?;
                ensure(ib.value >= -SIGMAS * ib.stderr, || {
                    format!("{s} n={n}: I < 0 at t={}", b.t)
                })?;
                checks += 3;
            }
            // ℐ on increasing t: divided second differences are ≥ 0
            let pts: Vec<(f64, f64, f64)> = sl
                .iter()
                .rev()
                .map(|s| (s.t, s.cal_i_over_pin.value, s.cal_i_over_pin.stderr))
                .collect();
            for w in pts.windows(3) {
                let d0 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                let d1 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
                let second = (d1 - d0) / (0.5 * (w[2].0 - w[0].0));
                let scale = w.iter().fold(1.0f64, |m, p| m.max(p.1.abs()));
                let span = 0.5 * (w[2].0 - w[0].0);
                let sd =
                    (w[0].2.hypot(w[2].2) / (w[1].0 - w[0].0).min(w[2].0 - w[1].0) + w[1].2) / span;
                let tol = 1e-6 * scale + SIGMAS * sd;
                ensure(second >= -tol, || {
                    format!("{s} n={n}: ℐ second difference {second} at t={}", w[1].0)
                })?;
                checks += 1;
            }
            let p = ok(
                directional_profile(&f, n, &DEFAULT_A_GRID, DEFAULT_GRID_DENSITY, &scheme),
                &s,
            )?;
            for i in 1..p.m_values.len() {
                let bound = p.m_values[i - 1] + 1e-9 + p.gaps[i - 1] + p.gaps[i];
                ensure(p.m_values[i] <= bound, || {
                    format!("{s} n={n}: M_A rises at A={}", p.a_grid[i])
                })?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} monotonicity and convexity comparisons"))
}

fn c11_energy() -> Outcome {
    let mut total = 0;
    for n in 1..=2 {
        let cfg = RunConfig::new("verify", vec![], n);
        let r = ok(verify(&cfg, Suite::Energy, false), "energy suite")?;
        if let Some(bad) = r.checks.iter().find(|c| !c.passed) {
            return Err(format!(
                "n={n}: {} on {}: {}",
                bad.name,
                bad.function.as_deref().unwrap_or("-"),
                bad.error.as_deref().unwrap_or(&bad.detail.to_string())
            ));
        }
        total += r.checks.len();
    }
    let grid = [-2.0, -4.0, -8.0, -16.0];
    let scheme = default_scheme(1, DEFAULT_SEED);
    let concave = "monomial_ideal(m=[[2,0],[1,1],[0,3]],w=[1,1,1])";
    let v = ok(concavity_check(&spec(concave), 1, &grid, &scheme), concave)?.verdict;
    ensure(v == Concavity::Concave, || format!("{concave}: {v:?}"))?;
    let affine = "loglinear(A=[[1,1],[0,1]])";
    let v = ok(concavity_check(&spec(affine), 1, &grid, &scheme), affine)?.verdict;
    ensure(v == Concavity::Affine, || format!("{affine}: {v:?}"))?;
    Ok(format!(
        "{total} energy checks; monomial concave, loglinear affine"
    ))
}

fn c12_frames() -> Outcome {
    let mut worst = [0.0f64; 3];
    for n in 1..=2 {
        let cfg = RunConfig::new("verify", vec![], n);
        let r = ok(verify(&cfg, Suite::Frames, false), "frames suite")?;
        for c in &r.checks {
            let res = c.detail["max_residual"].as_f64().unwrap_or(f64::INFINITY);
            let (slot, limit) = match c.name.as_str() {
                "frame decomposition" => (0, 1e-5),
                "restriction to S_r" => (1, 1e-5),
                _ => (2, 2e-4),
            };
            ensure(c.passed && res <= limit, || {
                format!(
                    "n={n} {} on {}: residual {res}",
                    c.name,
                    c.function.as_deref().unwrap_or("-")
                )
            })?;
            worst[slot] = worst[slot].max(res);
        }
        let faulty = ok(verify(&cfg, Suite::Frames, true), "frames fault")?;
        ensure(!faulty.passed, || {
            format!("n={n}: non-unitary frame passed antisymmetry")
        })?;
    }
    Ok(format!(
        "max residuals: decomposition {:.1e}, restriction {:.1e}, antisymmetry {:.1e}; fault detected",
        worst[0], worst[1], worst[2]
    ))
}

fn c13_regularize() -> Outcome {
    let r = ok(
        verify(
            &RunConfig::new("verify", vec![], 1),
            Suite::Regularize,
            false,
        ),
        "regularize suite",
    )?;
    if let Some(bad) = r.checks.iter().find(|c| !c.passed) {
        return Err(format!(
            "{} on {}: {}",
            bad.name,
            bad.function.as_deref().unwrap_or("-"),
            bad.error.as_deref().unwrap_or("")
        ));
    }
    let refused = verify(
        &RunConfig::new("verify", vec![], 2),
        Suite::Regularize,
        false,
    );
    ensure(
        matches!(refused, Err(Error::UnsupportedDimension(2))),
        || "n = 2 not refused".into(),
    )?;
    Ok(format!("{} checks pass; n = 2 refused", r.checks.len()))
}

fn c14_reproducible() -> Outcome {
    let mut cfg = RunConfig::new(
        "analyze",
        vec!["monomial_ideal(m=[[1,0,0],[0,1,0],[0,0,2]],w=[1,1,1])".into()],
        2,
    );
    cfg.scheme = IntegrationScheme::mc(20_000, 11);
    cfg.t_grid = vec![-5.0, -10.0, -20.0];
    cfg.a_grid = vec![4.0, 8.0, 16.0];
    let a = serde_json::to_string(&ok(analyze(&cfg), "first run")?).map_err(|e| e.to_string())?;
    let b = serde_json::to_string(&ok(analyze(&cfg), "second run")?).map_err(|e| e.to_string())?;
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

#[test]
fn acceptance_criteria() {
    let mut r = Runner {
        failures: Vec::new(),
    };
    r.run(1, "exact constants", 1, c1_constants);
    r.run(2, "exact identities", 5, c2_identities);
    r.run(3, "radial closed form", 270, c3_radial);
    r.run(4, "Stokes vanishing", 60, c4_stokes);
    r.run(5, "cross-oracle mass", 60, c5_shell);
    r.run(6, "multiplicity case", 60, c6_multiplicity);
    r.run(7, "zero-mass behaviour", 60, c7_zero_mass);
    r.run(8, "positivity", 120, c8_positivity);
    r.run(9, "alternating form", 60, c9_alternating);
    r.run(10, "monotonicity and convexity", 120, c10_monotone);
    r.run(11, "energy consistency", 120, c11_energy);
    r.run(12, "frames", 60, c12_frames);
    r.run(13, "regularization", 180, c13_regularize);
    r.run(14, "reproducibility", 60, c14_reproducible);
    assert!(r.failures.is_empty(), "failed criteria: {:?}", r.failures);
}
