//! Command-line front end. Exit codes: 0 pass, 1 check failure, 2 usage or
//! configuration error.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mamass::functions::parse_spec;
use mamass::quadrature::IntegrationScheme;
use mamass::report::{
    analyze, constants_table, identity_table, trace_csv, trace_svg, verify, verify_svg, Outputs,
    RunConfig, Suite,
};
use mamass::tolerances::{DEFAULT_CHART_ORDER, DEFAULT_SAMPLES, DEFAULT_SEED};
use mamass::Error;

#[derive(Parser)]
#[command(
    name = "mamass",
    version,
    about = "Monge-Ampere mass decompositions of circle-invariant psh functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate ν, λ and τ for one function and check the inequality suite.
    Analyze(RunArgs),
    /// Print the exact constants B_0..B_{max_n+1} and C_1..C_{max_n}.
    Constants {
        #[arg(long)]
        max_n: usize,
    },
    /// Check the exact combinatorial identities up to max_n.
    Identities {
        #[arg(long)]
        max_n: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run a named cross-check suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    MassOracles,
    Positivity,
    Energy,
    Frames,
    Regularize,
    Contact,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::MassOracles => Suite::MassOracles,
            SuiteArg::Positivity => Suite::Positivity,
            SuiteArg::Energy => Suite::Energy,
            SuiteArg::Frames => Suite::Frames,
            SuiteArg::Regularize => Suite::Regularize,
            SuiteArg::Contact => Suite::Contact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Tensor for n = 1, Monte Carlo otherwise.
    Auto,
    Mc,
    Tensor,
}

#[derive(Args)]
struct RunArgs {
    /// Function spec; repeatable for `verify`, which otherwise uses a default catalog.
    #[arg(long = "function")]
    functions: Vec<String>,
    /// Projective dimension n (ambient ℂ^{n+1}); inferred from the function when possible.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, value_enum, default_value = "auto")]
    scheme: SchemeArg,
    /// Gauss–Legendre order per chart for the tensor scheme (n = 1).
    #[arg(long, default_value_t = DEFAULT_CHART_ORDER)]
    chart_order: usize,
    /// Decreasing t values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t_grid: Option<Vec<f64>>,
    /// Increasing A values, comma separated.
    #[arg(long = "a-grid", value_delimiter = ',')]
    a_grid: Option<Vec<f64>>,
    /// Covering points of the directional optimizer.
    #[arg(long)]
    grid_density: Option<usize>,
    /// Relative finite-difference step of the frame checks.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Sampled points of the positivity check.
    #[arg(long)]
    positivity_samples: Option<usize>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    json: Option<String>,
    #[arg(long)]
    csv: Option<String>,
    #[arg(long)]
    svg: Option<String>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

impl RunArgs {
    fn config(&self, command: &str) -> Result<RunConfig, Error> {
        let n = match self.dim {
            Some(n) => n,
            None => self
                .functions
                .first()
                .map(|s| parse_spec(s))
                .transpose()?
                .and_then(|f| f.ambient_dim())
                .map_or(1, |m| m - 1),
        };
        let mut c = RunConfig::new(command, self.functions.clone(), n);
        c.scheme = match self.scheme {
            SchemeArg::Auto if n == 1 => {
                IntegrationScheme::tensor(self.chart_order).with_seed(self.seed)
            }
            SchemeArg::Auto | SchemeArg::Mc => IntegrationScheme::mc(self.samples, self.seed),
            SchemeArg::Tensor => IntegrationScheme::tensor(self.chart_order).with_seed(self.seed),
        };
        if let Some(t) = &self.t_grid {
            c.t_grid = t.clone();
        }
        if let Some(a) = &self.a_grid {
            c.a_grid = a.clone();
        }
        if let Some(d) = self.grid_density {
            c.grid_density = d;
        }
        if let Some(h) = self.fd_step {
            c.fd_step = h;
        }
        if let Some(p) = self.positivity_samples {
            c.positivity_samples = p;
        }
        c.outputs = Outputs {
            json: self.json.clone(),
            csv: self.csv.clone(),
            svg: self.svg.clone(),
        };
        c.validate()?;
        Ok(c)
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn write_out(path: Option<&str>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn emit_json<T: Serialize>(path: Option<&str>, value: &T) -> Result<(), Failure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(write_out(path, &text)?)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Analyze(args) => {
            if args.inject_fault {
                return Err(Failure::Usage("analyze has no fault hook".into()));
            }
            let config = args.config("analyze")?;
            let report = analyze(&config)?;
            emit_json(config.outputs.json.as_deref(), &report)?;
            if let Some(p) = &config.outputs.csv {
                std::fs::write(p, trace_csv(&report))?;
            }
            if let Some(p) = &config.outputs.svg {
                std::fs::write(p, trace_svg(&report))?;
            }
            Ok(report.passed)
        }
        Command::Constants { max_n } => {
            emit_json(None, &constants_table(max_n)?)?;
            Ok(true)
        }
        Command::Identities {
            max_n,
            inject_fault,
        } => {
            let table = identity_table(max_n, inject_fault)?;
            emit_json(None, &table)?;
            Ok(table.passed)
        }
        Command::Verify { suite, run } => {
            let config = run.config("verify")?;
            let report = verify(&config, suite.into(), run.inject_fault)?;
            emit_json(config.outputs.json.as_deref(), &report)?;
            if let Some(p) = &config.outputs.svg {
                match verify_svg(&report) {
                    Some(svg) => std::fs::write(p, svg)?,
                    None => eprintln!(
                        "suite {} has no per-k series; no SVG written",
                        report.suite.name()
                    ),
                }
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = std::env::var("MAMASS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
