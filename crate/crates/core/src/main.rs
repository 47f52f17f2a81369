use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hatlab::diagnostics::{classify_point, radius_estimate};
use hatlab::harness::config::{DEFAULT_BITS, DEFAULT_DELTA, DEFAULT_GUARD, DEFAULT_ORDER};
use hatlab::harness::{emit, parse_config, report, run_experiment, ExperimentId, Overrides};
use hatlab::{make_context, parse_scalar, Catalog, Error, FunctionSpec, Result};

#[derive(Parser)]
#[command(name = "hatlab", version, about = "Experiments on the alternating derivative series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write its tables
    Run {
        #[command(flatten)]
        flags: Overrides,
        /// Flat `key = value` config file; flags take precedence
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the function specs and experiments
    Catalog,
    /// Classify a single point from its estimated radius
    Classify(PointArgs),
    /// Estimate the radius of convergence of the Taylor series at a point
    Radius(PointArgs),
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    f: String,
    #[arg(long, allow_hyphen_values = true)]
    t: String,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
    #[arg(long, default_value_t = DEFAULT_BITS)]
    bits: u32,
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: u32,
    #[arg(long, default_value_t = DEFAULT_DELTA, allow_hyphen_values = true)]
    delta: f64,
}

const CATALOG: &[(&str, &str)] = &[
    ("exp", "e^x"),
    ("sin", "sin x"),
    ("cos", "cos x"),
    ("poly:c0,c1,...", "polynomial with rational coefficients"),
    ("rational1p", "1/(1+x)"),
    ("flatexp:s=<1|2>", "e^(-1/x^s), zero at the origin"),
    (
        "bumpseries:a=<invfact|doubleexp>,s=<1|2>,l=<period>,u=<floor|sin>",
        "sum of a_n u(2^n x) for a periodic smooth bump u",
    ),
    ("lacunary:base=<2|half>", "sum of e^(i b^m x)/m! with b = 2 or 1/2"),
];

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e| Error::io("<stdout>", e);
    match command {
        Command::Run { flags, config } => {
            let cfg = parse_config(config.as_deref(), &flags)?;
            let result = run_experiment(&cfg)?;
            let files = emit(&result, cfg.format, &cfg.out)?;
            report::summary(&result, &mut out).map_err(io)?;
            for f in files {
                writeln!(out, "  wrote {}", f.display()).map_err(io)?;
            }
            eprintln!("wall time: {:.3} s", result.wall_time.as_secs_f64());
        }
        Command::Catalog => {
            writeln!(out, "functions:").map_err(io)?;
            for (spec, what) in CATALOG {
                writeln!(out, "  {spec:<68} {what}").map_err(io)?;
            }
            writeln!(out, "experiments:").map_err(io)?;
            for id in ExperimentId::ALL {
                let label = if id.exploratory() { " (exploratory)" } else { "" };
                writeln!(out, "  {id} {}{label}", id.name()).map_err(io)?;
            }
        }
        Command::Classify(p) => {
            let ctx = make_context(p.bits, p.guard)?;
            let spec = FunctionSpec::parse(&p.f)?;
            let t = parse_scalar(&p.t, &ctx)?;
            let c = classify_point(&Catalog::default(), &spec, &t, p.order, p.delta, &ctx)
                .map_err(|e| e.at_point("classify", t.label()))?;
            writeln!(out, "t,R_hat,abs_t,delta,case").map_err(io)?;
            writeln!(out, "{},{:e},{:e},{},{}", t.label(), c.r_hat, c.abs_t, c.delta, c.case).map_err(io)?;
            if let Some(reason) = c.reason {
                eprintln!("note: {reason}");
            }
        }
        Command::Radius(p) => {
            let ctx = make_context(p.bits, p.guard)?;
            let spec = FunctionSpec::parse(&p.f)?;
            let t = parse_scalar(&p.t, &ctx)?;
            let e = radius_estimate(&Catalog::default(), &spec, &t, p.order, &ctx)
                .map_err(|e| e.at_point("radius", t.label()))?;
            writeln!(out, "t,n_lo,n_hi,R_hat,trend").map_err(io)?;
            writeln!(out, "{},{},{},{:e},{}", t.label(), e.window.0, e.window.1, e.r_hat, e.trend).map_err(io)?;
        }
    }
    Ok(())
}
