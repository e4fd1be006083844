use std::fs::{self, File};
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oseen_bench::experiments::ContinuationParam;
use oseen_bench::{
    run_constraint_study, run_continuation, run_convergence, run_spectra, run_twist, write_csv, write_dat, BenchError,
    Experiment, Row, Settings,
};

#[derive(Parser)]
#[command(name = "oseen-bench", about = "Oseen-Frank solver experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Twist benchmark over refinements and gamma.
    Twist,
    /// Continuation in K2 on the twist problem.
    ContinueK2,
    /// Continuation in q0 on the twist problem.
    ContinueQ0,
    /// Constraint error against gamma with constant anchoring.
    Constraint,
    /// Discretization error against the exact twist solution.
    Convergence,
    /// Eigenvalue estimates of the patch-preconditioned director block.
    Spectra,
}

#[derive(clap::Args)]
struct Flags {
    /// Refinement levels, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    refs: Vec<usize>,
    /// Augmentation parameter (repeatable or comma separated).
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Vec<f64>,
    /// lu, mg-star or mg-pbj.
    #[arg(long, global = true)]
    inner: Option<String>,
    /// newton or picard.
    #[arg(long, global = true)]
    linearization: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    k1: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    k2: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    k3: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    q0: Option<f64>,
    /// p1p1 or p2p1.
    #[arg(long, global = true)]
    element: Option<String>,
    #[arg(long, global = true)]
    atol: Option<f64>,
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Continuation step.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// CSV output path (stdout when absent); a gnuplot .dat file is written
    /// next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sequential, reproducible execution (the only mode implemented).
    #[arg(long, global = true)]
    deterministic: bool,
    /// File of key=value lines using the flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Twist => Experiment::Twist,
            Command::ContinueK2 => Experiment::ContinueK2,
            Command::ContinueQ0 => Experiment::ContinueQ0,
            Command::Constraint => Experiment::Constraint,
            Command::Convergence => Experiment::Convergence,
            Command::Spectra => Experiment::Spectra,
        }
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn settings(cli: &Cli) -> Result<Settings, BenchError> {
    let mut s = Settings::defaults(cli.command.experiment());
    let f = &cli.flags;
    if let Some(path) = &f.config {
        let text = fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        s.apply_config(&text)?;
    }
    let mut pairs: Vec<(&str, String)> = Vec::new();
    if !f.refs.is_empty() {
        pairs.push(("refs", join(&f.refs)));
    }
    if !f.gamma.is_empty() {
        pairs.push(("gamma", join(&f.gamma)));
    }
    let opts: [(&str, Option<String>); 10] = [
        ("inner", f.inner.clone()),
        ("linearization", f.linearization.clone()),
        ("k1", f.k1.map(|v| v.to_string())),
        ("k2", f.k2.map(|v| v.to_string())),
        ("k3", f.k3.map(|v| v.to_string())),
        ("q0", f.q0.map(|v| v.to_string())),
        ("element", f.element.clone()),
        ("atol", f.atol.map(|v| v.to_string())),
        ("rtol", f.rtol.map(|v| v.to_string())),
        ("step", f.step.map(|v| v.to_string())),
    ];
    pairs.extend(opts.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
    if let Some(out) = &f.out {
        pairs.push(("out", out.display().to_string()));
    }
    if f.deterministic {
        pairs.push(("deterministic", "true".into()));
    }
    for (k, v) in pairs {
        s.set(k, &v)?;
    }
    s.validate()?;
    Ok(s)
}

fn emit<T: serde::Serialize>(s: &Settings, rows: &[T]) -> Result<(), BenchError> {
    match &s.out {
        Some(path) => write_csv(File::create(path)?, rows),
        None => write_csv(io::stdout().lock(), rows),
    }
}

type Column = (&'static str, fn(&Row) -> Option<f64>);

fn emit_dat(s: &Settings, rows: &[Row], x: fn(&Row) -> Option<f64>, ys: &[Column]) -> Result<(), BenchError> {
    if let Some(path) = &s.out {
        write_dat(File::create(path.with_extension("dat"))?, rows, x, ys)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), BenchError> {
    let s = settings(cli)?;
    let mut err = io::stderr().lock();
    match cli.command {
        Command::Twist => {
            let rows = run_twist(&s)?;
            emit(&s, &rows)?;
            emit_dat(&s, &rows, |r| r.gamma, &[("avg_fgmres", |r| r.avg_fgmres), ("iters", |r| r.nonlinear_iters.map(|n| n as f64))])?;
        }
        Command::ContinueK2 | Command::ContinueQ0 => {
            let param = if matches!(cli.command, Command::ContinueK2) { ContinuationParam::K2 } else { ContinuationParam::Q0 };
            let rows = run_continuation(&s, param)?;
            emit(&s, &rows)?;
            emit_dat(&s, &rows, |r| r.param, &[("avg_fgmres", |r| r.avg_fgmres)])?;
        }
        Command::Constraint => {
            let (rows, summary) = run_constraint_study(&s)?;
            emit(&s, &rows)?;
            emit_dat(&s, &rows, |r| r.gamma, &[("constraint_norm", |r| r.constraint_norm)])?;
            if summary.degenerate {
                writeln!(
                    err,
                    "constraint study: degenerate, every run converged to the constant anchoring state (max |n - g| = {:.1e}); slope not measurable",
                    summary.max_deviation
                )?;
            } else {
                writeln!(err, "constraint study: slope {:?}, monotone {}", summary.slope, summary.monotone)?;
            }
        }
        Command::Convergence => {
            let (rows, summary) = run_convergence(&s)?;
            emit(&s, &rows)?;
            emit_dat(&s, &rows, |r| r.refs.map(|k| 0.1 / 2f64.powi(k as i32)), &[("l2", |r| r.l2_error), ("h1", |r| r.h1_error)])?;
            for (g, a, b) in summary.slopes {
                writeln!(err, "gamma {g:e}: L2 slope {a:.3}, H1 slope {b:.3}")?;
            }
        }
        Command::Spectra => {
            let rows = run_spectra(&s)?;
            emit(&s, &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                BenchError::Config(_) | BenchError::Solver(oseen::Error::InvalidArgument(_)) => 2,
                _ => 1,
            })
        }
    }
}
