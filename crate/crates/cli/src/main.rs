use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};

use momentum_core::geometry::{diagnose, line_probe, Region, DEFAULT_PROBE_STEP, MIN_SAMPLES};
use momentum_core::harness::{self, output, ExperimentConfig, HarnessError, MuFallback, Target};
use momentum_core::lyapunov::Theorem;
use momentum_core::objectives::parse_objective_id;

#[derive(Parser)]
#[command(
    name = "momentum",
    version,
    about = "Momentum methods on landscapes with a manifold of minimizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig2,
    Fig4,
    #[value(name = "example1-table")]
    Example1Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fallback {
    ScMagnitude,
    Pl,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (TOML with dotted keys).
    Run { config: PathBuf },
    /// Certify a convergence theorem on its reference setup or another objective.
    Certify {
        /// continuous, global, discrete, additive, decreasing or agnes
        theorem: String,
        #[arg(long)]
        objective: Option<String>,
        /// Comma-separated initial point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Directory for the `n,lyap,ratio,target,pass` table.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample empirical geometric constants; prints a CSV table.
    Diagnose {
        #[arg(long)]
        objective: String,
        /// `default`, `box:lo,hi`, `shell:r_min,r_max[@centre]` or `sublevel:alpha[@lo,hi]`
        #[arg(long, default_value = "default")]
        region: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also probe `phi(t) = f(w + t d)` from this point (comma-separated).
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            requires = "line_direction"
        )]
        line_origin: Option<Vec<f64>>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            requires = "line_origin"
        )]
        line_direction: Option<Vec<f64>>,
        /// Probe grid `start:end:count`.
        #[arg(long, default_value = "-1:1:201", allow_hyphen_values = true)]
        line_grid: String,
        #[arg(long, default_value_t = DEFAULT_PROBE_STEP)]
        line_step: f64,
        /// Write tables here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regenerate figure data or the constants table.
    Reproduce {
        #[arg(value_enum)]
        target: Figure,
        #[arg(long, default_value = "reproduce-out")]
        output: PathBuf,
        /// Nesterov's mu where the closed form is not positive (fig4 only).
        #[arg(long, value_enum, default_value = "sc-magnitude")]
        fallback: Fallback,
    },
}

fn grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("line grid must be start:end:count, got `{spec}`");
    };
    let (a, b): (f64, f64) = (a.parse()?, b.parse()?);
    let n: usize = n.parse()?;
    if n < 2 {
        bail!("line grid needs at least two points");
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

fn emit(output: &Option<PathBuf>, name: &str, bytes: &[u8]) -> Result<()> {
    match output {
        Some(dir) => output::write_atomic(&dir.join(name), bytes)?,
        None => print!("{}", String::from_utf8_lossy(bytes)),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let summary = harness::run(&config)?;
            for line in &summary.lines {
                println!("{line}");
            }
            for c in &summary.certifications {
                println!("{}", c.verdict);
            }
            if let Some(f) = summary.final_f_mean {
                println!("final f (mean over {} run(s)): {f:.6e}", summary.seeds);
            }
            for a in &summary.artifacts {
                println!("wrote {}", a.display());
            }
            Ok(summary.pass)
        }
        Command::Certify {
            theorem,
            objective,
            x0,
            output,
        } => {
            let theorem: Theorem = theorem.parse()?;
            let outcome = harness::certify(theorem, objective.as_deref(), x0)?;
            println!("{}", outcome.verdict());
            if let Some(dir) = output {
                outcome.write_csv(&dir)?;
            }
            Ok(outcome.pass)
        }
        Command::Diagnose {
            objective,
            region,
            samples,
            seed,
            line_origin,
            line_direction,
            line_grid,
            line_step,
            output,
        } => {
            if samples < MIN_SAMPLES {
                bail!("--samples must be at least {MIN_SAMPLES}");
            }
            let f = parse_objective_id(&objective)?;
            let region = Region::parse(&region, &f)?;
            let report = diagnose(&f, &region, samples, seed)?;
            emit(&output, "diagnose.csv", &output::geometry_csv(&report)?)?;
            if let (Some(w), Some(d)) = (line_origin, line_direction) {
                let rows = line_probe(&f, &w, &d, &grid(&line_grid)?, line_step)?;
                if output.is_none() {
                    println!();
                }
                emit(&output, "line_probe.csv", &output::probe_csv(&rows)?)?;
            }
            Ok(true)
        }
        Command::Reproduce {
            target,
            output,
            fallback,
        } => {
            let summary = match (target, fallback) {
                (Figure::Fig4, Fallback::Pl) => {
                    let rep = harness::reproduce_fig4(MuFallback::Pl)?;
                    rep.write(&output)?;
                    for line in rep.lines() {
                        println!("{line}");
                    }
                    return Ok(rep.pass());
                }
                (Figure::Fig2, _) => harness::reproduce(Target::Fig2, &output)?,
                (Figure::Fig4, _) => harness::reproduce(Target::Fig4, &output)?,
                (Figure::Example1Table, _) => harness::reproduce(Target::Example1Table, &output)?,
            };
            for line in &summary.lines {
                println!("{line}");
            }
            println!("wrote {}", output.display());
            Ok(summary.pass)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            match e.downcast_ref::<HarnessError>() {
                Some(HarnessError::Config { .. }) => eprintln!("config error: {e}"),
                _ => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
