use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fkhull::harness::{run, Mode, RunConfig, RunSummary};

#[derive(Parser)]
#[command(name = "fkhull", version, about = "Hull functions of Frenkel-Kontorova chains: solve, continue, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Job {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-Newton solve of the short-range equation.
    SolveShort(Job),
    /// Quasi-Newton solve with long-range interactions.
    SolveLong(Job),
    /// Frequency-by-frequency continuation ladder.
    Continue(Job),
    /// Check a stored hull dump against the configured model.
    Verify(Job),
    /// Compare the spectral solver with the dense and finite-chain oracles.
    OracleCompare(Job),
    /// Run several configs in parallel, each in `<out>/<config stem>`.
    Batch {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn one(job: &Job, mode: Mode) -> Result<RunSummary> {
    let cfg = load(&job.config)?;
    run(&cfg, Some(mode), Some(&job.out)).with_context(|| format!("{} run of {}", mode.as_str(), job.config.display()))
}

fn print_summary(s: &RunSummary) {
    let r = &s.report;
    println!(
        "{}: {} status={} residual={:.3e} at rho={} checks_passed={}",
        s.mode.as_str(),
        r.title,
        r.status.as_str(),
        r.residual,
        r.residual_rho,
        r.all_passed()
    );
    for f in &s.files {
        println!("  wrote {}", f.display());
    }
}

fn batch(out: &Path, configs: &[PathBuf]) -> Result<bool> {
    let mut jobs = Vec::new();
    for c in configs {
        let cfg = load(c)?;
        if cfg.mode.is_none() {
            bail!("{}: batch configs must set `mode`", c.display());
        }
        let stem = c.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "job".into());
        jobs.push((c.clone(), cfg, out.join(stem)));
    }
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(name, cfg, dir)| scope.spawn(move || (name, run(cfg, None, Some(dir)))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("batch worker panicked")).collect()
    });
    let mut ok = true;
    for (name, r) in results {
        match r {
            Ok(s) => {
                print!("{}: ", name.display());
                print_summary(&s);
                ok &= s.report.all_passed();
            }
            Err(e) => {
                eprintln!("{}: error: {e}", name.display());
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SolveShort(j) => one(j, Mode::Short).map(|s| {
            print_summary(&s);
            s.report.all_passed()
        }),
        Command::SolveLong(j) => one(j, Mode::Long).map(|s| {
            print_summary(&s);
            s.report.all_passed()
        }),
        Command::Continue(j) => one(j, Mode::Ladder).map(|s| {
            print_summary(&s);
            s.report.all_passed()
        }),
        Command::OracleCompare(j) => one(j, Mode::Oracle).map(|s| {
            print_summary(&s);
            s.report.all_passed()
        }),
        Command::Verify(j) => one(j, Mode::Verify).map(|s| {
            print!("{}", s.report.to_text());
            println!();
            print!("{}", s.report.to_kv());
            s.report.all_passed()
        }),
        Command::Batch { out, configs } => batch(out, configs),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
