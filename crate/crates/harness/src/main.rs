use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use daem_harness::checks;
use daem_harness::config::{ConfigError, ExperimentConfig};
use daem_harness::pipeline::{self, Layout};
use daem_harness::report;
use daem_nn::Checkpoint;

#[derive(Parser)]
#[command(name = "daem", version, about = "Learned error mitigation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for dataset generation; 1 runs everything on one thread.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate datasets, train, evaluate and write the report.
    Run(RunArgs),
    /// Generate both dataset phases and the baseline data only.
    Dataset(RunArgs),
    /// Train on a previously generated dataset.
    Train(RunArgs),
    /// Evaluate a checkpoint on the error-mitigation set.
    Evaluate(RunArgs),
    /// Run the invariant suites.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides DAEM_SEED, which overrides the config file.
    #[arg(long, env = "DAEM_SEED")]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`, then `runs/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shots per statistic.
    #[arg(long, conflicts_with = "exact_shots")]
    shots: Option<usize>,
    /// Exact statistics (same as `--shots 0`).
    #[arg(long)]
    exact_shots: bool,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), ConfigError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.exact_shots {
            cfg.dataset.shots = 0;
        } else if let Some(shots) = self.shots {
            cfg.dataset.shots = shots;
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| Path::new("runs").join(cfg.experiment.name()));
        Ok((cfg, out))
    }
}

fn print_report(r: &report::Report, out: &Path) {
    println!(
        "experiment {} (config {})",
        r.provenance.experiment,
        &r.provenance.config_hash[..12]
    );
    print!("{}", report::summary_table(&r.metrics));
    println!("artifacts in {}", out.display());
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Selftest => {
            let results = checks::run_all();
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                println!("{tag} {:<16} {:>7.2}s  {}", r.name, r.seconds, r.detail);
            }
            let ok = results.iter().all(|r| r.passed);
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Command::Run(args) => {
            let (cfg, out) = args.load()?;
            let r = pipeline::run(&cfg, Some(&out))?;
            print_report(&r, &out);
            Ok(ExitCode::SUCCESS)
        }
        Command::Dataset(args) => {
            let (cfg, out) = args.load()?;
            let data = pipeline::build_datasets(&cfg)?;
            pipeline::write_datasets(&Layout::new(&out), &cfg, &data)?;
            println!(
                "{} noise-awareness training, {} validation, {} error-mitigation samples in {}",
                data.na_train.len(),
                data.na_val.len(),
                data.em_test.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Train(args) => {
            let (cfg, out) = args.load()?;
            let layout = Layout::new(&out);
            let data = pipeline::read_datasets(&layout, &cfg)?;
            let ck = pipeline::train_model(&cfg, &data)?;
            ck.save(&layout.checkpoint())?;
            let best = ck
                .history
                .get(ck.best_epoch)
                .map_or(f64::NAN, |e| e.val_loss);
            println!(
                "best validation loss {best:.6e} at epoch {}; checkpoint {}",
                ck.best_epoch,
                layout.checkpoint().display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate(args) => {
            let (cfg, out) = args.load()?;
            let layout = Layout::new(&out);
            let data = pipeline::read_datasets(&layout, &cfg)?;
            let ck = Checkpoint::load(&layout.checkpoint())?;
            let r = pipeline::evaluate(&cfg, &data, &ck)?;
            report::write_all(&out, &r)?;
            print_report(&r, &out);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
