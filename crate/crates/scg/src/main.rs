use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scg::cli::{execute_check, execute_gridsearch, execute_run, print_summary};
use scg::config::RunConfig;

/// Scaled conjugate gradient optimizer bench: seeded runs, conformance
/// checks, and convergence diagnostics over finite-sum problems.
#[derive(Parser)]
#[command(name = "scg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured trials, write trace CSVs and the summary.
    Run {
        /// Path to the key = value config file.
        config: PathBuf,
        /// Override a config value, e.g. --set schedule.alpha0=1e-2.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (default: out).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Shorthand for --set run.trials=K.
        #[arg(long)]
        trials: Option<usize>,
        /// Shorthand for --set run.seed=S.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the conformance suite (every applicable check unless the config
    /// names a subset) and write only the summary.
    Check {
        config: PathBuf,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run the configuration over a list of values for one parameter and
    /// report the final training loss per value.
    Gridsearch {
        config: PathBuf,
        /// Parameter to sweep, e.g. schedule.alpha0.
        #[arg(long)]
        param: String,
        /// Comma-separated values to try.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_config(path: &PathBuf, overrides: &[String]) -> scg::Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| scg::Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    for o in overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: scg::Result<bool> = match cli.command {
        Command::Run {
            config,
            set,
            out,
            trials,
            seed,
        } => (|| {
            let mut cfg = load_config(&config, &set)?;
            if let Some(k) = trials {
                cfg.apply_override(&format!("run.trials={k}"))?;
            }
            if let Some(s) = seed {
                cfg.apply_override(&format!("run.seed={s}"))?;
            }
            let artifacts = execute_run(&cfg, Some(&out))?;
            print_summary(&artifacts.summary);
            println!(
                "wrote {} trial CSVs, aggregate.csv, summary.txt to {}",
                artifacts.traces.len(),
                out.display()
            );
            Ok(artifacts.all_checks_passed())
        })(),
        Command::Check { config, set, out } => (|| {
            let cfg = load_config(&config, &set)?;
            let artifacts = execute_check(&cfg, Some(&out))?;
            print_summary(&artifacts.summary);
            println!("wrote summary.txt to {}", out.display());
            Ok(artifacts.all_checks_passed())
        })(),
        Command::Gridsearch {
            config,
            param,
            values,
            set,
            out,
        } => (|| {
            let cfg = load_config(&config, &set)?;
            let points = execute_gridsearch(&cfg, &param, &values, Some(&out))?;
            println!("{:<16} {:>16} {:>16}", param.as_str(), "final_f", "final_avg_V");
            let mut best: Option<&scg::cli::GridPoint> = None;
            for p in &points {
                println!(
                    "{:<16} {:>16.6e} {:>16}",
                    p.value,
                    p.final_f,
                    p.final_avg_v
                        .map(|v| format!("{v:.6e}"))
                        .unwrap_or_else(|| "NA".to_string())
                );
                if best.map(|b| p.final_f < b.final_f).unwrap_or(true) {
                    best = Some(p);
                }
            }
            if let Some(b) = best {
                println!("best {param} = {} (final_f {:.6e})", b.value, b.final_f);
            }
            println!("wrote gridsearch.csv to {}", out.display());
            Ok(true)
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
