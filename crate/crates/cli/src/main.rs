use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eqcnn::data::SplitOptions;
use eqcnn::ArchitectureId;
use eqcnn_cli::commands::{self, VerifyOptions};
use eqcnn_cli::experiment::ExperimentConfig;
use eqcnn_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "eqcnn",
    version,
    about = "Verify and train permutation-equivariant QCNNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the symmetry checks that apply to an architecture.
    Verify {
        architecture: String,
        /// Input qubits (16 for image models, 4 for Sₙ models by default).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Group the architecture must NOT be equivariant under.
        #[arg(long = "expect-fail")]
        expect_fail: Vec<String>,
        /// Also write the rows as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Train from a JSON experiment config.
    Train {
        config: PathBuf,
        /// `key.path=value` override, e.g. `train.runs=2`.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dataset root; defaults to $EQCNN_DATA, then `data/`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Tabulate mean test accuracy of two or more reports.
    Compare {
        reports: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print all 4-vertex graphs with labels and split membership as CSV.
    EnumerateGraphs {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a default experiment config.
    InitConfig {
        experiment: String,
        architecture: String,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn architecture(s: &str) -> CliResult<ArchitectureId> {
    s.parse()
        .map_err(|e: eqcnn::Error| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Verify {
            architecture: a,
            n,
            trials,
            tol,
            seed,
            expect_fail,
            json,
        } => {
            let id = architecture(&a)?;
            let opts = VerifyOptions {
                n,
                trials,
                tol,
                seed,
                expect_fail: expect_fail
                    .iter()
                    .map(|g| commands::parse_group(g))
                    .collect::<CliResult<_>>()?,
            };
            let rows = commands::verify(id, &opts)?;
            emit(&commands::render_verify(id, &rows));
            if let Some(p) = json {
                fs::write(
                    p,
                    serde_json::to_string_pretty(&rows).map_err(|e| CliError::Core(e.into()))?,
                )?;
            }
            let bad = rows.iter().filter(|r| !r.ok()).count();
            if bad > 0 {
                return Err(CliError::Check(format!(
                    "{bad} check(s) did not meet expectations"
                )));
            }
            Ok(())
        }
        Command::Train {
            config,
            set,
            out,
            data,
        } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
            let mut cfg = ExperimentConfig::from_json(&text, &set)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if data.is_some() {
                cfg.data_root = data;
            }
            let done = commands::train_experiment(&cfg)?;
            let r = &done.report;
            emit(&format!(
                "{}: {} runs x {} iterations, final test accuracy {:.4} ± {:.4}\nwrote {}\n",
                r.config.architecture,
                r.config.runs,
                r.config.iterations,
                r.final_mean.test_acc,
                r.final_std.test_acc,
                done.dir.display()
            ));
            Ok(())
        }
        Command::Compare { reports, csv } => {
            let loaded = reports
                .iter()
                .map(|p| commands::load_report(p))
                .collect::<CliResult<Vec<_>>>()?;
            let c = commands::compare(&loaded)?;
            emit(&c.render());
            if let Some(p) = csv {
                fs::write(p, c.to_csv())?;
            }
            Ok(())
        }
        Command::EnumerateGraphs { seed } => {
            emit(&commands::enumerate_graphs(seed, &SplitOptions::default())?);
            Ok(())
        }
        Command::InitConfig {
            experiment,
            architecture: a,
            iterations,
            seed,
        } => {
            let e = serde_json::from_value(serde_json::Value::String(experiment.clone()))
                .map_err(|_| CliError::Usage(format!("unknown experiment '{experiment}'")))?;
            let cfg = ExperimentConfig::defaults(e, architecture(&a)?, iterations, seed);
            cfg.validate()?;
            emit(
                &(serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Core(e.into()))? + "\n"),
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
