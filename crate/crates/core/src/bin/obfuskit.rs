//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on validation errors (bad flags, configs or
//! parameters), 1 on runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use obfuskit::harness::{self, config::TrainSpec, ExperimentConfig, RunReport, Scenario};
use obfuskit::obfuscate::{obfuscate_dataset_groups, obfuscate_dataset_individual, GroupParams, IndividualParams};
use obfuskit::{Dataset, Error, GroupSpec, Result, SensitiveSelection};

#[derive(Parser)]
#[command(name = "obfuskit", version, about = "Training-data obfuscation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Individual,
    Group,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Obfuscate a CSV dataset.
    Obfuscate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Coordinate ratio (individual) or augmentation ratio (group).
        #[arg(long)]
        r: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Individual mode: fraction of samples treated as sensitive.
        #[arg(long, default_value_t = 1.0)]
        selection_ratio: f64,
        /// Group mode: `whole` or a class label.
        #[arg(long, default_value = "whole")]
        group: String,
    },
    /// Train a model on a CSV dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// JSON file with `model`, `train` and optional `seed`.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config.
    Attack {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a finished run's report.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

/// Write to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).context(path.display().to_string()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Obfuscate {
            input,
            mode,
            r,
            sigma,
            seed,
            out,
            selection_ratio,
            group,
        } => {
            let data = Dataset::load_csv(&input)?;
            let result = match mode {
                Mode::Individual => {
                    let params = IndividualParams::new(r, sigma)?;
                    let sel = if selection_ratio >= 1.0 {
                        SensitiveSelection::all(data.len())
                    } else {
                        SensitiveSelection::random_fraction(data.len(), selection_ratio, seed)?
                    };
                    obfuscate_dataset_individual(&data, &sel, &params, seed)?
                }
                Mode::Group => {
                    let params = GroupParams::new(r, sigma)?;
                    let spec = match group.as_str() {
                        "whole" => GroupSpec::WholeDataset,
                        label => GroupSpec::ByLabel(
                            label
                                .parse()
                                .map_err(|_| Error::invalid("group", format!("expected `whole` or a class label, got `{label}`")))?,
                        ),
                    };
                    obfuscate_dataset_groups(&data, &[spec], &params, seed)?
                }
            };
            result.save_csv(&out)
        }
        Command::Train { data, spec, out } => {
            let data = Dataset::load_csv(&data)?;
            let spec: TrainSpec = read_json(&spec)?;
            let model = spec.fit(&data)?;
            emit(&format!("train accuracy {:.4}\n", model.accuracy(&data)?))?;
            model.save(&out)
        }
        Command::Attack { scenario, config, out } => {
            let scenario: Scenario = scenario.parse()?;
            let mut config = ExperimentConfig::load(&config)?;
            if config.scenario != scenario {
                return Err(Error::invalid(
                    "scenario",
                    format!("--scenario {} but the config is a {} experiment", scenario.name(), config.scenario.name()),
                ));
            }
            if out.is_some() {
                config.output_dir = out;
            }
            if config.output_dir.is_none() {
                return Err(Error::invalid("output_dir", "pass --out or set output_dir in the config"));
            }
            let report = harness::run_experiment(&config)?;
            emit(&report.summary_csv())
        }
        Command::Report { run, format } => {
            let report = RunReport::load(run.join("report.json"))?;
            match format {
                Format::Json => emit(&(report.to_json()? + "\n")),
                Format::Csv => emit(&report.summary_csv()),
            }
        }
    }
}
