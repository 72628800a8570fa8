use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::Parser;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{param, LabError, LabResult};
use crate::experiments;
use crate::report::write_csv;
use crate::runner::RayonRunner;

#[derive(Debug, Parser)]
#[command(name = "volterra-lab", version, about = "Simulation experiments for stochastic Volterra equations")]
pub struct Cli {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Run probes below the uniqueness threshold.
    #[arg(long)]
    pub allow_subcritical: bool,
    /// Parameter override `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

/// Runs the parsed command and writes the CSV.
pub fn execute(cli: &Cli) -> LabResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(cli.experiment),
    };
    if let Some(e) = cfg.experiment {
        if e != cli.experiment {
            return Err(param!(
                "config file is for experiment {} but the subcommand is {}",
                e.name(),
                cli.experiment.name()
            ));
        }
    }
    cfg.parameters.apply_overrides(&cli.params)?;
    if let Some(seed) = cli.seed {
        cfg.parameters.seed = Some(seed);
    }
    let out = cli.out.clone().or_else(|| cfg.parameters.output.as_ref().map(PathBuf::from));
    let runner = RayonRunner::new(cli.threads)?;
    let rows = experiments::run(cli.experiment, &cfg.parameters, &runner, cli.allow_subcritical)?;
    match out {
        Some(path) => {
            let io_err = |source| LabError::Io { path: path.display().to_string(), source };
            let f = File::create(&path).map_err(io_err)?;
            let mut w = BufWriter::new(f);
            write_csv(&mut w, &rows)?;
            w.flush().map_err(io_err)?;
        }
        None => write_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
