mod keyrate;
mod reconcile;
mod run;
mod traces;

use std::path::Path;

use cvqkd::reconciliation::ParityCheckMatrix;

use crate::config::RunConfig;
use crate::{Cli, CliError, Command};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(frames) = cli.frames {
        cfg.n_frames = frames;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }

    match cli.command {
        Command::Run => run::cmd_run(&cfg, cli.jobs),
        Command::Keyrate(args) => keyrate::cmd_keyrate(&cfg, &args),
        Command::Traces { action } => traces::cmd_traces(&cfg, &action),
        Command::Reconcile(args) => reconcile::cmd_reconcile(&cfg, &args),
    }
}

/// Load a parity-check matrix from an alist file, or the embedded default
/// code when no path is given.
pub(crate) fn load_code(path: Option<&Path>) -> Result<ParityCheckMatrix, CliError> {
    match path {
        None => Ok(cvqkd::reconciliation::default_code().clone()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::usage(format!("cannot read alist {}: {e}", p.display()))
            })?;
            ParityCheckMatrix::parse_alist(&text)
                .map_err(|e| CliError::usage(format!("alist {}: {e}", p.display())))
        }
    }
}
