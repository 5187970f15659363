//! Configuration, output writers and the run driver behind the `fss`
//! binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fss_core::coupling::{run_simulation, CoupledState, StepRecord};
use thiserror::Error;

pub use config::{parse_config, parse_str, SimConfig};
use output::RunSummary;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(fss_core::Error),
    #[error("run halted: {0}")]
    Halted(fss_core::Error),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
            CliError::Halted(_) => 4,
        }
    }
}

impl From<fss_core::Error> for CliError {
    fn from(e: fss_core::Error) -> Self {
        match e {
            fss_core::Error::NonConvergence { .. } | fss_core::Error::ContractionViolated { .. } => {
                CliError::Halted(e)
            }
            other => CliError::Solver(other),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub validate_only: bool,
    /// Overrides `coupling.fatal_contraction` when set.
    pub fatal_contraction: bool,
}

/// Files a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunOutputs {
    pub csv: Option<PathBuf>,
    pub vtk: Vec<PathBuf>,
    pub report: Option<PathBuf>,
}

pub fn step_line(record: &StepRecord) -> String {
    format!(
        "step {:4} t = {:.6e} k = {:3} criterion = {:.3e} {}",
        record.step,
        record.time,
        record.iterations_used(),
        record.final_criterion().unwrap_or(0.0),
        if record.converged { "converged" } else { "NOT converged" }
    )
}

/// Parses and validates `path`, then (unless `validate_only`) runs the
/// simulation, writing one summary line per step to `log`. Output files are
/// written even when the run halts.
pub fn run(path: &Path, opts: &RunOptions, log: &mut dyn Write) -> Result<RunOutputs, CliError> {
    let cfg = parse_config(path)?;
    let mut setup = cfg.setup()?;
    if opts.fatal_contraction {
        setup.coupling.fatal_contraction = true;
    }
    if opts.validate_only {
        let _ = writeln!(log, "configuration ok: {} cells", setup.problem.grid.num_cells());
        return Ok(RunOutputs::default());
    }

    // relative output directories resolve against the config file
    let dir = if setup.output.directory.is_absolute() {
        setup.output.directory.clone()
    } else {
        path.parent().unwrap_or(Path::new(".")).join(&setup.output.directory)
    };
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;

    let problem = &setup.problem;
    let mut outputs = RunOutputs::default();
    let initial = CoupledState::initial(&problem.grid, setup.initial_pressure);
    let vtk_every = setup.output.vtk_every;
    let write_vtk = |state: &CoupledState, step: usize, outputs: &mut RunOutputs| {
        let p = dir.join(format!("state_{step:04}.vtk"));
        output::write_vtk(&p, state, &problem.grid, &problem.materials)?;
        outputs.vtk.push(p);
        Ok::<(), CliError>(())
    };
    write_vtk(&initial, 0, &mut outputs)?;

    let mut accepted: Vec<StepRecord> = Vec::new();
    let mut last_state = initial.clone();
    let mut io_error = None;
    let result = run_simulation(problem, &setup.coupling, &setup.loads, initial, |state, record| {
        let _ = writeln!(log, "{}", step_line(record));
        if vtk_every > 0 && record.step % vtk_every == 0 && io_error.is_none() {
            if let Err(e) = write_vtk(state, record.step, &mut outputs) {
                io_error = Some(e);
            }
        }
        accepted.push(record.clone());
        last_state = state.clone();
    });
    if let Some(e) = io_error {
        return Err(e);
    }

    let (halvings, failure) = match result {
        Ok(report) => (report.halvings, None),
        Err(e) => (0, Some(e)),
    };
    let final_step = accepted.last().map(|r| r.step).unwrap_or(0);
    if !outputs.vtk.iter().any(|p| p.ends_with(format!("state_{final_step:04}.vtk"))) {
        write_vtk(&last_state, final_step, &mut outputs)?;
    }

    let mut records = accepted.clone();
    if let Some(fss_core::Error::NonConvergence { record, .. }) = &failure {
        let _ = writeln!(log, "{}", step_line(record));
        records.push((**record).clone());
    }
    let csv = dir.join(&setup.output.csv_name);
    output::write_iteration_csv(&csv, &records, setup.output.wall_time)?;
    outputs.csv = Some(csv);

    let summary = RunSummary::from_steps(&records, last_state.time, halvings);
    let report = dir.join("report.txt");
    output::write_report(&report, &summary)?;
    outputs.report = Some(report);
    let _ = write!(log, "{}", summary.render());

    match failure {
        Some(e) => Err(e.into()),
        None => Ok(outputs),
    }
}
