//! Iteration CSV log, legacy VTK snapshots and the run report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fss_core::coupling::{CoupledState, StepRecord};
use fss_core::materials::MaterialSet;
use fss_core::mechanics::cell_max_yield;
use fss_core::mesh::Grid;
use fss_core::tensor;

use crate::CliError;

pub const CSV_HEADER: &str =
    "step,time,k,criterion,T1,T2,T3,T4,T5,Bracket,RHS,contraction_satisfied,wall_ms";

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per coupling iteration. `wall_ms` stays empty unless `wall_time`
/// is set, so reruns of the same configuration produce identical bytes.
pub fn iteration_csv(records: &[StepRecord], wall_time: bool) -> String {
    let mut out = String::with_capacity(256 * records.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for step in records {
        for it in &step.iterations {
            let l = &it.ledger;
            let rhs = l.rhs.map(num).unwrap_or_default();
            let satisfied = it
                .contraction
                .map(|c| c.satisfied.to_string())
                .unwrap_or_default();
            let wall = if wall_time {
                format!("{:.3}", it.wall_ms)
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{rhs},{satisfied},{wall}",
                step.step,
                num(step.time),
                it.k,
                num(it.criterion),
                num(l.t1),
                num(l.t2),
                num(l.t3),
                num(l.t4),
                num(l.t5),
                num(l.bracket),
            );
        }
    }
    out
}

pub fn write_iteration_csv(path: &Path, records: &[StepRecord], wall_time: bool) -> Result<(), CliError> {
    write(path, &iteration_csv(records, wall_time))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn scalars(out: &mut String, name: &str, values: impl Iterator<Item = f64>) {
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{}", num(v));
    }
}

/// Legacy ASCII structured grid: displacement at the nodes, pressure, fluid
/// content, plastic porosity, cell-averaged stress and (with a yield model)
/// the largest yield-function value per cell.
pub fn vtk_string(state: &CoupledState, grid: &Grid, materials: &MaterialSet) -> String {
    let ncell = grid.num_cells();
    let nnode = grid.num_nodes();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# vtk DataFile Version 3.0\nfixed-stress state t = {}\nASCII\nDATASET STRUCTURED_GRID",
        num(state.time)
    );
    let _ = writeln!(out, "DIMENSIONS {} {} {}", grid.nx + 1, grid.ny + 1, grid.nz + 1);
    let _ = writeln!(out, "POINTS {nnode} double");
    for node in 0..nnode {
        let x = grid.node_position(node);
        let _ = writeln!(out, "{} {} {}", num(x.x), num(x.y), num(x.z));
    }

    let _ = writeln!(out, "CELL_DATA {ncell}");
    scalars(&mut out, "p", state.flow.pressure.iter().copied());
    let zeta = state.point_fluid_content(materials);
    scalars(
        &mut out,
        "zeta",
        zeta.chunks(8).map(|c| c.iter().sum::<f64>() / c.len() as f64),
    );
    scalars(
        &mut out,
        "phi_p",
        (0..ncell).map(|c| {
            let pts = state.mech.cell_points(c);
            pts.iter().map(|p| p.plastic_porosity).sum::<f64>() / pts.len() as f64
        }),
    );
    let stress: Vec<[f64; 6]> = (0..ncell)
        .map(|c| tensor::components(&state.mech.cell_average(c, |p| p.stress)))
        .collect();
    for (i, name) in ["sigma_xx", "sigma_yy", "sigma_zz", "sigma_yz", "sigma_xz", "sigma_xy"]
        .iter()
        .enumerate()
    {
        scalars(&mut out, name, stress.iter().map(|s| s[i]));
    }
    if materials.yield_model.is_some() {
        scalars(
            &mut out,
            "yield",
            (0..ncell).map(|c| cell_max_yield(&state.mech, c, materials).unwrap_or(0.0)),
        );
    }

    let _ = writeln!(out, "POINT_DATA {nnode}\nVECTORS u double");
    for u in &state.mech.displacement {
        let _ = writeln!(out, "{} {} {}", num(u.x), num(u.y), num(u.z));
    }
    out
}

pub fn write_vtk(path: &Path, state: &CoupledState, grid: &Grid, materials: &MaterialSet) -> Result<(), CliError> {
    write(path, &vtk_string(state, grid, materials))
}

/// Summary of a finished (or halted) run as `key = value` lines.
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub halvings: usize,
    pub contraction_violations: usize,
    pub converged: bool,
}

impl RunSummary {
    pub fn from_steps(steps: &[StepRecord], final_time: f64, halvings: usize) -> Self {
        Self {
            steps: steps.len(),
            final_time,
            total_iterations: steps.iter().map(StepRecord::iterations_used).sum(),
            max_iterations: steps.iter().map(StepRecord::iterations_used).max().unwrap_or(0),
            halvings,
            contraction_violations: steps
                .iter()
                .flat_map(|s| &s.iterations)
                .filter(|r| r.contraction.is_some_and(|c| !c.satisfied))
                .count(),
            converged: steps.iter().all(|s| s.converged),
        }
    }

    pub fn render(&self) -> String {
        format!(
            "steps = {}\nfinal_time = {}\ntotal_iterations = {}\nmax_iterations_per_step = {}\n\
             halvings = {}\ncontraction_violations = {}\nconverged = {}\n",
            self.steps,
            num(self.final_time),
            self.total_iterations,
            self.max_iterations,
            self.halvings,
            self.contraction_violations,
            self.converged
        )
    }
}

pub fn write_report(path: &Path, summary: &RunSummary) -> Result<(), CliError> {
    write(path, &summary.render())
}
