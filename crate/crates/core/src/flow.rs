//! Flow sweep of the fixed-stress split: the mixed mass-conservation/Darcy
//! system with the total stress frozen.
//!
//! Pressure is piecewise constant per cell and the flux has one normal
//! component per face (lowest-order Raviart-Thomas on boxes). The Darcy mass
//! matrix is integrated with vertex (trapezoidal) quadrature, which makes it
//! diagonal in the face unknowns. Eliminating the fluxes leaves a symmetric
//! positive definite cell-centered system:
//!
//! ```text
//! F_f = T_f (p_minus - p_plus + rho0 g_a L_f)
//! C V (p - p^n) + dt sum_f s_f F_f
//!     = dt q V - (C/3) int B:(sigma_frozen - sigma^n) - int (phi_p - phi_p^n)
//! ```
//!
//! where `T_f` is the harmonic (two-point) transmissibility, `L_f` the
//! center-to-center (or center-to-face) distance, and a Dirichlet datum
//! replaces the missing neighbour pressure on boundary faces.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::element::POINTS_PER_CELL;
use crate::error::{Error, Result};
use crate::linalg::{self, SolveStats, SolverOptions};
use crate::materials::MaterialSet;
use crate::mechanics::MechState;
use crate::mesh::{FlowBc, Grid};
use crate::tensor;

/// Pressure, face fluxes and fluid content.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// Cellwise pressure.
    pub pressure: Vec<f64>,
    /// Facewise normal flux (integrated over the face, global orientation).
    pub flux: Vec<f64>,
    /// Cell-averaged fluid content.
    pub fluid_content: Vec<f64>,
}

impl FlowState {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            pressure: vec![0.0; grid.num_cells()],
            flux: vec![0.0; grid.num_faces()],
            fluid_content: vec![0.0; grid.num_cells()],
        }
    }

    pub fn uniform(grid: &Grid, pressure: f64) -> Self {
        Self {
            pressure: vec![pressure; grid.num_cells()],
            ..Self::zeros(grid)
        }
    }
}

/// Per-face coefficients of the eliminated Darcy law.
#[derive(Debug, Clone)]
pub struct FaceCoefficients {
    /// Transmissibility `T_f`; zero on no-flow faces.
    pub transmissibility: Vec<f64>,
    /// Gravity head `rho0 g_a L_f`.
    pub gravity_head: Vec<f64>,
    /// Dirichlet pressure for boundary faces on Dirichlet planes.
    pub dirichlet: Vec<Option<f64>>,
}

impl FaceCoefficients {
    pub fn new(grid: &Grid, materials: &MaterialSet) -> Self {
        let kappa = materials.flow.mobility();
        let rho0 = materials.flow.reference_density;
        let g = materials.flow.gravity;
        let n = grid.num_faces();
        let mut transmissibility = vec![0.0; n];
        let mut gravity_head = vec![0.0; n];
        let mut dirichlet = vec![None; n];
        for (idx, face) in grid.faces().iter().enumerate() {
            let a = face.axis.index();
            let h = grid.h[a];
            // vertex quadrature of (kappa^-1 v, v) over one cell: h / (2 kappa A)
            let half = h / (2.0 * kappa[a] * face.area);
            match face.plane {
                None => {
                    transmissibility[idx] = 1.0 / (2.0 * half);
                    gravity_head[idx] = rho0 * g[a] * h;
                }
                Some(plane) => match grid.boundary(plane).flow {
                    FlowBc::NoFlow => {}
                    FlowBc::Dirichlet(value) => {
                        transmissibility[idx] = 1.0 / half;
                        gravity_head[idx] = rho0 * g[a] * 0.5 * h;
                        dirichlet[idx] = Some(value);
                    }
                },
            }
        }
        Self {
            transmissibility,
            gravity_head,
            dirichlet,
        }
    }

    /// Face fluxes from cell pressures.
    pub fn fluxes(&self, grid: &Grid, pressure: &[f64]) -> Vec<f64> {
        grid.faces()
            .iter()
            .enumerate()
            .map(|(idx, face)| {
                let t = self.transmissibility[idx];
                if t == 0.0 {
                    return 0.0;
                }
                let side = |c: Option<usize>| match c {
                    Some(c) => pressure[c],
                    None => self.dirichlet[idx].expect("boundary face with transmissibility"),
                };
                t * (side(face.cells[0]) - side(face.cells[1]) + self.gravity_head[idx])
            })
            .collect()
    }

    /// `sum_f F_f^2 / T_f`: the discrete `|kappa^-1/2 z|^2` induced by the
    /// vertex-quadrature Darcy mass matrix.
    pub fn flux_energy(&self, flux: &[f64]) -> f64 {
        flux.iter()
            .zip(&self.transmissibility)
            .filter(|(_, t)| **t > 0.0)
            .map(|(f, t)| f * f / t)
            .sum()
    }
}

/// Assembled cell-centered flow system for one flow sweep.
#[derive(Debug, Clone)]
pub struct FlowSystem {
    pub matrix: CsrMatrix<f64>,
    pub rhs: Vec<f64>,
    pub dt: f64,
    pub faces: FaceCoefficients,
    storage: Vec<f64>,
    previous_pressure: Vec<f64>,
    /// `V (dphi_p + (C/3) B:dsigma) - dt q V` per cell.
    known_accumulation: Vec<f64>,
    /// Cell average of `(C/3) B:sigma + phi_p` at the frozen state.
    frozen_content: Vec<f64>,
    c: f64,
}

fn cell_average<F: Fn(usize) -> f64>(cell: usize, f: F) -> f64 {
    let base = cell * POINTS_PER_CELL;
    (base..base + POINTS_PER_CELL).map(f).sum::<f64>() / POINTS_PER_CELL as f64
}

/// Assembles the flow sweep with stress and plastic porosity frozen at
/// `frozen`, relative to the previous time level (`previous_flow`,
/// `previous_mech`).
pub fn assemble_flow(
    grid: &Grid,
    materials: &MaterialSet,
    frozen: &MechState,
    previous_flow: &FlowState,
    previous_mech: &MechState,
    dt: f64,
    source: &[f64],
) -> Result<FlowSystem> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidTimeStep(dt));
    }
    let ncell = grid.num_cells();
    let npts = ncell * POINTS_PER_CELL;
    for (what, found) in [
        ("frozen stress field", frozen.points.len()),
        ("previous stress field", previous_mech.points.len()),
    ] {
        if found != npts {
            return Err(Error::ShapeMismatch {
                what,
                expected: npts,
                found,
            });
        }
    }
    for (what, found) in [
        ("previous pressure", previous_flow.pressure.len()),
        ("source", source.len()),
    ] {
        if found != ncell {
            return Err(Error::ShapeMismatch {
                what,
                expected: ncell,
                found,
            });
        }
    }

    let cc = &materials.coupling;
    let c = cc.c;
    let vol = grid.cell_volume();
    let faces = FaceCoefficients::new(grid, materials);

    let mut storage = vec![c * vol; ncell];
    let mut known_accumulation = vec![0.0; ncell];
    let mut frozen_content = vec![0.0; ncell];
    let mut rhs = vec![0.0; ncell];
    for cell in 0..ncell {
        let d_stress = cell_average(cell, |q| {
            tensor::contract(
                &cc.skempton,
                &(frozen.points[q].stress - previous_mech.points[q].stress),
            )
        });
        let d_phi = cell_average(cell, |q| {
            frozen.points[q].plastic_porosity - previous_mech.points[q].plastic_porosity
        });
        frozen_content[cell] = cell_average(cell, |q| {
            c / 3.0 * tensor::contract(&cc.skempton, &frozen.points[q].stress)
                + frozen.points[q].plastic_porosity
        });
        let acc = vol * (d_phi + c / 3.0 * d_stress) - dt * source[cell] * vol;
        known_accumulation[cell] = acc;
        rhs[cell] = storage[cell] * previous_flow.pressure[cell] - acc;
    }

    let mut coo = CooMatrix::new(ncell, ncell);
    for (idx, face) in grid.faces().iter().enumerate() {
        let t = faces.transmissibility[idx];
        if t == 0.0 {
            continue;
        }
        let dtt = dt * t;
        let head = faces.gravity_head[idx];
        match face.cells {
            [Some(m), Some(p)] => {
                storage[m] += dtt;
                storage[p] += dtt;
                coo.push(m, p, -dtt);
                coo.push(p, m, -dtt);
                rhs[m] -= dtt * head;
                rhs[p] += dtt * head;
            }
            [Some(m), None] => {
                storage[m] += dtt;
                rhs[m] += dtt * (faces.dirichlet[idx].unwrap_or(0.0) - head);
            }
            [None, Some(p)] => {
                storage[p] += dtt;
                rhs[p] += dtt * (faces.dirichlet[idx].unwrap_or(0.0) + head);
            }
            [None, None] => unreachable!("face without cells"),
        }
    }
    // `storage` now holds the full diagonal; reset it to C V for residuals
    for (cell, diag) in storage.iter_mut().enumerate() {
        coo.push(cell, cell, *diag);
        *diag = c * vol;
    }
    let matrix = linalg::to_csr(&coo);
    check_spd_structure(&matrix)?;

    Ok(FlowSystem {
        matrix,
        rhs,
        dt,
        faces,
        storage,
        previous_pressure: previous_flow.pressure.clone(),
        known_accumulation,
        frozen_content,
        c,
    })
}

/// Symmetric with a positive, weakly dominant diagonal.
fn check_spd_structure(a: &CsrMatrix<f64>) -> Result<()> {
    if !linalg::is_symmetric(a) {
        return Err(Error::NotSpd("flow"));
    }
    for (i, row) in a.row_iter().enumerate() {
        let mut diag = 0.0;
        let mut off = 0.0;
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if j == i {
                diag = v;
            } else {
                off += v.abs();
            }
        }
        if !(diag > 0.0) || diag < off * (1.0 - 1e-12) {
            return Err(Error::NotSpd("flow"));
        }
    }
    Ok(())
}

/// Solves the cell-centered system and recovers fluxes and fluid content.
pub fn solve_flow(system: &FlowSystem, grid: &Grid, opts: &SolverOptions) -> Result<FlowState> {
    solve_flow_from(system, grid, opts, None).map(|(s, _)| s)
}

pub fn solve_flow_from(
    system: &FlowSystem,
    grid: &Grid,
    opts: &SolverOptions,
    initial: Option<&[f64]>,
) -> Result<(FlowState, SolveStats)> {
    let (pressure, stats) = linalg::pcg(&system.matrix, &system.rhs, initial, opts, "flow")?;
    let flux = system.faces.fluxes(grid, &pressure);
    let fluid_content = pressure
        .iter()
        .zip(&system.frozen_content)
        .map(|(p, f)| system.c * p + f)
        .collect();
    Ok((
        FlowState {
            pressure,
            flux,
            fluid_content,
        },
        stats,
    ))
}

impl FlowSystem {
    /// Cellwise residual of the discrete mass balance (integrated form) for a
    /// candidate state.
    pub fn mass_balance_residual(&self, grid: &Grid, state: &FlowState) -> Vec<f64> {
        (0..grid.num_cells())
            .map(|cell| {
                let outflow: f64 = grid
                    .cell_to_faces(cell)
                    .expect("cell in range")
                    .iter()
                    .map(|&(f, s)| s * state.flux[f])
                    .sum();
                self.storage[cell] * (state.pressure[cell] - self.previous_pressure[cell])
                    + self.dt * outflow
                    + self.known_accumulation[cell]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{ElasticityTensor, FlowProps, MaterialSet};
    use crate::mechanics::MechState;
    use crate::mesh::{build_grid, BoundarySpec, MechBc, Plane};
    use crate::tensor::SymTensor;
    use nalgebra::Vector3;

    fn materials(m: f64, kappa: f64) -> MaterialSet {
        let flow = FlowProps {
            permeability: Vector3::repeat(kappa),
            viscosity: 1.0,
            compressibility: 0.0,
            reference_density: 1.0,
            rock_density: 2.0,
            initial_porosity: 0.2,
            gravity: Vector3::zeros(),
        };
        MaterialSet::new(
            ElasticityTensor::isotropic(10.0, 0.25).unwrap(),
            SymTensor::identity() * 0.0,
            m,
            None,
            flow,
            None,
        )
        .unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions {
            rel_tol: 1e-12,
            max_iter_factor: 10,
        }
    }

    #[test]
    fn sealed_cell_keeps_pressure() {
        let grid = build_grid(1, 1, 1, [1.0; 3], &BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Fixed)).unwrap();
        let mat = materials(4.0, 1.0);
        let mech = MechState::zeros(&grid);
        let prev = FlowState::uniform(&grid, 3.5);
        let sys = assemble_flow(&grid, &mat, &mech, &prev, &mech, 0.1, &[0.0]).unwrap();
        let state = solve_flow(&sys, &grid, &opts()).unwrap();
        assert!((state.pressure[0] - 3.5).abs() < 1e-12);
        assert!(state.flux.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn constant_source_in_sealed_cell() {
        let lengths = [2.0, 1.0, 0.5];
        let grid = build_grid(1, 1, 1, lengths, &BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Fixed)).unwrap();
        let mat = materials(4.0, 1.0);
        let c = mat.coupling.c;
        let mech = MechState::zeros(&grid);
        let prev = FlowState::uniform(&grid, 1.0);
        let (dt, q) = (0.3, 2.0);
        let sys = assemble_flow(&grid, &mat, &mech, &prev, &mech, dt, &[q]).unwrap();
        let state = solve_flow(&sys, &grid, &opts()).unwrap();
        // integrated: C V (p - p^n) = dt q V
        let expected = 1.0 + dt * q / c;
        assert!((state.pressure[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn two_cell_steady_flux_matches_harmonic_transmissibility() {
        let kappa = 0.7;
        let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Fixed)
            .with(Plane::XMin, FlowBc::Dirichlet(0.0), MechBc::Fixed)
            .with(Plane::XMax, FlowBc::Dirichlet(1.0), MechBc::Fixed);
        let lengths = [2.0, 1.0, 1.0];
        let grid = build_grid(2, 1, 1, lengths, &bc).unwrap();
        let mat = materials(1e6, kappa);
        let mech = MechState::zeros(&grid);
        let mut state = FlowState::zeros(&grid);
        for _ in 0..3 {
            let sys = assemble_flow(&grid, &mat, &mech, &state, &mech, 1e9, &[0.0, 0.0]).unwrap();
            state = solve_flow(&sys, &grid, &opts()).unwrap();
        }
        // 1D Darcy: total resistance = half + full + half cell = L/(kappa A)
        let area = 1.0;
        let flux = -kappa * area * (1.0 - 0.0) / lengths[0];
        for f in 0..grid.num_faces() {
            if grid.face(f).axis == crate::mesh::Axis::X {
                assert!((state.flux[f] - flux).abs() < 1e-8, "{} vs {}", state.flux[f], flux);
            } else {
                assert_eq!(state.flux[f], 0.0);
            }
        }
        assert!((state.pressure[0] - 0.25).abs() < 1e-8);
        assert!((state.pressure[1] - 0.75).abs() < 1e-8);
    }

    #[test]
    fn matrix_symmetric_and_mass_balanced() {
        let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Fixed)
            .with(Plane::ZMax, FlowBc::Dirichlet(0.5), MechBc::Fixed);
        let grid = build_grid(3, 2, 2, [1.0, 1.0, 1.0], &bc).unwrap();
        let mut mat = materials(2.0, 0.3);
        mat.flow.gravity = Vector3::new(0.0, 0.0, -9.8);
        let mech = MechState::zeros(&grid);
        let mut frozen = MechState::zeros(&grid);
        for (i, p) in frozen.points.iter_mut().enumerate() {
            p.stress = SymTensor::identity() * (0.01 * i as f64);
            p.plastic_porosity = 1e-3 * (i % 5) as f64;
        }
        let prev = FlowState::zeros(&grid);
        let source: Vec<f64> = (0..grid.num_cells()).map(|c| c as f64 * 0.1).collect();
        let sys = assemble_flow(&grid, &mat, &frozen, &prev, &mech, 0.05, &source).unwrap();
        assert!(linalg::is_symmetric(&sys.matrix));
        let state = solve_flow(&sys, &grid, &opts()).unwrap();
        let scale = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for r in sys.mass_balance_residual(&grid, &state) {
            assert!(r.abs() < 1e-9 * scale);
        }
        for f in grid.plane_faces(Plane::XMin) {
            assert_eq!(state.flux[f], 0.0);
        }
    }

    #[test]
    fn rejects_bad_time_step_and_shapes() {
        let grid = build_grid(1, 1, 1, [1.0; 3], &BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Fixed)).unwrap();
        let mat = materials(1.0, 1.0);
        let mech = MechState::zeros(&grid);
        let prev = FlowState::zeros(&grid);
        assert!(matches!(
            assemble_flow(&grid, &mat, &mech, &prev, &mech, 0.0, &[0.0]),
            Err(Error::InvalidTimeStep(_))
        ));
        let mut short = mech.clone();
        short.points.truncate(3);
        assert!(matches!(
            assemble_flow(&grid, &mat, &short, &prev, &mech, 1.0, &[0.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
