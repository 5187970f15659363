//! Mechanics sweep of the fixed-stress split: quasi-static momentum balance
//! with the pore pressure frozen.
//!
//! Displacements are trilinear (Q1) with 2x2x2 Gauss quadrature; stress and
//! strain history live at the quadrature points (8 per cell). Plastic strain
//! is resolved by successive substitution: solve for `u` with the current
//! plastic strain estimate, compute the trial stress from the plastic strain
//! of the previous time level, return-map each point, repeat until the
//! plastic strain stops changing.

mod return_map;

pub use return_map::{return_map, ReturnMapping, ELASTIC_TOLERANCE, MAX_NEWTON_ITERATIONS};

use nalgebra::{Matrix6, SVector, Vector3, Vector6};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::element::{HexQ1, StrainMatrix, POINTS_PER_CELL};
use crate::error::{Error, Result};
use crate::linalg::{self, SolverOptions};
use crate::materials::{self, MaterialSet};
use crate::mesh::{Grid, MechBc, Plane};
use crate::tensor::{self, SymTensor};

/// State at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub stress: SymTensor,
    pub strain: SymTensor,
    pub elastic_strain: SymTensor,
    pub plastic_strain: SymTensor,
    pub plastic_porosity: f64,
    /// Plastic multiplier increment over the current time step.
    pub plastic_multiplier: f64,
}

impl Default for PointState {
    fn default() -> Self {
        Self {
            stress: SymTensor::zeros(),
            strain: SymTensor::zeros(),
            elastic_strain: SymTensor::zeros(),
            plastic_strain: SymTensor::zeros(),
            plastic_porosity: 0.0,
            plastic_multiplier: 0.0,
        }
    }
}

/// Nodal displacements and quadrature-point history.
#[derive(Debug, Clone, PartialEq)]
pub struct MechState {
    pub displacement: Vec<Vector3<f64>>,
    /// Indexed `cell * 8 + q`.
    pub points: Vec<PointState>,
}

impl MechState {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            displacement: vec![Vector3::zeros(); grid.num_nodes()],
            points: vec![PointState::default(); grid.num_cells() * POINTS_PER_CELL],
        }
    }

    pub fn cell_points(&self, cell: usize) -> &[PointState] {
        &self.points[cell * POINTS_PER_CELL..(cell + 1) * POINTS_PER_CELL]
    }

    pub fn cell_average<F: Fn(&PointState) -> SymTensor>(&self, cell: usize, f: F) -> SymTensor {
        self.cell_points(cell)
            .iter()
            .map(f)
            .fold(SymTensor::zeros(), |a, b| a + b)
            / POINTS_PER_CELL as f64
    }

    pub fn displacement_vector(&self) -> Vec<f64> {
        self.displacement
            .iter()
            .flat_map(|u| [u.x, u.y, u.z])
            .collect()
    }
}

/// Controls for the mechanics sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechOptions {
    pub linear: SolverOptions,
    /// Max-norm plastic strain change that ends the outer iteration.
    pub plastic_tol: f64,
    pub max_outer: usize,
    /// Aitken (Irons-Tuck) relaxation of the plastic strain update from the
    /// second outer iteration on.
    pub relaxation: bool,
}

impl Default for MechOptions {
    fn default() -> Self {
        Self {
            linear: SolverOptions {
                rel_tol: 1e-12,
                max_iter_factor: 10,
            },
            plastic_tol: 1e-10,
            max_outer: 25,
            relaxation: true,
        }
    }
}

/// Linear system in the nodal displacements with Dirichlet rows and columns
/// replaced by identity.
#[derive(Debug, Clone)]
pub struct MechSystem {
    pub matrix: CsrMatrix<f64>,
    pub rhs: Vec<f64>,
}

/// Reusable mechanics discretization: element data, stiffness and boundary
/// constraints of a grid.
#[derive(Debug, Clone)]
pub struct MechOperator {
    element: HexQ1,
    strain_matrices: [StrainMatrix; POINTS_PER_CELL],
    stiffness: CsrMatrix<f64>,
    constrained: CsrMatrix<f64>,
    /// Prescribed value per dof at unit load factor.
    dirichlet: Vec<Option<f64>>,
    /// Consistent traction loads at unit load factor.
    traction: Vec<f64>,
}

fn cell_dofs(grid: &Grid, cell: usize) -> [usize; 24] {
    let nodes = grid.cell_nodes(cell);
    std::array::from_fn(|i| 3 * nodes[i / 3] + i % 3)
}

impl MechOperator {
    pub fn new(grid: &Grid, materials: &MaterialSet) -> Result<Self> {
        let element = HexQ1::new(grid.h);
        let strain_matrices = element.strain_matrices();
        let ke = element.stiffness(materials.elasticity.voigt());
        let ndof = 3 * grid.num_nodes();

        let mut coo = CooMatrix::new(ndof, ndof);
        for cell in 0..grid.num_cells() {
            let dofs = cell_dofs(grid, cell);
            for (a, &ra) in dofs.iter().enumerate() {
                for (b, &rb) in dofs.iter().enumerate() {
                    coo.push(ra, rb, ke[(a, b)]);
                }
            }
        }
        let stiffness = linalg::to_csr(&coo);

        let (dirichlet, traction) = boundary_data(grid);
        check_rigid_modes(grid, &dirichlet)?;

        let mut cons = CooMatrix::new(ndof, ndof);
        for (row, cols, vals) in stiffness
            .row_iter()
            .enumerate()
            .map(|(i, r)| (i, r.col_indices().to_vec(), r.values().to_vec()))
        {
            if dirichlet[row].is_some() {
                cons.push(row, row, 1.0);
                continue;
            }
            for (c, v) in cols.into_iter().zip(vals) {
                if dirichlet[c].is_none() {
                    cons.push(row, c, v);
                }
            }
        }
        let constrained = linalg::to_csr(&cons);

        Ok(Self {
            element,
            strain_matrices,
            stiffness,
            constrained,
            dirichlet,
            traction,
        })
    }

    pub fn element(&self) -> &HexQ1 {
        &self.element
    }

    pub fn strain_matrices(&self) -> &[StrainMatrix; POINTS_PER_CELL] {
        &self.strain_matrices
    }

    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        &self.stiffness
    }

    pub fn dirichlet(&self) -> &[Option<f64>] {
        &self.dirichlet
    }

    pub fn num_dofs(&self) -> usize {
        self.dirichlet.len()
    }

    /// Traction plus body-force load vector.
    pub fn external_load(
        &self,
        grid: &Grid,
        materials: &MaterialSet,
        pressure: &[f64],
        load_factor: f64,
    ) -> Vec<f64> {
        let mut f: Vec<f64> = self.traction.iter().map(|t| t * load_factor).collect();
        let share = grid.cell_volume() / 8.0;
        for (cell, &p) in pressure.iter().enumerate() {
            let body = materials.flow.body_force(p);
            if body == Vector3::zeros() {
                continue;
            }
            for (i, dof) in cell_dofs(grid, cell).into_iter().enumerate() {
                f[dof] += body[i % 3] * share;
            }
        }
        f
    }

    /// Adds `sum_q B^T v_q w` over all cells, with `v_q` a Voigt stress.
    fn add_stress_divergence<F>(&self, grid: &Grid, out: &mut [f64], stress_at: F)
    where
        F: Fn(usize, usize) -> Vector6<f64>,
    {
        let w = self.element.weight();
        for cell in 0..grid.num_cells() {
            let mut fe = SVector::<f64, 24>::zeros();
            for (q, b) in self.strain_matrices.iter().enumerate() {
                let v = stress_at(cell, q);
                if v != Vector6::zeros() {
                    fe += b.transpose() * v * w;
                }
            }
            if fe == SVector::<f64, 24>::zeros() {
                continue;
            }
            for (i, dof) in cell_dofs(grid, cell).into_iter().enumerate() {
                out[dof] += fe[i];
            }
        }
    }

    /// Right-hand side before Dirichlet elimination: tractions, body force,
    /// the pressure term `(alpha p : eps(q))` and the plastic term
    /// `(D eps_p : eps(q))`.
    pub fn load_vector(
        &self,
        grid: &Grid,
        materials: &MaterialSet,
        pressure: &[f64],
        plastic_strain: &[SymTensor],
        load_factor: f64,
    ) -> Vec<f64> {
        let mut f = self.external_load(grid, materials, pressure, load_factor);
        let alpha = tensor::voigt_stress(&materials.coupling.alpha);
        let d: &Matrix6<f64> = materials.elasticity.voigt();
        self.add_stress_divergence(grid, &mut f, |cell, q| {
            let eps_p = &plastic_strain[cell * POINTS_PER_CELL + q];
            let plastic = if *eps_p == SymTensor::zeros() {
                Vector6::zeros()
            } else {
                d * tensor::voigt_strain(eps_p)
            };
            alpha * pressure[cell] + plastic
        });
        f
    }

    /// Applies Dirichlet elimination to a load vector.
    pub fn constrain(&self, load: &[f64], load_factor: f64) -> Vec<f64> {
        let prescribed: Vec<f64> = self
            .dirichlet
            .iter()
            .map(|d| d.map_or(0.0, |v| v * load_factor))
            .collect();
        let mut ku = vec![0.0; load.len()];
        linalg::spmv(&self.stiffness, &prescribed, &mut ku);
        load.iter()
            .enumerate()
            .map(|(i, f)| match self.dirichlet[i] {
                Some(_) => prescribed[i],
                None => f - ku[i],
            })
            .collect()
    }

    fn solve_displacement(
        &self,
        rhs: &[f64],
        initial: Option<&[f64]>,
        opts: &SolverOptions,
    ) -> Result<Vec<f64>> {
        linalg::pcg(&self.constrained, rhs, initial, opts, "mechanics").map(|(u, _)| u)
    }

    /// Strain at every quadrature point of a displacement field.
    pub fn strains(&self, grid: &Grid, u: &[f64]) -> Vec<SymTensor> {
        let mut out = Vec::with_capacity(grid.num_cells() * POINTS_PER_CELL);
        for cell in 0..grid.num_cells() {
            let dofs = cell_dofs(grid, cell);
            let ue = SVector::<f64, 24>::from_fn(|i, _| u[dofs[i]]);
            for b in &self.strain_matrices {
                out.push(tensor::from_voigt_strain(&(b * ue)));
            }
        }
        out
    }

    /// Weak-form residual `(t, q) + (f, q) - (sigma : eps(q))` per dof, zero on
    /// constrained dofs.
    pub fn equilibrium_residual(
        &self,
        grid: &Grid,
        materials: &MaterialSet,
        pressure: &[f64],
        state: &MechState,
        load_factor: f64,
    ) -> Vec<f64> {
        let mut r = self.external_load(grid, materials, pressure, load_factor);
        let mut internal = vec![0.0; r.len()];
        self.add_stress_divergence(grid, &mut internal, |cell, q| {
            tensor::voigt_stress(&state.points[cell * POINTS_PER_CELL + q].stress)
        });
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = if self.dirichlet[i].is_some() {
                0.0
            } else {
                *ri - internal[i]
            };
        }
        r
    }
}

/// Dirichlet values and traction loads at unit load factor.
fn boundary_data(grid: &Grid) -> (Vec<Option<f64>>, Vec<f64>) {
    let ndof = 3 * grid.num_nodes();
    let mut dirichlet = vec![None; ndof];
    let mut traction = vec![0.0; ndof];
    for (plane, bc) in grid.boundary_planes() {
        match bc.mech {
            MechBc::Traction(t) => {
                if t == Vector3::zeros() {
                    continue;
                }
                for face in grid.plane_faces(plane) {
                    let share = grid.face(face).area / 4.0;
                    for node in grid.face_nodes(face) {
                        for d in 0..3 {
                            traction[3 * node + d] += t[d] * share;
                        }
                    }
                }
            }
            _ => {
                for node in grid.plane_nodes(plane) {
                    let values = prescribed(plane, &bc.mech, &grid.node_position(node));
                    for (d, v) in values.into_iter().enumerate() {
                        if let Some(v) = v {
                            dirichlet[3 * node + d] = Some(v);
                        }
                    }
                }
            }
        }
    }
    (dirichlet, traction)
}

fn prescribed(plane: Plane, bc: &MechBc, x: &Vector3<f64>) -> [Option<f64>; 3] {
    match bc {
        MechBc::Traction(_) => [None; 3],
        MechBc::Fixed => [Some(0.0); 3],
        MechBc::Roller => {
            let mut v = [None; 3];
            v[plane.axis().index()] = Some(0.0);
            v
        }
        MechBc::Displacement(v) => *v,
        MechBc::LinearDisplacement(g) => {
            let u = g * x;
            [Some(u.x), Some(u.y), Some(u.z)]
        }
    }
}

/// Counts rigid-body modes (3 translations, 3 rotations) not restrained by the
/// Dirichlet dofs.
fn check_rigid_modes(grid: &Grid, dirichlet: &[Option<f64>]) -> Result<()> {
    let center = grid.origin
        + Vector3::new(
            grid.nx as f64 * grid.h.x,
            grid.ny as f64 * grid.h.y,
            grid.nz as f64 * grid.h.z,
        ) * 0.5;
    let mut gram = Matrix6::<f64>::zeros();
    for (dof, d) in dirichlet.iter().enumerate() {
        if d.is_none() {
            continue;
        }
        let comp = dof % 3;
        let x = grid.node_position(dof / 3) - center;
        let mut row = Vector6::zeros();
        row[comp] = 1.0;
        // rotation about axis r: u = e_r x x
        for r in 0..3 {
            let mut e = Vector3::zeros();
            e[r] = 1.0;
            row[3 + r] = e.cross(&x)[comp];
        }
        gram += row * row.transpose();
    }
    let sv = gram.symmetric_eigenvalues();
    let max = sv.max().max(1e-300);
    let free_modes = sv.iter().filter(|v| **v <= 1e-10 * max).count();
    if free_modes > 0 {
        return Err(Error::SingularMechanics { free_modes });
    }
    Ok(())
}

/// Stand-alone assembly of the constrained system for a given pressure and
/// plastic strain field.
pub fn assemble_mech(
    grid: &Grid,
    materials: &MaterialSet,
    pressure: &[f64],
    plastic_strain: &[SymTensor],
    load_factor: f64,
) -> Result<MechSystem> {
    let op = MechOperator::new(grid, materials)?;
    check_len("pressure", grid.num_cells(), pressure.len())?;
    check_len(
        "plastic strain",
        grid.num_cells() * POINTS_PER_CELL,
        plastic_strain.len(),
    )?;
    let load = op.load_vector(grid, materials, pressure, plastic_strain, load_factor);
    Ok(MechSystem {
        rhs: op.constrain(&load, load_factor),
        matrix: op.constrained,
    })
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Result of a mechanics sweep.
#[derive(Debug, Clone)]
pub struct MechSolve {
    pub state: MechState,
    /// Outer (plastic strain) iterations performed.
    pub outer_iterations: usize,
    /// Max-norm plastic strain change per outer iteration.
    pub history: Vec<f64>,
}

/// Mechanics sweep with pressure frozen.
///
/// `step_start` supplies the plastic strain of the previous time level (the
/// base of every trial stress); `warm` supplies the starting plastic strain
/// estimate and displacement guess, normally the previous coupling iterate.
#[allow(clippy::too_many_arguments)]
pub fn mech_solve(
    op: &MechOperator,
    grid: &Grid,
    materials: &MaterialSet,
    pressure: &[f64],
    load_factor: f64,
    step_start: &MechState,
    warm: &MechState,
    opts: &MechOptions,
) -> Result<MechSolve> {
    let npts = grid.num_cells() * POINTS_PER_CELL;
    check_len("pressure", grid.num_cells(), pressure.len())?;
    check_len("step-start state", npts, step_start.points.len())?;
    check_len("warm-start state", npts, warm.points.len())?;

    let d = &materials.elasticity;
    let alpha = materials.coupling.alpha;
    let beta = materials.coupling.beta;
    let mut estimate: Vec<SymTensor> = match materials.yield_model {
        Some(_) => warm.points.iter().map(|p| p.plastic_strain).collect(),
        None => step_start.points.iter().map(|p| p.plastic_strain).collect(),
    };
    let mut u_guess = warm.displacement_vector();
    let mut history = Vec::new();
    let mut omega = 1.0;
    let mut previous_residual: Option<Vec<f64>> = None;

    for outer in 1..=opts.max_outer.max(1) {
        let load = op.load_vector(grid, materials, pressure, &estimate, load_factor);
        let rhs = op.constrain(&load, load_factor);
        let u = op.solve_displacement(&rhs, Some(&u_guess), &opts.linear)?;
        let strains = op.strains(grid, &u);

        let mut points = Vec::with_capacity(npts);
        let mut change = 0.0_f64;
        for (idx, strain) in strains.into_iter().enumerate() {
            let cell = idx / POINTS_PER_CELL;
            let base = step_start.points[idx].plastic_strain;
            let trial = d.stress(&(strain - base)) - alpha * pressure[cell];
            let (stress, plastic_strain, multiplier) = match &materials.yield_model {
                Some(model) => {
                    let ret = return_map(&trial, model, d)?;
                    (ret.stress, base + ret.plastic_strain_increment, ret.multiplier)
                }
                None => (trial, base, 0.0),
            };
            change = change.max(tensor::max_abs(&(plastic_strain - estimate[idx])));
            points.push(PointState {
                stress,
                strain,
                elastic_strain: strain - plastic_strain,
                plastic_strain,
                plastic_porosity: tensor::contract(&beta, &plastic_strain),
                plastic_multiplier: multiplier,
            });
        }
        history.push(change);
        if change < opts.plastic_tol {
            let displacement = u.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
            return Ok(MechSolve {
                state: MechState {
                    displacement,
                    points,
                },
                outer_iterations: outer,
                history,
            });
        }
        let residual: Vec<f64> = points
            .iter()
            .zip(&estimate)
            .flat_map(|(p, e)| tensor::components(&(p.plastic_strain - e)))
            .collect();
        if opts.relaxation {
            if let Some(prev) = &previous_residual {
                omega = aitken_factor(omega, prev, &residual);
            }
        }
        for (idx, e) in estimate.iter_mut().enumerate() {
            let r = &residual[6 * idx..6 * idx + 6];
            *e += tensor::from_components([r[0], r[1], r[2], r[3], r[4], r[5]]) * omega;
        }
        previous_residual = Some(residual);
        u_guess = u;
    }
    Err(Error::PlasticIteration { history })
}

/// Irons-Tuck update of the relaxation factor, kept within `[0.1, 10]`.
fn aitken_factor(omega: f64, previous: &[f64], current: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, c) in previous.iter().zip(current) {
        let d = c - p;
        num += p * d;
        den += d * d;
    }
    if den == 0.0 {
        return omega;
    }
    (-omega * num / den).clamp(0.1, 10.0)
}

/// Maximum yield function value over all points (for output).
pub fn cell_max_yield(state: &MechState, cell: usize, materials: &MaterialSet) -> Option<f64> {
    let model = materials.yield_model.as_ref()?;
    Some(
        state
            .cell_points(cell)
            .iter()
            .map(|p| materials::yield_value(&p.stress, model))
            .fold(f64::NEG_INFINITY, f64::max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{ElasticityTensor, FlowProps, YieldModel};
    use crate::mesh::{build_grid, BoundarySpec, FlowBc};
    use nalgebra::Matrix3;

    fn materials(yield_model: Option<YieldModel>) -> MaterialSet {
        let flow = FlowProps {
            permeability: Vector3::repeat(1.0),
            viscosity: 1.0,
            compressibility: 0.0,
            reference_density: 1.0,
            rock_density: 2.0,
            initial_porosity: 0.2,
            gravity: Vector3::zeros(),
        };
        MaterialSet::new(
            ElasticityTensor::isotropic(10.0, 0.25).unwrap(),
            SymTensor::identity() * 0.8,
            20.0,
            None,
            flow,
            yield_model,
        )
        .unwrap()
    }

    fn solve(grid: &Grid, mat: &MaterialSet, p: &[f64], lf: f64) -> MechSolve {
        let op = MechOperator::new(grid, mat).unwrap();
        let zero = MechState::zeros(grid);
        mech_solve(&op, grid, mat, p, lf, &zero, &zero, &MechOptions::default()).unwrap()
    }

    fn column(n: usize, traction: f64) -> Grid {
        let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Roller).with(
            Plane::ZMax,
            FlowBc::NoFlow,
            MechBc::Traction(Vector3::new(0.0, 0.0, -traction)),
        );
        build_grid(1, 1, n, [1.0, 1.0, n as f64], &bc).unwrap()
    }

    #[test]
    fn unloaded_body_stays_at_rest() {
        let grid = column(2, 0.0);
        let mat = materials(None);
        let out = solve(&grid, &mat, &[0.0, 0.0], 1.0);
        assert!(out.state.displacement.iter().all(|u| *u == Vector3::zeros()));
        assert_eq!(out.outer_iterations, 1);
    }

    #[test]
    fn uniaxial_column_matches_oedometric_hooke() {
        let t = 0.3;
        let grid = column(4, t);
        let mat = materials(None);
        let out = solve(&grid, &mat, &[0.0; 4], 1.0);
        let d = mat.elasticity.voigt();
        let e_oed = d[(2, 2)];
        for (n, u) in out.state.displacement.iter().enumerate() {
            let z = grid.node_position(n).z;
            assert!((u.z + t * z / e_oed).abs() < 1e-11, "node {n}: {} vs {}", u.z, -t * z / e_oed);
            assert!(u.x.abs() < 1e-12 && u.y.abs() < 1e-12);
        }
        for p in &out.state.points {
            assert!((p.stress[(2, 2)] + t).abs() < 1e-11);
        }
    }

    #[test]
    fn patch_test_linear_displacement_gives_constant_stress() {
        let g = Matrix3::new(1e-3, 2e-4, -1e-4, 3e-4, -5e-4, 6e-4, 0.0, 1e-4, 2e-3);
        let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::LinearDisplacement(g));
        let grid = build_grid(2, 2, 2, [1.0, 1.5, 0.8], &bc).unwrap();
        let mat = materials(None);
        let out = solve(&grid, &mat, &[0.0; 8], 1.0);
        let expect = mat.elasticity.stress(&((g + g.transpose()) * 0.5));
        for p in &out.state.points {
            assert!((p.stress - expect).abs().max() < 1e-10);
        }
        // the interior node follows the linear field too
        let centre = grid.node_index(1, 1, 1);
        let x = grid.node_position(centre);
        assert!((out.state.displacement[centre] - g * x).norm() < 1e-12);
    }

    #[test]
    fn single_cell_shear_caps_at_yield() {
        let sigma_y = 0.05;
        let shear = 0.02;
        let mut g = Matrix3::zeros();
        g[(0, 1)] = shear;
        let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::LinearDisplacement(g));
        let grid = build_grid(1, 1, 1, [1.0; 3], &bc).unwrap();
        let mat = materials(Some(YieldModel::VonMises { sigma_y }));
        let out = solve(&grid, &mat, &[0.0], 1.0);
        for p in &out.state.points {
            let q = 1.5f64.sqrt() * tensor::norm(&tensor::deviator(&p.stress));
            assert!((q - sigma_y).abs() < 1e-10 * sigma_y);
            assert!(p.plastic_multiplier > 0.0);
            assert_eq!(p.plastic_porosity, tensor::contract(&mat.coupling.beta, &p.plastic_strain));
            assert!((p.strain - p.elastic_strain - p.plastic_strain).abs().max() < 1e-15);
        }
    }

    #[test]
    fn below_yield_matches_elastic_solve() {
        let grid = column(3, 0.01);
        let plastic = materials(Some(YieldModel::VonMises { sigma_y: 10.0 }));
        let elastic = materials(None);
        let a = solve(&grid, &plastic, &[0.1, 0.2, 0.3], 1.0);
        let b = solve(&grid, &elastic, &[0.1, 0.2, 0.3], 1.0);
        assert_eq!(a.outer_iterations, 1);
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn insufficient_constraints_are_reported() {
        let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::free())
            .with(Plane::ZMin, FlowBc::NoFlow, MechBc::Roller);
        let grid = build_grid(2, 2, 1, [1.0; 3], &bc).unwrap();
        // roller on z-min leaves x, y translations and rotation about z
        match MechOperator::new(&grid, &materials(None)) {
            Err(Error::SingularMechanics { free_modes }) => assert_eq!(free_modes, 3),
            other => panic!("expected singular system, got {other:?}"),
        }
    }
}
