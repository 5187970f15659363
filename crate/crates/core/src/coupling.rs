//! Fixed-stress split driver.
//!
//! Each time step alternates a flow sweep (total stress frozen at the latest
//! mechanics iterate, or at the previous time level for `k = 1`) with a
//! mechanics sweep (pressure frozen at the new flow iterate) until the
//! convergence criterion
//!
//! ```text
//! 6 |alpha : d_p eps_e|^2 + |alpha : d_p eps_e + beta : d_p eps_p|^2 <= TOL
//! ```
//!
//! holds. Time is discretized with backward Euler.

use std::ops::{Add, Sub};
use std::time::Instant;

use log::{debug, info, warn};
use nalgebra::Vector3;

use crate::diagnostics::{
    self, check_contraction, check_identities, compute_ledger, ContractionCheck, IdentityReport,
    TheoremLedger,
};
use crate::element::POINTS_PER_CELL;
use crate::error::{Error, Result};
use crate::flow::{assemble_flow, solve_flow_from, FaceCoefficients, FlowState};
use crate::linalg::SolverOptions;
use crate::materials::MaterialSet;
use crate::mechanics::{mech_solve, MechOperator, MechOptions, MechState};
use crate::mesh::Grid;
use crate::tensor::{self, SymTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CriterionMode {
    /// Elastic/plastic strain criterion.
    #[default]
    Paper,
    /// `|B : d sigma|^2 <= TOL`.
    StressChange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub tol: f64,
    pub k_max: usize,
    pub dt: f64,
    pub t_final: f64,
    pub criterion_mode: CriterionMode,
    /// Scale `tol` by the criterion value of the first iteration of each step.
    pub relative_tol: bool,
    /// Abort when the contraction inequality is violated.
    pub fatal_contraction: bool,
    /// Retry a non-converged step once with two half steps.
    pub retry_halving: bool,
    pub flow_solver: SolverOptions,
    pub mechanics: MechOptions,
}

impl CouplingConfig {
    pub fn new(tol: f64, k_max: usize, dt: f64, t_final: f64) -> Result<Self> {
        let cfg = Self {
            tol,
            k_max,
            dt,
            t_final,
            criterion_mode: CriterionMode::Paper,
            relative_tol: false,
            fatal_contraction: false,
            retry_halving: true,
            flow_solver: SolverOptions::default(),
            mechanics: MechOptions::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "coupling.tol must be positive, got {}",
                self.tol
            )));
        }
        if self.k_max < 1 {
            return Err(Error::InvalidConfig("coupling.k_max must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidTimeStep(self.dt));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "time.T must be at least time.dt, got T = {} and dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(())
    }

    /// Time levels `t_1 .. t_N`; the last one is clipped to `t_final`.
    pub fn time_levels(&self) -> Vec<f64> {
        let n = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (1..=n)
            .map(|i| if i == n { self.t_final } else { i as f64 * self.dt })
            .collect()
    }
}

/// Time dependence of boundary loads (tractions and prescribed
/// displacements).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Ramp {
    /// Full load from the first step on.
    #[default]
    Constant,
    /// Linear from zero at `t = 0` to full load at `t = duration`.
    Linear { duration: f64 },
}

impl Ramp {
    pub fn factor(&self, time: f64) -> f64 {
        match *self {
            Ramp::Constant => 1.0,
            Ramp::Linear { duration } => (time / duration).clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loads {
    /// Volumetric source per unit bulk volume and time, per cell.
    pub source: Vec<f64>,
    pub ramp: Ramp,
}

impl Loads {
    pub fn none(grid: &Grid) -> Self {
        Self {
            source: vec![0.0; grid.num_cells()],
            ramp: Ramp::Constant,
        }
    }

    pub fn uniform_source(grid: &Grid, q: f64) -> Self {
        Self {
            source: vec![q; grid.num_cells()],
            ramp: Ramp::Constant,
        }
    }
}

/// Flow and mechanics fields at one time or iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub time: f64,
    pub flow: FlowState,
    pub mech: MechState,
}

impl CoupledState {
    /// Uniform pressure, zero displacement and stress.
    pub fn initial(grid: &Grid, pressure: f64) -> Self {
        Self {
            time: 0.0,
            flow: FlowState::uniform(grid, pressure),
            mech: MechState::zeros(grid),
        }
    }

    /// Fluid content at every quadrature point from the state function.
    pub fn point_fluid_content(&self, materials: &MaterialSet) -> Vec<f64> {
        self.mech
            .points
            .iter()
            .enumerate()
            .map(|(idx, pt)| {
                materials.coupling.fluid_content(
                    self.flow.pressure[idx / POINTS_PER_CELL],
                    &pt.stress,
                    pt.plastic_porosity,
                )
            })
            .collect()
    }

    /// Recomputes the cell-averaged fluid content.
    pub fn refresh_fluid_content(&mut self, materials: &MaterialSet) {
        let points = self.point_fluid_content(materials);
        self.flow.fluid_content = points
            .chunks(POINTS_PER_CELL)
            .map(|c| c.iter().sum::<f64>() / POINTS_PER_CELL as f64)
            .collect();
    }
}

/// Change of a field over the flow sweep and over the mechanics sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub flow: Vec<T>,
    pub mech: Vec<T>,
}

impl<T: Copy + Add<Output = T> + Sub<Output = T>> Split<T> {
    fn new(prev: &[T], after_flow: &[T], after_mech: &[T]) -> Self {
        Self {
            flow: after_flow.iter().zip(prev).map(|(a, b)| *a - *b).collect(),
            mech: after_mech.iter().zip(after_flow).map(|(a, b)| *a - *b).collect(),
        }
    }

    /// `d = d_f + d_p`.
    pub fn total(&self) -> Vec<T> {
        self.flow.iter().zip(&self.mech).map(|(f, m)| *f + *m).collect()
    }
}

/// Iterate differences of every field for one coupling iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDeltas {
    pub pressure: Split<f64>,
    pub flux: Split<f64>,
    pub displacement: Split<Vector3<f64>>,
    /// Per quadrature point.
    pub fluid_content: Split<f64>,
    pub plastic_porosity: Split<f64>,
    pub stress: Split<SymTensor>,
    pub elastic_strain: Split<SymTensor>,
    pub plastic_strain: Split<SymTensor>,
}

fn same_shape(a: &CoupledState, b: &CoupledState) -> Result<()> {
    let pairs = [
        ("pressure", a.flow.pressure.len(), b.flow.pressure.len()),
        ("flux", a.flow.flux.len(), b.flow.flux.len()),
        ("displacement", a.mech.displacement.len(), b.mech.displacement.len()),
        ("quadrature points", a.mech.points.len(), b.mech.points.len()),
    ];
    for (what, expected, found) in pairs {
        if expected != found {
            return Err(Error::ShapeMismatch {
                what,
                expected,
                found,
            });
        }
    }
    if a.mech.points.len() != a.flow.pressure.len() * POINTS_PER_CELL {
        return Err(Error::ShapeMismatch {
            what: "quadrature points",
            expected: a.flow.pressure.len() * POINTS_PER_CELL,
            found: a.mech.points.len(),
        });
    }
    Ok(())
}

/// Splits the change over one iteration into flow and mechanics parts.
pub fn delta_split(
    prev: &CoupledState,
    after_flow: &CoupledState,
    after_mech: &CoupledState,
    materials: &MaterialSet,
) -> Result<FieldDeltas> {
    same_shape(prev, after_flow)?;
    same_shape(prev, after_mech)?;
    let point_field = |f: fn(&crate::mechanics::PointState) -> SymTensor| {
        let pick = |s: &CoupledState| s.mech.points.iter().map(f).collect::<Vec<_>>();
        Split::new(&pick(prev), &pick(after_flow), &pick(after_mech))
    };
    let phi = |s: &CoupledState| {
        s.mech
            .points
            .iter()
            .map(|p| p.plastic_porosity)
            .collect::<Vec<_>>()
    };
    Ok(FieldDeltas {
        pressure: Split::new(
            &prev.flow.pressure,
            &after_flow.flow.pressure,
            &after_mech.flow.pressure,
        ),
        flux: Split::new(&prev.flow.flux, &after_flow.flow.flux, &after_mech.flow.flux),
        displacement: Split::new(
            &prev.mech.displacement,
            &after_flow.mech.displacement,
            &after_mech.mech.displacement,
        ),
        fluid_content: Split::new(
            &prev.point_fluid_content(materials),
            &after_flow.point_fluid_content(materials),
            &after_mech.point_fluid_content(materials),
        ),
        plastic_porosity: Split::new(&phi(prev), &phi(after_flow), &phi(after_mech)),
        stress: point_field(|p| p.stress),
        elastic_strain: point_field(|p| p.elastic_strain),
        plastic_strain: point_field(|p| p.plastic_strain),
    })
}

/// `6 |alpha:d_p eps_e|^2 + |alpha:d_p eps_e + beta:d_p eps_p|^2` with point
/// weight `weight`.
pub fn convergence_criterion(
    d_elastic: &[SymTensor],
    d_plastic: &[SymTensor],
    alpha: &SymTensor,
    beta: &SymTensor,
    weight: f64,
) -> f64 {
    d_elastic
        .iter()
        .zip(d_plastic)
        .map(|(e, p)| {
            let a = tensor::contract(alpha, e);
            let b = tensor::contract(beta, p);
            6.0 * a * a + (a + b) * (a + b)
        })
        .sum::<f64>()
        * weight
}

/// `|B : d sigma|^2` with point weight `weight`.
pub fn stress_change_criterion(d_stress: &[SymTensor], skempton: &SymTensor, weight: f64) -> f64 {
    d_stress
        .iter()
        .map(|s| tensor::contract(skempton, s).powi(2))
        .sum::<f64>()
        * weight
}

/// Bitwise freeze checks of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreezeCheck {
    /// `d_f sigma = 0`
    pub flow_stress: bool,
    /// `d_f eps_p = 0` and `d_f phi_p = 0`
    pub flow_plastic: bool,
    /// `d_p p = 0`
    pub mech_pressure: bool,
}

impl FreezeCheck {
    fn from_deltas(d: &FieldDeltas) -> Self {
        let zero = SymTensor::zeros();
        Self {
            flow_stress: d.stress.flow.iter().all(|s| *s == zero),
            flow_plastic: d.plastic_strain.flow.iter().all(|s| *s == zero)
                && d.plastic_porosity.flow.iter().all(|v| *v == 0.0),
            mech_pressure: d.pressure.mech.iter().all(|v| *v == 0.0),
        }
    }

    pub fn all(&self) -> bool {
        self.flow_stress && self.flow_plastic && self.mech_pressure
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Value of the configured convergence criterion.
    pub criterion: f64,
    /// The strain criterion, whatever the configured mode.
    pub strain_criterion: f64,
    pub ledger: TheoremLedger,
    pub contraction: Option<ContractionCheck>,
    pub identities: IdentityReport,
    pub freeze: FreezeCheck,
    /// Outer plastic iterations of the mechanics sweep.
    pub plastic_iterations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Time level index `n + 1` (1-based).
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    /// Tolerance applied to the criterion (scaled when relative).
    pub threshold: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl StepRecord {
    pub fn iterations_used(&self) -> usize {
        self.iterations.len()
    }

    pub fn criteria(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.criterion).collect()
    }

    pub fn stress_changes(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.ledger.t1).collect()
    }

    pub fn final_criterion(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.criterion)
    }
}

/// Grid, materials and the discretization objects reused by every step.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub materials: MaterialSet,
    pub operator: MechOperator,
    pub faces: FaceCoefficients,
}

impl Problem {
    pub fn new(grid: Grid, materials: MaterialSet) -> Result<Self> {
        let operator = MechOperator::new(&grid, &materials)?;
        let faces = FaceCoefficients::new(&grid, &materials);
        Ok(Self {
            grid,
            materials,
            operator,
            faces,
        })
    }
}

/// The three snapshots of one coupling iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterateSnapshots<'a> {
    pub step: usize,
    pub k: usize,
    pub prev: &'a CoupledState,
    pub after_flow: &'a CoupledState,
    pub after_mech: &'a CoupledState,
}

/// Advances `state_n` to `time` with the fixed-stress iteration.
pub fn fixed_stress_step(
    problem: &Problem,
    state_n: &CoupledState,
    step: usize,
    time: f64,
    config: &CouplingConfig,
    loads: &Loads,
) -> Result<(CoupledState, StepRecord)> {
    fixed_stress_step_observed(problem, state_n, step, time, config, loads, &mut |_| {})
}

/// As [`fixed_stress_step`], handing every iteration's snapshots to
/// `on_iteration`.
pub fn fixed_stress_step_observed(
    problem: &Problem,
    state_n: &CoupledState,
    step: usize,
    time: f64,
    config: &CouplingConfig,
    loads: &Loads,
    on_iteration: &mut dyn FnMut(IterateSnapshots<'_>),
) -> Result<(CoupledState, StepRecord)> {
    let grid = &problem.grid;
    let mat = &problem.materials;
    let dt = time - state_n.time;
    if !(dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    let load_factor = loads.ramp.factor(time);
    let weight = diagnostics::point_weight(grid);
    let cc = &mat.coupling;

    let mut record = StepRecord {
        step,
        time,
        dt,
        threshold: config.tol,
        iterations: Vec::new(),
        converged: false,
    };
    let mut prev = CoupledState {
        time,
        ..state_n.clone()
    };
    let mut previous_t1 = None;

    for k in 1..=config.k_max {
        let started = Instant::now();
        let system = assemble_flow(
            grid,
            mat,
            &prev.mech,
            &state_n.flow,
            &state_n.mech,
            dt,
            &loads.source,
        )?;
        let (flow, _) = solve_flow_from(
            &system,
            grid,
            &config.flow_solver,
            Some(&prev.flow.pressure),
        )?;
        let after_flow = CoupledState {
            time,
            flow,
            mech: prev.mech.clone(),
        };

        let mech = mech_solve(
            &problem.operator,
            grid,
            mat,
            &after_flow.flow.pressure,
            load_factor,
            &state_n.mech,
            &prev.mech,
            &config.mechanics,
        )?;
        let mut after_mech = CoupledState {
            time,
            flow: after_flow.flow.clone(),
            mech: mech.state,
        };
        after_mech.refresh_fluid_content(mat);

        on_iteration(IterateSnapshots {
            step,
            k,
            prev: &prev,
            after_flow: &after_flow,
            after_mech: &after_mech,
        });
        let deltas = delta_split(&prev, &after_flow, &after_mech, mat)?;
        let strain_criterion = convergence_criterion(
            &deltas.elastic_strain.mech,
            &deltas.plastic_strain.mech,
            &cc.alpha,
            &cc.beta,
            weight,
        );
        let criterion = match config.criterion_mode {
            CriterionMode::Paper => strain_criterion,
            CriterionMode::StressChange => {
                stress_change_criterion(&deltas.stress.mech, &cc.skempton, weight)
            }
        };
        let ledger = compute_ledger(&deltas, previous_t1, mat, &problem.faces, dt, grid);
        let contraction = check_contraction(&ledger);
        let identities = check_identities([&prev, &after_flow, &after_mech], &deltas, mat, grid);
        let freeze = FreezeCheck::from_deltas(&deltas);
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;

        if k == 1 && config.relative_tol {
            record.threshold = config.tol * criterion;
        }
        debug!(
            "step {step} k {k}: criterion {criterion:e}, T1 {:e}, plastic iterations {}",
            ledger.t1, mech.outer_iterations
        );
        if let Some(check) = &contraction {
            if !check.satisfied {
                warn!(
                    "step {step} k {k}: contraction inequality violated (lhs {:e}, rhs {:e})",
                    check.lhs, check.rhs
                );
                if config.fatal_contraction {
                    return Err(Error::ContractionViolated {
                        step,
                        iteration: k,
                        margin: check.margin,
                    });
                }
            }
        }

        record.iterations.push(IterationRecord {
            k,
            criterion,
            strain_criterion,
            ledger,
            contraction,
            identities,
            freeze,
            plastic_iterations: mech.outer_iterations,
            wall_ms,
        });
        previous_t1 = Some(ledger.t1);
        prev = after_mech;
        if criterion <= record.threshold {
            record.converged = true;
            return Ok((prev, record));
        }
    }
    Err(Error::NonConvergence {
        step,
        time,
        record: Box::new(record),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub steps: Vec<StepRecord>,
    pub final_state: CoupledState,
    /// Number of steps that were retried with a halved time step.
    pub halvings: usize,
    pub contraction_violations: usize,
}

impl SimulationReport {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(StepRecord::iterations_used).sum()
    }
}

/// Marches from `initial` to `config.t_final`. `observer` sees every accepted
/// step.
pub fn run_simulation<F>(
    problem: &Problem,
    config: &CouplingConfig,
    loads: &Loads,
    initial: CoupledState,
    observer: F,
) -> Result<SimulationReport>
where
    F: FnMut(&CoupledState, &StepRecord),
{
    run_simulation_observed(problem, config, loads, initial, observer, &mut |_| {})
}

/// As [`run_simulation`], also handing every coupling iteration (including
/// those of failed attempts) to `on_iteration`.
pub fn run_simulation_observed<F>(
    problem: &Problem,
    config: &CouplingConfig,
    loads: &Loads,
    initial: CoupledState,
    mut observer: F,
    on_iteration: &mut dyn FnMut(IterateSnapshots<'_>),
) -> Result<SimulationReport>
where
    F: FnMut(&CoupledState, &StepRecord),
{
    config.validate()?;
    if loads.source.len() != problem.grid.num_cells() {
        return Err(Error::ShapeMismatch {
            what: "source",
            expected: problem.grid.num_cells(),
            found: loads.source.len(),
        });
    }
    let mut state = initial;
    let mut steps = Vec::new();
    let mut halvings = 0;

    let mut accept = |state: &CoupledState, record: StepRecord, steps: &mut Vec<StepRecord>| {
        info!(
            "step {} t = {:e}: {} iteration(s), criterion {:e}",
            record.step,
            record.time,
            record.iterations_used(),
            record.final_criterion().unwrap_or(0.0)
        );
        observer(state, &record);
        steps.push(record);
    };

    for time in config.time_levels() {
        let step = steps.len() + 1;
        match fixed_stress_step_observed(problem, &state, step, time, config, loads, on_iteration) {
            Ok((next, record)) => {
                accept(&next, record, &mut steps);
                state = next;
            }
            Err(Error::NonConvergence { .. }) if config.retry_halving => {
                warn!("step {step} did not converge; retrying with two half steps");
                halvings += 1;
                let mid = 0.5 * (state.time + time);
                for t in [mid, time] {
                    let step = steps.len() + 1;
                    let (next, record) =
                        fixed_stress_step_observed(problem, &state, step, t, config, loads, on_iteration)?;
                    accept(&next, record, &mut steps);
                    state = next;
                }
            }
            Err(e) => return Err(e),
        }
    }

    let contraction_violations = steps
        .iter()
        .flat_map(|s| &s.iterations)
        .filter(|r| r.contraction.is_some_and(|c| !c.satisfied))
        .count();
    Ok(SimulationReport {
        steps,
        final_state: state,
        halvings,
        contraction_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{ElasticityTensor, FlowProps};
    use crate::mesh::{build_grid, BoundarySpec, FlowBc, MechBc, Plane};

    fn materials() -> MaterialSet {
        let flow = FlowProps {
            permeability: Vector3::repeat(0.5),
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
            None,
        )
        .unwrap()
    }

    fn column(n: usize, traction: f64) -> Problem {
        let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Roller).with(
            Plane::XMax,
            FlowBc::Dirichlet(0.0),
            MechBc::Traction(Vector3::new(-traction, 0.0, 0.0)),
        );
        let grid = build_grid(n, 1, 1, [n as f64, 1.0, 1.0], &bc).unwrap();
        Problem::new(grid, materials()).unwrap()
    }

    #[test]
    fn identical_snapshots_have_zero_deltas() {
        let p = column(2, 1.0);
        let mut s = CoupledState::initial(&p.grid, 0.4);
        s.mech.points[3].stress = SymTensor::identity();
        let d = delta_split(&s, &s, &s, &p.materials).unwrap();
        assert!(d.pressure.total().iter().all(|v| *v == 0.0));
        assert!(d.stress.total().iter().all(|v| *v == SymTensor::zeros()));
        assert!(d.fluid_content.total().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mismatched_snapshots_are_rejected() {
        let a = column(2, 1.0);
        let b = column(3, 1.0);
        let sa = CoupledState::initial(&a.grid, 0.0);
        let sb = CoupledState::initial(&b.grid, 0.0);
        assert!(matches!(
            delta_split(&sa, &sb, &sa, &a.materials),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn criterion_hand_values() {
        let alpha = SymTensor::identity();
        let zero = [SymTensor::zeros()];
        assert_eq!(convergence_criterion(&zero, &zero, &alpha, &alpha, 1.0), 0.0);
        // alpha : e = 0.3, beta : p = -0.3
        let e = [SymTensor::identity() * 0.1];
        let p = [SymTensor::identity() * -0.1];
        let v = 2.5;
        let got = convergence_criterion(&e, &p, &alpha, &alpha, v);
        assert!((got - 6.0 * 0.09 * v).abs() < 1e-15);
        let elastic = convergence_criterion(&e, &zero, &alpha, &alpha, v);
        assert!((elastic - 7.0 * 0.09 * v).abs() < 1e-15);
    }

    #[test]
    fn unloaded_problem_converges_at_first_iteration() {
        let p = column(3, 0.0);
        let cfg = CouplingConfig::new(1e-12, 10, 0.1, 0.1).unwrap();
        let init = CoupledState::initial(&p.grid, 0.0);
        let (next, rec) = fixed_stress_step(&p, &init, 1, 0.1, &cfg, &Loads::none(&p.grid)).unwrap();
        assert!(rec.converged);
        assert_eq!(rec.iterations_used(), 1);
        assert_eq!(rec.iterations[0].criterion, 0.0);
        assert_eq!(next.flow.pressure, vec![0.0; 3]);
    }

    #[test]
    fn single_step_when_final_time_equals_dt() {
        let p = column(2, 1.0);
        let cfg = CouplingConfig::new(1e-12, 30, 0.5, 0.5).unwrap();
        let mut seen = 0;
        let report = run_simulation(
            &p,
            &cfg,
            &Loads::none(&p.grid),
            CoupledState::initial(&p.grid, 0.0),
            |_, _| seen += 1,
        )
        .unwrap();
        assert_eq!(report.steps.len(), 1);
        assert_eq!(seen, 1);
        assert_eq!(report.final_state.time, 0.5);
    }

    #[test]
    fn larger_k_max_does_not_change_converged_states() {
        let p = column(4, 1.0);
        let loads = Loads::none(&p.grid);
        let run = |k_max| {
            let cfg = CouplingConfig::new(1e-14, k_max, 0.25, 1.0).unwrap();
            run_simulation(&p, &cfg, &loads, CoupledState::initial(&p.grid, 0.0), |_, _| {})
                .unwrap()
        };
        let a = run(40);
        let b = run(80);
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.steps.len(), b.steps.len());
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert_eq!(x.criteria(), y.criteria());
        }
    }

    #[test]
    fn elastic_iterations_record_frozen_fields() {
        let p = column(4, 2.0);
        let cfg = CouplingConfig::new(1e-14, 50, 0.1, 0.1).unwrap();
        let init = CoupledState::initial(&p.grid, 0.0);
        let (_, rec) = fixed_stress_step(&p, &init, 1, 0.1, &cfg, &Loads::none(&p.grid)).unwrap();
        assert!(rec.iterations_used() > 2);
        for it in &rec.iterations {
            assert!(it.freeze.all());
            assert!(it.ledger.nonnegative());
            assert!(it.identities.max() < 1e-12, "{:?}", it.identities);
        }
        let c = rec.criteria();
        assert!(c.windows(2).skip(1).all(|w| w[1] <= w[0]));
        assert!(*c.last().unwrap() <= 1e-14);
    }

    #[test]
    fn exhausted_iterations_report_the_record() {
        let p = column(4, 2.0);
        let mut cfg = CouplingConfig::new(1e-30, 2, 0.1, 0.1).unwrap();
        cfg.retry_halving = false;
        let init = CoupledState::initial(&p.grid, 0.0);
        match fixed_stress_step(&p, &init, 1, 0.1, &cfg, &Loads::none(&p.grid)) {
            Err(Error::NonConvergence { record, step, .. }) => {
                assert_eq!(step, 1);
                assert_eq!(record.iterations_used(), 2);
                assert!(!record.converged);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn halving_retry_splits_the_interval() {
        let p = column(4, 2.0);
        let mut cfg = CouplingConfig::new(1e-8, 3, 0.1, 0.1).unwrap();
        cfg.relative_tol = true;
        cfg.tol = 1e-3;
        let report = run_simulation(
            &p,
            &cfg,
            &Loads::none(&p.grid),
            CoupledState::initial(&p.grid, 0.0),
            |_, _| {},
        );
        match report {
            Ok(r) => {
                assert_eq!(r.halvings, 1);
                assert_eq!(r.steps.len(), 2);
                assert!((r.steps[0].time - 0.05).abs() < 1e-15);
            }
            Err(Error::NonConvergence { step, .. }) => assert_eq!(step, 1),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(CouplingConfig::new(0.0, 1, 1.0, 1.0).is_err());
        assert!(CouplingConfig::new(1e-8, 0, 1.0, 1.0).is_err());
        assert!(CouplingConfig::new(1e-8, 1, -1.0, 1.0).is_err());
        assert!(CouplingConfig::new(1e-8, 1, 2.0, 1.0).is_err());
        let c = CouplingConfig::new(1e-8, 1, 0.3, 1.0).unwrap();
        assert_eq!(c.time_levels(), vec![0.3, 0.6, 0.8999999999999999, 1.0]);
    }
}
