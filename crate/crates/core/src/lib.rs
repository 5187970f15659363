//! Fixed-stress split coupling of single-phase flow and anisotropic
//! poroelastoplasticity on structured hexahedral grids.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod diagnostics;
pub mod element;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod materials;
pub mod mechanics;
pub mod mesh;
pub mod tensor;

pub use coupling::{
    delta_split, fixed_stress_step, run_simulation, run_simulation_observed, CoupledState,
    CouplingConfig, CriterionMode, IterateSnapshots, Loads, Problem, Ramp, SimulationReport,
    StepRecord,
};
pub use diagnostics::{check_contraction, check_identities, compute_ledger, TheoremLedger};
pub use error::{Error, Result};
pub use materials::{ElasticityTensor, FlowProps, MaterialSet, YieldModel};
pub use mesh::{build_grid, BoundarySpec, FlowBc, Grid, MechBc, Plane};
pub use tensor::SymTensor;
