//! TOML run configuration. Every user-settable model symbol has exactly one
//! key; unknown keys are rejected.

use std::path::{Path, PathBuf};

use fss_core::coupling::{CouplingConfig, CriterionMode, Loads, Problem, Ramp};
use fss_core::materials::{ElasticityTensor, FlowProps, MaterialSet, YieldModel};
use fss_core::mesh::{build_grid, BoundarySpec, FlowBc, MechBc, Plane};
use fss_core::tensor::{self, SymTensor};
use nalgebra::{Matrix3, Matrix6, Vector3};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub materials: MaterialsConfig,
    #[serde(rename = "yield")]
    pub yield_: Option<YieldConfig>,
    pub bc: BcConfig,
    pub time: TimeConfig,
    pub coupling: CouplingSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub loads: LoadsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

/// A scalar (times the identity) or the six components `[xx,yy,zz,yz,xz,xy]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TensorSpec {
    Scalar(f64),
    Entries([f64; 6]),
}

/// A scalar or the diagonal `[x,y,z]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DiagonalSpec {
    Scalar(f64),
    Entries([f64; 3]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Alias(String),
    Entries([f64; 6]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    /// Upper triangle of the 6x6 Voigt matrix, row by row (21 entries).
    #[serde(rename = "D")]
    pub d: Option<Vec<f64>>,
    #[serde(rename = "E")]
    pub young: Option<f64>,
    pub nu: Option<f64>,
    pub alpha: TensorSpec,
    #[serde(rename = "M")]
    pub biot_modulus: f64,
    pub beta: Option<BetaSpec>,
    #[serde(rename = "K")]
    pub permeability: DiagonalSpec,
    pub mu: f64,
    #[serde(default)]
    pub c: f64,
    pub rho0: f64,
    pub rho_r: f64,
    pub phi0: f64,
    #[serde(default)]
    pub gravity: [f64; 3],
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum YieldKind {
    VonMises,
    DruckerPrager,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YieldConfig {
    pub kind: YieldKind,
    pub sigma_y: f64,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum FlowTag {
    NoFlow,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum MechTag {
    Traction,
    Fixed,
    Roller,
    Displacement,
    Linear,
}

/// Prescribed components; absent components stay free.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Components {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceConfig {
    pub flow: FlowTag,
    pub pressure: Option<f64>,
    pub mech: MechTag,
    pub traction: Option<[f64; 3]>,
    pub displacement: Option<Components>,
    /// Rows of `G` in `u = G x`.
    pub gradient: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub xmin: FaceConfig,
    pub xmax: FaceConfig,
    pub ymin: FaceConfig,
    pub ymax: FaceConfig,
    pub zmin: FaceConfig,
    pub zmax: FaceConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum CriterionName {
    #[default]
    Paper,
    StressChange,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub tol: f64,
    pub k_max: usize,
    #[serde(default)]
    pub criterion_mode: CriterionName,
    #[serde(default)]
    pub relative_tol: bool,
    #[serde(default)]
    pub fatal_contraction: bool,
    #[serde(default = "yes")]
    pub retry_halving: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// VTK snapshot every this many steps; 0 writes only the final state.
    #[serde(default)]
    pub vtk_every: usize,
    #[serde(default = "default_csv")]
    pub csv_name: String,
    /// Fill the `wall_ms` column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub wall_time: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("output")
}

fn default_csv() -> String {
    "iterations.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            vtk_every: 0,
            csv_name: default_csv(),
            wall_time: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum RampKind {
    #[default]
    Constant,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    Uniform(f64),
    Cells(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LoadsConfig {
    /// Source `q` per unit bulk volume and time.
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub ramp: RampKind,
    pub ramp_duration: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub pressure: f64,
}

/// Everything the driver needs, built from a validated config.
pub struct Setup {
    pub problem: Problem,
    pub coupling: CouplingConfig,
    pub loads: Loads,
    pub initial_pressure: f64,
    pub output: OutputConfig,
}

pub fn parse_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<SimConfig, CliError> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.materials()?;
    cfg.boundary()?;
    cfg.yield_model()?;
    cfg.coupling_config()?;
    cfg.loads_ramp()?;
    Ok(cfg)
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn core(key: &str, e: fss_core::Error) -> CliError {
    CliError::Config(format!("{key}: {e}"))
}

fn sym_from(key: &str, spec: &TensorSpec) -> Result<SymTensor, CliError> {
    let t = match spec {
        TensorSpec::Scalar(v) => SymTensor::identity() * *v,
        TensorSpec::Entries(c) => tensor::from_components(*c),
    };
    if t.iter().any(|v| !v.is_finite()) {
        return Err(bad(format!("{key} must be finite")));
    }
    Ok(t)
}

impl SimConfig {
    pub fn elasticity(&self) -> Result<ElasticityTensor, CliError> {
        let m = &self.materials;
        match (&m.d, m.young, m.nu) {
            (Some(d), None, None) => {
                if d.len() != 21 {
                    return Err(bad(format!(
                        "materials.D must have 21 entries (upper triangle by rows), got {}",
                        d.len()
                    )));
                }
                let mut v = Matrix6::zeros();
                let mut it = d.iter();
                for i in 0..6 {
                    for j in i..6 {
                        let x = *it.next().unwrap();
                        v[(i, j)] = x;
                        v[(j, i)] = x;
                    }
                }
                ElasticityTensor::from_voigt(v).map_err(|e| core("materials.D", e))
            }
            (None, Some(e), Some(nu)) => {
                ElasticityTensor::isotropic(e, nu).map_err(|e| core("materials.E/nu", e))
            }
            _ => Err(bad(
                "materials: give either D (21 entries) or both E and nu",
            )),
        }
    }

    pub fn materials(&self) -> Result<MaterialSet, CliError> {
        let m = &self.materials;
        let elasticity = self.elasticity()?;
        let alpha = sym_from("materials.alpha", &m.alpha)?;
        let beta = match &m.beta {
            None => None,
            Some(BetaSpec::Alias(s)) if s == "alpha" => None,
            Some(BetaSpec::Alias(s)) => {
                return Err(bad(format!(
                    "materials.beta must be 6 entries or \"alpha\", got \"{s}\""
                )))
            }
            Some(BetaSpec::Entries(c)) => Some(tensor::from_components(*c)),
        };
        if !(m.biot_modulus > 0.0) || !m.biot_modulus.is_finite() {
            return Err(bad(format!(
                "materials.M must be positive, got {}",
                m.biot_modulus
            )));
        }
        let permeability = match m.permeability {
            DiagonalSpec::Scalar(k) => Vector3::repeat(k),
            DiagonalSpec::Entries(k) => Vector3::from(k),
        };
        if !(m.c >= 0.0) {
            return Err(bad(format!("materials.c must be nonnegative, got {}", m.c)));
        }
        for (key, v) in [("materials.rho0", m.rho0), ("materials.rho_r", m.rho_r)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(bad(format!("{key} must be nonnegative, got {v}")));
            }
        }
        let flow = FlowProps {
            permeability,
            viscosity: m.mu,
            compressibility: m.c,
            reference_density: m.rho0,
            rock_density: m.rho_r,
            initial_porosity: m.phi0,
            gravity: Vector3::from(m.gravity),
        };
        MaterialSet::new(elasticity, alpha, m.biot_modulus, beta, flow, self.yield_model()?)
            .map_err(|e| core("materials", e))
    }

    pub fn yield_model(&self) -> Result<Option<YieldModel>, CliError> {
        let Some(y) = &self.yield_ else {
            return Ok(None);
        };
        let model = match (y.kind, y.eta) {
            (YieldKind::VonMises, None) => YieldModel::VonMises { sigma_y: y.sigma_y },
            (YieldKind::VonMises, Some(_)) => {
                return Err(bad("yield.eta applies to drucker_prager only"))
            }
            (YieldKind::DruckerPrager, Some(eta)) => YieldModel::DruckerPrager {
                sigma_y: y.sigma_y,
                eta,
            },
            (YieldKind::DruckerPrager, None) => {
                return Err(bad("yield.eta is required for drucker_prager"))
            }
        };
        model.validate().map_err(|e| core("yield", e))?;
        Ok(Some(model))
    }

    pub fn boundary(&self) -> Result<BoundarySpec, CliError> {
        let b = &self.bc;
        let mut spec = BoundarySpec::new();
        for (plane, name, face) in [
            (Plane::XMin, "xmin", &b.xmin),
            (Plane::XMax, "xmax", &b.xmax),
            (Plane::YMin, "ymin", &b.ymin),
            (Plane::YMax, "ymax", &b.ymax),
            (Plane::ZMin, "zmin", &b.zmin),
            (Plane::ZMax, "zmax", &b.zmax),
        ] {
            let (flow, mech) = face_bc(name, face)?;
            spec = spec.with(plane, flow, mech);
        }
        Ok(spec)
    }

    pub fn coupling_config(&self) -> Result<CouplingConfig, CliError> {
        let c = &self.coupling;
        let mut cfg = CouplingConfig::new(c.tol, c.k_max, self.time.dt, self.time.t_final)
            .map_err(|e| core("coupling/time", e))?;
        cfg.criterion_mode = match c.criterion_mode {
            CriterionName::Paper => CriterionMode::Paper,
            CriterionName::StressChange => CriterionMode::StressChange,
        };
        cfg.relative_tol = c.relative_tol;
        cfg.fatal_contraction = c.fatal_contraction;
        cfg.retry_halving = c.retry_halving;
        Ok(cfg)
    }

    fn loads_ramp(&self) -> Result<Ramp, CliError> {
        match (self.loads.ramp, self.loads.ramp_duration) {
            (RampKind::Constant, None) => Ok(Ramp::Constant),
            (RampKind::Constant, Some(_)) => Err(bad("loads.ramp_duration needs ramp = \"linear\"")),
            (RampKind::Linear, Some(d)) if d > 0.0 && d.is_finite() => {
                Ok(Ramp::Linear { duration: d })
            }
            (RampKind::Linear, d) => Err(bad(format!(
                "loads.ramp_duration must be positive for a linear ramp, got {d:?}"
            ))),
        }
    }

    /// Validates the whole configuration and builds the problem.
    pub fn setup(&self) -> Result<Setup, CliError> {
        let g = &self.grid;
        let grid = build_grid(g.nx, g.ny, g.nz, [g.lx, g.ly, g.lz], &self.boundary()?)
            .map_err(|e| core("grid", e))?;
        let ncell = grid.num_cells();
        let source = match &self.loads.source {
            None => vec![0.0; ncell],
            Some(SourceSpec::Uniform(q)) => vec![*q; ncell],
            Some(SourceSpec::Cells(v)) if v.len() == ncell => v.clone(),
            Some(SourceSpec::Cells(v)) => {
                return Err(bad(format!(
                    "loads.source has {} entries, the grid has {ncell} cells",
                    v.len()
                )))
            }
        };
        if source.iter().any(|q| !q.is_finite()) {
            return Err(bad("loads.source must be finite"));
        }
        if !self.initial.pressure.is_finite() {
            return Err(bad("initial.pressure must be finite"));
        }
        let problem = Problem::new(grid, self.materials()?).map_err(|e| core("problem", e))?;
        Ok(Setup {
            problem,
            coupling: self.coupling_config()?,
            loads: Loads {
                source,
                ramp: self.loads_ramp()?,
            },
            initial_pressure: self.initial.pressure,
            output: self.output.clone(),
        })
    }
}

fn face_bc(name: &str, f: &FaceConfig) -> Result<(FlowBc, MechBc), CliError> {
    let flow = match (f.flow, f.pressure) {
        (FlowTag::NoFlow, None) => FlowBc::NoFlow,
        (FlowTag::Dirichlet, Some(p)) if p.is_finite() => FlowBc::Dirichlet(p),
        (FlowTag::NoFlow, Some(_)) => {
            return Err(bad(format!("bc.{name}.pressure needs flow = \"dirichlet\"")))
        }
        (FlowTag::Dirichlet, _) => {
            return Err(bad(format!("bc.{name}.pressure is required for a dirichlet face")))
        }
    };
    let extra = |key: &str| bad(format!("bc.{name}.{key} does not apply to mech = \"{:?}\"", f.mech));
    let mech = match f.mech {
        MechTag::Traction => {
            if f.displacement.is_some() {
                return Err(extra("displacement"));
            }
            MechBc::Traction(Vector3::from(f.traction.unwrap_or([0.0; 3])))
        }
        MechTag::Fixed | MechTag::Roller => {
            if f.traction.is_some() {
                return Err(extra("traction"));
            }
            if f.displacement.is_some() {
                return Err(extra("displacement"));
            }
            if f.mech == MechTag::Fixed {
                MechBc::Fixed
            } else {
                MechBc::Roller
            }
        }
        MechTag::Displacement => {
            let d = f
                .displacement
                .clone()
                .ok_or_else(|| bad(format!("bc.{name}.displacement is required")))?;
            MechBc::Displacement([d.x, d.y, d.z])
        }
        MechTag::Linear => {
            let g = f
                .gradient
                .ok_or_else(|| bad(format!("bc.{name}.gradient is required")))?;
            MechBc::LinearDisplacement(Matrix3::from_fn(|i, j| g[i][j]))
        }
    };
    if f.gradient.is_some() && f.mech != MechTag::Linear {
        return Err(extra("gradient"));
    }
    if f.traction.is_some() && f.mech != MechTag::Traction {
        return Err(extra("traction"));
    }
    Ok((flow, mech))
}
