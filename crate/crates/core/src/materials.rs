//! Constitutive data: elasticity, Biot coupling constants, flow properties
//! and yield models.
//!
//! `C` and `B` are always derived from `D`, `alpha` and `M`:
//!
//! ```text
//! C = 1/M + alpha : D^-1 alpha
//! B = (3/C) D^-1 alpha
//! ```
//!
//! so that `eps_e = D^-1 sigma + (C/3) B p` and
//! `zeta = p/M + alpha : eps_e + phi_p = C p + (C/3) B : sigma + phi_p`
//! hold identically.

use nalgebra::{Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::tensor::{self, SymTensor};

/// Fourth-order elasticity tensor in 6x6 Voigt form (engineering shear strains).
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityTensor {
    voigt: Matrix6<f64>,
    compliance: Matrix6<f64>,
    mandel: Matrix6<f64>,
    mandel_compliance: Matrix6<f64>,
    isotropic: Option<IsotropicModuli>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicModuli {
    pub bulk: f64,
    pub shear: f64,
}

fn mandel_weights() -> Vector6<f64> {
    let s = std::f64::consts::SQRT_2;
    Vector6::new(1.0, 1.0, 1.0, s, s, s)
}

impl ElasticityTensor {
    pub fn from_voigt(voigt: Matrix6<f64>) -> Result<Self> {
        let scale = voigt.abs().max();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidMaterial(
                "elasticity tensor must be finite and nonzero".into(),
            ));
        }
        if (voigt - voigt.transpose()).abs().max() > 1e-12 * scale {
            return Err(Error::InvalidMaterial(
                "elasticity tensor must be symmetric".into(),
            ));
        }
        let voigt = (voigt + voigt.transpose()) * 0.5;
        let w = Matrix6::from_diagonal(&mandel_weights());
        let mandel = w * voigt * w;
        let min_eig = mandel.symmetric_eigenvalues().min();
        if !(min_eig > 1e-14 * scale) {
            return Err(Error::NotPositiveDefinite {
                what: "elasticity tensor D",
                eigenvalue: min_eig,
            });
        }
        let compliance = voigt
            .cholesky()
            .ok_or(Error::NotPositiveDefinite {
                what: "elasticity tensor D",
                eigenvalue: min_eig,
            })?
            .inverse();
        let mandel_compliance = mandel
            .cholesky()
            .expect("congruent to an SPD matrix")
            .inverse();
        let isotropic = detect_isotropy(&voigt);
        Ok(Self {
            voigt,
            compliance,
            mandel,
            mandel_compliance,
            isotropic,
        })
    }

    /// Isotropic tensor from Young's modulus and Poisson ratio.
    pub fn isotropic(young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) || !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::InvalidMaterial(format!(
                "isotropic elasticity needs E > 0 and -1 < nu < 0.5, got E = {young}, nu = {poisson}"
            )));
        }
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        let mu = young / (2.0 * (1.0 + poisson));
        Self::from_lame(lambda, mu)
    }

    pub fn from_lame(lambda: f64, mu: f64) -> Result<Self> {
        let mut d = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                d[(i, j)] = lambda;
            }
            d[(i, i)] = lambda + 2.0 * mu;
            d[(i + 3, i + 3)] = mu;
        }
        Self::from_voigt(d)
    }

    /// Orthotropic tensor aligned with the grid axes. `nu_ij` is the
    /// contraction in `j` under tension in `i`.
    #[allow(clippy::too_many_arguments)]
    pub fn orthotropic(
        young: [f64; 3],
        nu12: f64,
        nu13: f64,
        nu23: f64,
        shear: [f64; 3],
    ) -> Result<Self> {
        let [e1, e2, e3] = young;
        let [g23, g13, g12] = shear;
        let mut s = Matrix6::zeros();
        s[(0, 0)] = 1.0 / e1;
        s[(1, 1)] = 1.0 / e2;
        s[(2, 2)] = 1.0 / e3;
        s[(0, 1)] = -nu12 / e1;
        s[(1, 0)] = -nu12 / e1;
        s[(0, 2)] = -nu13 / e1;
        s[(2, 0)] = -nu13 / e1;
        s[(1, 2)] = -nu23 / e2;
        s[(2, 1)] = -nu23 / e2;
        s[(3, 3)] = 1.0 / g23;
        s[(4, 4)] = 1.0 / g13;
        s[(5, 5)] = 1.0 / g12;
        let d = s.try_inverse().ok_or_else(|| {
            Error::InvalidMaterial("orthotropic compliance is singular".into())
        })?;
        Self::from_voigt((d + d.transpose()) * 0.5)
    }

    pub fn voigt(&self) -> &Matrix6<f64> {
        &self.voigt
    }

    pub fn compliance_voigt(&self) -> &Matrix6<f64> {
        &self.compliance
    }

    pub fn mandel(&self) -> &Matrix6<f64> {
        &self.mandel
    }

    pub fn mandel_compliance(&self) -> &Matrix6<f64> {
        &self.mandel_compliance
    }

    pub fn isotropic_moduli(&self) -> Option<IsotropicModuli> {
        self.isotropic
    }

    /// `D : eps`.
    pub fn stress(&self, strain: &SymTensor) -> SymTensor {
        tensor::from_voigt_stress(&(self.voigt * tensor::voigt_strain(strain)))
    }

    /// `D^-1 : sigma`.
    pub fn strain(&self, stress: &SymTensor) -> SymTensor {
        tensor::from_voigt_strain(&(self.compliance * tensor::voigt_stress(stress)))
    }
}

fn detect_isotropy(d: &Matrix6<f64>) -> Option<IsotropicModuli> {
    let lambda = d[(0, 1)];
    let mu = d[(3, 3)];
    let mut iso = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            iso[(i, j)] = lambda;
        }
        iso[(i, i)] = lambda + 2.0 * mu;
        iso[(i + 3, i + 3)] = mu;
    }
    if (iso - d).abs().max() <= 1e-12 * d.abs().max() {
        Some(IsotropicModuli {
            bulk: lambda + 2.0 * mu / 3.0,
            shear: mu,
        })
    } else {
        None
    }
}

/// Biot/Skempton coupling constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConstants {
    /// Biot tensor.
    pub alpha: SymTensor,
    /// Skempton tensor, `(3/C) D^-1 alpha`.
    pub skempton: SymTensor,
    /// Generalized Hooke's law constant.
    pub c: f64,
    /// Biot modulus.
    pub biot_modulus: f64,
    /// Plastic porosity tensor (`phi_p = beta : eps_p`).
    pub beta: SymTensor,
}

/// Derives `C` and `B` from `D`, `alpha` and `M`. `beta` is set to `alpha`.
pub fn derive_coupling_constants(
    elasticity: &ElasticityTensor,
    alpha: &SymTensor,
    biot_modulus: f64,
) -> Result<CouplingConstants> {
    if !(biot_modulus > 0.0) || !biot_modulus.is_finite() {
        return Err(Error::InvalidMaterial(format!(
            "Biot modulus M must be positive, got {biot_modulus}"
        )));
    }
    if (alpha - alpha.transpose()).abs().max() > 1e-14 * alpha.abs().max() {
        return Err(Error::InvalidMaterial(
            "Biot tensor alpha must be symmetric".into(),
        ));
    }
    let compliant_alpha = elasticity.strain(alpha);
    let c = 1.0 / biot_modulus + tensor::contract(alpha, &compliant_alpha);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidMaterial(format!(
            "derived constant C = {c} is not positive"
        )));
    }
    Ok(CouplingConstants {
        alpha: *alpha,
        skempton: compliant_alpha * (3.0 / c),
        c,
        biot_modulus,
        beta: *alpha,
    })
}

impl CouplingConstants {
    pub fn with_beta(mut self, beta: SymTensor) -> Self {
        self.beta = beta;
        self
    }

    pub fn inverse_biot_modulus(&self) -> f64 {
        1.0 / self.biot_modulus
    }

    /// `zeta = C p + (C/3) B : sigma + phi_p`.
    pub fn fluid_content(&self, pressure: f64, stress: &SymTensor, plastic_porosity: f64) -> f64 {
        self.c * pressure
            + self.c / 3.0 * tensor::contract(&self.skempton, stress)
            + plastic_porosity
    }
}

/// Flow properties. Permeability is diagonal in the grid axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowProps {
    pub permeability: Vector3<f64>,
    pub viscosity: f64,
    pub compressibility: f64,
    pub reference_density: f64,
    pub rock_density: f64,
    pub initial_porosity: f64,
    pub gravity: Vector3<f64>,
}

impl FlowProps {
    pub fn validate(&self) -> Result<()> {
        if self.permeability.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::NotPositiveDefinite {
                what: "permeability K",
                eigenvalue: self.permeability.min(),
            });
        }
        if !(self.viscosity > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "viscosity mu must be positive, got {}",
                self.viscosity
            )));
        }
        if !(self.initial_porosity > 0.0 && self.initial_porosity < 1.0) {
            return Err(Error::InvalidMaterial(format!(
                "phi0 must lie in (0,1), got {}",
                self.initial_porosity
            )));
        }
        Ok(())
    }

    /// Hydraulic conductivity `kappa = K / mu` (diagonal).
    pub fn mobility(&self) -> Vector3<f64> {
        self.permeability / self.viscosity
    }

    /// Fluid density `rho0 (1 + c p)`.
    pub fn density(&self, pressure: f64) -> f64 {
        self.reference_density * (1.0 + self.compressibility * pressure)
    }

    /// Body force per unit volume at the given pressure.
    pub fn body_force(&self, pressure: f64) -> Vector3<f64> {
        let phi = self.initial_porosity;
        self.gravity * (self.density(pressure) * phi + self.rock_density * (1.0 - phi))
    }
}

/// Perfectly plastic yield criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YieldModel {
    /// `sqrt(3/2) |dev sigma| - sigma_y`.
    VonMises { sigma_y: f64 },
    /// `sqrt(1/2) |dev sigma| + eta tr(sigma)/3 - sigma_y`.
    DruckerPrager { sigma_y: f64, eta: f64 },
}

const SQRT_3_2: f64 = 1.224_744_871_391_589;
const SQRT_1_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl YieldModel {
    pub fn validate(&self) -> Result<()> {
        let (sy, eta) = match *self {
            YieldModel::VonMises { sigma_y } => (sigma_y, 0.0),
            YieldModel::DruckerPrager { sigma_y, eta } => (sigma_y, eta),
        };
        if !(sy > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "yield stress must be positive, got {sy}"
            )));
        }
        if !(eta >= 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "friction coefficient eta must be nonnegative, got {eta}"
            )));
        }
        Ok(())
    }

    pub fn yield_stress(&self) -> f64 {
        match *self {
            YieldModel::VonMises { sigma_y } | YieldModel::DruckerPrager { sigma_y, .. } => sigma_y,
        }
    }

    fn deviatoric_factor(&self) -> f64 {
        match self {
            YieldModel::VonMises { .. } => SQRT_3_2,
            YieldModel::DruckerPrager { .. } => SQRT_1_2,
        }
    }

    fn friction(&self) -> f64 {
        match *self {
            YieldModel::VonMises { .. } => 0.0,
            YieldModel::DruckerPrager { eta, .. } => eta,
        }
    }
}

pub fn yield_value(stress: &SymTensor, model: &YieldModel) -> f64 {
    let s = tensor::norm(&tensor::deviator(stress));
    model.deviatoric_factor() * s + model.friction() * tensor::trace(stress) / 3.0
        - model.yield_stress()
}

/// Gradient of the yield function with respect to stress.
pub fn flow_direction(stress: &SymTensor, model: &YieldModel) -> Result<SymTensor> {
    let dev = tensor::deviator(stress);
    let s = tensor::norm(&dev);
    if !(s > 1e-300) {
        return Err(Error::DegenerateFlowDirection);
    }
    Ok(dev * (model.deviatoric_factor() / s)
        + SymTensor::identity() * (model.friction() / 3.0))
}

/// Second derivative of the yield function in Mandel form, used by the
/// closest-point Newton iteration. Requires a nonzero deviator.
pub(crate) fn flow_direction_derivative(stress: &SymTensor, model: &YieldModel) -> Matrix6<f64> {
    let dev = tensor::deviator(stress);
    let s = tensor::norm(&dev);
    let unit = tensor::mandel(&(dev / s));
    let mut p = Matrix6::identity();
    for i in 0..3 {
        for j in 0..3 {
            p[(i, j)] -= 1.0 / 3.0;
        }
    }
    (p - unit * unit.transpose()) * (model.deviatoric_factor() / s)
}

/// Complete constitutive description of a homogeneous medium.
#[derive(Debug, Clone)]
pub struct MaterialSet {
    pub elasticity: ElasticityTensor,
    pub coupling: CouplingConstants,
    pub flow: FlowProps,
    pub yield_model: Option<YieldModel>,
}

impl MaterialSet {
    pub fn new(
        elasticity: ElasticityTensor,
        alpha: SymTensor,
        biot_modulus: f64,
        beta: Option<SymTensor>,
        flow: FlowProps,
        yield_model: Option<YieldModel>,
    ) -> Result<Self> {
        flow.validate()?;
        if let Some(y) = &yield_model {
            y.validate()?;
        }
        let mut coupling = derive_coupling_constants(&elasticity, &alpha, biot_modulus)?;
        if let Some(beta) = beta {
            coupling = coupling.with_beta(beta);
        }
        Ok(Self {
            elasticity,
            coupling,
            flow,
            yield_model,
        })
    }
}
