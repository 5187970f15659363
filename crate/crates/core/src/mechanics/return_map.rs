//! Closest-point return mapping for perfect plasticity.
//!
//! The trial stress is projected onto the elastic domain in the energy norm
//! of `D^-1`. Von Mises with isotropic elasticity uses the closed-form radial
//! return; every other combination solves
//!
//! ```text
//! D^-1 (sigma - sigma_trial) + dgamma n(sigma) = 0
//! Phi(sigma)                                   = 0
//! ```
//!
//! with a damped Newton iteration in Mandel coordinates. Drucker-Prager
//! trials whose projection is the cone apex are detected up front.

use nalgebra::{SMatrix, SVector, Vector6};

use crate::error::{Error, Result};
use crate::materials::{self, ElasticityTensor, YieldModel};
use crate::tensor::{self, SymTensor};

pub const MAX_NEWTON_ITERATIONS: usize = 50;

/// Trials with `Phi <= ELASTIC_TOLERANCE * sigma_y` take the elastic branch,
/// so a returned stress maps to itself.
pub const ELASTIC_TOLERANCE: f64 = 1e-12;

/// Outcome of a return mapping at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnMapping {
    pub stress: SymTensor,
    pub plastic_strain_increment: SymTensor,
    /// Plastic multiplier increment (`>= 0`).
    pub multiplier: f64,
    /// Projection landed on the Drucker-Prager apex.
    pub apex: bool,
}

impl ReturnMapping {
    fn elastic(trial: &SymTensor) -> Self {
        Self {
            stress: *trial,
            plastic_strain_increment: SymTensor::zeros(),
            multiplier: 0.0,
            apex: false,
        }
    }
}

pub fn return_map(
    trial: &SymTensor,
    model: &YieldModel,
    elasticity: &ElasticityTensor,
) -> Result<ReturnMapping> {
    let trial_value = materials::yield_value(trial, model);
    if trial_value <= ELASTIC_TOLERANCE * model.yield_stress() {
        return Ok(ReturnMapping::elastic(trial));
    }
    match (model, elasticity.isotropic_moduli()) {
        (YieldModel::VonMises { sigma_y }, Some(iso)) => {
            Ok(radial_return(trial, *sigma_y, iso.shear))
        }
        (YieldModel::DruckerPrager { sigma_y, eta }, _) if *eta > 0.0 => {
            match apex_return(trial, *sigma_y, *eta, elasticity) {
                Some(ret) => Ok(ret),
                None => newton_return(trial, model, elasticity),
            }
        }
        _ => newton_return(trial, model, elasticity),
    }
}

fn radial_return(trial: &SymTensor, sigma_y: f64, shear: f64) -> ReturnMapping {
    let mean = tensor::trace(trial) / 3.0;
    let dev = tensor::deviator(trial);
    let dev_norm = tensor::norm(&dev);
    let equivalent = (1.5_f64).sqrt() * dev_norm;
    let multiplier = (equivalent - sigma_y) / (3.0 * shear);
    let stress = SymTensor::identity() * mean + dev * (sigma_y / equivalent);
    let direction = dev * ((1.5_f64).sqrt() / dev_norm);
    ReturnMapping {
        stress,
        plastic_strain_increment: direction * multiplier,
        multiplier,
        apex: false,
    }
}

/// Returns the apex projection when `D^-1 (sigma_trial - sigma_apex)` lies in
/// the normal cone of the apex.
fn apex_return(
    trial: &SymTensor,
    sigma_y: f64,
    eta: f64,
    elasticity: &ElasticityTensor,
) -> Option<ReturnMapping> {
    let apex = SymTensor::identity() * (sigma_y / eta);
    let increment = elasticity.strain(&(trial - apex));
    let volumetric = tensor::trace(&increment);
    if volumetric <= 0.0 {
        return None;
    }
    let dev_norm = tensor::norm(&tensor::deviator(&increment));
    if dev_norm <= std::f64::consts::FRAC_1_SQRT_2 * volumetric / eta {
        Some(ReturnMapping {
            stress: apex,
            plastic_strain_increment: increment,
            multiplier: volumetric / eta,
            apex: true,
        })
    } else {
        None
    }
}

type System7 = SMatrix<f64, 7, 7>;

fn newton_return(
    trial: &SymTensor,
    model: &YieldModel,
    elasticity: &ElasticityTensor,
) -> Result<ReturnMapping> {
    let d = elasticity.mandel();
    let cm = elasticity.mandel_compliance();
    let trial_m = tensor::mandel(trial);
    let sigma_y = model.yield_stress();
    let scale = sigma_y.max(trial_m.norm());
    let tol = 1e-13 * scale;

    let direction = |s: &Vector6<f64>| -> Result<Vector6<f64>> {
        materials::flow_direction(&tensor::from_mandel(s), model).map(|n| tensor::mandel(&n))
    };
    let residual = |s: &Vector6<f64>, g: f64| -> Result<(Vector6<f64>, f64, f64)> {
        let n = direction(s)?;
        let r1 = cm * (s - trial_m) + n * g;
        let r2 = materials::yield_value(&tensor::from_mandel(s), model);
        // stress-scaled merit
        let merit = ((d * r1).norm_squared() + r2 * r2).sqrt();
        Ok((r1, r2, merit))
    };
    let dump = |iterations: usize, residual: f64| Error::ReturnMapDiverged {
        iterations,
        residual,
        trial: tensor::components(trial),
    };

    // cutting-plane start
    let n0 = direction(&trial_m)?;
    let dn0 = d * n0;
    let mut gamma = materials::yield_value(trial, model) / n0.dot(&dn0);
    let mut sigma = trial_m - dn0 * gamma;
    let (mut r1, mut r2, mut merit) = residual(&sigma, gamma).map_err(|_| dump(0, f64::NAN))?;

    let mut iterations = 0;
    while merit > tol {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(dump(iterations, merit));
        }
        iterations += 1;
        let s_tensor = tensor::from_mandel(&sigma);
        let n = direction(&sigma).map_err(|_| dump(iterations, merit))?;
        let hess = materials::flow_direction_derivative(&s_tensor, model);
        let mut jac = System7::zeros();
        jac.fixed_view_mut::<6, 6>(0, 0)
            .copy_from(&(cm + hess * gamma));
        jac.fixed_view_mut::<6, 1>(0, 6).copy_from(&n);
        jac.fixed_view_mut::<1, 6>(6, 0).copy_from(&n.transpose());
        let mut rhs = SVector::<f64, 7>::zeros();
        rhs.fixed_rows_mut::<6>(0).copy_from(&(-r1));
        rhs[6] = -r2;
        let step = jac.lu().solve(&rhs).ok_or_else(|| dump(iterations, merit))?;
        let ds = step.fixed_rows::<6>(0).into_owned();
        let dg = step[6];

        let mut damping = 1.0;
        loop {
            let cand_s = sigma + ds * damping;
            let cand_g = gamma + dg * damping;
            if let Ok((c1, c2, cm_)) = residual(&cand_s, cand_g) {
                if cm_ < merit || damping < 1.0 / 1024.0 {
                    sigma = cand_s;
                    gamma = cand_g;
                    r1 = c1;
                    r2 = c2;
                    merit = cm_;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1.0 / 4096.0 {
                return Err(dump(iterations, merit));
            }
        }
    }
    if gamma < 0.0 {
        return Err(dump(iterations, merit));
    }
    let stress = tensor::from_mandel(&sigma);
    // exact constitutive split: sigma = sigma_trial - D dEps_p
    let increment = elasticity.strain(&(trial - stress));
    Ok(ReturnMapping {
        stress,
        plastic_strain_increment: increment,
        multiplier: gamma,
        apex: false,
    })
}
