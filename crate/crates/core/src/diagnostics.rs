//! Contraction ledger: every term of the fixed-stress contraction inequality
//! evaluated from iterate differences, and the fluid-content identities the
//! inequality is built on.
//!
//! Tensor fields and the fluid content are evaluated at the mechanics
//! quadrature points; pressure is cellwise and flux is facewise. All `Omega`
//! norms use the 8-point cell quadrature with weight `V/8`.

use crate::coupling::{CoupledState, FieldDeltas};
use crate::element::POINTS_PER_CELL;
use crate::flow::FaceCoefficients;
use crate::materials::MaterialSet;
use crate::mesh::Grid;
use crate::tensor;

/// Contraction constant of the fixed-stress map.
pub const CONTRACTION_GAMMA: f64 = 0.5;

/// Slack of the contraction check, relative to `max(1, rhs)`.
pub const CONTRACTION_SLACK: f64 = 1e-12;

/// Terms of the contraction inequality for one coupling iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremLedger {
    /// `|B:d sigma|^2`
    pub t1: f64,
    /// `|d p|^2`
    pub t2: f64,
    /// `(3/C) dt |kappa^-1/2 d z|^2`
    pub t3: f64,
    /// `(3/C) (d sigma : D^-1 d sigma)`
    pub t4: f64,
    /// `(3/(2C^2)) |d zeta|^2`
    pub t5: f64,
    pub bracket: f64,
    /// `gamma |B:d sigma|^2` of the previous iteration; absent at `k = 1`.
    pub rhs: Option<f64>,
}

impl TheoremLedger {
    pub fn lhs(&self) -> f64 {
        self.t1 + self.t2 + self.t3 + self.t4 + self.t5 - self.bracket
    }

    /// T2 to T5 are norms or SPD quadratic forms.
    pub fn nonnegative(&self) -> bool {
        [self.t2, self.t3, self.t4, self.t5].iter().all(|t| *t >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// `rhs - lhs`
    pub margin: f64,
}

/// Relative residuals of the fluid-content identities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityReport {
    /// `d zeta = C d p + (C/3) B:d sigma + d phi_p`
    pub full: f64,
    /// `d_f zeta = C d p + d_f phi_p`
    pub flow: f64,
    /// `d_p zeta = (C/3) B:d sigma + d_p phi_p`
    pub mech: f64,
    /// `|d_p zeta - d_p phi_p|^2 = (C^2/9) |B:d sigma|^2`
    pub norm: f64,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        self.full.max(self.flow).max(self.mech).max(self.norm)
    }
}

pub(crate) fn point_weight(grid: &Grid) -> f64 {
    grid.cell_volume() / POINTS_PER_CELL as f64
}

fn weighted_sq<I: Iterator<Item = f64>>(values: I, w: f64) -> f64 {
    values.map(|v| v * v).sum::<f64>() * w
}

/// Ledger entry from the deltas of iteration `k`. `previous_t1` is
/// `|B:d sigma|^2` of iteration `k - 1`, if there was one.
pub fn compute_ledger(
    deltas: &FieldDeltas,
    previous_t1: Option<f64>,
    materials: &MaterialSet,
    faces: &FaceCoefficients,
    dt: f64,
    grid: &Grid,
) -> TheoremLedger {
    let w = point_weight(grid);
    let cc = &materials.coupling;
    let c = cc.c;
    let d_stress = deltas.stress.total();
    let d_zeta = deltas.fluid_content.total();
    let d_phi = deltas.plastic_porosity.total();
    let b_dsigma: Vec<f64> = d_stress
        .iter()
        .map(|s| tensor::contract(&cc.skempton, s))
        .collect();

    let t1 = weighted_sq(b_dsigma.iter().copied(), w);
    let t2 = weighted_sq(deltas.pressure.total().into_iter(), grid.cell_volume());
    let t3 = 3.0 / c * dt * faces.flux_energy(&deltas.flux.total());
    let t4 = 3.0 / c
        * w
        * d_stress
            .iter()
            .map(|s| tensor::contract(s, &materials.elasticity.strain(s)))
            .sum::<f64>();
    let t5 = 3.0 / (2.0 * c * c) * weighted_sq(d_zeta.iter().copied(), w);

    let mech_zeta_minus_phi = deltas
        .fluid_content
        .mech
        .iter()
        .zip(&deltas.plastic_porosity.mech)
        .map(|(z, f)| z - f);
    let cross: f64 = b_dsigma.iter().zip(&d_phi).map(|(b, f)| b * f).sum::<f64>() * w;
    let bracket = 3.0 / (c * c)
        * (3.5 * weighted_sq(mech_zeta_minus_phi, w)
            + 0.5 * weighted_sq(d_phi.iter().copied(), w)
            + c / 3.0 * cross);

    TheoremLedger {
        t1,
        t2,
        t3,
        t4,
        t5,
        bracket,
        rhs: previous_t1.map(|t| CONTRACTION_GAMMA * t),
    }
}

/// Contraction check; `None` when the entry has no previous iteration.
pub fn check_contraction(entry: &TheoremLedger) -> Option<ContractionCheck> {
    let rhs = entry.rhs?;
    let lhs = entry.lhs();
    Some(ContractionCheck {
        lhs,
        rhs,
        satisfied: lhs <= rhs + CONTRACTION_SLACK * rhs.max(1.0),
        margin: rhs - lhs,
    })
}

/// Largest magnitude of the three fluid-content contributions over the
/// snapshots; the scale for identity residuals.
fn content_scale(snapshots: &[&CoupledState], materials: &MaterialSet) -> f64 {
    let cc = &materials.coupling;
    let mut scale = 0.0_f64;
    for s in snapshots {
        for (idx, pt) in s.mech.points.iter().enumerate() {
            let p = s.flow.pressure[idx / POINTS_PER_CELL];
            let parts = (cc.c * p).abs()
                + (cc.c / 3.0 * tensor::contract(&cc.skempton, &pt.stress)).abs()
                + pt.plastic_porosity.abs();
            scale = scale.max(parts);
        }
    }
    scale
}

fn relative(residual: f64, scale: f64) -> f64 {
    if residual == 0.0 {
        0.0
    } else {
        residual / scale.max(f64::MIN_POSITIVE)
    }
}

/// Identity residuals for one iteration (`prev`, after the flow sweep, after
/// the mechanics sweep).
pub fn check_identities(
    snapshots: [&CoupledState; 3],
    deltas: &FieldDeltas,
    materials: &MaterialSet,
    grid: &Grid,
) -> IdentityReport {
    let cc = &materials.coupling;
    let c = cc.c;
    let w = point_weight(grid);
    let scale = content_scale(&snapshots, materials);
    let d_stress = deltas.stress.total();
    let d_zeta = deltas.fluid_content.total();
    let d_phi = deltas.plastic_porosity.total();
    let d_p = deltas.pressure.total();

    let mut full = 0.0_f64;
    let mut flow = 0.0_f64;
    let mut mech = 0.0_f64;
    for idx in 0..d_zeta.len() {
        let cell = idx / POINTS_PER_CELL;
        let b = c / 3.0 * tensor::contract(&cc.skempton, &d_stress[idx]);
        full = full.max((d_zeta[idx] - (c * d_p[cell] + b + d_phi[idx])).abs());
        flow = flow.max(
            (deltas.fluid_content.flow[idx]
                - (c * d_p[cell] + deltas.plastic_porosity.flow[idx]))
                .abs(),
        );
        mech = mech.max(
            (deltas.fluid_content.mech[idx] - (b + deltas.plastic_porosity.mech[idx])).abs(),
        );
    }

    let lhs = weighted_sq(
        deltas
            .fluid_content
            .mech
            .iter()
            .zip(&deltas.plastic_porosity.mech)
            .map(|(z, f)| z - f),
        w,
    );
    let rhs = c * c / 9.0
        * weighted_sq(
            d_stress.iter().map(|s| tensor::contract(&cc.skempton, s)),
            w,
        );
    // |a^2 - b^2| / (a + b) = |a - b|, bounded by max|r| sqrt(|Omega|)
    let norm_residual = (lhs - rhs).abs();
    let denom = (lhs.sqrt() + rhs.sqrt()) * grid.domain_volume().sqrt();
    let norm = if norm_residual == 0.0 {
        0.0
    } else {
        relative(norm_residual / denom.max(f64::MIN_POSITIVE), scale)
    };

    IdentityReport {
        full: relative(full, scale),
        flow: relative(flow, scale),
        mech: relative(mech, scale),
        norm,
    }
}
