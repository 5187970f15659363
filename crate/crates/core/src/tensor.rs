//! Symmetric second-order tensors and their 6-vector forms.
//!
//! Voigt ordering is `[11, 22, 33, 23, 13, 12]`. Stress-like quantities use
//! the plain components, strain-like quantities use engineering shears
//! (`2 e_ij`), so that `sigma : eps == voigt_stress(sigma) . voigt_strain(eps)`.
//! Mandel form scales the shears by `sqrt(2)` for both kinds.

use nalgebra::{Matrix3, Vector6};

pub type SymTensor = Matrix3<f64>;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Double contraction `a : b`.
pub fn contract(a: &SymTensor, b: &SymTensor) -> f64 {
    a.component_mul(b).sum()
}

pub fn trace(a: &SymTensor) -> f64 {
    a[(0, 0)] + a[(1, 1)] + a[(2, 2)]
}

pub fn deviator(a: &SymTensor) -> SymTensor {
    a - SymTensor::identity() * (trace(a) / 3.0)
}

pub fn norm(a: &SymTensor) -> f64 {
    contract(a, a).sqrt()
}

pub fn from_components(c: [f64; 6]) -> SymTensor {
    let [xx, yy, zz, yz, xz, xy] = c;
    SymTensor::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
}

pub fn components(a: &SymTensor) -> [f64; 6] {
    [
        a[(0, 0)],
        a[(1, 1)],
        a[(2, 2)],
        a[(1, 2)],
        a[(0, 2)],
        a[(0, 1)],
    ]
}

pub fn voigt_stress(a: &SymTensor) -> Vector6<f64> {
    Vector6::from(components(a))
}

pub fn from_voigt_stress(v: &Vector6<f64>) -> SymTensor {
    from_components([v[0], v[1], v[2], v[3], v[4], v[5]])
}

pub fn voigt_strain(a: &SymTensor) -> Vector6<f64> {
    let c = components(a);
    Vector6::new(c[0], c[1], c[2], 2.0 * c[3], 2.0 * c[4], 2.0 * c[5])
}

pub fn from_voigt_strain(v: &Vector6<f64>) -> SymTensor {
    from_components([v[0], v[1], v[2], 0.5 * v[3], 0.5 * v[4], 0.5 * v[5]])
}

pub fn mandel(a: &SymTensor) -> Vector6<f64> {
    let c = components(a);
    Vector6::new(
        c[0],
        c[1],
        c[2],
        SQRT_2 * c[3],
        SQRT_2 * c[4],
        SQRT_2 * c[5],
    )
}

pub fn from_mandel(v: &Vector6<f64>) -> SymTensor {
    from_components([
        v[0],
        v[1],
        v[2],
        v[3] / SQRT_2,
        v[4] / SQRT_2,
        v[5] / SQRT_2,
    ])
}

/// Max-abs component, used for max-norm stagnation checks.
pub fn max_abs(a: &SymTensor) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn voigt_pairing_reproduces_contraction() {
        let s = from_components([1.0, -2.0, 0.5, 0.3, -0.7, 1.1]);
        let e = from_components([0.2, 0.4, -0.1, 0.9, 0.25, -0.6]);
        let direct = contract(&s, &e);
        let voigt = voigt_stress(&s).dot(&voigt_strain(&e));
        let mand = mandel(&s).dot(&mandel(&e));
        assert!((direct - voigt).abs() < 1e-14);
        assert!((direct - mand).abs() < 1e-14);
    }

    #[test]
    fn deviator_is_traceless() {
        let s = from_components([3.0, 1.0, -5.0, 0.1, 0.2, 0.3]);
        assert!(trace(&deviator(&s)).abs() < 1e-15);
        assert_eq!(deviator(&(SymTensor::identity() * 4.0)), SymTensor::zeros());
    }

    #[test]
    fn mandel_round_trip() {
        let s = from_components([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let back = from_mandel(&mandel(&s));
        assert!((back - s).norm() < 1e-14);
        assert_eq!(from_voigt_strain(&voigt_strain(&s)), s);
    }
}
