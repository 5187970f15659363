//! Trilinear (Q1) reference element on an axis-aligned box with 2x2x2 Gauss
//! quadrature.

use nalgebra::{Matrix6, SMatrix, Vector3};

pub const POINTS_PER_CELL: usize = 8;

pub type StrainMatrix = SMatrix<f64, 6, 24>;
pub type ElementMatrix = SMatrix<f64, 24, 24>;

/// Q1 element for a box with edge lengths `h`.
#[derive(Debug, Clone, Copy)]
pub struct HexQ1 {
    pub h: Vector3<f64>,
}

impl HexQ1 {
    pub fn new(h: Vector3<f64>) -> Self {
        Self { h }
    }

    /// Reference coordinates of Gauss point `q = a + 2b + 4c`.
    pub fn gauss_point(q: usize) -> [f64; 3] {
        let g = 1.0 / 3.0_f64.sqrt();
        let s = |bit: usize| if bit == 0 { -g } else { g };
        [s(q & 1), s((q >> 1) & 1), s(q >> 2)]
    }

    pub fn weight(&self) -> f64 {
        self.h.x * self.h.y * self.h.z / POINTS_PER_CELL as f64
    }

    pub fn shape(xi: [f64; 3]) -> [f64; 8] {
        std::array::from_fn(|a| {
            let s = node_signs(a);
            (0..3).map(|d| 0.5 * (1.0 + s[d] * xi[d])).product()
        })
    }

    /// Physical gradients of the shape functions at `xi`.
    pub fn gradients(&self, xi: [f64; 3]) -> [Vector3<f64>; 8] {
        std::array::from_fn(|a| {
            let s = node_signs(a);
            let f = |d: usize| 0.5 * (1.0 + s[d] * xi[d]);
            Vector3::new(
                0.5 * s[0] * f(1) * f(2) * 2.0 / self.h.x,
                0.5 * s[1] * f(0) * f(2) * 2.0 / self.h.y,
                0.5 * s[2] * f(0) * f(1) * 2.0 / self.h.z,
            )
        })
    }

    /// Engineering-strain (Voigt) matrix at `xi`, acting on the element
    /// displacement vector `[u0x, u0y, u0z, u1x, ...]`.
    pub fn strain_matrix(&self, xi: [f64; 3]) -> StrainMatrix {
        let grads = self.gradients(xi);
        let mut b = StrainMatrix::zeros();
        for (a, g) in grads.iter().enumerate() {
            let c = 3 * a;
            b[(0, c)] = g.x;
            b[(1, c + 1)] = g.y;
            b[(2, c + 2)] = g.z;
            b[(3, c + 1)] = g.z;
            b[(3, c + 2)] = g.y;
            b[(4, c)] = g.z;
            b[(4, c + 2)] = g.x;
            b[(5, c)] = g.y;
            b[(5, c + 1)] = g.x;
        }
        b
    }

    pub fn strain_matrices(&self) -> [StrainMatrix; 8] {
        std::array::from_fn(|q| self.strain_matrix(Self::gauss_point(q)))
    }

    /// `sum_q B^T D B w`.
    pub fn stiffness(&self, d_voigt: &Matrix6<f64>) -> ElementMatrix {
        let w = self.weight();
        self.strain_matrices()
            .iter()
            .fold(ElementMatrix::zeros(), |k, b| k + b.transpose() * d_voigt * b * w)
    }
}

fn node_signs(a: usize) -> [f64; 3] {
    let s = |bit: usize| if bit == 0 { -1.0 } else { 1.0 };
    [s(a & 1), s((a >> 1) & 1), s(a >> 2)]
}
