//! Sparse symmetric positive definite solves.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rel_tol: f64,
    /// Maximum iterations as a multiple of the system size.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter_factor: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn to_csr(coo: &CooMatrix<f64>) -> CsrMatrix<f64> {
    CsrMatrix::from(coo)
}

pub fn spmv(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    let offsets = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();
    for (row, out) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for idx in offsets[row]..offsets[row + 1] {
            acc += vals[idx] * x[cols[idx]];
        }
        *out = acc;
    }
}

pub fn diagonal(a: &CsrMatrix<f64>) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| {
            a.get_entry(i, i)
                .map(|e| e.into_value())
                .unwrap_or(0.0)
        })
        .collect()
}

/// Exact structural and numerical symmetry.
pub fn is_symmetric(a: &CsrMatrix<f64>) -> bool {
    a.transpose() == *a
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients.
///
/// Converges when `|b - A x| <= rel_tol |b|`. A zero right-hand side yields
/// the zero vector.
pub fn pcg(
    a: &CsrMatrix<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
    what: &'static str,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = diagonal(a)
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        _ => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    spmv(a, &x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = opts.max_iter_factor * n.max(1);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut it = 0;
    while res > opts.rel_tol && it < max_iter {
        spmv(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotSpd(what));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        it += 1;
        res = dot(&r, &r).sqrt() / b_norm;
        if res <= opts.rel_tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // recurrence residuals drift; confirm with the true residual
    spmv(a, &x, &mut ap);
    let true_res = ap
        .iter()
        .zip(b)
        .map(|(v, bi)| (bi - v) * (bi - v))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    let stats = SolveStats {
        iterations: it,
        relative_residual: true_res,
    };
    if true_res > opts.rel_tol * 10.0 || !true_res.is_finite() {
        return Err(Error::LinearSolver {
            what,
            iterations: it,
            residual: true_res,
        });
    }
    Ok((x, stats))
}
