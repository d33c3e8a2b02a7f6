//! Principal component analysis of the spectral axis.
//!
//! The `B × B` pixel covariance (population normalisation, divided by the
//! pixel count) is diagonalised with cyclic Jacobi rotations. Components are
//! returned in descending variance order, each with its largest-magnitude
//! entry made positive so repeated fits agree exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cube::HsiCube;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math;

const JACOBI_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d × B`, orthonormal rows.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn input_bands(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.rows()
    }

    /// Maps reduced coordinates back to the input space.
    pub fn inverse_pixel(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (k, &y) in reduced.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.components.row(k)) {
                *o += y * c;
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix. Returns eigenvalues and the
/// eigenvectors as columns, unsorted.
pub fn jacobi_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape("jacobi_eigen needs a square matrix".into()));
    }
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let scale = frobenius(&a).max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) < JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if off_diagonal_norm(&a) >= JACOBI_TOL * scale {
        return Err(Error::Degenerate("Jacobi rotations did not converge".into()));
    }
    let values = (0..n).map(|i| a[(i, i)]).collect();
    Ok((values, v))
}

// Applies the rotation J(p, q, θ) as A ← JᵀAJ and V ← VJ.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn frobenius(a: &Matrix) -> f64 {
    math::sqrt(a.as_slice().iter().map(|x| x * x).sum())
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    math::sqrt(s)
}

/// Per-band means and the population covariance of the cube's pixels.
pub fn covariance(cube: &HsiCube) -> (Vec<f64>, Matrix) {
    let n = cube.pixel_count();
    let b = cube.bands();
    let mean: Vec<f64> = (0..b)
        .map(|k| cube.band(k).iter().sum::<f64>() / n as f64)
        .collect();
    let mut cov = Matrix::zeros(b, b);
    let mut centered = vec![0.0; b];
    for p in 0..n {
        cube.spectrum_into(p, &mut centered);
        for (c, m) in centered.iter_mut().zip(&mean) {
            *c -= m;
        }
        for i in 0..b {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = cov.row_mut(i);
            for j in i..b {
                row[j] += ci * centered[j];
            }
        }
    }
    for i in 0..b {
        for j in i..b {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

pub fn fit_pca(cube: &HsiCube, d: usize) -> Result<PcaModel> {
    let bands = cube.bands();
    if d == 0 || d > bands {
        return Err(Error::InvalidParameter(format!(
            "retained components {d} must lie in 1..={bands}"
        )));
    }
    if cube.pixel_count() < d + 1 {
        return Err(Error::InvalidParameter(format!(
            "{} pixels cannot support {d} components",
            cube.pixel_count()
        )));
    }
    let (mean, cov) = covariance(cube);
    let trace: f64 = (0..bands).map(|i| cov[(i, i)]).sum();
    if trace <= 0.0 {
        return Err(Error::Degenerate("all pixels are identical (zero covariance)".into()));
    }
    let (values, vectors) = jacobi_eigen(&cov)?;

    let mut order: Vec<usize> = (0..bands).collect();
    // Stable sort keeps ties in band order.
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let mut components = Matrix::zeros(d, bands);
    let mut explained = Vec::with_capacity(d);
    for (r, &col) in order.iter().take(d).enumerate() {
        let mut pivot = 0;
        for k in 0..bands {
            if vectors[(k, col)].abs() > vectors[(pivot, col)].abs() {
                pivot = k;
            }
        }
        let sign = if vectors[(pivot, col)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..bands {
            components[(r, k)] = sign * vectors[(k, col)];
        }
        explained.push(values[col].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: explained,
    })
}

pub fn transform(cube: &HsiCube, model: &PcaModel) -> Result<HsiCube> {
    if cube.bands() != model.input_bands() {
        return Err(Error::Shape(format!(
            "cube has {} bands, model expects {}",
            cube.bands(),
            model.input_bands()
        )));
    }
    let n = cube.pixel_count();
    let d = model.output_dim();
    let mut out = vec![0.0; n * d];
    let mut spec = vec![0.0; cube.bands()];
    for p in 0..n {
        cube.spectrum_into(p, &mut spec);
        for (s, m) in spec.iter_mut().zip(&model.mean) {
            *s -= m;
        }
        for k in 0..d {
            out[k * n + p] = crate::linalg::dot(model.components.row(k), &spec);
        }
    }
    HsiCube::new(cube.width(), cube.height(), d, out)
}
