//! Dense symmetric positive-definite factorizations for small normal-equation
//! systems.
//!
//! Regressor columns here differ in scale by many orders of magnitude (an
//! intercept weighted by `1/Y^2` next to `Y` itself), so the matrix is first
//! equilibrated: `A = D S D` with `D = sqrt(diag(A))` and `S` having unit
//! diagonal. The Cholesky factor is taken of `S`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // redundant when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Pivot tolerance relative to the largest (unit, after scaling) diagonal.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    /// Lower triangle of the factor of the scaled matrix, row-major `n x n`.
    lower: Vec<f64>,
    scale: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive-definite row-major `n x n` matrix.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: a.len(),
            });
        }
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let d = a[i * n + i];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::DegenerateDesign);
            }
            scale.push(d.sqrt());
        }
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = a[j * n + j] / (scale[j] * scale[j]);
            for k in 0..j {
                pivot -= lower[j * n + k] * lower[j * n + k];
            }
            if !(pivot > PIVOT_TOLERANCE) {
                return Err(Error::DegenerateDesign);
            }
            let root = pivot.sqrt();
            lower[j * n + j] = root;
            for i in j + 1..n {
                let mut v = a[i * n + j] / (scale[i] * scale[j]);
                for k in 0..j {
                    v -= lower[i * n + k] * lower[j * n + k];
                }
                lower[i * n + j] = v / root;
            }
        }
        Ok(Self { n, lower, scale })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    // Solves S x = b for the scaled matrix.
    fn solve_scaled(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.lower[i * n + k] * b[k];
            }
            b[i] = v / self.lower[i * n + i];
        }
        self.back_substitute(b);
    }

    // Solves L^T x = b in place.
    fn back_substitute(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in i + 1..n {
                v -= self.lower[k * n + i] * b[k];
            }
            b[i] = v / self.lower[i * n + i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = b.iter().zip(&self.scale).map(|(v, s)| v / s).collect();
        self.solve_scaled(&mut x);
        for (v, s) in x.iter_mut().zip(&self.scale) {
            *v /= s;
        }
        x
    }

    /// `A^{-1}`, row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }

    /// Maps independent standard normals `z` to a draw from `N(0, A^{-1})`.
    pub fn precision_noise(&self, z: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        self.back_substitute(&mut x);
        for (v, s) in x.iter_mut().zip(&self.scale) {
            *v /= s;
        }
        x
    }
}

/// Numerical rank of a symmetric positive-semidefinite matrix via pivoted
/// Cholesky on the equilibrated matrix. Zero-diagonal rows count as null.
pub fn numerical_rank(a: &[f64], n: usize, tolerance: f64) -> usize {
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = a[i * n + i];
            if d > 0.0 {
                d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if scale[i] > 0.0 && scale[j] > 0.0 {
                s[i * n + j] = a[i * n + j] / (scale[i] * scale[j]);
            }
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..n {
        // Pick the largest remaining diagonal.
        let (best, val) = (k..n)
            .map(|i| (i, s[perm[i] * n + perm[i]]))
            .fold((k, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(val > tolerance) {
            break;
        }
        perm.swap(k, best);
        let p = perm[k];
        let root = val.sqrt();
        for &i in &perm[k + 1..] {
            s[i * n + p] /= root;
        }
        for &i in &perm[k + 1..] {
            for &j in &perm[k + 1..] {
                s[i * n + j] -= s[i * n + p] * s[j * n + p];
            }
        }
        rank += 1;
    }
    rank
}
