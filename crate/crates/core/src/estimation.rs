//! Weighted least squares for the single-brand, multibrand and
//! GEO-responsiveness regressions.
//!
//! Every model regresses `Y_post` on an intercept, `Y_pre` and `X_post` with
//! weights `1 / Y_pre^2`, i.e. noise standard deviation proportional to the
//! GEO's prior sales.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // redundant when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};
use crate::sim::Dataset;
use crate::special;

/// Solution of a weighted least squares problem.
#[derive(Clone, Debug)]
pub struct WlsSolution {
    pub coef: Vec<f64>,
    /// `(X^T W X)^{-1}`, row-major `p x p`.
    pub unscaled_cov: Vec<f64>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub dof: usize,
}

impl WlsSolution {
    /// `rss / dof`.
    pub fn sigma2(&self) -> f64 {
        self.rss / self.dof as f64
    }

    pub fn variance(&self, i: usize) -> f64 {
        let p = self.coef.len();
        self.sigma2() * self.unscaled_cov[i * p + i]
    }
}

/// Forms `X^T W X` and `X^T W y` for a row-major `n x p` design.
pub fn normal_equations(x: &[f64], p: usize, w: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut xtwx = vec![0.0; p * p];
    let mut xtwy = vec![0.0; p];
    for (i, (&wi, &yi)) in w.iter().zip(y).enumerate() {
        let row = &x[i * p..(i + 1) * p];
        for a in 0..p {
            if row[a] == 0.0 {
                continue;
            }
            let wa = wi * row[a];
            xtwy[a] += wa * yi;
            for b in a..p {
                xtwx[a * p + b] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[a * p + b] = xtwx[b * p + a];
        }
    }
    (xtwx, xtwy)
}

/// Minimizes `sum_i w_i (y_i - x_i^T c)^2` for a row-major `n x p` design.
pub fn weighted_least_squares(x: &[f64], p: usize, w: &[f64], y: &[f64]) -> Result<WlsSolution> {
    let n = y.len();
    if x.len() != n * p || w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            found: x.len(),
        });
    }
    if n <= p {
        return Err(Error::InsufficientData { needed: p + 1, got: n });
    }
    let (xtwx, xtwy) = normal_equations(x, p, w, y);
    let chol = Cholesky::factor(&xtwx, p)?;
    let coef = chol.solve(&xtwy);
    let rss = (0..n)
        .map(|i| {
            let fit: f64 = x[i * p..(i + 1) * p].iter().zip(&coef).map(|(a, c)| a * c).sum();
            w[i] * (y[i] - fit).powi(2)
        })
        .sum();
    Ok(WlsSolution {
        coef,
        unscaled_cov: chol.inverse(),
        rss,
        dof: n - p,
    })
}

/// One brand's regression `Y_post = a0 + a1 Y_pre + beta X_post`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta_hat: f64,
    pub var_beta: f64,
    /// Two-sided p-value for `beta = 0` from Student's t with `dof` degrees
    /// of freedom.
    pub p_value: f64,
    pub dof: usize,
    pub sigma2_hat: f64,
}

impl FitResult {
    pub fn se_beta(&self) -> f64 {
        self.var_beta.sqrt()
    }
}

fn t_p_value(estimate: f64, variance: f64, dof: usize) -> f64 {
    if variance > 0.0 {
        special::student_t_two_sided(estimate / variance.sqrt(), dof as f64)
    } else if estimate == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Weighted least squares fit of one brand with weights `1 / y_pre^2`.
pub fn wls_fit_single(y_pre: &[f64], x_post: &[f64], y_post: &[f64]) -> Result<FitResult> {
    let n = y_pre.len();
    if x_post.len() != n || y_post.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_post.len().min(y_post.len()),
        });
    }
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    if y_pre.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositive("y_pre"));
    }
    let mut x = Vec::with_capacity(3 * n);
    for g in 0..n {
        x.extend_from_slice(&[1.0, y_pre[g], x_post[g]]);
    }
    let w: Vec<f64> = y_pre.iter().map(|v| 1.0 / (v * v)).collect();
    let sol = weighted_least_squares(&x, 3, &w, y_post)?;
    let var_beta = sol.variance(2);
    Ok(FitResult {
        alpha0: sol.coef[0],
        alpha1: sol.coef[1],
        beta_hat: sol.coef[2],
        var_beta,
        p_value: t_p_value(sol.coef[2], var_beta, sol.dof),
        dof: sol.dof,
        sigma2_hat: sol.sigma2(),
    })
}

/// Independent per-brand fits; the multibrand model has brand-specific
/// coefficients throughout, so it separates.
pub fn fit_all_brands(dataset: &Dataset) -> Result<Vec<FitResult>> {
    (0..dataset.b_count)
        .map(|b| {
            let d = dataset.brand(b);
            wls_fit_single(&d.y_pre, &d.x_post, &d.y_post).map_err(|e| e.for_brand(b))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PooledEstimate {
    pub beta_bar_hat: f64,
    /// `B^-2 sum_b var(beta_hat_b)`.
    pub var_beta_bar: f64,
}

pub fn pooled_mean(fits: &[FitResult]) -> Result<PooledEstimate> {
    if fits.is_empty() {
        return Err(Error::Empty);
    }
    let b = fits.len() as f64;
    Ok(PooledEstimate {
        beta_bar_hat: fits.iter().map(|f| f.beta_hat).sum::<f64>() / b,
        var_beta_bar: fits.iter().map(|f| f.var_beta).sum::<f64>() / (b * b),
    })
}

/// Joint fit of `Y_post = a0_b + a1_b Y_pre + (beta_b + gamma_g) X_post`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeoResponseFit {
    pub beta: Vec<f64>,
    pub beta_se: Vec<f64>,
    /// Sums to zero.
    pub gamma: Vec<f64>,
    pub gamma_se: Vec<f64>,
    /// `(alpha0, alpha1)` per brand.
    pub alphas: Vec<(f64, f64)>,
    pub sigma2_hat: f64,
    pub dof: usize,
}

// Column layout: intercepts [0, B), slopes [B, 2B), returns [2B, 3B), then
// GEO terms. `constrained` drops the last GEO column and substitutes
// gamma_{G-1} = -sum of the others.
fn geo_response_design(data: &Dataset, constrained: bool) -> (Vec<f64>, usize) {
    let (g_count, b_count) = (data.g_count, data.b_count);
    let geo_cols = if constrained { g_count - 1 } else { g_count };
    let p = 3 * b_count + geo_cols;
    let mut x = vec![0.0; g_count * b_count * p];
    for g in 0..g_count {
        for b in 0..b_count {
            let i = data.index(g, b);
            let row = &mut x[i * p..(i + 1) * p];
            let xp = data.x_post[i];
            row[b] = 1.0;
            row[b_count + b] = data.y_pre[i];
            row[2 * b_count + b] = xp;
            if !constrained {
                row[3 * b_count + g] = xp;
            } else if g + 1 < g_count {
                row[3 * b_count + g] = xp;
            } else {
                for k in 0..geo_cols {
                    row[3 * b_count + k] = -xp;
                }
            }
        }
    }
    (x, p)
}

fn weights(data: &Dataset) -> Vec<f64> {
    data.y_pre.iter().map(|v| 1.0 / (v * v)).collect()
}

/// Column count and numerical rank of the unconstrained GEO-responsiveness
/// design (`3B + G` columns). Shifting every `beta_b` up and every `gamma_g`
/// down by the same amount leaves the fit unchanged, so the rank is at most
/// `3B + G - 1`.
pub fn geo_response_rank(data: &Dataset) -> (usize, usize) {
    let (x, p) = geo_response_design(data, false);
    let (xtwx, _) = normal_equations(&x, p, &weights(data), &data.y_post);
    (p, linalg::numerical_rank(&xtwx, p, 1e-10))
}

pub fn fit_geo_responsiveness(data: &Dataset) -> Result<GeoResponseFit> {
    let (g_count, b_count) = (data.g_count, data.b_count);
    if g_count < 2 {
        return Err(Error::InsufficientData { needed: 2, got: g_count });
    }
    let needed = 3 * b_count + g_count;
    if g_count * b_count < needed {
        return Err(Error::InsufficientData {
            needed,
            got: g_count * b_count,
        });
    }
    for g in 0..g_count {
        if (0..b_count).all(|b| data.x_post[data.index(g, b)] == 0.0) {
            return Err(Error::Identifiability(format!(
                "gamma[{g}] (GEO {g} has no treated brands)"
            )));
        }
    }
    let (x, p) = geo_response_design(data, true);
    let sol = weighted_least_squares(&x, p, &weights(data), &data.y_post).map_err(|e| match e {
        Error::DegenerateDesign => Error::Identifiability(format!(
            "a combination of brand returns and GEO adjustments ({p} constrained parameters)"
        )),
        other => other,
    })?;
    let sigma2 = sol.sigma2();
    let beta: Vec<f64> = (0..b_count).map(|b| sol.coef[2 * b_count + b]).collect();
    let beta_se = (0..b_count)
        .map(|b| sol.variance(2 * b_count + b).sqrt())
        .collect();
    let free = &sol.coef[3 * b_count..];
    let mut gamma = free.to_vec();
    gamma.push(-free.iter().sum::<f64>());
    let mut gamma_se: Vec<f64> = (0..g_count - 1)
        .map(|k| sol.variance(3 * b_count + k).sqrt())
        .collect();
    // var(-sum gamma_k) = 1^T C 1 over the GEO block.
    let mut last = 0.0;
    for a in 3 * b_count..p {
        for b in 3 * b_count..p {
            last += sol.unscaled_cov[a * p + b];
        }
    }
    gamma_se.push((sigma2 * last).sqrt());
    let alphas = (0..b_count)
        .map(|b| (sol.coef[b], sol.coef[b_count + b]))
        .collect();
    Ok(GeoResponseFit {
        beta,
        beta_se,
        gamma,
        gamma_se,
        alphas,
        sigma2_hat: sigma2,
        dof: sol.dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_fit_is_exact() {
        let y_pre = [1.0e6, 2.0e6, 3.5e6, 5.0e6, 8.0e6, 9.5e6];
        let x_post: Vec<f64> = y_pre
            .iter()
            .enumerate()
            .map(|(i, y)| if i % 2 == 0 { 0.01 * y } else { 0.0 })
            .collect();
        let y_post: Vec<f64> = y_pre
            .iter()
            .zip(&x_post)
            .map(|(y, x)| 0.5 * y + 5.0 * x)
            .collect();
        let fit = wls_fit_single(&y_pre, &x_post, &y_post).unwrap();
        assert!(fit.alpha0.abs() < 1e-3, "{fit:?}");
        assert!((fit.alpha1 - 0.5).abs() < 1e-10);
        assert!((fit.beta_hat - 5.0).abs() < 1e-8);
        assert!(fit.sigma2_hat < 1e-20);
        assert_eq!(fit.dof, 3);
    }

    #[test]
    fn errors() {
        let y = [1.0, 2.0, 3.0];
        assert!(matches!(
            wls_fit_single(&y, &y, &y),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
        let y_pre = [1.0, 2.0, 3.0, 4.0, 5.0];
        let zero = [0.0; 5];
        assert_eq!(
            wls_fit_single(&y_pre, &zero, &y_pre).unwrap_err(),
            Error::DegenerateDesign
        );
        // X proportional to Y_pre everywhere is collinear with the slope.
        let x: Vec<f64> = y_pre.iter().map(|v| 0.01 * v).collect();
        assert_eq!(
            wls_fit_single(&y_pre, &x, &y_pre).unwrap_err(),
            Error::DegenerateDesign
        );
        assert_eq!(
            wls_fit_single(&[1.0, -2.0, 3.0, 4.0], &[0.0, 1.0, 0.0, 1.0], &[1.0; 4]).unwrap_err(),
            Error::NonPositive("y_pre")
        );
    }

    #[test]
    fn pooled() {
        let f = |beta_hat, var_beta| FitResult {
            alpha0: 0.0,
            alpha1: 0.5,
            beta_hat,
            var_beta,
            p_value: 0.5,
            dof: 17,
            sigma2_hat: 1.0,
        };
        let one = pooled_mean(&[f(4.0, 2.0)]).unwrap();
        assert_eq!(one.beta_bar_hat, 4.0);
        assert_eq!(one.var_beta_bar, 2.0);
        let four = pooled_mean(&[f(1.0, 3.0), f(2.0, 3.0), f(3.0, 3.0), f(6.0, 3.0)]).unwrap();
        assert_eq!(four.beta_bar_hat, 3.0);
        assert!((four.var_beta_bar - 0.75).abs() < 1e-15);
        assert_eq!(pooled_mean(&[]).unwrap_err(), Error::Empty);
    }
}
