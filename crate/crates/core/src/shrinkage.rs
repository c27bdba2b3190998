//! Shrinkage of per-brand estimates toward their unweighted mean, with the
//! variance-scale parameter chosen by minimizing Stein's unbiased risk
//! estimate for heteroscedastic estimates over a grid.
//!
//! For a parameter `lambda >= 0` each brand's estimate becomes
//! `w_b * beta_hat_b + (1 - w_b) * beta_bar` with `w_b = lambda / (v_b + lambda)`,
//! so noisier brands lean harder on the pooled mean.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShrinkageResult {
    /// `f64::INFINITY` means no shrinkage.
    pub lambda: f64,
    /// Grid coordinate: `lambda = mean(v) * u / (1 - u)`.
    pub u: f64,
    pub beta_tilde: Vec<f64>,
    /// Weight on each brand's own estimate.
    pub weights: Vec<f64>,
    pub sure_value: f64,
    pub beta_bar_hat: f64,
}

fn check_inputs(beta_hats: &[f64], var_hats: &[f64]) -> Result<()> {
    if beta_hats.len() != var_hats.len() {
        return Err(Error::DimensionMismatch {
            expected: beta_hats.len(),
            found: var_hats.len(),
        });
    }
    if beta_hats.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: beta_hats.len(),
        });
    }
    if var_hats.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositive("variance estimates"));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Weight on the brand's own estimate; `lambda = inf` gives one.
pub fn own_weight(var: f64, lambda: f64) -> f64 {
    if lambda.is_infinite() {
        1.0
    } else {
        lambda / (var + lambda)
    }
}

/// Unbiased estimate of the mean squared error of the shrunk estimates at
/// `lambda`, with `var_hats` standing in for the true variances.
pub fn sure_g(lambda: f64, beta_hats: &[f64], var_hats: &[f64]) -> f64 {
    let b = beta_hats.len() as f64;
    if lambda.is_infinite() {
        return mean(var_hats);
    }
    let bar = mean(beta_hats);
    let total: f64 = beta_hats
        .iter()
        .zip(var_hats)
        .map(|(&beta, &v)| {
            let shrink = v / (v + lambda);
            let bias = shrink * shrink * (beta - bar) * (beta - bar);
            bias + shrink * (lambda - v + 2.0 * v / b)
        })
        .sum();
    total / b
}

pub fn shrink(beta_hats: &[f64], var_hats: &[f64], lambda: f64) -> Vec<f64> {
    let bar = mean(beta_hats);
    beta_hats
        .iter()
        .zip(var_hats)
        .map(|(&beta, &v)| {
            let w = own_weight(v, lambda);
            w * beta + (1.0 - w) * bar
        })
        .collect()
}

/// Grid search over `u in {0, 1/(n-1), ..., 1}`. Ties go to the larger `u`.
pub fn choose_lambda(beta_hats: &[f64], var_hats: &[f64], grid_points: usize) -> Result<ShrinkageResult> {
    check_inputs(beta_hats, var_hats)?;
    if grid_points < 2 {
        return Err(Error::InvalidConfig("grid needs at least two points"));
    }
    let v_bar = mean(var_hats);
    let steps = (grid_points - 1) as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in 0..grid_points {
        let u = k as f64 / steps;
        let lambda = if k + 1 == grid_points {
            f64::INFINITY
        } else {
            v_bar * u / (1.0 - u)
        };
        let risk = sure_g(lambda, beta_hats, var_hats);
        if risk <= best.0 {
            best = (risk, u, lambda);
        }
    }
    let (sure_value, u, lambda) = best;
    Ok(ShrinkageResult {
        lambda,
        u,
        beta_tilde: shrink(beta_hats, var_hats, lambda),
        weights: var_hats.iter().map(|&v| own_weight(v, lambda)).collect(),
        sure_value,
        beta_bar_hat: mean(beta_hats),
    })
}

/// `sum (beta_hat - beta)^2 / sum (beta_tilde - beta)^2`. A zero denominator
/// gives `+inf` (or 1 when the numerator is zero too).
pub fn efficiency(beta_hats: &[f64], beta_tildes: &[f64], beta_true: &[f64]) -> Result<f64> {
    if beta_hats.len() != beta_true.len() || beta_tildes.len() != beta_true.len() {
        return Err(Error::DimensionMismatch {
            expected: beta_true.len(),
            found: beta_hats.len().min(beta_tildes.len()),
        });
    }
    let sq = |est: &[f64]| -> f64 {
        est.iter()
            .zip(beta_true)
            .map(|(e, t)| (e - t) * (e - t))
            .sum()
    };
    let (num, den) = (sq(beta_hats), sq(beta_tildes));
    Ok(if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        1.0
    })
}
