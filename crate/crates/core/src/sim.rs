//! Synthetic multibrand GEO sales under the Gamma model.
//!
//! GEO sizes are `S_g = 10^(7 - U_g)` with `U_g ~ U(0, phi)`. Prior sales are
//! `S_g * Gam(k_pre) / k_pre`; experimental-period sales are
//! `(n_post / n_pre) * S_g * Gam(k_post) / k_post + X_post * beta_b`, with
//! `k = n / cv^2` and `X_post = delta * Y_pre` in treated cells, zero
//! otherwise.

use alloc::vec::Vec;

#[allow(unused_imports)] // redundant when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};

use crate::design::{self, DesignMatrix};
use crate::dist::{self, Gamma};
use crate::error::{Error, Result};
use crate::seed::{stream_rng, Stream, StreamRng};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub g_count: usize,
    pub b_count: usize,
    /// Range of `log10` GEO sizes.
    pub phi: f64,
    pub cv_pre: f64,
    pub cv_post: f64,
    pub n_pre: u32,
    pub n_post: u32,
    /// Differential spend as a fraction of prior-period sales.
    pub delta: f64,
    pub beta_mean: f64,
    pub beta_sd: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            g_count: 20,
            b_count: 30,
            phi: 1.0,
            cv_pre: 0.15,
            cv_post: 0.10,
            n_pre: 8,
            n_post: 4,
            delta: 0.01,
            beta_mean: 5.0,
            beta_sd: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.g_count == 0 || self.b_count == 0 {
            return Err(Error::InvalidConfig("g_count and b_count must be positive"));
        }
        if !(self.phi > 0.0) {
            return Err(Error::NonPositive("phi"));
        }
        for cv in [self.cv_pre, self.cv_post] {
            if !(cv > 0.0 && cv < 1.0) {
                return Err(Error::InvalidConfig("coefficients of variation must lie in (0, 1)"));
            }
        }
        if self.n_pre == 0 || self.n_post == 0 {
            return Err(Error::InvalidConfig("n_pre and n_post must be at least 1"));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidConfig("delta must be a finite non-negative fraction"));
        }
        if !(self.beta_sd >= 0.0) || !self.beta_mean.is_finite() {
            return Err(Error::InvalidConfig("beta_sd must be non-negative"));
        }
        Ok(())
    }

    pub fn kappa_pre(&self) -> f64 {
        kappa(self.cv_pre, self.n_pre)
    }

    pub fn kappa_post(&self) -> f64 {
        kappa(self.cv_post, self.n_post)
    }

    /// Length ratio of the experimental period to the prior period.
    pub fn window_ratio(&self) -> f64 {
        self.n_post as f64 / self.n_pre as f64
    }
}

/// Gamma shape giving coefficient of variation `cv / sqrt(n)` for an
/// `n`-week aggregate.
pub fn kappa(cv: f64, n_weeks: u32) -> f64 {
    n_weeks as f64 / (cv * cv)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeoProfile {
    /// Expected prior-period sales per GEO.
    pub sizes: Vec<f64>,
}

pub fn sample_geo_sizes<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> GeoProfile {
    let sizes = (0..config.g_count)
        .map(|_| {
            let u = config.phi * rng.random::<f64>();
            10f64.powf(7.0 - u)
        })
        .collect();
    GeoProfile { sizes }
}

/// `mean * Gam(k) / k` with `k = n_weeks / cv^2`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledGamma {
    gamma: Gamma,
}

impl ScaledGamma {
    pub fn new(cv: f64, n_weeks: u32) -> Self {
        Self {
            gamma: Gamma::new(kappa(cv, n_weeks)),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.gamma.shape()
    }

    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        mean * self.gamma.sample(rng) / self.gamma.shape()
    }
}

pub fn sample_scaled_gamma<R: Rng + ?Sized>(mean: f64, cv: f64, n_weeks: u32, rng: &mut R) -> f64 {
    ScaledGamma::new(cv, n_weeks).sample(mean, rng)
}

pub fn sample_brand_effects<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Vec<f64> {
    (0..config.b_count)
        .map(|_| dist::normal(rng, config.beta_mean, config.beta_sd))
        .collect()
}

/// Per-(GEO, brand) observations, stored row-major by GEO.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    pub g_count: usize,
    pub b_count: usize,
    pub y_pre: Vec<f64>,
    pub x_post: Vec<f64>,
    pub y_post: Vec<f64>,
    /// Known only for simulated data.
    pub true_beta: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        g_count: usize,
        b_count: usize,
        y_pre: Vec<f64>,
        x_post: Vec<f64>,
        y_post: Vec<f64>,
        true_beta: Option<Vec<f64>>,
    ) -> Result<Self> {
        let cells = g_count * b_count;
        if cells == 0 {
            return Err(Error::Empty);
        }
        for v in [&y_pre, &x_post, &y_post] {
            if v.len() != cells {
                return Err(Error::DimensionMismatch {
                    expected: cells,
                    found: v.len(),
                });
            }
        }
        if let Some(t) = &true_beta {
            if t.len() != b_count {
                return Err(Error::DimensionMismatch {
                    expected: b_count,
                    found: t.len(),
                });
            }
        }
        if y_pre.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NonPositive("y_pre"));
        }
        Ok(Self {
            g_count,
            b_count,
            y_pre,
            x_post,
            y_post,
            true_beta,
        })
    }

    #[inline]
    pub fn index(&self, g: usize, b: usize) -> usize {
        g * self.b_count + b
    }

    /// `(y_pre, x_post, y_post)` for one brand across GEOs.
    pub fn brand(&self, b: usize) -> BrandData {
        let pick = |v: &[f64]| (0..self.g_count).map(|g| v[self.index(g, b)]).collect();
        BrandData {
            y_pre: pick(&self.y_pre),
            x_post: pick(&self.x_post),
            y_post: pick(&self.y_post),
        }
    }

    /// A one-brand dataset holding brand `b`.
    pub fn select_brand(&self, b: usize) -> Dataset {
        let d = self.brand(b);
        Dataset {
            g_count: self.g_count,
            b_count: 1,
            y_pre: d.y_pre,
            x_post: d.x_post,
            y_post: d.y_post,
            true_beta: self.true_beta.as_ref().map(|t| alloc::vec![t[b]]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrandData {
    pub y_pre: Vec<f64>,
    pub x_post: Vec<f64>,
    pub y_post: Vec<f64>,
}

/// Data from explicit GEO sizes, brand effects and noise streams.
///
/// Pre-period noise is drawn from `pre_rng` and post-period noise from
/// `post_rng`, each in GEO-major order; neither depends on `delta`, so the
/// same streams give paired datasets across spend levels. `geo_effects`
/// adds `gamma_g` to every brand's return in GEO `g`.
pub fn generate_from_parts<R1, R2>(
    design: &DesignMatrix,
    config: &SimConfig,
    sizes: &GeoProfile,
    effects: &[f64],
    geo_effects: Option<&[f64]>,
    pre_rng: &mut R1,
    post_rng: &mut R2,
) -> Result<Dataset>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    config.validate()?;
    let (g_count, b_count) = (design.g_count(), design.b_count());
    if (g_count, b_count) != (config.g_count, config.b_count) {
        return Err(Error::DimensionMismatch {
            expected: config.g_count * config.b_count,
            found: g_count * b_count,
        });
    }
    for (len, want) in [(sizes.sizes.len(), g_count), (effects.len(), b_count)] {
        if len != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                found: len,
            });
        }
    }
    if let Some(gamma) = geo_effects {
        if gamma.len() != g_count {
            return Err(Error::DimensionMismatch {
                expected: g_count,
                found: gamma.len(),
            });
        }
    }
    let pre = ScaledGamma::new(config.cv_pre, config.n_pre);
    let post = ScaledGamma::new(config.cv_post, config.n_post);
    let ratio = config.window_ratio();
    let cells = g_count * b_count;
    let mut y_pre = Vec::with_capacity(cells);
    let mut x_post = Vec::with_capacity(cells);
    let mut y_post = Vec::with_capacity(cells);
    for g in 0..g_count {
        let size = sizes.sizes[g];
        for b in 0..b_count {
            let yp = pre.sample(size, pre_rng);
            let x = if design.is_treated(g, b) {
                config.delta * yp
            } else {
                0.0
            };
            let ret = effects[b] + geo_effects.map_or(0.0, |gamma| gamma[g]);
            y_pre.push(yp);
            x_post.push(x);
            y_post.push(ratio * post.sample(size, post_rng) + x * ret);
        }
    }
    Dataset::new(g_count, b_count, y_pre, x_post, y_post, Some(effects.to_vec()))
}

/// Draws GEO sizes, brand effects and noise from a single stream.
pub fn generate_dataset<R: Rng + ?Sized>(
    design: &DesignMatrix,
    config: &SimConfig,
    rng: &mut R,
) -> Result<Dataset> {
    config.validate()?;
    let sizes = sample_geo_sizes(config, rng);
    let effects = sample_brand_effects(config, rng);
    let mut pre = StreamRng::seed_from_u64(rng.random());
    let mut post = StreamRng::seed_from_u64(rng.random());
    generate_from_parts(design, config, &sizes, &effects, None, &mut pre, &mut post)
}

/// Everything about a replicate that does not depend on the spend level.
#[derive(Clone, Debug)]
pub struct ReplicateInputs {
    pub design: DesignMatrix,
    pub sizes: GeoProfile,
    pub effects: Vec<f64>,
}

/// A freshly scrambled design. A single brand uses one column of a scrambled
/// `G x 2` design, which treats a uniformly random half of the GEOs.
pub fn replicate_design<R: Rng + ?Sized>(
    g_count: usize,
    b_count: usize,
    rng: &mut R,
) -> Result<DesignMatrix> {
    if b_count == 1 {
        design::scrambled_checkerboard(g_count, 2, rng)?.select_brands(&[0])
    } else {
        design::scrambled_checkerboard(g_count, b_count, rng)
    }
}

/// Design, sizes and effects for `replicate`, each from its own stream. With
/// `freeze_sizes` every replicate shares the sizes of replicate zero.
pub fn replicate_inputs(
    config: &SimConfig,
    master_seed: u64,
    replicate: u64,
    freeze_sizes: bool,
) -> Result<ReplicateInputs> {
    config.validate()?;
    let design = replicate_design(
        config.g_count,
        config.b_count,
        &mut stream_rng(master_seed, replicate, Stream::Design),
    )?;
    let size_rep = if freeze_sizes { 0 } else { replicate };
    let sizes = sample_geo_sizes(config, &mut stream_rng(master_seed, size_rep, Stream::Sizes));
    let effects = sample_brand_effects(config, &mut stream_rng(master_seed, replicate, Stream::Effects));
    Ok(ReplicateInputs {
        design,
        sizes,
        effects,
    })
}

/// The replicate's dataset at `config.delta`; noise streams depend only on
/// `(master_seed, replicate)`.
pub fn replicate_dataset(
    inputs: &ReplicateInputs,
    config: &SimConfig,
    master_seed: u64,
    replicate: u64,
) -> Result<Dataset> {
    generate_from_parts(
        &inputs.design,
        config,
        &inputs.sizes,
        &inputs.effects,
        None,
        &mut stream_rng(master_seed, replicate, Stream::PreNoise),
        &mut stream_rng(master_seed, replicate, Stream::PostNoise),
    )
}
