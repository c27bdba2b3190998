//! Gibbs sampler for the hierarchical model
//!
//! ```text
//! Y_post[g,b] ~ N(a0[b] + a1[b] Y_pre[g,b] + beta[b] X_post[g,b], sigma2[b] / w[g,b])
//! sigma2[b]   ~ IG(a_obs, b_obs)
//! beta[b]     ~ N(beta, sigma2_beta)
//! sigma2_beta ~ IG(a_beta, b_beta)
//! beta, a0[b], a1[b] flat
//! ```
//!
//! Every full conditional is conjugate. The three regression coefficients of
//! a brand are drawn jointly since `a1` and `beta` are strongly collinear.
//! Inverse-gamma laws use shape/rate: density `∝ x^(-shape-1) exp(-rate/x)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // redundant when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};

use crate::dist;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::seed::{stream_rng, Stream, StreamRng};
use crate::sim::{self, Dataset, SimConfig};

/// Observation weights `w[g,b]` in the noise variance `sigma2[b] / w[g,b]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NoiseModel {
    /// Noise sd `sigma[b] * Y_pre`, weights `1 / Y_pre^2`. Matches the
    /// least squares weighting and the Gamma sales model.
    #[default]
    RelativeToPre,
    /// Noise sd `sigma[b] / Y_pre`, weights `Y_pre^2`.
    InverseToPre,
}

impl NoiseModel {
    pub fn weight(self, y_pre: f64) -> f64 {
        match self {
            NoiseModel::RelativeToPre => 1.0 / (y_pre * y_pre),
            NoiseModel::InverseToPre => y_pre * y_pre,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BayesConfig {
    /// Iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub thin: usize,
    /// `(shape, rate)` of the prior on each `sigma2[b]`.
    pub ig_obs: (f64, f64),
    /// `(shape, rate)` of the prior on `sigma2_beta`.
    pub ig_beta: (f64, f64),
    pub level: f64,
    pub noise_model: NoiseModel,
    /// Holds every `sigma2[b]` at this value instead of sampling it.
    pub fixed_sigma2_obs: Option<f64>,
    /// Holds `sigma2_beta` at this value instead of sampling it.
    pub fixed_sigma2_beta: Option<f64>,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            burn_in: 1000,
            chains: 4,
            thin: 1,
            ig_obs: (1e-3, 1e-3),
            ig_beta: (0.5, 0.5),
            level: 0.95,
            noise_model: NoiseModel::default(),
            fixed_sigma2_obs: None,
            fixed_sigma2_beta: None,
        }
    }
}

impl BayesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig("burn_in must be less than iterations"));
        }
        if self.chains == 0 {
            return Err(Error::InvalidConfig("need at least one chain"));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig("level must lie in (0, 1)"));
        }
        let (a, b) = self.ig_obs;
        let (c, d) = self.ig_beta;
        if !(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0) {
            return Err(Error::NonPositive("inverse-gamma hyperparameters"));
        }
        for v in [self.fixed_sigma2_obs, self.fixed_sigma2_beta].into_iter().flatten() {
            if !(v > 0.0) {
                return Err(Error::NonPositive("fixed variances"));
            }
        }
        Ok(())
    }

    pub fn draws_per_chain(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// A sampled quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    Alpha0(usize),
    Alpha1(usize),
    Beta(usize),
    Sigma2(usize),
    /// The across-brand mean `beta`.
    GrandMean,
    Sigma2Beta,
}

const PER_BRAND: usize = 4;

impl Param {
    pub fn index(self, b_count: usize) -> usize {
        match self {
            Param::Alpha0(b) => b * PER_BRAND,
            Param::Alpha1(b) => b * PER_BRAND + 1,
            Param::Beta(b) => b * PER_BRAND + 2,
            Param::Sigma2(b) => b * PER_BRAND + 3,
            Param::GrandMean => b_count * PER_BRAND,
            Param::Sigma2Beta => b_count * PER_BRAND + 1,
        }
    }

    /// All parameters in storage order.
    pub fn all(b_count: usize) -> Vec<Param> {
        let mut out = Vec::with_capacity(PER_BRAND * b_count + 2);
        for b in 0..b_count {
            out.extend([Param::Alpha0(b), Param::Alpha1(b), Param::Beta(b), Param::Sigma2(b)]);
        }
        out.extend([Param::GrandMean, Param::Sigma2Beta]);
        out
    }

    pub fn name(self) -> String {
        match self {
            Param::Alpha0(b) => format!("alpha0[{b}]"),
            Param::Alpha1(b) => format!("alpha1[{b}]"),
            Param::Beta(b) => format!("beta[{b}]"),
            Param::Sigma2(b) => format!("sigma2[{b}]"),
            Param::GrandMean => "beta_mean".into(),
            Param::Sigma2Beta => "sigma2_beta".into(),
        }
    }

    pub fn parse(name: &str) -> Option<Param> {
        match name {
            "beta_mean" => return Some(Param::GrandMean),
            "sigma2_beta" => return Some(Param::Sigma2Beta),
            _ => {}
        }
        let (head, rest) = name.split_once('[')?;
        let b: usize = rest.strip_suffix(']')?.parse().ok()?;
        match head {
            "alpha0" => Some(Param::Alpha0(b)),
            "alpha1" => Some(Param::Alpha1(b)),
            "beta" => Some(Param::Beta(b)),
            "sigma2" => Some(Param::Sigma2(b)),
            _ => None,
        }
    }
}

/// Retained draws. Each chain is a row-major buffer of `draws_per_chain`
/// rows with one column per [`Param`] in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorChains {
    b_count: usize,
    draws_per_chain: usize,
    chains: Vec<Vec<f64>>,
}

impl PosteriorChains {
    pub fn from_parts(b_count: usize, draws_per_chain: usize, chains: Vec<Vec<f64>>) -> Result<Self> {
        let width = PER_BRAND * b_count + 2;
        for c in &chains {
            if c.len() != width * draws_per_chain {
                return Err(Error::DimensionMismatch {
                    expected: width * draws_per_chain,
                    found: c.len(),
                });
            }
        }
        Ok(Self {
            b_count,
            draws_per_chain,
            chains,
        })
    }

    pub fn b_count(&self) -> usize {
        self.b_count
    }

    pub fn chain_count(&self) -> usize {
        self.chains.len()
    }

    pub fn draws_per_chain(&self) -> usize {
        self.draws_per_chain
    }

    pub fn param_count(&self) -> usize {
        PER_BRAND * self.b_count + 2
    }

    /// Row-major draws of chain `c`.
    pub fn chain(&self, c: usize) -> &[f64] {
        &self.chains[c]
    }

    pub fn series(&self, chain: usize, param: Param) -> Vec<f64> {
        let (width, col) = (self.param_count(), param.index(self.b_count));
        self.chains[chain].iter().skip(col).step_by(width).copied().collect()
    }

    /// Draws of `param` from every chain, chain after chain.
    pub fn pooled(&self, param: Param) -> Vec<f64> {
        (0..self.chain_count())
            .flat_map(|c| self.series(c, param))
            .collect()
    }

    /// Split potential scale reduction of `param` across chains.
    pub fn rhat(&self, param: Param) -> f64 {
        let series: Vec<Vec<f64>> = (0..self.chain_count()).map(|c| self.series(c, param)).collect();
        let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
        rhat(&refs)
    }

    pub fn max_beta_rhat(&self) -> f64 {
        (0..self.b_count)
            .map(|b| self.rhat(Param::Beta(b)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct BrandBlock {
    /// Row-major `G x 3` regressors `(1, Y_pre, X_post)`.
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    xtwx: [f64; 9],
    xtwy: [f64; 3],
}

impl BrandBlock {
    fn new(data: &Dataset, b: usize, noise: NoiseModel) -> Self {
        let g_count = data.g_count;
        let mut x = Vec::with_capacity(3 * g_count);
        let mut y = Vec::with_capacity(g_count);
        let mut w = Vec::with_capacity(g_count);
        let mut xtwx = [0.0; 9];
        let mut xtwy = [0.0; 3];
        for g in 0..g_count {
            let i = data.index(g, b);
            let row = [1.0, data.y_pre[i], data.x_post[i]];
            let wi = noise.weight(data.y_pre[i]);
            for r in 0..3 {
                xtwy[r] += wi * row[r] * data.y_post[i];
                for c in 0..3 {
                    xtwx[r * 3 + c] += wi * row[r] * row[c];
                }
            }
            x.extend_from_slice(&row);
            y.push(data.y_post[i]);
            w.push(wi);
        }
        Self { x, y, w, xtwx, xtwy }
    }

    fn rss(&self, theta: &[f64; 3]) -> f64 {
        self.x
            .chunks_exact(3)
            .zip(self.y.iter().zip(&self.w))
            .map(|(row, (&y, &w))| {
                let r = y - (theta[0] + theta[1] * row[1] + theta[2] * row[2]);
                w * r * r
            })
            .sum()
    }

    /// Least squares start, with unit diagonal standing in for empty columns.
    fn start(&self, g_count: usize) -> Result<([f64; 3], Cholesky, f64)> {
        let mut a = self.xtwx;
        for i in 0..3 {
            if a[i * 3 + i] == 0.0 {
                a[i * 3 + i] = 1.0;
            }
        }
        let chol = Cholesky::factor(&a, 3)?;
        let coef = chol.solve(&self.xtwy);
        let theta = [coef[0], coef[1], coef[2]];
        let dof = g_count.saturating_sub(3).max(1) as f64;
        let s2 = self.rss(&theta) / dof;
        let scale = self.y.iter().zip(&self.w).map(|(y, w)| w * y * y).sum::<f64>() / g_count as f64;
        Ok((theta, chol, s2.max(1e-12 * scale).max(f64::MIN_POSITIVE)))
    }
}

fn check_dataset(data: &Dataset) -> Result<()> {
    if data.b_count == 0 {
        return Err(Error::Empty);
    }
    if data.y_pre.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositive("y_pre"));
    }
    if data.g_count < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: data.g_count,
        });
    }
    Ok(())
}

/// One chain of the sampler, seeded from `seed`. Returns the retained draws
/// in row-major order.
pub fn gibbs_chain(data: &Dataset, config: &BayesConfig, seed: u64) -> Result<Vec<f64>> {
    config.validate()?;
    check_dataset(data)?;
    let mut rng = StreamRng::seed_from_u64(seed);
    let (g_count, b_count) = (data.g_count, data.b_count);
    let blocks: Vec<BrandBlock> = (0..b_count)
        .map(|b| BrandBlock::new(data, b, config.noise_model))
        .collect();

    // Overdispersed start: least squares plus twice its sampling noise.
    let mut theta = vec![[0.0; 3]; b_count];
    let mut sigma2 = vec![0.0; b_count];
    for (b, block) in blocks.iter().enumerate() {
        let (coef, chol, s2) = block.start(g_count).map_err(|e| e.for_brand(b))?;
        let z = [
            dist::standard_normal(&mut rng),
            dist::standard_normal(&mut rng),
            dist::standard_normal(&mut rng),
        ];
        let jitter = chol.precision_noise(&z);
        for k in 0..3 {
            theta[b][k] = coef[k] + 2.0 * s2.sqrt() * jitter[k];
        }
        sigma2[b] = config.fixed_sigma2_obs.unwrap_or(s2);
    }
    let mut grand = theta.iter().map(|t| t[2]).sum::<f64>() / b_count as f64;
    let mut sigma2_beta = config.fixed_sigma2_beta.unwrap_or_else(|| {
        let spread = theta.iter().map(|t| (t[2] - grand).powi(2)).sum::<f64>();
        if b_count > 1 && spread > 0.0 {
            spread / (b_count - 1) as f64
        } else {
            1.0
        }
    });

    let width = PER_BRAND * b_count + 2;
    let mut out = Vec::with_capacity(width * config.draws_per_chain());
    let (a_obs, r_obs) = config.ig_obs;
    let (a_beta, r_beta) = config.ig_beta;
    for iter in 0..config.iterations {
        for (b, block) in blocks.iter().enumerate() {
            if config.fixed_sigma2_obs.is_none() {
                let rss = block.rss(&theta[b]);
                sigma2[b] = dist::inverse_gamma(&mut rng, a_obs + 0.5 * g_count as f64, r_obs + 0.5 * rss);
            }
            let mut p = [0.0; 9];
            for (dst, src) in p.iter_mut().zip(&block.xtwx) {
                *dst = src / sigma2[b];
            }
            p[8] += 1.0 / sigma2_beta;
            let mut h = [0.0; 3];
            for (dst, src) in h.iter_mut().zip(&block.xtwy) {
                *dst = src / sigma2[b];
            }
            h[2] += grand / sigma2_beta;
            let chol = Cholesky::factor(&p, 3).map_err(|e| e.for_brand(b))?;
            let mean = chol.solve(&h);
            let z = [
                dist::standard_normal(&mut rng),
                dist::standard_normal(&mut rng),
                dist::standard_normal(&mut rng),
            ];
            let noise = chol.precision_noise(&z);
            for k in 0..3 {
                theta[b][k] = mean[k] + noise[k];
            }
        }
        let beta_bar = theta.iter().map(|t| t[2]).sum::<f64>() / b_count as f64;
        grand = dist::normal(&mut rng, beta_bar, (sigma2_beta / b_count as f64).sqrt());
        if config.fixed_sigma2_beta.is_none() {
            let ss: f64 = theta.iter().map(|t| (t[2] - grand).powi(2)).sum();
            sigma2_beta = dist::inverse_gamma(&mut rng, a_beta + 0.5 * b_count as f64, r_beta + 0.5 * ss);
        }
        if iter >= config.burn_in && (iter - config.burn_in) % config.thin == 0 {
            for b in 0..b_count {
                out.extend_from_slice(&theta[b]);
                out.push(sigma2[b]);
            }
            out.push(grand);
            out.push(sigma2_beta);
        }
    }
    Ok(out)
}

/// Runs `config.chains` chains, each seeded by a draw from `rng`.
pub fn gibbs_run<R: Rng + ?Sized>(data: &Dataset, config: &BayesConfig, rng: &mut R) -> Result<PosteriorChains> {
    config.validate()?;
    check_dataset(data)?;
    let seeds: Vec<u64> = (0..config.chains).map(|_| rng.random()).collect();
    let chains = seeds
        .iter()
        .map(|&s| gibbs_chain(data, config, s))
        .collect::<Result<Vec<_>>>()?;
    PosteriorChains::from_parts(data.b_count, config.draws_per_chain(), chains)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalSummary {
    pub level: f64,
    pub brands: Vec<Interval>,
    pub grand: Interval,
}

pub const MIN_DRAWS: usize = 100;

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and equal-tailed interval of a set of draws.
pub fn summarize_draws(draws: &[f64], level: f64) -> Result<Interval> {
    if draws.len() < MIN_DRAWS {
        return Err(Error::TooFewDraws {
            needed: MIN_DRAWS,
            got: draws.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig("level must lie in (0, 1)"));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    let lower = quantile_sorted(&sorted, tail);
    let upper = quantile_sorted(&sorted, 1.0 - tail);
    let mean = (draws.iter().sum::<f64>() / draws.len() as f64).clamp(lower, upper);
    Ok(Interval {
        mean,
        lower,
        upper,
        half_width: 0.5 * (upper - lower),
    })
}

/// Intervals for every `beta[b]` and the grand mean, pooling all chains.
pub fn summarize_posterior(chains: &PosteriorChains, level: f64) -> Result<IntervalSummary> {
    let brands = (0..chains.b_count())
        .map(|b| summarize_draws(&chains.pooled(Param::Beta(b)), level))
        .collect::<Result<Vec<_>>>()?;
    let grand = summarize_draws(&chains.pooled(Param::GrandMean), level)?;
    Ok(IntervalSummary { level, brands, grand })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Split-chain Gelman-Rubin statistic. Each chain is cut in half and the
/// halves are compared as separate chains.
pub fn rhat(chains: &[&[f64]]) -> f64 {
    let half = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half < 2 {
        return f64::NAN;
    }
    let pieces: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[c.len() - half..]])
        .collect();
    let stats: Vec<(f64, f64)> = pieces.iter().map(|p| mean_var(p)).collect();
    let n = half as f64;
    let within = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let between = n * mean_var(&means).1;
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let pooled = (n - 1.0) / n * within + between / n;
    (pooled / within).sqrt()
}

/// Posterior summary for one simulated replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesReplicate {
    pub effects: Vec<f64>,
    pub summary: IntervalSummary,
    pub max_rhat: f64,
}

impl BayesReplicate {
    pub fn covered(&self) -> usize {
        self.summary
            .brands
            .iter()
            .zip(&self.effects)
            .filter(|(iv, &b)| iv.contains(b))
            .count()
    }
}

/// Simulates replicate `replicate` of `sim` and summarizes its posterior.
/// The sampler uses the replicate's own stream.
pub fn bayes_replicate(
    sim: &SimConfig,
    bayes: &BayesConfig,
    master_seed: u64,
    replicate: u64,
    freeze_sizes: bool,
) -> Result<BayesReplicate> {
    let run = || -> Result<BayesReplicate> {
        let inputs = sim::replicate_inputs(sim, master_seed, replicate, freeze_sizes)?;
        let data = sim::replicate_dataset(&inputs, sim, master_seed, replicate)?;
        let chains = gibbs_run(&data, bayes, &mut stream_rng(master_seed, replicate, Stream::Sampler))?;
        Ok(BayesReplicate {
            summary: summarize_posterior(&chains, bayes.level)?,
            max_rhat: chains.max_beta_rhat(),
            effects: inputs.effects,
        })
    };
    run().map_err(|e| e.for_replicate(replicate))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageCell {
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub replicates: usize,
    /// Brand intervals that contained the true effect.
    pub covered: usize,
    pub trials: usize,
}

impl CoverageCell {
    pub fn from_replicates(sim: &SimConfig, reps: &[BayesReplicate]) -> Self {
        Self {
            beta_mean: sim.beta_mean,
            beta_sd: sim.beta_sd,
            replicates: reps.len(),
            covered: reps.iter().map(BayesReplicate::covered).sum(),
            trials: reps.iter().map(|r| r.effects.len()).sum(),
        }
    }

    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.trials as f64
    }
}

pub const MIN_COVERAGE_REPLICATES: usize = 100;

/// Fraction of brand intervals covering the true effect over `replicates`
/// fresh replicates of `sim`.
pub fn coverage_study(sim: &SimConfig, bayes: &BayesConfig, replicates: usize, master_seed: u64) -> Result<CoverageCell> {
    if replicates < MIN_COVERAGE_REPLICATES {
        return Err(Error::InvalidConfig("coverage needs at least 100 replicates"));
    }
    let reps = (0..replicates as u64)
        .map(|r| bayes_replicate(sim, bayes, master_seed, r, false))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCell::from_replicates(sim, &reps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignMatrix;
    use crate::estimation;

    fn small_data(noise: f64, seed: u64) -> Dataset {
        let config = SimConfig {
            g_count: 12,
            b_count: 2,
            cv_post: noise,
            delta: 0.05,
            ..SimConfig::default()
        };
        let design = DesignMatrix::checkerboard(12, 2).unwrap();
        let mut rng = StreamRng::seed_from_u64(seed);
        sim::generate_dataset(&design, &config, &mut rng).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(BayesConfig::default().validate().is_ok());
        let bad = [
            BayesConfig { burn_in: 2000, ..BayesConfig::default() },
            BayesConfig { chains: 0, ..BayesConfig::default() },
            BayesConfig { thin: 0, ..BayesConfig::default() },
            BayesConfig { level: 1.0, ..BayesConfig::default() },
            BayesConfig { ig_obs: (0.0, 1.0), ..BayesConfig::default() },
            BayesConfig { fixed_sigma2_beta: Some(-1.0), ..BayesConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert_eq!(BayesConfig::default().draws_per_chain(), 1000);
        let thinned = BayesConfig { thin: 3, ..BayesConfig::default() };
        assert_eq!(thinned.draws_per_chain(), 334);
    }

    #[test]
    fn param_names_round_trip() {
        for p in Param::all(3) {
            assert_eq!(Param::parse(&p.name()), Some(p));
        }
        let idx: Vec<usize> = Param::all(3).iter().map(|p| p.index(3)).collect();
        assert_eq!(idx, (0..14).collect::<Vec<_>>());
        assert_eq!(Param::parse("gamma[1]"), None);
        assert_eq!(Param::parse("beta[x]"), None);
    }

    #[test]
    fn draws_are_positive_and_deterministic() {
        let data = small_data(0.1, 3);
        let cfg = BayesConfig { iterations: 300, burn_in: 100, chains: 2, ..BayesConfig::default() };
        let a = gibbs_run(&data, &cfg, &mut StreamRng::seed_from_u64(9)).unwrap();
        let b = gibbs_run(&data, &cfg, &mut StreamRng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.chain_count(), 2);
        assert_eq!(a.draws_per_chain(), 200);
        for bnd in 0..2 {
            assert!(a.pooled(Param::Sigma2(bnd)).iter().all(|&v| v > 0.0));
        }
        assert!(a.pooled(Param::Sigma2Beta).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rejects_bad_data() {
        let mut data = small_data(0.1, 1);
        data.y_pre[3] = 0.0;
        let err = gibbs_run(&data, &BayesConfig::default(), &mut StreamRng::seed_from_u64(0));
        assert_eq!(err.unwrap_err(), Error::NonPositive("y_pre"));
    }

    #[test]
    fn noiseless_data_pins_coefficients() {
        // y = 50 + 0.5 y_pre + 3 x exactly.
        let g = 10;
        let y_pre: Vec<f64> = (0..g).map(|i| 1000.0 * (1.0 + i as f64 * 0.37)).collect();
        let x_post: Vec<f64> = (0..g).map(|i| if i % 2 == 0 { 0.01 * y_pre[i] } else { 0.0 }).collect();
        let y_post: Vec<f64> = (0..g).map(|i| 50.0 + 0.5 * y_pre[i] + 3.0 * x_post[i]).collect();
        let data = Dataset::new(g, 1, y_pre, x_post, y_post, None).unwrap();
        let cfg = BayesConfig {
            iterations: 400,
            burn_in: 200,
            chains: 2,
            fixed_sigma2_obs: Some(1e-20),
            ..BayesConfig::default()
        };
        let chains = gibbs_run(&data, &cfg, &mut StreamRng::seed_from_u64(5)).unwrap();
        for (p, want) in [(Param::Alpha0(0), 50.0), (Param::Alpha1(0), 0.5), (Param::Beta(0), 3.0)] {
            for v in chains.pooled(p) {
                assert!((v - want).abs() < 1e-6 * want.abs().max(1.0), "{p:?}: {v}");
            }
        }
    }

    #[test]
    fn flat_prior_single_brand_matches_least_squares() {
        let data = small_data(0.1, 11).select_brand(0);
        let fit = estimation::fit_all_brands(&data).unwrap()[0];
        let cfg = BayesConfig {
            fixed_sigma2_obs: Some(fit.sigma2_hat),
            fixed_sigma2_beta: Some(1e9),
            ..BayesConfig::default()
        };
        let chains = gibbs_run(&data, &cfg, &mut StreamRng::seed_from_u64(1)).unwrap();
        let draws = chains.pooled(Param::Beta(0));
        let (m, v) = mean_var(&draws);
        // Draws of theta are independent given fixed variances.
        let se = (v / draws.len() as f64).sqrt();
        assert!((m - fit.beta_hat).abs() < 3.0 * se, "{m} vs {}", fit.beta_hat);
        assert!((v / fit.var_beta - 1.0).abs() < 0.1, "{v} vs {}", fit.var_beta);
    }

    #[test]
    fn interval_of_constant_draws() {
        let iv = summarize_draws(&[2.5; 200], 0.95).unwrap();
        assert_eq!((iv.lower, iv.mean, iv.upper, iv.half_width), (2.5, 2.5, 2.5, 0.0));
        assert_eq!(
            summarize_draws(&[1.0; 99], 0.95).unwrap_err(),
            Error::TooFewDraws { needed: 100, got: 99 }
        );
    }

    #[test]
    fn normal_quantiles() {
        let mut rng = StreamRng::seed_from_u64(77);
        let draws: Vec<f64> = (0..10_000).map(|_| dist::standard_normal(&mut rng)).collect();
        let iv = summarize_draws(&draws, 0.95).unwrap();
        assert!((iv.lower + 1.96).abs() < 0.05, "{}", iv.lower);
        assert!((iv.upper - 1.96).abs() < 0.05, "{}", iv.upper);
    }

    #[test]
    fn rhat_detects_disagreement() {
        let mut rng = StreamRng::seed_from_u64(2);
        let a: Vec<f64> = (0..500).map(|_| dist::standard_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..500).map(|_| dist::standard_normal(&mut rng)).collect();
        let c: Vec<f64> = b.iter().map(|v| v + 3.0).collect();
        assert!(rhat(&[&a, &b]) < 1.02);
        assert!(rhat(&[&a, &c]) > 1.5);
        assert_eq!(rhat(&[&[1.0; 10], &[1.0; 10]]), 1.0);
    }

    #[test]
    fn coverage_needs_enough_replicates() {
        let err = coverage_study(&SimConfig::default(), &BayesConfig::default(), 10, 0);
        assert!(err.is_err());
    }
}
