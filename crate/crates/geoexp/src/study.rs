//! Replicated Monte Carlo studies.
//!
//! Every replicate draws a fresh scrambled design, GEO sizes and brand
//! effects, then evaluates each spend level on the same noise draws. Only
//! `X_post` changes between levels. Replicates run on a rayon pool, but
//! results are folded in replicate order, so summaries do not depend on the
//! number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use geoexp_core::bayes::{self, BayesConfig, IntervalSummary};
use geoexp_core::estimation::{self, FitResult};
use geoexp_core::seed::{stream_rng, Stream};
use geoexp_core::shrinkage::{self, ShrinkageResult};
use geoexp_core::sim::{self, SimConfig};

use crate::config::{Settings, StudyKind};

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("invalid study: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] geoexp_core::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub kind: StudyKind,
    /// `sim.delta` is ignored in favour of `delta_levels`.
    pub sim: SimConfig,
    pub bayes: Option<BayesConfig>,
    pub replicates: usize,
    pub master_seed: u64,
    pub delta_levels: Vec<f64>,
    pub freeze_sizes: bool,
    pub grid_points: usize,
}

impl StudySpec {
    pub fn new(kind: StudyKind, sim: SimConfig, replicates: usize, master_seed: u64, delta_levels: Vec<f64>) -> Self {
        Self {
            kind,
            bayes: kind.uses_bayes().then(BayesConfig::default),
            sim,
            replicates,
            master_seed,
            delta_levels,
            freeze_sizes: false,
            grid_points: 1001,
        }
    }

    /// Builds a spec from file settings. `seed` stands in when the file has
    /// no `master_seed`.
    pub fn from_settings(s: &Settings, seed: u64) -> Result<Self, StudyError> {
        let kind = s.kind.ok_or_else(|| StudyError::Invalid("missing `kind`".into()))?;
        let levels = if s.delta_levels.is_empty() {
            vec![s.sim.delta]
        } else {
            s.delta_levels.clone()
        };
        let spec = Self {
            kind,
            sim: s.sim.clone(),
            bayes: kind.uses_bayes().then(|| s.bayes.clone()),
            replicates: s.replicates,
            master_seed: s.master_seed.unwrap_or(seed),
            delta_levels: levels,
            freeze_sizes: s.freeze_sizes,
            grid_points: s.grid_points,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let invalid = |m: &str| Err(StudyError::Invalid(m.into()));
        if self.replicates == 0 {
            return invalid("replicates must be at least 1");
        }
        if self.delta_levels.is_empty() {
            return invalid("delta_levels must not be empty");
        }
        for &d in &self.delta_levels {
            self.level_config(d).validate()?;
        }
        if self.kind.uses_shrinkage() && self.sim.b_count < 2 {
            return invalid("shrinkage needs at least 2 brands");
        }
        if self.kind.uses_shrinkage() && self.grid_points < 2 {
            return invalid("grid_points must be at least 2");
        }
        match (&self.bayes, self.kind.uses_bayes()) {
            (Some(b), true) => b.validate()?,
            (None, true) => return invalid("this kind needs sampler settings"),
            _ => {}
        }
        if self.kind == StudyKind::BayesCoverage && self.replicates < bayes::MIN_COVERAGE_REPLICATES {
            return invalid("coverage needs at least 100 replicates");
        }
        Ok(())
    }

    fn level_config(&self, delta: f64) -> SimConfig {
        SimConfig {
            delta,
            ..self.sim.clone()
        }
    }
}

/// One row of the per-replicate records file. Brands are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub replicate: u64,
    pub delta: f64,
    pub brand: usize,
    pub beta_true: f64,
    pub beta_hat: f64,
    pub var_hat: f64,
    pub p_value: f64,
    pub beta_tilde: Option<f64>,
    pub bayes_mean: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

/// Everything computed for one replicate at one spend level.
#[derive(Clone, Debug)]
pub struct LevelOutcome {
    pub fits: Vec<FitResult>,
    pub shrinkage: Option<ShrinkageResult>,
    pub posterior: Option<IntervalSummary>,
    pub max_rhat: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    pub effects: Vec<f64>,
    /// Parallel to `StudySpec::delta_levels`.
    pub levels: Vec<LevelOutcome>,
}

pub fn run_replicate(spec: &StudySpec, replicate: u64) -> geoexp_core::Result<ReplicateOutcome> {
    let run = || {
        let inputs = sim::replicate_inputs(&spec.sim, spec.master_seed, replicate, spec.freeze_sizes)?;
        let mut levels = Vec::with_capacity(spec.delta_levels.len());
        for &delta in &spec.delta_levels {
            let cfg = spec.level_config(delta);
            let data = sim::replicate_dataset(&inputs, &cfg, spec.master_seed, replicate)?;
            let fits = estimation::fit_all_brands(&data)?;
            let shrinkage = if spec.kind.uses_shrinkage() {
                let hats: Vec<f64> = fits.iter().map(|f| f.beta_hat).collect();
                let vars: Vec<f64> = fits.iter().map(|f| f.var_beta).collect();
                Some(shrinkage::choose_lambda(&hats, &vars, spec.grid_points)?)
            } else {
                None
            };
            let (posterior, max_rhat) = match (&spec.bayes, spec.kind.uses_bayes()) {
                (Some(b), true) => {
                    let mut rng = stream_rng(spec.master_seed, replicate, Stream::Sampler);
                    let chains = bayes::gibbs_run(&data, b, &mut rng)?;
                    (Some(bayes::summarize_posterior(&chains, b.level)?), Some(chains.max_beta_rhat()))
                }
                _ => (None, None),
            };
            levels.push(LevelOutcome {
                fits,
                shrinkage,
                posterior,
                max_rhat,
            });
        }
        Ok(ReplicateOutcome {
            replicate,
            effects: inputs.effects,
            levels,
        })
    };
    run().map_err(|e: geoexp_core::Error| e.for_replicate(replicate))
}

fn rmse(est: &[f64], truth: &[f64]) -> f64 {
    let sq: f64 = est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    (sq / est.len() as f64).sqrt()
}

fn quantile(mut xs: Vec<f64>, p: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    bayes::quantile_sorted(&xs, p)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Aggregates for one spend level. Brand-level statistics pool every
/// `(replicate, brand)` estimate; `mean_rmse_*` average per-replicate RMSEs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub delta: f64,
    pub replicates: usize,
    pub estimates: usize,
    /// Fraction of estimates with `p <= 0.05`.
    pub rejection_rate: f64,
    pub mean_2se: f64,
    pub rmse: f64,
    pub significant: usize,
    /// Absent when no estimate is significant.
    pub mean_beta_given_significant: Option<f64>,
    /// Twice the standard error of the unweighted mean of the brand
    /// estimates; present when there are at least two brands.
    pub mean_2se_pooled: Option<f64>,
    pub mean_rmse_ols: f64,
    pub mean_efficiency: Option<f64>,
    pub median_efficiency: Option<f64>,
    pub mean_rmse_stein: Option<f64>,
    pub mean_rmse_bayes: Option<f64>,
    /// Mean of per-replicate Stein RMSE minus Bayes RMSE.
    pub mean_rmse_difference: Option<f64>,
    pub coverage: Option<f64>,
    pub covered: Option<usize>,
    pub mean_half_width: Option<f64>,
    pub half_width_q95: Option<f64>,
    pub max_rhat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub spec: StudySpec,
    pub levels: Vec<DeltaSummary>,
}

impl StudySummary {
    pub fn level(&self, delta: f64) -> Option<&DeltaSummary> {
        self.levels.iter().find(|l| l.delta == delta)
    }
}

#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub summary: StudySummary,
    /// Ordered by replicate, then spend level, then brand.
    pub records: Vec<Record>,
}

fn summarize_level(spec: &StudySpec, outcomes: &[ReplicateOutcome], k: usize) -> DeltaSummary {
    let b_count = spec.sim.b_count;
    let mut two_se = Vec::new();
    let mut sq_err = Vec::new();
    let mut significant = Vec::new();
    let mut pooled_2se = Vec::new();
    let mut rmse_ols = Vec::new();
    let mut eff = Vec::new();
    let mut rmse_stein = Vec::new();
    let mut rmse_bayes = Vec::new();
    let mut widths = Vec::new();
    let mut covered = 0;
    let mut max_rhat: Option<f64> = None;
    for o in outcomes {
        let lvl = &o.levels[k];
        let hats: Vec<f64> = lvl.fits.iter().map(|f| f.beta_hat).collect();
        for (f, &truth) in lvl.fits.iter().zip(&o.effects) {
            two_se.push(2.0 * f.se_beta());
            sq_err.push((f.beta_hat - truth).powi(2));
            if f.p_value <= SIGNIFICANCE {
                significant.push(f.beta_hat);
            }
        }
        rmse_ols.push(rmse(&hats, &o.effects));
        if b_count >= 2 {
            let var_sum: f64 = lvl.fits.iter().map(|f| f.var_beta).sum();
            pooled_2se.push(2.0 * var_sum.sqrt() / b_count as f64);
        }
        if let Some(s) = &lvl.shrinkage {
            rmse_stein.push(rmse(&s.beta_tilde, &o.effects));
            // Both sums of squares are non-negative, so this only fails on a
            // length mismatch, which `run_replicate` rules out.
            eff.push(shrinkage::efficiency(&hats, &s.beta_tilde, &o.effects).unwrap_or(f64::NAN));
        }
        if let Some(p) = &lvl.posterior {
            let means: Vec<f64> = p.brands.iter().map(|iv| iv.mean).collect();
            rmse_bayes.push(rmse(&means, &o.effects));
            for (iv, &truth) in p.brands.iter().zip(&o.effects) {
                widths.push(iv.half_width);
                covered += usize::from(iv.contains(truth));
            }
        }
        if let Some(r) = lvl.max_rhat {
            max_rhat = Some(max_rhat.map_or(r, |m: f64| m.max(r)));
        }
    }
    let estimates = two_se.len();
    let some_mean = |xs: &[f64]| (!xs.is_empty()).then(|| mean(xs));
    let has_bayes = !rmse_bayes.is_empty();
    DeltaSummary {
        delta: spec.delta_levels[k],
        replicates: outcomes.len(),
        estimates,
        rejection_rate: significant.len() as f64 / estimates as f64,
        mean_2se: mean(&two_se),
        rmse: mean(&sq_err).sqrt(),
        significant: significant.len(),
        mean_beta_given_significant: some_mean(&significant),
        mean_2se_pooled: some_mean(&pooled_2se),
        mean_rmse_ols: mean(&rmse_ols),
        mean_efficiency: some_mean(&eff),
        median_efficiency: (!eff.is_empty()).then(|| quantile(eff.clone(), 0.5)),
        mean_rmse_stein: some_mean(&rmse_stein),
        mean_rmse_bayes: some_mean(&rmse_bayes),
        mean_rmse_difference: (has_bayes && !rmse_stein.is_empty())
            .then(|| mean(&rmse_stein.iter().zip(&rmse_bayes).map(|(s, b)| s - b).collect::<Vec<_>>())),
        coverage: has_bayes.then(|| covered as f64 / widths.len() as f64),
        covered: has_bayes.then_some(covered),
        mean_half_width: some_mean(&widths),
        half_width_q95: (!widths.is_empty()).then(|| quantile(widths, 0.95)),
        max_rhat,
    }
}

fn records_for(spec: &StudySpec, o: &ReplicateOutcome) -> Vec<Record> {
    let mut out = Vec::new();
    for (k, lvl) in o.levels.iter().enumerate() {
        for (b, f) in lvl.fits.iter().enumerate() {
            let iv = lvl.posterior.as_ref().map(|p| p.brands[b]);
            out.push(Record {
                replicate: o.replicate,
                delta: spec.delta_levels[k],
                brand: b + 1,
                beta_true: o.effects[b],
                beta_hat: f.beta_hat,
                var_hat: f.var_beta,
                p_value: f.p_value,
                beta_tilde: lvl.shrinkage.as_ref().map(|s| s.beta_tilde[b]),
                bayes_mean: iv.map(|i| i.mean),
                ci_lo: iv.map(|i| i.lower),
                ci_hi: iv.map(|i| i.upper),
            });
        }
    }
    out
}

/// Runs every replicate on `jobs` threads (`None` uses rayon's default). A
/// failing replicate aborts the study; the error reported is the one with the
/// lowest replicate index.
pub fn run_study(spec: &StudySpec, jobs: Option<usize>) -> Result<StudyOutput, StudyError> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build()?;
    let results: Vec<_> = pool.install(|| {
        (0..spec.replicates as u64)
            .into_par_iter()
            .map(|r| run_replicate(spec, r))
            .collect()
    });
    let outcomes = results.into_iter().collect::<geoexp_core::Result<Vec<_>>>()?;
    let levels = (0..spec.delta_levels.len())
        .map(|k| summarize_level(spec, &outcomes, k))
        .collect();
    let records = outcomes.iter().flat_map(|o| records_for(spec, o)).collect();
    Ok(StudyOutput {
        summary: StudySummary {
            spec: spec.clone(),
            levels,
        },
        records,
    })
}

pub fn write_records<W: std::io::Write>(w: W, records: &[Record]) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(r: R) -> anyhow::Result<Vec<Record>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<Record>, _>>()?)
}
