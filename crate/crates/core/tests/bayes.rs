use geoexp_core::bayes::{self, BayesConfig, Param, PosteriorChains};
use geoexp_core::design::DesignMatrix;
use geoexp_core::estimation;
use geoexp_core::sim::{self, Dataset, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_dataset() -> Dataset {
    let config = SimConfig {
        g_count: 8,
        b_count: 3,
        delta: 0.05,
        beta_mean: 2.0,
        ..SimConfig::default()
    };
    let design = DesignMatrix::from_pattern(&[
        "+ . +", ". + .", "+ + .", ". . +", "+ . .", ". + +", "+ . +", ". + .",
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    sim::generate_dataset(&design, &config, &mut rng).unwrap()
}

/// Solves `q x = rhs` for symmetric positive-definite `q` after symmetric
/// diagonal scaling, by Gaussian elimination. Returns `x` and `diag(q^-1)`.
fn scaled_solve(q: &[Vec<f64>], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = q.len();
    let d: Vec<f64> = (0..n).map(|i| q[i][i].sqrt()).collect();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| q[i][j] / (d[i] * d[j])).collect()).collect();
    let mut rhs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![h[i] / d[i]];
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        rhs.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..=n {
                rhs[row][k] -= f * rhs[col][k];
            }
        }
    }
    let mut x = vec![vec![0.0; n + 1]; n];
    for row in (0..n).rev() {
        for k in 0..=n {
            let mut v = rhs[row][k];
            for j in row + 1..n {
                v -= a[row][j] * x[j][k];
            }
            x[row][k] = v / a[row][row];
        }
    }
    let mean = (0..n).map(|i| x[i][0] / d[i]).collect();
    let var = (0..n).map(|i| x[i][i + 1] / (d[i] * d[i])).collect();
    (mean, var)
}

/// Closed-form joint Gaussian posterior of all brand coefficients and the
/// grand mean when both variance levels are known.
fn conjugate_posterior(data: &Dataset, sigma2: f64, sigma2_beta: f64) -> (Vec<f64>, Vec<f64>) {
    let b_count = data.b_count;
    let n = 3 * b_count + 1;
    let mut q = vec![vec![0.0; n]; n];
    let mut h = vec![0.0; n];
    for b in 0..b_count {
        for g in 0..data.g_count {
            let i = data.index(g, b);
            let row = [1.0, data.y_pre[i], data.x_post[i]];
            let w = 1.0 / (data.y_pre[i] * data.y_pre[i] * sigma2);
            for r in 0..3 {
                h[3 * b + r] += w * row[r] * data.y_post[i];
                for c in 0..3 {
                    q[3 * b + r][3 * b + c] += w * row[r] * row[c];
                }
            }
        }
        let beta_b = 3 * b + 2;
        q[beta_b][beta_b] += 1.0 / sigma2_beta;
        q[beta_b][n - 1] -= 1.0 / sigma2_beta;
        q[n - 1][beta_b] -= 1.0 / sigma2_beta;
        q[n - 1][n - 1] += 1.0 / sigma2_beta;
    }
    scaled_solve(&q, &h)
}

/// Monte Carlo standard error of the mean of `f(draw)` from batch means
/// within each chain.
fn batch_mean_se(chains: &PosteriorChains, param: Param, batch: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut means = Vec::new();
    for c in 0..chains.chain_count() {
        let s = chains.series(c, param);
        for chunk in s.chunks_exact(batch) {
            means.push(chunk.iter().map(|&x| f(x)).sum::<f64>() / batch as f64);
        }
    }
    let k = means.len() as f64;
    let m = means.iter().sum::<f64>() / k;
    let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (v / k).sqrt())
}

#[test]
fn gibbs_matches_conjugate_posterior() {
    let data = small_dataset();
    let fits = estimation::fit_all_brands(&data).unwrap();
    let sigma2 = fits.iter().map(|f| f.sigma2_hat).sum::<f64>() / 3.0;
    let sigma2_beta = 0.5;
    let (mean, var) = conjugate_posterior(&data, sigma2, sigma2_beta);
    let config = BayesConfig {
        iterations: 21_000,
        burn_in: 1000,
        fixed_sigma2_obs: Some(sigma2),
        fixed_sigma2_beta: Some(sigma2_beta),
        ..BayesConfig::default()
    };
    let chains = bayes::gibbs_run(&data, &config, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let mut params: Vec<(Param, usize)> = (0..3).map(|b| (Param::Beta(b), 3 * b + 2)).collect();
    params.push((Param::Alpha1(1), 4));
    params.push((Param::GrandMean, 9));
    for (param, k) in params {
        let (m, se) = batch_mean_se(&chains, param, 500, |x| x);
        assert!((m - mean[k]).abs() < 3.0 * se, "{param:?} mean {m} vs {} (se {se})", mean[k]);
        let (v, se_v) = batch_mean_se(&chains, param, 500, |x| (x - mean[k]).powi(2));
        assert!((v - var[k]).abs() < 3.0 * se_v, "{param:?} var {v} vs {} (se {se_v})", var[k]);
    }
}

#[test]
fn chains_mix_on_the_study_configuration() {
    let sim = SimConfig {
        g_count: 160,
        b_count: 4,
        beta_mean: 1.0,
        beta_sd: 1.0,
        ..SimConfig::default()
    };
    for rep in 0..10 {
        let r = bayes::bayes_replicate(&sim, &BayesConfig::default(), 99, rep, false).unwrap();
        assert!(r.max_rhat < 1.05, "replicate {rep}: {}", r.max_rhat);
        for iv in &r.summary.brands {
            assert!(iv.lower <= iv.mean && iv.mean <= iv.upper);
        }
    }
}

#[test]
fn single_brand_width_is_inverse_to_spend() {
    let mut widths = Vec::new();
    for delta in [0.005, 0.01, 0.02] {
        let sim = SimConfig {
            g_count: 160,
            b_count: 1,
            beta_mean: 1.0,
            beta_sd: 0.25,
            delta,
            ..SimConfig::default()
        };
        let reps = 40;
        let w: f64 = (0..reps)
            .map(|r| bayes::bayes_replicate(&sim, &BayesConfig::default(), 5, r, false).unwrap().summary.brands[0].half_width)
            .sum::<f64>()
            / reps as f64;
        widths.push(w);
    }
    assert!(widths[0] > widths[1] && widths[1] > widths[2], "{widths:?}");
    for pair in widths.windows(2) {
        assert!((pair[0] / pair[1] / 2.0 - 1.0).abs() < 0.15, "{widths:?}");
    }
}

#[test]
fn coverage_is_a_fraction() {
    let sim = SimConfig {
        g_count: 40,
        b_count: 4,
        beta_mean: 1.0,
        beta_sd: 0.5,
        ..SimConfig::default()
    };
    let bayes = BayesConfig {
        iterations: 600,
        burn_in: 200,
        chains: 2,
        ..BayesConfig::default()
    };
    let cell = bayes::coverage_study(&sim, &bayes, 100, 1).unwrap();
    assert_eq!(cell.trials, 400);
    let c = cell.coverage();
    assert!((0.0..=1.0).contains(&c));
    assert!((c - 0.95).abs() < 0.05, "{c}");
}
