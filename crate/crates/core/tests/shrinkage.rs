use geoexp_core::dist;
use geoexp_core::shrinkage::{self, sure_g};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sure_is_unbiased_for_the_risk() {
    let beta = [4.0, 5.5, 3.2, 6.1, 5.0, 4.4, 7.3, 2.9, 5.2, 4.8];
    let var = [1.0, 2.5, 0.7, 3.0, 1.6, 0.9, 4.0, 1.2, 2.2, 1.9];
    let b = beta.len() as f64;
    let v_bar = var.iter().sum::<f64>() / b;
    let lambdas = [0.0, 0.25 * v_bar, v_bar, 4.0 * v_bar, f64::INFINITY];
    let reps = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sure = [0.0; 5];
    let mut loss = [0.0; 5];
    for _ in 0..reps {
        let hat: Vec<f64> = beta
            .iter()
            .zip(&var)
            .map(|(&m, &v)| dist::normal(&mut rng, m, v.sqrt()))
            .collect();
        for (k, &lambda) in lambdas.iter().enumerate() {
            sure[k] += sure_g(lambda, &hat, &var) / reps as f64;
            let tilde = shrinkage::shrink(&hat, &var, lambda);
            loss[k] += tilde.iter().zip(&beta).map(|(t, m)| (t - m).powi(2)).sum::<f64>() / b / reps as f64;
        }
    }
    for k in 0..5 {
        assert!((sure[k] / loss[k] - 1.0).abs() < 0.01, "lambda {}: {} vs {}", lambdas[k], sure[k], loss[k]);
    }
}

#[test]
fn grid_endpoints_reproduce_inputs() {
    let hat = [1.0, 9.0, -4.0, 12.0];
    let var = [1e-4; 4];
    let r = shrinkage::choose_lambda(&hat, &var, 1001).unwrap();
    assert_eq!(r.u, 1.0);
    assert!(r.lambda.is_infinite());
    assert_eq!(r.beta_tilde, hat);
    assert!(r.weights.iter().all(|&w| w == 1.0));
}

fn inputs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..12).prop_flat_map(|b| {
        (
            prop::collection::vec(-20.0f64..20.0, b),
            prop::collection::vec(0.01f64..10.0, b),
        )
    })
}

proptest! {
    #[test]
    fn shrunk_estimates_lie_between((hat, var) in inputs()) {
        let r = shrinkage::choose_lambda(&hat, &var, 1001).unwrap();
        let bar = hat.iter().sum::<f64>() / hat.len() as f64;
        for ((t, h), w) in r.beta_tilde.iter().zip(&hat).zip(&r.weights) {
            let (lo, hi) = if *h < bar { (*h, bar) } else { (bar, *h) };
            let slack = 1e-12 * (1.0 + h.abs() + bar.abs());
            prop_assert!(lo - slack <= *t && *t <= hi + slack);
            prop_assert!((0.0..=1.0).contains(w));
        }
        prop_assert!(r.sure_value <= sure_g(0.0, &hat, &var));
        prop_assert!(r.sure_value <= sure_g(f64::INFINITY, &hat, &var));
        prop_assert_eq!(r.clone(), shrinkage::choose_lambda(&hat, &var, 1001).unwrap());
    }

    #[test]
    fn translation_equivariance((hat, var) in inputs(), c in -50.0f64..50.0, lambda in 0.0f64..20.0) {
        let moved: Vec<f64> = hat.iter().map(|h| h + c).collect();
        let a = shrinkage::shrink(&hat, &var, lambda);
        let b = shrinkage::shrink(&moved, &var, lambda);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x + c - y).abs() < 1e-10 * (1.0 + c.abs() + x.abs()));
        }
        let (s1, s2) = (sure_g(lambda, &hat, &var), sure_g(lambda, &moved, &var));
        prop_assert!((s1 - s2).abs() < 1e-9 * (1.0 + s1.abs()));
        // The chosen risk is the same; the argmin can only move between near-ties.
        let r1 = shrinkage::choose_lambda(&hat, &var, 1001).unwrap();
        let r2 = shrinkage::choose_lambda(&moved, &var, 1001).unwrap();
        prop_assert!((r1.sure_value - r2.sure_value).abs() < 1e-9 * (1.0 + r1.sure_value.abs()));
    }

    #[test]
    fn scale_equivariance((hat, var) in inputs(), k in -6i32..6) {
        // Powers of two scale exactly in floating point.
        let c = 2f64.powi(k);
        let hs: Vec<f64> = hat.iter().map(|h| h * c).collect();
        let vs: Vec<f64> = var.iter().map(|v| v * c * c).collect();
        let r1 = shrinkage::choose_lambda(&hat, &var, 1001).unwrap();
        let r2 = shrinkage::choose_lambda(&hs, &vs, 1001).unwrap();
        prop_assert_eq!(r1.u, r2.u);
        prop_assert_eq!(r1.lambda * c * c, r2.lambda);
        for (a, b) in r1.beta_tilde.iter().zip(&r2.beta_tilde) {
            prop_assert_eq!(a * c, *b);
        }
    }

    #[test]
    fn efficiency_of_identity_is_one((hat, _var) in inputs(), truth_shift in 0.1f64..5.0) {
        let truth: Vec<f64> = hat.iter().map(|h| h + truth_shift).collect();
        prop_assert_eq!(shrinkage::efficiency(&hat, &hat, &truth).unwrap(), 1.0);
    }
}
