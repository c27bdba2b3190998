//! Random variate generators used by the simulator and the Gibbs sampler.

#[allow(unused_imports)] // redundant when std is linked
use num_traits::Float;
use rand::Rng;

/// Standard normal variate by the Marsaglia polar method.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * standard_normal(rng)
}

/// Unit-scale Gamma variates with a fixed shape.
///
/// Shape above one uses the Marsaglia–Tsang squeeze/rejection method; smaller
/// shapes draw at `shape + 1` and multiply by `U^(1/shape)`.
#[derive(Clone, Copy, Debug)]
pub struct Gamma {
    shape: f64,
    d: f64,
    c: f64,
}

impl Gamma {
    /// # Panics
    /// If `shape` is not strictly positive and finite.
    pub fn new(shape: f64) -> Self {
        assert!(shape > 0.0 && shape.is_finite(), "gamma shape must be positive");
        let boosted = if shape < 1.0 { shape + 1.0 } else { shape };
        let d = boosted - 1.0 / 3.0;
        Self {
            shape,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
        }
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let draw = loop {
            let (x, v) = loop {
                let x = standard_normal(rng);
                let v = 1.0 + self.c * x;
                if v > 0.0 {
                    break (x, v * v * v);
                }
            };
            let u: f64 = rng.random();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                break self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                break self.d * v;
            }
        };
        if self.shape < 1.0 {
            let u: f64 = rng.random();
            draw * u.powf(1.0 / self.shape)
        } else {
            draw
        }
    }
}

/// Gamma variate with the given shape and rate (mean `shape / rate`).
pub fn gamma_rate<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape).sample(rng) / rate
}

/// Inverse-gamma variate with density proportional to
/// `x^(-shape-1) exp(-rate / x)`.
pub fn inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    rate / Gamma::new(shape).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in xs {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        (mean, m2 / (n - 1) as f64, n)
    }

    #[test]
    fn normal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, v, _) = moments((0..200_000).map(|_| standard_normal(&mut rng)));
        assert!(m.abs() < 0.01, "{m}");
        assert!((v - 1.0).abs() < 0.015, "{v}");
    }

    #[test]
    fn gamma_moments_across_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for shape in [0.3, 1.0, 2.5, 355.6, 400.0] {
            let g = Gamma::new(shape);
            let (m, v, n) = moments((0..200_000).map(|_| g.sample(&mut rng)));
            let se_mean = (shape / n as f64).sqrt();
            assert!((m - shape).abs() < 5.0 * se_mean, "shape {shape}: mean {m}");
            assert!((v / shape - 1.0).abs() < 0.05, "shape {shape}: var {v}");
        }
    }

    #[test]
    fn inverse_gamma_mean() {
        // Mean of IG(a, b) is b / (a - 1).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, _, _) = moments((0..200_000).map(|_| inverse_gamma(&mut rng, 6.0, 10.0)));
        assert!((m - 2.0).abs() < 0.02, "{m}");
    }
}
