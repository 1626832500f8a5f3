//! Gradient of a black-box function as the local mean of the slope
//! `[f(x + h e_i) - f(x)] / h` with `h ~ N(0, perturbation_std^2)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ModelHandle;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Draws with `|h| < REDRAW_RATIO * perturbation_std` are rejected.
const REDRAW_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientEstimatorConfig<T> {
    pub perturbation_std: T,
    pub mc_samples: usize,
    pub seed: u64,
    /// Pair every draw `h` with `-h`. Each draw is still marginally Gaussian,
    /// and the second-order bias of the one-sided slope cancels.
    pub antithetic: bool,
}

impl<T: Scalar> Default for GradientEstimatorConfig<T> {
    fn default() -> Self {
        Self {
            perturbation_std: T::one(),
            mc_samples: 10,
            seed: 0,
            antithetic: false,
        }
    }
}

impl<T: Scalar> GradientEstimatorConfig<T> {
    pub fn new(perturbation_std: T, mc_samples: usize, seed: u64) -> Self {
        Self {
            perturbation_std,
            mc_samples,
            seed,
            antithetic: false,
        }
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::InvalidConfig("mc_samples must be >= 1".into()));
        }
        if !(self.perturbation_std > T::zero()) || !self.perturbation_std.is_finite() {
            return Err(Error::InvalidConfig("perturbation_std must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate<T> {
    pub gradient: Vec<T>,
    /// `f(x)`, evaluated once and shared by every slope.
    pub value: T,
    pub redraws: u64,
}

pub fn estimate_gradient<T: Scalar>(
    model: &ModelHandle<T>,
    x: &[T],
    cfg: &GradientEstimatorConfig<T>,
) -> Result<Vec<T>> {
    estimate_gradient_full(model, x, cfg).map(|g| g.gradient)
}

/// Like [`estimate_gradient`] but also returns `f(x)` and the redraw count.
///
/// Issues exactly `1 + M * mc_samples` model queries. Coordinate `i` draws
/// from its own ChaCha stream, so results do not depend on evaluation order.
pub fn estimate_gradient_full<T: Scalar>(
    model: &ModelHandle<T>,
    x: &[T],
    cfg: &GradientEstimatorConfig<T>,
) -> Result<GradientEstimate<T>> {
    cfg.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("gradient requested at a non-finite point".into()));
    }
    let value = model.evaluate(x)?;
    let sd = cfg.perturbation_std.to_f64_lossy();
    let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let min_step = REDRAW_RATIO * sd;

    let mut gradient = Vec::with_capacity(x.len());
    let mut redraws = 0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let mut sum = T::zero();
        let mut last = 0.0;
        for j in 0..cfg.mc_samples {
            let h = if cfg.antithetic && j % 2 == 1 {
                -last
            } else {
                loop {
                    let h: f64 = normal.sample(&mut rng);
                    if h.abs() >= min_step {
                        break h;
                    }
                    redraws += 1;
                }
            };
            last = h;
            probe[i] = x[i] + T::of(h);
            // the representable step, not the drawn one
            let step = probe[i] - x[i];
            let fh = model.evaluate(&probe)?;
            if step != T::zero() {
                sum = sum + (fh - value) / step;
            }
        }
        probe[i] = x[i];
        gradient.push(sum / T::of(cfg.mc_samples as f64));
    }
    Ok(GradientEstimate {
        gradient,
        value,
        redraws,
    })
}
