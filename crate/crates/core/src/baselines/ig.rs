//! Integrated gradients along the straight path from a baseline input.

use super::ReferenceSet;
use crate::error::{Error, Result};
use crate::model::{estimate_gradient, GradientEstimatorConfig, ModelHandle};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct IgConfig<T> {
    /// Baseline input `x0`.
    pub baseline: Vec<T>,
    /// Trapezoid intervals on `alpha in [0, 1]`.
    pub n_intervals: usize,
}

impl<T: Scalar> IgConfig<T> {
    pub fn new(baseline: Vec<T>) -> Self {
        Self {
            baseline,
            n_intervals: 100,
        }
    }
}

/// `IG_i = (x_i - x0_i) * integral_0^1 d/dx_i f(x0 + alpha (x - x0)) dalpha`,
/// by the trapezoid rule with estimated gradients.
///
/// The deviation form differs only by `-y^t`, which has zero gradient, so
/// `y^t` is not an input.
pub fn integrated_gradient<T: Scalar>(
    model: &ModelHandle<T>,
    x_t: &[T],
    cfg: &IgConfig<T>,
    grad_cfg: &GradientEstimatorConfig<T>,
) -> Result<Vec<T>> {
    let m = model.dimension();
    for len in [x_t.len(), cfg.baseline.len()] {
        if len != m {
            return Err(Error::DimensionMismatch { expected: m, got: len });
        }
    }
    if cfg.n_intervals == 0 {
        return Err(Error::InvalidConfig("n_intervals must be at least 1".into()));
    }
    let d: Vec<T> = x_t.iter().zip(&cfg.baseline).map(|(&a, &b)| a - b).collect();
    if d.iter().all(|v| *v == T::zero()) {
        return Ok(vec![T::zero(); m]);
    }
    let k = cfg.n_intervals;
    let mut integral = vec![T::zero(); m];
    let mut point = vec![T::zero(); m];
    for step in 0..=k {
        let alpha = T::of(step as f64) / T::of(k as f64);
        for j in 0..m {
            point[j] = cfg.baseline[j] + alpha * d[j];
        }
        let w = if step == 0 || step == k { T::of(0.5) } else { T::one() };
        let g = estimate_gradient(model, &point, grad_cfg)?;
        for (acc, gi) in integral.iter_mut().zip(g) {
            *acc = *acc + w * gi;
        }
    }
    Ok(integral
        .iter()
        .zip(&d)
        .map(|(&s, &di)| di * s / T::of(k as f64))
        .collect())
}

/// Integrated gradients averaged over baselines drawn from `reference`.
pub fn expected_integrated_gradient<T: Scalar>(
    model: &ModelHandle<T>,
    x_t: &[T],
    reference: &ReferenceSet<T>,
    n_intervals: usize,
    grad_cfg: &GradientEstimatorConfig<T>,
) -> Result<Vec<T>> {
    let m = model.dimension();
    reference.check(m)?;
    let mut out = vec![T::zero(); m];
    for (r, x0) in reference.samples.iter().enumerate() {
        let cfg = IgConfig {
            baseline: x0.clone(),
            n_intervals,
        };
        let ig = integrated_gradient(model, x_t, &cfg, grad_cfg)?;
        let w = reference.weight(r);
        for (o, v) in out.iter_mut().zip(ig) {
            *o = *o + w * v;
        }
    }
    Ok(out)
}
