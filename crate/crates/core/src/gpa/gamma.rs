//! Gamma-prior hyperparameters: the shape from a virtual sample size, the
//! rate from the residual variance, optionally refined per sample.

use crate::error::{Error, Result};
use crate::io::TestSet;
use crate::model::ModelHandle;
use crate::scalar::Scalar;

/// Floor applied to a zero residual variance.
const VARIANCE_FLOOR: f64 = 1e-6;
/// Relative change that stops the rate refinement.
const REFINE_RTOL: f64 = 1e-12;

/// Locality kernel `w_n = w0 + exp(-|x_n - x_t|^2 / (2 eta0^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<T> {
    pub w0: T,
    pub eta0: T,
}

impl<T: Scalar> Default for Kernel<T> {
    fn default() -> Self {
        Self {
            w0: T::zero(),
            eta0: T::one(),
        }
    }
}

impl<T: Scalar> Kernel<T> {
    pub fn weight(&self, a: &[T], b: &[T]) -> T {
        let d2: T = a.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).sum();
        self.w0 + (-d2 / (T::of(2.0) * self.eta0 * self.eta0)).exp()
    }
}

/// `a0 = (n_virtual + 1) / 2`, so that `2 a0` is the degrees of freedom.
pub fn select_gamma_shape<T: Scalar>(n_virtual: usize) -> Result<T> {
    if n_virtual == 0 {
        return Err(Error::InvalidConfig("virtual sample size must be >= 1".into()));
    }
    Ok(T::of((n_virtual as f64 + 1.0) / 2.0))
}

/// `y_t - f(x_t)` for every sample.
pub fn residuals<T: Scalar>(testset: &TestSet<T>, model: &ModelHandle<T>) -> Result<Vec<T>> {
    testset
        .samples
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let f = model.evaluate(&s.x)?;
            if f.is_finite() {
                Ok(s.y - f)
            } else {
                Err(Error::NonFinite { sample: t })
            }
        })
        .collect()
}

/// `b0 = a0 sigma_yf^2 / c_b`, with `sigma_yf^2` the mean squared residual.
pub fn init_gamma_rate<T: Scalar>(testset: &TestSet<T>, model: &ModelHandle<T>, a0: T, c_b: T) -> Result<T> {
    if testset.is_empty() {
        return Err(Error::InvalidConfig("test set is empty".into()));
    }
    if !(c_b > T::zero()) {
        return Err(Error::InvalidConfig("c_b must be positive".into()));
    }
    let r = residuals(testset, model)?;
    let var = r.iter().map(|&v| v * v).sum::<T>() / T::of(r.len() as f64);
    let var = if var > T::zero() { var } else { T::of(VARIANCE_FLOOR) };
    Ok(a0 * var / c_b)
}

/// Kernel-weighted fixed point for the rate at sample `anchor`:
///
/// ```text
/// 1/b <- ((2 a0 + 1) / a0) sum_{n != anchor} w~_n / (2 b + r_n^2)
/// ```
///
/// Runs for `iters` rounds or until the relative change drops below 1e-12.
/// The result is floored at `1e-6 * b_init`.
pub fn refine_gamma_rate<T: Scalar>(
    testset: &TestSet<T>,
    model: &ModelHandle<T>,
    a0: T,
    b_init: T,
    anchor: usize,
    kernel: &Kernel<T>,
    iters: usize,
) -> Result<T> {
    if testset.len() < 2 {
        return Err(Error::InvalidConfig(
            "rate refinement needs at least two samples; use init_gamma_rate for a single sample".into(),
        ));
    }
    if anchor >= testset.len() {
        return Err(Error::InvalidConfig(format!("anchor {anchor} out of range")));
    }
    if !(b_init > T::zero()) {
        return Err(Error::InvalidConfig("initial rate must be positive".into()));
    }
    let r = residuals(testset, model)?;
    let xt = &testset.samples[anchor].x;
    let mut weights: Vec<(T, T)> = testset
        .samples
        .iter()
        .zip(&r)
        .enumerate()
        .filter(|(n, _)| *n != anchor)
        .map(|(_, (s, &rn))| (kernel.weight(&s.x, xt), rn * rn))
        .collect();
    let total: T = weights.iter().map(|w| w.0).sum();
    if !(total > T::zero()) {
        return Err(Error::InvalidConfig(
            "kernel weights vanish; increase w0 or eta0".into(),
        ));
    }
    for w in &mut weights {
        w.0 = w.0 / total;
    }
    let floor = T::of(1e-6) * b_init;
    let factor = (T::of(2.0) * a0 + T::one()) / a0;
    let mut b = b_init;
    for _ in 0..iters {
        let s: T = weights.iter().map(|&(w, r2)| w / (T::of(2.0) * b + r2)).sum();
        let next = (T::one() / (factor * s)).max(floor);
        let change = ((next - b) / b).abs();
        b = next;
        if change < T::of(REFINE_RTOL) || b <= floor {
            break;
        }
    }
    Ok(b)
}
