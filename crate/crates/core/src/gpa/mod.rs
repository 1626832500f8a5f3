//! Generative perturbation analysis.
//!
//! The attribution for a set of anomalous samples is a perturbation `delta`
//! that would bring the model's predictions back in line with the observed
//! outputs. Its MAP value is found by proximal gradient descent on
//!
//! ```text
//! J(delta) = eta/2 |delta|^2 + sum_t (a0 + 1/2) ln(1 + (y_t - f(x_t + delta))^2 / (2 b_t))
//! ```
//!
//! plus an `eta * nu * |delta|_1` term handled by soft-thresholding. The
//! per-variable score distributions are one-dimensional slices of the
//! posterior through the MAP point.

mod distribution;
mod gamma;
pub(crate) mod prox;

pub use distribution::{delta_max, score_distributions, symmetric_grid, ScoreDistribution};
pub use gamma::{init_gamma_rate, refine_gamma_rate, residuals, select_gamma_shape, Kernel};

use crate::error::{Error, Result};
use crate::io::TestSet;
use crate::model::{GradientEstimatorConfig, ModelHandle};
use crate::scalar::Scalar;
pub(crate) use prox::shifted;
#[cfg(test)]
use prox::DIVERGENCE_STREAK;
use prox::{proximal_descent, smooth_objective, Loss, ProxSettings};

/// How the gamma-prior rate `b(x^t)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMode<T> {
    /// A fixed `b0` shared by every sample.
    Constant(T),
    /// `a0 * sigma_yf^2 / c_b` shared by every sample.
    Estimated,
    /// Starts from the estimated rate and refines it per sample with the
    /// kernel-weighted fixed point. Needs at least two samples.
    LocalKernel { iters: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpaHyperParams<T> {
    /// l2 strength.
    pub eta: T,
    /// l1 strength relative to `eta`, in (0, 1].
    pub nu: T,
    /// Learning rate.
    pub kappa: T,
    /// Gamma prior shape.
    pub a0: T,
    pub b_mode: RateMode<T>,
    /// Virtual-sample correction for the estimated rate.
    pub c_b: T,
    pub kernel: Kernel<T>,
    pub max_iter: usize,
    /// Convergence threshold on the infinity norm of the step.
    pub tol: T,
    pub grid_points: usize,
    pub delta_max_factor: T,
    /// Seed for the random initialization of `delta`.
    pub seed: u64,
}

impl<T: Scalar> GpaHyperParams<T> {
    /// Defaults scaled by the number of test samples: `kappa = 0.1/N`,
    /// `eta = 0.1 N`, `nu = 0.5`, `2 a0 = 11`, `c_b = 10`.
    pub fn for_test_size(n_test: usize) -> Self {
        let n = T::of(n_test.max(1) as f64);
        Self {
            eta: T::of(0.1) * n,
            nu: T::of(0.5),
            kappa: T::of(0.1) / n,
            a0: T::of(5.5),
            b_mode: RateMode::Estimated,
            c_b: T::of(10.0),
            kernel: Kernel::default(),
            max_iter: 10_000,
            tol: T::of(1e-6),
            grid_points: 100,
            delta_max_factor: T::of(1.1),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.nu > T::zero() && self.nu <= T::one()) {
            return bad("nu must lie in (0, 1]");
        }
        if !pos(self.eta) {
            return bad("eta must be positive");
        }
        if !pos(self.kappa) {
            return bad("kappa must be positive");
        }
        if !pos(self.a0) {
            return bad("a0 must be positive");
        }
        if !pos(self.c_b) {
            return bad("c_b must be positive");
        }
        if !pos(self.tol) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if self.grid_points < 3 {
            return bad("grid_points must be at least 3");
        }
        if !pos(self.delta_max_factor) {
            return bad("delta_max_factor must be positive");
        }
        if let RateMode::Constant(b) = self.b_mode {
            if !pos(b) {
                return bad("constant b0 must be positive");
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for GpaHyperParams<T> {
    fn default() -> Self {
        Self::for_test_size(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionResult<T> {
    /// MAP perturbation in standardized units.
    pub delta_star: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective `J + eta nu |delta|_1` after every accepted step,
    /// starting with the initial point.
    pub objective_trace: Vec<T>,
    pub query_count: u64,
    /// Gamma rate used for each test sample.
    pub rates: Vec<T>,
    /// Pre-threshold vector of the last step, taken with the nominal `kappa`.
    pub last_g: Vec<T>,
    pub gradient_redraws: u64,
}

/// Elementwise `sign(g) max(0, |g| - threshold)`.
pub fn soft_threshold<T: Scalar>(g: &[T], threshold: T) -> Vec<T> {
    g.iter()
        .map(|&v| {
            let shrunk = v.abs() - threshold;
            if shrunk > T::zero() {
                shrunk.copysign(v)
            } else {
                T::zero()
            }
        })
        .collect()
}

pub(crate) fn check_inputs<T: Scalar>(testset: &TestSet<T>, model: &ModelHandle<T>) -> Result<()> {
    if testset.is_empty() {
        return Err(Error::InvalidConfig("test set is empty".into()));
    }
    if testset.dimension() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: testset.dimension(),
        });
    }
    Ok(())
}

/// Resolves `b(x^t)` for every sample according to `hp.b_mode`.
pub fn resolve_rates<T: Scalar>(
    testset: &TestSet<T>,
    model: &ModelHandle<T>,
    hp: &GpaHyperParams<T>,
) -> Result<Vec<T>> {
    match hp.b_mode {
        RateMode::Constant(b) => Ok(vec![b; testset.len()]),
        RateMode::Estimated => {
            let b = init_gamma_rate(testset, model, hp.a0, hp.c_b)?;
            Ok(vec![b; testset.len()])
        }
        RateMode::LocalKernel { iters } => {
            let b0 = init_gamma_rate(testset, model, hp.a0, hp.c_b)?;
            (0..testset.len())
                .map(|t| refine_gamma_rate(testset, model, hp.a0, b0, t, &hp.kernel, iters))
                .collect()
        }
    }
}

/// The smooth part of the objective (no l1 term), summed over all test samples.
pub fn objective<T: Scalar>(
    delta: &[T],
    testset: &TestSet<T>,
    model: &ModelHandle<T>,
    hp: &GpaHyperParams<T>,
) -> Result<T> {
    check_inputs(testset, model)?;
    if delta.len() != testset.dimension() {
        return Err(Error::DimensionMismatch {
            expected: testset.dimension(),
            got: delta.len(),
        });
    }
    let rates = resolve_rates(testset, model, hp)?;
    if let Some(t) = rates.iter().position(|&b| !(b > T::zero())) {
        return Err(Error::InvalidConfig(format!(
            "gamma rate for sample {t} must be positive"
        )));
    }
    let loss = Loss::StudentT {
        a0: hp.a0,
        rates: &rates,
    };
    smooth_objective(delta, testset, model, hp.eta, &loss)
}

/// MAP perturbation by proximal gradient descent.
///
/// Each round accumulates `sum_t grad f(x_t + delta) r_t / (2 b_t + r_t^2)`,
/// takes `g = (1 - kappa eta) delta + kappa (2 a0 + 1) acc` and soft-thresholds
/// it at `kappa eta nu`. A step that increases the penalized objective is
/// retried with `kappa` halved.
pub fn map_estimate<T: Scalar>(
    testset: &TestSet<T>,
    model: &ModelHandle<T>,
    hp: &GpaHyperParams<T>,
    grad_cfg: &GradientEstimatorConfig<T>,
) -> Result<AttributionResult<T>> {
    hp.validate()?;
    grad_cfg.validate()?;
    check_inputs(testset, model)?;
    let start_queries = model.query_count();
    let rates = resolve_rates(testset, model, hp)?;
    if let Some(t) = rates.iter().position(|&b| !(b > T::zero())) {
        return Err(Error::InvalidConfig(format!(
            "gamma rate for sample {t} must be positive"
        )));
    }
    let loss = Loss::StudentT {
        a0: hp.a0,
        rates: &rates,
    };
    let settings = ProxSettings {
        eta: hp.eta,
        nu: hp.nu,
        kappa: hp.kappa,
        max_iter: hp.max_iter,
        tol: hp.tol,
        seed: hp.seed,
    };
    let out = proximal_descent(testset, model, &loss, &settings, grad_cfg)?;
    Ok(AttributionResult {
        delta_star: out.delta,
        iterations: out.iterations,
        converged: out.converged,
        objective_trace: out.trace,
        query_count: model.query_count() - start_queries,
        rates,
        last_g: out.last_g,
        gradient_redraws: out.redraws,
    })
}
