//! Comparison attribution methods, all explaining the deviation
//! `F(x, y) = f(x) - y`.
//!
//! Every method here is deviation-agnostic: `y` only shifts an intercept or
//! cancels inside a difference, and the implementations cancel it
//! symbolically so scores are bit-identical for any `y`.

mod ig;
mod lc;
mod lime;
mod linalg;
mod shapley;
mod zscore;

pub use ig::{expected_integrated_gradient, integrated_gradient, IgConfig};
pub use lc::{lc, LcConfig, LcResult};
pub use lime::{baylime_distributions, lime, lime0, lime_fit, BayLimeResult, LimeConfig, LimeFit};
pub use shapley::{shapley_exact, shapley_permutation, shapley_sampled, EXACT_BUDGET};
pub use zscore::z_score;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{GradientEstimatorConfig, ModelHandle};
use crate::scalar::Scalar;

/// Samples standing in for the input distribution `P(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet<T> {
    pub samples: Vec<Vec<T>>,
    /// Non-negative, summing to one. `None` means uniform.
    pub weights: Option<Vec<T>>,
}

impl<T: Scalar> ReferenceSet<T> {
    pub fn uniform(samples: Vec<Vec<T>>) -> Self {
        Self { samples, weights: None }
    }

    pub fn weighted(samples: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        if weights.len() != samples.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::InvalidConfig("reference weights must be non-negative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::of(1e-9) {
            return Err(Error::InvalidConfig(format!("reference weights sum to {total}, not 1")));
        }
        Ok(Self {
            samples,
            weights: Some(weights),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn weight(&self, i: usize) -> T {
        match &self.weights {
            Some(w) => w[i],
            None => T::one() / T::of(self.samples.len() as f64),
        }
    }

    /// Checks non-emptiness and that every sample has length `m`.
    pub fn check(&self, m: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyReference);
        }
        for s in &self.samples {
            if s.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: s.len(),
                });
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> Vec<T> {
        let m = self.samples.first().map_or(0, Vec::len);
        (0..m)
            .map(|j| {
                self.samples
                    .iter()
                    .enumerate()
                    .map(|(i, s)| self.weight(i) * s[j])
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineMethod {
    Lc,
    Lime,
    Lime0,
    BayLime,
    Ig,
    Eig,
    Sv,
    ZScore,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 8] = [
        BaselineMethod::Lc,
        BaselineMethod::Lime,
        BaselineMethod::Lime0,
        BaselineMethod::BayLime,
        BaselineMethod::Ig,
        BaselineMethod::Eig,
        BaselineMethod::Sv,
        BaselineMethod::ZScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Lc => "lc",
            BaselineMethod::Lime => "lime",
            BaselineMethod::Lime0 => "lime0",
            BaselineMethod::BayLime => "baylime",
            BaselineMethod::Ig => "ig",
            BaselineMethod::Eig => "eig",
            BaselineMethod::Sv => "sv",
            BaselineMethod::ZScore => "zscore",
        }
    }

    /// Whether the scores can depend on the observed output `y^t`.
    pub fn uses_deviation(self) -> bool {
        self == BaselineMethod::Lc
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Everything the baselines need besides the test point.
#[derive(Debug, Clone)]
pub struct BaselineSettings<T> {
    pub lime: LimeConfig<T>,
    /// l1 strength for `lime`; `lime0` always uses zero.
    pub lime_l1: T,
    pub baylime_prior_eta: T,
    pub baylime_noise_lambda: T,
    /// IG baseline input `x0`.
    pub ig_baseline: Option<Vec<T>>,
    pub n_intervals: usize,
    /// Stand-in for the input distribution, used by EIG, SV and Z-score.
    pub reference: Option<ReferenceSet<T>>,
    pub sv_configs: usize,
    pub sv_seed: u64,
    pub lc: LcConfig<T>,
    pub gradient: GradientEstimatorConfig<T>,
    pub variable_names: Vec<String>,
}

impl<T: Scalar> Default for BaselineSettings<T> {
    fn default() -> Self {
        Self {
            lime: LimeConfig::default(),
            lime_l1: T::zero(),
            baylime_prior_eta: T::of(0.1),
            baylime_noise_lambda: T::one(),
            ig_baseline: None,
            n_intervals: 100,
            reference: None,
            sv_configs: 100,
            sv_seed: 0,
            lc: LcConfig::default(),
            gradient: GradientEstimatorConfig::default(),
            variable_names: Vec::new(),
        }
    }
}

impl<T: Scalar> BaselineSettings<T> {
    /// Names the missing input, if any, that `method` needs.
    pub fn missing_input(&self, method: BaselineMethod) -> Option<&'static str> {
        match method {
            BaselineMethod::Ig if self.ig_baseline.is_none() => Some("a baseline input"),
            BaselineMethod::Eig | BaselineMethod::Sv | BaselineMethod::ZScore if self.reference.is_none() => {
                Some("a reference set")
            }
            _ => None,
        }
    }

    fn reference(&self, method: BaselineMethod) -> Result<&ReferenceSet<T>> {
        self.reference
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{method} needs a reference set")))
    }
}

/// Attribution scores of one baseline at `(x^t, y^t)`. For BayLIME these
/// are the posterior means.
pub fn run_baseline<T: Scalar>(
    method: BaselineMethod,
    model: &ModelHandle<T>,
    x_t: &[T],
    y_t: T,
    settings: &BaselineSettings<T>,
) -> Result<Vec<T>> {
    match method {
        BaselineMethod::Lc => lc(model, x_t, y_t, &settings.lc, &settings.gradient).map(|r| r.delta),
        BaselineMethod::Lime => {
            let cfg = LimeConfig {
                l1_strength: settings.lime_l1,
                ..settings.lime.clone()
            };
            lime(model, x_t, y_t, &cfg)
        }
        BaselineMethod::Lime0 => lime0(model, x_t, &settings.lime).map(|f| f.coefficients),
        BaselineMethod::BayLime => baylime_distributions(
            model,
            x_t,
            y_t,
            &settings.lime,
            settings.baylime_prior_eta,
            settings.baylime_noise_lambda,
        )
        .map(|r| r.mean),
        BaselineMethod::Ig => {
            let baseline = settings
                .ig_baseline
                .clone()
                .ok_or_else(|| Error::InvalidConfig("ig needs a baseline input".into()))?;
            let cfg = IgConfig {
                baseline,
                n_intervals: settings.n_intervals,
            };
            integrated_gradient(model, x_t, &cfg, &settings.gradient)
        }
        BaselineMethod::Eig => expected_integrated_gradient(
            model,
            x_t,
            settings.reference(method)?,
            settings.n_intervals,
            &settings.gradient,
        ),
        BaselineMethod::Sv => shapley_sampled(
            model,
            x_t,
            settings.reference(method)?,
            settings.sv_configs,
            settings.sv_seed,
        ),
        BaselineMethod::ZScore => z_score(x_t, settings.reference(method)?, &settings.variable_names),
    }
}
