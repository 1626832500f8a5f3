//! Likelihood compensation: the perturbation minimizing
//! `eta/2 |delta|^2 + lambda/2 (y^t - f(x^t + delta))^2 + eta nu |delta|_1`.

use crate::error::{Error, Result};
use crate::gpa::prox::{proximal_descent, Loss, ProxSettings};
use crate::io::TestSet;
use crate::model::{GradientEstimatorConfig, ModelHandle};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LcConfig<T> {
    pub eta: T,
    pub nu: T,
    /// Noise precision of the Gaussian loss.
    pub lambda: T,
    pub kappa: T,
    pub max_iter: usize,
    pub tol: T,
    pub seed: u64,
}

impl<T: Scalar> Default for LcConfig<T> {
    fn default() -> Self {
        Self {
            eta: T::of(0.1),
            nu: T::of(0.5),
            lambda: T::one(),
            kappa: T::of(0.01),
            max_iter: 10_000,
            tol: T::of(1e-6),
            seed: 0,
        }
    }
}

impl<T: Scalar> LcConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !(pos(self.eta) && pos(self.lambda) && pos(self.kappa) && pos(self.tol)) {
            return Err(Error::InvalidConfig(
                "LC eta, lambda, kappa and tol must be positive".into(),
            ));
        }
        if !(self.nu > T::zero() && self.nu <= T::one()) {
            return Err(Error::InvalidConfig("LC nu must lie in (0, 1]".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("LC max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcResult<T> {
    pub delta: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Same proximal iteration and safeguards as the GPA MAP estimate, with
/// the Gaussian loss in place of the marginalized one.
pub fn lc<T: Scalar>(
    model: &ModelHandle<T>,
    x_t: &[T],
    y_t: T,
    cfg: &LcConfig<T>,
    grad_cfg: &GradientEstimatorConfig<T>,
) -> Result<LcResult<T>> {
    cfg.validate()?;
    grad_cfg.validate()?;
    let m = model.dimension();
    if x_t.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x_t.len(),
        });
    }
    let ts = TestSet::single(x_t.to_vec(), y_t);
    let settings = ProxSettings {
        eta: cfg.eta,
        nu: cfg.nu,
        kappa: cfg.kappa,
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        seed: cfg.seed,
    };
    let out = proximal_descent(&ts, model, &Loss::Gaussian { lambda: cfg.lambda }, &settings, grad_cfg)?;
    Ok(LcResult {
        delta: out.delta,
        iterations: out.iterations,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Builtin;

    fn sharp() -> LcConfig<f64> {
        LcConfig {
            eta: 1e-3,
            nu: 1e-3,
            ..LcConfig::default()
        }
    }

    fn grad() -> GradientEstimatorConfig<f64> {
        GradientEstimatorConfig::new(1e-4, 10, 7)
    }

    #[test]
    fn sinusoid_points_match_closed_form() {
        let model = ModelHandle::new(Builtin::Sinusoidal2d);
        for y in [1.0f64, 0.0, -1.0] {
            let want = (y / 2.0).acos() / std::f64::consts::PI - 0.5;
            let r = lc(&model, &[0.5, 0.0], y, &sharp(), &grad()).unwrap();
            assert!(r.converged);
            assert!((r.delta[0] - want).abs() < 1e-3, "y={y}: {:?}", r.delta);
            assert!(r.delta[1].abs() < 1e-3);
        }
    }

    #[test]
    fn consistent_observation_needs_no_perturbation() {
        let model = ModelHandle::new(Builtin::Sinusoidal2d);
        let x = [0.3, -0.2];
        let y = model.evaluate(&x).unwrap();
        let r = lc(&model, &x, y, &sharp(), &grad()).unwrap();
        assert!(r.delta.iter().all(|d| d.abs() < 1e-3), "{:?}", r.delta);
    }

    #[test]
    fn linear_scalar_closed_form() {
        let model = ModelHandle::new(Builtin::linear(vec![2.0]));
        let cfg = LcConfig {
            eta: 1e-6,
            nu: 1e-3,
            kappa: 0.1,
            tol: 1e-10,
            ..LcConfig::default()
        };
        let r = lc(&model, &[1.0], 5.0, &cfg, &grad()).unwrap();
        // y = c (x + delta)  =>  delta = (5 - 2) / 2
        assert!((r.delta[0] - 1.5).abs() < 1e-4, "{:?}", r.delta);
    }

    #[test]
    fn rejects_bad_config() {
        let model = ModelHandle::new(Builtin::Sinusoidal2d);
        let cfg = LcConfig { lambda: 0.0, ..sharp() };
        assert!(matches!(
            lc(&model, &[0.5, 0.0], 1.0, &cfg, &grad()),
            Err(Error::InvalidConfig(_))
        ));
    }
}
