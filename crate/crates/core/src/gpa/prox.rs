//! Proximal gradient descent on `eta/2 |d|^2 + data(d) + eta nu |d|_1` with
//! a black-box data term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::soft_threshold;
use crate::error::{Error, Result};
use crate::io::TestSet;
use crate::model::{estimate_gradient_full, GradientEstimatorConfig, ModelHandle};
use crate::scalar::{norm_inf_diff, norm_l1, norm_sq, Scalar};

/// Initial `delta` is drawn uniformly from `[-INIT_SCALE, INIT_SCALE]^M`.
const INIT_SCALE: f64 = 1e-3;
/// Step-halving retries before a step is accepted despite increasing the objective.
const MAX_HALVINGS: usize = 20;
/// Consecutive objective increases tolerated before giving up.
pub(crate) const DIVERGENCE_STREAK: usize = 10;

/// Residual loss summed over test samples.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Loss<'a, T> {
    /// `(a0 + 1/2) ln(1 + r^2 / (2 b_t))` per sample.
    StudentT { a0: T, rates: &'a [T] },
    /// `lambda/2 r^2` per sample.
    Gaussian { lambda: T },
}

impl<T: Scalar> Loss<'_, T> {
    fn value(&self, t: usize, r: T) -> T {
        match *self {
            Loss::StudentT { a0, rates } => (a0 + T::of(0.5)) * (r * r / (T::of(2.0) * rates[t])).ln_1p(),
            Loss::Gaussian { lambda } => lambda * T::of(0.5) * r * r,
        }
    }

    /// `-d loss / d f` at residual `r`.
    fn pull(&self, t: usize, r: T) -> T {
        match *self {
            Loss::StudentT { a0, rates } => (T::of(2.0) * a0 + T::one()) * r / (T::of(2.0) * rates[t] + r * r),
            Loss::Gaussian { lambda } => lambda * r,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ProxSettings<T> {
    pub eta: T,
    pub nu: T,
    pub kappa: T,
    pub max_iter: usize,
    pub tol: T,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct ProxOutcome<T> {
    pub delta: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<T>,
    pub last_g: Vec<T>,
    pub redraws: u64,
}

pub(crate) fn shifted<T: Scalar>(x: &[T], delta: &[T]) -> Vec<T> {
    x.iter().zip(delta).map(|(&a, &d)| a + d).collect()
}

/// `eta/2 |d|^2 + sum_t loss_t(y_t - f(x_t + d))`.
pub(crate) fn smooth_objective<T: Scalar>(
    delta: &[T],
    testset: &TestSet<T>,
    model: &ModelHandle<T>,
    eta: T,
    loss: &Loss<'_, T>,
) -> Result<T> {
    let mut total = eta * T::of(0.5) * norm_sq(delta);
    for (t, s) in testset.samples.iter().enumerate() {
        let f = model.evaluate(&shifted(&s.x, delta))?;
        if !f.is_finite() {
            return Err(Error::NonFinite { sample: t });
        }
        total = total + loss.value(t, s.y - f);
    }
    Ok(total)
}

/// Each round forms `g = (1 - kappa eta) d + kappa sum_t grad f(x_t + d) pull_t`
/// and soft-thresholds it at `kappa eta nu`. A step that raises the penalized
/// objective is retried with `kappa` halved.
pub(crate) fn proximal_descent<T: Scalar>(
    testset: &TestSet<T>,
    model: &ModelHandle<T>,
    loss: &Loss<'_, T>,
    st: &ProxSettings<T>,
    grad_cfg: &GradientEstimatorConfig<T>,
) -> Result<ProxOutcome<T>> {
    let m = testset.dimension();
    let l1 = st.eta * st.nu;

    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let mut delta: Vec<T> = (0..m)
        .map(|_| T::of(rng.random_range(-INIT_SCALE..=INIT_SCALE)))
        .collect();
    let penalized = |d: &[T]| -> Result<T> { Ok(smooth_objective(d, testset, model, st.eta, loss)? + l1 * norm_l1(d)) };
    let mut current = penalized(&delta)?;
    let mut trace = vec![current];
    let mut streak = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut redraws = 0;
    let mut last_g = vec![T::zero(); m];

    while iterations < st.max_iter {
        iterations += 1;
        let mut acc = vec![T::zero(); m];
        for (t, s) in testset.samples.iter().enumerate() {
            let est = estimate_gradient_full(model, &shifted(&s.x, &delta), grad_cfg)?;
            redraws += est.redraws;
            if !est.value.is_finite() || est.gradient.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite { sample: t });
            }
            let w = loss.pull(t, s.y - est.value);
            for (a, g) in acc.iter_mut().zip(&est.gradient) {
                *a = *a + *g * w;
            }
        }

        let step = |kappa: T| -> (Vec<T>, Vec<T>) {
            let g: Vec<T> = delta
                .iter()
                .zip(&acc)
                .map(|(&d, &a)| (T::one() - kappa * st.eta) * d + kappa * a)
                .collect();
            let next = soft_threshold(&g, kappa * l1);
            (g, next)
        };

        let (g_nominal, nominal) = step(st.kappa);
        last_g = g_nominal;
        let nominal_value = penalized(&nominal)?;
        let slack = T::of(4.0) * T::epsilon() * (T::one() + current.abs());
        let mut accepted = None;
        if nominal_value <= current + slack {
            accepted = Some((nominal.clone(), nominal_value));
        } else {
            let mut kappa = st.kappa;
            for _ in 0..MAX_HALVINGS {
                kappa = kappa * T::of(0.5);
                let (_, cand) = step(kappa);
                let value = penalized(&cand)?;
                if value <= current + slack {
                    accepted = Some((cand, value));
                    break;
                }
            }
        }
        let (next, value) = match accepted {
            Some(a) => {
                streak = 0;
                a
            }
            None => {
                streak += 1;
                if streak >= DIVERGENCE_STREAK {
                    return Err(Error::Divergence(streak));
                }
                (nominal, nominal_value)
            }
        };
        let moved = norm_inf_diff(&next, &delta);
        delta = next;
        current = value;
        trace.push(value);
        if moved < st.tol {
            converged = true;
            break;
        }
    }

    Ok(ProxOutcome {
        delta,
        iterations,
        converged,
        trace,
        last_g,
        redraws,
    })
}
