//! Local linear surrogates: LIME, its unregularized limit and BayLIME.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::linalg::{cholesky_solve, min_norm_solve};
use crate::error::{Error, Result};
use crate::model::ModelHandle;
use crate::scalar::{mean, Scalar};

/// Coordinate-descent sweeps before the lasso fit gives up refining.
const MAX_SWEEPS: usize = 10_000;
const CD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LimeConfig<T> {
    /// Number of perturbed points `N_s`.
    pub n_samples: usize,
    /// Standard deviation of the isotropic Gaussian cloud around `x^t`.
    pub sampling_std: T,
    /// Lasso strength on the `1/(2 N_s)`-scaled squared loss. Zero means
    /// ordinary least squares.
    pub l1_strength: T,
    pub seed: u64,
}

impl<T: Scalar> Default for LimeConfig<T> {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            sampling_std: T::of(0.3),
            l1_strength: T::zero(),
            seed: 0,
        }
    }
}

impl<T: Scalar> LimeConfig<T> {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.n_samples < m + 1 {
            return Err(Error::InvalidConfig(format!(
                "LIME needs at least {} samples for {m} variables, got {}",
                m + 1,
                self.n_samples
            )));
        }
        if !(self.sampling_std > T::zero()) || !self.sampling_std.is_finite() {
            return Err(Error::InvalidConfig("LIME sampling_std must be positive".into()));
        }
        if !(self.l1_strength >= T::zero()) || !self.l1_strength.is_finite() {
            return Err(Error::InvalidConfig("LIME l1_strength must be non-negative".into()));
        }
        Ok(())
    }
}

/// A fitted surrogate `F(x) ~ intercept + coefficients . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeFit<T> {
    pub coefficients: Vec<T>,
    /// Intercept of the deviation `f(x) - y^t`.
    pub intercept: T,
    /// The normal equations were singular; `coefficients` is the
    /// minimum-norm solution.
    pub rank_deficient: bool,
}

/// Perturbed inputs and their model outputs, column-centred.
struct Design<T> {
    /// `N_s x M`, centred per column.
    x: Vec<Vec<T>>,
    x_mean: Vec<T>,
    /// `f(x_n) - mean f`.
    z: Vec<T>,
    f_mean: T,
}

fn sample_design<T: Scalar>(model: &ModelHandle<T>, x_t: &[T], cfg: &LimeConfig<T>) -> Result<Design<T>> {
    let m = model.dimension();
    if x_t.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x_t.len(),
        });
    }
    cfg.validate(m)?;
    let normal = Normal::new(0.0, cfg.sampling_std.to_f64_lossy()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Vec<T>> = (0..cfg.n_samples)
        .map(|_| x_t.iter().map(|&v| v + T::of(normal.sample(&mut rng))).collect())
        .collect();
    let f = model.evaluate_batch(&points)?;
    if let Some(n) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { sample: n });
    }
    let f_mean = mean(&f);
    let x_mean: Vec<T> = (0..m)
        .map(|j| points.iter().map(|p| p[j]).sum::<T>() / T::of(points.len() as f64))
        .collect();
    let x: Vec<Vec<T>> = points
        .iter()
        .map(|p| p.iter().zip(&x_mean).map(|(&a, &b)| a - b).collect())
        .collect();
    for j in 0..m {
        if x.iter().all(|row| row[j] == T::zero()) {
            return Err(Error::Degenerate(format!(
                "perturbed samples are identical in variable {j}"
            )));
        }
    }
    let z = f.iter().map(|&v| v - f_mean).collect();
    Ok(Design { x, x_mean, z, f_mean })
}

fn gram<T: Scalar>(d: &Design<T>) -> (Vec<Vec<T>>, Vec<T>) {
    let m = d.x_mean.len();
    let mut a = vec![vec![T::zero(); m]; m];
    let mut b = vec![T::zero(); m];
    for (row, &z) in d.x.iter().zip(&d.z) {
        for i in 0..m {
            b[i] = b[i] + row[i] * z;
            for j in 0..=i {
                a[i][j] = a[i][j] + row[i] * row[j];
            }
        }
    }
    for i in 1..m {
        let (upper, lower) = a.split_at_mut(i);
        for (j, row) in upper.iter_mut().enumerate() {
            row[i] = lower[0][j];
        }
    }
    (a, b)
}

fn least_squares<T: Scalar>(d: &Design<T>) -> (Vec<T>, bool) {
    let (a, b) = gram(d);
    match cholesky_solve(&a, &b) {
        Some(beta) => (beta, false),
        None => (min_norm_solve(&a, &b), true),
    }
}

/// Cyclic coordinate descent on `1/(2N) |z - X beta|^2 + l1 |beta|_1`.
fn lasso<T: Scalar>(d: &Design<T>, l1: T) -> Vec<T> {
    let m = d.x_mean.len();
    let n = T::of(d.z.len() as f64);
    let col_sq: Vec<T> = (0..m).map(|j| d.x.iter().map(|r| r[j] * r[j]).sum::<T>() / n).collect();
    let mut beta = vec![T::zero(); m];
    let mut resid = d.z.clone();
    let scale =
        d.z.iter()
            .fold(T::zero(), |a, v| a.max(v.abs()))
            .max(T::min_positive_value());
    for _ in 0..MAX_SWEEPS {
        let mut biggest = T::zero();
        for j in 0..m {
            let rho = d.x.iter().zip(&resid).map(|(r, &e)| r[j] * e).sum::<T>() / n + col_sq[j] * beta[j];
            let next = if rho > l1 {
                (rho - l1) / col_sq[j]
            } else if rho < -l1 {
                (rho + l1) / col_sq[j]
            } else {
                T::zero()
            };
            let change = next - beta[j];
            if change != T::zero() {
                for (e, r) in resid.iter_mut().zip(&d.x) {
                    *e = *e - change * r[j];
                }
                beta[j] = next;
                biggest = biggest.max((change * col_sq[j].sqrt()).abs());
            }
        }
        if biggest <= T::of(CD_TOL) * scale {
            break;
        }
    }
    beta
}

fn intercept<T: Scalar>(d: &Design<T>, beta: &[T], y_t: T) -> T {
    d.f_mean - y_t - beta.iter().zip(&d.x_mean).map(|(&b, &m)| b * m).sum::<T>()
}

/// Fits the local surrogate of `F(x) = f(x) - y^t` around `x^t`.
///
/// Slopes are fitted on centred outputs, so they never see `y^t`: the
/// coefficients are bit-identical for every `y^t` under a fixed seed.
pub fn lime_fit<T: Scalar>(model: &ModelHandle<T>, x_t: &[T], y_t: T, cfg: &LimeConfig<T>) -> Result<LimeFit<T>> {
    let d = sample_design(model, x_t, cfg)?;
    let (coefficients, rank_deficient) = if cfg.l1_strength > T::zero() {
        (lasso(&d, cfg.l1_strength), false)
    } else {
        least_squares(&d)
    };
    Ok(LimeFit {
        intercept: intercept(&d, &coefficients, y_t),
        coefficients,
        rank_deficient,
    })
}

/// LIME attribution scores: the surrogate's slopes.
pub fn lime<T: Scalar>(model: &ModelHandle<T>, x_t: &[T], y_t: T, cfg: &LimeConfig<T>) -> Result<Vec<T>> {
    lime_fit(model, x_t, y_t, cfg).map(|f| f.coefficients)
}

/// Unregularized LIME, a local estimate of the gradient of `f`. The
/// intercept is that of `f` itself.
pub fn lime0<T: Scalar>(model: &ModelHandle<T>, x_t: &[T], cfg: &LimeConfig<T>) -> Result<LimeFit<T>> {
    let cfg = LimeConfig {
        l1_strength: T::zero(),
        ..cfg.clone()
    };
    lime_fit(model, x_t, T::zero(), &cfg)
}

/// Gaussian posterior over the surrogate slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct BayLimeResult<T> {
    pub mean: Vec<T>,
    /// Reported per-variable variance `1 / (eta + lambda N_s)`.
    pub variance: Vec<T>,
}

/// BayLIME: ridge slopes with prior precision `prior_eta` and noise
/// precision `noise_lambda`. The reported variance is the isotropic
/// `1 / (prior_eta + noise_lambda N_s)`, identical for every variable.
pub fn baylime_distributions<T: Scalar>(
    model: &ModelHandle<T>,
    x_t: &[T],
    y_t: T,
    cfg: &LimeConfig<T>,
    prior_eta: T,
    noise_lambda: T,
) -> Result<BayLimeResult<T>> {
    // y_t only shifts the intercept, which BayLIME does not report
    let _ = y_t;
    if !(prior_eta > T::zero()) || !(noise_lambda > T::zero()) {
        return Err(Error::InvalidConfig("BayLIME precisions must be positive".into()));
    }
    let d = sample_design(model, x_t, cfg)?;
    let m = x_t.len();
    let (mut a, mut b) = gram(&d);
    for (i, row) in a.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v = *v * noise_lambda;
        }
        row[i] = row[i] + prior_eta;
        b[i] = b[i] * noise_lambda;
    }
    let mean = cholesky_solve(&a, &b).unwrap_or_else(|| min_norm_solve(&a, &b));
    let var = T::one() / (prior_eta + noise_lambda * T::of(cfg.n_samples as f64));
    Ok(BayLimeResult {
        mean,
        variance: vec![var; m],
    })
}
