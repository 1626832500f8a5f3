//! Black-box model contract, built-in analytic models, external adapters and
//! the smoothed Monte Carlo gradient estimator.

mod builtin;
mod gradient;
mod http;
mod subprocess;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use builtin::{Builtin, BuiltinKind, BuiltinModelSpec, FnModel};
pub use gradient::{estimate_gradient, estimate_gradient_full, GradientEstimate, GradientEstimatorConfig};
pub use http::HttpModel;
pub use subprocess::SubprocessModel;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Query-only access to a regression function `f: R^M -> R`.
///
/// Implementations must be deterministic: the same input always yields the
/// same output.
pub trait Model<T: Scalar>: Send + Sync {
    fn dimension(&self) -> usize;

    fn predict(&self, x: &[T]) -> Result<T>;

    fn predict_batch(&self, xs: &[Vec<T>]) -> Result<Vec<T>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// True when the adapter cannot serve concurrent requests.
    fn serial(&self) -> bool {
        false
    }
}

/// Presents a model to the attribution routines in standardized
/// coordinates: `predict(z)` evaluates the wrapped model at `mean + std * z`.
/// Queries are counted on the wrapped handle as well.
pub struct Standardized<T: Scalar> {
    inner: ModelHandle<T>,
    mean: Vec<T>,
    std: Vec<T>,
}

impl<T: Scalar> Standardized<T> {
    pub fn new(inner: ModelHandle<T>, mean: Vec<T>, std: Vec<T>) -> Result<Self> {
        let m = inner.dimension();
        for len in [mean.len(), std.len()] {
            if len != m {
                return Err(Error::DimensionMismatch { expected: m, got: len });
            }
        }
        Ok(Self { inner, mean, std })
    }

    fn raw(&self, z: &[T]) -> Vec<T> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| m + s * v)
            .collect()
    }
}

impl<T: Scalar> Model<T> for Standardized<T> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn predict(&self, z: &[T]) -> Result<T> {
        self.inner.evaluate(&self.raw(z))
    }

    fn predict_batch(&self, zs: &[Vec<T>]) -> Result<Vec<T>> {
        let raw: Vec<Vec<T>> = zs.iter().map(|z| self.raw(z)).collect();
        self.inner.evaluate_batch(&raw)
    }

    fn serial(&self) -> bool {
        self.inner.serial()
    }
}

/// A model plus a query counter. Every attribution routine talks to the model
/// through this handle.
pub struct ModelHandle<T: Scalar> {
    model: Arc<dyn Model<T>>,
    queries: AtomicU64,
}

impl<T: Scalar> ModelHandle<T> {
    pub fn new<M: Model<T> + 'static>(model: M) -> Self {
        Self::from_arc(Arc::new(model))
    }

    pub fn from_arc(model: Arc<dyn Model<T>>) -> Self {
        Self {
            model,
            queries: AtomicU64::new(0),
        }
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn serial(&self) -> bool {
        self.model.serial()
    }

    /// Evaluates `f(x)`.
    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        self.check_dim(x.len())?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.model.predict(x)
    }

    pub fn evaluate_batch(&self, xs: &[Vec<T>]) -> Result<Vec<T>> {
        for x in xs {
            self.check_dim(x.len())?;
        }
        self.queries.fetch_add(xs.len() as u64, Ordering::Relaxed);
        let ys = self.model.predict_batch(xs)?;
        if ys.len() != xs.len() {
            return Err(Error::Transport(format!(
                "batch of {} inputs returned {} outputs",
                xs.len(),
                ys.len()
            )));
        }
        Ok(ys)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        let expected = self.dimension();
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
        Ok(())
    }
}

impl<T: Scalar> std::fmt::Debug for ModelHandle<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelHandle")
            .field("dimension", &self.dimension())
            .field("queries", &self.query_count())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoidal_values() {
        let m = ModelHandle::new(Builtin::<f64>::Sinusoidal2d);
        assert!(m.evaluate(&[0.5, 0.0]).unwrap().abs() < 1e-15);
        assert_eq!(m.evaluate(&[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(m.query_count(), 2);
    }

    #[test]
    fn linear_value() {
        let m = ModelHandle::new(Builtin::linear(vec![3.0, -1.0]));
        assert_eq!(m.evaluate(&[1.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected_without_counting() {
        let m = ModelHandle::new(Builtin::<f64>::Sinusoidal2d);
        let err = m.evaluate(&[1.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
        assert_eq!(m.query_count(), 0);
    }

    #[test]
    fn batch_counts_by_size() {
        let m = ModelHandle::new(Builtin::linear(vec![1.0]));
        let ys = m.evaluate_batch(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(ys, vec![1.0, 2.0, 3.0]);
        assert_eq!(m.query_count(), 3);
    }

    #[test]
    fn standardized_wrapper_maps_back_to_raw_units() {
        let inner = ModelHandle::new(Builtin::linear(vec![3.0, -1.0]));
        let m = ModelHandle::new(Standardized::new(inner, vec![1.0, 2.0], vec![2.0, 0.5]).unwrap());
        // z = (0, 0) is the raw mean (1, 2)
        assert_eq!(m.evaluate(&[0.0, 0.0]).unwrap(), 1.0);
        // z = (1, 2) is raw (3, 3)
        assert_eq!(m.evaluate_batch(&[vec![1.0, 2.0]]).unwrap(), vec![6.0]);
    }
}
