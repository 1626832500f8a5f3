use std::fmt;
use std::str::FromStr;

use super::Model;
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    Sinusoidal2d,
    Linear,
    Quadratic,
}

/// Textual description of a built-in model, e.g. `sinusoidal2d`,
/// `linear:3,-1` or `quadratic:1,0,2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinModelSpec {
    pub kind: BuiltinKind,
    pub coefficients: Vec<f64>,
}

impl BuiltinModelSpec {
    pub fn build<T: Scalar>(&self) -> Result<Builtin<T>> {
        let coef = || self.coefficients.iter().map(|&c| T::of(c)).collect::<Vec<T>>();
        match self.kind {
            BuiltinKind::Sinusoidal2d => {
                if !self.coefficients.is_empty() {
                    return Err(Error::InvalidConfig("sinusoidal2d takes no coefficients".into()));
                }
                Ok(Builtin::Sinusoidal2d)
            }
            BuiltinKind::Linear | BuiltinKind::Quadratic if self.coefficients.is_empty() => Err(Error::InvalidConfig(
                "linear/quadratic models need at least one coefficient".into(),
            )),
            BuiltinKind::Linear => Ok(Builtin::linear(coef())),
            BuiltinKind::Quadratic => Ok(Builtin::diagonal_quadratic(coef())),
        }
    }
}

impl FromStr for BuiltinModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let kind = match name.trim() {
            "sinusoidal2d" => BuiltinKind::Sinusoidal2d,
            "linear" => BuiltinKind::Linear,
            "quadratic" => BuiltinKind::Quadratic,
            other => return Err(Error::InvalidConfig(format!("unknown builtin model `{other}`"))),
        };
        let coefficients = match rest {
            None => Vec::new(),
            Some(r) => r
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad coefficient `{c}` in `{s}`")))
                })
                .collect::<Result<_>>()?,
        };
        Ok(Self { kind, coefficients })
    }
}

impl fmt::Display for BuiltinModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            BuiltinKind::Sinusoidal2d => "sinusoidal2d",
            BuiltinKind::Linear => "linear",
            BuiltinKind::Quadratic => "quadratic",
        };
        f.write_str(name)?;
        if !self.coefficients.is_empty() {
            let parts: Vec<String> = self.coefficients.iter().map(|c| c.to_string()).collect();
            write!(f, ":{}", parts.join(","))?;
        }
        Ok(())
    }
}

/// Closed-form test models.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin<T> {
    /// `f(x) = 2 cos(pi x1) cos(pi x2)`.
    Sinusoidal2d,
    /// `f(x) = c . x + intercept`.
    Linear { coefficients: Vec<T>, intercept: T },
    /// `f(x) = b . x + x^T A x`.
    Quadratic { linear: Vec<T>, matrix: Vec<Vec<T>> },
}

impl<T: Scalar> Builtin<T> {
    pub fn linear(coefficients: Vec<T>) -> Self {
        Builtin::Linear {
            coefficients,
            intercept: T::zero(),
        }
    }

    /// `f(x) = sum_i c_i x_i^2`.
    pub fn diagonal_quadratic(c: Vec<T>) -> Self {
        let m = c.len();
        let mut matrix = vec![vec![T::zero(); m]; m];
        for (i, ci) in c.into_iter().enumerate() {
            matrix[i][i] = ci;
        }
        Builtin::Quadratic {
            linear: vec![T::zero(); m],
            matrix,
        }
    }
}

impl<T: Scalar> Model<T> for Builtin<T> {
    fn dimension(&self) -> usize {
        match self {
            Builtin::Sinusoidal2d => 2,
            Builtin::Linear { coefficients, .. } => coefficients.len(),
            Builtin::Quadratic { linear, .. } => linear.len(),
        }
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        Ok(match self {
            Builtin::Sinusoidal2d => {
                let pi = T::PI();
                T::of(2.0) * (pi * x[0]).cos() * (pi * x[1]).cos()
            }
            Builtin::Linear {
                coefficients,
                intercept,
            } => dot(coefficients, x) + *intercept,
            Builtin::Quadratic { linear, matrix } => {
                let quad: T = matrix.iter().zip(x).map(|(row, &xi)| xi * dot(row, x)).sum();
                dot(linear, x) + quad
            }
        })
    }
}

/// Wraps a closure as a model.
pub struct FnModel<F> {
    dimension: usize,
    f: F,
}

impl<F> FnModel<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<T, F> Model<T> for FnModel<F>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Send + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        Ok((self.f)(x))
    }
}
