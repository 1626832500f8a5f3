//! Closed-form attributions for `f(x1, x2) = 2 cos(pi x1) cos(pi x2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub fn sinusoid(x: [f64; 2]) -> f64 {
    2.0 * (PI * x[0]).cos() * (PI * x[1]).cos()
}

/// Gradient of the sinusoid, the small-cloud limit of LIME.
pub fn oracle_lime0(x: [f64; 2]) -> [f64; 2] {
    let (s1, c1) = (PI * x[0]).sin_cos();
    let (s2, c2) = (PI * x[1]).sin_cos();
    [-2.0 * PI * s1 * c2, -2.0 * PI * c1 * s2]
}

/// GPA (and LC) MAP perturbation in the sharp-prior limit:
/// `((1/pi) arccos(y/2) - x1, 0)`. Defined for `x2 = 0`, `x1 > 0`, `|y| < 2`.
pub fn oracle_gpa(x: [f64; 2], y: f64) -> Result<[f64; 2]> {
    if x[1] != 0.0 {
        return Err(Error::Domain(format!("x2 must be 0, got {}", x[1])));
    }
    if !(x[0] > 0.0) {
        return Err(Error::Domain(format!("x1 must be positive, got {}", x[0])));
    }
    if !(y.abs() < 2.0) {
        return Err(Error::Domain(format!("|y| must be below 2, got {y}")));
    }
    Ok([(y / 2.0).acos() / PI - x[0], 0.0])
}

/// Integrated gradients from `x0` to `x` in closed form. Undefined when the
/// path is parallel to a diagonal (`d1 = +-d2`); use numeric quadrature there.
pub fn oracle_ig(x: [f64; 2], x0: [f64; 2]) -> Result<[f64; 2]> {
    let d = [x[0] - x0[0], x[1] - x0[1]];
    let sum = d[0] + d[1];
    let diff = d[0] - d[1];
    if sum == 0.0 || diff == 0.0 {
        return Err(Error::Domain(format!(
            "path increment ({}, {}) has d1 = +-d2; use numeric quadrature instead",
            d[0], d[1]
        )));
    }
    let g = |p: [f64; 2]| (PI * (p[0] + p[1])).cos() / sum;
    let h = |p: [f64; 2]| (PI * (p[0] - p[1])).cos() / diff;
    let dg = g(x) - g(x0);
    let dh = h(x) - h(x0);
    Ok([d[0] * (dg + dh), d[1] * (dg - dh)])
}

/// Shapley values under a uniform reference over whole periods: the output
/// is split evenly.
pub fn oracle_sv(x: [f64; 2]) -> [f64; 2] {
    let half = sinusoid(x) / 2.0;
    [half, half]
}
