//! Small dense solves for the local surrogate fits.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
/// Returns `None` when a pivot is not clearly positive.
pub(crate) fn cholesky_solve<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let scale = (0..n).fold(T::zero(), |m, i| m.max(a[i][i].abs()));
    let tiny = scale * T::epsilon() * T::of(1e3 * n as f64);
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: T = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > tiny) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let s: T = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s: T = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

/// Minimum-norm solution of `a x = b` through the SVD pseudo-inverse.
pub(crate) fn min_norm_solve<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j].to_f64_lossy());
    let rhs = nalgebra::DVector::from_iterator(n, b.iter().map(|v| v.to_f64_lossy()));
    let svd = m.svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = max_sv * 1e-10;
    let sol = svd.solve(&rhs, eps).unwrap_or_else(|_| nalgebra::DVector::zeros(n));
    sol.iter().map(|&v| T::of(v)).collect()
}
