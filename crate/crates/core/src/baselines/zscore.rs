use super::ReferenceSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(x_i - m_i) / sigma_i` against the reference mean and population
/// standard deviation. `names` labels variables in errors; missing names
/// fall back to `x{i+1}`.
pub fn z_score<T: Scalar>(x_t: &[T], reference: &ReferenceSet<T>, names: &[String]) -> Result<Vec<T>> {
    let m = x_t.len();
    reference.check(m)?;
    if reference.len() < 2 {
        return Err(Error::InvalidConfig(
            "Z-score needs at least two reference samples".into(),
        ));
    }
    let mean = reference.mean();
    (0..m)
        .map(|i| {
            let var: T = reference
                .samples
                .iter()
                .enumerate()
                .map(|(r, s)| {
                    let d = s[i] - mean[i];
                    reference.weight(r) * d * d
                })
                .sum();
            if !(var > T::zero()) {
                return Err(Error::ZeroVariance {
                    index: i,
                    name: names.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1)),
                });
            }
            Ok((x_t[i] - mean[i]) / var.sqrt())
        })
        .collect()
}
