//! Anomaly scores and consistency metrics between attribution vectors.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::TestSet;
use crate::model::ModelHandle;
use crate::scalar::Scalar;

/// Gaussian negative log-likelihood `1/2 ln(2 pi v) + (y - f(x))^2 / (2 v)`.
pub fn anomaly_score<T: Scalar>(model: &ModelHandle<T>, x_t: &[T], y_t: T, noise_variance: T) -> Result<T> {
    if !(noise_variance > T::zero()) || !noise_variance.is_finite() {
        return Err(Error::InvalidConfig("noise variance must be positive".into()));
    }
    let f = model.evaluate(x_t)?;
    if !f.is_finite() {
        return Err(Error::NonFinite { sample: 0 });
    }
    let r = y_t - f;
    Ok(T::of(0.5) * (T::TAU() * noise_variance).ln() + r * r / (T::of(2.0) * noise_variance))
}

/// Per-sample anomaly scores.
pub fn anomaly_scores<T: Scalar>(model: &ModelHandle<T>, testset: &TestSet<T>, noise_variance: T) -> Result<Vec<T>> {
    testset
        .samples
        .iter()
        .enumerate()
        .map(|(t, s)| {
            anomaly_score(model, &s.x, s.y, noise_variance).map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite { sample: t },
                other => other,
            })
        })
        .collect()
}

/// Mean of the per-sample scores.
pub fn collective_anomaly_score<T: Scalar>(
    model: &ModelHandle<T>,
    testset: &TestSet<T>,
    noise_variance: T,
) -> Result<T> {
    if testset.is_empty() {
        return Err(Error::InvalidConfig("test set is empty".into()));
    }
    let scores = anomaly_scores(model, testset, noise_variance)?;
    Ok(scores.iter().copied().sum::<T>() / T::of(scores.len() as f64))
}

fn check_pair(a: &[f64], b: &[f64], min_len: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < min_len {
        return Err(Error::Undefined(format!(
            "need at least {min_len} entries, got {}",
            a.len()
        )));
    }
    Ok(())
}

fn absolute(v: &[f64]) -> Result<Vec<f64>> {
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    if abs.iter().any(|x| x.is_nan()) {
        return Err(Error::Undefined("vector contains NaN".into()));
    }
    if abs.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::Undefined("absolute scores are constant".into()));
    }
    Ok(abs)
}

/// Kendall's tau-b on absolute values.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let (a, b) = (absolute(a)?, absolute(b)?);
    let (mut concordant, mut discordant, mut tie_a, mut tie_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i].partial_cmp(&a[j]).unwrap_or(Ordering::Equal);
            let db = b[i].partial_cmp(&b[j]).unwrap_or(Ordering::Equal);
            match (da, db) {
                (Ordering::Equal, Ordering::Equal) => {}
                (Ordering::Equal, _) => tie_a += 1,
                (_, Ordering::Equal) => tie_b += 1,
                _ if da == db => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n_a = (concordant + discordant + tie_a) as f64;
    let n_b = (concordant + discordant + tie_b) as f64;
    Ok((concordant - discordant) as f64 / (n_a * n_b).sqrt())
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho (Pearson correlation of average ranks) on absolute values.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let (ra, rb) = (average_ranks(&absolute(a)?), average_ranks(&absolute(b)?));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// One minus the fraction of variables whose signs strictly oppose. Zeros
/// never count against the candidate.
pub fn sign_match_ratio(reference: &[f64], candidate: &[f64]) -> Result<f64> {
    check_pair(reference, candidate, 1)?;
    let opposed = reference
        .iter()
        .zip(candidate)
        .filter(|(&r, &u)| sign(r) * sign(u) == -1)
        .count();
    Ok(1.0 - opposed as f64 / reference.len() as f64)
}

/// Indices of the `k` largest absolute entries; ties go to the lower index.
fn top_k(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| {
        v[j].abs()
            .partial_cmp(&v[i].abs())
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    idx.truncate(k);
    idx
}

/// Overlap of the top `ceil(M/4)` absolute entries.
pub fn hit_ratio_25(reference: &[f64], candidate: &[f64]) -> Result<f64> {
    check_pair(reference, candidate, 1)?;
    let k = reference.len().div_ceil(4);
    let top_ref = top_k(reference, k);
    let top_cand = top_k(candidate, k);
    let hits = top_ref.iter().filter(|i| top_cand.contains(i)).count();
    Ok(hits as f64 / k as f64)
}

/// The four consistency metrics of a candidate against a reference. Rank
/// correlations are `None` when undefined, with the reason recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub kendall_tau: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub smr: f64,
    pub hit25: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn consistency(reference: &[f64], candidate: &[f64]) -> Result<ConsistencyReport> {
    let mut notes = Vec::new();
    let mut undefined_ok = |r: Result<f64>, name: &str| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(why)) => {
            notes.push(format!("{name}: {why}"));
            Ok(None)
        }
        Err(e) => Err(e),
    };
    let kendall_tau = undefined_ok(kendall_tau(reference, candidate), "kendall_tau")?;
    let spearman_rho = undefined_ok(spearman_rho(reference, candidate), "spearman_rho")?;
    Ok(ConsistencyReport {
        kendall_tau,
        spearman_rho,
        smr: sign_match_ratio(reference, candidate)?,
        hit25: hit_ratio_25(reference, candidate)?,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Sample;
    use crate::model::Builtin;
    use proptest::prelude::*;

    #[test]
    fn anomaly_score_formula() {
        let model = ModelHandle::new(Builtin::linear(vec![1.0]));
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((anomaly_score(&model, &[1.0], 1.0, 1.0).unwrap() - half_ln_2pi).abs() < 1e-15);
        assert!((anomaly_score(&model, &[1.0], 3.0, 1.0).unwrap() - (half_ln_2pi + 2.0)).abs() < 1e-15);
        assert!(anomaly_score(&model, &[1.0], 3.0, 0.0).is_err());
    }

    #[test]
    fn collective_score_is_mean() {
        let model = ModelHandle::new(Builtin::linear(vec![1.0f64]));
        let ts = TestSet::new(vec![Sample::new(vec![0.0], 0.0), Sample::new(vec![0.0], 2.0)]).unwrap();
        let each = anomaly_scores(&model, &ts, 1.0).unwrap();
        let c = collective_anomaly_score(&model, &ts, 1.0).unwrap();
        assert!((c - (each[0] + each[1]) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rank_correlation_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
        assert_eq!(kendall_tau(&a, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((kendall_tau(&a, &[1.0, 3.0, 2.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(spearman_rho(&a, &a).unwrap(), 1.0);
        assert_eq!(spearman_rho(&a, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((spearman_rho(&a, &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rank_correlations_use_absolute_values() {
        assert_eq!(kendall_tau(&[-1.0, 2.0, -3.0], &[1.0, -2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn constant_vector_is_undefined() {
        assert!(matches!(
            kendall_tau(&[1.0, -1.0], &[1.0, 2.0]),
            Err(Error::Undefined(_))
        ));
        assert!(matches!(
            spearman_rho(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn ties_use_tau_b() {
        // a has one tied pair: C=2, D=0, n_a=2, n_b=3
        let t = kendall_tau(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((t - 2.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sign_match_examples() {
        assert_eq!(sign_match_ratio(&[1.0, -1.0, 0.0], &[2.0, -3.0, 5.0]).unwrap(), 1.0);
        assert_eq!(sign_match_ratio(&[0.0, 0.0, 0.0], &[2.0, -3.0, 5.0]).unwrap(), 1.0);
        assert_eq!(sign_match_ratio(&[1.0, 1.0], &[-1.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn hit25_examples() {
        let v = [8.0, 7.0, 1.0, 2.0, 3.0, 0.0, 0.5, 0.1];
        assert_eq!(hit_ratio_25(&v, &v).unwrap(), 1.0);
        let w = [0.0, 0.0, 1.0, 2.0, 3.0, 0.0, 0.5, 0.1];
        assert_eq!(hit_ratio_25(&v, &w).unwrap(), 0.0);
        assert_eq!(
            hit_ratio_25(&[0.0, 0.0, 5.0, 1.0], &[0.0, 1.0, -9.0, 0.0]).unwrap(),
            1.0
        );
        // all tied: both pick index 0
        assert_eq!(hit_ratio_25(&[1.0; 4], &[2.0; 4]).unwrap(), 1.0);
    }

    #[test]
    fn report_with_zero_reference() {
        let r = consistency(&[0.0, 0.0, 0.0], &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(r.smr, 1.0);
        assert_eq!(r.kendall_tau, None);
        assert_eq!(r.spearman_rho, None);
        assert_eq!(r.notes.len(), 2);
    }

    fn nonconstant() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 2..9)
            .prop_filter("non-constant |v|", |v| v.windows(2).any(|w| w[0].abs() != w[1].abs()))
    }

    proptest! {
        #[test]
        fn metrics_are_scale_invariant(
            (a, b) in (2usize..9).prop_flat_map(|n| (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )),
            s in 0.01f64..100.0,
        ) {
            let scaled: Vec<f64> = b.iter().map(|v| v * s).collect();
            if let (Ok(x), Ok(y)) = (kendall_tau(&a, &b), kendall_tau(&a, &scaled)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            if let (Ok(x), Ok(y)) = (spearman_rho(&a, &b), spearman_rho(&a, &scaled)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert_eq!(sign_match_ratio(&a, &b).unwrap(), sign_match_ratio(&a, &scaled).unwrap());
        }

        #[test]
        fn rank_correlations_are_symmetric(a in nonconstant(), seed in any::<u64>()) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * ((seed >> (i % 64)) & 3) as f64 - 1.0).collect();
            if let (Ok(x), Ok(y)) = (kendall_tau(&a, &b), kendall_tau(&b, &a)) {
                prop_assert!((x - y).abs() < 1e-15);
            }
            if let (Ok(x), Ok(y)) = (spearman_rho(&a, &b), spearman_rho(&b, &a)) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }

        #[test]
        fn zeroing_reference_never_lowers_smr(a in nonconstant(), b in nonconstant(), k in 0usize..8) {
            let n = a.len().min(b.len());
            let (a, b) = (&a[..n], &b[..n]);
            let mut z = a.to_vec();
            z[k % n] = 0.0;
            prop_assert!(sign_match_ratio(&z, b).unwrap() >= sign_match_ratio(a, b).unwrap());
        }

        #[test]
        fn hit25_is_scale_invariant(v in nonconstant(), s in 0.01f64..100.0) {
            let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
            prop_assert_eq!(hit_ratio_25(&v, &v).unwrap(), 1.0);
            prop_assert_eq!(hit_ratio_25(&v, &scaled).unwrap(), 1.0);
        }
    }
}
