//! Shapley values with interventional substitution from a reference set.
//!
//! The value of a coalition `S` is `v(S) = E_ref f(x^t_S, r_{-S})`. The
//! deviation form subtracts the constant `y^t` from every `v(S)`, which
//! cancels in each marginal contribution, so `y^t` is not an input.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ReferenceSet;
use crate::error::{Error, Result};
use crate::model::ModelHandle;
use crate::scalar::Scalar;

/// Largest `2^M |ref|` model-call budget for which exact enumeration is used.
pub const EXACT_BUDGET: usize = 1 << 16;
const EXACT_MAX_DIM: usize = 10;

/// Exact enumeration over all `2^M` coalitions.
pub fn shapley_exact<T: Scalar>(model: &ModelHandle<T>, x_t: &[T], reference: &ReferenceSet<T>) -> Result<Vec<T>> {
    let m = model.dimension();
    check_point(m, x_t)?;
    reference.check(m)?;
    if m >= usize::BITS as usize - 1 {
        return Err(Error::InvalidConfig(format!(
            "exact Shapley enumeration is infeasible for {m} variables"
        )));
    }
    let n_sets = 1usize << m;
    let mut value = vec![T::zero(); n_sets];
    let mut probe = vec![T::zero(); m];
    for (mask, v) in value.iter_mut().enumerate() {
        let mut total = T::zero();
        for (r, sample) in reference.samples.iter().enumerate() {
            for j in 0..m {
                probe[j] = if mask >> j & 1 == 1 { x_t[j] } else { sample[j] };
            }
            total = total + reference.weight(r) * model.evaluate(&probe)?;
        }
        *v = total;
    }

    // |S|! (M - |S| - 1)! / M!
    let weight: Vec<T> = (0..m)
        .map(|s| {
            let mut w = 1.0 / m as f64;
            for k in 1..=s {
                w *= k as f64 / (m - k) as f64;
            }
            T::of(w)
        })
        .collect();
    let mut phi = vec![T::zero(); m];
    for mask in 0..n_sets {
        let size = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *p = *p + weight[size] * (value[mask | 1 << i] - value[mask]);
            }
        }
    }
    Ok(phi)
}

/// Permutation sampling: for each variable, `n_configs` random orderings
/// paired with a random reference sample. Variable `i` draws from its own
/// ChaCha stream.
pub fn shapley_permutation<T: Scalar>(
    model: &ModelHandle<T>,
    x_t: &[T],
    reference: &ReferenceSet<T>,
    n_configs: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let m = model.dimension();
    check_point(m, x_t)?;
    reference.check(m)?;
    if n_configs == 0 {
        return Err(Error::InvalidConfig("n_configs must be at least 1".into()));
    }
    let cumulative: Vec<f64> = (0..reference.len())
        .scan(0.0, |acc, r| {
            *acc += reference.weight(r).to_f64_lossy();
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap_or(&1.0);

    let mut order: Vec<usize> = (0..m).collect();
    let mut with_i = vec![T::zero(); m];
    let mut without_i = vec![T::zero(); m];
    let mut phi = Vec::with_capacity(m);
    for i in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut sum = T::zero();
        for _ in 0..n_configs {
            order.shuffle(&mut rng);
            let u: f64 = rng.random::<f64>() * total;
            let r = cumulative.partition_point(|&c| c <= u).min(reference.len() - 1);
            let z = &reference.samples[r];
            let pos = order.iter().position(|&j| j == i).unwrap_or(0);
            with_i.copy_from_slice(z);
            for &j in &order[..pos] {
                with_i[j] = x_t[j];
            }
            without_i.copy_from_slice(&with_i);
            with_i[i] = x_t[i];
            sum = sum + model.evaluate(&with_i)? - model.evaluate(&without_i)?;
        }
        phi.push(sum / T::of(n_configs as f64));
    }
    Ok(phi)
}

/// Exact enumeration when `M <= 10` and `2^M |ref| <= EXACT_BUDGET`,
/// permutation sampling otherwise.
pub fn shapley_sampled<T: Scalar>(
    model: &ModelHandle<T>,
    x_t: &[T],
    reference: &ReferenceSet<T>,
    n_configs: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let m = model.dimension();
    if m <= EXACT_MAX_DIM && (1usize << m).saturating_mul(reference.len()) <= EXACT_BUDGET {
        shapley_exact(model, x_t, reference)
    } else {
        shapley_permutation(model, x_t, reference, n_configs, seed)
    }
}

fn check_point<T>(m: usize, x_t: &[T]) -> Result<()> {
    if x_t.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x_t.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Builtin, FnModel};

    fn grid_ref() -> ReferenceSet<f64> {
        let pts: Vec<f64> = (0..8).map(|k| -1.0 + 0.25 * k as f64).collect();
        ReferenceSet::uniform(pts.iter().flat_map(|&a| pts.iter().map(move |&b| vec![a, b])).collect())
    }

    #[test]
    fn constant_model_gives_zero() {
        let model = ModelHandle::new(FnModel::new(3, |_: &[f64]| 4.0));
        let r = ReferenceSet::uniform(vec![vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]]);
        assert_eq!(shapley_exact(&model, &[5.0, 5.0, 5.0], &r).unwrap(), vec![0.0; 3]);
        assert_eq!(
            shapley_permutation(&model, &[5.0, 5.0, 5.0], &r, 20, 1).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn additive_model_closed_form() {
        let g1 = |a: f64| a * a;
        let g2 = |b: f64| b.sin();
        let model = ModelHandle::new(FnModel::new(2, move |x: &[f64]| g1(x[0]) + g2(x[1])));
        let refs = vec![vec![0.0, 0.5], vec![1.0, -1.0], vec![2.0, 0.0]];
        let r = ReferenceSet::uniform(refs.clone());
        let x = [1.5, 0.3];
        let sv = shapley_exact(&model, &x, &r).unwrap();
        let m1 = refs.iter().map(|p| g1(p[0])).sum::<f64>() / 3.0;
        let m2 = refs.iter().map(|p| g2(p[1])).sum::<f64>() / 3.0;
        assert!((sv[0] - (g1(x[0]) - m1)).abs() < 1e-12);
        assert!((sv[1] - (g2(x[1]) - m2)).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_splits_output_evenly() {
        let model = ModelHandle::new(Builtin::Sinusoidal2d);
        for x in [[0.0, 0.0], [1.0, 0.0], [0.3, -0.2]] {
            let f = 2.0 * (std::f64::consts::PI * x[0]).cos() * (std::f64::consts::PI * x[1]).cos();
            let sv = shapley_sampled(&model, &x, &grid_ref(), 100, 0).unwrap();
            assert!(
                (sv[0] - f / 2.0).abs() < 1e-12 && (sv[1] - f / 2.0).abs() < 1e-12,
                "{sv:?}"
            );
        }
    }

    #[test]
    fn permutation_sampling_approximates_exact() {
        let model = ModelHandle::new(Builtin::Sinusoidal2d);
        let x = [0.3, -0.2];
        let exact = shapley_exact(&model, &x, &grid_ref()).unwrap();
        let approx = shapley_permutation(&model, &x, &grid_ref(), 20_000, 3).unwrap();
        for (a, b) in exact.iter().zip(&approx) {
            assert!((a - b).abs() < 0.05, "{exact:?} vs {approx:?}");
        }
    }

    #[test]
    fn permutation_is_deterministic_and_weighted() {
        let model = ModelHandle::new(Builtin::linear(vec![1.0, 2.0]));
        let r = ReferenceSet::weighted(vec![vec![0.0, 0.0], vec![10.0, 10.0]], vec![1.0, 0.0]).unwrap();
        let a = shapley_permutation(&model, &[1.0, 1.0], &r, 50, 7).unwrap();
        assert_eq!(a, shapley_permutation(&model, &[1.0, 1.0], &r, 50, 7).unwrap());
        // the zero-weight sample is never chosen
        assert_eq!(a, vec![1.0, 2.0]);
    }

    #[test]
    fn efficiency_holds_exactly() {
        let model = ModelHandle::new(Builtin::diagonal_quadratic(vec![1.0, -2.0, 0.5]));
        let refs: Vec<Vec<f64>> = (0..5)
            .map(|k| vec![k as f64 * 0.1, 1.0 - k as f64 * 0.3, (k * k) as f64 * 0.05])
            .collect();
        let r = ReferenceSet::uniform(refs.clone());
        let x = [0.7, -0.4, 1.1];
        let sv = shapley_exact(&model, &x, &r).unwrap();
        let f = |p: &[f64]| model.evaluate(p).unwrap();
        let target = f(&x) - refs.iter().map(|p| f(p)).sum::<f64>() / 5.0;
        assert!((sv.iter().sum::<f64>() - target).abs() < 1e-12);
    }

    #[test]
    fn large_problems_switch_to_sampling() {
        let model = ModelHandle::new(Builtin::linear(vec![1.0f64; 12]));
        let r = ReferenceSet::uniform(vec![vec![0.0; 12]]);
        let before = model.query_count();
        let sv = shapley_sampled(&model, &[1.0; 12], &r, 3, 0).unwrap();
        assert_eq!(model.query_count() - before, 12 * 3 * 2);
        for v in sv {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
