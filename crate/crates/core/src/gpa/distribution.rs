use super::{check_inputs, resolve_rates, shifted, GpaHyperParams};
use crate::error::{Error, Result};
use crate::io::TestSet;
use crate::model::ModelHandle;
use crate::scalar::{norm_l1, norm_sq, Scalar};

/// Below this MAP magnitude the grid half-width falls back to 1.
const NORMAL_SAMPLE_EPS: f64 = 1e-9;

/// Discrete posterior of one variable's attribution score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDistribution<T> {
    pub variable_index: usize,
    pub grid: Vec<T>,
    pub probs: Vec<T>,
}

impl<T: Scalar> ScoreDistribution<T> {
    /// Grid value with the largest probability (first one on ties).
    pub fn mode(&self) -> T {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        self.grid[best]
    }

    pub fn step(&self) -> T {
        self.grid[1] - self.grid[0]
    }
}

/// `factor * max_k |delta*_k|`, or 1 when `delta*` is numerically zero.
pub fn delta_max<T: Scalar>(delta_star: &[T], factor: T) -> T {
    let peak = delta_star.iter().fold(T::zero(), |a, d| a.max(d.abs()));
    if peak < T::of(NORMAL_SAMPLE_EPS) {
        T::one()
    } else {
        factor * peak
    }
}

/// `n` equally spaced points on `[-half_width, half_width]`, exactly
/// antisymmetric.
pub fn symmetric_grid<T: Scalar>(half_width: T, n: usize) -> Vec<T> {
    let denom = T::of((n - 1) as f64);
    (0..n)
        .map(|i| half_width * (T::of(2.0 * i as f64 - (n - 1) as f64) / denom))
        .collect()
}

/// Per-variable posterior slices through the MAP point, normalized on a grid.
///
/// For each `k` the log of the unnormalized posterior
/// `-eta/2 |d|^2 - eta nu |d|_1 - sum_t (a0 + 1/2) ln(1 + r_t^2 / (2 b_t))`
/// is evaluated with only `d_k` varying, then exponentiated relative to its
/// maximum and normalized to sum to one.
pub fn score_distributions<T: Scalar>(
    delta_star: &[T],
    testset: &TestSet<T>,
    model: &ModelHandle<T>,
    hp: &GpaHyperParams<T>,
) -> Result<Vec<ScoreDistribution<T>>> {
    hp.validate()?;
    check_inputs(testset, model)?;
    if delta_star.len() != testset.dimension() {
        return Err(Error::DimensionMismatch {
            expected: testset.dimension(),
            got: delta_star.len(),
        });
    }
    if delta_star.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidConfig("MAP point is not finite".into()));
    }
    let rates = resolve_rates(testset, model, hp)?;
    let grid = symmetric_grid(delta_max(delta_star, hp.delta_max_factor), hp.grid_points);
    let half = T::of(0.5);
    let two = T::of(2.0);

    let log_posterior = |d: &[T]| -> Result<T> {
        let mut lp = -hp.eta * half * norm_sq(d) - hp.eta * hp.nu * norm_l1(d);
        for (s, &b) in testset.samples.iter().zip(&rates) {
            let f = model.evaluate(&shifted(&s.x, d))?;
            let r = s.y - f;
            lp = lp - (hp.a0 + half) * (r * r / (two * b)).ln_1p();
        }
        Ok(lp)
    };

    let mut out = Vec::with_capacity(delta_star.len());
    let mut point = delta_star.to_vec();
    for k in 0..delta_star.len() {
        let mut logs = Vec::with_capacity(grid.len());
        for &g in &grid {
            point[k] = g;
            logs.push(log_posterior(&point)?);
        }
        point[k] = delta_star[k];
        let peak = logs
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(T::neg_infinity(), T::max);
        if !peak.is_finite() {
            return Err(Error::EmptyDistribution(k));
        }
        let weights: Vec<T> = logs
            .iter()
            .map(|&l| if l.is_finite() { (l - peak).exp() } else { T::zero() })
            .collect();
        let total: T = weights.iter().copied().sum();
        out.push(ScoreDistribution {
            variable_index: k,
            grid: grid.clone(),
            probs: weights.into_iter().map(|w| w / total).collect(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpa::{map_estimate, RateMode};
    use crate::model::{Builtin, FnModel, GradientEstimatorConfig};

    #[test]
    fn grid_is_symmetric_and_increasing() {
        let g = symmetric_grid(0.37f64, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], -0.37);
        assert_eq!(g[99], 0.37);
        for i in 0..100 {
            assert_eq!(g[i], -g[99 - i]);
        }
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn delta_max_fallback() {
        assert_eq!(delta_max(&[0.0, 0.0], 1.1), 1.0);
        assert!((delta_max(&[-0.5, 0.2], 1.1f64) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn ignored_variable_gets_prior_slice() {
        let m = ModelHandle::new(Builtin::linear(vec![1.5, 0.0]));
        let ts = TestSet::single(vec![0.2, 0.3], 2.0);
        let hp = GpaHyperParams {
            eta: 0.4,
            nu: 0.5,
            b_mode: RateMode::Constant(1.0),
            ..GpaHyperParams::default()
        };
        let delta_star = [0.4, 0.0];
        let dists = score_distributions(&delta_star, &ts, &m, &hp).unwrap();
        let q = &dists[1];
        let prior: Vec<f64> = q
            .grid
            .iter()
            .map(|&d: &f64| (-0.2 * d * d - 0.2 * d.abs()).exp())
            .collect();
        let z: f64 = prior.iter().sum();
        for (p, w) in q.probs.iter().zip(&prior) {
            assert!((p - w / z).abs() < 1e-10);
        }
        for d in &dists {
            assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(d.probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn mode_matches_map_on_sinusoid() {
        let m = ModelHandle::new(Builtin::<f64>::Sinusoidal2d);
        let ts = TestSet::single(vec![0.5, 0.0], 1.0);
        let hp = GpaHyperParams {
            eta: 1e-3,
            nu: 1e-3,
            kappa: 0.1,
            a0: 1.0,
            b_mode: RateMode::Constant(5.0),
            ..GpaHyperParams::default()
        };
        let res = map_estimate(&ts, &m, &hp, &GradientEstimatorConfig::new(1e-4, 10, 0)).unwrap();
        let dists = score_distributions(&res.delta_star, &ts, &m, &hp).unwrap();
        for (d, &ds) in dists.iter().zip(&res.delta_star) {
            assert!((d.mode() - ds).abs() <= d.step(), "{} vs {ds}", d.mode());
        }
        assert!((dists[0].mode() + 1.0 / 6.0).abs() <= dists[0].step());
    }

    #[test]
    fn all_non_finite_names_the_variable() {
        let m = ModelHandle::new(FnModel::new(1, |_: &[f64]| f64::NAN));
        let ts = TestSet::single(vec![0.0], 1.0);
        let hp = GpaHyperParams {
            b_mode: RateMode::Constant(1.0),
            ..GpaHyperParams::default()
        };
        assert!(matches!(
            score_distributions(&[0.0], &ts, &m, &hp),
            Err(Error::EmptyDistribution(0))
        ));
    }

    #[test]
    fn grid_points_set_length() {
        let m = ModelHandle::new(Builtin::<f64>::Sinusoidal2d);
        let ts = TestSet::single(vec![0.5, 0.0], 1.0);
        let hp = GpaHyperParams {
            grid_points: 200,
            b_mode: RateMode::Constant(1.0),
            ..GpaHyperParams::default()
        };
        let d = score_distributions(&[-0.16, 0.0], &ts, &m, &hp).unwrap();
        assert_eq!(d[0].grid.len(), 200);
        assert_eq!(m.query_count(), 2 * 200);
    }
}
