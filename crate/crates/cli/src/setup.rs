//! Turns parsed flags into core configuration.

use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use gpa_core::baselines::{BaselineSettings, LcConfig, LimeConfig, ReferenceSet};
use gpa_core::gpa::{GpaHyperParams, RateMode};
use gpa_core::io::{load_csv, load_reference_csv, standardize, Provenance, TestSet};
use gpa_core::model::{
    BuiltinModelSpec, GradientEstimatorConfig, HttpModel, Model, ModelHandle, Standardized, SubprocessModel,
};

use crate::args::{BaselineArgs, DataArgs, GpaArgs, ModelArgs, SelectArgs, StandardizeMode};

/// A dataset in the coordinates the algorithms work in, plus the model
/// presented in the same coordinates.
pub struct Workspace {
    pub data: TestSet<f64>,
    pub model: ModelHandle<f64>,
    /// The user's model in raw units, for query accounting.
    pub raw_queries: Arc<ModelHandle<f64>>,
}

impl Workspace {
    pub fn provenance(&self) -> Provenance {
        self.data.standardization.provenance
    }

    pub fn to_standard(&self, raw: &[f64]) -> Vec<f64> {
        let s = &self.data.standardization;
        raw.iter()
            .zip(s.mean.iter().zip(&s.std))
            .map(|(&v, (&m, &sd))| (v - m) / sd)
            .collect()
    }

    pub fn total_queries(&self) -> u64 {
        self.raw_queries.query_count()
    }
}

fn raw_model(args: &ModelArgs, dimension: usize) -> Result<Arc<dyn Model<f64>>> {
    let timeout = Duration::from_millis(args.timeout_ms);
    if let Some(spec) = &args.model {
        let spec: BuiltinModelSpec = spec.parse()?;
        return Ok(Arc::new(spec.build::<f64>()?));
    }
    if let Some(cmd) = &args.model_cmd {
        return Ok(Arc::new(SubprocessModel::new(cmd.clone(), dimension, timeout)));
    }
    if let Some(url) = &args.model_url {
        return Ok(Arc::new(HttpModel::connect(url.clone(), dimension, timeout)));
    }
    bail!("no model given; use --model, --model-cmd or --model-url (or set GPA_MODEL_URL)")
}

pub fn workspace(model: &ModelArgs, data: &DataArgs) -> Result<Workspace> {
    let raw: TestSet<f64> = load_csv(&data.data).with_context(|| format!("loading {}", data.data.display()))?;
    if raw.is_empty() {
        bail!("{} contains no samples", data.data.display());
    }
    let m = raw.dimension();
    let inner = raw_model(model, m)?;
    if inner.dimension() != m {
        bail!(
            "model takes {} inputs but {} has {m} feature columns",
            inner.dimension(),
            data.data.display()
        );
    }

    let data_set = if let Some(path) = &data.stats {
        let rows: Vec<Vec<f64>> = load_reference_csv(path).with_context(|| format!("loading {}", path.display()))?;
        let stats = rows
            .iter()
            .map(|r| match r.as_slice() {
                [mean, std] => Ok((*mean, *std)),
                _ => bail!("{}: each row must hold exactly `mean,std`", path.display()),
            })
            .collect::<Result<Vec<_>>>()?;
        standardize(&raw, Some(&stats))?
    } else {
        match data.standardize {
            StandardizeMode::None => raw,
            StandardizeMode::Test => standardize(&raw, None)?,
            StandardizeMode::Auto => match standardize(&raw, None) {
                Ok(ts) => ts,
                Err(e) => {
                    eprintln!("warning: inputs left unstandardized ({e})");
                    raw
                }
            },
        }
    };
    if data_set.standardization.provenance == Provenance::TestSetEstimated {
        eprintln!(
            "warning: standardization statistics were estimated from the test set itself; \
             pass --stats to supply training statistics or --standardize none to use raw inputs"
        );
    }

    let handle = Arc::new(ModelHandle::from_arc(inner));
    let s = &data_set.standardization;
    let model = match data_set.standardization.provenance {
        Provenance::None => ModelHandle::from_arc(Arc::new(Passthrough(handle.clone()))),
        _ => ModelHandle::new(Standardized::new(shared(&handle), s.mean.clone(), s.std.clone())?),
    };
    Ok(Workspace {
        data: data_set,
        model,
        raw_queries: handle,
    })
}

/// A second counting handle onto the same model.
fn shared(handle: &Arc<ModelHandle<f64>>) -> ModelHandle<f64> {
    ModelHandle::from_arc(Arc::new(Passthrough(handle.clone())))
}

struct Passthrough(Arc<ModelHandle<f64>>);

impl Model<f64> for Passthrough {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn predict(&self, x: &[f64]) -> gpa_core::Result<f64> {
        self.0.evaluate(x)
    }

    fn predict_batch(&self, xs: &[Vec<f64>]) -> gpa_core::Result<Vec<f64>> {
        self.0.evaluate_batch(xs)
    }

    fn serial(&self) -> bool {
        self.0.serial()
    }
}

/// Selected sample indices; a single index when nothing is given.
pub fn selection(select: &SelectArgs, n: usize) -> Result<Vec<usize>> {
    let picked = match (&select.point_index, &select.indices) {
        (Some(i), _) => vec![*i],
        (None, Some(list)) if !list.is_empty() => list.clone(),
        _ => vec![0],
    };
    check_indices(&picked, n)?;
    if select.collective && picked.len() < 2 {
        eprintln!("note: --collective with a single sample is the single-sample objective");
    }
    Ok(picked)
}

pub fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    if let Some(bad) = indices.iter().find(|&&i| i >= n) {
        bail!("sample index {bad} out of range (dataset has {n} samples)");
    }
    Ok(())
}

pub fn gradient_config(gpa: &GpaArgs, seed: u64) -> GradientEstimatorConfig<f64> {
    GradientEstimatorConfig::new(gpa.grad_std, gpa.mc_samples, seed).antithetic(gpa.antithetic)
}

pub fn hyperparams(gpa: &GpaArgs, n_test: usize, seed: u64) -> Result<GpaHyperParams<f64>> {
    let mut hp = GpaHyperParams::for_test_size(n_test);
    if let Some(v) = gpa.eta {
        hp.eta = v;
    }
    if let Some(v) = gpa.nu {
        hp.nu = v;
    }
    if let Some(v) = gpa.kappa {
        hp.kappa = v;
    }
    if let Some(v) = gpa.a0 {
        hp.a0 = v;
    }
    hp.c_b = gpa.c_b;
    hp.b_mode = match (gpa.b0, gpa.kernel_iters) {
        (Some(_), Some(_)) => bail!("--b0 and --kernel-iters are mutually exclusive"),
        (Some(b), None) => RateMode::Constant(b),
        (None, Some(iters)) => RateMode::LocalKernel { iters },
        (None, None) => RateMode::Estimated,
    };
    hp.max_iter = gpa.max_iter;
    hp.tol = gpa.tol;
    hp.grid_points = gpa.grid_points;
    hp.seed = seed;
    hp.validate()?;
    Ok(hp)
}

pub fn baseline_settings(
    ws: &Workspace,
    b: &BaselineArgs,
    gpa: &GpaArgs,
    hp: &GpaHyperParams<f64>,
    seed: u64,
) -> Result<BaselineSettings<f64>> {
    let m = ws.data.dimension();
    let ig_baseline = match &b.baseline {
        Some(x0) if x0.len() != m => bail!("--baseline has {} values, expected {m}", x0.len()),
        Some(x0) => Some(ws.to_standard(x0)),
        None => None,
    };
    let reference = match &b.reference {
        Some(path) => {
            let rows: Vec<Vec<f64>> =
                load_reference_csv(path).with_context(|| format!("loading {}", path.display()))?;
            if rows.is_empty() {
                bail!("{} contains no reference samples", path.display());
            }
            if let Some(r) = rows.iter().find(|r| r.len() != m) {
                bail!("{}: reference rows need {m} values, found {}", path.display(), r.len());
            }
            Some(ReferenceSet::uniform(rows.iter().map(|r| ws.to_standard(r)).collect()))
        }
        None => None,
    };
    Ok(BaselineSettings {
        lime: LimeConfig {
            n_samples: b.lime_samples,
            sampling_std: b.lime_std,
            l1_strength: 0.0,
            seed,
        },
        lime_l1: b.lime_l1,
        baylime_prior_eta: b.baylime_eta,
        baylime_noise_lambda: b.baylime_lambda,
        ig_baseline,
        n_intervals: b.n_intervals,
        reference,
        sv_configs: b.sv_configs,
        sv_seed: seed,
        lc: LcConfig {
            eta: hp.eta,
            nu: hp.nu,
            lambda: b.lc_lambda,
            kappa: b.lc_kappa,
            max_iter: hp.max_iter,
            tol: hp.tol,
            seed,
        },
        gradient: gradient_config(gpa, seed),
        variable_names: ws.data.variable_names.clone(),
    })
}

/// Mean squared residual over the whole dataset, floored away from zero.
pub fn noise_variance(ws: &Workspace, given: Option<f64>) -> Result<f64> {
    if let Some(v) = given {
        if v <= 0.0 || !v.is_finite() {
            bail!("--noise-var must be positive");
        }
        return Ok(v);
    }
    let r = gpa_core::gpa::residuals(&ws.data, &ws.model)?;
    let ms = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
    Ok(ms.max(1e-12))
}
