mod compare;
mod detect;
mod dist;
mod explain;
mod oracle;

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gpa_core::baselines::{baylime_distributions, run_baseline, BaselineMethod, BaselineSettings};
use gpa_core::gpa::{map_estimate, score_distributions, AttributionResult, GpaHyperParams, ScoreDistribution};
use gpa_core::io::{DistributionRecord, MethodRecord, TestSet};
use gpa_core::model::{GradientEstimatorConfig, ModelHandle};
use serde_json::json;

use crate::args::{Cli, Command};

pub fn dispatch(cli: Cli) -> Result<()> {
    let config = serde_json::to_value(&cli)?;
    let seed = cli.seed;
    match &cli.command {
        Command::Detect(a) => detect::run(a, config),
        Command::Explain(a) => explain::run(a, seed, config),
        Command::Dist(a) => dist::run(a, seed, config),
        Command::Compare(a) => compare::run(a, seed, config),
        Command::Oracle(a) => oracle::run(a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gpa,
    Baseline(BaselineMethod),
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "gpa" {
            return Ok(Method::Gpa);
        }
        match s.parse::<BaselineMethod>() {
            Ok(b) => Ok(Method::Baseline(b)),
            Err(_) => bail!("unknown method `{s}`; expected one of gpa,lc,lime,lime0,baylime,ig,eig,sv,zscore"),
        }
    }

    pub fn parse_list(list: &[String]) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for s in list {
            let m = Method::parse(s)?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            bail!("no methods selected");
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Gpa => f.write_str("gpa"),
            Method::Baseline(b) => write!(f, "{b}"),
        }
    }
}

/// Fails with the method named when a per-method input is missing.
pub fn check_inputs(methods: &[Method], settings: &BaselineSettings<f64>) -> Result<()> {
    for m in methods {
        if let Method::Baseline(b) = m {
            if let Some(what) = settings.missing_input(*b) {
                let flag = if *b == BaselineMethod::Ig {
                    "--baseline"
                } else {
                    "--ref"
                };
                bail!("method {b} needs {what} ({flag})");
            }
        }
    }
    Ok(())
}

/// GPA output for one (possibly collective) test set.
pub struct GpaRun {
    pub result: AttributionResult<f64>,
    pub distributions: Vec<ScoreDistribution<f64>>,
}

pub fn run_gpa(
    ts: &TestSet<f64>,
    model: &ModelHandle<f64>,
    hp: &GpaHyperParams<f64>,
    grad: &GradientEstimatorConfig<f64>,
) -> Result<GpaRun> {
    let result = map_estimate(ts, model, hp, grad)?;
    if !result.converged {
        eprintln!(
            "warning: GPA did not converge in {} iterations; distributions use the last iterate",
            result.iterations
        );
    }
    let distributions = score_distributions(&result.delta_star, ts, model, hp)?;
    Ok(GpaRun { result, distributions })
}

impl GpaRun {
    pub fn record(&self) -> MethodRecord {
        let first = &self.distributions[0];
        MethodRecord {
            scores: self.result.delta_star.clone(),
            distribution: Some(DistributionRecord {
                delta_max: *first.grid.last().unwrap_or(&0.0),
                grid: first.grid.clone(),
                probs: self.distributions.iter().map(|d| d.probs.clone()).collect(),
            }),
            variance: None,
        }
    }

    pub fn diagnostics(&self, ts: &TestSet<f64>) -> serde_json::Value {
        let r = &self.result;
        json!({
            "delta_star": r.delta_star,
            "delta_star_raw": ts.delta_to_raw(&r.delta_star),
            "converged": r.converged,
            "iterations": r.iterations,
            "objective": r.objective_trace.last(),
            "query_count": r.query_count,
            "rates": r.rates,
            "gradient_redraws": r.gradient_redraws,
        })
    }
}

/// Scores of one non-GPA method at a single sample.
pub fn baseline_record(
    method: BaselineMethod,
    model: &ModelHandle<f64>,
    x: &[f64],
    y: f64,
    settings: &BaselineSettings<f64>,
) -> Result<MethodRecord> {
    let context = || format!("running {method}");
    if method == BaselineMethod::BayLime {
        let r = baylime_distributions(
            model,
            x,
            y,
            &settings.lime,
            settings.baylime_prior_eta,
            settings.baylime_noise_lambda,
        )
        .with_context(context)?;
        return Ok(MethodRecord {
            scores: r.mean,
            distribution: None,
            variance: Some(r.variance),
        });
    }
    let scores = run_baseline(method, model, x, y, settings).with_context(context)?;
    Ok(MethodRecord {
        scores,
        ..MethodRecord::default()
    })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
