use std::collections::BTreeMap;

use anyhow::{bail, Result};
use gpa_core::io::to_json_string;
use gpa_core::metrics::{consistency, ConsistencyReport};
use serde::Serialize;
use serde_json::json;

use super::{baseline_record, check_inputs, ensure_dir, run_gpa, Method};
use crate::args::CompareArgs;
use crate::setup::{baseline_settings, check_indices, gradient_config, hyperparams, workspace};

#[derive(Debug, Serialize)]
struct PointReport {
    index: usize,
    scores: BTreeMap<String, Vec<f64>>,
    reports: BTreeMap<String, ConsistencyReport>,
}

/// Averages over the points where each metric is defined.
#[derive(Debug, Serialize)]
struct Summary {
    kendall_tau: Option<f64>,
    spearman_rho: Option<f64>,
    smr: f64,
    hit25: f64,
    points: usize,
    /// Points where the rank correlations were undefined.
    undefined_rank_points: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(reports: &[&ConsistencyReport]) -> Summary {
    Summary {
        kendall_tau: mean(reports.iter().filter_map(|r| r.kendall_tau)),
        spearman_rho: mean(reports.iter().filter_map(|r| r.spearman_rho)),
        smr: mean(reports.iter().map(|r| r.smr)).unwrap_or(f64::NAN),
        hit25: mean(reports.iter().map(|r| r.hit25)).unwrap_or(f64::NAN),
        points: reports.len(),
        undefined_rank_points: reports.iter().filter(|r| r.kendall_tau.is_none()).count(),
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), |x| format!("{x:.4}"))
}

pub fn run(args: &CompareArgs, seed: u64, config: serde_json::Value) -> Result<()> {
    let mut methods = Method::parse_list(&args.methods)?;
    let reference = Method::parse(&args.reference_method)?;
    if !methods.contains(&reference) {
        methods.insert(0, reference);
    }
    if methods.len() < 2 {
        bail!("compare needs at least two methods");
    }
    let ws = workspace(&args.model, &args.data)?;
    let indices = match &args.indices {
        Some(list) if !list.is_empty() => list.clone(),
        _ => (0..ws.data.len()).collect(),
    };
    check_indices(&indices, ws.data.len())?;
    let hp = hyperparams(&args.gpa, 1, seed)?;
    let grad = gradient_config(&args.gpa, seed);
    let settings = baseline_settings(&ws, &args.baselines, &args.gpa, &hp, seed)?;
    check_inputs(&methods, &settings)?;
    let ref_name = reference.to_string();

    let mut points = Vec::with_capacity(indices.len());
    for &i in &indices {
        let ts = ws.data.select(&[i])?;
        let s = &ts.samples[0];
        let mut scores = BTreeMap::new();
        for m in &methods {
            let v = match m {
                Method::Gpa => run_gpa(&ts, &ws.model, &hp, &grad)?.result.delta_star,
                Method::Baseline(b) => baseline_record(*b, &ws.model, &s.x, s.y, &settings)?.scores,
            };
            scores.insert(m.to_string(), v);
        }
        let mut reports = BTreeMap::new();
        for m in methods.iter().filter(|m| **m != reference) {
            let name = m.to_string();
            reports.insert(name.clone(), consistency(&scores[&ref_name], &scores[&name])?);
        }
        points.push(PointReport {
            index: i,
            scores,
            reports,
        });
    }

    let mut summary = BTreeMap::new();
    println!("reference: {ref_name} ({} points)", points.len());
    println!(
        "{:<10} {:>10} {:>10} {:>10} {:>10}",
        "method", "tau", "rho", "smr", "hit25"
    );
    for m in methods.iter().filter(|m| **m != reference) {
        let name = m.to_string();
        let reports: Vec<&ConsistencyReport> = points.iter().map(|p| &p.reports[&name]).collect();
        let s = summarize(&reports);
        println!(
            "{name:<10} {:>10} {:>10} {:>10.4} {:>10.4}",
            show(s.kendall_tau),
            show(s.spearman_rho),
            s.smr,
            s.hit25
        );
        summary.insert(name, s);
    }

    ensure_dir(&args.out)?;
    let doc = json!({
        "schema_version": gpa_core::io::SCHEMA_VERSION,
        "config": config,
        "reference": ref_name,
        "variable_names": ws.data.variable_names,
        "standardization": ws.provenance(),
        "points": points,
        "summary": summary,
    });
    let path = args.out.join("compare.json");
    std::fs::write(&path, to_json_string(&doc)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
