use anyhow::{bail, Result};
use gpa_core::io::{emit_litmus_svg, emit_result_json, AnomalyRecord, RunResults};
use gpa_core::metrics::anomaly_scores;
use serde_json::json;

use super::{baseline_record, check_inputs, ensure_dir, run_gpa, Method};
use crate::args::ExplainArgs;
use crate::setup::{baseline_settings, gradient_config, hyperparams, noise_variance, selection, workspace};

pub fn run(args: &ExplainArgs, seed: u64, config: serde_json::Value) -> Result<()> {
    let methods = Method::parse_list(&args.methods)?;
    let ws = workspace(&args.model, &args.data)?;
    let picked = selection(&args.select, ws.data.len())?;
    let groups: Vec<Vec<usize>> = if args.select.collective {
        if let Some(m) = methods.iter().find(|m| **m != Method::Gpa) {
            bail!("method {m} does not support --collective; only gpa attributes samples jointly");
        }
        vec![picked]
    } else {
        picked.iter().map(|&i| vec![i]).collect()
    };
    let v = noise_variance(&ws, args.noise_var)?;
    let all_scores = anomaly_scores(&ws.model, &ws.data, v)?;
    ensure_dir(&args.out)?;

    for group in groups {
        let ts = ws.data.select(&group)?;
        let hp = hyperparams(&args.gpa, ts.len(), seed)?;
        let grad = gradient_config(&args.gpa, seed);
        let settings = baseline_settings(&ws, &args.baselines, &args.gpa, &hp, seed)?;
        check_inputs(&methods, &settings)?;

        let mut results = RunResults::new(config.clone());
        results.variable_names = ws.data.variable_names.clone();
        results.method_order = methods.iter().map(Method::to_string).collect();
        results.anomaly_scores = group
            .iter()
            .map(|&i| AnomalyRecord {
                sample: i.to_string(),
                value: all_scores[i],
            })
            .collect();
        if group.len() > 1 {
            results.anomaly_scores.push(AnomalyRecord {
                sample: "collective".into(),
                value: group.iter().map(|&i| all_scores[i]).sum::<f64>() / group.len() as f64,
            });
        }

        for method in &methods {
            let record = match method {
                Method::Gpa => {
                    let run = run_gpa(&ts, &ws.model, &hp, &grad)?;
                    results.diagnostics.insert("gpa".into(), run.diagnostics(&ts));
                    run.record()
                }
                Method::Baseline(b) => {
                    let s = &ts.samples[0];
                    baseline_record(*b, &ws.model, &s.x, s.y, &settings)?
                }
            };
            results.methods.insert(method.to_string(), record);
        }
        results.diagnostics.insert("samples".into(), json!(group));
        results.diagnostics.insert("noise_variance".into(), json!(v));
        results
            .diagnostics
            .insert("standardization".into(), json!(ws.provenance()));
        results
            .diagnostics
            .insert("model_queries".into(), json!(ws.total_queries()));

        let tag = if args.select.collective {
            "collective".to_string()
        } else {
            group[0].to_string()
        };
        let json_path = args.out.join(format!("explain_{tag}.json"));
        emit_result_json(&results, &json_path)?;
        emit_litmus_svg(&results, args.out.join(format!("litmus_{tag}.svg")))?;
        println!("wrote {}", json_path.display());
        for name in results.ordered_methods() {
            let scores = &results.methods[name].scores;
            let cells: Vec<String> = scores.iter().map(|s| format!("{s:+.6e}")).collect();
            println!("  {name:<8} {}", cells.join("  "));
        }
    }
    Ok(())
}
