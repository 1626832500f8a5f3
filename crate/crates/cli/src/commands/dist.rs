use anyhow::Result;
use gpa_core::io::{emit_distribution_svg, emit_result_json, RunResults};
use serde_json::json;

use super::{ensure_dir, run_gpa};
use crate::args::DistArgs;
use crate::setup::{gradient_config, hyperparams, selection, workspace};

pub fn run(args: &DistArgs, seed: u64, config: serde_json::Value) -> Result<()> {
    let ws = workspace(&args.model, &args.data)?;
    let picked = selection(&args.select, ws.data.len())?;
    let groups: Vec<Vec<usize>> = if args.select.collective {
        vec![picked]
    } else {
        picked.iter().map(|&i| vec![i]).collect()
    };
    ensure_dir(&args.out)?;

    for group in groups {
        let ts = ws.data.select(&group)?;
        let hp = hyperparams(&args.gpa, ts.len(), seed)?;
        let run = run_gpa(&ts, &ws.model, &hp, &gradient_config(&args.gpa, seed))?;

        let mut results = RunResults::new(config.clone());
        results.variable_names = ws.data.variable_names.clone();
        results.method_order = vec!["gpa".into()];
        results.methods.insert("gpa".into(), run.record());
        results.diagnostics.insert("gpa".into(), run.diagnostics(&ts));
        results.diagnostics.insert("samples".into(), json!(group));
        results
            .diagnostics
            .insert("standardization".into(), json!(ws.provenance()));
        results.diagnostics.insert(
            "modes".into(),
            json!(run.distributions.iter().map(|d| d.mode()).collect::<Vec<_>>()),
        );

        let tag = if args.select.collective {
            "collective".to_string()
        } else {
            group[0].to_string()
        };
        let json_path = args.out.join(format!("dist_{tag}.json"));
        emit_result_json(&results, &json_path)?;
        emit_distribution_svg(
            &run.distributions,
            &run.result.delta_star,
            &ws.data.variable_names,
            args.out.join(format!("dist_{tag}.svg")),
        )?;
        println!(
            "wrote {} (converged: {}, iterations: {})",
            json_path.display(),
            run.result.converged,
            run.result.iterations
        );
        for (name, (d, q)) in ws
            .data
            .variable_names
            .iter()
            .zip(run.result.delta_star.iter().zip(&run.distributions))
        {
            println!("  {name:<12} delta* {d:+.6e}  mode {:+.6e}", q.mode());
        }
    }
    Ok(())
}
