use anyhow::Result;
use gpa_core::io::{to_json_string, AnomalyRecord};
use gpa_core::metrics::anomaly_scores;
use serde_json::json;

use super::ensure_dir;
use crate::args::DetectArgs;
use crate::setup::{noise_variance, workspace};

pub fn run(args: &DetectArgs, config: serde_json::Value) -> Result<()> {
    let ws = workspace(&args.model, &args.data)?;
    let v = noise_variance(&ws, args.noise_var)?;
    let scores = anomaly_scores(&ws.model, &ws.data, v)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // descending score, lower index first on ties
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let top: Vec<usize> = order.iter().copied().take(args.top).collect();

    println!("{:>8}  {:>24}", "index", "anomaly_score");
    for &i in &order {
        println!("{i:>8}  {:>24.16e}", scores[i]);
    }
    let top_line = top.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    println!("top: {top_line}");

    ensure_dir(&args.out)?;
    let ranked: Vec<AnomalyRecord> = order
        .iter()
        .map(|&i| AnomalyRecord {
            sample: i.to_string(),
            value: scores[i],
        })
        .collect();
    let doc = json!({
        "schema_version": gpa_core::io::SCHEMA_VERSION,
        "config": config,
        "noise_variance": v,
        "noise_variance_source": if args.noise_var.is_some() { "user_supplied" } else { "mean_squared_residual" },
        "anomaly_scores": ranked,
        "top": top,
    });
    std::fs::write(args.out.join("anomaly.json"), to_json_string(&doc)?)?;
    std::fs::write(args.out.join("top.txt"), format!("{top_line}\n"))?;
    Ok(())
}
