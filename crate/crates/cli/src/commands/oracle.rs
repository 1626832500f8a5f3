use anyhow::{bail, Context, Result};
use gpa_core::oracle::{oracle_gpa, oracle_ig, oracle_lime0, oracle_sv};
use serde_json::json;

use crate::args::{OracleArgs, OracleKind};

fn pair(v: &[f64], flag: &str) -> Result<[f64; 2]> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => bail!("{flag} needs exactly two values, got {}", v.len()),
    }
}

pub fn run(args: &OracleArgs) -> Result<()> {
    let x = pair(&args.x, "--x")?;
    let scores = match args.kind {
        OracleKind::Lime0 => oracle_lime0(x),
        OracleKind::Sv => oracle_sv(x),
        OracleKind::Gpa | OracleKind::Lc => {
            let y = args.y.context("--y is required for the gpa and lc oracles")?;
            oracle_gpa(x, y)?
        }
        OracleKind::Ig => {
            let x0 = args.x0.as_deref().context("--x0 is required for the ig oracle")?;
            oracle_ig(x, pair(x0, "--x0")?)?
        }
    };
    let doc = json!({
        "method": args.kind,
        "x": x,
        "y": args.y,
        "x0": args.x0,
        "scores": scores,
    });
    print!("{}", gpa_core::io::to_json_string(&doc)?);
    Ok(())
}
