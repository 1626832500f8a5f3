//! Versioned result documents.
//!
//! Keys are emitted in a fixed order and finite floats are written with 17
//! significant digits, so identical inputs give identical bytes and a reload
//! reproduces every score bit for bit.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub delta_max: f64,
    pub grid: Vec<f64>,
    /// One probability vector per variable.
    pub probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MethodRecord {
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionRecord>,
    /// Per-variable posterior variance (BayLIME).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    /// Sample index, or `"collective"`.
    pub sample: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub schema_version: u32,
    pub config: serde_json::Value,
    #[serde(default)]
    pub variable_names: Vec<String>,
    /// Row order for plots; methods missing here follow in key order.
    #[serde(default)]
    pub method_order: Vec<String>,
    #[serde(default)]
    pub anomaly_scores: Vec<AnomalyRecord>,
    pub methods: BTreeMap<String, MethodRecord>,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

impl RunResults {
    /// Method names in plotting order.
    pub fn ordered_methods(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .method_order
            .iter()
            .map(String::as_str)
            .filter(|m| self.methods.contains_key(*m))
            .collect();
        for k in self.methods.keys() {
            if !names.contains(&k.as_str()) {
                names.push(k);
            }
        }
        names
    }

    pub fn new(config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            variable_names: Vec::new(),
            method_order: Vec::new(),
            anomaly_scores: Vec::new(),
            methods: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
        }
    }
}

/// Pretty printer that writes floats as `{:.16e}`.
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value with the stable float format.
pub fn to_json_string<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn emit_result_json(results: &RunResults, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(results)?)?;
    Ok(())
}

pub fn load_result_json(path: impl AsRef<Path>) -> Result<RunResults> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> RunResults {
        let mut r = RunResults::new(serde_json::json!({"seed": 7, "model": "sinusoidal2d"}));
        r.variable_names = vec!["x1".into(), "x2".into()];
        r.methods.insert(
            "gpa".into(),
            MethodRecord {
                scores: vec![-1.0 / 6.0, 0.0],
                distribution: Some(DistributionRecord {
                    delta_max: 0.1833,
                    grid: vec![-0.1833, 0.0, 0.1833],
                    probs: vec![vec![0.2, 0.3, 0.5], vec![0.1, 0.8, 0.1]],
                }),
                variance: None,
            },
        );
        r.methods.insert(
            "lime".into(),
            MethodRecord {
                scores: vec![-std::f64::consts::TAU, 1e-300],
                ..Default::default()
            },
        );
        r
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = sample();
        emit_result_json(&r, &path).unwrap();
        let back = load_result_json(&path).unwrap();
        assert_eq!(back, r);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        assert!(text.contains("-1.6666666666666666e-1"));
    }

    #[test]
    fn deterministic_bytes() {
        assert_eq!(to_json_string(&sample()).unwrap(), to_json_string(&sample()).unwrap());
    }

    #[test]
    fn empty_results_are_valid() {
        let r = RunResults::new(serde_json::Value::Null);
        let text = to_json_string(&r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["methods"].as_object().unwrap().is_empty());
        assert_eq!(v["schema_version"], 1);
    }

    #[test]
    fn unwritable_path_is_an_error() {
        assert!(emit_result_json(&sample(), "/nonexistent-dir/x/r.json").is_err());
    }

    proptest! {
        #[test]
        fn any_finite_score_survives(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            let mut r = RunResults::new(serde_json::Value::Null);
            r.methods.insert("m".into(), MethodRecord { scores: vec![v], ..Default::default() });
            let back: RunResults = serde_json::from_str(&to_json_string(&r).unwrap()).unwrap();
            prop_assert_eq!(back.methods["m"].scores[0].to_bits(), v.to_bits());
        }
    }
}
