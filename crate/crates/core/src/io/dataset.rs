use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub x: Vec<T>,
    pub y: T,
}

impl<T> Sample<T> {
    pub fn new(x: Vec<T>, y: T) -> Self {
        Self { x, y }
    }
}

/// Where the standardization statistics came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    UserSupplied,
    TestSetEstimated,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardization<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
    pub provenance: Provenance,
}

/// Observed test samples `(x^t, y^t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet<T> {
    pub samples: Vec<Sample<T>>,
    pub variable_names: Vec<String>,
    pub standardization: Standardization<T>,
}

impl<T: Scalar> TestSet<T> {
    /// Builds an unstandardized test set with names `x1..xM`.
    pub fn new(samples: Vec<Sample<T>>) -> Result<Self> {
        let m = samples.first().map_or(0, |s| s.x.len());
        let names = (1..=m).map(|i| format!("x{i}")).collect();
        Self::with_names(samples, names)
    }

    pub fn with_names(samples: Vec<Sample<T>>, variable_names: Vec<String>) -> Result<Self> {
        let m = variable_names.len();
        for s in &samples {
            if s.x.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: s.x.len(),
                });
            }
        }
        Ok(Self {
            samples,
            variable_names,
            standardization: Standardization {
                mean: vec![T::zero(); m],
                std: vec![T::one(); m],
                provenance: Provenance::None,
            },
        })
    }

    /// Single-sample convenience constructor.
    pub fn single(x: Vec<T>, y: T) -> Self {
        Self::new(vec![Sample::new(x, y)]).expect("one sample is always consistent")
    }

    pub fn dimension(&self) -> usize {
        self.variable_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Subset by sample index, keeping names and standardization.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfig(format!("sample index {i} out of range (N = {})", self.len())))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            samples,
            variable_names: self.variable_names.clone(),
            standardization: self.standardization.clone(),
        })
    }

    /// Maps a standardized point back to raw units.
    pub fn to_raw(&self, x: &[T]) -> Vec<T> {
        let s = &self.standardization;
        x.iter()
            .zip(s.mean.iter().zip(&s.std))
            .map(|(&v, (&m, &sd))| v * sd + m)
            .collect()
    }

    /// Maps a perturbation from standardized to raw units (`delta * std`).
    pub fn delta_to_raw(&self, delta: &[T]) -> Vec<T> {
        delta
            .iter()
            .zip(&self.standardization.std)
            .map(|(&d, &sd)| d * sd)
            .collect()
    }
}

/// Shifts and scales every `x` column. `stats` are per-variable `(mean, std)`;
/// without them the statistics are estimated from the test set itself
/// (population standard deviation). `y` is left untouched.
pub fn standardize<T: Scalar>(ts: &TestSet<T>, stats: Option<&[(T, T)]>) -> Result<TestSet<T>> {
    let m = ts.dimension();
    let (mean, std, provenance) = match stats {
        Some(st) => {
            if st.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: st.len(),
                });
            }
            (
                st.iter().map(|s| s.0).collect::<Vec<_>>(),
                st.iter().map(|s| s.1).collect::<Vec<_>>(),
                Provenance::UserSupplied,
            )
        }
        None => {
            if ts.is_empty() {
                return Err(Error::InvalidConfig(
                    "cannot estimate statistics from an empty test set".into(),
                ));
            }
            let n = T::of(ts.len() as f64);
            let mean: Vec<T> = (0..m)
                .map(|j| ts.samples.iter().map(|s| s.x[j]).sum::<T>() / n)
                .collect();
            let std = (0..m)
                .map(|j| {
                    let var = ts.samples.iter().map(|s| (s.x[j] - mean[j]).powi(2)).sum::<T>() / n;
                    var.sqrt()
                })
                .collect();
            (mean, std, Provenance::TestSetEstimated)
        }
    };
    for (j, sd) in std.iter().enumerate() {
        if !(*sd > T::zero()) || !sd.is_finite() {
            return Err(Error::ZeroVariance {
                index: j,
                name: ts.variable_names[j].clone(),
            });
        }
    }
    // undo any earlier standardization first
    let samples = ts
        .samples
        .iter()
        .map(|s| {
            let raw = ts.to_raw(&s.x);
            let x = raw
                .iter()
                .zip(mean.iter().zip(&std))
                .map(|(&v, (&mu, &sd))| (v - mu) / sd)
                .collect();
            Sample::new(x, s.y)
        })
        .collect();
    Ok(TestSet {
        samples,
        variable_names: ts.variable_names.clone(),
        standardization: Standardization { mean, std, provenance },
    })
}

/// Reads a comma-separated file whose header names the columns and whose last
/// column is the target `y`.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<TestSet<T>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::Parse {
            path: display,
            row: 1,
            column: 1,
            message: "need at least one feature column and a target column".into(),
        });
    }
    if header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::Parse {
            path: display,
            row: 1,
            column: 1,
            message: "missing header row".into(),
        });
    }
    let width = header.len();
    let mut samples = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 2;
        if record.len() != width {
            return Err(Error::Parse {
                path: display,
                row,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: display.clone(),
                row,
                column: c + 1,
                message: format!("non-numeric cell `{cell}`"),
            })?;
            values.push(T::of(v));
        }
        let y = values.pop().expect("width >= 2");
        samples.push(Sample::new(values, y));
    }
    TestSet::with_names(samples, header[..width - 1].to_vec())
}

/// Reads a reference set: every column of a headed CSV is a feature.
pub fn load_reference_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<Vec<T>>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().map(T::of).map_err(|_| Error::Parse {
                    path: display.clone(),
                    row: r + 2,
                    column: c + 1,
                    message: format!("non-numeric cell `{cell}`"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
