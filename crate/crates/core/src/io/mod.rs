//! Datasets, standardization, result files and plots.

mod dataset;
mod results;
mod svg;

pub use dataset::{load_csv, load_reference_csv, standardize, Provenance, Sample, Standardization, TestSet};
pub use results::{
    emit_result_json, load_result_json, to_json_string, AnomalyRecord, DistributionRecord, MethodRecord, RunResults,
    SCHEMA_VERSION,
};
pub use svg::{distribution_svg, emit_distribution_svg, emit_litmus_svg, litmus_svg, normalize_row};
