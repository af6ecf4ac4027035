//! Command-line experiments: configuration, drivers and on-disk reports.

mod config;
mod output;
mod run;

pub use config::{
    validate, CurveSpec, DataSpec, Diagnostics, ExperimentConfig, ExperimentKind, GymCheck,
    MaterialSpec, ValidatedConfig,
};
pub use output::{write_atomic, Cell, Csv, RunReport, Verdict};
pub use run::{run, validate_only};

use crate::error::Error;

/// 1 for malformed input, 2 for a scientific failure.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ConfigInvalid { .. }
        | Error::InvalidCurve(_)
        | Error::InvalidParameter(_)
        | Error::InvalidTensor(_)
        | Error::InvalidBounds { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::GridTooCoarse(_)
        | Error::NodeCountMismatch { .. }
        | Error::Io(_)
        | Error::Json(_) => 1,
        _ => 2,
    }
}
