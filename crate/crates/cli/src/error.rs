use std::path::PathBuf;

use repgeo::geometry::GeometryError;
use repgeo::ingest::{ManifestError, TensorError};
use repgeo::profile::ProfileError;
use repgeo::synth::SynthError;
use repgeo::EstimateError;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID_INPUT: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{path}: {source}")]
    Tensor { path: PathBuf, source: TensorError },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    InputsChanged(String),
}

fn estimate_code(e: &EstimateError) -> i32 {
    match e {
        _ if e.is_degenerate_input() => EXIT_DEGENERATE,
        EstimateError::InvalidDiscardFraction(_) | EstimateError::InvalidFraction { .. } | EstimateError::NoSeeds => {
            EXIT_USAGE
        }
        _ => EXIT_INVALID_INPUT,
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Manifest(ManifestError::SubsampleSize { .. }) => "usage",
            CliError::Manifest(_) | CliError::Tensor { .. } => "invalid_input",
            CliError::Estimate(_) | CliError::Profile(ProfileError::Estimate { .. }) => "estimator",
            CliError::Profile(_) => "profile",
            CliError::Synth(_) => "synth",
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Csv { .. } => "csv",
            CliError::InputsChanged(_) => "inputs_changed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Synth(_) | CliError::Manifest(ManifestError::SubsampleSize { .. }) => EXIT_USAGE,
            CliError::Manifest(_) | CliError::Tensor { .. } | CliError::Json { .. } | CliError::InputsChanged(_) => {
                EXIT_INVALID_INPUT
            }
            CliError::Estimate(e) => estimate_code(e),
            CliError::Profile(p) => match p {
                ProfileError::Estimate { source, .. } => estimate_code(source),
                ProfileError::InsufficientSweep(_) | ProfileError::DuplicateBottleneck(_) => EXIT_USAGE,
                _ => EXIT_INVALID_INPUT,
            },
            CliError::Io { .. } | CliError::Csv { .. } => EXIT_FAILURE,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        let body = Body { kind: self.kind(), message: self.to_string(), exit_code: self.exit_code() };
        serde_json::to_string(&Wrapper { error: body }).expect("error bodies serialize")
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Estimate(EstimateError::Geometry(e))
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
