use std::path::{Path, PathBuf};

use gsrelight::fit::{FitError, NormalError};
use gsrelight::imageio::ImageIoError;
use gsrelight::lighting::LightingError;
use gsrelight::raster::RenderError;
use gsrelight::scene::{AssetError, CameraError, MeshError};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;
pub const EXIT_VALIDATION: i32 = 6;
pub const EXIT_DIVERGENCE: i32 = 7;

/// Failure classes of a subcommand, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Outputs were written but an internal check failed.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Malformed(_) => EXIT_MALFORMED,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<AssetError> for CliError {
    fn from(e: AssetError) -> Self {
        match e {
            AssetError::Io { path, source } => CliError::Io {
                path: path.into(),
                source,
            },
            AssetError::InvariantViolation { .. } | AssetError::Empty => CliError::Invariant(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<ImageIoError> for CliError {
    fn from(e: ImageIoError) -> Self {
        match e {
            ImageIoError::Io { path, source } => CliError::Io {
                path: path.into(),
                source,
            },
            // `image` folds a missing file into its own error type
            ImageIoError::Png { ref path, .. } if !Path::new(path).exists() => CliError::Io {
                path: path.into(),
                source: std::io::ErrorKind::NotFound.into(),
            },
            other => CliError::Malformed(other.to_string()),
        }
    }
}

impl From<LightingError> for CliError {
    fn from(e: LightingError) -> Self {
        match e {
            LightingError::Io(io) => io.into(),
            LightingError::Parse { .. }
            | LightingError::UnknownPreset(_)
            | LightingError::UnknownMode(_)
            | LightingError::InvalidConfig(_) => CliError::Malformed(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<CameraError> for CliError {
    fn from(e: CameraError) -> Self {
        match e {
            CameraError::Parse(_) => CliError::Malformed(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::Io { path, source } => CliError::Io {
                path: path.into(),
                source,
            },
            MeshError::Parse { .. } => CliError::Malformed(e.to_string()),
            MeshError::Empty | MeshError::Degenerate(_) => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<NormalError> for CliError {
    fn from(e: NormalError) -> Self {
        match e {
            NormalError::Mesh(m) => m.into(),
            other => CliError::Malformed(other.to_string()),
        }
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        CliError::Malformed(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Divergence { .. } => CliError::Divergence(e.to_string()),
            FitError::InvalidConfig(_) => CliError::Malformed(e.to_string()),
            FitError::Asset(a) => a.into(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Malformed(e.to_string())
    }
}
