//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide error enumeration.
///
/// Variants are grouped by pipeline stage so that callers (notably the CLI)
/// can map them onto coarse failure classes: protocol mismatches, input
/// schema problems, and solver/mesh failures.
#[derive(Debug, Error)]
pub enum Error {
    /// Deformation state is kinematically inadmissible (non-positive Jacobian).
    #[error("invalid kinematics: {0}")]
    InvalidKinematics(String),

    /// A numeric routine failed (degenerate eigenproblem, singular system).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Parameter vector does not match the model signature.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Parameter/deformation combination outside a model's domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mesh generation produced an invalid mesh.
    #[error("mesh error: {0}")]
    Mesh(String),

    /// Experiment descriptor is internally inconsistent.
    #[error("descriptor error: {0}")]
    Descriptor(String),

    /// Fingerprint block lengths disagree with the layout contract.
    #[error("layout error: {0}")]
    Layout(String),

    /// A fingerprint block has zero norm (all-failed simulation or empty data).
    #[error("degenerate fingerprint: {0}")]
    DegenerateFingerprint(String),

    /// Invalid argument to an operation.
    #[error("argument error: {0}")]
    Argument(String),

    /// Fingerprint and database belong to different experimental protocols.
    #[error("protocol mismatch: expected descriptor hash {expected}, found {found}")]
    ProtocolMismatch { expected: String, found: String },

    /// No database entry is eligible for the requested match.
    #[error("no eligible database entries for the requested truncation")]
    EmptyCandidates,

    /// A serialized file failed to parse.
    #[error("parse error at byte offset {offset} (line {line}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        message: String,
    },

    /// An input CSV violates its schema.
    #[error("schema error in {file} (row {row}): {message}")]
    Schema {
        file: String,
        row: usize,
        message: String,
    },

    /// Sampling point falls in a region without valid measurement data.
    #[error("measurement dropout: {0}")]
    Dropout(String),

    /// Force interpolation target outside the measured range.
    #[error("extrapolation refused: {0}")]
    Extrapolation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
