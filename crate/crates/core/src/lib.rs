//! Discovery of incompressible hyperelastic material models by fingerprint
//! matching.
//!
//! The workflow has two phases. Offline, [`database`] runs displacement-
//! controlled plane-stress simulations of a standardized notched biaxial
//! test ([`specimen`], [`fem`]) over a catalog of hyperelastic models
//! ([`constitutive`]) and stores the resulting force/displacement
//! fingerprints ([`fingerprint`]). Online, [`recognition`] compares a
//! measured fingerprint ([`ingest`]) against the database with cosine or
//! Euclidean similarity and rescales the matched model's homogeneity
//! parameters to the measured force level. No continuous optimization is
//! involved anywhere.

pub mod constitutive;
pub mod database;
pub mod error;
pub mod fem;
pub mod fingerprint;
pub mod ingest;
pub mod kinematics;
pub mod recognition;
pub mod specimen;
pub mod util;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
