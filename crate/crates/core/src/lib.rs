//! Exact Weil–Petersson volumes and the numeric checks built on them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod geodesics;
pub mod graded;
pub mod quad;
pub mod real;
pub mod spectral;
pub mod strata;
pub mod thin;
pub mod volumes;

pub use error::{Error, Result};
pub use graded::{numeric_eval, zeta_weight, GradedRational, SymPolynomial};
pub use real::Real;
pub use volumes::{TauKey, VolumeCache};
