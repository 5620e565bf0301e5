//! Command line front end for `obstacle-core`: JSON run configs, CSV/JSON
//! artifacts and run manifests.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;

pub use config::{ConfigError, RunConfig};
pub use manifest::{Manifest, Status};
