//! Sweep engine and command-line front end for `infotape`.
//!
//! Every subcommand builds a [`table::Table`] (or a JSON report), encodes it
//! as CSV or JSON and, when `--out` is given, writes it atomically with a
//! sibling `<file>.manifest.json` recording the resolved parameters and
//! SHA-256 checksums.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod sweep;
pub mod table;
pub mod validate;

pub use cli::{run, run_args, Cli, Command};
pub use config::{Format, ResolvedParams, Scale, Settings};
pub use error::{CliError, Result};
pub use output::RunManifest;
pub use sweep::{Axis, AxisName, SweepSpec};
pub use table::{Cell, Table};
