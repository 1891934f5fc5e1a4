//! Command-line front end: configuration, execution and plotting.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;

pub use config::{parse_config, parse_count, Command, Params, RunConfig};
pub use error::{CliError, CliResult};
pub use plot::{emit_plot, PlotStyle, Series};
pub use run::{execute, resolve, RunReport};
