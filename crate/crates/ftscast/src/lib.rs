//! File formats, configuration, model artifacts and the pipeline stages
//! behind the `ftscast` command line, on top of [`ftscast_core`].

pub mod artifact;
pub mod config;
pub mod dates;
mod error;
pub mod fsutil;
pub mod output;
pub mod pipeline;
pub mod table;

pub use error::{Error, ErrorRecord, Result};
