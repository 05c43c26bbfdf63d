//! File formats, analysis pipeline, experiment server and command-line
//! front end built on [`ospgr_core`].

pub mod cli;
pub mod error;
pub mod format;
pub mod http;
pub mod pipeline;
pub mod report;
pub mod service;

pub use error::{Error, Result};
