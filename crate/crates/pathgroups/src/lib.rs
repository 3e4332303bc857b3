//! Files, contact-log ingestion, experiment drivers and the command-line
//! front end around `pathgroups-core`.

pub mod cli;
pub mod contacts;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod run;

pub use contacts::{extract_paths_from_contacts, ContactEvent};
pub use error::{CliError, Result};
pub use run::{detect, replay, DetectConfig, RunReport};
