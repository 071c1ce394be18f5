//! File formats, named objects, reports, the invariant suite and the
//! command-line interface on top of [`hamreeb_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod io;
pub mod registry;
pub mod report;
pub mod suite;

pub use hamreeb_core as core;

/// Bad input from the user: an unknown name, a malformed file or an invalid flag.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

impl InputError {
    pub fn new(msg: impl Into<String>) -> Self {
        InputError(msg.into())
    }

    pub fn unknown(what: &str, name: &str, known: &[&str]) -> Self {
        InputError(format!("unknown {what} {name:?} (known: {})", known.join(", ")))
    }
}
