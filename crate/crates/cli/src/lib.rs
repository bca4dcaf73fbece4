//! JSON service and command-line front end for the trial resizing library.

pub mod api;
pub mod curves;
pub mod error;
pub mod format;
pub mod server;

pub use error::ApiError;
