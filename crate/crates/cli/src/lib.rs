//! Command-line and HTTP front end for the `semifactual` engine.

pub mod cli;
pub mod error;
pub mod server;
pub mod session;

pub use error::{AppError, ErrorKind};
