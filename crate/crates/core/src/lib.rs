//! A multi-agent system runtime whose agents, environment artifacts and
//! organisations are exposed as hypermedia REST resources.
//!
//! [`system::Mas`] owns the running system; [`rest::Api`] renders it over
//! HTTP-shaped requests; [`project`] boots a system from a project file.

pub mod agent;
pub mod directory;
pub mod environment;
pub mod error;
pub mod organisation;
pub mod project;
pub mod rest;
pub mod revision;
pub mod system;
pub mod term;

pub use error::{MasError, Result};
pub use system::Mas;
