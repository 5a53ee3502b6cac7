//! HTTP interface to a fluid document store, plus a blocking client for it.

pub mod api;
pub mod client;
pub mod config;
pub mod error;
pub mod server;
pub mod wire;

pub use api::router;
pub use client::{Client, ClientError};
pub use config::ServiceConfig;
pub use error::{map_error, ApiError, ErrorBody};
pub use server::{open_store, serve, spawn, ServeError, ServerHandle};
