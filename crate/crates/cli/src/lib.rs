//! HTTP collector service and client for the `prosodyeval` binary.

pub mod client;
pub mod server;
