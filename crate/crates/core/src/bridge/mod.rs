//! Runs third-party trackers as child processes speaking a line-delimited
//! JSON protocol over stdin/stdout.

mod process;
mod wire;

pub use process::{BridgeConfig, ExternalTracker, SEED_ENV};
pub use wire::{decode_request, decode_response, encode, Request, Response};
