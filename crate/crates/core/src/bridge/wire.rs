//! Line-delimited JSON messages exchanged with tracker adapters.
//!
//! Requests: `{"cmd":"init","frame":<path>,"box":[x,y,w,h]}`,
//! `{"cmd":"update","frame":<path>}`, `{"cmd":"quit"}`.
//! Responses: `{"status":"ok","box":[x,y,w,h]}`,
//! `{"status":"error","message":<text>}`.
//!
//! Encoding is canonical: fields in the order above and no whitespace.

use serde::{Deserialize, Serialize};

use crate::dataset::BoundingBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum Request {
    Init {
        frame: String,
        #[serde(rename = "box")]
        bbox: BoundingBox,
    },
    Update {
        frame: String,
    },
    Quit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Response {
    Ok {
        #[serde(rename = "box")]
        bbox: BoundingBox,
    },
    Error {
        message: String,
    },
}

/// Serializes a message without the trailing newline.
pub fn encode<T: Serialize>(message: &T) -> String {
    serde_json::to_string(message).expect("wire messages always serialize")
}

fn decode<T: for<'de> Deserialize<'de>>(line: &str) -> Result<T> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    serde_json::from_str(line)
        .map_err(|e| Error::Bridge(format!("malformed message `{line}`: {e}")))
}

pub fn decode_request(line: &str) -> Result<Request> {
    decode(line)
}

pub fn decode_response(line: &str) -> Result<Response> {
    decode(line)
}
