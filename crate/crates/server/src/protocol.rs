//! Messages exchanged with clients. Every message is a JSON object with a
//! `type` tag and a `protocol_version`.

use serde::{Deserialize, Serialize};
use uuid::Uuid;
use vizketch_core::table::ColumnDesc;
use vizketch_core::SketchRequest;
use vizketch_engine::{DatasetRef, EngineError, LineageOp, Source};

use crate::render::Payload;

pub const PROTOCOL_VERSION: u32 = 1;

fn current() -> u32 {
    PROTOCOL_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Register {
        source: Source,
    },
    /// Filter or computed column over an existing dataset.
    Derive {
        op: LineageOp,
        #[serde(default)]
        seed: u64,
    },
    /// `tag` is echoed in `started` so a client can match replies to
    /// requests before it knows the execution id.
    Query {
        #[serde(default)]
        tag: Option<String>,
        dataset: String,
        request: SketchRequest,
    },
    Cancel {
        execution: Uuid,
    },
    ListSchema {
        dataset: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Registered {
        dataset: DatasetRef,
    },
    Started {
        tag: Option<String>,
        execution: Uuid,
        seed: u64,
    },
    Partial {
        execution: Uuid,
        payload: Payload,
        progress: f64,
        leaves_done: u64,
        leaves_total: u64,
    },
    Done {
        execution: Uuid,
    },
    Cancelled {
        execution: Uuid,
    },
    Error {
        execution: Option<Uuid>,
        tag: Option<String>,
        code: String,
        detail: String,
    },
    Schema {
        dataset: String,
        columns: Vec<ColumnDesc>,
    },
}

impl ServerMessage {
    pub fn error(execution: Option<Uuid>, tag: Option<String>, e: &EngineError) -> ServerMessage {
        ServerMessage::Error { execution, tag, code: e.code().into(), detail: e.detail() }
    }

    pub fn execution(&self) -> Option<Uuid> {
        match self {
            ServerMessage::Started { execution, .. }
            | ServerMessage::Partial { execution, .. }
            | ServerMessage::Done { execution }
            | ServerMessage::Cancelled { execution } => Some(*execution),
            ServerMessage::Error { execution, .. } => *execution,
            _ => None,
        }
    }

    /// Ends the stream of an execution.
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            ServerMessage::Done { .. } | ServerMessage::Cancelled { .. } | ServerMessage::Error { execution: Some(_), .. }
        )
    }
}

/// A message on the wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<M> {
    #[serde(default = "current")]
    pub protocol_version: u32,
    #[serde(flatten)]
    pub message: M,
}

pub fn encode(message: &ServerMessage) -> String {
    serde_json::to_string(&Envelope { protocol_version: PROTOCOL_VERSION, message }).expect("messages serialize")
}

/// Parses a client message; a missing version is taken as the current one.
pub fn decode(text: &str) -> Result<ClientMessage, EngineError> {
    let env: Envelope<ClientMessage> =
        serde_json::from_str(text).map_err(|e| EngineError::Protocol(format!("malformed message: {e}")))?;
    if env.protocol_version != PROTOCOL_VERSION {
        return Err(EngineError::Protocol(format!(
            "protocol version {} is not supported (expected {PROTOCOL_VERSION})",
            env.protocol_version
        )));
    }
    Ok(env.message)
}
