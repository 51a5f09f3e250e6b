//! Inter-node protocol: JSON messages behind a 4-byte big-endian length.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::lineage::Lineage;
use crate::node::{Description, ExecutionId, Job, Update};

/// Frames larger than this are rejected as corrupt.
pub const MAX_FRAME: usize = 256 << 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Message {
    Request { job: Box<Job> },
    Partial { execution: Uuid, update: Box<Update> },
    Done { execution: Uuid },
    Cancel { execution: ExecutionId },
    Error { execution: Option<Uuid>, code: String, reason: String },
    Ack,
    Describe { lineage: Lineage, materialize: bool },
    Described { description: Description },
    Reset,
}

pub fn write_frame(w: &mut impl Write, msg: &Message) -> io::Result<()> {
    let body = serde_json::to_vec(msg).map_err(io::Error::other)?;
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()
}

pub fn read_frame(r: &mut impl Read) -> io::Result<Message> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    serde_json::from_slice(&body).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        let id = ExecutionId::new(5);
        write_frame(&mut buf, &Message::Cancel { execution: id }).unwrap();
        write_frame(&mut buf, &Message::Ack).unwrap();
        let mut r = &buf[..];
        assert!(matches!(read_frame(&mut r).unwrap(), Message::Cancel { execution } if execution == id));
        assert!(matches!(read_frame(&mut r).unwrap(), Message::Ack));
        assert!(read_frame(&mut r).is_err());
    }

    #[test]
    fn tag_names() {
        let json = serde_json::to_string(&Message::Ack).unwrap();
        assert_eq!(json, r#"{"type":"ACK"}"#);
    }
}
