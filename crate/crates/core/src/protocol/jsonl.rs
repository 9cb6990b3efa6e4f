//! One JSON object per message.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Message, ProtocolError, Role, Transcript};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub session_id: String,
    pub round: u32,
    pub sender: String,
    pub kind: String,
    pub payload_hex: String,
}

impl Line {
    pub fn from_message(session_id: &str, m: &Message) -> Self {
        Self {
            session_id: session_id.to_string(),
            round: m.round,
            sender: m.sender.tag().to_string(),
            kind: m.kind.clone(),
            payload_hex: hex::encode(&m.payload),
        }
    }

    pub fn to_message(&self) -> Result<Message, ProtocolError> {
        let sender = Role::from_tag(&self.sender)
            .ok_or_else(|| ProtocolError::Decode(format!("unknown sender {:?}", self.sender)))?;
        let payload = hex::decode(&self.payload_hex).map_err(|e| ProtocolError::Decode(e.to_string()))?;
        Ok(Message { round: self.round, sender, kind: self.kind.clone(), payload })
    }
}

pub fn write_transcript<W: Write>(out: &mut W, t: &Transcript) -> std::io::Result<()> {
    for m in t.messages() {
        let line = serde_json::to_string(&Line::from_message(&t.session_id, m)).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_lines<R: BufRead>(input: R) -> Result<Vec<Line>, ProtocolError> {
    let mut lines = Vec::new();
    for raw in input.lines() {
        let raw = raw.map_err(|e| ProtocolError::Decode(e.to_string()))?;
        if raw.trim().is_empty() {
            continue;
        }
        lines.push(serde_json::from_str(&raw).map_err(|e| ProtocolError::Decode(e.to_string()))?);
    }
    Ok(lines)
}
