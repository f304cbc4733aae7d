//! Chat-log records.
//!
//! One record per line, six tab-separated fields:
//!
//! ```text
//! timestamp \t room_id \t participant \t institution \t kind \t text
//! ```
//!
//! `timestamp` is exactly `YYYY-MM-DD HH:MM:SS` (naive local time) and `kind` is
//! one of `says`, `joined` or `left`. Join and leave records carry an empty text
//! field.

use std::fmt;
use std::io::BufRead;

use chrono::{NaiveDate, NaiveDateTime};

use crate::error::{Error, LineError, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Kind of a chat-log line. The derived order (join, message, leave) is the
/// order used to sort events sharing a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Join,
    Message,
    Leave,
}

impl EventKind {
    pub fn as_token(self) -> &'static str {
        match self {
            EventKind::Join => "joined",
            EventKind::Message => "says",
            EventKind::Leave => "left",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "joined" => Some(EventKind::Join),
            "says" => Some(EventKind::Message),
            "left" => Some(EventKind::Leave),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChatEvent {
    pub timestamp: NaiveDateTime,
    pub room_id: String,
    pub participant: String,
    pub institution: String,
    pub kind: EventKind,
    pub text: String,
}

impl ChatEvent {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date()
    }

    pub fn timestamp_string(&self) -> String {
        self.timestamp.format(TIMESTAMP_FORMAT).to_string()
    }

    /// Renders the event back into its chat-log record (without line feed).
    pub fn to_record(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.timestamp_string(),
            self.room_id,
            self.participant,
            self.institution,
            self.kind.as_token(),
            self.text
        )
    }
}

impl fmt::Display for ChatEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

/// What to do with a malformed line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and report them in [`ParsedLog::skipped`].
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLog {
    pub events: Vec<ChatEvent>,
    pub skipped: Vec<LineError>,
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    // chrono accepts unpadded fields; only the canonical form is valid here.
    if s.len() != 19 {
        return None;
    }
    let ts = NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).ok()?;
    (ts.format(TIMESTAMP_FORMAT).to_string() == s).then_some(ts)
}

/// Parses a single record. `line` is the 1-based line number used in errors.
pub fn parse_line(record: &str, line: usize) -> Result<ChatEvent, LineError> {
    let err = |reason: String| LineError { line, reason };
    let fields: Vec<&str> = record.split('\t').collect();
    if fields.len() < 6 {
        return Err(err(format!(
            "missing field: expected 6 tab-separated fields, found {}",
            fields.len()
        )));
    }
    if fields.len() > 6 {
        return Err(err(format!(
            "too many fields: expected 6, found {}",
            fields.len()
        )));
    }
    let timestamp =
        parse_timestamp(fields[0]).ok_or_else(|| err(format!("bad timestamp {:?}", fields[0])))?;
    for (name, value) in [
        ("room_id", fields[1]),
        ("participant", fields[2]),
        ("institution", fields[3]),
    ] {
        if value.is_empty() {
            return Err(err(format!("missing field: empty {name}")));
        }
    }
    let kind =
        EventKind::from_token(fields[4]).ok_or_else(|| err(format!("unknown kind {:?}", fields[4])))?;
    let text = fields[5];
    if kind != EventKind::Message && !text.is_empty() {
        return Err(err(format!("{} record carries text", kind.as_token())));
    }
    Ok(ChatEvent {
        timestamp,
        room_id: fields[1].to_string(),
        participant: fields[2].to_string(),
        institution: fields[3].to_string(),
        kind,
        text: text.to_string(),
    })
}

/// Parses a chat-log stream, one event per well-formed line, in file order.
pub fn parse_log<R: BufRead>(reader: R, mode: ParseMode) -> Result<ParsedLog> {
    let mut out = ParsedLog::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<chat log stream>", e))?;
        match parse_line(&line, idx + 1) {
            Ok(event) => out.events.push(event),
            Err(e) if mode == ParseMode::Lenient => out.skipped.push(e),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

pub fn parse_log_str(input: &str, mode: ParseMode) -> Result<ParsedLog> {
    parse_log(input.as_bytes(), mode)
}

/// Renders events as a chat-log file body, one LF-terminated record each.
pub fn render_log(events: &[ChatEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_record());
        out.push('\n');
    }
    out
}
