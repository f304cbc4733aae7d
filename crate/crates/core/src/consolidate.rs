//! Day-chat consolidation.
//!
//! Events from several participants' logs are merged, de-duplicated and cut
//! into one document per room and calendar date. Each [`DayChat`] carries two
//! renderings: the raw transcript (with attributions, join/leave lines and
//! silence markers) and the normalized text (message bodies only).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::chatlog::{ChatEvent, EventKind};
use crate::error::{Error, Result};

pub const DEFAULT_SILENCE_MINUTES: i64 = 60;
pub const RAW_DIR: &str = "raw";
pub const NORMALIZED_DIR: &str = "normalized";
pub const LABELS_FILE: &str = "labels.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Responsive,
    NotResponsive,
}

impl Label {
    pub fn is_responsive(self) -> bool {
        self == Label::Responsive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Responsive => "responsive",
            Label::NotResponsive => "not_responsive",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "responsive" => Ok(Label::Responsive),
            "not_responsive" => Ok(Label::NotResponsive),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayChat {
    pub doc_id: String,
    pub room_id: String,
    pub date: NaiveDate,
    /// Empty when the document was loaded from a corpus directory.
    pub events: Vec<ChatEvent>,
    pub raw_text: String,
    pub normalized_text: String,
    pub raw_size_bytes: usize,
    pub norm_size_bytes: usize,
    pub label: Option<Label>,
}

pub fn doc_id(room_id: &str, date: NaiveDate) -> String {
    format!("{}_{}", room_id, date.format("%Y-%m-%d"))
}

impl DayChat {
    /// Builds a day chat from the events of one room and date.
    pub fn from_events(
        room_id: &str,
        date: NaiveDate,
        mut events: Vec<ChatEvent>,
        silence_threshold_minutes: i64,
    ) -> Self {
        events.sort_by(event_order);
        let raw_text = render_raw(&events, silence_threshold_minutes);
        let normalized_text = render_normalized(&events);
        Self::from_texts(room_id, date, events, raw_text, normalized_text)
    }

    fn from_texts(
        room_id: &str,
        date: NaiveDate,
        events: Vec<ChatEvent>,
        raw_text: String,
        normalized_text: String,
    ) -> Self {
        DayChat {
            doc_id: doc_id(room_id, date),
            room_id: room_id.to_string(),
            date,
            events,
            raw_size_bytes: raw_text.len(),
            norm_size_bytes: normalized_text.len(),
            raw_text,
            normalized_text,
            label: None,
        }
    }
}

fn event_order(a: &ChatEvent, b: &ChatEvent) -> std::cmp::Ordering {
    (
        a.timestamp,
        a.kind,
        &a.participant,
        &a.text,
        &a.institution,
        &a.room_id,
    )
        .cmp(&(
            b.timestamp,
            b.kind,
            &b.participant,
            &b.text,
            &b.institution,
            &b.room_id,
        ))
}

/// Keeps one copy of every distinct event and sorts by
/// (timestamp, kind, participant, text).
///
/// Identity is the whole event, room included, so messages relayed through
/// several participants' logs collapse while same-second messages from
/// different participants survive.
pub fn deduplicate(mut events: Vec<ChatEvent>) -> Vec<ChatEvent> {
    events.sort_by(event_order);
    events.dedup();
    events
}

/// Partitions events into day chats ordered by (room_id, date).
pub fn group_day_chats(events: Vec<ChatEvent>, silence_threshold_minutes: i64) -> Vec<DayChat> {
    let mut groups: BTreeMap<(String, NaiveDate), Vec<ChatEvent>> = BTreeMap::new();
    for e in events {
        groups
            .entry((e.room_id.clone(), e.date()))
            .or_default()
            .push(e);
    }
    groups
        .into_iter()
        .map(|((room, date), evs)| DayChat::from_events(&room, date, evs, silence_threshold_minutes))
        .collect()
}

/// Convenience: deduplicate then group.
pub fn consolidate(events: Vec<ChatEvent>, silence_threshold_minutes: i64) -> Vec<DayChat> {
    group_day_chats(deduplicate(events), silence_threshold_minutes)
}

fn raw_line(e: &ChatEvent) -> String {
    let ts = e.timestamp_string();
    match e.kind {
        EventKind::Message => format!("{ts} {}, {} Says {}", e.participant, e.institution, e.text),
        EventKind::Join => format!("{ts} {}, {} has joined the room", e.participant, e.institution),
        EventKind::Leave => format!("{ts} {}, {} has left the room", e.participant, e.institution),
    }
}

/// Raw transcript: one line per event with silence markers between events
/// separated by at least `silence_threshold_minutes`.
pub fn render_raw(events: &[ChatEvent], silence_threshold_minutes: i64) -> String {
    let threshold = silence_threshold_minutes * 60;
    let mut lines: Vec<String> = Vec::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        if i > 0 {
            let gap = (e.timestamp - events[i - 1].timestamp).num_seconds();
            if gap >= threshold {
                let hours = gap / 3600;
                let minutes = (gap % 3600) / 60;
                lines.push("*****".to_string());
                lines.push(format!(
                    "**** {hours} hours and {minutes} minutes since previous line ****"
                ));
                lines.push("*****".to_string());
            }
        }
        lines.push(raw_line(e));
    }
    lines.join("\n")
}

/// Message bodies only, one per line.
pub fn render_normalized(events: &[ChatEvent]) -> String {
    events
        .iter()
        .filter(|e| e.kind == EventKind::Message)
        .map(|e| e.text.as_str())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Keeps documents strictly larger than `min_bytes` in every checked rendering.
pub fn filter_by_size(
    corpus: Vec<DayChat>,
    min_bytes: usize,
    check_raw: bool,
    check_norm: bool,
) -> Vec<DayChat> {
    corpus
        .into_iter()
        .filter(|d| {
            (!check_raw || d.raw_size_bytes > min_bytes)
                && (!check_norm || d.norm_size_bytes > min_bytes)
        })
        .collect()
}

pub fn attach_labels(corpus: &mut [DayChat], labels: &HashMap<String, Label>) {
    for d in corpus {
        d.label = labels.get(&d.doc_id).copied();
    }
}

pub fn read_labels(path: &Path) -> Result<HashMap<String, Label>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["doc_id", "label"] {
        return Err(Error::invalid(format!(
            "{}: expected header doc_id,label",
            path.display()
        )));
    }
    let mut out = HashMap::new();
    for row in reader.records() {
        let row = row?;
        out.insert(row[0].to_string(), row[1].parse()?);
    }
    Ok(out)
}

pub fn write_labels<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = (&'a str, Label)>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["doc_id", "label"])?;
    for (id, label) in rows {
        w.write_record([id, label.as_str()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn check_file_stem(doc_id: &str) -> Result<()> {
    if doc_id.is_empty() || doc_id.contains(['/', '\\']) || doc_id.starts_with('.') {
        return Err(Error::invalid(format!(
            "doc_id {doc_id:?} cannot be used as a file name"
        )));
    }
    Ok(())
}

/// Writes `raw/{doc_id}.txt`, `normalized/{doc_id}.txt` and, when any
/// document is labeled, `labels.csv`.
pub fn write_corpus(dir: &Path, corpus: &[DayChat]) -> Result<()> {
    let raw_dir = dir.join(RAW_DIR);
    let norm_dir = dir.join(NORMALIZED_DIR);
    for d in [&raw_dir, &norm_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for doc in corpus {
        check_file_stem(&doc.doc_id)?;
        let name = format!("{}.txt", doc.doc_id);
        let p = raw_dir.join(&name);
        fs::write(&p, &doc.raw_text).map_err(|e| Error::io(&p, e))?;
        let p = norm_dir.join(&name);
        fs::write(&p, &doc.normalized_text).map_err(|e| Error::io(&p, e))?;
    }
    if corpus.iter().any(|d| d.label.is_some()) {
        write_labels(
            &dir.join(LABELS_FILE),
            corpus
                .iter()
                .filter_map(|d| d.label.map(|l| (d.doc_id.as_str(), l))),
        )?;
    }
    Ok(())
}

fn split_doc_id(doc_id: &str) -> Option<(&str, NaiveDate)> {
    let (room, date) = doc_id.rsplit_once('_')?;
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").ok()?;
    Some((room, date))
}

/// Loads a corpus directory written by [`write_corpus`]. Documents come back
/// ordered by doc_id, with empty event lists and labels from `labels.csv`
/// when present.
pub fn read_corpus(dir: &Path) -> Result<Vec<DayChat>> {
    let raw_dir = dir.join(RAW_DIR);
    let norm_dir = dir.join(NORMALIZED_DIR);
    let mut ids = Vec::new();
    for entry in fs::read_dir(&raw_dir).map_err(|e| Error::io(&raw_dir, e))? {
        let entry = entry.map_err(|e| Error::io(&raw_dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".txt") {
            ids.push(stem.to_string());
        }
    }
    ids.sort();
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.exists() {
        read_labels(&labels_path)?
    } else {
        HashMap::new()
    };
    let mut corpus = Vec::with_capacity(ids.len());
    for id in ids {
        let (room, date) = split_doc_id(&id)
            .ok_or_else(|| Error::invalid(format!("file name {id:?} is not ROOM_YYYY-MM-DD")))?;
        let rp = raw_dir.join(format!("{id}.txt"));
        let np = norm_dir.join(format!("{id}.txt"));
        let raw = fs::read_to_string(&rp).map_err(|e| Error::io(&rp, e))?;
        let norm = fs::read_to_string(&np).map_err(|e| Error::io(&np, e))?;
        let mut doc = DayChat::from_texts(room, date, Vec::new(), raw, norm);
        doc.label = labels.get(&id).copied();
        corpus.push(doc);
    }
    Ok(corpus)
}
