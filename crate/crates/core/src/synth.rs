//! Seeded synthetic chat corpora.
//!
//! Each room has a fixed roster that joins in the morning, exchanges a
//! variable number of messages, and partly leaves later; every event is written
//! to the log of every roster member, so consolidation has duplicates to
//! remove. Day-chat labels are drawn first (exactly `round(rate * n)`
//! responsive), then content:
//!
//! - filler words from a fixed chat vocabulary;
//! - signal words, planted in a responsive day chat with probability
//!   `signal_strength`, and as label-independent background in any day chat
//!   with probability [`BACKGROUND_SIGNAL_RATE`];
//! - numeric noise at `numeric_noise_rate` per token: prices (`76.5`),
//!   bid/offer pairs (`60.75/61.25`), tenors (`10y`), amounts (`200m`), times,
//!   full timestamps, and digits glued to words (`fix4`, `isdafix2`).
//!
//! All randomness comes from [`SeededRng`], so a config maps to byte-identical
//! output.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};

use crate::chatlog::{parse_log_str, render_log, ChatEvent, EventKind, ParseMode};
use crate::consolidate::{
    attach_labels, consolidate, doc_id, write_labels, DayChat, Label, LABELS_FILE,
};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const BACKGROUND_SIGNAL_RATE: f64 = 0.05;

pub const DEFAULT_SIGNAL_TOKENS: [&str; 10] = [
    "isdafix", "confm", "axed", "isda", "dael", "confirm", "agreed", "heap", "fixing", "confo",
];

const FILLER: [&str; 72] = [
    "morning", "thanks", "cheers", "lunch", "market", "looking", "offer", "bid", "level",
    "where", "what", "think", "today", "tomorrow", "yesterday", "call", "back", "later", "sure",
    "okay", "will", "have", "check", "with", "desk", "client", "size", "price", "mid", "curve",
    "spread", "swap", "bond", "euro", "sterling", "dollar", "yen", "rates", "vol", "flow",
    "busy", "quiet", "news", "data", "payrolls", "cpi", "auction", "supply", "demand", "trade",
    "book", "risk", "limit", "trader", "sales", "team", "meeting", "weekend", "coffee", "train",
    "home", "office", "email", "phone", "screen", "send", "need", "want", "good", "bad", "nice",
    "ok",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_rooms: usize,
    pub n_days: usize,
    pub participants_per_room: usize,
    /// Mean messages per day chat; actual counts are uniform on
    /// `[ceil(m/2), floor(3m/2)]`.
    pub messages_per_day: usize,
    pub responsive_rate: f64,
    pub signal_tokens: Vec<String>,
    pub signal_strength: f64,
    pub numeric_noise_rate: f64,
    pub start_date: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_rooms: 20,
            n_days: 100,
            participants_per_room: 4,
            messages_per_day: 20,
            responsive_rate: 0.1626,
            signal_tokens: DEFAULT_SIGNAL_TOKENS.iter().map(|s| s.to_string()).collect(),
            signal_strength: 0.9,
            numeric_noise_rate: 0.3,
            start_date: NaiveDate::from_ymd_opt(2007, 1, 1).unwrap(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_rooms == 0 || self.n_days == 0 {
            return err("n_rooms and n_days must be >= 1");
        }
        if self.participants_per_room == 0 {
            return err("participants_per_room must be >= 1");
        }
        if self.messages_per_day == 0 {
            return err("messages_per_day must be >= 1");
        }
        if !(self.responsive_rate > 0.0 && self.responsive_rate < 1.0) {
            return err("responsive_rate must be in (0, 1)");
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength <= 1.0) {
            return err("signal_strength must be in [0, 1]");
        }
        if !(self.numeric_noise_rate >= 0.0 && self.numeric_noise_rate <= 1.0) {
            return err("numeric_noise_rate must be in [0, 1]");
        }
        if self.signal_tokens.is_empty() && self.signal_strength > 0.0 {
            return err("signal_tokens must be non-empty when signal_strength > 0");
        }
        if self.signal_tokens.iter().any(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return err("signal tokens must be single non-empty words");
        }
        Ok(())
    }

    pub fn n_day_chats(&self) -> usize {
        self.n_rooms * self.n_days
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    /// `(file name, contents)` per participant, sorted by file name.
    pub logs: Vec<(String, String)>,
    /// `(doc_id, label)` sorted by doc_id.
    pub labels: Vec<(String, Label)>,
}

impl SynthCorpus {
    /// Writes `logs/{participant}.log` and `labels.csv` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let logs = dir.join("logs");
        fs::create_dir_all(&logs).map_err(|e| Error::io(&logs, e))?;
        for (name, body) in &self.logs {
            let p = logs.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        write_labels(
            &dir.join(LABELS_FILE),
            self.labels.iter().map(|(id, l)| (id.as_str(), *l)),
        )
    }

    pub fn label_map(&self) -> std::collections::HashMap<String, Label> {
        self.labels.iter().cloned().collect()
    }

    /// Parses every log, consolidates and attaches the labels.
    pub fn day_chats(&self, silence_threshold_minutes: i64) -> Result<Vec<DayChat>> {
        let mut events = Vec::new();
        for (_, body) in &self.logs {
            events.extend(parse_log_str(body, ParseMode::Strict)?.events);
        }
        let mut chats = consolidate(events, silence_threshold_minutes);
        attach_labels(&mut chats, &self.label_map());
        Ok(chats)
    }
}

struct Member {
    name: String,
    institution: String,
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: SeededRng,
}

impl Generator<'_> {
    fn number(&mut self) -> String {
        let r = &mut self.rng;
        match r.below(7) {
            0 => format!("{}.{}", r.range_inclusive(50, 150), r.below(100)),
            1 => {
                let bid = r.range_inclusive(50, 150);
                let cents = r.below(4) * 25;
                format!("{bid}.{cents:02}/{}.{:02}", bid + 1, (cents + 25) % 100)
            }
            2 => format!("{}y", r.range_inclusive(1, 30)),
            3 => format!("{}m", r.range_inclusive(1, 50) * 5),
            4 => format!("{:02}:{:02}", r.below(24), r.below(60)),
            5 => {
                let day = self.cfg.start_date + Duration::days(r.below(365) as i64);
                let t = NaiveTime::from_num_seconds_from_midnight_opt(r.below(86_400) as u32, 0)
                    .unwrap();
                format!("{}", NaiveDateTime::new(day, t).format("%Y-%m-%d %H:%M:%S"))
            }
            _ => format!("{}", r.below(1000)),
        }
    }

    /// A word, with digits glued on at the noise rate.
    fn word(&mut self, w: &str) -> String {
        if self.rng.chance(self.cfg.numeric_noise_rate) {
            format!("{w}{}", self.rng.range_inclusive(1, 99))
        } else {
            w.to_string()
        }
    }

    fn message(&mut self) -> Vec<String> {
        let len = self.rng.range_inclusive(3, 9);
        (0..len)
            .map(|_| {
                if self.rng.chance(self.cfg.numeric_noise_rate) {
                    if self.rng.chance(0.5) {
                        self.number()
                    } else {
                        let w = *self.rng.pick(&FILLER);
                        format!("{w}{}", self.rng.range_inclusive(1, 99))
                    }
                } else {
                    self.rng.pick(&FILLER).to_string()
                }
            })
            .collect()
    }

    fn plant_signal(&mut self, messages: &mut [Vec<String>]) {
        let count = self.rng.range_inclusive(1, 3);
        for _ in 0..count {
            let token = self.rng.pick(&self.cfg.signal_tokens).clone();
            let token = self.word(&token);
            let m = self.rng.below(messages.len() as u64) as usize;
            let pos = self.rng.below(messages[m].len() as u64 + 1) as usize;
            messages[m].insert(pos, token);
        }
    }

    fn day_chat(
        &mut self,
        room: &str,
        members: &[Member],
        date: NaiveDate,
        label: Label,
    ) -> Vec<ChatEvent> {
        let m = self.cfg.messages_per_day as u64;
        let n_messages = self.rng.range_inclusive(m.div_ceil(2), (3 * m / 2).max(m.div_ceil(2)));
        let mut messages: Vec<Vec<String>> = (0..n_messages).map(|_| self.message()).collect();
        if label.is_responsive() && self.rng.chance(self.cfg.signal_strength) {
            self.plant_signal(&mut messages);
        }
        if self.rng.chance(BACKGROUND_SIGNAL_RATE) && !self.cfg.signal_tokens.is_empty() {
            self.plant_signal(&mut messages);
        }

        let end_of_day = NaiveDateTime::new(date, NaiveTime::from_hms_opt(23, 59, 59).unwrap());
        let mut t = NaiveDateTime::new(date, NaiveTime::from_hms_opt(7, 0, 0).unwrap())
            + Duration::seconds(self.rng.below(2 * 3600) as i64);
        let advance = |rng: &mut SeededRng, t: &mut NaiveDateTime| {
            let secs = if rng.chance(0.05) {
                rng.range_inclusive(3600, 5 * 3600)
            } else {
                rng.range_inclusive(5, 900)
            };
            *t = (*t + Duration::seconds(secs as i64)).min(end_of_day);
        };

        let event = |t: NaiveDateTime, who: &Member, kind: EventKind, text: String| ChatEvent {
            timestamp: t,
            room_id: room.to_string(),
            participant: who.name.clone(),
            institution: who.institution.clone(),
            kind,
            text,
        };
        let mut events = Vec::new();
        for who in members {
            events.push(event(t, who, EventKind::Join, String::new()));
            advance(&mut self.rng, &mut t);
        }
        for words in messages {
            let who = self.rng.pick(members);
            events.push(event(t, who, EventKind::Message, words.join(" ")));
            advance(&mut self.rng, &mut t);
        }
        for who in members {
            if self.rng.chance(0.5) {
                events.push(event(t, who, EventKind::Leave, String::new()));
                advance(&mut self.rng, &mut t);
            }
        }
        events
    }
}

/// Generates per-participant chat logs and day-chat labels.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut g = Generator {
        cfg: config,
        rng: SeededRng::new(config.seed),
    };

    let n = config.n_day_chats();
    let n_responsive = (config.responsive_rate * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    g.rng.shuffle(&mut order);
    let mut labels = vec![Label::NotResponsive; n];
    for &i in &order[..n_responsive] {
        labels[i] = Label::Responsive;
    }

    // A shared pool so some participants sit in several rooms.
    let pool = (config.n_rooms * config.participants_per_room).div_ceil(2).max(config.participants_per_room);
    let n_institutions = (pool / 3).max(1);
    let rooms: Vec<(String, Vec<Member>)> = (0..config.n_rooms)
        .map(|r| {
            let mut ids: Vec<usize> = (0..pool).collect();
            g.rng.shuffle(&mut ids);
            ids.truncate(config.participants_per_room);
            ids.sort();
            let members = ids
                .into_iter()
                .map(|p| Member {
                    name: format!("PARTICIPANT-{}", p + 1),
                    institution: format!("INSTITUTION-{}", p % n_institutions + 1),
                })
                .collect();
            (format!("ROOM-{:03}", r + 1), members)
        })
        .collect();

    let mut per_participant: BTreeMap<String, Vec<ChatEvent>> = BTreeMap::new();
    let mut label_rows = Vec::with_capacity(n);
    for (r, (room, members)) in rooms.iter().enumerate() {
        for d in 0..config.n_days {
            let date = config.start_date + Duration::days(d as i64);
            let label = labels[r * config.n_days + d];
            let events = g.day_chat(room, members, date, label);
            for who in members {
                per_participant
                    .entry(who.name.clone())
                    .or_default()
                    .extend(events.iter().cloned());
            }
            label_rows.push((doc_id(room, date), label));
        }
    }
    label_rows.sort();

    let logs = per_participant
        .into_iter()
        .map(|(name, mut events)| {
            events.sort_by_key(|e| e.timestamp);
            (format!("{name}.log"), render_log(&events))
        })
        .collect();
    Ok(SynthCorpus {
        logs,
        labels: label_rows,
    })
}
