//! Numeric tagging and removal.
//!
//! A number is a maximal run of ASCII digits, optionally continued by
//! `.digits` groups: `76.5` is one number, `60.75/61.25` and `08:09:40` are
//! several. Replacements are padded with spaces; afterwards runs of spaces
//! collapse and each line is trimmed. Line structure is preserved.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;

use crate::consolidate::DayChat;
use crate::error::Error;

pub const NUM_TAG: &str = "[NUM]";
pub const TIMESTAMP_TAG: &str = "[TIMESTAMP]";

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[0-9]+(?:\.[0-9]+)*").unwrap());
static TIMESTAMP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[0-9]{4}-[0-9]{2}-[0-9]{2} [0-9]{2}:[0-9]{2}:[0-9]{2}").unwrap()
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    Raw,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transform {
    Untagged,
    NumTag,
    NumAndTimestampTags,
    DigitsStripped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TextVariant {
    pub base: Base,
    pub transform: Transform,
}

impl Base {
    pub const ALL: [Base; 2] = [Base::Raw, Base::Normalized];

    pub fn name(self) -> &'static str {
        match self {
            Base::Raw => "raw",
            Base::Normalized => "norm",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Base::Raw => "Raw",
            Base::Normalized => "Norm",
        }
    }
}

impl Transform {
    pub const ALL: [Transform; 4] = [
        Transform::Untagged,
        Transform::NumTag,
        Transform::NumAndTimestampTags,
        Transform::DigitsStripped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Transform::Untagged => "none",
            Transform::NumTag => "num",
            Transform::NumAndTimestampTags => "num-ts",
            Transform::DigitsStripped => "strip",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Transform::Untagged => "Untagged",
            Transform::NumTag => "\"[NUM]\" Tag",
            Transform::NumAndTimestampTags => "\"[NUM]\" and \"[TIMESTAMP]\" Tags",
            Transform::DigitsStripped => "Digits removed",
        }
    }

    pub fn apply(self, text: &str) -> String {
        match self {
            Transform::Untagged => text.to_string(),
            Transform::NumTag => tag_numbers(text),
            Transform::NumAndTimestampTags => tag_timestamps_then_numbers(text),
            Transform::DigitsStripped => strip_digits(text),
        }
    }
}

impl FromStr for Base {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Base::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown base {s:?} (expected raw|norm)")))
    }
}

impl FromStr for Transform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Transform::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            Error::invalid(format!("unknown transform {s:?} (expected none|num|num-ts|strip)"))
        })
    }
}

impl TextVariant {
    pub fn new(base: Base, transform: Transform) -> Self {
        TextVariant { base, transform }
    }

    /// Directory-safe name, e.g. `raw-num`.
    pub fn slug(self) -> String {
        format!("{}-{}", self.base.name(), self.transform.name())
    }
}

impl fmt::Display for TextVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.base.name(), self.transform.name())
    }
}

/// Parses `base:transform`, e.g. `raw:num-ts`.
impl FromStr for TextVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let (b, t) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("variant {s:?} is not base:transform")))?;
        Ok(TextVariant::new(b.trim().parse()?, t.trim().parse()?))
    }
}

fn squeeze_spaces(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mut first = true;
        for word in line.split(' ').filter(|w| !w.is_empty()) {
            if !first {
                out.push(' ');
            }
            out.push_str(word);
            first = false;
        }
    }
    out
}

/// Replaces every number with ` [NUM] `.
pub fn tag_numbers(text: &str) -> String {
    squeeze_spaces(&NUMBER.replace_all(text, " [NUM] "))
}

/// Replaces full `YYYY-MM-DD HH:MM:SS` stamps with ` [TIMESTAMP] `, then tags
/// the remaining numbers.
pub fn tag_timestamps_then_numbers(text: &str) -> String {
    let stamped = TIMESTAMP.replace_all(text, " [TIMESTAMP] ");
    tag_numbers(&stamped)
}

/// Like [`tag_numbers`] with an empty replacement; separators between
/// numbers survive.
pub fn strip_digits(text: &str) -> String {
    squeeze_spaces(&NUMBER.replace_all(text, " "))
}

const EVENT_SUFFIXES: [&str; 2] = [" has joined the room", " has left the room"];
const SAYS: &str = " Says";

/// Splits a transcript line into timestamp, speaker header and remainder.
fn split_speaker_line(line: &str) -> Option<(&str, &str, &str)> {
    let ts_len = 19;
    if line.len() <= ts_len || !line.is_char_boundary(ts_len) {
        return None;
    }
    let (ts, rest) = line.split_at(ts_len);
    if !TIMESTAMP.is_match(ts) || !rest.starts_with(' ') {
        return None;
    }
    let body = &rest[1..];
    for suffix in EVENT_SUFFIXES {
        if let Some(header) = body.strip_suffix(suffix) {
            return Some((ts, header, suffix));
        }
    }
    let at = body
        .match_indices(SAYS)
        .map(|(i, _)| i)
        .find(|&i| matches!(body.as_bytes().get(i + SAYS.len()), None | Some(b' ')))?;
    Some((ts, &body[..at], &body[at..]))
}

/// Applies `transform` to a raw transcript, leaving the `participant,
/// institution` header of each event line untouched.
pub fn transform_transcript(text: &str, transform: Transform) -> String {
    if transform == Transform::Untagged {
        return text.to_string();
    }
    text.split('\n')
        .map(|line| match split_speaker_line(line) {
            Some((ts, header, rest)) if !header.trim().is_empty() => {
                let head = transform.apply(ts);
                let tail = transform.apply(rest);
                [head.as_str(), header, tail.as_str()]
                    .into_iter()
                    .filter(|p| !p.is_empty())
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            _ => transform.apply(line),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Raw text keeps speaker identifiers intact; normalized text is transformed
/// as a whole.
pub fn apply_variant(day_chat: &DayChat, variant: TextVariant) -> String {
    match variant.base {
        Base::Raw => transform_transcript(&day_chat.raw_text, variant.transform),
        Base::Normalized => variant.transform.apply(&day_chat.normalized_text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn num_tag_examples() {
        assert_eq!(
            tag_numbers("Says hearing 200m 11y nestle usa issue - cs"),
            "Says hearing [NUM] m [NUM] y nestle usa issue - cs"
        );
        assert_eq!(tag_numbers("2y 60.75/61.25"), "[NUM] y [NUM] / [NUM]");
        assert_eq!(
            tag_numbers("2007-01-05 08:09:40"),
            "[NUM] - [NUM] - [NUM] [NUM] : [NUM] : [NUM]"
        );
        assert_eq!(tag_numbers("no digits here"), "no digits here");
        assert_eq!(tag_numbers("10y 76.5 78"), "[NUM] y [NUM] [NUM]");
    }

    #[test]
    fn timestamp_examples() {
        let line = "2007-01-05 12:57:49 PARTICIPANT-2, INSTITUTION-2 Says 10y 76.5 78";
        assert_eq!(
            transform_transcript(line, Transform::NumAndTimestampTags),
            "[TIMESTAMP] PARTICIPANT-2, INSTITUTION-2 Says [NUM] y [NUM] [NUM]"
        );
        assert_eq!(
            tag_timestamps_then_numbers(line),
            "[TIMESTAMP] PARTICIPANT- [NUM] , INSTITUTION- [NUM] Says [NUM] y [NUM] [NUM]"
        );
        assert_eq!(
            tag_timestamps_then_numbers("**** 4 hours and 13 minutes since previous line ****"),
            "**** [NUM] hours and [NUM] minutes since previous line ****"
        );
        assert_eq!(tag_timestamps_then_numbers("abc"), "abc");
        // Lone times and dates are plain numbers.
        assert_eq!(tag_timestamps_then_numbers("12:35"), "[NUM] : [NUM]");
        assert_eq!(
            tag_timestamps_then_numbers("2007-01-05"),
            "[NUM] - [NUM] - [NUM]"
        );
    }

    #[test]
    fn strip_examples() {
        assert_eq!(strip_digits("2007-01-05 08:09:40"), "- - : :");
        assert_eq!(
            strip_digits("Says hearing 200m 11y nestle usa issue - cs"),
            "Says hearing m y nestle usa issue - cs"
        );
        assert_eq!(strip_digits(""), "");
        assert_eq!(strip_digits("Says 2y 60.75/61.25"), "Says y /");
    }

    #[test]
    fn transcript_headers_survive() {
        let text = "2007-01-05 08:09:40 PARTICIPANT-1, INSTITUTION-1 has left the room\n\
                    *****\n\
                    **** 4 hours and 13 minutes since previous line ****\n\
                    2007-01-05 12:35:04 PARTICIPANT-2, INSTITUTION-2 Says 2y 60.75/61.25";
        assert_eq!(
            transform_transcript(text, Transform::DigitsStripped),
            "- - : : PARTICIPANT-1, INSTITUTION-1 has left the room\n\
             *****\n\
             **** hours and minutes since previous line ****\n\
             - - : : PARTICIPANT-2, INSTITUTION-2 Says y /"
        );
        assert_eq!(
            transform_transcript(text, Transform::NumTag).lines().nth(3).unwrap(),
            "[NUM] - [NUM] - [NUM] [NUM] : [NUM] : [NUM] PARTICIPANT-2, INSTITUTION-2 Says [NUM] y [NUM] / [NUM]"
        );
        // Lines without the transcript shape are transformed whole.
        assert_eq!(transform_transcript("P1 Says 5", Transform::NumTag), "P [NUM] Says [NUM]");
        assert_eq!(transform_transcript(text, Transform::Untagged), text);
    }

    #[test]
    fn variant_names() {
        let v: TextVariant = "norm:num-ts".parse().unwrap();
        assert_eq!(v, TextVariant::new(Base::Normalized, Transform::NumAndTimestampTags));
        assert_eq!(v.to_string(), "norm:num-ts");
        assert_eq!(v.slug(), "norm-num-ts");
        assert!("raw".parse::<TextVariant>().is_err());
        assert!("raw:tagged".parse::<TextVariant>().is_err());
        assert!("full:none".parse::<TextVariant>().is_err());
    }

    fn text() -> impl Strategy<Value = String> {
        // No square brackets: pre-existing tags would make the strip/tag relation ill-posed.
        "[a-zA-Z0-9 .:/\\-\n,]{0,80}"
    }

    fn delete_num_tags(s: &str) -> String {
        squeeze_spaces(&s.replace(NUM_TAG, " "))
    }

    proptest! {
        #[test]
        fn no_digits_survive(t in text()) {
            for out in [tag_numbers(&t), tag_timestamps_then_numbers(&t), strip_digits(&t)] {
                prop_assert!(!out.bytes().any(|b| b.is_ascii_digit()), "{:?}", out);
            }
        }

        #[test]
        fn strip_equals_tag_minus_tags(t in text()) {
            prop_assert_eq!(strip_digits(&t), delete_num_tags(&tag_numbers(&t)));
        }

        #[test]
        fn idempotent(t in text()) {
            let a = tag_numbers(&t);
            prop_assert_eq!(tag_numbers(&a), a.clone());
            let b = tag_timestamps_then_numbers(&t);
            prop_assert_eq!(tag_timestamps_then_numbers(&b), b.clone());
            let c = strip_digits(&t);
            prop_assert_eq!(strip_digits(&c), c.clone());
        }

        #[test]
        fn transcript_digits_only_in_headers(
            lines in prop::collection::vec(("[A-Z]{1,6}-[0-9]{1,2}", "[a-z0-9 .:/]{0,30}"), 0..6),
        ) {
            let text: Vec<String> = lines
                .iter()
                .map(|(who, msg)| format!("2007-01-05 12:00:00 {who}, {who} Says {msg}"))
                .collect();
            let text = text.join("\n");
            for t in [Transform::NumTag, Transform::NumAndTimestampTags, Transform::DigitsStripped] {
                let mut out = transform_transcript(&text, t);
                for (who, _) in &lines {
                    out = out.replace(&format!("{who}, {who}"), "");
                }
                prop_assert!(!out.bytes().any(|b| b.is_ascii_digit()), "{:?}", out);
            }
        }

        #[test]
        fn line_count_preserved(t in text()) {
            let n = t.split('\n').count();
            prop_assert_eq!(tag_numbers(&t).split('\n').count(), n);
            prop_assert_eq!(tag_timestamps_then_numbers(&t).split('\n').count(), n);
            prop_assert_eq!(strip_digits(&t).split('\n').count(), n);
        }
    }
}
