//! Tokenization, information-gain vocabulary selection and normalized-frequency
//! vectors.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::consolidate::Label;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_TOKEN_LENGTH: usize = 3;
pub const DEFAULT_TOP_N: usize = 20_000;

/// Tags that are kept whole and exempt from the length filter.
const ATOMIC_TAGS: [&str; 2] = ["[num]", "[timestamp]"];

/// Feature-extraction settings. Stemming is never applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub min_token_length: usize,
    pub top_n: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_token_length: DEFAULT_MIN_TOKEN_LENGTH,
            top_n: DEFAULT_TOP_N,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_length < 1 {
            return Err(Error::Config("min_token_length must be >= 1".into()));
        }
        if self.top_n < 1 {
            return Err(Error::Config("top_n must be >= 1".into()));
        }
        Ok(())
    }
}

/// Lowercases, splits on whitespace and strips non-alphanumeric characters
/// from token edges. `[num]` and `[timestamp]` pass through untouched.
pub fn tokenize(text: &str, min_len: usize) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split_whitespace()
        .filter_map(|raw| {
            if ATOMIC_TAGS.contains(&raw) {
                return Some(raw.to_string());
            }
            let t = raw.trim_matches(|c: char| !c.is_alphanumeric());
            (!t.is_empty() && t.chars().count() >= min_len).then(|| t.to_string())
        })
        .collect()
}

fn entropy2(a: f64, b: f64) -> f64 {
    let n = a + b;
    if n == 0.0 {
        return 0.0;
    }
    [a, b]
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let p = x / n;
            -p * p.log2()
        })
        .sum()
}

/// Presence-based information gain (bits) of a token over the binary class.
///
/// Counts are documents: positive/negative with the token present, then
/// positive/negative with it absent.
pub fn information_gain(
    n_pos_present: u64,
    n_neg_present: u64,
    n_pos_absent: u64,
    n_neg_absent: u64,
) -> f64 {
    let (pp, np, pa, na) = (
        n_pos_present as f64,
        n_neg_present as f64,
        n_pos_absent as f64,
        n_neg_absent as f64,
    );
    let total = pp + np + pa + na;
    if total == 0.0 {
        return 0.0;
    }
    let present = pp + np;
    let absent = pa + na;
    // Written so that swapping present/absent or the classes is bit-exact.
    let conditional = (present * entropy2(pp, np) + absent * entropy2(pa, na)) / total;
    let ig = entropy2(pp + pa, np + na) - conditional;
    // Rounding can leave tiny negatives for independent counts.
    ig.max(0.0)
}

/// Distinct count tuples can have mathematically equal gain that differs in
/// the last bits; ranking compares gains rounded to 2^-40.
fn rank_key(ig: f64) -> f64 {
    const SCALE: f64 = (1u64 << 40) as f64;
    (ig * SCALE).round()
}

/// Truncated SHA-256 of a vocabulary's token sequence.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fingerprint(pub [u8; 16]);

impl Fingerprint {
    pub fn of_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut h = Sha256::new();
        for t in tokens {
            h.update(t.as_ref().as_bytes());
            h.update(b"\n");
        }
        let digest = h.finalize();
        let mut out = [0u8; 16];
        out.copy_from_slice(&digest[..16]);
        Fingerprint(out)
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 32 || !s.is_ascii() {
            return None;
        }
        let mut out = [0u8; 16];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(Fingerprint(out))
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.to_hex())
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Selected tokens in rank order (descending information gain, ties by
/// token). A token's index is its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_frequency: Vec<u64>,
    ig_score: Vec<f64>,
    index: HashMap<String, usize>,
    fingerprint: Fingerprint,
}

impl Vocabulary {
    pub fn from_parts(tokens: Vec<String>, doc_frequency: Vec<u64>, ig_score: Vec<f64>) -> Result<Self> {
        if tokens.len() != doc_frequency.len() || tokens.len() != ig_score.len() {
            return Err(Error::invalid("vocabulary columns differ in length"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary token {t:?}")));
            }
        }
        let fingerprint = Fingerprint::of_tokens(&tokens);
        Ok(Vocabulary {
            tokens,
            doc_frequency,
            ig_score,
            index,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_frequency(&self) -> &[u64] {
        &self.doc_frequency
    }

    pub fn ig_scores(&self) -> &[f64] {
        &self.ig_score
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// CSV `token,doc_frequency,ig_score` in rank order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["token", "doc_frequency", "ig_score"])?;
        for i in 0..self.len() {
            w.write_record([
                self.tokens[i].clone(),
                self.doc_frequency[i].to_string(),
                format!("{:.16e}", self.ig_score[i]),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        if r.headers()?.iter().collect::<Vec<_>>() != ["token", "doc_frequency", "ig_score"] {
            return Err(Error::invalid(format!(
                "{}: expected header token,doc_frequency,ig_score",
                path.display()
            )));
        }
        let (mut tokens, mut df, mut ig) = (Vec::new(), Vec::new(), Vec::new());
        for row in r.records() {
            let row = row?;
            let bad = |what: &str| Error::invalid(format!("{}: bad {what} {:?}", path.display(), row));
            tokens.push(row[0].to_string());
            df.push(row[1].parse().map_err(|_| bad("doc_frequency"))?);
            ig.push(row[2].parse().map_err(|_| bad("ig_score"))?);
        }
        Vocabulary::from_parts(tokens, df, ig)
    }
}

/// Ranks every token seen in the training documents by information gain and
/// keeps the top `config.top_n`.
pub fn build_vocabulary<S: AsRef<str>>(
    training_docs: &[Vec<S>],
    labels: &[Label],
    config: &FeatureConfig,
) -> Result<Vocabulary> {
    config.validate()?;
    if training_docs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} documents but {} labels",
            training_docs.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|l| l.is_responsive()).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass(format!(
            "training set has {n_pos} responsive and {n_neg} not responsive documents"
        )));
    }

    let mut presence: HashMap<&str, (u64, u64)> = HashMap::new();
    for (doc, label) in training_docs.iter().zip(labels) {
        let distinct: HashSet<&str> = doc.iter().map(|t| t.as_ref()).collect();
        for t in distinct {
            let c = presence.entry(t).or_default();
            if label.is_responsive() {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
    }

    let mut ranked: Vec<(&str, u64, f64)> = presence
        .into_iter()
        .map(|(t, (pp, np))| (t, pp + np, information_gain(pp, np, n_pos - pp, n_neg - np)))
        .collect();
    ranked.sort_by(|a, b| rank_key(b.2).total_cmp(&rank_key(a.2)).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(config.top_n);

    let tokens = ranked.iter().map(|r| r.0.to_string()).collect();
    let df = ranked.iter().map(|r| r.1).collect();
    let ig = ranked.iter().map(|r| r.2).collect();
    Vocabulary::from_parts(tokens, df, ig)
}

/// A document as normalized token frequencies over one vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    /// `(token index, frequency)` sorted by index.
    pub entries: Vec<(usize, f64)>,
    /// Tokens surviving the length filter, in or out of the vocabulary.
    pub retained_token_count: usize,
    pub fingerprint: Fingerprint,
}

impl SparseVector {
    pub fn new(mut entries: Vec<(usize, f64)>, retained_token_count: usize, fingerprint: Fingerprint) -> Self {
        entries.sort_by_key(|e| e.0);
        SparseVector {
            entries,
            retained_token_count,
            fingerprint,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn vectorize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector {
    let total = tokens.len();
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let entries = counts
        .into_iter()
        .map(|(i, c)| (i, c as f64 / total as f64))
        .collect();
    SparseVector::new(entries, total, vocab.fingerprint())
}
