//! L2-regularized logistic regression over sparse normalized-frequency vectors.
//!
//! The objective is the mean negative log-likelihood plus `lambda/2 * |w|^2`;
//! the intercept is not penalized. Training is full-batch gradient descent
//! from zero with a backtracking (halving) line search under the Armijo
//! condition, so the objective decreases strictly at every accepted step.
//!
//! Per-document work runs on the rayon pool in fixed-size chunks whose partial
//! sums are combined in chunk order. The result does not depend on the number
//! of threads.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::consolidate::Label;
use crate::error::{Error, Result};
use crate::features::{Fingerprint, SparseVector, Vocabulary};

pub const INTERCEPT_TOKEN: &str = "<Intercept>";
const FORMAT_VERSION: &str = "1";
const CHUNK: usize = 512;
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_iterations: usize,
    /// Stop once the largest absolute gradient component falls below this.
    pub tolerance: f64,
    /// Step tried first at every iteration before halving.
    pub initial_step: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 1e-4,
            max_iterations: 500,
            tolerance: 1e-6,
            initial_step: 4.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_lambda >= 0.0) || !self.l2_lambda.is_finite() {
            return Err(Error::Config(format!("l2_lambda must be >= 0, got {}", self.l2_lambda)));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return Err(Error::Config(format!(
                "initial_step must be > 0, got {}",
                self.initial_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LRModel {
    pub tokens: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub vocab_fingerprint: Fingerprint,
    pub train_config: TrainConfig,
    pub iterations_run: usize,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Training data bound to a vocabulary size and penalty.
#[derive(Debug)]
pub struct Problem<'a> {
    rows: &'a [SparseVector],
    targets: Vec<f64>,
    n_features: usize,
    lambda: f64,
}

impl<'a> Problem<'a> {
    pub fn new(rows: &'a [SparseVector], labels: &[Label], n_features: usize, lambda: f64) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} vectors but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_pos = labels.iter().filter(|l| l.is_responsive()).count();
        if n_pos == 0 || n_pos == labels.len() {
            return Err(Error::SingleClass(format!(
                "{n_pos} of {} training labels are responsive",
                labels.len()
            )));
        }
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.fingerprint != first.fingerprint) {
                return Err(Error::invalid("training vectors come from different vocabularies"));
            }
        }
        for (d, row) in rows.iter().enumerate() {
            for &(i, x) in &row.entries {
                if !x.is_finite() {
                    return Err(Error::NonFinite(format!("document {d}, feature {i}: {x}")));
                }
                if i >= n_features {
                    return Err(Error::invalid(format!(
                        "document {d}: feature index {i} outside vocabulary of {n_features}"
                    )));
                }
            }
        }
        Ok(Problem {
            rows,
            targets: labels.iter().map(|l| if l.is_responsive() { 1.0 } else { 0.0 }).collect(),
            n_features,
            lambda,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `b + X w` for every document.
    pub fn margins(&self, weights: &[f64], intercept: f64) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|r| intercept + r.entries.iter().map(|&(i, x)| weights[i] * x).sum::<f64>())
            .collect()
    }

    fn mean_nll(&self, margins: &[f64]) -> f64 {
        let partial: Vec<f64> = margins
            .par_chunks(CHUNK)
            .zip(self.targets.par_chunks(CHUNK))
            .map(|(z, y)| z.iter().zip(y).map(|(&z, &y)| softplus(z) - y * z).sum())
            .collect();
        partial.iter().sum::<f64>() / self.len() as f64
    }

    fn objective_from(&self, margins: &[f64], weight_sq: f64) -> f64 {
        self.mean_nll(margins) + 0.5 * self.lambda * weight_sq
    }

    pub fn objective(&self, weights: &[f64], intercept: f64) -> f64 {
        self.objective_from(&self.margins(weights, intercept), dot(weights, weights))
    }

    fn gradient_from(&self, margins: &[f64], weights: &[f64]) -> (Vec<f64>, f64) {
        let rows = self.rows;
        let partial: Vec<(Vec<f64>, f64)> = (0..self.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|idx| {
                let mut g = vec![0.0; self.n_features];
                let mut gb = 0.0;
                for &d in idx {
                    let r = sigmoid(margins[d]) - self.targets[d];
                    gb += r;
                    for &(i, x) in &rows[d].entries {
                        g[i] += r * x;
                    }
                }
                (g, gb)
            })
            .collect();
        let n = self.len() as f64;
        let mut grad = vec![0.0; self.n_features];
        let mut grad_b = 0.0;
        for (g, gb) in partial {
            for (acc, v) in grad.iter_mut().zip(g) {
                *acc += v;
            }
            grad_b += gb;
        }
        for (g, w) in grad.iter_mut().zip(weights) {
            *g = *g / n + self.lambda * w;
        }
        (grad, grad_b / n)
    }

    /// Diagonal of the objective's Hessian bound at the logistic maximum
    /// curvature 1/4: `(x_j^2 / 4n + lambda, 1/4)`.
    fn curvature_bound(&self) -> (Vec<f64>, f64) {
        let n = self.len() as f64;
        let mut h = vec![0.0; self.n_features];
        for row in self.rows {
            for &(i, x) in &row.entries {
                h[i] += x * x;
            }
        }
        for v in h.iter_mut() {
            *v = 0.25 * *v / n + self.lambda;
        }
        (h, 0.25)
    }

    /// Analytic gradient `(dJ/dw, dJ/db)`.
    pub fn gradient(&self, weights: &[f64], intercept: f64) -> (Vec<f64>, f64) {
        self.gradient_from(&self.margins(weights, intercept), weights)
    }
}

/// Objective value after each accepted step, starting with the value at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub objective: Vec<f64>,
    pub converged: bool,
}

pub fn train(
    vectors: &[SparseVector],
    labels: &[Label],
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<LRModel> {
    train_with_trace(vectors, labels, vocab, config).map(|(m, _)| m)
}

pub fn train_with_trace(
    vectors: &[SparseVector],
    labels: &[Label],
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<(LRModel, TrainTrace)> {
    config.validate()?;
    if let Some(v) = vectors.iter().find(|v| v.fingerprint != vocab.fingerprint()) {
        return Err(Error::FingerprintMismatch {
            model: vocab.fingerprint().to_hex(),
            vector: v.fingerprint.to_hex(),
        });
    }
    let problem = Problem::new(vectors, labels, vocab.len(), config.l2_lambda)?;
    let (weights, intercept, trace, iterations) = descend(&problem, config);
    Ok((
        LRModel {
            tokens: vocab.tokens().to_vec(),
            weights,
            intercept,
            vocab_fingerprint: vocab.fingerprint(),
            train_config: *config,
            iterations_run: iterations,
        },
        trace,
    ))
}

/// Diagonally preconditioned gradient descent: direction `-D^-1 g` with `D`
/// the fixed curvature bound, step halved from `initial_step` until the
/// Armijo condition holds. Normalized frequencies are small and vary by
/// orders of magnitude between tokens; the scaling keeps rare tokens from
/// needing tens of thousands of plain gradient steps.
fn descend(problem: &Problem<'_>, config: &TrainConfig) -> (Vec<f64>, f64, TrainTrace, usize) {
    let (h, hb) = problem.curvature_bound();
    let mut w = vec![0.0; problem.n_features];
    let mut b = 0.0;
    let mut margins = problem.margins(&w, b);
    let mut w_sq = 0.0;
    let mut f = problem.objective_from(&margins, w_sq);
    let mut trace = TrainTrace {
        objective: vec![f],
        converged: false,
    };
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let (g, gb) = problem.gradient_from(&margins, &w);
        let g_max = g.iter().fold(gb.abs(), |m, v| m.max(v.abs()));
        if g_max < config.tolerance {
            trace.converged = true;
            break;
        }
        let d: Vec<f64> = g
            .iter()
            .zip(&h)
            .map(|(&gi, &hi)| if hi > 0.0 { gi / hi } else { 0.0 })
            .collect();
        let db = gb / hb;
        let decrease = dot(&g, &d) + gb * db;
        let w_dot_d = dot(&w, &d);
        let d_sq = dot(&d, &d);
        // Margin change per unit step along -d.
        let direction = problem.margins(&d, db);

        let mut step = config.initial_step;
        let accepted = loop {
            let trial: Vec<f64> = margins
                .iter()
                .zip(&direction)
                .map(|(z, dz)| z - step * dz)
                .collect();
            let trial_w_sq = w_sq - 2.0 * step * w_dot_d + step * step * d_sq;
            let f_trial = problem.objective_from(&trial, trial_w_sq);
            if f_trial <= f - ARMIJO_C * step * decrease && f_trial < f {
                break Some((trial, f_trial));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((trial, f_trial)) = accepted else {
            // No representable decrease left.
            trace.converged = true;
            break;
        };
        for (wi, di) in w.iter_mut().zip(&d) {
            *wi -= step * di;
        }
        b -= step * db;
        margins = trial;
        w_sq = dot(&w, &w);
        f = f_trial;
        trace.objective.push(f);
        iterations += 1;
    }
    (w, b, trace, iterations)
}

impl LRModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn linear(&self, vector: &SparseVector) -> Result<f64> {
        if vector.fingerprint != self.vocab_fingerprint {
            return Err(Error::FingerprintMismatch {
                model: self.vocab_fingerprint.to_hex(),
                vector: vector.fingerprint.to_hex(),
            });
        }
        let mut sorted;
        let mut entries = &vector.entries[..];
        if !entries.is_sorted_by_key(|e| e.0) {
            sorted = entries.to_vec();
            sorted.sort_by_key(|e| e.0);
            entries = &sorted;
        }
        let mut z = self.intercept;
        for &(i, x) in entries {
            let w = self.weights.get(i).ok_or_else(|| {
                Error::invalid(format!("feature index {i} outside model of {}", self.n_features()))
            })?;
            z += w * x;
        }
        Ok(z)
    }

    /// Responsiveness probability of a document.
    pub fn score(&self, vector: &SparseVector) -> Result<f64> {
        self.linear(vector).map(sigmoid)
    }
}

pub fn score(model: &LRModel, vector: &SparseVector) -> Result<f64> {
    model.score(vector)
}

/// Tokens ranked by descending absolute coefficient, the intercept competing
/// as `<Intercept>`. Equal magnitudes order by token.
pub fn top_features(model: &LRModel, k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(&str, f64)> = model
        .tokens
        .iter()
        .map(String::as_str)
        .zip(model.weights.iter().copied())
        .chain(std::iter::once((INTERCEPT_TOKEN, model.intercept)))
        .collect();
    all.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(b.0)));
    all.into_iter()
        .take(k)
        .map(|(t, c)| (t.to_string(), c))
        .collect()
}

/// Two-column "Token / LR model coefficient" table.
pub fn format_top_features(features: &[(String, f64)]) -> String {
    let width = features
        .iter()
        .map(|f| f.0.chars().count())
        .max()
        .unwrap_or(0)
        .max("Token".len());
    let mut out = format!("{:<width$}  LR model coefficient\n", "Token");
    for (t, c) in features {
        let _ = writeln!(out, "{t:<width$}  {c:.2}");
    }
    out
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Text model file; see the crate README for the layout.
pub fn serialize(model: &LRModel) -> String {
    let mut body = String::new();
    let c = &model.train_config;
    let _ = writeln!(body, "version {FORMAT_VERSION}");
    let _ = writeln!(body, "lambda {}", fmt_f64(c.l2_lambda));
    let _ = writeln!(body, "max_iterations {}", c.max_iterations);
    let _ = writeln!(body, "tolerance {}", fmt_f64(c.tolerance));
    let _ = writeln!(body, "initial_step {}", fmt_f64(c.initial_step));
    let _ = writeln!(body, "iterations_run {}", model.iterations_run);
    let _ = writeln!(body, "vocab_fingerprint {}", model.vocab_fingerprint);
    let _ = writeln!(body, "intercept {}", fmt_f64(model.intercept));
    for (t, w) in model.tokens.iter().zip(&model.weights) {
        let _ = writeln!(body, "{t}\t{}", fmt_f64(*w));
    }
    let checksum = hex_sha256(body.as_bytes());
    let _ = writeln!(body, "checksum {checksum}");
    body
}

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn header<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::ModelFormat(format!("missing {key} line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::ModelFormat(format!("expected {key:?}, found {line:?}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::ModelFormat(format!("bad {key} value {s:?}")))
}

pub fn deserialize(text: &str) -> Result<LRModel> {
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| Error::ModelFormat("truncated file".into()))?;
    let (body, tail) = text.split_at(body_end);
    let expected = header(Some(tail.trim_end_matches('\n')), "checksum")
        .map_err(|_| Error::ModelFormat("missing checksum line (truncated file?)".into()))?;
    if hex_sha256(body.as_bytes()) != expected {
        return Err(Error::ModelFormat("checksum mismatch".into()));
    }

    let mut lines = body.lines();
    let version = header(lines.next(), "version")?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version:?}")));
    }
    let train_config = TrainConfig {
        l2_lambda: parse_num(header(lines.next(), "lambda")?, "lambda")?,
        max_iterations: parse_num(header(lines.next(), "max_iterations")?, "max_iterations")?,
        tolerance: parse_num(header(lines.next(), "tolerance")?, "tolerance")?,
        initial_step: parse_num(header(lines.next(), "initial_step")?, "initial_step")?,
    };
    let iterations_run = parse_num(header(lines.next(), "iterations_run")?, "iterations_run")?;
    let fp_hex = header(lines.next(), "vocab_fingerprint")?;
    let vocab_fingerprint = Fingerprint::from_hex(fp_hex)
        .ok_or_else(|| Error::ModelFormat(format!("bad fingerprint {fp_hex:?}")))?;
    let intercept = parse_num(header(lines.next(), "intercept")?, "intercept")?;

    let mut tokens = Vec::new();
    let mut weights = Vec::new();
    for line in lines {
        let (t, w) = line
            .split_once('\t')
            .ok_or_else(|| Error::ModelFormat(format!("bad coefficient line {line:?}")))?;
        tokens.push(t.to_string());
        weights.push(parse_num::<f64>(w, "coefficient")?);
    }
    if Fingerprint::of_tokens(&tokens) != vocab_fingerprint {
        return Err(Error::ModelFormat("token list does not match vocab_fingerprint".into()));
    }
    Ok(LRModel {
        tokens,
        weights,
        intercept,
        vocab_fingerprint,
        train_config,
        iterations_run,
    })
}

pub fn save(model: &LRModel, path: &Path) -> Result<()> {
    std::fs::write(path, serialize(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<LRModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    deserialize(&text)
}
