//! Dataset splitting and the variant experiment grid.
//!
//! An experiment filters the labeled corpus by size, splits it once, and then
//! runs every requested text variant through tokenize, vocabulary, train,
//! score and evaluate. Variants share the split, so cells are directly
//! comparable. Cells run in parallel; the report is assembled afterwards in
//! variant order.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::consolidate::{filter_by_size, DayChat, Label};
use crate::error::{Error, Result};
use crate::eval::{EvalReport, ScoredItem, ScoredSet, DEFAULT_AUROC_INTERVALS};
use crate::features::{build_vocabulary, tokenize, vectorize, FeatureConfig};
use crate::model::{format_top_features, top_features, train_with_trace, TrainConfig};
use crate::rng::SeededRng;
use crate::textprep::{apply_variant, Base, TextVariant, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// `fraction` of the corpus goes to validation.
    FractionValidation,
    /// `train_count` documents go to training.
    FixedTrainCount,
    /// `train_count` documents go to validation.
    Inverted,
}

impl SplitMode {
    pub fn name(self) -> &'static str {
        match self {
            SplitMode::FractionValidation => "fraction",
            SplitMode::FixedTrainCount => "fixed",
            SplitMode::Inverted => "inverted",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fraction" => Ok(SplitMode::FractionValidation),
            "fixed" => Ok(SplitMode::FixedTrainCount),
            "inverted" => Ok(SplitMode::Inverted),
            other => Err(Error::Config(format!(
                "unknown split mode {other:?} (expected fraction|fixed|inverted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub fraction: f64,
    pub train_count: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            mode: SplitMode::FixedTrainCount,
            fraction: 0.14,
            train_count: 5000,
            seed: 1,
        }
    }
}

/// Keeps split draws independent of a synthetic corpus built from the same seed.
const SPLIT_STREAM: u32 = 1;

/// Seeded uniform partition into `(train, validation)`, each side in doc_id
/// order.
pub fn split<'a>(corpus: &'a [DayChat], spec: &SplitSpec) -> Result<(Vec<&'a DayChat>, Vec<&'a DayChat>)> {
    let n = corpus.len();
    let mut order: Vec<&DayChat> = corpus.iter().collect();
    order.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let (first, first_is_train) = match spec.mode {
        SplitMode::FractionValidation => {
            if !(spec.fraction > 0.0 && spec.fraction < 1.0) {
                return Err(Error::Config(format!("split fraction {} outside (0, 1)", spec.fraction)));
            }
            (((spec.fraction * n as f64).round()) as usize, false)
        }
        SplitMode::FixedTrainCount => (spec.train_count, true),
        SplitMode::Inverted => (spec.train_count, false),
    };
    if first == 0 || first >= n {
        return Err(Error::invalid(format!(
            "{} split needs 0 < {first} < {n} documents",
            spec.mode.name()
        )));
    }
    SeededRng::stream(spec.seed, SPLIT_STREAM).shuffle(&mut order);
    let rest = order.split_off(first);
    let (mut train, mut validation) = if first_is_train { (order, rest) } else { (rest, order) };
    train.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    validation.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok((train, validation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeFilter {
    pub min_bytes: usize,
    pub check_raw: bool,
    pub check_norm: bool,
}

impl Default for SizeFilter {
    fn default() -> Self {
        SizeFilter {
            min_bytes: 300,
            check_raw: true,
            check_norm: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub variants: Vec<TextVariant>,
    pub split: SplitSpec,
    pub feature_config: FeatureConfig,
    pub train_config: TrainConfig,
    pub size_filter: SizeFilter,
    pub recall_targets: Vec<f64>,
    /// Rows in each cell's top-features listing.
    pub top_k: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            variants: vec![
                TextVariant::new(Base::Raw, Transform::Untagged),
                TextVariant::new(Base::Raw, Transform::NumTag),
            ],
            split: SplitSpec::default(),
            feature_config: FeatureConfig::default(),
            train_config: TrainConfig::default(),
            size_filter: SizeFilter::default(),
            recall_targets: vec![0.8],
            top_k: 25,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true|false, got {v:?}"))),
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if let Some(t) = self.recall_targets.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::Config(format!("recall target {t} outside (0, 1]")));
        }
        if self.recall_targets.is_empty() {
            return Err(Error::Config("at least one recall target is required".into()));
        }
        self.feature_config.validate()?;
        self.train_config.validate()
    }

    /// Parses a `key = value` file; `#` starts a comment. Unset keys keep
    /// their defaults.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, v) = (key.trim(), value.trim());
            match key {
                "variants" => {
                    spec.variants = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| s.trim().parse())
                        .collect::<Result<_>>()?
                }
                "split_mode" => spec.split.mode = SplitMode::parse(v)?,
                "split_fraction" => spec.split.fraction = parse_value(key, v)?,
                "train_count" => spec.split.train_count = parse_value(key, v)?,
                "seed" => spec.split.seed = parse_value(key, v)?,
                "min_token_length" => spec.feature_config.min_token_length = parse_value(key, v)?,
                "top_n" => spec.feature_config.top_n = parse_value(key, v)?,
                "l2_lambda" => spec.train_config.l2_lambda = parse_value(key, v)?,
                "max_iterations" => spec.train_config.max_iterations = parse_value(key, v)?,
                "tolerance" => spec.train_config.tolerance = parse_value(key, v)?,
                "initial_step" => spec.train_config.initial_step = parse_value(key, v)?,
                "min_bytes" => spec.size_filter.min_bytes = parse_value(key, v)?,
                "check_raw" => spec.size_filter.check_raw = parse_bool(key, v)?,
                "check_norm" => spec.size_filter.check_norm = parse_bool(key, v)?,
                "recall_targets" => {
                    spec.recall_targets = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_value(key, s.trim()))
                        .collect::<Result<_>>()?
                }
                "top_k" => spec.top_k = parse_value(key, v)?,
                other => {
                    return Err(Error::Config(format!("line {}: unknown key {other:?}", n + 1)))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Every field in the config-file syntax accepted by [`Self::parse_config`].
    pub fn to_config(&self) -> String {
        let variants: Vec<String> = self.variants.iter().map(|v| v.to_string()).collect();
        let targets: Vec<String> = self.recall_targets.iter().map(|t| t.to_string()).collect();
        let mut out = String::new();
        let _ = writeln!(out, "variants = {}", variants.join(","));
        let _ = writeln!(out, "split_mode = {}", self.split.mode.name());
        let _ = writeln!(out, "split_fraction = {}", self.split.fraction);
        let _ = writeln!(out, "train_count = {}", self.split.train_count);
        let _ = writeln!(out, "seed = {}", self.split.seed);
        let _ = writeln!(out, "min_token_length = {}", self.feature_config.min_token_length);
        let _ = writeln!(out, "top_n = {}", self.feature_config.top_n);
        let _ = writeln!(out, "l2_lambda = {}", self.train_config.l2_lambda);
        let _ = writeln!(out, "max_iterations = {}", self.train_config.max_iterations);
        let _ = writeln!(out, "tolerance = {}", self.train_config.tolerance);
        let _ = writeln!(out, "initial_step = {}", self.train_config.initial_step);
        let _ = writeln!(out, "min_bytes = {}", self.size_filter.min_bytes);
        let _ = writeln!(out, "check_raw = {}", self.size_filter.check_raw);
        let _ = writeln!(out, "check_norm = {}", self.size_filter.check_norm);
        let _ = writeln!(out, "recall_targets = {}", targets.join(","));
        let _ = writeln!(out, "top_k = {}", self.top_k);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub variant: TextVariant,
    pub vocabulary_size: usize,
    pub iterations_run: usize,
    pub converged: bool,
    pub eval: EvalReport,
    /// Every coefficient plus the intercept, by descending magnitude.
    pub features: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub corpus_size: usize,
    pub filtered_size: usize,
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub cells: Vec<CellResult>,
}

fn run_cell(
    variant: TextVariant,
    train: &[&DayChat],
    validation: &[&DayChat],
    spec: &ExperimentSpec,
) -> Result<CellResult> {
    let min_len = spec.feature_config.min_token_length;
    let tokens = |docs: &[&DayChat]| -> Vec<Vec<String>> {
        docs.par_iter()
            .map(|d| tokenize(&apply_variant(d, variant), min_len))
            .collect()
    };
    let label = |d: &&DayChat| d.label.expect("labels checked before splitting");
    let train_tokens = tokens(train);
    let train_labels: Vec<Label> = train.iter().map(label).collect();
    let vocab = build_vocabulary(&train_tokens, &train_labels, &spec.feature_config)?;
    let train_vectors: Vec<_> = train_tokens.iter().map(|t| vectorize(t, &vocab)).collect();
    let (model, trace) = train_with_trace(&train_vectors, &train_labels, &vocab, &spec.train_config)?;

    let items = tokens(validation)
        .iter()
        .zip(validation)
        .map(|(t, d)| {
            Ok(ScoredItem {
                doc_id: d.doc_id.clone(),
                score: model.score(&vectorize(t, &vocab))?,
                label: label(d),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eval = EvalReport::evaluate(&ScoredSet::new(items)?, &spec.recall_targets)?;
    Ok(CellResult {
        variant,
        vocabulary_size: vocab.len(),
        iterations_run: model.iterations_run,
        converged: trace.converged,
        eval,
        features: top_features(&model, usize::MAX),
    })
}

/// Runs every variant of `spec` on a labeled corpus.
pub fn run_experiment(corpus: Vec<DayChat>, spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let unlabeled = corpus.iter().filter(|d| d.label.is_none()).count();
    if unlabeled > 0 {
        return Err(Error::invalid(format!("{unlabeled} documents have no label")));
    }
    let corpus_size = corpus.len();
    let f = spec.size_filter;
    let filtered = filter_by_size(corpus, f.min_bytes, f.check_raw, f.check_norm);
    let (train, validation) = split(&filtered, &spec.split)?;

    let cells = spec
        .variants
        .par_iter()
        .map(|&v| {
            run_cell(v, &train, &validation, spec)
                .map_err(|e| Error::invalid(format!("variant {v}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        spec: spec.clone(),
        corpus_size,
        filtered_size: filtered.len(),
        train_ids: train.iter().map(|d| d.doc_id.clone()).collect(),
        validation_ids: validation.iter().map(|d| d.doc_id.clone()).collect(),
        cells,
    })
}

impl ExperimentReport {
    pub fn cell(&self, variant: TextVariant) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.variant == variant)
    }

    /// Documents present on both sides of the split.
    pub fn overlap(&self) -> usize {
        let train: HashSet<&str> = self.train_ids.iter().map(String::as_str).collect();
        self.validation_ids
            .iter()
            .filter(|id| train.contains(id.as_str()))
            .count()
    }

    fn grid_table(&self, value: impl Fn(&CellResult) -> String) -> String {
        let columns: Vec<Transform> = Transform::ALL
            .into_iter()
            .filter(|t| self.cells.iter().any(|c| c.variant.transform == *t))
            .collect();
        let rows: Vec<Base> = Base::ALL
            .into_iter()
            .filter(|b| self.cells.iter().any(|c| c.variant.base == *b))
            .collect();
        let mut table: Vec<Vec<String>> = vec![std::iter::once(String::new())
            .chain(columns.iter().map(|t| t.title().to_string()))
            .collect()];
        for b in &rows {
            let mut row = vec![b.title().to_string()];
            for t in &columns {
                row.push(
                    self.cell(TextVariant::new(*b, *t))
                        .map(&value)
                        .unwrap_or_else(|| "not run".to_string()),
                );
            }
            table.push(row);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in table {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    /// Plain-text report: precision grids per recall target, AUROC grid,
    /// top features per cell, split audit.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for &t in &self.spec.recall_targets {
            let _ = writeln!(out, "Precision @ {:.0}% recall", t * 100.0);
            out.push_str(&self.grid_table(|c| {
                c.eval
                    .precision(t)
                    .map(|p| format!("{:.2}%", p * 100.0))
                    .unwrap_or_default()
            }));
            out.push('\n');
        }
        let _ = writeln!(out, "AUROC (trapezoid, {DEFAULT_AUROC_INTERVALS} intervals)");
        out.push_str(&self.grid_table(|c| format!("{:.4}", c.eval.auroc)));
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "Top features: {} (vocabulary {}, {} iterations{})",
                c.variant,
                c.vocabulary_size,
                c.iterations_run,
                if c.converged { ", converged" } else { "" }
            );
            let k = self.spec.top_k.min(c.features.len());
            out.push_str(&format_top_features(&c.features[..k]));
            out.push('\n');
        }
        let _ = writeln!(out, "Split audit");
        let _ = writeln!(out, "  corpus documents      {}", self.corpus_size);
        let _ = writeln!(out, "  after size filter     {}", self.filtered_size);
        let _ = writeln!(out, "  training documents    {}", self.train_ids.len());
        let _ = writeln!(out, "  validation documents  {}", self.validation_ids.len());
        let _ = writeln!(out, "  overlap               {}", self.overlap());
        out
    }

    fn grid_csv(&self) -> String {
        let mut out =
            String::from("base,transform,recall_target,precision,auroc,train_docs,validation_docs,vocabulary_size\n");
        for c in &self.cells {
            for (t, p) in &c.eval.precision_at {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    c.variant.base.name(),
                    c.variant.transform.name(),
                    t.0,
                    p,
                    c.eval.auroc,
                    self.train_ids.len(),
                    self.validation_ids.len(),
                    c.vocabulary_size
                );
            }
        }
        out
    }

    fn manifest(&self) -> String {
        let mut out = self.spec.to_config();
        let _ = writeln!(out, "corpus_documents = {}", self.corpus_size);
        let _ = writeln!(out, "filtered_documents = {}", self.filtered_size);
        let _ = writeln!(out, "train_documents = {}", self.train_ids.len());
        let _ = writeln!(out, "validation_documents = {}", self.validation_ids.len());
        let _ = writeln!(out, "split_overlap = {}", self.overlap());
        out
    }

    /// Writes report.txt, grid.csv, manifest.txt, split.csv and
    /// `cells/{variant}/{pr,roc,features}.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let write = |p: &Path, body: &str| fs::write(p, body).map_err(|e| Error::io(p, e));
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write(&dir.join("report.txt"), &self.render())?;
        write(&dir.join("grid.csv"), &self.grid_csv())?;
        write(&dir.join("manifest.txt"), &self.manifest())?;

        let mut sides: BTreeMap<&str, &str> = BTreeMap::new();
        for id in &self.train_ids {
            sides.insert(id, "train");
        }
        for id in &self.validation_ids {
            sides.insert(id, "validation");
        }
        let mut w = csv::Writer::from_path(dir.join("split.csv"))?;
        w.write_record(["doc_id", "side"])?;
        for (id, side) in sides {
            w.write_record([id, side])?;
        }
        w.flush().map_err(|e| Error::io(dir.join("split.csv"), e))?;

        for c in &self.cells {
            let cell_dir = dir.join("cells").join(c.variant.slug());
            fs::create_dir_all(&cell_dir).map_err(|e| Error::io(&cell_dir, e))?;
            c.eval.write_pr_csv(&cell_dir.join("pr.csv"))?;
            c.eval.write_roc_csv(&cell_dir.join("roc.csv"))?;
            let mut w = csv::Writer::from_path(cell_dir.join("features.csv"))?;
            w.write_record(["token", "coefficient"])?;
            for (t, v) in &c.features {
                w.write_record([t.clone(), format!("{v:.16e}")])?;
            }
            w.flush().map_err(|e| Error::io(&cell_dir, e))?;
        }
        Ok(())
    }
}
