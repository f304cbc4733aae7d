//! Ranking metrics and review-cost projection.
//!
//! Documents are ranked by descending score; equal scores are ordered by
//! doc_id so every metric is deterministic. Curves move tied scores across the
//! threshold as one block.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use crate::consolidate::Label;
use crate::error::{Error, Result};

pub const DEFAULT_AUROC_INTERVALS: usize = 100;
pub const REPORT_RECALL_TARGETS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredItem {
    pub doc_id: String,
    pub score: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredSet {
    pub items: Vec<ScoredItem>,
}

impl ScoredSet {
    pub fn new(items: Vec<ScoredItem>) -> Result<Self> {
        if let Some(bad) = items.iter().find(|i| !i.score.is_finite()) {
            return Err(Error::NonFinite(format!("score of {}: {}", bad.doc_id, bad.score)));
        }
        Ok(ScoredSet { items })
    }

    pub fn from_parts(scores: &[f64], labels: &[Label]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::invalid("scores and labels differ in length"));
        }
        let width = scores.len().to_string().len();
        ScoredSet::new(
            scores
                .iter()
                .zip(labels)
                .enumerate()
                .map(|(i, (&score, &label))| ScoredItem {
                    doc_id: format!("{i:0width$}"),
                    score,
                    label,
                })
                .collect(),
        )
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|i| i.label.is_responsive()).count()
    }

    pub fn negatives(&self) -> usize {
        self.items.len() - self.positives()
    }

    /// Items in review order.
    pub fn ranked(&self) -> Vec<&ScoredItem> {
        let mut v: Vec<&ScoredItem> = self.items.iter().collect();
        v.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        v
    }

    /// Cumulative (true positives, false positives) after each tie block.
    fn tie_blocks(&self) -> Vec<(usize, usize)> {
        let ranked = self.ranked();
        let mut out = Vec::new();
        let (mut tp, mut fp) = (0, 0);
        for (i, item) in ranked.iter().enumerate() {
            if item.label.is_responsive() {
                tp += 1;
            } else {
                fp += 1;
            }
            let block_ends = ranked
                .get(i + 1)
                .is_none_or(|next| next.score != item.score);
            if block_ends {
                out.push((tp, fp));
            }
        }
        out
    }

    fn require_positive(&self) -> Result<usize> {
        match self.positives() {
            0 => Err(Error::SingleClass("no responsive documents in scored set".into())),
            p => Ok(p),
        }
    }

    fn require_both(&self) -> Result<(usize, usize)> {
        let p = self.require_positive()?;
        match self.negatives() {
            0 => Err(Error::SingleClass("no non-responsive documents in scored set".into())),
            n => Ok((p, n)),
        }
    }
}

/// Precision of the shortest review-order prefix reaching `recall_target`.
pub fn precision_at_recall(scored: &ScoredSet, recall_target: f64) -> Result<f64> {
    if !(recall_target > 0.0 && recall_target <= 1.0) {
        return Err(Error::invalid(format!("recall target {recall_target} outside (0, 1]")));
    }
    let positives = scored.require_positive()?;
    let mut tp = 0;
    for (i, item) in scored.ranked().iter().enumerate() {
        if item.label.is_responsive() {
            tp += 1;
            if tp as f64 / positives as f64 >= recall_target {
                return Ok(tp as f64 / (i + 1) as f64);
            }
        }
    }
    unreachable!("full sweep reaches recall 1")
}

/// `(recall, precision)` after every block of tied scores.
pub fn pr_curve(scored: &ScoredSet) -> Result<Vec<(f64, f64)>> {
    let positives = scored.require_positive()? as f64;
    Ok(scored
        .tie_blocks()
        .into_iter()
        .map(|(tp, fp)| (tp as f64 / positives, tp as f64 / (tp + fp) as f64))
        .collect())
}

/// `(fpr, tpr)` from `(0, 0)` through every tie block to `(1, 1)`.
pub fn roc_curve(scored: &ScoredSet) -> Result<Vec<(f64, f64)>> {
    let (p, n) = scored.require_both()?;
    let mut points = vec![(0.0, 0.0)];
    points.extend(
        scored
            .tie_blocks()
            .into_iter()
            .map(|(tp, fp)| (fp as f64 / n as f64, tp as f64 / p as f64)),
    );
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    Ok(points)
}

/// TPR at `x` on the piecewise-linear ROC. On a vertical segment the value
/// depends on the side: approaching from the left gives the lowest TPR at
/// that FPR, from the right the highest.
fn tpr_at(points: &[(f64, f64)], x: f64, from_right: bool) -> f64 {
    // First point with fpr > x (from the right) or fpr >= x (from the left).
    let upper = if from_right {
        points.partition_point(|p| p.0 <= x)
    } else {
        points.partition_point(|p| p.0 < x)
    };
    if from_right {
        if upper == points.len() {
            return points.iter().filter(|p| p.0 == x).map(|p| p.1).fold(f64::MIN, f64::max);
        }
        if upper == 0 {
            return points[0].1;
        }
        let (x0, y0) = points[upper - 1];
        let (x1, y1) = points[upper];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    } else {
        if upper == 0 {
            return points.iter().filter(|p| p.0 == x).map(|p| p.1).fold(f64::MAX, f64::min);
        }
        if upper == points.len() {
            return points[upper - 1].1;
        }
        let (x0, y0) = points[upper - 1];
        let (x1, y1) = points[upper];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Trapezoidal AUROC on a uniform FPR grid of `intervals` steps.
pub fn auroc_trapezoid(roc_points: &[(f64, f64)], intervals: usize) -> f64 {
    if roc_points.len() < 2 || intervals == 0 {
        return 0.0;
    }
    let n = intervals as f64;
    let heights: f64 = (0..intervals)
        .map(|k| {
            let a = k as f64 / n;
            let b = (k + 1) as f64 / n;
            0.5 * (tpr_at(roc_points, a, true) + tpr_at(roc_points, b, false))
        })
        .sum();
    heights / n
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub pr_points: Vec<(f64, f64)>,
    pub roc_points: Vec<(f64, f64)>,
    pub auroc: f64,
    pub precision_at: BTreeMap<RecallTarget, f64>,
    pub positives: usize,
    pub negatives: usize,
}

/// Recall target with a total order, so it can key a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallTarget(pub f64);

impl Eq for RecallTarget {}

impl PartialOrd for RecallTarget {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RecallTarget {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl EvalReport {
    pub fn evaluate(scored: &ScoredSet, recall_targets: &[f64]) -> Result<Self> {
        let roc_points = roc_curve(scored)?;
        let mut precision_at = BTreeMap::new();
        for &t in recall_targets {
            precision_at.insert(RecallTarget(t), precision_at_recall(scored, t)?);
        }
        Ok(EvalReport {
            pr_points: pr_curve(scored)?,
            auroc: auroc_trapezoid(&roc_points, DEFAULT_AUROC_INTERVALS),
            roc_points,
            precision_at,
            positives: scored.positives(),
            negatives: scored.negatives(),
        })
    }

    pub fn precision(&self, recall_target: f64) -> Option<f64> {
        self.precision_at.get(&RecallTarget(recall_target)).copied()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28}{}", "responsive documents", self.positives);
        let _ = writeln!(out, "{:<28}{}", "non-responsive documents", self.negatives);
        let _ = writeln!(out, "{:<28}{:.4}", "AUROC (100 intervals)", self.auroc);
        for (t, p) in &self.precision_at {
            let label = format!("precision @ {:.0}% recall", t.0 * 100.0);
            let _ = writeln!(out, "{label:<28}{:.2}%", p * 100.0);
        }
        out
    }

    pub fn write_pr_csv(&self, path: &Path) -> Result<()> {
        write_points(path, ["recall", "precision"], &self.pr_points)
    }

    pub fn write_roc_csv(&self, path: &Path) -> Result<()> {
        write_points(path, ["fpr", "tpr"], &self.roc_points)
    }
}

fn write_points(path: &Path, header: [&str; 2], points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in points {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavingsReport {
    pub corpus_size: u64,
    pub responsive_rate: f64,
    pub recall_target: f64,
    pub precision: f64,
    pub responsive_count: u64,
    pub target_responsive: u64,
    pub review_count: u64,
    pub review_fraction: f64,
}

/// Documents to review to reach `recall_target` at the given precision.
///
/// Counts round to the nearest document: 13,008 responsive documents at
/// precision 60.72% means 21,423 reviewed (21,422.9), at 65.03% 20,003
/// (20,003.1).
pub fn savings(
    corpus_size: u64,
    responsive_rate: f64,
    recall_target: f64,
    precision: f64,
) -> Result<SavingsReport> {
    if !(responsive_rate > 0.0 && responsive_rate < 1.0) {
        return Err(Error::invalid(format!("responsive rate {responsive_rate} outside (0, 1)")));
    }
    if !(recall_target > 0.0 && recall_target <= 1.0) {
        return Err(Error::invalid(format!("recall target {recall_target} outside (0, 1]")));
    }
    if !(precision > 0.0 && precision <= 1.0) {
        return Err(Error::invalid(format!("precision {precision} outside (0, 1]")));
    }
    let responsive_count = (responsive_rate * corpus_size as f64).round() as u64;
    let target_responsive = (recall_target * responsive_count as f64).round() as u64;
    let review_count = (target_responsive as f64 / precision).round() as u64;
    Ok(SavingsReport {
        corpus_size,
        responsive_rate,
        recall_target,
        precision,
        responsive_count,
        target_responsive,
        review_count,
        review_fraction: review_count as f64 / corpus_size as f64,
    })
}

impl fmt::Display for SavingsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20}{}", "corpus_size", self.corpus_size)?;
        writeln!(f, "{:<20}{:.2}%", "responsive_rate", self.responsive_rate * 100.0)?;
        writeln!(f, "{:<20}{:.2}%", "recall_target", self.recall_target * 100.0)?;
        writeln!(f, "{:<20}{:.2}%", "precision", self.precision * 100.0)?;
        writeln!(f, "{:<20}{}", "responsive_count", self.responsive_count)?;
        writeln!(f, "{:<20}{}", "target_responsive", self.target_responsive)?;
        writeln!(f, "{:<20}{}", "review_count", self.review_count)?;
        write!(f, "{:<20}{:.2}%", "review_fraction", self.review_fraction * 100.0)
    }
}

/// `doc_id,score` CSV.
pub fn write_scores(path: &Path, scores: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["doc_id", "score"])?;
    for (id, s) in scores {
        w.write_record([id.clone(), format!("{s:.17e}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let s: f64 = row[1]
            .parse()
            .map_err(|_| Error::invalid(format!("bad score {:?} for {}", &row[1], &row[0])))?;
        out.push((row[0].to_string(), s));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{NotResponsive as N, Responsive as R};

    fn set(scores: &[f64], labels: &[Label]) -> ScoredSet {
        ScoredSet::from_parts(scores, labels).unwrap()
    }

    #[test]
    fn precision_at_recall_examples() {
        let s = set(&[0.9, 0.8, 0.7, 0.6, 0.5], &[R, R, N, R, N]);
        assert_eq!(precision_at_recall(&s, 0.8).unwrap(), 0.75);
        let perfect = set(&[0.9, 0.8, 0.2, 0.1], &[R, R, N, N]);
        for t in [0.1, 0.5, 1.0] {
            assert_eq!(precision_at_recall(&perfect, t).unwrap(), 1.0);
        }
        let last = set(&[0.9, 0.8, 0.7, 0.1], &[N, N, N, R]);
        assert_eq!(precision_at_recall(&last, 1.0).unwrap(), 0.25);
        assert!(precision_at_recall(&set(&[0.5], &[N]), 0.5).is_err());
        assert!(precision_at_recall(&s, 0.0).is_err());
    }

    #[test]
    fn pr_curve_examples() {
        let s = set(&[0.9, 0.8, 0.7, 0.6, 0.5], &[R, R, N, R, N]);
        assert!(pr_curve(&s).unwrap().contains(&(1.0, 0.75)));
        let perfect = set(&[0.9, 0.8, 0.2, 0.1], &[R, R, N, N]);
        let pr = pr_curve(&perfect).unwrap();
        assert!(pr.iter().filter(|p| p.0 < 1.0 || p.1 == 1.0).all(|p| p.1 == 1.0 || p.0 == 1.0));
        assert_eq!(pr[1], (1.0, 1.0));
        let last = set(&[0.9, 0.8, 0.7, 0.1], &[N, N, N, R]);
        assert_eq!(*pr_curve(&last).unwrap().last().unwrap(), (1.0, 0.25));
    }

    #[test]
    fn roc_examples() {
        let perfect = set(&[0.9, 0.8, 0.2, 0.1], &[R, R, N, N]);
        assert!(roc_curve(&perfect).unwrap().contains(&(0.0, 1.0)));
        let flat = set(&[0.5; 4], &[R, N, R, N]);
        assert_eq!(roc_curve(&flat).unwrap(), vec![(0.0, 0.0), (1.0, 1.0)]);
        let alt = set(&[0.9, 0.8, 0.7, 0.6], &[R, N, R, N]);
        assert_eq!(
            roc_curve(&alt).unwrap(),
            vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]
        );
        assert!(roc_curve(&set(&[0.1, 0.2], &[R, R])).is_err());
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc_trapezoid(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)], 100), 1.0);
        assert!((auroc_trapezoid(&[(0.0, 0.0), (1.0, 1.0)], 100) - 0.5).abs() < 1e-12);
        // Area: 0.125 under the diagonal part plus 0.5 after the jump.
        let piecewise = [(0.0, 0.0), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)];
        assert!((auroc_trapezoid(&piecewise, 100) - 0.625).abs() < 1e-12);
        let jump_first = [(0.0, 0.0), (0.0, 0.5), (0.5, 1.0), (1.0, 1.0)];
        assert!((auroc_trapezoid(&jump_first, 100) - 0.875).abs() < 1e-12);
    }

    #[test]
    fn savings_examples() {
        let base = savings(100_000, 0.1626, 0.80, 0.6072).unwrap();
        assert_eq!(base.responsive_count, 16_260);
        assert_eq!(base.target_responsive, 13_008);
        assert_eq!(base.review_count, 21_423);
        let tagged = savings(100_000, 0.1626, 0.80, 0.6503).unwrap();
        assert_eq!(tagged.review_count, 20_003);
        assert_eq!(base.review_count - tagged.review_count, 1_420);
        let exact = savings(100_000, 0.1626, 0.80, 1.0).unwrap();
        assert_eq!(exact.review_count, exact.target_responsive);
        assert!(savings(100_000, 0.1626, 0.80, 0.0).is_err());
    }

    #[test]
    fn non_finite_scores_rejected() {
        assert!(ScoredSet::from_parts(&[f64::NAN], &[R]).is_err());
    }

    #[test]
    fn scores_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scores.csv");
        let scores = vec![("a".to_string(), 0.1234567890123456789), ("b,c".to_string(), 1e-300)];
        write_scores(&p, &scores).unwrap();
        assert_eq!(read_scores(&p).unwrap(), scores);
    }
}
