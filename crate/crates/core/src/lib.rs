//! Predictive coding for instant-message corpora.
//!
//! The pipeline runs in stages, one module each:
//!
//! - [`chatlog`] parses per-participant tab-separated chat logs into [`ChatEvent`]s.
//! - [`consolidate`] de-duplicates events across logs and groups them into
//!   per-room, per-day [`DayChat`] documents with raw and normalized renderings.
//! - [`textprep`] applies the numeric tagging variants (`[NUM]`, `[TIMESTAMP]`,
//!   digit removal).
//! - [`features`] tokenizes, ranks tokens by information gain and builds
//!   normalized-frequency sparse vectors.
//! - [`model`] trains and applies an L2-regularized logistic regression.
//! - [`eval`] computes PR/ROC curves, precision at recall, trapezoidal AUROC and
//!   review-cost projections.
//! - [`synth`] generates seeded synthetic chat corpora.
//! - [`harness`] splits corpora and runs the variant experiment grid.

pub mod chatlog;
pub mod consolidate;
pub mod error;
pub mod eval;
pub mod features;
pub mod harness;
pub mod model;
pub mod rng;
pub mod synth;
pub mod textprep;

pub use chatlog::{ChatEvent, EventKind, ParseMode};
pub use consolidate::{DayChat, Label};
pub use error::{Error, LineError, Result};
pub use eval::{EvalReport, SavingsReport, ScoredItem, ScoredSet};
pub use features::{FeatureConfig, Fingerprint, SparseVector, Vocabulary};
pub use harness::{ExperimentSpec, SplitMode, SplitSpec};
pub use model::{LRModel, TrainConfig};
pub use synth::SynthConfig;
pub use textprep::{Base, TextVariant, Transform};
