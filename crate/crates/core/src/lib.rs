//! Spam filtering with character-level suffix-tree class profiles, plus a
//! multinomial naive Bayes baseline and a cross-validation harness.
//!
//! ```
//! use stfilter::{build_class_tree, classify, Label, ScoringConfig};
//!
//! let ham = build_class_tree(["see you at the meeting"], 8).unwrap();
//! let spam = build_class_tree(["cheap pills, buy now"], 8).unwrap();
//! let v = classify(&ham, &spam, "buy cheap", &ScoringConfig::default()).unwrap();
//! assert_eq!(v.label, Label::Spam);
//! ```

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod naive_bayes;
pub mod porter;
pub mod rng;
pub mod st_classifier;
pub mod suffix_tree;

pub use corpus::{
    compose_eds, load_dir, load_labeled_dir, load_lingspam, parse_email, stratified_folds,
    EdsManifest, EdsSpec, EmailDataSet, FoldAssignment, Label, Message, ParsedEmail, Pool,
    SourceCount,
};
pub use error::{Error, Result};
pub use evaluation::{
    breakeven, metrics, optimal_threshold, roc_csv, roc_points, run_cv, summarize, Breakeven,
    Classifier, ClassifierEcho, Confusion, MetricSet, SweepReport, SweepRow, ThresholdGrid,
};
pub use naive_bayes::{train_nb, NbModel, TokenPipeline};
pub use st_classifier::{
    classify, decide, document_score, longest_match, match_score, significance, MatchNorm,
    ScoringConfig, SignificanceKind, Verdict,
};
pub use suffix_tree::{build_class_tree, ClassTree, NodeRef, DEFAULT_DEPTH, MAX_DEPTH};
