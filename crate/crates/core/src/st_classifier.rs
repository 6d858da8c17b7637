//! Scoring documents against class trees.
//!
//! For every suffix of a document, the longest prefix that is also a root
//! path of the tree is the suffix's match. Each character of the match adds
//! `phi(p)` where `p` is the conditional probability of its node; the sum is
//! multiplied by a match-level normalization weight. A document's score is
//! the sum over all of its suffixes, and the ham/spam score ratio (hsr) is
//! compared against a threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::suffix_tree::{ClassTree, NodeRef};

/// Clamp for the logit singularities at 0 and 1.
pub const LOGIT_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignificanceKind {
    Constant,
    Linear,
    Square,
    Root,
    Logit,
    Sigmoid,
}

fn logit(x: f64) -> f64 {
    x.ln() - (1.0 - x).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SignificanceKind {
    pub const ALL: [SignificanceKind; 6] = [
        SignificanceKind::Constant,
        SignificanceKind::Linear,
        SignificanceKind::Square,
        SignificanceKind::Root,
        SignificanceKind::Logit,
        SignificanceKind::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SignificanceKind::Constant => "constant",
            SignificanceKind::Linear => "linear",
            SignificanceKind::Square => "square",
            SignificanceKind::Root => "root",
            SignificanceKind::Logit => "logit",
            SignificanceKind::Sigmoid => "sigmoid",
        }
    }

    /// The weighting curve on `[0, 1]`, unchecked. Logit and sigmoid are
    /// affinely rescaled so that 0 maps to 0 and 1 maps to 1.
    #[inline]
    pub fn curve(self, p: f64) -> f64 {
        match self {
            SignificanceKind::Constant => 1.0,
            SignificanceKind::Linear => p,
            SignificanceKind::Square => p * p,
            SignificanceKind::Root => p.sqrt(),
            SignificanceKind::Logit => {
                let lo = logit(LOGIT_EPSILON);
                let hi = logit(1.0 - LOGIT_EPSILON);
                let clamped = p.clamp(LOGIT_EPSILON, 1.0 - LOGIT_EPSILON);
                (logit(clamped) - lo) / (hi - lo)
            }
            SignificanceKind::Sigmoid => {
                let lo = sigmoid(0.0);
                (sigmoid(p) - lo) / (sigmoid(1.0) - lo)
            }
        }
    }
}

impl fmt::Display for SignificanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignificanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown significance function `{s}` (expected constant, linear, square, root, logit or sigmoid)"
                ))
            })
    }
}

/// Significance of a conditional probability `p` in `(0, 1]`.
pub fn significance(kind: SignificanceKind, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Contract(format!(
            "significance needs a probability in (0, 1], got {p}"
        )));
    }
    Ok(kind.curve(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchNorm {
    None,
    Permutation,
    Length,
}

impl MatchNorm {
    pub const ALL: [MatchNorm; 3] = [MatchNorm::None, MatchNorm::Permutation, MatchNorm::Length];

    pub fn name(self) -> &'static str {
        match self {
            MatchNorm::None => "none",
            MatchNorm::Permutation => "permutation",
            MatchNorm::Length => "length",
        }
    }
}

impl fmt::Display for MatchNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatchNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown match normalization `{s}` (expected none, permutation or length)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringConfig {
    pub phi: SignificanceKind,
    pub norm: MatchNorm,
    pub depth: usize,
    pub threshold: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            phi: SignificanceKind::Constant,
            norm: MatchNorm::None,
            depth: crate::suffix_tree::DEFAULT_DEPTH,
            threshold: 1.0,
        }
    }
}

impl ScoringConfig {
    pub fn new(phi: SignificanceKind, norm: MatchNorm, depth: usize) -> Self {
        ScoringConfig {
            phi,
            norm,
            depth,
            threshold: 1.0,
        }
    }

    pub fn with_threshold(self, threshold: f64) -> Self {
        ScoringConfig { threshold, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::suffix_tree::MAX_DEPTH).contains(&self.depth) {
            return Err(Error::Config(format!(
                "scoring depth must be in 1..={}, got {}",
                crate::suffix_tree::MAX_DEPTH,
                self.depth
            )));
        }
        check_threshold(self.threshold)
    }
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "threshold must be a positive finite number, got {threshold}"
        )))
    }
}

/// The maximal prefix of a query string that is a root path of a tree.
#[derive(Clone, Debug)]
pub struct Match<'a> {
    path: Vec<char>,
    node: Option<NodeRef<'a>>,
}

impl<'a> Match<'a> {
    pub fn path(&self) -> String {
        self.path.iter().collect()
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    /// Terminal node, `None` for the empty match.
    pub fn node(&self) -> Option<NodeRef<'a>> {
        self.node
    }

    fn terminal_in(&self, tree: &ClassTree) -> Result<NodeRef<'a>> {
        let node = self
            .node
            .ok_or_else(|| Error::Contract("empty match has no weight".into()))?;
        if !node.belongs_to(tree) {
            return Err(Error::Contract(format!(
                "match `{}` was taken from a different tree",
                self.path()
            )));
        }
        Ok(node)
    }
}

/// Longest match of `s` against `tree`, at most `tree.depth_limit()` long.
pub fn longest_match<'a>(tree: &'a ClassTree, s: &str) -> Match<'a> {
    let chars: Vec<char> = s.chars().take(tree.depth_limit()).collect();
    longest_match_chars(tree, &chars, tree.depth_limit())
}

fn longest_match_chars<'a>(tree: &'a ClassTree, s: &[char], cap: usize) -> Match<'a> {
    let mut node = tree.root();
    let mut len = 0;
    for &c in s.iter().take(cap) {
        match node.child(c) {
            Some(next) => {
                node = next;
                len += 1;
            }
            None => break,
        }
    }
    Match {
        path: s[..len].to_vec(),
        node: (len > 0).then_some(node),
    }
}

/// Frequency of the match over the summed frequencies of every root path
/// that is an anagram of it (the match included).
pub fn permutation_weight(tree: &ClassTree, m: &Match<'_>) -> Result<f64> {
    let node = m.terminal_in(tree)?;
    Ok(permutation_weight_raw(tree, node.frequency(), &m.path))
}

fn permutation_weight_raw(tree: &ClassTree, frequency: u64, path: &[char]) -> f64 {
    let mut multiset: Vec<(char, u32)> = Vec::with_capacity(path.len());
    let mut sorted = path.to_vec();
    sorted.sort_unstable();
    for c in sorted {
        match multiset.last_mut() {
            Some((last, n)) if *last == c => *n += 1,
            _ => multiset.push((c, 1)),
        }
    }
    let total = anagram_frequency(tree, 0, &mut multiset, path.len());
    frequency as f64 / total as f64
}

/// Summed frequency of the depth-`left` descendants of `node` spelling some
/// arrangement of the remaining multiset.
fn anagram_frequency(
    tree: &ClassTree,
    node: u32,
    multiset: &mut [(char, u32)],
    left: usize,
) -> u64 {
    if left == 0 {
        return tree.frequency_raw(node);
    }
    let mut total = 0;
    for i in 0..multiset.len() {
        let (c, n) = multiset[i];
        if n == 0 {
            continue;
        }
        if let Some(child) = tree.child(node, c) {
            multiset[i].1 -= 1;
            total += anagram_frequency(tree, child, multiset, left - 1);
            multiset[i].1 += 1;
        }
    }
    total
}

/// Frequency of the match over the summed frequencies of its level.
pub fn length_weight(tree: &ClassTree, m: &Match<'_>) -> Result<f64> {
    let node = m.terminal_in(tree)?;
    Ok(node.frequency() as f64 / tree.level_frequency_sum(m.len()) as f64)
}

fn norm_weight(tree: &ClassTree, norm: MatchNorm, node: u32, path: &[char]) -> f64 {
    match norm {
        MatchNorm::None => 1.0,
        MatchNorm::Permutation => permutation_weight_raw(tree, tree.frequency_raw(node), path),
        MatchNorm::Length => {
            tree.frequency_raw(node) as f64 / tree.level_frequency_sum(path.len()) as f64
        }
    }
}

/// Score of one match: normalization weight times summed significance.
pub fn match_score(tree: &ClassTree, m: &Match<'_>, cfg: &ScoringConfig) -> Result<f64> {
    let Some(terminal) = m.node else {
        return Ok(0.0);
    };
    m.terminal_in(tree)?;
    let mut sum = 0.0;
    let mut node = tree.root();
    for &c in &m.path {
        node = node.child(c).expect("validated path");
        sum += cfg.phi.curve(tree.conditional_probability(node)?);
    }
    Ok(norm_weight(tree, cfg.norm, terminal.id().raw(), &m.path) * sum)
}

/// Sum of match scores over every suffix of `doc`.
pub fn document_score(tree: &ClassTree, doc: &str, cfg: &ScoringConfig) -> f64 {
    let chars: Vec<char> = doc.chars().collect();
    document_score_chars(tree, &chars, cfg)
}

pub(crate) fn document_score_chars(tree: &ClassTree, doc: &[char], cfg: &ScoringConfig) -> f64 {
    let cap = cfg.depth.min(tree.depth_limit());
    let mut total = 0.0;
    for start in 0..doc.len() {
        let end = (start + cap).min(doc.len());
        let mut node = 0u32;
        let mut len = 0;
        let mut sum = 0.0;
        for &c in &doc[start..end] {
            match tree.child(node, c) {
                Some(next) => {
                    node = next;
                    len += 1;
                    sum += cfg.phi.curve(tree.conditional_raw(node));
                }
                None => break,
            }
        }
        if len > 0 {
            total += norm_weight(tree, cfg.norm, node, &doc[start..start + len]) * sum;
        }
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub label: Label,
    /// ham score / spam score; `+inf` when the spam score is 0, including the
    /// no-evidence case.
    pub hsr: f64,
    pub ham_score: f64,
    pub spam_score: f64,
    /// Both scores were 0: nothing in the document matched either profile.
    pub no_evidence: bool,
}

impl Verdict {
    pub fn from_scores(ham_score: f64, spam_score: f64, threshold: f64) -> Verdict {
        let no_evidence = ham_score == 0.0 && spam_score == 0.0;
        let hsr = if spam_score == 0.0 {
            f64::INFINITY
        } else {
            ham_score / spam_score
        };
        Verdict {
            label: decide(hsr, threshold),
            hsr,
            ham_score,
            spam_score,
            no_evidence,
        }
    }
}

/// Ham iff `hsr >= threshold`.
#[inline]
pub fn decide(hsr: f64, threshold: f64) -> Label {
    if hsr >= threshold {
        Label::Ham
    } else {
        Label::Spam
    }
}

fn check_depths(ham: &ClassTree, spam: &ClassTree, cfg: &ScoringConfig) -> Result<()> {
    let available = ham.depth_limit().min(spam.depth_limit());
    if cfg.depth > available {
        return Err(Error::Contract(format!(
            "scoring depth {} exceeds profile depth {available}",
            cfg.depth
        )));
    }
    Ok(())
}

pub fn classify(
    ham_tree: &ClassTree,
    spam_tree: &ClassTree,
    doc: &str,
    cfg: &ScoringConfig,
) -> Result<Verdict> {
    cfg.validate()?;
    check_depths(ham_tree, spam_tree, cfg)?;
    let chars: Vec<char> = doc.chars().collect();
    Ok(classify_chars(ham_tree, spam_tree, &chars, cfg))
}

pub(crate) fn classify_chars(
    ham_tree: &ClassTree,
    spam_tree: &ClassTree,
    doc: &[char],
    cfg: &ScoringConfig,
) -> Verdict {
    let ham = document_score_chars(ham_tree, doc, cfg);
    let spam = document_score_chars(spam_tree, doc, cfg);
    Verdict::from_scores(ham, spam, cfg.threshold)
}
