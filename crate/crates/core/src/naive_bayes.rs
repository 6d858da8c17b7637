//! Multinomial naive Bayes baseline with Laplace smoothing.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::porter;
use crate::st_classifier::decide;

/// The shipped stopword list: 57 frequent articles, pronouns, prepositions
/// and conjunctions, one per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

pub const DEFAULT_MIN_TOKEN_LENGTH: usize = 3;

/// Punctuation deletion, whitespace tokenization, lowercasing, stopword
/// removal, length filter, Porter stemming, in that order.
#[derive(Clone, Debug)]
pub struct TokenPipeline {
    stopwords: HashSet<String>,
    min_token_length: usize,
}

impl Default for TokenPipeline {
    fn default() -> Self {
        TokenPipeline::new(DEFAULT_STOPWORDS, DEFAULT_MIN_TOKEN_LENGTH)
    }
}

impl TokenPipeline {
    /// `stopwords` is one word per line; blank lines and `#` comments are
    /// ignored.
    pub fn new(stopwords: &str, min_token_length: usize) -> Self {
        TokenPipeline {
            stopwords: stopwords
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
            min_token_length,
        }
    }

    pub fn stopword_count(&self) -> usize {
        self.stopwords.len()
    }

    pub fn min_token_length(&self) -> usize {
        self.min_token_length
    }

    /// Short identifier for report headers.
    pub fn id(&self) -> String {
        format!(
            "nodepunct+lower+stop{}+min{}+porter1980",
            self.stopwords.len(),
            self.min_token_length
        )
    }

    pub fn preprocess(&self, text: &str) -> Vec<String> {
        let cleaned: String = text
            .chars()
            .filter(|c| c.is_alphanumeric() || c.is_whitespace())
            .collect();
        cleaned
            .split_whitespace()
            .map(str::to_lowercase)
            .filter(|w| !self.stopwords.contains(w))
            .filter(|w| w.chars().count() >= self.min_token_length)
            .map(|w| porter::stem(&w))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub documents: u64,
    /// Total token count, the sum of `words`.
    pub total: u64,
    pub words: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub spam: ClassCounts,
    pub ham: ClassCounts,
    /// Distinct words over both classes.
    pub vocabulary_size: u64,
}

fn tally<'a>(docs: impl IntoIterator<Item = &'a Vec<String>>) -> ClassCounts {
    let mut words: HashMap<&str, u64> = HashMap::new();
    let mut documents = 0;
    let mut total = 0;
    for doc in docs {
        documents += 1;
        for token in doc {
            *words.entry(token.as_str()).or_default() += 1;
            total += 1;
        }
    }
    ClassCounts {
        documents,
        total,
        words: words.into_iter().map(|(w, n)| (w.to_string(), n)).collect(),
    }
}

/// Train from already-preprocessed token lists.
pub fn train_nb(spam_docs: &[Vec<String>], ham_docs: &[Vec<String>]) -> Result<NbModel> {
    if spam_docs.is_empty() {
        return Err(Error::EmptyClass("spam"));
    }
    if ham_docs.is_empty() {
        return Err(Error::EmptyClass("ham"));
    }
    let spam = tally(spam_docs);
    let ham = tally(ham_docs);
    let vocabulary_size = spam.words.len() as u64
        + ham
            .words
            .keys()
            .filter(|w| !spam.words.contains_key(*w))
            .count() as u64;
    Ok(NbModel {
        spam,
        ham,
        vocabulary_size,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NbVerdict {
    pub label: Label,
    pub hsr: f64,
    /// `ln(hamScore) - ln(spamScore)`.
    pub log_ratio: f64,
}

impl NbModel {
    fn class(&self, label: Label) -> &ClassCounts {
        match label {
            Label::Spam => &self.spam,
            Label::Ham => &self.ham,
        }
    }

    /// Fraction of training documents in `label`.
    pub fn prior(&self, label: Label) -> f64 {
        self.class(label).documents as f64 / (self.spam.documents + self.ham.documents) as f64
    }

    /// Laplace-smoothed `(1 + count) / (M + class total)`.
    pub fn word_probability(&self, label: Label, word: &str) -> f64 {
        let class = self.class(label);
        let count = class.words.get(word).copied().unwrap_or(0);
        (1 + count) as f64 / (self.vocabulary_size + class.total) as f64
    }

    /// Log of prior times the product of word probabilities.
    pub fn log_score<S: AsRef<str>>(&self, label: Label, tokens: &[S]) -> f64 {
        let class = self.class(label);
        let denominator = ((self.vocabulary_size + class.total) as f64).ln();
        tokens.iter().fold(self.prior(label).ln(), |acc, token| {
            let count = class.words.get(token.as_ref()).copied().unwrap_or(0);
            acc + ((1 + count) as f64).ln() - denominator
        })
    }

    pub fn classify<S: AsRef<str>>(&self, tokens: &[S], threshold: f64) -> NbVerdict {
        let log_ratio = self.log_score(Label::Ham, tokens) - self.log_score(Label::Spam, tokens);
        let hsr = log_ratio.exp();
        NbVerdict {
            label: decide(hsr, threshold),
            hsr,
            log_ratio,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn shipped_stoplist_has_57_words() {
        assert_eq!(TokenPipeline::default().stopword_count(), 57);
    }

    #[test]
    fn pipeline_examples() {
        let p = TokenPipeline::default();
        assert_eq!(p.preprocess("Vi.agr.a now!!"), ["viagra", "now"]);
        assert!(p.preprocess("the a an").is_empty());
        assert!(p.preprocess("go").is_empty());
        assert_eq!(
            p.preprocess("The Meetings\twere\nRELATIONAL"),
            ["meet", "were", "relat"]
        );
        // stopword matching happens after lowercasing
        assert!(p.preprocess("Their THESE").is_empty());
    }

    #[test]
    fn pipeline_is_idempotent_on_fixed_stems() {
        let p = TokenPipeline::default();
        let once = p.preprocess("cats sat upon mats, quickly running");
        let stems_fixed: Vec<String> = once
            .iter()
            .filter(|w| porter::stem(w) == **w)
            .cloned()
            .collect();
        assert_eq!(p.preprocess(&stems_fixed.join(" ")), stems_fixed);
    }

    #[test]
    fn priors() {
        let spam = vec![toks(&["x"]); 481];
        let ham = vec![toks(&["y"]); 2412];
        let m = train_nb(&spam, &ham).unwrap();
        assert!((m.prior(Label::Spam) - 481.0 / 2893.0).abs() < 1e-15);
        assert!((m.prior(Label::Spam) + m.prior(Label::Ham) - 1.0).abs() < 1e-12);
        let m = train_nb(&vec![toks(&["a"]); 400], &vec![toks(&["b"]); 400]).unwrap();
        assert_eq!(m.prior(Label::Spam), 0.5);
        assert!(matches!(
            train_nb(&[], &ham),
            Err(Error::EmptyClass("spam"))
        ));
        assert!(matches!(
            train_nb(&spam, &[]),
            Err(Error::EmptyClass("ham"))
        ));
    }

    fn toy() -> NbModel {
        // spam: buy x2, cheap x1; ham: meet x1, buy x1; M = 3
        train_nb(
            &[toks(&["buy", "cheap", "buy"])],
            &[toks(&["meet"]), toks(&["buy"])],
        )
        .unwrap()
    }

    #[test]
    fn smoothed_probabilities() {
        let m = toy();
        assert_eq!(m.vocabulary_size, 3);
        assert_eq!(m.word_probability(Label::Spam, "buy"), 3.0 / 6.0);
        assert_eq!(m.word_probability(Label::Spam, "meet"), 1.0 / 6.0);
        assert_eq!(m.word_probability(Label::Ham, "cheap"), 1.0 / 5.0);
        for label in [Label::Spam, Label::Ham] {
            let sum: f64 = ["buy", "cheap", "meet"]
                .iter()
                .map(|w| m.word_probability(label, w))
                .sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_scores() {
        let m = toy();
        let empty: [&str; 0] = [];
        assert!((m.log_score(Label::Spam, &empty) - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        let expected = (1.0f64 / 3.0).ln() + (3.0f64 / 6.0).ln();
        assert!((m.log_score(Label::Spam, &["buy"]) - expected).abs() < 1e-12);
        let expected = (2.0f64 / 3.0).ln() + (2.0f64 / 5.0).ln();
        assert!((m.log_score(Label::Ham, &["buy"]) - expected).abs() < 1e-12);
        // unseen word: each class shifts by its own Laplace floor
        let shift_spam = m.log_score(Label::Spam, &["zzz"]) - m.log_score(Label::Spam, &empty);
        let shift_ham = m.log_score(Label::Ham, &["zzz"]) - m.log_score(Label::Ham, &empty);
        assert!((shift_spam - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((shift_ham - (1.0f64 / 5.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        let sym = train_nb(&[toks(&["a", "b"])], &[toks(&["a", "b"])]).unwrap();
        let v = sym.classify(&["a", "b"], 1.0);
        assert!((v.hsr - 1.0).abs() < 1e-12);
        assert_eq!(sym.classify(&["a"], 1.0).label, Label::Ham);

        let m = train_nb(&[toks(&["cash", "prize"])], &[toks(&["lecture", "syntax"])]).unwrap();
        let v = m.classify(&["cash", "prize", "cash"], 1.0);
        assert!(v.hsr < 1.0);
        assert_eq!(v.label, Label::Spam);

        let doc = ["lecture", "cash"];
        let low = m.classify(&doc, 1.0).label == Label::Ham;
        let high = m.classify(&doc, 1.3).label == Label::Ham;
        assert!(low || !high);
    }

    #[test]
    fn json_round_trip() {
        let m = toy();
        assert_eq!(NbModel::from_json(&m.to_json()).unwrap(), m);
    }
}
