//! Email ingestion, data-set composition and stratified fold assignment.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spam,
    Ham,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Spam => "spam",
            Label::Ham => "ham",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An email reduced to subject and body, before a label is attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedEmail {
    pub subject: String,
    pub body: String,
    /// Number of invalid UTF-8 sequences replaced by U+FFFD while decoding.
    pub decode_errors: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    subject: String,
    body: String,
    label: Label,
    source_id: String,
    decode_errors: usize,
}

impl Message {
    pub fn new(parsed: ParsedEmail, label: Label, source_id: impl Into<String>) -> Self {
        Message {
            subject: parsed.subject,
            body: parsed.body,
            label,
            source_id: source_id.into(),
            decode_errors: parsed.decode_errors,
        }
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn decode_errors(&self) -> usize {
        self.decode_errors
    }

    /// Text fed to the classifiers: `subject + "\n" + body`, or just the body
    /// when the subject is empty.
    pub fn text(&self) -> String {
        if self.subject.is_empty() {
            self.body.clone()
        } else {
            let mut text = String::with_capacity(self.subject.len() + 1 + self.body.len());
            text.push_str(&self.subject);
            text.push('\n');
            text.push_str(&self.body);
            text
        }
    }
}

fn decode_lossy(raw: &[u8]) -> (String, usize) {
    let mut text = String::with_capacity(raw.len());
    let mut errors = 0;
    for chunk in raw.utf8_chunks() {
        text.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            text.push(char::REPLACEMENT_CHARACTER);
            errors += 1;
        }
    }
    (text, errors)
}

/// `Name: value` with a printable ASCII field name.
fn is_header_line(line: &str) -> bool {
    match line.split_once(':') {
        Some((name, _)) => {
            !name.is_empty() && name.bytes().all(|b| b.is_ascii_graphic() && b != b':')
        }
        None => false,
    }
}

/// Split raw email bytes into subject and body.
///
/// The header block is everything before the first blank line; it counts as a
/// header block only if at least one of its lines has the `Name: value` form.
/// Without one, the whole content is the body. A leading mbox `From ` line is
/// skipped.
pub fn parse_email(raw: &[u8]) -> ParsedEmail {
    let (text, decode_errors) = decode_lossy(raw);

    let mut content = text.as_str();
    if content.starts_with("From ") {
        content = content.split_once('\n').map_or("", |(_, rest)| rest);
    }

    let mut offset = 0;
    let mut header_end = None;
    for line in content.split_inclusive('\n') {
        if line.trim().is_empty() {
            header_end = Some((offset, offset + line.len()));
            break;
        }
        offset += line.len();
    }
    let (headers, body) = match header_end {
        Some((end, body_start)) => (&content[..end], &content[body_start..]),
        None => (content, ""),
    };

    let header_lines = || headers.lines().map(|l| l.trim_end_matches('\r'));
    if !header_lines().any(is_header_line) {
        return ParsedEmail {
            subject: String::new(),
            body: text,
            decode_errors,
        };
    }

    let subject = header_lines()
        .find(|l| l.len() >= 8 && l[..8].eq_ignore_ascii_case("subject:"))
        .map(|l| l[8..].trim().to_string())
        .unwrap_or_default();
    ParsedEmail {
        subject,
        body: body.to_string(),
        decode_errors,
    }
}

fn read_tree(root: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    if !root.is_dir() {
        return Err(Error::Config(format!(
            "not a directory: {}",
            root.display()
        )));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under root");
        let rel = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let bytes = std::fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        files.push((rel, bytes));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

/// Load every regular file under `dir` (recursively) with a fixed label.
/// Source ids are `<prefix>/<relative path>`.
pub fn load_dir(dir: &Path, label: Label, prefix: &str) -> Result<Vec<Message>> {
    Ok(read_tree(dir)?
        .into_iter()
        .map(|(rel, bytes)| Message::new(parse_email(&bytes), label, format!("{prefix}/{rel}")))
        .collect())
}

/// Load a spam directory and a ham directory, ordered by source id.
pub fn load_labeled_dir(spam_dir: &Path, ham_dir: &Path) -> Result<Vec<Message>> {
    let mut messages = load_dir(spam_dir, Label::Spam, "spam")?;
    messages.extend(load_dir(ham_dir, Label::Ham, "ham")?);
    messages.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    Ok(messages)
}

/// Ling-Spam layout: one directory tree mixing both classes, where spam files
/// carry the `spmsg` filename prefix.
pub fn load_lingspam(root: &Path, prefix: &str) -> Result<Vec<Message>> {
    Ok(read_tree(root)?
        .into_iter()
        .map(|(rel, bytes)| {
            let file_name = rel.rsplit('/').next().unwrap_or(&rel);
            let label = if file_name.starts_with("spmsg") {
                Label::Spam
            } else {
                Label::Ham
            };
            Message::new(parse_email(&bytes), label, format!("{prefix}/{rel}"))
        })
        .collect())
}

/// Messages grouped by named source ("LS", "SAe-G2", ...).
#[derive(Clone, Debug, Default)]
pub struct Pool {
    sources: BTreeMap<String, Vec<Message>>,
}

impl Pool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_source(&mut self, name: impl Into<String>, mut messages: Vec<Message>) {
        let entry = self.sources.entry(name.into()).or_default();
        entry.append(&mut messages);
        entry.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    }

    pub fn source(&self, name: &str) -> Option<&[Message]> {
        self.sources.get(name).map(Vec::as_slice)
    }

    pub fn source_names(&self) -> impl Iterator<Item = &str> {
        self.sources.keys().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceCount {
    pub source: String,
    pub count: usize,
}

impl SourceCount {
    pub fn new(source: impl Into<String>, count: usize) -> Self {
        SourceCount {
            source: source.into(),
            count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdsSpec {
    pub name: String,
    pub spam: SourceCount,
    pub ham: Vec<SourceCount>,
    pub seed: u64,
}

/// (name, spam source, spam count, ham sources).
type Preset = (
    &'static str,
    &'static str,
    usize,
    &'static [(&'static str, usize)],
);

const PRESETS: &[Preset] = &[
    ("LS-FULL", "LS", 481, &[("LS", 2412)]),
    ("LS-11", "LS", 400, &[("LS", 400)]),
    ("LS-46", "LS", 400, &[("LS", 600)]),
    ("LS-15", "LS", 200, &[("LS", 1000)]),
    ("SAe-11", "SAs-G2", 400, &[("SAe-G2", 400)]),
    ("SAe-46", "SAs-G2", 400, &[("SAe-G2", 600)]),
    ("SAe-15", "SAs-G2", 200, &[("SAe-G2", 1000)]),
    ("SAeh-11", "SAs-G2", 400, &[("SAe-G2", 200), ("SAh", 200)]),
    ("SAeh-46", "SAs-G2", 400, &[("SAe-G2", 400), ("SAh", 200)]),
    ("SAeh-15", "SAs-G2", 200, &[("SAe-G2", 800), ("SAh", 200)]),
    ("BKS-LS-11", "BKS", 400, &[("LS", 400)]),
    ("BKS-LS-46", "BKS", 400, &[("LS", 600)]),
    ("BKS-LS-15", "BKS", 200, &[("LS", 1000)]),
    ("BKS-SAe-11", "BKS", 400, &[("SAe-G2", 400)]),
    ("BKS-SAe-46", "BKS", 400, &[("SAe-G2", 600)]),
    ("BKS-SAe-15", "BKS", 200, &[("SAe-G2", 1000)]),
    ("BKS-SAeh-11", "BKS", 400, &[("SAe-G2", 200), ("SAh", 200)]),
    ("BKS-SAeh-46", "BKS", 400, &[("SAe-G2", 400), ("SAh", 200)]),
    ("BKS-SAeh-15", "BKS", 200, &[("SAe-G2", 800), ("SAh", 200)]),
];

impl EdsSpec {
    /// One of the standard compositions (`LS-11`, `SAeh-46`, ...), or `None`.
    pub fn preset(name: &str, seed: u64) -> Option<EdsSpec> {
        PRESETS
            .iter()
            .find(|p| p.0 == name)
            .map(|&(name, spam, spam_count, ham)| EdsSpec {
                name: name.to_string(),
                spam: SourceCount::new(spam, spam_count),
                ham: ham.iter().map(|&(s, n)| SourceCount::new(s, n)).collect(),
                seed,
            })
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|p| p.0)
    }

    pub fn spam_count(&self) -> usize {
        self.spam.count
    }

    pub fn ham_count(&self) -> usize {
        self.ham.iter().map(|s| s.count).sum()
    }
}

/// A labeled spam/ham collection, in seeded shuffled order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmailDataSet {
    pub name: String,
    pub seed: u64,
    pub messages: Vec<Message>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source_id: String,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdsManifest {
    pub name: String,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl EmailDataSet {
    /// Use a whole message list as-is (e.g. every file of a spam/ham pair).
    pub fn from_messages(name: impl Into<String>, seed: u64, messages: Vec<Message>) -> Self {
        EmailDataSet {
            name: name.into(),
            seed,
            messages,
        }
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.messages.iter().filter(|m| m.label == label).count()
    }

    pub fn manifest(&self) -> EdsManifest {
        EdsManifest {
            name: self.name.clone(),
            seed: self.seed,
            entries: self
                .messages
                .iter()
                .map(|m| ManifestEntry {
                    source_id: m.source_id.clone(),
                    label: m.label,
                })
                .collect(),
        }
    }
}

/// Draw the requested counts from each source by seeded sampling without
/// replacement, then shuffle the union with the same generator.
pub fn compose_eds(pool: &Pool, spec: &EdsSpec) -> Result<EmailDataSet> {
    let mut rng = SeededRng::new(spec.seed);
    let mut used: HashSet<&str> = HashSet::new();
    let mut chosen: Vec<&Message> = Vec::with_capacity(spec.spam_count() + spec.ham_count());

    let requests =
        std::iter::once((&spec.spam, Label::Spam)).chain(spec.ham.iter().map(|s| (s, Label::Ham)));
    for (request, label) in requests {
        let source = pool
            .source(&request.source)
            .ok_or_else(|| Error::Config(format!("unknown message source `{}`", request.source)))?;
        let mut candidates: Vec<&Message> = source
            .iter()
            .filter(|m| m.label == label && !used.contains(m.source_id.as_str()))
            .collect();
        if candidates.len() < request.count {
            return Err(Error::InsufficientMessages {
                source_name: request.source.clone(),
                label: label.as_str(),
                requested: request.count,
                available: candidates.len(),
            });
        }
        rng.shuffle(&mut candidates);
        candidates.truncate(request.count);
        used.extend(candidates.iter().map(|m| m.source_id.as_str()));
        chosen.extend(candidates);
    }
    rng.shuffle(&mut chosen);

    Ok(EmailDataSet {
        name: spec.name.clone(),
        seed: spec.seed,
        messages: chosen.into_iter().cloned().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    /// Fold index of each message, parallel to the data set's message order.
    pub assignments: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Per class: seeded shuffle, then round-robin over the `k` folds. Spam is
/// shuffled before ham, from one generator.
pub fn stratified_folds(eds: &EmailDataSet, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut assignments = vec![0; eds.messages.len()];
    for label in [Label::Spam, Label::Ham] {
        let mut members: Vec<usize> = (0..eds.messages.len())
            .filter(|&i| eds.messages[i].label == label)
            .collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                label: label.as_str(),
                size: members.len(),
                k,
            });
        }
        rng.shuffle(&mut members);
        for (pos, &i) in members.iter().enumerate() {
            assignments[i] = pos % k;
        }
    }
    Ok(FoldAssignment {
        k,
        seed,
        assignments,
    })
}
