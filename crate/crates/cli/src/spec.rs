//! JSON experiment specs and their resolution into data sets and classifiers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stfilter::{
    compose_eds, load_dir, load_lingspam, Classifier, EdsSpec, EmailDataSet, Label, MatchNorm,
    Pool, ScoringConfig, SignificanceKind, SourceCount, ThresholdGrid, TokenPipeline,
    DEFAULT_DEPTH,
};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    pub eds: EdsChoice,
    pub classifier: ClassifierSpec,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub seed: u64,
    #[serde(default)]
    pub thresholds: ThresholdGrid,
    pub output_dir: PathBuf,
}

fn default_folds() -> usize {
    10
}

/// A named message source: either a Ling-Spam tree (`lingspam`) or a plain
/// directory with one fixed label (`dir` + `label`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lingspam: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomEds {
    pub name: String,
    pub spam: SourceCount,
    pub ham: Vec<SourceCount>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EdsChoice {
    Preset(String),
    Custom(CustomEds),
    /// Every file of a spam and a ham directory, no sampling.
    Dirs {
        spam: PathBuf,
        ham: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClassifierSpec {
    St {
        #[serde(default = "default_phi")]
        phi: SignificanceKind,
        #[serde(default = "default_norm")]
        norm: MatchNorm,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    Nb {
        /// One word per line; the built-in list when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stopwords: Option<PathBuf>,
        #[serde(default = "default_min_len")]
        min_token_length: usize,
    },
}

fn default_phi() -> SignificanceKind {
    SignificanceKind::Constant
}

fn default_norm() -> MatchNorm {
    MatchNorm::None
}

fn default_depth() -> usize {
    DEFAULT_DEPTH
}

fn default_min_len() -> usize {
    stfilter::naive_bayes::DEFAULT_MIN_TOKEN_LENGTH
}

/// An input file that contributed to the data set, for checksumming.
pub struct InputFile {
    pub source_id: String,
    pub label: Label,
    pub path: PathBuf,
}

pub struct Resolved {
    pub eds: EmailDataSet,
    pub inputs: Vec<InputFile>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read spec {}: {e}", path.display())))?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid spec {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.resolve_paths(base);
        spec.validate()?;
        Ok((spec, text))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for source in &mut self.sources {
            source.lingspam.as_mut().map(join);
            source.dir.as_mut().map(join);
        }
        if let EdsChoice::Dirs { spam, ham } = &mut self.eds {
            join(spam);
            join(ham);
        }
        if let ClassifierSpec::Nb {
            stopwords: Some(p), ..
        } = &mut self.classifier
        {
            join(p);
        }
        join(&mut self.output_dir);
    }

    fn validate(&self) -> Result<(), CliError> {
        for source in &self.sources {
            match (&source.lingspam, &source.dir, source.label) {
                (Some(_), None, None) | (None, Some(_), Some(_)) => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "source `{}` needs either `lingspam` or both `dir` and `label`",
                        source.name
                    )))
                }
            }
        }
        if let EdsChoice::Preset(name) = &self.eds {
            if EdsSpec::preset(name, self.seed).is_none() {
                let known: Vec<&str> = EdsSpec::preset_names().collect();
                return Err(CliError::Usage(format!(
                    "unknown data set preset `{name}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        if self.folds < 2 {
            return Err(CliError::Usage(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        self.thresholds.values()?;
        if let ClassifierSpec::St { phi, norm, depth } = self.classifier {
            ScoringConfig::new(phi, norm, depth).validate()?;
        }
        Ok(())
    }

    pub fn classifier(&self) -> Result<Classifier, CliError> {
        Ok(match &self.classifier {
            ClassifierSpec::St { phi, norm, depth } => {
                Classifier::SuffixTree(ScoringConfig::new(*phi, *norm, *depth))
            }
            ClassifierSpec::Nb {
                stopwords,
                min_token_length,
            } => {
                let words = match stopwords {
                    Some(path) => fs::read_to_string(path).map_err(|e| {
                        CliError::Usage(format!("cannot read stopwords {}: {e}", path.display()))
                    })?,
                    None => stfilter::naive_bayes::DEFAULT_STOPWORDS.to_string(),
                };
                Classifier::NaiveBayes(TokenPipeline::new(&words, *min_token_length))
            }
        })
    }

    /// Load the sources and compose the data set.
    pub fn data_set(&self) -> Result<Resolved, CliError> {
        // source-id prefix -> directory the relative part is under
        let mut roots: BTreeMap<String, PathBuf> = BTreeMap::new();
        let eds = match &self.eds {
            EdsChoice::Dirs { spam, ham } => {
                roots.insert("spam".into(), spam.clone());
                roots.insert("ham".into(), ham.clone());
                let messages = stfilter::load_labeled_dir(spam, ham)?;
                EmailDataSet::from_messages("dirs", self.seed, messages)
            }
            choice => {
                let spec = match choice {
                    EdsChoice::Preset(name) => {
                        EdsSpec::preset(name, self.seed).expect("validated preset")
                    }
                    EdsChoice::Custom(c) => EdsSpec {
                        name: c.name.clone(),
                        spam: c.spam.clone(),
                        ham: c.ham.clone(),
                        seed: self.seed,
                    },
                    EdsChoice::Dirs { .. } => unreachable!(),
                };
                let mut pool = Pool::new();
                for source in &self.sources {
                    if roots.contains_key(&source.name) {
                        return Err(CliError::Usage(format!(
                            "source `{}` is declared twice",
                            source.name
                        )));
                    }
                    let messages = match (&source.lingspam, &source.dir, source.label) {
                        (Some(root), _, _) => {
                            roots.insert(source.name.clone(), root.clone());
                            load_lingspam(root, &source.name)?
                        }
                        (None, Some(dir), Some(label)) => {
                            roots.insert(source.name.clone(), dir.clone());
                            load_dir(dir, label, &source.name)?
                        }
                        _ => unreachable!("validated source"),
                    };
                    pool.add_source(source.name.clone(), messages);
                }
                compose_eds(&pool, &spec)?
            }
        };
        let inputs = eds
            .messages
            .iter()
            .map(|m| {
                let (prefix, rel) = m
                    .source_id()
                    .split_once('/')
                    .expect("source ids are prefix/relative");
                InputFile {
                    source_id: m.source_id().to_string(),
                    label: m.label(),
                    path: roots[prefix].join(rel),
                }
            })
            .collect();
        Ok(Resolved { eds, inputs })
    }
}
