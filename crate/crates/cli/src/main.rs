//! `stfilter`: build suffix-tree profiles, classify messages and run
//! cross-validated experiments from JSON specs.

mod spec;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use stfilter::evaluation::{optimal_threshold, summarize, MetricSet};
use stfilter::{
    classify, load_dir, parse_email, run_cv, stratified_folds, ClassTree, Label, MatchNorm,
    ScoringConfig, SignificanceKind, DEFAULT_DEPTH,
};

use crate::spec::ExperimentSpec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] stfilter::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(stfilter::Error::Invariant(_)) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "stfilter",
    version,
    about = "Suffix-tree spam filtering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a class profile from every file under a directory.
    Build {
        class_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify files against a ham and a spam profile.
    Classify {
        #[arg(long)]
        ham: PathBuf,
        #[arg(long)]
        spam: PathBuf,
        #[arg(long, default_value = "constant")]
        phi: SignificanceKind,
        #[arg(long, default_value = "none")]
        norm: MatchNorm,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        /// Defaults to the shallower of the two profiles.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run a cross-validated experiment and write its reports.
    Eval { spec: PathBuf },
    /// Compose the data set of an experiment spec and emit its manifest.
    ComposeEds {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the stratified fold assignment of an experiment spec.
    Folds {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build {
            class_dir,
            depth,
            out,
        } => cmd_build(&class_dir, depth, &out),
        Command::Classify {
            ham,
            spam,
            phi,
            norm,
            threshold,
            depth,
            inputs,
        } => cmd_classify(&ham, &spam, phi, norm, threshold, depth, &inputs),
        Command::Eval { spec } => cmd_eval(&spec),
        Command::ComposeEds { spec, out } => cmd_compose(&spec, out.as_deref()),
        Command::Folds { spec, out } => cmd_folds(&spec, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stfilter: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Write via a temporary file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}

fn cmd_build(class_dir: &Path, depth: usize, out: &Path) -> Result<(), CliError> {
    let mut tree = ClassTree::new(depth)?;
    // the label is irrelevant for a single-class profile
    let messages = load_dir(class_dir, Label::Ham, "class")?;
    if messages.is_empty() {
        return Err(CliError::Usage(format!(
            "no files under {}",
            class_dir.display()
        )));
    }
    for m in &messages {
        tree.insert_string(&m.text());
    }
    write_atomic(out, tree.to_profile_string().as_bytes())?;
    let stats = tree.stats();
    println!("node_count: {}", stats.node_count);
    println!("frequency_sum: {}", stats.frequency_sum);
    println!("char_count: {}", tree.char_count());
    Ok(())
}

fn read_profile(path: &Path) -> Result<ClassTree, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot open profile {}: {e}", path.display())))?;
    ClassTree::read_profile(std::io::BufReader::new(file))
        .map_err(|e| CliError::Usage(format!("bad profile {}: {e}", path.display())))
}

fn format_hsr(hsr: f64, no_evidence: bool) -> String {
    if no_evidence {
        "no-evidence".into()
    } else if hsr.is_infinite() {
        "inf".into()
    } else {
        format!("{hsr:.6}")
    }
}

fn cmd_classify(
    ham: &Path,
    spam: &Path,
    phi: SignificanceKind,
    norm: MatchNorm,
    threshold: f64,
    depth: Option<usize>,
    inputs: &[PathBuf],
) -> Result<(), CliError> {
    let ham_tree = read_profile(ham)?;
    let spam_tree = read_profile(spam)?;
    let depth = depth.unwrap_or(ham_tree.depth_limit().min(spam_tree.depth_limit()));
    let cfg = ScoringConfig::new(phi, norm, depth).with_threshold(threshold);
    cfg.validate()?;
    let mut out = String::new();
    for path in inputs {
        let raw = fs::read(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let text = stfilter::Message::new(parse_email(&raw), Label::Ham, "").text();
        let v = classify(&ham_tree, &spam_tree, &text, &cfg)?;
        writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}",
            path.display(),
            v.label,
            format_hsr(v.hsr, v.no_evidence),
            v.ham_score,
            v.spam_score
        )
        .expect("writing to a String");
    }
    print!("{out}");
    Ok(())
}

fn percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

fn metric_line(m: &MetricSet) -> String {
    format!(
        "SR {} SP {} HR {} HP {} FPR {} FNR {} sum_errors {}",
        percent(m.sr),
        percent(m.sp),
        percent(m.hr),
        percent(m.hp),
        percent(m.fpr),
        percent(m.fnr),
        percent(m.sum_errors)
    )
}

#[derive(Serialize)]
struct InputRecord {
    source_id: String,
    label: Label,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    spec: serde_json::Value,
    spec_sha256: String,
    eds: String,
    seed: u64,
    folds: usize,
    inputs: Vec<InputRecord>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").expect("writing to a String");
            s
        })
}

fn cmd_eval(spec_path: &Path) -> Result<(), CliError> {
    let (spec, spec_text) = ExperimentSpec::load(spec_path)?;
    let classifier = spec.classifier()?;
    let thresholds = spec.thresholds.values()?;
    let resolved = spec.data_set()?;
    let eds = &resolved.eds;
    let folds = stratified_folds(eds, spec.folds, spec.seed)?;
    let report = run_cv(eds, &folds, &classifier, &thresholds)?;
    report.check_invariants()?;

    let inputs = resolved
        .inputs
        .iter()
        .map(|f| {
            let bytes = fs::read(&f.path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", f.path.display())))?;
            Ok(InputRecord {
                source_id: f.source_id.clone(),
                label: f.label,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let manifest = RunManifest {
        spec: serde_json::from_str(&spec_text).expect("spec parsed once already"),
        spec_sha256: sha256_hex(spec_text.as_bytes()),
        eds: eds.name.clone(),
        seed: spec.seed,
        folds: spec.folds,
        inputs,
    };

    let out = &spec.output_dir;
    let roc = stfilter::roc_points(&report);
    write_atomic(&out.join("sweep.csv"), report.to_csv().as_bytes())?;
    write_atomic(&out.join("roc.csv"), stfilter::roc_csv(&roc).as_bytes())?;
    write_atomic(
        &out.join("summary.json"),
        to_json(&summarize(&report)).as_bytes(),
    )?;
    write_atomic(&out.join("manifest.json"), to_json(&manifest).as_bytes())?;

    println!(
        "{}: {} spam, {} ham, {} folds, seed {}",
        eds.name, report.spam_count, report.ham_count, spec.folds, spec.seed
    );
    match report.row_at(1.0) {
        Some(row) => println!("th=1.00  {}", metric_line(&row.metrics)),
        None => println!("th=1.00  not in the threshold grid"),
    }
    if let Some(opt) = optimal_threshold(&report) {
        let range = if opt.low == opt.high {
            format!("{:.2}", opt.low)
        } else {
            format!("{:.2}-{:.2}", opt.low, opt.high)
        };
        let note = if opt.contiguous {
            ""
        } else {
            " (non-contiguous tie)"
        };
        println!("optimal th={range}{note}  {}", metric_line(&opt.metrics));
    }
    println!("reports written to {}", out.display());
    Ok(())
}

fn cmd_compose(spec_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let (spec, _) = ExperimentSpec::load(spec_path)?;
    let resolved = spec.data_set()?;
    emit(out, &to_json(&resolved.eds.manifest()))
}

#[derive(Serialize)]
struct FoldRecord<'a> {
    source_id: &'a str,
    label: Label,
    fold: usize,
}

#[derive(Serialize)]
struct FoldsOut<'a> {
    eds: &'a str,
    k: usize,
    seed: u64,
    assignments: Vec<FoldRecord<'a>>,
}

fn cmd_folds(spec_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let (spec, _) = ExperimentSpec::load(spec_path)?;
    let resolved = spec.data_set()?;
    let eds = &resolved.eds;
    let folds = stratified_folds(eds, spec.folds, spec.seed)?;
    let listing = FoldsOut {
        eds: &eds.name,
        k: folds.k,
        seed: folds.seed,
        assignments: eds
            .messages
            .iter()
            .zip(&folds.assignments)
            .map(|(m, &fold)| FoldRecord {
                source_id: m.source_id(),
                label: m.label(),
                fold,
            })
            .collect(),
    };
    emit(out, &to_json(&listing))
}
