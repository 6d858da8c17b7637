use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn stfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stfilter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_files(dir: &Path, files: &[(&str, &str)]) {
    fs::create_dir_all(dir).unwrap();
    for (name, body) in files {
        fs::write(dir.join(name), body).unwrap();
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_reports_worked_example_counts() {
    let tmp = TempDir::new().unwrap();
    let class = tmp.path().join("class");
    write_files(&class, &[("1", "meet"), ("2", "feet")]);
    let profile = tmp.path().join("p.json");
    let o = stfilter(&["build", path_str(&class), "--out", path_str(&profile)]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("node_count: 13"), "{text}");
    assert!(text.contains("frequency_sum: 20"), "{text}");
    assert!(text.contains("char_count: 8"), "{text}");

    let first = fs::read(&profile).unwrap();
    let again = tmp.path().join("q.json");
    assert!(
        stfilter(&["build", path_str(&class), "--out", path_str(&again)])
            .status
            .success()
    );
    assert_eq!(first, fs::read(&again).unwrap());
}

#[test]
fn build_rejects_bad_input_with_exit_2() {
    let tmp = TempDir::new().unwrap();
    let class = tmp.path().join("class");
    write_files(&class, &[("1", "meet")]);
    let out = tmp.path().join("p.json");
    let o = stfilter(&[
        "build",
        path_str(&class),
        "--depth",
        "0",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = stfilter(&[
        "build",
        path_str(&tmp.path().join("missing")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing"));
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(
        stfilter(&["build", path_str(&empty), "--out", path_str(&out)])
            .status
            .code(),
        Some(2)
    );
}

struct Profiles {
    _tmp: TempDir,
    dir: PathBuf,
    ham: String,
    spam: String,
}

fn profiles(ham_docs: &[(&str, &str)], spam_docs: &[(&str, &str)]) -> Profiles {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_path_buf();
    write_files(&dir.join("ham"), ham_docs);
    write_files(&dir.join("spam"), spam_docs);
    let ham = dir.join("ham.json");
    let spam = dir.join("spam.json");
    for (src, out) in [("ham", &ham), ("spam", &spam)] {
        let o = stfilter(&["build", path_str(&dir.join(src)), "--out", path_str(out)]);
        assert!(o.status.success(), "{o:?}");
    }
    Profiles {
        _tmp: tmp,
        ham: path_str(&ham).to_string(),
        spam: path_str(&spam).to_string(),
        dir,
    }
}

fn classify_line(p: &Profiles, file: &str, extra: &[&str]) -> Vec<String> {
    let input = p.dir.join(file);
    let mut args = vec!["classify", "--ham", &p.ham, "--spam", &p.spam];
    args.extend_from_slice(extra);
    args.push(path_str(&input));
    let o = stfilter(&args);
    assert!(o.status.success(), "{o:?}");
    stdout(&o)
        .trim_end()
        .split('\t')
        .map(str::to_string)
        .collect()
}

#[test]
fn classify_labels_and_flags() {
    let p = profiles(
        &[
            ("h1", "see you at the seminar on syntax"),
            ("h2", "lecture notes attached"),
        ],
        &[
            ("s1", "cheap pills buy now"),
            ("s2", "buy cheap watches now"),
        ],
    );
    fs::write(p.dir.join("spammy"), "Subject: buy now\n\ncheap pills").unwrap();
    fs::write(p.dir.join("alien"), "ЖЖЖ").unwrap();

    let line = classify_line(&p, "spammy", &["--phi", "linear"]);
    assert_eq!(line.len(), 5);
    assert!(line[0].ends_with("spammy"));
    assert_eq!(line[1], "spam");

    let line = classify_line(&p, "alien", &[]);
    assert_eq!(&line[1..], ["ham", "no-evidence", "0.000000", "0.000000"]);
}

#[test]
fn borderline_file_flips_once_across_the_sweep() {
    let p = profiles(&[("h", "abcd")], &[("s", "abce")]);
    fs::write(p.dir.join("edge"), "abc").unwrap();
    let labels: Vec<String> = ["0.7", "0.8", "0.9", "1.0", "1.1", "1.2", "1.3"]
        .iter()
        .map(|th| classify_line(&p, "edge", &["--threshold", th])[1].clone())
        .collect();
    assert_eq!(labels, ["ham", "ham", "ham", "ham", "spam", "spam", "spam"]);
}

#[test]
fn classify_rejects_bad_profiles_and_depths() {
    let p = profiles(&[("h", "abcd")], &[("s", "abce")]);
    fs::write(p.dir.join("doc"), "abc").unwrap();
    fs::write(p.dir.join("junk.json"), "{\"depth\": 3}").unwrap();
    let doc = p.dir.join("doc");
    let junk = p.dir.join("junk.json");
    let o = stfilter(&[
        "classify",
        "--ham",
        path_str(&junk),
        "--spam",
        &p.spam,
        path_str(&doc),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = stfilter(&[
        "classify",
        "--ham",
        &p.ham,
        "--spam",
        &p.spam,
        "--depth",
        "9",
        path_str(&doc),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = stfilter(&[
        "classify",
        "--ham",
        &p.ham,
        "--spam",
        &p.spam,
        "--phi",
        "cubic",
        path_str(&doc),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

/// 10 spam files of x's and 10 ham files of y's.
fn separable_experiment(root: &Path, classifier: &str) -> PathBuf {
    for i in 0..10 {
        write_files(
            &root.join("corpus/spam"),
            &[(
                &format!("s{i:02}"),
                &format!("Subject: cash offer\n\n{}", "x".repeat(20 + i)),
            )],
        );
        write_files(
            &root.join("corpus/ham"),
            &[(
                &format!("h{i:02}"),
                &format!("Subject: seminar notes\n\n{}", "y".repeat(20 + i)),
            )],
        );
    }
    let spec = root.join("exp.json");
    fs::write(
        &spec,
        format!(
            r#"{{
  "eds": {{"dirs": {{"spam": "corpus/spam", "ham": "corpus/ham"}}}},
  "classifier": {classifier},
  "folds": 5,
  "seed": 42,
  "thresholds": {{"lo": 0.7, "hi": 1.3, "step": 0.1}},
  "output_dir": "out"
}}"#
        ),
    )
    .unwrap();
    spec
}

#[test]
fn eval_on_separable_data_has_no_errors() {
    for classifier in [r#"{"kind": "st", "phi": "linear"}"#, r#"{"kind": "nb"}"#] {
        let tmp = TempDir::new().unwrap();
        let spec = separable_experiment(tmp.path(), classifier);
        let o = stfilter(&["eval", path_str(&spec)]);
        assert!(o.status.success(), "{o:?}");
        assert!(stdout(&o).contains("sum_errors 0.00%"));

        let out = tmp.path().join("out");
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        for key in [
            "eds",
            "config",
            "optimal_threshold",
            "metrics_at_1.0",
            "metrics_at_optimal",
            "breakeven_spam",
            "breakeven_ham",
        ] {
            assert!(summary.get(key).is_some(), "missing {key}");
        }
        assert_eq!(summary["metrics_at_1.0"]["sum_errors"], 0.0);
        assert_eq!(summary["optimal_threshold"]["low"], 0.7);
        assert_eq!(summary["optimal_threshold"]["high"], 1.3);

        let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
        assert_eq!(sweep.lines().count(), 8);
        for row in sweep.lines().skip(1) {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[12], "0.000000", "{row}");
        }
        assert_eq!(
            fs::read_to_string(out.join("roc.csv")).unwrap(),
            "fpr,tpr\n0.000000,1.000000\n"
        );

        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["seed"], 42);
        assert_eq!(manifest["inputs"].as_array().unwrap().len(), 20);
        assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
        assert_eq!(manifest["spec"]["folds"], 5);
    }
}

#[test]
fn eval_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let spec = separable_experiment(tmp.path(), r#"{"kind": "st", "norm": "permutation"}"#);
    let out = tmp.path().join("out");
    let read_all = || {
        ["sweep.csv", "roc.csv", "summary.json", "manifest.json"]
            .map(|f| fs::read(out.join(f)).unwrap())
    };
    assert!(stfilter(&["eval", path_str(&spec)]).status.success());
    let first = read_all();
    assert!(stfilter(&["eval", path_str(&spec)]).status.success());
    assert_eq!(first, read_all());
}

#[test]
fn eval_rejects_invalid_specs_with_exit_2() {
    let tmp = TempDir::new().unwrap();
    let spec = separable_experiment(tmp.path(), r#"{"kind": "st", "colour": "red"}"#);
    let o = stfilter(&["eval", path_str(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let spec = separable_experiment(tmp.path(), r#"{"kind": "st", "depth": 0}"#);
    assert_eq!(stfilter(&["eval", path_str(&spec)]).status.code(), Some(2));

    let text = fs::read_to_string(&spec)
        .unwrap()
        .replace(r#""depth": 0"#, r#""depth": 4"#)
        .replace("corpus/ham", "corpus/nothing");
    fs::write(&spec, text).unwrap();
    let o = stfilter(&["eval", path_str(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nothing"));

    assert_eq!(
        stfilter(&["eval", "/no/such/spec.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn compose_and_folds_commands() {
    let tmp = TempDir::new().unwrap();
    separable_experiment(tmp.path(), r#"{"kind": "nb"}"#);
    let spec = tmp.path().join("custom.json");
    fs::write(
        &spec,
        r#"{
  "sources": [
    {"name": "S", "dir": "corpus/spam", "label": "spam"},
    {"name": "H", "dir": "corpus/ham", "label": "ham"}
  ],
  "eds": {"custom": {"name": "S-H-46", "spam": {"source": "S", "count": 4}, "ham": [{"source": "H", "count": 6}]}},
  "classifier": {"kind": "nb"},
  "folds": 2,
  "seed": 7,
  "output_dir": "out"
}"#,
    )
    .unwrap();

    let o = stfilter(&["compose-eds", path_str(&spec)]);
    assert!(o.status.success(), "{o:?}");
    let manifest: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(manifest["name"], "S-H-46");
    let entries = manifest["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 10);
    assert_eq!(entries.iter().filter(|e| e["label"] == "spam").count(), 4);
    assert_eq!(
        stdout(&stfilter(&["compose-eds", path_str(&spec)])),
        stdout(&o)
    );

    let out = tmp.path().join("folds.json");
    assert!(
        stfilter(&["folds", path_str(&spec), "--out", path_str(&out)])
            .status
            .success()
    );
    let folds: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(folds["k"], 2);
    let per_fold = |label: &str, fold: u64| {
        folds["assignments"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|a| a["label"] == label && a["fold"] == fold)
            .count()
    };
    assert_eq!((per_fold("spam", 0), per_fold("spam", 1)), (2, 2));
    assert_eq!((per_fold("ham", 0), per_fold("ham", 1)), (3, 3));

    let short = fs::read_to_string(&spec)
        .unwrap()
        .replace(r#""count": 6"#, r#""count": 11"#);
    fs::write(&spec, short).unwrap();
    let o = stfilter(&["compose-eds", path_str(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("short by 1"));
}
