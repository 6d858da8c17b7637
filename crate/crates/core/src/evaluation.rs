//! Cross-validation, threshold sweeps and the derived reports.
//!
//! Every held-out document is scored once per fold; decisions at each
//! threshold are re-derived from the stored hsr values. Confusions are summed
//! over folds before any rate is computed.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmailDataSet, FoldAssignment, Label};
use crate::error::{Error, Result};
use crate::naive_bayes::{train_nb, TokenPipeline};
use crate::st_classifier::{
    check_threshold, classify_chars, decide, MatchNorm, ScoringConfig, SignificanceKind,
};
use crate::suffix_tree::ClassTree;

pub enum Classifier {
    SuffixTree(ScoringConfig),
    NaiveBayes(TokenPipeline),
}

impl Classifier {
    pub fn echo(&self) -> ClassifierEcho {
        match self {
            Classifier::SuffixTree(cfg) => ClassifierEcho::St {
                phi: cfg.phi,
                norm: cfg.norm,
                depth: cfg.depth,
            },
            Classifier::NaiveBayes(pipeline) => ClassifierEcho::Nb {
                pipeline: pipeline.id(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierEcho {
    St {
        phi: SignificanceKind,
        norm: MatchNorm,
        depth: usize,
    },
    Nb {
        pipeline: String,
    },
}

/// `XY` counts items of true class X assigned to class Y.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub ss: u64,
    pub sh: u64,
    pub hs: u64,
    pub hh: u64,
}

impl Confusion {
    pub fn new(ss: u64, sh: u64, hs: u64, hh: u64) -> Self {
        Confusion { ss, sh, hs, hh }
    }

    pub fn record(&mut self, truth: Label, assigned: Label) {
        match (truth, assigned) {
            (Label::Spam, Label::Spam) => self.ss += 1,
            (Label::Spam, Label::Ham) => self.sh += 1,
            (Label::Ham, Label::Spam) => self.hs += 1,
            (Label::Ham, Label::Ham) => self.hh += 1,
        }
    }

    pub fn spam_total(&self) -> u64 {
        self.ss + self.sh
    }

    pub fn ham_total(&self) -> u64 {
        self.hs + self.hh
    }

    pub fn total(&self) -> u64 {
        self.spam_total() + self.ham_total()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub sr: f64,
    pub sp: f64,
    pub hr: f64,
    pub hp: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub sum_errors: f64,
    /// Nothing was assigned to spam, so SP is reported as 0.
    pub sp_undefined: bool,
    /// Nothing was assigned to ham, so HP is reported as 0.
    pub hp_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics(c: &Confusion) -> Result<MetricSet> {
    if c.spam_total() == 0 || c.ham_total() == 0 {
        return Err(Error::IllPosed(format!(
            "need both classes in the test set, got {} spam and {} ham",
            c.spam_total(),
            c.ham_total()
        )));
    }
    let sr = c.ss as f64 / c.spam_total() as f64;
    let hr = c.hh as f64 / c.ham_total() as f64;
    let (sp, sp_undefined) = ratio(c.ss, c.ss + c.hs);
    let (hp, hp_undefined) = ratio(c.hh, c.hh + c.sh);
    let fpr = c.hs as f64 / c.ham_total() as f64;
    let fnr = 1.0 - sr;
    Ok(MetricSet {
        sr,
        sp,
        hr,
        hp,
        tpr: sr,
        fpr,
        fnr,
        sum_errors: fpr + fnr,
        sp_undefined,
        hp_undefined,
    })
}

/// Evenly spaced thresholds `lo, lo + step, ..., hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid {
            lo: 0.70,
            hi: 1.30,
            step: 0.02,
        }
    }
}

impl ThresholdGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        check_threshold(self.lo)?;
        check_threshold(self.hi)?;
        if self.hi < self.lo || !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "threshold grid needs lo <= hi and a positive step, got {:?}",
                self
            )));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        // rounded to 1e-9 so that e.g. 0.7 + 15 * 0.02 lands exactly on 1.0
        Ok((0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

/// Stored result of scoring one held-out document.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub label: Label,
    pub fold: usize,
    pub hsr: f64,
    pub no_evidence: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub confusion: Confusion,
    pub metrics: MetricSet,
    pub no_evidence: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub eds: String,
    pub seed: u64,
    pub folds: usize,
    pub config: ClassifierEcho,
    pub spam_count: u64,
    pub ham_count: u64,
    pub rows: Vec<SweepRow>,
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::Config("at least one threshold is required".into()));
    }
    for &t in thresholds {
        check_threshold(t)?;
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "thresholds must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Train on all folds but one and score the held-out fold, for every fold.
/// Returns one outcome per message, in data-set order.
pub fn score_folds(
    eds: &EmailDataSet,
    folds: &FoldAssignment,
    classifier: &Classifier,
) -> Result<Vec<Outcome>> {
    if folds.assignments.len() != eds.len() {
        return Err(Error::Config(format!(
            "fold assignment covers {} messages, data set has {}",
            folds.assignments.len(),
            eds.len()
        )));
    }
    let labels: Vec<Label> = eds.messages.iter().map(|m| m.label()).collect();
    let mut hsr = vec![(f64::NAN, false); eds.len()];

    match classifier {
        Classifier::SuffixTree(cfg) => {
            cfg.validate()?;
            let texts: Vec<Vec<char>> = eds
                .messages
                .par_iter()
                .map(|m| m.text().chars().collect())
                .collect();
            for fold in 0..folds.k {
                let train = folds.train_indices(fold);
                let build = |label: Label| -> Result<ClassTree> {
                    let mut tree = ClassTree::new(cfg.depth)?;
                    for &i in train.iter().filter(|&&i| labels[i] == label) {
                        tree.insert_chars(&texts[i]);
                    }
                    Ok(tree)
                };
                let (ham_tree, spam_tree) =
                    rayon::join(|| build(Label::Ham), || build(Label::Spam));
                let (ham_tree, spam_tree) = (ham_tree?, spam_tree?);
                let test = folds.test_indices(fold);
                let scored: Vec<(usize, f64, bool)> = test
                    .par_iter()
                    .map(|&i| {
                        let v = classify_chars(&ham_tree, &spam_tree, &texts[i], cfg);
                        (i, v.hsr, v.no_evidence)
                    })
                    .collect();
                for (i, h, none) in scored {
                    hsr[i] = (h, none);
                }
            }
        }
        Classifier::NaiveBayes(pipeline) => {
            let tokens: Vec<Vec<String>> = eds
                .messages
                .par_iter()
                .map(|m| pipeline.preprocess(&m.text()))
                .collect();
            for fold in 0..folds.k {
                let train = folds.train_indices(fold);
                let pick = |label: Label| -> Vec<Vec<String>> {
                    train
                        .iter()
                        .filter(|&&i| labels[i] == label)
                        .map(|&i| tokens[i].clone())
                        .collect()
                };
                let model = train_nb(&pick(Label::Spam), &pick(Label::Ham))?;
                let test = folds.test_indices(fold);
                let scored: Vec<(usize, f64)> = test
                    .par_iter()
                    .map(|&i| (i, model.classify(&tokens[i], 1.0).hsr))
                    .collect();
                for (i, h) in scored {
                    hsr[i] = (h, false);
                }
            }
        }
    }

    Ok(labels
        .into_iter()
        .zip(&folds.assignments)
        .zip(hsr)
        .map(|((label, &fold), (hsr, no_evidence))| Outcome {
            label,
            fold,
            hsr,
            no_evidence,
        })
        .collect())
}

/// Aggregate stored outcomes into one row per threshold.
pub fn sweep(outcomes: &[Outcome], thresholds: &[f64]) -> Result<Vec<SweepRow>> {
    check_thresholds(thresholds)?;
    let no_evidence = outcomes.iter().filter(|o| o.no_evidence).count() as u64;
    thresholds
        .iter()
        .map(|&threshold| {
            let mut confusion = Confusion::default();
            for o in outcomes {
                confusion.record(o.label, decide(o.hsr, threshold));
            }
            Ok(SweepRow {
                threshold,
                confusion,
                metrics: metrics(&confusion)?,
                no_evidence,
            })
        })
        .collect()
}

pub fn run_cv(
    eds: &EmailDataSet,
    folds: &FoldAssignment,
    classifier: &Classifier,
    thresholds: &[f64],
) -> Result<SweepReport> {
    check_thresholds(thresholds)?;
    let outcomes = score_folds(eds, folds, classifier)?;
    Ok(SweepReport {
        eds: eds.name.clone(),
        seed: folds.seed,
        folds: folds.k,
        config: classifier.echo(),
        spam_count: eds.count(Label::Spam) as u64,
        ham_count: eds.count(Label::Ham) as u64,
        rows: sweep(&outcomes, thresholds)?,
    })
}

impl SweepReport {
    pub fn row_at(&self, threshold: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| (r.threshold - threshold).abs() < 1e-9)
    }

    /// Strictly increasing thresholds, per-row conservation of the class
    /// sizes, FPR non-decreasing and FNR non-increasing in the threshold.
    pub fn check_invariants(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.threshold >= b.threshold {
                return Err(Error::Invariant(format!(
                    "thresholds not increasing at {}",
                    b.threshold
                )));
            }
            if b.metrics.fpr < a.metrics.fpr {
                return Err(Error::Invariant(format!(
                    "FPR fell from {} to {} between thresholds {} and {}",
                    a.metrics.fpr, b.metrics.fpr, a.threshold, b.threshold
                )));
            }
            if b.metrics.fnr > a.metrics.fnr {
                return Err(Error::Invariant(format!(
                    "FNR rose from {} to {} between thresholds {} and {}",
                    a.metrics.fnr, b.metrics.fnr, a.threshold, b.threshold
                )));
            }
        }
        for row in &self.rows {
            let c = &row.confusion;
            if c.spam_total() != self.spam_count || c.ham_total() != self.ham_count {
                return Err(Error::Invariant(format!(
                    "confusion at threshold {} covers {} spam / {} ham, data set has {} / {}",
                    row.threshold,
                    c.spam_total(),
                    c.ham_total(),
                    self.spam_count,
                    self.ham_count
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("threshold,SS,SH,HS,HH,SR,SP,HR,HP,TPR,FPR,FNR,sum_errors,no_evidence\n");
        for row in &self.rows {
            let (c, m) = (&row.confusion, &row.metrics);
            writeln!(
                out,
                "{:.6},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                row.threshold,
                c.ss,
                c.sh,
                c.hs,
                c.hh,
                m.sr,
                m.sp,
                m.hr,
                m.hp,
                m.tpr,
                m.fpr,
                m.fnr,
                m.sum_errors,
                row.no_evidence
            )
            .expect("writing to a String");
        }
        out
    }
}

/// One (FPR, TPR) point per threshold, deduplicated, sorted by FPR then TPR.
pub fn roc_points(report: &SweepReport) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.metrics.fpr, r.metrics.tpr))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();
    points
}

pub fn roc_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (fpr, tpr) in points {
        writeln!(out, "{fpr:.6},{tpr:.6}").expect("writing to a String");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalThreshold {
    /// Every threshold attaining the minimum sum of errors.
    pub thresholds: Vec<f64>,
    pub low: f64,
    pub high: f64,
    /// The minimizing thresholds form one run of adjacent grid points.
    pub contiguous: bool,
    pub metrics: MetricSet,
}

const TIE_TOLERANCE: f64 = 1e-12;

/// Thresholds minimizing FPR + FNR. `None` only for an empty report.
pub fn optimal_threshold(report: &SweepReport) -> Option<OptimalThreshold> {
    let best = report
        .rows
        .iter()
        .map(|r| r.metrics.sum_errors)
        .min_by(f64::total_cmp)?;
    let winners: Vec<usize> = (0..report.rows.len())
        .filter(|&i| report.rows[i].metrics.sum_errors <= best + TIE_TOLERANCE)
        .collect();
    let contiguous = winners.windows(2).all(|w| w[1] == w[0] + 1);
    let thresholds: Vec<f64> = winners.iter().map(|&i| report.rows[i].threshold).collect();
    Some(OptimalThreshold {
        low: thresholds[0],
        high: *thresholds.last().expect("at least one winner"),
        thresholds,
        contiguous,
        metrics: report.rows[winners[0]].metrics,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Breakeven {
    /// Recall equals precision at a grid threshold.
    Exact {
        value: f64,
        threshold: f64,
    },
    /// Recall minus precision changes sign between two adjacent thresholds;
    /// the value is linearly interpolated at the crossing.
    Interpolated {
        value: f64,
        between: (f64, f64),
    },
    Absent {
        diagnostic: String,
    },
}

impl Breakeven {
    pub fn value(&self) -> Option<f64> {
        match self {
            Breakeven::Exact { value, .. } | Breakeven::Interpolated { value, .. } => Some(*value),
            Breakeven::Absent { .. } => None,
        }
    }
}

const BREAKEVEN_TOLERANCE: f64 = 1e-9;

/// Highest recall at which recall equals precision for `class`.
pub fn breakeven(report: &SweepReport, class: Label) -> Breakeven {
    let rp: Vec<(f64, f64, f64)> = report
        .rows
        .iter()
        .map(|r| match class {
            Label::Spam => (r.threshold, r.metrics.sr, r.metrics.sp),
            Label::Ham => (r.threshold, r.metrics.hr, r.metrics.hp),
        })
        .collect();

    let exact = rp
        .iter()
        .filter(|(_, r, p)| (r - p).abs() <= BREAKEVEN_TOLERANCE)
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some(&(threshold, value, _)) = exact {
        return Breakeven::Exact { value, threshold };
    }

    let crossing = rp
        .windows(2)
        .filter_map(|w| {
            let (ta, ra, pa) = w[0];
            let (tb, rb, pb) = w[1];
            let (da, db) = (ra - pa, rb - pb);
            (da * db < 0.0).then(|| {
                let t = da / (da - db);
                (ra + t * (rb - ra), (ta, tb))
            })
        })
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match crossing {
        Some((value, between)) => Breakeven::Interpolated { value, between },
        None => Breakeven::Absent {
            diagnostic: format!(
                "{class} recall and precision do not cross over thresholds {}..{}",
                rp.first().map_or(f64::NAN, |x| x.0),
                rp.last().map_or(f64::NAN, |x| x.0)
            ),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub eds: String,
    pub config: ClassifierEcho,
    pub optimal_threshold: Option<OptimalThreshold>,
    #[serde(rename = "metrics_at_1.0")]
    pub metrics_at_1: Option<MetricSet>,
    pub metrics_at_optimal: Option<MetricSet>,
    pub breakeven_spam: Breakeven,
    pub breakeven_ham: Breakeven,
}

pub fn summarize(report: &SweepReport) -> Summary {
    let optimal = optimal_threshold(report);
    Summary {
        eds: report.eds.clone(),
        config: report.config.clone(),
        metrics_at_1: report.row_at(1.0).map(|r| r.metrics),
        metrics_at_optimal: optimal.as_ref().map(|o| o.metrics),
        optimal_threshold: optimal,
        breakeven_spam: breakeven(report, Label::Spam),
        breakeven_ham: breakeven(report, Label::Ham),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_email, Message};

    fn report_from(rows: &[(f64, Confusion)]) -> SweepReport {
        let first = rows[0].1;
        SweepReport {
            eds: "fixture".into(),
            seed: 0,
            folds: 1,
            config: ClassifierEcho::Nb {
                pipeline: "x".into(),
            },
            spam_count: first.spam_total(),
            ham_count: first.ham_total(),
            rows: rows
                .iter()
                .map(|&(threshold, confusion)| SweepRow {
                    threshold,
                    confusion,
                    metrics: metrics(&confusion).unwrap(),
                    no_evidence: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn metric_arithmetic() {
        let m = metrics(&Confusion::new(95, 5, 1, 99)).unwrap();
        assert!((m.sr - 0.95).abs() < 1e-15);
        assert!((m.sp - 95.0 / 96.0).abs() < 1e-15);
        assert!((m.fpr - 0.01).abs() < 1e-15);
        assert!((m.fnr - 0.05).abs() < 1e-12);
        assert_eq!(m.tpr, m.sr);
        assert!((m.sum_errors - 0.06).abs() < 1e-12);
        assert!(!m.sp_undefined);

        let m = metrics(&Confusion::new(0, 10, 0, 10)).unwrap();
        assert_eq!((m.sr, m.sp, m.sp_undefined), (0.0, 0.0, true));

        assert!(matches!(
            metrics(&Confusion::new(0, 0, 3, 4)),
            Err(Error::IllPosed(_))
        ));
        assert!(matches!(
            metrics(&Confusion::new(3, 4, 0, 0)),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn headline_confusion_rounds_to_published_rates() {
        // 481 spam and 2412 ham; SR 97.50% and SP 99.79% imply SS=469, HS=1
        let m = metrics(&Confusion::new(469, 12, 1, 2411)).unwrap();
        assert_eq!(format!("{:.2}", m.sr * 100.0), "97.51");
        assert!((m.sr * 100.0 - 97.50).abs() < 0.01);
        assert_eq!(format!("{:.2}", m.sp * 100.0), "99.79");
    }

    #[test]
    fn default_grid() {
        let grid = ThresholdGrid::default().values().unwrap();
        assert_eq!(grid.len(), 31);
        assert_eq!(grid[0], 0.7);
        assert_eq!(grid[15], 1.0);
        assert_eq!(grid[13], 0.96);
        assert_eq!(*grid.last().unwrap(), 1.3);
        let coarse = ThresholdGrid {
            lo: 0.7,
            hi: 1.3,
            step: 0.1,
        }
        .values()
        .unwrap();
        assert_eq!(coarse, [0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3]);
        assert!(ThresholdGrid {
            lo: 1.0,
            hi: 0.5,
            step: 0.1
        }
        .values()
        .is_err());
        assert!(ThresholdGrid {
            lo: 0.5,
            hi: 1.0,
            step: 0.0
        }
        .values()
        .is_err());
        assert!(ThresholdGrid {
            lo: 0.0,
            hi: 1.0,
            step: 0.1
        }
        .values()
        .is_err());
    }

    #[test]
    fn sweep_rederives_decisions() {
        let outcomes = [
            (Label::Spam, 0.5, false),
            (Label::Spam, 0.95, false),
            (Label::Ham, 1.05, false),
            (Label::Ham, f64::INFINITY, true),
        ]
        .map(|(label, hsr, no_evidence)| Outcome {
            label,
            fold: 0,
            hsr,
            no_evidence,
        });
        let rows = sweep(&outcomes, &[0.9, 1.0, 1.1]).unwrap();
        assert_eq!(rows[0].confusion, Confusion::new(1, 1, 0, 2));
        assert_eq!(rows[1].confusion, Confusion::new(2, 0, 0, 2));
        assert_eq!(rows[2].confusion, Confusion::new(2, 0, 1, 1));
        assert!(rows.iter().all(|r| r.no_evidence == 1));
        assert!(sweep(&outcomes, &[]).is_err());
        assert!(sweep(&outcomes, &[1.0, 1.0]).is_err());
        assert!(sweep(&outcomes, &[1.1, 1.0]).is_err());
    }

    #[test]
    fn roc() {
        let single = report_from(&[(1.0, Confusion::new(9, 1, 2, 8))]);
        assert_eq!(roc_points(&single), [(0.2, 0.9)]);
        let perfect = report_from(&[
            (0.9, Confusion::new(10, 0, 0, 10)),
            (1.0, Confusion::new(10, 0, 0, 10)),
        ]);
        assert_eq!(roc_points(&perfect), [(0.0, 1.0)]);
        assert_eq!(
            roc_csv(&roc_points(&perfect)),
            "fpr,tpr\n0.000000,1.000000\n"
        );
    }

    #[test]
    fn optimal_thresholds() {
        let r = report_from(&[
            (0.94, Confusion::new(95, 5, 0, 100)),
            (0.96, Confusion::new(99, 1, 0, 100)),
            (0.98, Confusion::new(99, 1, 1, 99)),
        ]);
        let o = optimal_threshold(&r).unwrap();
        assert_eq!(o.thresholds, [0.96]);
        assert!(o.contiguous);

        let perfect = report_from(&[
            (0.78, Confusion::new(10, 0, 0, 10)),
            (1.0, Confusion::new(10, 0, 0, 10)),
            (1.22, Confusion::new(10, 0, 0, 10)),
        ]);
        let o = optimal_threshold(&perfect).unwrap();
        assert_eq!((o.low, o.high, o.contiguous), (0.78, 1.22, true));
        assert_eq!(o.metrics.sum_errors, 0.0);

        let split = report_from(&[
            (0.9, Confusion::new(9, 1, 0, 10)),
            (1.0, Confusion::new(8, 2, 0, 10)),
            (1.1, Confusion::new(10, 0, 1, 9)),
        ]);
        let o = optimal_threshold(&split).unwrap();
        assert_eq!(o.thresholds, [0.9, 1.1]);
        assert!(!o.contiguous);
    }

    #[test]
    fn breakevens() {
        let perfect = report_from(&[(1.0, Confusion::new(10, 0, 0, 10))]);
        assert_eq!(breakeven(&perfect, Label::Spam).value(), Some(1.0));
        assert_eq!(breakeven(&perfect, Label::Ham).value(), Some(1.0));

        // SS=90, SH=10, HS=10: SR = SP = 0.9
        let exact = report_from(&[
            (0.9, Confusion::new(80, 20, 0, 100)),
            (1.0, Confusion::new(90, 10, 10, 90)),
            (1.1, Confusion::new(95, 5, 40, 60)),
        ]);
        assert_eq!(
            breakeven(&exact, Label::Spam),
            Breakeven::Exact {
                value: 0.9,
                threshold: 1.0
            }
        );

        // SR-SP goes from -0.2 to +0.1 (SR 0.8->0.9, SP 1.0->0.8): crossing at 2/3
        let crossing = report_from(&[
            (0.9, Confusion::new(80, 20, 0, 100)),
            (1.0, Confusion::new(90, 10, 22, 78)),
        ]);
        let b = breakeven(&crossing, Label::Spam);
        let sp1 = 90.0 / 112.0;
        let (d0, d1) = (0.8 - 1.0, 0.9 - sp1);
        let expected = 0.8 + d0 / (d0 - d1) * 0.1;
        match b {
            Breakeven::Interpolated { value, between } => {
                assert!((value - expected).abs() < 1e-12);
                assert_eq!(between, (0.9, 1.0));
            }
            other => panic!("{other:?}"),
        }

        let never = report_from(&[(1.0, Confusion::new(50, 50, 0, 100))]);
        assert!(matches!(
            breakeven(&never, Label::Spam),
            Breakeven::Absent { .. }
        ));
    }

    #[test]
    fn invariant_checks() {
        let ok = report_from(&[
            (0.9, Confusion::new(8, 2, 0, 10)),
            (1.0, Confusion::new(9, 1, 1, 9)),
        ]);
        ok.check_invariants().unwrap();
        let fpr_drop = report_from(&[
            (0.9, Confusion::new(8, 2, 2, 8)),
            (1.0, Confusion::new(9, 1, 1, 9)),
        ]);
        assert!(matches!(
            fpr_drop.check_invariants(),
            Err(Error::Invariant(_))
        ));
        let mut lost = ok.clone();
        lost.rows[1].confusion.hh -= 1;
        assert!(lost.check_invariants().is_err());
    }

    fn separable() -> EmailDataSet {
        let mut messages = Vec::new();
        for i in 0..20 {
            let spam = format!("Subject: xxxx\n\n{}", "x".repeat(30 + i));
            messages.push(Message::new(
                parse_email(spam.as_bytes()),
                Label::Spam,
                format!("s/{i}"),
            ));
            let ham = format!("Subject: yyyy\n\n{}", "y".repeat(30 + i));
            messages.push(Message::new(
                parse_email(ham.as_bytes()),
                Label::Ham,
                format!("h/{i}"),
            ));
        }
        EmailDataSet::from_messages("toy", 0, messages)
    }

    #[test]
    fn separable_corpus_is_perfect() {
        let eds = separable();
        let folds = crate::corpus::stratified_folds(&eds, 5, 1).unwrap();
        let st = Classifier::SuffixTree(ScoringConfig::new(
            SignificanceKind::Linear,
            MatchNorm::None,
            4,
        ));
        let thresholds = ThresholdGrid::default().values().unwrap();
        let r = run_cv(&eds, &folds, &st, &thresholds).unwrap();
        r.check_invariants().unwrap();
        let at1 = r.row_at(1.0).unwrap();
        assert_eq!((at1.metrics.sr, at1.metrics.sp), (1.0, 1.0));
        assert!(r.rows.iter().all(|row| row.metrics.sum_errors == 0.0));
        let one = run_cv(&eds, &folds, &st, &[1.0]).unwrap();
        assert_eq!(one.rows.len(), 1);
    }

    #[test]
    fn csv_layout() {
        let r = report_from(&[(1.0, Confusion::new(95, 5, 1, 99))]);
        assert_eq!(
            r.to_csv(),
            "threshold,SS,SH,HS,HH,SR,SP,HR,HP,TPR,FPR,FNR,sum_errors,no_evidence\n\
             1.000000,95,5,1,99,0.950000,0.989583,0.990000,0.951923,0.950000,0.010000,0.050000,0.060000,0\n"
        );
    }
}
