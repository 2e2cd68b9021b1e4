//! Confusion matrix, precision/recall/F1, one-vs-rest ROC-AUC and the text report.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::EmotionLabel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("expected {expected} labels but got {predicted} predictions")]
    LengthMismatch { expected: usize, predicted: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("class {class} has {positives} positives and {negatives} negatives; AUC undefined")]
    DegenerateClass {
        class: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("malformed report CSV: {0}")]
    Parse(String),
}

/// Rows are expected labels, columns predicted labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            n: n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "confusion matrix must be square");
        Self {
            n,
            counts: rows.concat(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, expected: usize, predicted: usize) -> u64 {
        self.counts[expected * self.n + predicted]
    }

    pub fn row(&self, expected: usize) -> &[u64] {
        &self.counts[expected * self.n..(expected + 1) * self.n]
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.row(c).iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n).map(|r| self.get(r, c)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|c| self.get(c, c)).sum()
    }
}

pub fn confusion_matrix(
    expected: &[usize],
    predicted: &[usize],
    n_classes: usize,
) -> Result<ConfusionMatrix, MetricsError> {
    if expected.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            expected: expected.len(),
            predicted: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&e, &p) in expected.iter().zip(predicted) {
        for label in [e, p] {
            if label >= n_classes {
                return Err(MetricsError::LabelOutOfRange { label, n_classes });
            }
        }
        cm.counts[e * n_classes + p] += 1;
    }
    Ok(cm)
}

/// Row percentages. `exact` is unrounded; `hundredths` is rounded to 0.01 by
/// largest remainder so every non-empty row sums to exactly 100.00.
#[derive(Debug, Clone, PartialEq)]
pub struct RowNormalized {
    pub exact: Vec<Vec<f64>>,
    pub hundredths: Vec<Vec<u64>>,
}

impl RowNormalized {
    pub fn rounded(&self, row: usize, col: usize) -> f64 {
        self.hundredths[row][col] as f64 / 100.0
    }

    /// `expected,<class>...` header, then one row of 2-decimal percentages per class.
    pub fn to_csv(&self, names: &[&str]) -> String {
        let mut out = String::from("expected");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, row) in self.hundredths.iter().enumerate() {
            out.push_str(names[i]);
            for &h in row {
                let _ = write!(out, ",{}.{:02}", h / 100, h % 100);
            }
            out.push('\n');
        }
        out
    }
}

pub fn normalize_rows(cm: &ConfusionMatrix) -> RowNormalized {
    let n = cm.n_classes();
    let mut exact = Vec::with_capacity(n);
    let mut hundredths = Vec::with_capacity(n);
    for r in 0..n {
        let row = cm.row(r);
        let sum = cm.row_sum(r);
        if sum == 0 {
            exact.push(vec![0.0; n]);
            hundredths.push(vec![0; n]);
            continue;
        }
        exact.push(row.iter().map(|&c| 100.0 * c as f64 / sum as f64).collect());
        // integer largest-remainder over 10000 units
        let scaled: Vec<(u64, u64)> = row.iter().map(|&c| ((c * 10_000) / sum, (c * 10_000) % sum)).collect();
        let mut units: Vec<u64> = scaled.iter().map(|s| s.0).collect();
        let mut residual = 10_000 - units.iter().sum::<u64>();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scaled[b].1.cmp(&scaled[a].1).then(a.cmp(&b)));
        for &c in &order {
            if residual == 0 {
                break;
            }
            units[c] += 1;
            residual -= 1;
        }
        hundredths.push(units);
    }
    RowNormalized { exact, hundredths }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub class_names: Vec<String>,
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub total: u64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
}

fn ratio(num: u64, den: u64, what: &str, class: usize) -> f64 {
    if den == 0 {
        log::warn!("{what} of class {class} is 0/0; reported as 0");
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean_auc<'a>(items: impl Iterator<Item = (&'a ClassMetrics, f64)>) -> Option<f64> {
    let (mut sum, mut weight) = (0.0, 0.0);
    for (m, w) in items {
        if let Some(a) = m.auc {
            sum += a * w;
            weight += w;
        }
    }
    (weight > 0.0).then(|| sum / weight)
}

impl ClassificationReport {
    /// Builds averages from per-class rows.
    pub fn from_classes(class_names: Vec<String>, classes: Vec<ClassMetrics>, accuracy: f64) -> Self {
        let k = classes.len() as f64;
        let total: u64 = classes.iter().map(|c| c.support).sum();
        let macro_avg = Averages {
            precision: classes.iter().map(|c| c.precision).sum::<f64>() / k,
            recall: classes.iter().map(|c| c.recall).sum::<f64>() / k,
            f1: classes.iter().map(|c| c.f1).sum::<f64>() / k,
            auc: mean_auc(classes.iter().map(|c| (c, 1.0))),
        };
        let weighted = |f: fn(&ClassMetrics) -> f64| {
            if total == 0 {
                0.0
            } else {
                classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
            }
        };
        let weighted_avg = Averages {
            precision: weighted(|c| c.precision),
            recall: weighted(|c| c.recall),
            f1: weighted(|c| c.f1),
            auc: mean_auc(classes.iter().map(|c| (c, c.support as f64))),
        };
        Self {
            class_names,
            classes,
            accuracy,
            total,
            macro_avg,
            weighted_avg,
        }
    }

    pub fn with_auc(mut self, auc: &AucScores) -> Self {
        for (m, a) in self.classes.iter_mut().zip(&auc.per_class) {
            m.auc = *a;
        }
        Self::from_classes(self.class_names, self.classes, self.accuracy)
    }
}

pub fn emotion_class_names() -> Vec<String> {
    EmotionLabel::ALL.iter().map(|l| l.title().to_string()).collect()
}

/// Per-class precision, recall and F1 from a confusion matrix; AUC left empty.
pub fn precision_recall_f1(cm: &ConfusionMatrix, class_names: Vec<String>) -> ClassificationReport {
    assert_eq!(class_names.len(), cm.n_classes());
    let classes = (0..cm.n_classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.col_sum(c), "precision", c);
            let recall = ratio(tp, cm.row_sum(c), "recall", c);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: cm.row_sum(c),
                auc: None,
            }
        })
        .collect();
    let accuracy = if cm.total() == 0 {
        0.0
    } else {
        cm.trace() as f64 / cm.total() as f64
    };
    ClassificationReport::from_classes(class_names, classes, accuracy)
}

/// Mann-Whitney AUC: the probability that a random positive outscores a
/// random negative, ties counting one half.
pub fn auc_binary(scores: &[f64], positive: &[bool], class: usize) -> Result<f64, MetricsError> {
    assert_eq!(scores.len(), positive.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateClass {
            class,
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of 1-based average ranks of the positives, accumulated in doubled units
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean (i + j + 2) / 2
        let tied_pos = order[i..=j].iter().filter(|&&k| positive[k]).count() as u128;
        rank_sum_x2 += tied_pos * (i + j + 2) as u128;
        i = j + 1;
    }
    let p = n_pos as u128;
    let u_x2 = rank_sum_x2 - p * (p + 1);
    Ok(u_x2 as f64 / (2 * p * n_neg as u128) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucScores {
    pub per_class: Vec<Option<f64>>,
    pub macro_auc: Option<f64>,
    pub weighted_auc: Option<f64>,
}

/// One-vs-rest AUC for every class. Classes without both positives and
/// negatives are reported as `None`.
pub fn roc_auc_ovr(scores: &[Vec<f64>], expected: &[usize], n_classes: usize) -> Result<AucScores, MetricsError> {
    if scores.len() != expected.len() {
        return Err(MetricsError::LengthMismatch {
            expected: expected.len(),
            predicted: scores.len(),
        });
    }
    let mut per_class = Vec::with_capacity(n_classes);
    let mut supports = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let column: Vec<f64> = scores.iter().map(|s| s[c]).collect();
        let positive: Vec<bool> = expected.iter().map(|&e| e == c).collect();
        supports.push(positive.iter().filter(|&&p| p).count() as f64);
        match auc_binary(&column, &positive, c) {
            Ok(a) => per_class.push(Some(a)),
            Err(e) => {
                log::warn!("{e}");
                per_class.push(None);
            }
        }
    }
    let average = |weights: &[f64]| {
        let (mut s, mut w) = (0.0, 0.0);
        for (a, &wt) in per_class.iter().zip(weights) {
            if let Some(a) = a {
                s += a * wt;
                w += wt;
            }
        }
        (w > 0.0).then(|| s / w)
    };
    Ok(AucScores {
        macro_auc: average(&vec![1.0; n_classes]),
        weighted_auc: average(&supports),
        per_class,
    })
}

/// ROC points `(fpr, tpr)` from the highest threshold down, starting at (0, 0).
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if positive[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let fpr = if n_neg > 0.0 { fp / n_neg } else { 0.0 };
        let tpr = if n_pos > 0.0 { tp / n_pos } else { 0.0 };
        points.push((fpr, tpr));
    }
    points
}

/// Percent rendered as an integer; float noise below 1e-9 is discarded first
/// so exact halves (e.g. 94.5) round up.
fn percent_int(x: f64) -> i64 {
    let p = (x * 100.0 * 1e9).round() / 1e9;
    p.round() as i64
}

fn auc_cell(a: Option<f64>) -> String {
    a.map_or_else(|| "-".to_string(), |v| format!("{:.2}", v * 100.0))
}

/// Fixed-width table: per-class rows, then accuracy, macro avg and weighted avg.
pub fn render_report(report: &ClassificationReport) -> String {
    let width = report
        .class_names
        .iter()
        .map(String::len)
        .chain(["weighted avg".len()])
        .max()
        .unwrap_or(12);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>width$} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "", "precision", "recall", "f1-score", "support", "auc"
    );
    out.push('\n');
    for (name, m) in report.class_names.iter().zip(&report.classes) {
        let _ = writeln!(
            out,
            "{:>width$} {:>9} {:>9} {:>9} {:>9} {:>9}",
            name,
            percent_int(m.precision),
            percent_int(m.recall),
            percent_int(m.f1),
            m.support,
            auc_cell(m.auc)
        );
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "{:>width$} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "accuracy",
        "-",
        "",
        percent_int(report.accuracy),
        report.total,
        "-"
    );
    for (name, avg) in [("macro avg", &report.macro_avg), ("weighted avg", &report.weighted_avg)] {
        let _ = writeln!(
            out,
            "{:>width$} {:>9} {:>9} {:>9} {:>9} {:>9}",
            name,
            percent_int(avg.precision),
            percent_int(avg.recall),
            percent_int(avg.f1),
            report.total,
            auc_cell(avg.auc)
        );
    }
    out
}

const REPORT_CSV_HEADER: &str = "class,precision,recall,f1,support,auc";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |a| a.to_string())
}

/// Machine-readable twin of [`render_report`], full precision.
pub fn report_to_csv(report: &ClassificationReport) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for (name, m) in report.class_names.iter().zip(&report.classes) {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            m.precision,
            m.recall,
            m.f1,
            m.support,
            opt(m.auc)
        );
    }
    let _ = writeln!(out, "accuracy,,,{},{},", report.accuracy, report.total);
    for (name, a) in [("macro avg", &report.macro_avg), ("weighted avg", &report.weighted_avg)] {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            a.precision,
            a.recall,
            a.f1,
            report.total,
            opt(a.auc)
        );
    }
    out
}

pub fn report_from_csv(text: &str) -> Result<ClassificationReport, MetricsError> {
    let bad = |m: &str| MetricsError::Parse(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_CSV_HEADER) {
        return Err(bad("missing header"));
    }
    let rows: Vec<Vec<&str>> = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
        .collect();
    if rows.len() < 3 || rows.iter().any(|r| r.len() != 6) {
        return Err(bad("expected 6 fields per row and the three summary rows"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
    let opt_num = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    let n_classes = rows.len() - 3;
    let mut names = Vec::new();
    let mut classes = Vec::new();
    for r in &rows[..n_classes] {
        names.push(r[0].to_string());
        classes.push(ClassMetrics {
            precision: num(r[1])?,
            recall: num(r[2])?,
            f1: num(r[3])?,
            support: r[4].parse().map_err(|_| bad(r[4]))?,
            auc: opt_num(r[5])?,
        });
    }
    let acc_row = &rows[n_classes];
    if acc_row[0] != "accuracy" {
        return Err(bad("missing accuracy row"));
    }
    Ok(ClassificationReport::from_classes(names, classes, num(acc_row[3])?))
}
