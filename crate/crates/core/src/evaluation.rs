//! Per-class precision, recall and F1 with accuracy, and side-by-side
//! comparison of several methods on one gold set.
//!
//! A zero denominator yields a metric of 0 and records the metric's name in
//! [`EvaluationReport::degenerate`]; reports never contain NaN.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Counts with `related` as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn record(&mut self, predicted: Label, gold: Label) {
        match (predicted, gold) {
            (Label::Related, Label::Related) => self.tp += 1,
            (Label::Related, Label::Unrelated) => self.fp += 1,
            (Label::Unrelated, Label::Related) => self.fn_ += 1,
            (Label::Unrelated, Label::Unrelated) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts seen with `unrelated` as the positive class.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method_tag: String,
    pub unrelated: ClassMetrics,
    pub related: ClassMetrics,
    pub accuracy: f64,
    pub matrix: ConfusionMatrix,
    /// Metrics whose denominator was zero, e.g. `precision_related`.
    pub degenerate: Vec<String>,
}

fn ratio(num: usize, den: usize, name: String, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name);
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(m: &ConfusionMatrix, class: &str, flags: &mut Vec<String>) -> ClassMetrics {
    let precision = ratio(m.tp, m.tp + m.fp, format!("precision_{class}"), flags);
    let recall = ratio(m.tp, m.tp + m.fn_, format!("recall_{class}"), flags);
    // Harmonic mean of precision and recall, written over the counts.
    let f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn_, format!("f1_{class}"), flags);
    ClassMetrics { precision, recall, f1 }
}

impl EvaluationReport {
    pub fn from_matrix(matrix: ConfusionMatrix, method_tag: impl Into<String>) -> Result<Self> {
        if matrix.total() == 0 {
            return Err(Error::invalid("cannot evaluate on an empty gold set"));
        }
        let mut degenerate = Vec::new();
        let unrelated = class_metrics(&matrix.swapped(), "unrelated", &mut degenerate);
        let related = class_metrics(&matrix, "related", &mut degenerate);
        Ok(EvaluationReport {
            method_tag: method_tag.into(),
            unrelated,
            related,
            accuracy: (matrix.tp + matrix.tn) as f64 / matrix.total() as f64,
            matrix,
            degenerate,
        })
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.method_tag = tag.into();
        self
    }

    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Unrelated => &self.unrelated,
            Label::Related => &self.related,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }
}

/// Scores `predictions` against every gold id. Predictions for ids outside
/// the gold set are ignored.
pub fn evaluate(predictions: &BTreeMap<String, Label>, gold: &BTreeMap<String, Label>) -> Result<EvaluationReport> {
    if gold.is_empty() {
        return Err(Error::invalid("gold set is empty"));
    }
    let missing: Vec<String> = gold.keys().filter(|id| !predictions.contains_key(*id)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds {
            what: "gold ids without predictions".into(),
            ids: missing,
        });
    }
    let mut matrix = ConfusionMatrix::default();
    for (id, &g) in gold {
        matrix.record(predictions[id], g);
    }
    EvaluationReport::from_matrix(matrix, "")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub reports: Vec<EvaluationReport>,
}

pub fn compare(methods: &[(String, BTreeMap<String, Label>)], gold: &BTreeMap<String, Label>) -> Result<ComparisonTable> {
    if methods.is_empty() {
        return Err(Error::invalid("comparison needs at least one method"));
    }
    let reports = methods
        .iter()
        .map(|(tag, preds)| evaluate(preds, gold).map(|r| r.tagged(tag.clone())))
        .collect::<Result<_>>()?;
    Ok(ComparisonTable { reports })
}

#[derive(Clone, Copy)]
enum Row {
    Precision,
    Recall,
    F1,
}

impl Row {
    const ALL: [Row; 3] = [Row::Precision, Row::Recall, Row::F1];

    fn title(self) -> &'static str {
        match self {
            Row::Precision => "Precision",
            Row::Recall => "Recall",
            Row::F1 => "F1 score",
        }
    }

    fn key(self) -> &'static str {
        match self {
            Row::Precision => "precision",
            Row::Recall => "recall",
            Row::F1 => "f1",
        }
    }

    fn get(self, m: &ClassMetrics) -> f64 {
        match self {
            Row::Precision => m.precision,
            Row::Recall => m.recall,
            Row::F1 => m.f1,
        }
    }
}

/// Two-decimal rendering, the unit in which "best" is decided.
fn cell(v: f64) -> String {
    format!("{v:.2}")
}

fn best_of(values: impl Iterator<Item = f64>) -> String {
    values.map(cell).max().unwrap_or_default()
}

impl ComparisonTable {
    pub fn tags(&self) -> Vec<&str> {
        self.reports.iter().map(|r| r.method_tag.as_str()).collect()
    }

    /// Rows Precision / Recall / F1 score as `unrelated / related` pairs, then
    /// Accuracy; one column per method. With `bold_best`, the best value of
    /// each row and class is wrapped in `*`.
    pub fn render_text(&self, bold_best: bool) -> String {
        let mark = |v: f64, best: &str| {
            let c = cell(v);
            if bold_best && c == best {
                format!("*{c}*")
            } else {
                c
            }
        };
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec![String::new()];
        header.extend(self.reports.iter().map(|r| r.method_tag.clone()));
        rows.push(header);
        for row in Row::ALL {
            let best0 = best_of(self.reports.iter().map(|r| row.get(&r.unrelated)));
            let best1 = best_of(self.reports.iter().map(|r| row.get(&r.related)));
            let mut line = vec![row.title().to_string()];
            line.extend(self.reports.iter().map(|r| {
                format!("{} / {}", mark(row.get(&r.unrelated), &best0), mark(row.get(&r.related), &best1))
            }));
            rows.push(line);
        }
        let best_acc = best_of(self.reports.iter().map(|r| r.accuracy));
        let mut acc = vec!["Accuracy".to_string()];
        acc.extend(self.reports.iter().map(|r| mark(r.accuracy, &best_acc)));
        rows.push(acc);

        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                let _ = writeln!(out, "{}", rule.join("-+-"));
            }
        }
        out
    }

    /// `metric,<tag>...` with one row per metric and class, then accuracy.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for r in &self.reports {
            out.push(',');
            out.push_str(&csv_field(&r.method_tag));
        }
        out.push('\n');
        for row in Row::ALL {
            for label in Label::ALL {
                let _ = write!(out, "{}_{}", row.key(), label.name());
                for r in &self.reports {
                    let _ = write!(out, ",{:.6}", row.get(r.class(label)));
                }
                out.push('\n');
            }
        }
        out.push_str("accuracy");
        for r in &self.reports {
            let _ = write!(out, ",{:.6}", r.accuracy);
        }
        out.push('\n');
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn maps(pairs: &[(Label, Label)]) -> (BTreeMap<String, Label>, BTreeMap<String, Label>) {
        let preds = pairs.iter().enumerate().map(|(i, &(p, _))| (format!("d{i:02}"), p)).collect();
        let gold = pairs.iter().enumerate().map(|(i, &(_, g))| (format!("d{i:02}"), g)).collect();
        (preds, gold)
    }

    #[test]
    fn hand_arithmetic() {
        let r = EvaluationReport::from_matrix(ConfusionMatrix::new(3, 1, 1, 5), "m").unwrap();
        assert_eq!(r.related.precision, 0.75);
        assert_eq!(r.related.recall, 0.75);
        assert_eq!(r.related.f1, 0.75);
        assert_eq!(r.accuracy, 0.8);
        assert!((r.unrelated.precision - 5.0 / 6.0).abs() < 1e-15);
        assert!(!r.is_degenerate());
    }

    #[test]
    fn perfect_predictions() {
        use Label::*;
        let (p, g) = maps(&[(Related, Related), (Unrelated, Unrelated), (Related, Related)]);
        let r = evaluate(&p, &g).unwrap();
        for m in [r.unrelated, r.related] {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn all_wrong_is_degenerate() {
        use Label::*;
        let (p, g) = maps(&[(Related, Unrelated), (Related, Unrelated)]);
        let r = evaluate(&p, &g).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.related.precision, 0.0);
        assert!(r.degenerate.contains(&"recall_related".to_string()));
        assert!(r.degenerate.contains(&"precision_unrelated".to_string()));
        // F1 is defined here: the class was predicted, so its denominator is positive.
        assert!(!r.degenerate.contains(&"f1_related".to_string()));
        assert_eq!(r.related.f1, 0.0);
        assert!(!r.accuracy.is_nan());
    }

    #[test]
    fn missing_prediction_errors() {
        let gold: BTreeMap<_, _> = [("a".to_string(), Label::Related)].into();
        assert!(matches!(evaluate(&BTreeMap::new(), &gold), Err(Error::MissingIds { .. })));
        assert!(evaluate(&gold, &BTreeMap::new()).is_err());
    }

    #[test]
    fn comparison_columns() {
        use Label::*;
        let (kwf, gold) = maps(&[(Related, Related), (Unrelated, Related), (Unrelated, Unrelated), (Related, Unrelated)]);
        let (perfect, _) = maps(&[(Related, Related), (Related, Related), (Unrelated, Unrelated), (Unrelated, Unrelated)]);
        let table = compare(
            &[("KWF".into(), kwf.clone()), ("Model".into(), perfect), ("KWF again".into(), kwf)],
            &gold,
        )
        .unwrap();
        assert_eq!(table.tags(), ["KWF", "Model", "KWF again"]);
        assert_eq!(
            serde_json::to_value(&table.reports[0]).unwrap()["unrelated"],
            serde_json::to_value(&table.reports[2]).unwrap()["unrelated"]
        );
        let text = table.render_text(true);
        assert!(text.contains("Precision"));
        assert!(text.contains("*1.00* / *1.00*"));
        assert!(text.lines().last().unwrap().starts_with("Accuracy"));
        let csv = table.to_csv();
        assert!(csv.starts_with("metric,KWF,Model,KWF again\n"));
        assert_eq!(csv.lines().count(), 8);
        assert!(compare(&[], &gold).is_err());
    }

    proptest! {
        #[test]
        fn report_identities(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50, tn in 0usize..50) {
            let m = ConfusionMatrix::new(tp, fp, fn_, tn);
            prop_assume!(m.total() > 0);
            let r = EvaluationReport::from_matrix(m, "x").unwrap();
            let n = m.total() as f64;
            prop_assert!((r.accuracy - (tp + tn) as f64 / n).abs() < 1e-15);
            let n0 = (tn + fp) as f64;
            let n1 = (tp + fn_) as f64;
            prop_assert!((r.accuracy - (r.unrelated.recall * n0 + r.related.recall * n1) / n).abs() < 1e-12);
            let s = EvaluationReport::from_matrix(m.swapped(), "x").unwrap();
            prop_assert_eq!(s.related, r.unrelated);
            prop_assert_eq!(s.unrelated, r.related);
            for v in [r.accuracy, r.related.precision, r.related.recall, r.related.f1, r.unrelated.precision, r.unrelated.recall, r.unrelated.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
