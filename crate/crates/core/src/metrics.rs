//! Binary confusion matrices and the seven summary scores derived from them.
//!
//! All scores are computed from the four counts alone. Denominators that
//! vanish yield 0 rather than NaN: sensitivity, specificity, precision and F1
//! when their own denominator is 0, MCC when any marginal under the root is
//! 0, and kappa when chance agreement is 1.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("prediction and truth lists differ in length ({preds} vs {truth})")]
    LengthMismatch { preds: usize, truth: usize },
    #[error("no samples to tally")]
    Empty,
    #[error("positive class {0:?} does not occur in the labels")]
    UnknownPositiveClass(String),
}

/// Counts for a designated positive class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub positive_class: String,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64, positive_class: impl Into<String>) -> Self {
        Self {
            tp,
            fn_,
            fp,
            tn,
            positive_class: positive_class.into(),
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The same predictions scored with the other class as positive.
    pub fn swapped(&self, new_positive: impl Into<String>) -> Self {
        Self::new(self.tn, self.fp, self.fn_, self.tp, new_positive)
    }
}

/// Tally predictions against ground truth.
///
/// `positive_class` must occur in either list; every other label counts as
/// negative.
pub fn confusion<S: AsRef<str>>(
    preds: &[S],
    truth: &[S],
    positive_class: &str,
) -> Result<ConfusionMatrix, MetricsError> {
    if preds.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            preds: preds.len(),
            truth: truth.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let known = preds
        .iter()
        .chain(truth)
        .any(|l| l.as_ref() == positive_class);
    if !known {
        return Err(MetricsError::UnknownPositiveClass(
            positive_class.to_owned(),
        ));
    }

    let mut cm = ConfusionMatrix::new(0, 0, 0, 0, positive_class);
    for (p, t) in preds.iter().zip(truth) {
        let p = p.as_ref() == positive_class;
        let t = t.as_ref() == positive_class;
        match (t, p) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub pre: f64,
    pub f1: f64,
    pub mcc: f64,
    pub kappa: f64,
    pub counts: ConfusionMatrix,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn metrics_report(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let (tp, fn_, fp, tn) = (cm.tp as f64, cm.fn_ as f64, cm.fp as f64, cm.tn as f64);
    let n = total as f64;

    let acc = (tp + tn) / n;
    let sen = ratio(tp, tp + fn_);
    let spe = ratio(tn, tn + fp);
    let pre = ratio(tp, tp + fp);
    let f1 = ratio(2.0 * tp, 2.0 * tp + fn_ + fp);

    let marginals = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    let mcc = if marginals.contains(&0.0) {
        0.0
    } else {
        // Square root of each pair separately keeps the product in range
        // for very large counts.
        let den = ((tp + fp) * (tp + fn_)).sqrt() * ((tn + fp) * (tn + fn_)).sqrt();
        (tp * tn - fp * fn_) / den
    };

    let random_acc = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
    let kappa = if random_acc == 1.0 {
        0.0
    } else {
        (acc - random_acc) / (1.0 - random_acc)
    };

    Ok(MetricsReport {
        acc,
        sen,
        spe,
        pre,
        f1,
        mcc,
        kappa,
        counts: cm.clone(),
    })
}

impl MetricsReport {
    /// `(name, value)` pairs in reporting order.
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("ACC", self.acc),
            ("SEN", self.sen),
            ("SPE", self.spe),
            ("PRE", self.pre),
            ("F1-score", self.f1),
            ("MCC", self.mcc),
            ("Kappa", self.kappa),
        ]
    }

    /// Aligned text block with percentages to two decimals, one header row
    /// and one value row labeled `row_label`.
    pub fn to_table(&self, row_label: &str) -> String {
        let label_width = row_label.len().max("Method".len());
        let mut header = format!("{:<label_width$}", "Method");
        let mut row = format!("{row_label:<label_width$}");
        for (name, value) in self.entries() {
            let w = name.len().max(6);
            header.push_str(&format!("  {name:>w$}"));
            row.push_str(&format!("  {:>w$.2}", value * 100.0));
        }
        let c = &self.counts;
        format!(
            "{header}\n{row}\npositive class: {}  TP={} FN={} FP={} TN={}\n",
            c.positive_class, c.tp, c.fn_, c.fp, c.tn
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table("model"))
    }
}
