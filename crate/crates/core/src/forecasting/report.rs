use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: usize,
    /// False when the class was never predicted (precision reported as 0).
    pub precision_defined: bool,
    /// False when the class never occurs (recall reported as 0).
    pub recall_defined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageRow<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: usize,
}

/// Per-class precision/recall/F1/support with accuracy, macro and weighted averages.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport<T> {
    pub classes: [ClassMetrics<T>; 2],
    pub accuracy: T,
    pub macro_avg: AverageRow<T>,
    pub weighted_avg: AverageRow<T>,
}

fn ratio<T: Scalar>(num: usize, den: usize) -> (T, bool) {
    if den == 0 {
        (T::zero(), false)
    } else {
        (T::from_count(num) / T::from_count(den), true)
    }
}

pub fn classification_report<T: Scalar>(y_true: &[u8], y_pred: &[u8]) -> Result<ClassificationReport<T>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Alignment(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if let Some(bad) = y_true.iter().chain(y_pred).find(|v| **v > 1) {
        return Err(Error::InvalidArgument(format!("label {bad} is not binary")));
    }
    let mut confusion = [[0usize; 2]; 2];
    for (t, p) in y_true.iter().zip(y_pred) {
        confusion[*t as usize][*p as usize] += 1;
    }
    let total = y_true.len();
    let classes = [0usize, 1].map(|c| {
        let tp = confusion[c][c];
        let predicted = confusion[0][c] + confusion[1][c];
        let support = confusion[c][0] + confusion[c][1];
        let (precision, precision_defined) = ratio::<T>(tp, predicted);
        let (recall, recall_defined) = ratio::<T>(tp, support);
        let f1 = if precision + recall > T::zero() {
            T::lit(2.0) * precision * recall / (precision + recall)
        } else {
            T::zero()
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support,
            precision_defined,
            recall_defined,
        }
    });
    let correct = confusion[0][0] + confusion[1][1];
    let (accuracy, _) = ratio::<T>(correct, total);
    let two = T::lit(2.0);
    let macro_avg = AverageRow {
        precision: (classes[0].precision + classes[1].precision) / two,
        recall: (classes[0].recall + classes[1].recall) / two,
        f1: (classes[0].f1 + classes[1].f1) / two,
        support: total,
    };
    let weighted = |f: fn(&ClassMetrics<T>) -> T| -> T {
        if total == 0 {
            return T::zero();
        }
        classes.iter().map(|c| T::from_count(c.support) * f(c)).sum::<T>() / T::from_count(total)
    };
    let weighted_avg = AverageRow {
        precision: weighted(|c| c.precision),
        // Σ_c (n_c / N)(TP_c / n_c) = Σ_c TP_c / N
        recall: accuracy,
        f1: weighted(|c| c.f1),
        support: total,
    };
    Ok(ClassificationReport {
        classes,
        accuracy,
        macro_avg,
        weighted_avg,
    })
}

impl<T: Scalar> ClassificationReport<T> {
    pub fn total(&self) -> usize {
        self.classes[0].support + self.classes[1].support
    }

    /// Aligned plain-text table: class rows, accuracy, macro avg, weighted avg.
    pub fn to_text(&self) -> String {
        let f = |v: T| format!("{:.2}", v.as_f64());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14}{:>10}{:>10}{:>10}{:>10}",
            "Class", "Precision", "Recall", "F1-Score", "Support"
        );
        for (label, c) in ["0", "1"].iter().zip(&self.classes) {
            let _ = writeln!(
                out,
                "{:<14}{:>10}{:>10}{:>10}{:>10}",
                label,
                f(c.precision),
                f(c.recall),
                f(c.f1),
                c.support
            );
        }
        let _ = writeln!(
            out,
            "{:<14}{:>10}{:>10}{:>10}{:>10}",
            "Accuracy",
            "",
            "",
            f(self.accuracy),
            self.total()
        );
        for (label, a) in [("Macro Avg", &self.macro_avg), ("Weighted Avg", &self.weighted_avg)] {
            let _ = writeln!(
                out,
                "{:<14}{:>10}{:>10}{:>10}{:>10}",
                label,
                f(a.precision),
                f(a.recall),
                f(a.f1),
                a.support
            );
        }
        out
    }

    /// `class,precision,recall,f1,support`; the accuracy row carries the accuracy
    /// in the f1 column and leaves precision and recall empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["class", "precision", "recall", "f1", "support"])?;
        for (label, c) in ["0", "1"].iter().zip(&self.classes) {
            w.write_record([
                label.to_string(),
                c.precision.to_string(),
                c.recall.to_string(),
                c.f1.to_string(),
                c.support.to_string(),
            ])?;
        }
        w.write_record([
            "accuracy".to_string(),
            String::new(),
            String::new(),
            self.accuracy.to_string(),
            self.total().to_string(),
        ])?;
        for (label, a) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            w.write_record([
                label.to_string(),
                a.precision.to_string(),
                a.recall.to_string(),
                a.f1.to_string(),
                a.support.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
