use serde::{Deserialize, Serialize};

use crate::corpus::N_CLASSES;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn new(counts: [[u64; N_CLASSES]; N_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimMismatch { expected: truth.len(), actual: predicted.len() });
        }
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= N_CLASSES || p >= N_CLASSES {
                return Err(Error::Input(format!("class index out of range ({t}, {p})")));
            }
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N_CLASSES).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    /// Classes occurring in truth or predictions.
    pub fn present_classes(&self) -> Vec<usize> {
        (0..N_CLASSES).filter(|&k| self.row_sum(k) + self.col_sum(k) > 0).collect()
    }

    /// Classes with no true samples.
    pub fn absent_true_classes(&self) -> Vec<usize> {
        (0..N_CLASSES).filter(|&k| self.row_sum(k) == 0).collect()
    }

    pub fn accuracy(&self) -> f64 {
        let s = self.total();
        if s == 0 {
            0.0
        } else {
            self.trace() as f64 / s as f64
        }
    }
}

/// Gorodkin's multiclass MCC:
/// `(c*s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))`,
/// where `p_k` are predicted (column) totals and `t_k` true (row) totals.
/// Zero when the denominator vanishes.
pub fn multiclass_mcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    let c = cm.trace() as f64;
    let (mut pt, mut pp, mut tt) = (0.0, 0.0, 0.0);
    for k in 0..N_CLASSES {
        let p = cm.col_sum(k) as f64;
        let t = cm.row_sum(k) as f64;
        pt += p * t;
        pp += p * p;
        tt += t * t;
    }
    let den = ((s * s - pp) * (s * s - tt)).sqrt();
    if den == 0.0 {
        return 0.0;
    }
    ((c * s - pt) / den).clamp(-1.0, 1.0)
}

/// Per-class F1 as `2TP / (2TP + FP + FN)`; `None` when the class occurs in
/// neither truth nor predictions.
pub fn class_f1(cm: &ConfusionMatrix, k: usize) -> Option<f64> {
    let tp = cm.counts[k][k] as f64;
    let fp = cm.col_sum(k) as f64 - tp;
    let fn_ = cm.row_sum(k) as f64 - tp;
    let den = 2.0 * tp + fp + fn_;
    (den > 0.0).then(|| 2.0 * tp / den)
}

/// Unweighted mean of per-class F1 over classes present in truth or
/// predictions.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let f: Vec<f64> = (0..N_CLASSES).filter_map(|k| class_f1(cm, k)).collect();
    if f.is_empty() {
        0.0
    } else {
        f.iter().sum::<f64>() / f.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcc_examples() {
        let perfect = ConfusionMatrix::new([[3, 0, 0], [0, 2, 0], [0, 0, 1]]);
        assert_eq!(multiclass_mcc(&perfect), 1.0);
        let binary = ConfusionMatrix::new([[2, 1, 0], [1, 2, 0], [0, 0, 0]]);
        assert!((multiclass_mcc(&binary) - 1.0 / 3.0).abs() < 1e-15);
        let one_column = ConfusionMatrix::new([[3, 0, 0], [2, 0, 0], [4, 0, 0]]);
        assert_eq!(multiclass_mcc(&one_column), 0.0);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(macro_f1(&ConfusionMatrix::new([[1, 0, 0], [0, 1, 0], [0, 0, 1]])), 1.0);
        let cm = ConfusionMatrix::new([[2, 1, 0], [0, 3, 0], [0, 0, 0]]);
        assert!((macro_f1(&cm) - (0.8 + 6.0 / 7.0) / 2.0).abs() < 1e-15);
        assert!((macro_f1(&cm) - 0.8286).abs() < 1e-4);
        assert_eq!(cm.present_classes(), [0, 1]);
    }

    #[test]
    fn from_predictions_counts() {
        let cm = ConfusionMatrix::from_predictions(&[0, 1, 2, 2], &[0, 2, 2, 1]).unwrap();
        assert_eq!(cm.counts, [[1, 0, 0], [0, 0, 1], [0, 1, 1]]);
        assert_eq!(cm.total(), 4);
        assert!(ConfusionMatrix::from_predictions(&[0], &[]).is_err());
    }
}
