use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification quality derived from a C×C confusion matrix whose rows are
/// true classes and columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
    pub confusion: Vec<Vec<u64>>,
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Result<Self> {
        let c = confusion.len();
        if confusion.iter().any(|r| r.len() != c) {
            return Err(Error::Shape("confusion matrix must be square".into()));
        }
        let micro = micro_f1(&confusion)?;
        let total: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..c).map(|i| confusion[i][i]).sum();
        let support: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
        let predicted: Vec<u64> = (0..c).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();

        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision: Vec<f64> = (0..c).map(|i| ratio(confusion[i][i], predicted[i])).collect();
        let recall: Vec<f64> = (0..c).map(|i| ratio(confusion[i][i], support[i])).collect();
        let f1: Vec<f64> = (0..c)
            .map(|i| ratio(2 * confusion[i][i], support[i] + predicted[i]))
            .collect();
        // classes that neither occur nor are predicted do not count
        let present: Vec<usize> = (0..c).filter(|&i| support[i] + predicted[i] > 0).collect();
        let macro_f1 = present.iter().map(|&i| f1[i]).sum::<f64>() / present.len() as f64;
        Ok(Self {
            micro_f1: micro,
            macro_f1,
            accuracy: ratio(trace, total),
            precision,
            recall,
            f1,
            support,
            confusion,
        })
    }

    pub fn from_predictions(labels: &[usize], predictions: &[usize], num_classes: usize) -> Result<Self> {
        Self::from_confusion(confusion_matrix(labels, predictions, num_classes)?)
    }

    pub fn total(&self) -> u64 {
        self.support.iter().sum()
    }
}

pub fn confusion_matrix(labels: &[usize], predictions: &[usize], num_classes: usize) -> Result<Vec<Vec<u64>>> {
    if labels.len() != predictions.len() {
        return Err(Error::Shape(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    let mut m = vec![vec![0u64; num_classes]; num_classes];
    for (&y, &p) in labels.iter().zip(predictions) {
        if y >= num_classes || p >= num_classes {
            return Err(Error::InvalidInput(format!(
                "class index ({y}, {p}) outside [0, {num_classes})"
            )));
        }
        m[y][p] += 1;
    }
    Ok(m)
}

/// Pools true positives, false positives and false negatives over all
/// classes: `2TP / (2TP + FP + FN)`.
pub fn micro_f1(confusion: &[Vec<u64>]) -> Result<f64> {
    let c = confusion.len();
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for k in 0..c {
        let row = confusion
            .get(k)
            .filter(|r| r.len() == c)
            .ok_or_else(|| Error::Shape("confusion matrix must be square".into()))?;
        tp += row[k];
        fn_ += row.iter().sum::<u64>() - row[k];
        fp += confusion.iter().map(|r| r[k]).sum::<u64>() - row[k];
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Err(Error::InvalidInput("micro-F1 of an all-zero confusion matrix".into()));
    }
    Ok((2 * tp) as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(micro_f1(&[vec![5, 0], vec![0, 5]]).unwrap(), 1.0);
        assert_eq!(micro_f1(&[vec![2, 1], vec![1, 2]]).unwrap(), 4.0 / 6.0);
        assert_eq!(micro_f1(&[vec![0, 3], vec![2, 0]]).unwrap(), 0.0);
        assert!(micro_f1(&[vec![0, 0], vec![0, 0]]).is_err());
        assert!(micro_f1(&[vec![0, 0], vec![0]]).is_err());
    }

    #[test]
    fn three_of_four() {
        let m = Metrics::from_predictions(&[0, 1, 2, 3], &[0, 1, 2, 0], 4).unwrap();
        assert_eq!(m.micro_f1, 0.75);
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.total(), 4);
        assert_eq!(m.precision[0], 0.5);
        assert_eq!(m.recall[3], 0.0);
    }

    #[test]
    fn macro_skips_absent_classes() {
        let m = Metrics::from_predictions(&[0, 0, 1], &[0, 0, 1], 8).unwrap();
        assert_eq!(m.macro_f1, 1.0);
        let m = Metrics::from_predictions(&[0, 0, 1, 1], &[0, 0, 0, 1], 3).unwrap();
        let f0 = 2.0 * 2.0 / (2.0 * 2.0 + 1.0);
        let f1 = 2.0 / 3.0;
        assert!((m.macro_f1 - (f0 + f1) / 2.0).abs() < 1e-15);
    }
}
