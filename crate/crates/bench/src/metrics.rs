//! Accuracy metrics over estimated angle sets.

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Result};

/// How true and estimated angles are matched inside one trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    /// Both sets sorted ascending and paired by position.
    #[default]
    Sorted,
    /// The assignment minimising the summed squared error.
    Optimal,
}

/// Largest set size accepted by [`Pairing::Optimal`] (exact search over subsets).
pub const MAX_OPTIMAL_PAIRING: usize = 16;

/// Summed squared error of one trial.
pub fn squared_error(truth: &[f64], estimate: &[f64], pairing: Pairing) -> Result<f64> {
    if truth.len() != estimate.len() {
        return domain_err(format!(
            "{} true angles but {} estimates",
            truth.len(),
            estimate.len()
        ));
    }
    match pairing {
        Pairing::Sorted => {
            let mut a = truth.to_vec();
            let mut b = estimate.to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum())
        }
        Pairing::Optimal => optimal_assignment(truth, estimate),
    }
}

// Dynamic programme over subsets of assigned estimates.
fn optimal_assignment(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    let k = truth.len();
    if k > MAX_OPTIMAL_PAIRING {
        return domain_err(format!("optimal pairing supports at most {MAX_OPTIMAL_PAIRING} angles"));
    }
    let mut best = vec![f64::INFINITY; 1 << k];
    best[0] = 0.0;
    for mask in 0usize..1 << k {
        let i = mask.count_ones() as usize;
        if i == k || !best[mask].is_finite() {
            continue;
        }
        for (j, e) in estimate.iter().enumerate() {
            if mask & (1 << j) == 0 {
                let next = mask | (1 << j);
                best[next] = best[next].min(best[mask] + (truth[i] - e).powi(2));
            }
        }
    }
    Ok(best[(1 << k) - 1])
}

/// Root mean squared error over trials and sources,
/// `sqrt(sum_d sum_k (theta_dk - est_dk)^2 / (D K))`.
pub fn rmse(truths: &[Vec<f64>], estimates: &[Vec<f64>], pairing: Pairing) -> Result<f64> {
    if truths.len() != estimates.len() {
        return domain_err(format!("{} truths but {} estimates", truths.len(), estimates.len()));
    }
    if truths.is_empty() {
        return domain_err("RMSE of zero trials");
    }
    let k = truths[0].len();
    if k == 0 {
        return domain_err("RMSE needs at least one source per trial");
    }
    let mut total = 0.0;
    for (t, e) in truths.iter().zip(estimates) {
        if t.len() != k {
            return domain_err("every trial must have the same number of sources");
        }
        total += squared_error(t, e, pairing)?;
    }
    Ok((total / (truths.len() * k) as f64).sqrt())
}

/// Standard error of an RMSE computed from per-trial squared errors (each
/// already divided by K), by the delta method.
pub fn rmse_standard_error(per_trial_mse: &[f64]) -> f64 {
    let n = per_trial_mse.len() as f64;
    if n < 2.0 {
        return f64::INFINITY;
    }
    let mean = per_trial_mse.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = per_trial_mse.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt() / (2.0 * mean.sqrt())
}

fn directed(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two angle sets. Two empty sets are at
/// distance zero; `None` marks the undefined case of exactly one empty set.
pub fn hausdorff(a: &[f64], b: &[f64]) -> Option<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Some(0.0),
        (true, false) | (false, true) => None,
        _ => Some(directed(a, b).max(directed(b, a))),
    }
}

/// Mean and maximum over the defined distances, with the undefined count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffSummary {
    pub mean: Option<f64>,
    pub max: Option<f64>,
    pub defined: usize,
    pub undefined: usize,
}

pub fn summarize_hausdorff(distances: &[Option<f64>]) -> HausdorffSummary {
    let defined: Vec<f64> = distances.iter().flatten().copied().collect();
    let n = defined.len();
    HausdorffSummary {
        mean: (n > 0).then(|| defined.iter().sum::<f64>() / n as f64),
        max: defined.iter().copied().reduce(f64::max),
        defined: n,
        undefined: distances.len() - n,
    }
}

/// Counts of (true, predicted) source numbers. Indices run over
/// `0..=k_display` plus a final overflow bucket for anything larger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k_display: usize,
    /// `counts[true][predicted]`, square of side `k_display + 2`.
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k_display: usize) -> Self {
        Self {
            k_display,
            counts: vec![vec![0; k_display + 2]; k_display + 2],
        }
    }

    pub fn bucket(&self, k: usize) -> usize {
        k.min(self.k_display + 1)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        let (t, p) = (self.bucket(truth), self.bucket(predicted));
        self.counts[t][p] += 1;
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[self.bucket(truth)].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..=self.k_display).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction of trials whose count was predicted exactly (overflow never counts).
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct() as f64 / n as f64,
        }
    }

    pub fn label(&self, i: usize) -> String {
        if i > self.k_display {
            format!(">{}", self.k_display)
        } else {
            i.to_string()
        }
    }
}

/// Confusion matrix of paired true / predicted source counts.
pub fn confusion(true_counts: &[usize], predicted_counts: &[usize], k_display: usize) -> Result<ConfusionMatrix> {
    if true_counts.len() != predicted_counts.len() {
        return domain_err(format!(
            "{} true counts but {} predictions",
            true_counts.len(),
            predicted_counts.len()
        ));
    }
    let mut m = ConfusionMatrix::new(k_display);
    for (&t, &p) in true_counts.iter().zip(predicted_counts) {
        m.record(t, p);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: [f64; 3] = [-30.2, 20.15, 22.83];

    #[test]
    fn worked_hausdorff_examples() {
        assert!((hausdorff(&[-30.0, 20.0, 23.0], &B).unwrap() - 0.2).abs() < 1e-9);
        assert!((hausdorff(&[-30.0, 21.0], &B).unwrap() - 1.83).abs() < 1e-9);
        assert!((hausdorff(&[-30.0, 51.0], &B).unwrap() - 30.85).abs() < 1e-9);
        assert_eq!(hausdorff(&[], &[]), Some(0.0));
        assert_eq!(hausdorff(&[1.0], &[]), None);
    }

    #[test]
    fn worked_rmse_example() {
        let r = rmse(&[vec![-30.0, 20.0, 23.0]], &[B.to_vec()], Pairing::Sorted).unwrap();
        let exact = ((0.04 + 0.0225 + 0.0289) / 3.0f64).sqrt();
        assert!((r - exact).abs() < 1e-12);
        assert!((r - 0.1746).abs() < 1e-4);
    }

    #[test]
    fn pairing_modes() {
        // Sorted pairing is what is reported; optimal can only be lower.
        let t = [0.0, 10.0];
        let e = [9.0, 1.0];
        assert_eq!(squared_error(&t, &e, Pairing::Sorted).unwrap(), 2.0);
        assert_eq!(squared_error(&t, &e, Pairing::Optimal).unwrap(), 2.0);
        let t = [0.0, 1.0];
        let e = [0.9, 1.8];
        assert!(squared_error(&t, &e, Pairing::Optimal).unwrap() <= squared_error(&t, &e, Pairing::Sorted).unwrap());
        assert!(squared_error(&t, &[1.0], Pairing::Sorted).is_err());
    }

    #[test]
    fn confusion_overflow_and_rows() {
        let m = confusion(&[1, 2, 2, 3], &[1, 3, 5, 0], 3).unwrap();
        assert_eq!(m.counts.len(), 5);
        assert_eq!(m.counts[2][4], 1);
        assert_eq!(m.row_sum(2), 2);
        assert_eq!(m.correct(), 1);
        assert_eq!(m.label(4), ">3");
        assert!(confusion(&[1], &[], 2).is_err());
    }

    #[test]
    fn standard_error_of_constant_errors_is_zero() {
        assert_eq!(rmse_standard_error(&[0.25; 10]), 0.0);
        assert!(rmse_standard_error(&[1.0]).is_infinite());
    }
}
