//! Training-set screening: reject beats whose sparsity level is an outlier.
//!
//! Every beat is approximated to a fixed PRDN with the redundant wavelet
//! dictionary; the atom count k it needs measures how "typical" its
//! morphology is. Beats with k outside the open window
//! (mean - s*std, mean + s*std) are rejected. Screening is a single pass:
//! the window is computed once and never recomputed after removal.

use crate::beats::{Provenance, TrainingSet};
use crate::dictionary::Dictionary;
use crate::par::map_indexed;
use crate::pursuit::{approximate_to_prdn, Algorithm};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RejectReason {
    /// k fell outside the open window.
    OutsideWindow { k: usize },
    /// The beat could not be approximated at all (e.g. constant signal).
    ApproximationFailed { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedBeat {
    /// Column index in the screened training set.
    pub beat: usize,
    pub provenance: Provenance,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    /// k per beat, aligned with training-set columns; None when the
    /// approximation failed outright.
    pub k_values: Vec<Option<usize>>,
    pub mean_k: f64,
    pub std_k: f64,
    /// Open interval (lower, upper); lower clamped at 0.
    pub window: (f64, f64),
    pub rejected: Vec<RejectedBeat>,
    /// Percentage of beats rejected.
    pub rejection_fraction: f64,
    /// (k, count) pairs for the observed k values, ascending.
    pub histogram: Vec<(usize, usize)>,
}

impl ScreeningReport {
    /// Indices of the beats that survived, in original order.
    pub fn kept_indices(&self) -> Vec<usize> {
        let rejected: std::collections::HashSet<usize> =
            self.rejected.iter().map(|r| r.beat).collect();
        (0..self.k_values.len())
            .filter(|i| !rejected.contains(i))
            .collect()
    }

    /// Histogram as CSV with a `k,count` header.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("k,count\n");
        for (k, count) in &self.histogram {
            out.push_str(&format!("{k},{count}\n"));
        }
        out
    }
}

/// Screens a training set. The window is (mean - s*std, mean + s*std) over
/// the beats that produced a k; beats with k <= lower or k >= upper are
/// rejected, as are beats whose approximation failed. std = 0 widens the
/// window to (mean - 1, mean + 1) so identical beats all pass.
pub fn screen_training_set(
    training: &TrainingSet,
    wavelet_dict: &Dictionary,
    prdn_target: f64,
    std_multiplier: f64,
    algorithm: Algorithm,
) -> Result<ScreeningReport> {
    if training.is_empty() {
        return Err(Error::EmptyInput("cannot screen an empty training set".into()));
    }
    if !(prdn_target > 0.0) || !prdn_target.is_finite() {
        return Err(Error::InvalidInput(format!(
            "screening prdn target must be positive, got {prdn_target}"
        )));
    }
    if !(std_multiplier > 0.0) || !std_multiplier.is_finite() {
        return Err(Error::InvalidInput(format!(
            "std multiplier must be positive, got {std_multiplier}"
        )));
    }
    if training.n_q() != wavelet_dict.signal_len() {
        return Err(Error::DimensionMismatch(format!(
            "beats of length {} vs dictionary signal length {}",
            training.n_q(),
            wavelet_dict.signal_len()
        )));
    }

    let outcomes = map_indexed(training.len(), |q| {
        approximate_to_prdn(&training.beat(q), wavelet_dict, algorithm, prdn_target, None)
            .map(|d| d.k())
            .map_err(|e| e.to_string())
    });

    let k_values: Vec<Option<usize>> = outcomes.iter().map(|o| o.as_ref().ok().copied()).collect();
    let ks: Vec<f64> = k_values.iter().flatten().map(|&k| k as f64).collect();
    if ks.is_empty() {
        return Err(Error::InvalidInput(
            "no beat could be approximated; nothing to screen".into(),
        ));
    }

    let mean_k = ks.iter().sum::<f64>() / ks.len() as f64;
    // Population standard deviation: the screened set is the whole
    // population of interest, matching the reported summary statistics.
    let std_k = (ks.iter().map(|k| (k - mean_k) * (k - mean_k)).sum::<f64>() / ks.len() as f64)
        .sqrt();

    let (mut lower, mut upper) = if std_k == 0.0 {
        (mean_k - 1.0, mean_k + 1.0)
    } else {
        (
            mean_k - std_multiplier * std_k,
            mean_k + std_multiplier * std_k,
        )
    };
    if lower < 0.0 {
        lower = 0.0;
    }
    if upper < lower {
        upper = lower;
    }

    let mut rejected = Vec::new();
    for (q, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Ok(k) => {
                let kf = *k as f64;
                if kf <= lower || kf >= upper {
                    rejected.push(RejectedBeat {
                        beat: q,
                        provenance: training.provenance()[q].clone(),
                        reason: RejectReason::OutsideWindow { k: *k },
                    });
                }
            }
            Err(detail) => rejected.push(RejectedBeat {
                beat: q,
                provenance: training.provenance()[q].clone(),
                reason: RejectReason::ApproximationFailed {
                    detail: detail.clone(),
                },
            }),
        }
    }

    let mut histogram_map = std::collections::BTreeMap::new();
    for k in k_values.iter().flatten() {
        *histogram_map.entry(*k).or_insert(0usize) += 1;
    }

    Ok(ScreeningReport {
        rejection_fraction: rejected.len() as f64 / training.len() as f64 * 100.0,
        k_values,
        mean_k,
        std_k,
        window: (lower, upper),
        rejected,
        histogram: histogram_map.into_iter().collect(),
    })
}

/// Convenience: screen and return the surviving subset with its report.
pub fn screen_and_filter(
    training: &TrainingSet,
    wavelet_dict: &Dictionary,
    prdn_target: f64,
    std_multiplier: f64,
    algorithm: Algorithm,
) -> Result<(TrainingSet, ScreeningReport)> {
    let report = screen_training_set(training, wavelet_dict, prdn_target, std_multiplier, algorithm)?;
    let kept = training.subset(&report.kept_indices())?;
    if kept.is_empty() {
        return Err(Error::InvalidInput(
            "screening rejected every beat".into(),
        ));
    }
    Ok((kept, report))
}
