//! Beat classes and segmented training sets.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Beat class after annotation symbol mapping.
///
/// N covers the normal-ish symbols (N, L, R), V the ventricular ones (V, E);
/// everything else is Other and excluded from training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeatClass {
    N,
    V,
    Other,
}

impl BeatClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            BeatClass::N => "N",
            BeatClass::V => "V",
            BeatClass::Other => "other",
        }
    }
}

impl std::str::FromStr for BeatClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" => Ok(BeatClass::N),
            "V" | "v" => Ok(BeatClass::V),
            "other" | "Other" | "O" | "o" => Ok(BeatClass::Other),
            _ => Err(Error::InvalidInput(format!("unknown beat class {s:?}"))),
        }
    }
}

impl std::fmt::Display for BeatClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a beat came from: source record and the annotated peak sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub record: String,
    pub sample_index: u64,
}

/// A matrix of segmented beats, one beat per column, with labels and
/// provenance aligned by column index.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    beats: DMatrix<f64>,
    labels: Vec<BeatClass>,
    provenance: Vec<Provenance>,
}

impl TrainingSet {
    /// `beats` is N_q x Q; `labels` and `provenance` must have length Q.
    /// All samples must be finite.
    pub fn new(
        beats: DMatrix<f64>,
        labels: Vec<BeatClass>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        let q = beats.ncols();
        if labels.len() != q || provenance.len() != q {
            return Err(Error::DimensionMismatch(format!(
                "{} beats, {} labels, {} provenance entries",
                q,
                labels.len(),
                provenance.len()
            )));
        }
        if beats.nrows() == 0 {
            return Err(Error::EmptyInput("beats have zero length".into()));
        }
        if beats.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("beat samples must be finite".into()));
        }
        Ok(Self {
            beats,
            labels,
            provenance,
        })
    }

    /// Beat length N_q.
    pub fn n_q(&self) -> usize {
        self.beats.nrows()
    }

    /// Number of beats Q.
    pub fn len(&self) -> usize {
        self.beats.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.ncols() == 0
    }

    pub fn beats(&self) -> &DMatrix<f64> {
        &self.beats
    }

    pub fn beat(&self, q: usize) -> DVector<f64> {
        self.beats.column(q).into_owned()
    }

    pub fn labels(&self) -> &[BeatClass] {
        &self.labels
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// New set keeping the columns at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<TrainingSet> {
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidInput(format!(
                    "beat index {i} out of range for {} beats",
                    self.len()
                )));
            }
        }
        Ok(TrainingSet {
            beats: self.beats.select_columns(indices.iter()),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i].clone()).collect(),
        })
    }

    /// Indices of beats with the given label.
    pub fn indices_of_class(&self, class: BeatClass) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Beats of one class only.
    pub fn class_subset(&self, class: BeatClass) -> Result<TrainingSet> {
        let idx = self.indices_of_class(class);
        if idx.is_empty() {
            return Err(Error::ClassAbsent(class.as_str().into()));
        }
        self.subset(&idx)
    }

    /// Concatenates two sets with equal beat length.
    pub fn concat(&self, other: &TrainingSet) -> Result<TrainingSet> {
        if self.n_q() != other.n_q() {
            return Err(Error::DimensionMismatch(format!(
                "beat lengths {} and {}",
                self.n_q(),
                other.n_q()
            )));
        }
        let mut beats = DMatrix::zeros(self.n_q(), self.len() + other.len());
        beats.columns_mut(0, self.len()).copy_from(&self.beats);
        beats
            .columns_mut(self.len(), other.len())
            .copy_from(&other.beats);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut provenance = self.provenance.clone();
        provenance.extend_from_slice(&other.provenance);
        TrainingSet::new(beats, labels, provenance)
    }

    /// Count of beats per class (N, V, Other).
    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut n = 0;
        let mut v = 0;
        let mut other = 0;
        for l in &self.labels {
            match l {
                BeatClass::N => n += 1,
                BeatClass::V => v += 1,
                BeatClass::Other => other += 1,
            }
        }
        (n, v, other)
    }
}
