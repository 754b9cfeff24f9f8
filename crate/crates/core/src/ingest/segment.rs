//! Fixed-length beat extraction around annotated R-peaks.

use nalgebra::DMatrix;

use crate::beats::{Provenance, TrainingSet};
use crate::error::Error;
use crate::ingest::annotations::BeatAnnotation;
use crate::ingest::format212::EcgRecord;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentationConfig {
    /// Samples taken to the left of the peak.
    pub left_samples: usize,
    /// Samples taken to the right; beat length is left + right + 1.
    pub right_samples: usize,
    /// Channel to segment (first channel by convention).
    pub channel: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            left_samples: 110,
            right_samples: 145,
            channel: 0,
        }
    }
}

impl SegmentationConfig {
    pub fn n_q(&self) -> usize {
        self.left_samples + self.right_samples + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SegmentReport {
    pub kept: usize,
    /// Annotations whose window ran past a record boundary.
    pub skipped_boundary: usize,
    /// Annotations outside classes N and V.
    pub skipped_class: usize,
}

/// Cuts one beat per N/V annotation: samples [peak - left, peak + right]
/// from the configured channel, in physical units. Out-of-bounds windows
/// and other-class annotations are counted, never fatal.
pub fn segment_beats(
    record: &EcgRecord,
    annotations: &[BeatAnnotation],
    config: &SegmentationConfig,
) -> Result<(TrainingSet, SegmentReport)> {
    let signal = record.physical(config.channel)?;
    let n_q = config.n_q();
    let mut report = SegmentReport::default();
    let mut columns: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for ann in annotations {
        if ann.mapped_class == crate::beats::BeatClass::Other {
            report.skipped_class += 1;
            continue;
        }
        let peak = ann.sample_index as usize;
        if peak < config.left_samples || peak + config.right_samples >= signal.len() {
            report.skipped_boundary += 1;
            continue;
        }
        let start = peak - config.left_samples;
        columns.extend_from_slice(&signal[start..start + n_q]);
        labels.push(ann.mapped_class);
        provenance.push(Provenance {
            record: record.record_id.clone(),
            sample_index: ann.sample_index,
        });
        report.kept += 1;
    }
    let beats = DMatrix::from_vec(n_q, report.kept, columns);
    let set = TrainingSet::new(beats, labels, provenance).map_err(|e| {
        Error::InvalidInput(format!("segmented beats are not a valid set: {e}"))
    })?;
    Ok((set, report))
}
