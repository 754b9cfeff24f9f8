//! Experiment designs and classification statistics.
//!
//! Two split designs: an intra-patient seeded random split with per-class
//! training fractions, and an inter-patient split that assigns whole records
//! to either side. Classification quality is reported per class as
//! sensitivity SE = TP/(TP+FN) and positive predictivity PP = TP/(TP+FP),
//! plus overall accuracy, aggregated over several independently seeded runs.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::beats::{BeatClass, TrainingSet};
use crate::classify::{classify_batch, ClassifierModel, Criterion, Decision, Outcome};
use crate::dictionary::Dictionary;
use crate::dictlearn::{learn, LearnConfig};
use crate::error::Error;
use crate::par::map_indexed;
use crate::pursuit::Algorithm;
use crate::rng::substream;
use crate::screen::screen_and_filter;
use crate::wavedict::{build_wavelet_dictionary, WaveletDictConfig};
use crate::Result;

/// Records whose beats form the training side of the inter-patient design.
pub const INTER_PATIENT_TRAIN_RECORDS: [&str; 20] = [
    "101", "106", "108", "112", "114", "115", "118", "119", "122", "124", "201", "203", "205",
    "207", "208", "209", "215", "220", "223", "230",
];

/// Records whose beats form the testing side of the inter-patient design.
pub const INTER_PATIENT_TEST_RECORDS: [&str; 21] = [
    "100", "103", "105", "111", "113", "117", "121", "123", "200", "202", "210", "212", "213",
    "214", "219", "221", "222", "231", "232", "233", "234",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Seeded uniform split; each class keeps `floor(fraction * count)`
    /// beats on the training side.
    RandomFraction {
        train_fraction_n: f64,
        train_fraction_v: f64,
    },
    /// Whole records go to one side; beats from unlisted records are
    /// excluded with a warning.
    ByRecord {
        train_records: Vec<String>,
        test_records: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    /// Drives the random split; ignored for record splits.
    pub seed: u64,
}

impl SplitSpec {
    /// Intra-patient design: 35% of N beats and 50% of V beats train, the
    /// rest test.
    pub fn intra_patient(seed: u64) -> Self {
        Self {
            mode: SplitMode::RandomFraction {
                train_fraction_n: 0.35,
                train_fraction_v: 0.50,
            },
            seed,
        }
    }

    /// Inter-patient design over the standard 20 training / 21 testing
    /// record lists.
    pub fn inter_patient() -> Self {
        Self {
            mode: SplitMode::ByRecord {
                train_records: INTER_PATIENT_TRAIN_RECORDS
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                test_records: INTER_PATIENT_TEST_RECORDS
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.mode {
            SplitMode::RandomFraction {
                train_fraction_n,
                train_fraction_v,
            } => {
                for (class, f) in [("N", *train_fraction_n), ("V", *train_fraction_v)] {
                    if !f.is_finite() || f <= 0.0 || f >= 1.0 {
                        return Err(Error::InvalidInput(format!(
                            "train fraction for class {class} must lie in (0, 1), got {f}"
                        )));
                    }
                }
            }
            SplitMode::ByRecord {
                train_records,
                test_records,
            } => {
                if train_records.is_empty() || test_records.is_empty() {
                    return Err(Error::EmptyInput("record lists must be nonempty".into()));
                }
                let train: HashSet<&String> = train_records.iter().collect();
                if let Some(shared) = test_records.iter().find(|r| train.contains(r)) {
                    return Err(Error::InvalidInput(format!(
                        "record {shared} appears in both the train and test lists"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A train/test partition, plus notes about anything excluded on the way.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: TrainingSet,
    pub test: TrainingSet,
    pub warnings: Vec<String>,
}

/// Partitions a labeled beat set according to `spec`. Beats outside classes
/// N and V are excluded from both sides; the designs are binary.
pub fn split(beats: &TrainingSet, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    match &spec.mode {
        SplitMode::RandomFraction {
            train_fraction_n,
            train_fraction_v,
        } => split_random(beats, *train_fraction_n, *train_fraction_v, spec.seed),
        SplitMode::ByRecord {
            train_records,
            test_records,
        } => split_by_record(beats, train_records, test_records),
    }
}

fn split_random(
    beats: &TrainingSet,
    fraction_n: f64,
    fraction_v: f64,
    seed: u64,
) -> Result<Split> {
    let mut warnings = Vec::new();
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, fraction, stream) in [
        (BeatClass::N, fraction_n, "split-n"),
        (BeatClass::V, fraction_v, "split-v"),
    ] {
        let mut idx = beats.indices_of_class(class);
        if idx.is_empty() {
            return Err(Error::ClassAbsent(class.as_str().into()));
        }
        idx.shuffle(&mut substream(seed, stream));
        let n_train = (fraction * idx.len() as f64).floor() as usize;
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    let excluded = beats.len() - train_idx.len() - test_idx.len();
    if excluded > 0 {
        warnings.push(format!(
            "excluded {excluded} beats outside classes N and V"
        ));
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::EmptyInput(
            "random split left one side empty; adjust fractions or supply more beats".into(),
        ));
    }
    Ok(Split {
        train: beats.subset(&train_idx)?,
        test: beats.subset(&test_idx)?,
        warnings,
    })
}

fn split_by_record(
    beats: &TrainingSet,
    train_records: &[String],
    test_records: &[String],
) -> Result<Split> {
    let train_set: HashSet<&str> = train_records.iter().map(String::as_str).collect();
    let test_set: HashSet<&str> = test_records.iter().map(String::as_str).collect();
    let mut warnings = Vec::new();
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    let mut unlisted: Vec<String> = Vec::new();
    let mut excluded_other = 0usize;
    for (i, prov) in beats.provenance().iter().enumerate() {
        if beats.labels()[i] == BeatClass::Other {
            excluded_other += 1;
            continue;
        }
        let record = prov.record.as_str();
        if train_set.contains(record) {
            train_idx.push(i);
        } else if test_set.contains(record) {
            test_idx.push(i);
        } else if !unlisted.iter().any(|r| r == record) {
            unlisted.push(prov.record.clone());
        }
    }
    if !unlisted.is_empty() {
        unlisted.sort();
        warnings.push(format!(
            "excluded beats from {} unlisted record(s): {}",
            unlisted.len(),
            unlisted.join(", ")
        ));
    }
    if excluded_other > 0 {
        warnings.push(format!(
            "excluded {excluded_other} beats outside classes N and V"
        ));
    }
    if train_idx.is_empty() {
        return Err(Error::EmptyInput(
            "no beats from the training records".into(),
        ));
    }
    if test_idx.is_empty() {
        return Err(Error::EmptyInput("no beats from the testing records".into()));
    }
    Ok(Split {
        train: beats.subset(&train_idx)?,
        test: beats.subset(&test_idx)?,
        warnings,
    })
}

/// Confusion counts and derived rates for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
    /// TP/(TP+FN); NaN when the class has no beats in the evaluated set.
    pub se: f64,
    /// TP/(TP+FP); NaN when nothing was assigned to the class.
    pub pp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    pub n: ClassStats,
    pub v: ClassStats,
    /// Correctly classified beats over all evaluated beats.
    pub ac: f64,
    /// Undecided outcomes; counted as a false negative for the true class
    /// and a false positive for neither.
    pub undecided: u64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

fn class_stats(tp: u64, fp: u64, fn_count: u64) -> ClassStats {
    ClassStats {
        tp,
        fp,
        fn_count,
        se: ratio(tp, tp + fn_count),
        pp: ratio(tp, tp + fp),
    }
}

/// Tallies decisions against their true labels.
pub fn compute_stats(decisions: &[(BeatClass, Decision)]) -> Result<ConfusionStats> {
    if decisions.is_empty() {
        return Err(Error::EmptyInput("no decisions to evaluate".into()));
    }
    let (mut tp_n, mut fp_n, mut fn_n) = (0u64, 0u64, 0u64);
    let (mut tp_v, mut fp_v, mut fn_v) = (0u64, 0u64, 0u64);
    let mut undecided = 0u64;
    for (truth, decision) in decisions {
        let truth_is_n = match truth {
            BeatClass::N => true,
            BeatClass::V => false,
            BeatClass::Other => {
                return Err(Error::InvalidInput(
                    "evaluation labels must be N or V".into(),
                ))
            }
        };
        match &decision.label {
            Outcome::Undecided => {
                undecided += 1;
                if truth_is_n {
                    fn_n += 1;
                } else {
                    fn_v += 1;
                }
            }
            Outcome::Class(label) => {
                let predicted_n = match label.as_str() {
                    "N" => true,
                    "V" => false,
                    other => {
                        return Err(Error::InvalidInput(format!(
                            "predicted label {other:?} is neither N nor V"
                        )))
                    }
                };
                match (truth_is_n, predicted_n) {
                    (true, true) => tp_n += 1,
                    (false, false) => tp_v += 1,
                    (true, false) => {
                        fn_n += 1;
                        fp_v += 1;
                    }
                    (false, true) => {
                        fn_v += 1;
                        fp_n += 1;
                    }
                }
            }
        }
    }
    let total = decisions.len() as u64;
    Ok(ConfusionStats {
        n: class_stats(tp_n, fp_n, fn_n),
        v: class_stats(tp_v, fp_v, fn_v),
        ac: ratio(tp_n + tp_v, total),
        undecided,
        total,
    })
}

/// Training-set screening settings for an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenSettings {
    pub wavelet: WaveletDictConfig,
    pub prdn_target: f64,
    /// Window width in population standard deviations for the N class.
    pub multiplier_n: f64,
    /// Window width for the V class; conventionally tighter because that
    /// class is smaller.
    pub multiplier_v: f64,
    pub algorithm: Algorithm,
}

impl ScreenSettings {
    pub fn default_for(signal_length: usize, algorithm: Algorithm) -> Self {
        Self {
            wavelet: WaveletDictConfig::screening_default(signal_length),
            prdn_target: 9.0,
            multiplier_n: 3.0,
            multiplier_v: 2.0,
            algorithm,
        }
    }
}

/// Everything needed to reproduce one experiment. Each seed in `seeds` runs
/// the full pipeline once: split (random splits re-draw per seed), screen,
/// learn one dictionary per class, classify the test side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub split: SplitSpec,
    /// Learning settings for the N dictionary. The `seed` field is
    /// overridden per run; all randomness flows from `seeds`.
    pub learn_n: LearnConfig,
    /// Learning settings for the V dictionary; `seed` likewise overridden.
    pub learn_v: LearnConfig,
    /// Pursuit algorithm used at classification time.
    pub algorithm: Algorithm,
    pub criterion: Criterion,
    /// Equal-quality target for both decompositions, in PRDN percent.
    pub prdn_target: f64,
    /// Training-set screening; None skips it.
    pub screen: Option<ScreenSettings>,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    fn validate(&self, data: &TrainingSet) -> Result<()> {
        self.split.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::EmptyInput("seed list must be nonempty".into()));
        }
        if !self.prdn_target.is_finite() || self.prdn_target <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "prdn target must be positive, got {}",
                self.prdn_target
            )));
        }
        if let Some(s) = &self.screen {
            if s.wavelet.signal_length != data.n_q() {
                return Err(Error::DimensionMismatch(format!(
                    "screening dictionary is built for length {} but beats have length {}",
                    s.wavelet.signal_length,
                    data.n_q()
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub train_n: usize,
    pub train_v: usize,
    pub test_n: usize,
    pub test_v: usize,
    /// Beats dropped by screening, per class.
    pub screened_out_n: usize,
    pub screened_out_v: usize,
    pub stats: ConfusionStats,
    pub warnings: Vec<String>,
}

/// Mean and sample standard deviation over the seeded runs. std is absent
/// for a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: Option<f64>,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() >= 2 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(var.sqrt())
    } else {
        None
    };
    MetricSummary { mean, std }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub se_n: MetricSummary,
    pub se_v: MetricSummary,
    pub pp_n: MetricSummary,
    pub pp_v: MetricSummary,
    pub ac: MetricSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
    pub summary: MetricTable,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text summary, one metric per row in percent, with a std row
    /// under each metric when more than one seed ran.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} + criterion {}, prdn {}, {} seed(s)",
            self.config.algorithm,
            self.config.criterion.as_str(),
            self.config.prdn_target,
            self.runs.len()
        );
        let rows = [
            ("SE_N", self.summary.se_n),
            ("SE_V", self.summary.se_v),
            ("PP_N", self.summary.pp_n),
            ("PP_V", self.summary.pp_v),
            ("AC", self.summary.ac),
        ];
        for (name, m) in rows {
            let _ = writeln!(out, "{:<9}{:>8.2}", format!("{name} (%)"), m.mean * 100.0);
            if let Some(std) = m.std {
                let _ = writeln!(out, "{:<9}{:>8.2}", "std", std * 100.0);
            }
        }
        out
    }
}

fn run_single(
    data: &TrainingSet,
    config: &ExperimentConfig,
    wavelet_dict: Option<&Dictionary>,
    seed: u64,
) -> Result<SeedRun> {
    let mut spec = config.split.clone();
    spec.seed = seed;
    let Split {
        train,
        test,
        mut warnings,
    } = split(data, &spec)?;
    let mut train_n = train.class_subset(BeatClass::N)?;
    let mut train_v = train.class_subset(BeatClass::V)?;
    let (mut screened_out_n, mut screened_out_v) = (0, 0);
    if let Some(s) = &config.screen {
        let dict = wavelet_dict.expect("wavelet dictionary built when screening is on");
        let (kept, report) =
            screen_and_filter(&train_n, dict, s.prdn_target, s.multiplier_n, s.algorithm)?;
        screened_out_n = report.rejected.len();
        train_n = kept;
        let (kept, report) =
            screen_and_filter(&train_v, dict, s.prdn_target, s.multiplier_v, s.algorithm)?;
        screened_out_v = report.rejected.len();
        train_v = kept;
    }

    let mut learn_cfg_n = config.learn_n.clone();
    learn_cfg_n.seed = substream(seed, "learn-n").next_u64();
    let mut learn_cfg_v = config.learn_v.clone();
    learn_cfg_v.seed = substream(seed, "learn-v").next_u64();
    let (dict_n, trace_n) = learn(&train_n, &learn_cfg_n)?;
    let (dict_v, trace_v) = learn(&train_v, &learn_cfg_v)?;
    warnings.extend(trace_n.warnings.iter().map(|w| format!("learn N: {w}")));
    warnings.extend(trace_v.warnings.iter().map(|w| format!("learn V: {w}")));

    let model = ClassifierModel::new(
        dict_n,
        "N",
        dict_v,
        "V",
        config.algorithm,
        config.prdn_target,
        config.criterion,
    )?;
    let decisions = classify_batch(test.beats(), &model);
    let mut paired = Vec::with_capacity(decisions.len());
    for (q, result) in decisions.into_iter().enumerate() {
        let prov = &test.provenance()[q];
        let decision = result.map_err(|e| Error::BeatCoding {
            record: prov.record.clone(),
            sample_index: prov.sample_index,
            source: Box::new(e),
        })?;
        paired.push((test.labels()[q], decision));
    }
    let stats = compute_stats(&paired)?;

    let count = |set: &TrainingSet, class| set.indices_of_class(class).len();
    Ok(SeedRun {
        seed,
        train_n: count(&train_n, BeatClass::N),
        train_v: count(&train_v, BeatClass::V),
        test_n: count(&test, BeatClass::N),
        test_v: count(&test, BeatClass::V),
        screened_out_n,
        screened_out_v,
        stats,
        warnings,
    })
}

/// Runs the full pipeline once per seed and aggregates the statistics.
/// Seeds run independently (in parallel when the `parallel` feature is on).
pub fn run_experiment(data: &TrainingSet, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate(data)?;
    let wavelet_dict = match &config.screen {
        Some(s) => Some(build_wavelet_dictionary(&s.wavelet)?),
        None => None,
    };
    let results = map_indexed(config.seeds.len(), |i| {
        let seed = config.seeds[i];
        run_single(data, config, wavelet_dict.as_ref(), seed).map_err(|e| Error::Seeded {
            seed,
            source: Box::new(e),
        })
    });
    let mut runs = Vec::with_capacity(results.len());
    for result in results {
        runs.push(result?);
    }
    let metric = |f: fn(&ConfusionStats) -> f64| {
        summarize(&runs.iter().map(|r| f(&r.stats)).collect::<Vec<_>>())
    };
    let summary = MetricTable {
        se_n: metric(|s| s.n.se),
        se_v: metric(|s| s.v.se),
        pp_n: metric(|s| s.n.pp),
        pp_v: metric(|s| s.v.pp),
        ac: metric(|s| s.ac),
    };
    Ok(ExperimentReport {
        config: config.clone(),
        runs,
        summary,
    })
}
