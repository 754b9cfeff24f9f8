//! Command-line front end for the sparsebeat pipeline.
//!
//! Four subcommands cover the workflow end to end: `ingest` turns raw
//! records into a beat cache, `train` learns one dictionary per class,
//! `classify` applies a pair of dictionaries to beats, and `experiment`
//! runs the seeded split/screen/learn/classify loop and aggregates the
//! resulting statistics.
//!
//! Every subcommand prints its fully resolved configuration as one JSON
//! line before doing any work, so a run can be reproduced from its log.
//! Exit code is 0 unless the command failed outright; partial failures
//! (single bad record, single bad beat) are counted on stderr instead.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde::Serialize;

use sparsebeat::classify::{classify_batch, ClassifierModel, Criterion, Outcome, TieBreak};
use sparsebeat::dictlearn::{learn, CodingQuality, LearnConfig};
use sparsebeat::eval::{
    compute_stats, run_experiment, ExperimentConfig, ScreenSettings, SplitSpec,
};
use sparsebeat::ingest::{
    parse_binary_annotations, parse_csv_annotations, parse_format212, parse_signal_csv,
    read_cache, write_cache, Annotations, EcgRecord, SegmentReport, SegmentationConfig,
};
use sparsebeat::model::DictionaryModel;
use sparsebeat::rng::substream;
use sparsebeat::screen::screen_and_filter;
use sparsebeat::wavedict::{build_wavelet_dictionary, WaveletDictConfig};
use sparsebeat::{Algorithm, BeatClass, TrainingSet};

#[derive(Parser)]
#[command(name = "sparsebeat", version, about = "Sparse-approximation ECG beat tools")]
struct Cli {
    /// Worker threads for parallel sections; 0 uses all available cores.
    /// Results do not depend on this setting.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment annotated records into a beat cache.
    Ingest(IngestArgs),
    /// Learn a class dictionary from cached beats and write it as JSON.
    Train(TrainArgs),
    /// Classify beats with a pair of dictionary models.
    Classify(ClassifyArgs),
    /// Run seeded train/test experiments and aggregate the statistics.
    Experiment(ExperimentArgs),
}

#[derive(Args, Serialize)]
struct IngestArgs {
    /// Directory holding `{id}.hea/.dat/.atr`, or `{id}.csv` plus
    /// `{id}.ann.csv` with --csv-fallback.
    #[arg(long)]
    record_dir: PathBuf,

    /// Comma-separated record ids, e.g. 100,101,106.
    #[arg(long, value_delimiter = ',', required = true)]
    records: Vec<String>,

    /// Output beat cache path.
    #[arg(long)]
    out_cache: PathBuf,

    /// Signal channel to segment.
    #[arg(long, default_value_t = 0)]
    channel: usize,

    /// Read one-integer-per-line CSV signals and `sample,symbol` CSV
    /// annotations instead of the binary formats.
    #[arg(long)]
    csv_fallback: bool,

    /// Samples kept left of the annotated peak.
    #[arg(long, default_value_t = 110)]
    left: usize,

    /// Samples kept right of the annotated peak.
    #[arg(long, default_value_t = 145)]
    right: usize,

    /// Sampling rate assumed for CSV records; binary headers carry their own.
    #[arg(long, default_value_t = 360.0)]
    sampling_rate: f64,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Beat cache produced by `ingest`.
    #[arg(long)]
    cache: PathBuf,

    /// Beat class to model.
    #[arg(long, value_enum, ignore_case = true)]
    class: ClassArg,

    /// Pursuit algorithm for screening, coding, and later classification.
    #[arg(long, default_value_t = Algorithm::Mp)]
    algorithm: Algorithm,

    /// Approximation quality target, in PRDN percent.
    #[arg(long, default_value_t = 9.0)]
    prdn: f64,

    /// Dictionary size (number of atoms).
    #[arg(long, default_value_t = 512)]
    atoms: usize,

    /// Seed for the dictionary initialisation.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Maximum refinement passes over the training set.
    #[arg(long, default_value_t = 20)]
    max_iter: usize,

    /// Relative dictionary-change threshold that stops learning early.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,

    /// Screening window half-width in standard deviations; 0 disables
    /// screening. Defaults to 3 for class N and 2 for class V.
    #[arg(long)]
    screen_mult: Option<f64>,

    /// Output model path (JSON).
    #[arg(long)]
    out_model: PathBuf,
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["cache", "record"])))]
struct ClassifyArgs {
    /// Model for the first class (JSON, from `train`).
    #[arg(long)]
    model_a: PathBuf,

    /// Model for the second class.
    #[arg(long)]
    model_b: PathBuf,

    /// Beat cache to classify.
    #[arg(long)]
    cache: Option<PathBuf>,

    /// Record id to ingest and classify directly; needs --record-dir.
    #[arg(long, requires = "record_dir")]
    record: Option<String>,

    /// Directory the record's files live in.
    #[arg(long)]
    record_dir: Option<PathBuf>,

    /// Read CSV signal/annotation files for --record.
    #[arg(long)]
    csv_fallback: bool,

    /// Signal channel for --record.
    #[arg(long, default_value_t = 0)]
    channel: usize,

    /// Samples left of the peak for --record segmentation.
    #[arg(long, default_value_t = 110)]
    left: usize,

    /// Samples right of the peak for --record segmentation.
    #[arg(long, default_value_t = 145)]
    right: usize,

    /// Sampling rate assumed for CSV records.
    #[arg(long, default_value_t = 360.0)]
    sampling_rate: f64,

    /// Decision criterion: Ia, Ib, II, or III.
    #[arg(long, default_value_t = Criterion::III)]
    criterion: Criterion,

    /// Output CSV with one decision per beat.
    #[arg(long)]
    out_csv: PathBuf,
}

#[derive(Args, Serialize)]
struct ExperimentArgs {
    /// Beat cache covering all records the design needs.
    #[arg(long)]
    cache: PathBuf,

    /// test1: per-seed random split (35% N / 50% V to train).
    /// test2: fixed disjoint record lists for train and test.
    #[arg(long, value_enum)]
    design: DesignArg,

    /// Pursuit algorithm at classification time.
    #[arg(long, default_value_t = Algorithm::Mp)]
    algorithm: Algorithm,

    /// Pursuit algorithm during dictionary learning; defaults to --algorithm.
    #[arg(long)]
    learn_algorithm: Option<Algorithm>,

    /// Decision criterion: Ia, Ib, II, or III.
    #[arg(long, default_value_t = Criterion::III)]
    criterion: Criterion,

    /// Approximation quality target, in PRDN percent.
    #[arg(long, default_value_t = 9.0)]
    prdn: f64,

    /// Dictionary size per class.
    #[arg(long, default_value_t = 512)]
    atoms: usize,

    /// Maximum refinement passes per dictionary.
    #[arg(long, default_value_t = 20)]
    max_iter: usize,

    /// Relative dictionary-change threshold that stops learning early.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,

    /// Number of independent runs; per-run seeds derive from --seed.
    #[arg(long, default_value_t = 5)]
    seeds: usize,

    /// Master seed for the whole invocation.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Screening window half-width for class N training beats.
    #[arg(long, default_value_t = 3.0)]
    screen_mult_n: f64,

    /// Screening window half-width for class V training beats.
    #[arg(long, default_value_t = 2.0)]
    screen_mult_v: f64,

    /// Skip training-set screening entirely.
    #[arg(long)]
    no_screen: bool,

    /// Output report path (JSON).
    #[arg(long)]
    out_report: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum ClassArg {
    N,
    V,
}

impl ClassArg {
    fn beat_class(self) -> BeatClass {
        match self {
            ClassArg::N => BeatClass::N,
            ClassArg::V => BeatClass::V,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ClassArg::N => "N",
            ClassArg::V => "V",
        }
    }

    /// Conventional screening window widths: the N class is large and gets
    /// the wider window.
    fn default_screen_mult(self) -> f64 {
        match self {
            ClassArg::N => 3.0,
            ClassArg::V => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DesignArg {
    /// Random split, redrawn for every seed.
    Test1,
    /// Fixed inter-patient record lists.
    Test2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Train(args) => cmd_train(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Echoes the resolved configuration as a single JSON line and returns it,
/// so output artifacts can embed the same snapshot.
fn print_snapshot<T: Serialize>(command: &str, args: &T) -> anyhow::Result<String> {
    let json = serde_json::to_string(args)?;
    println!("config[{command}]: {json}");
    Ok(json)
}

/// Reads and segments one record from disk, in either file layout.
fn ingest_record(
    dir: &Path,
    id: &str,
    csv_fallback: bool,
    sampling_rate: f64,
    seg: &SegmentationConfig,
) -> anyhow::Result<(TrainingSet, SegmentReport, Vec<String>)> {
    let (record, annotations): (EcgRecord, Annotations) = if csv_fallback {
        let sig_path = dir.join(format!("{id}.csv"));
        let ann_path = dir.join(format!("{id}.ann.csv"));
        let signal = fs::read_to_string(&sig_path)
            .with_context(|| format!("reading {}", sig_path.display()))?;
        let ann = fs::read_to_string(&ann_path)
            .with_context(|| format!("reading {}", ann_path.display()))?;
        (
            parse_signal_csv(id, &signal, sampling_rate)?,
            parse_csv_annotations(&ann)?,
        )
    } else {
        let hea_path = dir.join(format!("{id}.hea"));
        let dat_path = dir.join(format!("{id}.dat"));
        let atr_path = dir.join(format!("{id}.atr"));
        let header = fs::read_to_string(&hea_path)
            .with_context(|| format!("reading {}", hea_path.display()))?;
        let data =
            fs::read(&dat_path).with_context(|| format!("reading {}", dat_path.display()))?;
        let ann =
            fs::read(&atr_path).with_context(|| format!("reading {}", atr_path.display()))?;
        (
            parse_format212(&header, &data)?,
            parse_binary_annotations(&ann)?,
        )
    };

    let mut warnings = record.warnings.clone();
    if annotations.unknown_symbols > 0 {
        warnings.push(format!(
            "{} annotation(s) with unknown symbols mapped to '?'",
            annotations.unknown_symbols
        ));
    }
    let (set, report) = segment(&record, &annotations, seg)?;
    Ok((set, report, warnings))
}

fn segment(
    record: &EcgRecord,
    annotations: &Annotations,
    seg: &SegmentationConfig,
) -> anyhow::Result<(TrainingSet, SegmentReport)> {
    Ok(sparsebeat::ingest::segment_beats(
        record,
        &annotations.entries,
        seg,
    )?)
}

fn cmd_ingest(args: IngestArgs) -> anyhow::Result<()> {
    print_snapshot("ingest", &args)?;
    let seg = SegmentationConfig {
        left_samples: args.left,
        right_samples: args.right,
        channel: args.channel,
    };

    let mut combined: Option<TrainingSet> = None;
    let mut failures = 0usize;
    for id in &args.records {
        match ingest_record(&args.record_dir, id, args.csv_fallback, args.sampling_rate, &seg) {
            Ok((set, report, warnings)) => {
                for w in &warnings {
                    eprintln!("record {id}: warning: {w}");
                }
                let (n, v, _) = set.class_counts();
                println!(
                    "record {id}: kept {n} N + {v} V; skipped {} at boundaries, {} other-class",
                    report.skipped_boundary, report.skipped_class
                );
                combined = Some(match combined {
                    Some(acc) => acc.concat(&set)?,
                    None => set,
                });
            }
            Err(e) => {
                eprintln!("record {id}: failed: {e:#}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} of {} record(s) failed", args.records.len());
    }
    let combined = match combined {
        Some(set) => set,
        None => bail!("every record failed to ingest"),
    };

    write_cache(&args.out_cache, &combined)?;
    let (n, v, _) = combined.class_counts();
    println!(
        "wrote {}: {} beats ({n} N, {v} V), beat length {}",
        args.out_cache.display(),
        combined.len(),
        combined.n_q()
    );
    Ok(())
}

fn cmd_train(mut args: TrainArgs) -> anyhow::Result<()> {
    // Resolve the class-dependent default before echoing, so the snapshot
    // holds the value actually used.
    let screen_mult = args
        .screen_mult
        .unwrap_or_else(|| args.class.default_screen_mult());
    args.screen_mult = Some(screen_mult);
    print_snapshot("train", &args)?;

    if screen_mult < 0.0 || !screen_mult.is_finite() {
        bail!("--screen-mult must be finite and nonnegative, got {screen_mult}");
    }

    let set = read_cache(&args.cache)?;
    let subset = set.class_subset(args.class.beat_class())?;
    println!(
        "cache {}: {} beats, {} of class {}",
        args.cache.display(),
        set.len(),
        subset.len(),
        args.class.label()
    );

    let training = if screen_mult > 0.0 {
        let wavelet =
            build_wavelet_dictionary(&WaveletDictConfig::screening_default(subset.n_q()))?;
        let (kept, report) =
            screen_and_filter(&subset, &wavelet, args.prdn, screen_mult, args.algorithm)?;
        println!(
            "screening: rejected {} of {} ({:.2}%); window [{:.2}, {:.2}], mean K {:.2}, std {:.2}",
            report.rejected.len(),
            subset.len(),
            report.rejection_fraction * 100.0,
            report.window.0,
            report.window.1,
            report.mean_k,
            report.std_k
        );
        kept
    } else {
        println!("screening: disabled");
        subset
    };

    let mut config = LearnConfig::new(
        args.atoms,
        args.algorithm,
        CodingQuality::Prdn(args.prdn),
        args.seed,
    );
    config.max_outer_iterations = args.max_iter;
    config.tol = args.tol;

    let (dict, trace) = learn(&training, &config)?;
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    let last = trace.iterations.last();
    println!(
        "learning stopped ({:?}) after {} pass(es); mean K {:.2}, approximation error {:.4}, {} atoms",
        trace.stop,
        trace.iterations.len(),
        last.map_or(f64::NAN, |it| it.mean_k),
        last.map_or(f64::NAN, |it| it.approx_error),
        dict.n_atoms()
    );

    let model = DictionaryModel::new(
        &dict,
        args.class.label(),
        args.algorithm,
        args.prdn,
        Some(trace),
    );
    model.write(&args.out_model)?;
    println!("wrote {}", args.out_model.display());
    Ok(())
}

fn flags_column(
    tie: TieBreak,
    unmet_a: bool,
    unmet_b: bool,
) -> String {
    let mut parts = Vec::new();
    match tie {
        TieBreak::None => {}
        TieBreak::Entropy => parts.push("tie=entropy"),
        TieBreak::Norm1 => parts.push("tie=norm1"),
    }
    if unmet_a {
        parts.push("unmet_a");
    }
    if unmet_b {
        parts.push("unmet_b");
    }
    parts.join("|")
}

fn cmd_classify(args: ClassifyArgs) -> anyhow::Result<()> {
    let snapshot = print_snapshot("classify", &args)?;

    let model_a = DictionaryModel::read(&args.model_a)?;
    let model_b = DictionaryModel::read(&args.model_b)?;
    if model_a.n_q != model_b.n_q {
        bail!(
            "models disagree on beat length: {} vs {}",
            model_a.n_q,
            model_b.n_q
        );
    }
    if model_a.algorithm != model_b.algorithm {
        bail!(
            "models disagree on the pursuit algorithm: {} vs {}; \
             the comparison is only meaningful with matching settings",
            model_a.algorithm,
            model_b.algorithm
        );
    }
    if model_a.prdn_target != model_b.prdn_target {
        bail!(
            "models disagree on the quality target: {} vs {}; \
             the comparison is only meaningful with matching settings",
            model_a.prdn_target,
            model_b.prdn_target
        );
    }

    let set = match (&args.cache, &args.record) {
        (Some(cache), None) => read_cache(cache)?,
        (None, Some(id)) => {
            let dir = args.record_dir.as_deref().expect("clap enforces record_dir");
            let seg = SegmentationConfig {
                left_samples: args.left,
                right_samples: args.right,
                channel: args.channel,
            };
            let (set, report, warnings) =
                ingest_record(dir, id, args.csv_fallback, args.sampling_rate, &seg)?;
            for w in &warnings {
                eprintln!("record {id}: warning: {w}");
            }
            println!(
                "record {id}: kept {} beats; skipped {} at boundaries, {} other-class",
                set.len(),
                report.skipped_boundary,
                report.skipped_class
            );
            set
        }
        _ => unreachable!("clap group admits exactly one input source"),
    };
    if set.is_empty() {
        bail!("no beats to classify");
    }
    if set.n_q() != model_a.n_q {
        bail!(
            "beat length mismatch: input beats have {} samples, models expect {}",
            set.n_q(),
            model_a.n_q
        );
    }

    let classifier = ClassifierModel::new(
        model_a.to_dictionary()?,
        &model_a.class_label,
        model_b.to_dictionary()?,
        &model_b.class_label,
        model_a.algorithm,
        model_a.prdn_target,
        args.criterion,
    )?;
    let decisions = classify_batch(set.beats(), &classifier);

    let mut out = String::new();
    out.push_str(&format!("# config[classify]: {snapshot}\n"));
    out.push_str(
        "record,sample_index,true_label,predicted_label,k_a,k_b,entropy_a,entropy_b,norm1_a,norm1_b,flags\n",
    );
    let mut beat_failures = 0usize;
    let mut labeled = Vec::new();
    let mut predicted_a = 0usize;
    let mut predicted_b = 0usize;
    let mut undecided = 0usize;
    for (q, decision) in decisions.iter().enumerate() {
        let prov = &set.provenance()[q];
        let truth = set.labels()[q];
        match decision {
            Ok(d) => {
                let predicted = d.label.as_label();
                match &d.label {
                    Outcome::Class(l) if *l == model_a.class_label => predicted_a += 1,
                    Outcome::Class(_) => predicted_b += 1,
                    Outcome::Undecided => undecided += 1,
                }
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    prov.record,
                    prov.sample_index,
                    truth.as_str(),
                    predicted,
                    d.k_a,
                    d.k_b,
                    d.entropy_a,
                    d.entropy_b,
                    d.norm1_a,
                    d.norm1_b,
                    flags_column(d.tie_broken_by, d.tolerance_unmet_a, d.tolerance_unmet_b)
                ));
                if truth != BeatClass::Other {
                    labeled.push((truth, d.clone()));
                }
            }
            Err(e) => {
                beat_failures += 1;
                eprintln!(
                    "beat {q} ({} @ {}): failed: {e}",
                    prov.record, prov.sample_index
                );
                out.push_str(&format!(
                    "{},{},{},error,,,,,,,\n",
                    prov.record,
                    prov.sample_index,
                    truth.as_str()
                ));
            }
        }
    }
    fs::write(&args.out_csv, out)
        .with_context(|| format!("writing {}", args.out_csv.display()))?;
    if beat_failures > 0 {
        eprintln!("{beat_failures} of {} beat(s) failed", set.len());
    }

    println!(
        "classified {} beats: {} {}, {} {}, {} undecided",
        set.len() - beat_failures,
        predicted_a,
        model_a.class_label,
        predicted_b,
        model_b.class_label,
        undecided
    );

    // Confusion statistics need the two canonical class labels and at least
    // one labeled beat; a cache segmented from annotated records has both.
    let canonical = (model_a.class_label == "N" && model_b.class_label == "V")
        || (model_a.class_label == "V" && model_b.class_label == "N");
    if canonical && !labeled.is_empty() {
        let stats = compute_stats(&labeled)?;
        println!(
            "SE_N {:.2}%  SE_V {:.2}%  PP_N {:.2}%  PP_V {:.2}%  AC {:.2}%",
            stats.n.se * 100.0,
            stats.v.se * 100.0,
            stats.n.pp * 100.0,
            stats.v.pp * 100.0,
            stats.ac * 100.0
        );
    } else {
        println!("summary statistics skipped: beats carry no N/V truth labels for these models");
    }
    println!("wrote {}", args.out_csv.display());
    Ok(())
}

fn cmd_experiment(mut args: ExperimentArgs) -> anyhow::Result<()> {
    let learn_algorithm = args.learn_algorithm.unwrap_or(args.algorithm);
    args.learn_algorithm = Some(learn_algorithm);
    print_snapshot("experiment", &args)?;

    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    if !args.no_screen && (args.screen_mult_n <= 0.0 || args.screen_mult_v <= 0.0) {
        bail!("screening multipliers must be positive; use --no-screen to disable screening");
    }

    let set = read_cache(&args.cache)?;
    let split = match args.design {
        DesignArg::Test1 => SplitSpec::intra_patient(args.seed),
        DesignArg::Test2 => SplitSpec::inter_patient(),
    };

    let mut learn_config = LearnConfig::new(
        args.atoms,
        learn_algorithm,
        CodingQuality::Prdn(args.prdn),
        args.seed,
    );
    learn_config.max_outer_iterations = args.max_iter;
    learn_config.tol = args.tol;

    let screen = if args.no_screen {
        None
    } else {
        Some(ScreenSettings {
            wavelet: WaveletDictConfig::screening_default(set.n_q()),
            prdn_target: args.prdn,
            multiplier_n: args.screen_mult_n,
            multiplier_v: args.screen_mult_v,
            algorithm: args.algorithm,
        })
    };

    // One master seed fans out to per-run seeds through a named stream, so
    // --seeds 5 and --seeds 6 share their first five runs.
    let mut seed_stream = substream(args.seed, "experiment-seeds");
    let seeds: Vec<u64> = (0..args.seeds).map(|_| seed_stream.next_u64()).collect();

    let config = ExperimentConfig {
        split,
        learn_n: learn_config.clone(),
        learn_v: learn_config,
        algorithm: args.algorithm,
        criterion: args.criterion,
        prdn_target: args.prdn,
        screen,
        seeds,
    };

    let report = run_experiment(&set, &config)?;
    for run in &report.runs {
        for w in &run.warnings {
            eprintln!("seed {}: warning: {w}", run.seed);
        }
    }

    let json = report.to_json()?;
    fs::write(&args.out_report, json + "\n")
        .with_context(|| format!("writing {}", args.out_report.display()))?;
    print!("{}", report.table());
    println!("wrote {}", args.out_report.display());
    Ok(())
}
