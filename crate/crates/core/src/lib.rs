//! Sparse approximation toolkit for ECG beats.
//!
//! The pipeline this crate implements:
//!
//! 1. [`ingest`]: decode WFDB format-212 records and MIT-style annotation
//!    files (with CSV fallbacks), cut annotated heartbeats into fixed-length
//!    segments, and cache them in a compact binary file.
//! 2. [`screen`]: reject outlier beats whose sparsity level under a redundant
//!    wavelet dictionary ([`wavedict`]) falls outside a mean +/- multiple of
//!    std window.
//! 3. [`dictlearn`]: learn a class-specific dictionary by alternating greedy
//!    sparse coding ([`pursuit`]) with a least-squares dictionary update.
//! 4. [`classify`]: label a beat by comparing the sparsity (and, on ties,
//!    entropy or norm-1 of the coefficients) of its decompositions in two
//!    class dictionaries.
//! 5. [`eval`]: train/test splits, confusion statistics and multi-seed
//!    experiment reports.
//!
//! All randomized steps are driven by explicit seeds through [`rng`], and the
//! per-beat parallel loops preserve ordering, so every result is reproducible
//! bit-for-bit regardless of thread count.

pub mod beats;
pub mod classify;
pub mod dictionary;
pub mod dictlearn;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod model;
mod par;
pub mod pursuit;
pub mod rng;
pub mod screen;
pub mod wavedict;

pub use beats::{BeatClass, Provenance, TrainingSet};
pub use dictionary::Dictionary;
pub use error::Error;
pub use pursuit::{Algorithm, AtomicDecomposition, PursuitConfig};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
