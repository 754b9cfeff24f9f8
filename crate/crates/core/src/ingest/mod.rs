//! Record ingestion: signal decoding, beat annotations, segmentation, and
//! the beat cache.
//!
//! Signals arrive either as two-channel format-212 binaries with a text
//! header, or as a portable one-sample-per-line CSV. Annotations arrive in
//! the standard binary encoding or as `sample_index,symbol` CSV. Symbols
//! N, L and R map to class N; V and E map to class V; everything else is
//! carried as Other and skipped by segmentation.

mod annotations;
mod cache;
mod format212;
mod segment;

pub use annotations::{
    map_symbol, parse_binary_annotations, parse_csv_annotations, Annotations, BeatAnnotation,
};
pub use cache::{read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use format212::{
    decode_triplet, encode_sample_pair, parse_format212, parse_signal_csv, ChannelInfo, EcgRecord,
};
pub use segment::{segment_beats, SegmentReport, SegmentationConfig};
