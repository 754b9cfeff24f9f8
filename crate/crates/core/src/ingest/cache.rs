//! Columnar binary cache for segmented beats.
//!
//! Layout, all integers little-endian:
//! magic "SBTS", version u32, n_q u64, q u64, then q label bytes
//! (0 = N, 1 = V, 2 = Other), then q provenance entries (record id as
//! u16 length + UTF-8 bytes, then sample index u64), then the samples as
//! q * n_q f64 values, one beat after another.

use std::fs::File;
use std::io::{BufWriter, Read as _, Write as _};
use std::path::Path;

use nalgebra::DMatrix;

use crate::beats::{BeatClass, Provenance, TrainingSet};
use crate::error::Error;
use crate::Result;

pub const CACHE_MAGIC: &[u8; 4] = b"SBTS";
pub const CACHE_VERSION: u32 = 1;

fn label_byte(class: BeatClass) -> u8 {
    match class {
        BeatClass::N => 0,
        BeatClass::V => 1,
        BeatClass::Other => 2,
    }
}

pub fn write_cache(path: &Path, set: &TrainingSet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(CACHE_MAGIC)?;
    out.write_all(&CACHE_VERSION.to_le_bytes())?;
    out.write_all(&(set.n_q() as u64).to_le_bytes())?;
    out.write_all(&(set.len() as u64).to_le_bytes())?;
    for &label in set.labels() {
        out.write_all(&[label_byte(label)])?;
    }
    for prov in set.provenance() {
        let bytes = prov.record.as_bytes();
        if bytes.len() > usize::from(u16::MAX) {
            return Err(Error::InvalidInput(format!(
                "record id of {} bytes does not fit the cache format",
                bytes.len()
            )));
        }
        out.write_all(&(bytes.len() as u16).to_le_bytes())?;
        out.write_all(bytes)?;
        out.write_all(&prov.sample_index.to_le_bytes())?;
    }
    for q in 0..set.len() {
        for v in set.beats().column(q).iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

struct Cursor {
    data: Vec<u8>,
    offset: usize,
}

impl Cursor {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        match self.data.get(self.offset..self.offset + n) {
            Some(slice) => {
                self.offset += n;
                Ok(slice)
            }
            None => Err(Error::Malformed {
                what: "beat cache",
                offset: self.offset,
                detail: format!("file ends inside {what}"),
            }),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn read_cache(path: &Path) -> Result<TrainingSet> {
    let mut data = Vec::new();
    File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor { data, offset: 0 };

    if cur.take(4, "magic")? != CACHE_MAGIC {
        return Err(Error::UnsupportedFormat(
            "not a beat cache (bad magic)".into(),
        ));
    }
    let version = cur.u32("version")?;
    if version != CACHE_VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "beat cache version {version} (this build reads {CACHE_VERSION})"
        )));
    }
    let n_q = cur.u64("beat length")? as usize;
    let q = cur.u64("beat count")? as usize;
    if n_q == 0 {
        return Err(Error::Malformed {
            what: "beat cache",
            offset: 8,
            detail: "beat length is zero".into(),
        });
    }

    let mut labels = Vec::with_capacity(q);
    for _ in 0..q {
        let offset = cur.offset;
        let byte = cur.take(1, "labels")?[0];
        labels.push(match byte {
            0 => BeatClass::N,
            1 => BeatClass::V,
            2 => BeatClass::Other,
            other => {
                return Err(Error::Malformed {
                    what: "beat cache",
                    offset,
                    detail: format!("label byte {other} is not 0, 1 or 2"),
                })
            }
        });
    }

    let mut provenance = Vec::with_capacity(q);
    for _ in 0..q {
        let len = cur.u16("provenance")? as usize;
        let offset = cur.offset;
        let record = std::str::from_utf8(cur.take(len, "provenance")?)
            .map_err(|_| Error::Malformed {
                what: "beat cache",
                offset,
                detail: "record id is not UTF-8".into(),
            })?
            .to_string();
        let sample_index = cur.u64("provenance")?;
        provenance.push(Provenance {
            record,
            sample_index,
        });
    }

    let mut samples = Vec::with_capacity(q * n_q);
    for _ in 0..q * n_q {
        samples.push(f64::from_le_bytes(
            cur.take(8, "samples")?.try_into().unwrap(),
        ));
    }
    if cur.offset != cur.data.len() {
        return Err(Error::Malformed {
            what: "beat cache",
            offset: cur.offset,
            detail: format!("{} trailing bytes", cur.data.len() - cur.offset),
        });
    }
    TrainingSet::new(DMatrix::from_vec(n_q, q, samples), labels, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> TrainingSet {
        let beats = DMatrix::from_vec(
            3,
            4,
            vec![
                0.5, -1.25, 3.0, // beat 0
                1.0, 2.0, -0.0625, // beat 1
                -7.5, 0.1, 0.2, // beat 2
                9.0, 8.0, 7.0, // beat 3
            ],
        );
        TrainingSet::new(
            beats,
            vec![
                BeatClass::N,
                BeatClass::V,
                BeatClass::Other,
                BeatClass::N,
            ],
            vec![
                Provenance {
                    record: "100".into(),
                    sample_index: 77,
                },
                Provenance {
                    record: "archive/233".into(),
                    sample_index: 650_000,
                },
                Provenance {
                    record: String::new(),
                    sample_index: 0,
                },
                Provenance {
                    record: "x".into(),
                    sample_index: u64::MAX,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn cache_round_trip() {
        let set = sample_set();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("beats.sbts");
        write_cache(&path, &set).unwrap();
        let back = read_cache(&path).unwrap();
        assert_eq!(back.beats(), set.beats());
        assert_eq!(back.labels(), set.labels());
        assert_eq!(back.provenance(), set.provenance());
    }

    #[test]
    fn empty_set_round_trips() {
        let set = TrainingSet::new(DMatrix::zeros(5, 0), vec![], vec![]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.sbts");
        write_cache(&path, &set).unwrap();
        let back = read_cache(&path).unwrap();
        assert_eq!(back.n_q(), 5);
        assert!(back.is_empty());
    }

    #[test]
    fn bad_magic_is_not_a_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not.sbts");
        std::fs::write(&path, b"NOPE0000000000000000000000").unwrap();
        assert!(matches!(
            read_cache(&path),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn truncation_and_trailing_bytes_are_malformed() {
        let set = sample_set();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("beats.sbts");
        write_cache(&path, &set).unwrap();
        let full = std::fs::read(&path).unwrap();

        let cut = dir.path().join("cut.sbts");
        std::fs::write(&cut, &full[..full.len() - 5]).unwrap();
        assert!(matches!(read_cache(&cut), Err(Error::Malformed { .. })));

        let long = dir.path().join("long.sbts");
        let mut padded = full.clone();
        padded.push(0);
        std::fs::write(&long, &padded).unwrap();
        assert!(matches!(read_cache(&long), Err(Error::Malformed { .. })));
    }

    #[test]
    fn bad_label_byte_is_malformed() {
        let set = sample_set();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("beats.sbts");
        write_cache(&path, &set).unwrap();
        let mut data = std::fs::read(&path).unwrap();
        data[24] = 9; // first label byte
        std::fs::write(&path, &data).unwrap();
        assert!(matches!(read_cache(&path), Err(Error::Malformed { .. })));
    }
}
