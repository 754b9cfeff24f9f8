//! Dictionary persistence.
//!
//! A dictionary travels as a self-describing JSON document so models can be
//! inspected and diffed with ordinary tools. Atoms are stored column-major,
//! one array of samples per atom; JSON numbers round-trip `f64` values
//! exactly, so read(write(m)) reproduces the dictionary bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::dictlearn::LearningTrace;
use crate::error::Error;
use crate::pursuit::Algorithm;
use crate::Result;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryModel {
    pub format_version: u32,
    /// Beat length the dictionary applies to.
    pub n_q: usize,
    /// Number of atoms.
    pub m: usize,
    /// Class the dictionary was trained for ("screening" for exported
    /// screening dictionaries).
    pub class_label: String,
    /// Pursuit algorithm the dictionary was learned with; the conventional
    /// choice at classification time too.
    pub algorithm: Algorithm,
    pub prdn_target: f64,
    /// atoms[j][i] is sample i of atom j.
    pub atoms: Vec<Vec<f64>>,
    /// Present for learned dictionaries, absent for constructed ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learn_trace: Option<LearningTrace>,
}

impl DictionaryModel {
    pub fn new(
        dict: &Dictionary,
        class_label: &str,
        algorithm: Algorithm,
        prdn_target: f64,
        learn_trace: Option<LearningTrace>,
    ) -> Self {
        let atoms = (0..dict.n_atoms())
            .map(|j| dict.atom(j).iter().copied().collect())
            .collect();
        Self {
            format_version: MODEL_FORMAT_VERSION,
            n_q: dict.signal_len(),
            m: dict.n_atoms(),
            class_label: class_label.into(),
            algorithm,
            prdn_target,
            atoms,
            learn_trace,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedFormat(format!(
                "model format_version {} (this build reads {})",
                self.format_version, MODEL_FORMAT_VERSION
            )));
        }
        if self.atoms.len() != self.m {
            return Err(Error::Model(format!(
                "m = {} but {} atoms are stored",
                self.m,
                self.atoms.len()
            )));
        }
        if let Some(bad) = self.atoms.iter().position(|a| a.len() != self.n_q) {
            return Err(Error::Model(format!(
                "atom {bad} has {} samples, expected n_q = {}",
                self.atoms[bad].len(),
                self.n_q
            )));
        }
        if self.class_label.is_empty() {
            return Err(Error::Model("class_label is empty".into()));
        }
        Ok(())
    }

    /// Reconstructs the dictionary, re-checking atom norms.
    pub fn to_dictionary(&self) -> Result<Dictionary> {
        self.validate()?;
        let matrix = DMatrix::from_fn(self.n_q, self.m, |i, j| self.atoms[j][i]);
        Dictionary::new(matrix)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let model: DictionaryModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beats::{BeatClass, Provenance, TrainingSet};
    use crate::dictlearn::{learn, CodingQuality, LearnConfig};
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_dictionary(n: usize, m: usize, seed: u64) -> Dictionary {
        let mut rng = StdRng::seed_from_u64(seed);
        Dictionary::from_columns_normalized(DMatrix::from_fn(n, m, |_, _| {
            rng.gen_range(-1.0..1.0)
        }))
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dict = random_dictionary(12, 20, 5);
        let model = DictionaryModel::new(&dict, "N", Algorithm::Oomp, 9.0, None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.json");
        model.write(&path).unwrap();
        let back = DictionaryModel::read(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_dictionary().unwrap().matrix(), dict.matrix());
    }

    #[test]
    fn learned_trace_survives_round_trip() {
        let mut rng = StdRng::seed_from_u64(2);
        let beats = DMatrix::from_fn(8, 30, |_, _| rng.gen_range(-1.0..1.0));
        let set = TrainingSet::new(
            beats,
            vec![BeatClass::V; 30],
            (0..30)
                .map(|i| Provenance {
                    record: "t".into(),
                    sample_index: i as u64,
                })
                .collect(),
        )
        .unwrap();
        let cfg = LearnConfig::new(6, Algorithm::Omp, CodingQuality::Prdn(20.0), 3);
        let (dict, trace) = learn(&set, &cfg).unwrap();
        let model = DictionaryModel::new(&dict, "V", cfg.algorithm, 20.0, Some(trace.clone()));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.json");
        model.write(&path).unwrap();
        let back = DictionaryModel::read(&path).unwrap();
        assert_eq!(back.learn_trace.as_ref(), Some(&trace));
        assert_eq!(back.to_dictionary().unwrap().matrix(), dict.matrix());
    }

    #[test]
    fn future_version_is_rejected() {
        let dict = random_dictionary(4, 4, 1);
        let mut model = DictionaryModel::new(&dict, "N", Algorithm::Mp, 9.0, None);
        model.format_version = 99;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("future.json");
        // write() does not validate; a future tool could have produced this
        model.write(&path).unwrap();
        assert!(matches!(
            DictionaryModel::read(&path),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn inconsistent_shape_is_rejected() {
        let dict = random_dictionary(4, 4, 7);
        let mut model = DictionaryModel::new(&dict, "N", Algorithm::Mp, 9.0, None);
        model.atoms.pop();
        assert!(matches!(model.to_dictionary(), Err(Error::Model(_))));
        let mut model = DictionaryModel::new(&dict, "N", Algorithm::Mp, 9.0, None);
        model.atoms[2].push(0.0);
        assert!(matches!(model.to_dictionary(), Err(Error::Model(_))));
    }

    #[test]
    fn screening_dictionary_exports() {
        let config = crate::wavedict::WaveletDictConfig::screening_default(32);
        let dict = crate::wavedict::build_wavelet_dictionary(&config).unwrap();
        let model = DictionaryModel::new(&dict, "screening", Algorithm::Omp, 9.0, None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("screen.json");
        model.write(&path).unwrap();
        let back = DictionaryModel::read(&path).unwrap();
        assert_eq!(back.class_label, "screening");
        assert_eq!(back.to_dictionary().unwrap().matrix(), dict.matrix());
    }
}
