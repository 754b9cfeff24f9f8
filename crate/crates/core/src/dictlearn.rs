//! Dictionary learning by alternating sparse coding and a least-squares
//! dictionary update.
//!
//! One outer iteration: (1) greedily code every training beat in the current
//! dictionary to the target quality, collecting the coefficients into a
//! sparse matrix C; (2) drop atoms no beat used; (3) replace the dictionary
//! with the least-squares minimizer of ||F - D C||_F (solved through a
//! Cholesky factorization of C C^T, not an explicit inverse) and renormalize
//! its columns. Stops when the dictionary change falls below a threshold
//! relative to the initial dictionary norm, or after a fixed number of
//! iterations.

use crate::beats::TrainingSet;
use crate::dictionary::Dictionary;
use crate::par::map_indexed;
use crate::pursuit::{approximate_to_prdn, pursue, Algorithm, PursuitConfig};
use crate::rng::substream;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Per-beat stopping quality for the sparse-coding step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CodingQuality {
    /// Stop when the approximation reaches this PRDN percentage (per-beat
    /// threshold, scales with each beat's deviation norm).
    Prdn(f64),
    /// Stop at a fixed residual norm, identical for every beat.
    ResidualNorm(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    /// Number of atoms M to learn.
    pub m: usize,
    pub algorithm: Algorithm,
    pub quality: CodingQuality,
    /// Hard cap on outer iterations (Max).
    pub max_outer_iterations: usize,
    /// Convergence threshold for the dictionary change, relative to the
    /// initial dictionary's Frobenius norm.
    pub tol: f64,
    pub seed: u64,
}

impl LearnConfig {
    pub fn new(m: usize, algorithm: Algorithm, quality: CodingQuality, seed: u64) -> Self {
        Self {
            m,
            algorithm,
            quality,
            max_outer_iterations: 20,
            tol: 1e-3,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidInput("atom count M must be positive".into()));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidInput(
                "max_outer_iterations must be positive".into(),
            ));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "tol must be a positive real, got {}",
                self.tol
            )));
        }
        let q = match self.quality {
            CodingQuality::Prdn(v) | CodingQuality::ResidualNorm(v) => v,
        };
        if !q.is_finite() || q < 0.0 {
            return Err(Error::InvalidInput(format!(
                "coding quality must be finite and nonnegative, got {q}"
            )));
        }
        Ok(())
    }
}

/// Sparse coefficients, M rows by Q columns, one column per beat. Each
/// column stores its (atom index, coefficient) pairs; everything else is
/// exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    m: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl CoefficientMatrix {
    pub fn from_columns(m: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        for (q, col) in columns.iter().enumerate() {
            let mut seen = vec![false; m];
            for &(idx, c) in col {
                if idx >= m {
                    return Err(Error::AtomIndexOutOfRange { index: idx, m });
                }
                if seen[idx] {
                    return Err(Error::InvalidInput(format!(
                        "column {q} repeats atom index {idx}"
                    )));
                }
                seen[idx] = true;
                if !c.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "column {q} has non-finite coefficient for atom {idx}"
                    )));
                }
            }
        }
        Ok(Self { m, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.m
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, q: usize) -> &[(usize, f64)] {
        &self.columns[q]
    }

    /// Nonzero count of column q: the sparsity level K_q of beat q.
    pub fn nnz(&self, q: usize) -> usize {
        self.columns[q].len()
    }

    pub fn mean_k(&self) -> f64 {
        if self.columns.is_empty() {
            return 0.0;
        }
        self.columns.iter().map(Vec::len).sum::<usize>() as f64 / self.columns.len() as f64
    }

    /// How many columns use each atom row.
    pub fn row_usage(&self) -> Vec<usize> {
        let mut usage = vec![0usize; self.m];
        for col in &self.columns {
            for &(idx, _) in col {
                usage[idx] += 1;
            }
        }
        usage
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.m, self.columns.len());
        for (q, col) in self.columns.iter().enumerate() {
            for &(idx, c) in col {
                dense[(idx, q)] = c;
            }
        }
        dense
    }

    /// Dense product D * C for a dictionary matrix D with M columns.
    pub fn left_mul(&self, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if d.ncols() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, coefficient matrix has {} rows",
                d.ncols(),
                self.m
            )));
        }
        let mut out = DMatrix::zeros(d.nrows(), self.columns.len());
        for (q, col) in self.columns.iter().enumerate() {
            let mut target = out.column_mut(q);
            for &(idx, c) in col {
                target.axpy(c, &d.column(idx), 1.0);
            }
        }
        Ok(out)
    }
}

/// Why a learning run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    /// Dictionary change fell below the threshold at this outer iteration
    /// (1-based).
    Converged { iteration: usize },
    /// Ran the full iteration budget without converging.
    MaxIterations,
    /// The update step failed; the returned dictionary is the last valid
    /// one and the string says what went wrong.
    Aborted { diagnostic: String },
}

/// One outer iteration of the learning loop, as recorded in the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnIteration {
    /// Mean sparsity over the training set under the coding dictionary.
    pub mean_k: f64,
    /// ||F - D C||_F for the coding dictionary and its coefficients.
    pub approx_error: f64,
    /// ||D_new - D_old||_F after the update (over surviving atoms).
    pub dict_change: f64,
    /// Atoms dropped by pruning this iteration.
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningTrace {
    pub iterations: Vec<LearnIteration>,
    pub warnings: Vec<String>,
    pub stop: StopReason,
}

/// Samples M distinct training beats (uniformly, without replacement,
/// seeded) and normalizes them into an initial dictionary. Zero-norm beats
/// are skipped and resampled.
pub fn init_dictionary(training: &TrainingSet, m: usize, seed: u64) -> Result<Dictionary> {
    if m == 0 {
        return Err(Error::InvalidInput("atom count M must be positive".into()));
    }
    let q = training.len();
    if q < m {
        return Err(Error::InvalidInput(format!(
            "cannot sample {m} atoms from {q} beats"
        )));
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.shuffle(&mut substream(seed, "dictlearn-init"));
    let chosen: Vec<usize> = order
        .into_iter()
        .filter(|&i| training.beats().column(i).norm() > 0.0)
        .take(m)
        .collect();
    if chosen.len() < m {
        return Err(Error::InvalidInput(format!(
            "only {} beats with nonzero norm available, {m} needed",
            chosen.len()
        )));
    }
    Dictionary::from_columns_normalized(training.beats().select_columns(chosen.iter()))
}

fn code_one(
    training: &TrainingSet,
    dict: &Dictionary,
    algorithm: Algorithm,
    quality: CodingQuality,
    q: usize,
) -> Result<(Vec<(usize, f64)>, f64)> {
    let f = training.beat(q);
    let decomp = match quality {
        CodingQuality::Prdn(target) => approximate_to_prdn(&f, dict, algorithm, target, None),
        CodingQuality::ResidualNorm(rho) => pursue(&f, dict, &PursuitConfig::new(algorithm, rho)),
    };
    match decomp {
        Ok(d) => Ok((
            d.indices.iter().copied().zip(d.coefficients.iter().copied()).collect(),
            d.residual_norm,
        )),
        Err(e) => {
            let p = &training.provenance()[q];
            Err(Error::BeatCoding {
                record: p.record.clone(),
                sample_index: p.sample_index,
                source: Box::new(e),
            })
        }
    }
}

/// Codes every beat, also returning per-beat residual norms (used for the
/// learning trace without recomputing F - D C).
fn code_beats(
    training: &TrainingSet,
    dict: &Dictionary,
    algorithm: Algorithm,
    quality: CodingQuality,
) -> Result<(CoefficientMatrix, Vec<f64>)> {
    let results = map_indexed(training.len(), |q| {
        code_one(training, dict, algorithm, quality, q)
    });
    let mut columns = Vec::with_capacity(results.len());
    let mut residuals = Vec::with_capacity(results.len());
    for r in results {
        let (col, rnorm) = r?;
        columns.push(col);
        residuals.push(rnorm);
    }
    Ok((
        CoefficientMatrix::from_columns(dict.n_atoms(), columns)?,
        residuals,
    ))
}

/// Sparse-codes the whole training set in `dict`; column q of the result
/// holds beat q's decomposition. Per-beat failures carry the beat's
/// provenance. Parallel across beats, deterministic order.
pub fn sparse_code_step(
    training: &TrainingSet,
    dict: &Dictionary,
    config: &LearnConfig,
) -> Result<CoefficientMatrix> {
    if training.n_q() != dict.signal_len() {
        return Err(Error::DimensionMismatch(format!(
            "beats of length {} vs dictionary signal length {}",
            training.n_q(),
            dict.signal_len()
        )));
    }
    Ok(code_beats(training, dict, config.algorithm, config.quality)?.0)
}

/// The least-squares minimizer D of ||F - D C||_F^2, i.e. the solution of
/// D (C C^T) = F C^T, before any renormalization.
///
/// Fails with a rank-deficiency error when the condition estimate of C C^T
/// exceeds 1e12.
pub fn least_squares_dictionary(f: &DMatrix<f64>, c: &CoefficientMatrix) -> Result<DMatrix<f64>> {
    if f.ncols() != c.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} beats vs {} coefficient columns",
            f.ncols(),
            c.n_cols()
        )));
    }
    let m = c.n_rows();
    let n = f.nrows();

    // Accumulate G = C C^T and B = F C^T from the sparse columns.
    let mut gram = DMatrix::zeros(m, m);
    let mut b = DMatrix::zeros(n, m);
    for q in 0..c.n_cols() {
        let col = c.column(q);
        for &(i, ci) in col {
            for &(j, cj) in col {
                gram[(i, j)] += ci * cj;
            }
            b.column_mut(i).axpy(ci, &f.column(q), 1.0);
        }
    }

    let eig = gram.clone().symmetric_eigenvalues();
    let lambda_max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lambda_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) || !lambda_max.is_finite() {
        return Err(Error::RankDeficient { cond: f64::INFINITY });
    }
    let cond = lambda_max / lambda_min;
    if cond > 1e12 {
        return Err(Error::RankDeficient { cond });
    }

    let chol = nalgebra::Cholesky::new(gram)
        .ok_or(Error::RankDeficient { cond })?;
    // D G = B with G symmetric, so G D^T = B^T.
    Ok(chol.solve(&b.transpose()).transpose())
}

/// The least-squares update with columns renormalized to unit norm, ready to
/// use as the next dictionary.
pub fn update_dictionary(f: &DMatrix<f64>, c: &CoefficientMatrix) -> Result<Dictionary> {
    Dictionary::from_columns_normalized(least_squares_dictionary(f, c)?)
}

/// Drops atoms no column uses and renumbers the coefficient rows to match.
/// Returns the dropped original indices.
pub fn prune_unused(
    dict: &Dictionary,
    c: &CoefficientMatrix,
) -> Result<(Dictionary, CoefficientMatrix, Vec<usize>)> {
    if dict.n_atoms() != c.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} atoms, coefficient matrix {} rows",
            dict.n_atoms(),
            c.n_rows()
        )));
    }
    let usage = c.row_usage();
    let kept: Vec<usize> = (0..dict.n_atoms()).filter(|&i| usage[i] > 0).collect();
    if kept.is_empty() {
        return Err(Error::AllAtomsUnused);
    }
    let removed: Vec<usize> = (0..dict.n_atoms()).filter(|&i| usage[i] == 0).collect();
    if removed.is_empty() {
        return Ok((dict.clone(), c.clone(), removed));
    }
    let mut remap = vec![usize::MAX; dict.n_atoms()];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }
    let columns = c
        .columns
        .iter()
        .map(|col| col.iter().map(|&(idx, v)| (remap[idx], v)).collect())
        .collect();
    Ok((
        dict.select(&kept)?,
        CoefficientMatrix::from_columns(kept.len(), columns)?,
        removed,
    ))
}

/// Full learning loop. Aborted updates are not hard errors: the trace's
/// `stop` reason carries the diagnostic and the last valid dictionary is
/// returned.
///
/// When the training set has fewer beats than requested atoms, M is clamped
/// to Q with a warning in the trace.
pub fn learn(training: &TrainingSet, config: &LearnConfig) -> Result<(Dictionary, LearningTrace)> {
    config.validate()?;
    if training.is_empty() {
        return Err(Error::EmptyInput("training set has no beats".into()));
    }
    let mut warnings = Vec::new();
    let q = training.len();
    let m = if config.m > q {
        warnings.push(format!(
            "requested {} atoms from only {q} beats; clamping M to {q}",
            config.m
        ));
        q
    } else {
        config.m
    };
    if q < 2 * m {
        warnings.push(format!(
            "training set of {q} beats is small for {m} atoms; expect heavy pruning"
        ));
    }

    let mut dict = init_dictionary(training, m, config.seed)?;
    let change_threshold = config.tol * dict.matrix().norm();
    let mut iterations = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for outer in 1..=config.max_outer_iterations {
        let (c, residuals) = code_beats(training, &dict, config.algorithm, config.quality)?;
        let approx_error = residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        let mean_k = c.mean_k();

        let (pruned_dict, pruned_c, removed) = match prune_unused(&dict, &c) {
            Ok(t) => t,
            Err(e) => {
                stop = StopReason::Aborted {
                    diagnostic: format!("pruning failed at iteration {outer}: {e}"),
                };
                break;
            }
        };
        let updated = least_squares_dictionary(training.beats(), &pruned_c)
            .and_then(Dictionary::from_columns_normalized);
        let new_dict = match updated {
            Ok(d) => d,
            Err(e) => {
                stop = StopReason::Aborted {
                    diagnostic: format!("dictionary update failed at iteration {outer}: {e}"),
                };
                break;
            }
        };

        let dict_change = (new_dict.matrix() - pruned_dict.matrix()).norm();
        iterations.push(LearnIteration {
            mean_k,
            approx_error,
            dict_change,
            pruned: removed.len(),
        });
        dict = new_dict;
        if dict_change < change_threshold {
            stop = StopReason::Converged { iteration: outer };
            break;
        }
    }

    Ok((
        dict,
        LearningTrace {
            iterations,
            warnings,
            stop,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beats::{BeatClass, Provenance};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn set_from_matrix(beats: DMatrix<f64>) -> TrainingSet {
        let q = beats.ncols();
        TrainingSet::new(
            beats,
            vec![BeatClass::N; q],
            (0..q)
                .map(|i| Provenance {
                    record: "synthetic".into(),
                    sample_index: i as u64,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn init_is_normalized_permutation_when_m_equals_q() {
        let beats = DMatrix::from_column_slice(2, 3, &[2.0, 0.0, 0.0, 5.0, 1.0, 1.0]);
        let set = set_from_matrix(beats.clone());
        let d = init_dictionary(&set, 3, 9).unwrap();
        // Every atom equals some normalized beat.
        for j in 0..3 {
            let atom = d.atom(j);
            let matched = (0..3).any(|q| {
                let col = beats.column(q);
                let n = col.norm();
                (atom.clone_owned() - col / n).norm() < 1e-12
            });
            assert!(matched, "atom {j} is not a normalized training column");
        }
    }

    #[test]
    fn init_same_seed_identical() {
        let mut rng = StdRng::seed_from_u64(3);
        let beats = DMatrix::from_fn(4, 10, |_, _| rng.gen_range(-1.0..1.0));
        let set = set_from_matrix(beats);
        let a = init_dictionary(&set, 6, 42).unwrap();
        let b = init_dictionary(&set, 6, 42).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = init_dictionary(&set, 6, 43).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn init_skips_zero_beats() {
        let beats = DMatrix::from_column_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0]);
        let set = set_from_matrix(beats);
        let d = init_dictionary(&set, 2, 0).unwrap();
        for j in 0..2 {
            assert_relative_eq!(d.atom(j).norm(), 1.0, max_relative = 1e-12);
        }
        assert!(init_dictionary(&set, 3, 0).is_err());
    }

    #[test]
    fn sparse_code_orthonormal_one_sparse() {
        let dict = Dictionary::new(DMatrix::identity(3, 3)).unwrap();
        let beats = DMatrix::from_column_slice(3, 2, &[2.0, 0.0, 0.0, 0.0, 0.0, -1.5]);
        let set = set_from_matrix(beats);
        let cfg = LearnConfig::new(3, Algorithm::Omp, CodingQuality::ResidualNorm(1e-9), 0);
        let c = sparse_code_step(&set, &dict, &cfg).unwrap();
        assert_eq!(c.nnz(0), 1);
        assert_eq!(c.nnz(1), 1);
        assert_eq!(c.column(0)[0], (0, 2.0));
        assert_eq!(c.column(1)[0], (2, -1.5));
    }

    #[test]
    fn frobenius_error_matches_residual_norms() {
        let mut rng = StdRng::seed_from_u64(8);
        let raw = DMatrix::from_fn(6, 12, |_, _| rng.gen_range(-1.0..1.0));
        let dict = Dictionary::from_columns_normalized(raw).unwrap();
        let beats = DMatrix::from_fn(6, 9, |_, _| rng.gen_range(-1.0..1.0));
        let set = set_from_matrix(beats.clone());
        let (c, residuals) = code_beats(&set, &dict, Algorithm::Oomp, CodingQuality::Prdn(20.0)).unwrap();
        let from_residuals = residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        let dense = &beats - c.left_mul(dict.matrix()).unwrap();
        assert_relative_eq!(dense.norm(), from_residuals, max_relative = 1e-9);
    }

    #[test]
    fn coding_failure_carries_provenance() {
        // A constant beat has no PRDN; the error must name the beat.
        let beats = DMatrix::from_column_slice(2, 1, &[3.0, 3.0]);
        let set = TrainingSet::new(
            beats,
            vec![BeatClass::V],
            vec![Provenance {
                record: "r77".into(),
                sample_index: 1234,
            }],
        )
        .unwrap();
        let dict = Dictionary::new(DMatrix::identity(2, 2)).unwrap();
        let cfg = LearnConfig::new(2, Algorithm::Mp, CodingQuality::Prdn(9.0), 0);
        let err = sparse_code_step(&set, &dict, &cfg).unwrap_err();
        match err {
            Error::BeatCoding {
                record,
                sample_index,
                source,
            } => {
                assert_eq!(record, "r77");
                assert_eq!(sample_index, 1234);
                assert!(matches!(*source, Error::ZeroVariance));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn update_with_identity_coefficients_normalizes_beats() {
        let beats = DMatrix::from_column_slice(2, 2, &[3.0, 4.0, 0.0, 2.0]);
        let c = CoefficientMatrix::from_columns(2, vec![vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        let d = update_dictionary(&beats, &c).unwrap();
        assert_relative_eq!(d.atom(0)[0], 0.6, max_relative = 1e-12);
        assert_relative_eq!(d.atom(0)[1], 0.8, max_relative = 1e-12);
        assert_relative_eq!(d.atom(1)[1], 1.0, max_relative = 1e-12);
    }

    /// Independent least-squares oracle: solve min ||F - D C|| row by row
    /// through the SVD pseudo-inverse of C^T.
    fn svd_oracle(f: &DMatrix<f64>, c_dense: &DMatrix<f64>) -> DMatrix<f64> {
        let ct = c_dense.transpose();
        let svd = ct.svd(true, true);
        let mut d = DMatrix::zeros(f.nrows(), c_dense.nrows());
        for i in 0..f.nrows() {
            let rhs = f.row(i).transpose();
            let sol = svd.solve(&rhs, 1e-12).unwrap();
            d.row_mut(i).copy_from(&sol.transpose());
        }
        d
    }

    #[test]
    fn update_matches_svd_oracle() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..20 {
            let f = DMatrix::from_fn(4, 6, |_, _| rng.gen_range(-1.0..1.0));
            let c_dense = DMatrix::from_fn(3, 6, |_, _| rng.gen_range(-1.0..1.0));
            let columns = (0..6)
                .map(|q| (0..3).map(|i| (i, c_dense[(i, q)])).collect())
                .collect();
            let c = CoefficientMatrix::from_columns(3, columns).unwrap();
            let mine = least_squares_dictionary(&f, &c).unwrap();
            let oracle = svd_oracle(&f, &c_dense);
            assert!(
                (&mine - &oracle).norm() <= 1e-8 * oracle.norm().max(1.0),
                "LS update deviates from SVD oracle"
            );
            // Least-squares optimality: no worse than the oracle and not
            // worse than a perturbed competitor.
            let objective = |d: &DMatrix<f64>| (&f - d * &c_dense).norm();
            let perturbed = &mine + DMatrix::from_fn(4, 3, |_, _| rng.gen_range(-0.01..0.01));
            assert!(objective(&mine) <= objective(&perturbed) + 1e-12);
        }
    }

    #[test]
    fn rank_deficient_coefficients_error() {
        // Row 1 of C is a copy of row 0: C C^T singular.
        let columns = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]];
        let c = CoefficientMatrix::from_columns(2, columns).unwrap();
        let f = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let err = least_squares_dictionary(&f, &c).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn prune_is_identity_without_zero_rows() {
        let dict = Dictionary::new(DMatrix::identity(2, 2)).unwrap();
        let c = CoefficientMatrix::from_columns(2, vec![vec![(0, 1.0)], vec![(1, 2.0)]]).unwrap();
        let (d2, c2, removed) = prune_unused(&dict, &c).unwrap();
        assert!(removed.is_empty());
        assert_eq!(d2.matrix(), dict.matrix());
        assert_eq!(c2, c);
    }

    #[test]
    fn prune_drops_unused_atom_and_preserves_product() {
        let mut rng = StdRng::seed_from_u64(2);
        let raw = DMatrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
        let dict = Dictionary::from_columns_normalized(raw).unwrap();
        // Atom 2 unused.
        let columns = vec![
            vec![(0, 1.0), (3, -2.0)],
            vec![(1, 0.5)],
            vec![(0, -1.0), (1, 4.0), (3, 0.25)],
        ];
        let c = CoefficientMatrix::from_columns(4, columns).unwrap();
        let before = c.left_mul(dict.matrix()).unwrap();
        let (d2, c2, removed) = prune_unused(&dict, &c).unwrap();
        assert_eq!(removed, vec![2]);
        assert_eq!(d2.n_atoms(), 3);
        assert_eq!(c2.n_rows(), 3);
        let after = c2.left_mul(d2.matrix()).unwrap();
        assert_eq!(before, after); // bit-identical: zero rows contribute nothing
    }

    #[test]
    fn prune_all_unused_is_error() {
        let dict = Dictionary::new(DMatrix::identity(2, 2)).unwrap();
        let c = CoefficientMatrix::from_columns(2, vec![vec![], vec![]]).unwrap();
        assert!(matches!(
            prune_unused(&dict, &c).unwrap_err(),
            Error::AllAtomsUnused
        ));
    }

    #[test]
    fn learn_converges_immediately_on_exact_basis() {
        // Beats lie exactly on distinct coordinate axes; the initial
        // dictionary is already optimal, so iteration 1 converges with
        // (near) zero change.
        let beats = DMatrix::from_column_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.5]);
        let set = set_from_matrix(beats);
        let cfg = LearnConfig::new(3, Algorithm::Oomp, CodingQuality::ResidualNorm(1e-8), 7);
        let (dict, trace) = learn(&set, &cfg).unwrap();
        assert_eq!(dict.n_atoms(), 3);
        assert!(matches!(trace.stop, StopReason::Converged { iteration: 1 }));
        assert!(trace.iterations[0].dict_change < 1e-9);
        assert_eq!(trace.iterations[0].pruned, 0);
        assert_relative_eq!(trace.iterations[0].mean_k, 1.0);
    }

    #[test]
    fn learn_toy_recovery_reduces_error() {
        // Beats generated from 3 hidden atoms; learning with M=4 should
        // reach a small coding error and likely prune.
        let mut rng = StdRng::seed_from_u64(17);
        let hidden = Dictionary::from_columns_normalized(DMatrix::from_fn(6, 3, |_, _| {
            rng.gen_range(-1.0..1.0)
        }))
        .unwrap();
        let q = 24;
        let mut beats = DMatrix::zeros(6, q);
        for qi in 0..q {
            let coeffs: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..1.5)).collect();
            for (j, &cj) in coeffs.iter().enumerate().take(2 + qi % 2) {
                beats.column_mut(qi).axpy(cj, &hidden.atom(j), 1.0);
            }
        }
        let set = set_from_matrix(beats);
        let mut cfg = LearnConfig::new(4, Algorithm::Oomp, CodingQuality::Prdn(2.0), 5);
        cfg.max_outer_iterations = 15;
        let (dict, trace) = learn(&set, &cfg).unwrap();
        assert!(!trace.iterations.is_empty());
        assert!(dict.n_atoms() <= 4);
        let last = trace.iterations.last().unwrap();
        let first = &trace.iterations[0];
        assert!(last.mean_k <= first.mean_k + 1e-9);
    }

    #[test]
    fn learn_deterministic() {
        let mut rng = StdRng::seed_from_u64(4);
        let beats = DMatrix::from_fn(5, 20, |_, _| rng.gen_range(-1.0..1.0));
        let set = set_from_matrix(beats);
        let cfg = LearnConfig::new(6, Algorithm::Omp, CodingQuality::Prdn(15.0), 11);
        let (d1, t1) = learn(&set, &cfg).unwrap();
        let (d2, t2) = learn(&set, &cfg).unwrap();
        assert_eq!(d1.matrix(), d2.matrix());
        assert_eq!(t1, t2);
    }

    #[test]
    fn learn_clamps_m_with_warning() {
        let mut rng = StdRng::seed_from_u64(6);
        let beats = DMatrix::from_fn(4, 5, |_, _| rng.gen_range(-1.0..1.0));
        let set = set_from_matrix(beats);
        let cfg = LearnConfig::new(9, Algorithm::Omp, CodingQuality::Prdn(10.0), 1);
        let (dict, trace) = learn(&set, &cfg).unwrap();
        assert!(dict.n_atoms() <= 5);
        assert!(!trace.warnings.is_empty());
    }
}
