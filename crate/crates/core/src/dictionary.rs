//! Dictionary of unit-norm atoms.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, DVectorView};

/// How far a column norm may stray from 1 before construction fails.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// An N x M matrix whose columns (atoms) all have unit Euclidean norm.
///
/// Atom indices are zero-based throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
}

impl Dictionary {
    /// Wraps a matrix whose columns are already unit-norm.
    ///
    /// Fails if the matrix is empty, has non-finite entries, or any column
    /// norm differs from 1 by more than [`UNIT_NORM_TOL`].
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(Error::EmptyInput("dictionary must be non-empty".into()));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "dictionary contains non-finite entries".into(),
            ));
        }
        for (j, col) in atoms.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidInput(format!(
                    "atom {j} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { atoms })
    }

    /// Normalizes every column to unit norm, then wraps the result.
    /// A zero-norm column is an error.
    pub fn from_columns_normalized(mut atoms: DMatrix<f64>) -> Result<Self> {
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(Error::EmptyInput("dictionary must be non-empty".into()));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "dictionary contains non-finite entries".into(),
            ));
        }
        for j in 0..atoms.ncols() {
            let norm = atoms.column(j).norm();
            if norm == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "atom {j} has zero norm and cannot be normalized"
                )));
            }
            atoms.column_mut(j).unscale_mut(norm);
        }
        Self::new(atoms)
    }

    /// Signal length N (rows).
    pub fn signal_len(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms M (columns).
    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atom(&self, index: usize) -> DVectorView<'_, f64> {
        self.atoms.column(index)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    /// D^T r: inner product of every atom with `r`.
    pub fn correlations(&self, r: &DVector<f64>) -> DVector<f64> {
        self.atoms.tr_mul(r)
    }

    /// Keeps only the atoms at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Dictionary> {
        let m = self.n_atoms();
        for &i in indices {
            if i >= m {
                return Err(Error::AtomIndexOutOfRange { index: i, m });
            }
        }
        Ok(Dictionary {
            atoms: self.atoms.select_columns(indices.iter()),
        })
    }

    /// Linear combination sum_i coefficients[i] * atom(indices[i]).
    ///
    /// Repeated indices are allowed and accumulate.
    pub fn reconstruct(&self, indices: &[usize], coefficients: &[f64]) -> Result<DVector<f64>> {
        if indices.len() != coefficients.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices vs {} coefficients",
                indices.len(),
                coefficients.len()
            )));
        }
        let mut out = DVector::zeros(self.signal_len());
        for (&i, &c) in indices.iter().zip(coefficients) {
            if i >= self.n_atoms() {
                return Err(Error::AtomIndexOutOfRange {
                    index: i,
                    m: self.n_atoms(),
                });
            }
            out.axpy(c, &self.atoms.column(i), 1.0);
        }
        Ok(out)
    }
}
