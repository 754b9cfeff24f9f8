//! Greedy pursuit algorithms: MP, OMP and OOMP.
//!
//! All three pick atoms one at a time to drive the residual norm below a
//! threshold rho. MP subtracts the plain correlation along the chosen atom,
//! so it may revisit an atom; OMP and OOMP keep the residual orthogonal to
//! everything already selected, so each atom is picked at most once. OOMP
//! additionally normalizes the selection score by how much of each candidate
//! is still unexplained, which makes the greedy step optimal: it minimizes
//! the post-projection residual norm among all candidates.
//!
//! Atom indices are zero-based. Ties in the selection score go to the
//! smallest index, which keeps runs bit-reproducible.

mod ortho;

use crate::dictionary::Dictionary;
use crate::{Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Default OOMP denominator guard; candidates with less unexplained energy
/// than this are considered spanned and excluded.
pub const DEFAULT_DENOMINATOR_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mp,
    Omp,
    Oomp,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Mp => "mp",
            Algorithm::Omp => "omp",
            Algorithm::Oomp => "oomp",
        }
    }

    /// Iteration cap for a signal space of dimension `n_q` and `m` atoms.
    ///
    /// MP may revisit atoms, so it gets slack (4x the dimension); OMP/OOMP
    /// cannot select more independent atoms than min(N_q, M).
    pub fn iteration_cap(&self, n_q: usize, m: usize) -> usize {
        match self {
            Algorithm::Mp => 4 * n_q,
            Algorithm::Omp | Algorithm::Oomp => n_q.min(m),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mp" => Ok(Algorithm::Mp),
            "omp" => Ok(Algorithm::Omp),
            "oomp" => Ok(Algorithm::Oomp),
            _ => Err(Error::InvalidInput(format!("unknown algorithm {s:?}"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitConfig {
    pub algorithm: Algorithm,
    /// Residual-norm threshold rho; the loop stops once ||r|| < rho.
    pub rho: f64,
    /// Hard cap on iterations. `None` uses the per-algorithm cap; explicit
    /// values are clamped to it.
    pub max_iterations: Option<usize>,
    /// Candidates whose unexplained energy falls below this are excluded
    /// from selection (relevant once atoms become linearly dependent).
    pub denominator_guard: f64,
}

impl PursuitConfig {
    pub fn new(algorithm: Algorithm, rho: f64) -> Self {
        Self {
            algorithm,
            rho,
            max_iterations: None,
            denominator_guard: DEFAULT_DENOMINATOR_GUARD,
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = Some(max_iterations);
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || self.rho < 0.0 {
            return Err(Error::InvalidInput(format!(
                "rho must be finite and nonnegative, got {}",
                self.rho
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidInput(
                "max_iterations must be positive".into(),
            ));
        }
        if !self.denominator_guard.is_finite() || self.denominator_guard <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "denominator_guard must be a small positive real, got {}",
                self.denominator_guard
            )));
        }
        Ok(())
    }

    fn effective_max(&self, algorithm: Algorithm, n_q: usize, m: usize) -> usize {
        let cap = algorithm.iteration_cap(n_q, m);
        self.max_iterations.map_or(cap, |v| v.min(cap))
    }
}

/// One selection step, recorded for diagnostics and energy bookkeeping.
///
/// `projection` is the signed length removed along the step's direction: the
/// correlation with the chosen atom for MP, or with the new orthonormal
/// direction for OMP/OOMP. Either way the residual energy drops by its
/// square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitStep {
    pub atom: usize,
    pub projection: f64,
    pub residual_norm: f64,
}

/// Result of a pursuit run: the K-term atomic decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDecomposition {
    /// Selected atom indices in first-selection order (distinct after
    /// merging; MP merges repeated picks into one entry).
    pub indices: Vec<usize>,
    /// Coefficient per entry of `indices`.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub approximation: DVector<f64>,
    /// Raw iteration count; exceeds `k()` when MP revisits atoms.
    pub iterations: usize,
    /// Whether the residual reached the requested threshold. False when the
    /// iteration cap hit first or no admissible candidate remained.
    pub tolerance_met: bool,
    pub steps: Vec<PursuitStep>,
}

impl AtomicDecomposition {
    /// Number of distinct atoms used, the sparsity level K.
    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

fn validate_signal(f: &DVector<f64>, dict: &Dictionary) -> Result<()> {
    if f.len() != dict.signal_len() {
        return Err(Error::DimensionMismatch(format!(
            "signal length {} vs dictionary signal length {}",
            f.len(),
            dict.signal_len()
        )));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("signal has non-finite entries".into()));
    }
    if f.norm() == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    Ok(())
}

/// Index of the entry with the largest |value|; ties go to the smallest index.
fn argmax_abs(values: &DVector<f64>) -> (usize, f64) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, v) in values.iter().enumerate() {
        let a = v.abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    (best, best_abs)
}

/// Matching pursuit. Repeated selections of one atom are merged into a
/// single coefficient; `iterations` keeps the raw count.
pub fn mp(f: &DVector<f64>, dict: &Dictionary, config: &PursuitConfig) -> Result<AtomicDecomposition> {
    validate_signal(f, dict)?;
    config.validate()?;
    let m = dict.n_atoms();
    let max_iter = config.effective_max(Algorithm::Mp, dict.signal_len(), m);

    let mut r = f.clone();
    let mut rnorm = r.norm();
    let mut approximation = DVector::zeros(f.len());
    let mut coeff_acc = vec![0.0_f64; m];
    let mut selected_mask = vec![false; m];
    let mut order: Vec<usize> = Vec::new();
    let mut steps: Vec<PursuitStep> = Vec::new();

    while rnorm >= config.rho && rnorm > 0.0 && steps.len() < max_iter {
        let corr = dict.correlations(&r);
        let (best, best_abs) = argmax_abs(&corr);
        if best_abs == 0.0 {
            // Residual orthogonal to the whole dictionary: no step can help.
            break;
        }
        let alpha = corr[best];
        r.axpy(-alpha, &dict.atom(best), 1.0);
        approximation.axpy(alpha, &dict.atom(best), 1.0);
        rnorm = r.norm();
        if !selected_mask[best] {
            selected_mask[best] = true;
            order.push(best);
        }
        coeff_acc[best] += alpha;
        steps.push(PursuitStep {
            atom: best,
            projection: alpha,
            residual_norm: rnorm,
        });
    }

    let coefficients = order.iter().map(|&i| coeff_acc[i]).collect();
    Ok(AtomicDecomposition {
        iterations: steps.len(),
        tolerance_met: rnorm <= config.rho,
        indices: order,
        coefficients,
        residual_norm: rnorm,
        approximation,
        steps,
    })
}

/// Orthogonal matching pursuit: MP's selection rule restricted to unselected
/// atoms, with coefficients re-solved so the approximation is the orthogonal
/// projection of `f` onto the selected span after every step.
pub fn omp(f: &DVector<f64>, dict: &Dictionary, config: &PursuitConfig) -> Result<AtomicDecomposition> {
    validate_signal(f, dict)?;
    config.validate()?;
    ortho::orthogonal_pursuit(f, dict, config, ortho::Variant::Omp)
}

/// Optimized orthogonal matching pursuit: like OMP, but the selection score
/// divides the squared correlation by each candidate's unexplained energy,
/// making every greedy step residual-optimal.
pub fn oomp(f: &DVector<f64>, dict: &Dictionary, config: &PursuitConfig) -> Result<AtomicDecomposition> {
    validate_signal(f, dict)?;
    config.validate()?;
    ortho::orthogonal_pursuit(f, dict, config, ortho::Variant::Oomp)
}

/// Runs the algorithm named in `config`.
pub fn pursue(
    f: &DVector<f64>,
    dict: &Dictionary,
    config: &PursuitConfig,
) -> Result<AtomicDecomposition> {
    match config.algorithm {
        Algorithm::Mp => mp(f, dict, config),
        Algorithm::Omp => omp(f, dict, config),
        Algorithm::Oomp => oomp(f, dict, config),
    }
}

/// Rebuilds the approximation sum_n c(n) d_{l_n} from a decomposition.
pub fn reconstruct(decomp: &AtomicDecomposition, dict: &Dictionary) -> Result<DVector<f64>> {
    dict.reconstruct(&decomp.indices, &decomp.coefficients)
}

/// Norm of the deviation from the mean, ||f - mean(f)*1||. The PRDN
/// denominator; zero for constant signals, which is an error.
pub fn deviation_norm(f: &DVector<f64>) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::EmptyInput("signal is empty".into()));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("signal has non-finite entries".into()));
    }
    let mean = f.mean();
    let dev = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt();
    if dev == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(dev)
}

/// Percentage root-mean-square difference, normalized by the deviation from
/// the mean: ||f - approx|| / ||f - mean(f)|| * 100.
pub fn prdn(f: &DVector<f64>, approx: &DVector<f64>) -> Result<f64> {
    if f.len() != approx.len() {
        return Err(Error::DimensionMismatch(format!(
            "signal length {} vs approximation length {}",
            f.len(),
            approx.len()
        )));
    }
    if approx.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "approximation has non-finite entries".into(),
        ));
    }
    let dev = deviation_norm(f)?;
    Ok((f - approx).norm() / dev * 100.0)
}

/// Runs a pursuit until the approximation reaches `prdn_target` percent, by
/// converting the target into a residual-norm threshold
/// rho = (prdn_target / 100) * ||f - mean(f)||.
pub fn approximate_to_prdn(
    f: &DVector<f64>,
    dict: &Dictionary,
    algorithm: Algorithm,
    prdn_target: f64,
    max_iterations: Option<usize>,
) -> Result<AtomicDecomposition> {
    if !prdn_target.is_finite() || prdn_target < 0.0 {
        return Err(Error::InvalidInput(format!(
            "prdn target must be finite and nonnegative, got {prdn_target}"
        )));
    }
    let dev = deviation_norm(f)?;
    let config = PursuitConfig {
        algorithm,
        rho: prdn_target / 100.0 * dev,
        max_iterations,
        denominator_guard: DEFAULT_DENOMINATOR_GUARD,
    };
    pursue(f, dict, &config)
}
