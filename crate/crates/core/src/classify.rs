//! Sparsity-based beat classification.
//!
//! A beat is approximated to the same PRDN with two class dictionaries; the
//! decision compares how economical each representation is. Criterion I
//! compares the atom counts K and breaks ties with either entropy (Ia) or
//! norm-1 (Ib) of the coefficients; Criteria II and III skip the counts and
//! always compare entropy or norm-1 respectively. An exact tie on the final
//! comparator yields "undecided", which the evaluation layer counts as an
//! error for both classes.

use crate::dictionary::Dictionary;
use crate::par::map_indexed;
use crate::pursuit::{approximate_to_prdn, Algorithm, AtomicDecomposition};
use crate::{Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Compare K; break ties by smaller entropy.
    Ia,
    /// Compare K; break ties by smaller norm-1.
    Ib,
    /// Always the smaller entropy.
    II,
    /// Always the smaller norm-1.
    III,
}

impl Criterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Ia => "Ia",
            Criterion::Ib => "Ib",
            Criterion::II => "II",
            Criterion::III => "III",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    /// Accepts exactly the four spellings Ia, Ib, II, III.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Ia" => Ok(Criterion::Ia),
            "Ib" => Ok(Criterion::Ib),
            "II" => Ok(Criterion::II),
            "III" => Ok(Criterion::III),
            _ => Err(Error::InvalidInput(format!(
                "unknown criterion {s:?}; expected one of Ia, Ib, II, III"
            ))),
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shannon entropy of the normalized magnitudes: S = -sum p ln p with
/// p(n) = |c(n)| / ||c||_1. Zero-magnitude entries contribute nothing.
pub fn shannon_entropy(c: &[f64]) -> Result<f64> {
    let total: f64 = c.iter().map(|v| v.abs()).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(
            "entropy of an all-zero coefficient vector is undefined".into(),
        ));
    }
    let mut s = 0.0;
    for &v in c {
        let p = v.abs() / total;
        if p > 0.0 {
            s -= p * p.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Sum of absolute coefficients.
pub fn norm1(c: &[f64]) -> f64 {
    c.iter().map(|v| v.abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    None,
    Entropy,
    Norm1,
}

/// Decision outcome: one of the two class labels, or undecided.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Class(String),
    Undecided,
}

impl Outcome {
    pub fn as_label(&self) -> &str {
        match self {
            Outcome::Class(s) => s,
            Outcome::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub label: Outcome,
    pub k_a: usize,
    pub k_b: usize,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub norm1_a: f64,
    pub norm1_b: f64,
    pub tie_broken_by: TieBreak,
    /// True when the corresponding approximation stopped short of the
    /// requested quality (iteration cap or exhausted candidates).
    pub tolerance_unmet_a: bool,
    pub tolerance_unmet_b: bool,
}

/// A pair of learned dictionaries plus the shared approximation settings.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    dict_a: Dictionary,
    dict_b: Dictionary,
    label_a: String,
    label_b: String,
    pub algorithm: Algorithm,
    pub prdn_target: f64,
    pub criterion: Criterion,
}

impl ClassifierModel {
    pub fn new(
        dict_a: Dictionary,
        label_a: impl Into<String>,
        dict_b: Dictionary,
        label_b: impl Into<String>,
        algorithm: Algorithm,
        prdn_target: f64,
        criterion: Criterion,
    ) -> Result<Self> {
        let label_a = label_a.into();
        let label_b = label_b.into();
        if dict_a.signal_len() != dict_b.signal_len() {
            return Err(Error::DimensionMismatch(format!(
                "dictionaries disagree on beat length: {} vs {}",
                dict_a.signal_len(),
                dict_b.signal_len()
            )));
        }
        if label_a == label_b {
            return Err(Error::InvalidInput(format!(
                "class labels must be distinct, both are {label_a:?}"
            )));
        }
        if !prdn_target.is_finite() || prdn_target < 0.0 {
            return Err(Error::InvalidInput(format!(
                "prdn target must be finite and nonnegative, got {prdn_target}"
            )));
        }
        Ok(Self {
            dict_a,
            dict_b,
            label_a,
            label_b,
            algorithm,
            prdn_target,
            criterion,
        })
    }

    pub fn n_q(&self) -> usize {
        self.dict_a.signal_len()
    }

    pub fn label_a(&self) -> &str {
        &self.label_a
    }

    pub fn label_b(&self) -> &str {
        &self.label_b
    }

    pub fn dict_a(&self) -> &Dictionary {
        &self.dict_a
    }

    pub fn dict_b(&self) -> &Dictionary {
        &self.dict_b
    }
}

/// Entropy for decision purposes: an empty (or all-zero) coefficient vector
/// represents a perfect zero-atom approximation and is treated as the
/// minimum-entropy case rather than an error.
fn decision_entropy(c: &[f64]) -> f64 {
    shannon_entropy(c).unwrap_or(0.0)
}

/// Applies a criterion to two decompositions produced at equal quality.
pub fn decide(
    decomp_a: &AtomicDecomposition,
    decomp_b: &AtomicDecomposition,
    criterion: Criterion,
    label_a: &str,
    label_b: &str,
) -> Decision {
    let k_a = decomp_a.k();
    let k_b = decomp_b.k();
    let entropy_a = decision_entropy(&decomp_a.coefficients);
    let entropy_b = decision_entropy(&decomp_b.coefficients);
    let norm1_a = norm1(&decomp_a.coefficients);
    let norm1_b = norm1(&decomp_b.coefficients);

    let pick = |less: bool, greater: bool| -> Outcome {
        if less {
            Outcome::Class(label_a.to_string())
        } else if greater {
            Outcome::Class(label_b.to_string())
        } else {
            Outcome::Undecided
        }
    };

    let (label, tie_broken_by) = match criterion {
        Criterion::Ia | Criterion::Ib => {
            if k_a != k_b {
                (pick(k_a < k_b, k_a > k_b), TieBreak::None)
            } else if criterion == Criterion::Ia {
                (
                    pick(entropy_a < entropy_b, entropy_a > entropy_b),
                    TieBreak::Entropy,
                )
            } else {
                (pick(norm1_a < norm1_b, norm1_a > norm1_b), TieBreak::Norm1)
            }
        }
        Criterion::II => (
            pick(entropy_a < entropy_b, entropy_a > entropy_b),
            TieBreak::None,
        ),
        Criterion::III => (pick(norm1_a < norm1_b, norm1_a > norm1_b), TieBreak::None),
    };

    Decision {
        label,
        k_a,
        k_b,
        entropy_a,
        entropy_b,
        norm1_a,
        norm1_b,
        tie_broken_by,
        tolerance_unmet_a: !decomp_a.tolerance_met,
        tolerance_unmet_b: !decomp_b.tolerance_met,
    }
}

/// Approximates `f` with both dictionaries at the model's shared settings
/// and decides. A "tolerance unmet" approximation still yields a decision,
/// with the flag carried through.
pub fn classify_beat(f: &DVector<f64>, model: &ClassifierModel) -> Result<Decision> {
    let a = approximate_to_prdn(f, &model.dict_a, model.algorithm, model.prdn_target, None)?;
    let b = approximate_to_prdn(f, &model.dict_b, model.algorithm, model.prdn_target, None)?;
    Ok(decide(&a, &b, model.criterion, &model.label_a, &model.label_b))
}

/// Classifies many beats (columns), in parallel, preserving order. Per-beat
/// errors are returned in place so one bad beat cannot hide the rest.
pub fn classify_batch(
    beats: &nalgebra::DMatrix<f64>,
    model: &ClassifierModel,
) -> Vec<Result<Decision>> {
    map_indexed(beats.ncols(), |q| {
        classify_beat(&beats.column(q).into_owned(), model)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pursuit::PursuitStep;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn fake_decomp(coefficients: Vec<f64>) -> AtomicDecomposition {
        let indices = (0..coefficients.len()).collect();
        AtomicDecomposition {
            indices,
            coefficients,
            residual_norm: 0.0,
            approximation: DVector::zeros(1),
            iterations: 0,
            tolerance_met: true,
            steps: Vec::<PursuitStep>::new(),
        }
    }

    #[test]
    fn entropy_examples() {
        assert_relative_eq!(shannon_entropy(&[3.5]).unwrap(), 0.0);
        let k = 7;
        let uniform = vec![-0.4; k];
        assert_relative_eq!(
            shannon_entropy(&uniform).unwrap(),
            (k as f64).ln(),
            max_relative = 1e-12
        );
        // p = (0.25, 0.25, 0.5) -> S = 1.5 ln 2.
        assert_relative_eq!(
            shannon_entropy(&[1.0, -1.0, 2.0]).unwrap(),
            1.5 * std::f64::consts::LN_2,
            max_relative = 1e-12
        );
        assert!(shannon_entropy(&[0.0, 0.0]).is_err());
        assert!(shannon_entropy(&[]).is_err());
    }

    #[test]
    fn norm1_examples() {
        assert_eq!(norm1(&[]), 0.0);
        assert_eq!(norm1(&[0.0, 0.0]), 0.0);
        assert_eq!(norm1(&[1.0, -1.0, 2.0]), 4.0);
        let c = [0.5, -2.0, 1.25];
        let scaled: Vec<f64> = c.iter().map(|v| v * -3.0).collect();
        assert_relative_eq!(norm1(&scaled), 3.0 * norm1(&c), max_relative = 1e-15);
    }

    #[test]
    fn criterion_one_compares_counts_first() {
        let a = fake_decomp(vec![1.0, 1.0, 1.0]);
        let b = fake_decomp(vec![1.0; 5]);
        let d = decide(&a, &b, Criterion::Ia, "N", "V");
        assert_eq!(d.label, Outcome::Class("N".into()));
        assert_eq!(d.tie_broken_by, TieBreak::None);
        assert_eq!((d.k_a, d.k_b), (3, 5));
    }

    #[test]
    fn criterion_one_breaks_count_tie_with_entropy() {
        // Same K = 4; a is more concentrated, so lower entropy.
        let a = fake_decomp(vec![5.0, 0.2, 0.2, 0.2]);
        let b = fake_decomp(vec![1.0, 1.0, 1.0, 1.0]);
        let d = decide(&a, &b, Criterion::Ia, "N", "V");
        assert_eq!(d.label, Outcome::Class("N".into()));
        assert_eq!(d.tie_broken_by, TieBreak::Entropy);
        assert!(d.entropy_a < d.entropy_b);
    }

    #[test]
    fn criterion_one_b_breaks_count_tie_with_norm1() {
        let a = fake_decomp(vec![1.0, 1.0]);
        let b = fake_decomp(vec![3.0, 0.5]);
        let d = decide(&a, &b, Criterion::Ib, "N", "V");
        assert_eq!(d.label, Outcome::Class("N".into()));
        assert_eq!(d.tie_broken_by, TieBreak::Norm1);
    }

    #[test]
    fn criterion_three_ignores_counts() {
        // K_a = 2 < K_b = 7 but norm-1 favors b.
        let a = fake_decomp(vec![6.0, 4.0]);
        let b = fake_decomp(vec![0.4; 7]);
        let d = decide(&a, &b, Criterion::III, "N", "V");
        assert_eq!(d.label, Outcome::Class("V".into()));
        assert_eq!(d.tie_broken_by, TieBreak::None);
    }

    #[test]
    fn criterion_two_uses_entropy_only() {
        let a = fake_decomp(vec![1.0, 1.0]); // S = ln 2
        let b = fake_decomp(vec![10.0, 0.1, 0.1]); // concentrated, S small
        let d = decide(&a, &b, Criterion::II, "N", "V");
        assert_eq!(d.label, Outcome::Class("V".into()));
    }

    #[test]
    fn exact_tie_is_undecided() {
        let a = fake_decomp(vec![1.0, -2.0]);
        let b = fake_decomp(vec![-1.0, 2.0]);
        for criterion in [Criterion::Ia, Criterion::Ib, Criterion::II, Criterion::III] {
            let d = decide(&a, &b, criterion, "N", "V");
            assert_eq!(d.label, Outcome::Undecided, "criterion {criterion}");
        }
    }

    #[test]
    fn decide_is_antisymmetric() {
        let cases = [
            (vec![1.0, 2.0], vec![0.5, 0.1, 3.0]),
            (vec![2.0, 2.0], vec![1.0, 3.0]),
            (vec![1.0], vec![1.0]),
            (vec![4.0, 0.25], vec![0.25, 4.0]),
        ];
        for (ca, cb) in cases {
            let a = fake_decomp(ca);
            let b = fake_decomp(cb);
            for criterion in [Criterion::Ia, Criterion::Ib, Criterion::II, Criterion::III] {
                let fwd = decide(&a, &b, criterion, "N", "V");
                let rev = decide(&b, &a, criterion, "N", "V");
                match (&fwd.label, &rev.label) {
                    (Outcome::Class(x), Outcome::Class(y)) => {
                        assert_ne!(x, y, "criterion {criterion} not antisymmetric")
                    }
                    (Outcome::Undecided, Outcome::Undecided) => {}
                    other => panic!("asymmetric outcome {other:?} for {criterion}"),
                }
            }
        }
    }

    #[test]
    fn model_validation() {
        let d2 = Dictionary::new(DMatrix::identity(2, 2)).unwrap();
        let d3 = Dictionary::new(DMatrix::identity(3, 3)).unwrap();
        assert!(ClassifierModel::new(
            d2.clone(),
            "N",
            d3,
            "V",
            Algorithm::Mp,
            9.0,
            Criterion::III
        )
        .is_err());
        assert!(ClassifierModel::new(
            d2.clone(),
            "N",
            d2.clone(),
            "N",
            Algorithm::Mp,
            9.0,
            Criterion::III
        )
        .is_err());
    }

    #[test]
    fn identical_dictionaries_undecided() {
        let d = Dictionary::new(DMatrix::identity(3, 3)).unwrap();
        let model = ClassifierModel::new(
            d.clone(),
            "N",
            d,
            "V",
            Algorithm::Oomp,
            1.0,
            Criterion::Ia,
        )
        .unwrap();
        let f = DVector::from_column_slice(&[1.0, 0.5, -0.25]);
        let decision = classify_beat(&f, &model).unwrap();
        assert_eq!(decision.label, Outcome::Undecided);
        assert_eq!(decision.k_a, decision.k_b);
    }

    #[test]
    fn sparse_in_own_dictionary_wins_criterion_one() {
        // f is built from exactly 2 atoms of dict_a; dict_b is a random
        // dense dictionary that needs several atoms for the same quality.
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(19);
        let a = Dictionary::new(DMatrix::identity(8, 8)).unwrap();
        let b = Dictionary::from_columns_normalized(DMatrix::from_fn(8, 8, |_, _| {
            rng.gen_range(-1.0..1.0)
        }))
        .unwrap();
        let model =
            ClassifierModel::new(a, "N", b, "V", Algorithm::Omp, 1.0, Criterion::Ia).unwrap();
        let f = DVector::from_fn(8, |i, _| match i {
            0 => 2.0,
            4 => -1.0,
            _ => 0.0,
        });
        let d = classify_beat(&f, &model).unwrap();
        assert_eq!(d.k_a, 2);
        assert!(d.k_b > 2, "dense dictionary used only {} atoms", d.k_b);
        assert_eq!(d.label, Outcome::Class("N".into()));
        assert_eq!(d.tie_broken_by, TieBreak::None);
    }

    #[test]
    fn batch_matches_single() {
        let d = Dictionary::new(DMatrix::identity(3, 3)).unwrap();
        let mut e = DMatrix::zeros(3, 3);
        e[(0, 0)] = 1.0;
        e[(1, 1)] = std::f64::consts::FRAC_1_SQRT_2;
        e[(2, 1)] = std::f64::consts::FRAC_1_SQRT_2;
        e[(2, 2)] = 1.0;
        let model = ClassifierModel::new(
            d,
            "N",
            Dictionary::new(e).unwrap(),
            "V",
            Algorithm::Oomp,
            2.0,
            Criterion::III,
        )
        .unwrap();
        let beats = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 0.5, -0.3, 0.0, 0.9]);
        let batch = classify_batch(&beats, &model);
        for (q, item) in batch.iter().enumerate() {
            let single = classify_beat(&beats.column(q).into_owned(), &model).unwrap();
            assert_eq!(item.as_ref().unwrap(), &single);
        }
    }
}
