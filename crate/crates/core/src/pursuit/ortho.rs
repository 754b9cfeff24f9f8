//! Shared engine for OMP and OOMP.
//!
//! Both keep the residual orthogonal to the selected span. The working state
//! is the Gram-Schmidt orthogonalization w_1..w_k of the selected atoms
//! (with one re-orthogonalization pass per new atom for numerical accuracy)
//! plus the biorthogonal vectors beta_n, which yield the least-squares
//! coefficients as c(n) = <beta_n, f> without ever forming normal equations.
//!
//! The per-candidate cache proj_acc[n] accumulates sum_i <d_n, w~_i>^2, the
//! energy of atom n already inside the selected span. 1 - proj_acc[n] is the
//! OOMP denominator; candidates where it falls below the guard are spanned
//! and excluded (for both variants: a spanned atom cannot reduce the
//! residual, and selecting one would make the orthogonalization singular).

use super::{AtomicDecomposition, PursuitConfig, PursuitStep};
use crate::dictionary::Dictionary;
use crate::Result;
use nalgebra::DVector;

#[derive(Clone, Copy, PartialEq)]
pub(super) enum Variant {
    Omp,
    Oomp,
}

pub(super) fn orthogonal_pursuit(
    f: &DVector<f64>,
    dict: &Dictionary,
    config: &PursuitConfig,
    variant: Variant,
) -> Result<AtomicDecomposition> {
    let m = dict.n_atoms();
    let algorithm = match variant {
        Variant::Omp => super::Algorithm::Omp,
        Variant::Oomp => super::Algorithm::Oomp,
    };
    let max_iter = config.effective_max(algorithm, dict.signal_len(), m);
    let guard = config.denominator_guard;

    let mut r = f.clone();
    let mut rnorm = r.norm();
    let mut selected: Vec<usize> = Vec::new();
    let mut selected_mask = vec![false; m];
    let mut w_tilde: Vec<DVector<f64>> = Vec::new();
    let mut betas: Vec<DVector<f64>> = Vec::new();
    let mut proj_acc = vec![0.0_f64; m];
    let mut steps: Vec<PursuitStep> = Vec::new();

    while rnorm >= config.rho && rnorm > 0.0 && selected.len() < max_iter {
        let corr = dict.correlations(&r);

        // Argmax of the selection score over admissible candidates; ties go
        // to the smallest index. At the first step proj_acc is all zeros, so
        // both variants reduce to plain max |<d_n, r>|.
        let mut best: Option<(usize, f64)> = None;
        for n in 0..m {
            if selected_mask[n] {
                continue;
            }
            let denominator = 1.0 - proj_acc[n];
            if denominator < guard {
                continue;
            }
            let numerator = corr[n] * corr[n];
            let score = match variant {
                Variant::Omp => numerator,
                Variant::Oomp => numerator / denominator,
            };
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((n, score));
            }
        }
        let Some((ell, score)) = best else {
            break; // candidate set exhausted
        };
        if score == 0.0 {
            break; // residual orthogonal to every admissible candidate
        }

        // New orthogonal direction from d_ell, one re-orthogonalization pass.
        let d_ell = dict.atom(ell).into_owned();
        let mut w = d_ell.clone();
        for wt in &w_tilde {
            let p = wt.dot(&d_ell);
            w.axpy(-p, wt, 1.0);
        }
        for wt in &w_tilde {
            let p = wt.dot(&w);
            w.axpy(-p, wt, 1.0);
        }
        let wnorm2 = w.norm_squared();
        if wnorm2 < guard {
            break; // numerically spanned despite the denominator screen
        }

        // Biorthogonal set: the new beta is w/||w||^2; existing betas lose
        // their component along the new atom.
        let beta_new = &w / wnorm2;
        for b in betas.iter_mut() {
            let p = d_ell.dot(b);
            b.axpy(-p, &beta_new, 1.0);
        }
        betas.push(beta_new);

        let wf = w.dot(f);
        r.axpy(-(wf / wnorm2), &w, 1.0);
        rnorm = r.norm();

        let wt = &w / wnorm2.sqrt();
        let dtw = dict.correlations(&wt);
        for n in 0..m {
            proj_acc[n] += dtw[n] * dtw[n];
        }
        w_tilde.push(wt);

        selected_mask[ell] = true;
        selected.push(ell);
        steps.push(PursuitStep {
            atom: ell,
            projection: wf / wnorm2.sqrt(),
            residual_norm: rnorm,
        });
    }

    let coefficients: Vec<f64> = betas.iter().map(|b| b.dot(f)).collect();
    let approximation = f - &r;
    Ok(AtomicDecomposition {
        iterations: selected.len(),
        tolerance_met: rnorm <= config.rho,
        indices: selected,
        coefficients,
        residual_norm: rnorm,
        approximation,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{omp, oomp, Algorithm, PursuitConfig};
    use crate::dictionary::Dictionary;
    use nalgebra::{DMatrix, DVector};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_dict(n: usize, m: usize, rng: &mut StdRng) -> Dictionary {
        let raw = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
        Dictionary::from_columns_normalized(raw).unwrap()
    }

    #[test]
    fn residual_orthogonal_to_selected_atoms() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let d = random_dict(8, 20, &mut rng);
            let f = DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0));
            let fnorm = f.norm();
            for alg in [Algorithm::Omp, Algorithm::Oomp] {
                let cfg = PursuitConfig::new(alg, 1e-4 * fnorm);
                let out = match alg {
                    Algorithm::Omp => omp(&f, &d, &cfg).unwrap(),
                    _ => oomp(&f, &d, &cfg).unwrap(),
                };
                let r = &f - &out.approximation;
                for &j in &out.indices {
                    assert!(
                        d.atom(j).dot(&r).abs() <= 1e-8 * fnorm,
                        "residual not orthogonal to atom {j}"
                    );
                }
            }
        }
    }

    #[test]
    fn indices_distinct() {
        let mut rng = StdRng::seed_from_u64(5);
        let d = random_dict(6, 32, &mut rng);
        let f = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let out = oomp(&f, &d, &PursuitConfig::new(Algorithm::Oomp, 0.0)).unwrap();
        let mut seen = out.indices.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), out.indices.len());
    }

    #[test]
    fn spanned_candidates_are_skipped() {
        // Atom 2 duplicates atom 0; after selecting both axes the duplicate
        // is spanned and must not be selected, leaving a clean exact result.
        let cols = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let d = Dictionary::new(DMatrix::from_column_slice(2, 3, &cols)).unwrap();
        let f = DVector::from_column_slice(&[0.7, -0.2]);
        let out = oomp(&f, &d, &PursuitConfig::new(Algorithm::Oomp, 0.0)).unwrap();
        assert!(out.k() <= 2);
        assert!(out.residual_norm <= 1e-12);
    }
}
