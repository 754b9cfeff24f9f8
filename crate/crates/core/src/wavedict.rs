//! Redundant wavelet dictionary used for screening.
//!
//! Atoms are translates of two prototype functions, a scaling function at
//! the coarsest scale j0 and a wavelet at every scale from j0+1 up to j_max,
//! sampled on the signal grid x_i = i/N_q over [0, 1):
//!
//!   phi(2^j0 x - b k)   and   psi(2^j x - b k)
//!
//! with the translation step b finer than the dyadic grid (b = 0.25 gives
//! four translates per integer shift). Atoms whose support crosses the
//! window edge are truncated and renormalized; atoms with almost no energy
//! inside the window are dropped.
//!
//! The prototypes come from the CDF 9/7 biorthogonal filter pair. The
//! reconstruction-side pair is used (the 7-tap lowpass for phi, its
//! companion highpass built from the 9-tap filter for psi), since the atoms
//! serve as synthesis building blocks. Prototypes are computed once by
//! cascade iteration on a dyadic grid and sampled by linear interpolation.

use crate::dictionary::Dictionary;
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Filter taps for the CDF 9/7 pair, normalized so each lowpass sums to
/// sqrt(2). Indexed symmetrically around zero.
pub mod cdf97 {
    /// 9-tap analysis lowpass, taps for n = -4..=4.
    pub const ANALYSIS_LOWPASS: [f64; 9] = [
        0.037_828_455_506_995_5,
        -0.023_849_465_019_380_0,
        -0.110_624_404_418_423_4,
        0.377_402_855_612_653_7,
        0.852_698_679_009_403_4,
        0.377_402_855_612_653_7,
        -0.110_624_404_418_423_4,
        -0.023_849_465_019_380_0,
        0.037_828_455_506_995_5,
    ];
    /// Leftmost index of `ANALYSIS_LOWPASS`.
    pub const ANALYSIS_OFFSET: i32 = -4;

    /// 7-tap synthesis lowpass, taps for n = -3..=3.
    pub const SYNTHESIS_LOWPASS: [f64; 7] = [
        -0.064_538_882_628_938_4,
        -0.040_689_417_609_558_4,
        0.418_092_273_222_212_4,
        0.788_485_616_405_665_1,
        0.418_092_273_222_212_4,
        -0.040_689_417_609_558_4,
        -0.064_538_882_628_938_4,
    ];
    /// Leftmost index of `SYNTHESIS_LOWPASS`.
    pub const SYNTHESIS_OFFSET: i32 = -3;

    /// Synthesis highpass g[n] = (-1)^n h~[1-n] for n = -3..=5, derived from
    /// the analysis lowpass. The wavelet is psi(x) = sqrt(2) sum g[n] phi(2x-n).
    pub fn synthesis_highpass() -> ([f64; 9], i32) {
        let mut g = [0.0; 9];
        for (i, slot) in g.iter_mut().enumerate() {
            let n = i as i32 - 3;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let idx = (1 - n) - ANALYSIS_OFFSET;
            *slot = sign * ANALYSIS_LOWPASS[idx as usize];
        }
        (g, -3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveletFamily {
    Cdf97,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDictConfig {
    pub family: WaveletFamily,
    /// Translation step b (a dyadic rational like 0.25).
    pub b: f64,
    /// Coarsest scale; the scaling function is translated at this scale.
    pub j0: u32,
    /// Finest scale; wavelets run over scales j0+1..=j_max.
    pub j_max: u32,
    pub signal_length: usize,
}

impl WaveletDictConfig {
    /// The screening configuration: b = 0.25, scaling at j0 = 2, wavelets at
    /// scales 3..6.
    pub fn screening_default(signal_length: usize) -> Self {
        Self {
            family: WaveletFamily::Cdf97,
            b: 0.25,
            j0: 2,
            j_max: 6,
            signal_length,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.b.is_finite() || self.b <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "translation step b must be positive, got {}",
                self.b
            )));
        }
        if self.j0 > self.j_max {
            return Err(Error::InvalidInput(format!(
                "j0 = {} exceeds j_max = {}",
                self.j0, self.j_max
            )));
        }
        if self.j_max > 24 {
            return Err(Error::InvalidInput(format!(
                "j_max = {} is unreasonably fine",
                self.j_max
            )));
        }
        if self.signal_length == 0 {
            return Err(Error::EmptyInput("signal_length must be positive".into()));
        }
        Ok(())
    }
}

/// A prototype function sampled on a dyadic grid, evaluable anywhere on its
/// support by linear interpolation (zero outside).
#[derive(Debug, Clone)]
pub struct Prototype {
    samples: Vec<f64>,
    support_start: f64,
    step: f64,
}

impl Prototype {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.support_start,
            self.support_start + self.step * (self.samples.len() - 1) as f64,
        )
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.support_start) / self.step;
        if t <= 0.0 || t >= (self.samples.len() - 1) as f64 {
            return 0.0;
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }
}

/// Iterates the two-scale relation phi(x) = sum_n c[n] phi(2x - n), with
/// c[n] = sqrt(2) h[n], on a grid of 2^log2_density points per unit, until
/// successive iterates differ by less than 1e-6 in sup norm.
fn cascade(
    lowpass: &[f64],
    offset: i32,
    log2_density: u32,
) -> Result<Prototype> {
    let density = 1usize << log2_density;
    let supp_lo = offset;
    let supp_hi = offset + lowpass.len() as i32 - 1;
    let len = (supp_hi - supp_lo) as usize * density + 1;
    let step = 1.0 / density as f64;

    // Start from the hat function on [-1, 1] (unit integral).
    let mut phi: Vec<f64> = (0..len)
        .map(|i| {
            let x = supp_lo as f64 + i as f64 * step;
            (1.0 - x.abs()).max(0.0)
        })
        .collect();

    let mask: Vec<f64> = lowpass.iter().map(|h| h * std::f64::consts::SQRT_2).collect();
    let mut next = vec![0.0; len];
    for _round in 0..200 {
        for (i, slot) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &c) in mask.iter().enumerate() {
                let n = supp_lo + t as i32;
                // Index of 2x_i - n on the same grid.
                let j = (supp_lo - n) as i64 * density as i64 + 2 * i as i64;
                if j >= 0 && (j as usize) < len {
                    acc += c * phi[j as usize];
                }
            }
            *slot = acc;
        }
        let diff = phi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut phi, &mut next);
        if diff < 1e-6 {
            return Ok(Prototype {
                samples: phi,
                support_start: supp_lo as f64,
                step,
            });
        }
    }
    Err(Error::InvalidInput(
        "cascade iteration did not converge".into(),
    ))
}

/// Computes the scaling and wavelet prototypes of a family by cascade
/// iteration, sampled at 2^log2_samples_per_unit points per unit interval.
pub fn prototype_waveforms(
    family: WaveletFamily,
    log2_samples_per_unit: u32,
) -> Result<(Prototype, Prototype)> {
    if !(1..=16).contains(&log2_samples_per_unit) {
        return Err(Error::InvalidInput(format!(
            "log2 sampling density {log2_samples_per_unit} out of range 1..=16"
        )));
    }
    match family {
        WaveletFamily::Cdf97 => {
            let phi = cascade(
                &cdf97::SYNTHESIS_LOWPASS,
                cdf97::SYNTHESIS_OFFSET,
                log2_samples_per_unit,
            )?;
            let (g, g_offset) = cdf97::synthesis_highpass();

            // psi(x) = sqrt(2) sum_n g[n] phi(2x - n) on [-3, 4].
            let density = 1usize << log2_samples_per_unit;
            let step = 1.0 / density as f64;
            let (phi_lo, _) = phi.support();
            let psi_lo = (phi_lo + g_offset as f64) / 2.0;
            let psi_hi = (3.0 + (g_offset + g.len() as i32 - 1) as f64) / 2.0;
            let len = ((psi_hi - psi_lo) / step).round() as usize + 1;
            let samples: Vec<f64> = (0..len)
                .map(|i| {
                    let x = psi_lo + i as f64 * step;
                    let mut acc = 0.0;
                    for (t, &gn) in g.iter().enumerate() {
                        let n = (g_offset + t as i32) as f64;
                        acc += gn * phi.eval(2.0 * x - n);
                    }
                    acc * std::f64::consts::SQRT_2
                })
                .collect();
            let psi = Prototype {
                samples,
                support_start: psi_lo,
                step,
            };
            Ok((phi, psi))
        }
    }
}

/// Cascade grid density used for dictionary construction.
const PROTOTYPE_LOG2_DENSITY: u32 = 7;

/// Minimum in-window energy (pre-normalization norm) for a truncated atom
/// to be kept.
const MIN_ATOM_NORM: f64 = 1e-6;

fn translation_range(scale: f64, b: f64, supp: (f64, f64)) -> (i64, i64) {
    // Atom prototype(scale*x - b*k) is nonzero for some x in [0, 1) iff
    // b*k falls in (0 - supp_hi, scale - supp_lo).
    let lo = (-supp.1) / b;
    let hi = (scale - supp.0) / b;
    (lo.ceil() as i64, hi.floor() as i64)
}

/// Builds the dictionary: scaling translates at j0, wavelet translates at
/// every scale in j0+1..=j_max, truncated to the window, low-energy atoms
/// dropped, every column normalized. Construction is deterministic.
pub fn build_wavelet_dictionary(config: &WaveletDictConfig) -> Result<Dictionary> {
    config.validate()?;
    let (phi, psi) = prototype_waveforms(config.family, PROTOTYPE_LOG2_DENSITY)?;
    let n = config.signal_length;

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut push_atoms = |proto: &Prototype, scale_pow: u32| {
        let scale = (1u64 << scale_pow) as f64;
        let (k_lo, k_hi) = translation_range(scale, config.b, proto.support());
        for k in k_lo..=k_hi {
            let shift = config.b * k as f64;
            let mut col = vec![0.0; n];
            for (i, slot) in col.iter_mut().enumerate() {
                let x = i as f64 / n as f64;
                *slot = proto.eval(scale * x - shift);
            }
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < MIN_ATOM_NORM {
                continue; // negligible energy inside the window
            }
            for v in &mut col {
                *v /= norm;
            }
            columns.push(col);
        }
    };

    push_atoms(&phi, config.j0);
    for j in (config.j0 + 1)..=config.j_max {
        push_atoms(&psi, j);
    }

    if columns.len() < n {
        return Err(Error::InvalidInput(format!(
            "wavelet dictionary has {} atoms for signal length {n}; configure more scales or translations",
            columns.len()
        )));
    }
    let flat: Vec<f64> = columns.iter().flatten().copied().collect();
    Dictionary::new(DMatrix::from_column_slice(n, columns.len(), &flat))
}
