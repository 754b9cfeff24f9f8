//! Two-channel 12-bit signal decoding and the text header that describes it.
//!
//! Format 212 packs two 12-bit two's-complement samples into three bytes:
//! the first sample is byte 0 plus the low nibble of byte 1 as its high
//! bits, the second is byte 2 plus the high nibble of byte 1.

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInfo {
    pub name: String,
    /// ADC units per physical unit; physical = (adc - baseline) / gain.
    pub gain: f64,
    pub baseline: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub record_id: String,
    pub sampling_rate: f64,
    /// Raw ADC samples, one vector per channel, equal lengths.
    pub signals: Vec<Vec<i32>>,
    pub channels: Vec<ChannelInfo>,
    /// Non-fatal findings: checksum or sample-count mismatches.
    pub warnings: Vec<String>,
}

impl EcgRecord {
    pub fn len(&self) -> usize {
        self.signals.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One channel converted to physical units.
    pub fn physical(&self, channel: usize) -> Result<Vec<f64>> {
        let signal = self.signals.get(channel).ok_or_else(|| {
            Error::InvalidInput(format!(
                "channel {channel} out of range; record has {}",
                self.signals.len()
            ))
        })?;
        let info = &self.channels[channel];
        Ok(signal
            .iter()
            .map(|&s| (s - info.baseline) as f64 / info.gain)
            .collect())
    }
}

/// Splits a packed triplet into its two signed samples.
pub fn decode_triplet(bytes: &[u8; 3]) -> (i32, i32) {
    let s1 = i32::from(bytes[0]) | (i32::from(bytes[1] & 0x0F) << 8);
    let s2 = i32::from(bytes[2]) | (i32::from(bytes[1] & 0xF0) << 4);
    (sign_extend_12(s1), sign_extend_12(s2))
}

/// Packs two samples into a triplet; both must fit in 12 signed bits.
pub fn encode_sample_pair(s1: i32, s2: i32) -> Result<[u8; 3]> {
    for s in [s1, s2] {
        if !(-2048..=2047).contains(&s) {
            return Err(Error::InvalidInput(format!(
                "sample {s} outside the 12-bit range [-2048, 2047]"
            )));
        }
    }
    let u1 = (s1 & 0xFFF) as u32;
    let u2 = (s2 & 0xFFF) as u32;
    Ok([
        (u1 & 0xFF) as u8,
        ((u1 >> 8) as u8 & 0x0F) | (((u2 >> 8) as u8 & 0x0F) << 4),
        (u2 & 0xFF) as u8,
    ])
}

fn sign_extend_12(v: i32) -> i32 {
    if v & 0x800 != 0 {
        v - 4096
    } else {
        v
    }
}

struct SignalSpec {
    gain: f64,
    baseline: Option<i32>,
    adc_zero: i32,
    init_value: Option<i32>,
    checksum: Option<i32>,
    name: String,
}

/// Header lines: a record line `id n_signals sampling_rate [n_samples]`,
/// then one line per signal
/// `file format gain[(baseline)][/units] [adc_res [adc_zero [init [checksum [blk [name]]]]]]`.
/// Comment lines start with `#`.
fn parse_header(header: &str) -> Result<(String, f64, Option<usize>, Vec<SignalSpec>)> {
    let mut lines = header
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line_no, record_line) = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("header has no record line".into()))?;
    let tokens: Vec<&str> = record_line.split_whitespace().collect();
    if tokens.len() < 2 {
        return Err(Error::ParseLine {
            line: line_no,
            detail: "record line needs at least an id and a signal count".into(),
        });
    }
    let record_id = tokens[0].split('/').next().unwrap_or(tokens[0]).to_string();
    let n_signals: usize = tokens[1].parse().map_err(|_| Error::ParseLine {
        line: line_no,
        detail: format!("bad signal count {:?}", tokens[1]),
    })?;
    let sampling_rate = match tokens.get(2) {
        // the rate may carry a counter frequency after a slash
        Some(t) => t
            .split('/')
            .next()
            .unwrap_or(t)
            .parse::<f64>()
            .map_err(|_| Error::ParseLine {
                line: line_no,
                detail: format!("bad sampling rate {t:?}"),
            })?,
        None => 250.0,
    };
    if !(sampling_rate > 0.0) {
        return Err(Error::ParseLine {
            line: line_no,
            detail: format!("sampling rate must be positive, got {sampling_rate}"),
        });
    }
    let n_samples = match tokens.get(3) {
        Some(t) => Some(t.parse::<usize>().map_err(|_| Error::ParseLine {
            line: line_no,
            detail: format!("bad sample count {t:?}"),
        })?),
        None => None,
    };

    let mut specs = Vec::with_capacity(n_signals);
    for ch in 0..n_signals {
        let (line_no, line) = lines.next().ok_or_else(|| Error::ParseLine {
            line: 0,
            detail: format!("header ends before signal line {ch}"),
        })?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(Error::ParseLine {
                line: line_no,
                detail: "signal line needs a file name and a format".into(),
            });
        }
        let format: u32 = tokens[1]
            .chars()
            .take_while(|c| c.is_ascii_digit())
            .collect::<String>()
            .parse()
            .map_err(|_| Error::ParseLine {
                line: line_no,
                detail: format!("bad signal format {:?}", tokens[1]),
            })?;
        if format != 212 {
            return Err(Error::UnsupportedFormat(format!(
                "signal format {format}; only format 212 is read"
            )));
        }
        let (gain, baseline) = match tokens.get(2) {
            Some(t) => parse_gain(t, line_no)?,
            None => (200.0, None),
        };
        let parse_int = |idx: usize| -> Result<Option<i32>> {
            match tokens.get(idx) {
                Some(t) => Ok(Some(t.parse::<i32>().map_err(|_| Error::ParseLine {
                    line: line_no,
                    detail: format!("bad integer field {t:?}"),
                })?)),
                None => Ok(None),
            }
        };
        let adc_zero = parse_int(4)?.unwrap_or(0);
        let init_value = parse_int(5)?;
        let checksum = parse_int(6)?;
        let name = if tokens.len() > 8 {
            tokens[8..].join(" ")
        } else {
            format!("ch{ch}")
        };
        specs.push(SignalSpec {
            gain,
            baseline,
            adc_zero,
            init_value,
            checksum,
            name,
        });
    }
    if specs.len() != 2 {
        return Err(Error::UnsupportedFormat(format!(
            "{} signals declared; format 212 packs exactly two",
            specs.len()
        )));
    }
    Ok((record_id, sampling_rate, n_samples, specs))
}

/// Gain token forms: `200`, `200(1024)`, `200/mV`, `200(1024)/mV`.
/// Gain 0 means the conventional default of 200.
fn parse_gain(token: &str, line: usize) -> Result<(f64, Option<i32>)> {
    let no_units = token.split('/').next().unwrap_or(token);
    let (gain_str, baseline) = match no_units.split_once('(') {
        Some((g, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| Error::ParseLine {
                line,
                detail: format!("unclosed baseline in gain token {token:?}"),
            })?;
            let b = inner.parse::<i32>().map_err(|_| Error::ParseLine {
                line,
                detail: format!("bad baseline in gain token {token:?}"),
            })?;
            (g, Some(b))
        }
        None => (no_units, None),
    };
    let mut gain: f64 = gain_str.parse().map_err(|_| Error::ParseLine {
        line,
        detail: format!("bad gain {token:?}"),
    })?;
    if gain == 0.0 {
        gain = 200.0;
    }
    if !gain.is_finite() || gain < 0.0 {
        return Err(Error::ParseLine {
            line,
            detail: format!("gain must be finite and nonnegative, got {gain}"),
        });
    }
    Ok((gain, baseline))
}

/// Decodes a two-channel record. Signal metadata (gain, baseline, declared
/// length, per-channel checksum) comes from the header text; mismatched
/// checksums and sample counts are reported as warnings, not errors.
pub fn parse_format212(header: &str, data: &[u8]) -> Result<EcgRecord> {
    let (record_id, sampling_rate, n_samples, specs) = parse_header(header)?;
    if data.len() % 3 != 0 {
        return Err(Error::Malformed {
            what: "signal data",
            offset: data.len() - data.len() % 3,
            detail: format!("truncated sample triplet ({} trailing bytes)", data.len() % 3),
        });
    }
    let n = data.len() / 3;
    let mut ch0 = Vec::with_capacity(n);
    let mut ch1 = Vec::with_capacity(n);
    for triplet in data.chunks_exact(3) {
        let (s1, s2) = decode_triplet(triplet.try_into().expect("chunk of 3"));
        ch0.push(s1);
        ch1.push(s2);
    }

    let mut warnings = Vec::new();
    if let Some(declared) = n_samples {
        if declared != n {
            warnings.push(format!(
                "header declares {declared} samples per channel but the file holds {n}"
            ));
        }
    }
    for (ch, (spec, signal)) in specs.iter().zip([&ch0, &ch1]).enumerate() {
        if let Some(expected) = spec.checksum {
            let sum: i16 = signal.iter().fold(0i16, |acc, &s| acc.wrapping_add(s as i16));
            if i32::from(sum) != expected {
                warnings.push(format!(
                    "channel {ch} checksum mismatch: header {expected}, computed {sum}"
                ));
            }
        }
        if let (Some(init), Some(&first)) = (spec.init_value, signal.first()) {
            if init != first {
                warnings.push(format!(
                    "channel {ch} first sample {first} differs from header init value {init}"
                ));
            }
        }
    }

    let channels = specs
        .into_iter()
        .map(|s| ChannelInfo {
            baseline: s.baseline.unwrap_or(s.adc_zero),
            gain: s.gain,
            name: s.name,
        })
        .collect();
    Ok(EcgRecord {
        record_id,
        sampling_rate,
        signals: vec![ch0, ch1],
        channels,
        warnings,
    })
}

/// Portable fallback: one integer ADC sample per line, `#` comments
/// allowed. The channel reads back in raw units (gain 1, baseline 0).
pub fn parse_signal_csv(record_id: &str, text: &str, sampling_rate: f64) -> Result<EcgRecord> {
    if !(sampling_rate > 0.0) || !sampling_rate.is_finite() {
        return Err(Error::InvalidInput(format!(
            "sampling rate must be positive, got {sampling_rate}"
        )));
    }
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: i32 = line.parse().map_err(|_| Error::ParseLine {
            line: i + 1,
            detail: format!("bad sample {line:?}"),
        })?;
        samples.push(v);
    }
    Ok(EcgRecord {
        record_id: record_id.into(),
        sampling_rate,
        signals: vec![samples],
        channels: vec![ChannelInfo {
            name: "csv".into(),
            gain: 1.0,
            baseline: 0,
        }],
        warnings: Vec::new(),
    })
}
