//! Beat annotations from the standard binary encoding or a CSV fallback.
//!
//! The binary stream is a sequence of 16-bit little-endian words: the top 6
//! bits are an annotation code and the bottom 10 a sample-index increment
//! relative to the previous annotation. Codes 59..=63 are containers (long
//! skips, metadata, aux strings) rather than annotations; a zero word ends
//! the stream.

use crate::beats::BeatClass;
use crate::error::Error;
use crate::Result;

/// Annotation codes and their display symbols, per the standard code table.
const SYMBOLS: [(u16, char); 39] = [
    (1, 'N'),
    (2, 'L'),
    (3, 'R'),
    (4, 'a'),
    (5, 'V'),
    (6, 'F'),
    (7, 'J'),
    (8, 'A'),
    (9, 'S'),
    (10, 'E'),
    (11, 'j'),
    (12, '/'),
    (13, 'Q'),
    (14, '~'),
    (16, '|'),
    (18, 's'),
    (19, 'T'),
    (20, '*'),
    (21, 'D'),
    (22, '"'),
    (23, '='),
    (24, 'p'),
    (25, 'B'),
    (26, '^'),
    (27, 't'),
    (28, '+'),
    (29, 'u'),
    (30, '?'),
    (31, '!'),
    (32, '['),
    (33, ']'),
    (34, 'e'),
    (35, 'n'),
    (36, '@'),
    (37, 'x'),
    (38, 'f'),
    (39, '('),
    (40, ')'),
    (41, 'r'),
];

const CODE_SKIP: u16 = 59;
const CODE_NUM: u16 = 60;
const CODE_SUB: u16 = 61;
const CODE_CHN: u16 = 62;
const CODE_AUX: u16 = 63;

/// N, L and R count as normal; V and E as ventricular; everything else,
/// including non-beat annotations, is Other.
pub fn map_symbol(symbol: char) -> BeatClass {
    match symbol {
        'N' | 'L' | 'R' => BeatClass::N,
        'V' | 'E' => BeatClass::V,
        _ => BeatClass::Other,
    }
}

fn known_symbol(symbol: char) -> bool {
    SYMBOLS.iter().any(|&(_, s)| s == symbol)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatAnnotation {
    pub sample_index: u64,
    pub symbol: char,
    pub mapped_class: BeatClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotations {
    /// All annotations, ordered by sample index.
    pub entries: Vec<BeatAnnotation>,
    /// Entries whose symbol is outside the standard alphabet.
    pub unknown_symbols: usize,
}

impl Annotations {
    fn finish(mut entries: Vec<BeatAnnotation>, unknown_symbols: usize) -> Self {
        entries.sort_by_key(|a| a.sample_index);
        Self {
            entries,
            unknown_symbols,
        }
    }
}

fn malformed(offset: usize, detail: impl Into<String>) -> Error {
    Error::Malformed {
        what: "annotation data",
        offset,
        detail: detail.into(),
    }
}

/// Parses the binary annotation stream. A missing zero terminator is
/// tolerated; running past the end inside a container is not.
pub fn parse_binary_annotations(data: &[u8]) -> Result<Annotations> {
    let mut offset = 0usize;
    let read_word = |offset: &mut usize| -> Result<Option<u16>> {
        match data.get(*offset..*offset + 2) {
            Some(b) => {
                *offset += 2;
                Ok(Some(u16::from_le_bytes([b[0], b[1]])))
            }
            None if *offset == data.len() => Ok(None),
            _ => Err(malformed(*offset, "truncated 16-bit word")),
        }
    };

    let mut time: i64 = 0;
    let mut entries = Vec::new();
    let mut unknown = 0usize;
    while let Some(word) = read_word(&mut offset)? {
        let code = word >> 10;
        let delta = word & 0x3FF;
        match code {
            0 if delta == 0 => break,
            CODE_SKIP => {
                if delta != 0 {
                    return Err(malformed(offset - 2, "skip word with nonzero increment"));
                }
                let high = read_word(&mut offset)?
                    .ok_or_else(|| malformed(offset, "skip interval cut short"))?;
                let low = read_word(&mut offset)?
                    .ok_or_else(|| malformed(offset, "skip interval cut short"))?;
                // 32-bit interval stored high word first
                let interval = ((u32::from(high) << 16) | u32::from(low)) as i32;
                time += i64::from(interval);
            }
            CODE_NUM | CODE_SUB | CODE_CHN => {} // metadata for the previous annotation
            CODE_AUX => {
                let len = delta as usize;
                let padded = len + (len & 1);
                if offset + padded > data.len() {
                    return Err(malformed(offset, "aux string cut short"));
                }
                offset += padded;
            }
            code => {
                time += i64::from(delta);
                if time < 0 {
                    return Err(malformed(offset - 2, "annotation time went negative"));
                }
                let symbol = match SYMBOLS.iter().find(|&&(c, _)| c == code) {
                    Some(&(_, s)) => s,
                    None => {
                        unknown += 1;
                        '?'
                    }
                };
                entries.push(BeatAnnotation {
                    sample_index: time as u64,
                    symbol,
                    mapped_class: map_symbol(symbol),
                });
            }
        }
    }
    Ok(Annotations::finish(entries, unknown))
}

/// CSV fallback: `sample_index,symbol` per line. `#` comments and a
/// `sample_index,symbol` header line are tolerated.
pub fn parse_csv_annotations(text: &str) -> Result<Annotations> {
    let mut entries = Vec::new();
    let mut unknown = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if i == 0 && line.eq_ignore_ascii_case("sample_index,symbol") {
            continue;
        }
        let (idx_str, sym_str) = line.split_once(',').ok_or_else(|| Error::ParseLine {
            line: i + 1,
            detail: "expected sample_index,symbol".into(),
        })?;
        let sample_index: u64 = idx_str.trim().parse().map_err(|_| Error::ParseLine {
            line: i + 1,
            detail: format!("bad sample index {:?}", idx_str.trim()),
        })?;
        let sym_str = sym_str.trim();
        let mut chars = sym_str.chars();
        let symbol = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => {
                return Err(Error::ParseLine {
                    line: i + 1,
                    detail: format!("symbol must be one character, got {sym_str:?}"),
                })
            }
        };
        if !known_symbol(symbol) {
            unknown += 1;
        }
        entries.push(BeatAnnotation {
            sample_index,
            symbol,
            mapped_class: map_symbol(symbol),
        });
    }
    Ok(Annotations::finish(entries, unknown))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(code: u16, delta: u16) -> [u8; 2] {
        ((code << 10) | delta).to_le_bytes()
    }

    #[test]
    fn symbol_mapping_is_total() {
        assert_eq!(map_symbol('N'), BeatClass::N);
        assert_eq!(map_symbol('L'), BeatClass::N);
        assert_eq!(map_symbol('R'), BeatClass::N);
        assert_eq!(map_symbol('V'), BeatClass::V);
        assert_eq!(map_symbol('E'), BeatClass::V);
        for other in ['A', 'a', 'F', '/', '+', '~', 'Q', '%'] {
            assert_eq!(map_symbol(other), BeatClass::Other, "symbol {other}");
        }
    }

    #[test]
    fn binary_deltas_accumulate() {
        let mut data = Vec::new();
        data.extend_from_slice(&word(1, 77)); // N at 77
        data.extend_from_slice(&word(5, 100)); // V at 177
        data.extend_from_slice(&word(8, 3)); // A at 180
        data.extend_from_slice(&word(0, 0));
        let ann = parse_binary_annotations(&data).unwrap();
        assert_eq!(ann.entries.len(), 3);
        assert_eq!(ann.entries[0].sample_index, 77);
        assert_eq!(ann.entries[0].mapped_class, BeatClass::N);
        assert_eq!(ann.entries[1].sample_index, 177);
        assert_eq!(ann.entries[1].symbol, 'V');
        assert_eq!(ann.entries[2].mapped_class, BeatClass::Other);
        assert_eq!(ann.unknown_symbols, 0);
    }

    #[test]
    fn skip_container_moves_time() {
        let mut data = Vec::new();
        data.extend_from_slice(&word(CODE_SKIP, 0));
        let interval: i32 = 100_000;
        let bits = interval as u32;
        data.extend_from_slice(&((bits >> 16) as u16).to_le_bytes());
        data.extend_from_slice(&(bits as u16).to_le_bytes());
        data.extend_from_slice(&word(2, 5)); // L at 100005
        data.extend_from_slice(&word(0, 0));
        let ann = parse_binary_annotations(&data).unwrap();
        assert_eq!(ann.entries.len(), 1);
        assert_eq!(ann.entries[0].sample_index, 100_005);
        assert_eq!(ann.entries[0].mapped_class, BeatClass::N);
    }

    #[test]
    fn metadata_and_aux_are_skipped_without_advancing_time() {
        let mut data = Vec::new();
        data.extend_from_slice(&word(1, 10));
        data.extend_from_slice(&word(CODE_NUM, 1));
        data.extend_from_slice(&word(CODE_SUB, 2));
        data.extend_from_slice(&word(CODE_CHN, 1));
        data.extend_from_slice(&word(CODE_AUX, 3));
        data.extend_from_slice(b"abc\0"); // 3 bytes + pad
        data.extend_from_slice(&word(10, 7)); // E at 17
        data.extend_from_slice(&word(0, 0));
        let ann = parse_binary_annotations(&data).unwrap();
        assert_eq!(ann.entries.len(), 2);
        assert_eq!(ann.entries[1].sample_index, 17);
        assert_eq!(ann.entries[1].symbol, 'E');
        assert_eq!(ann.entries[1].mapped_class, BeatClass::V);
    }

    #[test]
    fn unknown_code_is_counted() {
        let mut data = Vec::new();
        data.extend_from_slice(&word(47, 5));
        data.extend_from_slice(&word(0, 0));
        let ann = parse_binary_annotations(&data).unwrap();
        assert_eq!(ann.unknown_symbols, 1);
        assert_eq!(ann.entries[0].symbol, '?');
        assert_eq!(ann.entries[0].mapped_class, BeatClass::Other);
    }

    #[test]
    fn binary_truncation_errors_carry_offsets() {
        assert!(matches!(
            parse_binary_annotations(&[0x01]),
            Err(Error::Malformed { offset: 0, .. })
        ));
        let mut data = Vec::new();
        data.extend_from_slice(&word(CODE_SKIP, 0));
        data.extend_from_slice(&0u16.to_le_bytes()); // only half the interval
        assert!(matches!(
            parse_binary_annotations(&data),
            Err(Error::Malformed { .. })
        ));
        let mut data = Vec::new();
        data.extend_from_slice(&word(CODE_AUX, 9));
        data.extend_from_slice(b"abc");
        assert!(matches!(
            parse_binary_annotations(&data),
            Err(Error::Malformed { .. })
        ));
    }

    #[test]
    fn missing_terminator_is_tolerated() {
        let data = word(1, 4);
        let ann = parse_binary_annotations(&data).unwrap();
        assert_eq!(ann.entries.len(), 1);
    }

    #[test]
    fn csv_round_trip_and_ordering() {
        let ann = parse_csv_annotations("sample_index,symbol\n100,V\n77,N\n99,L\n").unwrap();
        assert_eq!(
            ann.entries.iter().map(|a| a.sample_index).collect::<Vec<_>>(),
            vec![77, 99, 100]
        );
        assert_eq!(ann.entries[0].mapped_class, BeatClass::N);
        assert_eq!(ann.entries[1].mapped_class, BeatClass::N);
        assert_eq!(ann.entries[2].mapped_class, BeatClass::V);
    }

    #[test]
    fn csv_errors_and_unknowns() {
        assert!(matches!(
            parse_csv_annotations("77;N\n"),
            Err(Error::ParseLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv_annotations("x,N\n"),
            Err(Error::ParseLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv_annotations("7,NV\n"),
            Err(Error::ParseLine { line: 1, .. })
        ));
        let ann = parse_csv_annotations("5,A\n9,%\n").unwrap();
        assert_eq!(ann.unknown_symbols, 1);
        assert_eq!(ann.entries[0].mapped_class, BeatClass::Other);
    }
}
