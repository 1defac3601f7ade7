//! The `SBC1` code file.
//!
//! Layout (little-endian): magic `SBC1`, u32 k, u32 beat count, then per
//! beat u32 Ω, u8 label code, u32 nnz and nnz triplets of (u32 row, u32
//! col, f32 value) in (col, row) order. Values are stored in single
//! precision; beat ids are the positions in the file.

use super::{SparseCode, Triplet};
use crate::error::{Error, Result};
use crate::ingest::BeatLabel;

const MAGIC: &[u8; 4] = b"SBC1";

#[derive(Clone, Debug, PartialEq)]
pub struct CodeFile {
    pub k: usize,
    pub codes: Vec<SparseCode>,
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::shape(format!("{what} {v} does not fit the code file format")))
}

/// Serializes codes that all share atom count `k`.
///
/// Values are narrowed to f32; a value that is not representable as a
/// finite non-zero f32 is rejected rather than silently altered.
pub fn encode_codes(k: usize, codes: &[SparseCode]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&to_u32(k, "atom count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(codes.len(), "beat count")?.to_le_bytes());
    for (i, code) in codes.iter().enumerate() {
        if code.k() != k {
            return Err(Error::shape(format!("code {i} has k = {}, file has k = {k}", code.k())));
        }
        out.extend_from_slice(&to_u32(code.omega(), "window count")?.to_le_bytes());
        out.push(code.label.code());
        out.extend_from_slice(&to_u32(code.nnz(), "triplet count")?.to_le_bytes());
        for t in code.triplets() {
            let v = t.value as f32;
            if v == 0.0 || !v.is_finite() {
                return Err(Error::DegenerateInput(format!(
                    "code {i}: value {} is not representable in single precision",
                    t.value
                )));
            }
            out.extend_from_slice(&(t.row as u32).to_le_bytes());
            out.extend_from_slice(&(t.col as u32).to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::CorruptFile(format!("SBC1 truncated at byte {} of {}", self.pos, self.bytes.len()))
        })?;
        self.pos = end;
        Ok(slice.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take()?) as usize)
    }
}

pub fn decode_codes(bytes: &[u8]) -> Result<CodeFile> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>().map_err(|_| Error::CorruptFile("missing SBC1 header".into()))? != MAGIC {
        return Err(Error::CorruptFile("bad SBC1 magic".into()));
    }
    let k = r.u32()?;
    let count = r.u32()?;
    let mut codes = Vec::with_capacity(count.min(1 << 16));
    for beat_id in 0..count {
        let omega = r.u32()?;
        let [code] = r.take::<1>()?;
        let label = BeatLabel::from_code(code)
            .ok_or_else(|| Error::CorruptFile(format!("beat {beat_id}: unknown label code {code}")))?;
        let nnz = r.u32()?;
        let mut triplets = Vec::with_capacity(nnz.min(1 << 16));
        for _ in 0..nnz {
            let row = r.u32()?;
            let col = r.u32()?;
            let value = f32::from_le_bytes(r.take()?) as f64;
            triplets.push(Triplet { row, col, value });
        }
        let canonical = triplets.windows(2).all(|w| (w[0].col, w[0].row) < (w[1].col, w[1].row));
        let valid = triplets
            .iter()
            .all(|t| t.row < k && t.col < omega && t.value != 0.0 && t.value.is_finite());
        if !canonical || !valid {
            return Err(Error::CorruptFile(format!("beat {beat_id}: invalid triplet list")));
        }
        codes.push(SparseCode::new(k, omega, triplets, label, beat_id)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::CorruptFile(format!(
            "{} trailing bytes after SBC1 body",
            bytes.len() - r.pos
        )));
    }
    Ok(CodeFile { k, codes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SparseCode> {
        let t = |row, col, value| Triplet { row, col, value };
        vec![
            SparseCode::new(6, 11, vec![t(1, 0, 0.5), t(5, 10, -2.25)], BeatLabel::Normal, 0).unwrap(),
            SparseCode::new(6, 11, vec![], BeatLabel::VentricularPremature, 1).unwrap(),
            SparseCode::new(6, 3, vec![t(0, 2, 1.0)], BeatLabel::LeftBundleBranchBlock, 2).unwrap(),
        ]
    }

    #[test]
    fn layout_and_roundtrip() {
        let codes = sample();
        let bytes = encode_codes(6, &codes).unwrap();
        assert_eq!(&bytes[..4], b"SBC1");
        assert_eq!(&bytes[4..12], &[6, 0, 0, 0, 3, 0, 0, 0]);
        // first beat: Ω = 11, label 0, nnz 2, then (1, 0, 0.5)
        assert_eq!(&bytes[12..21], &[11, 0, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&bytes[21..29], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[29..33], &0.5f32.to_le_bytes());
        let back = decode_codes(&bytes).unwrap();
        assert_eq!(back.k, 6);
        assert_eq!(back.codes, codes);
        assert_eq!(encode_codes(6, &back.codes).unwrap(), bytes);
    }

    #[test]
    fn empty_list() {
        let bytes = encode_codes(4, &[]).unwrap();
        assert_eq!(bytes.len(), 12);
        let back = decode_codes(&bytes).unwrap();
        assert!(back.codes.is_empty());
        assert_eq!(back.k, 4);
    }

    #[test]
    fn every_truncation_fails() {
        let bytes = encode_codes(6, &sample()).unwrap();
        for len in 0..bytes.len() {
            assert!(matches!(decode_codes(&bytes[..len]), Err(Error::CorruptFile(_))), "length {len}");
        }
    }

    #[test]
    fn rejects_bad_content() {
        let bytes = encode_codes(6, &sample()).unwrap();
        let mut bad = bytes.clone();
        bad[3] = b'2';
        assert!(matches!(decode_codes(&bad), Err(Error::CorruptFile(_))));
        let mut bad = bytes.clone();
        bad[16] = 200; // label code
        assert!(matches!(decode_codes(&bad), Err(Error::CorruptFile(_))));
        let mut bad = bytes.clone();
        bad[21] = 9; // row 9 >= k
        assert!(matches!(decode_codes(&bad), Err(Error::CorruptFile(_))));
        let mut bad = bytes;
        bad.push(0);
        assert!(matches!(decode_codes(&bad), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn mismatched_k_and_unrepresentable_values() {
        assert!(matches!(encode_codes(7, &sample()), Err(Error::ShapeMismatch(_))));
        let tiny = SparseCode::new(2, 1, vec![Triplet { row: 0, col: 0, value: 1e-60 }], BeatLabel::Normal, 0).unwrap();
        assert!(encode_codes(2, &[tiny]).is_err());
    }
}
