//! Overcomplete dictionaries: online learning, the k-means baseline and the
//! `SBD1` file format.

mod kmeans;
mod online;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse_coding::check_unit_ball;

pub use kmeans::{assign_nearest, kmeans_vq, KMeansResult};
pub use online::{
    default_lambda, init_dictionary, train_online, update_atoms, update_stats, AtomUpdate, BatchLog, OnlineStats,
    TrainConfig, TrainOutput, DEAD_ATOM_EPS,
};

const SBD_MAGIC: &[u8; 4] = b"SBD1";

/// A d×k matrix whose columns (atoms) lie in the unit ℓ2 ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
}

impl Dictionary {
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        if atoms.ncols() == 0 || atoms.nrows() == 0 {
            return Err(Error::shape("dictionary must have at least one row and one atom"));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite dictionary entry".into()));
        }
        check_unit_ball(&atoms)?;
        Ok(Dictionary { atoms })
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn into_atoms(self) -> DMatrix<f64> {
        self.atoms
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Atom count k.
    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_sbd(&self.atoms)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Dictionary::new(decode_sbd(bytes)?)
    }
}

/// Serializes a matrix as `SBD1`: magic, little-endian u32 rows and
/// columns, then the entries column-major as f64.
pub fn encode_sbd(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * m.len());
    out.extend_from_slice(SBD_MAGIC);
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    // nalgebra storage is column-major already.
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_sbd(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < 12 || &bytes[..4] != SBD_MAGIC {
        return Err(Error::CorruptFile("missing SBD1 header".into()));
    }
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = d
        .checked_mul(k)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(12));
    if expected != Some(bytes.len()) {
        return Err(Error::CorruptFile(format!(
            "SBD1 body length {} does not match {d}x{k}",
            bytes.len() - 12
        )));
    }
    let values = bytes[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(DMatrix::from_iterator(d, k, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sbd_layout() {
        let m = DMatrix::from_column_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let bytes = encode_sbd(&m);
        assert_eq!(&bytes[..4], b"SBD1");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[20..28], &2.0f64.to_le_bytes());
        assert_eq!(decode_sbd(&bytes).unwrap(), m);
    }

    #[test]
    fn sbd_rejects_damage() {
        let m = DMatrix::from_element(2, 2, 0.5);
        let bytes = encode_sbd(&m);
        assert!(matches!(decode_sbd(&bytes[..bytes.len() - 1]), Err(Error::CorruptFile(_))));
        assert!(matches!(decode_sbd(&bytes[..7]), Err(Error::CorruptFile(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_sbd(&bad), Err(Error::CorruptFile(_))));
        let mut long = bytes;
        long.push(0);
        assert!(decode_sbd(&long).is_err());
    }

    #[test]
    fn dictionary_enforces_unit_ball() {
        assert!(Dictionary::new(DMatrix::from_element(2, 2, 1.0)).is_err());
        assert!(Dictionary::new(DMatrix::identity(2, 3)).is_ok());
        assert!(Dictionary::from_bytes(&encode_sbd(&DMatrix::from_element(2, 2, 1.0))).is_err());
    }
}
