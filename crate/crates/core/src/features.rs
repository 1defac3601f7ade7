//! Fixed-length beat descriptors from sparse codes: a temporal pyramid of
//! pooled coefficient magnitudes, and the plain bag-of-words histogram.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::SparseCode;
use crate::error::{Error, Result};
use crate::ingest::BeatLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    /// Draw one column with probability proportional to its ℓ1 mass.
    Stochastic,
    /// Mass-weighted mean of the columns.
    Expectation,
}

impl std::str::FromStr for PoolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(PoolMode::Stochastic),
            "expectation" => Ok(PoolMode::Expectation),
            other => Err(Error::config(format!("unknown pooling mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PyramidConfig {
    pub levels: usize,
    pub mode: PoolMode,
    pub seed: u64,
    pub normalize_output: bool,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        PyramidConfig {
            levels: 2,
            mode: PoolMode::Expectation,
            seed: 0,
            normalize_output: true,
        }
    }
}

impl PyramidConfig {
    /// Number of pyramid blocks, `2^(L+1) − 1`.
    pub fn block_count(&self) -> usize {
        (1usize << (self.levels + 1)) - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels > 16 {
            return Err(Error::config(format!("pyramid depth {} is unreasonably large", self.levels)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PyramidHistogram {
    pub z: DVector<f64>,
    pub label: BeatLabel,
}

/// Window ranges of every pyramid block, coarse level first.
///
/// Level ℓ splits `0..Ω` into 2^ℓ contiguous ranges whose sizes differ by
/// at most one, longer ranges first. When Ω < 2^ℓ there are too few
/// windows to split; block b then covers the single window `⌊bΩ/2^ℓ⌋`.
pub fn build_blocks(omega: usize, levels: usize) -> Result<Vec<Range<usize>>> {
    if omega < 1 {
        return Err(Error::config("a pyramid needs at least one window"));
    }
    let mut blocks = Vec::new();
    for level in 0..=levels {
        let parts = 1usize << level;
        if omega < parts {
            for b in 0..parts {
                let w = b * omega / parts;
                blocks.push(w..w + 1);
            }
            continue;
        }
        let base = omega / parts;
        let extra = omega % parts;
        let mut start = 0;
        for b in 0..parts {
            let len = base + usize::from(b < extra);
            blocks.push(start..start + len);
            start += len;
        }
    }
    Ok(blocks)
}

/// Pools the columns of a non-negative block into one k-vector.
pub fn pool_block<R: Rng + ?Sized>(block: &DMatrix<f64>, mode: PoolMode, rng: &mut R) -> DVector<f64> {
    let masses: Vec<f64> = block.column_iter().map(|c| c.iter().sum()).collect();
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return DVector::zeros(block.nrows());
    }
    match mode {
        PoolMode::Expectation => {
            let mut z = DVector::zeros(block.nrows());
            for (c, &m) in masses.iter().enumerate() {
                if m > 0.0 {
                    z.axpy(m / total, &block.column(c), 1.0);
                }
            }
            z
        }
        PoolMode::Stochastic => {
            let mut u = rng.random::<f64>() * total;
            let mut pick = masses.iter().rposition(|&m| m > 0.0).unwrap_or(0);
            for (c, &m) in masses.iter().enumerate() {
                if m > 0.0 && u < m {
                    pick = c;
                    break;
                }
                u -= m;
            }
            block.column(pick).into_owned()
        }
    }
}

fn block_rng(seed: u64, beat_id: usize, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((beat_id as u64) << 16) ^ block as u64);
    rng
}

/// Pyramid feature of one beat: the sum over all blocks of the pooled
/// absolute code columns, optionally scaled to unit ℓ2 norm.
///
/// Stochastic draws come from a generator keyed by the config seed, the
/// beat id and the block index, so they do not depend on evaluation order.
pub fn tpm_feature(code: &SparseCode, cfg: &PyramidConfig) -> Result<PyramidHistogram> {
    cfg.validate()?;
    let x = code.to_dense().abs();
    let mut z = DVector::zeros(code.k());
    for (b, range) in build_blocks(code.omega(), cfg.levels)?.into_iter().enumerate() {
        let block = x.columns(range.start, range.len()).into_owned();
        let mut rng = block_rng(cfg.seed, code.beat_id, b);
        z += pool_block(&block, cfg.mode, &mut rng);
    }
    if cfg.normalize_output {
        let n = z.norm();
        if n > 0.0 {
            z /= n;
        }
    }
    Ok(PyramidHistogram { z, label: code.label })
}

/// Counts how many windows chose each atom.
pub fn bow_histogram(assignments: &[usize], k: usize) -> Result<DVector<f64>> {
    let mut h = DVector::zeros(k);
    for &a in assignments {
        if a >= k {
            return Err(Error::shape(format!("assignment {a} out of range for {k} atoms")));
        }
        h[a] += 1.0;
    }
    Ok(h)
}

/// Scales a histogram to unit ℓ2 norm (zero stays zero).
pub fn l2_normalized(mut v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v /= n;
    }
    v
}

/// `label,z_1,...,z_k` rows with a header line.
pub fn write_features_csv(rows: &[(BeatLabel, DVector<f64>)]) -> String {
    let k = rows.first().map_or(0, |r| r.1.len());
    let mut s = String::from("label");
    for j in 1..=k {
        s.push_str(&format!(",z_{j}"));
    }
    s.push('\n');
    for (label, z) in rows {
        s.push_str(label.symbol());
        for v in z.iter() {
            s.push_str(&format!(",{v:e}"));
        }
        s.push('\n');
    }
    s
}

pub fn read_features_csv(text: &str) -> Result<Vec<(BeatLabel, DVector<f64>)>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("label")) {
            continue;
        }
        let mut fields = line.split(',');
        let label = BeatLabel::from_symbol(fields.next().unwrap_or("").trim());
        let values = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("bad feature value {f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {w} values, found {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push((label, DVector::from_vec(values)));
    }
    Ok(rows)
}
