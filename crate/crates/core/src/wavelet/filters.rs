use crate::error::{Error, Result};

/// Analysis and synthesis filters of a two-channel filter bank.
///
/// Filters follow the convention where analysis is a convolution followed
/// by keeping odd output positions and synthesis is an upsampled
/// convolution; all four filters share one (even) length.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    name: String,
    dec_lo: Vec<f64>,
    dec_hi: Vec<f64>,
    rec_lo: Vec<f64>,
    rec_hi: Vec<f64>,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const DB4_DEC_LO: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

// Spline biorthogonal 2.6: the analysis low-pass is sqrt(2)/1024 times
// [0, -5, 10, 34, -78, -123, 324, 700, 324, -123, -78, 34, 10, -5] and the
// synthesis low-pass is the linear B-spline [1, 2, 1] * sqrt(2)/4.
const BIOR26_DEC_LO: [f64; 14] = [
    0.0,
    -0.006905339660024878,
    0.013810679320049757,
    0.04695630968816917,
    -0.1077232986963881,
    -0.16987135563661201,
    0.4474660099696121,
    0.966747552403483,
    0.4474660099696121,
    -0.16987135563661201,
    -0.1077232986963881,
    0.04695630968816917,
    0.013810679320049757,
    -0.006905339660024878,
];

const BIOR26_REC_LO: [f64; 14] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.3535533905932738,
    std::f64::consts::FRAC_1_SQRT_2,
    0.3535533905932738,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
];

impl FilterBank {
    pub const NAMES: [&'static str; 3] = ["haar", "db4", "bior2.6"];

    pub fn new(
        name: impl Into<String>,
        dec_lo: Vec<f64>,
        dec_hi: Vec<f64>,
        rec_lo: Vec<f64>,
        rec_hi: Vec<f64>,
    ) -> Result<Self> {
        let n = dec_lo.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::config(format!("filter length must be even and >= 2, got {n}")));
        }
        if [&dec_hi, &rec_lo, &rec_hi].iter().any(|f| f.len() != n) {
            return Err(Error::config("all four filters must have the same length"));
        }
        Ok(FilterBank {
            name: name.into(),
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
        })
    }

    /// Builds an orthogonal bank from its scaling filter (analysis order).
    fn orthogonal(name: &str, dec_lo: &[f64]) -> Self {
        let n = dec_lo.len();
        let rec_lo: Vec<f64> = dec_lo.iter().rev().copied().collect();
        let rec_hi: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { dec_lo[i] } else { -dec_lo[i] })
            .collect();
        let dec_hi: Vec<f64> = rec_hi.iter().rev().copied().collect();
        FilterBank {
            name: name.to_string(),
            dec_lo: dec_lo.to_vec(),
            dec_hi,
            rec_lo,
            rec_hi,
        }
    }

    /// Builds a biorthogonal bank from its two low-pass filters.
    fn biorthogonal(name: &str, dec_lo: &[f64], rec_lo: &[f64]) -> Self {
        let n = dec_lo.len();
        let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        // High-pass filters are the alternating-sign mirrors of the
        // opposite low-pass.
        let dec_hi: Vec<f64> = (0..n).map(|i| -sign(i) * rec_lo[i]).collect();
        let rec_hi: Vec<f64> = (0..n).map(|i| sign(i) * dec_lo[i]).collect();
        FilterBank {
            name: name.to_string(),
            dec_lo: dec_lo.to_vec(),
            dec_hi,
            rec_lo: rec_lo.to_vec(),
            rec_hi,
        }
    }

    pub fn haar() -> Self {
        Self::orthogonal("haar", &[FRAC_1_SQRT_2, FRAC_1_SQRT_2])
    }

    pub fn db4() -> Self {
        Self::orthogonal("db4", &DB4_DEC_LO)
    }

    pub fn bior2_6() -> Self {
        Self::biorthogonal("bior2.6", &BIOR26_DEC_LO, &BIOR26_REC_LO)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Self::haar()),
            "db4" => Ok(Self::db4()),
            "bior2.6" | "bior26" => Ok(Self::bior2_6()),
            other => Err(Error::config(format!(
                "unknown wavelet {other:?}; available: {}",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }

    pub fn dec_lo(&self) -> &[f64] {
        &self.dec_lo
    }

    pub fn dec_hi(&self) -> &[f64] {
        &self.dec_hi
    }

    pub fn rec_lo(&self) -> &[f64] {
        &self.rec_lo
    }

    pub fn rec_hi(&self) -> &[f64] {
        &self.rec_hi
    }
}
