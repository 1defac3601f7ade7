//! Multi-level discrete wavelet transform with half-point symmetric
//! boundary extension.
//!
//! A level maps a length-`n` signal to approximation and detail bands of
//! length `(n + F - 1) / 2` for filter length `F`. The extra coefficients
//! make synthesis exact at the borders.

use crate::error::{Error, Result};

use super::FilterBank;

/// Coefficients of a multi-level decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Pyramid {
    /// Approximation band of the deepest level.
    pub approx: Vec<f64>,
    /// Detail bands ordered coarse to fine.
    pub details: Vec<Vec<f64>>,
    /// Input length at each level, finest first: `signal_lengths[0]` is the
    /// original signal length.
    pub signal_lengths: Vec<usize>,
}

impl Pyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Approximation followed by details, coarse to fine.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coefficient_count());
        out.extend_from_slice(&self.approx);
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }

    pub fn coefficient_count(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    /// Rebuilds a pyramid from a flat vector laid out like [`Pyramid::flatten`].
    pub fn unflatten(flat: &[f64], layout: &PyramidLayout) -> Result<Self> {
        if flat.len() != layout.coefficient_count() {
            return Err(Error::shape(format!(
                "flat coefficient vector has length {}, layout expects {}",
                flat.len(),
                layout.coefficient_count()
            )));
        }
        let mut offset = 0;
        let mut take = |n: usize| {
            let s = flat[offset..offset + n].to_vec();
            offset += n;
            s
        };
        let approx = take(layout.band_lengths[0]);
        let details = layout.band_lengths[1..].iter().map(|&n| take(n)).collect();
        Ok(Pyramid {
            approx,
            details,
            signal_lengths: layout.signal_lengths.clone(),
        })
    }

    pub fn zeros_like(layout: &PyramidLayout) -> Self {
        Pyramid {
            approx: vec![0.0; layout.band_lengths[0]],
            details: layout.band_lengths[1..].iter().map(|&n| vec![0.0; n]).collect(),
            signal_lengths: layout.signal_lengths.clone(),
        }
    }
}

/// Band sizes produced by [`dwt`] for a given signal length, filter length
/// and depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PyramidLayout {
    /// Approximation length, then detail lengths coarse to fine.
    pub band_lengths: Vec<usize>,
    pub signal_lengths: Vec<usize>,
}

impl PyramidLayout {
    pub fn new(signal_len: usize, filter_len: usize, levels: usize) -> Result<Self> {
        check_depth(signal_len, levels)?;
        let mut signal_lengths = vec![signal_len];
        let mut band = Vec::with_capacity(levels);
        let mut n = signal_len;
        for _ in 0..levels {
            n = band_len(n, filter_len);
            band.push(n);
            signal_lengths.push(n);
        }
        signal_lengths.pop();
        let mut band_lengths = vec![*band.last().unwrap()];
        band_lengths.extend(band.iter().rev());
        Ok(PyramidLayout {
            band_lengths,
            signal_lengths,
        })
    }

    pub fn coefficient_count(&self) -> usize {
        self.band_lengths.iter().sum()
    }
}

fn band_len(n: usize, filter_len: usize) -> usize {
    (n + filter_len - 1) / 2
}

fn check_depth(len: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::config("wavelet depth must be at least 1"));
    }
    let needed = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::config(format!("wavelet depth {levels} is too large")))?;
    if len < needed {
        return Err(Error::TooShort { needed, got: len });
    }
    Ok(())
}

/// Half-point symmetric extension: `x[-1] = x[0]`, `x[n] = x[n - 1]`,
/// repeated with period `2n`.
#[inline]
fn symmetric_at(x: &[f64], i: isize) -> f64 {
    let n = x.len() as isize;
    let p = 2 * n;
    let m = i.rem_euclid(p);
    if m < n {
        x[m as usize]
    } else {
        x[(p - 1 - m) as usize]
    }
}

/// One analysis level: returns (approximation, detail).
pub fn dwt_level(x: &[f64], fb: &FilterBank) -> (Vec<f64>, Vec<f64>) {
    let f = fb.len();
    let out_len = band_len(x.len(), f);
    let (lo, hi) = (fb.dec_lo(), fb.dec_hi());
    let mut a = Vec::with_capacity(out_len);
    let mut d = Vec::with_capacity(out_len);
    for o in 0..out_len {
        let base = 2 * o as isize + 1;
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..f {
            let v = symmetric_at(x, base - j as isize);
            sa += lo[j] * v;
            sd += hi[j] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

/// One synthesis level, trimmed to `out_len` samples.
pub fn idwt_level(a: &[f64], d: &[f64], fb: &FilterBank, out_len: usize) -> Result<Vec<f64>> {
    if a.len() != d.len() {
        return Err(Error::shape(format!(
            "approximation has {} coefficients, detail has {}",
            a.len(),
            d.len()
        )));
    }
    let f = fb.len();
    let full = 2 * a.len() + 2;
    if full < f || full - f < out_len {
        return Err(Error::shape(format!(
            "{} coefficients per band cannot synthesize {out_len} samples",
            a.len()
        )));
    }
    let (lo, hi) = (fb.rec_lo(), fb.rec_hi());
    let offset = f - 2;
    let mut out = vec![0.0; out_len];
    for (m, o) in out.iter_mut().enumerate() {
        let pos = m + offset;
        // Coefficient k contributes filter tap pos - 2k when 0 <= pos - 2k < f.
        let k_lo = (pos + 1).saturating_sub(f).div_ceil(2);
        let k_hi = (pos / 2).min(a.len() - 1);
        let mut s = 0.0;
        for k in k_lo..=k_hi {
            let tap = pos - 2 * k;
            s += a[k] * lo[tap] + d[k] * hi[tap];
        }
        *o = s;
    }
    Ok(out)
}

/// Multi-level analysis. Requires `levels >= 1` and a signal of at least
/// `2^levels` samples.
pub fn dwt(signal: &[f64], fb: &FilterBank, levels: usize) -> Result<Pyramid> {
    check_depth(signal.len(), levels)?;
    let mut signal_lengths = Vec::with_capacity(levels);
    let mut details = Vec::with_capacity(levels);
    let mut current = signal.to_vec();
    for _ in 0..levels {
        signal_lengths.push(current.len());
        let (a, d) = dwt_level(&current, fb);
        details.push(d);
        current = a;
    }
    details.reverse();
    Ok(Pyramid {
        approx: current,
        details,
        signal_lengths,
    })
}

/// Multi-level synthesis, the inverse of [`dwt`] under the same filter bank.
pub fn idwt(pyramid: &Pyramid, fb: &FilterBank) -> Result<Vec<f64>> {
    let levels = pyramid.details.len();
    if levels == 0 || pyramid.signal_lengths.len() != levels {
        return Err(Error::shape(format!(
            "pyramid has {levels} detail bands and {} level lengths",
            pyramid.signal_lengths.len()
        )));
    }
    let mut current = pyramid.approx.clone();
    for (i, detail) in pyramid.details.iter().enumerate() {
        let target = pyramid.signal_lengths[levels - 1 - i];
        if band_len(target, fb.len()) != detail.len() {
            return Err(Error::shape(format!(
                "level {} detail has {} coefficients, expected {} for a {target}-sample input",
                levels - i,
                detail.len(),
                band_len(target, fb.len())
            )));
        }
        current = idwt_level(&current, detail, fb, target)?;
    }
    Ok(current)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Baseline and noise removal: the deepest approximation band is zeroed
/// and every detail band is soft-thresholded at
/// `threshold_scale * sigma * sqrt(2 ln n)`, where `sigma` is the MAD
/// estimate `median(|finest detail|) / 0.6745`.
pub fn denoise(signal: &[f64], fb: &FilterBank, levels: usize, threshold_scale: f64) -> Result<Vec<f64>> {
    if !(threshold_scale >= 0.0 && threshold_scale.is_finite()) {
        return Err(Error::config(format!(
            "threshold scale must be non-negative, got {threshold_scale}"
        )));
    }
    let mut p = dwt(signal, fb, levels)?;
    let finest = p.details.last().expect("at least one level");
    let sigma = median(finest.iter().map(|v| v.abs()).collect()) / 0.6745;
    let n = signal.len() as f64;
    let thr = threshold_scale * sigma * (2.0 * n.ln()).max(0.0).sqrt();
    p.approx.iter_mut().for_each(|v| *v = 0.0);
    for band in &mut p.details {
        band.iter_mut().for_each(|v| *v = soft_threshold(*v, thr));
    }
    idwt(&p, fb)
}
