use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{dwt, FilterBank, PyramidLayout};

/// Sliding-window geometry for local wavelet features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowGeometry {
    /// Window length in samples.
    pub window: usize,
    pub stride: usize,
    /// Wavelet depth applied to each window.
    pub levels: usize,
}

impl Default for WindowGeometry {
    fn default() -> Self {
        WindowGeometry {
            window: 50,
            stride: 25,
            levels: 2,
        }
    }
}

impl WindowGeometry {
    pub fn validate(&self, signal_len: usize) -> Result<()> {
        let WindowGeometry { window, stride, levels } = *self;
        if window < 2 || window > signal_len {
            return Err(Error::config(format!(
                "window length {window} must lie in [2, {signal_len}]"
            )));
        }
        if stride < 1 {
            return Err(Error::config("window stride must be at least 1"));
        }
        if levels < 1 || levels >= usize::BITS as usize || window < (1usize << levels) {
            return Err(Error::config(format!(
                "window length {window} cannot support {levels} wavelet levels"
            )));
        }
        Ok(())
    }

    /// Number of windows over a signal of `signal_len` samples.
    pub fn window_count(&self, signal_len: usize) -> usize {
        if signal_len < self.window || self.stride == 0 {
            return 0;
        }
        (signal_len - self.window) / self.stride + 1
    }

    pub fn positions(&self, signal_len: usize) -> Vec<usize> {
        (0..self.window_count(signal_len)).map(|i| i * self.stride).collect()
    }

    /// Coefficient layout of one window's feature vector.
    pub fn layout(&self, fb: &FilterBank) -> Result<PyramidLayout> {
        PyramidLayout::new(self.window, fb.len(), self.levels)
    }

    /// Feature dimension `d` for this geometry and filter bank.
    pub fn feature_dim(&self, fb: &FilterBank) -> Result<usize> {
        Ok(self.layout(fb)?.coefficient_count())
    }
}

/// Local wavelet features of one beat, one column per window.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub columns: DMatrix<f64>,
    pub beat_index: usize,
    pub window_positions: Vec<usize>,
}

impl FeatureMatrix {
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn omega(&self) -> usize {
        self.columns.ncols()
    }
}

/// Windows the beat and stacks each window's flattened wavelet pyramid
/// (deepest approximation, then details coarse to fine) as a column.
pub fn extract_windows(
    beat: &[f64],
    beat_index: usize,
    fb: &FilterBank,
    geometry: WindowGeometry,
) -> Result<FeatureMatrix> {
    geometry.validate(beat.len())?;
    let positions = geometry.positions(beat.len());
    let d = geometry.feature_dim(fb)?;
    let mut columns = DMatrix::zeros(d, positions.len());
    for (c, &p) in positions.iter().enumerate() {
        let coeffs = dwt(&beat[p..p + geometry.window], fb, geometry.levels)?.flatten();
        debug_assert_eq!(coeffs.len(), d);
        columns.column_mut(c).copy_from_slice(&coeffs);
    }
    Ok(FeatureMatrix {
        columns,
        beat_index,
        window_positions: positions,
    })
}
