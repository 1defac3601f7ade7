//! Wavelet filter banks, the multi-level transform used for record
//! denoising, and sliding-window local features of beats.

mod filters;
mod transform;
mod windows;

pub use filters::FilterBank;
pub use transform::{denoise, dwt, dwt_level, idwt, idwt_level, Pyramid, PyramidLayout};
pub use windows::{extract_windows, FeatureMatrix, WindowGeometry};
