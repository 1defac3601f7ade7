//! Sparse dictionary compression and time-pyramid classification of ECG
//! beats.
//!
//! The pipeline conditions beats from WFDB records ([`ingest`]), describes
//! each beat by sliding-window wavelet features ([`wavelet`]), learns an
//! overcomplete dictionary online ([`dictionary`]) with feature-sign sparse
//! coding ([`sparse_coding`]), stores beats as sparse coefficient triplets
//! ([`codec`]) and classifies them from pooled pyramid histograms
//! ([`features`], [`classify`]).

pub mod classify;
pub mod cli;
pub mod codec;
pub mod dictionary;
pub mod error;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod sparse_coding;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
