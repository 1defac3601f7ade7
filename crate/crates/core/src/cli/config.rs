//! Plain-text `key = value` pipeline configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classify::PsoConfig;
use crate::dictionary::{default_lambda, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{PoolMode, PyramidConfig};
use crate::ingest::{DenoiseSettings, SegmentWindow, BEAT_LEN};
use crate::pipeline::{SplitConfig, SplitRule};
use crate::sparse_coding::check_lambda;
use crate::synth::SynthConfig;
use crate::wavelet::{FilterBank, WindowGeometry};

/// Text shown under `--help`.
pub const CONFIG_HELP: &str = "\
CONFIG FILE
  One `key = value` per line; `#` starts a comment. `--set key=value`
  overrides the file. Unknown or repeated keys are rejected.

  Input
    dataset          synthetic | records | beats_csv           [synthetic]
    records          comma-separated .hea paths
    annotations      comma-separated annotation CSVs, one per record
                     [<record stem>.ann.csv next to each header]
    beats_csv        conditioned beats, `label,v1..v300` per line
    synth_per_class  synthetic beats per class                 [100]
    synth_seed                                                 [0]
    synth_noise      synthetic noise level                     [0.0005]
    channel          record channel to segment                 [0]
    pre_s, post_s    seconds kept before/after each R peak     [0.25, 0.45]
    denoise          wavelet denoise records before cutting    [true]
    denoise_levels                                             [8]
    denoise_scale    soft-threshold multiplier                 [1.0]

  Features and dictionary
    wavelet          haar | db4 | bior2.6                      [bior2.6]
    window, stride, wavelet_levels                             [50, 25, 2]
    k                atom count or auto (twice the feature dim) [auto]
    lambda           sparsity penalty or auto (0.3/sqrt(d))    [auto]
    batch_size, epochs, dict_seed, atom_passes                 [64, 10, 0, 1]

  Classification
    pyramid_levels                                             [2]
    pooling          expectation | stochastic                  [expectation]
    pool_seed                                                  [0]
    normalize        unit-norm pyramid features                [true]
    svm_c, svm_gamma fixed SVM parameters, or auto for a swarm search [auto]
    pso_swarm, pso_iterations, pso_inertia, pso_c1, pso_c2,
    pso_folds, pso_seed                      [20, 30, 0.72, 1.49, 1.49, 5, 0]
    pso_log2_c, pso_log2_gamma  search bounds as `lo,hi`  [-5,15 and -15,3]

  Split (set at most one of the first three)
    train_fraction                                             [0.5]
    train_total      training beats, spread over classes by size
    train_per_class  training beats taken from every class
    stratified       draw classes separately                   [true]
    split_seed                                                 [0]

  Output
    out_dir                                                    [out]
    waveform_beats   beats dumped by `reconstruct`             [20]
    vq_baseline      add the k-means baseline to `metrics`     [true]
    kmeans_iters                                               [100]
";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dataset {
    Synthetic,
    Records,
    BeatsCsv,
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Dataset::Synthetic),
            "records" => Ok(Dataset::Records),
            "beats_csv" => Ok(Dataset::BeatsCsv),
            other => Err(Error::config(format!("unknown dataset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub dataset: Dataset,
    pub records: Vec<PathBuf>,
    pub annotations: Vec<PathBuf>,
    pub beats_csv: Option<PathBuf>,
    pub synth: SynthConfig,
    pub channel: usize,
    pub segment: SegmentWindow,
    pub denoise: bool,
    pub denoise_levels: usize,
    pub denoise_scale: f64,
    pub wavelet: String,
    pub geometry: WindowGeometry,
    /// `None` means twice the feature dimension.
    pub k: Option<usize>,
    /// `None` means the dimension-scaled default.
    pub lambda: Option<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub dict_seed: u64,
    pub atom_passes: usize,
    pub pyramid: PyramidConfig,
    pub svm_c: Option<f64>,
    pub svm_gamma: Option<f64>,
    pub pso: PsoConfig,
    pub split: SplitConfig,
    pub out_dir: PathBuf,
    pub waveform_beats: usize,
    pub vq_baseline: bool,
    pub kmeans_iters: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: Dataset::Synthetic,
            records: Vec::new(),
            annotations: Vec::new(),
            beats_csv: None,
            synth: SynthConfig::default(),
            channel: 0,
            segment: SegmentWindow::default(),
            denoise: true,
            denoise_levels: 8,
            denoise_scale: 1.0,
            wavelet: "bior2.6".into(),
            geometry: WindowGeometry::default(),
            k: None,
            lambda: None,
            batch_size: 64,
            epochs: 10,
            dict_seed: 0,
            atom_passes: 1,
            pyramid: PyramidConfig::default(),
            svm_c: None,
            svm_gamma: None,
            pso: PsoConfig::default(),
            split: SplitConfig::default(),
            out_dir: PathBuf::from("out"),
            waveform_beats: 20,
            vq_baseline: true,
            kmeans_iters: 100,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_range(key: &str, value: &str) -> Result<(f64, f64)> {
    let (lo, hi) = value
        .split_once(',')
        .ok_or_else(|| Error::config(format!("{key}: expected `lo,hi`, got {value:?}")))?;
    Ok((parse(key, lo.trim())?, parse(key, hi.trim())?))
}

fn parse_paths(value: &str) -> Vec<PathBuf> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
        .collect()
}

fn at_line(i: usize, e: Error) -> Error {
    match e {
        Error::BadConfig(m) => Error::config(format!("line {}: {m}", i + 1)),
        other => other,
    }
}

/// Splits `key = value`, trimming both sides.
pub fn split_assignment(text: &str) -> Result<(&str, &str)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::config(format!("expected `key = value`, got {text:?}")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(Error::config(format!("missing key in {text:?}")));
    }
    Ok((k, v))
}

impl PipelineConfig {
    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = value.parse()?,
            "records" => self.records = parse_paths(value),
            "annotations" => self.annotations = parse_paths(value),
            "beats_csv" => self.beats_csv = Some(PathBuf::from(value)),
            "synth_per_class" => self.synth.per_class = parse(key, value)?,
            "synth_seed" => self.synth.seed = parse(key, value)?,
            "synth_noise" => self.synth.noise = parse(key, value)?,
            "channel" => self.channel = parse(key, value)?,
            "pre_s" => self.segment.pre_s = parse(key, value)?,
            "post_s" => self.segment.post_s = parse(key, value)?,
            "denoise" => self.denoise = parse_bool(key, value)?,
            "denoise_levels" => self.denoise_levels = parse(key, value)?,
            "denoise_scale" => self.denoise_scale = parse(key, value)?,
            "wavelet" => self.wavelet = value.to_string(),
            "window" => self.geometry.window = parse(key, value)?,
            "stride" => self.geometry.stride = parse(key, value)?,
            "wavelet_levels" => self.geometry.levels = parse(key, value)?,
            "k" => self.k = parse_auto(key, value)?,
            "lambda" => self.lambda = parse_auto(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "dict_seed" => self.dict_seed = parse(key, value)?,
            "atom_passes" => self.atom_passes = parse(key, value)?,
            "pyramid_levels" => self.pyramid.levels = parse(key, value)?,
            "pooling" => self.pyramid.mode = value.parse::<PoolMode>()?,
            "pool_seed" => self.pyramid.seed = parse(key, value)?,
            "normalize" => self.pyramid.normalize_output = parse_bool(key, value)?,
            "svm_c" => self.svm_c = parse_auto(key, value)?,
            "svm_gamma" => self.svm_gamma = parse_auto(key, value)?,
            "pso_swarm" => self.pso.swarm = parse(key, value)?,
            "pso_iterations" => self.pso.iterations = parse(key, value)?,
            "pso_inertia" => self.pso.inertia = parse(key, value)?,
            "pso_c1" => self.pso.c1 = parse(key, value)?,
            "pso_c2" => self.pso.c2 = parse(key, value)?,
            "pso_folds" => self.pso.folds = parse(key, value)?,
            "pso_seed" => self.pso.seed = parse(key, value)?,
            "pso_log2_c" => self.pso.log2_c = parse_range(key, value)?,
            "pso_log2_gamma" => self.pso.log2_gamma = parse_range(key, value)?,
            "train_fraction" => self.split.rule = SplitRule::TrainFraction(parse(key, value)?),
            "train_total" => self.split.rule = SplitRule::TrainTotal(parse(key, value)?),
            "train_per_class" => self.split.rule = SplitRule::TrainPerClass(parse(key, value)?),
            "stratified" => self.split.stratified = parse_bool(key, value)?,
            "split_seed" => self.split.seed = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "waveform_beats" => self.waveform_beats = parse(key, value)?,
            "vq_baseline" => self.vq_baseline = parse_bool(key, value)?,
            "kmeans_iters" => self.kmeans_iters = parse(key, value)?,
            other => return Err(Error::config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Builds a config from file text followed by overrides; a key may
    /// appear once in the file and once more among the overrides.
    pub fn from_sources(file_text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut split_keys = BTreeSet::new();
        let mut seen = BTreeSet::new();
        if let Some(text) = file_text {
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = split_assignment(line).map_err(|e| at_line(i, e))?;
                if !seen.insert(k.to_string()) {
                    return Err(Error::config(format!("line {}: key {k:?} repeated", i + 1)));
                }
                cfg.set(k, v).map_err(|e| at_line(i, e))?;
                split_keys.insert(k.to_string());
            }
        }
        let mut overridden = BTreeSet::new();
        for (k, v) in overrides {
            if !overridden.insert(k.clone()) {
                return Err(Error::config(format!("--set {k} given more than once")));
            }
            if k.starts_with("train_") {
                // An override replaces whichever split rule the file chose.
                split_keys.retain(|s: &String| !s.starts_with("train_"));
            }
            cfg.set(k, v)?;
            split_keys.insert(k.clone());
        }
        let rules = split_keys.iter().filter(|k| k.starts_with("train_")).count();
        if rules > 1 {
            return Err(Error::config(
                "set only one of train_fraction, train_total and train_per_class",
            ));
        }
        Ok(cfg)
    }

    pub fn filter_bank(&self) -> Result<FilterBank> {
        FilterBank::by_name(&self.wavelet)
    }

    pub fn feature_dim(&self) -> Result<usize> {
        self.geometry.feature_dim(&self.filter_bank()?)
    }

    pub fn lambda_for(&self, d: usize) -> f64 {
        self.lambda.unwrap_or_else(|| default_lambda(d))
    }

    pub fn train_config(&self, d: usize) -> TrainConfig {
        let mut t = TrainConfig::for_dimension(d);
        if let Some(k) = self.k {
            t.k = k;
        }
        t.lambda = self.lambda_for(d);
        t.batch_size = self.batch_size;
        t.epochs = self.epochs;
        t.seed = self.dict_seed;
        t.atom_update_passes = self.atom_passes;
        t
    }

    pub fn denoise_settings(&self) -> Result<Option<DenoiseSettings>> {
        Ok(self.denoise.then_some(DenoiseSettings {
            filter_bank: self.filter_bank()?,
            levels: self.denoise_levels,
            threshold_scale: self.denoise_scale,
        }))
    }

    /// Paths to each record's annotation file.
    pub fn annotation_paths(&self) -> Result<Vec<PathBuf>> {
        if self.annotations.is_empty() {
            return Ok(self.records.iter().map(|r| default_annotations(r)).collect());
        }
        if self.annotations.len() != self.records.len() {
            return Err(Error::config(format!(
                "{} annotation files for {} records",
                self.annotations.len(),
                self.records.len()
            )));
        }
        Ok(self.annotations.clone())
    }

    /// Checks every setting before any work starts.
    pub fn validate(&self) -> Result<()> {
        match self.dataset {
            Dataset::Synthetic => {
                if self.synth.per_class < 1 {
                    return Err(Error::config("synth_per_class must be at least 1"));
                }
                if !(self.synth.noise >= 0.0 && self.synth.noise.is_finite()) {
                    return Err(Error::config("synth_noise must be a non-negative number"));
                }
            }
            Dataset::Records => {
                if self.records.is_empty() {
                    return Err(Error::config("dataset = records needs `records`"));
                }
                self.annotation_paths()?;
                self.segment.validate()?;
                if self.denoise {
                    if self.denoise_levels < 1 {
                        return Err(Error::config("denoise_levels must be at least 1"));
                    }
                    if !(self.denoise_scale >= 0.0 && self.denoise_scale.is_finite()) {
                        return Err(Error::config("denoise_scale must be a non-negative number"));
                    }
                }
            }
            Dataset::BeatsCsv => {
                if self.beats_csv.is_none() {
                    return Err(Error::config("dataset = beats_csv needs `beats_csv`"));
                }
            }
        }
        self.geometry.validate(BEAT_LEN)?;
        let d = self.feature_dim()?;
        if let Some(l) = self.lambda {
            check_lambda(l)?;
        }
        self.train_config(d).validate(d)?;
        self.pyramid.validate()?;
        for (name, v) in [("svm_c", self.svm_c), ("svm_gamma", self.svm_gamma)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.svm_c.is_some() != self.svm_gamma.is_some() {
            return Err(Error::config("set both svm_c and svm_gamma, or neither"));
        }
        if self.svm_c.is_none() {
            self.pso.validate()?;
        }
        match self.split.rule {
            SplitRule::TrainFraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::config(format!("train_fraction {f} must lie in (0, 1]")));
            }
            SplitRule::TrainTotal(0) => return Err(Error::config("train_total must be at least 1")),
            SplitRule::TrainPerClass(0) => return Err(Error::config("train_per_class must be at least 1")),
            _ => {}
        }
        if self.vq_baseline && self.kmeans_iters < 1 {
            return Err(Error::config("kmeans_iters must be at least 1"));
        }
        Ok(())
    }
}

/// `<dir>/<stem>.ann.csv` for a header at `<dir>/<stem>.hea`.
pub fn default_annotations(header: &Path) -> PathBuf {
    let stem = header.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    header.with_file_name(format!("{stem}.ann.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_validate() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.feature_dim().unwrap(), 75);
        assert_eq!(cfg.train_config(75).k, 150);
    }

    #[test]
    fn file_then_overrides() {
        let text = "# demo\nepochs = 3  # short\nk = 200\nlambda = auto\n\nsvm_c = 4\nsvm_gamma = 0.5\n";
        let cfg = PipelineConfig::from_sources(Some(text), &set(&[("epochs", "5")])).unwrap();
        assert_eq!(cfg.epochs, 5);
        assert_eq!(cfg.k, Some(200));
        assert_eq!(cfg.lambda, None);
        assert_eq!(cfg.svm_c, Some(4.0));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |text: &str| PipelineConfig::from_sources(Some(text), &[]).unwrap_err();
        assert!(bad("nope = 1").is_validation());
        assert!(bad("epochs = 1\nepochs = 2").is_validation());
        assert!(bad("epochs").is_validation());
        assert!(bad("epochs = many").is_validation());
        assert!(bad("train_total = 10\ntrain_per_class = 3").is_validation());
        let ok = PipelineConfig::from_sources(Some("train_total = 10"), &set(&[("train_per_class", "3")])).unwrap();
        assert_eq!(ok.split.rule, SplitRule::TrainPerClass(3));
    }

    #[test]
    fn validation_catches_module_preconditions() {
        let invalid = |pairs: &[(&str, &str)]| {
            let cfg = PipelineConfig::from_sources(None, &set(pairs)).unwrap();
            cfg.validate().unwrap_err()
        };
        assert!(invalid(&[("k", "50")]).is_validation());
        assert!(invalid(&[("lambda", "-1")]).is_validation());
        assert!(invalid(&[("wavelet", "sym5")]).is_validation());
        assert!(invalid(&[("window", "400")]).is_validation());
        assert!(invalid(&[("svm_c", "1")]).is_validation());
        assert!(invalid(&[("pso_folds", "1")]).is_validation());
        assert!(invalid(&[("train_fraction", "1.5")]).is_validation());
        assert!(invalid(&[("dataset", "records")]).is_validation());
    }

    #[test]
    fn annotation_paths_follow_headers() {
        assert_eq!(default_annotations(Path::new("data/100.hea")), PathBuf::from("data/100.ann.csv"));
    }
}
