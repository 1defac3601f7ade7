//! Record and annotation loading, beat segmentation and per-beat
//! conditioning (resampling to a fixed length, z-score normalization).
//!
//! Records are read from WFDB header/signal pairs in format 212. Beat
//! annotations come from a plain `sample_index,label` text export; the
//! beats themselves are cut from a fixed window around each annotated
//! R peak.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::{self, FilterBank};

/// Number of samples every beat is resampled to.
pub const BEAT_LEN: usize = 300;

/// Beat classes handled by the pipeline. Anything outside the six target
/// classes is collapsed into `Other` and ignored at segmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum BeatLabel {
    Normal,
    Paced,
    AtrialPremature,
    VentricularPremature,
    RightBundleBranchBlock,
    LeftBundleBranchBlock,
    Other,
}

impl BeatLabel {
    pub const TARGETS: [BeatLabel; 6] = [
        BeatLabel::Normal,
        BeatLabel::Paced,
        BeatLabel::AtrialPremature,
        BeatLabel::VentricularPremature,
        BeatLabel::RightBundleBranchBlock,
        BeatLabel::LeftBundleBranchBlock,
    ];

    /// MIT-BIH annotation symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            BeatLabel::Normal => "N",
            BeatLabel::Paced => "/",
            BeatLabel::AtrialPremature => "A",
            BeatLabel::VentricularPremature => "V",
            BeatLabel::RightBundleBranchBlock => "R",
            BeatLabel::LeftBundleBranchBlock => "L",
            BeatLabel::Other => "Q",
        }
    }

    /// Maps an annotation symbol to a label; unknown symbols become `Other`.
    pub fn from_symbol(s: &str) -> Self {
        match s {
            "N" => BeatLabel::Normal,
            "/" => BeatLabel::Paced,
            "A" => BeatLabel::AtrialPremature,
            "V" => BeatLabel::VentricularPremature,
            "R" => BeatLabel::RightBundleBranchBlock,
            "L" => BeatLabel::LeftBundleBranchBlock,
            _ => BeatLabel::Other,
        }
    }

    /// One-byte code used by the SBC1 code file.
    pub fn code(self) -> u8 {
        match self {
            BeatLabel::Normal => 0,
            BeatLabel::Paced => 1,
            BeatLabel::AtrialPremature => 2,
            BeatLabel::VentricularPremature => 3,
            BeatLabel::RightBundleBranchBlock => 4,
            BeatLabel::LeftBundleBranchBlock => 5,
            BeatLabel::Other => 6,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => BeatLabel::Normal,
            1 => BeatLabel::Paced,
            2 => BeatLabel::AtrialPremature,
            3 => BeatLabel::VentricularPremature,
            4 => BeatLabel::RightBundleBranchBlock,
            5 => BeatLabel::LeftBundleBranchBlock,
            6 => BeatLabel::Other,
            _ => return None,
        })
    }

    pub fn is_target(self) -> bool {
        self != BeatLabel::Other
    }
}

impl fmt::Display for BeatLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for BeatLabel {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(BeatLabel::from_symbol(s))
    }
}

impl From<BeatLabel> for String {
    fn from(l: BeatLabel) -> Self {
        l.symbol().to_string()
    }
}

impl From<String> for BeatLabel {
    fn from(s: String) -> Self {
        BeatLabel::from_symbol(&s)
    }
}

/// A multi-channel ECG record with raw ADC samples.
#[derive(Clone, Debug)]
pub struct EcgRecord {
    record_id: String,
    sampling_rate: f64,
    gain: f64,
    channels: Vec<Vec<i32>>,
}

impl EcgRecord {
    pub fn new(
        record_id: impl Into<String>,
        sampling_rate: f64,
        gain: f64,
        channels: Vec<Vec<i32>>,
    ) -> Result<Self> {
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(Error::config(format!("sampling rate must be positive, got {sampling_rate}")));
        }
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::config(format!("gain must be positive, got {gain}")));
        }
        if channels.is_empty() {
            return Err(Error::config("record has no channels"));
        }
        let len = channels[0].len();
        if let Some((i, c)) = channels.iter().enumerate().find(|(_, c)| c.len() != len) {
            return Err(Error::shape(format!(
                "channel {i} has {} samples, channel 0 has {len}",
                c.len()
            )));
        }
        Ok(EcgRecord {
            record_id: record_id.into(),
            sampling_rate,
            gain,
            channels,
        })
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn samples_per_channel(&self) -> usize {
        self.channels[0].len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, i: usize) -> Option<&[i32]> {
        self.channels.get(i).map(Vec::as_slice)
    }

    /// Channel `i` converted to physical units (mV).
    pub fn physical(&self, i: usize) -> Option<Vec<f64>> {
        self.channel(i)
            .map(|c| c.iter().map(|&v| v as f64 / self.gain).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeatAnnotation {
    pub sample_index: usize,
    pub label: BeatLabel,
}

/// Where a beat came from: record id and the annotated sample.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeatSource {
    pub record_id: String,
    pub sample_index: usize,
}

/// A conditioned beat: exactly [`BEAT_LEN`] samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Beat {
    values: Vec<f64>,
    label: BeatLabel,
    source: BeatSource,
}

impl Beat {
    pub fn new(values: Vec<f64>, label: BeatLabel, source: BeatSource) -> Result<Self> {
        if values.len() != BEAT_LEN {
            return Err(Error::shape(format!(
                "beat must have {BEAT_LEN} samples, got {}",
                values.len()
            )));
        }
        Ok(Beat {
            values,
            label,
            source,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> BeatLabel {
        self.label
    }

    pub fn source(&self) -> &BeatSource {
        &self.source
    }
}

/// A beat cut from a record before resampling.
#[derive(Clone, Debug, PartialEq)]
pub struct RawBeat {
    pub values: Vec<f64>,
    pub label: BeatLabel,
    pub source: BeatSource,
}

/// Decodes a format 212 byte stream into `sample_count` interleaved samples.
///
/// Every 3-byte group packs two 12-bit two's complement samples. For odd
/// counts the trailing group only needs its first two bytes.
pub fn decode_212_interleaved(bytes: &[u8], sample_count: usize) -> Result<Vec<i32>> {
    let needed = (sample_count * 3).div_ceil(2);
    if bytes.len() < needed {
        return Err(Error::TruncatedInput {
            needed,
            got: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(sample_count);
    for group in 0..sample_count.div_ceil(2) {
        let b = &bytes[group * 3..];
        let s1 = (((b[1] as i32) & 0x0f) << 8) | b[0] as i32;
        out.push(sign_extend_12(s1));
        if out.len() < sample_count {
            let s2 = (((b[1] as i32) & 0xf0) << 4) | b[2] as i32;
            out.push(sign_extend_12(s2));
        }
    }
    Ok(out)
}

/// Decodes a two-signal format 212 stream. `sample_count` is the total
/// number of samples; channel 0 takes the even positions.
pub fn decode_212(bytes: &[u8], sample_count: usize) -> Result<(Vec<i32>, Vec<i32>)> {
    let flat = decode_212_interleaved(bytes, sample_count)?;
    let first = flat.iter().step_by(2).copied().collect();
    let second = flat.iter().skip(1).step_by(2).copied().collect();
    Ok((first, second))
}

/// Packs interleaved samples into format 212. Samples must fit in 12 bits.
pub fn encode_212(samples: &[i32]) -> Result<Vec<u8>> {
    if let Some(&s) = samples.iter().find(|&&s| !(-2048..=2047).contains(&s)) {
        return Err(Error::DegenerateInput(format!(
            "sample {s} does not fit in 12 bits"
        )));
    }
    let mut out = Vec::with_capacity((samples.len() * 3).div_ceil(2));
    for pair in samples.chunks(2) {
        let s1 = (pair[0] & 0xfff) as u32;
        let s2 = pair.get(1).map_or(0, |&s| (s & 0xfff) as u32);
        out.push((s1 & 0xff) as u8);
        out.push((((s1 >> 8) & 0x0f) | ((s2 >> 4) & 0xf0)) as u8);
        if pair.len() == 2 {
            out.push((s2 & 0xff) as u8);
        }
    }
    Ok(out)
}

fn sign_extend_12(v: i32) -> i32 {
    (v << 20) >> 20
}

/// Parsed contents of a WFDB `.hea` file (single-segment records only).
#[derive(Clone, Debug, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub sampling_rate: f64,
    pub samples_per_signal: usize,
    pub signals: Vec<SignalSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: u32,
    pub gain: f64,
    pub description: String,
}

pub fn parse_header(text: &str) -> Result<RecordHeader> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, record_line) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty header".into(),
    })?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    let perr = |line: usize, message: String| Error::Parse { line, message };
    if fields.len() < 4 {
        return Err(perr(
            line_no,
            "record line needs name, signal count, sampling rate and sample count".into(),
        ));
    }
    let record_name = fields[0].split('/').next().unwrap_or(fields[0]).to_string();
    let n_signals: usize = fields[1]
        .parse()
        .map_err(|_| perr(line_no, format!("bad signal count {:?}", fields[1])))?;
    // Sampling rate may carry a counter frequency suffix, e.g. "360/2".
    let fs_field = fields[2].split('/').next().unwrap_or(fields[2]);
    let sampling_rate: f64 = fs_field
        .parse()
        .map_err(|_| perr(line_no, format!("bad sampling rate {:?}", fields[2])))?;
    let samples_per_signal: usize = fields[3]
        .parse()
        .map_err(|_| perr(line_no, format!("bad sample count {:?}", fields[3])))?;

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let (line_no, sig_line) = lines.next().ok_or(Error::Parse {
            line: line_no,
            message: format!("expected {n_signals} signal lines"),
        })?;
        let f: Vec<&str> = sig_line.split_whitespace().collect();
        if f.len() < 2 {
            return Err(perr(line_no, "signal line needs file name and format".into()));
        }
        let fmt_field = f[1].split(['x', ':', '+']).next().unwrap_or(f[1]);
        let format: u32 = fmt_field
            .parse()
            .map_err(|_| perr(line_no, format!("bad format {:?}", f[1])))?;
        let gain = match f.get(2) {
            Some(g) => {
                let num = g.split(['(', '/']).next().unwrap_or(g);
                let v: f64 = num
                    .parse()
                    .map_err(|_| perr(line_no, format!("bad gain {g:?}")))?;
                if v == 0.0 {
                    200.0
                } else {
                    v
                }
            }
            None => 200.0,
        };
        let description = if f.len() > 8 { f[8..].join(" ") } else { String::new() };
        signals.push(SignalSpec {
            file_name: f[0].to_string(),
            format,
            gain,
            description,
        });
    }
    Ok(RecordHeader {
        record_name,
        sampling_rate,
        samples_per_signal,
        signals,
    })
}

/// Loads a record from its `.hea` file; signal files are resolved relative
/// to the header's directory. All signals must share one format 212 file.
pub fn read_record(header_path: &Path) -> Result<EcgRecord> {
    let text = std::fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_header(&text)?;
    let first = header
        .signals
        .first()
        .ok_or_else(|| Error::config("record has no signals"))?;
    if header.signals.iter().any(|s| s.format != 212) {
        return Err(Error::config("only signal format 212 is supported"));
    }
    if header.signals.iter().any(|s| s.file_name != first.file_name) {
        return Err(Error::config("signals split across several files are not supported"));
    }
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
    let dat_path = dir.join(&first.file_name);
    let bytes = std::fs::read(&dat_path).map_err(|e| Error::io(&dat_path, e))?;
    let n_sig = header.signals.len();
    let flat = decode_212_interleaved(&bytes, header.samples_per_signal * n_sig)?;
    let channels = (0..n_sig)
        .map(|c| flat.iter().skip(c).step_by(n_sig).copied().collect())
        .collect();
    EcgRecord::new(header.record_name, header.sampling_rate, first.gain, channels)
}

/// Writes a record as a `.hea` + `.dat` pair in `dir`.
pub fn write_record(dir: &Path, record: &EcgRecord) -> Result<std::path::PathBuf> {
    let n_sig = record.channel_count();
    let n = record.samples_per_channel();
    let mut flat = Vec::with_capacity(n * n_sig);
    for i in 0..n {
        for c in &record.channels {
            flat.push(c[i]);
        }
    }
    let bytes = encode_212(&flat)?;
    let dat_name = format!("{}.dat", record.record_id);
    let dat_path = dir.join(&dat_name);
    std::fs::write(&dat_path, bytes).map_err(|e| Error::io(&dat_path, e))?;

    let mut hea = format!(
        "{} {} {} {}\n",
        record.record_id, n_sig, record.sampling_rate, n
    );
    for c in 0..n_sig {
        hea.push_str(&format!(
            "{dat_name} 212 {} 11 0 {} 0 0 ch{c}\n",
            record.gain,
            record.channels[c].first().copied().unwrap_or(0)
        ));
    }
    let hea_path = dir.join(format!("{}.hea", record.record_id));
    std::fs::write(&hea_path, hea).map_err(|e| Error::io(&hea_path, e))?;
    Ok(hea_path)
}

/// Parses `sample_index,label` lines. Blank lines and `#` comments are
/// skipped, as is a leading `sample_index,label` header. The result is
/// sorted by sample index.
pub fn read_annotations(text: &str) -> Result<Vec<BeatAnnotation>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let idx_field = parts.next().unwrap_or("").trim();
        let label_field = parts.next().map(str::trim);
        if out.is_empty() && idx_field == "sample_index" {
            continue;
        }
        let label_field = label_field.filter(|l| !l.is_empty()).ok_or(Error::Parse {
            line: i + 1,
            message: "expected `sample_index,label`".into(),
        })?;
        let sample_index = idx_field.parse::<usize>().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("bad sample index {idx_field:?}"),
        })?;
        out.push(BeatAnnotation {
            sample_index,
            label: BeatLabel::from_symbol(label_field),
        });
    }
    out.sort_by_key(|a| a.sample_index);
    Ok(out)
}

pub fn write_annotations(annotations: &[BeatAnnotation]) -> String {
    let mut s = String::from("sample_index,label\n");
    for a in annotations {
        s.push_str(&format!("{},{}\n", a.sample_index, a.label));
    }
    s
}

/// Segmentation window around an annotated R peak.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentWindow {
    pub pre_s: f64,
    pub post_s: f64,
}

impl Default for SegmentWindow {
    fn default() -> Self {
        SegmentWindow {
            pre_s: 0.25,
            post_s: 0.45,
        }
    }
}

impl SegmentWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.pre_s > 0.0 && self.post_s > 0.0) {
            return Err(Error::config(format!(
                "segment window must be positive, got pre={} post={}",
                self.pre_s, self.post_s
            )));
        }
        Ok(())
    }

    /// Sample offsets (before, after) at sampling rate `fs`.
    pub fn extents(&self, fs: f64) -> (usize, usize) {
        (
            (self.pre_s * fs).round() as usize,
            (self.post_s * fs).round() as usize,
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct Segmentation {
    pub beats: Vec<RawBeat>,
    /// Target-class annotations whose window fell outside the record.
    pub skipped: usize,
}

/// Cuts `[index - pre, index + post)` around every target-class annotation.
pub fn segment_beats(
    record: &EcgRecord,
    annotations: &[BeatAnnotation],
    channel: usize,
    window: SegmentWindow,
) -> Result<Segmentation> {
    let signal = record.physical(channel).ok_or_else(|| {
        Error::config(format!(
            "channel {channel} not present (record has {})",
            record.channel_count()
        ))
    })?;
    segment_signal(&signal, record, annotations, window)
}

fn segment_signal(
    signal: &[f64],
    record: &EcgRecord,
    annotations: &[BeatAnnotation],
    window: SegmentWindow,
) -> Result<Segmentation> {
    window.validate()?;
    let len = signal.len();
    let (pre, post) = window.extents(record.sampling_rate());
    let mut seg = Segmentation::default();
    for a in annotations {
        if a.sample_index >= len {
            return Err(Error::OutOfRange {
                index: a.sample_index,
                len,
            });
        }
        if !a.label.is_target() {
            continue;
        }
        if a.sample_index < pre || a.sample_index + post > len {
            seg.skipped += 1;
            continue;
        }
        seg.beats.push(RawBeat {
            values: signal[a.sample_index - pre..a.sample_index + post].to_vec(),
            label: a.label,
            source: BeatSource {
                record_id: record.record_id().to_string(),
                sample_index: a.sample_index,
            },
        });
    }
    Ok(seg)
}

/// Linear interpolation of `raw` onto `n` equally spaced points spanning
/// `[0, len - 1]`. Both endpoints are reproduced exactly.
pub fn resample_linear(raw: &[f64], n: usize) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: raw.len(),
        });
    }
    if n < 2 {
        return Err(Error::config("resample target must have at least 2 points"));
    }
    let last = raw.len() - 1;
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let x = (i * last) as f64 / denom;
            let lo = x.floor() as usize;
            if lo >= last {
                return raw[last];
            }
            let frac = x - lo as f64;
            if frac == 0.0 {
                raw[lo]
            } else {
                raw[lo] + frac * (raw[lo + 1] - raw[lo])
            }
        })
        .collect())
}

pub fn resample_to_300(raw: &[f64]) -> Result<Vec<f64>> {
    resample_linear(raw, BEAT_LEN)
}

/// Z-score normalization with population standard deviation. Constant
/// input maps to all zeros.
pub fn normalize_beat(b: &[f64]) -> Vec<f64> {
    let n = b.len() as f64;
    if b.is_empty() {
        return Vec::new();
    }
    let mean = b.iter().sum::<f64>() / n;
    let var = b.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if std <= 1e-12 * scale.max(f64::MIN_POSITIVE) || std == 0.0 {
        return vec![0.0; b.len()];
    }
    b.iter().map(|v| (v - mean) / std).collect()
}

/// Record-level conditioning applied before segmentation.
#[derive(Clone, Debug)]
pub struct DenoiseSettings {
    pub filter_bank: FilterBank,
    pub levels: usize,
    pub threshold_scale: f64,
}

/// Full ingest of one record: optional denoising of the chosen channel,
/// segmentation, resampling to [`BEAT_LEN`] and normalization.
pub fn prepare_beats(
    record: &EcgRecord,
    annotations: &[BeatAnnotation],
    channel: usize,
    window: SegmentWindow,
    denoise: Option<&DenoiseSettings>,
) -> Result<(Vec<Beat>, usize)> {
    let mut signal = record.physical(channel).ok_or_else(|| {
        Error::config(format!(
            "channel {channel} not present (record has {})",
            record.channel_count()
        ))
    })?;
    if let Some(dn) = denoise {
        signal = wavelet::denoise(&signal, &dn.filter_bank, dn.levels, dn.threshold_scale)?;
    }
    let seg = segment_signal(&signal, record, annotations, window)?;
    let beats = seg
        .beats
        .into_iter()
        .map(|raw| {
            let values = normalize_beat(&resample_to_300(&raw.values)?);
            Beat::new(values, raw.label, raw.source)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((beats, seg.skipped))
}

/// Parses the pre-segmented beat CSV: `label,v1,...,v300` per row.
pub fn read_beats_csv(text: &str, source_name: &str) -> Result<Vec<Beat>> {
    let mut beats = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let label = BeatLabel::from_symbol(fields.next().unwrap_or("").trim());
        let values = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("bad sample value {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != BEAT_LEN {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} columns, got {}", BEAT_LEN + 1, values.len() + 1),
            });
        }
        let source = BeatSource {
            record_id: source_name.to_string(),
            sample_index: i,
        };
        beats.push(Beat::new(values, label, source)?);
    }
    Ok(beats)
}

pub fn write_beats_csv(beats: &[Beat]) -> String {
    let mut s = String::with_capacity(beats.len() * BEAT_LEN * 12);
    for b in beats {
        s.push_str(b.label.symbol());
        for v in &b.values {
            s.push(',');
            s.push_str(&format!("{v:e}"));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_212_bit_layout() {
        assert_eq!(decode_212(&[0x01, 0x00, 0x02], 2).unwrap(), (vec![1], vec![2]));
        assert_eq!(decode_212(&[0x00, 0xF0, 0xFF], 2).unwrap(), (vec![0], vec![-1]));
        assert_eq!(decode_212(&[0xFF, 0x07, 0x00], 2).unwrap(), (vec![2047], vec![0]));
        assert_eq!(decode_212(&[0x00, 0x88, 0x00], 2).unwrap(), (vec![-2048], vec![-2048]));
    }

    #[test]
    fn decode_212_truncated() {
        assert!(matches!(
            decode_212(&[0x01, 0x00], 2),
            Err(Error::TruncatedInput { needed: 3, got: 2 })
        ));
        // An odd count only needs the first two bytes of the last group.
        assert_eq!(decode_212_interleaved(&[0x05, 0x00], 1).unwrap(), vec![5]);
    }

    proptest! {
        #[test]
        fn format_212_roundtrip(bytes in proptest::collection::vec(any::<u8>(), 0..40usize)) {
            let groups = bytes.len() / 3;
            let bytes = &bytes[..groups * 3];
            let samples = decode_212_interleaved(bytes, groups * 2).unwrap();
            prop_assert_eq!(encode_212(&samples).unwrap(), bytes.to_vec());
        }

        #[test]
        fn normalize_is_idempotent(v in proptest::collection::vec(-1e3f64..1e3, BEAT_LEN)) {
            let once = normalize_beat(&v);
            let twice = normalize_beat(&once);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn annotations_parse_sort_and_map() {
        let a = read_annotations("100,N\n450,V").unwrap();
        assert_eq!(a[0], BeatAnnotation { sample_index: 100, label: BeatLabel::Normal });
        assert_eq!(a[1].label, BeatLabel::VentricularPremature);
        let b = read_annotations("450,V\n100,N").unwrap();
        assert_eq!(a, b);
        let c = read_annotations("# comment\n100,Q\n").unwrap();
        assert_eq!(c, vec![BeatAnnotation { sample_index: 100, label: BeatLabel::Other }]);
        let err = read_annotations("100,N\nabc,V").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(read_annotations("12").unwrap_err(), Error::Parse { line: 1, .. }));
    }

    fn flat_record(len: usize) -> EcgRecord {
        EcgRecord::new("t", 360.0, 200.0, vec![(0..len as i32).collect()]).unwrap()
    }

    #[test]
    fn segmentation_window_arithmetic() {
        let rec = flat_record(5000);
        let ann = [
            BeatAnnotation { sample_index: 10, label: BeatLabel::Normal },
            BeatAnnotation { sample_index: 1000, label: BeatLabel::Normal },
            BeatAnnotation { sample_index: 2000, label: BeatLabel::Other },
            BeatAnnotation { sample_index: 4900, label: BeatLabel::Paced },
        ];
        let seg = segment_beats(&rec, &ann, 0, SegmentWindow::default()).unwrap();
        assert_eq!(seg.beats.len(), 1);
        assert_eq!(seg.skipped, 2);
        let b = &seg.beats[0];
        assert_eq!(b.values.len(), 252);
        assert_eq!(b.values[0], 910.0 / 200.0);
        assert_eq!(*b.values.last().unwrap(), 1161.0 / 200.0);
    }

    #[test]
    fn segmentation_counts_in_bounds_targets() {
        let rec = flat_record(5000);
        let ann: Vec<_> = [1000, 2000, 3000]
            .iter()
            .map(|&i| BeatAnnotation { sample_index: i, label: BeatLabel::Normal })
            .collect();
        let seg = segment_beats(&rec, &ann, 0, SegmentWindow::default()).unwrap();
        assert_eq!(seg.beats.len(), 3);
        assert!(seg.beats.iter().all(|b| b.label == BeatLabel::Normal));

        let bad = [BeatAnnotation { sample_index: 5000, label: BeatLabel::Normal }];
        assert!(matches!(
            segment_beats(&rec, &bad, 0, SegmentWindow::default()),
            Err(Error::OutOfRange { index: 5000, len: 5000 })
        ));
        assert!(segment_beats(&rec, &ann, 0, SegmentWindow { pre_s: 0.0, post_s: 0.4 }).is_err());
    }

    #[test]
    fn resample_contracts() {
        let v: Vec<f64> = (0..300).map(|i| ((i * 37) % 11) as f64).collect();
        assert_eq!(resample_to_300(&v).unwrap(), v);
        assert_eq!(resample_to_300(&[2.5; 17]).unwrap(), vec![2.5; 300]);
        for len in [2usize, 3, 252, 301, 1000] {
            let ramp: Vec<f64> = (0..len).map(|i| i as f64).collect();
            let out = resample_to_300(&ramp).unwrap();
            assert_eq!(out[0], 0.0);
            assert_eq!(out[299], (len - 1) as f64);
            for (i, y) in out.iter().enumerate() {
                let exact = i as f64 * (len - 1) as f64 / 299.0;
                assert!((y - exact).abs() < 1e-12);
            }
        }
        assert!(matches!(resample_to_300(&[1.0]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn normalize_contracts() {
        assert_eq!(normalize_beat(&[1.0; 300]), vec![0.0; 300]);
        assert_eq!(normalize_beat(&[0.1; 300]), vec![0.0; 300]);
        let b: Vec<f64> = (0..300).map(|i| (i as f64 * 0.1).sin() + 0.3).collect();
        let z = normalize_beat(&b);
        let mean = z.iter().sum::<f64>() / 300.0;
        let std = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 300.0).sqrt();
        assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9);
        let affine: Vec<f64> = b.iter().map(|v| 5.0 * v + 3.0).collect();
        for (p, q) in z.iter().zip(normalize_beat(&affine)) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn header_parsing() {
        let text = "# MIT-BIH\n100 2 360 650000\n100.dat 212 200 11 1024 995 -22131 0 MLII\n100.dat 212 200(0)/mV 11 1024 1011 20052 0 V5\n";
        let h = parse_header(text).unwrap();
        assert_eq!(h.record_name, "100");
        assert_eq!(h.sampling_rate, 360.0);
        assert_eq!(h.samples_per_signal, 650000);
        assert_eq!(h.signals.len(), 2);
        assert_eq!(h.signals[1].gain, 200.0);
        assert_eq!(h.signals[0].description, "MLII");
        assert!(parse_header("100 2 360").is_err());
        assert!(parse_header("100 2 360 10\n100.dat 212 200\n").is_err());
    }

    #[test]
    fn record_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let ch0: Vec<i32> = (0..1001).map(|i| (i % 4000) - 2000).collect();
        let ch1: Vec<i32> = ch0.iter().map(|v| -v).collect();
        let rec = EcgRecord::new("r1", 360.0, 200.0, vec![ch0.clone(), ch1.clone()]).unwrap();
        let hea = write_record(dir.path(), &rec).unwrap();
        let back = read_record(&hea).unwrap();
        assert_eq!(back.channel(0).unwrap(), ch0.as_slice());
        assert_eq!(back.channel(1).unwrap(), ch1.as_slice());
        assert_eq!(back.sampling_rate(), 360.0);
    }

    #[test]
    fn beats_csv_roundtrip() {
        let beats: Vec<Beat> = (0..3)
            .map(|i| {
                let v: Vec<f64> = (0..300).map(|j| (j as f64 * 0.01 + i as f64).cos()).collect();
                let src = BeatSource { record_id: "csv".into(), sample_index: i };
                Beat::new(v, BeatLabel::TARGETS[i], src).unwrap()
            })
            .collect();
        let back = read_beats_csv(&write_beats_csv(&beats), "csv").unwrap();
        assert_eq!(back, beats);
        assert!(read_beats_csv("N,1,2,3", "x").is_err());
    }
}
