//! Command-line front end: configuration, command dispatch and artifacts.

mod config;
mod io;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classify::{ovo_train, pso_search, OvoModel, SmoOptions};
use crate::codec::{
    beat_errors, cr_from_counts, decode_codes, encode_codes, err_metric, CodeFile, SparseCode,
};
use crate::dictionary::{kmeans_vq, train_online, Dictionary};
use crate::error::{Error, Result};
use crate::features::{read_features_csv, write_features_csv};
use crate::ingest::{
    prepare_beats, read_annotations, read_beats_csv, read_record, write_annotations, write_beats_csv, write_record,
    Beat, BeatLabel, BEAT_LEN,
};
use crate::pipeline::{
    accuracy, beat_features, compress_all, confusion_matrix, reconstruct_all, split_dataset, stack_columns,
    tpm_features, vq_codes, Split,
};
use crate::sparse_coding::FeatureSign;
use crate::synth::{synth_beats, synth_record};
use crate::wavelet::FilterBank;

pub use config::{default_annotations, Dataset, PipelineConfig, CONFIG_HELP};
use io::{read_bytes, read_text, write_atomic};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "sparse-ecg",
    version,
    about = "Sparse dictionary compression and classification of ECG beats",
    after_help = CONFIG_HELP
)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for every artifact (same as `--set out_dir=DIR`).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Log progress to standard error; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum Command {
    /// Write a synthetic annotated record (synth.hea, synth.dat, synth.ann.csv).
    Synth,
    /// Condition the configured dataset into beats.csv and split.csv.
    Ingest,
    /// Learn a dictionary from the training beats: dictionary.sbd.
    TrainDict,
    /// Sparse-code every beat: codes.sbc.
    Encode,
    /// Dump original and reconstructed samples: waveforms.csv.
    Reconstruct,
    /// Reconstruction error and compression ratio: metrics.json, metrics.csv.
    Metrics,
    /// Pyramid features of every code: features.csv.
    Featurize,
    /// Train the one-vs-one SVM on the training features: model.json.
    TrainSvm,
    /// Score the model on the test features: accuracy.csv, confusion.csv.
    Evaluate,
    /// Run every stage from ingest to evaluate.
    Pipeline,
}

/// Runs the command line and returns the process exit status: 0 on
/// success, 1 on invalid usage or configuration, 2 on data errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    match load_config(&cli).and_then(|cfg| execute(cli.command, &cfg)) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut overrides = cli
        .set
        .iter()
        .map(|s| config::split_assignment(s).map(|(k, v)| (k.to_string(), v.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &cli.out_dir {
        overrides.push(("out_dir".into(), dir.to_string_lossy().into_owned()));
    }
    let cfg = PipelineConfig::from_sources(text.as_deref(), &overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Artifact locations inside the output directory.
struct Paths(PathBuf);

impl Paths {
    fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    fb: FilterBank,
    d: usize,
    paths: Paths,
}

fn execute(command: Command, cfg: &PipelineConfig) -> Result<Value> {
    let ctx = Ctx {
        cfg,
        fb: cfg.filter_bank()?,
        d: cfg.feature_dim()?,
        paths: Paths(cfg.out_dir.clone()),
    };
    let mut summary = match command {
        Command::Synth => synth(&ctx),
        Command::Ingest => ingest(&ctx),
        Command::TrainDict => train_dict(&ctx),
        Command::Encode => encode(&ctx),
        Command::Reconstruct => reconstruct(&ctx),
        Command::Metrics => metrics(&ctx),
        Command::Featurize => featurize(&ctx),
        Command::TrainSvm => train_svm(&ctx),
        Command::Evaluate => evaluate(&ctx),
        Command::Pipeline => pipeline(&ctx),
    }?;
    let name = format!("{command:?}")
        .chars()
        .flat_map(|c| {
            let lower = c.to_ascii_lowercase();
            (c.is_ascii_uppercase().then_some('-').into_iter()).chain(std::iter::once(lower))
        })
        .skip(1)
        .collect::<String>();
    if let Value::Object(m) = &mut summary {
        m.insert("command".into(), Value::String(name));
    }
    Ok(summary)
}

fn load_dataset(cfg: &PipelineConfig) -> Result<(Vec<Beat>, usize)> {
    match cfg.dataset {
        Dataset::Synthetic => Ok((synth_beats(&BeatLabel::TARGETS, &cfg.synth)?, 0)),
        Dataset::Records => {
            let denoise = cfg.denoise_settings()?;
            let mut beats = Vec::new();
            let mut skipped = 0;
            for (hea, ann) in cfg.records.iter().zip(cfg.annotation_paths()?) {
                let record = read_record(hea)?;
                let annotations = read_annotations(&read_text(&ann)?)?;
                let (b, s) = prepare_beats(&record, &annotations, cfg.channel, cfg.segment, denoise.as_ref())?;
                info!("{}: {} beats, {} skipped", hea.display(), b.len(), s);
                beats.extend(b);
                skipped += s;
            }
            Ok((beats, skipped))
        }
        Dataset::BeatsCsv => {
            let path = cfg.beats_csv.as_ref().expect("validated");
            let all = read_beats_csv(&read_text(path)?, &path.to_string_lossy())?;
            let total = all.len();
            let beats: Vec<Beat> = all.into_iter().filter(|b| b.label().is_target()).collect();
            let skipped = total - beats.len();
            Ok((beats, skipped))
        }
    }
}

fn class_counts<'a>(labels: impl IntoIterator<Item = &'a BeatLabel>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for l in labels {
        *m.entry(l.symbol().to_string()).or_insert(0) += 1;
    }
    m
}

fn synth(ctx: &Ctx) -> Result<Value> {
    let (record, annotations) = synth_record("synth", &BeatLabel::TARGETS, &ctx.cfg.synth)?;
    let dir = &ctx.paths.0;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // Written into a scratch directory first so a failure leaves nothing
    // behind in the output directory.
    let scratch = tempfile::Builder::new()
        .prefix(".synth-")
        .tempdir_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    write_record(scratch.path(), &record)?;
    let ann = scratch.path().join("synth.ann.csv");
    std::fs::write(&ann, write_annotations(&annotations)).map_err(|e| Error::io(&ann, e))?;
    for name in ["synth.dat", "synth.ann.csv", "synth.hea"] {
        let to = ctx.paths.file(name);
        std::fs::rename(scratch.path().join(name), &to).map_err(|e| Error::io(&to, e))?;
    }
    Ok(json!({
        "record": ctx.paths.file("synth.hea"),
        "beats": annotations.len(),
        "samples": record.samples_per_channel(),
    }))
}

fn write_split(split: &Split, n: usize) -> String {
    let mut set = vec!["test"; n];
    for &i in &split.train {
        set[i] = "train";
    }
    let mut s = String::from("beat_id,set\n");
    for (i, name) in set.iter().enumerate() {
        s.push_str(&format!("{i},{name}\n"));
    }
    s
}

fn read_split(path: &Path, n: usize) -> Result<Split> {
    let text = read_text(path)?;
    let mut seen = vec![false; n];
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("beat_id")) {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let (id, set) = line.split_once(',').ok_or_else(|| bad("expected `beat_id,set`".into()))?;
        let id: usize = id.trim().parse().map_err(|_| bad(format!("bad beat id {id:?}")))?;
        if id >= n || std::mem::replace(&mut seen[id], true) {
            return Err(bad(format!("beat id {id} is out of range or repeated for {n} beats")));
        }
        match set.trim() {
            "train" => split.train.push(id),
            "test" => split.test.push(id),
            other => return Err(bad(format!("unknown set {other:?}"))),
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::CorruptFile(format!(
            "{}: beat {missing} is in neither set",
            path.display()
        )));
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

fn ingest(ctx: &Ctx) -> Result<Value> {
    let (beats, skipped) = load_dataset(ctx.cfg)?;
    if beats.is_empty() {
        return Err(Error::NotEnoughData { needed: 1, got: 0 });
    }
    let labels: Vec<BeatLabel> = beats.iter().map(Beat::label).collect();
    let split = split_dataset(&labels, &ctx.cfg.split)?;
    write_atomic(&ctx.paths.file("beats.csv"), write_beats_csv(&beats).as_bytes())?;
    write_atomic(&ctx.paths.file("split.csv"), write_split(&split, beats.len()).as_bytes())?;
    Ok(json!({
        "beats": beats.len(),
        "skipped": skipped,
        "train": split.train.len(),
        "test": split.test.len(),
        "classes": class_counts(&labels),
    }))
}

fn load_beats(ctx: &Ctx) -> Result<Vec<Beat>> {
    let path = ctx.paths.file("beats.csv");
    let beats = read_beats_csv(&read_text(&path)?, "beats")?;
    if beats.is_empty() {
        return Err(Error::NotEnoughData { needed: 1, got: 0 });
    }
    Ok(beats)
}

fn load_dictionary(ctx: &Ctx) -> Result<Dictionary> {
    let dict = Dictionary::from_bytes(&read_bytes(&ctx.paths.file("dictionary.sbd"))?)?;
    if dict.dim() != ctx.d {
        return Err(Error::shape(format!(
            "dictionary has dimension {}, the configured features have {}",
            dict.dim(),
            ctx.d
        )));
    }
    Ok(dict)
}

fn load_codes(ctx: &Ctx, beats: usize) -> Result<CodeFile> {
    let file = decode_codes(&read_bytes(&ctx.paths.file("codes.sbc"))?)?;
    if file.codes.len() != beats {
        return Err(Error::shape(format!("{} codes for {beats} beats", file.codes.len())));
    }
    Ok(file)
}

fn check_k(dict: &Dictionary, codes: &CodeFile) -> Result<()> {
    if dict.len() != codes.k {
        return Err(Error::shape(format!(
            "dictionary has k = {}, codes have k = {}",
            dict.len(),
            codes.k
        )));
    }
    Ok(())
}

fn train_dict(ctx: &Ctx) -> Result<Value> {
    let beats = load_beats(ctx)?;
    let split = read_split(&ctx.paths.file("split.csv"), beats.len())?;
    let train: Vec<Beat> = split.train.iter().map(|&i| beats[i].clone()).collect();
    let features = beat_features(&train, &ctx.fb, ctx.cfg.geometry)?;
    let y = stack_columns(&features)?;
    let tc = ctx.cfg.train_config(ctx.d);
    info!("training {} atoms on {} windows", tc.k, y.ncols());
    let out = train_online(&y, &tc)?;
    write_atomic(&ctx.paths.file("dictionary.sbd"), &out.dictionary.to_bytes())?;
    Ok(json!({
        "d": ctx.d,
        "k": tc.k,
        "lambda": tc.lambda,
        "train_beats": train.len(),
        "windows": y.ncols(),
        "final_objective": out.epoch_objective(tc.epochs - 1),
    }))
}

/// Codes as stored on disk, so later stages see exactly the file contents.
fn code_beats(ctx: &Ctx, dict: &Dictionary, beats: &[Beat]) -> Result<Vec<SparseCode>> {
    let features = beat_features(beats, &ctx.fb, ctx.cfg.geometry)?;
    let labels: Vec<BeatLabel> = beats.iter().map(Beat::label).collect();
    let codes = compress_all(dict, &features, &labels, ctx.cfg.lambda_for(ctx.d), &FeatureSign::default())?;
    codes.iter().map(SparseCode::narrowed).collect()
}

fn encode(ctx: &Ctx) -> Result<Value> {
    let beats = load_beats(ctx)?;
    let dict = load_dictionary(ctx)?;
    let codes = code_beats(ctx, &dict, &beats)?;
    write_atomic(&ctx.paths.file("codes.sbc"), &encode_codes(dict.len(), &codes)?)?;
    let counts: Vec<usize> = codes.iter().map(SparseCode::nnz).collect();
    Ok(json!({
        "beats": codes.len(),
        "k": dict.len(),
        "lambda": ctx.cfg.lambda_for(ctx.d),
        "nnz_mean": mean_count(&counts),
        "cr_mean": cr_from_counts(&counts, BEAT_LEN),
    }))
}

fn mean_count(counts: &[usize]) -> f64 {
    counts.iter().sum::<usize>() as f64 / counts.len() as f64
}

fn reconstruct(ctx: &Ctx) -> Result<Value> {
    let beats = load_beats(ctx)?;
    let dict = load_dictionary(ctx)?;
    let file = load_codes(ctx, beats.len())?;
    check_k(&dict, &file)?;
    let n = ctx.cfg.waveform_beats.min(beats.len());
    let rec = reconstruct_all(dict.atoms(), &file.codes[..n], &ctx.fb, ctx.cfg.geometry, BEAT_LEN)?;
    let mut s = String::from("beat_id,sample,original,reconstructed\n");
    for (id, r) in rec.iter().enumerate() {
        for (t, (o, m)) in beats[id].values().iter().zip(r).enumerate() {
            s.push_str(&format!("{id},{t},{o:e},{m:e}\n"));
        }
    }
    write_atomic(&ctx.paths.file("waveforms.csv"), s.as_bytes())?;
    Ok(json!({ "beats": n }))
}

#[derive(Debug, Serialize)]
struct ClassMetrics {
    beats: usize,
    err_mean: f64,
    cr_mean: f64,
}

fn metrics(ctx: &Ctx) -> Result<Value> {
    let beats = load_beats(ctx)?;
    let dict = load_dictionary(ctx)?;
    let file = load_codes(ctx, beats.len())?;
    check_k(&dict, &file)?;
    let originals: Vec<&[f64]> = beats.iter().map(Beat::values).collect();
    let rec = reconstruct_all(dict.atoms(), &file.codes, &ctx.fb, ctx.cfg.geometry, BEAT_LEN)?;
    let errors = beat_errors(&rec, &originals)?;
    let counts: Vec<usize> = file.codes.iter().map(SparseCode::nnz).collect();

    let mut per_class = BTreeMap::new();
    for label in beats.iter().map(Beat::label).collect::<std::collections::BTreeSet<_>>() {
        let idx: Vec<usize> = (0..beats.len()).filter(|&i| beats[i].label() == label).collect();
        let c: Vec<usize> = idx.iter().map(|&i| counts[i]).collect();
        per_class.insert(
            label.symbol().to_string(),
            ClassMetrics {
                beats: idx.len(),
                err_mean: idx.iter().map(|&i| errors[i]).sum::<f64>() / idx.len() as f64,
                cr_mean: cr_from_counts(&c, BEAT_LEN),
            },
        );
    }

    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "beats": beats.len(),
        "k": dict.len(),
        "lambda": ctx.cfg.lambda_for(ctx.d),
        "err_mean": err_metric(&rec, &originals)?,
        "cr_mean": cr_from_counts(&counts, BEAT_LEN),
        "nnz_mean": mean_count(&counts),
        "per_class": per_class,
    });
    if ctx.cfg.vq_baseline {
        let split = read_split(&ctx.paths.file("split.csv"), beats.len())?;
        let features = beat_features(&beats, &ctx.fb, ctx.cfg.geometry)?;
        let y = stack_columns(split.train.iter().map(|&i| &features[i]))?;
        let km = kmeans_vq(&y, dict.len(), ctx.cfg.dict_seed, ctx.cfg.kmeans_iters)?;
        let labels: Vec<BeatLabel> = beats.iter().map(Beat::label).collect();
        let vq = vq_codes(&km, &features, &labels)?;
        let vq_rec = reconstruct_all(&km.centroids, &vq, &ctx.fb, ctx.cfg.geometry, BEAT_LEN)?;
        doc["vq_err_mean"] = json!(err_metric(&vq_rec, &originals)?);
    }

    let mut table = String::from("beat_id,label,nnz,err\n");
    for (i, b) in beats.iter().enumerate() {
        table.push_str(&format!("{i},{},{},{:e}\n", b.label(), counts[i], errors[i]));
    }
    write_atomic(&ctx.paths.file("metrics.json"), serde_json::to_string_pretty(&doc)?.as_bytes())?;
    write_atomic(&ctx.paths.file("metrics.csv"), table.as_bytes())?;

    let mut summary = json!({
        "beats": beats.len(),
        "k": dict.len(),
        "err_mean": doc["err_mean"],
        "cr_mean": doc["cr_mean"],
    });
    if let Some(v) = doc.get("vq_err_mean") {
        summary["vq_err_mean"] = v.clone();
    }
    Ok(summary)
}

fn featurize(ctx: &Ctx) -> Result<Value> {
    let file = decode_codes(&read_bytes(&ctx.paths.file("codes.sbc"))?)?;
    if file.codes.is_empty() {
        return Err(Error::NotEnoughData { needed: 1, got: 0 });
    }
    let rows = tpm_features(&file.codes, &ctx.cfg.pyramid)?;
    write_atomic(&ctx.paths.file("features.csv"), write_features_csv(&rows).as_bytes())?;
    Ok(json!({
        "beats": rows.len(),
        "dim": rows[0].1.len(),
    }))
}

/// Features as plain rows plus labels.
fn load_features(ctx: &Ctx) -> Result<(Vec<Vec<f64>>, Vec<BeatLabel>, Split)> {
    let rows = read_features_csv(&read_text(&ctx.paths.file("features.csv"))?)?;
    let split = read_split(&ctx.paths.file("split.csv"), rows.len())?;
    let (labels, z) = rows.into_iter().map(|(l, v)| (l, v.as_slice().to_vec())).unzip::<_, _, Vec<_>, Vec<_>>();
    Ok((z, labels, split))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    c: f64,
    gamma: f64,
    cv_accuracy: Option<f64>,
    converged: bool,
    model: OvoModel<BeatLabel>,
}

fn train_svm(ctx: &Ctx) -> Result<Value> {
    let (z, labels, split) = load_features(ctx)?;
    let zt: Vec<Vec<f64>> = split.train.iter().map(|&i| z[i].clone()).collect();
    let lt: Vec<BeatLabel> = split.train.iter().map(|&i| labels[i]).collect();
    let (c, gamma, cv_accuracy) = match (ctx.cfg.svm_c, ctx.cfg.svm_gamma) {
        (Some(c), Some(g)) => (c, g, None),
        _ => {
            info!("searching C and gamma over {} training beats", zt.len());
            let s = pso_search(&zt, &lt, &ctx.cfg.pso)?;
            (s.c, s.gamma, Some(s.accuracy))
        }
    };
    let model = ovo_train(&zt, &lt, c, gamma, &SmoOptions::default())?;
    let converged = model.converged();
    if !converged {
        log::warn!("some pairwise models stopped at the iteration cap");
    }
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        c,
        gamma,
        cv_accuracy,
        converged,
        model,
    };
    write_atomic(&ctx.paths.file("model.json"), serde_json::to_string(&file)?.as_bytes())?;
    Ok(json!({
        "train_beats": zt.len(),
        "c": c,
        "gamma": gamma,
        "cv_accuracy": cv_accuracy,
        "converged": converged,
    }))
}

fn evaluate(ctx: &Ctx) -> Result<Value> {
    let (z, labels, split) = load_features(ctx)?;
    let file: ModelFile = serde_json::from_str(&read_text(&ctx.paths.file("model.json"))?)?;
    if split.test.is_empty() {
        return Err(Error::NotEnoughData { needed: 1, got: 0 });
    }
    let zt: Vec<Vec<f64>> = split.test.iter().map(|&i| z[i].clone()).collect();
    let truth: Vec<BeatLabel> = split.test.iter().map(|&i| labels[i]).collect();
    let predicted = file.model.predict_all(&zt)?;

    let mut classes = file.model.classes.clone();
    for l in &truth {
        if !classes.contains(l) {
            classes.push(*l);
        }
    }
    let m = confusion_matrix(&classes, &predicted, &truth);
    let mut acc = String::from("class,count,correct,accuracy\n");
    for (i, c) in classes.iter().enumerate() {
        let count: usize = m[i].iter().sum();
        let ratio = if count == 0 { f64::NAN } else { m[i][i] as f64 / count as f64 };
        acc.push_str(&format!("{c},{count},{},{ratio}\n", m[i][i]));
    }
    let overall = accuracy(&predicted, &truth);
    let correct: usize = (0..classes.len()).map(|i| m[i][i]).sum();
    acc.push_str(&format!("all,{},{correct},{overall}\n", truth.len()));

    let mut conf = String::from("true\\predicted");
    for c in &classes {
        conf.push_str(&format!(",{c}"));
    }
    conf.push('\n');
    for (i, c) in classes.iter().enumerate() {
        conf.push_str(c.symbol());
        for v in &m[i] {
            conf.push_str(&format!(",{v}"));
        }
        conf.push('\n');
    }
    write_atomic(&ctx.paths.file("accuracy.csv"), acc.as_bytes())?;
    write_atomic(&ctx.paths.file("confusion.csv"), conf.as_bytes())?;
    Ok(json!({
        "test_beats": truth.len(),
        "accuracy": overall,
    }))
}

fn pipeline(ctx: &Ctx) -> Result<Value> {
    let ingest = ingest(ctx)?;
    let dict = train_dict(ctx)?;
    encode(ctx)?;
    reconstruct(ctx)?;
    let metrics = metrics(ctx)?;
    featurize(ctx)?;
    let svm = train_svm(ctx)?;
    let eval = evaluate(ctx)?;
    let mut out = json!({
        "beats": ingest["beats"],
        "train": ingest["train"],
        "test": ingest["test"],
        "k": dict["k"],
        "lambda": dict["lambda"],
        "err_mean": metrics["err_mean"],
        "cr_mean": metrics["cr_mean"],
        "c": svm["c"],
        "gamma": svm["gamma"],
        "accuracy": eval["accuracy"],
        "out_dir": ctx.paths.0,
    });
    if let Some(v) = metrics.get("vq_err_mean") {
        out["vq_err_mean"] = v.clone();
    }
    Ok(out)
}
