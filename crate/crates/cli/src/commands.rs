//! The pipeline commands. Each reads its inputs from files, writes its
//! outputs into an output directory under fixed names, and is reproducible
//! byte for byte for fixed inputs and seeds.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use landmark2vec::io::{self as formats, ReadError};
use landmark2vec::simgen::{self, Region};
use landmark2vec::{
    build_dataset, evaluate as evaluate_maps, extract_map, fit_affine, make_layout, split,
    train as train_model, wcl_agent, wcl_landmarks, EvaluationReport, LandmarkMap, MeasurementSet,
    StopReason, TrainLog,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;

pub const MEASUREMENTS_CSV: &str = "measurements.csv";
pub const LAYOUT_CSV: &str = "layout.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const MODEL_CSV: &str = "model.csv";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const TRAIN_MANIFEST_JSON: &str = "train_manifest.json";
pub const MAP_CSV: &str = "map.csv";
pub const REPORT_JSON: &str = "report.json";
pub const WCL_REPORT_JSON: &str = "wcl_report.json";
pub const AGENT_CSV: &str = "agent_positions.csv";
pub const PLOT_SVG: &str = "plot.svg";

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("cannot write {}: {e}", path.display()))
}

fn read_err(path: &Path) -> impl Fn(ReadError) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value).expect("json values always serialize");
    writeln!(w, "{text}")
        .and_then(|_| w.flush())
        .map_err(write_err(path))
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet, CliError> {
    formats::read_measurements(open(path)?).map_err(read_err(path))
}

pub fn read_map(path: &Path) -> Result<LandmarkMap, CliError> {
    formats::read_map(open(path)?).map_err(read_err(path))
}

fn write_map(map: &LandmarkMap, path: &Path) -> Result<(), CliError> {
    formats::write_map(map, create(path)?).map_err(write_err(path))
}

/// What `simulate` produced.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub layout: LandmarkMap,
    pub measurements: MeasurementSet,
}

/// Generates the landmark layout and synthetic measurements.
///
/// Writes `layout.csv`, `measurements.csv` (with ground-truth columns) and
/// `manifest.json` into `out`.
pub fn simulate(config: &RunConfig, out: &Path) -> Result<SimulateOutput, CliError> {
    config.validate()?;
    let layout = make_layout(&config.layout())?;
    let region = Region::around(&layout, config.region_margin);
    let measurements = simgen::generate(
        &layout,
        config.num_measurements,
        &region,
        &config.signal_model(),
        config.data_seed(),
    )?;

    write_map(&layout, &out.join(LAYOUT_CSV))?;
    let path = out.join(MEASUREMENTS_CSV);
    formats::write_measurements(&measurements, create(&path)?).map_err(write_err(&path))?;
    write_json(
        &out.join(MANIFEST_JSON),
        &json!({
            "command": "simulate",
            "config": config,
            "noise_std": config.noise_std(),
            "seeds": {
                "layout": config.seed,
                "measurements": config.data_seed(),
            },
            "region": { "min": region.min, "max": region.max },
            "outputs": {
                "layout": LAYOUT_CSV,
                "measurements": MEASUREMENTS_CSV,
            },
            "rows": measurements.len(),
        }),
    )?;
    Ok(SimulateOutput {
        layout,
        measurements,
    })
}

/// What `train` produced.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: landmark2vec::EmbeddingModel,
    pub log: TrainLog,
    pub skipped: usize,
    pub train_pairs: usize,
    pub val_pairs: usize,
}

/// Builds pairs from a measurement CSV, splits, trains and writes
/// `model.csv`, `train_log.jsonl` and `train_manifest.json`.
///
/// A run that ends on a non-finite loss still writes its files (holding the
/// last finite model) and then reports a numerical error.
pub fn train(config: &RunConfig, measurements: &Path, out: &Path) -> Result<TrainOutput, CliError> {
    let set = read_measurements(measurements)?;
    let landmarks = set.landmark_count();
    if config.landmarks_explicit && config.landmarks != landmarks {
        return Err(CliError::Config(format!(
            "config says landmarks = {} but {} has {landmarks} measurement columns",
            config.landmarks,
            measurements.display()
        )));
    }
    let mut config = config.clone();
    config.landmarks = landmarks;
    config.validate()?;

    let dataset = build_dataset(&set, config.n)?;
    let (train_pairs, val_pairs) =
        split(&dataset.pairs, config.train_fraction, config.split_seed())?;
    let train_config = config.train_config();
    let started = Instant::now();
    let (model, log) = train_model(&train_pairs, &val_pairs, &train_config)?;
    eprintln!(
        "trained {} epochs in {:.2}s, stop reason: {}",
        log.stop_epoch(),
        started.elapsed().as_secs_f64(),
        log.stop_reason.as_str()
    );

    let path = out.join(MODEL_CSV);
    formats::write_model(&model, create(&path)?).map_err(write_err(&path))?;
    let path = out.join(TRAIN_LOG);
    formats::write_train_log(&log, create(&path)?).map_err(write_err(&path))?;
    write_json(
        &out.join(TRAIN_MANIFEST_JSON),
        &json!({
            "command": "train",
            "config": config,
            "seeds": {
                "split": config.split_seed(),
                "train": config.train_seed(),
            },
            "input": measurements.file_name().map(|f| f.to_string_lossy().into_owned()),
            "measurements": set.len(),
            "skipped": dataset.skipped,
            "train_pairs": train_pairs.len(),
            "val_pairs": val_pairs.len(),
            "stop_reason": log.stop_reason.as_str(),
            "stop_epoch": log.stop_epoch(),
            "final_val_loss": log.epochs.last().map(|r| r.val_loss),
        }),
    )?;

    if log.stop_reason == StopReason::NonFinite {
        return Err(CliError::Numerical(format!(
            "non-finite loss after epoch {}; last finite model written",
            log.stop_epoch()
        )));
    }
    Ok(TrainOutput {
        model,
        log,
        skipped: dataset.skipped,
        train_pairs: train_pairs.len(),
        val_pairs: val_pairs.len(),
    })
}

/// Reads a model file and writes its landmark map to `out/map.csv`.
pub fn infer(model: &Path, out: &Path) -> Result<LandmarkMap, CliError> {
    let m = formats::read_model(open(model)?).map_err(read_err(model))?;
    let map = extract_map(&m);
    write_map(&map, &out.join(MAP_CSV))?;
    Ok(map)
}

/// Reorders `est` so its ids line up with `truth`; both must hold the same ids.
fn align_ids(truth: &LandmarkMap, est: &LandmarkMap) -> Result<LandmarkMap, CliError> {
    let mut a = truth.ids().to_vec();
    let mut b = est.ids().to_vec();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(CliError::Data(
            "true and estimated maps carry different landmark ids".to_string(),
        ));
    }
    let coords = truth
        .ids()
        .iter()
        .map(|id| {
            let k = est
                .ids()
                .iter()
                .position(|e| e == id)
                .expect("id sets are equal");
            est.point(k).to_vec()
        })
        .collect();
    Ok(LandmarkMap::with_ids(
        est.dim(),
        truth.ids().to_vec(),
        coords,
    )?)
}

/// Optional extras for [`evaluate`].
#[derive(Debug, Clone, Default)]
pub struct EvaluateOptions {
    /// Measurement CSV whose rows are positioned by weighted centroid on the
    /// aligned estimated map; written to `agent_positions.csv`.
    pub agent: Option<PathBuf>,
    /// Labelled measurement CSV used to build the weighted-centroid baseline
    /// map; its report goes to `wcl_report.json`.
    pub wcl: Option<PathBuf>,
}

/// Compares an estimated map against the true layout and writes
/// `report.json`.
pub fn evaluate(
    truth: &Path,
    estimate: &Path,
    options: &EvaluateOptions,
    out: &Path,
) -> Result<EvaluationReport, CliError> {
    let true_map = read_map(truth)?;
    let est_map = align_ids(&true_map, &read_map(estimate)?)?;
    let report = evaluate_maps(&true_map, &est_map)?;
    write_json(
        &out.join(REPORT_JSON),
        &serde_json::to_value(&report).expect("serializable"),
    )?;

    if let Some(path) = &options.agent {
        let set = read_measurements(path)?;
        let fit = fit_affine(&true_map, &est_map)?;
        let aligned = LandmarkMap::with_ids(
            est_map.dim(),
            est_map.ids().to_vec(),
            est_map.coords().iter().map(|p| fit.apply(p)).collect(),
        )?;
        let agent_path = out.join(AGENT_CSV);
        let mut w = create(&agent_path)?;
        let axes = ["x", "y", "z"];
        writeln!(w, "measurement,{}", axes[..aligned.dim()].join(","))
            .map_err(write_err(&agent_path))?;
        for (i, m) in set.measurements().iter().enumerate() {
            let p = wcl_agent(&aligned, m)?;
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{i},{}", row.join(",")).map_err(write_err(&agent_path))?;
        }
        w.flush().map_err(write_err(&agent_path))?;
    }

    if let Some(path) = &options.wcl {
        let set = read_measurements(path)?;
        let baseline = align_ids(&true_map, &wcl_landmarks(&set)?)?;
        let wcl_report = evaluate_maps(&true_map, &baseline)?;
        write_json(
            &out.join(WCL_REPORT_JSON),
            &serde_json::to_value(&wcl_report).expect("serializable"),
        )?;
    }
    Ok(report)
}

/// Renders one map, or two side by side, to an SVG file.
pub fn plot(map: &Path, second: Option<&Path>, output: &Path) -> Result<(), CliError> {
    let title = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let first = read_map(map)?;
    let mut panels = vec![(title(map), first)];
    if let Some(path) = second {
        panels.push((title(path), read_map(path)?));
    }
    let refs: Vec<(&str, &LandmarkMap)> = panels.iter().map(|(t, m)| (t.as_str(), m)).collect();
    let svg = crate::plot::render_svg(&refs);
    let mut w = create(output)?;
    w.write_all(svg.as_bytes())
        .and_then(|_| w.flush())
        .map_err(write_err(output))
}
