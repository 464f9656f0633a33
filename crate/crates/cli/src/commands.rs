use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::Context;
use riskrnn_core::dataset::{read_dataset, write_dataset, DatasetHeader};
use riskrnn_core::eval::{curve_csv, risk_map_raster, MetricsReport, RiskMap, VariantMetrics};
use riskrnn_core::model::{RiskModel, Variant};
use riskrnn_core::pipeline::{evaluate, evaluate_video, Evaluation, VideoEvaluation};
use riskrnn_core::synthworld::{Scenario, World};
use riskrnn_core::train::{log_csv, train, TrainOutcome};

use crate::config::RunConfig;
use crate::CliError;

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

pub fn split_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.jsonl"))
}

pub fn model_path(dir: &Path, variant: Variant) -> PathBuf {
    dir.join(format!("{variant}.model"))
}

pub fn log_path(dir: &Path, variant: Variant) -> PathBuf {
    dir.join(format!("{variant}.log.csv"))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(CliError::Runtime)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Runtime)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSummary {
    pub split: String,
    pub videos: usize,
    pub positives: usize,
}

/// Generates the three splits into `out`.
pub fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<Vec<SplitSummary>, CliError> {
    let world = World::new(cfg.scenario.clone())?;
    create_dir(out)?;
    let counts = [
        cfg.data.train_videos,
        cfg.data.val_videos,
        cfg.data.test_videos,
    ];
    let mut summary = Vec::new();
    for (k, (split, n)) in SPLITS.iter().zip(counts).enumerate() {
        let videos = world.generate_split(split, k as u32, n)?;
        let path = split_path(out, split);
        let file =
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let header = DatasetHeader::new(split, videos.len(), cfg.scenario.clone());
        write_dataset(BufWriter::new(file), &header, &videos)?;
        let positives = videos.iter().filter(|v| v.label.is_positive()).count();
        summary.push(SplitSummary {
            split: split.to_string(),
            videos: videos.len(),
            positives,
        });
    }
    Ok(summary)
}

pub fn load_split(path: &Path) -> Result<(DatasetHeader, Vec<Scenario>), CliError> {
    let file =
        File::open(path).with_context(|| format!("cannot open dataset {}", path.display()))?;
    read_dataset(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Runtime)
}

/// Model and data must agree on feature sizes.
fn check_dims(
    model: &riskrnn_core::model::ModelConfig,
    header: &DatasetHeader,
) -> Result<(), CliError> {
    let d = header.scenario.feature_dim;
    if model.d_agent != d || model.d_region != d {
        return Err(CliError::Config(format!(
            "model.d_agent = {} and model.d_region = {} but the {} split has feature_dim = {d}",
            model.d_agent, model.d_region, header.split
        )));
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<RiskModel, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read model {}", path.display()))?;
    RiskModel::from_text(&text)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(CliError::Runtime)
}

/// Trains each variant on `data/train.jsonl` with early stopping on
/// `data/val.jsonl`; writes `<variant>.model` and `<variant>.log.csv`.
pub fn cmd_train(
    cfg: &RunConfig,
    data: &Path,
    out: &Path,
    variants: &[Variant],
) -> Result<Vec<(Variant, TrainOutcome)>, CliError> {
    let (header, train_set) = load_split(&split_path(data, "train"))?;
    let val_path = split_path(data, "val");
    let val_set = if val_path.exists() {
        load_split(&val_path)?.1
    } else {
        log::warn!("no validation split; keeping the last epoch");
        Vec::new()
    };
    create_dir(out)?;
    let mut results = Vec::new();
    for &variant in variants {
        let mc = cfg.model_for(variant);
        check_dims(&mc, &header)?;
        let model = RiskModel::new(mc, cfg.train.seed)?;
        log::info!("training {variant} on {} videos", train_set.len());
        let outcome = train(model, &cfg.train, &train_set, &val_set, |r| {
            log::info!(
                "{variant} epoch {}: train {:.4} val {:.4} val mAP {:.4}",
                r.epoch,
                r.train_loss,
                r.val_loss,
                r.val_map
            );
        })?;
        write_file(&model_path(out, variant), &outcome.model.to_text())?;
        write_file(&log_path(out, variant), &log_csv(&outcome.log))?;
        results.push((variant, outcome));
    }
    Ok(results)
}

/// Existing `<variant>.model` files in `dir`, in ablation order.
pub fn models_in(dir: &Path) -> Vec<PathBuf> {
    Variant::ALL
        .iter()
        .map(|&v| model_path(dir, v))
        .filter(|p| p.exists())
        .collect()
}

pub struct EvalOutput {
    pub report: MetricsReport,
    pub evaluations: Vec<Evaluation>,
}

/// Evaluates every model on `data/test.jsonl` and writes `metrics.json`,
/// `ablation.txt`, one `curve_<variant>.csv` per model and, if asked,
/// per-video risk maps of the primary model.
pub fn cmd_eval(
    cfg: &RunConfig,
    data: &Path,
    models: &[PathBuf],
    out: &Path,
    riskmaps: bool,
) -> Result<EvalOutput, CliError> {
    if models.is_empty() {
        return Err(CliError::Config("no model files to evaluate".into()));
    }
    let (header, test_set) = load_split(&split_path(data, "test"))?;
    create_dir(out)?;
    let mut per_variant = Vec::new();
    let mut evaluations = Vec::new();
    for path in models {
        let model = load_model(path)?;
        check_dims(&model.config, &header)?;
        let ev = evaluate(&model, &test_set, &cfg.eval)?;
        write_file(
            &out.join(format!("curve_{}.csv", ev.metrics.variant)),
            &curve_csv(&ev.curve.points),
        )?;
        per_variant.push(ev.metrics.clone());
        evaluations.push(ev);
    }
    // the richest variant present is the headline
    let primary = per_variant
        .iter()
        .position(|m| m.variant == Variant::LRai.to_string())
        .unwrap_or(per_variant.len() - 1);
    let head = &per_variant[primary];
    let report = MetricsReport {
        anticipation_map: head.anticipation_map,
        atta_frames: head.atta_frames,
        atta_seconds: head.atta_seconds,
        region_map: head.region_map,
        oracle_region_map: head.oracle_region_map,
        fused: cfg.eval.fused,
        fps: cfg.eval.fps,
        videos: test_set.len(),
        per_variant: per_variant.clone(),
    };
    write_file(&out.join("metrics.json"), &report.to_json())?;
    write_file(&out.join("ablation.txt"), &ablation_table(&per_variant))?;
    for warning in ordering_warnings(&per_variant) {
        log::warn!("{warning}");
    }
    if riskmaps {
        let dir = out.join("riskmaps");
        create_dir(&dir)?;
        for (video, ev) in test_set.iter().zip(&evaluations[primary].videos) {
            let map = video_risk_map(video, ev, None, cfg)?;
            write_file(&dir.join(format!("{}.pgm", video.id)), &map.to_pgm())?;
        }
    }
    Ok(EvalOutput {
        report,
        evaluations,
    })
}

/// Variant table: anticipation mAP and ATTA, then region mAP and its oracle.
pub fn ablation_table(rows: &[VariantMetrics]) -> String {
    let mut out =
        String::from("variant   mAP     ATTA(frames)  ATTA(s)  region_mAP  oracle_region_mAP\n");
    for m in rows {
        out.push_str(&format!(
            "{:<8}  {:.4}  {:>12.3}  {:>7.3}  {:>10.4}  {:>17.4}\n",
            m.variant,
            m.anticipation_map,
            m.atta_frames,
            m.atta_seconds,
            m.region_map,
            m.oracle_region_map
        ));
    }
    out
}

/// Soft expectation: the full model should not trail the plain one.
pub fn ordering_warnings(rows: &[VariantMetrics]) -> Vec<String> {
    let find = |v: Variant| rows.iter().find(|m| m.variant == v.to_string());
    let (Some(full), Some(base)) = (find(Variant::LRai), find(Variant::Ra)) else {
        return Vec::new();
    };
    let mut warnings = Vec::new();
    if full.anticipation_map < base.anticipation_map {
        warnings.push(format!(
            "L-RAI anticipation mAP {:.4} is below RA {:.4}",
            full.anticipation_map, base.anticipation_map
        ));
    }
    if full.region_map < base.region_map {
        warnings.push(format!(
            "L-RAI region mAP {:.4} is below RA {:.4}",
            full.region_map, base.region_map
        ));
    }
    warnings
}

fn find_video<'a>(videos: &'a [Scenario], key: &str) -> Result<&'a Scenario, CliError> {
    if let Some(v) = videos.iter().find(|v| v.id == key) {
        return Ok(v);
    }
    key.parse::<usize>()
        .ok()
        .and_then(|i| videos.get(i))
        .ok_or_else(|| CliError::Config(format!("video {key:?} not found (id or index)")))
}

/// Per-frame predictions of the most alarming candidate track as CSV:
/// `frame,y_0,y_1,yf_0,yf_1,s_0..,sf_0..`.
pub fn cmd_infer(
    cfg: &RunConfig,
    model: &Path,
    split: &Path,
    video: &str,
) -> Result<String, CliError> {
    let model = load_model(model)?;
    let (header, videos) = load_split(split)?;
    check_dims(&model.config, &header)?;
    let video = find_video(&videos, video)?;
    let ev = evaluate_video(&model, video, &cfg.eval)?;
    let preds = ev.best_predictions();
    let n = preds.first().map_or(0, |p| p.scores.len());
    let mut out = String::from("frame,y_0,y_1,yf_0,yf_1");
    for prefix in ["s", "sf"] {
        for i in 0..n {
            out.push_str(&format!(",{prefix}_{i}"));
        }
    }
    out.push('\n');
    for (t, p) in preds.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(p.y.iter().chain(&p.y_fused).map(f64::to_string));
        row.extend(p.scores.iter().chain(&p.scores_fused).map(f64::to_string));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Rasterized region scores of one frame; defaults to the frame where the
/// accident probability peaks.
pub fn video_risk_map(
    video: &Scenario,
    ev: &VideoEvaluation,
    frame: Option<usize>,
    cfg: &RunConfig,
) -> Result<RiskMap, CliError> {
    let preds = ev.best_predictions();
    let fused = cfg.eval.fused;
    let t = match frame {
        Some(t) if t < preds.len() => t,
        Some(t) => {
            return Err(CliError::Config(format!(
                "frame {t} out of range for {} frames",
                preds.len()
            )))
        }
        None => (0..preds.len())
            .max_by(|&a, &b| {
                preds[a]
                    .accident_prob(fused)
                    .total_cmp(&preds[b].accident_prob(fused))
                    .then(b.cmp(&a))
            })
            .unwrap_or(0),
    };
    Ok(risk_map_raster(
        &video.frames[t].region_boxes,
        preds[t].region_scores(fused),
        cfg.riskmap.width,
        cfg.riskmap.height,
    )?)
}

pub fn cmd_riskmap(
    cfg: &RunConfig,
    model: &Path,
    split: &Path,
    video: &str,
    frame: Option<usize>,
) -> Result<RiskMap, CliError> {
    let model = load_model(model)?;
    let (header, videos) = load_split(split)?;
    check_dims(&model.config, &header)?;
    let video = find_video(&videos, video)?;
    let ev = evaluate_video(&model, video, &cfg.eval)?;
    video_risk_map(video, &ev, frame, cfg)
}
