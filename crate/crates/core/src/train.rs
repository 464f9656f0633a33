//! Mini-batch training with per-epoch track sampling and early stopping on
//! validation loss.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{average_precision, video_items, video_level_score};
use crate::losses::{total_loss, LossConfig, LossTerms};
use crate::model::{read_prediction, RiskModel};
use crate::nn::{finite_diff_check, Adam, AdamConfig, GradCheckReport, Tape};
use crate::synthworld::{stream_rng, Scenario};
use crate::tracking::{candidate_agent_tracks, select_training_track, Track, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Sample tracker outputs as well as the annotated track.
    pub tracker_candidates: bool,
    pub time_scale: f64,
    pub tracker: TrackerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 5,
            lr: 1e-4,
            patience: 10,
            seed: 0,
            tracker_candidates: true,
            time_scale: 1.0,
            tracker: TrackerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.time_scale.is_finite() && self.time_scale >= 0.0) {
            return Err(Error::Config(format!(
                "time_scale must be >= 0, got {}",
                self.time_scale
            )));
        }
        self.tracker.validate()
    }

    fn loss(&self) -> LossConfig {
        LossConfig {
            time_scale: self.time_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_map: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: RiskModel,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
}

pub fn log_csv(log: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,val_map\n");
    for r in log {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.epoch, r.train_loss, r.val_loss, r.val_map
        );
    }
    out
}

/// Records one video's forward pass and loss with `track` as the agent.
pub fn video_loss(
    model: &RiskModel,
    tape: &mut Tape,
    video: &Scenario,
    track: &Track,
    loss: &LossConfig,
) -> Result<LossTerms> {
    let inputs = video.inputs(track)?;
    let frames = model.forward_video_nodes(tape, &inputs)?;
    total_loss(
        tape,
        &frames,
        &video.region_boxes(),
        &video.targets(track),
        &model.config.lambdas,
        model.config.horizon,
        loss,
    )
}

/// Central-difference check of every parameter gradient of the full
/// training loss on one video.
pub fn check_gradients(
    model: &RiskModel,
    video: &Scenario,
    track: &Track,
    loss: &LossConfig,
    h: f64,
) -> Result<GradCheckReport> {
    finite_diff_check(&model.store, h, |store, tape| {
        let m = RiskModel::from_parts(model.config.clone(), store.clone())?;
        Ok(video_loss(&m, tape, video, track, loss)?.total)
    })
}

/// Tracker candidates usable for training: full length and agent-like.
pub fn training_candidates(video: &Scenario, tracker: &TrackerConfig) -> Vec<Track> {
    candidate_agent_tracks(&video.proposals(), tracker)
        .into_iter()
        .filter(|t| t.mean_score() >= tracker.min_mean_score)
        .collect()
}

struct Validation {
    loss: f64,
    map: f64,
}

fn validate(model: &RiskModel, val: &[Scenario], loss: &LossConfig) -> Result<Validation> {
    if val.is_empty() {
        return Ok(Validation {
            loss: f64::NAN,
            map: f64::NAN,
        });
    }
    let mut total = 0.0;
    let mut scores = Vec::with_capacity(val.len());
    for v in val {
        let gt = v.gt_track();
        let mut tape = Tape::new();
        let inputs = v.inputs(&gt)?;
        let frames = model.forward_video_nodes(&mut tape, &inputs)?;
        let terms = total_loss(
            &mut tape,
            &frames,
            &v.region_boxes(),
            &v.targets(&gt),
            &model.config.lambdas,
            model.config.horizon,
            loss,
        )?;
        total += tape.scalar(terms.total);
        let preds: Vec<_> = frames.iter().map(|f| read_prediction(&tape, f)).collect();
        scores.push(video_level_score(
            &[preds],
            true,
            v.label.is_positive(),
            v.accident_frame,
        )?);
    }
    let items = video_items(&scores);
    let map = if items.iter().any(|i| i.is_positive) {
        average_precision(&items)?
    } else {
        f64::NAN
    };
    Ok(Validation {
        loss: total / val.len() as f64,
        map,
    })
}

/// Trains `model` in place of a copy and returns the best parameters.
/// `on_epoch` sees each record as soon as it is complete.
pub fn train(
    model: RiskModel,
    cfg: &TrainConfig,
    train_set: &[Scenario],
    val_set: &[Scenario],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let loss_cfg = cfg.loss();
    let mut model = model;
    let mut adam = Adam::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &model.store,
    );
    let candidates: Vec<(Track, Vec<Track>)> = train_set
        .iter()
        .map(|v| {
            let td = if cfg.tracker_candidates {
                training_candidates(v, &cfg.tracker)
            } else {
                Vec::new()
            };
            (v.gt_track(), td)
        })
        .collect();
    let mut rng = stream_rng(cfg.seed, 1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, RiskModel)> = None;
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            model.store.zero_grad();
            for &i in batch {
                let video = &train_set[i];
                let (gt, td) = &candidates[i];
                let track = select_training_track(gt, td, &mut rng);
                let mut tape = Tape::new();
                let terms =
                    video_loss(&model, &mut tape, video, track, &loss_cfg).map_err(|e| {
                        Error::Training(format!("epoch {epoch}, video {}: {e}", video.id))
                    })?;
                let l = tape.scalar(terms.total);
                if !l.is_finite() {
                    return Err(Error::Training(format!(
                        "non-finite loss at epoch {epoch}, video {}",
                        video.id
                    )));
                }
                epoch_loss += l;
                tape.backward(terms.total, &mut model.store);
            }
            model.store.scale_grad(1.0 / batch.len() as f64);
            adam.step(&mut model.store)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
        }
        let v = validate(&model, val_set, &loss_cfg)?;
        let record = EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            val_loss: v.loss,
            val_map: v.map,
        };
        log::info!(
            "epoch {epoch}: train {:.4} val {:.4} mAP {:.3}",
            record.train_loss,
            record.val_loss,
            record.val_map
        );
        on_epoch(&record);
        log.push(record);

        // without validation data the latest model is kept
        let monitored = if v.loss.is_nan() {
            f64::NEG_INFINITY
        } else {
            v.loss
        };
        match &best {
            Some((b, _, _)) if monitored >= *b && !v.loss.is_nan() => {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
            _ => {
                best = Some((monitored, epoch, model.clone()));
                stale = 0;
            }
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
    })
}
