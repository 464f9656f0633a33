//! Test-time protocol: track candidate agents, run the model on every
//! candidate, aggregate per video, and score the split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    average_precision, region_map, region_map_per_video, tta_atta, video_items, video_level_score,
    Detection, RegionFrame, TtaCurve, VariantMetrics, VideoScore,
};
use crate::model::{FramePrediction, RiskModel};
use crate::synthworld::Scenario;
use crate::tracking::{candidate_agent_tracks, Track, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Score with fused (`true`) or observed-only predictions.
    pub fused: bool,
    /// Frames per second used to report ATTA in seconds.
    pub fps: f64,
    /// Average region AP per video instead of pooling every frame.
    pub per_video_region_map: bool,
    /// Use the annotated agent track instead of tracking.
    pub gt_tracks: bool,
    pub tracker: TrackerConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            fused: true,
            fps: 10.0,
            per_video_region_map: false,
            gt_tracks: false,
            tracker: TrackerConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be > 0, got {}", self.fps)));
        }
        self.tracker.validate()
    }
}

#[derive(Debug, Clone)]
pub struct VideoEvaluation {
    pub id: String,
    pub score: VideoScore,
    pub candidates: Vec<Track>,
    /// Index of the candidate with the highest video-level probability.
    pub best_track: usize,
    pub predictions: Vec<Vec<FramePrediction>>,
}

impl VideoEvaluation {
    pub fn best_predictions(&self) -> &[FramePrediction] {
        &self.predictions[self.best_track]
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub videos: Vec<VideoEvaluation>,
    pub curve: TtaCurve,
    pub metrics: VariantMetrics,
}

pub fn candidates(video: &Scenario, cfg: &EvalConfig) -> Vec<Track> {
    if cfg.gt_tracks {
        vec![video.gt_track()]
    } else {
        candidate_agent_tracks(&video.proposals(), &cfg.tracker)
    }
}

pub fn evaluate_video(
    model: &RiskModel,
    video: &Scenario,
    cfg: &EvalConfig,
) -> Result<VideoEvaluation> {
    let candidates = candidates(video, cfg);
    if candidates.is_empty() {
        return Err(Error::Shape(format!(
            "{}: tracker produced no full-length candidate",
            video.id
        )));
    }
    let predictions = candidates
        .iter()
        .map(|t| model.forward_video(&video.inputs(t)?))
        .collect::<Result<Vec<_>>>()?;
    let peak = |p: &[FramePrediction]| {
        p.iter()
            .map(|f| f.accident_prob(cfg.fused))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best_track = 0;
    for (i, p) in predictions.iter().enumerate() {
        if peak(p) > peak(&predictions[best_track]) {
            best_track = i;
        }
    }
    let score = video_level_score(
        &predictions,
        cfg.fused,
        video.label.is_positive(),
        video.accident_frame,
    )?;
    Ok(VideoEvaluation {
        id: video.id.clone(),
        score,
        candidates,
        best_track,
        predictions,
    })
}

/// Region detections of the best candidate against the risky boxes.
pub fn region_frames(video: &Scenario, eval: &VideoEvaluation, fused: bool) -> Vec<RegionFrame> {
    video
        .frames
        .iter()
        .zip(eval.best_predictions())
        .map(|(f, p)| RegionFrame {
            detections: f
                .region_boxes
                .iter()
                .zip(p.region_scores(fused))
                .map(|(&bbox, &score)| Detection { bbox, score })
                .collect(),
            ground_truth: f.risky.clone(),
        })
        .collect()
}

pub fn evaluate(model: &RiskModel, videos: &[Scenario], cfg: &EvalConfig) -> Result<Evaluation> {
    cfg.validate()?;
    let evals = videos
        .iter()
        .map(|v| evaluate_video(model, v, cfg))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<VideoScore> = evals.iter().map(|e| e.score.clone()).collect();
    let anticipation_map = average_precision(&video_items(&scores))?;
    let curve = tta_atta(&scores)?;
    let per_video: Vec<Vec<RegionFrame>> = videos
        .iter()
        .zip(&evals)
        .map(|(v, e)| region_frames(v, e, cfg.fused))
        .collect();
    let regions = if cfg.per_video_region_map {
        region_map_per_video(&per_video)?
    } else {
        region_map(&per_video.concat())?
    };
    let metrics = VariantMetrics {
        variant: model.config.variant().to_string(),
        anticipation_map,
        atta_frames: curve.atta,
        atta_seconds: curve.atta / cfg.fps,
        region_map: regions.map,
        oracle_region_map: regions.oracle,
    };
    Ok(Evaluation {
        videos: evals,
        curve,
        metrics,
    })
}
