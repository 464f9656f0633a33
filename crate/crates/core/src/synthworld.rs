//! Seeded generator of small top-down videos: one agent walking a noisy
//! straight line through a unit-square scene containing one hazard and a
//! handful of benign regions. Positives collide with the hazard exactly at
//! the last frame; negatives keep clear of it.
//!
//! Classes `0..hazard_classes()` are hazards, the rest of `0..n_classes` are
//! benign, and class `n_classes` is the agent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::losses::{Label, VideoTargets};
use crate::model::FrameInput;
use crate::tracking::{Proposal, Track, TrackPoint};

const AGENT_SIZE: (f64, f64) = (0.08, 0.11);
const REGION_SIZE: (f64, f64) = (0.09, 0.13);
const DISTRACTOR_SIZE: (f64, f64) = (0.05, 0.2);
const SPEED: (f64, f64) = (0.04, 0.06);
const HEADING_NOISE: f64 = 0.05;
/// Negative hazards keep at least this centre distance from every agent position.
const NEGATIVE_CLEARANCE: f64 = 0.3;
/// Steps past the final frame along which negative hazards also keep clear.
const EXTRAPOLATED_STEPS: usize = 8;
/// Benign regions may overlap the hazard by at most this IoU.
const BENIGN_HAZARD_IOU: f64 = 0.1;
const AGENT_SCORE: f64 = 0.9;
const REGION_SCORE: f64 = 0.4;
const SCORE_SIGMA: f64 = 0.05;
const DISTRACTOR_MAX_SCORE: f64 = 0.5;
const MAX_ATTEMPTS: usize = 200;
/// Features are rounded to this step so the text dataset round-trips exactly.
const FEATURE_QUANTUM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub frames_per_video: usize,
    pub n_regions: usize,
    pub feature_dim: usize,
    pub n_classes: usize,
    pub noise_sigma: f64,
    pub collision_iou: f64,
    pub proposal_jitter: f64,
    pub n_distractor_proposals: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            frames_per_video: 12,
            n_regions: 8,
            feature_dim: 32,
            n_classes: 6,
            noise_sigma: 0.1,
            collision_iou: 0.3,
            proposal_jitter: 0.05,
            n_distractor_proposals: 20,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.frames_per_video < 2 {
            return bad(format!(
                "frames_per_video must be >= 2, got {}",
                self.frames_per_video
            ));
        }
        if self.n_regions == 0 || self.feature_dim == 0 {
            return bad("n_regions and feature_dim must be >= 1".into());
        }
        if self.n_classes < 2 {
            return bad(format!(
                "n_classes must be >= 2 (hazard and benign), got {}",
                self.n_classes
            ));
        }
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("proposal_jitter", self.proposal_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.collision_iou > 0.0 && self.collision_iou < 1.0) {
            return bad(format!(
                "collision_iou must lie in (0, 1), got {}",
                self.collision_iou
            ));
        }
        Ok(())
    }

    /// Number of hazard classes: a third of the classes, at least one.
    pub fn hazard_classes(&self) -> usize {
        (self.n_classes / 3).max(1)
    }

    pub fn agent_class(&self) -> usize {
        self.n_classes
    }

    pub fn accident_frame(&self) -> usize {
        self.frames_per_video - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFrame {
    pub agent_box: BBox,
    pub agent_feat: Vec<f64>,
    pub region_boxes: Vec<BBox>,
    pub region_feats: Vec<Vec<f64>>,
    /// Ground-truth risky boxes for this frame.
    pub risky: Vec<BBox>,
    pub proposals: Vec<Proposal>,
}

/// One video with its labels and latent classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub label: Label,
    pub accident_frame: Option<usize>,
    pub region_classes: Vec<usize>,
    /// Index of the colliding region (positives only).
    pub hazard_region: Option<usize>,
    pub frames: Vec<SceneFrame>,
}

impl Scenario {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn gt_track(&self) -> Track {
        Track {
            start: 0,
            points: self
                .frames
                .iter()
                .map(|f| TrackPoint {
                    bbox: f.agent_box,
                    feat: f.agent_feat.clone(),
                    score: 1.0,
                })
                .collect(),
        }
    }

    /// Model inputs when `track` plays the agent.
    pub fn inputs(&self, track: &Track) -> Result<Vec<FrameInput>> {
        if !track.covers(self.frames.len()) {
            return Err(Error::Shape(format!(
                "track spans frames {}..{} of a {}-frame video",
                track.start,
                track.end(),
                self.frames.len()
            )));
        }
        Ok(self
            .frames
            .iter()
            .zip(&track.points)
            .map(|(f, p)| FrameInput {
                agent_feat: p.feat.clone(),
                agent_box: p.bbox,
                region_feats: f.region_feats.clone(),
                region_boxes: f.region_boxes.clone(),
            })
            .collect())
    }

    pub fn targets(&self, track: &Track) -> VideoTargets {
        VideoTargets {
            label: self.label,
            accident_frame: self.accident_frame,
            agent_track: track.boxes(),
            risky_boxes: self.frames.iter().map(|f| f.risky.clone()).collect(),
        }
    }

    pub fn region_boxes(&self) -> Vec<Vec<BBox>> {
        self.frames.iter().map(|f| f.region_boxes.clone()).collect()
    }

    pub fn proposals(&self) -> Vec<Vec<Proposal>> {
        self.frames.iter().map(|f| f.proposals.clone()).collect()
    }
}

/// Deterministic RNG for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma validated finite and >= 0")
}

fn quantize(x: f64) -> f64 {
    (x / FEATURE_QUANTUM).round() * FEATURE_QUANTUM
}

/// Scene generator holding the class embeddings shared by every video drawn
/// from one configuration.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: ScenarioConfig,
    /// Unit-norm embedding per class, agent last.
    pub embeddings: Vec<Vec<f64>>,
}

impl World {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = stream_rng(cfg.seed, 0);
        let std = normal(1.0);
        let embeddings = (0..=cfg.n_classes)
            .map(|_| loop {
                let v: Vec<f64> = (0..cfg.feature_dim).map(|_| std.sample(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-6 {
                    break v.into_iter().map(|x| x / n).collect();
                }
            })
            .collect();
        Ok(Self { cfg, embeddings })
    }

    pub fn is_hazard_class(&self, class: usize) -> bool {
        class < self.cfg.hazard_classes()
    }

    /// Boxes, classes and labels; features and proposals are left empty.
    pub fn generate_scenario<R: Rng + ?Sized>(
        &self,
        positive: bool,
        rng: &mut R,
    ) -> Result<Scenario> {
        for _ in 0..MAX_ATTEMPTS {
            if let Some(s) = self.try_scenario(positive, rng) {
                return Ok(s);
            }
        }
        Err(Error::Generation(format!(
            "no valid {} scenario after {MAX_ATTEMPTS} attempts",
            if positive { "positive" } else { "negative" }
        )))
    }

    fn walk<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<BBox>> {
        let n = self.cfg.frames_per_video;
        let w = rng.random_range(AGENT_SIZE.0..AGENT_SIZE.1);
        let h = rng.random_range(AGENT_SIZE.0..AGENT_SIZE.1);
        let speed = rng.random_range(SPEED.0..SPEED.1);
        let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
        let (mut x, mut y) = (rng.random_range(0.15..0.85), rng.random_range(0.15..0.85));
        let turn = normal(HEADING_NOISE);
        let mut path = Vec::with_capacity(n);
        for t in 0..n {
            if t > 0 {
                heading += turn.sample(rng);
                x += speed * heading.cos();
                y += speed * heading.sin();
            }
            if !(0.1..=0.9).contains(&x) || !(0.1..=0.9).contains(&y) {
                return None;
            }
            path.push(BBox::new(x, y, w, h));
        }
        Some(path)
    }

    fn region_box<R: Rng + ?Sized>(rng: &mut R, cx: f64, cy: f64) -> BBox {
        BBox::new(
            cx,
            cy,
            rng.random_range(REGION_SIZE.0..REGION_SIZE.1),
            rng.random_range(REGION_SIZE.0..REGION_SIZE.1),
        )
    }

    /// Hazard ahead of the final box along the final step, at a distance
    /// chosen by bisection so the final IoU hits a target above the trigger.
    fn place_collision<R: Rng + ?Sized>(&self, path: &[BBox], rng: &mut R) -> Option<BBox> {
        let last = path[path.len() - 1];
        let prev = path[path.len() - 2];
        let (dx, dy) = (last.cx - prev.cx, last.cy - prev.cy);
        let norm = (dx * dx + dy * dy).sqrt();
        let (ux, uy) = (dx / norm, dy / norm);
        let base = Self::region_box(rng, last.cx, last.cy);
        let at = |d: f64| base.translated(ux * d, uy * d);
        let c = self.cfg.collision_iou;
        let peak = iou(&last, &base);
        let target = c + rng.random_range(0.05..0.25) * (1.0 - c);
        if peak <= target {
            return None;
        }
        // iou(last, at(d)) is non-increasing in d >= 0
        let (mut lo, mut hi) = (0.0, last.w + last.h + base.w + base.h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if iou(&last, &at(mid)) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let hazard = at(lo);
        let ok = iou(&last, &hazard) > c
            && path[..path.len() - 1].iter().all(|p| iou(p, &hazard) <= c)
            && (0.05..=0.95).contains(&hazard.cx)
            && (0.05..=0.95).contains(&hazard.cy);
        ok.then_some(hazard)
    }

    /// Hazard away from the path and from its straight continuation, so a
    /// hazard lying ahead of the agent always means a collision.
    fn place_clear<R: Rng + ?Sized>(&self, path: &[BBox], rng: &mut R) -> Option<BBox> {
        let (last, prev) = (path[path.len() - 1], path[path.len() - 2]);
        let (dx, dy) = (last.cx - prev.cx, last.cy - prev.cy);
        let ahead: Vec<BBox> = path
            .iter()
            .copied()
            .chain((1..=EXTRAPOLATED_STEPS).map(|k| last.translated(dx * k as f64, dy * k as f64)))
            .collect();
        for _ in 0..MAX_ATTEMPTS {
            let (cx, cy) = (rng.random_range(0.1..0.9), rng.random_range(0.1..0.9));
            let clear = ahead
                .iter()
                .all(|p| ((p.cx - cx).powi(2) + (p.cy - cy).powi(2)).sqrt() >= NEGATIVE_CLEARANCE);
            if clear {
                let b = Self::region_box(rng, cx, cy);
                if path.iter().all(|p| iou(p, &b) <= self.cfg.collision_iou) {
                    return Some(b);
                }
            }
        }
        None
    }

    fn try_scenario<R: Rng + ?Sized>(&self, positive: bool, rng: &mut R) -> Option<Scenario> {
        let cfg = &self.cfg;
        let path = self.walk(rng)?;
        let hazard = if positive {
            self.place_collision(&path, rng)?
        } else {
            self.place_clear(&path, rng)?
        };
        let hazard_class = rng.random_range(0..cfg.hazard_classes());
        let mut regions = vec![(hazard, hazard_class, true)];
        while regions.len() < cfg.n_regions {
            let (cx, cy) = (rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
            let b = Self::region_box(rng, cx, cy);
            if iou(&b, &hazard) <= BENIGN_HAZARD_IOU {
                let class = rng.random_range(cfg.hazard_classes()..cfg.n_classes);
                regions.push((b, class, false));
            }
        }
        regions.shuffle(rng);
        let hazard_idx = regions.iter().position(|r| r.2).expect("hazard present");
        let region_boxes: Vec<BBox> = regions.iter().map(|r| r.0).collect();
        let risky = if positive { vec![hazard] } else { Vec::new() };
        let frames = path
            .iter()
            .map(|&agent_box| SceneFrame {
                agent_box,
                agent_feat: Vec::new(),
                region_boxes: region_boxes.clone(),
                region_feats: Vec::new(),
                risky: risky.clone(),
                proposals: Vec::new(),
            })
            .collect();
        Some(Scenario {
            id: String::new(),
            label: if positive {
                Label::Positive
            } else {
                Label::Negative
            },
            accident_frame: positive.then(|| cfg.accident_frame()),
            region_classes: regions.iter().map(|r| r.1).collect(),
            hazard_region: positive.then_some(hazard_idx),
            frames,
        })
    }

    /// Class embedding plus isotropic noise, quantized.
    pub fn feature<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> Vec<f64> {
        let noise = normal(self.cfg.noise_sigma);
        self.embeddings[class]
            .iter()
            .map(|&e| quantize(e + noise.sample(rng)))
            .collect()
    }

    /// Fills per-frame agent and region features.
    pub fn synthesize_features<R: Rng + ?Sized>(&self, scenario: &mut Scenario, rng: &mut R) {
        let agent = self.cfg.agent_class();
        for frame in &mut scenario.frames {
            frame.agent_feat = self.feature(agent, rng);
            frame.region_feats = scenario
                .region_classes
                .iter()
                .map(|&c| self.feature(c, rng))
                .collect();
        }
    }

    fn jitter<R: Rng + ?Sized>(&self, b: &BBox, rng: &mut R) -> BBox {
        let n = normal(self.cfg.proposal_jitter);
        BBox::new(
            b.cx + n.sample(rng) * b.w,
            b.cy + n.sample(rng) * b.h,
            b.w * n.sample(rng).exp(),
            b.h * n.sample(rng).exp(),
        )
    }

    /// Fills per-frame proposals: a jittered copy of the agent and of every
    /// region, then random distractors, in shuffled order. Object scores
    /// reflect how agent-like a box is: high for the agent copy, middling
    /// for region copies, low for distractors.
    pub fn synthesize_proposals<R: Rng + ?Sized>(&self, scenario: &mut Scenario, rng: &mut R) {
        let score_noise = normal(SCORE_SIGMA);
        for frame in &mut scenario.frames {
            let mut props =
                Vec::with_capacity(1 + frame.region_boxes.len() + self.cfg.n_distractor_proposals);
            props.push(Proposal {
                bbox: self.jitter(&frame.agent_box, rng),
                score: (AGENT_SCORE + score_noise.sample(rng)).clamp(0.0, 1.0),
                feat: frame.agent_feat.clone(),
            });
            for (b, f) in frame.region_boxes.iter().zip(&frame.region_feats) {
                props.push(Proposal {
                    bbox: self.jitter(b, rng),
                    score: (REGION_SCORE + score_noise.sample(rng)).clamp(0.0, 1.0),
                    feat: f.clone(),
                });
            }
            for _ in 0..self.cfg.n_distractor_proposals {
                let bbox = BBox::new(
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(DISTRACTOR_SIZE.0..DISTRACTOR_SIZE.1),
                    rng.random_range(DISTRACTOR_SIZE.0..DISTRACTOR_SIZE.1),
                );
                let class = rng.random_range(0..self.cfg.n_classes);
                props.push(Proposal {
                    bbox,
                    score: rng.random_range(0.0..=DISTRACTOR_MAX_SCORE),
                    feat: self.feature(class, rng),
                });
            }
            props.shuffle(rng);
            frame.proposals = props;
        }
    }

    /// Complete video from its own seed.
    pub fn generate_video(&self, positive: bool, rng: &mut ChaCha8Rng) -> Result<Scenario> {
        let mut s = self.generate_scenario(positive, rng)?;
        self.synthesize_features(&mut s, rng);
        self.synthesize_proposals(&mut s, rng);
        Ok(s)
    }

    /// `n` videos, exactly `n / 2` of them positive (interleaved). Stream
    /// `split` keeps splits of one world independent.
    pub fn generate_split(&self, name: &str, split: u32, n: usize) -> Result<Vec<Scenario>> {
        (0..n)
            .map(|i| {
                let positive = i % 2 == 0 && i / 2 < n / 2;
                let mut rng = stream_rng(self.cfg.seed, ((split as u64 + 1) << 32) | i as u64);
                let mut s = self.generate_video(positive, &mut rng)?;
                s.id = format!("{name}-{i:05}");
                Ok(s)
            })
            .collect()
    }

    /// Independent check of a video against the configuration and the
    /// collision rule.
    pub fn verify(&self, s: &Scenario) -> Result<()> {
        let cfg = &self.cfg;
        let fail = |m: String| Err(Error::Generation(format!("{}: {m}", s.id)));
        if s.frames.len() != cfg.frames_per_video {
            return fail(format!(
                "{} frames, expected {}",
                s.frames.len(),
                cfg.frames_per_video
            ));
        }
        if s.region_classes.len() != cfg.n_regions
            || s.region_classes.iter().any(|&c| c >= cfg.n_classes)
        {
            return fail("region classes inconsistent with configuration".into());
        }
        for (t, f) in s.frames.iter().enumerate() {
            let dims_ok = f.agent_feat.len() == cfg.feature_dim
                && f.region_boxes.len() == cfg.n_regions
                && f.region_feats.len() == cfg.n_regions
                && f.region_feats.iter().all(|r| r.len() == cfg.feature_dim)
                && f.proposals.iter().all(|p| p.feat.len() == cfg.feature_dim)
                && f.proposals.len() == 1 + cfg.n_regions + cfg.n_distractor_proposals;
            if !dims_ok {
                return fail(format!("frame {t} has inconsistent dimensions"));
            }
        }
        let last = s.frames.len() - 1;
        let hazards: Vec<usize> = (0..cfg.n_regions)
            .filter(|&i| self.is_hazard_class(s.region_classes[i]))
            .collect();
        let first_collision = s.frames.iter().position(|f| {
            hazards
                .iter()
                .any(|&i| iou(&f.agent_box, &f.region_boxes[i]) > cfg.collision_iou)
        });
        match (s.label, first_collision, s.accident_frame) {
            (Label::Positive, Some(t), Some(acc)) if t == last && acc == last => {}
            (Label::Negative, None, None) => {}
            _ => {
                return fail(format!(
                    "label {:?} disagrees with first collision {:?} / accident frame {:?}",
                    s.label, first_collision, s.accident_frame
                ))
            }
        }
        let expected_risky: Vec<BBox> = match (s.label, s.hazard_region) {
            (Label::Positive, Some(h)) => vec![s.frames[0].region_boxes[h]],
            (Label::Negative, None) => Vec::new(),
            _ => return fail("hazard region does not match label".into()),
        };
        if s.frames.iter().any(|f| f.risky != expected_risky) {
            return fail("risky boxes do not match the hazard region".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracking::cosine_similarity;

    fn world(cfg: ScenarioConfig) -> World {
        World::new(cfg).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        for bad in [
            ScenarioConfig {
                n_regions: 0,
                ..Default::default()
            },
            ScenarioConfig {
                noise_sigma: -0.1,
                ..Default::default()
            },
            ScenarioConfig {
                collision_iou: 1.0,
                ..Default::default()
            },
            ScenarioConfig {
                n_classes: 1,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn collision_predicates_hold() {
        let w = world(ScenarioConfig {
            seed: 3,
            ..Default::default()
        });
        let c = w.cfg.collision_iou;
        for i in 0..200u64 {
            let mut rng = stream_rng(3, 1000 + i);
            let positive = i % 2 == 0;
            let s = w.generate_video(positive, &mut rng).unwrap();
            w.verify(&s).unwrap();
            let last = s.frames.len() - 1;
            let hazard = &s.frames[0].region_boxes;
            let hz: Vec<&BBox> = hazard
                .iter()
                .zip(&s.region_classes)
                .filter(|(_, &k)| w.is_hazard_class(k))
                .map(|(b, _)| b)
                .collect();
            for (t, f) in s.frames.iter().enumerate() {
                let m = hz.iter().map(|h| iou(&f.agent_box, h)).fold(0.0, f64::max);
                if positive && t == last {
                    assert!(m > c);
                } else {
                    assert!(m <= c, "video {i} frame {t}: {m}");
                }
            }
        }
    }

    #[test]
    fn same_seed_same_video() {
        let w = world(ScenarioConfig::default());
        let a = w.generate_split("x", 0, 6).unwrap();
        let b = w.generate_split("x", 0, 6).unwrap();
        assert_eq!(a, b);
        let c = w.generate_split("x", 1, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_balance() {
        let w = world(ScenarioConfig::default());
        for n in [1, 2, 7, 10] {
            let split = w.generate_split("s", 0, n).unwrap();
            let pos = split.iter().filter(|s| s.label.is_positive()).count();
            assert_eq!(pos, n / 2);
        }
    }

    #[test]
    fn noiseless_features_repeat() {
        let w = world(ScenarioConfig {
            noise_sigma: 0.0,
            ..Default::default()
        });
        let mut rng = stream_rng(0, 9);
        let s = w.generate_video(true, &mut rng).unwrap();
        for f in &s.frames {
            assert_eq!(f.agent_feat, s.frames[0].agent_feat);
            assert_eq!(f.region_feats, s.frames[0].region_feats);
            assert_eq!(f.agent_feat.len(), w.cfg.feature_dim);
        }
    }

    #[test]
    fn same_region_more_similar_than_other_classes() {
        let w = world(ScenarioConfig {
            seed: 11,
            ..Default::default()
        });
        let mut rng = stream_rng(11, 77);
        let (mut same, mut diff, mut n_same, mut n_diff) = (0.0, 0.0, 0, 0);
        for _ in 0..100 {
            let s = w.generate_video(true, &mut rng).unwrap();
            let (f0, f1) = (&s.frames[0], &s.frames[1]);
            for i in 0..w.cfg.n_regions {
                same += cosine_similarity(&f0.region_feats[i], &f1.region_feats[i]);
                n_same += 1;
                for j in 0..w.cfg.n_regions {
                    if s.region_classes[i] != s.region_classes[j] {
                        diff += cosine_similarity(&f0.region_feats[i], &f1.region_feats[j]);
                        n_diff += 1;
                    }
                }
            }
        }
        assert!(same / n_same as f64 > diff / n_diff as f64 + 0.3);
    }

    #[test]
    fn proposal_counts_and_exact_copy() {
        let cfg = ScenarioConfig {
            proposal_jitter: 0.0,
            ..Default::default()
        };
        let w = world(cfg);
        let mut rng = stream_rng(0, 5);
        let s = w.generate_video(false, &mut rng).unwrap();
        for f in &s.frames {
            assert_eq!(
                f.proposals.len(),
                1 + w.cfg.n_regions + w.cfg.n_distractor_proposals
            );
            assert!(f
                .proposals
                .iter()
                .any(|p| p.bbox == f.agent_box && p.feat == f.agent_feat));
        }
    }

    #[test]
    fn true_boxes_score_above_distractors() {
        let w = world(ScenarioConfig::default());
        let mut rng = stream_rng(0, 6);
        let (mut t_sum, mut t_n, mut d_sum, mut d_n) = (0.0, 0, 0.0, 0);
        for _ in 0..10 {
            let s = w.generate_video(true, &mut rng).unwrap();
            for f in &s.frames {
                for p in &f.proposals {
                    let is_true = p.feat == f.agent_feat || f.region_feats.contains(&p.feat);
                    if is_true {
                        t_sum += p.score;
                        t_n += 1;
                    } else {
                        d_sum += p.score;
                        d_n += 1;
                    }
                }
            }
        }
        assert!(t_n >= 100 * 9);
        assert!(t_sum / t_n as f64 > d_sum / d_n as f64);
    }

    #[test]
    fn verify_catches_wrong_label() {
        let w = world(ScenarioConfig::default());
        let mut s = w.generate_split("v", 0, 2).unwrap().remove(1);
        s.label = Label::Positive;
        s.accident_frame = Some(w.cfg.accident_frame());
        assert!(w.verify(&s).is_err());
    }
}
