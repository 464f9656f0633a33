//! Task losses: exponentially weighted anticipation cross-entropy, region
//! sigmoid cross-entropy, smooth-L1 transform regression, and their
//! imagination-weighted combination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{encode_box_transform, iou, BBox};
use crate::model::FrameNodes;
use crate::nn::{Tape, Var};

/// A region counts as risky when its IoU with some ground-truth box is
/// strictly greater than this.
pub const RISKY_IOU: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// Supervision for one video as seen through one agent track.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTargets {
    pub label: Label,
    /// Accident frame `T` (positives only).
    pub accident_frame: Option<usize>,
    pub agent_track: Vec<BBox>,
    /// Ground-truth risky boxes `ρ_t` per frame; empty lists for negatives.
    pub risky_boxes: Vec<Vec<BBox>>,
}

impl VideoTargets {
    pub fn validate(&self, frames: usize) -> Result<()> {
        if self.agent_track.len() != frames {
            return Err(Error::Config(format!(
                "agent track has {} boxes for {frames} frames",
                self.agent_track.len()
            )));
        }
        if self.risky_boxes.len() != frames {
            return Err(Error::Config(format!(
                "risky boxes given for {} of {frames} frames",
                self.risky_boxes.len()
            )));
        }
        match (self.label, self.accident_frame) {
            (Label::Positive, Some(t)) if t < frames => Ok(()),
            (Label::Positive, _) => Err(Error::Config(
                "positive video needs an accident frame in range".into(),
            )),
            (Label::Negative, None) => Ok(()),
            (Label::Negative, Some(_)) => Err(Error::Config(
                "negative video must not carry an accident frame".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// Multiplies `T - t` (frames) inside the exponential weight.
    pub time_scale: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { time_scale: 1.0 }
    }
}

pub fn region_labels(regions: &[BBox], risky: &[BBox]) -> Vec<bool> {
    regions
        .iter()
        .map(|r| risky.iter().map(|g| iou(r, g)).fold(0.0, f64::max) > RISKY_IOU)
        .collect()
}

/// Per-frame anticipation loss weight: `e^{-scale (T - t)}` for positives
/// at `t <= T`, 1 for negatives, 0 after the accident.
pub fn anticipation_weight(targets: &VideoTargets, t: usize, cfg: &LossConfig) -> f64 {
    match (targets.label, targets.accident_frame) {
        (Label::Positive, Some(acc)) if t <= acc => (-cfg.time_scale * (acc - t) as f64).exp(),
        (Label::Positive, _) => 0.0,
        (Label::Negative, _) => 1.0,
    }
}

/// `Σ_t -w_t log y_t[c]` with `c` the video's class.
pub fn anticipation_loss(
    tape: &mut Tape,
    ys: &[Var],
    targets: &VideoTargets,
    cfg: &LossConfig,
) -> Var {
    let class = usize::from(targets.label.is_positive());
    let mut terms = Vec::with_capacity(ys.len());
    let mut weights = Vec::with_capacity(ys.len());
    for (t, &y) in ys.iter().enumerate() {
        let w = anticipation_weight(targets, t, cfg);
        if w > 0.0 {
            let p = tape.slice(y, class, 1);
            terms.push(tape.ln_clamped(p));
            weights.push(-w);
        }
    }
    if terms.is_empty() {
        return tape.input(vec![0.0]);
    }
    tape.weighted_sum(&terms, &weights)
}

/// `Σ_t Σ_i -log s` (risky) / `-log(1 - s)` (non-risky).
pub fn region_loss(tape: &mut Tape, scores: &[Var], labels: &[Vec<bool>]) -> Var {
    assert_eq!(
        scores.len(),
        labels.len(),
        "region_loss: one label set per frame"
    );
    let mut terms = Vec::with_capacity(scores.len());
    for (&s, lab) in scores.iter().zip(labels) {
        assert_eq!(tape.dim(s), lab.len(), "region_loss: one label per region");
        // p = s for risky, 1 - s otherwise: p = b + sign * s
        let sign: Vec<f64> = lab.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let base: Vec<f64> = lab.iter().map(|&l| if l { 0.0 } else { 1.0 }).collect();
        let sign = tape.input(sign);
        let base = tape.input(base);
        let signed = tape.mul(sign, s);
        let p = tape.add(base, signed);
        let lp = tape.ln_clamped(p);
        terms.push(tape.sum(lp));
    }
    let weights = vec![-1.0; terms.len()];
    if terms.is_empty() {
        return tape.input(vec![0.0]);
    }
    tape.weighted_sum(&terms, &weights)
}

/// `Σ_t Σ_k smoothL1(c_t[k] - c*_t[k])` with `c*_t` mapping `p_t` to `p_{t+K}`.
/// Frames without a box `K` frames later contribute nothing.
pub fn transform_loss(tape: &mut Tape, transforms: &[Var], track: &[BBox], horizon: usize) -> Var {
    let mut terms = Vec::new();
    for (t, &c) in transforms.iter().enumerate() {
        let Some(future) = track.get(t + horizon) else {
            break;
        };
        let target = encode_box_transform(&track[t], future).to_array().to_vec();
        let target = tape.input(target);
        let diff = tape.sub(c, target);
        let l = tape.smooth_l1(diff);
        terms.push(tape.sum(l));
    }
    if terms.is_empty() {
        return tape.input(vec![0.0]);
    }
    let weights = vec![1.0; terms.len()];
    tape.weighted_sum(&terms, &weights)
}

/// Scalar nodes making up one video's training objective.
#[derive(Debug, Clone)]
pub struct LossTerms {
    pub total: Var,
    pub transform: Option<Var>,
    /// `(anticipation, region)` per imagination level `n = 0..=I`.
    pub levels: Vec<(Var, Var)>,
}

/// `L = L^P + Σ_n λ_n (L^A(Y^n) + L^R(S^n))`; `n = 0` is the observed pass.
pub fn total_loss(
    tape: &mut Tape,
    frames: &[FrameNodes],
    region_boxes: &[Vec<BBox>],
    targets: &VideoTargets,
    lambdas: &[f64],
    horizon: usize,
    cfg: &LossConfig,
) -> Result<LossTerms> {
    targets.validate(frames.len())?;
    let levels_available = frames.first().map_or(0, |f| f.imagined.len()) + 1;
    if lambdas.len() != levels_available {
        return Err(Error::Config(format!(
            "{} lambdas for {} prediction levels",
            lambdas.len(),
            levels_available
        )));
    }
    if region_boxes.len() != frames.len() {
        return Err(Error::Config(
            "region boxes must be given for every frame".into(),
        ));
    }
    let labels: Vec<Vec<bool>> = region_boxes
        .iter()
        .zip(&targets.risky_boxes)
        .map(|(regions, risky)| {
            if targets.label.is_positive() {
                region_labels(regions, risky)
            } else {
                vec![false; regions.len()]
            }
        })
        .collect();

    let mut parts = Vec::new();
    let mut weights = Vec::new();
    let mut levels = Vec::with_capacity(lambdas.len());
    for (n, &lambda) in lambdas.iter().enumerate() {
        let (ys, ss): (Vec<Var>, Vec<Var>) = frames
            .iter()
            .map(|f| {
                if n == 0 {
                    (f.y, f.scores)
                } else {
                    (f.imagined[n - 1].y, f.imagined[n - 1].scores)
                }
            })
            .unzip();
        let la = anticipation_loss(tape, &ys, targets, cfg);
        let lr = region_loss(tape, &ss, &labels);
        levels.push((la, lr));
        parts.extend([la, lr]);
        weights.extend([lambda, lambda]);
    }

    let transform = if levels_available > 1 {
        let cs: Vec<Var> = frames.iter().filter_map(FrameNodes::transform).collect();
        let lp = transform_loss(tape, &cs, &targets.agent_track, horizon);
        parts.push(lp);
        weights.push(1.0);
        Some(lp)
    } else {
        None
    };
    let total = tape.weighted_sum(&parts, &weights);
    Ok(LossTerms {
        total,
        transform,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxTransform;

    fn positive(frames: usize, acc: usize) -> VideoTargets {
        VideoTargets {
            label: Label::Positive,
            accident_frame: Some(acc),
            agent_track: vec![BBox::new(0.5, 0.5, 0.1, 0.1); frames],
            risky_boxes: vec![vec![]; frames],
        }
    }

    fn negative(frames: usize) -> VideoTargets {
        VideoTargets {
            label: Label::Negative,
            accident_frame: None,
            ..positive(frames, 0)
        }
    }

    fn ys(tape: &mut Tape, p1: &[f64]) -> Vec<Var> {
        p1.iter().map(|p| tape.input(vec![1.0 - p, *p])).collect()
    }

    #[test]
    fn labels_follow_iou_threshold() {
        let gt = BBox::new(0.5, 0.5, 0.2, 0.2);
        let far = BBox::new(0.9, 0.9, 0.05, 0.05);
        assert_eq!(region_labels(&[gt, far], &[gt]), vec![true, false]);
        // intersection 2, union 5: IoU is exactly 0.4 and the comparison is strict
        let a = BBox::new(2.0, 0.5, 4.0, 1.0);
        let b = BBox::new(3.5, 0.5, 3.0, 1.0);
        assert_eq!(iou(&a, &b), 0.4);
        assert_eq!(region_labels(&[a], &[b]), vec![false]);
        assert_eq!(
            region_labels(&[far, gt], &[far, gt]),
            region_labels(&[far, gt], &[gt, far])
        );
    }

    #[test]
    fn anticipation_examples() {
        let cfg = LossConfig::default();
        let mut t = Tape::new();
        let y = ys(&mut t, &[0.3]);
        let l = anticipation_loss(&mut t, &y, &positive(1, 0), &cfg);
        assert!((t.scalar(l) + 0.3f64.ln()).abs() < 1e-12);

        let y = ys(&mut t, &[0.5, 0.99]);
        // only frame T - 1 contributes meaningfully: e^{-1} ln 2, plus -ln 0.99 at T
        let l = anticipation_loss(&mut t, &y, &positive(2, 1), &cfg);
        let want = (-1.0f64).exp() * 2f64.ln() - 0.99f64.ln();
        assert!((t.scalar(l) - want).abs() < 1e-12);
        assert!(((-1.0f64).exp() * 2f64.ln() - 0.2550).abs() < 1e-4);

        let y = ys(&mut t, &[0.0, 0.0, 0.0]);
        let l = anticipation_loss(&mut t, &y, &negative(3), &cfg);
        // zero up to the 1 - 1e-12 clamp
        assert!(t.scalar(l).abs() < 1e-11);
    }

    #[test]
    fn anticipation_weights_increase_toward_accident() {
        let cfg = LossConfig::default();
        let tg = positive(6, 5);
        let w: Vec<f64> = (0..6).map(|t| anticipation_weight(&tg, t, &cfg)).collect();
        assert!(w.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(w[5], 1.0);
    }

    #[test]
    fn region_examples() {
        let mut t = Tape::new();
        let s = t.input(vec![0.5]);
        let l = region_loss(&mut t, &[s], &[vec![true]]);
        assert!((t.scalar(l) - 2f64.ln()).abs() < 1e-12);
        let s = t.input(vec![1e-9]);
        let l = region_loss(&mut t, &[s], &[vec![false]]);
        assert!(t.scalar(l) < 1e-8);
        let a = t.input(vec![0.23, 0.81]);
        let b = t.input(vec![0.77, 0.19]);
        let la = region_loss(&mut t, &[a], &[vec![true, false]]);
        let lb = region_loss(&mut t, &[b], &[vec![false, true]]);
        assert!((t.scalar(la) - t.scalar(lb)).abs() < 1e-12);
    }

    #[test]
    fn transform_examples() {
        let track = vec![
            BBox::new(0.1, 0.5, 0.1, 0.1),
            BBox::new(0.2, 0.5, 0.1, 0.1),
            BBox::new(0.3, 0.5, 0.1, 0.1),
        ];
        let mut t = Tape::new();
        let exact: Vec<Var> = (0..2)
            .map(|k| {
                t.input(
                    encode_box_transform(&track[k], &track[k + 1])
                        .to_array()
                        .to_vec(),
                )
            })
            .collect();
        let l = transform_loss(&mut t, &exact, &track, 1);
        assert!(t.scalar(l).abs() < 1e-12);

        let mut c = encode_box_transform(&track[0], &track[1]).to_array();
        c[2] += 0.5;
        let c = t.input(c.to_vec());
        let l = transform_loss(&mut t, &[c], &track, 1);
        assert!((t.scalar(l) - 0.125).abs() < 1e-12);

        let still = vec![BBox::new(0.4, 0.4, 0.2, 0.1); 4];
        let zero: Vec<Var> = (0..4)
            .map(|_| t.input(BoxTransform::default().to_array().to_vec()))
            .collect();
        let l = transform_loss(&mut t, &zero, &still, 2);
        assert_eq!(t.scalar(l), 0.0);
    }

    #[test]
    fn targets_validation() {
        assert!(positive(3, 2).validate(3).is_ok());
        assert!(positive(3, 3).validate(3).is_err());
        assert!(negative(3).validate(4).is_err());
    }
}
