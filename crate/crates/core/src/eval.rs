//! Ranking metrics: average precision, video-level anticipation scores,
//! time-to-accident curves, per-frame region AP, and risk-map rasters.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::model::FramePrediction;

/// IoU at which a detection hits a ground-truth box.
pub const REGION_MATCH_IOU: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub score: f64,
    pub is_positive: bool,
}

impl ScoredItem {
    pub fn new(score: f64, is_positive: bool) -> Self {
        Self { score, is_positive }
    }
}

/// Descending score; at equal scores negatives come first.
fn pessimistic_order(items: &[ScoredItem]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| {
        items[b]
            .score
            .partial_cmp(&items[a].score)
            .unwrap_or(Ordering::Equal)
            .then(items[a].is_positive.cmp(&items[b].is_positive))
    });
    idx
}

/// AP where `total_positives` may exceed the positives among `items`
/// (missed ground truth counts against recall).
pub fn average_precision_with_total(items: &[ScoredItem], total_positives: usize) -> Result<f64> {
    if total_positives == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs at least one positive".into(),
        ));
    }
    if let Some(bad) = items.iter().find(|i| !i.score.is_finite()) {
        return Err(Error::UndefinedMetric(format!(
            "non-finite score {}",
            bad.score
        )));
    }
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in pessimistic_order(items).iter().enumerate() {
        if items[i].is_positive {
            tp += 1;
            sum += tp as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / total_positives as f64)
}

pub fn average_precision(items: &[ScoredItem]) -> Result<f64> {
    let p = items.iter().filter(|i| i.is_positive).count();
    average_precision_with_total(items, p)
}

/// Video-level outcome: the max-over-tracks anticipation probability per
/// frame and its overall maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoScore {
    pub score: f64,
    pub frame_scores: Vec<f64>,
    pub is_positive: bool,
    pub accident_frame: Option<usize>,
}

/// Per-frame accident probability, maximised over candidate tracks.
pub fn frame_scores(tracks: &[Vec<FramePrediction>], fused: bool) -> Vec<f64> {
    let frames = tracks.iter().map(Vec::len).max().unwrap_or(0);
    (0..frames)
        .map(|t| {
            tracks
                .iter()
                .filter_map(|tr| tr.get(t))
                .map(|p| p.accident_prob(fused))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn video_level_score(
    tracks: &[Vec<FramePrediction>],
    fused: bool,
    is_positive: bool,
    accident_frame: Option<usize>,
) -> Result<VideoScore> {
    if tracks.is_empty() || tracks.iter().any(Vec::is_empty) {
        return Err(Error::Shape(
            "video-level scoring needs non-empty predictions".into(),
        ));
    }
    let frame_scores = frame_scores(tracks, fused);
    let score = frame_scores
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(VideoScore {
        score,
        frame_scores,
        is_positive,
        accident_frame,
    })
}

pub fn video_items(videos: &[VideoScore]) -> Vec<ScoredItem> {
    videos
        .iter()
        .map(|v| ScoredItem::new(v.score, v.is_positive))
        .collect()
}

/// First frame whose score reaches `gamma`.
pub fn first_crossing(frame_scores: &[f64], gamma: f64) -> Option<usize> {
    frame_scores.iter().position(|&s| s >= gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub mean_tta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtaCurve {
    pub points: Vec<CurvePoint>,
    /// Recall-increment weighted mean of `mean_tta`, in frames.
    pub atta: f64,
}

/// Sweeps the threshold over the distinct video scores, highest first. A
/// video is flagged when its score reaches the threshold; its TTA is
/// `T - t̂` with `t̂` the first frame reaching the threshold.
pub fn tta_atta(videos: &[VideoScore]) -> Result<TtaCurve> {
    let total_pos = videos.iter().filter(|v| v.is_positive).count();
    if total_pos == 0 {
        return Err(Error::UndefinedMetric(
            "TTA needs at least one positive video".into(),
        ));
    }
    let mut thresholds: Vec<f64> = videos.iter().map(|v| v.score).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len());
    let mut atta = 0.0;
    let mut prev_recall = 0.0;
    for &gamma in &thresholds {
        let flagged = videos.iter().filter(|v| v.score >= gamma);
        let (mut tp, mut fp, mut tta_sum) = (0usize, 0usize, 0.0);
        for v in flagged {
            if v.is_positive {
                tp += 1;
                let crossing =
                    first_crossing(&v.frame_scores, gamma).unwrap_or(v.frame_scores.len());
                let acc = v.accident_frame.unwrap_or(v.frame_scores.len() - 1);
                tta_sum += acc.saturating_sub(crossing) as f64;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / total_pos as f64;
        let mean_tta = if tp > 0 { tta_sum / tp as f64 } else { 0.0 };
        atta += (recall - prev_recall) * mean_tta;
        prev_recall = recall;
        points.push(CurvePoint {
            threshold: gamma,
            precision: tp as f64 / (tp + fp) as f64,
            recall,
            mean_tta,
        });
    }
    Ok(TtaCurve { points, atta })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
}

/// Detections and ground truth of one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionFrame {
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<BBox>,
}

/// Greedy matching in descending score order (ties by index), each
/// ground-truth box claimed at most once.
pub fn match_frame(frame: &RegionFrame) -> Vec<ScoredItem> {
    let mut order: Vec<usize> = (0..frame.detections.len()).collect();
    order.sort_by(|&a, &b| {
        frame.detections[b]
            .score
            .partial_cmp(&frame.detections[a].score)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut taken = vec![false; frame.ground_truth.len()];
    order
        .into_iter()
        .map(|i| {
            let d = &frame.detections[i];
            let best = frame
                .ground_truth
                .iter()
                .enumerate()
                .filter(|(g, _)| !taken[*g])
                .map(|(g, gt)| (g, iou(&d.bbox, gt)))
                .filter(|&(_, v)| v >= REGION_MATCH_IOU)
                .max_by(|a, b| {
                    a.1.partial_cmp(&b.1)
                        .unwrap_or(Ordering::Equal)
                        .then(b.0.cmp(&a.0))
                });
            if let Some((g, _)) = best {
                taken[g] = true;
            }
            ScoredItem::new(d.score, best.is_some())
        })
        .collect()
}

/// Same frame with every detection rescored to 1 if it overlaps any
/// ground-truth box at the match IoU, else 0.
pub fn oracle_frame(frame: &RegionFrame) -> RegionFrame {
    RegionFrame {
        detections: frame
            .detections
            .iter()
            .map(|d| Detection {
                bbox: d.bbox,
                score: if frame
                    .ground_truth
                    .iter()
                    .any(|g| iou(&d.bbox, g) >= REGION_MATCH_IOU)
                {
                    1.0
                } else {
                    0.0
                },
            })
            .collect(),
        ground_truth: frame.ground_truth.clone(),
    }
}

/// AP over detections pooled from every frame.
pub fn pooled_region_ap(frames: &[RegionFrame]) -> Result<f64> {
    let total: usize = frames.iter().map(|f| f.ground_truth.len()).sum();
    let items: Vec<ScoredItem> = frames.iter().flat_map(match_frame).collect();
    average_precision_with_total(&items, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub map: f64,
    pub oracle: f64,
}

/// Pooled region AP plus the oracle bound. An oracle with no detection
/// reaching any ground truth is reported as 0.
pub fn region_map(frames: &[RegionFrame]) -> Result<RegionMap> {
    let map = pooled_region_ap(frames)?;
    let oracle_frames: Vec<RegionFrame> = frames.iter().map(oracle_frame).collect();
    let oracle = pooled_region_ap(&oracle_frames)?;
    if oracle == 0.0 {
        log::warn!("no detection overlaps ground truth; oracle region AP reported as 0");
    }
    Ok(RegionMap { map, oracle })
}

/// Mean of per-video pooled APs over videos with ground truth.
pub fn region_map_per_video(videos: &[Vec<RegionFrame>]) -> Result<RegionMap> {
    let (mut map, mut oracle, mut n) = (0.0, 0.0, 0usize);
    for v in videos {
        if v.iter().all(|f| f.ground_truth.is_empty()) {
            continue;
        }
        let r = region_map(v)?;
        map += r.map;
        oracle += r.oracle;
        n += 1;
    }
    if n == 0 {
        return Err(Error::UndefinedMetric(
            "no video has ground-truth regions".into(),
        ));
    }
    Ok(RegionMap {
        map: map / n as f64,
        oracle: oracle / n as f64,
    })
}

/// Grid of mean risk over the boxes covering each cell centre, in the unit
/// square.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskMap {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub cells: Vec<f64>,
}

impl RiskMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.cells[y * self.width + x]
    }

    /// Plain PGM, maxval 255.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.cells.chunks(self.width) {
            let line: Vec<String> = row
                .iter()
                .map(|v| ((v * 255.0).round() as u8).to_string())
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn risk_map_raster(
    boxes: &[BBox],
    scores: &[f64],
    width: usize,
    height: usize,
) -> Result<RiskMap> {
    if width == 0 || height == 0 {
        return Err(Error::Config(format!(
            "risk map grid must be at least 1x1, got {width}x{height}"
        )));
    }
    if boxes.len() != scores.len() {
        return Err(Error::Shape(format!(
            "{} boxes but {} scores",
            boxes.len(),
            scores.len()
        )));
    }
    let mut cells = Vec::with_capacity(width * height);
    for y in 0..height {
        let cy = (y as f64 + 0.5) / height as f64;
        for x in 0..width {
            let cx = (x as f64 + 0.5) / width as f64;
            let covering: Vec<f64> = boxes
                .iter()
                .zip(scores)
                .filter(|(b, _)| b.contains_point(cx, cy))
                .map(|(_, &s)| s)
                .collect();
            let v = if covering.is_empty() {
                0.0
            } else {
                // sorted so the mean does not depend on box order
                let mut c = covering;
                c.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
                c.iter().sum::<f64>() / c.len() as f64
            };
            cells.push(v.clamp(0.0, 1.0));
        }
    }
    Ok(RiskMap {
        width,
        height,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMetrics {
    pub variant: String,
    pub anticipation_map: f64,
    pub atta_frames: f64,
    pub atta_seconds: f64,
    pub region_map: f64,
    pub oracle_region_map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub anticipation_map: f64,
    pub atta_frames: f64,
    pub atta_seconds: f64,
    pub region_map: f64,
    pub oracle_region_map: f64,
    pub fused: bool,
    pub fps: f64,
    pub videos: usize,
    pub per_variant: Vec<VariantMetrics>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("threshold,precision,recall,mean_tta\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.threshold, p.precision, p.recall, p.mean_tta
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn items(v: &[(f64, bool)]) -> Vec<ScoredItem> {
        v.iter().map(|&(s, p)| ScoredItem::new(s, p)).collect()
    }

    /// Sum over distinct thresholds of precision times recall gain.
    fn ap_oracle(items: &[ScoredItem]) -> f64 {
        let p = items.iter().filter(|i| i.is_positive).count() as f64;
        let mut th: Vec<f64> = items.iter().map(|i| i.score).collect();
        th.sort_by(|a, b| b.partial_cmp(a).unwrap());
        th.dedup();
        let mut prev = 0.0;
        let mut ap = 0.0;
        for t in th {
            let sel: Vec<_> = items.iter().filter(|i| i.score >= t).collect();
            let tp = sel.iter().filter(|i| i.is_positive).count() as f64;
            let r = tp / p;
            ap += (r - prev) * tp / sel.len() as f64;
            prev = r;
        }
        ap
    }

    fn video(frame_scores: Vec<f64>, positive: bool) -> VideoScore {
        let n = frame_scores.len();
        VideoScore {
            score: frame_scores
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
            frame_scores,
            is_positive: positive,
            accident_frame: positive.then_some(n - 1),
        }
    }

    /// Independent threshold sweep for ATTA.
    fn atta_oracle(videos: &[VideoScore]) -> f64 {
        let p = videos.iter().filter(|v| v.is_positive).count() as f64;
        let mut th: Vec<f64> = videos.iter().map(|v| v.score).collect();
        th.sort_by(|a, b| b.partial_cmp(a).unwrap());
        th.dedup();
        let mut prev = 0.0;
        let mut atta = 0.0;
        for g in th {
            let mut ttas = Vec::new();
            for v in videos.iter().filter(|v| v.is_positive && v.score >= g) {
                let mut t_hat = v.frame_scores.len();
                for (t, &s) in v.frame_scores.iter().enumerate() {
                    if s >= g {
                        t_hat = t;
                        break;
                    }
                }
                ttas.push((v.frame_scores.len() - 1) as f64 - t_hat as f64);
            }
            let r = ttas.len() as f64 / p;
            if !ttas.is_empty() {
                atta += (r - prev) * ttas.iter().sum::<f64>() / ttas.len() as f64;
            }
            prev = r;
        }
        atta
    }

    #[test]
    fn ap_examples() {
        assert_eq!(
            average_precision(&items(&[(0.9, true), (0.8, true), (0.1, false)])).unwrap(),
            1.0
        );
        let ap = average_precision(&items(&[
            (0.9, true),
            (0.8, false),
            (0.7, true),
            (0.1, false),
        ]))
        .unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!(matches!(
            average_precision(&items(&[(0.5, false)])),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn ap_ties_are_pessimistic() {
        // negative ranked first within the tie
        let ap = average_precision(&items(&[(0.5, true), (0.5, false)])).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn ap_matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(2..60);
            let mut v: Vec<ScoredItem> = (0..n)
                .map(|_| ScoredItem::new(rng.random::<f64>(), rng.random_bool(0.4)))
                .collect();
            v[0].is_positive = true;
            let a = average_precision(&v).unwrap();
            assert!((a - ap_oracle(&v)).abs() <= 1e-12);
            assert!((0.0..=1.0).contains(&a));
        }
    }

    proptest! {
        #[test]
        fn ap_rank_invariant(scores in proptest::collection::vec(0.0f64..1.0, 2..30), k in 0.1f64..5.0) {
            let v: Vec<ScoredItem> = scores.iter().enumerate().map(|(i, &s)| ScoredItem::new(s, i % 3 == 0)).collect();
            let w: Vec<ScoredItem> = v.iter().map(|i| ScoredItem::new((k * i.score).exp(), i.is_positive)).collect();
            prop_assert_eq!(average_precision(&v).unwrap(), average_precision(&w).unwrap());
        }
    }

    #[test]
    fn video_scores_take_max() {
        let p = |y1: f64| FramePrediction {
            y: [1.0 - y1, y1],
            scores: vec![],
            imagined: vec![],
            y_fused: [1.0 - y1, y1],
            scores_fused: vec![],
            transform: None,
        };
        let flat: Vec<FramePrediction> = (0..10).map(|_| p(0.3)).collect();
        let v = video_level_score(&[flat], true, false, None).unwrap();
        assert!((v.score - 0.3).abs() < 1e-15);
        let a: Vec<FramePrediction> = [0.1, 0.4, 0.2].map(p).to_vec();
        let b: Vec<FramePrediction> = [0.8, 0.1, 0.1].map(p).to_vec();
        let v = video_level_score(&[a, b], true, true, Some(2)).unwrap();
        assert!((v.score - 0.8).abs() < 1e-15);
        assert_eq!(v.frame_scores, vec![0.8, 0.4, 0.2]);
        let rising = [0.1, 0.2, 0.5, 0.7, 0.9];
        assert_eq!(first_crossing(&rising, 0.6), Some(3));
    }

    #[test]
    fn atta_examples() {
        let mut f = vec![0.0; 12];
        for s in &mut f[6..] {
            *s = 1.0;
        }
        let c = tta_atta(&[video(f, true)]).unwrap();
        assert_eq!(c.atta, 5.0);
        let mut late = vec![0.0; 12];
        late[11] = 0.9;
        let c = tta_atta(&[video(late, true), video(vec![0.2; 12], false)]).unwrap();
        assert_eq!(c.atta, 0.0);
    }

    #[test]
    fn atta_matches_oracle_and_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(1..30);
            let frames = rng.random_range(2..15);
            let mut vids: Vec<VideoScore> = (0..n)
                .map(|i| {
                    let f = (0..frames).map(|_| rng.random::<f64>()).collect();
                    video(f, i == 0 || rng.random_bool(0.5))
                })
                .collect();
            vids.rotate_left(n / 2);
            let c = tta_atta(&vids).unwrap();
            assert!((c.atta - atta_oracle(&vids)).abs() <= 1e-12);
            assert!(c.atta >= 0.0 && c.atta <= frames as f64);
            assert_eq!(c.points.last().unwrap().recall, 1.0);
        }
    }

    #[test]
    fn region_examples() {
        let gt = BBox::new(0.5, 0.5, 0.2, 0.2);
        let exact = RegionFrame {
            detections: vec![Detection {
                bbox: gt,
                score: 1.0,
            }],
            ground_truth: vec![gt],
        };
        assert_eq!(region_map(&[exact]).unwrap().map, 1.0);

        // IoU 0.5: shift by a third of the width; IoU 0.3: shift by 7/13
        let d1 = gt.translated(0.2 / 3.0, 0.0);
        let d2 = gt.translated(0.2 * 7.0 / 13.0, 0.0);
        assert!((iou(&gt, &d1) - 0.5).abs() < 1e-12);
        assert!((iou(&gt, &d2) - 0.3).abs() < 1e-12);
        let frame = RegionFrame {
            detections: vec![
                Detection {
                    bbox: d1,
                    score: 0.9,
                },
                Detection {
                    bbox: d2,
                    score: 0.95,
                },
            ],
            ground_truth: vec![gt],
        };
        let m = region_map(&[frame]).unwrap();
        assert!((m.map - 0.5).abs() < 1e-15);
        assert_eq!(m.oracle, 1.0);
    }

    #[test]
    fn oracle_of_misses_is_zero() {
        let frame = RegionFrame {
            detections: vec![Detection {
                bbox: BBox::new(0.1, 0.1, 0.05, 0.05),
                score: 0.7,
            }],
            ground_truth: vec![BBox::new(0.8, 0.8, 0.1, 0.1)],
        };
        let m = region_map(&[frame]).unwrap();
        assert_eq!(m.oracle, 0.0);
        assert_eq!(m.map, 0.0);
    }

    #[test]
    fn oracle_bounds_random_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let frames: Vec<RegionFrame> = (0..5)
                .map(|_| {
                    let gt: Vec<BBox> = (0..rng.random_range(0..3))
                        .map(|_| BBox::new(rng.random(), rng.random(), 0.2, 0.2))
                        .collect();
                    let mut dets: Vec<Detection> = gt
                        .iter()
                        .map(|g| Detection {
                            bbox: g.translated(0.01, 0.0),
                            score: rng.random(),
                        })
                        .collect();
                    dets.extend((0..4).map(|_| Detection {
                        bbox: BBox::new(rng.random(), rng.random(), 0.2, 0.2),
                        score: rng.random(),
                    }));
                    RegionFrame {
                        detections: dets,
                        ground_truth: gt,
                    }
                })
                .collect();
            if frames.iter().all(|f| f.ground_truth.is_empty()) {
                continue;
            }
            let m = region_map(&frames).unwrap();
            assert!(m.oracle + 1e-12 >= m.map, "{m:?}");
        }
    }

    #[test]
    fn risk_map_examples() {
        let all = BBox::new(0.5, 0.5, 1.0, 1.0);
        let m = risk_map_raster(&[all], &[0.8], 4, 3).unwrap();
        assert!(m.cells.iter().all(|&c| c == 0.8));
        let m = risk_map_raster(&[all, all], &[0.2, 0.6], 2, 2).unwrap();
        assert!(m.cells.iter().all(|&c| (c - 0.4).abs() < 1e-15));
        let m = risk_map_raster(&[], &[], 3, 3).unwrap();
        assert!(m.cells.iter().all(|&c| c == 0.0));
        assert!(risk_map_raster(&[], &[], 0, 3).is_err());
    }

    #[test]
    fn risk_map_order_invariant_and_pgm() {
        let boxes = [
            BBox::new(0.3, 0.3, 0.5, 0.5),
            BBox::new(0.6, 0.5, 0.6, 0.4),
            BBox::new(0.5, 0.5, 0.3, 0.9),
        ];
        let scores = [0.1, 0.73, 0.37];
        let a = risk_map_raster(&boxes, &scores, 16, 9).unwrap();
        let rb: Vec<BBox> = boxes.iter().rev().copied().collect();
        let rs: Vec<f64> = scores.iter().rev().copied().collect();
        assert_eq!(a, risk_map_raster(&rb, &rs, 16, 9).unwrap());
        let pgm = risk_map_raster(&boxes[..1], &[1.0], 2, 1).unwrap().to_pgm();
        assert_eq!(pgm, "P2\n2 1\n255\n255 0\n");
    }

    #[test]
    fn curve_csv_header() {
        let csv = curve_csv(&[CurvePoint {
            threshold: 0.5,
            precision: 1.0,
            recall: 0.5,
            mean_tta: 3.0,
        }]);
        assert_eq!(csv, "threshold,precision,recall,mean_tta\n0.5,1,0.5,3\n");
    }
}
