//! Online tracking-by-detection over per-frame proposal sets, duplicate
//! suppression, and the per-epoch training track choice.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

/// A candidate box with its object score and appearance feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
    pub feat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub bbox: BBox,
    pub feat: Vec<f64>,
    pub score: f64,
}

impl From<&Proposal> for TrackPoint {
    fn from(p: &Proposal) -> Self {
        Self {
            bbox: p.bbox,
            feat: p.feat.clone(),
            score: p.score,
        }
    }
}

/// Contiguous run of boxes starting at frame `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub start: usize,
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn new(start: usize, points: Vec<TrackPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("a track needs at least one box".into()));
        }
        Ok(Self { start, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One past the last covered frame.
    pub fn end(&self) -> usize {
        self.start + self.points.len()
    }

    pub fn covers(&self, frames: usize) -> bool {
        self.start == 0 && self.points.len() == frames
    }

    pub fn last(&self) -> &TrackPoint {
        self.points.last().expect("tracks are non-empty")
    }

    pub fn boxes(&self) -> Vec<BBox> {
        self.points.iter().map(|p| p.bbox).collect()
    }

    pub fn mean_score(&self) -> f64 {
        self.points.iter().map(|p| p.score).sum::<f64>() / self.points.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Tracks started from the highest-scoring proposals of the first frame.
    pub top_init: usize,
    /// Proposals kept by IoU before the appearance match.
    pub top_iou: usize,
    pub overlap_iou: f64,
    /// Tracks whose mean object score falls below this are not treated as
    /// agent candidates.
    pub min_mean_score: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            top_init: 5,
            top_iou: 10,
            overlap_iou: 0.7,
            min_mean_score: 0.6,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_init == 0 || self.top_iou == 0 {
            return Err(Error::Config("top_init and top_iou must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap_iou) {
            return Err(Error::Config(format!(
                "overlap_iou {} outside [0, 1]",
                self.overlap_iou
            )));
        }
        if !(0.0..=1.0).contains(&self.min_mean_score) {
            return Err(Error::Config(format!(
                "min_mean_score {} outside [0, 1]",
                self.min_mean_score
            )));
        }
        Ok(())
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Descending by `key`, then by object score, then ascending index.
fn ranked(props: &[Proposal], key: impl Fn(&Proposal) -> f64) -> Vec<usize> {
    let keys: Vec<f64> = props.iter().map(key).collect();
    let mut idx: Vec<usize> = (0..props.len()).collect();
    idx.sort_by(|&a, &b| {
        keys[b]
            .partial_cmp(&keys[a])
            .unwrap_or(Ordering::Equal)
            .then(
                props[b]
                    .score
                    .partial_cmp(&props[a].score)
                    .unwrap_or(Ordering::Equal),
            )
            .then(a.cmp(&b))
    });
    idx
}

/// Chains proposals frame to frame. A frame without proposals ends every
/// track alive at that point.
pub fn track_by_detection(frames: &[Vec<Proposal>], top_init: usize, top_iou: usize) -> Vec<Track> {
    let Some(first) = frames.first() else {
        return Vec::new();
    };
    let mut tracks: Vec<Track> = ranked(first, |p| p.score)
        .into_iter()
        .take(top_init)
        .map(|i| Track {
            start: 0,
            points: vec![TrackPoint::from(&first[i])],
        })
        .collect();

    for next in &frames[1..] {
        if next.is_empty() {
            break;
        }
        for track in &mut tracks {
            let cur = track.last();
            let gate: Vec<usize> = ranked(next, |p| iou(&cur.bbox, &p.bbox))
                .into_iter()
                .take(top_iou)
                .collect();
            let best = gate
                .iter()
                .map(|&i| (i, cosine_similarity(&cur.feat, &next[i].feat)))
                .max_by(|&(a, ca), &(b, cb)| {
                    ca.partial_cmp(&cb)
                        .unwrap_or(Ordering::Equal)
                        .then(
                            next[a]
                                .score
                                .partial_cmp(&next[b].score)
                                .unwrap_or(Ordering::Equal),
                        )
                        .then(b.cmp(&a))
                })
                .map(|(i, _)| i)
                .expect("gate is non-empty");
            track.points.push(TrackPoint::from(&next[best]));
        }
    }
    tracks
}

/// Groups tracks whose final boxes overlap above `overlap_iou` (single
/// link) and keeps the highest mean-score track of each group. Survivors
/// keep their input order.
pub fn deduplicate_tracks(tracks: Vec<Track>, overlap_iou: f64) -> Vec<Track> {
    let n = tracks.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn root(group: &mut [usize], mut i: usize) -> usize {
        while group[i] != i {
            group[i] = group[group[i]];
            i = group[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if iou(&tracks[a].last().bbox, &tracks[b].last().bbox) > overlap_iou {
                let (ra, rb) = (root(&mut group, a), root(&mut group, b));
                group[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut best: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = root(&mut group, i);
        match best[r] {
            Some(j) if tracks[j].mean_score() >= tracks[i].mean_score() => {}
            _ => best[r] = Some(i),
        }
    }
    let mut keep: Vec<usize> = best.into_iter().flatten().collect();
    keep.sort_unstable();
    let mut slots: Vec<Option<Track>> = tracks.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| slots[i].take().expect("each survivor taken once"))
        .collect()
}

/// Full pipeline used for agent candidates: track, suppress duplicates,
/// keep full-length tracks above the score gate. If nothing passes the
/// gate, the best full-length track is returned alone.
pub fn candidate_agent_tracks(frames: &[Vec<Proposal>], cfg: &TrackerConfig) -> Vec<Track> {
    let tracks = track_by_detection(frames, cfg.top_init, cfg.top_iou);
    let full: Vec<Track> = deduplicate_tracks(tracks, cfg.overlap_iou)
        .into_iter()
        .filter(|t| t.covers(frames.len()))
        .collect();
    let gated: Vec<Track> = full
        .iter()
        .filter(|t| t.mean_score() >= cfg.min_mean_score)
        .cloned()
        .collect();
    if !gated.is_empty() {
        return gated;
    }
    full.into_iter()
        .fold(None::<Track>, |best, t| match best {
            Some(b) if b.mean_score() >= t.mean_score() => Some(b),
            _ => Some(t),
        })
        .into_iter()
        .collect()
}

/// Uniform choice over the ground-truth track and the tracker's candidates.
pub fn select_training_track<'a, R: Rng + ?Sized>(
    gt: &'a Track,
    td: &'a [Track],
    rng: &mut R,
) -> &'a Track {
    let k = rng.random_range(0..=td.len());
    if k == 0 {
        gt
    } else {
        &td[k - 1]
    }
}
