use riskrnn_core::geometry::iou;
use riskrnn_core::synthworld::{ScenarioConfig, World};
use riskrnn_core::tracking::{candidate_agent_tracks, TrackerConfig};

#[test]
fn clean_proposals_recover_the_agent_exactly() {
    let world = World::new(ScenarioConfig {
        proposal_jitter: 0.0,
        n_distractor_proposals: 0,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    for v in world.generate_split("clean", 0, 20).unwrap() {
        let tracks = candidate_agent_tracks(&v.proposals(), &TrackerConfig::default());
        let gt: Vec<_> = v.frames.iter().map(|f| f.agent_box).collect();
        assert!(
            tracks.iter().any(|t| t.boxes() == gt),
            "{}: agent track not recovered",
            v.id
        );
    }
}

#[test]
fn default_proposals_track_most_frames() {
    let world = World::new(ScenarioConfig {
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let (mut hit, mut total) = (0, 0);
    for v in world.generate_split("test", 2, 50).unwrap() {
        let tracks = candidate_agent_tracks(&v.proposals(), &TrackerConfig::default());
        let best = tracks
            .iter()
            .max_by(|a, b| a.mean_score().total_cmp(&b.mean_score()))
            .expect("at least one candidate");
        for (b, f) in best.boxes().iter().zip(&v.frames) {
            total += 1;
            hit += usize::from(iou(b, &f.agent_box) >= 0.5);
        }
    }
    let frac = hit as f64 / total as f64;
    assert!(frac >= 0.8, "tracked fraction {frac}");
}
