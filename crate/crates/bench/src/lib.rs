//! Fixtures shared by the benchmarks.

use riskrnn_core::model::{ModelConfig, RiskModel, Variant};
use riskrnn_core::synthworld::{stream_rng, Scenario, ScenarioConfig, World};

/// A default-sized model of `variant` and one positive video from the
/// default scenario (12 frames, 8 regions, 32-dimensional features).
pub fn fixture(variant: Variant) -> (RiskModel, Scenario) {
    let world = World::new(ScenarioConfig::default()).expect("default scenario is valid");
    let video = world
        .generate_video(true, &mut stream_rng(0, 42))
        .expect("default scenario generates");
    let model = RiskModel::new(ModelConfig::default().with_variant(variant), 0)
        .expect("default model is valid");
    (model, video)
}
