//! Agent-centric risk assessment: per-frame accident anticipation, risky
//! region localization and future agent-location imagination, trained end to
//! end on synthetic scenarios.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod losses;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod synthworld;
pub mod tracking;
pub mod train;

pub use error::{Error, Result};
pub use eval::{MetricsReport, RiskMap, VariantMetrics};
pub use geometry::{BBox, BoxTransform, RelativeConfig};
pub use losses::{Label, LossConfig};
pub use model::{FramePrediction, ModelConfig, RiskModel, Variant};
pub use pipeline::{EvalConfig, Evaluation};
pub use synthworld::{Scenario, ScenarioConfig, World};
pub use tracking::{Proposal, Track, TrackerConfig};
pub use train::{TrainConfig, TrainOutcome};
