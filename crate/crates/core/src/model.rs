//! The risk-assessment network and its ablations.
//!
//! Per frame the model scores every candidate region with a classifier whose
//! weights are predicted from the agent code and the agent-region geometry,
//! pools region features by those scores, and turns the pooled holistic
//! vector into a two-way accident probability. Memory variants thread two
//! LSTMs (agent and anticipation); imagination variants regress the agent box
//! `K` frames ahead and re-score everything at the imagined location.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_transform, BBox, BoxTransform, RelativeConfig};
use crate::nn::serialize::{read_model, write_model};
use crate::nn::{
    dense, lstm_step, Init, LstmParams, LstmShape, LstmState, ParamId, ParamSpec, ParameterStore,
    Tape, Var,
};

/// The four ablations: with/without recurrent memory (L-) and with/without
/// imagination (-I).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "RA")]
    Ra,
    #[serde(rename = "RAI")]
    Rai,
    #[serde(rename = "L-RA")]
    LRa,
    #[serde(rename = "L-RAI")]
    LRai,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Ra, Variant::Rai, Variant::LRa, Variant::LRai];

    pub fn uses_memory(self) -> bool {
        matches!(self, Variant::LRa | Variant::LRai)
    }

    pub fn uses_imagination(self) -> bool {
        matches!(self, Variant::Rai | Variant::LRai)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ra => "RA",
            Variant::Rai => "RAI",
            Variant::LRa => "L-RA",
            Variant::LRai => "L-RAI",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "RA" => Ok(Variant::Ra),
            "RAI" => Ok(Variant::Rai),
            "L-RA" | "LRA" => Ok(Variant::LRa),
            "L-RAI" | "LRAI" => Ok(Variant::LRai),
            _ => Err(Error::Config(format!(
                "unknown variant {s:?} (RA, RAI, L-RA, L-RAI)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d_agent: usize,
    pub d_region: usize,
    pub d_u: usize,
    pub h_agent: usize,
    pub h_aa: usize,
    /// Imagination horizon `K` in frames.
    pub horizon: usize,
    /// Number of imagination steps `I`.
    pub imagination_steps: usize,
    /// Fusion weights `λ_0..λ_I`.
    pub lambdas: Vec<f64>,
    pub use_memory: bool,
    pub use_imagination: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_agent: 32,
            d_region: 32,
            d_u: 16,
            h_agent: 64,
            h_aa: 64,
            horizon: 5,
            imagination_steps: 1,
            lambdas: vec![0.6, 0.4],
            use_memory: true,
            use_imagination: true,
        }
    }
}

impl ModelConfig {
    /// Switches the ablation flags; non-imagination variants get `I = 0`, `λ = (1)`.
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.use_memory = variant.uses_memory();
        self.use_imagination = variant.uses_imagination();
        if !self.use_imagination {
            self.imagination_steps = 0;
            self.lambdas = vec![1.0];
        } else if self.imagination_steps == 0 {
            self.imagination_steps = 1;
            self.lambdas = vec![0.6, 0.4];
        }
        self
    }

    pub fn variant(&self) -> Variant {
        match (self.use_memory, self.use_imagination) {
            (false, false) => Variant::Ra,
            (false, true) => Variant::Rai,
            (true, false) => Variant::LRa,
            (true, true) => Variant::LRai,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_agent", self.d_agent),
            ("d_region", self.d_region),
            ("d_u", self.d_u),
            ("h_agent", self.h_agent),
            ("h_aa", self.h_aa),
            ("horizon", self.horizon),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("model.{name} must be >= 1")));
        }
        if !self.use_imagination && self.imagination_steps != 0 {
            return Err(Error::Config(
                "imagination_steps must be 0 when imagination is disabled".into(),
            ));
        }
        if self.lambdas.len() != self.imagination_steps + 1 {
            return Err(Error::Config(format!(
                "need {} lambdas for {} imagination steps, got {}",
                self.imagination_steps + 1,
                self.imagination_steps,
                self.lambdas.len()
            )));
        }
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("lambdas must be non-negative".into()));
        }
        let sum: f64 = self.lambdas.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "lambdas must sum to 1, sum is {sum}"
            )));
        }
        Ok(())
    }

    /// Width of the agent code fed to region scoring: `α` or `a`.
    pub fn agent_code_dim(&self) -> usize {
        if self.use_memory {
            self.h_agent
        } else {
            self.d_agent
        }
    }

    pub fn holistic_dim(&self) -> usize {
        self.agent_code_dim() + self.d_region
    }

    /// Width of the vector the output heads read: `o` or `q`.
    pub fn head_dim(&self) -> usize {
        if self.use_memory {
            self.h_aa
        } else {
            self.holistic_dim()
        }
    }

    pub fn agent_rnn_shape(&self) -> LstmShape {
        LstmShape {
            input: self.d_agent + 4,
            hidden: self.h_agent,
        }
    }

    pub fn anticipation_rnn_shape(&self) -> LstmShape {
        LstmShape {
            input: self.holistic_dim(),
            hidden: self.h_aa,
        }
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = vec![
            ParamSpec::new("W_u", self.d_u, RelativeConfig::DIM, Init::Glorot),
            ParamSpec::new("b_u", self.d_u, 1, Init::Zeros),
            ParamSpec::new(
                "W_f",
                self.d_region,
                self.agent_code_dim() + self.d_u,
                Init::Glorot,
            ),
            ParamSpec::new("b_f", self.d_region, 1, Init::Zeros),
            ParamSpec::new("W_y", 2, self.head_dim(), Init::Glorot),
        ];
        if self.use_imagination {
            specs.push(ParamSpec::new("W_c", 4, self.head_dim(), Init::Glorot));
        }
        if self.use_memory {
            specs.extend(self.agent_rnn_shape().specs("rnn_a"));
            specs.extend(self.anticipation_rnn_shape().specs("rnn_aa"));
        }
        specs
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| format!("{l:?}")).collect();
        vec![
            ("d_agent".into(), self.d_agent.to_string()),
            ("d_region".into(), self.d_region.to_string()),
            ("d_u".into(), self.d_u.to_string()),
            ("h_agent".into(), self.h_agent.to_string()),
            ("h_aa".into(), self.h_aa.to_string()),
            ("horizon".into(), self.horizon.to_string()),
            (
                "imagination_steps".into(),
                self.imagination_steps.to_string(),
            ),
            ("lambdas".into(), lambdas.join(",")),
            ("use_memory".into(), self.use_memory.to_string()),
            ("use_imagination".into(), self.use_imagination.to_string()),
        ]
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = ModelConfig::default();
        let bad = |k: &str, v: &str| Error::Config(format!("bad value {v:?} for model key {k}"));
        for (k, v) in pairs {
            let int = || v.parse::<usize>().map_err(|_| bad(k, v));
            let flag = || v.parse::<bool>().map_err(|_| bad(k, v));
            match k.as_str() {
                "d_agent" => cfg.d_agent = int()?,
                "d_region" => cfg.d_region = int()?,
                "d_u" => cfg.d_u = int()?,
                "h_agent" => cfg.h_agent = int()?,
                "h_aa" => cfg.h_aa = int()?,
                "horizon" => cfg.horizon = int()?,
                "imagination_steps" => cfg.imagination_steps = int()?,
                "lambdas" => {
                    cfg.lambdas = v
                        .split(',')
                        .map(|x| x.trim().parse::<f64>().map_err(|_| bad(k, v)))
                        .collect::<Result<_>>()?
                }
                "use_memory" => cfg.use_memory = flag()?,
                "use_imagination" => cfg.use_imagination = flag()?,
                _ => return Err(Error::Config(format!("unknown model key {k}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Observations for one frame from the point of view of one agent track.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameInput {
    pub agent_feat: Vec<f64>,
    pub agent_box: BBox,
    pub region_feats: Vec<Vec<f64>>,
    pub region_boxes: Vec<BBox>,
}

impl FrameInput {
    pub fn num_regions(&self) -> usize {
        self.region_boxes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImaginedStep {
    pub agent_box: BBox,
    pub y: [f64; 2],
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePrediction {
    /// `(non-accident, accident)` probabilities from the observed frame.
    pub y: [f64; 2],
    pub scores: Vec<f64>,
    pub imagined: Vec<ImaginedStep>,
    pub y_fused: [f64; 2],
    pub scores_fused: Vec<f64>,
    /// First-step transform regressed from the observed frame.
    pub transform: Option<BoxTransform>,
}

impl FramePrediction {
    pub fn accident_prob(&self, fused: bool) -> f64 {
        if fused {
            self.y_fused[1]
        } else {
            self.y[1]
        }
    }

    pub fn region_scores(&self, fused: bool) -> &[f64] {
        if fused {
            &self.scores_fused
        } else {
            &self.scores
        }
    }
}

/// Tape nodes for one region-scoring pass.
#[derive(Debug, Clone)]
pub struct RegionScores {
    /// `N` risk scores.
    pub scores: Var,
    /// Predicted classifier weights `w_r`, one per region.
    pub weights: Vec<Var>,
}

#[derive(Debug, Clone, Copy)]
pub struct ImaginedNodes {
    pub agent_box: Var,
    pub transform: Var,
    pub y: Var,
    pub scores: Var,
    pub head: Var,
}

/// Tape nodes produced for one frame.
#[derive(Debug, Clone)]
pub struct FrameNodes {
    pub y: Var,
    pub scores: Var,
    pub imagined: Vec<ImaginedNodes>,
    pub y_fused: Var,
    pub scores_fused: Var,
}

impl FrameNodes {
    /// First-step transform node, regressed from the observed head vector.
    pub fn transform(&self) -> Option<Var> {
        self.imagined.first().map(|s| s.transform)
    }
}

#[derive(Debug, Clone, Copy)]
struct Ids {
    w_u: ParamId,
    b_u: ParamId,
    w_f: ParamId,
    b_f: ParamId,
    w_y: ParamId,
    w_c: Option<ParamId>,
    rnn_a: Option<LstmParams>,
    rnn_aa: Option<LstmParams>,
}

/// Recurrent state carried between frames: both LSTMs.
#[derive(Debug, Clone, Copy)]
pub struct RecurrentState {
    pub agent: LstmState,
    pub anticipation: LstmState,
}

#[derive(Debug, Clone)]
pub struct RiskModel {
    pub config: ModelConfig,
    pub store: ParameterStore,
    ids: Ids,
}

impl RiskModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let store = ParameterStore::init(&config.param_specs(), seed)?;
        Self::from_parts(config, store)
    }

    /// Binds a parameter store to a config, checking every expected matrix.
    pub fn from_parts(config: ModelConfig, store: ParameterStore) -> Result<Self> {
        config.validate()?;
        let specs = config.param_specs();
        if store.len() != specs.len() {
            return Err(Error::Config(format!(
                "{} model expects {} parameter matrices, store has {}",
                config.variant(),
                specs.len(),
                store.len()
            )));
        }
        for s in &specs {
            let p = store
                .by_name(&s.name)
                .ok_or_else(|| Error::Config(format!("missing parameter {}", s.name)))?;
            if (p.rows, p.cols) != (s.rows, s.cols) {
                return Err(Error::Shape(format!(
                    "{} is {}x{}, config expects {}x{}",
                    s.name, p.rows, p.cols, s.rows, s.cols
                )));
            }
        }
        let ids = Ids {
            w_u: store.require("W_u")?,
            b_u: store.require("b_u")?,
            w_f: store.require("W_f")?,
            b_f: store.require("b_f")?,
            w_y: store.require("W_y")?,
            w_c: store.id("W_c"),
            rnn_a: config
                .use_memory
                .then(|| LstmParams::lookup(&store, "rnn_a"))
                .transpose()?,
            rnn_aa: config
                .use_memory
                .then(|| LstmParams::lookup(&store, "rnn_aa"))
                .transpose()?,
        };
        Ok(Self { config, store, ids })
    }

    /// Text model file: config pairs plus every parameter matrix.
    pub fn to_text(&self) -> String {
        write_model(&self.config.to_pairs(), &self.store)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (pairs, store) = read_model(text)?;
        Self::from_parts(ModelConfig::from_pairs(&pairs)?, store)
    }

    pub fn check_frame(&self, frame: &FrameInput) -> Result<()> {
        let c = &self.config;
        if frame.agent_feat.len() != c.d_agent {
            return Err(Error::Shape(format!(
                "agent feature has {} entries, model expects {}",
                frame.agent_feat.len(),
                c.d_agent
            )));
        }
        if frame.region_boxes.is_empty() {
            return Err(Error::Shape("frame has no candidate regions".into()));
        }
        if frame.region_feats.len() != frame.region_boxes.len() {
            return Err(Error::Shape(
                "region features and boxes differ in count".into(),
            ));
        }
        if let Some(f) = frame.region_feats.iter().find(|f| f.len() != c.d_region) {
            return Err(Error::Shape(format!(
                "region feature has {} entries, model expects {}",
                f.len(),
                c.d_region
            )));
        }
        frame.agent_box.validate()?;
        frame.region_boxes.iter().try_for_each(BBox::validate)
    }

    pub fn initial_state(&self, tape: &mut Tape) -> Option<RecurrentState> {
        self.config.use_memory.then(|| RecurrentState {
            agent: LstmState::zeros(tape, self.config.h_agent),
            anticipation: LstmState::zeros(tape, self.config.h_aa),
        })
    }

    /// Risk score of every region: `s = sigmoid(w_r · r)` with
    /// `w_r = relu(W_f [code; relu(W_u u + b_u)] + b_f)`.
    pub fn score_regions(
        &self,
        tape: &mut Tape,
        agent_code: Var,
        agent_box: Var,
        frame: &FrameInput,
    ) -> RegionScores {
        let mut scores = Vec::with_capacity(frame.num_regions());
        let mut weights = Vec::with_capacity(frame.num_regions());
        for (bx, feat) in frame.region_boxes.iter().zip(&frame.region_feats) {
            let u = tape.relative_config(agent_box, *bx);
            let eu = dense(tape, &self.store, self.ids.w_u, u, Some(self.ids.b_u));
            let e = tape.relu(eu);
            let z = tape.concat(&[agent_code, e]);
            let wz = dense(tape, &self.store, self.ids.w_f, z, Some(self.ids.b_f));
            let w_r = tape.relu(wz);
            let r = tape.input(feat.clone());
            let logit = tape.dot(w_r, r);
            scores.push(tape.sigmoid(logit));
            weights.push(w_r);
        }
        RegionScores {
            scores: tape.concat(&scores),
            weights,
        }
    }

    /// `r̄ = Σ_i s_i r_i`.
    pub fn pool_regions(&self, tape: &mut Tape, scores: Var, frame: &FrameInput) -> Var {
        let n = frame.num_regions();
        let d = self.config.d_region;
        let mut transposed = vec![0.0; d * n];
        for (i, f) in frame.region_feats.iter().enumerate() {
            for (k, v) in f.iter().enumerate() {
                transposed[k * n + i] = *v;
            }
        }
        let rt = tape.input_matrix(transposed, d, n);
        tape.matvec(rt, scores)
    }

    /// One step of the agent LSTM on `[a_t; p_t]`.
    pub fn agent_rnn_step(
        &self,
        tape: &mut Tape,
        state: LstmState,
        agent_feat: Var,
        agent_box: Var,
    ) -> LstmState {
        let params = self
            .ids
            .rnn_a
            .as_ref()
            .expect("agent RNN requires a memory variant");
        let x = tape.concat(&[agent_feat, agent_box]);
        lstm_step(tape, &self.store, params, x, state)
    }

    /// Holistic anticipation. Returns the new anticipation state (memory
    /// variants), the head vector (`o` or `q`) and `y = softmax(W_y head)`.
    pub fn anticipate_step(
        &self,
        tape: &mut Tape,
        state: Option<LstmState>,
        agent_code: Var,
        pooled: Var,
    ) -> (Option<LstmState>, Var, Var) {
        let q = tape.concat(&[agent_code, pooled]);
        let (next, head) = match (state, self.ids.rnn_aa.as_ref()) {
            (Some(s), Some(params)) => {
                let n = lstm_step(tape, &self.store, params, q, s);
                (Some(n), n.hidden)
            }
            _ => (None, q),
        };
        let logits = dense(tape, &self.store, self.ids.w_y, head, None);
        let y = tape.softmax(logits);
        (next, head, y)
    }

    /// `c = W_c · head` and the transformed box.
    pub fn imagine_location(
        &self,
        tape: &mut Tape,
        head: Var,
        agent_box: Var,
    ) -> Result<(Var, Var)> {
        let w_c = self.ids.w_c.ok_or_else(|| {
            Error::Config(format!(
                "{} has no imagination layer",
                self.config.variant()
            ))
        })?;
        let c = dense(tape, &self.store, w_c, head, None);
        check_transform(&BoxTransform::from_slice(tape.value(c)))?;
        let xy = tape.slice(agent_box, 0, 2);
        let wh = tape.slice(agent_box, 2, 2);
        let c_xy = tape.slice(c, 0, 2);
        let c_wh = tape.slice(c, 2, 2);
        let shift = tape.mul(c_xy, wh);
        let new_xy = tape.add(shift, xy);
        let scale = tape.exp(c_wh);
        let new_wh = tape.mul(scale, wh);
        Ok((c, tape.concat(&[new_xy, new_wh])))
    }

    /// Re-assesses risk at an imagined agent box against the frame's observed
    /// regions. The anticipation LSTM steps from `state_before`, the state the
    /// observed frame itself stepped from; nothing is committed.
    pub fn imagined_reassessment(
        &self,
        tape: &mut Tape,
        state_before: Option<LstmState>,
        agent_code: Var,
        imagined_box: Var,
        frame: &FrameInput,
    ) -> (Var, Var, Var) {
        let regions = self.score_regions(tape, agent_code, imagined_box, frame);
        let pooled = self.pool_regions(tape, regions.scores, frame);
        let (_, head, y) = self.anticipate_step(tape, state_before, agent_code, pooled);
        (y, regions.scores, head)
    }

    /// Runs imagination for `I` steps from the observed head vector,
    /// each step starting at the previous imagined box.
    pub fn imagine(
        &self,
        tape: &mut Tape,
        state_before: Option<LstmState>,
        agent_code: Var,
        agent_box: Var,
        observed_head: Var,
        frame: &FrameInput,
    ) -> Result<Vec<ImaginedNodes>> {
        let mut steps = Vec::with_capacity(self.config.imagination_steps);
        let (mut head, mut base) = (observed_head, agent_box);
        for _ in 0..self.config.imagination_steps {
            let (transform, imagined_box) = self.imagine_location(tape, head, base)?;
            let (y, scores, next_head) =
                self.imagined_reassessment(tape, state_before, agent_code, imagined_box, frame);
            steps.push(ImaginedNodes {
                agent_box: imagined_box,
                transform,
                y,
                scores,
                head: next_head,
            });
            head = next_head;
            base = imagined_box;
        }
        Ok(steps)
    }

    /// `y^F = Σ_n λ_n ŷ_n`, `S^F = Σ_n λ_n Ŝ_n`, with `n = 0` the observed pair.
    pub fn fuse_predictions(
        &self,
        tape: &mut Tape,
        y: Var,
        scores: Var,
        imagined: &[ImaginedNodes],
    ) -> (Var, Var) {
        if imagined.is_empty() && self.config.lambdas == [1.0] {
            return (y, scores);
        }
        let ys: Vec<Var> = std::iter::once(y)
            .chain(imagined.iter().map(|s| s.y))
            .collect();
        let ss: Vec<Var> = std::iter::once(scores)
            .chain(imagined.iter().map(|s| s.scores))
            .collect();
        let lambdas = &self.config.lambdas[..ys.len()];
        (
            tape.weighted_sum(&ys, lambdas),
            tape.weighted_sum(&ss, lambdas),
        )
    }

    /// Processes one frame, advancing `state` in place for memory variants.
    pub fn step_frame(
        &self,
        tape: &mut Tape,
        state: &mut Option<RecurrentState>,
        frame: &FrameInput,
    ) -> Result<FrameNodes> {
        self.check_frame(frame)?;
        let agent_feat = tape.input(frame.agent_feat.clone());
        let agent_box = tape.input(frame.agent_box.to_array().to_vec());

        let (agent_code, aa_before) = match state.as_mut() {
            Some(st) => {
                st.agent = self.agent_rnn_step(tape, st.agent, agent_feat, agent_box);
                (st.agent.hidden, Some(st.anticipation))
            }
            None => (agent_feat, None),
        };
        let regions = self.score_regions(tape, agent_code, agent_box, frame);
        let pooled = self.pool_regions(tape, regions.scores, frame);
        let (aa_after, head, y) = self.anticipate_step(tape, aa_before, agent_code, pooled);
        if let (Some(st), Some(next)) = (state.as_mut(), aa_after) {
            st.anticipation = next;
        }
        let imagined = if self.config.use_imagination {
            self.imagine(tape, aa_before, agent_code, agent_box, head, frame)?
        } else {
            Vec::new()
        };
        let (y_fused, scores_fused) = self.fuse_predictions(tape, y, regions.scores, &imagined);
        Ok(FrameNodes {
            y,
            scores: regions.scores,
            imagined,
            y_fused,
            scores_fused,
        })
    }

    /// Records the whole video on `tape`.
    pub fn forward_video_nodes(
        &self,
        tape: &mut Tape,
        video: &[FrameInput],
    ) -> Result<Vec<FrameNodes>> {
        if video.is_empty() {
            return Err(Error::Shape(
                "cannot run the model on an empty video".into(),
            ));
        }
        let mut state = self.initial_state(tape);
        video
            .iter()
            .map(|f| self.step_frame(tape, &mut state, f))
            .collect()
    }

    pub fn forward_video(&self, video: &[FrameInput]) -> Result<Vec<FramePrediction>> {
        let mut tape = Tape::new();
        let nodes = self.forward_video_nodes(&mut tape, video)?;
        Ok(nodes.iter().map(|n| read_prediction(&tape, n)).collect())
    }
}

fn pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

pub fn read_prediction(tape: &Tape, nodes: &FrameNodes) -> FramePrediction {
    let imagined = nodes
        .imagined
        .iter()
        .map(|s| {
            let b = tape.value(s.agent_box);
            ImaginedStep {
                agent_box: BBox::new(b[0], b[1], b[2], b[3]),
                y: pair(tape.value(s.y)),
                scores: tape.value(s.scores).to_vec(),
            }
        })
        .collect();
    FramePrediction {
        y: pair(tape.value(nodes.y)),
        scores: tape.value(nodes.scores).to_vec(),
        imagined,
        y_fused: pair(tape.value(nodes.y_fused)),
        scores_fused: tape.value(nodes.scores_fused).to_vec(),
        transform: nodes
            .transform()
            .map(|c| BoxTransform::from_slice(tape.value(c))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tape::sigmoid;

    fn small_config(variant: Variant) -> ModelConfig {
        ModelConfig {
            d_agent: 4,
            d_region: 3,
            d_u: 5,
            h_agent: 6,
            h_aa: 7,
            horizon: 1,
            ..ModelConfig::default()
        }
        .with_variant(variant)
    }

    fn frame(seed: f64, n: usize) -> FrameInput {
        let v = |k: usize, d: usize| -> Vec<f64> {
            (0..d)
                .map(|j| (seed + k as f64 * 1.7 + j as f64 * 0.9).sin())
                .collect()
        };
        FrameInput {
            agent_feat: v(0, 4),
            agent_box: BBox::new(0.4 + 0.01 * seed, 0.5, 0.1, 0.12),
            region_feats: (1..=n).map(|k| v(k, 3)).collect(),
            region_boxes: (0..n)
                .map(|k| BBox::new(0.2 + 0.15 * k as f64, 0.45 + 0.02 * k as f64, 0.12, 0.1))
                .collect(),
        }
    }

    fn zero_params(model: &mut RiskModel) {
        model.store.iter_mut().for_each(|p| p.values.fill(0.0));
    }

    #[test]
    fn variant_parameter_sets() {
        let ra = small_config(Variant::Ra).param_specs();
        assert!(ra.iter().all(|s| !s.name.starts_with("rnn")));
        assert!(ra.iter().all(|s| s.name != "W_c"));
        let lrai = small_config(Variant::LRai).param_specs();
        for name in ["W_c", "rnn_a.W", "rnn_a.b", "rnn_aa.W", "rnn_aa.b"] {
            assert!(lrai.iter().any(|s| s.name == name), "{name}");
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(Variant::LRai);
        c.lambdas = vec![0.5, 0.4];
        assert!(c.validate().is_err());
        c.lambdas = vec![1.0];
        assert!(c.validate().is_err());
        let mut c = small_config(Variant::Ra);
        c.d_u = 0;
        assert!(c.validate().is_err());
        let c = small_config(Variant::LRai);
        assert_eq!(ModelConfig::from_pairs(&c.to_pairs()).unwrap(), c);
    }

    #[test]
    fn zero_region_classifier_gives_half() {
        let mut m = RiskModel::new(small_config(Variant::Ra), 1).unwrap();
        let id = m.store.id("W_f").unwrap();
        m.store.get_mut(id).values.fill(0.0);
        let f = frame(0.3, 4);
        let mut t = Tape::new();
        let code = t.input(f.agent_feat.clone());
        let bx = t.input(f.agent_box.to_array().to_vec());
        let s = m.score_regions(&mut t, code, bx, &f);
        assert!(t.value(s.scores).iter().all(|v| *v == 0.5));
    }

    #[test]
    fn doubling_region_feature_doubles_logit() {
        let m = RiskModel::new(small_config(Variant::Ra), 2).unwrap();
        let mut f = frame(0.1, 1);
        let mut t = Tape::new();
        let code = t.input(f.agent_feat.clone());
        let bx = t.input(f.agent_box.to_array().to_vec());
        let s = m.score_regions(&mut t, code, bx, &f);
        let w_r = t.value(s.weights[0]).to_vec();
        let logit: f64 = w_r.iter().zip(&f.region_feats[0]).map(|(a, b)| a * b).sum();
        // rescale the feature so that w_r · r = 2, then double it
        assert!(logit.abs() > 1e-9);
        f.region_feats[0].iter_mut().for_each(|v| *v *= 2.0 / logit);
        let s2 = m.score_regions(&mut t, code, bx, &f);
        assert!((t.value(s2.scores)[0] - sigmoid(2.0)).abs() < 1e-12);
        assert!((t.value(s2.scores)[0] - 0.8807970779778823).abs() < 1e-12);
        f.region_feats[0].iter_mut().for_each(|v| *v *= 2.0);
        let s4 = m.score_regions(&mut t, code, bx, &f);
        assert!((t.value(s4.scores)[0] - 0.9820137900379085).abs() < 1e-12);
    }

    #[test]
    fn identical_regions_identical_scores() {
        let m = RiskModel::new(small_config(Variant::LRai), 3).unwrap();
        let mut f = frame(0.2, 2);
        f.region_feats[1] = f.region_feats[0].clone();
        f.region_boxes[1] = f.region_boxes[0];
        let p = m.forward_video(&[f]).unwrap();
        assert_eq!(p[0].scores[0], p[0].scores[1]);
    }

    #[test]
    fn pooling_examples() {
        let cfg = ModelConfig {
            d_region: 2,
            ..small_config(Variant::Ra)
        };
        let m = RiskModel::new(cfg, 0).unwrap();
        let f = FrameInput {
            agent_feat: vec![0.0; 4],
            agent_box: BBox::new(0.5, 0.5, 0.1, 0.1),
            region_feats: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            region_boxes: vec![BBox::new(0.2, 0.2, 0.1, 0.1); 2],
        };
        let mut t = Tape::new();
        let half = t.input(vec![0.5, 0.5]);
        let r = m.pool_regions(&mut t, half, &f);
        assert_eq!(t.value(r), &[0.5, 0.5]);
        let zero = t.input(vec![0.0, 0.0]);
        let r = m.pool_regions(&mut t, zero, &f);
        assert_eq!(t.value(r), &[0.0, 0.0]);
        let single = FrameInput {
            region_feats: vec![vec![0.3, -0.7]],
            region_boxes: vec![BBox::new(0.2, 0.2, 0.1, 0.1)],
            ..f
        };
        let one = t.input(vec![1.0]);
        let r = m.pool_regions(&mut t, one, &single);
        assert_eq!(t.value(r), &[0.3, -0.7]);
    }

    #[test]
    fn agent_rnn_matches_direct_lstm_step() {
        let m = RiskModel::new(small_config(Variant::LRa), 5).unwrap();
        let f = frame(0.7, 2);
        let mut t = Tape::new();
        let a = t.input(f.agent_feat.clone());
        let p = t.input(f.agent_box.to_array().to_vec());
        let s0 = LstmState::zeros(&mut t, 6);
        let s1 = m.agent_rnn_step(&mut t, s0, a, p);
        let s1b = m.agent_rnn_step(&mut t, s0, a, p);
        assert_eq!(t.value(s1.hidden), t.value(s1b.hidden));

        let mut cat = f.agent_feat.clone();
        cat.extend(f.agent_box.to_array());
        let x = t.input(cat);
        let params = LstmParams::lookup(&m.store, "rnn_a").unwrap();
        let r = lstm_step(&mut t, &m.store, &params, x, s0);
        assert_eq!(t.value(s1.hidden), t.value(r.hidden));
        assert_eq!(t.value(s1.cell), t.value(r.cell));
    }

    #[test]
    fn zero_output_head_is_uniform() {
        for variant in Variant::ALL {
            let mut m = RiskModel::new(small_config(variant), 4).unwrap();
            let id = m.store.id("W_y").unwrap();
            m.store.get_mut(id).values.fill(0.0);
            let p = m.forward_video(&[frame(0.1, 3), frame(0.2, 3)]).unwrap();
            for fp in &p {
                assert_eq!(fp.y, [0.5, 0.5]);
                assert!((fp.y_fused[0] + fp.y_fused[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_zero_params_single_frame() {
        for variant in Variant::ALL {
            let mut m = RiskModel::new(small_config(variant), 4).unwrap();
            zero_params(&mut m);
            let p = m.forward_video(&[frame(0.5, 3)]).unwrap();
            assert_eq!(p[0].y, [0.5, 0.5]);
            assert!(p[0].scores.iter().all(|s| *s == 0.5));
            assert_eq!(p[0].y_fused, [0.5, 0.5]);
        }
    }

    #[test]
    fn zero_transform_keeps_box_and_reassessment() {
        let mut m = RiskModel::new(small_config(Variant::LRai), 8).unwrap();
        let id = m.store.id("W_c").unwrap();
        m.store.get_mut(id).values.fill(0.0);
        let video = [frame(0.1, 3), frame(0.1, 3)];
        let p = m.forward_video(&video).unwrap();
        for (fp, f) in p.iter().zip(&video) {
            assert_eq!(fp.imagined[0].agent_box, f.agent_box);
            assert_eq!(fp.imagined[0].y, fp.y);
            assert_eq!(fp.imagined[0].scores, fp.scores);
            assert_eq!(fp.transform, Some(BoxTransform::default()));
        }
    }

    #[test]
    fn transform_from_head() {
        let cfg = small_config(Variant::Rai);
        let m = RiskModel::new(cfg.clone(), 0).unwrap();
        let mut m2 = m.clone();
        let id = m2.store.id("W_c").unwrap();
        let w = &mut m2.store.get_mut(id).values;
        w.fill(0.0);
        w[0] = 1.0; // c_x = head[0]
        let mut t = Tape::new();
        let mut head = vec![0.0; cfg.head_dim()];
        head[0] = 1.0;
        let head = t.input(head);
        let p = t.input(vec![2.0, 3.0, 4.0, 5.0]);
        let (c, p_hat) = m2.imagine_location(&mut t, head, p).unwrap();
        assert_eq!(t.value(c), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.value(p_hat), &[6.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn imagination_extreme_scale_is_rejected() {
        let mut m = RiskModel::new(small_config(Variant::Rai), 0).unwrap();
        let id = m.store.id("W_c").unwrap();
        m.store.get_mut(id).values.fill(100.0);
        assert!(matches!(
            m.forward_video(&[frame(0.3, 2)]),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn two_step_imagination_chains_boxes() {
        let mut cfg = small_config(Variant::LRai);
        cfg.imagination_steps = 2;
        cfg.lambdas = vec![0.5, 0.3, 0.2];
        let m = RiskModel::new(cfg, 12).unwrap();
        let video = [frame(0.0, 3), frame(0.4, 3)];
        let mut t = Tape::new();
        let nodes = m.forward_video_nodes(&mut t, &video).unwrap();
        for fnodes in &nodes {
            let [s1, s2] = [fnodes.imagined[0], fnodes.imagined[1]];
            let b1 = t.value(s1.agent_box);
            let first = BBox::new(b1[0], b1[1], b1[2], b1[3]);
            let c2 = BoxTransform::from_slice(t.value(s2.transform));
            let want = crate::geometry::apply_box_transform(&first, &c2).unwrap();
            for (g, w) in t.value(s2.agent_box).iter().zip(want.to_array()) {
                assert!((g - w).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fusion_example() {
        let m = RiskModel::new(small_config(Variant::LRai), 0).unwrap();
        let mut t = Tape::new();
        let y = t.input(vec![0.5, 0.5]);
        let s = t.input(vec![0.2, 0.9]);
        let y1 = t.input(vec![0.0, 1.0]);
        let s1 = t.input(vec![0.4, 0.4]);
        let dummy = t.input(vec![0.0; 4]);
        let imagined = [ImaginedNodes {
            agent_box: dummy,
            transform: dummy,
            y: y1,
            scores: s1,
            head: dummy,
        }];
        let (yf, sf) = m.fuse_predictions(&mut t, y, s, &imagined);
        assert!((t.value(yf)[1] - 0.7).abs() < 1e-12);
        assert!((t.value(yf)[0] - 0.3).abs() < 1e-12);
        assert!((t.value(sf)[0] - 0.28).abs() < 1e-12);

        let ra = RiskModel::new(small_config(Variant::Ra), 0).unwrap();
        let (yf, sf) = ra.fuse_predictions(&mut t, y, s, &[]);
        assert_eq!((yf, sf), (y, s));
    }

    #[test]
    fn empty_video_and_bad_dims_rejected() {
        let m = RiskModel::new(small_config(Variant::LRai), 0).unwrap();
        assert!(matches!(m.forward_video(&[]), Err(Error::Shape(_))));
        let mut f = frame(0.0, 2);
        f.agent_feat.push(1.0);
        assert!(matches!(m.forward_video(&[f]), Err(Error::Shape(_))));
        let mut f = frame(0.0, 2);
        f.region_boxes.clear();
        f.region_feats.clear();
        assert!(matches!(m.forward_video(&[f]), Err(Error::Shape(_))));
    }

    #[test]
    fn frame_count_preserved() {
        let m = RiskModel::new(small_config(Variant::LRai), 0).unwrap();
        let video: Vec<_> = (0..5).map(|k| frame(k as f64 * 0.1, 3)).collect();
        assert_eq!(m.forward_video(&video).unwrap().len(), 5);
    }

    #[test]
    fn text_round_trip_and_ra_has_no_lstm() {
        for v in Variant::ALL {
            let m = RiskModel::new(small_config(v), 4).unwrap();
            let text = m.to_text();
            let back = RiskModel::from_text(&text).unwrap();
            assert_eq!(back.config, m.config);
            assert_eq!(back.store, m.store);
            assert_eq!(text.contains("rnn_a"), v.uses_memory());
        }
    }
}
