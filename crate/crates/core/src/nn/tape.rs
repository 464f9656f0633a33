//! Reverse-mode differentiation over vector-valued nodes.
//!
//! Every operation appends a node holding its value and the ids of its
//! inputs. Nodes are created in evaluation order, so the node list is already
//! topologically sorted and [`Tape::backward`] is a single reverse sweep.
//!
//! Shape mismatches are contract violations and panic.

use std::collections::HashMap;

use crate::geometry::{smooth_l1, smooth_l1_grad, BBox};
use crate::nn::params::{ParamId, ParameterStore};

/// Lower clamp applied inside [`Tape::ln_clamped`].
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    MatVec { w: Var, x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    ScalarMul { s: Var, v: Var },
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Softmax(Var),
    LnClamped(Var),
    SmoothL1(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Dot(Var, Var),
    Sum(Var),
    WeightedSum { terms: Vec<Var>, weights: Vec<f64> },
    RelConfig { agent: Var, region: BBox },
}

#[derive(Debug, Clone)]
struct Node {
    value: Vec<f64>,
    rows: usize,
    cols: usize,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, rows: usize, cols: usize, op: Op) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node {
            value,
            rows,
            cols,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn push_vec(&mut self, value: Vec<f64>, op: Op) -> Var {
        let n = value.len();
        self.push(value, n, 1, op)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let val = self.value(v);
        assert_eq!(val.len(), 1, "node is not a scalar");
        val[0]
    }

    pub fn dim(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    /// A constant column vector.
    pub fn input(&mut self, value: Vec<f64>) -> Var {
        self.push_vec(value, Op::Input)
    }

    /// A constant row-major matrix.
    pub fn input_matrix(&mut self, value: Vec<f64>, rows: usize, cols: usize) -> Var {
        assert_eq!(value.len(), rows * cols, "matrix input must be rows * cols");
        self.push(value, rows, cols, Op::Input)
    }

    /// Registers a parameter; repeated calls return the same node.
    pub fn param(&mut self, store: &ParameterStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let p = store.get(id);
        let v = self.push(p.values.clone(), p.rows, p.cols, Op::Param(id));
        self.params.insert(id, v);
        v
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Var {
        let (rows, cols) = (self.nodes[w.0].rows, self.nodes[w.0].cols);
        let xv = &self.nodes[x.0].value;
        assert_eq!(
            cols,
            xv.len(),
            "matvec: matrix has {cols} cols, vector has {}",
            xv.len()
        );
        let wv = &self.nodes[w.0].value;
        let out = (0..rows)
            .map(|r| {
                wv[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(xv)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        self.push_vec(out, Op::MatVec { w, x })
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(
            av.len(),
            bv.len(),
            "elementwise op on lengths {} and {}",
            av.len(),
            bv.len()
        );
        let out = av.iter().zip(bv).map(|(x, y)| f(*x, *y)).collect();
        self.push_vec(out, op)
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let out = self.nodes[a.0].value.iter().map(|&x| f(x)).collect();
        self.push_vec(out, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.map(a, Op::Scale(a, k), |x| k * x)
    }

    /// Multiplies vector `v` by the scalar node `s`.
    pub fn scalar_mul(&mut self, s: Var, v: Var) -> Var {
        let k = self.scalar(s);
        self.map(v, Op::ScalarMul { s, v }, |x| k * x)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), f64::tanh)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, Op::Exp(a), f64::exp)
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let out = softmax(&self.nodes[a.0].value);
        self.push_vec(out, Op::Softmax(a))
    }

    /// `ln(clamp(x, 1e-12, 1 - 1e-12))`; zero gradient where the clamp is active.
    pub fn ln_clamped(&mut self, a: Var) -> Var {
        self.map(a, Op::LnClamped(a), |x| {
            x.clamp(PROB_EPS, 1.0 - PROB_EPS).ln()
        })
    }

    pub fn smooth_l1(&mut self, a: Var) -> Var {
        self.map(a, Op::SmoothL1(a), smooth_l1)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let out: Vec<f64> = parts
            .iter()
            .flat_map(|p| self.nodes[p.0].value.iter().copied())
            .collect();
        self.push_vec(out, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        let out = self.nodes[x.0].value[start..start + len].to_vec();
        self.push_vec(out, Op::Slice { x, start })
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(
            av.len(),
            bv.len(),
            "dot on lengths {} and {}",
            av.len(),
            bv.len()
        );
        let d = av.iter().zip(bv).map(|(x, y)| x * y).sum();
        self.push_vec(vec![d], Op::Dot(a, b))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.iter().sum();
        self.push_vec(vec![s], Op::Sum(a))
    }

    /// `Σ weights[k] * terms[k]` over equal-length nodes.
    pub fn weighted_sum(&mut self, terms: &[Var], weights: &[f64]) -> Var {
        assert_eq!(terms.len(), weights.len(), "weighted_sum arity");
        assert!(!terms.is_empty(), "weighted_sum of nothing");
        let n = self.dim(terms[0]);
        let mut out = vec![0.0; n];
        for (t, w) in terms.iter().zip(weights) {
            let tv = &self.nodes[t.0].value;
            assert_eq!(tv.len(), n, "weighted_sum lengths differ");
            out.iter_mut().zip(tv).for_each(|(o, x)| *o += w * x);
        }
        self.push_vec(
            out,
            Op::WeightedSum {
                terms: terms.to_vec(),
                weights: weights.to_vec(),
            },
        )
    }

    /// The 9-dimensional relative configuration of a fixed `region` with
    /// respect to the agent box node `(cx, cy, w, h)`.
    pub fn relative_config(&mut self, agent: Var, region: BBox) -> Var {
        let a = self.value(agent);
        assert_eq!(a.len(), 4, "agent box node must have 4 entries");
        let agent_box = BBox::new(a[0], a[1], a[2], a[3]);
        let out = crate::geometry::relative_config(&agent_box, &region)
            .to_array()
            .to_vec();
        self.push_vec(out, Op::RelConfig { agent, region })
    }

    /// Accumulates `d loss / d param` into the gradient buffers of `store`.
    pub fn backward(&self, loss: Var, store: &mut ParameterStore) {
        self.backward_scaled(loss, 1.0, store)
    }

    /// As [`Tape::backward`] for the loss `seed * loss`.
    pub fn backward_scaled(&self, loss: Var, seed: f64, store: &mut ParameterStore) {
        assert_eq!(self.dim(loss), 1, "backward requires a scalar loss");
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![seed]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    let p = store.get_mut(*id);
                    p.grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
                }
                Op::MatVec { w, x } => {
                    let wn = &self.nodes[w.0];
                    let xv = &self.nodes[x.0].value;
                    let cols = wn.cols;
                    if needs_grad(&self.nodes[w.0]) {
                        let gw = acc(&mut grads, *w, wn.value.len());
                        for (r, gr) in g.iter().enumerate() {
                            if *gr != 0.0 {
                                gw[r * cols..(r + 1) * cols]
                                    .iter_mut()
                                    .zip(xv)
                                    .for_each(|(a, b)| *a += gr * b);
                            }
                        }
                    }
                    if needs_grad(&self.nodes[x.0]) {
                        let gx = acc(&mut grads, *x, cols);
                        for (r, gr) in g.iter().enumerate() {
                            if *gr != 0.0 {
                                gx.iter_mut()
                                    .zip(&wn.value[r * cols..(r + 1) * cols])
                                    .for_each(|(a, b)| *a += gr * b);
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(acc(&mut grads, *a, g.len()), &g, 1.0);
                    add_into(acc(&mut grads, *b, g.len()), &g, 1.0);
                }
                Op::Sub(a, b) => {
                    add_into(acc(&mut grads, *a, g.len()), &g, 1.0);
                    add_into(acc(&mut grads, *b, g.len()), &g, -1.0);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let ga = acc(&mut grads, *a, g.len());
                    ga.iter_mut()
                        .zip(g.iter().zip(bv))
                        .for_each(|(o, (gi, bi))| *o += gi * bi);
                    let gb = acc(&mut grads, *b, g.len());
                    gb.iter_mut()
                        .zip(g.iter().zip(av))
                        .for_each(|(o, (gi, ai))| *o += gi * ai);
                }
                Op::Scale(a, k) => add_into(acc(&mut grads, *a, g.len()), &g, *k),
                Op::ScalarMul { s, v } => {
                    let k = self.nodes[s.0].value[0];
                    let vv = &self.nodes[v.0].value;
                    let ds: f64 = g.iter().zip(vv).map(|(a, b)| a * b).sum();
                    acc(&mut grads, *s, 1)[0] += ds;
                    add_into(acc(&mut grads, *v, g.len()), &g, k);
                }
                Op::Relu(a) => {
                    let av = &self.nodes[a.0].value;
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gi), x) in ga.iter_mut().zip(&g).zip(av) {
                        if *x > 0.0 {
                            *o += gi;
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gi), yi) in ga.iter_mut().zip(&g).zip(y) {
                        *o += gi * yi * (1.0 - yi);
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gi), yi) in ga.iter_mut().zip(&g).zip(y) {
                        *o += gi * (1.0 - yi * yi);
                    }
                }
                Op::Exp(a) => {
                    let y = &node.value;
                    let ga = acc(&mut grads, *a, g.len());
                    ga.iter_mut()
                        .zip(g.iter().zip(y))
                        .for_each(|(o, (gi, yi))| *o += gi * yi);
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gi), yi) in ga.iter_mut().zip(&g).zip(y) {
                        *o += yi * (gi - gy);
                    }
                }
                Op::LnClamped(a) => {
                    let av = &self.nodes[a.0].value;
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gi), x) in ga.iter_mut().zip(&g).zip(av) {
                        if *x > PROB_EPS && *x < 1.0 - PROB_EPS {
                            *o += gi / x;
                        }
                    }
                }
                Op::SmoothL1(a) => {
                    let av = &self.nodes[a.0].value;
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, gi), x) in ga.iter_mut().zip(&g).zip(av) {
                        *o += gi * smooth_l1_grad(*x);
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        add_into(acc(&mut grads, *p, n), &g[off..off + n], 1.0);
                        off += n;
                    }
                }
                Op::Slice { x, start } => {
                    let n = self.nodes[x.0].value.len();
                    let gx = acc(&mut grads, *x, n);
                    add_into(&mut gx[*start..*start + g.len()], &g, 1.0);
                }
                Op::Dot(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    add_into(acc(&mut grads, *a, av.len()), bv, g[0]);
                    add_into(acc(&mut grads, *b, bv.len()), av, g[0]);
                }
                Op::Sum(a) => {
                    let ga = acc(&mut grads, *a, self.nodes[a.0].value.len());
                    ga.iter_mut().for_each(|o| *o += g[0]);
                }
                Op::WeightedSum { terms, weights } => {
                    for (t, w) in terms.iter().zip(weights) {
                        add_into(acc(&mut grads, *t, g.len()), &g, *w);
                    }
                }
                Op::RelConfig { agent, region } => {
                    let a = &self.nodes[agent.0].value;
                    let jac = relative_config_jacobian([a[0], a[1], a[2], a[3]], region);
                    let ga = acc(&mut grads, *agent, 4);
                    for (k, gk) in g.iter().enumerate() {
                        for j in 0..4 {
                            ga[j] += gk * jac[k][j];
                        }
                    }
                }
            }
        }
    }
}

fn needs_grad(node: &Node) -> bool {
    !matches!(node.op, Op::Input)
}

fn acc(grads: &mut [Option<Vec<f64>>], v: Var, n: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; n])
}

fn add_into(dst: &mut [f64], src: &[f64], k: f64) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += k * s);
}

/// Logistic function, clamped to `[2^-53, 1 - 2^-53]` so saturated logits
/// still give scores strictly inside (0, 1).
pub fn sigmoid(x: f64) -> f64 {
    const EDGE: f64 = f64::EPSILON / 2.0;
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(EDGE, 1.0 - EDGE)
}

/// Max-subtracted softmax.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Partial derivatives of the 9 configuration entries with respect to the
/// agent box `(cx, cy, w, h)`. The IoU row uses the one-sided derivative
/// that matches the active `min`/`max` branch.
fn relative_config_jacobian(agent: [f64; 4], region: &BBox) -> [[f64; 4]; 9] {
    let [x, y, w, h] = agent;
    let mut j = [[0.0; 4]; 9];
    let rx = [region.cx, region.x_min(), region.x_max()];
    let ry = [region.cy, region.y_min(), region.y_max()];
    // rows: dxc, dyc, dxmin, dymin, dxmax, dymax
    for (k, (&px, &py)) in rx.iter().zip(&ry).enumerate() {
        j[2 * k][0] = -1.0 / w;
        j[2 * k][2] = -(px - x) / (w * w);
        j[2 * k + 1][1] = -1.0 / h;
        j[2 * k + 1][3] = -(py - y) / (h * h);
    }
    j[6][2] = -region.w / (w * w);
    j[7][3] = -region.h / (h * h);

    // overlap along one axis and its partials w.r.t. (center, size)
    let axis = |c: f64, s: f64, lo: f64, hi: f64| -> (f64, f64, f64) {
        let (a_lo, a_hi) = (c - 0.5 * s, c + 0.5 * s);
        let len = a_hi.min(hi) - a_lo.max(lo);
        if len <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let d_hi = if a_hi < hi { 1.0 } else { 0.0 };
        let d_lo = if a_lo > lo { 1.0 } else { 0.0 };
        (len, d_hi - d_lo, 0.5 * d_hi + 0.5 * d_lo)
    };
    let (iw, diw_dx, diw_dw) = axis(x, w, region.x_min(), region.x_max());
    let (ih, dih_dy, dih_dh) = axis(y, h, region.y_min(), region.y_max());
    let inter = iw * ih;
    let union = w * h + region.area() - inter;
    if inter > 0.0 {
        let d_inter = [ih * diw_dx, iw * dih_dy, ih * diw_dw, iw * dih_dh];
        let d_area = [0.0, 0.0, h, w];
        for k in 0..4 {
            let d_union = d_area[k] - d_inter[k];
            j[8][k] = (d_inter[k] * union - inter * d_union) / (union * union);
        }
    }
    j
}
