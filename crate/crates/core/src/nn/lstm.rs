//! Vanilla LSTM cell (no peepholes), gate order `i, f, g, o`.

use crate::error::{Error, Result};
use crate::nn::params::{Init, ParamId, ParamSpec, ParameterStore};
use crate::nn::tape::{Tape, Var};

/// Names and shapes of one LSTM block: a `4H x (input + H)` weight matrix
/// acting on `[x; h]` and a `4H` bias column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmShape {
    pub input: usize,
    pub hidden: usize,
}

impl LstmShape {
    pub fn specs(&self, prefix: &str) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new(
                format!("{prefix}.W"),
                4 * self.hidden,
                self.input + self.hidden,
                Init::Glorot,
            ),
            ParamSpec::new(
                format!("{prefix}.b"),
                4 * self.hidden,
                1,
                Init::LstmBias {
                    hidden: self.hidden,
                },
            ),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    pub weight: ParamId,
    pub bias: ParamId,
    pub shape: LstmShape,
}

impl LstmParams {
    pub fn lookup(store: &ParameterStore, prefix: &str) -> Result<Self> {
        let weight = store.require(&format!("{prefix}.W"))?;
        let bias = store.require(&format!("{prefix}.b"))?;
        let w = store.get(weight);
        let hidden = w.rows / 4;
        if w.rows % 4 != 0 || w.cols <= hidden || store.get(bias).len() != w.rows {
            return Err(Error::Shape(format!("inconsistent LSTM block {prefix}")));
        }
        Ok(Self {
            weight,
            bias,
            shape: LstmShape {
                input: w.cols - hidden,
                hidden,
            },
        })
    }
}

/// Hidden and cell vectors living on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmState {
    pub hidden: Var,
    pub cell: Var,
}

impl LstmState {
    pub fn zeros(tape: &mut Tape, hidden: usize) -> Self {
        Self {
            hidden: tape.input(vec![0.0; hidden]),
            cell: tape.input(vec![0.0; hidden]),
        }
    }
}

/// One step: `c' = f*c + i*g`, `h' = o*tanh(c')`.
pub fn lstm_step(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &LstmParams,
    x: Var,
    state: LstmState,
) -> LstmState {
    let h = params.shape.hidden;
    assert_eq!(
        tape.dim(x),
        params.shape.input,
        "lstm_step: input dimension"
    );
    assert_eq!(tape.dim(state.hidden), h, "lstm_step: hidden dimension");
    let w = tape.param(store, params.weight);
    let b = tape.param(store, params.bias);
    let xh = tape.concat(&[x, state.hidden]);
    let wx = tape.matvec(w, xh);
    let z = tape.add(wx, b);
    let zi = tape.slice(z, 0, h);
    let zf = tape.slice(z, h, h);
    let zg = tape.slice(z, 2 * h, h);
    let zo = tape.slice(z, 3 * h, h);
    let i = tape.sigmoid(zi);
    let f = tape.sigmoid(zf);
    let g = tape.tanh(zg);
    let o = tape.sigmoid(zo);
    let fc = tape.mul(f, state.cell);
    let ig = tape.mul(i, g);
    let cell = tape.add(fc, ig);
    let tc = tape.tanh(cell);
    let hidden = tape.mul(o, tc);
    LstmState { hidden, cell }
}
