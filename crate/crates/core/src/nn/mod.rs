//! Minimal differentiable-computation core.

pub mod adam;
pub mod gradcheck;
pub mod lstm;
pub mod params;
pub mod serialize;
pub mod tape;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use lstm::{lstm_step, LstmParams, LstmShape, LstmState};
pub use params::{Init, ParamId, ParamMatrix, ParamSpec, ParameterStore};
pub use tape::{sigmoid, softmax, Tape, Var};

/// `W x (+ b)` recorded on the tape.
pub fn dense(
    tape: &mut Tape,
    store: &ParameterStore,
    weight: ParamId,
    x: Var,
    bias: Option<ParamId>,
) -> Var {
    let w = tape.param(store, weight);
    let wx = tape.matvec(w, x);
    match bias {
        Some(b) => {
            let b = tape.param(store, b);
            tape.add(wx, b)
        }
        None => wx,
    }
}
