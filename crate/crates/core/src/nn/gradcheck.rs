use crate::error::Result;
use crate::nn::params::{ParamId, ParameterStore};
use crate::nn::tape::{Tape, Var};

/// Denominator floor for the relative error, so entries whose true gradient
/// is numerically zero are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// `(parameter, entry, analytic, numeric)` at the worst entry.
    pub worst: Option<(String, usize, f64, f64)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares tape gradients of `loss` against central differences with step `h`
/// for every parameter entry.
pub fn finite_diff_check<F>(store: &ParameterStore, h: f64, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&ParameterStore, &mut Tape) -> Result<Var>,
{
    let mut work = store.clone();
    work.zero_grad();
    let mut tape = Tape::new();
    let l = loss(&work, &mut tape)?;
    tape.backward(l, &mut work);
    let analytic: Vec<Vec<f64>> = work.iter().map(|p| p.grad.clone()).collect();

    let eval = |s: &ParameterStore| -> Result<f64> {
        let mut t = Tape::new();
        let l = loss(s, &mut t)?;
        Ok(t.scalar(l))
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst: None,
    };
    for k in 0..work.len() {
        let id = ParamId(k);
        for j in 0..work.get(id).len() {
            let orig = work.get(id).values[j];
            work.get_mut(id).values[j] = orig + h;
            let plus = eval(&work)?;
            work.get_mut(id).values[j] = orig - h;
            let minus = eval(&work)?;
            work.get_mut(id).values[j] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[k][j];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((work.get(id).name.clone(), j, a, numeric));
            }
        }
    }
    Ok(report)
}
