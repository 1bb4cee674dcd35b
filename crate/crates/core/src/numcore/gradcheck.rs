use serde::Serialize;

use super::matrix::Matrix;
use super::param::ParamStore;
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: (usize, usize),
    pub entries_checked: usize,
}

/// `|a − n| / max(1, |a|, |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compares analytic gradients against central finite differences.
///
/// `objective` maps parameter values to `(loss, gradients)` with one gradient
/// matrix per parameter, in store order. Every entry of every parameter is
/// perturbed by `±step`.
pub fn grad_check<F>(params: &ParamStore, step: f64, mut objective: F) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(f64, Vec<Matrix>)>,
{
    let (loss, analytic) = objective(params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss = {loss}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Config(format!(
            "objective returned {} gradients for {} parameters",
            analytic.len(),
            params.len()
        )));
    }

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: (0, 0),
        entries_checked: 0,
    };
    for id in params.ids() {
        let (rows, cols) = params.get(id).shape();
        analytic[id.0].same_shape(params.value(id), "grad_check")?;
        for r in 0..rows {
            for c in 0..cols {
                let original = params.value(id)[(r, c)];
                probe.get_mut(id).value[(r, c)] = original + step;
                let (plus, _) = objective(&probe)?;
                probe.get_mut(id).value[(r, c)] = original - step;
                let (minus, _) = objective(&probe)?;
                probe.get_mut(id).value[(r, c)] = original;
                if !plus.is_finite() || !minus.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss while perturbing {}[{r},{c}]",
                        params.name(id)
                    )));
                }
                let numeric = (plus - minus) / (2.0 * step);
                let err = relative_error(analytic[id.0][(r, c)], numeric);
                report.entries_checked += 1;
                if err > report.max_rel_err || report.worst_param.is_empty() {
                    report.max_rel_err = err;
                    report.worst_param = params.name(id).to_string();
                    report.worst_index = (r, c);
                }
            }
        }
    }
    Ok(report)
}
