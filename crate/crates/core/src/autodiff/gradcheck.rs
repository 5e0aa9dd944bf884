//! Central finite-difference gradient checking.
//!
//! Only forward values are used on the numerical side, so the check stays
//! independent of every backward rule it audits.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Denominator floor for the relative error. Central differences on an O(1)
/// loss carry roughly `eps * |loss| / h` of rounding noise (about 2e-11 for
/// h = 1e-5), so gradients smaller than this are compared on an absolute
/// scale instead.
pub const RELATIVE_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// (parameter, element, analytic, numeric) of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn evaluate<F>(params: &[Tensor], f: &F, grad: bool) -> Result<(Tape, Vec<Var>, Var)>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params
        .iter()
        .map(|p| tape.leaf(p.clone().requires_grad(grad)))
        .collect();
    let loss = f(&mut tape, &vars)?;
    Ok((tape, vars, loss))
}

fn loss_value(tape: &Tape, loss: Var) -> Result<f64> {
    tape.value(loss)
        .item()
        .ok_or_else(|| Error::usage("gradient check needs a scalar loss"))
}

/// Compares tape gradients of `f` at `params` against central differences.
pub fn check_gradients<F>(params: &[Tensor], step: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let (mut tape, vars, loss) = evaluate(params, &f, true)?;
    tape.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .map(|v| tape.grad(*v).map(<[f64]>::to_vec).unwrap_or_default())
        .collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        checked: 0,
        worst: None,
    };
    let mut probe: Vec<Tensor> = params.to_vec();
    for (pi, param) in params.iter().enumerate() {
        for ei in 0..param.numel() {
            let base = param.data()[ei];
            let mut eval_at = |x: f64| -> Result<f64> {
                let mut data = param.data().to_vec();
                data[ei] = x;
                probe[pi] = Tensor::new(param.shape().to_vec(), data)?;
                let (tape, _, loss) = evaluate(&probe, &f, false)?;
                loss_value(&tape, loss)
            };
            let plus = eval_at(base + step)?;
            let minus = eval_at(base - step)?;
            probe[pi] = param.clone();
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[pi][ei];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst = Some((pi, ei, a, numeric));
            }
        }
    }
    Ok(report)
}
