use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam moments for a list of flat parameter arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    pub fn new(sizes: &[usize], lr: f64) -> Self {
        OptimizerState {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut OptimizerState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::shape(format!(
                "parameter {i}: {} values, {} gradients, {} moments",
                p.len(),
                g.len(),
                state.m[i].len()
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..p.len() {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            let mhat = m[j] / c1;
            let vhat = v[j] / c2;
            p[j] -= state.lr * mhat / (vhat.sqrt() + state.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut w = vec![0.5];
        let mut st = OptimizerState::new(&[1], 1e-3);
        adam_step(&mut [&mut w], &[&[1.0]], &mut st).unwrap();
        assert!((w[0] - (0.5 - 1e-3)).abs() < 1e-10);
    }

    #[test]
    fn zero_grad_decays_moments() {
        let mut w = vec![0.5];
        let mut st = OptimizerState::new(&[1], 1e-3);
        adam_step(&mut [&mut w], &[&[1.0]], &mut st).unwrap();
        let (m, v, before) = (st.m[0][0], st.v[0][0], w[0]);
        let mut st0 = OptimizerState::new(&[1], 1e-3);
        let mut w0 = vec![0.5];
        adam_step(&mut [&mut w0], &[&[0.0]], &mut st0).unwrap();
        assert_eq!(w0[0], 0.5);
        adam_step(&mut [&mut w], &[&[0.0]], &mut st).unwrap();
        assert!((st.m[0][0] - 0.9 * m).abs() < 1e-15);
        assert!((st.v[0][0] - 0.999 * v).abs() < 1e-15);
        assert!(w[0] < before);
    }

    fn quadratic(lr: f64) -> f64 {
        let mut w = vec![1.0];
        let mut st = OptimizerState::new(&[1], lr);
        for _ in 0..100 {
            let g = [2.0 * w[0]];
            adam_step(&mut [&mut w], &[&g], &mut st).unwrap();
        }
        w[0]
    }

    #[test]
    fn quadratic_descent() {
        // values from a separate numpy run of the same recurrence
        assert!((quadratic(1e-2) - 0.224_446_045_231_878_8).abs() < 1e-12);
        assert!((quadratic(1e-3) - 0.901_743_598_078_609).abs() < 1e-12);
        assert!(quadratic(1e-2).abs() < 0.5);
    }

    #[test]
    fn shape_mismatch() {
        let mut w = vec![0.0; 2];
        let mut st = OptimizerState::new(&[2], 1e-3);
        assert!(adam_step(&mut [&mut w], &[&[1.0]], &mut st).is_err());
    }
}
