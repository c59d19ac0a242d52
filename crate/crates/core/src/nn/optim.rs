use super::network::ParameterSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// `θ − lr·g`, elementwise.
pub fn sgd_step(params: &ParameterSet, grads: &ParameterSet, lr: f64) -> Result<ParameterSet> {
    params.check_same_layout(grads)?;
    let tensors = params.tensors().iter().zip(grads.tensors()).map(|(p, g)| p.zip(g, |a, b| a - lr * b)).collect();
    ParameterSet::new(params.names().to_vec(), tensors)
}

/// Adam moments for a parameter set (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &ParameterSet) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros.clone(), v: zeros }
    }
}

/// One bias-corrected Adam update of the tensors whose index `update` accepts.
pub fn adam_step_masked(
    state: &mut AdamState,
    params: &ParameterSet,
    grads: &ParameterSet,
    lr: f64,
    update: impl Fn(usize) -> bool,
) -> Result<ParameterSet> {
    params.check_same_layout(grads)?;
    if state.m.len() != params.len() {
        return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let mut out = params.clone();
    for i in 0..params.len() {
        if !update(i) {
            continue;
        }
        let g = grads.tensors()[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let p = out.tensors_mut()[i].data_mut();
        for j in 0..g.len() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let mh = m[j] / c1;
            let vh = v[j] / c2;
            p[j] -= lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(out)
}

pub fn adam_step(state: &mut AdamState, params: &ParameterSet, grads: &ParameterSet, lr: f64) -> Result<ParameterSet> {
    adam_step_masked(state, params, grads, lr, |_| true)
}
