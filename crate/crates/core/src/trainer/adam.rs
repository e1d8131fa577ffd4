use crate::numerics::{GradientMap, NumericsError, ParamStore, Tensor};
use crate::scalar::Scalar;

/// First and second moment estimates for every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub first: Vec<Tensor<T>>,
    pub second: Vec<Tensor<T>>,
    pub step: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    /// Zero moments with β1 = β2 = 0.9 and ε = 1e-12.
    pub fn new(params: &ParamStore<T>) -> Self {
        Self::with_betas(params, T::of(0.9), T::of(0.9), T::of(1e-12))
    }

    pub fn with_betas(params: &ParamStore<T>, beta1: T, beta2: T, epsilon: T) -> Self {
        let zeros = || -> Vec<Tensor<T>> {
            params
                .iter()
                .map(|(_, _, t)| Tensor::zeros(t.shape().to_vec()))
                .collect()
        };
        AdamState {
            first: zeros(),
            second: zeros(),
            step: 0,
            beta1,
            beta2,
            epsilon,
        }
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step<T: Scalar>(
    params: &mut ParamStore<T>,
    grads: &GradientMap<T>,
    state: &mut AdamState<T>,
    lr: T,
) -> Result<(), NumericsError> {
    if grads.len() != params.len() || state.first.len() != params.len() {
        return Err(NumericsError::shapes(
            "adam_step",
            &[&[params.len()], &[grads.len()], &[state.first.len()]],
        ));
    }
    for (id, g) in grads.iter() {
        let p = params.get(id);
        if p.shape() != g.shape() || state.first[id.index()].shape() != g.shape() {
            return Err(NumericsError::shapes("adam_step", &[p.shape(), g.shape()]));
        }
    }

    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let t = state.step as i32;
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);

    for (id, g) in grads.iter() {
        let m = state.first[id.index()].data_mut();
        let v = state.second[id.index()].data_mut();
        let p = params.get_mut(id).data_mut();
        for k in 0..p.len() {
            let gk = g.data()[k];
            m[k] = b1 * m[k] + (T::one() - b1) * gk;
            v[k] = b2 * v[k] + (T::one() - b2) * gk * gk;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
