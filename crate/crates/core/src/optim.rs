use crate::param::ParamStore;
use crate::tensor::Element;

/// Adam hyper-parameters plus the number of updates applied so far.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            ..AdamHyper::default()
        }
    }
}

/// One bias-corrected Adam update over every parameter, then zeroes the grads.
///
/// Moments are kept in the parameter's own precision; the bias-correction
/// factors are computed in `f64`.
pub fn adam_step<T: Element>(params: &mut ParamStore<T>, hyper: &mut AdamHyper) {
    hyper.step_count += 1;
    let t = hyper.step_count as i32;
    let b1 = T::from_f64_lossy(hyper.beta1);
    let b2 = T::from_f64_lossy(hyper.beta2);
    let one_m_b1 = T::from_f64_lossy(1.0 - hyper.beta1);
    let one_m_b2 = T::from_f64_lossy(1.0 - hyper.beta2);
    let bc1 = T::from_f64_lossy(1.0 - hyper.beta1.powi(t));
    let bc2 = T::from_f64_lossy(1.0 - hyper.beta2.powi(t));
    let lr = T::from_f64_lossy(hyper.lr);
    let eps = T::from_f64_lossy(hyper.eps);

    for p in params.iter_mut() {
        let value = p.value.data_mut();
        let grad = p.grad.data();
        let m = p.adam_m.data_mut();
        let v = p.adam_v.data_mut();
        for i in 0..value.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + one_m_b1 * g;
            v[i] = b2 * v[i] + one_m_b2 * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    params.zero_grads();
}
