use serde::{Deserialize, Serialize};

use super::{AgentError, AgentModel, Params};

/// Scalar Adam settings plus the step counter. Moments live beside them in
/// [`OptimizerState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub settings: AdamSettings,
    pub m: Params,
    pub v: Params,
}

impl OptimizerState {
    /// Fresh moments for `model`; learning rate 0.1 and decay 0.8 by default.
    pub fn new(model: &AgentModel, learning_rate: f64, lr_decay: f64) -> Self {
        Self {
            settings: AdamSettings {
                learning_rate,
                lr_decay,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                step: 0,
            },
            m: model.params.zeros_like(),
            v: model.params.zeros_like(),
        }
    }

    pub fn with_defaults(model: &AgentModel) -> Self {
        Self::new(model, 0.1, 0.8)
    }

    pub fn learning_rate(&self) -> f64 {
        self.settings.learning_rate
    }

    /// Multiplies the learning rate by the decay factor.
    pub fn decay_learning_rate(&mut self) {
        self.settings.learning_rate *= self.settings.lr_decay;
    }
}

/// One bias-corrected Adam update. Parameters and moments are rounded to
/// `f32` afterwards.
pub fn adam_step(model: &mut AgentModel, grads: &Params, opt: &mut OptimizerState) -> Result<(), AgentError> {
    if !model.params.same_shapes(grads) || !model.params.same_shapes(&opt.m) || !model.params.same_shapes(&opt.v) {
        return Err(AgentError::ShapeMismatch("gradient or moment layout differs from the model".into()));
    }
    let s = &mut opt.settings;
    s.step += 1;
    let t = s.step as i32;
    let bc1 = 1.0 - s.beta1.powi(t);
    let bc2 = 1.0 - s.beta2.powi(t);
    let (b1, b2, lr, eps) = (s.beta1, s.beta2, s.learning_rate, s.eps);

    let params = model.params.tensors_mut();
    let ms = opt.m.tensors_mut();
    let vs = opt.v.tensors_mut();
    for (((p, g), m), v) in params.into_iter().zip(grads.tensors()).zip(ms).zip(vs) {
        for i in 0..p.data.len() {
            let gi = g.data[i];
            m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
            v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
            let m_hat = m.data[i] / bc1;
            let v_hat = v.data[i] / bc2;
            p.data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        p.snap_to_f32();
        m.snap_to_f32();
        v.snap_to_f32();
    }
    if !model.params.is_finite() {
        return Err(AgentError::NonFinite("parameters after update"));
    }
    Ok(())
}
