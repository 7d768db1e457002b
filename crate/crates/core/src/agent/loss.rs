use super::network::{backward, forward_cached};
use super::{AgentError, AgentModel, FeatureMatrix, Mat, Params};

/// Lower clamp on the target-action probability inside the log.
pub const LOG_CLAMP: f64 = 1e-12;

/// Cross-entropy against the search's chosen action and squared error against
/// its value estimate.
pub fn loss_terms(policy: &[f64], value: f64, mcts_action: usize, mcts_value: f64) -> (f64, f64) {
    let l1 = -policy[mcts_action].max(LOG_CLAMP).ln();
    let l2 = (mcts_value - value) * (mcts_value - value);
    (l1, l2)
}

/// `(l1 + alpha * l2) / |E|`, with `|E| = policy.len()`.
pub fn loss(policy: &[f64], value: f64, mcts_action: usize, mcts_value: f64, alpha: f64) -> f64 {
    let (l1, l2) = loss_terms(policy, value, mcts_action, mcts_value);
    (l1 + alpha * l2) / policy.len() as f64
}

/// One training example: an encoded state and its search targets.
#[derive(Clone, Debug)]
pub struct Sample {
    pub features: FeatureMatrix,
    pub mcts_action: usize,
    pub mcts_value: f64,
}

fn input_rows(model: &AgentModel, sample: &Sample) -> Mat {
    // Re-embed from the observation so the embedding table is part of the
    // differentiated function.
    let f = FeatureMatrix::embed(&sample.features.observation, model);
    let n = f.valid_len;
    Mat::from_vec(n, f.rows.cols, f.rows.data[..n * f.rows.cols].to_vec())
}

/// Mean per-sample loss over the batch.
pub fn batch_loss(model: &AgentModel, batch: &[Sample], alpha: f64) -> f64 {
    let total: f64 = batch
        .iter()
        .map(|s| {
            let (pred, _) = forward_cached(model, &input_rows(model, s));
            loss(&pred.policy, pred.value, s.mcts_action, s.mcts_value, alpha)
        })
        .sum();
    total / batch.len() as f64
}

/// Exact gradient of [`batch_loss`] with respect to every parameter, plus the
/// loss itself.
pub fn gradients(model: &AgentModel, batch: &[Sample], alpha: f64) -> Result<(Params, f64), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::ShapeMismatch("empty batch".into()));
    }
    let mut grads = model.params.zeros_like();
    let actions = model.config.num_actions as f64;
    let weight = 1.0 / (actions * batch.len() as f64);
    let mut total = 0.0;
    for sample in batch {
        let (pred, cache) = forward_cached(model, &input_rows(model, sample));
        total += loss(&pred.policy, pred.value, sample.mcts_action, sample.mcts_value, alpha);
        // d l1 / d logits = softmax - onehot while the clamp is inactive.
        let mut dlogits = vec![0.0; pred.policy.len()];
        if pred.policy[sample.mcts_action] >= LOG_CLAMP {
            for (g, &p) in dlogits.iter_mut().zip(&pred.policy) {
                *g = p * weight;
            }
            dlogits[sample.mcts_action] -= weight;
        }
        let dvalue = alpha * 2.0 * (pred.value - sample.mcts_value) * weight;
        backward(model, &sample.features.observation, &cache, &dlogits, dvalue, &mut grads);
    }
    let mean = total / batch.len() as f64;
    if !mean.is_finite() {
        return Err(AgentError::NonFinite("loss"));
    }
    if !grads.is_finite() {
        return Err(AgentError::NonFinite("gradient"));
    }
    Ok((grads, mean))
}

/// Compares [`gradients`] with central differences of [`batch_loss`], one
/// parameter at a time. Returns, per named tensor,
/// `max|analytic - numeric| / max(max|numeric|, max|analytic|, 1e-6)`. The
/// floor stops blocks with an exactly zero gradient, such as attention key
/// biases, from measuring round-off alone.
pub fn gradient_check(
    model: &AgentModel,
    batch: &[Sample],
    alpha: f64,
    h: f64,
) -> Result<Vec<(String, f64)>, AgentError> {
    let (analytic, _) = gradients(model, batch, alpha)?;
    let names = model.params.names();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(names.len());
    for (block, name) in names.into_iter().enumerate() {
        let len = analytic.tensors()[block].len();
        let mut max_diff: f64 = 0.0;
        let mut scale: f64 = 1e-6;
        for i in 0..len {
            let orig = probe.params.tensors()[block].data[i];
            probe.params.tensors_mut()[block].data[i] = orig + h;
            let plus = batch_loss(&probe, batch, alpha);
            probe.params.tensors_mut()[block].data[i] = orig - h;
            let minus = batch_loss(&probe, batch, alpha);
            probe.params.tensors_mut()[block].data[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic.tensors()[block].data[i];
            max_diff = max_diff.max((a - numeric).abs());
            scale = scale.max(numeric.abs()).max(a.abs());
        }
        out.push((name, max_diff / scale));
    }
    Ok(out)
}
