//! Encoder forward pass and its exact reverse-mode gradient.
//!
//! Only the `valid_len` leading rows of a feature matrix take part: padding
//! rows are masked out of attention and pooling, which is equivalent to
//! dropping them.

#![allow(clippy::needless_range_loop)]

use super::encoding::positional_encoding;
use super::tensor::{gelu, gelu_grad, softmax_in_place};
use super::{AgentModel, FeatureMatrix, LayerParams, Mat, Observation, Params, Tensor};

const NORM_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Action probabilities, one per coupling edge.
    pub policy: Vec<f64>,
    pub value: f64,
    pub logits: Vec<f64>,
}

pub fn forward(model: &AgentModel, features: &FeatureMatrix) -> Prediction {
    let n = features.valid_len;
    let w = features.rows.cols;
    let input = Mat::from_vec(n, w, features.rows.data[..n * w].to_vec());
    forward_cached(model, &input).0
}

struct NormCache {
    normalized: Mat,
    inv_std: Vec<f64>,
}

struct LayerCache {
    h_in: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    /// Attention probabilities per head, `n x n`.
    attn: Vec<Mat>,
    heads_out: Mat,
    norm1: NormCache,
    h1: Mat,
    pre_act: Mat,
    act: Mat,
    norm2: NormCache,
}

pub(crate) struct ForwardCache {
    input: Mat,
    layers: Vec<LayerCache>,
    pooled: Vec<f64>,
    rows: usize,
}

fn layer_norm(x: &Mat, gain: &Tensor, bias: &Tensor) -> (Mat, NormCache) {
    let d = x.cols;
    let mut normalized = Mat::zeros(x.rows, d);
    let mut out = Mat::zeros(x.rows, d);
    let mut inv_std = Vec::with_capacity(x.rows);
    for i in 0..x.rows {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let s = 1.0 / (var + NORM_EPS).sqrt();
        inv_std.push(s);
        for j in 0..d {
            let xh = (row[j] - mean) * s;
            normalized.data[i * d + j] = xh;
            out.data[i * d + j] = gain.data[j] * xh + bias.data[j];
        }
    }
    (out, NormCache { normalized, inv_std })
}

fn layer_norm_backward(cache: &NormCache, gain: &Tensor, dy: &Mat, dgain: &mut Tensor, dbias: &mut Tensor) -> Mat {
    let d = dy.cols;
    let mut dx = Mat::zeros(dy.rows, d);
    let mut dxh = vec![0.0; d];
    for i in 0..dy.rows {
        let xh = cache.normalized.row(i);
        let g = dy.row(i);
        for j in 0..d {
            dgain.data[j] += g[j] * xh[j];
            dbias.data[j] += g[j];
            dxh[j] = g[j] * gain.data[j];
        }
        let mean_dxh = dxh.iter().sum::<f64>() / d as f64;
        let mean_dxh_xh = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        let out = dx.row_mut(i);
        for j in 0..d {
            out[j] = cache.inv_std[i] * (dxh[j] - mean_dxh - xh[j] * mean_dxh_xh);
        }
    }
    dx
}

fn attention(layer: &LayerParams, h: &Mat, heads: usize) -> (Mat, Mat, Mat, Vec<Mat>, Mat) {
    let n = h.rows;
    let d = h.cols;
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = h.affine(&layer.wq, &layer.bq);
    let k = h.affine(&layer.wk, &layer.bk);
    let v = h.affine(&layer.wv, &layer.bv);
    let mut out = Mat::zeros(n, d);
    let mut probs = Vec::with_capacity(heads);
    for head in 0..heads {
        let c0 = head * dh;
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            let qi = &q.row(i)[c0..c0 + dh];
            let ai = a.row_mut(i);
            for j in 0..n {
                let kj = &k.row(j)[c0..c0 + dh];
                ai[j] = scale * qi.iter().zip(kj).map(|(x, y)| x * y).sum::<f64>();
            }
            softmax_in_place(ai);
        }
        for i in 0..n {
            let ai = a.row(i);
            let oi = &mut out.data[i * d + c0..i * d + c0 + dh];
            for j in 0..n {
                let vj = &v.row(j)[c0..c0 + dh];
                for t in 0..dh {
                    oi[t] += ai[j] * vj[t];
                }
            }
        }
        probs.push(a);
    }
    (q, k, v, probs, out)
}

pub(crate) fn forward_cached(model: &AgentModel, input: &Mat) -> (Prediction, ForwardCache) {
    let cfg = &model.config;
    let p = &model.params;
    let n = input.rows;
    let d = cfg.model_dim;

    let mut h = input.affine(&p.input_w, &p.input_b);
    h.add_assign(&positional_encoding(n, d));

    let mut layers = Vec::with_capacity(p.layers.len());
    for layer in &p.layers {
        let (q, k, v, attn, heads_out) = attention(layer, &h, cfg.num_heads);
        let mut r1 = heads_out.affine(&layer.wo, &layer.bo);
        r1.add_assign(&h);
        let (h1, norm1) = layer_norm(&r1, &layer.norm1_gain, &layer.norm1_bias);
        let pre_act = h1.affine(&layer.ffn_w1, &layer.ffn_b1);
        let act = Mat::from_vec(pre_act.rows, pre_act.cols, pre_act.data.iter().map(|&x| gelu(x)).collect());
        let mut r2 = act.affine(&layer.ffn_w2, &layer.ffn_b2);
        r2.add_assign(&h1);
        let (h2, norm2) = layer_norm(&r2, &layer.norm2_gain, &layer.norm2_bias);
        layers.push(LayerCache {
            h_in: std::mem::replace(&mut h, h2),
            q,
            k,
            v,
            attn,
            heads_out,
            norm1,
            h1,
            pre_act,
            act,
            norm2,
        });
    }

    let mut pooled = vec![0.0; d];
    if n > 0 {
        for i in 0..n {
            for (acc, &x) in pooled.iter_mut().zip(h.row(i)) {
                *acc += x;
            }
        }
        pooled.iter_mut().for_each(|x| *x /= n as f64);
    }
    let z = Mat::from_vec(1, d, pooled.clone());
    let logits = z.affine(&p.policy_w, &p.policy_b).data;
    let value = z.affine(&p.value_w, &p.value_b).data[0];
    let mut policy = logits.clone();
    softmax_in_place(&mut policy);

    (
        Prediction { policy, value, logits },
        ForwardCache {
            input: input.clone(),
            layers,
            pooled,
            rows: n,
        },
    )
}

/// Accumulates into `grads` the gradient of a scalar objective whose partial
/// derivatives with respect to the logits and the value are given.
pub(crate) fn backward(
    model: &AgentModel,
    observation: &Observation,
    cache: &ForwardCache,
    dlogits: &[f64],
    dvalue: f64,
    grads: &mut Params,
) {
    let cfg = &model.config;
    let p = &model.params;
    let d = cfg.model_dim;
    let n = cache.rows;
    let heads = cfg.num_heads;
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let z = Mat::from_vec(1, d, cache.pooled.clone());
    let dz_policy = z.affine_backward(
        &p.policy_w,
        &Mat::from_vec(1, dlogits.len(), dlogits.to_vec()),
        &mut grads.policy_w,
        &mut grads.policy_b,
    );
    let dz_value = z.affine_backward(&p.value_w, &Mat::from_vec(1, 1, vec![dvalue]), &mut grads.value_w, &mut grads.value_b);
    if n == 0 {
        return;
    }
    let mut dh_out = Mat::zeros(n, d);
    for i in 0..n {
        let row = dh_out.row_mut(i);
        for j in 0..d {
            row[j] = (dz_policy.data[j] + dz_value.data[j]) / n as f64;
        }
    }

    for (layer, (lc, lg)) in p.layers.iter().zip(cache.layers.iter().zip(grads.layers.iter_mut())).rev() {
        // Feed-forward block.
        let dr2 = layer_norm_backward(&lc.norm2, &layer.norm2_gain, &dh_out, &mut lg.norm2_gain, &mut lg.norm2_bias);
        let mut dact = lc.act.affine_backward(&layer.ffn_w2, &dr2, &mut lg.ffn_w2, &mut lg.ffn_b2);
        for (g, &x) in dact.data.iter_mut().zip(&lc.pre_act.data) {
            *g *= gelu_grad(x);
        }
        let mut dh1 = lc.h1.affine_backward(&layer.ffn_w1, &dact, &mut lg.ffn_w1, &mut lg.ffn_b1);
        dh1.add_assign(&dr2);

        // Attention block.
        let dr1 = layer_norm_backward(&lc.norm1, &layer.norm1_gain, &dh1, &mut lg.norm1_gain, &mut lg.norm1_bias);
        let dheads = lc.heads_out.affine_backward(&layer.wo, &dr1, &mut lg.wo, &mut lg.bo);
        let mut dq = Mat::zeros(n, d);
        let mut dk = Mat::zeros(n, d);
        let mut dv = Mat::zeros(n, d);
        let mut da = vec![0.0; n];
        for head in 0..heads {
            let c0 = head * dh;
            let a = &lc.attn[head];
            for i in 0..n {
                let doi = &dheads.row(i)[c0..c0 + dh];
                let ai = a.row(i);
                for j in 0..n {
                    let vj = &lc.v.row(j)[c0..c0 + dh];
                    da[j] = doi.iter().zip(vj).map(|(x, y)| x * y).sum();
                    let dvj = &mut dv.data[j * d + c0..j * d + c0 + dh];
                    for t in 0..dh {
                        dvj[t] += ai[j] * doi[t];
                    }
                }
                let dot: f64 = ai.iter().zip(&da).map(|(x, y)| x * y).sum();
                let qi = &lc.q.row(i)[c0..c0 + dh];
                for j in 0..n {
                    let ds = ai[j] * (da[j] - dot) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    let kj = &lc.k.row(j)[c0..c0 + dh];
                    for t in 0..dh {
                        dq.data[i * d + c0 + t] += ds * kj[t];
                        dk.data[j * d + c0 + t] += ds * qi[t];
                    }
                }
            }
        }
        let mut dh_in = dr1;
        dh_in.add_assign(&lc.h_in.affine_backward(&layer.wq, &dq, &mut lg.wq, &mut lg.bq));
        dh_in.add_assign(&lc.h_in.affine_backward(&layer.wk, &dk, &mut lg.wk, &mut lg.bk));
        dh_in.add_assign(&lc.h_in.affine_backward(&layer.wv, &dv, &mut lg.wv, &mut lg.bv));
        dh_out = dh_in;
    }

    // Positional encoding is constant; through the input projection to the
    // embedding table.
    let dfeat = cache.input.affine_backward(&p.input_w, &dh_out, &mut grads.input_w, &mut grads.input_b);
    let e = cfg.embedding_dim;
    for (i, &[pa, pb]) in observation.pairs.iter().enumerate().take(n) {
        let g = &dfeat.row(i)[..e];
        for k in 0..e {
            grads.embedding.data[pa * e + k] += 0.5 * g[k];
            grads.embedding.data[pb * e + k] += 0.5 * g[k];
        }
    }
}
