//! A reference transformer encoder written with explicit loops.
//!
//! Mirrors the production layer layout (post-norm residual blocks, learned
//! positions, additive pad masking, tanh GELU) but shares no code with it,
//! so agreement between the two is meaningful evidence.

use std::collections::BTreeMap;

pub type Array = ([usize; 2], Vec<f64>);

/// Named parameter arrays, keyed like the production parameter store.
pub type Params = BTreeMap<String, Array>;

#[derive(Debug, Clone)]
pub struct Config {
    pub d_model: usize,
    pub num_heads: usize,
    pub num_layers: usize,
    pub snippet_len: usize,
}

const LN_EPS: f64 = 1e-5;
const MASK_VALUE: f64 = -1e30;

fn get<'a>(params: &'a Params, name: &str) -> &'a Array {
    params.get(name).unwrap_or_else(|| panic!("missing param {name}"))
}

fn matmul(a: &[f64], ar: usize, ac: usize, b: &[f64], bc: usize) -> Vec<f64> {
    let mut out = vec![0.0; ar * bc];
    for i in 0..ar {
        for j in 0..bc {
            let mut acc = 0.0;
            for k in 0..ac {
                acc += a[i * ac + k] * b[k * bc + j];
            }
            out[i * bc + j] = acc;
        }
    }
    out
}

fn add_bias(x: &mut [f64], cols: usize, bias: &[f64]) {
    for row in x.chunks_mut(cols) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn layer_norm(x: &[f64], cols: usize, gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (orow, row) in out.chunks_mut(cols).zip(x.chunks(cols)) {
        let mean = row.iter().sum::<f64>() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for j in 0..cols {
            orow[j] = (row[j] - mean) * inv * gain[j] + bias[j];
        }
    }
    out
}

fn gelu(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let u = c * (x + 0.044715 * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

fn softmax(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Encode one snippet of `token_ids` (length `snippet_len`, last `pad_count`
/// positions padding) and return the final hidden rows.
pub fn forward(params: &Params, cfg: &Config, token_ids: &[usize], pad_count: usize) -> Vec<Vec<f64>> {
    let d = cfg.d_model;
    let l = cfg.snippet_len;
    assert_eq!(token_ids.len(), l);
    let heads = cfg.num_heads;
    let dh = d / heads;

    let (tok_shape, tok) = get(params, "embed.tok");
    let (_, pos) = get(params, "embed.pos");
    let mut x = vec![0.0; l * d];
    for (i, &id) in token_ids.iter().enumerate() {
        assert!(id < tok_shape[0]);
        for j in 0..d {
            x[i * d + j] = tok[id * d + j] + pos[i * d + j];
        }
    }

    let real = l - pad_count;
    for layer in 0..cfg.num_layers {
        let p = |suffix: &str| get(params, &format!("layer{layer}.{suffix}"));

        let (_, wq) = p("attn.wq");
        let (_, wk) = p("attn.wk");
        let (_, wv) = p("attn.wv");
        let (_, wo) = p("attn.wo");
        let mut q = matmul(&x, l, d, wq, d);
        add_bias(&mut q, d, &p("attn.bq").1);
        let mut k = matmul(&x, l, d, wk, d);
        add_bias(&mut k, d, &p("attn.bk").1);
        let mut v = matmul(&x, l, d, wv, d);
        add_bias(&mut v, d, &p("attn.bv").1);

        let mut cat = vec![0.0; l * d];
        for h in 0..heads {
            let off = h * dh;
            for i in 0..l {
                let mut scores = vec![0.0; l];
                for j in 0..l {
                    let mut acc = 0.0;
                    for t in 0..dh {
                        acc += q[i * d + off + t] * k[j * d + off + t];
                    }
                    scores[j] = acc / (dh as f64).sqrt();
                    if j >= real {
                        scores[j] += MASK_VALUE;
                    }
                }
                softmax(&mut scores);
                for t in 0..dh {
                    let mut acc = 0.0;
                    for j in 0..l {
                        acc += scores[j] * v[j * d + off + t];
                    }
                    cat[i * d + off + t] = acc;
                }
            }
        }
        let mut attn = matmul(&cat, l, d, wo, d);
        add_bias(&mut attn, d, &p("attn.bo").1);

        let mut res: Vec<f64> = x.iter().zip(&attn).map(|(a, b)| a + b).collect();
        x = layer_norm(&res, d, &p("ln1.gain").1, &p("ln1.bias").1);

        let (w1_shape, w1) = p("ffn.w1");
        let hidden_dim = w1_shape[1];
        let mut f = matmul(&x, l, d, w1, hidden_dim);
        add_bias(&mut f, hidden_dim, &p("ffn.b1").1);
        for val in f.iter_mut() {
            *val = gelu(*val);
        }
        let mut f2 = matmul(&f, l, hidden_dim, &p("ffn.w2").1, d);
        add_bias(&mut f2, d, &p("ffn.b2").1);

        res = x.iter().zip(&f2).map(|(a, b)| a + b).collect();
        x = layer_norm(&res, d, &p("ln2.gain").1, &p("ln2.bias").1);
    }

    x.chunks(d).map(<[f64]>::to_vec).collect()
}
