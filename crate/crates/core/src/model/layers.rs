use crate::tensor::{Graph, Tensor, TensorError, Var};

use super::{MaskOverride, Model, ModelError};

/// Graph handles for every parameter of a [`Model`], bound once per graph.
#[derive(Debug, Clone)]
pub struct Bound {
    pub src_embed: Var,
    pub tgt_embed: Var,
    pub output_bias: Var,
    pub enc_fwd: (Var, Var),
    pub enc_bwd: (Var, Var),
    pub dec: (Var, Var),
    pub att_query: Var,
    pub att_key: Var,
    pub att_v: Var,
    pub init_w: Var,
    pub init_b: Var,
    pub proj_w: Var,
    pub proj_b: Var,
    pub ctx: [Var; 4],
    pub mask_src: (Var, Var),
    pub mask_tgt: (Var, Var),
}

impl Bound {
    pub fn new(g: &mut Graph, model: &Model) -> Self {
        let v: Vec<Var> = model
            .params
            .tensors()
            .iter()
            .enumerate()
            .map(|(slot, t)| g.param(slot, t))
            .collect();
        Self {
            src_embed: v[0],
            tgt_embed: v[1],
            output_bias: v[2],
            enc_fwd: (v[3], v[4]),
            enc_bwd: (v[5], v[6]),
            dec: (v[7], v[8]),
            att_query: v[9],
            att_key: v[10],
            att_v: v[11],
            init_w: v[12],
            init_b: v[13],
            proj_w: v[14],
            proj_b: v[15],
            ctx: [v[16], v[17], v[18], v[19]],
            mask_src: (v[20], v[21]),
            mask_tgt: (v[22], v[23]),
        }
    }
}

/// Recurrent decoder state. `prev` is the token fed at the next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderState {
    pub hidden: Var,
    pub cell: Var,
    pub prev: usize,
}

/// Everything the decoder needs from the source side.
#[derive(Debug, Clone)]
pub struct EncodedSource {
    /// `T × 2H`, row t = [forward h_t; reverse h_t].
    pub annotations: Var,
    /// `T × A`, annotations projected by the attention key map.
    pub keys: Var,
    pub context: Option<Var>,
    pub src_mask: Option<Var>,
    pub tgt_mask: Option<Var>,
    pub initial_state: DecoderState,
    pub len: usize,
}

/// Embedding lookup: row `ids[t]` of `table` for each position. `None` for an
/// empty sequence.
pub fn embed(g: &mut Graph, table: Var, ids: &[usize]) -> Result<Option<Var>, TensorError> {
    if ids.is_empty() {
        return Ok(None);
    }
    g.gather(table, ids).map(Some)
}

/// Order-free sentence summary: mean over positions of
/// `tanh(x W1 + b1) W2 + b2`.
pub fn compute_context(g: &mut Graph, theta: &[Var; 4], embeddings: Var) -> Result<Var, TensorError> {
    let [w1, b1, w2, b2] = *theta;
    let h = g.matmul(embeddings, w1)?;
    let h = g.add(h, b1)?;
    let h = g.tanh(h);
    let o = g.matmul(h, w2)?;
    let o = g.add(o, b2)?;
    g.mean_rows(o)
}

/// `σ(W c + b)`.
pub fn contextual_mask(g: &mut Graph, context: Var, w: Var, b: Var) -> Result<Var, TensorError> {
    let a = g.matmul(w, context)?;
    let a = g.add(a, b)?;
    Ok(g.sigmoid(a))
}

/// One LSTM step on input `x` with state `(h, c)`; returns the new `(h, c)`.
pub fn lstm_step(
    g: &mut Graph,
    weight: Var,
    bias: Var,
    x: Var,
    h: Var,
    c: Var,
) -> Result<(Var, Var), TensorError> {
    let hidden = g.shape(h)[0];
    let xh = g.concat(&[x, h], 0)?;
    let pre = g.matmul(weight, xh)?;
    let pre = g.add(pre, bias)?;
    let i = g.slice(pre, 0, hidden)?;
    let f = g.slice(pre, hidden, hidden)?;
    let cand = g.slice(pre, 2 * hidden, hidden)?;
    let o = g.slice(pre, 3 * hidden, hidden)?;
    let i = g.sigmoid(i);
    let f = g.sigmoid(f);
    let cand = g.tanh(cand);
    let o = g.sigmoid(o);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_new = g.add(keep, write)?;
    let tc = g.tanh(c_new);
    let h_new = g.mul(o, tc)?;
    Ok((h_new, c_new))
}

/// Bidirectional encoder over a `T × E` embedding matrix, zero initial states.
pub fn encode(
    g: &mut Graph,
    fwd: (Var, Var),
    bwd: (Var, Var),
    embeddings: Var,
) -> Result<Var, TensorError> {
    let t_len = g.shape(embeddings)[0];
    let hidden = g.shape(fwd.1)[0] / 4;
    let zero = Tensor::zeros(&[hidden]);
    let rows: Vec<Var> = (0..t_len)
        .map(|t| g.row(embeddings, t))
        .collect::<Result<_, _>>()?;

    let mut fwd_out = Vec::with_capacity(t_len);
    let (mut h, mut c) = (g.input(&zero), g.input(&zero));
    for &x in &rows {
        (h, c) = lstm_step(g, fwd.0, fwd.1, x, h, c)?;
        fwd_out.push(h);
    }
    let mut bwd_out = vec![h; t_len];
    let (mut h, mut c) = (g.input(&zero), g.input(&zero));
    for t in (0..t_len).rev() {
        (h, c) = lstm_step(g, bwd.0, bwd.1, rows[t], h, c)?;
        bwd_out[t] = h;
    }
    let ann: Vec<Var> = fwd_out
        .iter()
        .zip(&bwd_out)
        .map(|(&f, &b)| g.concat(&[f, b], 0))
        .collect::<Result<_, _>>()?;
    g.stack(&ann)
}

/// Additive attention: `e_t = v · tanh(U z + K h_t)`, `α = softmax(e)`,
/// context `Σ α_t h_t`.
pub fn attend(
    g: &mut Graph,
    b: &Bound,
    z_prev: Var,
    enc: &EncodedSource,
) -> Result<(Var, Var), TensorError> {
    let q = g.matmul(b.att_query, z_prev)?;
    let s = g.add(enc.keys, q)?;
    let s = g.tanh(s);
    let e = g.matmul(s, b.att_v)?;
    let alpha = g.softmax(e)?;
    let ctx = g.matmul(alpha, enc.annotations)?;
    Ok((alpha, ctx))
}

/// Decoder LSTM update on `[y_prev; c_t']` followed by output logits
/// `E^y (P z + p) + c`.
pub fn decode_step(
    g: &mut Graph,
    b: &Bound,
    output_table: Var,
    state: &DecoderState,
    y_prev: Var,
    context: Var,
    next_prev: usize,
) -> Result<(DecoderState, Var), TensorError> {
    let input = g.concat(&[y_prev, context], 0)?;
    let (hidden, cell) = lstm_step(g, b.dec.0, b.dec.1, input, state.hidden, state.cell)?;
    let proj = g.matmul(b.proj_w, hidden)?;
    let proj = g.add(proj, b.proj_b)?;
    let logits = g.matmul(output_table, proj)?;
    let logits = g.add(logits, b.output_bias)?;
    Ok((
        DecoderState {
            hidden,
            cell,
            prev: next_prev,
        },
        logits,
    ))
}

pub(crate) fn encode_source(
    g: &mut Graph,
    b: &Bound,
    model: &Model,
    src: &[usize],
    masks: Option<&MaskOverride>,
) -> Result<EncodedSource, ModelError> {
    let cfg = &model.config;
    let x = embed(g, b.src_embed, src)?
        .ok_or_else(|| ModelError::Invalid("empty source sentence".into()))?;

    let (context, src_mask, tgt_mask) = match masks {
        Some(m) => {
            let mx = g.input(&Tensor::vector(m.source.clone()));
            let my = g.input(&Tensor::vector(m.target.clone()));
            (None, Some(mx), Some(my))
        }
        None if cfg.contextualize => {
            let c = compute_context(g, &b.ctx, x)?;
            let mx = contextual_mask(g, c, b.mask_src.0, b.mask_src.1)?;
            let my = contextual_mask(g, c, b.mask_tgt.0, b.mask_tgt.1)?;
            (Some(c), Some(mx), Some(my))
        }
        None => (None, None, None),
    };
    let x = match src_mask {
        Some(m) => g.mul(x, m)?,
        None => x,
    };
    let annotations = encode(g, b.enc_fwd, b.enc_bwd, x)?;
    let keys = g.matmul(annotations, b.att_key)?;
    let mean = g.mean_rows(annotations)?;
    let z0 = g.matmul(b.init_w, mean)?;
    let z0 = g.add(z0, b.init_b)?;
    let z0 = g.tanh(z0);
    let cell = g.input(&Tensor::zeros(&[cfg.dec_hidden]));
    Ok(EncodedSource {
        annotations,
        keys,
        context,
        src_mask,
        tgt_mask,
        initial_state: DecoderState {
            hidden: z0,
            cell,
            prev: cfg.bos,
        },
        len: src.len(),
    })
}

/// Output embedding table, gated by the target mask when configured.
fn output_table(g: &mut Graph, b: &Bound, model: &Model, enc: &EncodedSource) -> Result<Var, TensorError> {
    match (model.config.mask_output_embeddings, enc.tgt_mask) {
        (true, Some(m)) => g.mul(b.tgt_embed, m),
        _ => Ok(b.tgt_embed),
    }
}

/// Attend, feed the (masked) embedding of `prev`, and produce logits for the next token.
pub(crate) fn step(
    g: &mut Graph,
    b: &Bound,
    model: &Model,
    enc: &EncodedSource,
    state: &DecoderState,
    prev: usize,
) -> Result<(DecoderState, Var), ModelError> {
    let (_, ctx) = attend(g, b, state.hidden, enc)?;
    let y = g.row(b.tgt_embed, prev)?;
    let y = match enc.tgt_mask {
        Some(m) => g.mul(y, m)?,
        None => y,
    };
    let table = output_table(g, b, model, enc)?;
    Ok(decode_step(g, b, table, state, y, ctx, prev)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn identity3() -> Tensor {
        Tensor::matrix(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap()
    }

    #[test]
    fn embed_picks_rows() {
        let mut g = Graph::new();
        let e = g.input(&identity3());
        let x = embed(&mut g, e, &[2]).unwrap().unwrap();
        assert_eq!(g.value(x), &[0.0, 0.0, 1.0]);
        assert!(embed(&mut g, e, &[]).unwrap().is_none());
        let x = embed(&mut g, e, &[1, 1]).unwrap().unwrap();
        assert_eq!(&g.value(x)[..3], &g.value(x)[3..]);
    }

    fn theta(g: &mut Graph, e: usize, c: usize, seed: u64) -> [Var; 4] {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut u = |s: &[usize]| {
            let mut t = crate::model::uniform(&mut rng, s);
            t.values_mut().iter_mut().for_each(|v| *v *= 10.0);
            t
        };
        let (w1, b1, w2, b2) = (u(&[e, c]), u(&[c]), u(&[c, c]), u(&[c]));
        [g.input(&w1), g.input(&b1), g.input(&w2), g.input(&b2)]
    }

    #[test]
    fn context_of_single_token_is_network_output() {
        let mut g = Graph::new();
        let th = theta(&mut g, 3, 2, 1);
        let x = g.input(&Tensor::matrix(1, 3, vec![0.3, -0.2, 0.9]).unwrap());
        let c = compute_context(&mut g, &th, x).unwrap();
        let h = g.matmul(x, th[0]).unwrap();
        let h = g.add(h, th[1]).unwrap();
        let h = g.tanh(h);
        let o = g.matmul(h, th[2]).unwrap();
        let o = g.add(o, th[3]).unwrap();
        assert_eq!(g.value(c), g.value(o));
    }

    #[test]
    fn context_ignores_order_and_duplication() {
        let rows = [[0.1, 0.5, -0.3], [0.7, -0.4, 0.2], [-0.6, 0.0, 0.8]];
        let build = |order: &[usize]| {
            let mut g = Graph::new();
            let th = theta(&mut g, 3, 2, 7);
            let vals: Vec<f64> = order.iter().flat_map(|&i| rows[i]).collect();
            let x = g.input(&Tensor::matrix(order.len(), 3, vals).unwrap());
            let c = compute_context(&mut g, &th, x).unwrap();
            g.value(c).to_vec()
        };
        let base = build(&[0, 1, 2]);
        for other in [build(&[2, 0, 1]), build(&[1, 2, 0]), build(&[0, 0, 1, 1, 2, 2])] {
            for (a, b) in base.iter().zip(&other) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mask_edge_values() {
        let mut g = Graph::new();
        let c = g.input(&Tensor::vector(vec![0.4, -1.2]));
        let w = g.input(&Tensor::zeros(&[3, 2]));
        let b = g.input(&Tensor::zeros(&[3]));
        let m = contextual_mask(&mut g, c, w, b).unwrap();
        assert_eq!(g.value(m), &[0.5, 0.5, 0.5]);
        let b = g.input(&Tensor::vector(vec![20.0, 0.0, 0.0]));
        let m = contextual_mask(&mut g, c, w, b).unwrap();
        assert!((g.value(m)[0] - 1.0).abs() < 1e-8);
    }

    fn lstm_weights(g: &mut Graph, input: usize, hidden: usize, seed: u64) -> (Var, Var) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut w = crate::model::uniform(&mut rng, &[4 * hidden, input + hidden]);
        w.values_mut().iter_mut().for_each(|v| *v *= 12.0);
        let b = crate::model::uniform(&mut rng, &[4 * hidden]);
        (g.input(&w), g.input(&b))
    }

    #[test]
    fn zero_lstm_weights_give_zero_annotations() {
        let mut g = Graph::new();
        let w = g.input(&Tensor::zeros(&[8, 5]));
        let b = g.input(&Tensor::zeros(&[8]));
        let x = g.input(&Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 0.1, 0.2, 0.3]).unwrap());
        let h = encode(&mut g, (w, b), (w, b), x).unwrap();
        assert_eq!(g.shape(h), &[2, 4]);
        assert!(g.value(h).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reversing_input_swaps_directions() {
        let rows = [[0.3, -0.7], [0.9, 0.1], [-0.4, 0.6], [0.2, 0.2]];
        let run = |order: Vec<usize>| {
            let mut g = Graph::new();
            let f = lstm_weights(&mut g, 2, 3, 11);
            let b = lstm_weights(&mut g, 2, 3, 12);
            let vals: Vec<f64> = order.iter().flat_map(|&i| rows[i]).collect();
            let x = g.input(&Tensor::matrix(4, 2, vals).unwrap());
            // swapping weights too: reversed input under (bwd, fwd)
            (g.clone(), f, b, x)
        };
        let (mut g1, f1, b1, x1) = run(vec![0, 1, 2, 3]);
        let h = encode(&mut g1, f1, b1, x1).unwrap();
        let (mut g2, f2, b2, x2) = run(vec![3, 2, 1, 0]);
        let hr = encode(&mut g2, b2, f2, x2).unwrap();
        let (a, r) = (g1.value(h), g2.value(hr));
        for t in 0..4 {
            let row = &a[t * 6..t * 6 + 6];
            let rrow = &r[(3 - t) * 6..(3 - t) * 6 + 6];
            assert_eq!(&row[..3], &rrow[3..]);
            assert_eq!(&row[3..], &rrow[..3]);
        }
    }

    #[test]
    fn lstm_cell_hand_evaluated() {
        // 2 units, 1-d input; weights chosen so every gate pre-activation is simple.
        // rows: i0 i1 f0 f1 g0 g1 o0 o1, columns: x, h0, h1
        let w = Tensor::matrix(
            8,
            3,
            vec![
                1.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, //
                0.5, 0.0, 0.0, //
                0.0, 0.0, 0.0, //
                2.0, 0.0, 0.0, //
                -0.5, 0.0, 0.0, //
                1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0,
            ],
        )
        .unwrap();
        let b = Tensor::vector(vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let mut g = Graph::new();
        let (wv, bv) = (g.input(&w), g.input(&b));
        let x = g.input(&Tensor::vector(vec![1.0]));
        let h0 = g.input(&Tensor::zeros(&[2]));
        let c0 = g.input(&Tensor::vector(vec![0.5, -0.5]));
        let (h, c) = lstm_step(&mut g, wv, bv, x, h0, c0).unwrap();
        // c0 = σ(1.5)·0.5 + σ(1)·tanh(2) = 0.4088575637… + 0.7310585786…·0.9640275801…
        // c1 = σ(1)·(-0.5) + σ(-1)·tanh(-0.5) = -0.3655292893… + 0.2689414214…·(-0.4621171573…)
        let expected_c = [1.1135478705471717, -0.489811734427971];
        let expected_h = [0.5887309281736135, -0.227033497943369];
        for k in 0..2 {
            assert!((g.value(c)[k] - expected_c[k]).abs() < 1e-12, "{:?}", g.value(c));
            assert!((g.value(h)[k] - expected_h[k]).abs() < 1e-12, "{:?}", g.value(h));
        }
    }
}
