//! Attention encoder-decoder with contextual embedding masks.
//!
//! The source sentence is summarized into an order-free context vector
//! (a tanh layer applied to each embedding, then averaged). Two sigmoid
//! masks computed from that vector gate every source embedding before the
//! bidirectional encoder and every previous-target embedding before the
//! decoder LSTM.

mod layers;
mod search;
mod train;

pub use layers::{
    attend, compute_context, contextual_mask, decode_step, embed, encode, lstm_step, Bound,
    DecoderState, EncodedSource,
};
pub use search::{beam_search, greedy_decode, Hypothesis, Translation};
pub use train::{
    evaluate_nll, token_accuracy, train, EarlyStopping, EpochMetrics, StopMetric, TrainError, TrainOutcome,
    TrainingConfig,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{Gradients, Graph, Tensor, TensorError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{0}")]
    Invalid(String),
}

/// Architecture sizes and switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    /// Embedding dimension E.
    pub embed: usize,
    /// Context dimension C.
    pub context: usize,
    /// Per-direction encoder hidden size H.
    pub enc_hidden: usize,
    /// Decoder hidden size H'.
    pub dec_hidden: usize,
    /// Width of the additive attention scorer.
    pub attn_hidden: usize,
    pub contextualize: bool,
    /// Also gate the target embedding rows used by the output softmax.
    pub mask_output_embeddings: bool,
    pub bos: usize,
    pub eos: usize,
}

impl ModelConfig {
    /// Config with C = E and attention width = H.
    pub fn new(src_vocab: usize, tgt_vocab: usize, embed: usize, hidden: usize) -> Self {
        Self {
            src_vocab,
            tgt_vocab,
            embed,
            context: embed,
            enc_hidden: hidden,
            dec_hidden: hidden,
            attn_hidden: hidden,
            contextualize: true,
            mask_output_embeddings: false,
            bos: crate::corpus::BOS,
            eos: crate::corpus::EOS,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let sizes = [
            ("src_vocab", self.src_vocab),
            ("tgt_vocab", self.tgt_vocab),
            ("embed", self.embed),
            ("context", self.context),
            ("enc_hidden", self.enc_hidden),
            ("dec_hidden", self.dec_hidden),
            ("attn_hidden", self.attn_hidden),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(ModelError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.bos >= self.tgt_vocab || self.eos >= self.tgt_vocab {
            return Err(ModelError::Invalid(format!(
                "bos {} / eos {} outside target vocabulary of {}",
                self.bos, self.eos, self.tgt_vocab
            )));
        }
        Ok(())
    }
}

/// Weights of one LSTM: `weight` is `4H × (input + H)` acting on `[x; h]`,
/// gate rows ordered input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LstmParams {
    fn init(rng: &mut ChaCha8Rng, input: usize, hidden: usize) -> Self {
        let mut bias = Tensor::zeros(&[4 * hidden]);
        bias.values_mut()[hidden..2 * hidden].fill(1.0);
        Self {
            weight: uniform(rng, &[4 * hidden, input + hidden]),
            bias,
        }
    }

    pub fn hidden(&self) -> usize {
        self.bias.len() / 4
    }
}

/// Every learned tensor of the model.
///
/// Matrices applied as `W · v` are stored output-major (`out × in`); the two
/// contextualizer layers act on a `T × E` embedding matrix from the right and
/// are stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub src_embed: Tensor,
    pub tgt_embed: Tensor,
    pub output_bias: Tensor,
    pub enc_fwd: LstmParams,
    pub enc_bwd: LstmParams,
    pub dec: LstmParams,
    /// `A × H'`, applied to the previous decoder state.
    pub att_query: Tensor,
    /// `2H × A`, applied to the annotation matrix from the right.
    pub att_key: Tensor,
    pub att_v: Tensor,
    pub init_w: Tensor,
    pub init_b: Tensor,
    /// `E × H'` projection feeding the tied output embedding.
    pub proj_w: Tensor,
    pub proj_b: Tensor,
    pub ctx_w1: Tensor,
    pub ctx_b1: Tensor,
    pub ctx_w2: Tensor,
    pub ctx_b2: Tensor,
    pub mask_src_w: Tensor,
    pub mask_src_b: Tensor,
    pub mask_tgt_w: Tensor,
    pub mask_tgt_b: Tensor,
}

/// Checkpoint names, in slot order.
pub const PARAM_NAMES: [&str; NUM_PARAMS] = [
    "src_embed",
    "tgt_embed",
    "output_bias",
    "enc_fwd.weight",
    "enc_fwd.bias",
    "enc_bwd.weight",
    "enc_bwd.bias",
    "dec.weight",
    "dec.bias",
    "att_query",
    "att_key",
    "att_v",
    "init_w",
    "init_b",
    "proj_w",
    "proj_b",
    "ctx_w1",
    "ctx_b1",
    "ctx_w2",
    "ctx_b2",
    "mask_src_w",
    "mask_src_b",
    "mask_tgt_w",
    "mask_tgt_b",
];

const NUM_PARAMS: usize = 24;

pub(crate) fn uniform(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let values = (0..n).map(|_| rng.gen_range(-0.08..0.08)).collect();
    Tensor::new(shape.to_vec(), values)
        .expect("positive shape")
        .trainable()
}

impl ModelParameters {
    pub fn init(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let (e, c, h, hd, a) = (
            cfg.embed,
            cfg.context,
            cfg.enc_hidden,
            cfg.dec_hidden,
            cfg.attn_hidden,
        );
        let zeros = |shape: &[usize]| Tensor::zeros(shape).trainable();
        let mut p = Self {
            src_embed: uniform(rng, &[cfg.src_vocab, e]),
            tgt_embed: uniform(rng, &[cfg.tgt_vocab, e]),
            output_bias: zeros(&[cfg.tgt_vocab]),
            enc_fwd: LstmParams::init(rng, e, h),
            enc_bwd: LstmParams::init(rng, e, h),
            dec: LstmParams::init(rng, e + 2 * h, hd),
            att_query: uniform(rng, &[a, hd]),
            att_key: uniform(rng, &[2 * h, a]),
            att_v: uniform(rng, &[a]),
            init_w: uniform(rng, &[hd, 2 * h]),
            init_b: zeros(&[hd]),
            proj_w: uniform(rng, &[e, hd]),
            proj_b: zeros(&[e]),
            ctx_w1: uniform(rng, &[e, c]),
            ctx_b1: zeros(&[c]),
            ctx_w2: uniform(rng, &[c, c]),
            ctx_b2: zeros(&[c]),
            mask_src_w: uniform(rng, &[e, c]),
            mask_src_b: zeros(&[e]),
            mask_tgt_w: uniform(rng, &[e, c]),
            mask_tgt_b: zeros(&[e]),
        };
        for t in p.tensors_mut() {
            t.requires_grad = true;
        }
        p
    }

    /// Tensors in slot order.
    pub fn tensors(&self) -> [&Tensor; NUM_PARAMS] {
        [
            &self.src_embed,
            &self.tgt_embed,
            &self.output_bias,
            &self.enc_fwd.weight,
            &self.enc_fwd.bias,
            &self.enc_bwd.weight,
            &self.enc_bwd.bias,
            &self.dec.weight,
            &self.dec.bias,
            &self.att_query,
            &self.att_key,
            &self.att_v,
            &self.init_w,
            &self.init_b,
            &self.proj_w,
            &self.proj_b,
            &self.ctx_w1,
            &self.ctx_b1,
            &self.ctx_w2,
            &self.ctx_b2,
            &self.mask_src_w,
            &self.mask_src_b,
            &self.mask_tgt_w,
            &self.mask_tgt_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; NUM_PARAMS] {
        [
            &mut self.src_embed,
            &mut self.tgt_embed,
            &mut self.output_bias,
            &mut self.enc_fwd.weight,
            &mut self.enc_fwd.bias,
            &mut self.enc_bwd.weight,
            &mut self.enc_bwd.bias,
            &mut self.dec.weight,
            &mut self.dec.bias,
            &mut self.att_query,
            &mut self.att_key,
            &mut self.att_v,
            &mut self.init_w,
            &mut self.init_b,
            &mut self.proj_w,
            &mut self.proj_b,
            &mut self.ctx_w1,
            &mut self.ctx_b1,
            &mut self.ctx_w2,
            &mut self.ctx_b2,
            &mut self.mask_src_w,
            &mut self.mask_src_b,
            &mut self.mask_tgt_w,
            &mut self.mask_tgt_b,
        ]
    }

    pub fn named(&self) -> Vec<(&'static str, &Tensor)> {
        PARAM_NAMES.iter().copied().zip(self.tensors()).collect()
    }

    /// Slots of the contextualizer and mask maps, unused when contextualization is off.
    pub fn context_slots() -> std::ops::Range<usize> {
        16..24
    }

    /// Number of scalars that receive gradient under `cfg`.
    pub fn trainable_count(&self, cfg: &ModelConfig) -> usize {
        self.tensors()
            .iter()
            .enumerate()
            .filter(|(i, _)| cfg.contextualize || !Self::context_slots().contains(i))
            .map(|(_, t)| t.len())
            .sum()
    }

    pub fn zero_grad(&mut self) {
        for t in self.tensors_mut() {
            t.zero_grad();
        }
    }

    pub fn accumulate(&mut self, grads: &Gradients) {
        grads.accumulate_into(&mut self.tensors_mut());
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Rebuilds parameters from `(name, tensor)` entries, checking shapes against `cfg`.
    pub fn from_named(
        cfg: &ModelConfig,
        entries: Vec<(String, Tensor)>,
    ) -> Result<Self, ModelError> {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut p = Self::init(cfg, &mut rng);
        let mut seen = [false; NUM_PARAMS];
        for (name, t) in entries {
            let slot = PARAM_NAMES
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| ModelError::Invalid(format!("unknown tensor {name:?}")))?;
            let dst = &mut p.tensors_mut()[slot];
            if dst.shape() != t.shape() {
                return Err(ModelError::Invalid(format!(
                    "tensor {name}: expected shape {:?}, found {:?}",
                    dst.shape(),
                    t.shape()
                )));
            }
            dst.values_mut().copy_from_slice(t.values());
            seen[slot] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(ModelError::Invalid(format!(
                "missing tensor {}",
                PARAM_NAMES[missing]
            )));
        }
        Ok(p)
    }
}

/// A configuration together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParameters,
}

/// Replacement masks used to probe the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskOverride {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let params = ModelParameters::init(&config, &mut rng);
        Ok(Self { config, params })
    }

    fn check_ids(&self, src: &[usize], tgt: &[usize]) -> Result<(), ModelError> {
        if src.is_empty() || tgt.is_empty() {
            return Err(ModelError::Invalid("empty source or target sequence".into()));
        }
        if tgt.last() != Some(&self.config.eos) {
            return Err(ModelError::Invalid(
                "target must end with the end-of-sentence id".into(),
            ));
        }
        Ok(())
    }

    /// Builds the teacher-forced loss graph. Returns the graph and the loss node.
    pub fn loss_graph(
        &self,
        src: &[usize],
        tgt: &[usize],
        masks: Option<&MaskOverride>,
    ) -> Result<(Graph, crate::tensor::Var), ModelError> {
        self.check_ids(src, tgt)?;
        let mut g = Graph::new();
        let b = Bound::new(&mut g, self);
        let enc = layers::encode_source(&mut g, &b, self, src, masks)?;
        let mut state = enc.initial_state.clone();
        let mut prev = self.config.bos;
        let mut terms = Vec::with_capacity(tgt.len());
        for &w in tgt {
            let (next, logits) = layers::step(&mut g, &b, self, &enc, &state, prev)?;
            terms.push(g.nll(logits, w)?);
            state = next;
            prev = w;
        }
        let loss = g.sum_scalars(&terms)?;
        Ok((g, loss))
    }

    /// Negative log-likelihood of `tgt` given `src` under teacher forcing.
    pub fn sentence_loss(&self, src: &[usize], tgt: &[usize]) -> Result<f64, ModelError> {
        let (g, loss) = self.loss_graph(src, tgt, None)?;
        Ok(g.scalar(loss))
    }

    /// Loss with gradients added into the parameters' grad buffers.
    pub fn accumulate_gradients(&mut self, src: &[usize], tgt: &[usize]) -> Result<f64, ModelError> {
        let (g, loss) = self.loss_graph(src, tgt, None)?;
        let grads = g.backward(loss)?;
        self.params.accumulate(&grads);
        Ok(g.scalar(loss))
    }

    /// Summed loss over a padded batch; PAD positions never reach the graph.
    pub fn batch_loss(&self, batch: &crate::corpus::Batch) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for (src, tgt) in batch.pairs() {
            total += self.sentence_loss(src, tgt)?;
        }
        Ok(total)
    }

    /// Writes the parameters to `path` in the named-tensor format and the
    /// configuration as JSON to `path` with `.json` appended.
    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        crate::tensor::write_checkpoint(&mut w, &self.params.named())?;
        std::io::Write::flush(&mut w)?;
        let json = serde_json::to_string_pretty(&self.config).map_err(std::io::Error::other)?;
        std::fs::write(config_path(path), json + "\n")
    }

    /// Reads a model written by [`Model::save`].
    pub fn load(path: &std::path::Path) -> Result<Self, ModelError> {
        let bad = |what: &str, e: &dyn std::fmt::Display| {
            ModelError::Invalid(format!("{what} {}: {e}", path.display()))
        };
        let json = std::fs::read_to_string(config_path(path)).map_err(|e| bad("cannot read config for", &e))?;
        let config: ModelConfig = serde_json::from_str(&json).map_err(|e| bad("bad config for", &e))?;
        config.validate()?;
        let file = std::fs::File::open(path).map_err(|e| bad("cannot open", &e))?;
        let entries = crate::tensor::read_checkpoint(std::io::BufReader::new(file)).map_err(|e| bad("undecodable checkpoint", &e))?;
        let params = ModelParameters::from_named(&config, entries)?;
        Ok(Self { config, params })
    }

    /// Source-side masks `(m_x, m_y)` for a sentence, if contextualization is on.
    pub fn masks(&self, src: &[usize]) -> Result<Option<(Vec<f64>, Vec<f64>)>, ModelError> {
        let mut g = Graph::new();
        let b = Bound::new(&mut g, self);
        let enc = layers::encode_source(&mut g, &b, self, src, None)?;
        Ok(match (enc.src_mask, enc.tgt_mask) {
            (Some(mx), Some(my)) => Some((g.value(mx).to_vec(), g.value(my).to_vec())),
            _ => None,
        })
    }

    /// Attention weights at every decoder step under teacher forcing.
    pub fn attention_weights(&self, src: &[usize], tgt: &[usize]) -> Result<Vec<Vec<f64>>, ModelError> {
        self.check_ids(src, tgt)?;
        let mut g = Graph::new();
        let b = Bound::new(&mut g, self);
        let enc = layers::encode_source(&mut g, &b, self, src, None)?;
        let mut state = enc.initial_state.clone();
        let mut prev = self.config.bos;
        let mut out = Vec::new();
        for &w in tgt {
            let (alpha, _) = attend(&mut g, &b, state.hidden, &enc)?;
            out.push(g.value(alpha).to_vec());
            let (next, _) = layers::step(&mut g, &b, self, &enc, &state, prev)?;
            state = next;
            prev = w;
        }
        Ok(out)
    }
}

fn config_path(path: &std::path::Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}
