use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bleu::corpus_bleu;
use crate::corpus::{make_batches, CorpusError, EOS};
use crate::tensor::{adam_step, AdamConfig, AdamState, TensorError};

use super::search::greedy_decode;
use super::{Model, ModelConfig, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopMetric {
    /// Development negative log-likelihood per token.
    Nll,
    /// Development BLEU of greedy translations.
    Bleu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub model: ModelConfig,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub metric: StopMetric,
}

impl TrainingConfig {
    pub fn new(model: ModelConfig) -> Self {
        Self {
            model,
            adam: AdamConfig::default(),
            batch_size: 16,
            max_epochs: 20,
            patience: 3,
            seed: 1,
            metric: StopMetric::Nll,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.model.validate()?;
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(ModelError::Invalid(
                "batch_size, max_epochs and patience must be positive".into(),
            ));
        }
        let a = &self.adam;
        if !(a.learning_rate >= 0.0 && a.clip_threshold > 0.0 && a.epsilon > 0.0)
            || !(0.0..1.0).contains(&a.beta1)
            || !(0.0..1.0).contains(&a.beta2)
        {
            return Err(ModelError::Invalid(format!("invalid optimizer settings {a:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("loss diverged in epoch {epoch}; last good parameters returned")]
    Diverged { epoch: usize, last_good: Box<Model> },
}

impl From<TensorError> for TrainError {
    fn from(e: TensorError) -> Self {
        TrainError::Model(e.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_nll: f64,
    pub dev_nll: f64,
    pub dev_bleu: f64,
}

impl EpochMetrics {
    /// `epoch \t train NLL/token \t dev NLL/token \t dev BLEU`.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.2}",
            self.epoch, self.train_nll, self.dev_nll, self.dev_bleu
        )
    }
}

/// Patience counter over a lower-is-better value.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience: patience.max(1),
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    /// Records a value. Returns `(improved, stop)`.
    pub fn update(&mut self, value: f64) -> (bool, bool) {
        if value < self.best {
            self.best = value;
            self.bad_epochs = 0;
            (true, false)
        } else {
            self.bad_epochs += 1;
            (false, self.bad_epochs >= self.patience)
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best development epoch.
    pub model: Model,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
}

fn with_eos(ids: &[usize]) -> Vec<usize> {
    let mut v = ids.to_vec();
    v.push(EOS);
    v
}

/// Summed NLL and token count over `(source, target)` pairs without EOS.
pub fn evaluate_nll(model: &Model, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<(f64, usize), ModelError> {
    let mut total = 0.0;
    let mut tokens = 0;
    for (s, t) in pairs {
        let tgt = with_eos(t);
        total += model.sentence_loss(&with_eos(s), &tgt)?;
        tokens += tgt.len();
    }
    Ok((total, tokens))
}

fn dev_bleu(model: &Model, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<f64, ModelError> {
    let mut hyps = Vec::with_capacity(pairs.len());
    let mut refs = Vec::with_capacity(pairs.len());
    for (s, t) in pairs {
        let out = greedy_decode(model, &with_eos(s), None)?;
        hyps.push(out.tokens.iter().map(|i| i.to_string()).collect::<Vec<_>>());
        refs.push(t.iter().map(|i| i.to_string()).collect::<Vec<_>>());
    }
    Ok(corpus_bleu(&hyps, &refs).bleu)
}

/// Greedy token accuracy: position-wise matches over `max(|hyp|, |ref|)`,
/// pooled over the corpus. Pairs are given without EOS.
pub fn token_accuracy(model: &Model, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<f64, ModelError> {
    let (mut hit, mut total) = (0usize, 0usize);
    for (s, t) in pairs {
        let out = greedy_decode(model, &with_eos(s), None)?;
        hit += out.tokens.iter().zip(t).filter(|(a, b)| a == b).count();
        total += out.tokens.len().max(t.len());
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}

/// Minibatch Adam training with early stopping on the development set.
///
/// Pairs are id sequences without EOS; batching appends it. `on_epoch` sees
/// each epoch's metrics as they are produced.
pub fn train(
    train_pairs: &[(Vec<usize>, Vec<usize>)],
    dev_pairs: &[(Vec<usize>, Vec<usize>)],
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train_pairs.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let dev = if dev_pairs.is_empty() { train_pairs } else { dev_pairs };
    let mut model = Model::new(config.model.clone(), config.seed)?;
    let mut state = AdamState::new(config.adam, model.params.tensors());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut metrics = Vec::new();

    for epoch in 1..=config.max_epochs {
        let batch_seed = config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ epoch as u64;
        let batches = make_batches(train_pairs, config.batch_size, batch_seed)?;
        let (mut train_loss, mut train_tokens) = (0.0, 0usize);
        for batch in &batches {
            let snapshot = model.clone();
            model.params.zero_grad();
            let mut batch_loss = 0.0;
            for (src, tgt) in batch.pairs() {
                batch_loss += model.accumulate_gradients(src, tgt)?;
            }
            if !batch_loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    last_good: Box::new(snapshot),
                });
            }
            if let Err(e) = adam_step(&mut model.params.tensors_mut(), &mut state) {
                return match e {
                    TensorError::NonFiniteGradient(_) => Err(TrainError::Diverged {
                        epoch,
                        last_good: Box::new(snapshot),
                    }),
                    other => Err(other.into()),
                };
            }
            if !model.params.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    last_good: Box::new(snapshot),
                });
            }
            train_loss += batch_loss;
            train_tokens += batch.target_tokens();
        }
        let (dev_loss, dev_tokens) = evaluate_nll(&model, dev)?;
        let m = EpochMetrics {
            epoch,
            train_nll: train_loss / train_tokens as f64,
            dev_nll: dev_loss / dev_tokens as f64,
            dev_bleu: dev_bleu(&model, dev)?,
        };
        on_epoch(&m);
        let value = match config.metric {
            StopMetric::Nll => m.dev_nll,
            StopMetric::Bleu => -m.dev_bleu,
        };
        metrics.push(m);
        let (improved, stop) = stopper.update(value);
        if improved {
            best = model.clone();
            best_epoch = epoch;
        }
        if stop {
            break;
        }
    }
    best.params.zero_grad();
    Ok(TrainOutcome {
        model: best,
        metrics,
        best_epoch,
    })
}
