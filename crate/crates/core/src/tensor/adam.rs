use serde::{Deserialize, Serialize};

use super::{Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global L2 norm above which all gradients are rescaled.
    pub clip_threshold: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed moments shaped like `params`.
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let zeros: Vec<Vec<f64>> = params.into_iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            config,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    pub fn first_moment(&self, i: usize) -> &[f64] {
        &self.first_moment[i]
    }

    pub fn second_moment(&self, i: usize) -> &[f64] {
        &self.second_moment[i]
    }
}

/// L2 norm over every gradient buffer jointly. Missing buffers count as zero.
pub fn global_norm(params: &[&mut Tensor]) -> f64 {
    params
        .iter()
        .filter_map(|p| p.grad.as_ref())
        .flat_map(|g| g.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// One clipped, bias-corrected Adam update.
///
/// Gradients are scaled by `clip_threshold / norm` when the global norm
/// exceeds the threshold. A non-finite gradient rejects the whole step and
/// leaves both parameters and state untouched. Gradient buffers are left as
/// they were; the caller zeroes them before the next accumulation.
pub fn adam_step(params: &mut [&mut Tensor], state: &mut AdamState) -> Result<f64, TensorError> {
    let cfg = state.config;
    if cfg.clip_threshold <= 0.0 || cfg.clip_threshold.is_nan() {
        return Err(TensorError::Invalid {
            op: "adam_step",
            msg: format!("clip threshold must be positive, got {}", cfg.clip_threshold),
        });
    }
    if params.len() != state.first_moment.len() {
        return Err(TensorError::Invalid {
            op: "adam_step",
            msg: format!(
                "state tracks {} parameters, got {}",
                state.first_moment.len(),
                params.len()
            ),
        });
    }
    for (i, p) in params.iter().enumerate() {
        if p.len() != state.first_moment[i].len() {
            return Err(TensorError::ShapeMismatch {
                op: "adam_step",
                lhs: vec![state.first_moment[i].len()],
                rhs: p.shape().to_vec(),
            });
        }
        if let Some(g) = &p.grad {
            if g.iter().any(|x| !x.is_finite()) {
                return Err(TensorError::NonFiniteGradient(format!("#{}", i)));
            }
        }
    }
    let norm = global_norm(params);
    let scale = if norm > cfg.clip_threshold {
        cfg.clip_threshold / norm
    } else {
        1.0
    };

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        let Some(g) = p.grad.clone() else { continue };
        let m = &mut state.first_moment[i];
        let v = &mut state.second_moment[i];
        for (j, w) in p.values_mut().iter_mut().enumerate() {
            let gj = g[j] * scale;
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(norm)
}
