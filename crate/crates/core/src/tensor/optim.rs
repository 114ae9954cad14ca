use super::Tensor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// RMSProp with L2 weight decay folded into the gradient.
///
/// ```text
/// g <- grad + weight_decay * param
/// v <- smoothing * v + (1 - smoothing) * g^2
/// param <- param - lr * g / (sqrt(v) + eps)
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub learning_rate: f32,
    pub smoothing: f32,
    pub epsilon: f32,
    pub weight_decay: f32,
}

impl Default for RmsProp {
    fn default() -> Self {
        RmsProp {
            learning_rate: 1e-4,
            smoothing: 0.99,
            epsilon: 1e-8,
            weight_decay: 1e-6,
        }
    }
}

/// Running second-moment estimates, one per parameter tensor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizerState {
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl OptimizerState {
    pub fn for_params(params: &[&Tensor]) -> Self {
        OptimizerState {
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }
}

impl RmsProp {
    /// Apply one update in place. Nothing is modified if any gradient is
    /// non-finite or any shape disagrees.
    pub fn step(
        &self,
        params: &mut [&mut Tensor],
        grads: &[&Tensor],
        state: &mut OptimizerState,
    ) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        if state.v.is_empty() {
            state.v = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        }
        if state.v.len() != params.len() {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        for (i, ((p, g), v)) in params.iter().zip(grads).zip(&state.v).enumerate() {
            if p.shape() != g.shape() || p.shape() != v.shape() {
                return Err(Error::Shape(format!(
                    "parameter {i}: shape {:?}, gradient {:?}, state {:?}",
                    p.shape(),
                    g.shape(),
                    v.shape()
                )));
            }
            if let Some(pos) = g.data().iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of parameter {i} has {} at element {pos}",
                    g.data()[pos]
                )));
            }
        }
        let keep = self.smoothing;
        let fresh = 1.0 - self.smoothing;
        for ((p, g), v) in params.iter_mut().zip(grads).zip(state.v.iter_mut()) {
            for ((w, &dw), acc) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(v.data_mut().iter_mut())
            {
                let eff = dw + self.weight_decay * *w;
                *acc = keep * *acc + fresh * eff * eff;
                *w -= self.learning_rate * eff / (acc.sqrt() + self.epsilon);
            }
        }
        state.step += 1;
        Ok(())
    }
}
