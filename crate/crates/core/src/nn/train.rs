use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Architecture, LossKind, Mlp, NnError};
use crate::circuit::ElementId;
use crate::Real;

/// One (features, target) pair drawn from a calibrated geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainingSample<T: Real> {
    pub features: Vec<T>,
    pub target: T,
    /// Generation number of the element.
    pub gamma: u32,
    pub geometry: String,
    pub element: ElementId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    /// `None` trains on the full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 5000,
            batch_size: None,
            seed: 0,
            loss: LossKind::Mse,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("Adam epsilon must be positive");
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}

/// Adam on the given loss. Returns the trained model and the per-epoch mean
/// loss (evaluated on each mini-batch before its update).
///
/// `features` and `targets` are used as given; standardization happens upstream.
pub fn train<T: Real>(
    features: &[Vec<T>],
    targets: &[T],
    gammas: &[u32],
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<(Mlp<T>, Vec<T>), NnError> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    if features.len() != targets.len() || features.len() != gammas.len() {
        return Err(NnError::LengthMismatch);
    }
    let dim = features[0].len();
    let mut model = Mlp::init(dim, arch, cfg.seed);
    // batch order draws from a stream separate from initialization
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = features.len();
    let batch = cfg.batch_size.unwrap_or(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();

    let np = model.param_count();
    let mut m = vec![T::zero(); np];
    let mut v = vec![T::zero(); np];
    let (lr, b1, b2, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.beta1), T::lit(cfg.beta2), T::lit(cfg.epsilon));
    let (mut b1t, mut b2t) = (T::one(), T::one());
    let mut history = Vec::with_capacity(cfg.epochs);
    let (mut bx, mut by, mut bg) = (Vec::new(), Vec::new(), Vec::new());

    for epoch in 0..cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = T::zero();
        let mut batches = 0usize;
        for chunk in order.chunks(batch) {
            bx.clear();
            by.clear();
            bg.clear();
            for &i in chunk {
                bx.push(features[i].clone());
                by.push(targets[i]);
                bg.push(gammas[i]);
            }
            let (loss, grad) = model.loss_and_gradient(&bx, &by, &bg, cfg.loss)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(NnError::Divergence { epoch });
            }
            epoch_loss += loss;
            batches += 1;
            b1t *= b1;
            b2t *= b2;
            let (c1, c2) = (T::one() - b1t, T::one() - b2t);
            model.for_each_param_mut(|k, p| {
                let g = grad[k];
                m[k] = b1 * m[k] + (T::one() - b1) * g;
                v[k] = b2 * v[k] + (T::one() - b2) * g * g;
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                *p -= lr * mh / (vh.sqrt() + eps);
            });
        }
        history.push(epoch_loss / T::from_count(batches));
    }
    Ok((model, history))
}

/// Largest relative discrepancy between the backpropagated gradient and
/// central differences (step 1e-6) over every weight and bias.
///
/// Relative error is |a − n| / max(|a|, |n|, 1e-4).
pub fn gradient_check<T: Real>(
    model: &Mlp<T>,
    features: &[Vec<T>],
    targets: &[T],
    gammas: &[u32],
    kind: LossKind,
) -> Result<T, NnError> {
    let (_, analytic) = model.loss_and_gradient(features, targets, gammas, kind)?;
    let h = T::lit(1e-6);
    let floor = T::lit(1e-4);
    let base = model.params();
    let mut probe = model.clone();
    let mut flat = base.clone();
    let mut worst = T::zero();
    let eval = |probe: &mut Mlp<T>, flat: &[T]| -> Result<T, NnError> {
        probe.set_params(flat);
        let preds = probe.forward_batch(features)?;
        super::loss(&preds, targets, gammas, kind)
    };
    for k in 0..base.len() {
        flat[k] = base[k] + h;
        let up = eval(&mut probe, &flat)?;
        flat[k] = base[k] - h;
        let down = eval(&mut probe, &flat)?;
        flat[k] = base[k];
        let numeric = (up - down) / (h + h);
        let a = analytic[k];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(err);
    }
    Ok(worst)
}
