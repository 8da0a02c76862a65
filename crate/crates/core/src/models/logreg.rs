//! Logistic regression over TF-IDF character n-gram features, trained with
//! minibatch Adam on mean binary cross-entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClassId, LabeledName};
use crate::error::{Error, Result};
use crate::features::{tfidf_transform, NgramIndex, SparseVector};

use super::{
    check_both_labels, epoch_batches, example_weights, label_prior, sigmoid, train_val_indices,
    Adam, EarlyStop, EpochLoss, ParamAccess, TrainConfig, TrainMetrics, Trained,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub index: NgramIndex,
}

impl LinearModel {
    pub fn new(index: NgramIndex) -> Self {
        LinearModel {
            weights: vec![0.0; index.dimension()],
            bias: 0.0,
            index,
        }
    }

    pub fn probability_class1(&self, features: &SparseVector) -> f64 {
        sigmoid(features.dot_dense(&self.weights) + self.bias)
    }

    pub(crate) fn from_blocks(index: NgramIndex, blocks: &[Vec<f64>]) -> Result<Self> {
        if blocks.len() != 2 || blocks[0].len() != index.dimension() || blocks[1].len() != 1 {
            return Err(Error::CorruptArtifact(
                "logreg parameter blocks do not match the feature space".into(),
            ));
        }
        let model = LinearModel {
            weights: blocks[0].clone(),
            bias: blocks[1][0],
            index,
        };
        if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::CorruptArtifact("non-finite logreg parameters".into()));
        }
        Ok(model)
    }
}

impl ParamAccess for LinearModel {
    fn tensor_names(&self) -> Vec<&'static str> {
        vec!["weights", "bias"]
    }

    fn tensor(&self, slot: usize) -> &[f64] {
        match slot {
            0 => &self.weights,
            1 => std::slice::from_ref(&self.bias),
            _ => unreachable!(),
        }
    }

    fn tensor_mut(&mut self, slot: usize) -> &mut [f64] {
        match slot {
            0 => &mut self.weights,
            1 => std::slice::from_mut(&mut self.bias),
            _ => unreachable!(),
        }
    }
}

/// Stable binary cross-entropy from the logit: softplus(z) - y * z.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    softplus - y * z
}

fn weighted_loss(
    model: &LinearModel,
    features: &[SparseVector],
    labels: &[ClassId],
    weights: &[f64],
    subset: &[usize],
) -> f64 {
    if subset.is_empty() {
        return f64::NAN;
    }
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for &i in subset {
        let z = features[i].dot_dense(&model.weights) + model.bias;
        total += weights[i] * bce_from_logit(z, labels[i].0 as f64);
        weight_sum += weights[i];
    }
    total / weight_sum
}

pub(crate) fn logreg_loss(
    model: &LinearModel,
    features: &[SparseVector],
    labels: &[ClassId],
) -> f64 {
    let all: Vec<usize> = (0..features.len()).collect();
    let ones = vec![1.0; features.len()];
    weighted_loss(model, features, labels, &ones, &all)
}

pub(crate) fn logreg_grads(
    model: &LinearModel,
    features: &[SparseVector],
    labels: &[ClassId],
) -> Vec<Vec<f64>> {
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = 0.0;
    for (x, y) in features.iter().zip(labels) {
        let z = x.dot_dense(&model.weights) + model.bias;
        let err = sigmoid(z) - y.0 as f64;
        for (col, v) in &x.entries {
            gw[*col as usize] += err * v;
        }
        gb += err;
    }
    let n = features.len() as f64;
    gw.iter_mut().for_each(|g| *g /= n);
    vec![gw, vec![gb / n]]
}

/// Trains on unique labeled names. Deterministic for a fixed seed; rejects
/// single-label corpora. The returned metrics carry per-epoch train and
/// validation losses; parameters are restored to the best validation epoch.
pub fn train_logreg(
    train: &[LabeledName],
    index: &NgramIndex,
    config: &TrainConfig,
) -> Result<Trained<LinearModel>> {
    config.validate()?;
    let labels: Vec<ClassId> = train.iter().map(|l| l.label).collect();
    check_both_labels(&labels)?;

    let features: Vec<SparseVector> = train
        .iter()
        .map(|l| tfidf_transform(&l.name, index))
        .collect();
    let weights = example_weights(&labels, config.class_weighting);
    let (train_idx, val_idx) =
        train_val_indices(train.len(), config.validation_fraction, config.seed);

    let mut model = LinearModel::new(index.clone());
    let mut adam = Adam::new(config, &[model.weights.len(), 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut stopper = EarlyStop::new(config.early_stop_patience);
    let mut metrics = TrainMetrics::default();
    let mut best: Vec<Vec<f64>> = model.snapshot();

    let mut grad_w = vec![0.0; model.weights.len()];
    for epoch in 1..=config.epochs {
        for batch in epoch_batches(train_idx.len(), config.batch_size, &mut rng) {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            let mut weight_sum = 0.0;
            for &slot in &batch {
                let i = train_idx[slot];
                let x = &features[i];
                let z = x.dot_dense(&model.weights) + model.bias;
                let err = weights[i] * (sigmoid(z) - labels[i].0 as f64);
                for (col, v) in &x.entries {
                    grad_w[*col as usize] += err * v;
                }
                grad_b += err;
                weight_sum += weights[i];
            }
            grad_w.iter_mut().for_each(|g| *g /= weight_sum);
            grad_b /= weight_sum;
            adam.begin_step();
            adam.update(0, &mut model.weights, &grad_w);
            adam.update(1, std::slice::from_mut(&mut model.bias), &[grad_b]);
        }

        let train_loss = weighted_loss(&model, &features, &labels, &weights, &train_idx);
        let val_loss = if val_idx.is_empty() {
            train_loss
        } else {
            weighted_loss(&model, &features, &labels, &weights, &val_idx)
        };
        metrics.epoch_losses.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        if stopper.observe(epoch, val_loss) {
            best = model.snapshot();
        }
        if stopper.should_stop() {
            break;
        }
    }

    model.restore(&best);
    metrics.best_epoch = stopper.best_epoch;
    metrics.final_train_loss = weighted_loss(&model, &features, &labels, &weights, &train_idx);
    metrics.final_val_loss = if val_idx.is_empty() {
        metrics.final_train_loss
    } else {
        weighted_loss(&model, &features, &labels, &weights, &val_idx)
    };

    Ok(Trained {
        model,
        metrics,
        label_prior: label_prior(&labels),
    })
}
