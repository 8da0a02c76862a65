//! Central-finite-difference gradient checking for the from-scratch models.
//!
//! Relative error is |a - n| / max(|a|, |n|, 1e-8), reported per tensor and
//! overall; every parameter entry is perturbed both ways at full double
//! precision.

use crate::corpus::ClassId;
use crate::features::{CharSequence, SparseVector};

use super::charcnn::{cnn_grads, cnn_loss, CharCnnModel};
use super::charlstm::{lstm_grads, lstm_loss, CharLstmModel};
use super::logreg::{logreg_grads, logreg_loss, LinearModel};
use super::ParamAccess;

#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: &'static str,
    pub max_rel_err: f64,
    pub entries: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub max_rel_err: f64,
}

impl GradCheckReport {
    pub fn passes(&self, bound: f64) -> bool {
        self.max_rel_err < bound
    }
}

/// Compares analytic gradients against central differences for every entry
/// of every trainable tensor. `loss` and `grads` must evaluate the same
/// objective on the same fixed batch.
pub fn check_gradients<M: ParamAccess>(
    model: &mut M,
    loss: impl Fn(&M) -> f64,
    grads: impl Fn(&M) -> Vec<Vec<f64>>,
    eps: f64,
) -> GradCheckReport {
    let analytic = grads(model);
    let names = model.tensor_names();
    assert_eq!(analytic.len(), names.len(), "one gradient per tensor");

    let mut tensors = Vec::with_capacity(names.len());
    let mut overall: f64 = 0.0;
    for (slot, name) in names.iter().enumerate() {
        let entries = model.tensor(slot).len();
        assert_eq!(analytic[slot].len(), entries, "gradient shape for {name}");
        let mut worst: f64 = 0.0;
        #[allow(clippy::needless_range_loop)]
        for i in 0..entries {
            let original = model.tensor(slot)[i];
            model.tensor_mut(slot)[i] = original + eps;
            let loss_plus = loss(model);
            model.tensor_mut(slot)[i] = original - eps;
            let loss_minus = loss(model);
            model.tensor_mut(slot)[i] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * eps);
            let a = analytic[slot][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        overall = overall.max(worst);
        tensors.push(TensorCheck {
            name,
            max_rel_err: worst,
            entries,
        });
    }
    GradCheckReport {
        tensors,
        max_rel_err: overall,
    }
}

/// Gradient check for a char-CNN on a fixed batch.
pub fn check_charcnn(
    model: &mut CharCnnModel,
    seqs: &[CharSequence],
    labels: &[ClassId],
    eps: f64,
) -> GradCheckReport {
    let weights = vec![1.0; labels.len()];
    check_gradients(
        model,
        |m| cnn_loss(m, seqs, labels, &weights),
        |m| {
            let cache = m.forward(seqs);
            cnn_grads(m, seqs, labels, &weights, &cache)
        },
        eps,
    )
}

/// Gradient check for a char-LSTM on a fixed batch, dropout disabled.
pub fn check_charlstm(
    model: &mut CharLstmModel,
    seqs: &[CharSequence],
    labels: &[ClassId],
    eps: f64,
) -> GradCheckReport {
    let weights = vec![1.0; labels.len()];
    check_gradients(
        model,
        |m| lstm_loss(m, seqs, labels, &weights, None),
        |m| {
            let cache = m.forward(seqs, None);
            lstm_grads(m, seqs, labels, &weights, &cache, None)
        },
        eps,
    )
}

/// Gradient check for logistic regression on fixed features.
pub fn check_logreg(
    model: &mut LinearModel,
    features: &[SparseVector],
    labels: &[ClassId],
    eps: f64,
) -> GradCheckReport {
    check_gradients(
        model,
        |m| logreg_loss(m, features, labels),
        |m| logreg_grads(m, features, labels),
        eps,
    )
}
