//! Character-level LSTM: trainable embeddings, a single unidirectional
//! LSTM layer with 64 units run over the true-length steps of each name,
//! inverted dropout on the final hidden state during training, and a linear
//! softmax head. Backpropagation through time is written out by hand.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClassId, LabeledName};
use crate::error::{Error, Result};
use crate::features::{encode_chars, CharSequence, CharVocabulary};

use super::charcnn::CharModelOptions;
use super::{
    check_both_labels, epoch_batches, example_weights, label_prior, mean_ce, sigmoid, softmax2,
    train_val_indices, Adam, EarlyStop, EpochLoss, ParamAccess, TrainConfig, TrainMetrics,
    Trained,
};

pub const LSTM_HIDDEN: usize = 64;
pub const LSTM_DROPOUT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct CharLstmModel {
    /// V x E. Row 0 is the pad slot; the recurrence stops at each name's
    /// true length so the row is never read.
    pub embedding: Array2<f64>,
    /// Stacked gate weights, 4H x (E + H); row blocks are input, forget,
    /// cell and output gates over [x_t | h_{t-1}].
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    /// 2 x H.
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
    pub vocab: CharVocabulary,
    pub max_len: usize,
    pub embed_dim: usize,
}

const H: usize = LSTM_HIDDEN;

pub(crate) struct LstmCache {
    /// Per timestep: [x_t | h_{t-1}], B x (E+H).
    z: Vec<Array2<f64>>,
    /// Per timestep: post-activation gates, B x 4H (i, f, g, o blocks).
    gates: Vec<Array2<f64>>,
    /// Cell states; index 0 is the initial zero state, B x H.
    c: Vec<Array2<f64>>,
    /// Per timestep tanh(c_t), B x H.
    tanh_c: Vec<Array2<f64>>,
    /// Hidden state the head saw (post-dropout during training).
    h_head: Array2<f64>,
    pub probs: Vec<[f64; 2]>,
    steps: usize,
}

impl CharLstmModel {
    pub fn init(vocab: CharVocabulary, options: &CharModelOptions, seed: u64) -> Result<Self> {
        if options.embed_dim == 0 || options.max_len == 0 {
            return Err(Error::InvalidParam(
                "embed_dim and max_len must be positive".into(),
            ));
        }
        let e = options.embed_dim;
        let v = vocab.size();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x157a_11fe_ed00_0002);
        let mut uniform = |rows: usize, cols: usize, bound: f64| -> Array2<f64> {
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
        };

        let mut embedding = uniform(v, e, 0.1);
        embedding.row_mut(0).fill(0.0);
        let w_bound = (6.0 / ((e + H) as f64 + H as f64)).sqrt();
        let w = uniform(4 * H, e + H, w_bound);
        let mut b = Array1::zeros(4 * H);
        // forget-gate bias starts open
        b.slice_mut(ndarray::s![H..2 * H]).fill(1.0);
        let out_bound = (6.0 / (H as f64 + 2.0)).sqrt();
        let out_w = uniform(2, H, out_bound);

        Ok(CharLstmModel {
            embedding,
            w,
            b,
            out_w,
            out_b: Array1::zeros(2),
            vocab,
            max_len: options.max_len,
            embed_dim: e,
        })
    }

    /// Runs the recurrence over each name's true length; samples shorter
    /// than the longest in the batch carry their state unchanged. `dropout`
    /// is the pre-drawn inverted-scaling mask for the final hidden state.
    pub(crate) fn forward(
        &self,
        seqs: &[CharSequence],
        dropout: Option<&Array2<f64>>,
    ) -> LstmCache {
        let batch = seqs.len();
        let e = self.embed_dim;
        let steps = seqs.iter().map(|s| s.true_length).max().unwrap_or(0);

        let mut z = Vec::with_capacity(steps);
        let mut gates = Vec::with_capacity(steps);
        let mut c = Vec::with_capacity(steps + 1);
        let mut tanh_c = Vec::with_capacity(steps);
        c.push(Array2::zeros((batch, H)));
        let mut h_prev = Array2::<f64>::zeros((batch, H));

        for t in 1..=steps {
            let mut z_t = Array2::zeros((batch, e + H));
            for (bi, seq) in seqs.iter().enumerate() {
                if t <= seq.true_length {
                    let idx = seq.indices[t - 1] as usize;
                    let src = self.embedding.row(idx);
                    for x in 0..e {
                        z_t[[bi, x]] = src[x];
                    }
                }
                for j in 0..H {
                    z_t[[bi, e + j]] = h_prev[[bi, j]];
                }
            }

            let mut pre = z_t.dot(&self.w.t());
            for mut row in pre.rows_mut() {
                row += &self.b;
            }

            let mut gate_t = Array2::zeros((batch, 4 * H));
            let mut c_t = c[t - 1].clone();
            let mut tanh_t = Array2::zeros((batch, H));
            let mut h_t = h_prev.clone();
            for (bi, seq) in seqs.iter().enumerate() {
                if t > seq.true_length {
                    continue;
                }
                for j in 0..H {
                    let i_g = sigmoid(pre[[bi, j]]);
                    let f_g = sigmoid(pre[[bi, H + j]]);
                    let g_g = pre[[bi, 2 * H + j]].tanh();
                    let o_g = sigmoid(pre[[bi, 3 * H + j]]);
                    gate_t[[bi, j]] = i_g;
                    gate_t[[bi, H + j]] = f_g;
                    gate_t[[bi, 2 * H + j]] = g_g;
                    gate_t[[bi, 3 * H + j]] = o_g;
                    let c_new: f64 = f_g * c[t - 1][[bi, j]] + i_g * g_g;
                    c_t[[bi, j]] = c_new;
                    let th = c_new.tanh();
                    tanh_t[[bi, j]] = th;
                    h_t[[bi, j]] = o_g * th;
                }
            }
            z.push(z_t);
            gates.push(gate_t);
            c.push(c_t);
            tanh_c.push(tanh_t);
            h_prev = h_t;
        }

        let h_head = match dropout {
            Some(mask) => &h_prev * mask,
            None => h_prev,
        };
        let logits = h_head.dot(&self.out_w.t());
        let probs = (0..batch)
            .map(|bi| softmax2([logits[[bi, 0]] + self.out_b[0], logits[[bi, 1]] + self.out_b[1]]))
            .collect();

        LstmCache {
            z,
            gates,
            c,
            tanh_c,
            h_head,
            probs,
            steps,
        }
    }

    /// Class probabilities for one encoded name (inference mode, no
    /// dropout, so repeated calls agree exactly).
    pub fn probabilities(&self, seq: &CharSequence) -> [f64; 2] {
        self.forward(std::slice::from_ref(seq), None).probs[0]
    }

    /// Re-draws every tensor uniformly at O(scale) for gradient checking
    /// at a generic parameter point; the pad row stays zero and the head
    /// is kept small enough that the logits stay O(1).
    pub fn randomize(&mut self, seed: u64, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1_ab1e_0000_0008);
        let head = scale / (H as f64).sqrt();
        for slot in 0..self.tensor_names().len() {
            let bound = if slot >= 3 { head } else { scale };
            for value in self.tensor_mut(slot) {
                *value = rng.gen_range(-bound..bound);
            }
        }
        self.embedding.row_mut(0).fill(0.0);
    }

    pub(crate) fn blocks(&self) -> Vec<(&'static str, Vec<f64>)> {
        vec![
            ("embedding", self.embedding.iter().copied().collect()),
            ("lstm_w", self.w.iter().copied().collect()),
            ("lstm_b", self.b.to_vec()),
            ("out_w", self.out_w.iter().copied().collect()),
            ("out_b", self.out_b.to_vec()),
        ]
    }

    pub(crate) fn from_blocks(
        vocab: CharVocabulary,
        max_len: usize,
        embed_dim: usize,
        blocks: &[Vec<f64>],
    ) -> Result<Self> {
        let v = vocab.size();
        let shapes = [
            v * embed_dim,
            4 * H * (embed_dim + H),
            4 * H,
            2 * H,
            2,
        ];
        if blocks.len() != shapes.len()
            || blocks.iter().zip(shapes).any(|(b, s)| b.len() != s)
        {
            return Err(Error::CorruptArtifact(
                "char-lstm parameter blocks do not match the declared dims".into(),
            ));
        }
        if blocks.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::CorruptArtifact("non-finite char-lstm parameters".into()));
        }
        let arr2 = |data: &[f64], rows: usize, cols: usize| {
            Array2::from_shape_vec((rows, cols), data.to_vec()).expect("shape checked")
        };
        Ok(CharLstmModel {
            embedding: arr2(&blocks[0], v, embed_dim),
            w: arr2(&blocks[1], 4 * H, embed_dim + H),
            b: Array1::from_vec(blocks[2].clone()),
            out_w: arr2(&blocks[3], 2, H),
            out_b: Array1::from_vec(blocks[4].clone()),
            vocab,
            max_len,
            embed_dim,
        })
    }
}

impl ParamAccess for CharLstmModel {
    fn tensor_names(&self) -> Vec<&'static str> {
        vec!["embedding", "lstm_w", "lstm_b", "out_w", "out_b"]
    }

    fn tensor(&self, slot: usize) -> &[f64] {
        match slot {
            0 => self.embedding.as_slice().expect("standard layout"),
            1 => self.w.as_slice().expect("standard layout"),
            2 => self.b.as_slice().expect("standard layout"),
            3 => self.out_w.as_slice().expect("standard layout"),
            4 => self.out_b.as_slice().expect("standard layout"),
            _ => unreachable!(),
        }
    }

    fn tensor_mut(&mut self, slot: usize) -> &mut [f64] {
        match slot {
            0 => self.embedding.as_slice_mut().expect("standard layout"),
            1 => self.w.as_slice_mut().expect("standard layout"),
            2 => self.b.as_slice_mut().expect("standard layout"),
            3 => self.out_w.as_slice_mut().expect("standard layout"),
            4 => self.out_b.as_slice_mut().expect("standard layout"),
            _ => unreachable!(),
        }
    }
}

pub(crate) fn lstm_loss(
    model: &CharLstmModel,
    seqs: &[CharSequence],
    labels: &[ClassId],
    weights: &[f64],
    dropout: Option<&Array2<f64>>,
) -> f64 {
    mean_ce(&model.forward(seqs, dropout).probs, labels, weights)
}

/// Backpropagation through time over the cached forward pass, in
/// `tensor_names` order. Samples already past their true length at a step
/// pass their state gradients through untouched.
pub(crate) fn lstm_grads(
    model: &CharLstmModel,
    seqs: &[CharSequence],
    labels: &[ClassId],
    weights: &[f64],
    cache: &LstmCache,
    dropout: Option<&Array2<f64>>,
) -> Vec<Vec<f64>> {
    let batch = seqs.len();
    let e = model.embed_dim;
    let weight_sum: f64 = weights.iter().sum();

    let mut d_embedding = Array2::<f64>::zeros(model.embedding.dim());
    let mut d_w = Array2::<f64>::zeros(model.w.dim());
    let mut d_b = Array1::<f64>::zeros(4 * H);
    let mut d_out_w = Array2::<f64>::zeros(model.out_w.dim());
    let mut d_out_b = Array1::<f64>::zeros(2);

    // head
    let mut d_logits = Array2::<f64>::zeros((batch, 2));
    for bi in 0..batch {
        let scale = weights[bi] / weight_sum;
        let p = cache.probs[bi];
        d_logits[[bi, 0]] = scale * (p[0] - f64::from(labels[bi].0 == 0));
        d_logits[[bi, 1]] = scale * (p[1] - f64::from(labels[bi].0 == 1));
    }
    d_out_w += &d_logits.t().dot(&cache.h_head);
    for bi in 0..batch {
        d_out_b[0] += d_logits[[bi, 0]];
        d_out_b[1] += d_logits[[bi, 1]];
    }
    let mut d_h = d_logits.dot(&model.out_w);
    if let Some(mask) = dropout {
        d_h *= mask;
    }

    let mut d_c = Array2::<f64>::zeros((batch, H));
    for t in (1..=cache.steps).rev() {
        let gates = &cache.gates[t - 1];
        let tanh_c = &cache.tanh_c[t - 1];
        let c_prev = &cache.c[t - 1];

        let mut d_pre = Array2::<f64>::zeros((batch, 4 * H));
        let mut d_h_prev = Array2::<f64>::zeros((batch, H));
        let mut d_c_prev = Array2::<f64>::zeros((batch, H));
        for (bi, seq) in seqs.iter().enumerate() {
            if t > seq.true_length {
                // carry gradients straight through masked steps
                for j in 0..H {
                    d_h_prev[[bi, j]] = d_h[[bi, j]];
                    d_c_prev[[bi, j]] = d_c[[bi, j]];
                }
                continue;
            }
            for j in 0..H {
                let i_g = gates[[bi, j]];
                let f_g = gates[[bi, H + j]];
                let g_g = gates[[bi, 2 * H + j]];
                let o_g = gates[[bi, 3 * H + j]];
                let th = tanh_c[[bi, j]];

                let dc_total = d_c[[bi, j]] + d_h[[bi, j]] * o_g * (1.0 - th * th);
                let d_o = d_h[[bi, j]] * th;
                let d_i = dc_total * g_g;
                let d_g = dc_total * i_g;
                let d_f = dc_total * c_prev[[bi, j]];

                d_pre[[bi, j]] = d_i * i_g * (1.0 - i_g);
                d_pre[[bi, H + j]] = d_f * f_g * (1.0 - f_g);
                d_pre[[bi, 2 * H + j]] = d_g * (1.0 - g_g * g_g);
                d_pre[[bi, 3 * H + j]] = d_o * o_g * (1.0 - o_g);

                d_c_prev[[bi, j]] = dc_total * f_g;
            }
        }

        d_w += &d_pre.t().dot(&cache.z[t - 1]);
        for bi in 0..batch {
            for k in 0..4 * H {
                d_b[k] += d_pre[[bi, k]];
            }
        }
        let d_z = d_pre.dot(&model.w);
        for (bi, seq) in seqs.iter().enumerate() {
            if t <= seq.true_length {
                let idx = seq.indices[t - 1] as usize;
                let mut dst = d_embedding.row_mut(idx);
                for x in 0..e {
                    dst[x] += d_z[[bi, x]];
                }
                for j in 0..H {
                    d_h_prev[[bi, j]] += d_z[[bi, e + j]];
                }
            }
        }
        d_h = d_h_prev;
        d_c = d_c_prev;
    }

    vec![
        d_embedding.iter().copied().collect(),
        d_w.iter().copied().collect(),
        d_b.to_vec(),
        d_out_w.iter().copied().collect(),
        d_out_b.to_vec(),
    ]
}

/// Trains the char-LSTM with minibatch Adam and final-state dropout drawn
/// from the run seed; deterministic for a fixed seed.
pub fn train_charlstm(
    train: &[LabeledName],
    vocab: &CharVocabulary,
    config: &TrainConfig,
    options: &CharModelOptions,
) -> Result<Trained<CharLstmModel>> {
    config.validate()?;
    let labels: Vec<ClassId> = train.iter().map(|l| l.label).collect();
    check_both_labels(&labels)?;

    let seqs: Vec<CharSequence> = train
        .iter()
        .map(|l| encode_chars(&l.name, vocab, options.max_len))
        .collect();
    let weights = example_weights(&labels, config.class_weighting);
    let (train_idx, val_idx) =
        train_val_indices(train.len(), config.validation_fraction, config.seed);

    let mut model = CharLstmModel::init(vocab.clone(), options, config.seed)?;
    let sizes: Vec<usize> = (0..5).map(|t| model.tensor(t).len()).collect();
    let mut adam = Adam::new(config, &sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xd20b_0a5e_ed00_0003);
    let mut stopper = EarlyStop::new(config.early_stop_patience);
    let mut metrics = TrainMetrics::default();
    let mut best = model.snapshot();
    let keep = 1.0 - LSTM_DROPOUT;

    let gather = |idx: &[usize], of: &[CharSequence]| -> Vec<CharSequence> {
        idx.iter().map(|&i| of[i].clone()).collect()
    };
    let subset_loss = |model: &CharLstmModel, idx: &[usize]| -> f64 {
        if idx.is_empty() {
            return f64::NAN;
        }
        let s = gather(idx, &seqs);
        let l: Vec<ClassId> = idx.iter().map(|&i| labels[i]).collect();
        let w: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
        lstm_loss(model, &s, &l, &w, None)
    };

    for epoch in 1..=config.epochs {
        for batch in epoch_batches(train_idx.len(), config.batch_size, &mut rng) {
            let ids: Vec<usize> = batch.iter().map(|&slot| train_idx[slot]).collect();
            let s = gather(&ids, &seqs);
            let l: Vec<ClassId> = ids.iter().map(|&i| labels[i]).collect();
            let w: Vec<f64> = ids.iter().map(|&i| weights[i]).collect();
            let mask = Array2::from_shape_fn((ids.len(), H), |_| {
                if dropout_rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            let cache = model.forward(&s, Some(&mask));
            let grads = lstm_grads(&model, &s, &l, &w, &cache, Some(&mask));
            adam.begin_step();
            for (slot, grad) in grads.iter().enumerate() {
                adam.update(slot, model.tensor_mut(slot), grad);
            }
        }

        let train_loss = subset_loss(&model, &train_idx);
        let val_loss = if val_idx.is_empty() {
            train_loss
        } else {
            subset_loss(&model, &val_idx)
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
    metrics.final_train_loss = subset_loss(&model, &train_idx);
    metrics.final_val_loss = if val_idx.is_empty() {
        metrics.final_train_loss
    } else {
        subset_loss(&model, &val_idx)
    };

    Ok(Trained {
        model,
        metrics,
        label_prior: label_prior(&labels),
    })
}
