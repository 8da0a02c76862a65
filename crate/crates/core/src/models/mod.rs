//! The three classifier families, all trained from scratch with analytic
//! gradients and Adam, plus artifact serialization and an adapter for
//! scoring externally produced predictions.

pub mod charcnn;
pub mod charlstm;
pub mod gradcheck;
pub mod logreg;

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_name, ClassId, LabeledName, Task};
use crate::error::{Error, Result};
use crate::features::{encode_chars, tfidf_transform, CharVocabulary, NgramIndex};

pub use charcnn::{train_charcnn, CharCnnModel, CNN_FILTERS, CNN_KERNEL};
pub use charlstm::{train_charlstm, CharLstmModel, LSTM_DROPOUT, LSTM_HIDDEN};
pub use gradcheck::{check_gradients, GradCheckReport};
pub use logreg::{train_logreg, LinearModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Consecutive epochs without validation improvement before stopping.
    pub early_stop_patience: usize,
    /// Fraction of the training set carved out for validation.
    pub validation_fraction: f64,
    /// Weight examples by inverse class frequency.
    pub class_weighting: bool,
}

impl TrainConfig {
    pub fn logreg(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.003,
            ..TrainConfig::char_model(seed)
        }
    }

    pub fn char_model(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 30,
            batch_size: 256,
            seed,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            early_stop_patience: 3,
            validation_fraction: 0.1,
            class_weighting: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParam("learning rate must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return Err(Error::InvalidParam(
                "validation fraction must be in (0, 0.5)".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParam("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub epoch_losses: Vec<EpochLoss>,
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub final_val_loss: f64,
}

/// Per-tensor Adam state with bias correction; one shared step counter.
pub(crate) struct Adam {
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub(crate) fn new(cfg: &TrainConfig, sizes: &[usize]) -> Self {
        Adam {
            lr: cfg.learning_rate,
            b1: cfg.adam_beta1,
            b2: cfg.adam_beta2,
            eps: cfg.adam_epsilon,
            t: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub(crate) fn begin_step(&mut self) {
        self.t += 1;
    }

    pub(crate) fn update(&mut self, slot: usize, param: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(param.len(), grad.len());
        let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
        let bc1 = 1.0 - self.b1.powi(self.t as i32);
        let bc2 = 1.0 - self.b2.powi(self.t as i32);
        for i in 0..param.len() {
            m[i] = self.b1 * m[i] + (1.0 - self.b1) * grad[i];
            v[i] = self.b2 * v[i] + (1.0 - self.b2) * grad[i] * grad[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Uniform access to a model's trainable tensors as flat slices
/// (row-major). Used by the optimizer driver, parameter snapshots, and
/// gradient checking.
pub trait ParamAccess {
    fn tensor_names(&self) -> Vec<&'static str>;
    fn tensor(&self, slot: usize) -> &[f64];
    fn tensor_mut(&mut self, slot: usize) -> &mut [f64];

    fn snapshot(&self) -> Vec<Vec<f64>> {
        (0..self.tensor_names().len())
            .map(|t| self.tensor(t).to_vec())
            .collect()
    }

    fn restore(&mut self, snapshot: &[Vec<f64>]) {
        for (t, saved) in snapshot.iter().enumerate() {
            self.tensor_mut(t).copy_from_slice(saved);
        }
    }
}

pub(crate) struct EarlyStop {
    patience: usize,
    best: f64,
    pub best_epoch: usize,
    since_best: usize,
}

impl EarlyStop {
    pub(crate) fn new(patience: usize) -> Self {
        EarlyStop {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    /// Records an epoch's monitored loss; returns true when it improved.
    pub(crate) fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub(crate) fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }
}

/// Deterministic validation carve-out: shuffled index split.
pub(crate) fn train_val_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157_3a11_da7a_5eed);
    idx.shuffle(&mut rng);
    let mut n_val = (fraction * n as f64).round() as usize;
    n_val = n_val.min(n.saturating_sub(2));
    let val = idx[..n_val].to_vec();
    let train = idx[n_val..].to_vec();
    (train, val)
}

pub(crate) fn epoch_batches(
    n: usize,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch_size).map(|c| c.to_vec()).collect()
}

/// Per-example weights: all ones, or inverse class frequency when enabled.
pub(crate) fn example_weights(labels: &[ClassId], class_weighting: bool) -> Vec<f64> {
    if !class_weighting {
        return vec![1.0; labels.len()];
    }
    let n1 = labels.iter().filter(|l| l.0 == 1).count() as f64;
    let n0 = labels.len() as f64 - n1;
    let w = [
        labels.len() as f64 / (2.0 * n0.max(1.0)),
        labels.len() as f64 / (2.0 * n1.max(1.0)),
    ];
    labels.iter().map(|l| w[l.index()]).collect()
}

pub(crate) fn check_both_labels(labels: &[ClassId]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let ones = labels.iter().filter(|l| l.0 == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::SingleLabelCorpus);
    }
    Ok(())
}

pub(crate) fn label_prior(labels: &[ClassId]) -> [f64; 2] {
    let n1 = labels.iter().filter(|l| l.0 == 1).count() as f64;
    let n = labels.len() as f64;
    [(n - n1) / n, n1 / n]
}

/// Numerically stable two-class softmax.
pub(crate) fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weighted mean cross-entropy over per-sample class probabilities.
pub(crate) fn mean_ce(probs: &[[f64; 2]], labels: &[ClassId], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        total += -weights[i] * p[labels[i].index()].max(1e-300).ln();
        weight_sum += weights[i];
    }
    total / weight_sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Logreg,
    CharCnn,
    CharLstm,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Logreg => "logreg",
            ModelFamily::CharCnn => "charcnn",
            ModelFamily::CharLstm => "charlstm",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "logreg" | "lr" => Ok(ModelFamily::Logreg),
            "charcnn" | "cnn" => Ok(ModelFamily::CharCnn),
            "charlstm" | "lstm" => Ok(ModelFamily::CharLstm),
            other => Err(Error::Config(format!("unknown model family {other:?}"))),
        }
    }
}

/// A freshly trained model with its training metrics and label priors.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub metrics: TrainMetrics,
    pub label_prior: [f64; 2],
}

impl<M> Trained<M> {
    fn assemble(
        self,
        family: ModelFamily,
        wrap: impl FnOnce(M) -> ModelParams,
        task: Task,
        config: &TrainConfig,
        state_feature: bool,
    ) -> ModelArtifact {
        ModelArtifact {
            family,
            task,
            params: wrap(self.model),
            train_config: config.clone(),
            metrics: self.metrics,
            label_prior: self.label_prior,
            state_feature,
        }
    }
}

impl Trained<LinearModel> {
    pub fn into_artifact(self, task: Task, config: &TrainConfig, state_feature: bool) -> ModelArtifact {
        self.assemble(ModelFamily::Logreg, ModelParams::Logreg, task, config, state_feature)
    }
}

impl Trained<CharCnnModel> {
    pub fn into_artifact(self, task: Task, config: &TrainConfig, state_feature: bool) -> ModelArtifact {
        self.assemble(ModelFamily::CharCnn, ModelParams::CharCnn, task, config, state_feature)
    }
}

impl Trained<CharLstmModel> {
    pub fn into_artifact(self, task: Task, config: &TrainConfig, state_feature: bool) -> ModelArtifact {
        self.assemble(ModelFamily::CharLstm, ModelParams::CharLstm, task, config, state_feature)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Logreg(LinearModel),
    CharCnn(CharCnnModel),
    CharLstm(CharLstmModel),
}

/// Self-describing trained model: parameters, feature space, label order,
/// config and metrics. Loading requires no external state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub family: ModelFamily,
    pub task: Task,
    pub params: ModelParams,
    pub train_config: TrainConfig,
    pub metrics: TrainMetrics,
    /// Class priors on the training set; the majority class backs the
    /// empty-feature fallback.
    pub label_prior: [f64; 2],
    /// True when training inputs had the state code appended.
    pub state_feature: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: ClassId,
    pub probability: f64,
    /// True when the name had no usable features and the training majority
    /// label was used.
    pub fallback: bool,
}

impl ModelArtifact {
    pub fn majority_class(&self) -> ClassId {
        if self.label_prior[1] > self.label_prior[0] {
            ClassId(1)
        } else {
            ClassId(0)
        }
    }

    /// Class probabilities [P(class 0), P(class 1)] for a normalized name,
    /// or None when the name has no usable features.
    fn class_probabilities(&self, name: &str) -> Option<[f64; 2]> {
        match &self.params {
            ModelParams::Logreg(model) => {
                let features = tfidf_transform(name, &model.index);
                if features.is_empty() {
                    return None;
                }
                let p1 = model.probability_class1(&features);
                Some([1.0 - p1, p1])
            }
            ModelParams::CharCnn(model) => {
                let seq = encode_chars(name, &model.vocab, model.max_len);
                if seq.true_length == 0 {
                    return None;
                }
                Some(model.probabilities(&seq))
            }
            ModelParams::CharLstm(model) => {
                let seq = encode_chars(name, &model.vocab, model.max_len);
                if seq.true_length == 0 {
                    return None;
                }
                Some(model.probabilities(&seq))
            }
        }
    }

    /// Predicts the label for a normalized name. Names with no usable
    /// features fall back to the training-set majority label with its
    /// prior as the probability, flagged.
    pub fn predict(&self, name: &str) -> Prediction {
        match self.class_probabilities(name) {
            Some(probs) => {
                let label = if probs[1] > probs[0] { ClassId(1) } else { ClassId(0) };
                Prediction {
                    label,
                    probability: probs[label.index()],
                    fallback: false,
                }
            }
            None => {
                let label = self.majority_class();
                Prediction {
                    label,
                    probability: self.label_prior[label.index()],
                    fallback: true,
                }
            }
        }
    }

    pub fn predict_batch<'a>(
        &self,
        names: impl IntoIterator<Item = &'a str>,
    ) -> Vec<Prediction> {
        names.into_iter().map(|n| self.predict(n)).collect()
    }

    /// Predictions over a labeled set, as a scoreable [`PredictionSet`].
    pub fn predictions_for(&self, names: &[LabeledName]) -> PredictionSet {
        PredictionSet {
            task: self.task,
            source: format!("internal:{}", self.family.name()),
            rows: names
                .iter()
                .map(|ln| {
                    let p = self.predict(&ln.name);
                    PredictionRow {
                        name: ln.name.clone(),
                        label: Some(p.label),
                        probability: Some(p.probability),
                    }
                })
                .collect(),
            duplicate_overwrites: 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Artifact file format: magic, version, JSON header, raw little-endian f64
// parameter blocks.
// ---------------------------------------------------------------------------

const ARTIFACT_MAGIC: &[u8; 4] = b"NFMA";
const ARTIFACT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
enum FamilyMeta {
    Logreg {
        index: NgramIndex,
    },
    CharCnn {
        vocab: CharVocabulary,
        max_len: usize,
        embed_dim: usize,
    },
    CharLstm {
        vocab: CharVocabulary,
        max_len: usize,
        embed_dim: usize,
    },
}

#[derive(Serialize, Deserialize)]
struct ArtifactHeader {
    family: ModelFamily,
    task: Task,
    label_order: [String; 2],
    label_prior: [f64; 2],
    state_feature: bool,
    train_config: TrainConfig,
    metrics: TrainMetrics,
    meta: FamilyMeta,
    /// (tensor name, element count) in file order.
    blocks: Vec<(String, u64)>,
}

fn param_blocks(params: &ModelParams) -> Vec<(&'static str, Vec<f64>)> {
    match params {
        ModelParams::Logreg(m) => vec![
            ("weights", m.weights.clone()),
            ("bias", vec![m.bias]),
        ],
        ModelParams::CharCnn(m) => m.blocks(),
        ModelParams::CharLstm(m) => m.blocks(),
    }
}

pub fn save_model(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    let meta = match &artifact.params {
        ModelParams::Logreg(m) => FamilyMeta::Logreg {
            index: m.index.clone(),
        },
        ModelParams::CharCnn(m) => FamilyMeta::CharCnn {
            vocab: m.vocab.clone(),
            max_len: m.max_len,
            embed_dim: m.embed_dim,
        },
        ModelParams::CharLstm(m) => FamilyMeta::CharLstm {
            vocab: m.vocab.clone(),
            max_len: m.max_len,
            embed_dim: m.embed_dim,
        },
    };
    let blocks = param_blocks(&artifact.params);
    let labels = artifact.task.labels();
    let header = ArtifactHeader {
        family: artifact.family,
        task: artifact.task,
        label_order: [labels[0].to_string(), labels[1].to_string()],
        label_prior: artifact.label_prior,
        state_feature: artifact.state_feature,
        train_config: artifact.train_config.clone(),
        metrics: artifact.metrics.clone(),
        meta,
        blocks: blocks
            .iter()
            .map(|(name, data)| (name.to_string(), data.len() as u64))
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::CorruptArtifact(format!("header encode: {e}")))?;

    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    let io_err = |e: std::io::Error| Error::io(path, e);
    file.write_all(ARTIFACT_MAGIC).map_err(io_err)?;
    file.write_all(&ARTIFACT_VERSION.to_le_bytes()).map_err(io_err)?;
    file.write_all(&(header_bytes.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    file.write_all(&header_bytes).map_err(io_err)?;
    for (_, data) in &blocks {
        for value in data {
            file.write_all(&value.to_le_bytes()).map_err(io_err)?;
        }
    }
    file.flush().map_err(io_err)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelArtifact> {
    let mut file = std::io::BufReader::new(
        std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
    );
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|_| Error::CorruptArtifact("file too short for magic".into()))?;
    if &magic != ARTIFACT_MAGIC {
        return Err(Error::CorruptArtifact("bad magic bytes".into()));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)
        .map_err(|_| Error::CorruptArtifact("missing version".into()))?;
    let version = u32::from_le_bytes(word);
    if version != ARTIFACT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: ARTIFACT_VERSION,
        });
    }
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)
        .map_err(|_| Error::CorruptArtifact("missing header length".into()))?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)
        .map_err(|_| Error::CorruptArtifact("truncated header".into()))?;
    let header: ArtifactHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::CorruptArtifact(format!("header decode: {e}")))?;

    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(header.blocks.len());
    for (name, count) in &header.blocks {
        let mut data = Vec::with_capacity(*count as usize);
        let mut buf = [0u8; 8];
        for _ in 0..*count {
            file.read_exact(&mut buf).map_err(|_| {
                Error::CorruptArtifact(format!("truncated parameter block {name:?}"))
            })?;
            data.push(f64::from_le_bytes(buf));
        }
        blocks.push(data);
    }
    let mut trailing = [0u8; 1];
    if file.read(&mut trailing).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::CorruptArtifact("trailing bytes after blocks".into()));
    }

    let params = match header.meta {
        FamilyMeta::Logreg { index } => {
            LinearModel::from_blocks(index, &blocks).map(ModelParams::Logreg)?
        }
        FamilyMeta::CharCnn {
            vocab,
            max_len,
            embed_dim,
        } => CharCnnModel::from_blocks(vocab, max_len, embed_dim, &blocks)
            .map(ModelParams::CharCnn)?,
        FamilyMeta::CharLstm {
            vocab,
            max_len,
            embed_dim,
        } => CharLstmModel::from_blocks(vocab, max_len, embed_dim, &blocks)
            .map(ModelParams::CharLstm)?,
    };

    Ok(ModelArtifact {
        family: header.family,
        task: header.task,
        params,
        train_config: header.train_config,
        metrics: header.metrics,
        label_prior: header.label_prior,
        state_feature: header.state_feature,
    })
}

// ---------------------------------------------------------------------------
// Prediction sets and import
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub name: String,
    /// None marks an unknown/abstained prediction (API responses only).
    pub label: Option<ClassId>,
    pub probability: Option<f64>,
}

/// Named predictions from one source (an internal model, an imported
/// transformer run, or a commercial API export).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub task: Task,
    pub source: String,
    pub rows: Vec<PredictionRow>,
    /// Duplicate names resolved last-wins during import.
    pub duplicate_overwrites: usize,
}

fn import_rows(
    path: &Path,
    task: Task,
    allow_unknown: bool,
) -> Result<PredictionSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let col_name = headers
        .iter()
        .position(|h| h == "name")
        .ok_or_else(|| Error::Config("prediction file needs a 'name' column".into()))?;
    let col_label = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::Config("prediction file needs a 'label' column".into()))?;
    let col_prob = headers.iter().position(|h| h == "probability");

    let mut by_name: std::collections::BTreeMap<String, (Option<ClassId>, Option<f64>)> =
        std::collections::BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut duplicate_overwrites = 0;

    for (row_index, row) in reader.records().enumerate() {
        let row = row?;
        let raw_name = row.get(col_name).unwrap_or("");
        let name = normalize_name(raw_name);
        let label_text = row.get(col_label).unwrap_or("").trim();
        let label = match task.parse_label(label_text) {
            Some(c) => Some(c),
            None if allow_unknown && label_text.eq_ignore_ascii_case("unknown") => None,
            None => {
                return Err(Error::UnknownLabel {
                    row: row_index,
                    value: label_text.to_string(),
                })
            }
        };
        let probability = col_prob
            .and_then(|i| row.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Data(format!(
                    "row {row_index}: bad probability {s:?}"
                )))
            })
            .transpose()?;
        if let Some(p) = probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Data(format!(
                    "row {row_index}: probability {p} outside [0, 1]"
                )));
            }
        }
        if by_name.insert(name.clone(), (label, probability)).is_some() {
            duplicate_overwrites += 1;
        } else {
            order.push(name);
        }
    }

    Ok(PredictionSet {
        task,
        source: format!("file:{}", path.display()),
        rows: order
            .into_iter()
            .map(|name| {
                let (label, probability) = by_name[&name];
                PredictionRow {
                    name,
                    label,
                    probability,
                }
            })
            .collect(),
        duplicate_overwrites,
    })
}

/// Imports a prediction CSV (columns `name,label[,probability]`). Labels
/// must parse under the task's label set; anything else, including
/// "Unknown", is an error naming the row. Duplicate names resolve
/// last-wins with a warning count.
pub fn import_predictions(path: &Path, gold_task: Task) -> Result<PredictionSet> {
    import_rows(path, gold_task, false)
}

/// Lenient variant for commercial-API exports where "Unknown" is a valid
/// abstention; such rows import with no label and the evaluation policy
/// decides how to score them.
pub fn import_api_predictions(path: &Path, gold_task: Task) -> Result<PredictionSet> {
    import_rows(path, gold_task, true)
}
