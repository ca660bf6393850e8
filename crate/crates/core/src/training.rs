//! Loss, optimizer, epoch loop and stratified k-fold cross-validation.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{frame_logits, predict_batch, Aggregation, DenseParams, Model, VideoPrediction};
use crate::data_io::Checkpoint;
use crate::error::{Error, Result};
use crate::lstm::{backward_packed, forward_packed_cached, LstmState};
use crate::numeric::{log_sum_exp, softmax, Matrix};
use crate::packed::{pack_padded, FeatureSequence, PackedBatch, PaddedBatch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_every: usize,
    pub folds: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    pub hidden_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            epochs: 300,
            batch_size: 32,
            eval_every: 20,
            folds: 5,
            seed: 0,
            aggregation: Aggregation::Average,
            hidden_size: 256,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.hidden_size == 0 {
            return bad("hidden size must be at least 1");
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a hash of every field, stored in checkpoints.
    pub fn fingerprint(&self) -> u64 {
        let canon = format!(
            "lr={:e};epochs={};batch={};eval={};folds={};seed={};agg={};hidden={}",
            self.learning_rate,
            self.epochs,
            self.batch_size,
            self.eval_every,
            self.folds,
            self.seed,
            self.aggregation,
            self.hidden_size
        );
        canon.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// `−z[label] + ln Σ exp(z)` and its gradient `softmax(z) − onehot(label)`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let loss = (log_sum_exp(logits) - logits[label]).max(0.0);
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(sizes: &[usize]) -> Self {
        AdamState {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn for_model(model: &Model) -> Self {
        let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        Self::new(&sizes)
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }
}

/// One bias-corrected Adam update over a list of tensors.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape {
            op: "adam_step tensors",
            left: (params.len(), 1),
            right: (grads.len(), state.m.len()),
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::Shape {
                op: "adam_step tensor",
                left: (p.len(), 1),
                right: (g.len(), state.m[i].len()),
            });
        }
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let corr1 = 1.0 - b1.powf(state.t as f64);
    let corr2 = 1.0 - b2.powf(state.t as f64);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = m[k] / corr1;
            let v_hat = v[k] / corr2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

/// Summed per-frame loss of a batch and the gradient of the mean frame loss.
#[derive(Clone, Debug)]
pub struct BatchGradient {
    pub loss_sum: f64,
    pub frames: usize,
    /// Model-shaped gradient of `loss_sum / frames`.
    pub grads: Model,
    /// Gradient w.r.t. each packed input row of [`BatchGradient::packed`].
    pub input_grads: Matrix,
    pub packed: PackedBatch,
}

fn packed_batch(batch: &[&FeatureSequence]) -> Result<PackedBatch> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch has no sequences"));
    }
    pack_padded(&PaddedBatch::from_sequences(batch.iter().map(|s| &s.frames))?)
}

/// Label of every packed row.
fn row_labels(packed: &PackedBatch, labels: &[usize]) -> Vec<usize> {
    let sorted: Vec<usize> = packed.sort_order().iter().map(|&i| labels[i]).collect();
    packed
        .batch_sizes()
        .iter()
        .flat_map(|&bs| sorted[..bs].iter().copied())
        .collect()
}

/// Forward, per-frame cross-entropy (each frame carries its video's label)
/// and full backward for one batch.
pub fn batch_gradient(model: &Model, batch: &[&FeatureSequence]) -> Result<BatchGradient> {
    let packed = packed_batch(batch)?;
    let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();
    packed_gradient(model, &packed, &labels)
}

/// Same as [`batch_gradient`] for an already packed batch; `labels` are in
/// original (unsorted) batch order.
pub fn packed_gradient(model: &Model, packed: &PackedBatch, labels: &[usize]) -> Result<BatchGradient> {
    let hs = model.hidden_size();
    let fwd = forward_packed_cached(&model.lstm, packed, &LstmState::zeros(packed.batch_len(), hs))?;
    let logits = frame_logits(&model.head, &fwd.output)?;
    let rows = row_labels(packed, labels);
    let n = packed.total_rows();
    let scale = 1.0 / n as f64;

    let mut head_grad = DenseParams::zeros(hs, model.head.classes());
    let mut grad_hidden = Matrix::zeros(n, hs);
    let mut loss_sum = 0.0;
    for (r, &label) in rows.iter().enumerate() {
        let (loss, dlogits) = cross_entropy(logits.data().row(r), label)?;
        loss_sum += loss;
        let h = fwd.output.data().row(r);
        for (c, &dl) in dlogits.iter().enumerate() {
            let dl = dl * scale;
            head_grad.bias[c] += dl;
            for (gw, &hv) in head_grad.weight.row_mut(c).iter_mut().zip(h) {
                *gw += dl * hv;
            }
            for (gh, &w) in grad_hidden.row_mut(r).iter_mut().zip(model.head.weight.row(c)) {
                *gh += dl * w;
            }
        }
    }
    let lstm_grads = backward_packed(&model.lstm, packed, &fwd, &grad_hidden)?;
    Ok(BatchGradient {
        loss_sum,
        frames: n,
        grads: Model {
            lstm: lstm_grads.params,
            head: head_grad,
        },
        input_grads: lstm_grads.inputs,
        packed: packed.clone(),
    })
}

/// Mean per-frame cross-entropy over a dataset, without updating anything.
pub fn evaluate_loss(model: &Model, dataset: &[FeatureSequence], batch_size: usize) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset is empty"));
    }
    let (mut total, mut frames) = (0.0, 0usize);
    for chunk in dataset.chunks(batch_size.max(1)) {
        let refs: Vec<&FeatureSequence> = chunk.iter().collect();
        let packed = packed_batch(&refs)?;
        let labels: Vec<usize> = chunk.iter().map(|s| s.label).collect();
        let fwd = forward_packed_cached(&model.lstm, &packed, &LstmState::zeros(packed.batch_len(), model.hidden_size()))?;
        let logits = frame_logits(&model.head, &fwd.output)?;
        for (r, label) in row_labels(&packed, &labels).into_iter().enumerate() {
            total += cross_entropy(logits.data().row(r), label)?.0;
        }
        frames += packed.total_rows();
    }
    Ok(total / frames as f64)
}

/// Shuffles, batches and takes one Adam step per batch. Returns the mean
/// per-frame loss observed during the epoch.
pub fn train_epoch<R: Rng + ?Sized>(
    model: &mut Model,
    adam: &mut AdamState,
    dataset: &[FeatureSequence],
    config: &TrainConfig,
    rng: &mut R,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset is empty"));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);
    let (mut total, mut frames) = (0.0, 0usize);
    for chunk in order.chunks(config.batch_size.max(1)) {
        let batch: Vec<&FeatureSequence> = chunk.iter().map(|&i| &dataset[i]).collect();
        let bg = batch_gradient(model, &batch)?;
        total += bg.loss_sum;
        frames += bg.frames;
        let grads = bg.grads.tensors();
        adam_step(&mut model.tensors_mut(), &grads, adam, config.learning_rate)?;
    }
    Ok(total / frames as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
}

/// Stratified split: each class is shuffled and dealt round-robin, with the
/// dealing position carried across classes so fold sizes stay within one.
/// Ids inside each list keep dataset order.
pub fn kfold_split(dataset: &[FeatureSequence], folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("folds must be at least 2".into()));
    }
    if dataset.len() < folds {
        return Err(Error::InvalidConfig(format!(
            "dataset of {} videos cannot be split into {folds} folds",
            dataset.len()
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in dataset.iter().enumerate() {
        by_class.entry(s.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; dataset.len()];
    let mut dealt = 0usize;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = dealt % folds;
            dealt += 1;
        }
    }
    Ok((0..folds)
        .map(|k| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| fold_of[i] == k);
            FoldSplit {
                fold_index: k,
                train_ids: train.iter().map(|&i| dataset[i].video_id.clone()).collect(),
                val_ids: val.iter().map(|&i| dataset[i].video_id.clone()).collect(),
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub epoch: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub split: FoldSplit,
    pub best: Checkpoint,
    /// Validation accuracy at every evaluated epoch.
    pub history: Vec<EvalRecord>,
    pub loss_trace: Vec<f64>,
    /// Validation predictions of the retained checkpoint, in `val_ids` order.
    pub predictions: Vec<VideoPrediction>,
}

#[derive(Clone, Debug)]
pub struct CrossValResult {
    pub folds: Vec<FoldOutcome>,
    /// All folds' validation predictions, fold by fold.
    pub pooled: Vec<VideoPrediction>,
}

pub fn accuracy_of(preds: &[VideoPrediction]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds.iter().filter(|p| p.is_correct()).count() as f64 / preds.len() as f64
}

fn check_dataset(dataset: &[FeatureSequence]) -> Result<usize> {
    let first = dataset.first().ok_or(Error::EmptyInput("dataset is empty"))?;
    let dim = first.dim();
    for s in dataset {
        if s.dim() != dim {
            return Err(Error::Shape {
                op: "dataset feature width",
                left: first.frames.shape(),
                right: s.frames.shape(),
            });
        }
        if s.is_empty() {
            return Err(Error::EmptyInput("video has no frames"));
        }
    }
    Ok(dim)
}

/// Trains one fold from a fresh seeded initialization, evaluating every
/// `eval_every` epochs (and after the last epoch) and keeping the most
/// accurate checkpoint; ties keep the earlier one.
pub fn train_fold(dataset: &[FeatureSequence], split: &FoldSplit, config: &TrainConfig) -> Result<FoldOutcome> {
    config.validate()?;
    let dim = check_dataset(dataset)?;
    let index: HashMap<&str, usize> = dataset.iter().enumerate().map(|(i, s)| (s.video_id.as_str(), i)).collect();
    let pick = |ids: &[String]| -> Result<Vec<FeatureSequence>> {
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|&i| dataset[i].clone())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown video id {id}")))
            })
            .collect()
    };
    let train = pick(&split.train_ids)?;
    let val = pick(&split.val_ids)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1 + split.fold_index as u64);
    let mut model = Model::init(dim, config.hidden_size, &mut rng);
    let mut adam = AdamState::for_model(&model);

    let mut history = Vec::new();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(Checkpoint, Vec<VideoPrediction>)> = None;
    for epoch in 1..=config.epochs {
        loss_trace.push(train_epoch(&mut model, &mut adam, &train, config, &mut rng)?);
        if epoch % config.eval_every != 0 && epoch != config.epochs {
            continue;
        }
        let preds = predict_batch(&model, &val, config.aggregation)?;
        let accuracy = accuracy_of(&preds);
        history.push(EvalRecord { epoch, accuracy });
        if best.as_ref().is_none_or(|(b, _)| accuracy > b.best_val_accuracy) {
            best = Some((
                Checkpoint {
                    model: model.clone(),
                    config_fingerprint: config.fingerprint(),
                    fold_index: split.fold_index,
                    best_val_accuracy: accuracy,
                    epoch,
                },
                preds,
            ));
        }
    }
    let (best, predictions) = best.expect("at least one evaluation runs");
    Ok(FoldOutcome {
        split: split.clone(),
        best,
        history,
        loss_trace,
        predictions,
    })
}

/// Full k-fold protocol. `jobs > 1` trains folds on a thread pool; each fold
/// owns its RNG stream so results do not depend on `jobs`.
pub fn train_crossval(dataset: &[FeatureSequence], config: &TrainConfig, jobs: usize) -> Result<CrossValResult> {
    config.validate()?;
    check_dataset(dataset)?;
    let splits = kfold_split(dataset, config.folds, config.seed)?;
    let folds: Vec<FoldOutcome> = if jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| splits.par_iter().map(|s| train_fold(dataset, s, config)).collect::<Result<_>>())?
    } else {
        splits.iter().map(|s| train_fold(dataset, s, config)).collect::<Result<_>>()?
    };
    let pooled = folds.iter().flat_map(|f| f.predictions.iter().cloned()).collect();
    Ok(CrossValResult { folds, pooled })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n_per_class: usize, seed: u64) -> Vec<FeatureSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for label in 0..2 {
            for i in 0..n_per_class {
                let len = rng.random_range(1..5);
                let sign = if label == 1 { 1.0 } else { -1.0 };
                let data = (0..len * 3).map(|_| sign * 0.8 + rng.random_range(-0.2..0.2)).collect();
                out.push(FeatureSequence::new(
                    format!("{label}_{i}"),
                    label,
                    Matrix::from_vec(len, 3, data).unwrap(),
                ));
            }
        }
        out
    }

    #[test]
    fn cross_entropy_examples() {
        let (loss, grad) = cross_entropy(&[0.0, 0.0], 0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);

        let (loss, _) = cross_entropy(&[1.0, 0.0], 0).unwrap();
        assert!((loss - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-15);
        assert!((loss - 0.3132617).abs() < 1e-7);

        let (loss, grad) = cross_entropy(&[50.0, 0.0], 0).unwrap();
        assert!((0.0..=1e-20).contains(&loss));
        assert!(grad.iter().all(|g| g.is_finite()));

        assert!(matches!(
            cross_entropy(&[0.0, 0.0], 2),
            Err(Error::LabelOutOfRange { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let logits: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let label = rng.random_range(0..3);
            let (_, grad) = cross_entropy(&logits, label).unwrap();
            let h = 1e-5;
            for k in 0..3 {
                let mut p = logits.clone();
                p[k] += h;
                let mut m = logits.clone();
                m[k] -= h;
                // direct evaluation of the loss formula as the oracle
                let f = |z: &[f64]| -z[label] + z.iter().map(|v| v.exp()).sum::<f64>().ln();
                let num = (f(&p) - f(&m)) / (2.0 * h);
                assert!((num - grad[k]).abs() < 1e-8, "{num} vs {}", grad[k]);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(&[2]);
        adam_step(&mut [&mut p[..]], &[&[0.0, 0.0][..]], &mut st, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(st.steps(), 1);
    }

    #[test]
    fn adam_first_step() {
        let mut p = [0.0];
        let mut st = AdamState::new(&[1]);
        adam_step(&mut [&mut p[..]], &[&[1.0][..]], &mut st, 0.1).unwrap();
        // m̂ = 1, v̂ = 1 after bias correction
        assert!((p[0] - (-0.1 / (1.0 + 1e-8))).abs() < 1e-15);
        let before = p[0];
        adam_step(&mut [&mut p[..]], &[&[1.0][..]], &mut st, 0.1).unwrap();
        assert!(p[0] < before);
        assert_eq!(st.steps(), 2);
        assert!(st.second_moments()[0][0] >= 0.0);
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut p = [0.0, 1.0];
        let mut st = AdamState::new(&[2]);
        assert!(adam_step(&mut [&mut p[..]], &[&[1.0][..]], &mut st, 0.1).is_err());
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let data = toy_dataset(4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = Model::init(3, 4, &mut rng);
        let before = model.clone();
        let config = TrainConfig {
            learning_rate: 0.0,
            batch_size: 3,
            hidden_size: 4,
            ..TrainConfig::default()
        };
        let mut adam = AdamState::for_model(&model);
        let loss = train_epoch(&mut model, &mut adam, &data, &config, &mut rng).unwrap();
        assert_eq!(model, before);
        let eval = evaluate_loss(&model, &data, 3).unwrap();
        assert!((loss - eval).abs() < 1e-12);
    }

    #[test]
    fn overfits_single_video() {
        let data = toy_dataset(1, 3)[..1].to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = Model::init(3, 4, &mut rng);
        let config = TrainConfig {
            learning_rate: 1e-2,
            hidden_size: 4,
            ..TrainConfig::default()
        };
        let initial = evaluate_loss(&model, &data, 1).unwrap();
        let mut adam = AdamState::for_model(&model);
        for _ in 0..200 {
            train_epoch(&mut model, &mut adam, &data, &config, &mut rng).unwrap();
        }
        assert!(evaluate_loss(&model, &data, 1).unwrap() < initial);
    }

    #[test]
    fn epoch_is_deterministic() {
        let data = toy_dataset(5, 4);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut model = Model::init(3, 4, &mut rng);
            let mut adam = AdamState::for_model(&model);
            let config = TrainConfig {
                learning_rate: 1e-3,
                batch_size: 4,
                hidden_size: 4,
                ..TrainConfig::default()
            };
            (0..5)
                .map(|_| train_epoch(&mut model, &mut adam, &data, &config, &mut rng).unwrap().to_bits())
                .collect::<Vec<u64>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = Model::zeros(3, 2);
        let mut adam = AdamState::for_model(&model);
        assert!(train_epoch(&mut model, &mut adam, &[], &TrainConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn kfold_exact_stratification() {
        let data = toy_dataset(5, 0);
        let splits = kfold_split(&data, 5, 9).unwrap();
        for s in &splits {
            assert_eq!(s.val_ids.len(), 2);
            assert_eq!(s.val_ids.iter().filter(|id| id.starts_with("1_")).count(), 1);
            assert_eq!(s.train_ids.len(), 8);
        }
    }

    #[test]
    fn kfold_leave_one_out_and_too_small() {
        let data = toy_dataset(3, 0);
        let splits = kfold_split(&data, 6, 1).unwrap();
        assert!(splits.iter().all(|s| s.val_ids.len() == 1));
        assert!(kfold_split(&data, 7, 1).is_err());
    }

    #[test]
    fn crossval_plumbing() {
        let data = toy_dataset(2, 5);
        let config = TrainConfig {
            learning_rate: 1e-2,
            epochs: 3,
            eval_every: 2,
            folds: 2,
            hidden_size: 3,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let result = train_crossval(&data, &config, 1).unwrap();
        assert_eq!(result.folds.len(), 2);
        assert_eq!(result.pooled.len(), 4);
        for f in &result.folds {
            // epochs 2 and 3 are evaluated
            assert_eq!(f.history.len(), 2);
            assert!(f.history.iter().all(|h| h.accuracy <= f.best.best_val_accuracy));
        }
        let again = train_crossval(&data, &config, 2).unwrap();
        assert_eq!(result.pooled, again.pooled);
    }

    #[test]
    fn fingerprint_changes_with_config() {
        let a = TrainConfig::default();
        let b = TrainConfig { seed: 1, ..a.clone() };
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }
}
