//! Frame-level classification head and video-level aggregation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{forward_packed, LstmParams, LstmState};
use crate::numeric::{argmax, dot, softmax, Matrix};
use crate::packed::{pack_padded, FeatureSequence, PackedBatch, PaddedBatch};

/// Benign and malignant.
pub const NUM_CLASSES: usize = 2;
/// Label treated as positive by every metric.
pub const POSITIVE_CLASS: usize = 1;

/// Affine head mapping an `H`-wide hidden vector to `C` logits.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams {
    /// `C × H`
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(hidden_size: usize, classes: usize) -> Self {
        DenseParams {
            weight: Matrix::zeros(classes, hidden_size),
            bias: vec![0.0; classes],
        }
    }

    pub fn init<R: Rng + ?Sized>(hidden_size: usize, classes: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden_size as f64).sqrt();
        let mut p = Self::zeros(hidden_size, classes);
        for t in p.tensors_mut() {
            for w in t.iter_mut() {
                *w = rng.random_range(-bound..=bound);
            }
        }
        p
    }

    pub fn hidden_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn classes(&self) -> usize {
        self.weight.rows()
    }

    pub fn tensors(&self) -> [&[f64]; 2] {
        [self.weight.data(), &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weight.data_mut(), &mut self.bias]
    }

    fn logits_row(&self, h: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = dot(self.weight.row(c), h) + self.bias[c];
        }
    }
}

/// LSTM plus head: everything a checkpoint stores.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub lstm: LstmParams,
    pub head: DenseParams,
}

impl Model {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Model {
            lstm: LstmParams::zeros(input_size, hidden_size),
            head: DenseParams::zeros(hidden_size, NUM_CLASSES),
        }
    }

    pub fn init<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let lstm = LstmParams::init(input_size, hidden_size, rng);
        let head = DenseParams::init(hidden_size, NUM_CLASSES, rng);
        Model { lstm, head }
    }

    pub fn input_size(&self) -> usize {
        self.lstm.input_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size()
    }

    /// All trainable tensors in checkpoint order: `W_ih, W_hh, b, W_head, b_head`.
    pub fn tensors(&self) -> [&[f64]; 5] {
        let [a, b, c] = self.lstm.tensors();
        let [d, e] = self.head.tensors();
        [a, b, c, d, e]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        let [a, b, c] = self.lstm.tensors_mut();
        let [d, e] = self.head.tensors_mut();
        [a, b, c, d, e]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Affine map applied to every packed row; layout is preserved.
pub fn frame_logits(params: &DenseParams, hidden: &PackedBatch) -> Result<PackedBatch> {
    if hidden.data().cols() != params.hidden_size() || params.bias.len() != params.classes() {
        return Err(Error::Shape {
            op: "frame_logits",
            left: hidden.data().shape(),
            right: params.weight.shape(),
        });
    }
    let n = hidden.total_rows();
    let mut logits = Matrix::zeros(n, params.classes());
    for r in 0..n {
        params.logits_row(hidden.data().row(r), logits.row_mut(r));
    }
    hidden.with_data(logits)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean of per-frame probabilities.
    #[default]
    Average,
    /// Majority vote over per-frame decisions.
    Vote,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Average => "average",
            Aggregation::Vote => "vote",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Aggregation::Average),
            "vote" => Ok(Aggregation::Vote),
            other => Err(Error::InvalidConfig(format!("unknown aggregation {other:?}"))),
        }
    }
}

pub fn aggregate_average(frame_probs: &Matrix) -> Result<Vec<f64>> {
    if frame_probs.rows() == 0 {
        return Err(Error::EmptyInput("video has no frames"));
    }
    let mut mean = vec![0.0; frame_probs.cols()];
    for r in 0..frame_probs.rows() {
        for (m, &p) in mean.iter_mut().zip(frame_probs.row(r)) {
            *m += p;
        }
    }
    let t = frame_probs.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= t);
    Ok(mean)
}

/// Fraction of frames whose argmax is each class.
pub fn aggregate_vote(frame_probs: &Matrix) -> Result<Vec<f64>> {
    if frame_probs.rows() == 0 {
        return Err(Error::EmptyInput("video has no frames"));
    }
    let mut votes = vec![0usize; frame_probs.cols()];
    for r in 0..frame_probs.rows() {
        votes[argmax(frame_probs.row(r))] += 1;
    }
    let t = frame_probs.rows() as f64;
    Ok(votes.into_iter().map(|v| v as f64 / t).collect())
}

pub fn aggregate(frame_probs: &Matrix, rule: Aggregation) -> Result<Vec<f64>> {
    match rule {
        Aggregation::Average => aggregate_average(frame_probs),
        Aggregation::Vote => aggregate_vote(frame_probs),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoPrediction {
    pub video_id: String,
    /// `T × C`, each row a softmax.
    pub frame_probs: Matrix,
    pub video_prob: Vec<f64>,
    pub predicted_class: usize,
    pub true_label: usize,
}

impl VideoPrediction {
    /// Probability assigned to the positive (malignant) class.
    pub fn score(&self) -> f64 {
        self.video_prob[POSITIVE_CLASS]
    }

    pub fn is_correct(&self) -> bool {
        self.predicted_class == self.true_label
    }
}

/// Classifies one video.
pub fn predict_video(model: &Model, seq: &FeatureSequence, rule: Aggregation) -> Result<VideoPrediction> {
    let mut preds = predict_batch(model, std::slice::from_ref(seq), rule)?;
    Ok(preds.remove(0))
}

/// Classifies many videos through a single packed forward. Each sequence's
/// arithmetic is independent of its batch mates, so results are identical to
/// calling [`predict_video`] one by one. Output order matches input order.
pub fn predict_batch(model: &Model, seqs: &[FeatureSequence], rule: Aggregation) -> Result<Vec<VideoPrediction>> {
    if seqs.is_empty() {
        return Ok(Vec::new());
    }
    let padded = PaddedBatch::from_sequences(seqs.iter().map(|s| &s.frames))?;
    let packed = pack_padded(&padded)?;
    let hidden = forward_packed(&model.lstm, &packed, &LstmState::zeros(packed.batch_len(), model.hidden_size()))?;
    let logits = frame_logits(&model.head, &hidden)?;
    let offsets = logits.offsets();
    let lengths = logits.lengths();

    let mut out: Vec<Option<VideoPrediction>> = vec![None; seqs.len()];
    for (sorted_pos, &orig) in packed.sort_order().iter().enumerate() {
        let len = lengths[sorted_pos];
        let mut frame_probs = Matrix::zeros(len, model.head.classes());
        for t in 0..len {
            let p = softmax(logits.data().row(offsets[t] + sorted_pos));
            frame_probs.row_mut(t).copy_from_slice(&p);
        }
        let video_prob = aggregate(&frame_probs, rule)?;
        let seq = &seqs[orig];
        out[orig] = Some(VideoPrediction {
            video_id: seq.video_id.clone(),
            predicted_class: argmax(&video_prob),
            frame_probs,
            video_prob,
            true_label: seq.label,
        });
    }
    Ok(out.into_iter().map(|p| p.expect("sort order is a permutation")).collect())
}
