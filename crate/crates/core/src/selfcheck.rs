//! Randomized consistency checks behind the `packcheck` command: packed
//! forward against per-sequence stepping, and full-model gradients against
//! central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::classifier::Model;
use crate::error::{Error, Result};
use crate::lstm::{cell_forward, forward_packed, LstmState};
use crate::numeric::Matrix;
use crate::packed::{pack_padded, FeatureSequence, PackedBatch, PaddedBatch};
use crate::training::batch_gradient;

pub const FORWARD_TOLERANCE: f64 = 1e-10;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckSizes {
    pub max_batch: usize,
    pub max_len: usize,
    pub max_dim: usize,
    pub max_hidden: usize,
}

impl Default for CheckSizes {
    fn default() -> Self {
        CheckSizes {
            max_batch: 8,
            max_len: 10,
            max_dim: 8,
            max_hidden: 6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub forward_trials: usize,
    pub gradient_trials: usize,
    pub max_forward_deviation: f64,
    pub max_gradient_rel_error: f64,
    pub passed: bool,
}

pub fn random_sequences<R: Rng + ?Sized>(rng: &mut R, batch: usize, max_len: usize, dim: usize) -> Vec<FeatureSequence> {
    (0..batch)
        .map(|i| {
            let len = rng.random_range(1..=max_len);
            let data = (0..len * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            FeatureSequence::new(
                format!("s{i}"),
                rng.random_range(0..2),
                Matrix::from_vec(len, dim, data).expect("sized"),
            )
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn sequential_forward(model: &Model, seq: &Matrix) -> Result<Matrix> {
    let hs = model.hidden_size();
    let mut state = LstmState::zeros(1, hs);
    let mut out = Matrix::zeros(seq.rows(), hs);
    for t in 0..seq.rows() {
        let x = Matrix::from_vec(1, seq.cols(), seq.row(t).to_vec())?;
        state = cell_forward(&model.lstm, &x, &state)?;
        out.row_mut(t).copy_from_slice(state.h.row(0));
    }
    Ok(out)
}

/// Largest relative deviation between a packed forward and stepping each
/// sequence on its own. `tamper` may alter the packed batch first.
pub fn forward_deviation(
    model: &Model,
    seqs: &[FeatureSequence],
    tamper: impl FnOnce(&mut PackedBatch),
) -> Result<f64> {
    let mut packed = pack_padded(&PaddedBatch::from_sequences(seqs.iter().map(|s| &s.frames))?)?;
    tamper(&mut packed);
    let out = forward_packed(&model.lstm, &packed, &LstmState::zeros(packed.batch_len(), model.hidden_size()))?;
    let offsets = out.offsets();
    let mut worst = 0.0f64;
    for (pos, &orig) in packed.sort_order().iter().enumerate() {
        let want = sequential_forward(model, &seqs[orig].frames)?;
        for t in 0..want.rows() {
            for (g, w) in out.data().row(offsets[t] + pos).iter().zip(want.row(t)) {
                worst = worst.max(relative_error(*g, *w));
            }
        }
    }
    Ok(worst)
}

/// Working precision of the reference loss, in bits.
const WIDE_BITS: usize = 128;
const RM: RoundingMode = RoundingMode::ToEven;

/// Reference loss evaluator in extended precision. Parameters are kept
/// flattened in checkpoint order so single entries can be nudged exactly.
struct WideModel {
    dim: usize,
    hidden: usize,
    classes: usize,
    tensors: [Vec<BigFloat>; 5],
    consts: Consts,
}

impl WideModel {
    fn new(model: &Model) -> Result<Self> {
        let t = model.tensors();
        let widen = |v: &[f64]| v.iter().map(|&x| wide(x)).collect::<Vec<_>>();
        Ok(WideModel {
            dim: model.input_size(),
            hidden: model.hidden_size(),
            classes: model.head.classes(),
            tensors: [widen(t[0]), widen(t[1]), widen(t[2]), widen(t[3]), widen(t[4])],
            consts: Consts::new().map_err(|e| Error::InvalidConfig(format!("extended precision: {e:?}")))?,
        })
    }

    fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(WIDE_BITS, RM, &mut self.consts)
    }

    fn sigmoid(&mut self, z: &BigFloat) -> BigFloat {
        let e = self.exp(&z.neg());
        wide(1.0).div(&e.add(&wide(1.0), WIDE_BITS, RM), WIDE_BITS, RM)
    }

    fn tanh(&mut self, z: &BigFloat) -> BigFloat {
        z.tanh(WIDE_BITS, RM, &mut self.consts)
    }

    /// Mean per-frame cross-entropy, stepping each sequence on its own.
    fn loss(&mut self, seqs: &[FeatureSequence]) -> BigFloat {
        let (d, h) = (self.dim, self.hidden);
        let mul = |a: &BigFloat, b: &BigFloat| a.mul(b, WIDE_BITS, RM);
        let add = |a: &BigFloat, b: &BigFloat| a.add(b, WIDE_BITS, RM);
        let mut total = wide(0.0);
        let mut frames = 0usize;
        for s in seqs {
            let (mut hs, mut cs) = (vec![wide(0.0); h], vec![wide(0.0); h]);
            for t in 0..s.frames.rows() {
                let x: Vec<BigFloat> = s.frames.row(t).iter().map(|&v| wide(v)).collect();
                let [w_ih, w_hh, bias, _, _] = &self.tensors;
                let z: Vec<BigFloat> = (0..4 * h)
                    .map(|r| {
                        let mut acc = bias[r].clone();
                        for k in 0..d {
                            acc = add(&acc, &mul(&w_ih[r * d + k], &x[k]));
                        }
                        for k in 0..h {
                            acc = add(&acc, &mul(&w_hh[r * h + k], &hs[k]));
                        }
                        acc
                    })
                    .collect();
                for j in 0..h {
                    let i = self.sigmoid(&z[j]);
                    let f = self.sigmoid(&z[h + j]);
                    let g = self.tanh(&z[2 * h + j]);
                    let o = self.sigmoid(&z[3 * h + j]);
                    cs[j] = add(&mul(&f, &cs[j]), &mul(&i, &g));
                    hs[j] = mul(&o, &self.tanh(&cs[j]));
                }
                let [_, _, _, w_out, b_out] = &self.tensors;
                let logits: Vec<BigFloat> = (0..self.classes)
                    .map(|c| (0..h).fold(b_out[c].clone(), |acc, k| add(&acc, &mul(&w_out[c * h + k], &hs[k]))))
                    .collect();
                let mut sum = wide(0.0);
                for l in &logits {
                    let shifted = l.sub(&logits[s.label], WIDE_BITS, RM);
                    sum = add(&sum, &self.exp(&shifted));
                }
                // −log softmax_y = log Σ exp(l − l_y)
                total = add(&total, &sum.ln(WIDE_BITS, RM, &mut self.consts));
                frames += 1;
            }
        }
        total.div(&wide(frames as f64), WIDE_BITS, RM)
    }
}

fn wide(x: f64) -> BigFloat {
    BigFloat::from_f64(x, WIDE_BITS)
}

fn narrow(x: &BigFloat, consts: &mut Consts) -> f64 {
    x.format(Radix::Dec, RM, consts)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN)
}

/// Largest relative error between analytic gradients of the mean per-frame
/// cross-entropy and central finite differences, over every parameter.
///
/// The reference loss is evaluated at 128-bit precision by a plain
/// per-sequence loop, so the difference quotient carries no f64 cancellation
/// noise even for tiny gradients.
pub fn gradient_rel_error(model: &Model, seqs: &[FeatureSequence]) -> Result<f64> {
    gradient_rel_error_with_step(model, seqs, FD_STEP)
}

pub fn gradient_rel_error_with_step(model: &Model, seqs: &[FeatureSequence], step: f64) -> Result<f64> {
    let refs: Vec<&FeatureSequence> = seqs.iter().collect();
    let analytic = batch_gradient(model, &refs)?;
    let step = wide(step);
    let two_step = step.mul(&wide(2.0), WIDE_BITS, RM);
    let mut reference = WideModel::new(model)?;
    let mut worst = 0.0f64;
    let grads = analytic.grads.tensors();
    for (ti, grad) in grads.iter().enumerate() {
        for k in 0..grad.len() {
            let orig = reference.tensors[ti][k].clone();
            reference.tensors[ti][k] = orig.add(&step, WIDE_BITS, RM);
            let plus = reference.loss(seqs);
            reference.tensors[ti][k] = orig.sub(&step, WIDE_BITS, RM);
            let minus = reference.loss(seqs);
            reference.tensors[ti][k] = orig;
            let quotient = plus.sub(&minus, WIDE_BITS, RM).div(&two_step, WIDE_BITS, RM);
            let numeric = narrow(&quotient, &mut reference.consts);
            worst = worst.max(relative_error(grad[k], numeric));
        }
    }
    Ok(worst)
}

pub fn run(
    sizes: CheckSizes,
    forward_trials: usize,
    gradient_trials: usize,
    seed: u64,
    corrupt_batch_sizes: bool,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_fwd = 0.0f64;
    let mut failed = false;
    for _ in 0..forward_trials {
        let b = rng.random_range(1..=sizes.max_batch);
        let d = rng.random_range(1..=sizes.max_dim);
        let h = rng.random_range(1..=sizes.max_hidden);
        let model = Model::init(d, h, &mut rng);
        let seqs = random_sequences(&mut rng, b, sizes.max_len, d);
        let dev = forward_deviation(&model, &seqs, |p| {
            if corrupt_batch_sizes {
                let bs = p.batch_sizes_mut();
                let last = bs.len() - 1;
                bs[last] += 1;
            }
        });
        match dev {
            Ok(dev) => max_fwd = max_fwd.max(dev),
            Err(_) => {
                failed = true;
                max_fwd = f64::INFINITY;
            }
        }
    }
    let mut max_grad = 0.0f64;
    for _ in 0..gradient_trials {
        let b = rng.random_range(1..=sizes.max_batch.min(3));
        let d = rng.random_range(1..=sizes.max_dim.min(4));
        let h = rng.random_range(1..=sizes.max_hidden.min(3));
        let model = Model::init(d, h, &mut rng);
        let seqs = random_sequences(&mut rng, b, sizes.max_len.min(4), d);
        max_grad = max_grad.max(gradient_rel_error(&model, &seqs)?);
    }
    let passed = !failed && max_fwd < FORWARD_TOLERANCE && max_grad < GRADIENT_TOLERANCE;
    Ok(CheckReport {
        forward_trials,
        gradient_trials,
        max_forward_deviation: max_fwd,
        max_gradient_rel_error: max_grad,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let r = run(CheckSizes::default(), 20, 3, 1, false).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_forward_deviation < FORWARD_TOLERANCE);
    }

    #[test]
    fn corrupted_batch_sizes_fail() {
        let r = run(CheckSizes::default(), 5, 0, 1, true).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn single_sequence_batches_pass() {
        let sizes = CheckSizes {
            max_batch: 1,
            ..CheckSizes::default()
        };
        assert!(run(sizes, 10, 2, 4, false).unwrap().passed);
    }
}
