//! Binary model checkpoints.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "VLSTMCKP"
//! 8       1     format version (1)
//! 9       8     input size D          (u64 LE)
//! 17      8     hidden size H         (u64 LE)
//! 25      8     classes C             (u64 LE)
//! 33      8     fold index            (u64 LE)
//! 41      8     epoch                 (u64 LE)
//! 49      8     config fingerprint    (u64 LE)
//! 57      8     best val accuracy     (f64 LE)
//! 65      ...   W_ih, W_hh, b, W_head, b_head as f64 LE, row-major
//! ```

use std::fs;
use std::path::Path;

use crate::classifier::{Model, NUM_CLASSES};
use crate::error::{CheckpointError, Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"VLSTMCKP";
pub const CHECKPOINT_VERSION: u8 = 1;
const HEADER_LEN: usize = 65;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub config_fingerprint: u64,
    pub fold_index: usize,
    pub best_val_accuracy: f64,
    pub epoch: usize,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.num_params());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.push(CHECKPOINT_VERSION);
        for v in [
            m.input_size(),
            m.hidden_size(),
            m.head.classes(),
            self.fold_index,
            self.epoch,
        ] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.config_fingerprint.to_le_bytes());
        out.extend_from_slice(&self.best_val_accuracy.to_le_bytes());
        for t in m.tensors() {
            for w in t {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, CheckpointError> {
        if bytes.len() < 9 || bytes[..8] != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes[8] != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(bytes[8]));
        }
        if bytes.len() < HEADER_LEN {
            return Err(CheckpointError::Length {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let word = |i: usize| {
            let at = 9 + 8 * i;
            u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
        };
        let (input, hidden, classes) = (word(0), word(1), word(2));
        if classes != NUM_CLASSES as u64 {
            return Err(CheckpointError::Dimension(format!(
                "expected {NUM_CLASSES} classes, found {classes}"
            )));
        }
        if input == 0 || hidden == 0 {
            return Err(CheckpointError::Dimension(format!(
                "input size {input} and hidden size {hidden} must be positive"
            )));
        }
        let params = (|| {
            let (d, h, c) = (input as usize, hidden as usize, classes as usize);
            let lstm = (4 * h).checked_mul(d.checked_add(h)?.checked_add(1)?)?;
            lstm.checked_add(c.checked_mul(h + 1)?)
        })()
        .ok_or_else(|| CheckpointError::Dimension(format!("input {input} x hidden {hidden} overflows")))?;
        let expected = params
            .checked_mul(8)
            .and_then(|p| p.checked_add(HEADER_LEN))
            .ok_or_else(|| CheckpointError::Dimension("parameter count overflows".into()))?;
        if bytes.len() != expected {
            return Err(CheckpointError::Length {
                expected,
                actual: bytes.len(),
            });
        }

        let mut model = Model::zeros(input as usize, hidden as usize);
        let mut values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        for t in model.tensors_mut() {
            for w in t.iter_mut() {
                *w = values.next().expect("length checked");
            }
        }
        Ok(Checkpoint {
            model,
            fold_index: word(3) as usize,
            epoch: word(4) as usize,
            config_fingerprint: word(5),
            best_val_accuracy: f64::from_bits(word(6)),
        })
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Checkpoint::from_bytes(&bytes)?)
}
