//! Seeded stand-in for a clinical feature dataset.
//!
//! Frame `t` of a video with `T` frames, class sign `s = ±1`:
//!
//! ```text
//! x[t][d] = s·sep/2 + s·(sep/2)·(τ − 1/2)·(−1)^d + noise·N(0, 1),   τ = t/(T−1)
//! ```
//!
//! The first term separates the classes; the second drifts in opposite
//! directions over time for the two classes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{write_feature_file, write_manifest, DatasetManifest, ManifestRecord, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::packed::FeatureSequence;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_benign: usize,
    pub num_malignant: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    pub feature_dim: usize,
    pub class_separation: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    /// 381 benign and 420 malignant videos of 1 to 30 frames, 512 features.
    fn default() -> Self {
        SyntheticConfig {
            num_benign: 381,
            num_malignant: 420,
            min_frames: 1,
            max_frames: 30,
            feature_dim: 512,
            class_separation: 1.0,
            noise_scale: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_frames == 0 || self.max_frames < self.min_frames {
            return Err(Error::InvalidConfig(format!(
                "frame range [{}, {}] is invalid",
                self.min_frames, self.max_frames
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be positive".into()));
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::InvalidConfig("class_separation must be positive".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidConfig("noise_scale must be non-negative".into()));
        }
        Ok(())
    }
}

/// Benign videos first (`benign_0000`, ...), then malignant.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<FeatureSequence>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let half = config.class_separation / 2.0;
    let classes = [(0usize, "benign", config.num_benign), (1, "malignant", config.num_malignant)];
    let mut out = Vec::with_capacity(config.num_benign + config.num_malignant);
    for (label, name, count) in classes {
        let sign = if label == 1 { 1.0 } else { -1.0 };
        for i in 0..count {
            let len = rng.random_range(config.min_frames..=config.max_frames);
            let mut frames = Matrix::zeros(len, config.feature_dim);
            for t in 0..len {
                let tau = if len > 1 { t as f64 / (len - 1) as f64 } else { 0.5 };
                for (d, x) in frames.row_mut(t).iter_mut().enumerate() {
                    let alt = if d % 2 == 0 { 1.0 } else { -1.0 };
                    let noise: f64 = rng.sample(StandardNormal);
                    *x = sign * half + sign * half * (tau - 0.5) * alt + config.noise_scale * noise;
                }
            }
            out.push(FeatureSequence::new(format!("{name}_{i:04}"), label, frames));
        }
    }
    Ok(out)
}

/// Writes `features/<video_id>.npy` and `manifest.csv` under `out_dir`.
/// Feature paths in the manifest are relative to `out_dir`.
pub fn write_synthetic(config: &SyntheticConfig, out_dir: impl AsRef<Path>) -> Result<(DatasetManifest, PathBuf)> {
    let out_dir = out_dir.as_ref();
    let seqs = generate_synthetic(config)?;
    let feature_dir = out_dir.join("features");
    fs::create_dir_all(&feature_dir).map_err(|e| Error::io(&feature_dir, e))?;
    let mut records = Vec::with_capacity(seqs.len());
    for s in &seqs {
        let rel = PathBuf::from("features").join(format!("{}.npy", s.video_id));
        write_feature_file(out_dir.join(&rel), &s.frames)?;
        records.push(ManifestRecord {
            video_id: s.video_id.clone(),
            label: s.label,
            feature_path: rel,
            num_frames: s.len(),
        });
    }
    let manifest = DatasetManifest {
        records,
        base_dir: out_dir.to_path_buf(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    write_manifest(&path, &manifest)?;
    Ok((manifest, path))
}
