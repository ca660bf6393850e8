//! Feature files, dataset manifests, frame sampling, synthetic data and
//! checkpoints.

mod checkpoint;
pub mod npy;
mod synthetic;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use npy::{read_feature_file, write_feature_file, Dtype};
pub use synthetic::{generate_synthetic, write_synthetic, SyntheticConfig};

use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::packed::FeatureSequence;

pub const MANIFEST_FILE: &str = "manifest.csv";

/// One row of `video_id,label,feature_path,num_frames`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub video_id: String,
    pub label: usize,
    pub feature_path: PathBuf,
    pub num_frames: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
    /// Directory relative feature paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.video_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate video_id {}", r.video_id)));
            }
            if r.label > 1 {
                return Err(Error::Manifest(format!("video {} has label {}", r.video_id, r.label)));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        if record.feature_path.is_absolute() {
            record.feature_path.clone()
        } else {
            self.base_dir.join(&record.feature_path)
        }
    }

    pub fn count_label(&self, label: usize) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["video_id", "label", "feature_path", "num_frames"] {
        return Err(Error::Manifest(format!(
            "{}: expected header video_id,label,feature_path,num_frames",
            path.display()
        )));
    }
    let records = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ManifestRecord>, _>>()
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let manifest = DatasetManifest {
        records,
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    manifest.validate()?;
    Ok(manifest)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    for r in &manifest.records {
        writer.serialize(r)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Reads every feature file named by the manifest, checking frame counts.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<Vec<FeatureSequence>> {
    manifest
        .records
        .iter()
        .map(|r| {
            let path = manifest.resolve(r);
            let frames = read_feature_file(&path)?;
            if frames.rows() != r.num_frames {
                return Err(Error::Manifest(format!(
                    "{}: manifest says {} frames, file has {}",
                    path.display(),
                    r.num_frames,
                    frames.rows()
                )));
            }
            Ok(FeatureSequence::new(r.video_id.clone(), r.label, frames))
        })
        .collect()
}

/// `k` evenly spaced frame indices out of `n_total`, both ends included:
/// `round(i·(n−1)/(k−1))`, or `[0]` when `k == 1`.
pub fn uniform_sample_indices(n_total: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n_total {
        return Err(Error::InvalidConfig(format!(
            "cannot sample {k} frames from {n_total}"
        )));
    }
    if k == 1 {
        return Ok(vec![0]);
    }
    // integer round-half-up of i·(n−1)/(k−1)
    let (num, den) = (n_total - 1, k - 1);
    Ok((0..k).map(|i| (2 * i * num + den) / (2 * den)).collect())
}

/// Keeps `k` uniformly sampled frames of a `T × D` matrix.
pub fn sample_frames(frames: &Matrix, k: usize) -> Result<Matrix> {
    let idx = uniform_sample_indices(frames.rows(), k)?;
    let mut out = Matrix::zeros(k, frames.cols());
    for (dst, &src) in idx.iter().enumerate() {
        out.row_mut(dst).copy_from_slice(frames.row(src));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sampling_examples() {
        assert_eq!(uniform_sample_indices(12, 12).unwrap(), (0..12).collect::<Vec<_>>());
        assert_eq!(uniform_sample_indices(30, 1).unwrap(), vec![0]);
        assert_eq!(
            uniform_sample_indices(30, 12).unwrap(),
            vec![0, 3, 5, 8, 11, 13, 16, 18, 21, 24, 26, 29]
        );
        assert!(uniform_sample_indices(5, 6).is_err());
        assert!(uniform_sample_indices(5, 0).is_err());
    }

    #[test]
    fn sampling_matches_float_rounding() {
        for n in 1..60usize {
            for k in 2..=n {
                let got = uniform_sample_indices(n, k).unwrap();
                for (i, &g) in got.iter().enumerate() {
                    let want = (i as f64 * (n - 1) as f64 / (k - 1) as f64).round() as usize;
                    assert_eq!(g, want, "n={n} k={k} i={i}");
                }
            }
        }
    }

    #[test]
    fn sample_frames_picks_rows() {
        let m = Matrix::from_vec(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(sample_frames(&m, 3).unwrap().data(), &[0.0, 2.0, 4.0]);
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let m = DatasetManifest {
            records: vec![
                ManifestRecord {
                    video_id: "a".into(),
                    label: 0,
                    feature_path: "features/a.npy".into(),
                    num_frames: 3,
                },
                ManifestRecord {
                    video_id: "b".into(),
                    label: 1,
                    feature_path: "features/b.npy".into(),
                    num_frames: 1,
                },
            ],
            base_dir: dir.path().to_path_buf(),
        };
        write_manifest(&path, &m).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("video_id,label,feature_path,num_frames\n"));
        assert_eq!(read_manifest(&path).unwrap(), m);

        let mut dup = m.clone();
        dup.records[1].video_id = "a".into();
        assert!(dup.validate().is_err());
        let mut bad_label = m.clone();
        bad_label.records[0].label = 2;
        assert!(bad_label.validate().is_err());
    }

    #[test]
    fn load_dataset_checks_frame_counts() {
        let dir = tempfile::tempdir().unwrap();
        write_feature_file(dir.path().join("a.npy"), &Matrix::zeros(2, 4)).unwrap();
        let mut m = DatasetManifest {
            records: vec![ManifestRecord {
                video_id: "a".into(),
                label: 1,
                feature_path: "a.npy".into(),
                num_frames: 2,
            }],
            base_dir: dir.path().to_path_buf(),
        };
        let ds = load_dataset(&m).unwrap();
        assert_eq!(ds[0].frames.shape(), (2, 4));
        m.records[0].num_frames = 3;
        assert!(matches!(load_dataset(&m), Err(Error::Manifest(_))));
    }

    proptest! {
        #[test]
        fn sampling_invariants(n in 1usize..200, k_frac in 0.0f64..1.0) {
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let idx = uniform_sample_indices(n, k).unwrap();
            prop_assert_eq!(idx.len(), k);
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(idx[0], 0);
            if k >= 2 {
                prop_assert_eq!(*idx.last().unwrap(), n - 1);
            }
        }
    }
}
