//! Variable-length batching.
//!
//! A batch of feature sequences moves through three representations:
//!
//! 1. [`PaddedBatch`]: `B × T_max × D`, zero beyond each sequence's length.
//! 2. Sorted [`PaddedBatch`]: rows reordered by decreasing length.
//! 3. [`PackedBatch`]: only real frames, laid out column by column (all
//!    sequences' frame 0, then all frame 1, ...) together with the number of
//!    still-active sequences at each timestep.
//!
//! Because lengths are non-increasing after sorting, the sequences active at
//! timestep `t` are always a prefix `0..batch_sizes[t]` of the sorted batch,
//! so each timestep is a contiguous block of rows in the packed matrix.

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// One video's per-frame feature vectors and its label (0 benign, 1 malignant).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub video_id: String,
    pub label: usize,
    pub frames: Matrix,
}

impl FeatureSequence {
    pub fn new(video_id: impl Into<String>, label: usize, frames: Matrix) -> Self {
        FeatureSequence {
            video_id: video_id.into(),
            label,
            frames,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaddedBatch {
    data: Vec<f64>,
    lengths: Vec<usize>,
    max_len: usize,
    dim: usize,
}

impl PaddedBatch {
    /// Wraps a raw `B × T_max × D` buffer. Entries past each length must be
    /// zero; this is checked.
    pub fn new(data: Vec<f64>, lengths: Vec<usize>, dim: usize) -> Result<Self> {
        let max_len = lengths.iter().copied().max().unwrap_or(0);
        if data.len() != lengths.len() * max_len * dim {
            return Err(Error::Shape {
                op: "padded batch",
                left: (lengths.len(), max_len * dim),
                right: (data.len(), 1),
            });
        }
        if let Some(i) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::CorruptBatch(format!("sequence {i} has length 0")));
        }
        let batch = PaddedBatch {
            data,
            lengths,
            max_len,
            dim,
        };
        for (i, &len) in batch.lengths.iter().enumerate() {
            for t in len..max_len {
                if batch.frame(i, t).iter().any(|&x| x != 0.0) {
                    return Err(Error::CorruptBatch(format!(
                        "sequence {i} has non-zero padding at t={t}"
                    )));
                }
            }
        }
        Ok(batch)
    }

    /// Zero-pads a set of `T_i × D` matrices into one batch.
    pub fn from_sequences<'a, I>(seqs: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Matrix>,
    {
        let seqs: Vec<&Matrix> = seqs.into_iter().collect();
        let first = seqs.first().ok_or(Error::EmptyInput("batch has no sequences"))?;
        let dim = first.cols();
        let max_len = seqs.iter().map(|m| m.rows()).max().unwrap_or(0);
        let mut data = vec![0.0; seqs.len() * max_len * dim];
        let mut lengths = Vec::with_capacity(seqs.len());
        for (i, m) in seqs.iter().enumerate() {
            if m.cols() != dim {
                return Err(Error::Shape {
                    op: "padded batch",
                    left: first.shape(),
                    right: m.shape(),
                });
            }
            if m.rows() == 0 {
                return Err(Error::EmptyInput("sequence with zero frames"));
            }
            let start = i * max_len * dim;
            data[start..start + m.rows() * dim].copy_from_slice(m.data());
            lengths.push(m.rows());
        }
        Ok(PaddedBatch {
            data,
            lengths,
            max_len,
            dim,
        })
    }

    pub fn batch_len(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, seq: usize, t: usize) -> &[f64] {
        let start = (seq * self.max_len + t) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Mutable access to any position, including padding. Writing into
    /// padding breaks the zero-fill invariant; it exists so callers can
    /// check that packing never reads those positions.
    pub fn frame_mut(&mut self, seq: usize, t: usize) -> &mut [f64] {
        let start = (seq * self.max_len + t) * self.dim;
        &mut self.data[start..start + self.dim]
    }

    /// The valid frames of one sequence as a `len × D` matrix.
    pub fn sequence(&self, seq: usize) -> Matrix {
        let start = seq * self.max_len * self.dim;
        let len = self.lengths[seq];
        Matrix::from_vec(len, self.dim, self.data[start..start + len * self.dim].to_vec())
            .expect("slice sized from lengths")
    }

    fn permuted(&self, order: &[usize]) -> PaddedBatch {
        let stride = self.max_len * self.dim;
        let mut data = Vec::with_capacity(self.data.len());
        let mut lengths = Vec::with_capacity(order.len());
        for &src in order {
            data.extend_from_slice(&self.data[src * stride..(src + 1) * stride]);
            lengths.push(self.lengths[src]);
        }
        PaddedBatch {
            data,
            lengths,
            max_len: self.max_len,
            dim: self.dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PackedBatch {
    data: Matrix,
    batch_sizes: Vec<usize>,
    sort_order: Vec<usize>,
}

impl PackedBatch {
    /// Assembles a packed batch from parts, validating every invariant.
    pub fn from_parts(data: Matrix, batch_sizes: Vec<usize>, sort_order: Vec<usize>) -> Result<Self> {
        let packed = PackedBatch {
            data,
            batch_sizes,
            sort_order,
        };
        packed.validate()?;
        Ok(packed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_sizes.is_empty() {
            return Err(Error::CorruptBatch("no timesteps".into()));
        }
        if self.batch_sizes[0] == 0 {
            return Err(Error::CorruptBatch("first timestep is empty".into()));
        }
        for t in 1..self.batch_sizes.len() {
            if self.batch_sizes[t] > self.batch_sizes[t - 1] || self.batch_sizes[t] == 0 {
                return Err(Error::CorruptBatch(format!(
                    "batch_sizes not non-increasing and positive at t={t}: {:?}",
                    self.batch_sizes
                )));
            }
        }
        let total: usize = self.batch_sizes.iter().sum();
        if total != self.data.rows() {
            return Err(Error::CorruptBatch(format!(
                "batch_sizes sum to {total} but data has {} rows",
                self.data.rows()
            )));
        }
        check_permutation(&self.sort_order, self.batch_sizes[0])
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn batch_sizes(&self) -> &[usize] {
        &self.batch_sizes
    }

    pub fn sort_order(&self) -> &[usize] {
        &self.sort_order
    }

    pub fn batch_len(&self) -> usize {
        self.batch_sizes.first().copied().unwrap_or(0)
    }

    pub fn max_len(&self) -> usize {
        self.batch_sizes.len()
    }

    pub fn total_rows(&self) -> usize {
        self.data.rows()
    }

    /// Row offset of each timestep's block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.batch_sizes.len());
        let mut acc = 0;
        for &bs in &self.batch_sizes {
            offsets.push(acc);
            acc += bs;
        }
        offsets
    }

    /// Lengths of the sorted sequences, recovered from `batch_sizes`.
    pub fn lengths(&self) -> Vec<usize> {
        (0..self.batch_len())
            .map(|i| self.batch_sizes.iter().take_while(|&&bs| bs > i).count())
            .collect()
    }

    /// Same layout, different per-row payload (e.g. hidden states or logits).
    pub fn with_data(&self, data: Matrix) -> Result<PackedBatch> {
        if data.rows() != self.data.rows() {
            return Err(Error::Shape {
                op: "packed with_data",
                left: self.data.shape(),
                right: data.shape(),
            });
        }
        Ok(PackedBatch {
            data,
            batch_sizes: self.batch_sizes.clone(),
            sort_order: self.sort_order.clone(),
        })
    }

    /// Test hook: overwrites the timestep schedule without validation.
    #[doc(hidden)]
    pub fn batch_sizes_mut(&mut self) -> &mut Vec<usize> {
        &mut self.batch_sizes
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "expected {n} entries, found {}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(Error::InvalidPermutation(format!("{order:?}")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Stable sort by decreasing length. The returned order maps sorted position
/// to original index.
pub fn sort_by_length(batch: &PaddedBatch) -> Result<(PaddedBatch, Vec<usize>)> {
    if batch.batch_len() == 0 {
        return Err(Error::EmptyInput("cannot sort an empty batch"));
    }
    let mut order: Vec<usize> = (0..batch.batch_len()).collect();
    order.sort_by(|&a, &b| batch.lengths[b].cmp(&batch.lengths[a]));
    Ok((batch.permuted(&order), order))
}

/// Packs an already sorted batch. The packed batch carries the identity
/// order; use [`pack_padded`] to sort and pack in one go.
pub fn pack(sorted: &PaddedBatch) -> Result<PackedBatch> {
    if sorted.batch_len() == 0 {
        return Err(Error::EmptyInput("cannot pack an empty batch"));
    }
    if let Some(w) = sorted.lengths.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::Unsorted { index: w + 1 });
    }
    let batch_sizes: Vec<usize> = (0..sorted.max_len)
        .map(|t| sorted.lengths.iter().take_while(|&&l| l > t).count())
        .collect();
    let total: usize = batch_sizes.iter().sum();
    let mut data = Vec::with_capacity(total * sorted.dim);
    for (t, &bs) in batch_sizes.iter().enumerate() {
        for i in 0..bs {
            data.extend_from_slice(sorted.frame(i, t));
        }
    }
    Ok(PackedBatch {
        data: Matrix::from_vec(total, sorted.dim, data)?,
        batch_sizes,
        sort_order: (0..sorted.batch_len()).collect(),
    })
}

/// Sorts by length and packs, recording the sort order in the result.
pub fn pack_padded(batch: &PaddedBatch) -> Result<PackedBatch> {
    let (sorted, order) = sort_by_length(batch)?;
    let mut packed = pack(&sorted)?;
    packed.sort_order = order;
    Ok(packed)
}

/// Inverse of [`pack`]: scatters rows back to `B × T_max × D_out` with exact
/// zeros past each length. Rows stay in sorted order.
pub fn unpack(packed: &PackedBatch) -> Result<PaddedBatch> {
    packed.validate()?;
    let b = packed.batch_len();
    let max_len = packed.max_len();
    let dim = packed.data.cols();
    let mut data = vec![0.0; b * max_len * dim];
    let mut row = 0;
    for (t, &bs) in packed.batch_sizes.iter().enumerate() {
        for i in 0..bs {
            let start = (i * max_len + t) * dim;
            data[start..start + dim].copy_from_slice(packed.data.row(row));
            row += 1;
        }
    }
    Ok(PaddedBatch {
        data,
        lengths: packed.lengths(),
        max_len,
        dim,
    })
}

/// Undo a length sort: row `i` of the output is the input row `j` with
/// `sort_order[j] == i`.
pub fn restore_order(batch: &PaddedBatch, sort_order: &[usize]) -> Result<PaddedBatch> {
    check_permutation(sort_order, batch.batch_len())?;
    let mut inverse = vec![0; sort_order.len()];
    for (sorted_pos, &orig) in sort_order.iter().enumerate() {
        inverse[orig] = sorted_pos;
    }
    Ok(batch.permuted(&inverse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar_batch(seqs: &[Vec<f64>]) -> PaddedBatch {
        let mats: Vec<Matrix> = seqs
            .iter()
            .map(|s| Matrix::from_vec(s.len(), 1, s.clone()).unwrap())
            .collect();
        PaddedBatch::from_sequences(&mats).unwrap()
    }

    #[test]
    fn sort_examples() {
        let b = scalar_batch(&[vec![1.0, 2.0], vec![3.0, 4.0, 5.0], vec![6.0]]);
        let (sorted, order) = sort_by_length(&b).unwrap();
        assert_eq!(sorted.lengths(), &[3, 2, 1]);
        assert_eq!(order, vec![1, 0, 2]);

        let b = scalar_batch(&[vec![1.0; 5], vec![2.0; 5], vec![3.0; 5]]);
        let (sorted, order) = sort_by_length(&b).unwrap();
        assert_eq!(order, vec![0, 1, 2]);
        assert_eq!(sorted, b);

        let b = scalar_batch(&[vec![1.0; 4]]);
        assert_eq!(sort_by_length(&b).unwrap().0, b);
    }

    #[test]
    fn sort_rejects_empty_batch() {
        let b = PaddedBatch::new(vec![], vec![], 3).unwrap();
        assert!(matches!(sort_by_length(&b), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn pack_tiles_column_wise() {
        // a = 1,2,3  b = 10,20  c = 100
        let b = scalar_batch(&[vec![1.0, 2.0, 3.0], vec![10.0, 20.0], vec![100.0]]);
        let packed = pack(&b).unwrap();
        assert_eq!(packed.data().data(), &[1.0, 10.0, 100.0, 2.0, 20.0, 3.0]);
        assert_eq!(packed.batch_sizes(), &[3, 2, 1]);
    }

    #[test]
    fn pack_single_and_equal_lengths() {
        let b = scalar_batch(&[vec![4.0, 5.0, 6.0, 7.0]]);
        let packed = pack(&b).unwrap();
        assert_eq!(packed.data().data(), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(packed.batch_sizes(), &[1, 1, 1, 1]);

        let b = scalar_batch(&[vec![1.0; 3], vec![2.0; 3]]);
        let packed = pack(&b).unwrap();
        assert_eq!(packed.batch_sizes(), &[2, 2, 2]);
        assert_eq!(packed.total_rows(), 6);
    }

    #[test]
    fn pack_rejects_unsorted() {
        let b = scalar_batch(&[vec![1.0], vec![1.0, 2.0]]);
        assert!(matches!(pack(&b), Err(Error::Unsorted { index: 1 })));
    }

    #[test]
    fn unpack_zero_fills() {
        let b = scalar_batch(&[vec![1.0, 2.0, 3.0], vec![9.0]]);
        let un = unpack(&pack(&b).unwrap()).unwrap();
        assert_eq!(un.frame(1, 1), &[0.0]);
        assert_eq!(un.frame(1, 2), &[0.0]);
        assert_eq!(un, b);

        let single = scalar_batch(&[vec![1.0, 2.0]]);
        assert_eq!(unpack(&pack(&single).unwrap()).unwrap(), single);
    }

    #[test]
    fn unpack_detects_corruption() {
        let b = scalar_batch(&[vec![1.0, 2.0, 3.0], vec![9.0]]);
        let mut packed = pack(&b).unwrap();
        packed.batch_sizes_mut()[1] = 2;
        assert!(matches!(unpack(&packed), Err(Error::CorruptBatch(_))));
    }

    #[test]
    fn restore_order_examples() {
        let b = scalar_batch(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert_eq!(restore_order(&b, &[0, 1, 2]).unwrap(), b);
        let restored = restore_order(&b, &[1, 0, 2]).unwrap();
        assert_eq!(restored.data(), &[1.0, 0.0, 2.0]);
        assert!(matches!(
            restore_order(&b, &[0, 0, 2]),
            Err(Error::InvalidPermutation(_))
        ));
    }

    #[test]
    fn padded_batch_rejects_dirty_padding() {
        assert!(PaddedBatch::new(vec![1.0, 2.0, 3.0, 4.0], vec![2, 1], 1).is_err());
        assert!(PaddedBatch::new(vec![1.0, 2.0, 3.0, 0.0], vec![2, 1], 1).is_ok());
    }

    fn arb_batch() -> impl Strategy<Value = PaddedBatch> {
        (1usize..6, 1usize..4).prop_flat_map(|(b, d)| {
            proptest::collection::vec(1usize..8, b).prop_flat_map(move |lengths| {
                let total: usize = lengths.iter().sum::<usize>() * d;
                let lengths2 = lengths.clone();
                proptest::collection::vec(-10.0f64..10.0, total).prop_map(move |vals| {
                    let mut it = vals.into_iter();
                    let mats: Vec<Matrix> = lengths2
                        .iter()
                        .map(|&l| Matrix::from_vec(l, d, it.by_ref().take(l * d).collect()).unwrap())
                        .collect();
                    PaddedBatch::from_sequences(&mats).unwrap()
                })
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(b in arb_batch()) {
            let packed = pack_padded(&b).unwrap();
            let restored = restore_order(&unpack(&packed).unwrap(), packed.sort_order()).unwrap();
            prop_assert_eq!(restored, b);
        }

        #[test]
        fn batch_sizes_count_and_monotone(b in arb_batch()) {
            let packed = pack_padded(&b).unwrap();
            let bs = packed.batch_sizes();
            prop_assert_eq!(bs.iter().sum::<usize>(), b.lengths().iter().sum::<usize>());
            prop_assert!(bs.windows(2).all(|w| w[0] >= w[1]));
            for (t, &n) in bs.iter().enumerate() {
                prop_assert_eq!(n, b.lengths().iter().filter(|&&l| l > t).count());
            }
            let full = b.batch_len() * b.max_len();
            let all_equal = b.lengths().iter().all(|&l| l == b.max_len());
            prop_assert!(packed.total_rows() <= full);
            prop_assert_eq!(packed.total_rows() == full, all_equal);
        }
    }
}
