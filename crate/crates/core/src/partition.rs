//! Superpixel partitions: a label map whose labels are exactly `0..K` plus a census
//! of how many pixels each block holds.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::LabelGrid;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelPartition {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    num_blocks: usize,
    block_sizes: Vec<usize>,
}

/// The first invariant a partition was found to break.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionViolation {
    EmptyGrid,
    LabelCount { expected: usize, actual: usize },
    LabelOutOfRange { pixel: usize, label: u32 },
    UnusedLabel { label: u32 },
    CensusLength { expected: usize, actual: usize },
    BlockSize { label: u32, recorded: usize, counted: usize },
}

impl fmt::Display for PartitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionViolation::EmptyGrid => write!(f, "partition has zero height or width"),
            PartitionViolation::LabelCount { expected, actual } => {
                write!(f, "expected {expected} labels, found {actual}")
            }
            PartitionViolation::LabelOutOfRange { pixel, label } => {
                write!(f, "pixel {pixel} has label {label} outside [0, K)")
            }
            PartitionViolation::UnusedLabel { label } => write!(f, "label {label} is never used"),
            PartitionViolation::CensusLength { expected, actual } => {
                write!(f, "census lists {actual} blocks, K is {expected}")
            }
            PartitionViolation::BlockSize {
                label,
                recorded,
                counted,
            } => write!(f, "block {label} records {recorded} pixels but {counted} carry its label"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(PartitionViolation),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

impl SuperpixelPartition {
    /// Builds a partition from labels already in `0..K`, computing the census.
    pub fn from_labels(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        let num_blocks = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut block_sizes = vec![0usize; num_blocks];
        for &l in &labels {
            block_sizes[l as usize] += 1;
        }
        let partition = SuperpixelPartition {
            height,
            width,
            labels,
            num_blocks,
            block_sizes,
        };
        match partition.validate() {
            Validity::Valid => Ok(partition),
            Validity::Invalid(v) => Err(Error::invalid(format!("invalid partition: {v}"))),
        }
    }

    /// Assembles a partition without checking anything; pair with [`validate`](Self::validate).
    pub fn from_parts_unchecked(
        height: usize,
        width: usize,
        labels: Vec<u32>,
        num_blocks: usize,
        block_sizes: Vec<usize>,
    ) -> Self {
        SuperpixelPartition {
            height,
            width,
            labels,
            num_blocks,
            block_sizes,
        }
    }

    /// Remaps arbitrary identifiers to `0..K` in order of first appearance (row-major).
    pub fn relabel_contiguous(height: usize, width: usize, raw_labels: &[u32]) -> Result<Self> {
        if height == 0 || width == 0 || raw_labels.len() != height * width {
            return Err(Error::invalid(format!(
                "raw label grid {}x{} needs {} entries, got {}",
                height,
                width,
                height * width,
                raw_labels.len()
            )));
        }
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut block_sizes = Vec::new();
        let mut labels = Vec::with_capacity(raw_labels.len());
        for &raw in raw_labels {
            let next = remap.len() as u32;
            let l = *remap.entry(raw).or_insert(next);
            if l as usize == block_sizes.len() {
                block_sizes.push(0);
            }
            block_sizes[l as usize] += 1;
            labels.push(l);
        }
        Ok(SuperpixelPartition {
            height,
            width,
            labels,
            num_blocks: block_sizes.len(),
            block_sizes,
        })
    }

    pub fn validate(&self) -> Validity {
        validate_partition(self)
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn label_at(&self, y: usize, x: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }
}

impl LabelGrid for SuperpixelPartition {
    fn height(&self) -> usize {
        self.height
    }
    fn width(&self) -> usize {
        self.width
    }
    fn labels(&self) -> &[u32] {
        &self.labels
    }
}

/// Checks every partition invariant, reporting the first violation found.
pub fn validate_partition(p: &SuperpixelPartition) -> Validity {
    use PartitionViolation::*;

    if p.height == 0 || p.width == 0 {
        return Validity::Invalid(EmptyGrid);
    }
    let n = p.height * p.width;
    if p.labels.len() != n {
        return Validity::Invalid(LabelCount {
            expected: n,
            actual: p.labels.len(),
        });
    }
    if p.block_sizes.len() != p.num_blocks {
        return Validity::Invalid(CensusLength {
            expected: p.num_blocks,
            actual: p.block_sizes.len(),
        });
    }
    let mut counted = vec![0usize; p.num_blocks];
    for (pixel, &label) in p.labels.iter().enumerate() {
        if label as usize >= p.num_blocks {
            return Validity::Invalid(LabelOutOfRange { pixel, label });
        }
        counted[label as usize] += 1;
    }
    if let Some(label) = counted.iter().position(|&c| c == 0) {
        return Validity::Invalid(UnusedLabel { label: label as u32 });
    }
    for (label, (&recorded, &counted)) in p.block_sizes.iter().zip(&counted).enumerate() {
        if recorded != counted {
            return Validity::Invalid(BlockSize {
                label: label as u32,
                recorded,
                counted,
            });
        }
    }
    Validity::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_two_block_partition_is_valid() {
        let p = SuperpixelPartition::from_parts_unchecked(2, 2, vec![0, 0, 1, 1], 2, vec![2, 2]);
        assert_eq!(p.validate(), Validity::Valid);
    }

    #[test]
    fn unused_label_is_rejected() {
        let p = SuperpixelPartition::from_parts_unchecked(2, 2, vec![0, 0, 2, 2], 3, vec![2, 0, 2]);
        assert_eq!(
            p.validate(),
            Validity::Invalid(PartitionViolation::UnusedLabel { label: 1 })
        );
    }

    #[test]
    fn census_mismatch_is_rejected() {
        let p = SuperpixelPartition::from_parts_unchecked(2, 2, vec![0, 0, 1, 1], 2, vec![3, 1]);
        assert_eq!(
            p.validate(),
            Validity::Invalid(PartitionViolation::BlockSize {
                label: 0,
                recorded: 3,
                counted: 2
            })
        );
    }

    #[test]
    fn out_of_range_names_first_pixel() {
        let p = SuperpixelPartition::from_parts_unchecked(2, 2, vec![0, 5, 1, 7], 2, vec![1, 1]);
        assert_eq!(
            p.validate(),
            Validity::Invalid(PartitionViolation::LabelOutOfRange { pixel: 1, label: 5 })
        );
    }

    #[test]
    fn relabel_first_appearance() {
        let p = SuperpixelPartition::relabel_contiguous(2, 2, &[7, 7, 3, 3]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 1]);
        assert_eq!(p.num_blocks(), 2);

        let p = SuperpixelPartition::relabel_contiguous(2, 2, &[5, 5, 5, 5]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 0, 0]);
        assert_eq!(p.num_blocks(), 1);

        let p = SuperpixelPartition::relabel_contiguous(2, 2, &[1, 2, 2, 1]).unwrap();
        assert_eq!(p.labels(), &[0, 1, 1, 0]);
        assert_eq!(p.block_sizes(), &[2, 2]);
    }

    #[test]
    fn relabel_rejects_bad_grid() {
        assert!(SuperpixelPartition::relabel_contiguous(2, 2, &[0, 1, 2]).is_err());
        assert!(SuperpixelPartition::relabel_contiguous(0, 2, &[]).is_err());
    }

    proptest! {
        #[test]
        fn relabel_is_valid_and_idempotent(
            (h, w, raw) in (1usize..8, 1usize..8)
                .prop_flat_map(|(h, w)| (Just(h), Just(w), proptest::collection::vec(0u32..6, h * w)))
        ) {
            let p = SuperpixelPartition::relabel_contiguous(h, w, &raw).unwrap();
            prop_assert!(p.validate().is_valid());
            let again = SuperpixelPartition::relabel_contiguous(h, w, p.labels()).unwrap();
            prop_assert_eq!(again, p);
        }
    }
}
