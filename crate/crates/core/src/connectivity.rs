//! 4-connected component labeling and small-region merging.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::partition::SuperpixelPartition;

/// Labels 4-connected runs of equal raw labels. Component ids follow row-major first appearance.
pub fn connected_components(height: usize, width: usize, raw_labels: &[u32]) -> (Vec<usize>, usize) {
    const UNSEEN: usize = usize::MAX;
    let mut comp = vec![UNSEEN; raw_labels.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..raw_labels.len() {
        if comp[start] != UNSEEN {
            continue;
        }
        let label = raw_labels[start];
        comp[start] = count;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for q in neighbors4(p, height, width) {
                if comp[q] == UNSEEN && raw_labels[q] == label {
                    comp[q] = count;
                    queue.push_back(q);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

pub(crate) fn neighbors4(p: usize, height: usize, width: usize) -> impl Iterator<Item = usize> {
    let (y, x) = (p / width, p % width);
    let up = (y > 0).then(|| p - width);
    let down = (y + 1 < height).then(|| p + width);
    let left = (x > 0).then(|| p - 1);
    let right = (x + 1 < width).then(|| p + 1);
    [up, left, right, down].into_iter().flatten()
}

/// Splits every label into its 4-connected components, then merges components smaller than
/// `min_size` into the neighbor sharing the longest border (ties go to the smaller id).
pub fn enforce_connectivity(
    height: usize,
    width: usize,
    raw_labels: &[u32],
    min_size: usize,
) -> Result<SuperpixelPartition> {
    if height == 0 || width == 0 || raw_labels.len() != height * width {
        return Err(Error::invalid(format!(
            "raw label grid {}x{} needs {} entries, got {}",
            height,
            width,
            height * width,
            raw_labels.len()
        )));
    }
    let (mut owner, count) = connected_components(height, width, raw_labels);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (p, &c) in owner.iter().enumerate() {
        members[c].push(p);
    }
    let mut alive = vec![true; count];
    let mut border = vec![0usize; count];
    let mut touched = Vec::new();

    let mut changed = true;
    while changed {
        changed = false;
        for g in 0..count {
            if !alive[g] || members[g].len() >= min_size {
                continue;
            }
            for &p in &members[g] {
                for q in neighbors4(p, height, width) {
                    let o = owner[q];
                    if o != g {
                        if border[o] == 0 {
                            touched.push(o);
                        }
                        border[o] += 1;
                    }
                }
            }
            let target = touched
                .iter()
                .copied()
                .max_by(|&a, &b| border[a].cmp(&border[b]).then(b.cmp(&a)));
            for &t in &touched {
                border[t] = 0;
            }
            touched.clear();
            let Some(target) = target else { continue };

            let moved = std::mem::take(&mut members[g]);
            for &p in &moved {
                owner[p] = target;
            }
            members[target].extend(moved);
            alive[g] = false;
            changed = true;
        }
    }

    let labels: Vec<u32> = owner.into_iter().map(|o| o as u32).collect();
    SuperpixelPartition::relabel_contiguous(height, width, &labels)
}
