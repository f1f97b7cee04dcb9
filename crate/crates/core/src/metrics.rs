//! Segmentation and superpixel quality measures.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::SuperpixelPartition;
use crate::tensor::LabelGrid;

pub const DEFAULT_IGNORE_LABEL: u32 = 255;
pub const DEFAULT_BOUNDARY_TOLERANCE: usize = 2;

/// Square matrix of pixel counts; entry `(g, p)` counts ground truth `g` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        ConfusionMatrix {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.num_classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    /// Accumulates another matrix of the same size (corpus-level evaluation).
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::invalid("cannot merge confusion matrices of different sizes"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

fn check_same_dims(a: &impl LabelGrid, b: &impl LabelGrid) -> Result<()> {
    if (a.height(), a.width()) != (b.height(), b.width()) {
        return Err(Error::invalid(format!(
            "label maps differ in size: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

pub fn confusion_matrix(
    pred: &impl LabelGrid,
    gt: &impl LabelGrid,
    num_classes: usize,
    ignore_label: u32,
) -> Result<ConfusionMatrix> {
    check_same_dims(pred, gt)?;
    let mut m = ConfusionMatrix::zeros(num_classes);
    let w = gt.width();
    for (i, (&p, &g)) in pred.labels().iter().zip(gt.labels()).enumerate() {
        if g == ignore_label {
            continue;
        }
        for (what, v) in [("ground truth", g), ("prediction", p)] {
            if v as usize >= num_classes {
                return Err(Error::invalid(format!(
                    "{what} label {v} at pixel (row {}, col {}) is outside [0, {num_classes})",
                    i / w,
                    i % w
                )));
            }
        }
        m.counts[g as usize * num_classes + p as usize] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IouSummary {
    pub miou: f64,
    /// `None` for classes absent from both prediction and ground truth.
    pub per_class_iou: Vec<Option<f64>>,
}

/// Mean IoU over classes with a non-empty union. With no such class the mean is 0.
pub fn miou(confusion: &ConfusionMatrix) -> IouSummary {
    let n = confusion.num_classes;
    let per_class_iou: Vec<Option<f64>> = (0..n)
        .map(|c| {
            let diag = confusion.get(c, c);
            let row: u64 = (0..n).map(|p| confusion.get(c, p)).sum();
            let col: u64 = (0..n).map(|g| confusion.get(g, c)).sum();
            let union = row + col - diag;
            (union > 0).then(|| diag as f64 / union as f64)
        })
        .collect();
    let present: Vec<f64> = per_class_iou.iter().flatten().copied().collect();
    let miou = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    IouSummary { miou, per_class_iou }
}

pub fn pixel_accuracy(confusion: &ConfusionMatrix) -> f64 {
    match confusion.total() {
        0 => 0.0,
        t => confusion.trace() as f64 / t as f64,
    }
}

/// A pixel is on a boundary when any in-image 4-neighbor carries a different label.
pub fn boundary_mask(labels: &impl LabelGrid) -> Vec<bool> {
    let (h, w) = (labels.height(), labels.width());
    let l = labels.labels();
    let mut mask = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w && l[p] != l[p + 1] {
                mask[p] = true;
                mask[p + 1] = true;
            }
            if y + 1 < h && l[p] != l[p + w] {
                mask[p] = true;
                mask[p + w] = true;
            }
        }
    }
    mask
}

/// Marks every pixel within Chebyshev distance `radius` of a set pixel.
pub fn dilate(mask: &[bool], height: usize, width: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let mut rows = vec![false; mask.len()];
    for y in 0..height {
        let row = &mask[y * width..(y + 1) * width];
        let mut last_set: Option<usize> = None;
        // forward pass: nearest set pixel at or to the left
        for x in 0..width {
            if row[x] {
                last_set = Some(x);
            }
            if last_set.is_some_and(|s| x - s <= radius) {
                rows[y * width + x] = true;
            }
        }
        let mut next_set: Option<usize> = None;
        for x in (0..width).rev() {
            if row[x] {
                next_set = Some(x);
            }
            if next_set.is_some_and(|s| s - x <= radius) {
                rows[y * width + x] = true;
            }
        }
    }
    let mut out = vec![false; mask.len()];
    for x in 0..width {
        let mut last_set: Option<usize> = None;
        for y in 0..height {
            if rows[y * width + x] {
                last_set = Some(y);
            }
            if last_set.is_some_and(|s| y - s <= radius) {
                out[y * width + x] = true;
            }
        }
        let mut next_set: Option<usize> = None;
        for y in (0..height).rev() {
            if rows[y * width + x] {
                next_set = Some(y);
            }
            if next_set.is_some_and(|s| s - y <= radius) {
                out[y * width + x] = true;
            }
        }
    }
    out
}

/// Fraction of `from` pixels lying within `tolerance` of a `to` pixel. Empty `from` gives `None`.
fn matched_fraction(from: &[bool], to: &[bool], height: usize, width: usize, tolerance: usize) -> Option<f64> {
    let total = from.iter().filter(|&&b| b).count();
    if total == 0 {
        return None;
    }
    let reach = dilate(to, height, width, tolerance);
    let hit = from.iter().zip(&reach).filter(|(&f, &r)| f && r).count();
    Some(hit as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryScore {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Class-agnostic boundary precision/recall/F under a Chebyshev matching tolerance.
///
/// Pixels whose ground truth is `ignore_label` are dropped from both boundary masks. When
/// neither map has a boundary the score is perfect; when only one side has boundaries the
/// score is zero.
pub fn boundary_fscore(
    pred: &impl LabelGrid,
    gt: &impl LabelGrid,
    tolerance: usize,
    ignore_label: u32,
) -> Result<BoundaryScore> {
    check_same_dims(pred, gt)?;
    let (h, w) = (gt.height(), gt.width());
    let mut pb = boundary_mask(pred);
    let mut gb = boundary_mask(gt);
    for (i, &g) in gt.labels().iter().enumerate() {
        if g == ignore_label {
            pb[i] = false;
            gb[i] = false;
        }
    }
    let precision = matched_fraction(&pb, &gb, h, w, tolerance);
    let recall = matched_fraction(&gb, &pb, h, w, tolerance);
    let (precision, recall) = match (precision, recall) {
        (None, None) => (1.0, 1.0),
        (p, r) => (p.unwrap_or(0.0), r.unwrap_or(0.0)),
    };
    Ok(BoundaryScore {
        precision,
        recall,
        fscore: harmonic_mean(precision, recall),
    })
}

/// `(1/N) * sum_g sum_{s overlapping g} min(|s ∩ g|, |s \ g|)`.
pub fn undersegmentation_error(partition: &SuperpixelPartition, gt: &impl LabelGrid) -> Result<f64> {
    check_same_dims(partition, gt)?;
    let mut overlap: HashMap<(u32, u32), usize> = HashMap::new();
    for (&s, &g) in partition.labels().iter().zip(gt.labels()) {
        *overlap.entry((s, g)).or_default() += 1;
    }
    let sizes = partition.block_sizes();
    let leak: usize = overlap
        .iter()
        .map(|(&(s, _), &inside)| inside.min(sizes[s as usize] - inside))
        .sum();
    Ok(leak as f64 / partition.labels().len() as f64)
}

/// Fraction of ground-truth boundary pixels within `tolerance` of a superpixel boundary.
/// A ground truth without boundaries has nothing to recall and scores 1.
pub fn spx_boundary_recall(partition: &SuperpixelPartition, gt: &impl LabelGrid, tolerance: usize) -> Result<f64> {
    check_same_dims(partition, gt)?;
    let gb = boundary_mask(gt);
    let sb = boundary_mask(partition);
    Ok(matched_fraction(&gb, &sb, gt.height(), gt.width(), tolerance).unwrap_or(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub miou: f64,
    pub per_class_iou: Vec<Option<f64>>,
    pub pixel_accuracy: f64,
    pub boundary_precision: f64,
    pub boundary_recall: f64,
    pub boundary_fscore: f64,
}

pub fn evaluate(
    pred: &impl LabelGrid,
    gt: &impl LabelGrid,
    num_classes: usize,
    ignore_label: u32,
    tolerance: usize,
) -> Result<MetricsReport> {
    let cm = confusion_matrix(pred, gt, num_classes, ignore_label)?;
    let iou = miou(&cm);
    let b = boundary_fscore(pred, gt, tolerance, ignore_label)?;
    Ok(MetricsReport {
        miou: iou.miou,
        per_class_iou: iou.per_class_iou,
        pixel_accuracy: pixel_accuracy(&cm),
        boundary_precision: b.precision,
        boundary_recall: b.recall,
        boundary_fscore: b.fscore,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpxQualityReport {
    pub undersegmentation_error: f64,
    pub boundary_recall: f64,
    pub num_blocks: usize,
}

pub fn evaluate_superpixels(
    partition: &SuperpixelPartition,
    gt: &impl LabelGrid,
    tolerance: usize,
) -> Result<SpxQualityReport> {
    Ok(SpxQualityReport {
        undersegmentation_error: undersegmentation_error(partition, gt)?,
        boundary_recall: spx_boundary_recall(partition, gt, tolerance)?,
        num_blocks: partition.num_blocks(),
    })
}
