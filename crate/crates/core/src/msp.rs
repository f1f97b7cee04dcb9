//! Superpixel-guided message passing.
//!
//! A single stage maps a `[C, H, W]` feature map `X` to `X + alpha * P(X)`, where `P`
//! replaces every feature with the mean of its superpixel block (per channel). `P` is a
//! symmetric idempotent projector, so the stage is self-adjoint and its backward pass is the
//! same map applied to the incoming gradient. A cascade runs one stage per scale, from the
//! coarsest partition to the finest, each stage consuming the previous stage's output.

use crate::color::srgb_to_lab;
use crate::config::{validate_alpha, validate_scales, MspConfig};
use crate::error::{Error, Result};
use crate::partition::SuperpixelPartition;
use crate::tensor::{Image, LabelGrid, LabelMap, Tensor};

/// Scalar types the operator runs on. Accumulation always happens in f64.
pub trait Element: Copy {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Element for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Element for f64 {
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f64(v: f64) -> Self {
        v
    }
}

fn check_layout(len: usize, channels: usize, partition: &SuperpixelPartition) -> Result<()> {
    let plane = partition.height() * partition.width();
    if channels == 0 || len != channels * plane {
        return Err(Error::invalid(format!(
            "feature data of length {len} does not match {channels} channels of a {}x{} partition",
            partition.height(),
            partition.width()
        )));
    }
    Ok(())
}

/// Per-(channel, block) means laid out as `[C][K]`, summed in row-major pixel order.
pub fn block_means<T: Element>(data: &[T], channels: usize, partition: &SuperpixelPartition) -> Result<Vec<f64>> {
    check_layout(data.len(), channels, partition)?;
    let k = partition.num_blocks();
    let plane = partition.height() * partition.width();
    let labels = partition.labels();
    let mut sums = vec![0.0f64; channels * k];
    for (c, chan) in data.chunks_exact(plane).enumerate() {
        let slots = &mut sums[c * k..(c + 1) * k];
        for (&l, &v) in labels.iter().zip(chan) {
            slots[l as usize] += v.to_f64();
        }
    }
    for c in 0..channels {
        for (s, &n) in sums[c * k..(c + 1) * k].iter_mut().zip(partition.block_sizes()) {
            *s /= n as f64;
        }
    }
    Ok(sums)
}

/// The block-averaging projector: every entry replaced by its block mean.
pub fn block_mean_map<T: Element>(data: &[T], channels: usize, partition: &SuperpixelPartition) -> Result<Vec<T>> {
    let means = &block_means(data, channels, partition)?;
    let k = partition.num_blocks();
    let labels = partition.labels();
    Ok((0..channels)
        .flat_map(|c| labels.iter().map(move |&l| T::from_f64(means[c * k + l as usize])))
        .collect())
}

/// One message-passing stage on raw channel-major data.
pub fn ssp_apply<T: Element>(data: &[T], channels: usize, partition: &SuperpixelPartition, alpha: f64) -> Result<Vec<T>> {
    validate_alpha(alpha)?;
    let means = block_means(data, channels, partition)?;
    let k = partition.num_blocks();
    let plane = partition.height() * partition.width();
    let labels = partition.labels();
    let mut out = Vec::with_capacity(data.len());
    for (c, chan) in data.chunks_exact(plane).enumerate() {
        let m = &means[c * k..(c + 1) * k];
        out.extend(
            chan.iter()
                .zip(labels)
                .map(|(&v, &l)| T::from_f64(v.to_f64() + alpha * m[l as usize])),
        );
    }
    Ok(out)
}

fn apply_to_tensor(x: &Tensor, partition: &SuperpixelPartition, alpha: f64) -> Result<Tensor> {
    let (c, h, w) = x.feature_dims()?;
    if (h, w) != (partition.height(), partition.width()) {
        return Err(Error::invalid(format!(
            "feature map is {h}x{w} but partition is {}x{}",
            partition.height(),
            partition.width()
        )));
    }
    let data = x.as_f32().expect("feature_dims checked dtype");
    Tensor::from_f32(vec![c, h, w], ssp_apply(data, c, partition, alpha)?)
}

/// `X* = X + alpha * Xbar`, with `Xbar` the per-block channel means broadcast back.
pub fn ssp_forward(x: &Tensor, partition: &SuperpixelPartition, alpha: f64) -> Result<Tensor> {
    apply_to_tensor(x, partition, alpha)
}

/// Gradient of [`ssp_forward`]. The stage is self-adjoint, so this is the forward map.
pub fn ssp_backward(grad_out: &Tensor, partition: &SuperpixelPartition, alpha: f64) -> Result<Tensor> {
    apply_to_tensor(grad_out, partition, alpha)
}

/// Maps an image-resolution partition onto a coarser grid by per-cell majority vote.
///
/// Target cell `(i, j)` covers source rows `floor(i*H/h) .. floor((i+1)*H/h)` and the
/// analogous columns. Ties go to the smallest label; blocks that win no cell disappear.
pub fn downsample_partition(
    partition: &SuperpixelPartition,
    target_height: usize,
    target_width: usize,
) -> Result<SuperpixelPartition> {
    let (sh, sw) = (partition.height(), partition.width());
    if target_height == 0 || target_width == 0 || target_height > sh || target_width > sw {
        return Err(Error::invalid(format!(
            "cannot downsample a {sh}x{sw} partition to {target_height}x{target_width}"
        )));
    }
    let mut labels = Vec::with_capacity(target_height * target_width);
    let mut cell = Vec::new();
    for i in 0..target_height {
        let (r0, r1) = (i * sh / target_height, (i + 1) * sh / target_height);
        for j in 0..target_width {
            let (c0, c1) = (j * sw / target_width, (j + 1) * sw / target_width);
            cell.clear();
            for y in r0..r1 {
                cell.extend_from_slice(&partition.labels()[y * sw + c0..y * sw + c1]);
            }
            cell.sort_unstable();
            labels.push(majority(&cell));
        }
    }
    SuperpixelPartition::relabel_contiguous(target_height, target_width, &labels)
}

/// Most frequent value of a sorted slice; the smallest value wins ties.
fn majority(sorted: &[u32]) -> u32 {
    let mut best = (0usize, sorted[0]);
    let mut run_start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] != sorted[run_start] {
            if i - run_start > best.0 {
                best = (i - run_start, sorted[run_start]);
            }
            run_start = i;
        }
    }
    best.1
}

/// Feature-resolution partitions used by each stage of a cascade, in forward order.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeTrace {
    stages: Vec<(usize, SuperpixelPartition)>,
}

impl CascadeTrace {
    pub fn new(stages: Vec<(usize, SuperpixelPartition)>) -> Result<Self> {
        let scales: Vec<usize> = stages.iter().map(|(s, _)| *s).collect();
        validate_scales(&scales)?;
        let (h, w) = (stages[0].1.height(), stages[0].1.width());
        if stages.iter().any(|(_, p)| (p.height(), p.width()) != (h, w)) {
            return Err(Error::invalid("cascade partitions must share one resolution"));
        }
        Ok(CascadeTrace { stages })
    }

    pub fn stages(&self) -> &[(usize, SuperpixelPartition)] {
        &self.stages
    }

    pub fn height(&self) -> usize {
        self.stages[0].1.height()
    }

    pub fn width(&self) -> usize {
        self.stages[0].1.width()
    }

    pub fn partitions(&self) -> impl DoubleEndedIterator<Item = &SuperpixelPartition> {
        self.stages.iter().map(|(_, p)| p)
    }
}

pub fn cascade_forward_slice<T: Element>(data: &[T], channels: usize, trace: &CascadeTrace, alpha: f64) -> Result<Vec<T>> {
    let mut cur = data.to_vec();
    for p in trace.partitions() {
        cur = ssp_apply(&cur, channels, p, alpha)?;
    }
    Ok(cur)
}

pub fn cascade_backward_slice<T: Element>(grad: &[T], channels: usize, trace: &CascadeTrace, alpha: f64) -> Result<Vec<T>> {
    let mut cur = grad.to_vec();
    for p in trace.partitions().rev() {
        cur = ssp_apply(&cur, channels, p, alpha)?;
    }
    Ok(cur)
}

fn run_cascade(x: &Tensor, trace: &CascadeTrace, alpha: f64, backward: bool) -> Result<Tensor> {
    let (c, h, w) = x.feature_dims()?;
    if (h, w) != (trace.height(), trace.width()) {
        return Err(Error::invalid(format!(
            "feature map is {h}x{w} but cascade partitions are {}x{}",
            trace.height(),
            trace.width()
        )));
    }
    let data = x.as_f32().expect("feature_dims checked dtype");
    let out = if backward {
        cascade_backward_slice(data, c, trace, alpha)?
    } else {
        cascade_forward_slice(data, c, trace, alpha)?
    };
    Tensor::from_f32(vec![c, h, w], out)
}

/// Applies a cascade whose partitions are already known.
pub fn cascade_apply(x: &Tensor, trace: &CascadeTrace, alpha: f64) -> Result<Tensor> {
    run_cascade(x, trace, alpha, false)
}

/// Generates one partition per scale from `image`, maps each to the feature resolution and
/// runs the stages in increasing-scale order.
pub fn msp_cascade_forward(x: &Tensor, image: &Image, config: &MspConfig) -> Result<(Tensor, CascadeTrace)> {
    config.validate()?;
    let (_, h, w) = x.feature_dims()?;
    if h > image.height() || w > image.width() {
        return Err(Error::invalid(format!(
            "feature map {h}x{w} is larger than image {}x{}",
            image.height(),
            image.width()
        )));
    }
    let lab = srgb_to_lab(image);
    let mut stages = Vec::with_capacity(config.scales.len());
    for &lambda in &config.scales {
        let full = config.algorithm.generate(&lab, lambda)?;
        stages.push((lambda, downsample_partition(&full, h, w)?));
    }
    let trace = CascadeTrace::new(stages)?;
    let out = cascade_apply(x, &trace, config.alpha)?;
    Ok((out, trace))
}

pub fn msp_cascade_backward(grad_out: &Tensor, trace: &CascadeTrace, alpha: f64) -> Result<Tensor> {
    run_cascade(grad_out, trace, alpha, true)
}

/// Per-pixel argmax over channels; ties go to the smallest class index.
pub fn argmax_channels(probs: &Tensor) -> Result<LabelMap> {
    let (c, h, w) = probs.feature_dims()?;
    let data = probs.as_f32().expect("feature_dims checked dtype");
    let plane = h * w;
    let labels = (0..plane)
        .map(|p| {
            let mut best = (data[p], 0u32);
            for k in 1..c {
                let v = data[k * plane + p];
                if v > best.0 {
                    best = (v, k as u32);
                }
            }
            best.1
        })
        .collect();
    LabelMap::new(h, w, labels)
}

/// Runs the cascade over class probabilities and takes the per-pixel argmax.
pub fn refine_probs(probs: &Tensor, image: &Image, config: &MspConfig) -> Result<LabelMap> {
    probs.feature_dims()?;
    let data = probs.as_f32().expect("feature_dims checked dtype");
    if let Some(i) = data.iter().position(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid(format!(
            "probabilities must be finite and non-negative (entry {i} is {})",
            data[i]
        )));
    }
    let (refined, _) = msp_cascade_forward(probs, image, config)?;
    argmax_channels(&refined)
}
