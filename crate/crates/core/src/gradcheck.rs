//! Seeded gradient verification of the message-passing cascade.
//!
//! Fixtures come from a ChaCha8 stream seeded with the user's seed. Tensor entries are drawn
//! as multiples of 2^-30 in [-1, 1) and the finite-difference step is 2^-13, so `x ± h` is
//! exact and the identity operator (`alpha = 0`) reports zero error.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::msp::{cascade_backward_slice, cascade_forward_slice, CascadeTrace};
use crate::partition::SuperpixelPartition;

pub const GRADIENT_TOLERANCE: f64 = 1e-4;
pub const ADJOINT_TOLERANCE: f64 = 1e-6;
pub const FD_STEP: f64 = 1.0 / 8192.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckSpec {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Blocks in the first stage; stage `i` (1-based) uses `i * blocks`, capped at `H*W`.
    pub blocks: usize,
    pub seed: u64,
    pub alpha: f64,
    pub stages: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    pub adjoint_err: f64,
    pub pass: bool,
}

fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    const SCALE: i64 = 1 << 30;
    rng.random_range(-SCALE..SCALE) as f64 / SCALE as f64
}

pub fn random_tensor(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| dyadic(rng)).collect()
}

/// Voronoi partition around `blocks` distinct random seed pixels; every block is non-empty.
pub fn random_partition(rng: &mut ChaCha8Rng, height: usize, width: usize, blocks: usize) -> Result<SuperpixelPartition> {
    let n = height * width;
    if blocks == 0 || blocks > n {
        return Err(Error::invalid(format!("block count {blocks} must lie in 1..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..blocks {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let seeds: Vec<(isize, isize)> = order[..blocks]
        .iter()
        .map(|&p| ((p / width) as isize, (p % width) as isize))
        .collect();
    let labels: Vec<u32> = (0..n)
        .map(|p| {
            let (y, x) = ((p / width) as isize, (p % width) as isize);
            let mut best = (isize::MAX, 0u32);
            for (k, &(sy, sx)) in seeds.iter().enumerate() {
                let d = (y - sy).pow(2) + (x - sx).pow(2);
                if d < best.0 {
                    best = (d, k as u32);
                }
            }
            best.1
        })
        .collect();
    SuperpixelPartition::relabel_contiguous(height, width, &labels)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares the analytic backward pass against central differences of `L = <w, F(X)>`.
pub fn check_trace(x: &[f64], weights: &[f64], probe: &[f64], channels: usize, trace: &CascadeTrace, alpha: f64) -> Result<GradcheckReport> {
    let analytic = cascade_backward_slice(weights, channels, trace, alpha)?;
    let mut max_rel_err: f64 = 0.0;
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    for j in 0..x.len() {
        plus[j] = x[j] + FD_STEP;
        minus[j] = x[j] - FD_STEP;
        let fp = cascade_forward_slice(&plus, channels, trace, alpha)?;
        let fm = cascade_forward_slice(&minus, channels, trace, alpha)?;
        let diff: f64 = weights.iter().zip(fp.iter().zip(&fm)).map(|(w, (p, m))| w * (p - m)).sum();
        let numeric = diff / (2.0 * FD_STEP);
        max_rel_err = max_rel_err.max(rel_err(analytic[j], numeric));
        plus[j] = x[j];
        minus[j] = x[j];
    }

    let fx = cascade_forward_slice(x, channels, trace, alpha)?;
    let bt = cascade_backward_slice(probe, channels, trace, alpha)?;
    let adjoint_err = rel_err(dot(&fx, probe), dot(x, &bt));

    Ok(GradcheckReport {
        max_rel_err,
        adjoint_err,
        pass: max_rel_err <= GRADIENT_TOLERANCE && adjoint_err <= ADJOINT_TOLERANCE,
    })
}

pub fn run_gradcheck(spec: &GradcheckSpec) -> Result<GradcheckReport> {
    let GradcheckSpec {
        channels,
        height,
        width,
        blocks,
        seed,
        alpha,
        stages,
    } = *spec;
    if channels == 0 || height == 0 || width == 0 {
        return Err(Error::invalid("channels, height and width must be positive"));
    }
    if stages == 0 {
        return Err(Error::invalid("at least one stage is required"));
    }
    let n = height * width;
    if blocks == 0 || blocks > n {
        return Err(Error::invalid(format!("--blocks must lie in 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace_stages = Vec::with_capacity(stages);
    for i in 1..=stages {
        let k = (blocks * i).min(n);
        trace_stages.push((k, random_partition(&mut rng, height, width, k)?));
    }
    let trace = CascadeTrace::new(trace_stages)?;
    let len = channels * n;
    let x = random_tensor(&mut rng, len);
    let weights = random_tensor(&mut rng, len);
    let probe = random_tensor(&mut rng, len);
    check_trace(&x, &weights, &probe, channels, &trace, alpha)
}
