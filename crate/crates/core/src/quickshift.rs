//! Quick Shift: link each pixel to its nearest neighbor of higher Parzen density; the
//! resulting trees are the superpixels.

use crate::color::LabImage;
use crate::error::{Error, Result};
use crate::partition::SuperpixelPartition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuickShiftParams {
    /// Gaussian kernel bandwidth in pixels.
    pub sigma: f64,
    /// Maximum link distance in the joint color/space feature space.
    pub tau: f64,
    /// Weight applied to the Lab channels before they join the (x, y) coordinates.
    pub color_ratio: f64,
}

impl Default for QuickShiftParams {
    fn default() -> Self {
        QuickShiftParams {
            sigma: 5.0,
            tau: 10.0,
            color_ratio: 0.5,
        }
    }
}

impl QuickShiftParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("quickshift sigma must be positive"));
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return Err(Error::invalid("quickshift tau must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.color_ratio) {
            return Err(Error::invalid("quickshift color_ratio must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Non-fatal parameter concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.tau <= self.sigma {
            out.push(format!(
                "quickshift tau ({}) <= sigma ({}); expect heavy over-segmentation",
                self.tau, self.sigma
            ));
        }
        out
    }

    pub(crate) fn window_radius(&self) -> usize {
        (3.0 * self.sigma).ceil() as usize
    }
}

/// Density estimate and parent links. Roots are their own parent.
#[derive(Debug, Clone)]
pub struct QuickShiftForest {
    pub density: Vec<f64>,
    pub parent: Vec<usize>,
}

impl QuickShiftForest {
    /// Follows parent links to the root of each pixel's tree.
    pub fn roots(&self) -> Vec<usize> {
        const UNKNOWN: usize = usize::MAX;
        let mut root = vec![UNKNOWN; self.parent.len()];
        let mut path = Vec::new();
        for start in 0..self.parent.len() {
            let mut p = start;
            while root[p] == UNKNOWN && self.parent[p] != p {
                path.push(p);
                p = self.parent[p];
            }
            let r = if root[p] == UNKNOWN { p } else { root[p] };
            root[p] = r;
            for q in path.drain(..) {
                root[q] = r;
            }
        }
        root
    }
}

fn features(lab: &LabImage, ratio: f64) -> Vec<[f64; 5]> {
    let w = lab.width();
    lab.pixels()
        .iter()
        .enumerate()
        .map(|(p, &[l, a, b])| [ratio * l, ratio * a, ratio * b, (p % w) as f64, (p / w) as f64])
        .collect()
}

pub(crate) fn feature_dist2(f: &[f64; 5], g: &[f64; 5]) -> f64 {
    f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `q` ranks above `p`: higher density, or equal density and earlier in row-major order.
pub(crate) fn ranks_above(density: &[f64], q: usize, p: usize) -> bool {
    density[q] > density[p] || (density[q] == density[p] && q < p)
}

pub fn quickshift_forest(lab: &LabImage, params: &QuickShiftParams) -> Result<QuickShiftForest> {
    params.validate()?;
    let (h, w) = (lab.height(), lab.width());
    let feats = features(lab, params.color_ratio);
    let r = params.window_radius();
    let two_sigma2 = 2.0 * params.sigma * params.sigma;
    let window = |p: usize| {
        let (y, x) = (p / w, p % w);
        let ys = y.saturating_sub(r)..=(y + r).min(h - 1);
        let xs = x.saturating_sub(r)..=(x + r).min(w - 1);
        ys.flat_map(move |qy| xs.clone().map(move |qx| qy * w + qx))
    };

    let density: Vec<f64> = (0..feats.len())
        .map(|p| {
            window(p)
                .map(|q| (-feature_dist2(&feats[p], &feats[q]) / two_sigma2).exp())
                .sum()
        })
        .collect();

    let tau2 = params.tau * params.tau;
    let parent = (0..feats.len())
        .map(|p| {
            let mut best = (f64::INFINITY, p);
            for q in window(p) {
                if q == p || !ranks_above(&density, q, p) {
                    continue;
                }
                let d = feature_dist2(&feats[p], &feats[q]);
                if d <= tau2 && d < best.0 {
                    best = (d, q);
                }
            }
            best.1
        })
        .collect();

    Ok(QuickShiftForest { density, parent })
}

pub fn quickshift_segment(lab: &LabImage, params: &QuickShiftParams) -> Result<SuperpixelPartition> {
    let forest = quickshift_forest(lab, params)?;
    let roots: Vec<u32> = forest.roots().into_iter().map(|r| r as u32).collect();
    SuperpixelPartition::relabel_contiguous(lab.height(), lab.width(), &roots)
}

const SIGMA_DECAY: f64 = 0.8;
const MAX_SIGMA_ATTEMPTS: usize = 8;

/// Shrinks sigma geometrically until the segmentation has at least `lambda / 2` blocks,
/// giving up after a fixed number of attempts and keeping the last result.
pub fn quickshift_for_lambda(
    lab: &LabImage,
    params: &QuickShiftParams,
    lambda: usize,
) -> Result<SuperpixelPartition> {
    let mut sigma = params.sigma;
    let mut last = None;
    for _ in 0..MAX_SIGMA_ATTEMPTS {
        let p = quickshift_segment(lab, &QuickShiftParams { sigma, ..*params })?;
        if 2 * p.num_blocks() >= lambda {
            return Ok(p);
        }
        last = Some(p);
        sigma *= SIGMA_DECAY;
    }
    last.ok_or_else(|| Error::Algorithm("quickshift produced no segmentation".into()))
}
