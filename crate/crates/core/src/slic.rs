//! SLIC superpixels: k-means in (L, a, b, x, y) restricted to a window around each center.

use crate::color::LabImage;
use crate::connectivity::enforce_connectivity;
use crate::error::{Error, Result};
use crate::partition::SuperpixelPartition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    /// Requested number of superpixels.
    pub lambda: usize,
    /// Compactness `m`: weight of spatial distance relative to color distance.
    pub compactness: f64,
    pub max_iterations: usize,
    /// Stop once the mean center displacement (combined distance units) drops below this.
    pub residual_threshold: f64,
    /// Connected pieces smaller than this fraction of `S^2` are merged away.
    pub min_region_fraction: f64,
}

impl SlicParams {
    pub fn new(lambda: usize) -> Self {
        SlicParams {
            lambda,
            compactness: 10.0,
            max_iterations: 10,
            residual_threshold: 0.25,
            min_region_fraction: 0.25,
        }
    }

    pub fn with_lambda(self, lambda: usize) -> Self {
        SlicParams { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 1 {
            return Err(Error::invalid("SLIC lambda must be at least 1"));
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return Err(Error::invalid("SLIC compactness must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("SLIC max_iterations must be at least 1"));
        }
        if self.residual_threshold.is_nan() || self.residual_threshold < 0.0 {
            return Err(Error::invalid("SLIC residual_threshold must be non-negative"));
        }
        if self.min_region_fraction.is_nan() || self.min_region_fraction < 0.0 {
            return Err(Error::invalid("SLIC min_region_fraction must be non-negative"));
        }
        Ok(())
    }
}

/// A cluster center in (L, a, b, y, x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Center {
    pub lab: [f64; 3],
    pub y: f64,
    pub x: f64,
}

/// Raw k-means output, before connectivity enforcement.
#[derive(Debug, Clone)]
pub struct SlicClusters {
    pub centers: Vec<Center>,
    /// Index of the owning center for every pixel.
    pub assignment: Vec<u32>,
    /// Grid interval `S = sqrt(H*W / lambda)`.
    pub step: f64,
    pub iterations: usize,
}

struct Metric {
    spatial_weight: f64,
}

impl Metric {
    fn new(compactness: f64, step: f64) -> Self {
        let w = compactness / step;
        Metric {
            spatial_weight: w * w,
        }
    }

    fn dist2(&self, lab: [f64; 3], y: f64, x: f64, c: &Center) -> f64 {
        let dl = lab[0] - c.lab[0];
        let da = lab[1] - c.lab[1];
        let db = lab[2] - c.lab[2];
        let dy = y - c.y;
        let dx = x - c.x;
        dl * dl + da * da + db * db + (dy * dy + dx * dx) * self.spatial_weight
    }
}

fn gradient(lab: &LabImage, y: usize, x: usize) -> f64 {
    let (h, w) = (lab.height(), lab.width());
    let sq = |p: [f64; 3], q: [f64; 3]| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>();
    let horiz = sq(lab.pixel(y, (x + 1).min(w - 1)), lab.pixel(y, x.saturating_sub(1)));
    let vert = sq(lab.pixel((y + 1).min(h - 1), x), lab.pixel(y.saturating_sub(1), x));
    horiz + vert
}

fn seed_centers(lab: &LabImage, lambda: usize, step: f64) -> Vec<Center> {
    let (h, w) = (lab.height(), lab.width());
    let rows = ((h as f64 / step).round() as usize).clamp(1, h);
    let cols = ((lambda as f64 / rows as f64).round() as usize).clamp(1, w);
    let mut centers = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        for i in 0..cols {
            let cy = (j as f64 + 0.5) * h as f64 / rows as f64 - 0.5;
            let cx = (i as f64 + 0.5) * w as f64 / cols as f64 - 0.5;
            let ry = (cy.round() as usize).min(h - 1);
            let rx = (cx.round() as usize).min(w - 1);

            let mut best = (gradient(lab, ry, rx), ry, rx);
            for ny in ry.saturating_sub(1)..=(ry + 1).min(h - 1) {
                for nx in rx.saturating_sub(1)..=(rx + 1).min(w - 1) {
                    let g = gradient(lab, ny, nx);
                    if g < best.0 {
                        best = (g, ny, nx);
                    }
                }
            }
            let (_, by, bx) = best;
            let (y, x) = if (by, bx) == (ry, rx) {
                (cy, cx)
            } else {
                (by as f64, bx as f64)
            };
            centers.push(Center {
                lab: lab.pixel(by, bx),
                y,
                x,
            });
        }
    }
    centers
}

fn assign(lab: &LabImage, centers: &[Center], step: f64, metric: &Metric, assignment: &mut [u32], dist: &mut [f64]) {
    let (h, w) = (lab.height(), lab.width());
    dist.fill(f64::INFINITY);
    assignment.fill(u32::MAX);
    for (k, c) in centers.iter().enumerate() {
        let y0 = (c.y - step).ceil().max(0.0) as usize;
        let y1 = ((c.y + step).floor() as isize).min(h as isize - 1);
        let x0 = (c.x - step).ceil().max(0.0) as usize;
        let x1 = ((c.x + step).floor() as isize).min(w as isize - 1);
        if y1 < 0 || x1 < 0 {
            continue;
        }
        for y in y0..=y1 as usize {
            for x in x0..=x1 as usize {
                let p = y * w + x;
                let d = metric.dist2(lab.pixels()[p], y as f64, x as f64, c);
                if d < dist[p] {
                    dist[p] = d;
                    assignment[p] = k as u32;
                }
            }
        }
    }
    for p in 0..assignment.len() {
        if assignment[p] != u32::MAX {
            continue;
        }
        let (y, x) = ((p / w) as f64, (p % w) as f64);
        let mut best = (f64::INFINITY, 0u32);
        for (k, c) in centers.iter().enumerate() {
            let d = metric.dist2(lab.pixels()[p], y, x, c);
            if d < best.0 {
                best = (d, k as u32);
            }
        }
        dist[p] = best.0;
        assignment[p] = best.1;
    }
}

/// Recomputes centers as member means; returns the mean displacement in combined units.
fn update(lab: &LabImage, centers: &mut [Center], assignment: &[u32], metric: &Metric) -> f64 {
    let w = lab.width();
    let mut sums = vec![[0.0f64; 5]; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for (p, &k) in assignment.iter().enumerate() {
        let [l, a, b] = lab.pixels()[p];
        let s = &mut sums[k as usize];
        s[0] += l;
        s[1] += a;
        s[2] += b;
        s[3] += (p / w) as f64;
        s[4] += (p % w) as f64;
        counts[k as usize] += 1;
    }
    let mut total = 0.0;
    for ((c, s), &n) in centers.iter_mut().zip(&sums).zip(&counts) {
        if n == 0 {
            continue;
        }
        let n = n as f64;
        let moved = Center {
            lab: [s[0] / n, s[1] / n, s[2] / n],
            y: s[3] / n,
            x: s[4] / n,
        };
        total += metric.dist2(moved.lab, moved.y, moved.x, c).sqrt();
        *c = moved;
    }
    total / centers.len() as f64
}

/// Runs the clustering loop and returns the raw per-pixel center assignment.
pub fn slic_cluster(lab: &LabImage, params: &SlicParams) -> Result<SlicClusters> {
    params.validate()?;
    let n = lab.height() * lab.width();
    if params.lambda > n {
        return Err(Error::invalid(format!(
            "SLIC lambda {} exceeds pixel count {}",
            params.lambda, n
        )));
    }
    let step = (n as f64 / params.lambda as f64).sqrt();
    let metric = Metric::new(params.compactness, step);
    let mut centers = seed_centers(lab, params.lambda, step);
    let mut assignment = vec![0u32; n];
    let mut dist = vec![0.0f64; n];
    let mut iterations = 0;
    while iterations < params.max_iterations {
        assign(lab, &centers, step, &metric, &mut assignment, &mut dist);
        iterations += 1;
        let residual = update(lab, &mut centers, &assignment, &metric);
        if residual < params.residual_threshold {
            break;
        }
    }
    Ok(SlicClusters {
        centers,
        assignment,
        step,
        iterations,
    })
}

pub fn slic_segment(lab: &LabImage, params: &SlicParams) -> Result<SuperpixelPartition> {
    let clusters = slic_cluster(lab, params)?;
    let min_size = (params.min_region_fraction * clusters.step * clusters.step).round() as usize;
    enforce_connectivity(lab.height(), lab.width(), &clusters.assignment, min_size.max(1))
}
