use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::boundary_mask;
use crate::partition::SuperpixelPartition;
use crate::tensor::{Image, LabelGrid};

pub const BOUNDARY_COLOR: [u8; 3] = [255, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlayMode {
    /// Paint boundary pixels red.
    Boundaries,
    /// Fill each region with its mean color.
    MeanColor,
}

impl FromStr for OverlayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundaries" => Ok(OverlayMode::Boundaries),
            "mean-color" => Ok(OverlayMode::MeanColor),
            other => Err(Error::invalid(format!(
                "unknown overlay mode {other:?} (expected boundaries or mean-color)"
            ))),
        }
    }
}

pub fn render_overlay(image: &Image, labels: &impl LabelGrid, mode: OverlayMode) -> Result<Image> {
    let (h, w) = (image.height(), image.width());
    if (labels.height(), labels.width()) != (h, w) {
        return Err(Error::invalid(format!(
            "labels are {}x{} but image is {h}x{w}",
            labels.height(),
            labels.width()
        )));
    }
    let pixels = match mode {
        OverlayMode::Boundaries => image
            .pixels()
            .iter()
            .zip(boundary_mask(labels))
            .map(|(&p, edge)| if edge { BOUNDARY_COLOR } else { p })
            .collect(),
        OverlayMode::MeanColor => {
            let part = SuperpixelPartition::relabel_contiguous(h, w, labels.labels())?;
            let mut sums = vec![[0u64; 3]; part.num_blocks()];
            for (&l, p) in part.labels().iter().zip(image.pixels()) {
                for k in 0..3 {
                    sums[l as usize][k] += p[k] as u64;
                }
            }
            let means: Vec<[u8; 3]> = sums
                .iter()
                .zip(part.block_sizes())
                .map(|(s, &n)| {
                    let n = n as u64;
                    s.map(|v| ((v + n / 2) / n) as u8)
                })
                .collect();
            part.labels().iter().map(|&l| means[l as usize]).collect()
        }
    };
    Image::new(h, w, pixels)
}
