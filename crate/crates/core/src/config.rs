use crate::color::LabImage;
use crate::error::{Error, Result};
use crate::partition::SuperpixelPartition;
use crate::quickshift::{quickshift_for_lambda, QuickShiftParams};
use crate::slic::{slic_segment, SlicParams};

/// Default weight of the block-mean message.
pub const DEFAULT_ALPHA: f64 = 0.1;
/// Three-stage schedule used for ADE20K-scale images.
pub const ADE20K_SCALES: [usize; 3] = [200, 300, 400];
/// Two-stage schedule used for large (Cityscapes-size) images and VOC/Context.
pub const CITYSCAPES_SCALES: [usize; 2] = [100, 200];

pub const INCREASING_SCALES_RULE: &str = "scales must be strictly increasing (λ_i > λ_{i-1})";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuperpixelAlgorithm {
    /// `lambda` inside the params is replaced by each stage's scale.
    Slic(SlicParams),
    QuickShift(QuickShiftParams),
}

impl SuperpixelAlgorithm {
    pub fn generate(&self, lab: &LabImage, lambda: usize) -> Result<SuperpixelPartition> {
        match self {
            SuperpixelAlgorithm::Slic(p) => slic_segment(lab, &p.with_lambda(lambda)),
            SuperpixelAlgorithm::QuickShift(p) => quickshift_for_lambda(lab, p, lambda),
        }
    }
}

impl Default for SuperpixelAlgorithm {
    fn default() -> Self {
        SuperpixelAlgorithm::Slic(SlicParams::new(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MspConfig {
    pub alpha: f64,
    /// Superpixel counts per cascade stage, applied in order.
    pub scales: Vec<usize>,
    pub algorithm: SuperpixelAlgorithm,
}

impl MspConfig {
    pub fn new(alpha: f64, scales: Vec<usize>, algorithm: SuperpixelAlgorithm) -> Result<Self> {
        let config = MspConfig {
            alpha,
            scales,
            algorithm,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn ade20k() -> Self {
        MspConfig {
            alpha: DEFAULT_ALPHA,
            scales: ADE20K_SCALES.to_vec(),
            algorithm: SuperpixelAlgorithm::default(),
        }
    }

    pub fn cityscapes() -> Self {
        MspConfig {
            alpha: DEFAULT_ALPHA,
            scales: CITYSCAPES_SCALES.to_vec(),
            algorithm: SuperpixelAlgorithm::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        validate_scales(&self.scales)?;
        match &self.algorithm {
            SuperpixelAlgorithm::Slic(p) => p.with_lambda(1).validate(),
            SuperpixelAlgorithm::QuickShift(p) => p.validate(),
        }
    }
}

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

pub fn validate_scales(scales: &[usize]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::invalid("at least one scale is required"));
    }
    if scales.contains(&0) {
        return Err(Error::invalid("every scale must be at least 1"));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{INCREASING_SCALES_RULE}, got {scales:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let ade = MspConfig::ade20k();
        assert_eq!(ade.scales, vec![200, 300, 400]);
        assert_eq!(ade.alpha, 0.1);
        assert!(ade.validate().is_ok());
        assert_eq!(MspConfig::cityscapes().scales, vec![100, 200]);
    }

    #[test]
    fn scale_order_rule() {
        assert!(validate_scales(&[100, 200]).is_ok());
        let err = validate_scales(&[300, 200]).unwrap_err().to_string();
        assert!(err.contains("λ_i > λ_{i-1}"), "{err}");
        assert!(validate_scales(&[200, 200]).is_err());
        assert!(validate_scales(&[]).is_err());
        assert!(validate_scales(&[0, 5]).is_err());
    }

    #[test]
    fn alpha_rule() {
        assert!(validate_alpha(0.0).is_ok());
        assert!(validate_alpha(-0.1).is_err());
        assert!(validate_alpha(f64::NAN).is_err());
        assert!(MspConfig::new(-1.0, vec![1], SuperpixelAlgorithm::default()).is_err());
    }
}
