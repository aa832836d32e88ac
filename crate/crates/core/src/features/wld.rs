//! Weber local descriptor: joint histogram of differential excitation and
//! gradient orientation over interior pixels.

use std::f64::consts::PI;

use super::{Extractor, FeatureVector};
use crate::error::{Error, Result};
use crate::imgcore::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WldParams {
    pub excitation_bins: usize,
    pub orientation_bins: usize,
}

impl Default for WldParams {
    fn default() -> Self {
        Self {
            excitation_bins: 8,
            orientation_bins: 8,
        }
    }
}

impl WldParams {
    pub fn validate(&self) -> Result<()> {
        if self.excitation_bins == 0 || self.orientation_bins == 0 {
            return Err(Error::InvalidParams("WLD bin counts must be positive".into()));
        }
        Ok(())
    }
}

/// Excitation in `(-pi/2, pi/2)` mapped onto equal-width bins.
pub(crate) fn excitation_bin(xi: f64, bins: usize) -> usize {
    let t = (xi + PI / 2.0) / PI;
    ((t * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize
}

/// Orientation in `[-pi, pi]` mapped onto equal-width bins, wrapping at pi.
pub(crate) fn orientation_bin(theta: f64, bins: usize) -> usize {
    let t = (theta + PI) / (2.0 * PI);
    ((t * bins as f64).floor() as usize) % bins
}

/// Flattened excitation-major histogram of raw counts.
pub fn wld_feature(img: &GrayImage, p: WldParams) -> Result<FeatureVector> {
    p.validate()?;
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall(format!("WLD needs at least 3x3, got {w}x{h}")));
    }
    let (eb, ob) = (p.excitation_bins, p.orientation_bins);
    let mut hist = vec![0.0; eb * ob];
    let px = |x: usize, y: usize| f64::from(img.get(x, y));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let centre = px(x, y);
            let mut diff_sum = 0.0;
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    diff_sum += px(nx, ny) - centre;
                }
            }
            let denom = if centre == 0.0 { 1.0 } else { centre };
            let xi = (diff_sum / denom).atan();
            let dh = px(x + 1, y) - px(x - 1, y);
            let dv = px(x, y + 1) - px(x, y - 1);
            let theta = dv.atan2(dh);
            hist[excitation_bin(xi, eb) * ob + orientation_bin(theta, ob)] += 1.0;
        }
    }
    FeatureVector::new(Extractor::Wld, hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_lands_in_zero_excitation_row() {
        let img = GrayImage::filled(7, 6, 80);
        let p = WldParams::default();
        let f = wld_feature(&img, p).unwrap();
        assert_eq!(f.dim(), 64);
        let row = excitation_bin(0.0, 8);
        assert_eq!(row, 4);
        let total: f64 = f.values()[row * 8..(row + 1) * 8].iter().sum();
        assert_eq!(total, 20.0);
        assert_eq!(f.values().iter().sum::<f64>(), 20.0);
    }

    #[test]
    fn zero_centre_uses_unit_denominator() {
        let mut img = GrayImage::filled(3, 3, 1);
        img.set(1, 1, 0);
        let f = wld_feature(&img, WldParams::default()).unwrap();
        // xi = atan(8) lands in the top excitation bin
        let e = excitation_bin(8f64.atan(), 8);
        assert_eq!(e, 7);
        assert_eq!(f.values()[e * 8..].iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn bin_edges() {
        assert_eq!(orientation_bin(PI, 8), 0);
        assert_eq!(orientation_bin(-PI, 8), 0);
        assert_eq!(orientation_bin(0.0, 8), 4);
        assert_eq!(excitation_bin(-PI / 2.0, 8), 0);
        assert_eq!(excitation_bin(PI / 2.0, 8), 7);
    }
}
