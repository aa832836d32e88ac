use super::{Axis, GrayImage, RealImage};
use crate::error::{Error, Result};

/// Symmetric 1-D convolution kernel with `2 * radius + 1` taps.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel1D {
    radius: usize,
    taps: Vec<f64>,
}

impl Kernel1D {
    /// Wraps an odd-length tap vector; the centre tap sits at `taps.len() / 2`.
    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        if taps.len().is_multiple_of(2) || taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "kernel needs an odd number of finite taps, got {}",
                taps.len()
            )));
        }
        Ok(Self {
            radius: taps.len() / 2,
            taps,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Sampled Gaussian truncated at `ceil(3 sigma)` and normalised to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel1D> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(Kernel1D { radius, taps })
}

/// Horizontal then vertical pass, borders replicated.
pub fn convolve_separable(img: &GrayImage, k: &Kernel1D) -> RealImage {
    convolve_real(&img.to_real(), k)
}

pub fn convolve_real(img: &RealImage, k: &Kernel1D) -> RealImage {
    let (w, h) = (img.width(), img.height());
    let r = k.radius;
    let taps = &k.taps;

    let mut tmp = vec![0.0; w * h];
    let mut padded = vec![0.0; w.max(h) + 2 * r];
    for y in 0..h {
        let row = img.row(y);
        pad_replicate(row, r, &mut padded[..w + 2 * r]);
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = dot(&padded[x..x + 2 * r + 1], taps);
        }
    }

    let mut result = vec![0.0; w * h];
    let mut column = vec![0.0; h];
    for x in 0..w {
        for (y, c) in column.iter_mut().enumerate() {
            *c = tmp[y * w + x];
        }
        pad_replicate(&column, r, &mut padded[..h + 2 * r]);
        for y in 0..h {
            result[y * w + x] = dot(&padded[y..y + 2 * r + 1], taps);
        }
    }
    RealImage::from_parts(w, h, result)
}

fn pad_replicate(src: &[f64], r: usize, dst: &mut [f64]) {
    let n = src.len();
    let (first, last) = (src[0], src[n - 1]);
    dst[..r].fill(first);
    dst[r..r + n].copy_from_slice(src);
    dst[r + n..].fill(last);
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 3×3 Sobel derivative along `axis`, borders replicated.
pub fn gradient_map(img: &GrayImage, axis: Axis) -> Result<RealImage> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall(format!(
            "gradient map needs at least 3x3, got {w}x{h}"
        )));
    }
    let px = |x: isize, y: isize| i32::from(img.get_clamped(x, y));
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let g = match axis {
                Axis::Horizontal => {
                    (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1))
                        - (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1))
                }
                Axis::Vertical => {
                    (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1))
                        - (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1))
                }
            };
            values.push(f64::from(g));
        }
    }
    Ok(RealImage::from_parts(w, h, values))
}

/// Round half up, then clamp to `[0, 255]`.
pub fn quantize(img: &RealImage) -> Result<GrayImage> {
    if let Some(i) = img.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(i));
    }
    let pixels = img
        .values()
        .iter()
        .map(|&v| (v + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(img.width(), img.height(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random())
    }

    /// Direct 2-D convolution with the outer-product kernel, clamped borders.
    fn dense_reference(img: &GrayImage, k: &Kernel1D) -> Vec<f64> {
        let r = k.radius() as isize;
        let t = k.taps();
        let mut out = Vec::new();
        for y in 0..img.height() as isize {
            for x in 0..img.width() as isize {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let wgt = t[(dy + r) as usize] * t[(dx + r) as usize];
                        acc += wgt * f64::from(img.get_clamped(x + dx, y + dy));
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn kernel_for_sigma_22() {
        let k = gaussian_kernel(22.0).unwrap();
        assert_eq!(k.radius(), 66);
        assert_eq!(k.taps().len(), 133);
        assert!((k.taps().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..k.taps().len() {
            assert_eq!(k.taps()[i], k.taps()[132 - i]);
        }
    }

    #[test]
    fn narrow_kernel_is_nearly_identity() {
        let k = gaussian_kernel(0.3).unwrap();
        // radius 1; outer taps exp(-1/0.18) before normalisation
        let e = (-1.0f64 / 0.18).exp();
        let centre = 1.0 / (1.0 + 2.0 * e);
        assert_eq!(k.radius(), 1);
        assert!((k.taps()[1] - centre).abs() < 1e-12);
        assert!(k.taps()[1] > 0.9);
    }

    #[test]
    fn invalid_sigma() {
        for s in [-1.0, 0.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(gaussian_kernel(s), Err(Error::InvalidSigma(_))));
        }
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = GrayImage::filled(17, 9, 77);
        let out = convolve_separable(&img, &gaussian_kernel(4.0).unwrap());
        assert!(out.values().iter().all(|v| (v - 77.0).abs() < 1e-9));
    }

    #[test]
    fn impulse_matches_dense_convolution() {
        let mut img = GrayImage::filled(21, 21, 0);
        img.set(10, 10, 255);
        let k = gaussian_kernel(1.0).unwrap();
        let fast = convolve_separable(&img, &k);
        let slow = dense_reference(&img, &k);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        // and against the closed-form, normalised 2-D Gaussian at the centre
        let sum1: f64 = (-3..=3).map(|d: i32| (-(d * d) as f64 / 2.0).exp()).sum();
        let expected = 255.0 / (sum1 * sum1);
        assert!((fast.get(10, 10) - expected).abs() < 1e-6);
    }

    #[test]
    fn random_image_matches_dense_convolution_at_borders() {
        let img = random_image(13, 8, 5);
        let k = gaussian_kernel(2.5).unwrap();
        let fast = convolve_separable(&img, &k);
        let slow = dense_reference(&img, &k);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn blur_twice_equals_wider_blur_in_interior() {
        let img = random_image(64, 64, 11);
        let s = 2.0;
        let k = gaussian_kernel(s).unwrap();
        let twice = convolve_real(&convolve_separable(&img, &k), &k);
        let once = convolve_separable(&img, &gaussian_kernel(s * 2f64.sqrt()).unwrap());
        let margin = 12;
        for y in margin..64 - margin {
            for x in margin..64 - margin {
                assert!((twice.get(x, y) - once.get(x, y)).abs() < 0.5);
            }
        }
    }

    #[test]
    fn convolution_is_linear() {
        let a = random_image(20, 15, 1).to_real();
        let b = random_image(20, 15, 2).to_real();
        let k = gaussian_kernel(1.7).unwrap();
        let (ca, cb) = (2.5, -0.75);
        let mix: Vec<f64> = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| ca * x + cb * y)
            .collect();
        let lhs = convolve_real(&RealImage::new(20, 15, mix).unwrap(), &k);
        let (fa, fb) = (convolve_real(&a, &k), convolve_real(&b, &k));
        for i in 0..lhs.values().len() {
            let rhs = ca * fa.values()[i] + cb * fb.values()[i];
            assert!((lhs.values()[i] - rhs).abs() < 1e-6);
        }
    }

    #[test]
    fn mean_preserved_within_one_level() {
        // replicated borders overweight edge pixels; keep the image well
        // above the kernel support
        let img = random_image(200, 150, 9);
        let out = convolve_separable(&img, &gaussian_kernel(6.0).unwrap());
        assert!(
            (out.mean() - img.mean()).abs() < 1.0,
            "{} vs {}",
            out.mean(),
            img.mean()
        );
    }

    #[test]
    fn sobel_of_constant_is_zero() {
        let img = GrayImage::filled(6, 5, 200);
        for axis in [Axis::Horizontal, Axis::Vertical] {
            assert!(gradient_map(&img, axis).unwrap().values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sobel_step_edge_peaks_beside_edge() {
        let img = GrayImage::from_fn(8, 10, |_, y| if y < 5 { 0 } else { 255 });
        let g = gradient_map(&img, Axis::Vertical).unwrap();
        for y in 0..10 {
            for x in 0..8 {
                let expected = if y == 4 || y == 5 { 4.0 * 255.0 } else { 0.0 };
                assert_eq!(g.get(x, y), expected, "at ({x},{y})");
            }
        }
        let gx = gradient_map(&img, Axis::Horizontal).unwrap();
        assert!(gx.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_needs_3x3() {
        let img = GrayImage::filled(2, 2, 0);
        assert!(matches!(
            gradient_map(&img, Axis::Vertical),
            Err(Error::ImageTooSmall(_))
        ));
    }

    #[test]
    fn quantize_rounds_half_up_and_clamps() {
        let img = RealImage::new(4, 1, vec![127.5, -3.2, 300.0, 12.49]).unwrap();
        assert_eq!(quantize(&img).unwrap().pixels(), &[128, 0, 255, 12]);
    }

    #[test]
    fn quantize_rejects_nan() {
        let img = RealImage::from_parts(2, 1, vec![1.0, f64::NAN]);
        assert!(matches!(quantize(&img), Err(Error::NonFiniteValue(1))));
    }
}
