//! Foreground/background layer separation of finger-vein ROIs.
//!
//! The background layer carries the low-frequency intensity distribution
//! produced by finger tissue; the foreground is the residual vein texture,
//! stored shifted so that mid-gray (128) means zero residual.

use crate::error::{Error, Result};
use crate::imgcore::{convolve_separable, gaussian_kernel, quantize, GrayImage, RealImage};

/// Zero-residual level of the foreground layer.
pub const FOREGROUND_OFFSET: i16 = 128;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GbParams {
    pub sigma: f64,
}

impl Default for GbParams {
    fn default() -> Self {
        Self { sigma: 22.0 }
    }
}

impl GbParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_finite() && self.sigma > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSigma(self.sigma))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IlsParams {
    /// Weight of the squared-gradient penalty on the background.
    pub smooth_weight: f64,
    pub iterations: usize,
    /// Stop once no pixel moves by more than this many gray levels in a sweep.
    pub step_tolerance: f64,
}

impl Default for IlsParams {
    fn default() -> Self {
        Self {
            smooth_weight: 50.0,
            iterations: 200,
            step_tolerance: 0.05,
        }
    }
}

impl IlsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smooth_weight.is_finite() && self.smooth_weight > 0.0) {
            return Err(Error::InvalidParams(format!(
                "smooth_weight must be positive, got {}",
                self.smooth_weight
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParams("iterations must be at least 1".into()));
        }
        if !(self.step_tolerance.is_finite() && self.step_tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "step_tolerance must be positive, got {}",
                self.step_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerMethod {
    Gb,
    Ils,
}

impl LayerMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerMethod::Gb => "gb",
            LayerMethod::Ils => "ils",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerPair {
    pub foreground: GrayImage,
    pub background: GrayImage,
    pub method: LayerMethod,
}

pub fn extract_background_gb(roi: &GrayImage, p: &GbParams) -> Result<GrayImage> {
    p.validate()?;
    let k = gaussian_kernel(p.sigma)?;
    quantize(&convolve_separable(roi, &k))
}

/// `clamp(roi - background + 128)`.
pub fn extract_foreground(roi: &GrayImage, background: &GrayImage) -> Result<GrayImage> {
    if roi.width() != background.width() || roi.height() != background.height() {
        return Err(Error::DimensionMismatch(format!(
            "roi {}x{} vs background {}x{}",
            roi.width(),
            roi.height(),
            background.width(),
            background.height()
        )));
    }
    let pixels = roi
        .pixels()
        .iter()
        .zip(background.pixels())
        .map(|(&i, &b)| (i16::from(i) - i16::from(b) + FOREGROUND_OFFSET).clamp(0, 255) as u8)
        .collect();
    GrayImage::new(roi.width(), roi.height(), pixels)
}

pub fn separate_gb(roi: &GrayImage, p: &GbParams) -> Result<LayerPair> {
    let background = extract_background_gb(roi, p)?;
    let foreground = extract_foreground(roi, &background)?;
    Ok(LayerPair {
        foreground,
        background,
        method: LayerMethod::Gb,
    })
}

pub fn separate_ils(roi: &GrayImage, p: &IlsParams) -> Result<LayerPair> {
    let solve = ils_background(roi, p)?;
    let background = quantize(&solve.background)?;
    let foreground = extract_foreground(roi, &background)?;
    Ok(LayerPair {
        foreground,
        background,
        method: LayerMethod::Ils,
    })
}

/// Raw output of the smooth-layer solver.
#[derive(Clone, Debug)]
pub struct IlsSolve {
    pub background: RealImage,
    /// Energy before the first sweep followed by the energy after each sweep.
    pub energy_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Minimises `Σ (B - I)² + λ Σ |∇B|²` over the background `B`.
///
/// Forward differences with free (Neumann) boundaries. The quadratic
/// relaxation is solved by red-black Gauss-Seidel sweeps; each half-sweep
/// is an exact minimisation over an independent pixel set, so the energy
/// never increases.
pub fn ils_background(roi: &GrayImage, p: &IlsParams) -> Result<IlsSolve> {
    p.validate()?;
    let (w, h) = (roi.width(), roi.height());
    let lambda = p.smooth_weight;
    let input: Vec<f64> = roi.pixels().iter().map(|&v| f64::from(v)).collect();
    let mut b = input.clone();
    let mut trace = vec![ils_energy(&input, &b, w, h, lambda)];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < p.iterations {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for parity in 0..2 {
            for y in 0..h {
                let start = (y + parity) % 2;
                for x in (start..w).step_by(2) {
                    let i = y * w + x;
                    let mut sum = 0.0;
                    let mut degree = 0.0;
                    if x > 0 {
                        sum += b[i - 1];
                        degree += 1.0;
                    }
                    if x + 1 < w {
                        sum += b[i + 1];
                        degree += 1.0;
                    }
                    if y > 0 {
                        sum += b[i - w];
                        degree += 1.0;
                    }
                    if y + 1 < h {
                        sum += b[i + w];
                        degree += 1.0;
                    }
                    let updated = (input[i] + lambda * sum) / (1.0 + lambda * degree);
                    max_change = max_change.max((updated - b[i]).abs());
                    b[i] = updated;
                }
            }
        }
        trace.push(ils_energy(&input, &b, w, h, lambda));
        if max_change < p.step_tolerance {
            converged = true;
            break;
        }
    }

    Ok(IlsSolve {
        background: RealImage::from_parts(w, h, b),
        energy_trace: trace,
        sweeps,
        converged,
    })
}

pub(crate) fn ils_energy(input: &[f64], b: &[f64], w: usize, h: usize, lambda: f64) -> f64 {
    let mut data = 0.0;
    let mut smooth = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let d = b[i] - input[i];
            data += d * d;
            if x + 1 < w {
                let g = b[i + 1] - b[i];
                smooth += g * g;
            }
            if y + 1 < h {
                let g = b[i + w] - b[i];
                smooth += g * g;
            }
        }
    }
    data + lambda * smooth
}
