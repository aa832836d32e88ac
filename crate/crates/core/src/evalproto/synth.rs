//! Seeded synthetic finger-vein ROIs.
//!
//! Fingers run vertically. Each class owns a latent finger: a smooth
//! intensity field (base level, low-order polynomial, darker flanks, a
//! bright knuckle band across the finger) and a few dark, roughly vertical
//! random-walk veins. Samples view the latent through a jittered window and
//! add brightness jitter and Gaussian pixel noise.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{DatasetIndex, Finger, Layout, SampleId};
use crate::error::{Error, Result};
use crate::imgcore::{save_image, GrayImage, ImageFormat};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub classes: usize,
    pub samples_per_class: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Largest vertical displacement between samples, in pixels.
    pub max_shift: usize,
    /// Largest horizontal displacement between samples, in pixels.
    pub max_x_jitter: usize,
    pub brightness_jitter: f64,
    pub noise_sigma: f64,
    /// Per-sample relative jitter of each vein's depth.
    pub vein_depth_jitter: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            classes: 50,
            samples_per_class: 6,
            width: 64,
            height: 160,
            seed: 3,
            max_shift: 6,
            max_x_jitter: 2,
            brightness_jitter: 10.0,
            noise_sigma: 3.0,
            vein_depth_jitter: 0.25,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.classes == 0 || self.samples_per_class == 0 {
            return bad("classes and samples per class must be at least 1".into());
        }
        if self.samples_per_class > 999 {
            return bad("at most 999 samples per class".into());
        }
        if self.width < 16 || self.height < 16 {
            return bad(format!(
                "synthetic images must be at least 16x16, got {}x{}",
                self.width, self.height
            ));
        }
        for (name, v) in [
            ("brightness jitter", self.brightness_jitter),
            ("noise sigma", self.noise_sigma),
            ("vein depth jitter", self.vein_depth_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

struct Vein {
    /// Centre-line x for every latent row.
    path: Vec<f64>,
    half_width: f64,
    depth: f64,
}

struct Latent {
    width: usize,
    /// Vein-free intensity field.
    field: Vec<f64>,
    veins: Vec<Vein>,
}

fn class_rng(seed: u64, class: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class as u64 * 1000 + stream);
    rng
}

fn latent(p: &SynthParams, class: usize) -> Latent {
    let mut rng = class_rng(p.seed, class, 0);
    let width = p.width + 2 * p.max_x_jitter;
    let height = p.height + 2 * p.max_shift;
    let (wf, hf) = (width as f64, height as f64);

    let base = rng.random_range(85.0..150.0);
    let poly: [f64; 5] = std::array::from_fn(|_| rng.random_range(-14.0..14.0));
    let flank_depth = rng.random_range(15.0..55.0);
    let flank_power = rng.random_range(1.5..4.0);
    let axis = rng.random_range(-0.15..0.15);
    let knuckle_y = rng.random_range(0.2..0.8) * hf;
    let knuckle_sigma = rng.random_range(0.05..0.14) * hf;
    let knuckle_amp = rng.random_range(15.0..50.0);

    let mut field = Vec::with_capacity(width * height);
    for y in 0..height {
        let v = 2.0 * y as f64 / (hf - 1.0) - 1.0;
        let band = knuckle_amp * (-(y as f64 - knuckle_y).powi(2) / (2.0 * knuckle_sigma.powi(2))).exp();
        for x in 0..width {
            let u = 2.0 * x as f64 / (wf - 1.0) - 1.0;
            let poly = poly[0] * u + poly[1] * v + poly[2] * u * u + poly[3] * v * v + poly[4] * u * v;
            let across = (u - axis).abs();
            // the knuckle glow fades towards the flanks, like the tissue
            let flank = flank_depth * across.powf(flank_power);
            field.push(base + poly - flank + band * (1.0 - 0.5 * across * across));
        }
    }

    let n_veins = rng.random_range(3..=6);
    let veins = (0..n_veins)
        .map(|_| {
            let mut x = rng.random_range(0.12..0.88) * wf;
            let mut vel: f64 = rng.random_range(-0.3..0.3);
            let mut path = Vec::with_capacity(height);
            for _ in 0..height {
                path.push(x);
                vel = (0.9 * vel + rng.random_range(-0.12..0.12)).clamp(-0.6, 0.6);
                x = (x + vel).clamp(2.0, wf - 3.0);
            }
            Vein {
                path,
                half_width: rng.random_range(1.0..2.2),
                depth: rng.random_range(18.0..40.0),
            }
        })
        .collect();

    Latent { width, field, veins }
}

/// One rendered sample plus the ground truth it was drawn from.
#[derive(Clone, Debug)]
pub struct SynthSample {
    pub image: GrayImage,
    /// Field without veins or noise, under the sample's own shift and
    /// brightness jitter.
    pub clean_background: Vec<f64>,
    /// Pixels within a vein's half-width of its centre line.
    pub vein_mask: Vec<bool>,
    pub shift: (isize, isize),
}

fn render(p: &SynthParams, lat: &Latent, class: usize, sample: usize) -> SynthSample {
    let mut rng = class_rng(p.seed, class, 1 + sample as u64);
    let dy = rng.random_range(-(p.max_shift as i64)..=p.max_shift as i64) as isize;
    let dx = rng.random_range(-(p.max_x_jitter as i64)..=p.max_x_jitter as i64) as isize;
    let bright = if p.brightness_jitter > 0.0 {
        rng.random_range(-p.brightness_jitter..=p.brightness_jitter)
    } else {
        0.0
    };
    let depth_scale: Vec<f64> = lat
        .veins
        .iter()
        .map(|_| 1.0 + p.vein_depth_jitter * rng.random_range(-1.0..=1.0))
        .collect();
    let noise = Normal::new(0.0, p.noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");

    let oy = (p.max_shift as isize + dy) as usize;
    let ox = (p.max_x_jitter as isize + dx) as usize;
    let mut clean = Vec::with_capacity(p.width * p.height);
    let mut mask = Vec::with_capacity(p.width * p.height);
    let mut pixels = Vec::with_capacity(p.width * p.height);
    for y in 0..p.height {
        let ly = oy + y;
        for x in 0..p.width {
            let lx = ox + x;
            let bg = lat.field[ly * lat.width + lx] + bright;
            let mut dip: f64 = 0.0;
            let mut on_vein = false;
            for (v, s) in lat.veins.iter().zip(&depth_scale) {
                let d = lx as f64 - v.path[ly];
                let profile = (-d * d / (2.0 * v.half_width * v.half_width)).exp();
                dip = dip.max(v.depth * s * profile);
                on_vein |= d.abs() <= v.half_width;
            }
            let n = if p.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            clean.push(bg);
            mask.push(on_vein);
            pixels.push((bg - dip + n + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    SynthSample {
        image: GrayImage::new(p.width, p.height, pixels).expect("dimensions match"),
        clean_background: clean,
        vein_mask: mask,
        shift: (dx, dy),
    }
}

/// Renders one sample without touching the filesystem; `class` and
/// `sample` are zero-based.
pub fn synth_sample(p: &SynthParams, class: usize, sample: usize) -> Result<SynthSample> {
    p.validate()?;
    if class >= p.classes || sample >= p.samples_per_class {
        return Err(Error::InvalidParams(format!(
            "sample ({class}, {sample}) outside a {}x{} corpus",
            p.classes, p.samples_per_class
        )));
    }
    Ok(render(p, &latent(p, class), class, sample))
}

pub fn class_dir_name(p: &SynthParams, class: usize) -> String {
    let width = p.classes.to_string().len().max(3);
    format!("class_{:0width$}", class + 1)
}

pub fn sample_file_name(sample: usize) -> String {
    format!("sample_{:02}.pgm", sample + 1)
}

pub fn synth_corpus(p: &SynthParams, out: impl AsRef<Path>) -> Result<DatasetIndex> {
    p.validate()?;
    let out = out.as_ref();
    let mut samples = Vec::with_capacity(p.classes * p.samples_per_class);
    for class in 0..p.classes {
        let lat = latent(p, class);
        let dir_name = class_dir_name(p, class);
        let dir: PathBuf = out.join(&dir_name);
        fs::create_dir_all(&dir).map_err(|e| Error::write_io(&dir, e))?;
        for sample in 0..p.samples_per_class {
            let s = render(p, &lat, class, sample);
            let file = sample_file_name(sample);
            let path = dir.join(&file);
            save_image(&s.image, &path, ImageFormat::Pgm)?;
            samples.push(SampleId {
                subject: dir_name["class_".len()..].to_string(),
                finger: Finger::Numbered(0),
                session: 1,
                sample: sample as u32 + 1,
                path,
                rel: format!("{dir_name}/{file}"),
            });
        }
    }
    Ok(DatasetIndex::new(Layout::Synth, out.to_path_buf(), samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalproto::dataset::index_dataset;

    fn small() -> SynthParams {
        SynthParams {
            classes: 2,
            samples_per_class: 3,
            seed: 1,
            ..SynthParams::default()
        }
    }

    #[test]
    fn corpus_is_reproducible_and_indexable() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ia = synth_corpus(&small(), a.path()).unwrap();
        synth_corpus(&small(), b.path()).unwrap();
        assert_eq!(ia.samples.len(), 6);
        assert_eq!(ia.classes, 2);
        for s in &ia.samples {
            let other = b.path().join(&s.rel);
            assert_eq!(fs::read(&s.path).unwrap(), fs::read(other).unwrap());
        }
        let idx = index_dataset(a.path(), Layout::Synth).unwrap();
        assert_eq!(idx.classes, 2);
        let rels: Vec<_> = idx.samples.iter().map(|s| s.rel.clone()).collect();
        assert_eq!(rels, ia.samples.iter().map(|s| s.rel.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn seed_changes_output() {
        let a = synth_sample(&small(), 0, 0).unwrap();
        let b = synth_sample(&SynthParams { seed: 2, ..small() }, 0, 0).unwrap();
        assert_ne!(a.image, b.image);
    }

    #[test]
    fn perturbations_stay_in_bounds() {
        let p = SynthParams::default();
        for c in 0..5 {
            for s in 0..p.samples_per_class {
                let smp = synth_sample(&p, c, s).unwrap();
                assert!(smp.shift.1.unsigned_abs() <= p.max_shift);
                assert!(smp.shift.0.unsigned_abs() <= p.max_x_jitter);
                assert_eq!(smp.image.width(), p.width);
                assert!(smp.vein_mask.iter().any(|&m| m));
            }
        }
    }

    #[test]
    fn rejects_degenerate_requests() {
        assert!(synth_sample(&SynthParams { classes: 0, ..small() }, 0, 0).is_err());
        assert!(synth_sample(&small(), 2, 0).is_err());
    }
}
