#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use veinfuse::evalproto::SynthParams;
use veinfuse::imgcore::GrayImage;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
}

/// The 50 × 6, seed-3 corpus the acceptance criteria are stated on.
pub fn corpus_params() -> SynthParams {
    SynthParams {
        classes: 50,
        samples_per_class: 6,
        seed: 3,
        ..SynthParams::default()
    }
}

/// Mean over vein pixels of (ring mean − pixel), where the ring is the
/// off-vein pixels 3–6 columns to either side on the same row.
pub fn stripe_contrast(img: &GrayImage, mask: &[bool]) -> f64 {
    let (w, h) = (img.width(), img.height());
    let (mut total, mut n) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if !mask[y * w + x] {
                continue;
            }
            let ring: Vec<f64> = (3..=6)
                .flat_map(|d| [x.checked_sub(d), Some(x + d).filter(|&v| v < w)])
                .flatten()
                .filter(|&rx| !mask[y * w + rx])
                .map(|rx| f64::from(img.get(rx, y)))
                .collect();
            if ring.len() >= 2 {
                total += ring.iter().sum::<f64>() / ring.len() as f64 - f64::from(img.get(x, y));
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}
