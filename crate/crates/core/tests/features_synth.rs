mod common;

use proptest::prelude::*;
use veinfuse::evalproto::{synth_sample, SynthParams};
use veinfuse::features::{
    align_pair, amv_feature, hog_feature, hsp_feature, lbp_feature, mv_feature, wld_feature, BlockGrid, HogParams,
    HspParams, WldParams, LBP_BINS,
};
use veinfuse::layers::{separate_gb, GbParams};

#[test]
fn mv_separates_classes_on_average() {
    let p = SynthParams {
        classes: 20,
        samples_per_class: 6,
        ..common::corpus_params()
    };
    let feats: Vec<Vec<[f64; 2]>> = (0..p.classes)
        .map(|c| {
            (0..p.samples_per_class)
                .map(|s| {
                    let img = synth_sample(&p, c, s).unwrap().image;
                    let bg = separate_gb(&img, &GbParams { sigma: 22.0 }).unwrap().background;
                    let v = mv_feature(&bg);
                    [v.values()[0], v.values()[1]]
                })
                .collect()
        })
        .collect();
    let l1 = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs() + (a[1] - b[1]).abs();
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
    for (c, fc) in feats.iter().enumerate() {
        for (d, fd) in feats.iter().enumerate().skip(c) {
            for (i, a) in fc.iter().enumerate() {
                for (j, b) in fd.iter().enumerate() {
                    if c == d && j > i {
                        intra += l1(a, b);
                        ni += 1;
                    } else if c != d {
                        inter += l1(a, b);
                        nx += 1;
                    }
                }
            }
        }
    }
    let (intra, inter) = (intra / ni as f64, inter / nx as f64);
    assert!(intra < inter, "intra {intra} inter {inter}");
}

#[test]
fn alignment_is_antisymmetric_on_the_corpus() {
    let p = common::corpus_params();
    let (mut recovered, mut total) = (0, 0);
    for c in 0..p.classes {
        let a = synth_sample(&p, c, 0).unwrap();
        for s in 1..p.samples_per_class {
            let b = synth_sample(&p, c, s).unwrap();
            let ab = align_pair(&a.image, &b.image, 15).unwrap();
            let ba = align_pair(&b.image, &a.image, 15).unwrap();
            assert_eq!(ab.shift, -ba.shift, "class {c} sample {s}");
            assert!((ab.distance - ba.distance).abs() < 1e-9);
            // row y of `a` shows the latent row that `b` has at y + dy_a - dy_b
            let truth = a.shift.1 - b.shift.1;
            recovered += usize::from((ab.shift - truth).abs() <= 1);
            total += 1;
        }
        let self_aligned = align_pair(&a.image, &a.image, 15).unwrap();
        assert_eq!((self_aligned.shift, self_aligned.distance), (0, 0.0));
    }
    // pixel noise dominates raw Sobel maps, so only most pairs lock on
    assert!(2 * recovered > total, "{recovered}/{total} displacements recovered");
    eprintln!("{recovered}/{total} displacements recovered within 1 px");
}

#[test]
fn extraction_is_deterministic() {
    let img = synth_sample(&common::corpus_params(), 11, 4).unwrap().image;
    for _ in 0..2 {
        assert_eq!(
            lbp_feature(&img, BlockGrid::new(4, 8)).unwrap(),
            lbp_feature(&img, BlockGrid::new(4, 8)).unwrap()
        );
        assert_eq!(
            hog_feature(&img, HogParams::default()).unwrap(),
            hog_feature(&img, HogParams::default()).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn histogram_mass_is_conserved(w in 3usize..40, h in 3usize..40, seed: u64) {
        let img = common::random_image(&mut common::rng(seed), w, h);
        let interior = ((w - 2) * (h - 2)) as f64;
        let lbp = lbp_feature(&img, BlockGrid::new(1, 1)).unwrap();
        prop_assert_eq!(lbp.dim(), LBP_BINS);
        prop_assert_eq!(lbp.values().iter().sum::<f64>(), interior);
        let wld = wld_feature(&img, WldParams::default()).unwrap();
        prop_assert_eq!(wld.values().iter().sum::<f64>(), interior);
    }

    #[test]
    fn mv_bounds_and_amv_degenerate_grid(w in 1usize..40, h in 1usize..40, seed: u64) {
        let img = common::random_image(&mut common::rng(seed), w, h);
        let mv = mv_feature(&img);
        let (m, v) = (mv.values()[0], mv.values()[1]);
        prop_assert!((0.0..=255.0).contains(&m));
        prop_assert!((0.0..=16256.25).contains(&v));
        let amv = amv_feature(&img, BlockGrid::new(1, 1)).unwrap();
        prop_assert_eq!(amv.values(), mv.values());
    }

    #[test]
    fn hsp_blocks_are_distributions(w in 10usize..70, h in 6usize..70, seed: u64, k in 0usize..4) {
        let img = common::random_image(&mut common::rng(seed), w, h);
        let p = HspParams { bins: [8, 16, 32, 64][k], ..HspParams::default() };
        let f = hsp_feature(&img, &p).unwrap();
        prop_assert_eq!(f.dim(), p.dim());
        for block in f.values().chunks(p.bins) {
            prop_assert!((block.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hog_block_norms_bounded(w in 16usize..60, h in 16usize..60, seed: u64) {
        let img = common::random_image(&mut common::rng(seed), w, h);
        let p = HogParams::default();
        let f = hog_feature(&img, p).unwrap();
        let block_len = p.block * p.block * p.bins;
        prop_assert_eq!(f.dim() % block_len, 0);
        for block in f.values().chunks(block_len) {
            prop_assert!(block.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + 1e-6);
        }
    }
}
