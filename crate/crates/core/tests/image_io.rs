mod common;

use std::fs;

use proptest::prelude::*;
use veinfuse::imgcore::{load_image, save_image, GrayImage, ImageFormat};
use veinfuse::Error;

#[test]
fn large_random_image_round_trips_in_both_formats() {
    let img = common::random_image(&mut common::rng(640), 640, 480);
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("a.pgm", ImageFormat::Pgm), ("a.png", ImageFormat::Png)] {
        let path = dir.path().join(name);
        save_image(&img, &path, fmt).unwrap();
        assert_eq!(load_image(&path).unwrap(), img, "{name}");
    }
}

#[test]
fn resaving_a_pgm_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.pgm");
    let mut bytes = b"P5\n3 2\n255\n".to_vec();
    bytes.extend([0, 1, 2, 253, 254, 255]);
    fs::write(&src, &bytes).unwrap();
    let out = dir.path().join("out.pgm");
    save_image(&load_image(&src).unwrap(), &out, ImageFormat::Pgm).unwrap();
    assert_eq!(fs::read(out).unwrap(), bytes);
}

#[test]
fn missing_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::filled(2, 2, 9);
    let err = save_image(&img, dir.path().join("no/such/dir/x.pgm"), ImageFormat::Pgm).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_image_round_trips(w in 1usize..40, h in 1usize..40, seed: u64, png: bool) {
        let img = common::random_image(&mut common::rng(seed), w, h);
        let dir = tempfile::tempdir().unwrap();
        let (path, fmt) = if png {
            (dir.path().join("x.png"), ImageFormat::Png)
        } else {
            (dir.path().join("x.pgm"), ImageFormat::Pgm)
        };
        save_image(&img, &path, fmt).unwrap();
        prop_assert_eq!(load_image(&path).unwrap(), img);
    }
}
