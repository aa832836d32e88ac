use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn veinfuse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_veinfuse"))
        .args(args)
        .current_dir(dir)
        .env_remove("VEINFUSE_THREADS")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Generates the 10 × 6 corpus and a config pointing at it.
fn setup(dir: &Path) {
    ok(&veinfuse(
        dir,
        &[
            "synth",
            "--classes",
            "10",
            "--samples",
            "6",
            "--seed",
            "3",
            "--out",
            "d",
        ],
    ));
    fs::write(dir.join("c.cfg"), "dataset_root = d\noutput_dir = out\n").unwrap();
}

#[test]
fn synth_then_eval_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    assert!(tmp.path().join("d/class_001/sample_01.pgm").is_file());
    let summary = ok(&veinfuse(tmp.path(), &["--threads", "2", "eval", "--config", "c.cfg"]));
    assert!(summary.contains("EER fused"), "{summary}");
    let out = tmp.path().join("out");
    for f in [
        "report.txt",
        "scores_test.csv",
        "roc_fused.csv",
        "resolved.cfg",
        "trained.cfg",
        "model.txt",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("report.txt")).unwrap(), summary);

    // the resolved echo reproduces the run
    let again = ok(&veinfuse(
        tmp.path(),
        &["eval", "--config", "out/resolved.cfg", "--out", "again"],
    ));
    assert_eq!(again, summary);
    for f in ["scores_train.csv", "scores_test.csv"] {
        assert_eq!(
            fs::read(out.join(f)).unwrap(),
            fs::read(tmp.path().join("again").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = veinfuse(tmp.path(), &["eval"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
    assert_eq!(code(&veinfuse(tmp.path(), &["frobnicate"])), 1);
    assert_eq!(
        code(&veinfuse(
            tmp.path(),
            &["sweep", "--config", "c.cfg", "--param", "gamma", "--values", "1"]
        )),
        1
    );
    assert_eq!(code(&veinfuse(tmp.path(), &["--help"])), 0);
}

#[test]
fn data_and_config_errors_exit_2_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, &str); 3] = [
        ("missing.cfg", ""),
        ("bad.cfg", "sigma = -3\n"),
        ("unknown.cfg", "gamma = 2\n"),
    ];
    for (name, text) in cases {
        if !text.is_empty() {
            fs::write(tmp.path().join(name), text).unwrap();
        }
        let out = veinfuse(tmp.path(), &["eval", "--config", name]);
        assert_eq!(code(&out), 2, "{name}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("veinfuse: "), "{err}");
    }
    fs::write(tmp.path().join("empty.cfg"), "dataset_root = nowhere\n").unwrap();
    assert_eq!(code(&veinfuse(tmp.path(), &["eval", "--config", "empty.cfg"])), 2);
}

#[test]
fn match_on_identical_images_scores_the_bias() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    ok(&veinfuse(tmp.path(), &["train", "--config", "c.cfg"]));
    let model = fs::read_to_string(tmp.path().join("out/model.txt")).unwrap();
    let bias: f64 = model.lines().nth(1).unwrap().trim().parse().unwrap();
    fs::copy(
        tmp.path().join("d/class_002/sample_03.pgm"),
        tmp.path().join("copy.pgm"),
    )
    .unwrap();

    let printed = ok(&veinfuse(
        tmp.path(),
        &[
            "match",
            "d/class_002/sample_03.pgm",
            "copy.pgm",
            "--model",
            "out/model.txt",
        ],
    ));
    let value = |name: &str| -> String {
        printed
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name} ")))
            .unwrap()
            .to_string()
    };
    let primary: f64 = value("primary").parse().unwrap();
    assert!((primary - bias).abs() <= 1e-9, "{primary} vs {bias}");
    assert_eq!(value("soft").parse::<f64>().unwrap(), 0.0);
    assert_eq!(value("fused"), "n/a");

    // with the trained config the fused score is available too
    let printed = ok(&veinfuse(
        tmp.path(),
        &[
            "match",
            "d/class_002/sample_03.pgm",
            "copy.pgm",
            "--config",
            "out/trained.cfg",
        ],
    ));
    let fused = printed.lines().find_map(|l| l.strip_prefix("fused ")).unwrap();
    assert!(fused.parse::<f64>().is_ok(), "{printed}");
}

#[test]
fn extract_writes_features_and_layers() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&veinfuse(
        tmp.path(),
        &["synth", "--classes", "2", "--samples", "2", "--out", "d"],
    ));
    fs::write(tmp.path().join("c.cfg"), "dataset_root = d\n").unwrap();
    ok(&veinfuse(
        tmp.path(),
        &[
            "extract",
            "--config",
            "c.cfg",
            "--out",
            "f.txt",
            "--dump-layers",
            "layers",
        ],
    ));
    let text = fs::read_to_string(tmp.path().join("f.txt")).unwrap();
    // primary then soft record per image
    assert_eq!(text.lines().count(), 8);
    let first: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(&first[..3], ["class_001/sample_01.pgm", "primary", "lbp"]);
    assert_eq!(first[3].parse::<usize>().unwrap() + 4, first.len());
    for tag in ["fg", "bg"] {
        assert!(tmp
            .path()
            .join("layers")
            .join(tag)
            .join("class_002/sample_02.pgm")
            .is_file());
    }
}

#[test]
fn sweep_and_thread_settings_agree() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path());
    fs::write(
        tmp.path().join("s.cfg"),
        "dataset_root = d\noutput_dir = sw\nmatching = single\n",
    )
    .unwrap();
    let one = ok(&veinfuse(
        tmp.path(),
        &[
            "--threads",
            "1",
            "sweep",
            "--config",
            "s.cfg",
            "--param",
            "sigma",
            "--values",
            "10,22",
        ],
    ));
    assert_eq!(one.lines().count(), 3);
    assert_eq!(one.lines().next(), Some("value,eer_primary,eer_soft,eer_fused"));
    let env = Command::new(env!("CARGO_BIN_EXE_veinfuse"))
        .args([
            "sweep", "--config", "s.cfg", "--param", "sigma", "--values", "10,22", "--out", "sw4",
        ])
        .current_dir(tmp.path())
        .env("VEINFUSE_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(ok(&env), one);
}
