use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use veinfuse::config::{parse_config, AlphaSetting, Matching, RunConfig};
use veinfuse::evalproto::{
    extract_primary, extract_soft, index_dataset_with, pair_primary_features, primary_source, run_evaluation, separate,
    sweep_parameter, synth_corpus, thread_pool, train_only, window_rows, write_outputs, SweepParam,
};
use veinfuse::features::{write_features, FeatureRecord};
use veinfuse::imgcore::{load_image, save_image, ImageFormat};
use veinfuse::matcher::{diff_vector_with, fuse_scores, load_model, manhattan_score, normalize_score, FusionParams};
use veinfuse::textfmt::sig9;
use veinfuse::Error;

#[derive(Parser)]
#[command(
    name = "veinfuse",
    version,
    about = "Finger-vein verification with a background soft trait"
)]
struct Cli {
    /// Worker threads (falls back to VEINFUSE_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Write primary and soft features of every image in the dataset.
    Extract(ExtractArgs),
    /// Train the SVM, score statistics and fusion weight.
    Train(RunArgs),
    /// Full evaluation: train, score the test role, ROC per channel.
    Eval(RunArgs),
    /// Repeat the evaluation over values of one parameter.
    Sweep(SweepArgs),
    /// Score one pair of images with a trained model.
    Match(MatchArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Generator settings (`synth_*` keys); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    config: PathBuf,
    /// Feature file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write each image's foreground and background layers here.
    #[arg(long)]
    dump_layers: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    image_a: PathBuf,
    image_b: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Usually the `trained.cfg` written by `train` or `eval`.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("veinfuse: {}", one_line(&e));
            ExitCode::from(2)
        }
    }
}

fn one_line(e: &Error) -> String {
    e.to_string().replace('\n', " ")
}

fn threads(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var("VEINFUSE_THREADS").ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn load_config(path: &Path, out: Option<PathBuf>) -> veinfuse::Result<RunConfig> {
    let mut cfg = parse_config(path)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> veinfuse::Result<()> {
    let threads = threads(cli.threads);
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract(a, threads),
        Command::Train(a) => {
            let cfg = load_config(&a.config, a.out)?;
            let report = train_only(&cfg, threads)?;
            write_outputs(&report, &cfg.output_dir)?;
            print!("{}", report.summary());
            Ok(())
        }
        Command::Eval(a) => {
            let cfg = load_config(&a.config, a.out)?;
            let report = run_evaluation(&cfg, threads)?;
            print!("{}", report.summary());
            Ok(())
        }
        Command::Sweep(a) => {
            let cfg = load_config(&a.config, a.out)?;
            let reports = sweep_parameter(&cfg, a.param, &a.values, threads)?;
            print!("{}", veinfuse::evalproto::sweep_csv(&reports));
            Ok(())
        }
        Command::Match(a) => match_pair(a),
    }
}

fn synth(a: SynthArgs) -> veinfuse::Result<()> {
    let mut p = match &a.config {
        Some(path) => parse_config(path)?.synth,
        None => RunConfig::default().synth,
    };
    p.classes = a.classes.unwrap_or(p.classes);
    p.samples_per_class = a.samples.unwrap_or(p.samples_per_class);
    p.seed = a.seed.unwrap_or(p.seed);
    p.width = a.width.unwrap_or(p.width);
    p.height = a.height.unwrap_or(p.height);
    let index = synth_corpus(&p, &a.out)?;
    println!(
        "{} classes, {} images in {}",
        index.classes,
        index.samples.len(),
        a.out.display()
    );
    Ok(())
}

fn extract(a: ExtractArgs, threads: usize) -> veinfuse::Result<()> {
    use rayon::prelude::*;

    let cfg = parse_config(&a.config)?;
    let index = index_dataset_with(&cfg.dataset_root, cfg.layout, cfg.layout_overrides.as_deref())?;
    for w in &index.warnings {
        eprintln!("veinfuse: warning: {w}");
    }
    let pool = thread_pool(threads)?;
    let per_image = pool.install(|| {
        index
            .samples
            .par_iter()
            .map(|s| {
                let roi = load_image(&s.path)?;
                let layers = separate(&roi, &cfg)?;
                if let Some(dir) = &a.dump_layers {
                    for (tag, img) in [("fg", &layers.foreground), ("bg", &layers.background)] {
                        let path = dir.join(tag).join(&s.rel).with_extension("pgm");
                        if let Some(parent) = path.parent() {
                            fs::create_dir_all(parent).map_err(|e| Error::Io {
                                path: parent.to_path_buf(),
                                source: e,
                            })?;
                        }
                        save_image(img, &path, ImageFormat::Pgm)?;
                    }
                }
                let mut recs = Vec::new();
                if let Some(e) = cfg.soft {
                    recs.push(FeatureRecord {
                        sample_id: s.rel.clone(),
                        feature: extract_soft(&layers.background, e, &cfg)?,
                    });
                }
                if let Some(e) = cfg.primary {
                    let src = primary_source(roi, &layers, &cfg);
                    recs.insert(
                        0,
                        FeatureRecord {
                            sample_id: s.rel.clone(),
                            feature: extract_primary(&src, e, &cfg)?,
                        },
                    );
                }
                Ok(recs)
            })
            .collect::<veinfuse::Result<Vec<_>>>()
    })?;
    let records: Vec<FeatureRecord> = per_image.into_iter().flatten().collect();
    write_features(&a.out, &records)?;
    println!("{} records from {} images", records.len(), index.samples.len());
    Ok(())
}

fn match_pair(a: MatchArgs) -> veinfuse::Result<()> {
    let cfg = match &a.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    let model = match a.model.as_ref().or(cfg.model.as_ref()) {
        Some(p) => Some(load_model(p)?),
        None => None,
    };
    let roi_a = load_image(&a.image_a)?;
    let roi_b = load_image(&a.image_b)?;
    let (la, lb) = (separate(&roi_a, &cfg)?, separate(&roi_b, &cfg)?);

    let primary = match cfg.primary {
        Some(e) => {
            let (sa, sb) = (primary_source(roi_a, &la, &cfg), primary_source(roi_b, &lb, &cfg));
            let rows = window_rows(sa.height().min(sb.height()), cfg.max_shift)?;
            let (fa, fb) = pair_primary_features(&sa, &sb, e, rows, &cfg)?;
            Some(match cfg.matching {
                Matching::Hybrid => {
                    let m = model.as_ref().ok_or_else(|| {
                        Error::InvalidParams("hybrid matching needs a model (--model or `model` in the config)".into())
                    })?;
                    m.decision(&diff_vector_with(&fa, &fb, cfg.diff_mode)?)?
                }
                Matching::Single => manhattan_score(&fa, &fb)?,
            })
        }
        None => None,
    };
    let soft = match cfg.soft {
        Some(e) => Some(manhattan_score(
            &extract_soft(&la.background, e, &cfg)?,
            &extract_soft(&lb.background, e, &cfg)?,
        )?),
        None => None,
    };
    let fused = match (primary, soft, cfg.primary_stats(), cfg.soft_stats(), cfg.alpha) {
        (Some(p), Some(s), Some(ps), Some(ss), AlphaSetting::Fixed(alpha)) => Some(fuse_scores(
            normalize_score(p, &ps),
            normalize_score(s, &ss),
            FusionParams::new(alpha)?,
        )),
        _ => None,
    };
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), sig9);
    println!("primary {}", show(primary));
    println!("soft {}", show(soft));
    println!("fused {}", show(fused));
    Ok(())
}
