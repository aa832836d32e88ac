//! Datasets, pair protocols, ROC analysis and complete experiment runs.

mod dataset;
mod pairs;
mod roc;
mod run;
mod sweep;
mod synth;

pub use dataset::{index_dataset, index_dataset_with, ClassKey, DatasetIndex, Digit, Finger, Hand, Layout, SampleId};
pub use pairs::{build_pairs, ImpostorCount, PairSet, Role, Split};
pub use roc::{compute_roc, roc_csv, RocCurve, RocPoint};
pub use run::{
    evaluate, extract_primary, extract_soft, pair_primary_features, primary_source, run_evaluation, scores_csv,
    separate, thread_pool, train_only, window_rows, write_outputs, Channel, Counts, EvalReport, PairKind, PairScore,
};
pub use sweep::{sweep_csv, sweep_parameter, with_value, SweepParam};
pub use synth::{class_dir_name, sample_file_name, synth_corpus, synth_sample, SynthParams, SynthSample};
