//! Labeled development datasets from raw sequence pairs.

mod augment;
mod balance;
mod dataset;
mod labels;
mod severity;
mod window;

pub use augment::{augment_awgn, augment_drop, augment_drop_corpus, center_beam_cut, CODEBOOK_WIDTH};
pub use balance::balance;
pub use dataset::{
    build_direction_dataset, build_instance_dataset, build_occurrence_dataset, build_severity_dataset, split,
    standardize, BuildOptions, DevelopmentDataset, Split, Standardization,
};
pub use labels::{label_instance, label_occurrence};
pub use severity::{
    average_blocked_durations, label_severity, severity_partition, severity_partition_on, DurationScale, SeverityPartition,
};
pub use window::{slide_windows, DataPoint, Label, Labeling, Provenance, Task, WindowSpec};
