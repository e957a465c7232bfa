//! Evaluation metrics and dataset statistics.

mod analysis;
mod report;
mod scores;

pub use analysis::{pre_blockage_std_contrast, power_histogram, proximity_stats, Histogram, ProximityStats, PROXIMITY_WINDOW};
pub use report::{HorizonEntry, MetricsReport};
pub use scores::{confusion_matrix, confusion_matrix_over, instance_error_stats, top1_accuracy, ConfusionMatrix};
