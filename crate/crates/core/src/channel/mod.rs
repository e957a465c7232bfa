//! Synthetic received-power sequences from a two-ray channel with a moving
//! blocker, observed through a beam-steering codebook.

pub mod array;
pub mod fleet;
pub mod scene;
pub mod sequence;

pub use array::{array_response, build_codebook, ArrayConfig, Codebook};
pub use fleet::{make_fleet, outdoor_class_durations, BlockerClass, CodebookConfig, ScenarioConfig};
pub use scene::{channel_at, link_blocked, point_segment_distance, received_power, Point2, Ray, Scene, SceneTags, Trajectory};
pub use sequence::{simulate_samples, simulate_sequence, RawSequencePair, SequenceMetadata};
