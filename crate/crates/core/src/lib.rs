//! Evaluation stack for multivariate time-series anomaly detection on
//! irregularly sampled telemetry: time-domain metrics with hierarchical
//! ranking, zero-order-hold preprocessing, anomaly-taxonomy inference,
//! dataset splitting, statistical baseline detectors, and a deterministic
//! synthetic-mission generator.
//!
//! Everything operates on nanosecond closed intervals, so ground truth and
//! detections may use completely different sets of timestamps.

pub mod data;
pub mod detect;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod taxonomy;
pub mod time;

pub use data::{
    AdtqcSummary, AnomalyTypeAttributes, ChannelKind, ChannelMeta, ChannelSeries, DetectionSet,
    Dimensionality, EventAnnotation, EventCategory, EventLength, Locality, MetricReport, PrfScore,
};
pub use error::{Error, Result};
pub use io::MissionDataset;
pub use time::{IntervalSet, TimeInterval, Timestamp};
