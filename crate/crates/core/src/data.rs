//! Core domain types shared by every other module. All types are immutable
//! after construction and safe to share across worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{IntervalSet, TimeInterval, Timestamp};

/// Operational category of an annotated event.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EventCategory {
    Anomaly,
    RareNominal,
    CommunicationGap,
    InvalidSegment,
}

impl EventCategory {
    pub const ALL: [EventCategory; 4] = [
        EventCategory::Anomaly,
        EventCategory::RareNominal,
        EventCategory::CommunicationGap,
        EventCategory::InvalidSegment,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventCategory::Anomaly => "Anomaly",
            EventCategory::RareNominal => "RareNominal",
            EventCategory::CommunicationGap => "CommunicationGap",
            EventCategory::InvalidSegment => "InvalidSegment",
        }
    }
}

impl FromStr for EventCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Anomaly" => Ok(EventCategory::Anomaly),
            "RareNominal" => Ok(EventCategory::RareNominal),
            "CommunicationGap" => Ok(EventCategory::CommunicationGap),
            "InvalidSegment" => Ok(EventCategory::InvalidSegment),
            other => Err(Error::validation(format!("unknown event category {other:?}"))),
        }
    }
}

impl fmt::Display for EventCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Dimensionality {
    Univariate,
    Multivariate,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Locality {
    Local,
    Global,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EventLength {
    Point,
    Subsequence,
}

/// The three attributes of the anomaly-type taxonomy. Always set for
/// anomalies and rare nominal events, never for gaps or invalid segments.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct AnomalyTypeAttributes {
    pub dimensionality: Dimensionality,
    pub locality: Locality,
    pub length: EventLength,
}

impl Dimensionality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dimensionality::Univariate => "Univariate",
            Dimensionality::Multivariate => "Multivariate",
        }
    }
}

impl Locality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Locality::Local => "Local",
            Locality::Global => "Global",
        }
    }
}

impl EventLength {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventLength::Point => "Point",
            EventLength::Subsequence => "Subsequence",
        }
    }
}

impl FromStr for Dimensionality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Univariate" => Ok(Dimensionality::Univariate),
            "Multivariate" => Ok(Dimensionality::Multivariate),
            other => Err(Error::validation(format!("unknown dimensionality {other:?}"))),
        }
    }
}

impl FromStr for Locality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Local" => Ok(Locality::Local),
            "Global" => Ok(Locality::Global),
            other => Err(Error::validation(format!("unknown locality {other:?}"))),
        }
    }
}

impl FromStr for EventLength {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Point" => Ok(EventLength::Point),
            "Subsequence" => Ok(EventLength::Subsequence),
            other => Err(Error::validation(format!("unknown length {other:?}"))),
        }
    }
}

/// Channel kind used by the standardization chain. `Auto` defers to
/// detection from training data; explicit metadata wins over detection.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub enum ChannelKind {
    #[default]
    Auto,
    Continuous,
    Binary,
    Constant,
    Monotonic,
    Categorical,
}

impl ChannelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelKind::Auto => "Auto",
            ChannelKind::Continuous => "Continuous",
            ChannelKind::Binary => "Binary",
            ChannelKind::Constant => "Constant",
            ChannelKind::Monotonic => "Monotonic",
            ChannelKind::Categorical => "Categorical",
        }
    }
}

impl FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" | "Auto" => Ok(ChannelKind::Auto),
            "Continuous" => Ok(ChannelKind::Continuous),
            "Binary" => Ok(ChannelKind::Binary),
            "Constant" => Ok(ChannelKind::Constant),
            "Monotonic" => Ok(ChannelKind::Monotonic),
            "Categorical" => Ok(ChannelKind::Categorical),
            other => Err(Error::validation(format!("unknown channel kind {other:?}"))),
        }
    }
}

/// Static description of one telemetry channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMeta {
    pub name: String,
    pub subsystem: String,
    pub group: i64,
    pub unit: String,
    pub target: bool,
    pub kind: ChannelKind,
}

/// One annotated event: segments are per-channel sets of closed intervals,
/// pairwise non-overlapping within a channel but possibly fragmented.
#[derive(Clone, Debug)]
pub struct EventAnnotation {
    pub id: String,
    pub category: EventCategory,
    pub class: String,
    pub subclass: String,
    pub segments: BTreeMap<String, IntervalSet>,
    pub attributes: Option<AnomalyTypeAttributes>,
}

impl EventAnnotation {
    /// Logical sum of the event's segments across the given channels
    /// (all channels when `channels` is `None`). May be fragmented.
    pub fn global_span<'a>(&self, channels: Option<&dyn Fn(&str) -> bool>) -> IntervalSet
    where
        Self: 'a,
    {
        let mut out = IntervalSet::new();
        for (channel, set) in &self.segments {
            if channels.map_or(true, |keep| keep(channel)) {
                out = out.union(set);
            }
        }
        out
    }

    pub fn channels(&self) -> impl Iterator<Item = &str> {
        self.segments.keys().map(|s| s.as_str())
    }
}

/// Strictly time-ordered samples of one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSeries {
    channel: String,
    timestamps: Vec<Timestamp>,
    values: Vec<f64>,
}

impl ChannelSeries {
    pub fn new(channel: impl Into<String>, timestamps: Vec<Timestamp>, values: Vec<f64>) -> Result<Self> {
        let channel = channel.into();
        if timestamps.len() != values.len() {
            return Err(Error::validation(format!(
                "channel {channel}: {} timestamps vs {} values",
                timestamps.len(),
                values.len()
            )));
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::validation(format!(
                    "channel {channel}: timestamps not strictly increasing at {}",
                    pair[1]
                )));
            }
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "channel {channel}: non-finite value {bad}"
            )));
        }
        Ok(ChannelSeries {
            channel,
            timestamps,
            values,
        })
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn span(&self) -> Option<TimeInterval> {
        match (self.timestamps.first(), self.timestamps.last()) {
            (Some(&a), Some(&b)) => Some(TimeInterval::new(a, b).expect("ordered series")),
            _ => None,
        }
    }

    /// Index range of samples with timestamps inside the closed window.
    pub fn index_range(&self, window: &TimeInterval) -> std::ops::Range<usize> {
        let lo = self.timestamps.partition_point(|t| *t < window.start());
        let hi = self.timestamps.partition_point(|t| *t <= window.end());
        lo..hi
    }

    pub fn iter(&self) -> impl Iterator<Item = (Timestamp, f64)> + '_ {
        self.timestamps.iter().copied().zip(self.values.iter().copied())
    }
}

/// Per-channel binary detections as merged interval sets, plus entries
/// reported without channel attribution (the reserved `__global__` channel).
#[derive(Clone, Debug)]
pub struct DetectionSet {
    per_channel: BTreeMap<String, IntervalSet>,
    global_only: IntervalSet,
    timeline: TimeInterval,
}

pub const GLOBAL_CHANNEL: &str = "__global__";

impl DetectionSet {
    pub fn new(
        per_channel: BTreeMap<String, IntervalSet>,
        global_only: IntervalSet,
        timeline: TimeInterval,
    ) -> Result<Self> {
        for (channel, set) in &per_channel {
            if let Some(hull) = set.hull() {
                if hull.start() < timeline.start() || hull.end() > timeline.end() {
                    return Err(Error::validation(format!(
                        "detections for channel {channel} fall outside the timeline"
                    )));
                }
            }
        }
        if let Some(hull) = global_only.hull() {
            if hull.start() < timeline.start() || hull.end() > timeline.end() {
                return Err(Error::validation(
                    "global detections fall outside the timeline".to_string(),
                ));
            }
        }
        Ok(DetectionSet {
            per_channel,
            global_only,
            timeline,
        })
    }

    pub fn empty(timeline: TimeInterval) -> Self {
        DetectionSet {
            per_channel: BTreeMap::new(),
            global_only: IntervalSet::new(),
            timeline,
        }
    }

    pub fn per_channel(&self) -> &BTreeMap<String, IntervalSet> {
        &self.per_channel
    }

    pub fn channel(&self, name: &str) -> Option<&IntervalSet> {
        self.per_channel.get(name)
    }

    pub fn global_only(&self) -> &IntervalSet {
        &self.global_only
    }

    /// Logical OR of every channel plus the unattributed entries, merged
    /// into maximal segments.
    pub fn global_view(&self) -> IntervalSet {
        let mut out = self.global_only.clone();
        for set in self.per_channel.values() {
            out = out.union(set);
        }
        out
    }

    /// True when the detector reported per-channel output (required by the
    /// subsystem- and channel-aware scores).
    pub fn has_channel_detail(&self) -> bool {
        !self.per_channel.is_empty()
    }

    pub fn timeline(&self) -> TimeInterval {
        self.timeline
    }

    /// Re-window the set, clamping every interval to the new timeline.
    pub fn clamped_to(&self, timeline: TimeInterval) -> DetectionSet {
        DetectionSet {
            per_channel: self
                .per_channel
                .iter()
                .map(|(k, v)| (k.clone(), v.clamp_to(&timeline)))
                .collect(),
            global_only: self.global_only.clamp_to(&timeline),
            timeline,
        }
    }

    /// Restrict per-channel detections to a channel subset; unattributed
    /// entries pass through.
    pub fn restricted_to(&self, keep: impl Fn(&str) -> bool) -> DetectionSet {
        DetectionSet {
            per_channel: self
                .per_channel
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            global_only: self.global_only.clone(),
            timeline: self.timeline,
        }
    }
}

/// Precision/recall/F-beta triple; every score lies in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub fbeta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdtqcSummary {
    pub score: f64,
    pub after_ratio: f64,
}

/// The full hierarchical score tuple for one algorithm run. Serialized as a
/// flat JSON document with exactly these field names; scores carry full
/// double precision (rounding happens only in the ranking layer).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub event_f: PrfScore,
    pub subsystem_f: Option<PrfScore>,
    pub channel_f: Option<PrfScore>,
    pub alarming_precision: f64,
    pub adtqc: AdtqcSummary,
    pub affiliation: PrfScore,
    pub beta: f64,
    pub excluded_categories: Vec<String>,
}

impl MetricReport {
    pub fn scores_in_unit_range(&self) -> bool {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        let prf = |p: &PrfScore| ok(p.precision) && ok(p.recall) && ok(p.fbeta);
        prf(&self.event_f)
            && self.subsystem_f.as_ref().map_or(true, |p| prf(p))
            && self.channel_f.as_ref().map_or(true, |p| prf(p))
            && ok(self.alarming_precision)
            && ok(self.adtqc.score)
            && ok(self.adtqc.after_ratio)
            && prf(&self.affiliation)
    }
}
