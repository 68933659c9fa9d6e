//! Automatic inference of the three anomaly-type attributes from
//! per-channel annotations: dimensionality from the number of affected
//! channels, locality from the nominal min/max envelope, and length from
//! the dominant sampling frequency.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::data::{
    AnomalyTypeAttributes, ChannelSeries, Dimensionality, EventAnnotation, EventCategory,
    EventLength, Locality,
};
use crate::error::{Error, Result};
use crate::io::MissionDataset;
use crate::time::IntervalSet;

/// Per-channel (min, max) over all nominal samples in the dataset. Nominal
/// means outside every annotated event segment, of any category.
#[derive(Clone, Debug, Default)]
pub struct NominalEnvelope {
    per_channel: BTreeMap<String, (f64, f64)>,
}

impl NominalEnvelope {
    pub fn get(&self, channel: &str) -> Option<(f64, f64)> {
        self.per_channel.get(channel).copied()
    }

    pub fn insert(&mut self, channel: impl Into<String>, min: f64, max: f64) {
        self.per_channel.insert(channel.into(), (min, max));
    }

    /// Compute the envelope over the given channels (all channels when
    /// `subset` is `None`). Channels with no nominal samples are skipped.
    pub fn compute(dataset: &MissionDataset, subset: Option<&BTreeSet<String>>) -> NominalEnvelope {
        let mut out = NominalEnvelope::default();
        for (name, series) in &dataset.channels {
            if let Some(keep) = subset {
                if !keep.contains(name) {
                    continue;
                }
            }
            let annotated = dataset.channel_annotations(name);
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            let intervals = annotated.intervals();
            let mut k = 0usize;
            for (ts, value) in series.iter() {
                while k < intervals.len() && intervals[k].end() < ts {
                    k += 1;
                }
                if k < intervals.len() && intervals[k].contains(ts) {
                    continue;
                }
                min = min.min(value);
                max = max.max(value);
            }
            if min.is_finite() {
                out.per_channel.insert(name.clone(), (min, max));
            }
        }
        out
    }
}

/// The mode of inter-sample spacings, expressed as a frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominantFrequency {
    hz: f64,
}

impl DominantFrequency {
    pub fn from_hz(hz: f64) -> Result<Self> {
        if !(hz > 0.0) {
            return Err(Error::validation(format!("dominant frequency must be > 0, got {hz}")));
        }
        Ok(DominantFrequency { hz })
    }

    pub fn hz(&self) -> f64 {
        self.hz
    }

    pub fn period_ns(&self) -> f64 {
        1e9 / self.hz
    }
}

/// Dominant sampling frequency across a channel subset: the most frequent
/// inter-timestamp delta, ties broken toward the smaller delta (the higher
/// frequency, which is conservative for point detection).
pub fn dominant_frequency<'a, I>(series: I) -> Result<DominantFrequency>
where
    I: IntoIterator<Item = &'a ChannelSeries>,
{
    let mut counts: HashMap<i64, u64> = HashMap::new();
    for s in series {
        for pair in s.timestamps().windows(2) {
            *counts.entry(pair[1].ns() - pair[0].ns()).or_insert(0) += 1;
        }
    }
    let best = counts
        .into_iter()
        .max_by(|(da, ca), (db, cb)| ca.cmp(cb).then(db.cmp(da)))
        .ok_or_else(|| Error::validation("dominant frequency needs at least one series with two samples"))?;
    DominantFrequency::from_hz(1e9 / best.0 as f64)
}

/// One affected channel makes an event univariate; two or more make it
/// multivariate. `None` when the event touches no channel in the subset.
pub fn infer_dimensionality(
    event: &EventAnnotation,
    subset: Option<&BTreeSet<String>>,
) -> Option<Dimensionality> {
    let affected = event
        .segments
        .keys()
        .filter(|c| subset.map_or(true, |s| s.contains(*c)))
        .count();
    match affected {
        0 => None,
        1 => Some(Dimensionality::Univariate),
        _ => Some(Dimensionality::Multivariate),
    }
}

/// Global iff any sample inside any annotated segment of the event lies
/// strictly outside the nominal (min, max) of its channel. Values exactly
/// at the envelope boundary stay local.
pub fn infer_locality(
    event: &EventAnnotation,
    envelope: &NominalEnvelope,
    dataset: &MissionDataset,
    subset: Option<&BTreeSet<String>>,
) -> Result<Locality> {
    for (channel, segments) in &event.segments {
        if let Some(keep) = subset {
            if !keep.contains(channel) {
                continue;
            }
        }
        let (min, max) = envelope.get(channel).ok_or_else(|| Error::UnknownName {
            kind: "channel in nominal envelope",
            name: channel.clone(),
        })?;
        let series = dataset.channels.get(channel).ok_or_else(|| Error::UnknownName {
            kind: "channel",
            name: channel.clone(),
        })?;
        for iv in segments.iter() {
            let range = series.index_range(iv);
            for &value in &series.values()[range] {
                if value < min || value > max {
                    return Ok(Locality::Global);
                }
            }
        }
    }
    Ok(Locality::Local)
}

/// Span of a closed region in samples after conceptual resampling to the
/// dominant frequency: `floor(duration / period) + 1` grid points. The tiny
/// epsilon keeps exact multiples stable under floating-point division.
fn region_span_samples(duration_ns: i64, dominant: &DominantFrequency) -> u64 {
    let ratio = duration_ns as f64 / dominant.period_ns();
    (ratio + 1e-9).floor() as u64 + 1
}

/// Point iff every annotated region of the event spans at most 3 samples at
/// the dominant frequency; regions are the fragments of the event's merged
/// span across the channel subset, each evaluated separately.
pub fn infer_length(
    event: &EventAnnotation,
    dominant: &DominantFrequency,
    subset: Option<&BTreeSet<String>>,
) -> EventLength {
    let span: IntervalSet = match subset {
        Some(keep) => event.global_span(Some(&|c: &str| keep.contains(c))),
        None => event.global_span(None),
    };
    let all_point = span
        .iter()
        .all(|region| region_span_samples(region.duration_ns(), dominant) <= 3);
    if all_point && !span.is_empty() {
        EventLength::Point
    } else {
        EventLength::Subsequence
    }
}

/// Infer attributes for every anomaly and rare nominal event; communication
/// gaps and invalid segments are skipped, as are events that do not touch
/// the channel subset.
pub fn infer_all(
    events: &[EventAnnotation],
    dataset: &MissionDataset,
    subset: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, AnomalyTypeAttributes>> {
    let envelope = NominalEnvelope::compute(dataset, subset);
    let dominant = dominant_frequency(dataset.channels.iter().filter_map(|(name, series)| {
        if subset.map_or(true, |s| s.contains(name)) {
            Some(series)
        } else {
            None
        }
    }))?;
    let mut out = BTreeMap::new();
    for event in events {
        if !matches!(event.category, EventCategory::Anomaly | EventCategory::RareNominal) {
            continue;
        }
        let dimensionality = match infer_dimensionality(event, subset) {
            Some(d) => d,
            None => continue,
        };
        let locality = infer_locality(event, &envelope, dataset, subset)?;
        let length = infer_length(event, &dominant, subset);
        out.insert(
            event.id.clone(),
            AnomalyTypeAttributes {
                dimensionality,
                locality,
                length,
            },
        );
    }
    Ok(out)
}
