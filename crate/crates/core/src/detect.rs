//! Baseline detectors behind a common trait, registered by name and
//! selected at runtime. Both baselines are per-channel, streaming-causal
//! (the decision at a sample uses only that sample) and fitted from nominal
//! training samples only, excluding every annotated event including rare
//! nominals.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ChannelSeries, DetectionSet};
use crate::error::{Error, Result};
use crate::io::MissionDataset;
use crate::time::{IntervalSet, TimeInterval};

/// A fitted or fittable detection algorithm.
pub trait Detector: Send + Sync {
    /// Registry name of the algorithm family.
    fn name(&self) -> &'static str;

    /// Fit per-channel parameters from the nominal samples of every target
    /// channel within the training window.
    fn fit(&mut self, data: &MissionDataset, window: TimeInterval) -> Result<()>;

    /// Flag samples of the given window and merge consecutive flagged
    /// samples into closed intervals, per channel.
    fn detect(&self, data: &MissionDataset, window: TimeInterval) -> Result<DetectionSet>;

    /// Serializable model state (channel -> parameters).
    fn to_model(&self) -> serde_json::Value;
}

/// Construction-time knobs shared by the registry entries.
#[derive(Clone, Copy, Debug)]
pub struct DetectorParams {
    /// Threshold in standard deviations for distribution-based detectors.
    pub n_sigmas: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams { n_sigmas: 3.0 }
    }
}

/// One registry entry: a named strategy plus its constructor.
pub struct DetectorInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: fn(&DetectorParams) -> Box<dyn Detector>,
}

/// All registered detector strategies.
pub fn registry() -> &'static [DetectorInfo] {
    &[
        DetectorInfo {
            name: "globalstd",
            summary: "flag samples deviating from the nominal channel mean by more than N standard deviations",
            build: |params| Box::new(GlobalStdDetector::new(params.n_sigmas)),
        },
        DetectorInfo {
            name: "limits",
            summary: "flag samples outside the nominal training min/max envelope",
            build: |_params| Box::new(OutOfLimitsDetector::new()),
        },
    ]
}

/// Instantiate a strategy by registry name.
pub fn create(name: &str, params: &DetectorParams) -> Result<Box<dyn Detector>> {
    registry()
        .iter()
        .find(|info| info.name == name)
        .map(|info| (info.build)(params))
        .ok_or_else(|| Error::UnknownName {
            kind: "detector",
            name: name.to_string(),
        })
}

/// Rebuild a fitted detector from its persisted model document.
pub fn load_model(model: &serde_json::Value) -> Result<Box<dyn Detector>> {
    let name = model
        .get("detector")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::validation("model document lacks a \"detector\" field"))?;
    match name {
        "globalstd" => {
            let parsed: GlobalStdModel = serde_json::from_value(model.clone())
                .map_err(|e| Error::validation(format!("invalid globalstd model: {e}")))?;
            Ok(Box::new(GlobalStdDetector::from_model(parsed)))
        }
        "limits" => {
            let parsed: LimitModel = serde_json::from_value(model.clone())
                .map_err(|e| Error::validation(format!("invalid limits model: {e}")))?;
            Ok(Box::new(OutOfLimitsDetector::from_model(parsed)))
        }
        other => Err(Error::UnknownName {
            kind: "detector",
            name: other.to_string(),
        }),
    }
}

/// Nominal samples of one target channel within the window: everything
/// outside the channel's annotated event spans, of any category.
fn nominal_training_values(
    data: &MissionDataset,
    series: &ChannelSeries,
    window: TimeInterval,
) -> Vec<f64> {
    let annotated = data.channel_annotations(series.channel());
    crate::preprocess::nominal_values(series, &annotated, &window)
}

fn target_series<'a>(data: &'a MissionDataset) -> Vec<&'a ChannelSeries> {
    let targets = data.target_channels();
    data.channels
        .values()
        .filter(|s| targets.contains(s.channel()))
        .collect()
}

/// Flag samples of a window by a per-sample predicate and merge consecutive
/// flagged samples into `[first flagged ts, last flagged ts]` intervals.
fn flag_to_intervals(
    series: &ChannelSeries,
    window: TimeInterval,
    flag: impl Fn(f64) -> bool,
) -> IntervalSet {
    let range = series.index_range(&window);
    let ts = series.timestamps();
    let values = series.values();
    let mut out = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for i in range {
        if flag(values[i]) {
            current = Some(match current {
                Some((first, _)) => (first, i),
                None => (i, i),
            });
        } else if let Some((first, last)) = current.take() {
            out.push(TimeInterval::new(ts[first], ts[last]).expect("ordered"));
        }
    }
    if let Some((first, last)) = current {
        out.push(TimeInterval::new(ts[first], ts[last]).expect("ordered"));
    }
    IntervalSet::from_intervals(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ChannelStats {
    mean: f64,
    std: f64,
}

/// Persisted GlobalSTD model: per-channel nominal mean and population
/// standard deviation plus the threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlobalStdModel {
    detector: String,
    pub n_sigmas: f64,
    channels: BTreeMap<String, ChannelStats>,
}

/// Distribution-based baseline: a sample is anomalous iff it deviates from
/// the nominal channel mean by strictly more than `n_sigmas` standard
/// deviations. Channels with zero nominal deviation flag any value away
/// from the mean.
pub struct GlobalStdDetector {
    model: GlobalStdModel,
}

impl GlobalStdDetector {
    pub fn new(n_sigmas: f64) -> Self {
        GlobalStdDetector {
            model: GlobalStdModel {
                detector: "globalstd".into(),
                n_sigmas,
                channels: BTreeMap::new(),
            },
        }
    }

    fn from_model(model: GlobalStdModel) -> Self {
        GlobalStdDetector { model }
    }

    pub fn stats(&self, channel: &str) -> Option<(f64, f64)> {
        self.model.channels.get(channel).map(|s| (s.mean, s.std))
    }
}

impl Detector for GlobalStdDetector {
    fn name(&self) -> &'static str {
        "globalstd"
    }

    fn fit(&mut self, data: &MissionDataset, window: TimeInterval) -> Result<()> {
        let fitted: Result<Vec<(String, ChannelStats)>> = target_series(data)
            .par_iter()
            .map(|series| {
                let nominal = nominal_training_values(data, series, window);
                if nominal.is_empty() {
                    return Err(Error::validation(format!(
                        "channel {} has no nominal samples in the training window",
                        series.channel()
                    )));
                }
                let n = nominal.len() as f64;
                let mean = nominal.iter().sum::<f64>() / n;
                let var = nominal.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                Ok((
                    series.channel().to_string(),
                    ChannelStats {
                        mean,
                        std: var.sqrt(),
                    },
                ))
            })
            .collect();
        self.model.channels = fitted?.into_iter().collect();
        Ok(())
    }

    fn detect(&self, data: &MissionDataset, window: TimeInterval) -> Result<DetectionSet> {
        let threshold = self.model.n_sigmas;
        let per_channel: Result<Vec<(String, IntervalSet)>> = target_series(data)
            .par_iter()
            .map(|series| {
                let stats = self.model.channels.get(series.channel()).ok_or_else(|| {
                    Error::UnknownName {
                        kind: "fitted channel",
                        name: series.channel().to_string(),
                    }
                })?;
                let (mean, std) = (stats.mean, stats.std);
                let set = flag_to_intervals(series, window, |x| (x - mean).abs() > threshold * std);
                Ok((series.channel().to_string(), set))
            })
            .collect();
        DetectionSet::new(per_channel?.into_iter().collect(), IntervalSet::new(), window)
    }

    fn to_model(&self) -> serde_json::Value {
        serde_json::to_value(&self.model).expect("model serializes")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ChannelLimits {
    min: f64,
    max: f64,
}

/// Persisted out-of-limits model: per-channel nominal min/max.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitModel {
    detector: String,
    channels: BTreeMap<String, ChannelLimits>,
}

/// Triviality probe: a sample is anomalous iff it lies strictly outside the
/// nominal training envelope of its channel.
pub struct OutOfLimitsDetector {
    model: LimitModel,
}

impl OutOfLimitsDetector {
    pub fn new() -> Self {
        OutOfLimitsDetector {
            model: LimitModel {
                detector: "limits".into(),
                channels: BTreeMap::new(),
            },
        }
    }

    fn from_model(model: LimitModel) -> Self {
        OutOfLimitsDetector { model }
    }
}

impl Default for OutOfLimitsDetector {
    fn default() -> Self {
        Self::new()
    }
}

impl Detector for OutOfLimitsDetector {
    fn name(&self) -> &'static str {
        "limits"
    }

    fn fit(&mut self, data: &MissionDataset, window: TimeInterval) -> Result<()> {
        let fitted: Result<Vec<(String, ChannelLimits)>> = target_series(data)
            .par_iter()
            .map(|series| {
                let nominal = nominal_training_values(data, series, window);
                if nominal.is_empty() {
                    return Err(Error::validation(format!(
                        "channel {} has no nominal samples in the training window",
                        series.channel()
                    )));
                }
                let min = nominal.iter().copied().fold(f64::INFINITY, f64::min);
                let max = nominal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok((series.channel().to_string(), ChannelLimits { min, max }))
            })
            .collect();
        self.model.channels = fitted?.into_iter().collect();
        Ok(())
    }

    fn detect(&self, data: &MissionDataset, window: TimeInterval) -> Result<DetectionSet> {
        let per_channel: Result<Vec<(String, IntervalSet)>> = target_series(data)
            .par_iter()
            .map(|series| {
                let limits = self.model.channels.get(series.channel()).ok_or_else(|| {
                    Error::UnknownName {
                        kind: "fitted channel",
                        name: series.channel().to_string(),
                    }
                })?;
                let (min, max) = (limits.min, limits.max);
                let set = flag_to_intervals(series, window, |x| x < min || x > max);
                Ok((series.channel().to_string(), set))
            })
            .collect();
        DetectionSet::new(per_channel?.into_iter().collect(), IntervalSet::new(), window)
    }

    fn to_model(&self) -> serde_json::Value {
        serde_json::to_value(&self.model).expect("model serializes")
    }
}
