//! Preprocessing chain: uniform-timeline construction, zero-order-hold
//! resampling with a correction that preserves annotated points,
//! channel-kind classification, per-kind standardization, and telecommand
//! impulse encoding.
//!
//! Zero-order hold propagates the last known value, so it never invents
//! values between points and never looks at future samples (the one
//! documented exception is the leading back-fill when a channel starts
//! after the common timeline).

use serde::{Deserialize, Serialize};

use crate::data::{ChannelKind, ChannelSeries};
use crate::error::{Error, Result};
use crate::time::{IntervalSet, TimeInterval, Timestamp, NS_PER_SEC};

/// Target resampling grid. The resolution is `round(1e9 / target_hz)` ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampleSpec {
    resolution_ns: i64,
}

impl ResampleSpec {
    pub fn from_hz(target_hz: f64) -> Result<Self> {
        if !(target_hz > 0.0) {
            return Err(Error::validation(format!("target frequency must be > 0, got {target_hz}")));
        }
        let resolution_ns = (1e9 / target_hz).round() as i64;
        if resolution_ns <= 0 {
            return Err(Error::validation(format!(
                "target frequency {target_hz} Hz yields a zero-length resolution"
            )));
        }
        Ok(ResampleSpec { resolution_ns })
    }

    pub fn from_resolution_ns(resolution_ns: i64) -> Result<Self> {
        if resolution_ns <= 0 {
            return Err(Error::validation("resolution must be positive"));
        }
        Ok(ResampleSpec { resolution_ns })
    }

    pub fn resolution_ns(&self) -> i64 {
        self.resolution_ns
    }
}

/// Construct the uniformly sampled timestamp list shared by all channels:
/// from the earliest original timestamp rounded down to the resolution, to
/// the latest rounded up, spaced exactly one resolution apart. Rounding is
/// anchored at the Unix epoch.
pub fn build_uniform_timeline<I>(spans: I, spec: &ResampleSpec) -> Result<Vec<Timestamp>>
where
    I: IntoIterator<Item = TimeInterval>,
{
    let mut earliest: Option<Timestamp> = None;
    let mut latest: Option<Timestamp> = None;
    for span in spans {
        earliest = Some(earliest.map_or(span.start(), |e| e.min(span.start())));
        latest = Some(latest.map_or(span.end(), |l| l.max(span.end())));
    }
    let (earliest, latest) = match (earliest, latest) {
        (Some(e), Some(l)) => (e, l),
        _ => return Err(Error::validation("cannot build a timeline from empty input")),
    };
    let res = spec.resolution_ns;
    let first = earliest.floor_to(res);
    let last = latest.ceil_to(res);
    let steps = (last.ns() - first.ns()) / res;
    let mut out = Vec::with_capacity(steps as usize + 1);
    let mut t = first.ns();
    while t <= last.ns() {
        out.push(Timestamp::from_ns(t));
        t += res;
    }
    Ok(out)
}

/// Zero-order hold: each grid point carries the last original (value, label)
/// at or before it. Grid points before the first sample are back-filled
/// from it.
pub fn zoh_resample<L: Clone>(
    series: &ChannelSeries,
    labels: &[L],
    timeline: &[Timestamp],
) -> (Vec<f64>, Vec<L>) {
    assert_eq!(series.len(), labels.len(), "labels must align with samples");
    assert!(!series.is_empty(), "cannot resample an empty series");
    let ts = series.timestamps();
    let values = series.values();
    let mut out_values = Vec::with_capacity(timeline.len());
    let mut out_labels = Vec::with_capacity(timeline.len());
    let mut idx = 0usize;
    for &grid in timeline {
        while idx + 1 < ts.len() && ts[idx + 1] <= grid {
            idx += 1;
        }
        // idx is the last sample <= grid, or sample 0 if the series starts
        // after the grid point (leading back-fill).
        let src = if ts[idx] <= grid { idx } else { 0 };
        out_values.push(values[src]);
        out_labels.push(labels[src].clone());
    }
    (out_values, out_labels)
}

/// Correction for missing anomalies: for every consecutive pair of
/// unannotated grid timestamps with at least one annotated original point
/// strictly between them, the latter grid point receives the value and
/// label of the last annotated original point in between. Pair conditions
/// are evaluated against the uncorrected grid labels, so consecutive
/// windows are corrected independently.
pub fn anomaly_preservation_correction<L: Clone>(
    grid_values: &mut [f64],
    grid_labels: &mut Vec<L>,
    series: &ChannelSeries,
    labels: &[L],
    timeline: &[Timestamp],
    is_annotated: impl Fn(&L) -> bool,
) {
    assert_eq!(grid_values.len(), timeline.len());
    assert_eq!(grid_labels.len(), timeline.len());
    if timeline.len() < 2 {
        return;
    }
    let pre: Vec<bool> = grid_labels.iter().map(|l| is_annotated(l)).collect();
    let ts = series.timestamps();
    let values = series.values();
    let mut idx = 0usize;
    for i in 0..timeline.len() - 1 {
        let lo = timeline[i];
        let hi = timeline[i + 1];
        while idx < ts.len() && ts[idx] <= lo {
            idx += 1;
        }
        if pre[i] || pre[i + 1] {
            continue;
        }
        // last annotated original strictly inside (lo, hi)
        let mut found: Option<usize> = None;
        let mut j = idx;
        while j < ts.len() && ts[j] < hi {
            if is_annotated(&labels[j]) {
                found = Some(j);
            }
            j += 1;
        }
        if let Some(j) = found {
            grid_values[i + 1] = values[j];
            grid_labels[i + 1] = labels[j].clone();
        }
    }
}

/// ZOH resampling plus the anomaly-preservation correction in one call.
pub fn resample_channel<L: Clone>(
    series: &ChannelSeries,
    labels: &[L],
    timeline: &[Timestamp],
    is_annotated: impl Fn(&L) -> bool,
) -> (Vec<f64>, Vec<L>) {
    let (mut values, mut grid_labels) = zoh_resample(series, labels, timeline);
    anomaly_preservation_correction(
        &mut values,
        &mut grid_labels,
        series,
        labels,
        timeline,
        is_annotated,
    );
    (values, grid_labels)
}

/// Per-sample label type used by the concrete pipeline: the ids of the
/// events annotating the sample (empty when nominal).
pub type LabelIds = Vec<u32>;

/// Build per-sample label-id sets for one channel from interval annotations.
pub fn label_samples(series: &ChannelSeries, annotations: &[(u32, &IntervalSet)]) -> Vec<LabelIds> {
    let mut out = vec![LabelIds::new(); series.len()];
    for (id, set) in annotations {
        for iv in set.iter() {
            let range = series.index_range(iv);
            for slot in &mut out[range] {
                slot.push(*id);
            }
        }
    }
    out
}

/// Resolve a channel kind: explicit metadata wins; `Auto` is detected from
/// the training data. Binary means exactly two unique values, Constant one;
/// Monotonic needs a non-decreasing or non-increasing series with at least
/// three unique values. Categorical is never auto-detected.
pub fn classify_channel(training_values: &[f64], declared: ChannelKind) -> ChannelKind {
    if declared != ChannelKind::Auto {
        return declared;
    }
    assert!(!training_values.is_empty(), "cannot classify an empty series");
    let mut distinct: Vec<f64> = Vec::with_capacity(3);
    let mut non_decreasing = true;
    let mut non_increasing = true;
    let mut prev = training_values[0];
    for &v in training_values {
        if distinct.len() < 3 && !distinct.iter().any(|&d| d == v) {
            distinct.push(v);
        }
        if v > prev {
            non_increasing = false;
        }
        if v < prev {
            non_decreasing = false;
        }
        prev = v;
    }
    match distinct.len() {
        1 => ChannelKind::Constant,
        2 => ChannelKind::Binary,
        _ if non_decreasing || non_increasing => ChannelKind::Monotonic,
        _ => ChannelKind::Continuous,
    }
}

/// Fitted standardization parameters for one channel. Unused fields stay at
/// their defaults for kinds that do not need them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub channel: String,
    pub kind: ChannelKind,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub std: f64,
    #[serde(default)]
    pub min: f64,
    #[serde(default)]
    pub max: f64,
    /// For Categorical: value at index i maps to ordinal i (order of first
    /// occurrence in the training data).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_map: Option<Vec<f64>>,
}

fn population_mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut n = 0u64;
    let mut sum = 0.0;
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for v in values {
        let d = v - mean;
        ss += d * d;
    }
    (mean, (ss / n as f64).sqrt())
}

/// Fit standardization parameters from nominal training points (after
/// resampling, excluding every annotated event including rare nominals).
/// The standard deviation estimator is population (divide by n).
pub fn fit_standardizer(channel: &str, nominal: &[f64], kind: ChannelKind) -> Result<StandardizerParams> {
    if nominal.is_empty() {
        return Err(Error::validation(format!(
            "channel {channel}: no nominal training points to fit a standardizer"
        )));
    }
    let mut params = StandardizerParams {
        channel: channel.to_string(),
        kind,
        mean: 0.0,
        std: 0.0,
        min: 0.0,
        max: 0.0,
        category_map: None,
    };
    match kind {
        ChannelKind::Auto => {
            return Err(Error::validation(format!(
                "channel {channel}: kind must be resolved before fitting"
            )))
        }
        ChannelKind::Continuous => {
            let (mean, std) = population_mean_std(nominal.iter().copied());
            params.mean = mean;
            params.std = std;
        }
        ChannelKind::Binary => {
            let min = nominal.iter().copied().fold(f64::INFINITY, f64::min);
            let max = nominal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if min == max {
                return Err(Error::validation(format!(
                    "channel {channel}: binary channel has a single value {min}"
                )));
            }
            params.min = min;
            params.max = max;
        }
        ChannelKind::Constant => {
            params.mean = nominal.iter().sum::<f64>() / nominal.len() as f64;
        }
        ChannelKind::Monotonic => {
            if nominal.len() < 2 {
                return Err(Error::validation(format!(
                    "channel {channel}: need at least two nominal points to difference"
                )));
            }
            let diffs: Vec<f64> = nominal.windows(2).map(|w| w[1] - w[0]).collect();
            let (mean, std) = population_mean_std(diffs.iter().copied());
            params.mean = mean;
            params.std = std;
        }
        ChannelKind::Categorical => {
            let mut map: Vec<f64> = Vec::new();
            for &v in nominal {
                if !map.iter().any(|&m| m == v) {
                    map.push(v);
                }
            }
            let ordinals: Vec<f64> = nominal
                .iter()
                .map(|v| map.iter().position(|m| m == v).expect("mapped above") as f64)
                .collect();
            let (mean, std) = population_mean_std(ordinals.iter().copied());
            params.mean = mean;
            params.std = std;
            params.category_map = Some(map);
        }
    }
    Ok(params)
}

/// Apply fitted parameters to a series of raw values. Unseen categorical
/// values map to a fresh ordinal (max + 1) and are reported as warnings
/// rather than errors. A zero fitted standard deviation degenerates to mean
/// subtraction.
pub fn apply_standardizer(values: &[f64], params: &StandardizerParams) -> (Vec<f64>, Vec<String>) {
    let mut warnings = Vec::new();
    let scale = |x: f64, mean: f64, std: f64| if std == 0.0 { x - mean } else { (x - mean) / std };
    let out = match params.kind {
        ChannelKind::Auto => unreachable!("kind resolved at fit time"),
        ChannelKind::Continuous => values.iter().map(|&x| scale(x, params.mean, params.std)).collect(),
        ChannelKind::Binary => {
            let span = params.max - params.min;
            values.iter().map(|&x| (x - params.min) / span).collect()
        }
        ChannelKind::Constant => values.iter().map(|&x| x - params.mean).collect(),
        ChannelKind::Monotonic => {
            let mut out = Vec::with_capacity(values.len());
            // first output sample is pinned to 0 so lengths stay aligned
            out.push(0.0);
            for w in values.windows(2) {
                out.push(scale(w[1] - w[0], params.mean, params.std));
            }
            out
        }
        ChannelKind::Categorical => {
            let map = params.category_map.as_deref().unwrap_or(&[]);
            let mut unseen: Vec<f64> = Vec::new();
            let out = values
                .iter()
                .map(|&x| {
                    let ordinal = match map.iter().position(|&m| m == x) {
                        Some(i) => i as f64,
                        None => {
                            if !unseen.iter().any(|&u| u == x) {
                                unseen.push(x);
                            }
                            map.len() as f64
                        }
                    };
                    scale(ordinal, params.mean, params.std)
                })
                .collect();
            for u in unseen {
                warnings.push(format!(
                    "channel {}: unseen categorical value {u} mapped to ordinal {}",
                    params.channel,
                    map.len()
                ));
            }
            out
        }
    };
    (out, warnings)
}

/// Encode telecommand executions as binary impulses of a single sample
/// length: a grid point carries 1 iff its preceding resolution window
/// `(t - resolution, t]` contains at least one execution. Executions
/// outside the timeline are clamped to the nearest end so none is dropped.
pub fn encode_telecommands(
    executions: &[Timestamp],
    timeline: &[Timestamp],
    _spec: &ResampleSpec,
) -> Vec<f64> {
    let mut out = vec![0.0; timeline.len()];
    if timeline.is_empty() {
        return out;
    }
    for &e in executions {
        let idx = timeline.partition_point(|&t| t < e).min(timeline.len() - 1);
        out[idx] = 1.0;
    }
    out
}

/// Samples of `series` within `window` whose timestamps lie outside every
/// annotated interval. Used to fit standardizers and baseline detectors.
pub fn nominal_values(
    series: &ChannelSeries,
    annotations: &IntervalSet,
    window: &TimeInterval,
) -> Vec<f64> {
    let range = series.index_range(window);
    let ts = series.timestamps();
    let values = series.values();
    let mut out = Vec::with_capacity(range.len());
    let intervals = annotations.intervals();
    let mut k = 0usize;
    for i in range {
        let t = ts[i];
        while k < intervals.len() && intervals[k].end() < t {
            k += 1;
        }
        let annotated = k < intervals.len() && intervals[k].contains(t);
        if !annotated {
            out.push(values[i]);
        }
    }
    out
}

pub fn seconds(s: i64) -> i64 {
    s * NS_PER_SEC
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeInterval;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse_iso(s).unwrap()
    }

    fn series(samples: &[(&str, f64)]) -> ChannelSeries {
        ChannelSeries::new(
            "ch",
            samples.iter().map(|(t, _)| ts(t)).collect(),
            samples.iter().map(|(_, v)| *v).collect(),
        )
        .unwrap()
    }

    #[test]
    fn timeline_matches_worked_example() {
        // <8:10:12, 8:10:14, 8:10:38> at 1/10 Hz -> <8:10:10, ..., 8:10:40>
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let span = TimeInterval::new(ts("2000-01-01T08:10:12Z"), ts("2000-01-01T08:10:38Z")).unwrap();
        let timeline = build_uniform_timeline([span], &spec).unwrap();
        let expected: Vec<Timestamp> = ["10", "20", "30", "40"]
            .iter()
            .map(|s| ts(&format!("2000-01-01T08:10:{s}Z")))
            .collect();
        assert_eq!(timeline, expected);
    }

    #[test]
    fn timeline_two_channels() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let spans = [
            TimeInterval::new(ts("2000-01-01T08:10:12Z"), ts("2000-01-01T08:10:14Z")).unwrap(),
            TimeInterval::new(ts("2000-01-01T08:10:20Z"), ts("2000-01-01T08:10:41Z")).unwrap(),
        ];
        let timeline = build_uniform_timeline(spans, &spec).unwrap();
        assert_eq!(timeline.first().unwrap(), &ts("2000-01-01T08:10:10Z"));
        assert_eq!(timeline.last().unwrap(), &ts("2000-01-01T08:10:50Z"));
        assert_eq!(timeline.len(), 5);
    }

    #[test]
    fn timeline_single_on_grid_sample() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let at = ts("2000-01-01T08:10:20Z");
        let timeline = build_uniform_timeline([TimeInterval::point(at)], &spec).unwrap();
        assert_eq!(timeline, vec![at]);
        assert!(build_uniform_timeline(std::iter::empty(), &spec).is_err());
    }

    #[test]
    fn zoh_propagates_and_backfills() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let s = series(&[("2000-01-01T08:10:12Z", 1.0), ("2000-01-01T08:10:38Z", 2.0)]);
        let timeline = build_uniform_timeline([s.span().unwrap()], &spec).unwrap();
        let labels = vec![false, false];
        let (values, _) = zoh_resample(&s, &labels, &timeline);
        // 8:10:10 back-fills the first sample; :20/:30 carry it; :40 carries :38
        assert_eq!(values, vec![1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn zoh_identity_on_grid() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let s = series(&[
            ("2000-01-01T08:10:10Z", 1.0),
            ("2000-01-01T08:10:20Z", 2.0),
            ("2000-01-01T08:10:30Z", 3.0),
        ]);
        let timeline = build_uniform_timeline([s.span().unwrap()], &spec).unwrap();
        let labels = vec![true, false, true];
        let (values, out_labels) = zoh_resample(&s, &labels, &timeline);
        assert_eq!(values, vec![1.0, 2.0, 3.0]);
        assert_eq!(out_labels, labels);
    }

    #[test]
    fn correction_rescues_annotated_spike() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let s = series(&[
            ("2000-01-01T08:10:12Z", 1.0),
            ("2000-01-01T08:10:25Z", 9.0), // annotated spike between :20 and :30
            ("2000-01-01T08:10:27Z", 1.0),
            ("2000-01-01T08:10:38Z", 2.0),
        ]);
        let labels = vec![false, true, false, false];
        let timeline = build_uniform_timeline([s.span().unwrap()], &spec).unwrap();
        let (mut values, mut grid_labels) = zoh_resample(&s, &labels, &timeline);
        assert_eq!(values, vec![1.0, 1.0, 1.0, 2.0]); // spike lost by plain ZOH
        anomaly_preservation_correction(&mut values, &mut grid_labels, &s, &labels, &timeline, |l| *l);
        assert_eq!(values, vec![1.0, 1.0, 9.0, 2.0]);
        assert_eq!(grid_labels, vec![false, false, true, false]);
    }

    #[test]
    fn correction_noop_without_annotations() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let s = series(&[
            ("2000-01-01T08:10:12Z", 1.0),
            ("2000-01-01T08:10:25Z", 9.0),
            ("2000-01-01T08:10:38Z", 2.0),
        ]);
        let labels = vec![false, false, false];
        let timeline = build_uniform_timeline([s.span().unwrap()], &spec).unwrap();
        let (values, _) = zoh_resample(&s, &labels, &timeline);
        let (corrected, _) = resample_channel(&s, &labels, &timeline, |l| *l);
        assert_eq!(values, corrected);
    }

    #[test]
    fn correction_takes_last_annotated() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let s = series(&[
            ("2000-01-01T08:10:12Z", 1.0),
            ("2000-01-01T08:10:23Z", 7.0), // annotated
            ("2000-01-01T08:10:26Z", 8.0), // annotated, later
            ("2000-01-01T08:10:28Z", 1.0),
            ("2000-01-01T08:10:38Z", 2.0),
        ]);
        let labels = vec![false, true, true, false, false];
        let timeline = build_uniform_timeline([s.span().unwrap()], &spec).unwrap();
        let (values, grid_labels) = resample_channel(&s, &labels, &timeline, |l| *l);
        assert_eq!(values[2], 8.0);
        assert!(grid_labels[2]);
    }

    #[test]
    fn classify_kinds() {
        assert_eq!(classify_channel(&[0.0, 0.0, 5.0, 5.0, 0.0], ChannelKind::Auto), ChannelKind::Binary);
        assert_eq!(classify_channel(&[7.0, 7.0, 7.0], ChannelKind::Auto), ChannelKind::Constant);
        assert_eq!(
            classify_channel(&[0.0, 1.0, 2.0, 4.0, 4.0, 9.0], ChannelKind::Auto),
            ChannelKind::Monotonic
        );
        assert_eq!(
            classify_channel(&[9.0, 4.0, 4.0, 2.0, 1.0], ChannelKind::Auto),
            ChannelKind::Monotonic
        );
        assert_eq!(
            classify_channel(&[0.0, 2.0, 1.0, 3.0], ChannelKind::Auto),
            ChannelKind::Continuous
        );
        // declared kind wins
        assert_eq!(
            classify_channel(&[0.0, 1.0], ChannelKind::Categorical),
            ChannelKind::Categorical
        );
    }

    #[test]
    fn standardizer_continuous() {
        let params = fit_standardizer("c", &[1.0, 2.0, 3.0], ChannelKind::Continuous).unwrap();
        assert_eq!(params.mean, 2.0);
        assert!((params.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let p = StandardizerParams { mean: 2.0, std: 1.0, ..params };
        let (out, _) = apply_standardizer(&[4.0], &p);
        assert_eq!(out, vec![2.0]);
    }

    #[test]
    fn standardizer_monotonic() {
        // counter with diffs {1,1,2,2}: diff mean 1.5, population std 0.5
        let input = [10.0, 11.0, 12.0, 14.0, 16.0];
        let params = fit_standardizer("c", &input, ChannelKind::Monotonic).unwrap();
        assert_eq!(params.mean, 1.5);
        assert_eq!(params.std, 0.5);
        let (out, _) = apply_standardizer(&input, &params);
        assert_eq!(out, vec![0.0, -1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn standardizer_binary_constant() {
        let params = fit_standardizer("c", &[0.0, 5.0, 0.0], ChannelKind::Binary).unwrap();
        let (out, _) = apply_standardizer(&[0.0, 5.0], &params);
        assert_eq!(out, vec![0.0, 1.0]);
        assert!(fit_standardizer("c", &[3.0, 3.0], ChannelKind::Binary).is_err());

        let params = fit_standardizer("c", &[7.0, 7.0], ChannelKind::Constant).unwrap();
        let (out, _) = apply_standardizer(&[7.0, 7.0, 8.0], &params);
        assert_eq!(out, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn standardizer_categorical() {
        // training order B, A, B, C -> {B:0, A:1, C:2}
        let params = fit_standardizer("c", &[2.0, 1.0, 2.0, 3.0], ChannelKind::Categorical).unwrap();
        assert_eq!(params.category_map.as_deref(), Some(&[2.0, 1.0, 3.0][..]));
        let (out, warnings) = apply_standardizer(&[2.0, 9.0], &params);
        assert_eq!(warnings.len(), 1);
        // unseen value 9.0 maps to ordinal 3 (= max + 1)
        let expected_unseen = (3.0 - params.mean) / params.std;
        assert!((out[1] - expected_unseen).abs() < 1e-12);
        assert!(fit_standardizer("c", &[], ChannelKind::Categorical).is_err());
    }

    #[test]
    fn telecommand_impulses() {
        let spec = ResampleSpec::from_hz(0.1).unwrap();
        let timeline: Vec<Timestamp> = ["10", "20", "30", "40"]
            .iter()
            .map(|s| ts(&format!("2000-01-01T08:10:{s}Z")))
            .collect();
        // execution at 8:10:13 falls in the window (8:10:10, 8:10:20]
        let out = encode_telecommands(&[ts("2000-01-01T08:10:13Z")], &timeline, &spec);
        assert_eq!(out, vec![0.0, 1.0, 0.0, 0.0]);
        // two executions in the same window stay a single impulse
        let out = encode_telecommands(
            &[ts("2000-01-01T08:10:13Z"), ts("2000-01-01T08:10:17Z")],
            &timeline,
            &spec,
        );
        assert_eq!(out, vec![0.0, 1.0, 0.0, 0.0]);
        let out = encode_telecommands(&[], &timeline, &spec);
        assert_eq!(out, vec![0.0; 4]);
        // an execution exactly on a grid point lands on it
        let out = encode_telecommands(&[ts("2000-01-01T08:10:30Z")], &timeline, &spec);
        assert_eq!(out, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn nominal_value_extraction() {
        let s = series(&[
            ("2000-01-01T00:00:00Z", 1.0),
            ("2000-01-01T00:00:10Z", 2.0),
            ("2000-01-01T00:00:20Z", 3.0),
            ("2000-01-01T00:00:30Z", 4.0),
        ]);
        let annotated = IntervalSet::singleton(
            TimeInterval::new(ts("2000-01-01T00:00:10Z"), ts("2000-01-01T00:00:20Z")).unwrap(),
        );
        let window = s.span().unwrap();
        assert_eq!(nominal_values(&s, &annotated, &window), vec![1.0, 4.0]);
        let narrow = TimeInterval::new(ts("2000-01-01T00:00:25Z"), ts("2000-01-01T00:00:30Z")).unwrap();
        assert_eq!(nominal_values(&s, &annotated, &narrow), vec![4.0]);
    }

    #[test]
    fn standardized_nominal_is_centered() {
        // property at fixed seedless data: mean 0, std 1 after the fit
        let data: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 3.0 + 5.0).collect();
        let params = fit_standardizer("c", &data, ChannelKind::Continuous).unwrap();
        let (out, _) = apply_standardizer(&data, &params);
        let (mean, std) = super::population_mean_std(out.iter().copied());
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
    }
}
