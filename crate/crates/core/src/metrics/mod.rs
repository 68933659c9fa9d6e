//! Time-domain metric families over timestamped ground truth and
//! detections: corrected event-wise F-beta, subsystem- and channel-aware
//! F-beta, alarming precision, detection-timing quality, and the modified
//! affiliation-based F-score. Ground truth and detections may use entirely
//! different sets of timestamps; everything is computed on nanosecond
//! intervals, never on sample indices.

mod affiliation;

pub use affiliation::affiliation_fbeta;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::data::{
    AdtqcSummary, AnomalyTypeAttributes, ChannelMeta, DetectionSet, EventAnnotation,
    EventCategory, MetricReport, PrfScore,
};
use crate::error::{Error, Result};
use crate::time::{IntervalSet, TimeInterval};

/// Attribute filter for excluding events by taxonomy type.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum TypeFilter {
    Univariate,
    Multivariate,
    Local,
    Global,
    Point,
    Subsequence,
}

impl TypeFilter {
    pub fn matches(&self, attrs: &AnomalyTypeAttributes) -> bool {
        use crate::data::{Dimensionality, EventLength, Locality};
        match self {
            TypeFilter::Univariate => attrs.dimensionality == Dimensionality::Univariate,
            TypeFilter::Multivariate => attrs.dimensionality == Dimensionality::Multivariate,
            TypeFilter::Local => attrs.locality == Locality::Local,
            TypeFilter::Global => attrs.locality == Locality::Global,
            TypeFilter::Point => attrs.length == EventLength::Point,
            TypeFilter::Subsequence => attrs.length == EventLength::Subsequence,
        }
    }
}

impl FromStr for TypeFilter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Univariate" => Ok(TypeFilter::Univariate),
            "Multivariate" => Ok(TypeFilter::Multivariate),
            "Local" => Ok(TypeFilter::Local),
            "Global" => Ok(TypeFilter::Global),
            "Point" => Ok(TypeFilter::Point),
            "Subsequence" => Ok(TypeFilter::Subsequence),
            other => Err(Error::validation(format!("unknown type filter {other:?}"))),
        }
    }
}

/// Everything one evaluation run needs. Only target channels participate;
/// when `channel_meta` is empty every channel counts as a target, which
/// keeps hand-built fixtures small.
#[derive(Clone, Debug)]
pub struct EvaluationContext<'a> {
    pub events: &'a [EventAnnotation],
    pub detections: &'a DetectionSet,
    pub channel_meta: &'a [ChannelMeta],
    pub timeline: TimeInterval,
    pub beta: f64,
    pub excluded_categories: BTreeSet<EventCategory>,
    pub excluded_ids: BTreeSet<String>,
    pub excluded_classes: BTreeSet<String>,
    pub excluded_types: BTreeSet<TypeFilter>,
}

impl<'a> EvaluationContext<'a> {
    /// Defaults: beta 0.5, only communication gaps excluded.
    pub fn new(
        events: &'a [EventAnnotation],
        detections: &'a DetectionSet,
        channel_meta: &'a [ChannelMeta],
        timeline: TimeInterval,
    ) -> Self {
        EvaluationContext {
            events,
            detections,
            channel_meta,
            timeline,
            beta: 0.5,
            excluded_categories: BTreeSet::from([EventCategory::CommunicationGap]),
            excluded_ids: BTreeSet::new(),
            excluded_classes: BTreeSet::new(),
            excluded_types: BTreeSet::new(),
        }
    }

    fn is_target(&self, channel: &str) -> bool {
        if self.channel_meta.is_empty() {
            return true;
        }
        self.channel_meta
            .iter()
            .any(|m| m.name == channel && m.target)
    }

    fn is_excluded(&self, event: &EventAnnotation) -> bool {
        self.excluded_categories.contains(&event.category)
            || self.excluded_ids.contains(&event.id)
            || self.excluded_classes.contains(&event.class)
            || event.attributes.map_or(false, |attrs| {
                self.excluded_types.iter().any(|t| t.matches(&attrs))
            })
    }
}

/// One included event in the global (channel-OR) view.
#[derive(Clone, Debug)]
pub struct EventView {
    /// Index into the context's event list.
    pub index: usize,
    pub id: String,
    /// Logical sum of the event's target-channel segments; may be
    /// fragmented for multi-segment events.
    pub span: IntervalSet,
    /// `[first segment start, last segment end]`.
    pub hull: TimeInterval,
}

/// Ground truth and detections reduced to the time axis: per-event merged
/// spans, detections OR-ed across target channels into maximal segments,
/// and excluded-event spans kept separately for masking.
#[derive(Clone, Debug)]
pub struct GlobalView {
    /// Included events sorted by hull start.
    pub included: Vec<EventView>,
    /// Union of excluded events' spans.
    pub excluded_spans: IntervalSet,
    /// Union of every event's span, included or excluded.
    pub all_event_spans: IntervalSet,
    /// Merged global detections, clamped to the timeline.
    pub detections: IntervalSet,
    pub timeline: TimeInterval,
    pub beta: f64,
}

pub fn global_view(ctx: &EvaluationContext) -> GlobalView {
    let mut included = Vec::new();
    let mut excluded_spans = IntervalSet::new();
    let mut all_event_spans = IntervalSet::new();
    for (index, event) in ctx.events.iter().enumerate() {
        let keep = |c: &str| ctx.is_target(c);
        let span = event.global_span(Some(&keep));
        let hull = match span.hull() {
            Some(h) => h,
            None => continue, // no target-channel segments
        };
        all_event_spans = all_event_spans.union(&span);
        if ctx.is_excluded(event) {
            excluded_spans = excluded_spans.union(&span);
        } else {
            included.push(EventView {
                index,
                id: event.id.clone(),
                span,
                hull,
            });
        }
    }
    included.sort_by(|a, b| (a.hull.start(), &a.id).cmp(&(b.hull.start(), &b.id)));

    let det = ctx.detections.clamped_to(ctx.timeline);
    let mut detections = det.global_only().clone();
    for (channel, set) in det.per_channel() {
        if ctx.is_target(channel) {
            detections = detections.union(set);
        }
    }

    GlobalView {
        included,
        excluded_spans,
        all_event_spans,
        detections,
        timeline: ctx.timeline,
        beta: ctx.beta,
    }
}

/// Matching outcome for one included event.
#[derive(Clone, Debug)]
pub struct EventMatch {
    /// Index into `GlobalView::included`.
    pub event: usize,
    pub matched: bool,
    /// Number of global detection segments overlapping the event span.
    pub segments: usize,
    /// Signed offset of the earliest overlapping segment's start against
    /// the event span start; `None` for undetected events.
    pub x_start_ns: Option<i64>,
}

#[derive(Clone, Debug, Default)]
pub struct EventMatching {
    pub per_event: Vec<EventMatch>,
    pub tp_e: u64,
    pub fp_e: u64,
    pub fn_e: u64,
    pub tp_r: u64,
}

/// Event-wise matching on the global view. An included event is a true
/// positive iff at least one detection segment intersects its span; a
/// detection segment is a false positive iff it intersects no event span
/// at all — segments that touch only excluded events are ignored entirely.
/// `tp_r` counts extra overlapping segments beyond the first per event.
pub fn match_events(view: &GlobalView) -> EventMatching {
    let segments = view.detections.intervals();
    let mut matching = EventMatching::default();

    for (i, event) in view.included.iter().enumerate() {
        let mut first_overlap: Option<usize> = None;
        let mut count = 0usize;
        let mut last_counted: Option<usize> = None;
        for fragment in event.span.iter() {
            let lo = segments.partition_point(|s| s.end() < fragment.start());
            let hi = segments.partition_point(|s| s.start() <= fragment.end());
            for idx in lo..hi {
                // fragments are sorted, so dedupe against the last counted
                if last_counted != Some(idx) || count == 0 {
                    if last_counted.map_or(true, |prev| idx > prev) {
                        count += 1;
                        last_counted = Some(idx);
                        if first_overlap.map_or(true, |f| idx < f) {
                            first_overlap = Some(idx);
                        }
                    }
                }
            }
        }
        let matched = count > 0;
        if matched {
            matching.tp_e += 1;
            matching.tp_r += count as u64 - 1;
        } else {
            matching.fn_e += 1;
        }
        matching.per_event.push(EventMatch {
            event: i,
            matched,
            segments: count,
            x_start_ns: first_overlap
                .map(|idx| segments[idx].start().ns() - event.hull.start().ns()),
        });
    }

    for segment in segments {
        if !view.all_event_spans.intersects(segment) {
            matching.fp_e += 1;
        }
    }
    matching
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F-beta from precision and recall; 0 when both terms vanish.
pub fn fbeta_score(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventWiseScores {
    pub precision: f64,
    pub recall: f64,
    pub fbeta: f64,
    pub tnr_t: f64,
}

impl EventWiseScores {
    pub fn prf(&self) -> PrfScore {
        PrfScore {
            precision: self.precision,
            recall: self.recall,
            fbeta: self.fbeta,
        }
    }
}

/// Corrected event-wise precision/recall/F-beta. The precision is scaled by
/// the time-domain true-negative rate computed over nominal nanoseconds:
/// the timeline minus every event span (excluded spans are removed from
/// both numerator and denominator). With no nominal time at all the rate is
/// vacuously 1.
pub fn corrected_event_fbeta(view: &GlobalView, matching: &EventMatching) -> Result<EventWiseScores> {
    if view.timeline.duration_ns() == 0 {
        return Err(Error::validation("zero-length evaluation timeline"));
    }
    let timeline_set = IntervalSet::singleton(view.timeline);
    let nominal = timeline_set.subtract(&view.all_event_spans);
    let n_t = nominal.total_duration_ns();
    let tn_t = nominal.subtract(&view.detections).total_duration_ns();
    let tnr_t = if n_t == 0 { 1.0 } else { tn_t as f64 / n_t as f64 };

    let precision = ratio(matching.tp_e, matching.tp_e + matching.fp_e) * tnr_t;
    let recall = ratio(matching.tp_e, matching.tp_e + matching.fn_e);
    Ok(EventWiseScores {
        precision,
        recall,
        fbeta: fbeta_score(precision, recall, view.beta),
        tnr_t,
    })
}

/// Ratio of correctly detected events to detected events plus redundant
/// extra alarms on the same event; vacuously 1 when nothing was detected.
pub fn alarming_precision(matching: &EventMatching) -> f64 {
    if matching.tp_e == 0 {
        1.0
    } else {
        matching.tp_e as f64 / (matching.tp_e + matching.tp_r) as f64
    }
}

/// Detection-timing quality at offset `x` (detection start minus event
/// start, in ns): zero outside `(-alpha, beta)`, a steep power ramp before
/// the event and a gentle rational decay after it. Degenerate spans follow
/// the point-anomaly rule: 1 at an exact hit, 0 otherwise.
pub fn adtqc_value(x_ns: i64, alpha_ns: i64, beta_len_ns: i64) -> f64 {
    assert!(alpha_ns >= 0 && beta_len_ns >= 0);
    if (alpha_ns == 0 && x_ns <= 0) || (beta_len_ns == 0 && x_ns >= 0) {
        return if x_ns == 0 { 1.0 } else { 0.0 };
    }
    let x = x_ns as f64;
    let alpha = alpha_ns as f64;
    let beta = beta_len_ns as f64;
    if x <= -alpha {
        0.0
    } else if x <= 0.0 {
        ((x + alpha) / alpha).powf(std::f64::consts::E)
    } else if x < beta {
        1.0 / (1.0 + (x / (beta - x)).powf(std::f64::consts::E))
    } else {
        0.0
    }
}

/// Mean timing quality across correctly detected events, plus the fraction
/// of them whose detection starts at or after the event start. Per event:
/// `alpha = min(length, start - previous included event's start)` (the
/// first event uses its own length) and `beta` is the event length, both on
/// the global view.
pub fn adtqc_score(view: &GlobalView, matching: &EventMatching) -> AdtqcSummary {
    let mut values = Vec::new();
    let mut after = 0u64;
    for m in &matching.per_event {
        let x = match m.x_start_ns {
            Some(x) => x,
            None => continue,
        };
        let event = &view.included[m.event];
        let length = event.hull.duration_ns();
        let alpha = if m.event == 0 {
            length
        } else {
            let prev_start = view.included[m.event - 1].hull.start();
            length.min(event.hull.start().ns() - prev_start.ns())
        };
        values.push(adtqc_value(x, alpha.max(0), length));
        if x >= 0 {
            after += 1;
        }
    }
    if values.is_empty() {
        // no correctly detected events: nothing was early, score floor
        AdtqcSummary {
            score: 0.0,
            after_ratio: 1.0,
        }
    } else {
        AdtqcSummary {
            score: values.iter().sum::<f64>() / values.len() as f64,
            after_ratio: after as f64 / values.len() as f64,
        }
    }
}

fn sets_intersect(a: &IntervalSet, b: &IntervalSet) -> bool {
    let (mut i, mut j) = (0, 0);
    let (av, bv) = (a.intervals(), b.intervals());
    while i < av.len() && j < bv.len() {
        if av[i].intersects(&bv[j]) {
            return true;
        }
        if av[i].end() < bv[j].end() {
            i += 1;
        } else {
            j += 1;
        }
    }
    false
}

fn point_adjusted_set(set: &IntervalSet) -> IntervalSet {
    IntervalSet::from_intervals(set.iter().map(|iv| iv.point_adjusted()))
}

struct AwareCounts {
    tp: u64,
    fp: u64,
    fn_: u64,
}

/// Shared machinery of the subsystem- and channel-aware scores. `group_of`
/// maps a target channel to its scoring unit (the channel itself or its
/// subsystem). Every included event is analysed separately against its full
/// time span; candidate false positives that are true positives for another
/// overlapping event are discarded.
fn aware_counts(
    ctx: &EvaluationContext,
    view: &GlobalView,
    group_of: &dyn Fn(&str) -> String,
    point_adjust: bool,
) -> AwareCounts {
    let det = ctx.detections.clamped_to(ctx.timeline);

    let spans: Vec<IntervalSet> = view
        .included
        .iter()
        .map(|e| {
            if point_adjust {
                point_adjusted_set(&e.span)
            } else {
                e.span.clone()
            }
        })
        .collect();

    // per event: annotated groups and detected groups within the full span
    let mut annotated: Vec<BTreeSet<String>> = Vec::with_capacity(view.included.len());
    let mut detected: Vec<BTreeSet<String>> = Vec::with_capacity(view.included.len());
    for (i, event_view) in view.included.iter().enumerate() {
        let event = &ctx.events[event_view.index];
        let ann: BTreeSet<String> = event
            .segments
            .keys()
            .filter(|c| ctx.is_target(c))
            .map(|c| group_of(c))
            .collect();
        let mut dets = BTreeSet::new();
        for (channel, set) in det.per_channel() {
            if !ctx.is_target(channel) {
                continue;
            }
            if spans[i].iter().any(|fragment| set.intersects(fragment)) {
                dets.insert(group_of(channel));
            }
        }
        annotated.push(ann);
        detected.push(dets);
    }

    let mut counts = AwareCounts { tp: 0, fp: 0, fn_: 0 };
    for i in 0..view.included.len() {
        counts.tp += annotated[i].intersection(&detected[i]).count() as u64;
        counts.fn_ += annotated[i].difference(&detected[i]).count() as u64;
        'candidate: for group in detected[i].difference(&annotated[i]) {
            // discard when this group is a correct detection of another
            // event overlapping this one
            for j in 0..view.included.len() {
                if j != i
                    && sets_intersect(&view.included[i].span, &view.included[j].span)
                    && annotated[j].contains(group)
                    && detected[j].contains(group)
                {
                    continue 'candidate;
                }
            }
            counts.fp += 1;
        }
    }
    counts
}

fn aware_prf(counts: &AwareCounts, beta: f64) -> PrfScore {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    PrfScore {
        precision,
        recall,
        fbeta: fbeta_score(precision, recall, beta),
    }
}

/// Subsystem-aware F-beta. `None` when the detections carry no per-channel
/// structure or fewer than two subsystems exist among target channels
/// (single-subsystem runs are not reported).
pub fn subsystem_aware_fbeta(ctx: &EvaluationContext, view: &GlobalView) -> Option<PrfScore> {
    if !ctx.detections.has_channel_detail() {
        return None;
    }
    let subsystems: BTreeSet<&str> = ctx
        .channel_meta
        .iter()
        .filter(|m| m.target)
        .map(|m| m.subsystem.as_str())
        .collect();
    if subsystems.len() < 2 {
        return None;
    }
    let meta: BTreeMap<&str, &str> = ctx
        .channel_meta
        .iter()
        .map(|m| (m.name.as_str(), m.subsystem.as_str()))
        .collect();
    let group_of = move |channel: &str| meta.get(channel).copied().unwrap_or(channel).to_string();
    let counts = aware_counts(ctx, view, &group_of, false);
    Some(aware_prf(&counts, ctx.beta))
}

/// Channel-aware F-beta: the same scheme at channel granularity, with point
/// events widened by one nanosecond before the overlap tests. `None` when
/// detections carry no per-channel structure.
pub fn channel_aware_fbeta(ctx: &EvaluationContext, view: &GlobalView) -> Option<PrfScore> {
    if !ctx.detections.has_channel_detail() {
        return None;
    }
    let group_of = |channel: &str| channel.to_string();
    let counts = aware_counts(ctx, view, &group_of, true);
    Some(aware_prf(&counts, ctx.beta))
}

/// Run every applicable metric family and assemble the report. Subsystem-
/// and channel-aware scores are absent for detectors without per-channel
/// output; errors out when no event survives the exclusion filters.
pub fn evaluate(ctx: &EvaluationContext) -> Result<MetricReport> {
    let view = global_view(ctx);
    if view.included.is_empty() {
        return Err(Error::NoIncludedEvents);
    }
    let matching = match_events(&view);
    let event_scores = corrected_event_fbeta(&view, &matching)?;
    Ok(MetricReport {
        event_f: event_scores.prf(),
        subsystem_f: subsystem_aware_fbeta(ctx, &view),
        channel_f: channel_aware_fbeta(ctx, &view),
        alarming_precision: alarming_precision(&matching),
        adtqc: adtqc_score(&view, &matching),
        affiliation: affiliation_fbeta(&view)?,
        beta: ctx.beta,
        excluded_categories: ctx
            .excluded_categories
            .iter()
            .map(|c| c.as_str().to_string())
            .collect(),
    })
}
