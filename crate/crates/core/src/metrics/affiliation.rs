//! Modified affiliation-based precision/recall/F-beta.
//!
//! The timeline is partitioned into zones anchored at the included events,
//! with boundaries at the midpoints between consecutive anchors. Within a
//! zone, directed average distances between detections and the anchor are
//! converted to probabilities against a uniform-random baseline over the
//! zone: a perfect detection scores 1, a uniformly random one about 0.5.
//! Zones without any detection get precision 0.5 and recall 0. Fragmented
//! events anchor at their hull; point events are widened by 1 ns;
//! overlapping anchors merge into one zone. Scores are macro-averaged
//! across event ids.
//!
//! Timestamps are mapped to f64 nanoseconds since the timeline start, so
//! the survival-function integrals work on plain real numbers.

use std::collections::BTreeMap;

use crate::data::PrfScore;
use crate::error::{Error, Result};

use super::{fbeta_score, GlobalView};

struct Anchor {
    start_ns: i64,
    end_ns: i64,
    ids: Vec<String>,
}

/// Survival probability of the distance from a uniform random point of the
/// zone `[zs, ze]` to the event `[es, ee]`, evaluated at the distance of a
/// fixed point `x`: `P(dist(U, E) >= dist(x, E))`.
fn pointwise_precision(x: f64, es: f64, ee: f64, zs: f64, ze: f64) -> f64 {
    let j = ze - zs;
    if j <= 0.0 {
        return 1.0;
    }
    if x >= es && x <= ee {
        return 1.0;
    }
    let d = if x < es { es - x } else { x - ee };
    (((es - d) - zs).max(0.0) + (ze - (ee + d)).max(0.0)) / j
}

/// Exact integral of the precision survival over `[lo, hi]` left of the
/// event (`hi <= es`). Piecewise linear with a single kink.
fn precision_integral_left(lo: f64, hi: f64, es: f64, ee: f64, zs: f64, ze: f64) -> f64 {
    let j = ze - zs;
    let kink = es + ee - ze;
    let f = |x: f64| ((x - zs) + (x - kink).max(0.0)) / j;
    let mut acc = 0.0;
    let mut cuts = vec![lo, hi];
    if kink > lo && kink < hi {
        cuts.insert(1, kink);
    }
    for w in cuts.windows(2) {
        acc += (f(w[0]) + f(w[1])) / 2.0 * (w[1] - w[0]);
    }
    acc
}

/// Exact integral right of the event (`lo >= ee`).
fn precision_integral_right(lo: f64, hi: f64, es: f64, ee: f64, zs: f64, ze: f64) -> f64 {
    let j = ze - zs;
    let kink = es + ee - zs;
    let f = |x: f64| ((kink - x).max(0.0) + (ze - x)) / j;
    let mut acc = 0.0;
    let mut cuts = vec![lo, hi];
    if kink > lo && kink < hi {
        cuts.insert(1, kink);
    }
    for w in cuts.windows(2) {
        acc += (f(w[0]) + f(w[1])) / 2.0 * (w[1] - w[0]);
    }
    acc
}

/// Zone precision: the prediction-measure average of the precision survival.
/// Positive-length pieces integrate exactly; a zone holding only point
/// detections averages their pointwise values.
fn zone_precision(pieces: &[(f64, f64)], event: (f64, f64), zone: (f64, f64)) -> f64 {
    let (es, ee) = event;
    let (zs, ze) = zone;
    if ze - zs <= 0.0 {
        return 1.0;
    }
    let total_len: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    if total_len > 0.0 {
        let mut acc = 0.0;
        for &(a, b) in pieces {
            if b - a <= 0.0 {
                continue; // measure zero inside a mixed set
            }
            if a < es {
                acc += precision_integral_left(a, b.min(es), es, ee, zs, ze);
            }
            let mid_lo = a.max(es);
            let mid_hi = b.min(ee);
            if mid_hi > mid_lo {
                acc += mid_hi - mid_lo;
            }
            if b > ee {
                acc += precision_integral_right(a.max(ee), b, es, ee, zs, ze);
            }
        }
        acc / total_len
    } else {
        let sum: f64 = pieces
            .iter()
            .map(|&(a, _)| pointwise_precision(a, es, ee, zs, ze))
            .sum();
        sum / pieces.len() as f64
    }
}

/// Distance from `y` to the nearest prediction piece (pieces sorted).
fn distance_to_pieces(y: f64, pieces: &[(f64, f64)]) -> f64 {
    let idx = pieces.partition_point(|&(_, b)| b < y);
    let mut best = f64::INFINITY;
    if idx < pieces.len() {
        let (a, _) = pieces[idx];
        if a <= y {
            return 0.0;
        }
        best = a - y;
    }
    if idx > 0 {
        best = best.min(y - pieces[idx - 1].1);
    }
    best
}

/// Survival probability of the distance from the fixed ground-truth point
/// `y` to a uniform random point of the zone, evaluated at `d`:
/// `P(|U - y| >= d)`.
fn pointwise_recall(y: f64, d: f64, zs: f64, ze: f64) -> f64 {
    let j = ze - zs;
    if j <= 0.0 {
        return if d <= 0.0 { 1.0 } else { 0.0 };
    }
    (((y - d) - zs).max(0.0) + (ze - (y + d)).max(0.0)) / j
}

/// Zone recall: the event-measure average of the recall survival at the
/// distance to the detections. The integrand is continuous and piecewise
/// linear; integrating by trapezoid between its kinks is exact.
fn zone_recall(pieces: &[(f64, f64)], event: (f64, f64), zone: (f64, f64)) -> f64 {
    let (es, ee) = event;
    let (zs, ze) = zone;
    let g = |y: f64| pointwise_recall(y, distance_to_pieces(y, pieces), zs, ze);
    if ee - es <= 0.0 {
        return g(es);
    }
    let mut cuts: Vec<f64> = vec![es, ee];
    let mut push = |x: f64| {
        if x > es && x < ee {
            cuts.push(x);
        }
    };
    for (i, &(a, b)) in pieces.iter().enumerate() {
        push(a);
        push(b);
        for edge in [a, b] {
            push((edge + zs) / 2.0);
            push((edge + ze) / 2.0);
        }
        if i + 1 < pieces.len() {
            push((b + pieces[i + 1].0) / 2.0);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        acc += (g(w[0]) + g(w[1])) / 2.0 * (w[1] - w[0]);
    }
    acc / (ee - es)
}

/// Modified affiliation-based scores over the global view.
pub fn affiliation_fbeta(view: &GlobalView) -> Result<PrfScore> {
    let origin = view.timeline.start().ns();
    let mut anchors: Vec<Anchor> = Vec::new();
    for event in &view.included {
        let hull = event.hull.point_adjusted();
        let clamped = match hull.intersection(&view.timeline) {
            Some(c) => c,
            None => continue,
        };
        anchors.push(Anchor {
            start_ns: clamped.start().ns(),
            end_ns: clamped.end().ns(),
            ids: vec![event.id.clone()],
        });
    }
    if anchors.is_empty() {
        return Err(Error::NoIncludedEvents);
    }
    anchors.sort_by_key(|a| (a.start_ns, a.end_ns));
    let mut merged: Vec<Anchor> = Vec::new();
    for anchor in anchors {
        match merged.last_mut() {
            Some(last) if anchor.start_ns <= last.end_ns => {
                last.end_ns = last.end_ns.max(anchor.end_ns);
                last.ids.extend(anchor.ids);
            }
            _ => merged.push(anchor),
        }
    }

    let to_f = |ns: i64| (ns - origin) as f64;
    let timeline_end = to_f(view.timeline.end().ns());
    let mut bounds = Vec::with_capacity(merged.len() + 1);
    bounds.push(0.0);
    for pair in merged.windows(2) {
        bounds.push((to_f(pair[0].end_ns) + to_f(pair[1].start_ns)) / 2.0);
    }
    bounds.push(timeline_end);

    let detections: Vec<(f64, f64)> = view
        .detections
        .iter()
        .map(|iv| (to_f(iv.start().ns()), to_f(iv.end().ns())))
        .collect();

    let mut per_id: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for (k, anchor) in merged.iter().enumerate() {
        let zone = (bounds[k], bounds[k + 1]);
        let event = (to_f(anchor.start_ns), to_f(anchor.end_ns));
        let pieces: Vec<(f64, f64)> = detections
            .iter()
            .filter_map(|&(a, b)| {
                let lo = a.max(zone.0);
                let hi = b.min(zone.1);
                if lo <= hi {
                    Some((lo, hi))
                } else {
                    None
                }
            })
            .collect();
        let (p, r) = if pieces.is_empty() {
            (0.5, 0.0)
        } else {
            (
                zone_precision(&pieces, event, zone),
                zone_recall(&pieces, event, zone),
            )
        };
        for id in &anchor.ids {
            per_id.entry(id).or_default().push((p, r));
        }
    }

    let mut sum_p = 0.0;
    let mut sum_r = 0.0;
    let mut sum_f = 0.0;
    for scores in per_id.values() {
        let p = scores.iter().map(|s| s.0).sum::<f64>() / scores.len() as f64;
        let r = scores.iter().map(|s| s.1).sum::<f64>() / scores.len() as f64;
        sum_p += p;
        sum_r += r;
        sum_f += fbeta_score(p, r, view.beta);
    }
    let n = per_id.len() as f64;
    Ok(PrfScore {
        precision: sum_p / n,
        recall: sum_r / n,
        fbeta: sum_f / n,
    })
}
