//! Mission dataset layout on disk, detection files, and metric reports.
//!
//! A mission directory holds:
//!   channels/<name>.csv        header `timestamp,value`
//!   telecommands/<name>.csv    header `timestamp` (execution instants)
//!   labels.csv                 header `ID,Channel,StartTime,EndTime`
//!   anomaly_types.csv          header `ID,Class,Subclass,Category,Dimensionality,Locality,Length`
//!   channels.csv               header `Channel,Subsystem,Group,Unit,Target[,Kind]`
//!   telecommands.csv           header `Telecommand,Priority` (optional)
//!
//! All files are UTF-8, comma-separated, `\n` or `\r\n` line endings, header
//! row mandatory. Timestamps are ISO-8601 UTC with up to nanosecond
//! fractional seconds. Every parse error carries the file name and the
//! 1-based line number (the header is line 1).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use crate::data::{
    AnomalyTypeAttributes, ChannelKind, ChannelMeta, ChannelSeries, DetectionSet, EventAnnotation,
    EventCategory, MetricReport, GLOBAL_CHANNEL,
};
use crate::error::{Error, Result};
use crate::time::{IntervalSet, TimeInterval, Timestamp};

/// One labels.csv row.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelRow {
    pub id: String,
    pub channel: String,
    pub interval: TimeInterval,
}

/// One anomaly_types.csv record.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeRecord {
    pub class: String,
    pub subclass: String,
    pub category: EventCategory,
    pub attributes: Option<AnomalyTypeAttributes>,
}

/// A dataset-consistency problem reported by [`validate_dataset`].
/// Findings are data, not errors; an empty list means all invariants hold.
#[derive(Clone, Debug, PartialEq)]
pub struct Finding {
    pub code: &'static str,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// In-memory mission: series, telecommands, metadata, and annotations.
#[derive(Clone, Debug, Default)]
pub struct MissionDataset {
    pub channels: BTreeMap<String, ChannelSeries>,
    pub telecommands: BTreeMap<String, Vec<Timestamp>>,
    pub channel_meta: Vec<ChannelMeta>,
    pub events: Vec<EventAnnotation>,
    pub tc_priority: BTreeMap<String, u8>,
    /// Raw anomaly_types records, kept for validation and re-serialization.
    pub type_records: BTreeMap<String, TypeRecord>,
}

fn reader(path: &Path) -> Result<csv::Reader<BufReader<fs::File>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file)))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<BufReader<fs::File>>, expected: &[&str]) -> Result<usize> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let mut fields: Vec<String> = headers.iter().map(|s| s.to_string()).collect();
    if let Some(first) = fields.first_mut() {
        if let Some(stripped) = first.strip_prefix('\u{feff}') {
            *first = stripped.to_string();
        }
    }
    let got: Vec<&str> = fields.iter().map(|s| s.as_str()).collect();
    if got.len() >= expected.len() && got[..expected.len()] == *expected {
        return Ok(got.len());
    }
    Err(Error::parse(
        path,
        1,
        format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
    ))
}

fn row_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_ts(path: &Path, line: u64, s: &str) -> Result<Timestamp> {
    Timestamp::parse_iso(s).map_err(|_| Error::parse(path, line, format!("invalid timestamp {s:?}")))
}

/// Parse labels.csv into one record per row. Rows sharing (ID, Channel)
/// are validated pairwise non-overlapping (closed ranges; touching counts
/// as overlap).
pub fn parse_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["ID", "Channel", "StartTime", "EndTime"])?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 4 {
            return Err(Error::parse(path, line, "expected 4 fields"));
        }
        let start = parse_ts(path, line, &record[2])?;
        let end = parse_ts(path, line, &record[3])?;
        let interval = TimeInterval::new(start, end)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        rows.push(LabelRow {
            id: record[0].to_string(),
            channel: record[1].to_string(),
            interval,
        });
    }
    let mut by_key: BTreeMap<(&str, &str), Vec<&TimeInterval>> = BTreeMap::new();
    for row in &rows {
        by_key
            .entry((row.id.as_str(), row.channel.as_str()))
            .or_default()
            .push(&row.interval);
    }
    for ((id, channel), mut ivs) in by_key {
        ivs.sort_by_key(|iv| iv.start());
        for pair in ivs.windows(2) {
            if pair[0].intersects(pair[1]) {
                return Err(Error::validation(format!(
                    "{}: overlapping segments for event {id} on channel {channel}: {:?} and {:?}",
                    path.display(),
                    pair[0],
                    pair[1]
                )));
            }
        }
    }
    Ok(rows)
}

/// Write labels.csv in canonical order: (ID, Channel, StartTime).
pub fn write_labels(path: &Path, rows: &[LabelRow]) -> Result<()> {
    let mut sorted: Vec<&LabelRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.id, &a.channel, a.interval.start()).cmp(&(&b.id, &b.channel, b.interval.start()))
    });
    let mut out = String::from("ID,Channel,StartTime,EndTime\n");
    for row in sorted {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.id,
            row.channel,
            row.interval.start().to_iso(),
            row.interval.end().to_iso()
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse channels.csv. The Kind column is optional; an absent column or an
/// empty value both mean `Auto`.
pub fn parse_channels(path: &Path) -> Result<Vec<ChannelMeta>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["Channel", "Subsystem", "Group", "Unit", "Target"])?;
    let mut out: Vec<ChannelMeta> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 5 {
            return Err(Error::parse(path, line, "expected at least 5 fields"));
        }
        let name = record[0].to_string();
        if !seen.insert(name.clone()) {
            return Err(Error::parse(path, line, format!("duplicate channel name {name:?}")));
        }
        let group: i64 = record[2]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid group {:?}", &record[2])))?;
        let target = match &record[4] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("Target must be true or false, found {other:?}"),
                ))
            }
        };
        let kind: ChannelKind = record
            .get(5)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        out.push(ChannelMeta {
            name,
            subsystem: record[1].to_string(),
            group,
            unit: record[3].to_string(),
            target,
            kind,
        });
    }
    Ok(out)
}

pub fn write_channels_meta(path: &Path, meta: &[ChannelMeta]) -> Result<()> {
    let mut sorted: Vec<&ChannelMeta> = meta.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = String::from("Channel,Subsystem,Group,Unit,Target,Kind\n");
    for m in sorted {
        let kind = if m.kind == ChannelKind::Auto { "" } else { m.kind.as_str() };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.name, m.subsystem, m.group, m.unit, m.target, kind
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse anomaly_types.csv. Attribute columns may be empty for gaps and
/// invalid segments; attributes supplied for those categories are dropped
/// with a warning.
pub fn parse_anomaly_types(path: &Path) -> Result<(BTreeMap<String, TypeRecord>, Vec<String>)> {
    let mut rdr = reader(path)?;
    check_header(
        path,
        &mut rdr,
        &["ID", "Class", "Subclass", "Category", "Dimensionality", "Locality", "Length"],
    )?;
    let mut out = BTreeMap::new();
    let mut warnings = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 7 {
            return Err(Error::parse(path, line, "expected 7 fields"));
        }
        let id = record[0].to_string();
        let category: EventCategory = record[3]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        let attr_fields = (&record[4], &record[5], &record[6]);
        let attributes = match attr_fields {
            ("", "", "") => None,
            (d, l, n) => Some(AnomalyTypeAttributes {
                dimensionality: d
                    .parse()
                    .map_err(|e: Error| Error::parse(path, line, e.to_string()))?,
                locality: l
                    .parse()
                    .map_err(|e: Error| Error::parse(path, line, e.to_string()))?,
                length: n
                    .parse()
                    .map_err(|e: Error| Error::parse(path, line, e.to_string()))?,
            }),
        };
        let attributes = match category {
            EventCategory::CommunicationGap | EventCategory::InvalidSegment => {
                if attributes.is_some() {
                    warnings.push(format!(
                        "{}:{}: attributes given for {} event {id}; dropped",
                        path.display(),
                        line,
                        category
                    ));
                }
                None
            }
            _ => attributes,
        };
        if out
            .insert(
                id.clone(),
                TypeRecord {
                    class: record[1].to_string(),
                    subclass: record[2].to_string(),
                    category,
                    attributes,
                },
            )
            .is_some()
        {
            return Err(Error::parse(path, line, format!("duplicate event id {id:?}")));
        }
    }
    Ok((out, warnings))
}

pub fn write_anomaly_types(path: &Path, records: &BTreeMap<String, TypeRecord>) -> Result<()> {
    let mut out = String::from("ID,Class,Subclass,Category,Dimensionality,Locality,Length\n");
    for (id, rec) in records {
        let (d, l, n) = match &rec.attributes {
            Some(a) => (a.dimensionality.as_str(), a.locality.as_str(), a.length.as_str()),
            None => ("", "", ""),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            id, rec.class, rec.subclass, rec.category, d, l, n
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load one channel series file (`timestamp,value`).
pub fn load_channel_series(path: &Path, name: &str) -> Result<ChannelSeries> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["timestamp", "value"])?;
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut last: Option<Timestamp> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 2 {
            return Err(Error::parse(path, line, "expected 2 fields"));
        }
        let ts = parse_ts(path, line, &record[0])?;
        if let Some(prev) = last {
            if ts <= prev {
                return Err(Error::parse(
                    path,
                    line,
                    format!("timestamps must be strictly increasing, found {} after {}", ts, prev),
                ));
            }
        }
        last = Some(ts);
        let value: f64 = record[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid value {:?}", &record[1])))?;
        if !value.is_finite() {
            return Err(Error::parse(path, line, format!("non-finite value {value}")));
        }
        timestamps.push(ts);
        values.push(value);
    }
    if timestamps.is_empty() {
        return Err(Error::parse(path, 1, "channel file contains no samples"));
    }
    ChannelSeries::new(name, timestamps, values)
}

pub fn write_channel_series(path: &Path, series: &ChannelSeries) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(b"timestamp,value\n").map_err(|e| Error::io(path, e))?;
    for (ts, value) in series.iter() {
        writeln!(w, "{},{}", ts.to_iso(), value).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load one telecommand file: execution instants only (`timestamp`).
pub fn load_telecommand_series(path: &Path) -> Result<Vec<Timestamp>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["timestamp"])?;
    let mut out = Vec::new();
    let mut last: Option<Timestamp> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = row_line(&record);
        let ts = parse_ts(path, line, &record[0])?;
        if let Some(prev) = last {
            if ts <= prev {
                return Err(Error::parse(path, line, "execution timestamps must be strictly increasing"));
            }
        }
        last = Some(ts);
        out.push(ts);
    }
    Ok(out)
}

pub fn write_telecommand_series(path: &Path, executions: &[Timestamp]) -> Result<()> {
    let mut out = String::from("timestamp\n");
    for ts in executions {
        out.push_str(&ts.to_iso());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn parse_telecommand_meta(path: &Path) -> Result<BTreeMap<String, u8>> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["Telecommand", "Priority"])?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = row_line(&record);
        let priority: u8 = record[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid priority {:?}", &record[1])))?;
        if priority > 3 {
            return Err(Error::parse(path, line, format!("priority {priority} outside 0..=3")));
        }
        out.insert(record[0].to_string(), priority);
    }
    Ok(out)
}

pub fn write_telecommand_meta(path: &Path, priorities: &BTreeMap<String, u8>) -> Result<()> {
    let mut out = String::from("Telecommand,Priority\n");
    for (name, p) in priorities {
        out.push_str(&format!("{name},{p}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a detections file (`Channel,StartTime,EndTime`). Overlapping
/// intervals within a channel are merged with a warning; the reserved
/// channel `__global__` carries detections without channel attribution.
/// When channel metadata is supplied, unknown channels are an error.
pub fn read_detections(
    path: &Path,
    meta: Option<&[ChannelMeta]>,
) -> Result<(DetectionSet, Vec<String>)> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["Channel", "StartTime", "EndTime"])?;
    let known: Option<BTreeSet<&str>> =
        meta.map(|m| m.iter().map(|c| c.name.as_str()).collect());
    let mut raw: BTreeMap<String, Vec<TimeInterval>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 3 {
            return Err(Error::parse(path, line, "expected 3 fields"));
        }
        let channel = record[0].to_string();
        if channel != GLOBAL_CHANNEL {
            if let Some(known) = &known {
                if !known.contains(channel.as_str()) {
                    return Err(Error::parse(path, line, format!("unknown channel {channel:?}")));
                }
            }
        }
        let start = parse_ts(path, line, &record[1])?;
        let end = parse_ts(path, line, &record[2])?;
        let interval =
            TimeInterval::new(start, end).map_err(|e| Error::parse(path, line, e.to_string()))?;
        raw.entry(channel).or_default().push(interval);
    }
    let mut warnings = Vec::new();
    let mut per_channel = BTreeMap::new();
    let mut global_only = IntervalSet::new();
    let mut hull: Option<TimeInterval> = None;
    for (channel, intervals) in raw {
        let merged = IntervalSet::from_intervals(intervals.iter().copied());
        if merged.len() != intervals.len() {
            warnings.push(format!(
                "{}: overlapping detections on channel {channel} merged ({} -> {})",
                path.display(),
                intervals.len(),
                merged.len()
            ));
        }
        if let Some(h) = merged.hull() {
            hull = Some(match hull {
                Some(existing) => existing.hull(&h),
                None => h,
            });
        }
        if channel == GLOBAL_CHANNEL {
            global_only = merged;
        } else {
            per_channel.insert(channel, merged);
        }
    }
    let timeline = hull.unwrap_or_else(|| TimeInterval::point(Timestamp::from_ns(0)));
    Ok((DetectionSet::new(per_channel, global_only, timeline)?, warnings))
}

pub fn write_detections(path: &Path, detections: &DetectionSet) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(b"Channel,StartTime,EndTime\n").map_err(|e| Error::io(path, e))?;
    for (channel, set) in detections.per_channel() {
        for iv in set.iter() {
            writeln!(w, "{},{},{}", channel, iv.start().to_iso(), iv.end().to_iso())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    for iv in detections.global_only().iter() {
        writeln!(w, "{},{},{}", GLOBAL_CHANNEL, iv.start().to_iso(), iv.end().to_iso())
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_report(path: &Path, report: &MetricReport) -> Result<()> {
    let mut body = serde_json::to_string_pretty(report).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<MetricReport> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&body).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })
}

impl MissionDataset {
    /// Load a mission directory. Cross-file inconsistencies are left for
    /// [`validate_dataset`]; only structural problems are hard errors.
    /// Returns the dataset plus non-fatal warnings.
    pub fn load(dir: &Path) -> Result<(MissionDataset, Vec<String>)> {
        let channel_meta = parse_channels(&dir.join("channels.csv"))?;
        let (type_records, mut warnings) = parse_anomaly_types(&dir.join("anomaly_types.csv"))?;
        let label_rows = parse_labels(&dir.join("labels.csv"))?;

        let mut channels = BTreeMap::new();
        for meta in &channel_meta {
            let path = dir.join("channels").join(format!("{}.csv", meta.name));
            channels.insert(meta.name.clone(), load_channel_series(&path, &meta.name)?);
        }

        let mut telecommands = BTreeMap::new();
        let tc_meta_path = dir.join("telecommands.csv");
        let tc_priority = if tc_meta_path.exists() {
            let priorities = parse_telecommand_meta(&tc_meta_path)?;
            for name in priorities.keys() {
                let path = dir.join("telecommands").join(format!("{name}.csv"));
                telecommands.insert(name.clone(), load_telecommand_series(&path)?);
            }
            priorities
        } else {
            BTreeMap::new()
        };

        // Group label rows into events; category/class/attributes come from
        // the types table. Missing type rows default to Anomaly and surface
        // as validation findings.
        let mut grouped: BTreeMap<String, BTreeMap<String, Vec<TimeInterval>>> = BTreeMap::new();
        for row in &label_rows {
            grouped
                .entry(row.id.clone())
                .or_default()
                .entry(row.channel.clone())
                .or_default()
                .push(row.interval);
        }
        let mut events = Vec::new();
        for (id, per_channel) in grouped {
            let record = type_records.get(&id);
            if record.is_none() {
                warnings.push(format!("event {id} has no anomaly_types.csv record; assuming Anomaly"));
            }
            let segments: BTreeMap<String, IntervalSet> = per_channel
                .into_iter()
                .map(|(channel, ivs)| (channel, IntervalSet::from_intervals(ivs)))
                .collect();
            events.push(EventAnnotation {
                id,
                category: record.map_or(EventCategory::Anomaly, |r| r.category),
                class: record.map_or(String::new(), |r| r.class.clone()),
                subclass: record.map_or(String::new(), |r| r.subclass.clone()),
                segments,
                attributes: record.and_then(|r| r.attributes),
            });
        }

        Ok((
            MissionDataset {
                channels,
                telecommands,
                channel_meta,
                events,
                tc_priority,
                type_records,
            },
            warnings,
        ))
    }

    /// Write the mission directory in canonical form.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("channels")).map_err(|e| Error::io(dir, e))?;
        write_channels_meta(&dir.join("channels.csv"), &self.channel_meta)?;
        for (name, series) in &self.channels {
            write_channel_series(&dir.join("channels").join(format!("{name}.csv")), series)?;
        }
        if !self.telecommands.is_empty() {
            fs::create_dir_all(dir.join("telecommands")).map_err(|e| Error::io(dir, e))?;
            write_telecommand_meta(&dir.join("telecommands.csv"), &self.tc_priority)?;
            for (name, executions) in &self.telecommands {
                write_telecommand_series(
                    &dir.join("telecommands").join(format!("{name}.csv")),
                    executions,
                )?;
            }
        }
        let mut rows = Vec::new();
        for event in &self.events {
            for (channel, set) in &event.segments {
                for iv in set.iter() {
                    rows.push(LabelRow {
                        id: event.id.clone(),
                        channel: channel.clone(),
                        interval: *iv,
                    });
                }
            }
        }
        write_labels(&dir.join("labels.csv"), &rows)?;
        write_anomaly_types(&dir.join("anomaly_types.csv"), &self.type_records)?;
        Ok(())
    }

    pub fn meta(&self, channel: &str) -> Option<&ChannelMeta> {
        self.channel_meta.iter().find(|m| m.name == channel)
    }

    pub fn target_channels(&self) -> BTreeSet<String> {
        self.channel_meta
            .iter()
            .filter(|m| m.target)
            .map(|m| m.name.clone())
            .collect()
    }

    /// Hull of every sample and telecommand execution in the mission.
    pub fn time_span(&self) -> Option<TimeInterval> {
        let mut span: Option<TimeInterval> = None;
        let mut fold = |iv: TimeInterval| {
            span = Some(match span {
                Some(existing) => existing.hull(&iv),
                None => iv,
            });
        };
        for series in self.channels.values() {
            if let Some(s) = series.span() {
                fold(s);
            }
        }
        for executions in self.telecommands.values() {
            if let (Some(&a), Some(&b)) = (executions.first(), executions.last()) {
                fold(TimeInterval::new(a, b).expect("ordered executions"));
            }
        }
        span
    }

    /// Union of every event's segments on one channel (all categories).
    pub fn channel_annotations(&self, channel: &str) -> IntervalSet {
        let mut out = IntervalSet::new();
        for event in &self.events {
            if let Some(set) = event.segments.get(channel) {
                out = out.union(set);
            }
        }
        out
    }

    pub fn event(&self, id: &str) -> Option<&EventAnnotation> {
        self.events.iter().find(|e| e.id == id)
    }

    /// A copy restricted to a channel subset: series, metadata and event
    /// segments are filtered; events with no remaining segments are dropped
    /// and telecommands are omitted.
    pub fn restricted_to_channels(&self, keep: &BTreeSet<String>) -> MissionDataset {
        let events: Vec<EventAnnotation> = self
            .events
            .iter()
            .filter_map(|event| {
                let segments: BTreeMap<String, IntervalSet> = event
                    .segments
                    .iter()
                    .filter(|(c, _)| keep.contains(*c))
                    .map(|(c, s)| (c.clone(), s.clone()))
                    .collect();
                if segments.is_empty() {
                    None
                } else {
                    let mut out = event.clone();
                    out.segments = segments;
                    Some(out)
                }
            })
            .collect();
        let ids: BTreeSet<String> = events.iter().map(|e| e.id.clone()).collect();
        MissionDataset {
            channels: self
                .channels
                .iter()
                .filter(|(c, _)| keep.contains(*c))
                .map(|(c, s)| (c.clone(), s.clone()))
                .collect(),
            telecommands: BTreeMap::new(),
            channel_meta: self
                .channel_meta
                .iter()
                .filter(|m| keep.contains(&m.name))
                .cloned()
                .collect(),
            events,
            tc_priority: BTreeMap::new(),
            type_records: self
                .type_records
                .iter()
                .filter(|(id, _)| ids.contains(*id))
                .map(|(id, r)| (id.clone(), r.clone()))
                .collect(),
        }
    }
}

/// Check the cross-file invariants of a parsed mission. Findings are data,
/// not exceptions: an empty list means the dataset is consistent.
pub fn validate_dataset(dataset: &MissionDataset) -> Vec<Finding> {
    let mut findings = Vec::new();
    let known: BTreeSet<&str> = dataset.channel_meta.iter().map(|m| m.name.as_str()).collect();
    let targets: BTreeSet<&str> = dataset
        .channel_meta
        .iter()
        .filter(|m| m.target)
        .map(|m| m.name.as_str())
        .collect();

    for event in &dataset.events {
        if dataset.type_records.get(&event.id).is_none() {
            findings.push(Finding {
                code: "missing-type-record",
                message: format!("event {} is annotated but absent from anomaly_types.csv", event.id),
            });
        }
        if matches!(event.category, EventCategory::Anomaly | EventCategory::RareNominal)
            && event.attributes.is_none()
        {
            findings.push(Finding {
                code: "missing-attributes",
                message: format!("{} event {} has no taxonomy attributes", event.category, event.id),
            });
        }
        for (channel, set) in &event.segments {
            if !known.contains(channel.as_str()) {
                findings.push(Finding {
                    code: "unknown-channel",
                    message: format!("event {} references unknown channel {channel}", event.id),
                });
                continue;
            }
            if !targets.contains(channel.as_str()) {
                findings.push(Finding {
                    code: "annotation-on-non-target",
                    message: format!("event {} annotates non-target channel {channel}", event.id),
                });
            }
            if let Some(series) = dataset.channels.get(channel) {
                if let (Some(span), Some(hull)) = (series.span(), set.hull()) {
                    if hull.start() < span.start() || hull.end() > span.end() {
                        findings.push(Finding {
                            code: "segment-outside-series",
                            message: format!(
                                "event {} segment {hull:?} outside the time span of channel {channel}",
                                event.id
                            ),
                        });
                    }
                }
            }
        }
    }

    let annotated: BTreeSet<&str> = dataset.events.iter().map(|e| e.id.as_str()).collect();
    for id in dataset.type_records.keys() {
        if !annotated.contains(id.as_str()) {
            findings.push(Finding {
                code: "type-record-without-labels",
                message: format!("anomaly_types.csv lists {id} but labels.csv has no segments for it"),
            });
        }
    }
    findings
}

/// Convenience: the path of each per-channel file in a mission directory.
pub fn channel_file(dir: &Path, channel: &str) -> PathBuf {
    dir.join("channels").join(format!("{channel}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dimensionality, EventLength, Locality};

    fn write(path: &Path, content: &str) {
        fs::write(path, content).unwrap();
    }

    #[test]
    fn labels_parse_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        write(
            &path,
            "ID,Channel,StartTime,EndTime\n\
             id_7,ch_3,2000-01-02T00:00:00Z,2000-01-02T01:00:00Z\n",
        );
        let rows = parse_labels(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].interval.duration_ns(), 3600 * 1_000_000_000);

        // two disjoint rows for the same event: two fragments, no error
        write(
            &path,
            "ID,Channel,StartTime,EndTime\n\
             id_155,ch_44,2000-01-01T00:00:00Z,2000-01-01T01:00:00Z\n\
             id_155,ch_44,2000-01-03T00:00:00Z,2000-01-03T01:00:00Z\n",
        );
        assert_eq!(parse_labels(&path).unwrap().len(), 2);

        // overlapping ranges for the same (ID, Channel) are invalid
        write(
            &path,
            "ID,Channel,StartTime,EndTime\n\
             a,c,1970-01-01T00:00:00Z,1970-01-01T00:00:10Z\n\
             a,c,1970-01-01T00:00:05Z,1970-01-01T00:00:20Z\n",
        );
        assert!(parse_labels(&path).is_err());

        // end before start
        write(
            &path,
            "ID,Channel,StartTime,EndTime\n\
             a,c,1970-01-02T00:00:00Z,1970-01-01T00:00:00Z\n",
        );
        assert!(parse_labels(&path).is_err());

        // parse errors carry file and line number
        write(
            &path,
            "ID,Channel,StartTime,EndTime\n\
             a,c,1970-01-01T00:00:00Z,1970-01-01T00:00:10Z\n\
             b,c,not-a-time,1970-01-01T00:00:10Z\n",
        );
        let err = parse_labels(&path).unwrap_err().to_string();
        assert!(err.contains("labels.csv:3"), "{err}");
    }

    #[test]
    fn channels_meta_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("channels.csv");
        write(
            &path,
            "Channel,Subsystem,Group,Unit,Target,Kind\n\
             channel_41,subsystem_5,8,unit_2,true,\n\
             channel_9,subsystem_1,2,unit_1,false,Categorical\n",
        );
        let meta = parse_channels(&path).unwrap();
        assert_eq!(meta[0].kind, ChannelKind::Auto);
        assert!(meta[0].target);
        assert_eq!(meta[1].kind, ChannelKind::Categorical);
        assert!(!meta[1].target);

        write(
            &path,
            "Channel,Subsystem,Group,Unit,Target,Kind\n\
             channel_41,s,1,u,true,\n\
             channel_41,s,1,u,true,\n",
        );
        assert!(parse_channels(&path).is_err());

        // Kind column may be absent entirely
        write(&path, "Channel,Subsystem,Group,Unit,Target\nch,s,1,u,true\n");
        assert_eq!(parse_channels(&path).unwrap()[0].kind, ChannelKind::Auto);
    }

    #[test]
    fn anomaly_types_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("anomaly_types.csv");
        write(
            &path,
            "ID,Class,Subclass,Category,Dimensionality,Locality,Length\n\
             id_24,class_3,sub_1,RareNominal,Multivariate,Global,Subsequence\n\
             id_900,class_0,,CommunicationGap,,,\n",
        );
        let (records, warnings) = parse_anomaly_types(&path).unwrap();
        assert!(warnings.is_empty());
        let rec = &records["id_24"];
        assert_eq!(rec.category, EventCategory::RareNominal);
        assert_eq!(
            rec.attributes,
            Some(AnomalyTypeAttributes {
                dimensionality: Dimensionality::Multivariate,
                locality: Locality::Global,
                length: EventLength::Subsequence,
            })
        );
        assert!(records["id_900"].attributes.is_none());

        write(
            &path,
            "ID,Class,Subclass,Category,Dimensionality,Locality,Length\n\
             id_1,c,s,Weird,Univariate,Local,Point\n",
        );
        assert!(parse_anomaly_types(&path).is_err());

        // attributes on a gap are dropped with a warning
        write(
            &path,
            "ID,Class,Subclass,Category,Dimensionality,Locality,Length\n\
             id_2,c,s,CommunicationGap,Univariate,Local,Point\n",
        );
        let (records, warnings) = parse_anomaly_types(&path).unwrap();
        assert!(records["id_2"].attributes.is_none());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn channel_series_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.csv");
        write(
            &path,
            "timestamp,value\n\
             2000-01-01T08:10:12Z,1.5\n\
             2000-01-01T08:10:14Z,2.5\n\
             2000-01-01T08:10:38Z,-3.25\n",
        );
        let series = load_channel_series(&path, "ch").unwrap();
        assert_eq!(series.len(), 3);

        let out = dir.path().join("copy.csv");
        write_channel_series(&out, &series).unwrap();
        assert_eq!(load_channel_series(&out, "ch").unwrap(), series);
        assert_eq!(fs::read(&out).unwrap(), fs::read(&path).unwrap());

        write(&path, "timestamp,value\n2000-01-01T08:10:12Z,1\n2000-01-01T08:10:12Z,2\n");
        assert!(load_channel_series(&path, "ch").is_err());
        write(&path, "timestamp,value\n2000-01-01T08:10:12Z,inf\n");
        assert!(load_channel_series(&path, "ch").is_err());
        write(&path, "timestamp,value\n");
        assert!(load_channel_series(&path, "ch").is_err());
    }

    #[test]
    fn detections_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("det.csv");
        write(
            &path,
            "Channel,StartTime,EndTime\n\
             ch_1,2000-01-01T00:00:00Z,2000-01-01T01:00:00Z\n\
             ch_2,2000-01-01T02:00:00Z,2000-01-01T02:00:00Z\n",
        );
        let (det, warnings) = read_detections(&path, None).unwrap();
        assert!(warnings.is_empty());
        assert!(det.has_channel_detail());
        let out = dir.path().join("copy.csv");
        write_detections(&out, &det).unwrap();
        let (again, _) = read_detections(&out, None).unwrap();
        assert_eq!(again.per_channel(), det.per_channel());
        assert_eq!(fs::read(&out).unwrap(), fs::read(&path).unwrap());
    }

    #[test]
    fn detections_global_only_and_merge() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("det.csv");
        write(
            &path,
            "Channel,StartTime,EndTime\n\
             __global__,2000-01-01T00:00:00Z,2000-01-01T01:00:00Z\n",
        );
        let (det, _) = read_detections(&path, None).unwrap();
        assert!(!det.has_channel_detail());
        assert_eq!(det.global_view().len(), 1);

        write(
            &path,
            "Channel,StartTime,EndTime\n\
             ch_1,2000-01-01T00:00:00Z,2000-01-01T00:00:10Z\n\
             ch_1,2000-01-01T00:00:05Z,2000-01-01T00:00:20Z\n",
        );
        let (det, warnings) = read_detections(&path, None).unwrap();
        assert_eq!(det.channel("ch_1").unwrap().len(), 1);
        assert_eq!(warnings.len(), 1);

        let meta = vec![ChannelMeta {
            name: "other".into(),
            subsystem: "s".into(),
            group: 0,
            unit: "u".into(),
            target: true,
            kind: ChannelKind::Auto,
        }];
        assert!(read_detections(&path, Some(&meta)).is_err());
    }

    fn tiny_mission(dir: &Path) {
        fs::create_dir_all(dir.join("channels")).unwrap();
        write(
            &dir.join("channels.csv"),
            "Channel,Subsystem,Group,Unit,Target,Kind\n\
             ch_1,subsystem_0,0,unit_0,true,\n\
             ch_2,subsystem_1,1,unit_0,false,\n",
        );
        write(
            &dir.join("channels").join("ch_1.csv"),
            "timestamp,value\n\
             2000-01-01T00:00:00Z,0\n\
             2000-01-01T00:01:00Z,5\n\
             2000-01-01T00:02:00Z,0\n",
        );
        write(
            &dir.join("channels").join("ch_2.csv"),
            "timestamp,value\n\
             2000-01-01T00:00:30Z,1\n\
             2000-01-01T00:02:30Z,2\n",
        );
        write(
            &dir.join("labels.csv"),
            "ID,Channel,StartTime,EndTime\n\
             id_1,ch_1,2000-01-01T00:01:00Z,2000-01-01T00:01:00Z\n",
        );
        write(
            &dir.join("anomaly_types.csv"),
            "ID,Class,Subclass,Category,Dimensionality,Locality,Length\n\
             id_1,class_0,s0,Anomaly,Univariate,Global,Point\n",
        );
    }

    #[test]
    fn mission_load_validate_write() {
        let dir = tempfile::tempdir().unwrap();
        tiny_mission(dir.path());
        let (dataset, warnings) = MissionDataset::load(dir.path()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(dataset.events.len(), 1);
        assert!(validate_dataset(&dataset).is_empty());

        let out = tempfile::tempdir().unwrap();
        dataset.write(out.path()).unwrap();
        let (again, _) = MissionDataset::load(out.path()).unwrap();
        assert_eq!(again.channel_meta, dataset.channel_meta);
        assert_eq!(again.channels, dataset.channels);
        assert_eq!(again.events.len(), dataset.events.len());

        // canonical writes are byte-stable
        let second = tempfile::tempdir().unwrap();
        again.write(second.path()).unwrap();
        for name in ["channels.csv", "labels.csv", "anomaly_types.csv"] {
            assert_eq!(
                fs::read(out.path().join(name)).unwrap(),
                fs::read(second.path().join(name)).unwrap(),
                "{name} not byte-stable"
            );
        }
    }

    #[test]
    fn validation_findings() {
        let dir = tempfile::tempdir().unwrap();
        tiny_mission(dir.path());
        // annotate the non-target channel and an id without a type record
        write(
            &dir.path().join("labels.csv"),
            "ID,Channel,StartTime,EndTime\n\
             id_1,ch_1,2000-01-01T00:01:00Z,2000-01-01T00:01:00Z\n\
             id_2,ch_2,2000-01-01T00:00:30Z,2000-01-01T00:02:30Z\n",
        );
        let (dataset, warnings) = MissionDataset::load(dir.path()).unwrap();
        assert_eq!(warnings.len(), 1);
        let findings = validate_dataset(&dataset);
        let codes: Vec<&str> = findings.iter().map(|f| f.code).collect();
        assert!(codes.contains(&"annotation-on-non-target"));
        assert!(codes.contains(&"missing-type-record"));
    }

    #[test]
    fn report_round_trip() {
        use crate::data::{AdtqcSummary, PrfScore};
        let report = MetricReport {
            event_f: PrfScore { precision: 0.5, recall: 0.25, fbeta: 0.4 },
            subsystem_f: None,
            channel_f: Some(PrfScore { precision: 1.0, recall: 1.0, fbeta: 1.0 }),
            alarming_precision: 0.75,
            adtqc: AdtqcSummary { score: 0.9, after_ratio: 1.0 },
            affiliation: PrfScore { precision: 0.6, recall: 0.2, fbeta: 0.2 },
            beta: 0.5,
            excluded_categories: vec!["CommunicationGap".into()],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&path, &report).unwrap();
        assert_eq!(read_report(&path).unwrap(), report);
    }
}
