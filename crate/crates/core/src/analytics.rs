//! Pooled per-participant timelines and the duration-weighted gaze
//! attention network.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::GazeEvent;

pub const DEFAULT_INTERVAL_S: f64 = 5.0;
pub const DEFAULT_THRESHOLD_S: f64 = 2.0;
/// Label written for intervals without a dominant target.
pub const NONE_LABEL: &str = "NONE";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("line {line}: {msg}")]
    DotParse { line: usize, msg: String },
    #[error("invalid timeline parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineParams {
    pub interval_s: f64,
    pub threshold_s: f64,
}

impl Default for TimelineParams {
    fn default() -> Self {
        Self { interval_s: DEFAULT_INTERVAL_S, threshold_s: DEFAULT_THRESHOLD_S }
    }
}

impl TimelineParams {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if !(self.interval_s.is_finite() && self.interval_s > 0.0) {
            return Err(AnalyticsError::Params(format!("interval {} must be > 0", self.interval_s)));
        }
        if !(self.threshold_s.is_finite() && self.threshold_s >= 0.0) {
            return Err(AnalyticsError::Params(format!("threshold {} must be >= 0", self.threshold_s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineInterval {
    pub participant_id: String,
    pub start: f64,
    pub length: f64,
    /// Dominant target, `None` when no target reached the threshold.
    pub label: Option<String>,
}

/// Session time span `[start, end)` covered by timelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSpan {
    pub start: f64,
    pub end: f64,
}

impl SessionSpan {
    /// Span covering every event's `[timestamp, timestamp + duration)`.
    pub fn of_events(events: &[GazeEvent]) -> Option<SessionSpan> {
        let start = events.iter().map(|e| e.timestamp_s).reduce(f64::min)?;
        let end = events.iter().map(|e| e.timestamp_s + e.duration_s).reduce(f64::max)?;
        Some(SessionSpan { start, end })
    }

    fn interval_count(&self, len: f64) -> usize {
        (((self.end - self.start) / len - POOLING_EPS).ceil() as usize).max(1)
    }
}

/// Slack for interval boundaries and duration comparisons, so decimal
/// timestamps like `5.1 - 0.1` land on the boundary they denote.
const POOLING_EPS: f64 = 1e-9;

/// Index of the interval holding `timestamp`.
fn bucket(timestamp: f64, span: &SessionSpan, len: f64, count: usize) -> usize {
    (((timestamp - span.start) / len + POOLING_EPS).floor().max(0.0) as usize).min(count - 1)
}

/// Label with the largest accumulated duration if it reaches `threshold`;
/// equal durations resolve to the lexicographically smallest label.
fn dominant(durations: &BTreeMap<&str, f64>, threshold: f64) -> Option<String> {
    let mut best: Option<(&str, f64)> = None;
    for (&label, &d) in durations {
        if best.is_none_or(|(_, b)| d > b + POOLING_EPS) {
            best = Some((label, d));
        }
    }
    best.filter(|&(_, d)| d >= threshold - POOLING_EPS).map(|(l, _)| l.to_string())
}

/// Pools each participant's events into fixed-length intervals.
///
/// Every event contributes its whole duration to the interval holding its
/// timestamp. An interval takes the target with the most accumulated time,
/// provided it reaches `threshold_s`; events without a target never win.
/// Each participant gets the full run of intervals over `span` (or the
/// events' own span), ordered by participant then start.
pub fn pool_timeline(
    events: &[GazeEvent],
    params: &TimelineParams,
    span: Option<SessionSpan>,
) -> Result<Vec<TimelineInterval>, AnalyticsError> {
    params.validate()?;
    let Some(span) = span.or_else(|| SessionSpan::of_events(events)) else {
        return Ok(Vec::new());
    };
    let count = span.interval_count(params.interval_s);
    let mut per: BTreeMap<&str, Vec<BTreeMap<&str, f64>>> = BTreeMap::new();
    for e in events {
        let slots = per.entry(e.observer.as_str()).or_insert_with(|| vec![BTreeMap::new(); count]);
        if let Some(t) = e.target.as_deref() {
            *slots[bucket(e.timestamp_s, &span, params.interval_s, count)].entry(t).or_insert(0.0) += e.duration_s;
        }
    }
    let mut out = Vec::with_capacity(per.len() * count);
    for (pid, slots) in per {
        for (i, durations) in slots.iter().enumerate() {
            out.push(TimelineInterval {
                participant_id: pid.to_string(),
                start: span.start + i as f64 * params.interval_s,
                length: params.interval_s,
                label: dominant(durations, params.threshold_s),
            });
        }
    }
    Ok(out)
}

/// CSV with header `participant_id,start_s,length_s,label`.
pub fn timeline_csv(intervals: &[TimelineInterval]) -> String {
    let mut s = String::from("participant_id,start_s,length_s,label\n");
    for iv in intervals {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{}",
            csv_field(&iv.participant_id),
            iv.start,
            iv.length,
            csv_field(iv.label.as_deref().unwrap_or(NONE_LABEL))
        );
    }
    s
}

fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttentionNetwork {
    /// Node weight: total incoming fixation seconds.
    pub nodes: BTreeMap<String, f64>,
    /// `(observer, target)` to total fixation seconds.
    pub edges: BTreeMap<(String, String), f64>,
}

impl AttentionNetwork {
    pub fn total_edge_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    pub fn total_node_weight(&self) -> f64 {
        self.nodes.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }
}

/// Builds the network: edge weight is the summed duration of an observer's
/// events on a target, node weight the sum of incoming edge weights. Every
/// observer is a node even without incoming gaze.
pub fn build_network(events: &[GazeEvent]) -> AttentionNetwork {
    let mut net = AttentionNetwork::default();
    for e in events {
        net.nodes.entry(e.observer.clone()).or_insert(0.0);
        if let Some(t) = &e.target {
            *net.edges.entry((e.observer.clone(), t.clone())).or_insert(0.0) += e.duration_s;
        }
    }
    for ((_, target), w) in &net.edges {
        *net.nodes.entry(target.clone()).or_insert(0.0) += *w;
    }
    net
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkFormat {
    Dot,
    Json,
}

pub fn export_network(net: &AttentionNetwork, format: NetworkFormat) -> String {
    match format {
        NetworkFormat::Dot => to_dot(net),
        NetworkFormat::Json => to_json(net),
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Weights carry three decimals; nodes and edges are sorted.
pub fn to_dot(net: &AttentionNetwork) -> String {
    let mut s = String::from("digraph gaze {\n");
    for (id, w) in &net.nodes {
        let _ = writeln!(s, "  {} [weight=\"{:.3}\"];", dot_quote(id), w);
    }
    for ((a, b), w) in &net.edges {
        let _ = writeln!(s, "  {} -> {} [weight=\"{:.3}\"];", dot_quote(a), dot_quote(b), w);
    }
    s.push_str("}\n");
    s
}

#[derive(Serialize)]
struct JsonNode<'a> {
    id: &'a str,
    weight: Fixed6,
}

#[derive(Serialize)]
struct JsonEdge<'a> {
    source: &'a str,
    target: &'a str,
    weight: Fixed6,
}

#[derive(Serialize)]
struct JsonNetwork<'a> {
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<JsonEdge<'a>>,
}

/// Serializes as a JSON number with exactly six decimals.
#[derive(Debug, Clone, Copy)]
pub struct Fixed6(pub f64);

impl Serialize for Fixed6 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        if !self.0.is_finite() {
            return Err(S::Error::custom("non-finite number"));
        }
        let raw = serde_json::value::RawValue::from_string(format!("{:.6}", self.0)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn to_json(net: &AttentionNetwork) -> String {
    let doc = JsonNetwork {
        nodes: net.nodes.iter().map(|(id, w)| JsonNode { id, weight: Fixed6(*w) }).collect(),
        edges: net
            .edges
            .iter()
            .map(|((a, b), w)| JsonEdge { source: a, target: b, weight: Fixed6(*w) })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("network serializes");
    s.push('\n');
    s
}

fn parse_quoted(s: &str) -> Option<(String, &str)> {
    let mut chars = s.strip_prefix('"')?.char_indices();
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => out.push(chars.next()?.1),
            '"' => return Some((out, &s[i + 2..])),
            c => out.push(c),
        }
    }
    None
}

fn parse_weight(s: &str) -> Option<f64> {
    let rest = s.trim().strip_prefix("[weight=\"")?;
    let (num, tail) = rest.split_once('"')?;
    (tail.trim() == "];").then_some(())?;
    num.parse().ok()
}

/// Parses the DOT dialect written by [`to_dot`].
pub fn parse_dot(text: &str) -> Result<AttentionNetwork, AnalyticsError> {
    let err = |line: usize, msg: &str| AnalyticsError::DotParse { line, msg: msg.to_string() };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "digraph gaze {")) => {}
        _ => return Err(err(1, "expected `digraph gaze {`")),
    }
    let mut net = AttentionNetwork::default();
    let mut closed = false;
    for (i, raw) in lines {
        let n = i + 1;
        let line = raw.trim();
        if line == "}" {
            closed = true;
            continue;
        }
        if closed {
            if line.is_empty() {
                continue;
            }
            return Err(err(n, "content after closing brace"));
        }
        let (a, rest) = parse_quoted(line).ok_or_else(|| err(n, "expected quoted node id"))?;
        let rest = rest.trim_start();
        if let Some(rest) = rest.strip_prefix("->") {
            let (b, rest) = parse_quoted(rest.trim_start()).ok_or_else(|| err(n, "expected quoted edge target"))?;
            let w = parse_weight(rest).ok_or_else(|| err(n, "expected weight attribute"))?;
            net.edges.insert((a, b), w);
        } else {
            let w = parse_weight(rest).ok_or_else(|| err(n, "expected weight attribute"))?;
            net.nodes.insert(a, w);
        }
    }
    if !closed {
        return Err(err(text.lines().count(), "missing closing brace"));
    }
    Ok(net)
}
