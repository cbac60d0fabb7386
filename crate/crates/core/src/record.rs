//! The unit of data flowing through every step of the life cycle: metric
//! samples, log entries, and trace spans, wrapped in [`ObservabilityRecord`].
//!
//! Records serialize to single-line JSON objects (UTF-8, newline-terminated
//! on the wire). The encoding is canonical: label and attribute maps are
//! sorted by key, struct fields appear in declaration order, and floats use
//! the shortest round-trippable form. Two records with identical content
//! therefore produce identical bytes, which is what makes the deduplication
//! key stable across retransmissions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("invalid metric name {0:?}")]
    InvalidMetricName(String),
    #[error("empty log message")]
    EmptyLogMessage,
    #[error("negative timestamp {0}")]
    NegativeTimestamp(i64),
    #[error("span id equals parent span id ({0})")]
    SelfParent(SpanId),
    #[error("non-finite metric value")]
    NonFiniteValue,
    #[error("malformed record line: {0}")]
    Malformed(String),
}

/// One category of observability output. The full enumeration is the domain
/// set; its cardinality is [`InstrumentationDomain::COUNT`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstrumentationDomain {
    Metric,
    Log,
    Trace,
}

impl InstrumentationDomain {
    pub const ALL: [InstrumentationDomain; 3] = [
        InstrumentationDomain::Metric,
        InstrumentationDomain::Log,
        InstrumentationDomain::Trace,
    ];
    pub const COUNT: usize = 3;

    /// Tag byte used on the wire.
    pub fn wire_tag(self) -> u8 {
        match self {
            InstrumentationDomain::Metric => 0x01,
            InstrumentationDomain::Log => 0x02,
            InstrumentationDomain::Trace => 0x03,
        }
    }

    pub fn from_wire_tag(tag: u8) -> Option<Self> {
        match tag {
            0x01 => Some(InstrumentationDomain::Metric),
            0x02 => Some(InstrumentationDomain::Log),
            0x03 => Some(InstrumentationDomain::Trace),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InstrumentationDomain::Metric => "metric",
            InstrumentationDomain::Log => "log",
            InstrumentationDomain::Trace => "trace",
        }
    }
}

impl fmt::Display for InstrumentationDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstrumentationDomain {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "metric" => Ok(InstrumentationDomain::Metric),
            "log" => Ok(InstrumentationDomain::Log),
            "trace" => Ok(InstrumentationDomain::Trace),
            other => Err(RecordError::Malformed(format!("unknown domain {other:?}"))),
        }
    }
}

/// 128-bit trace identifier, rendered as 32 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceId(pub u128);

/// 64-bit span identifier, rendered as 16 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanId(pub u64);

impl fmt::Display for TraceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl fmt::Display for SpanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for TraceId {
    type Err = RecordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u128::from_str_radix(s, 16)
            .map(TraceId)
            .map_err(|_| RecordError::Malformed(format!("bad trace id {s:?}")))
    }
}

impl FromStr for SpanId {
    type Err = RecordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16)
            .map(SpanId)
            .map_err(|_| RecordError::Malformed(format!("bad span id {s:?}")))
    }
}

macro_rules! hex_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_serde!(TraceId);
hex_serde!(SpanId);

/// Serializes metric values so that NaN and infinities survive the JSON
/// round trip (plain JSON has no literal for them).
mod float_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v == f64::INFINITY {
            s.serialize_str("+Inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-Inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "+Inf" => Ok(f64::INFINITY),
                "-Inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "bad float repr {other:?}"
                ))),
            },
        }
    }
}

/// A numerical value collected at a point in time.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricSample {
    pub name: String,
    /// Canonical form: keys unique and sorted, which `BTreeMap` guarantees.
    pub labels: BTreeMap<String, String>,
    #[serde(with = "float_repr")]
    pub value: f64,
    /// Milliseconds since the Unix epoch, stamped at read time on the source.
    pub source_timestamp: i64,
    pub device_id: String,
}

pub fn valid_metric_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || c == ':' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ':')
}

impl MetricSample {
    pub fn validate(&self) -> Result<(), RecordError> {
        if !valid_metric_name(&self.name) {
            return Err(RecordError::InvalidMetricName(self.name.clone()));
        }
        if self.source_timestamp < 0 {
            return Err(RecordError::NegativeTimestamp(self.source_timestamp));
        }
        if self.value.is_infinite() {
            return Err(RecordError::NonFiniteValue);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LogLevel {
    #[serde(rename = "DEBUG")]
    Debug,
    #[serde(rename = "INFO")]
    Info,
    #[serde(rename = "WARN")]
    Warn,
    #[serde(rename = "ERROR")]
    Error,
}

impl LogLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            LogLevel::Debug => "DEBUG",
            LogLevel::Info => "INFO",
            LogLevel::Warn => "WARN",
            LogLevel::Error => "ERROR",
        }
    }

    /// Lenient parse; unparsable levels default to INFO.
    pub fn parse_lenient(s: &str) -> LogLevel {
        match s.trim().to_ascii_uppercase().as_str() {
            "DEBUG" | "TRACE" => LogLevel::Debug,
            "WARN" | "WARNING" => LogLevel::Warn,
            "ERROR" | "ERR" | "FATAL" => LogLevel::Error,
            _ => LogLevel::Info,
        }
    }
}

impl fmt::Display for LogLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of semi-structured text reporting an event.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LogEntry {
    pub source_timestamp: i64,
    pub device_id: String,
    pub source_file: String,
    pub level: LogLevel,
    pub message: String,
    /// `key=value` pairs extracted at ingest; absent until extraction runs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fields: Option<BTreeMap<String, String>>,
}

impl LogEntry {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.message.is_empty() {
            return Err(RecordError::EmptyLogMessage);
        }
        if self.source_timestamp < 0 {
            return Err(RecordError::NegativeTimestamp(self.source_timestamp));
        }
        Ok(())
    }
}

/// One timed service call in a trace.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceSpan {
    pub trace_id: TraceId,
    pub span_id: SpanId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parent_span_id: Option<SpanId>,
    pub service: String,
    pub operation: String,
    /// Microseconds since the Unix epoch.
    pub start: i64,
    /// Microseconds; zero-duration spans are treated as point events.
    pub duration: u64,
    pub attributes: BTreeMap<String, String>,
    pub device_id: String,
}

impl TraceSpan {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.parent_span_id == Some(self.span_id) {
            return Err(RecordError::SelfParent(self.span_id));
        }
        if self.start < 0 {
            return Err(RecordError::NegativeTimestamp(self.start));
        }
        Ok(())
    }

    /// End of the span interval, in microseconds.
    pub fn end_us(&self) -> i64 {
        self.start.saturating_add(self.duration as i64)
    }
}

/// Stable 128-bit deduplication key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DedupKey(pub u128);

impl fmt::Display for DedupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// The payload union; `kind` tags the domain on the wire.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RecordPayload {
    Metric(MetricSample),
    Log(LogEntry),
    Trace(TraceSpan),
}

impl RecordPayload {
    pub fn domain(&self) -> InstrumentationDomain {
        match self {
            RecordPayload::Metric(_) => InstrumentationDomain::Metric,
            RecordPayload::Log(_) => InstrumentationDomain::Log,
            RecordPayload::Trace(_) => InstrumentationDomain::Trace,
        }
    }

    pub fn device_id(&self) -> &str {
        match self {
            RecordPayload::Metric(m) => &m.device_id,
            RecordPayload::Log(l) => &l.device_id,
            RecordPayload::Trace(t) => &t.device_id,
        }
    }

    /// Source timestamp in milliseconds (spans report their start).
    pub fn source_timestamp_ms(&self) -> i64 {
        match self {
            RecordPayload::Metric(m) => m.source_timestamp,
            RecordPayload::Log(l) => l.source_timestamp,
            RecordPayload::Trace(t) => t.start.div_euclid(1000),
        }
    }

    fn raw_source_timestamp(&self) -> i64 {
        match self {
            RecordPayload::Metric(m) => m.source_timestamp,
            RecordPayload::Log(l) => l.source_timestamp,
            RecordPayload::Trace(t) => t.start,
        }
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        match self {
            RecordPayload::Metric(m) => m.validate(),
            RecordPayload::Log(l) => l.validate(),
            RecordPayload::Trace(t) => t.validate(),
        }
    }
}

/// The unit flowing through all six life-cycle steps: a tagged payload plus
/// the derived dedup key and wire-encoded size.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityRecord {
    payload: RecordPayload,
    dedup_key: DedupKey,
    /// Byte length of the newline-terminated wire encoding.
    encoded_size: usize,
    line: String,
}

impl ObservabilityRecord {
    pub fn new(payload: RecordPayload) -> Result<Self, RecordError> {
        payload.validate()?;
        let line =
            serde_json::to_string(&payload).map_err(|e| RecordError::Malformed(e.to_string()))?;
        let dedup_key = derive_dedup_key(&payload, &line);
        Ok(Self {
            encoded_size: line.len() + 1,
            dedup_key,
            payload,
            line,
        })
    }

    /// Parses one newline-stripped wire line back into a record.
    pub fn from_line(line: &str) -> Result<Self, RecordError> {
        let payload: RecordPayload =
            serde_json::from_str(line).map_err(|e| RecordError::Malformed(e.to_string()))?;
        Self::new(payload)
    }

    pub fn payload(&self) -> &RecordPayload {
        &self.payload
    }

    pub fn into_payload(self) -> RecordPayload {
        self.payload
    }

    pub fn domain(&self) -> InstrumentationDomain {
        self.payload.domain()
    }

    pub fn device_id(&self) -> &str {
        self.payload.device_id()
    }

    pub fn source_timestamp_ms(&self) -> i64 {
        self.payload.source_timestamp_ms()
    }

    pub fn dedup_key(&self) -> DedupKey {
        self.dedup_key
    }

    pub fn encoded_size(&self) -> usize {
        self.encoded_size
    }

    /// The wire line without its trailing newline.
    pub fn line(&self) -> &str {
        &self.line
    }

    /// Appends the newline-terminated wire encoding to `buf`.
    pub fn write_wire(&self, buf: &mut Vec<u8>) {
        buf.extend_from_slice(self.line.as_bytes());
        buf.push(b'\n');
    }
}

fn derive_dedup_key(payload: &RecordPayload, line: &str) -> DedupKey {
    let content_digest = Sha256::digest(line.as_bytes());
    let mut hasher = Sha256::new();
    hasher.update(payload.device_id().as_bytes());
    hasher.update([0x00, payload.domain().wire_tag()]);
    hasher.update(payload.raw_source_timestamp().to_be_bytes());
    hasher.update(content_digest);
    let digest = hasher.finalize();
    let mut first = [0u8; 16];
    first.copy_from_slice(&digest[..16]);
    DedupKey(u128::from_be_bytes(first))
}

/// Truncated SHA-256, used for series keys and segment checksums.
pub fn hash64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_metric() -> MetricSample {
        MetricSample {
            name: "cpu_seconds_total".into(),
            labels: BTreeMap::from([("mode".into(), "idle".into())]),
            value: 12.5,
            source_timestamp: 1_700_000_000_000,
            device_id: "dev-1".into(),
        }
    }

    #[test]
    fn identical_content_yields_identical_dedup_key() {
        let a = ObservabilityRecord::new(RecordPayload::Metric(sample_metric())).unwrap();
        let b = ObservabilityRecord::new(RecordPayload::Metric(sample_metric())).unwrap();
        assert_eq!(a.dedup_key(), b.dedup_key());
        assert_eq!(a.line(), b.line());
    }

    #[test]
    fn different_value_changes_dedup_key() {
        let mut m = sample_metric();
        m.value = 13.0;
        let a = ObservabilityRecord::new(RecordPayload::Metric(sample_metric())).unwrap();
        let b = ObservabilityRecord::new(RecordPayload::Metric(m)).unwrap();
        assert_ne!(a.dedup_key(), b.dedup_key());
    }

    #[test]
    fn encoded_size_matches_wire_bytes() {
        let rec = ObservabilityRecord::new(RecordPayload::Metric(sample_metric())).unwrap();
        let mut buf = Vec::new();
        rec.write_wire(&mut buf);
        assert_eq!(rec.encoded_size(), buf.len());
        assert!(rec.encoded_size() > 0);
    }

    #[test]
    fn record_line_round_trips() {
        let rec = ObservabilityRecord::new(RecordPayload::Metric(sample_metric())).unwrap();
        let back = ObservabilityRecord::from_line(rec.line()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn nan_metric_value_round_trips() {
        let mut m = sample_metric();
        m.value = f64::NAN;
        let rec = ObservabilityRecord::new(RecordPayload::Metric(m)).unwrap();
        let back = ObservabilityRecord::from_line(rec.line()).unwrap();
        match back.payload() {
            RecordPayload::Metric(m) => assert!(m.value.is_nan()),
            other => panic!("unexpected payload {other:?}"),
        }
        assert_eq!(back.line(), rec.line());
    }

    #[test]
    fn invalid_metric_name_rejected() {
        let mut m = sample_metric();
        m.name = "9bad".into();
        assert!(matches!(
            ObservabilityRecord::new(RecordPayload::Metric(m)),
            Err(RecordError::InvalidMetricName(_))
        ));
        assert!(valid_metric_name("node_cpu:rate"));
        assert!(!valid_metric_name(""));
        assert!(!valid_metric_name("has space"));
    }

    #[test]
    fn log_level_parses_leniently() {
        assert_eq!(LogLevel::parse_lenient("warning"), LogLevel::Warn);
        assert_eq!(LogLevel::parse_lenient("garbage"), LogLevel::Info);
        assert_eq!(LogLevel::parse_lenient("ERROR"), LogLevel::Error);
    }

    #[test]
    fn span_cannot_parent_itself() {
        let span = TraceSpan {
            trace_id: TraceId(1),
            span_id: SpanId(7),
            parent_span_id: Some(SpanId(7)),
            service: "svc".into(),
            operation: "op".into(),
            start: 0,
            duration: 10,
            attributes: BTreeMap::new(),
            device_id: "dev".into(),
        };
        assert!(matches!(span.validate(), Err(RecordError::SelfParent(_))));
    }

    #[test]
    fn trace_ids_render_as_hex() {
        let t = TraceId(0xdead_beef);
        assert_eq!(t.to_string(), format!("{:032x}", 0xdead_beefu128));
        let s: TraceId = t.to_string().parse().unwrap();
        assert_eq!(s, t);
    }
}
