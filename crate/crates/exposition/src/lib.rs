//! Text exposition format: parsing, canonical encoding, and the volume
//! reduction strategies applied before metrics leave a device.
//!
//! The format is line oriented. `# HELP <name> <text>` and
//! `# TYPE <name> <kind>` lines annotate a metric family; every other `#`
//! comment is ignored; remaining lines are samples:
//!
//! ```text
//! name{key="value",other="v2"} 12.5 1700000000000
//! ```
//!
//! Canonical form sorts labels by key, separates tokens with single spaces,
//! and terminates every line with `\n`, so `parse` followed by `encode`
//! with a keep-all policy is byte-identical on canonical input.

mod parse;
mod reduce;

pub use parse::{parse_exposition, ParseError};
pub use reduce::{encode_exposition, estimate_reduction, ReductionPolicy, ReductionReport};

use serde::{Deserialize, Serialize};

/// Family kind as declared by a `# TYPE` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Counter,
    Gauge,
    Histogram,
    Summary,
    Untyped,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Counter => "counter",
            FamilyKind::Gauge => "gauge",
            FamilyKind::Histogram => "histogram",
            FamilyKind::Summary => "summary",
            FamilyKind::Untyped => "untyped",
        }
    }

    fn parse(s: &str) -> FamilyKind {
        match s {
            "counter" => FamilyKind::Counter,
            "gauge" => FamilyKind::Gauge,
            "histogram" => FamilyKind::Histogram,
            "summary" => FamilyKind::Summary,
            _ => FamilyKind::Untyped,
        }
    }
}

/// One sample line: metric name, sorted labels, value, optional timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Full sample name, which may carry a `_bucket`/`_sum`/`_count` suffix
    /// on top of the family name.
    pub name: String,
    pub labels: Vec<(String, String)>,
    pub value: f64,
    pub timestamp: Option<i64>,
}

/// A named family: optional help text, declared kind, and its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFamily {
    pub name: String,
    pub help: Option<String>,
    pub kind: FamilyKind,
    /// True when the kind came from an explicit `# TYPE` line; implicit
    /// untyped families do not re-emit one.
    pub kind_declared: bool,
    pub samples: Vec<Sample>,
}

impl MetricFamily {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            help: None,
            kind: FamilyKind::Untyped,
            kind_declared: false,
            samples: Vec::new(),
        }
    }

    /// Whether `sample_name` belongs to this family, accounting for the
    /// histogram/summary suffix conventions.
    pub fn owns_sample(&self, sample_name: &str) -> bool {
        if sample_name == self.name {
            return true;
        }
        let suffixes: &[&str] = match self.kind {
            FamilyKind::Histogram => &["_bucket", "_sum", "_count"],
            FamilyKind::Summary => &["_sum", "_count"],
            _ => return false,
        };
        suffixes
            .iter()
            .any(|s| sample_name.strip_suffix(s) == Some(self.name.as_str()))
    }
}

/// An ordered set of families plus the byte size of the canonical encoding.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpositionDocument {
    pub families: Vec<MetricFamily>,
    pub raw_size_bytes: usize,
}

impl ExpositionDocument {
    pub fn total_samples(&self) -> usize {
        self.families.iter().map(|f| f.samples.len()).sum()
    }

    /// Byte share of `# HELP` lines in the canonical encoding.
    pub fn help_share(&self) -> f64 {
        if self.raw_size_bytes == 0 {
            return 0.0;
        }
        let help_bytes: usize = self
            .families
            .iter()
            .filter_map(|f| f.help.as_ref().map(|h| "# HELP ".len() + f.name.len() + 1 + h.len() + 1))
            .sum();
        help_bytes as f64 / self.raw_size_bytes as f64
    }
}

/// Canonical rendering of one float value.
pub(crate) fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == f64::INFINITY {
        "+Inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-Inf".to_string()
    } else {
        format!("{v}")
    }
}

pub(crate) fn parse_value(token: &str) -> Option<f64> {
    match token {
        "NaN" => Some(f64::NAN),
        "+Inf" | "Inf" => Some(f64::INFINITY),
        "-Inf" => Some(f64::NEG_INFINITY),
        _ => token.parse::<f64>().ok().filter(|v| {
            // Reject tokens like "1x" that Rust would not parse anyway, but
            // also empty strings.
            !token.is_empty() && (v.is_finite() || v.is_nan())
        }),
    }
}

pub(crate) fn escape_label_value(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
}
