//! Canonical encoding under a reduction policy, and the projected volume
//! savings of applying one.

use serde::{Deserialize, Serialize};

use crate::{escape_label_value, format_value, ExpositionDocument};

/// What to drop before metrics are exposed or transmitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionPolicy {
    /// Drop `# HELP` lines.
    pub strip_help: bool,
    /// Drop `# TYPE` lines.
    pub strip_type: bool,
    /// Family name prefixes to keep. `None` keeps everything; an empty list
    /// keeps nothing.
    pub family_allowlist: Option<Vec<String>>,
    /// Factor by which the sampling interval is stretched; 2.0 means data is
    /// produced half as often. Must be >= 1.
    pub interval_scale: f64,
}

impl ReductionPolicy {
    pub fn keep_all() -> Self {
        Self {
            strip_help: false,
            strip_type: false,
            family_allowlist: None,
            interval_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.interval_scale.is_finite() || self.interval_scale < 1.0 {
            return Err(format!(
                "interval_scale must be >= 1, got {}",
                self.interval_scale
            ));
        }
        Ok(())
    }

    pub fn keeps_family(&self, name: &str) -> bool {
        match &self.family_allowlist {
            None => true,
            Some(prefixes) => prefixes.iter().any(|p| name.starts_with(p.as_str())),
        }
    }
}

impl Default for ReductionPolicy {
    fn default() -> Self {
        Self::keep_all()
    }
}

/// Projected effect of a policy on one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub bytes_before: u64,
    /// Bytes per emission divided by the interval scale; fractional because
    /// interval stretching spreads a whole document over more time.
    pub bytes_after: f64,
    /// `1 - bytes_after / bytes_before`; zero for the keep-all policy.
    pub ratio: f64,
    pub effective_interval_s: f64,
}

/// Renders the document in canonical form: families in order, labels sorted,
/// one sample per line, `\n` terminators, no trailing whitespace.
pub fn encode_exposition(doc: &ExpositionDocument, policy: &ReductionPolicy) -> Vec<u8> {
    let mut out = String::new();
    for family in &doc.families {
        if !policy.keeps_family(&family.name) {
            continue;
        }
        if !policy.strip_help {
            if let Some(help) = &family.help {
                out.push_str("# HELP ");
                out.push_str(&family.name);
                out.push(' ');
                out.push_str(help);
                out.push('\n');
            }
        }
        if !policy.strip_type && family.kind_declared {
            out.push_str("# TYPE ");
            out.push_str(&family.name);
            out.push(' ');
            out.push_str(family.kind.as_str());
            out.push('\n');
        }
        for sample in &family.samples {
            out.push_str(&sample.name);
            if !sample.labels.is_empty() {
                out.push('{');
                let mut sorted: Vec<_> = sample.labels.iter().collect();
                sorted.sort_by(|a, b| a.0.cmp(&b.0));
                for (i, (key, value)) in sorted.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(key);
                    out.push_str("=\"");
                    escape_label_value(value, &mut out);
                    out.push('"');
                }
                out.push('}');
            }
            out.push(' ');
            out.push_str(&format_value(sample.value));
            if let Some(ts) = sample.timestamp {
                out.push(' ');
                out.push_str(&ts.to_string());
            }
            out.push('\n');
        }
    }
    out.into_bytes()
}

/// Computes the byte effect of `policy` on `doc`, treating interval
/// stretching as a divisor on transmitted volume per unit time.
pub fn estimate_reduction(
    doc: &ExpositionDocument,
    policy: &ReductionPolicy,
    base_interval_s: f64,
) -> ReductionReport {
    debug_assert!(base_interval_s > 0.0);
    let bytes_before = doc.raw_size_bytes as u64;
    let encoded = encode_exposition(doc, policy).len() as f64;
    let bytes_after = encoded / policy.interval_scale;
    let ratio = if bytes_before == 0 {
        0.0
    } else {
        1.0 - bytes_after / bytes_before as f64
    };
    ReductionReport {
        bytes_before,
        bytes_after,
        ratio,
        effective_interval_s: base_interval_s * policy.interval_scale,
    }
}
