//! The weighted outcome/overhead model.
//!
//! Observability benefit per resource cost is scored as a sum of per-domain
//! weight-over-overhead terms plus one cross-analysis term:
//!
//! ```text
//! outcome = w_metric/over_metric + w_log/over_log + w_trace/over_trace
//!         + x_score/over_x
//! ```
//!
//! Overhead scores are the maximum of CPU/memory/network consumption
//! percentages, clamped to a small floor so idle components never divide by
//! zero. The cross-analysis score is the fraction of additional domains
//! (beyond the first) that hold data in a time window, so a single occupied
//! domain scores 0 and all three score 1.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::InstrumentationDomain;

/// Absolute tolerance on the weight-sum constraint.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Floor applied to measured overhead so scores stay in (0, 100].
pub const OVERHEAD_FLOOR: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("weight {value} for {domain} outside [0, 1]")]
    WeightRange {
        domain: InstrumentationDomain,
        value: f64,
    },
    #[error("overhead component {value} outside [0, 100]")]
    OverheadRange { value: f64 },
    #[error("sampling interval must be positive, got {0}")]
    InvalidInterval(f64),
    #[error("correlation window start {start} must precede end {end}")]
    EmptyWindow { start: i64, end: i64 },
}

/// Per-domain importance weights summing to 1. Constructed only through
/// [`validate_weights`], so an invalid profile cannot exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct WeightProfile {
    name: String,
    w_metric: f64,
    w_log: f64,
    w_trace: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawWeights {
    name: String,
    w_metric: f64,
    w_log: f64,
    w_trace: f64,
}

impl TryFrom<RawWeights> for WeightProfile {
    type Error = ModelError;
    fn try_from(raw: RawWeights) -> Result<Self, Self::Error> {
        let mut profile = validate_weights(raw.w_metric, raw.w_log, raw.w_trace)?;
        profile.name = raw.name;
        Ok(profile)
    }
}

impl From<WeightProfile> for RawWeights {
    fn from(p: WeightProfile) -> Self {
        RawWeights {
            name: p.name,
            w_metric: p.w_metric,
            w_log: p.w_log,
            w_trace: p.w_trace,
        }
    }
}

impl WeightProfile {
    pub fn named(
        name: impl Into<String>,
        w_metric: f64,
        w_log: f64,
        w_trace: f64,
    ) -> Result<Self, ModelError> {
        let mut profile = validate_weights(w_metric, w_log, w_trace)?;
        profile.name = name.into();
        Ok(profile)
    }

    /// Equal thirds.
    pub fn balanced() -> Self {
        Self::named("balanced", 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).expect("thirds sum to 1")
    }

    /// Parses either a preset name or an explicit `metric,log,trace` triple.
    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        match spec {
            "balanced" => return Ok(Self::balanced()),
            "metric-focus" => return Self::named(spec, 0.6, 0.25, 0.15),
            "log-focus" => return Self::named(spec, 0.25, 0.6, 0.15),
            "trace-focus" => return Self::named(spec, 0.15, 0.25, 0.6),
            "metrics-only" => return Self::named(spec, 1.0, 0.0, 0.0),
            _ => {}
        }
        let parts: Vec<f64> = spec
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| ModelError::WeightSum { sum: f64::NAN })?;
        if parts.len() != 3 {
            return Err(ModelError::WeightSum { sum: f64::NAN });
        }
        Self::named(spec, parts[0], parts[1], parts[2])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weight(&self, domain: InstrumentationDomain) -> f64 {
        match domain {
            InstrumentationDomain::Metric => self.w_metric,
            InstrumentationDomain::Log => self.w_log,
            InstrumentationDomain::Trace => self.w_trace,
        }
    }

    pub fn w_metric(&self) -> f64 {
        self.w_metric
    }

    pub fn w_log(&self) -> f64 {
        self.w_log
    }

    pub fn w_trace(&self) -> f64 {
        self.w_trace
    }

    /// A zero weight disables collection and transmission for the domain.
    pub fn domain_enabled(&self, domain: InstrumentationDomain) -> bool {
        self.weight(domain) > 0.0
    }
}

impl fmt::Display for WeightProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (metric {}, log {}, trace {})",
            self.name, self.w_metric, self.w_log, self.w_trace
        )
    }
}

/// Checks range and the sum constraint, producing a profile on success.
pub fn validate_weights(w_metric: f64, w_log: f64, w_trace: f64) -> Result<WeightProfile, ModelError> {
    for (domain, value) in [
        (InstrumentationDomain::Metric, w_metric),
        (InstrumentationDomain::Log, w_log),
        (InstrumentationDomain::Trace, w_trace),
    ] {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(ModelError::WeightRange { domain, value });
        }
    }
    let sum = w_metric + w_log + w_trace;
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(ModelError::WeightSum { sum });
    }
    Ok(WeightProfile {
        name: String::new(),
        w_metric,
        w_log,
        w_trace,
    })
}

/// Percentage of a component's CPU, memory, and network budget consumed
/// over a measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadVector {
    pub cpu_pct: f64,
    pub mem_pct: f64,
    pub net_pct: f64,
}

impl OverheadVector {
    pub fn new(cpu_pct: f64, mem_pct: f64, net_pct: f64) -> Result<Self, ModelError> {
        for value in [cpu_pct, mem_pct, net_pct] {
            if !value.is_finite() || !(0.0..=100.0).contains(&value) {
                return Err(ModelError::OverheadRange { value });
            }
        }
        Ok(Self {
            cpu_pct,
            mem_pct,
            net_pct,
        })
    }
}

/// The max-of-resources overhead score; always in (0, 100].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct OverheadScore {
    value: f64,
}

impl OverheadScore {
    /// Clamps to the floor so idle components stay representable.
    pub fn from_value(value: f64) -> Result<Self, ModelError> {
        if !value.is_finite() || value > 100.0 || value < 0.0 {
            return Err(ModelError::OverheadRange { value });
        }
        Ok(Self {
            value: value.max(OVERHEAD_FLOOR),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Maximum resource consumption across CPU, memory, and network.
pub fn overhead_score(v: OverheadVector) -> OverheadScore {
    let max = v.cpu_pct.max(v.mem_pct).max(v.net_pct);
    OverheadScore {
        value: max.max(OVERHEAD_FLOOR),
    }
}

/// Half-open time window used to correlate domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationWindow {
    pub start_ms: i64,
    pub end_ms: i64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub device_filter: Option<BTreeSet<String>>,
}

impl CorrelationWindow {
    pub fn new(start_ms: i64, end_ms: i64) -> Result<Self, ModelError> {
        if start_ms >= end_ms {
            return Err(ModelError::EmptyWindow {
                start: start_ms,
                end: end_ms,
            });
        }
        Ok(Self {
            start_ms,
            end_ms,
            device_filter: None,
        })
    }

    pub fn with_devices(mut self, devices: impl IntoIterator<Item = String>) -> Self {
        self.device_filter = Some(devices.into_iter().collect());
        self
    }

    pub fn matches_device(&self, device_id: &str) -> bool {
        match &self.device_filter {
            Some(set) => set.contains(device_id),
            None => true,
        }
    }
}

/// Cross-analysis synergy score over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationScore {
    pub occupied_domains: u8,
    pub score: f64,
}

/// Scores domain co-occupancy: 0 when at most one domain holds data,
/// `(occupied - 1) / (|domains| - 1)` otherwise.
pub fn correlation_score(counts: &[(InstrumentationDomain, u64)]) -> CorrelationScore {
    let mut occupied = [false; InstrumentationDomain::COUNT];
    for (domain, count) in counts {
        if *count > 0 {
            occupied[*domain as usize] = true;
        }
    }
    let occupied_domains = occupied.iter().filter(|o| **o).count() as u8;
    let score = if occupied_domains <= 1 {
        0.0
    } else {
        (occupied_domains as f64 - 1.0) / (InstrumentationDomain::COUNT as f64 - 1.0)
    };
    CorrelationScore {
        occupied_domains,
        score,
    }
}

/// Full evaluation of the outcome formula for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub weights: WeightProfile,
    pub over_metric: OverheadScore,
    pub over_log: OverheadScore,
    pub over_trace: OverheadScore,
    pub over_x: OverheadScore,
    pub x_score: CorrelationScore,
    pub collection_term: f64,
    pub analysis_term: f64,
    pub outcome: f64,
}

/// Evaluates the outcome formula. The score types guarantee non-zero
/// denominators, so this cannot fail.
pub fn outcome(
    weights: &WeightProfile,
    over_metric: OverheadScore,
    over_log: OverheadScore,
    over_trace: OverheadScore,
    x_score: CorrelationScore,
    over_x: OverheadScore,
) -> OutcomeReport {
    let collection_term = weights.w_metric / over_metric.value()
        + weights.w_log / over_log.value()
        + weights.w_trace / over_trace.value();
    let analysis_term = x_score.score / over_x.value();
    OutcomeReport {
        weights: weights.clone(),
        over_metric,
        over_log,
        over_trace,
        over_x,
        x_score,
        collection_term,
        analysis_term,
        outcome: collection_term + analysis_term,
    }
}

/// Projects transmitted volume for a periodic payload:
/// `payload_bytes * floor(duration_hours * 3600 / interval_seconds) * devices`.
pub fn project_volume(
    payload_bytes: u64,
    interval_seconds: f64,
    duration_hours: f64,
    device_count: u64,
) -> Result<u64, ModelError> {
    if !interval_seconds.is_finite() || interval_seconds <= 0.0 {
        return Err(ModelError::InvalidInterval(interval_seconds));
    }
    let emissions = (duration_hours.max(0.0) * 3600.0 / interval_seconds).floor() as u64;
    Ok(payload_bytes
        .saturating_mul(emissions)
        .saturating_mul(device_count))
}

/// Transmission priority of one domain: weight over overhead, zero when the
/// domain's weight is zero.
pub fn batch_priority(
    domain: InstrumentationDomain,
    weights: &WeightProfile,
    over: OverheadScore,
) -> f64 {
    let w = weights.weight(domain);
    if w == 0.0 {
        0.0
    } else {
        w / over.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(v: f64) -> OverheadScore {
        OverheadScore::from_value(v).unwrap()
    }

    #[test]
    fn symmetric_weights_are_valid() {
        let p = validate_weights(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        assert!((p.w_metric() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_disable_domains() {
        let p = validate_weights(1.0, 0.0, 0.0).unwrap();
        assert!(p.domain_enabled(InstrumentationDomain::Metric));
        assert!(!p.domain_enabled(InstrumentationDomain::Log));
        assert!(!p.domain_enabled(InstrumentationDomain::Trace));
    }

    #[test]
    fn bad_sum_rejected() {
        assert!(matches!(
            validate_weights(0.5, 0.5, 0.5),
            Err(ModelError::WeightSum { .. })
        ));
    }

    #[test]
    fn out_of_range_weight_rejected() {
        assert!(matches!(
            validate_weights(1.5, -0.5, 0.0),
            Err(ModelError::WeightRange { .. })
        ));
    }

    #[test]
    fn overhead_score_takes_max() {
        let v = OverheadVector::new(12.0, 5.0, 3.0).unwrap();
        assert_eq!(overhead_score(v).value(), 12.0);
        let equal = OverheadVector::new(25.0, 25.0, 25.0).unwrap();
        assert_eq!(overhead_score(equal).value(), 25.0);
    }

    #[test]
    fn idle_overhead_clamps_to_floor() {
        let v = OverheadVector::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(overhead_score(v).value(), OVERHEAD_FLOOR);
    }

    #[test]
    fn correlation_needs_more_than_one_domain() {
        use InstrumentationDomain::*;
        let single = correlation_score(&[(Metric, 10), (Log, 0), (Trace, 0)]);
        assert_eq!(single.score, 0.0);
        assert_eq!(single.occupied_domains, 1);

        let two = correlation_score(&[(Metric, 10), (Log, 3), (Trace, 0)]);
        assert_eq!(two.score, 0.5);

        let all = correlation_score(&[(Metric, 1), (Log, 1), (Trace, 1)]);
        assert_eq!(all.score, 1.0);
    }

    #[test]
    fn outcome_symmetric_case() {
        let w = WeightProfile::balanced();
        let over = score(10.0);
        let x = correlation_score(&[]);
        let report = outcome(&w, over, over, over, x, over);
        assert!((report.outcome - 0.1).abs() < 1e-12);
    }

    #[test]
    fn outcome_single_domain_case() {
        let w = validate_weights(1.0, 0.0, 0.0).unwrap();
        let report = outcome(
            &w,
            score(10.0),
            score(50.0),
            score(50.0),
            correlation_score(&[]),
            score(1.0),
        );
        assert!((report.outcome - 0.1).abs() < 1e-12);
    }

    // Hand-evaluated: 0.5/10 + 0.3/5 + 0.2/20 + 1/25 = 0.05 + 0.06 + 0.01 + 0.04.
    #[test]
    fn outcome_mixed_case() {
        let w = validate_weights(0.5, 0.3, 0.2).unwrap();
        let x = CorrelationScore {
            occupied_domains: 3,
            score: 1.0,
        };
        let report = outcome(&w, score(10.0), score(5.0), score(20.0), x, score(25.0));
        assert!((report.outcome - 0.16).abs() < 1e-12);
        assert!((report.collection_term - 0.12).abs() < 1e-12);
        assert!((report.analysis_term - 0.04).abs() < 1e-12);
    }

    #[test]
    fn outcome_decreases_when_overhead_increases() {
        let w = WeightProfile::balanced();
        let x = correlation_score(&[]);
        let low = outcome(&w, score(10.0), score(10.0), score(10.0), x, score(1.0));
        let high = outcome(&w, score(20.0), score(10.0), score(10.0), x, score(1.0));
        assert!(high.outcome < low.outcome);
    }

    #[test]
    fn projected_volumes_match_hourly_rates() {
        // 65 KiB every 5 s for an hour.
        assert_eq!(project_volume(65 * 1024, 5.0, 1.0, 1).unwrap(), 47_923_200);
        // 1 KiB every second for an hour.
        assert_eq!(project_volume(1024, 1.0, 1.0, 1).unwrap(), 3_686_400);
        // 4 KiB every 15 s for an hour.
        assert_eq!(project_volume(4 * 1024, 15.0, 1.0, 1).unwrap(), 983_040);
    }

    #[test]
    fn projection_rejects_bad_interval() {
        assert!(matches!(
            project_volume(1024, 0.0, 1.0, 1),
            Err(ModelError::InvalidInterval(_))
        ));
    }

    #[test]
    fn priorities_divide_weight_by_overhead() {
        let w = validate_weights(0.5, 0.3, 0.2).unwrap();
        let p_metric = batch_priority(InstrumentationDomain::Metric, &w, score(10.0));
        let p_log = batch_priority(InstrumentationDomain::Log, &w, score(5.0));
        assert!((p_metric - 0.05).abs() < 1e-12);
        assert!((p_log - 0.06).abs() < 1e-12);

        let zero = validate_weights(0.5, 0.5, 0.0).unwrap();
        assert_eq!(
            batch_priority(InstrumentationDomain::Trace, &zero, score(42.0)),
            0.0
        );
    }

    #[test]
    fn window_requires_order() {
        assert!(CorrelationWindow::new(10, 10).is_err());
        let w = CorrelationWindow::new(0, 10)
            .unwrap()
            .with_devices(["a".to_string()]);
        assert!(w.matches_device("a"));
        assert!(!w.matches_device("b"));
    }

    #[test]
    fn weight_profile_parse_forms() {
        assert_eq!(WeightProfile::parse("balanced").unwrap().name(), "balanced");
        let custom = WeightProfile::parse("0.5, 0.3, 0.2").unwrap();
        assert!((custom.w_log() - 0.3).abs() < 1e-12);
        assert!(WeightProfile::parse("0.5,0.5").is_err());
        assert!(WeightProfile::parse("0.9,0.9,0.9").is_err());
    }

    #[test]
    fn serde_rejects_tampered_weights() {
        let json = r#"{"name":"x","w_metric":0.9,"w_log":0.9,"w_trace":0.9}"#;
        assert!(serde_json::from_str::<WeightProfile>(json).is_err());
        let ok = r#"{"name":"x","w_metric":0.5,"w_log":0.3,"w_trace":0.2}"#;
        let p: WeightProfile = serde_json::from_str(ok).unwrap();
        assert_eq!(p.name(), "x");
    }
}
