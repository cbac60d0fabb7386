//! Shared model and plumbing for the observability data life cycle.
//!
//! This crate holds the pure value types that flow through every stage of
//! the pipeline (metric samples, log entries, trace spans), the weighted
//! outcome/overhead model used for adaptive prioritization, and the byte
//! formats shared between tiers: the edge-to-fog wire frame and the
//! fog-to-cloud archive segment.

pub mod clock;
pub mod model;
pub mod record;
pub mod segment;
pub mod wire;

pub use clock::{Clock, SystemClock, VirtualClock};
pub use model::{
    batch_priority, correlation_score, outcome, overhead_score, project_volume, validate_weights,
    CorrelationScore, CorrelationWindow, ModelError, OutcomeReport, OverheadScore, OverheadVector,
    WeightProfile, OVERHEAD_FLOOR, WEIGHT_SUM_TOLERANCE,
};
pub use record::{
    DedupKey, InstrumentationDomain, LogEntry, LogLevel, MetricSample, ObservabilityRecord,
    RecordError, RecordPayload, SpanId, TraceId, TraceSpan,
};
pub use segment::{SegmentError, SegmentManifest, SEGMENT_CODEC};
pub use wire::{Frame, FrameAck, FrameData, WireError, MAX_FRAME_PAYLOAD};
