//! Archive segment container for fog-to-cloud tiering.
//!
//! Layout:
//!
//! ```text
//! magic "ODLCSEG1" (8)
//! manifest length, u32 big-endian
//! manifest, single-line JSON
//! compressed body: newline-terminated record lines
//! footer: record count u64 | checksum u64 | magic "ODLCSEGF" (8)
//! ```
//!
//! The checksum is a truncated SHA-256 over the *decompressed* body, so a
//! segment can be verified end to end after transport. The manifest repeats
//! count and checksum and names the codec, making segments self-describing.

use std::collections::BTreeSet;
use std::io::{self, Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{hash64, InstrumentationDomain, ObservabilityRecord, RecordError};

const SEGMENT_MAGIC: &[u8; 8] = b"ODLCSEG1";
const FOOTER_MAGIC: &[u8; 8] = b"ODLCSEGF";

/// Codec recorded in every manifest.
pub const SEGMENT_CODEC: &str = "gzip";

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a segment file (bad magic)")]
    BadMagic,
    #[error("malformed manifest: {0}")]
    BadManifest(String),
    #[error("unsupported codec {0:?}")]
    UnsupportedCodec(String),
    #[error("checksum mismatch: manifest {expected:#018x}, body {actual:#018x}")]
    ChecksumMismatch { expected: u64, actual: u64 },
    #[error("record count mismatch: manifest {expected}, body {actual}")]
    CountMismatch { expected: u64, actual: u64 },
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Self-describing header for one archive segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentManifest {
    pub domain: InstrumentationDomain,
    pub devices: BTreeSet<String>,
    /// Source timestamps (ms) covered by the body, inclusive.
    pub min_ts: i64,
    pub max_ts: i64,
    pub record_count: u64,
    /// Truncated SHA-256 over the decompressed body.
    pub checksum: u64,
    pub codec: String,
}

impl SegmentManifest {
    /// Conventional file name for this segment.
    pub fn file_name(&self) -> String {
        format!("{}-{}-{}.seg", self.domain, self.min_ts, self.max_ts)
    }

    /// Fast intersection test used to prune segments before decompression.
    pub fn overlaps(&self, start_ms: i64, end_ms: i64) -> bool {
        self.min_ts < end_ms && self.max_ts >= start_ms
    }
}

fn body_bytes(records: &[ObservabilityRecord]) -> Vec<u8> {
    let mut body = Vec::new();
    for record in records {
        record.write_wire(&mut body);
    }
    body
}

/// Builds the manifest for a record batch without writing anything.
pub fn manifest_for(
    domain: InstrumentationDomain,
    records: &[ObservabilityRecord],
) -> SegmentManifest {
    let mut devices = BTreeSet::new();
    let mut min_ts = i64::MAX;
    let mut max_ts = i64::MIN;
    for record in records {
        devices.insert(record.device_id().to_string());
        min_ts = min_ts.min(record.source_timestamp_ms());
        max_ts = max_ts.max(record.source_timestamp_ms());
    }
    if records.is_empty() {
        min_ts = 0;
        max_ts = 0;
    }
    SegmentManifest {
        domain,
        devices,
        min_ts,
        max_ts,
        record_count: records.len() as u64,
        checksum: hash64(&body_bytes(records)),
        codec: SEGMENT_CODEC.to_string(),
    }
}

/// Writes a complete segment and returns its manifest.
pub fn write_segment(
    writer: &mut impl Write,
    domain: InstrumentationDomain,
    records: &[ObservabilityRecord],
) -> Result<SegmentManifest, SegmentError> {
    let manifest = manifest_for(domain, records);
    let manifest_json = serde_json::to_string(&manifest)
        .map_err(|e| SegmentError::BadManifest(e.to_string()))?;

    writer.write_all(SEGMENT_MAGIC)?;
    writer.write_all(&(manifest_json.len() as u32).to_be_bytes())?;
    writer.write_all(manifest_json.as_bytes())?;

    let mut encoder = GzEncoder::new(Vec::new(), Compression::default());
    encoder.write_all(&body_bytes(records))?;
    let compressed = encoder.finish()?;
    writer.write_all(&compressed)?;

    writer.write_all(&manifest.record_count.to_be_bytes())?;
    writer.write_all(&manifest.checksum.to_be_bytes())?;
    writer.write_all(FOOTER_MAGIC)?;
    Ok(manifest)
}

/// Reads only the manifest, without touching the compressed body.
pub fn read_manifest(reader: &mut impl Read) -> Result<SegmentManifest, SegmentError> {
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != SEGMENT_MAGIC {
        return Err(SegmentError::BadMagic);
    }
    let mut len_buf = [0u8; 4];
    reader.read_exact(&mut len_buf)?;
    let len = u32::from_be_bytes(len_buf) as usize;
    let mut manifest_buf = vec![0u8; len];
    reader.read_exact(&mut manifest_buf)?;
    serde_json::from_slice(&manifest_buf).map_err(|e| SegmentError::BadManifest(e.to_string()))
}

/// Reads and fully verifies a segment: checksum and count must match both
/// the manifest and the footer.
pub fn read_segment(
    reader: &mut impl Read,
) -> Result<(SegmentManifest, Vec<ObservabilityRecord>), SegmentError> {
    let manifest = read_manifest(reader)?;
    if manifest.codec != SEGMENT_CODEC {
        return Err(SegmentError::UnsupportedCodec(manifest.codec));
    }

    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    const FOOTER_LEN: usize = 8 + 8 + 8;
    if rest.len() < FOOTER_LEN || &rest[rest.len() - 8..] != FOOTER_MAGIC {
        return Err(SegmentError::BadMagic);
    }
    let footer_start = rest.len() - FOOTER_LEN;
    let footer_count = u64::from_be_bytes(rest[footer_start..footer_start + 8].try_into().unwrap());
    let footer_checksum =
        u64::from_be_bytes(rest[footer_start + 8..footer_start + 16].try_into().unwrap());

    let mut body = Vec::new();
    GzDecoder::new(&rest[..footer_start]).read_to_end(&mut body)?;

    let actual_checksum = hash64(&body);
    if actual_checksum != manifest.checksum || footer_checksum != manifest.checksum {
        return Err(SegmentError::ChecksumMismatch {
            expected: manifest.checksum,
            actual: actual_checksum,
        });
    }

    let text = String::from_utf8(body)
        .map_err(|_| SegmentError::BadManifest("body is not UTF-8".into()))?;
    let mut records = Vec::with_capacity(manifest.record_count as usize);
    for line in text.lines() {
        records.push(ObservabilityRecord::from_line(line)?);
    }
    let actual = records.len() as u64;
    if actual != manifest.record_count || footer_count != manifest.record_count {
        return Err(SegmentError::CountMismatch {
            expected: manifest.record_count,
            actual,
        });
    }
    Ok((manifest, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{LogEntry, LogLevel, RecordPayload};

    fn records(n: usize) -> Vec<ObservabilityRecord> {
        (0..n)
            .map(|i| {
                ObservabilityRecord::new(RecordPayload::Log(LogEntry {
                    source_timestamp: 1_000 + i as i64,
                    device_id: format!("dev-{}", i % 3),
                    source_file: "app.log".into(),
                    level: LogLevel::Info,
                    message: format!("event number {i}"),
                    fields: None,
                }))
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn segment_round_trips_byte_exact() {
        let originals = records(50);
        let mut buf = Vec::new();
        let manifest = write_segment(&mut buf, InstrumentationDomain::Log, &originals).unwrap();
        assert_eq!(manifest.record_count, 50);
        assert_eq!(manifest.min_ts, 1_000);
        assert_eq!(manifest.max_ts, 1_049);
        assert_eq!(manifest.devices.len(), 3);

        let (read_manifest, read_records) = read_segment(&mut buf.as_slice()).unwrap();
        assert_eq!(read_manifest, manifest);
        let original_lines: Vec<&str> = originals.iter().map(|r| r.line()).collect();
        let read_lines: Vec<&str> = read_records.iter().map(|r| r.line()).collect();
        assert_eq!(read_lines, original_lines);
    }

    #[test]
    fn corrupted_body_fails_checksum() {
        let mut buf = Vec::new();
        write_segment(&mut buf, InstrumentationDomain::Log, &records(20)).unwrap();
        // Flip a bit inside the compressed body (past magic + manifest).
        let mid = buf.len() / 2;
        buf[mid] ^= 0x40;
        let err = read_segment(&mut buf.as_slice()).unwrap_err();
        assert!(
            matches!(
                err,
                SegmentError::ChecksumMismatch { .. } | SegmentError::Io(_)
            ),
            "unexpected error {err:?}"
        );
    }

    #[test]
    fn manifest_readable_without_body() {
        let mut buf = Vec::new();
        let manifest = write_segment(&mut buf, InstrumentationDomain::Log, &records(5)).unwrap();
        let head = read_manifest(&mut buf.as_slice()).unwrap();
        assert_eq!(head, manifest);
        assert_eq!(head.file_name(), format!("log-{}-{}.seg", 1_000, 1_004));
    }

    #[test]
    fn overlap_prunes_disjoint_ranges() {
        let manifest = manifest_for(InstrumentationDomain::Log, &records(10));
        assert!(manifest.overlaps(1_005, 1_006));
        assert!(manifest.overlaps(0, 1_001));
        assert!(!manifest.overlaps(1_010, 2_000));
        assert!(!manifest.overlaps(0, 1_000));
    }

    #[test]
    fn empty_segment_is_valid() {
        let mut buf = Vec::new();
        let manifest = write_segment(&mut buf, InstrumentationDomain::Trace, &[]).unwrap();
        assert_eq!(manifest.record_count, 0);
        let (_, read) = read_segment(&mut buf.as_slice()).unwrap();
        assert!(read.is_empty());
    }
}
