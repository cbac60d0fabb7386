//! Edge-to-fog wire protocol.
//!
//! Each frame on the stream is a 4-byte big-endian payload length followed
//! by the payload:
//!
//! ```text
//! offset  size  field
//! 0       1     version (0x01)
//! 1       1     frame kind (0x01 data, 0x02 ack)
//! 2       16    device id, UTF-8, zero-padded
//! 18      1     domain tag (0x01 metric, 0x02 log, 0x03 trace)
//! 19      8     batch sequence, big-endian
//! 27      4     record count, big-endian
//! 31      ...   data frames only: `count` newline-terminated record lines
//! ```
//!
//! Ack frames carry no records; their count field is the number of records
//! accepted for the echoed batch.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::record::{InstrumentationDomain, ObservabilityRecord, RecordError};

pub const WIRE_VERSION: u8 = 0x01;
pub const FRAME_KIND_DATA: u8 = 0x01;
pub const FRAME_KIND_ACK: u8 = 0x02;
pub const DEVICE_ID_BYTES: usize = 16;
const HEADER_BYTES: usize = 1 + 1 + DEVICE_ID_BYTES + 1 + 8 + 4;

/// Upper bound on a frame payload; anything larger is rejected before
/// allocation.
pub const MAX_FRAME_PAYLOAD: u32 = 8 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("frame payload of {0} bytes exceeds limit")]
    FrameTooLarge(u32),
    #[error("device id longer than {DEVICE_ID_BYTES} bytes: {0:?}")]
    DeviceIdTooLong(String),
    #[error("unsupported protocol version {0:#04x}")]
    BadVersion(u8),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// A batch of records in flight from a device.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameData {
    pub device_id: String,
    pub domain: InstrumentationDomain,
    pub batch_seq: u64,
    pub records: Vec<ObservabilityRecord>,
}

/// Receipt confirmation for one batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameAck {
    pub device_id: String,
    pub domain: InstrumentationDomain,
    pub batch_seq: u64,
    pub accepted: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Data(FrameData),
    Ack(FrameAck),
}

fn encode_device_id(device_id: &str) -> Result<[u8; DEVICE_ID_BYTES], WireError> {
    let bytes = device_id.as_bytes();
    if bytes.len() > DEVICE_ID_BYTES {
        return Err(WireError::DeviceIdTooLong(device_id.to_string()));
    }
    let mut out = [0u8; DEVICE_ID_BYTES];
    out[..bytes.len()].copy_from_slice(bytes);
    Ok(out)
}

fn decode_device_id(bytes: &[u8]) -> Result<String, WireError> {
    let end = bytes.iter().position(|b| *b == 0).unwrap_or(bytes.len());
    String::from_utf8(bytes[..end].to_vec())
        .map_err(|_| WireError::Malformed("device id is not UTF-8".into()))
}

fn encode_header(
    kind: u8,
    device_id: &str,
    domain: InstrumentationDomain,
    batch_seq: u64,
    count: u32,
    payload: &mut Vec<u8>,
) -> Result<(), WireError> {
    payload.push(WIRE_VERSION);
    payload.push(kind);
    payload.extend_from_slice(&encode_device_id(device_id)?);
    payload.push(domain.wire_tag());
    payload.extend_from_slice(&batch_seq.to_be_bytes());
    payload.extend_from_slice(&count.to_be_bytes());
    Ok(())
}

impl FrameData {
    pub fn new(
        device_id: impl Into<String>,
        domain: InstrumentationDomain,
        batch_seq: u64,
        records: Vec<ObservabilityRecord>,
    ) -> Self {
        Self {
            device_id: device_id.into(),
            domain,
            batch_seq,
            records,
        }
    }

    /// Total wire size of this frame, length prefix included.
    pub fn wire_size(&self) -> usize {
        4 + HEADER_BYTES
            + self
                .records
                .iter()
                .map(|r| r.encoded_size())
                .sum::<usize>()
    }
}

impl Frame {
    /// Serializes the frame, length prefix included.
    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let mut payload = Vec::with_capacity(HEADER_BYTES);
        match self {
            Frame::Data(data) => {
                encode_header(
                    FRAME_KIND_DATA,
                    &data.device_id,
                    data.domain,
                    data.batch_seq,
                    data.records.len() as u32,
                    &mut payload,
                )?;
                for record in &data.records {
                    record.write_wire(&mut payload);
                }
            }
            Frame::Ack(ack) => {
                encode_header(
                    FRAME_KIND_ACK,
                    &ack.device_id,
                    ack.domain,
                    ack.batch_seq,
                    ack.accepted,
                    &mut payload,
                )?;
            }
        }
        if payload.len() as u64 > MAX_FRAME_PAYLOAD as u64 {
            return Err(WireError::FrameTooLarge(payload.len() as u32));
        }
        let mut out = Vec::with_capacity(4 + payload.len());
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    /// Decodes a frame payload (the bytes after the length prefix).
    pub fn decode_payload(payload: &[u8]) -> Result<Frame, WireError> {
        if payload.len() < HEADER_BYTES {
            return Err(WireError::Malformed(format!(
                "payload of {} bytes is shorter than the header",
                payload.len()
            )));
        }
        if payload[0] != WIRE_VERSION {
            return Err(WireError::BadVersion(payload[0]));
        }
        let kind = payload[1];
        let device_id = decode_device_id(&payload[2..2 + DEVICE_ID_BYTES])?;
        let domain = InstrumentationDomain::from_wire_tag(payload[18])
            .ok_or_else(|| WireError::Malformed(format!("bad domain tag {:#04x}", payload[18])))?;
        let batch_seq = u64::from_be_bytes(payload[19..27].try_into().unwrap());
        let count = u32::from_be_bytes(payload[27..31].try_into().unwrap());
        match kind {
            FRAME_KIND_ACK => {
                if payload.len() != HEADER_BYTES {
                    return Err(WireError::Malformed("ack frame carries body bytes".into()));
                }
                Ok(Frame::Ack(FrameAck {
                    device_id,
                    domain,
                    batch_seq,
                    accepted: count,
                }))
            }
            FRAME_KIND_DATA => {
                let body = std::str::from_utf8(&payload[HEADER_BYTES..])
                    .map_err(|_| WireError::Malformed("record body is not UTF-8".into()))?;
                let mut records = Vec::with_capacity(count as usize);
                for line in body.lines() {
                    let record = ObservabilityRecord::from_line(line)?;
                    if record.domain() != domain {
                        return Err(WireError::Malformed(format!(
                            "record domain {} does not match frame domain {}",
                            record.domain(),
                            domain
                        )));
                    }
                    records.push(record);
                }
                if records.len() != count as usize {
                    return Err(WireError::Malformed(format!(
                        "frame count {} does not match {} records",
                        count,
                        records.len()
                    )));
                }
                Ok(Frame::Data(FrameData {
                    device_id,
                    domain,
                    batch_seq,
                    records,
                }))
            }
            other => Err(WireError::Malformed(format!(
                "unknown frame kind {other:#04x}"
            ))),
        }
    }

    /// Reads one length-prefixed frame. Returns `None` on clean EOF at a
    /// frame boundary.
    pub fn read_from(reader: &mut impl Read) -> Result<Option<Frame>, WireError> {
        let mut len_buf = [0u8; 4];
        match reader.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(WireError::Io(e)),
        }
        let len = u32::from_be_bytes(len_buf);
        if len > MAX_FRAME_PAYLOAD {
            return Err(WireError::FrameTooLarge(len));
        }
        let mut payload = vec![0u8; len as usize];
        reader.read_exact(&mut payload)?;
        Frame::decode_payload(&payload).map(Some)
    }

    pub fn write_to(&self, writer: &mut impl Write) -> Result<(), WireError> {
        let bytes = self.encode()?;
        writer.write_all(&bytes)?;
        Ok(())
    }
}
