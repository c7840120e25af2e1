//! Timestamped run transcript, serialized as JSON Lines: one record per
//! line with keys in fixed order (`t_ms`, `source`, `kind`, `detail`), so
//! two identical runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Who emitted a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Controller,
    Modem,
    Sensor,
    Harness,
}

/// What a record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    /// A scripted stimulus was applied to a sensor.
    Stimulus,
    /// A scripted call directive was routed to the modem.
    Call,
    Warning,
    Log,
    /// One controller sample of all three sensor inputs.
    Sample,
    IndicatorOn,
    IndicatorOff,
    UartWrite,
    UartRead,
    /// Bytes the modem put on the wire in reply to a command.
    Response,
    /// Bytes the modem put on the wire on its own (e.g. `NO CARRIER`).
    Unsolicited,
    CallStarted,
    CallAnswered,
    CallEnded,
    Sms,
}

/// One observable simulation action. Records are strictly ordered by
/// `(t_ms, emission order)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub t_ms: u64,
    pub source: Source,
    pub kind: RecordKind,
    pub detail: String,
}

impl TranscriptRecord {
    pub fn new(t_ms: u64, source: Source, kind: RecordKind, detail: String) -> Self {
        TranscriptRecord {
            t_ms,
            source,
            kind,
            detail,
        }
    }
}

/// Renders wire bytes for a `detail` field. Control bytes survive into the
/// string and come out as ``-style escapes when JSON-encoded; invalid
/// UTF-8 is replaced, deterministically.
pub fn render_bytes(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Serializes records as JSON Lines, one record per line.
pub fn to_jsonl(records: &[TranscriptRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("transcript records always serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: &Path, records: &[TranscriptRecord]) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(to_jsonl(records).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_come_out_in_fixed_order() {
        let record = TranscriptRecord::new(
            20_000,
            Source::Controller,
            RecordKind::UartWrite,
            render_bytes(b"ATD+2347048850497;\r\n"),
        );
        let line = serde_json::to_string(&record).unwrap();
        assert_eq!(
            line,
            "{\"t_ms\":20000,\"source\":\"controller\",\"kind\":\"uart_write\",\
             \"detail\":\"ATD+2347048850497;\\r\\n\"}"
        );
    }

    #[test]
    fn control_bytes_escape_as_unicode_sequences() {
        let record = TranscriptRecord::new(
            0,
            Source::Controller,
            RecordKind::UartWrite,
            render_bytes(&[0x1A]),
        );
        let line = serde_json::to_string(&record).unwrap();
        assert!(line.contains("\\u001a"));
    }

    #[test]
    fn jsonl_round_trips() {
        let records = vec![
            TranscriptRecord::new(0, Source::Harness, RecordKind::Call, "answer".into()),
            TranscriptRecord::new(5, Source::Modem, RecordKind::Sms, "+1 hi".into()),
        ];
        let text = to_jsonl(&records);
        let parsed: Vec<TranscriptRecord> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(parsed, records);
    }
}
