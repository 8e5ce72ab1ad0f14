//! JSON report schema, the 17-digit encoder and the validating decoder.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;
use thiserror::Error;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Spectrum,
    Conjecture,
    Solution,
    Morse,
    Testfn,
    Acceptance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    pub kind: RecordKind,
    pub inputs: Value,
    pub payload: Value,
    pub provenance: Provenance,
}

impl ReportRecord {
    /// Whether the row failed and carries an `error` payload instead of results.
    pub fn is_error(&self) -> bool {
        self.payload.get("error").is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Report {
    pub version: String,
    pub config_hash: String,
    pub records: Vec<ReportRecord>,
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid report: {0}")]
    Schema(String),
}

fn is_hash(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl Report {
    pub fn new(config_hash: String) -> Self {
        Self {
            version: TOOLKIT_VERSION.to_string(),
            config_hash,
            records: Vec::new(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            version: self.version.clone(),
            config_hash: self.config_hash.clone(),
        }
    }

    pub fn push(&mut self, kind: RecordKind, inputs: Value, payload: Value) {
        let provenance = self.provenance();
        self.records.push(ReportRecord {
            kind,
            inputs,
            payload,
            provenance,
        });
    }

    /// Serializes with every float written to 17 significant digits.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFormatter::default());
        self.serialize(&mut ser)
            .expect("report values are always serializable");
        out.push(b'\n');
        out
    }

    /// Parses a report and checks the invariants the encoder guarantees.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let report: Report = serde_json::from_slice(bytes)?;
        if report.version.is_empty() {
            return Err(DecodeError::Schema("empty version".into()));
        }
        if !is_hash(&report.config_hash) {
            return Err(DecodeError::Schema(
                "config-hash is not a SHA-256 hex digest".into(),
            ));
        }
        for (i, r) in report.records.iter().enumerate() {
            if r.provenance.version != report.version
                || r.provenance.config_hash != report.config_hash
            {
                return Err(DecodeError::Schema(format!(
                    "record {i}: provenance differs from the header"
                )));
            }
            if !r.inputs.is_object() || !r.payload.is_object() {
                return Err(DecodeError::Schema(format!(
                    "record {i}: inputs and payload must be objects"
                )));
            }
        }
        Ok(report)
    }
}

/// Pretty JSON formatter that writes floats as `d.dddddddddddddddde±x`.
#[derive(Default)]
pub struct SigFormatter {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident $(($arg:ident : $ty:ty))?),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)?) -> io::Result<()> {
                self.pretty.$name(writer $(, $arg)?)
            }
        )*
    };
}

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    delegate!(
        begin_array,
        end_array,
        begin_array_value(first: bool),
        end_array_value,
        begin_object,
        end_object,
        begin_object_key(first: bool),
        begin_object_value,
        end_object_value,
    );
}

/// A float formatted like the JSON encoder does, for CSV cells.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Report {
        let mut r = Report::new("ab".repeat(32));
        r.push(
            RecordKind::Spectrum,
            json!({"N": 2, "s": 0.5}),
            json!({"lambda": {"value": 1.0 / 3.0, "err": 1e-300}, "label": [0, 0], "inf": f64::INFINITY}),
        );
        r.push(
            RecordKind::Morse,
            json!({}),
            json!({"error": "no convergence"}),
        );
        r
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let text = String::from_utf8(sample().encode()).unwrap();
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
        assert!(text.contains("1.0000000000000000e-300"));
        assert!(text.contains("\"inf\": null"));
        assert!(text.contains("\"N\": 2"));
    }

    #[test]
    fn encode_decode_round_trip() {
        let r = sample();
        let bytes = r.encode();
        let back = Report::decode(&bytes).unwrap();
        assert_eq!(back.encode(), bytes);
        assert!(back.records[1].is_error());
        assert!(!back.records[0].is_error());
    }

    #[test]
    fn decoder_rejects_schema_violations() {
        let mut r = sample();
        r.config_hash = "xyz".into();
        assert!(matches!(
            Report::decode(&r.encode()),
            Err(DecodeError::Schema(_))
        ));
        let mut r = sample();
        r.records[0].provenance.version = "0.0.0".into();
        assert!(matches!(
            Report::decode(&r.encode()),
            Err(DecodeError::Schema(_))
        ));
        let text = String::from_utf8(sample().encode())
            .unwrap()
            .replace("\"morse\"", "\"other\"");
        assert!(matches!(
            Report::decode(text.as_bytes()),
            Err(DecodeError::Json(_))
        ));
        assert!(Report::decode(b"{").is_err());
        assert!(Report::decode(b"").is_err());
    }

    proptest::proptest! {
        #[test]
        fn sig17_is_exact(bits in proptest::prelude::any::<u64>()) {
            let x = f64::from_bits(bits);
            proptest::prop_assume!(x.is_finite());
            proptest::prop_assert_eq!(sig17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }

        #[test]
        fn encoded_floats_decode_exactly(bits in proptest::prelude::any::<u64>()) {
            let x = f64::from_bits(bits);
            proptest::prop_assume!(x.is_finite());
            let mut r = Report::new("0".repeat(64));
            r.push(RecordKind::Solution, json!({}), json!({ "x": x }));
            let back = Report::decode(&r.encode()).unwrap();
            let y = back.records[0].payload["x"].as_f64().unwrap();
            proptest::prop_assert_eq!(y.to_bits(), x.to_bits());
        }
    }
}
