//! Output formats: `series.csv`, `summary.json`, `fields_####.bin`, and the
//! failure marker. Every file is written to a temporary sibling and renamed.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use nsp_core::evolve::StepRecord;
use nsp_core::{Error, Result};

pub const SERIES_HEADER: [&str; 6] = ["t", "E", "D", "mass_defect", "imp1_ratio", "identity_residual"];
pub const FIELD_MAGIC: &[u8; 4] = b"NSPF";
pub const FIELD_VERSION: u32 = 1;
pub const FIELD_HEADER_LEN: usize = 16;
pub const FAILURE_MARKER: &str = "FAILED.json";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub e: f64,
    pub d: f64,
    pub mass_defect: f64,
    pub imp1_ratio: Option<f64>,
    pub identity_residual: Option<f64>,
}

impl From<&StepRecord> for SeriesRow {
    fn from(r: &StepRecord) -> Self {
        Self {
            t: r.t,
            e: r.energy,
            d: r.dissipation,
            mass_defect: r.mass_defect,
            imp1_ratio: r.imp1_ratio,
            identity_residual: r.identity_residual,
        }
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn decode(msg: impl Into<String>) -> Error {
    Error::Decode(msg.into())
}

// shortest round-trip form, exponent notation for tiny and huge values
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), num)
}

pub fn encode_series(rows: &[SeriesRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SERIES_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([num(r.t), num(r.e), num(r.d), num(r.mass_defect), opt(r.imp1_ratio), opt(r.identity_residual)])
            .map_err(io)?;
    }
    w.into_inner().map_err(io)
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| decode(format!("line {line}: {what} is not a number: {field:?}")))
}

pub fn parse_series(bytes: &[u8]) -> Result<Vec<SeriesRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(|e| decode(e.to_string()))?;
    if header.iter().ne(SERIES_HEADER) {
        return Err(decode(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| decode(e.to_string()))?;
        let line = i + 2;
        if rec.len() != SERIES_HEADER.len() {
            return Err(decode(format!("line {line}: {} fields", rec.len())));
        }
        let v: Vec<f64> = rec
            .iter()
            .zip(SERIES_HEADER)
            .map(|(f, name)| parse_f64(f, name, line))
            .collect::<Result<_>>()?;
        let o = |x: f64| (!x.is_nan()).then_some(x);
        rows.push(SeriesRow {
            t: v[0],
            e: v[1],
            d: v[2],
            mass_defect: v[3],
            imp1_ratio: o(v[4]),
            identity_residual: o(v[5]),
        });
    }
    Ok(rows)
}

/// Nodal fields, `values[node * fields + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub nodes: u32,
    pub fields: u32,
    pub values: Vec<f64>,
}

pub fn encode_fields(dump: &FieldDump) -> Result<Vec<u8>> {
    let expected = dump.nodes as usize * dump.fields as usize;
    if dump.values.len() != expected {
        return Err(Error::Precondition(format!("{} values for {expected} slots", dump.values.len())));
    }
    let mut out = Vec::with_capacity(FIELD_HEADER_LEN + 8 * expected);
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&dump.nodes.to_le_bytes());
    out.extend_from_slice(&dump.fields.to_le_bytes());
    for v in &dump.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_fields(bytes: &[u8]) -> Result<FieldDump> {
    if bytes.len() < FIELD_HEADER_LEN {
        return Err(decode(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != FIELD_MAGIC {
        return Err(decode("bad magic"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("four bytes"));
    let version = word(4);
    if version != FIELD_VERSION {
        return Err(decode(format!("unsupported version {version}")));
    }
    let (nodes, fields) = (word(8), word(12));
    let body = &bytes[FIELD_HEADER_LEN..];
    let expected = (nodes as u64) * (fields as u64) * 8;
    if body.len() as u64 != expected {
        return Err(decode(format!("body has {} bytes, header implies {expected}", body.len())));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();
    Ok(FieldDump { nodes, fields, values })
}

/// Writes `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(dir.join(name)).map_err(io)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(io)?;
    text.push(b'\n');
    write_atomic(dir, name, &text)
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureMarker {
    pub experiment: String,
    pub error: String,
    /// Step at which the trajectory stopped, when there was one.
    pub step: Option<usize>,
    /// Rows already in `series.csv`.
    pub completed_rows: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SeriesRow> {
        vec![
            SeriesRow { t: 0.0, e: 1.0 / 3.0, d: 2.5e-17, mass_defect: -0.0, imp1_ratio: None, identity_residual: None },
            SeriesRow { t: 0.1, e: 0.1 + 0.2, d: 1e300, mass_defect: 3e-20, imp1_ratio: Some(0.25), identity_residual: Some(1e-9) },
        ]
    }

    #[test]
    fn series_round_trips_bit_exactly() {
        let bytes = encode_series(&rows()).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("t,E,D,mass_defect,imp1_ratio,identity_residual\n"));
        assert!(text.contains("nan"));
        assert!(text.contains("2.5e-17"));
        let back = parse_series(&bytes).unwrap();
        for (a, b) in back.iter().zip(rows()) {
            assert_eq!(a.e.to_bits(), b.e.to_bits());
            assert_eq!(a.d.to_bits(), b.d.to_bits());
            assert_eq!(a.imp1_ratio, b.imp1_ratio);
        }
    }

    #[test]
    fn series_rejects_bad_header_and_fields() {
        assert!(parse_series(b"t,E\n0,1\n").is_err());
        assert!(parse_series(b"t,E,D,mass_defect,imp1_ratio,identity_residual\n0,1,2,3,x,5\n").is_err());
        assert!(parse_series(b"t,E,D,mass_defect,imp1_ratio,identity_residual\n0,1,2\n").is_err());
    }

    #[test]
    fn field_dump_layout() {
        let dump = FieldDump { nodes: 2, fields: 1, values: vec![1.5, -2.0] };
        let bytes = encode_fields(&dump).unwrap();
        assert_eq!(&bytes[..4], b"NSPF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.5);
        assert_eq!(decode_fields(&bytes).unwrap(), dump);
    }

    #[test]
    fn field_dump_rejects_truncation() {
        let bytes = encode_fields(&FieldDump { nodes: 3, fields: 2, values: vec![0.0; 6] }).unwrap();
        assert!(decode_fields(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_fields(&bytes[..10]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_fields(&bad).is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        write_atomic(dir.path(), "a.txt", b"two").unwrap();
        assert_eq!(std::fs::read(dir.path().join("a.txt")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
