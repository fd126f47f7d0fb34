//! Binary column files for field samples.
//!
//! Layout: the magic `DGFFCOL1`, a little-endian `u32` header length, a
//! UTF-8 JSON header, then `len` rows of `x: i32`, `y: i32`, `value: f64`,
//! all little-endian. The header records a SHA-256 of the point list so a
//! file can be matched against a domain.

use crate::lattice::{DiscreteDomain, Point};
use crate::seeds::StreamId;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MAGIC: &[u8; 8] = b"DGFFCOL1";
const MAX_HEADER: usize = 1 << 16;
const ROW_BYTES: usize = 16;
/// Largest accepted row count.
pub const MAX_ROWS: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldIoError {
    #[error("bad magic")]
    Magic,
    #[error("truncated input")]
    Truncated,
    #[error("header: {0}")]
    Header(String),
    #[error("row count mismatch: header says {header}, payload has {payload}")]
    Rows { header: u64, payload: u64 },
    #[error("domain hash mismatch")]
    Hash,
    #[error("non-finite value at row {0}")]
    NonFinite(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnHeader {
    pub format: String,
    pub columns: Vec<String>,
    pub len: u64,
    pub domain_hash: String,
    pub seed: u64,
    pub row: u64,
    pub trial: u64,
}

/// SHA-256 of the points, each as two little-endian `i32`.
pub fn points_hash(points: &[Point]) -> String {
    let mut h = Sha256::new();
    for p in points {
        h.update(p[0].to_le_bytes());
        h.update(p[1].to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn domain_hash(d: &DiscreteDomain) -> String {
    points_hash(d.points())
}

/// A decoded column file.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnFile {
    pub header: ColumnHeader,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

impl ColumnFile {
    pub fn stream(&self) -> StreamId {
        StreamId::new(self.header.seed, self.header.row, self.header.trial)
    }
}

pub fn encode(points: &[Point], values: &[f64], stream: StreamId) -> Vec<u8> {
    assert_eq!(points.len(), values.len(), "one value per point");
    let header = ColumnHeader {
        format: "dgff-columns".into(),
        columns: vec!["x:i32".into(), "y:i32".into(), "value:f64".into()],
        len: points.len() as u64,
        domain_hash: points_hash(points),
        seed: stream.master,
        row: stream.row,
        trial: stream.trial,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + json.len() + ROW_BYTES * points.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (p, v) in points.iter().zip(values) {
        out.extend_from_slice(&p[0].to_le_bytes());
        out.extend_from_slice(&p[1].to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Encodes a sample on `D̄` (domain points then boundary points).
pub fn encode_sample(model: &crate::gff::GffModel, sample: &crate::gff::FieldSample) -> Vec<u8> {
    let mut pts = model.domain().points().to_vec();
    pts.extend_from_slice(model.boundary().points());
    encode(&pts, &sample.values, sample.stream)
}

pub fn decode(bytes: &[u8]) -> Result<ColumnFile, FieldIoError> {
    if bytes.len() < 12 {
        return Err(FieldIoError::Truncated);
    }
    if &bytes[..8] != MAGIC {
        return Err(FieldIoError::Magic);
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    if hlen > MAX_HEADER {
        return Err(FieldIoError::Header(format!("header length {hlen} too large")));
    }
    let body = &bytes[12..];
    if body.len() < hlen {
        return Err(FieldIoError::Truncated);
    }
    let header: ColumnHeader = serde_json::from_slice(&body[..hlen]).map_err(|e| FieldIoError::Header(e.to_string()))?;
    if header.format != "dgff-columns" || header.columns != ["x:i32", "y:i32", "value:f64"] {
        return Err(FieldIoError::Header("unsupported format or columns".into()));
    }
    if header.len > MAX_ROWS {
        return Err(FieldIoError::Header(format!("row count {} too large", header.len)));
    }
    let payload = &body[hlen..];
    if payload.len() % ROW_BYTES != 0 {
        return Err(FieldIoError::Truncated);
    }
    let rows = (payload.len() / ROW_BYTES) as u64;
    if rows != header.len {
        return Err(FieldIoError::Rows { header: header.len, payload: rows });
    }
    let mut points = Vec::with_capacity(rows as usize);
    let mut values = Vec::with_capacity(rows as usize);
    for (i, r) in payload.chunks_exact(ROW_BYTES).enumerate() {
        let x = i32::from_le_bytes(r[0..4].try_into().expect("4 bytes"));
        let y = i32::from_le_bytes(r[4..8].try_into().expect("4 bytes"));
        let v = f64::from_le_bytes(r[8..16].try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(FieldIoError::NonFinite(i));
        }
        points.push([x, y]);
        values.push(v);
    }
    if points_hash(&points) != header.domain_hash {
        return Err(FieldIoError::Hash);
    }
    Ok(ColumnFile { header, points, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejections() {
        let pts = vec![[0, 0], [1, 0], [-3, 7]];
        let vals = vec![0.5, -1.25, 3.0];
        let bytes = encode(&pts, &vals, StreamId::new(9, 8, 7));
        let f = decode(&bytes).unwrap();
        assert_eq!(f.points, pts);
        assert_eq!(f.values, vals);
        assert_eq!(f.stream(), StreamId::new(9, 8, 7));
        assert_eq!(decode(&bytes[..bytes.len() - 1]), Err(FieldIoError::Truncated));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(decode(&bad), Err(FieldIoError::Magic));
        let mut flipped = bytes.clone();
        let n = flipped.len();
        flipped[n - 12] ^= 1;
        assert_eq!(decode(&flipped), Err(FieldIoError::Hash));
        assert_eq!(points_hash(&[]), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
