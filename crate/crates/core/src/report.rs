//! Audit rows.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// One line of an audit table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub name: String,
    /// Lowercase hex SHA-256 of the canonical inputs.
    pub inputs_hash: String,
    pub metric: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditRow {
    pub fn new(name: impl Into<String>, inputs: &[u8], metric: f64, tolerance: f64, pass: bool) -> Self {
        Self { name: name.into(), inputs_hash: inputs_hash(inputs), metric, tolerance, pass }
    }
}

pub fn inputs_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes a header and one record per row.
pub fn write_audit_csv<W: Write>(rows: &[AuditRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_hex() {
        assert_eq!(inputs_hash(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn csv_round_trips() {
        let rows =
            vec![AuditRow::new("residual", b"x", 1e-11, 1e-10, true), AuditRow::new("gb", b"y", 0.5, 1e-3, false)];
        let mut buf = Vec::new();
        write_audit_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("name,inputs_hash,metric,tolerance,pass\n"));
        let back: Vec<AuditRow> =
            csv::Reader::from_reader(buf.as_slice()).deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back, rows);
    }
}
