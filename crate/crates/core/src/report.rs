//! Serialization helpers shared by the report types.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// One CSV row per record; the header comes from the field names of `T`.
pub fn write_records<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column `key,value` CSV for flat numeric summaries.
pub fn write_key_values<W: Write>(pairs: &[(String, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"]).map_err(csv_err)?;
    for (k, v) in pairs {
        w.write_record([k.as_str(), &format!("{v:e}")]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced_energy::ScanRow;

    #[test]
    fn records_and_pairs() {
        let rows = [ScanRow { sample: 0, h_norm_sq: 1.0, phi: -0.5, ratio: -0.5 }];
        let mut buf = Vec::new();
        write_records(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("sample,h_norm_sq,phi,ratio"));
        let mut buf = Vec::new();
        write_key_values(&[("A".into(), 0.25)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "key,value\nA,2.5e-1\n");
        assert!(to_json(&rows).unwrap().ends_with("]\n"));
    }
}
