//! Output files: CSV with a `# config:` header line, JSON with a `config` key.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use lindblad_osc::io::fmt_f64;
use serde::Serialize;
use serde_json::Value;

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_config_line<W: Write + ?Sized, C: Serialize>(w: &mut W, config: &C) -> Result<()> {
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    Ok(())
}

pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

/// Writes `body` (a JSON object) with the resolved config under `config`.
pub fn write_json<W: Write + ?Sized, C: Serialize>(w: &mut W, config: &C, body: Value) -> Result<()> {
    let mut obj = match body {
        Value::Object(map) => map,
        other => {
            let mut map = serde_json::Map::new();
            map.insert("result".into(), other);
            map
        }
    };
    obj.insert("config".into(), serde_json::to_value(config)?);
    serde_json::to_writer_pretty(&mut *w, &Value::Object(obj))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_carries_config() {
        let mut buf = Vec::new();
        write_json(&mut buf, &serde_json::json!({"a": 1}), serde_json::json!({"x": 2.5})).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["config"]["a"], 1);
        assert_eq!(v["x"], 2.5);
    }

    #[test]
    fn csv_rows_use_full_precision() {
        assert_eq!(csv_row(&[0.1, f64::NAN]), "1.0000000000000001e-1,nan");
    }
}
