//! NDJSON report lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use charentropy::{Error, Result};
use serde::Serialize;
use serde_json::{Map, Value};

/// Writes one JSON object per check and remembers whether any failed.
pub struct Reporter {
    out: Box<dyn Write>,
    all_pass: bool,
}

impl Reporter {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(std::io::stdout())),
        };
        Ok(Self { out, all_pass: true })
    }

    /// Emits `{"check": .., "pass": .., ..fields}`; `fields` must serialize
    /// to an object.
    pub fn emit(&mut self, check: &str, pass: bool, fields: &impl Serialize) -> Result<()> {
        let mut obj = Map::new();
        obj.insert("check".into(), Value::from(check));
        obj.insert("pass".into(), Value::from(pass));
        match serde_json::to_value(fields).map_err(|e| Error::Io(e.to_string()))? {
            Value::Object(m) => obj.extend(m),
            Value::Null => {}
            other => {
                obj.insert("value".into(), other);
            }
        }
        let line = serde_json::to_string(&Value::Object(obj)).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(self.out, "{line}")?;
        self.all_pass &= pass;
        Ok(())
    }

    /// Flushes and reports whether every emitted check passed.
    pub fn finish(mut self) -> Result<bool> {
        self.out.flush()?;
        Ok(self.all_pass)
    }
}
