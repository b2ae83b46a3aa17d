//! Fixed-format CSV and JSON writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::units::CONSTANTS_VERSION;

/// Nine significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

/// CSV text built in memory and written in one go.
pub struct Csv {
    text: String,
}

impl Csv {
    /// Starts a table with the provenance comment lines and column names.
    pub fn new(command: &str, config_hash: &str, columns: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# rydmol {command}").unwrap();
        writeln!(text, "# config_sha256={config_hash}").unwrap();
        writeln!(text, "# constants={CONSTANTS_VERSION}").unwrap();
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn comment(&mut self, line: &str) {
        writeln!(self.text, "# {line}").unwrap();
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}
