use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// A failure reported as `{"error": {"kind": ..., "message": ...}}` on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<g2flow::Error> for CliError {
    fn from(e: g2flow::Error) -> Self {
        use g2flow::Error as E;
        let kind = match e {
            E::Parse(_) => "parse",
            E::InvalidOptions(_) => "options",
            E::StepUnderflow { .. } => "integration",
            _ => "precondition",
        };
        Self::new(kind, e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::new("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new("parse", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `--input` is an inline document when it starts with `{`, stdin for `-`, otherwise a path.
pub fn read_input(input: Option<&str>) -> CliResult<String> {
    match input.map(str::trim_start) {
        None => Err(CliError::new("usage", "this command needs --input")),
        Some(s) if s.starts_with('{') => Ok(s.to_string()),
        Some("-") => {
            let mut buf = String::new();
            io::stdin().read_to_string(&mut buf)?;
            Ok(buf)
        }
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::new("io", format!("{path}: {e}"))),
    }
}

/// Where the metadata of a CSV written to `out` goes.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let p = out.with_extension("json");
    if p == out {
        let mut s = out.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    } else {
        p
    }
}

/// Runs `f` against the output file, or stdout when there is none.
pub fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut w = io::BufWriter::new(
                fs::File::create(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?,
            );
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    with_output(out, |w| writeln!(w, "{text}"))
}
