//! Byte-stable JSON output and exit-code classification.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input, or an input failing state invariants.
    #[error("input error: {0}")]
    Input(String),
    /// A precondition of the requested analysis does not hold.
    #[error("{0}")]
    Domain(String),
    /// Closed form and oracle disagree, or a checked inequality fails.
    #[error("internal check failed: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InequalityViolation(_) => CliError::Internal(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// `{:.16e}`: 17 significant digits, enough to round-trip any binary64.
pub fn format_f64(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

/// Pretty printer whose floats always carry 17 significant digits.
struct StableFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with stable float formatting and a trailing newline.
pub fn to_stable_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    let formatter = StableFormatter {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hex::encode(hasher.finalize())
}

/// A command report; sections appear in a fixed order.
#[derive(Debug, Clone)]
pub struct Report {
    command: String,
    args: Map<String, Value>,
    inputs_digest: String,
    seed: Option<u64>,
    tolerances: Map<String, Value>,
    results: Map<String, Value>,
    checks: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, args: Value, inputs: &[&[u8]]) -> Self {
        let args = match args {
            Value::Object(map) => map,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        let echo = serde_json::to_vec(&args).unwrap_or_default();
        let mut parts: Vec<&[u8]> = vec![command.as_bytes(), &echo];
        parts.extend_from_slice(inputs);
        Self {
            command: command.to_string(),
            inputs_digest: sha256_hex(&parts),
            args,
            seed: None,
            tolerances: Map::new(),
            results: Map::new(),
            checks: Map::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn tolerance(&mut self, name: &str, value: f64) -> &mut Self {
        self.tolerances.insert(name.to_string(), Value::from(value));
        self
    }

    pub fn result(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(name.to_string(), value.into());
        self
    }

    pub fn check(&mut self, name: &str, passed: bool) -> &mut Self {
        self.checks.insert(name.to_string(), Value::Bool(passed));
        self
    }

    pub fn to_value(&self) -> Value {
        let mut map = Map::new();
        map.insert("command".into(), Value::from(self.command.clone()));
        map.insert("args".into(), Value::Object(self.args.clone()));
        map.insert("inputs_digest".into(), Value::from(self.inputs_digest.clone()));
        if let Some(seed) = self.seed {
            map.insert("seed".into(), Value::from(seed));
        }
        map.insert("tolerances".into(), Value::Object(self.tolerances.clone()));
        map.insert("results".into(), Value::Object(self.results.clone()));
        map.insert("checks".into(), Value::Object(self.checks.clone()));
        Value::Object(map)
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        to_stable_json(&self.to_value())
    }
}
