//! Failure reports on stderr and file outputs.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use lieavg_core::system::ValidationReport;
use serde::Serialize;

/// A command failure, mapped to an exit code and a JSON line on stderr.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, unreadable or invalid configuration, I/O errors.
    Config { kind: &'static str, message: String, report: Option<ValidationReport> },
    /// The state or an evaluation went non-finite.
    Divergence { message: String, t: Option<f64> },
}

impl Failure {
    pub fn config(kind: &'static str, message: impl ToString) -> Failure {
        Failure::Config { kind, message: message.to_string(), report: None }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config { .. } => 1,
            Failure::Divergence { .. } => 2,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            error: &'a str,
            message: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            report: Option<&'a ValidationReport>,
            #[serde(skip_serializing_if = "Option::is_none")]
            t: Option<f64>,
        }
        let out = match self {
            Failure::Config { kind, message, report } => Out { error: kind, message, report: report.as_ref(), t: None },
            Failure::Divergence { message, t } => Out { error: "divergence", message, report: None, t: *t },
        };
        serde_json::to_string(&out).expect("report serializes")
    }
}

pub type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Meta {
    generator: String,
    created_unix: u64,
}

#[derive(Serialize)]
struct WithMeta<'a, T: Serialize> {
    #[serde(flatten)]
    body: &'a T,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

pub fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::config("io", format!("cannot write {}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline; `meta` adds the only wall-clock field.
pub fn write_json<T: Serialize>(path: &Path, body: &T, meta: bool) -> Outcome {
    let meta = meta.then(|| Meta {
        generator: concat!("lieavg ", env!("CARGO_PKG_VERSION")).to_string(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    });
    let mut text = serde_json::to_string_pretty(&WithMeta { body, meta }).expect("output serializes");
    text.push('\n');
    write_text(path, &text)
}
