use std::io::Write;
use std::process::ExitCode;

use serde::Serialize;

pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// A completed command: primary output, notes for stderr, exit code.
pub struct Success {
    pub stdout: String,
    pub notes: Vec<String>,
    pub code: u8,
}

impl Success {
    pub fn new(stdout: String) -> Self {
        Success {
            stdout,
            notes: Vec::new(),
            code: 0,
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_code(mut self, code: u8) -> Self {
        self.code = code;
        self
    }

    pub fn emit(self) -> ExitCode {
        let mut out = std::io::stdout().lock();
        if out.write_all(self.stdout.as_bytes()).and_then(|_| out.flush()).is_err() {
            return ExitCode::from(EXIT_USAGE);
        }
        for n in &self.notes {
            eprintln!("{n}");
        }
        ExitCode::from(self.code)
    }
}

#[derive(Debug)]
pub enum Failure {
    /// The input was read but the analysis reports a problem.
    Findings(String),
    /// Bad invocation or I/O trouble.
    Usage(String),
}

impl Failure {
    pub fn emit(self) -> ExitCode {
        match self {
            Failure::Findings(m) => {
                eprintln!("error: {m}");
                ExitCode::from(EXIT_FINDINGS)
            }
            Failure::Usage(m) => {
                eprintln!("error: {m}");
                ExitCode::from(EXIT_USAGE)
            }
        }
    }
}

pub fn findings(e: impl std::fmt::Display) -> Failure {
    Failure::Findings(e.to_string())
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// CSV text from a header and rows of fields.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn join_ids<T: AsRef<str>>(ids: &[T]) -> String {
    ids.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ")
}
