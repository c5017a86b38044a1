//! Report assembly: a CSV table with per-row provenance and a JSON summary.

use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use warpbench_core::ledger::Calibration;
use warpbench_core::{Error, ErrorClass};

pub const SCHEMA: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Hypothesis => EXIT_HYPOTHESIS,
        ErrorClass::Assertion => EXIT_ASSERTION,
        ErrorClass::Config => EXIT_CONFIG,
    }
}

/// Where a number came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    /// `module.operation`.
    pub source: &'static str,
    pub anchor: &'static str,
}

pub const fn prov(source: &'static str, anchor: &'static str) -> Provenance {
    Provenance { source, anchor }
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut header: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
        header.extend(["provenance", "anchor", "calibration"].map(String::from));
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<String>, p: Provenance, calibration: &str) {
        debug_assert_eq!(cells.len() + 3, self.header.len());
        let mut row = cells;
        row.extend([p.source.to_string(), p.anchor.to_string(), calibration.to_string()]);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub provenance: String,
    pub anchor: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub scenario: String,
    pub command: String,
    pub manifold: String,
    pub n: usize,
    pub tolerance: f64,
    pub calibration: Calibration,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<ErrorInfo>,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, Value>,
    pub rows: usize,
}

/// Everything a scenario produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub summary: Summary,
    pub table: Table,
    /// Extra files written next to the report, as `(suffix, contents)`.
    pub attachments: Vec<(String, String)>,
}

impl Report {
    pub fn new(scenario: &str, command: &str, manifold: String, n: usize, tol: f64, cal: Calibration, table: Table) -> Self {
        Report {
            summary: Summary {
                schema: SCHEMA,
                scenario: scenario.into(),
                command: command.into(),
                manifold,
                n,
                tolerance: tol,
                calibration: cal,
                status: String::new(),
                exit_code: EXIT_PASS,
                error: None,
                checks: Vec::new(),
                values: BTreeMap::new(),
                rows: 0,
            },
            table,
            attachments: Vec::new(),
        }
    }

    pub fn value(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.values.insert(key.into(), v.into());
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, value: f64, limit: f64, p: Provenance) -> bool {
        self.summary.checks.push(Check {
            name: name.into(),
            pass,
            value,
            limit,
            provenance: p.source.into(),
            anchor: p.anchor.into(),
        });
        pass
    }

    /// Sets status and exit code from the checks and the terminating error.
    pub fn finish(&mut self, outcome: Result<(), Error>) {
        self.summary.rows = self.table.len();
        let (code, status) = match &outcome {
            Err(e) => {
                self.summary.error = Some(ErrorInfo { kind: e.kind().into(), message: e.to_string() });
                let code = exit_code(e);
                (code, status_name(code))
            }
            Ok(()) if self.summary.checks.iter().all(|c| c.pass) => (EXIT_PASS, status_name(EXIT_PASS)),
            Ok(()) => (EXIT_ASSERTION, status_name(EXIT_ASSERTION)),
        };
        self.summary.exit_code = code;
        self.summary.status = status.into();
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes `<name>.csv`, `<name>.json` and attachments into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = &self.summary.scenario;
        let mut out = vec![dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json"))];
        std::fs::write(&out[0], self.table.to_csv())?;
        std::fs::write(&out[1], self.summary_json())?;
        for (suffix, body) in &self.attachments {
            let p = dir.join(format!("{stem}.{suffix}"));
            std::fs::write(&p, body)?;
            out.push(p);
        }
        Ok(out)
    }
}

pub fn status_name(code: i32) -> &'static str {
    match code {
        EXIT_PASS => "pass",
        EXIT_HYPOTHESIS => "hypothesis-not-met",
        EXIT_ASSERTION => "assertion-failed",
        _ => "config-error",
    }
}

/// `name=value` pairs of the fields that differ from the default, or `default`.
pub fn calibration_tag(c: &Calibration) -> String {
    let d = Calibration::default();
    let diff: Vec<String> = c
        .fields()
        .iter()
        .zip(d.fields())
        .filter(|(a, b)| a.1 != b.1)
        .map(|(a, _)| format!("{}={}", a.0, num(a.1)))
        .collect();
    if diff.is_empty() {
        "default".into()
    } else {
        diff.join(";")
    }
}
