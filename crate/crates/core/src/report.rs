//! Verification reports.
//!
//! Every check produces one [`Record`] per instance. The descriptor string of
//! a record is enough to replay that single instance.

use serde::Serialize;

use crate::{QVec, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub check: String,
    pub instance: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub checked: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub kind: String,
    pub subject: String,
    pub summary: Summary,
    pub records: Vec<Record>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(kind: impl Into<String>, subject: impl Into<String>) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            kind: kind.into(),
            subject: subject.into(),
            summary: Summary::default(),
            records: Vec::new(),
            data: serde_json::Value::Null,
        }
    }

    pub fn pass(&mut self, check: &str, instance: String) {
        self.push(check, instance, true, None, None);
    }

    pub fn fail(&mut self, check: &str, instance: String, note: impl Into<String>) {
        self.push(check, instance, false, None, Some(note.into()));
    }

    /// Records a residual vector; passes iff it is zero.
    pub fn residual(&mut self, check: &str, instance: String, residual: &QVec, labels: &[String]) {
        if residual.is_zero() {
            self.pass(check, instance);
        } else {
            let r = residual
                .iter()
                .map(|(i, c)| (labels.get(i).cloned().unwrap_or_else(|| format!("#{i}")), c.to_exact_string()))
                .collect();
            self.push(check, instance, false, Some(r), None);
        }
    }

    pub fn skip(&mut self) {
        self.summary.skipped += 1;
    }

    fn push(&mut self, check: &str, instance: String, passed: bool, residual: Option<Vec<(String, String)>>, note: Option<String>) {
        self.summary.checked += 1;
        if !passed {
            self.summary.failed += 1;
        }
        self.records.push(Record { check: check.into(), instance, passed, residual, note });
    }

    pub fn merge(&mut self, other: Report) {
        self.summary.checked += other.summary.checked;
        self.summary.failed += other.summary.failed;
        self.summary.skipped += other.summary.skipped;
        self.records.extend(other.records);
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.passed)
    }

    /// Number of checked instances of one kind.
    pub fn count(&self, check: &str) -> usize {
        self.records.iter().filter(|r| r.check == check).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Line-oriented rendering: a summary line, then one line per failure.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {}: checked {}, failed {}, skipped {}\n",
            self.kind, self.subject, self.summary.checked, self.summary.failed, self.summary.skipped
        );
        for r in self.failures() {
            out.push_str(&format!("FAIL {} {}", r.check, r.instance));
            if let Some(n) = &r.note {
                out.push_str(&format!(" ({n})"));
            }
            if let Some(res) = &r.residual {
                let parts: Vec<String> = res.iter().map(|(l, c)| format!("{c}*{l}")).collect();
                out.push_str(&format!(" residual {}", parts.join(" + ")));
            }
            out.push('\n');
        }
        out
    }
}
