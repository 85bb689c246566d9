use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub details: Value,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, status: Status, details: Value) -> Self {
        CheckRecord {
            name: name.into(),
            status,
            details,
        }
    }

    pub fn pass(name: impl Into<String>, details: Value) -> Self {
        Self::new(name, Status::Pass, details)
    }
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: String,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub timing: Timing,
    /// sha256 of every config or input file that went into the run
    pub digests: BTreeMap<String, String>,
}

pub struct ReportBuilder {
    command: Vec<String>,
    started: Instant,
    checks: Vec<CheckRecord>,
    digests: BTreeMap<String, String>,
}

impl ReportBuilder {
    pub fn new(command: Vec<String>) -> Self {
        ReportBuilder {
            command,
            started: Instant::now(),
            checks: Vec::new(),
            digests: BTreeMap::new(),
        }
    }

    pub fn check(&mut self, c: CheckRecord) {
        self.checks.push(c);
    }

    pub fn digest(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.digests.insert(name.into(), hex::encode(Sha256::digest(bytes)));
    }

    pub fn finish(self) -> RunReport {
        RunReport {
            command: self.command,
            checks: self.checks,
            timing: Timing {
                elapsed_ms: self.started.elapsed().as_millis().to_string(),
            },
            digests: self.digests,
        }
    }
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}
