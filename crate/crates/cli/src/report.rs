//! `key=value` report lines.

use std::fmt;

use curvepass_core::analysis::{AttackReport, SpaceReport};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Parses output previously produced by `Display`.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|line| line.split_once('='))
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect();
        Self { entries }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn space_report(space: &SpaceReport) -> Report {
    let mut r = Report::new();
    r.push("catalog_size", space.catalog_size);
    r.push("password_length", space.password_length);
    r.push("space", &space.space);
    r.push("bits", format!("{:.6}", space.bits));
    r
}

pub fn attack_report(attack: &AttackReport) -> Report {
    let mut r = Report::new();
    let observed: Vec<&str> = attack.observed_trace.iter().map(|id| id.as_str()).collect();
    r.push("observed", observed.join(","));
    r.push("n", attack.n);
    r.push("candidate_count", attack.candidate_count);
    r.push("residual_bits", format!("{:.6}", attack.residual_bits));
    r.push("contains_truth", attack.contains_truth);
    r
}
