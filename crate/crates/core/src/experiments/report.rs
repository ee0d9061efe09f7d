use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::grid::{ExponentFit, GridSpec};

/// Fits whose largest log2 deviation exceeds this are never pass/fail.
pub const INCONCLUSIVE_RESIDUAL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One tested claim, tied to a numbered acceptance criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub measured: f64,
    /// Human-readable target, e.g. `"0.25 ± 0.15"` or `"<= 1e-8"`.
    pub target: String,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(criterion: u8, name: impl Into<String>, measured: f64, target: impl Into<String>, tolerance: f64, pass: bool) -> Self {
        let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        Self { criterion, name: name.into(), measured, target: target.into(), tolerance, verdict }
    }

    /// `|measured - target| <= tolerance`.
    pub fn near(criterion: u8, name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        let pass = (measured - target).abs() <= tolerance;
        Self::new(criterion, name, measured, format!("{target} ± {tolerance}"), tolerance, pass)
    }

    pub fn at_most(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(criterion, name, measured, format!("<= {bound}"), 0.0, measured <= bound)
    }

    pub fn at_least(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(criterion, name, measured, format!(">= {bound}"), 0.0, measured >= bound)
    }

    /// Downgrades the verdict when the underlying fit is too noisy.
    pub fn with_fit(mut self, fit: &ExponentFit) -> Self {
        if fit.residual > INCONCLUSIVE_RESIDUAL {
            self.verdict = Verdict::Inconclusive;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// A table with named columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header plus rows; floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub parameters: serde_json::Value,
    pub series: Vec<Series>,
    pub fits: Vec<(String, ExponentFit)>,
    pub checks: Vec<Check>,
    pub grids: Vec<GridSpec>,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(id: impl Into<String>, parameters: impl Serialize) -> Self {
        Self {
            id: id.into(),
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            series: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            grids: Vec::new(),
            seed: None,
            wall_time_s: 0.0,
            notes: Vec::new(),
        }
    }

    pub fn fit(&mut self, name: impl Into<String>, fit: ExponentFit) {
        self.fits.push((name.into(), fit));
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn grid(&mut self, spec: GridSpec) {
        if !self.grids.contains(&spec) {
            self.grids.push(spec);
        }
    }

    pub fn finish(mut self, started: Instant) -> Self {
        self.wall_time_s = started.elapsed().as_secs_f64();
        self
    }

    /// Worst verdict: any fail beats inconclusive, which beats pass.
    pub fn verdict(&self) -> Verdict {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self.checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn checks_for(&self, criterion: u8) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.criterion == criterion)
    }
}
