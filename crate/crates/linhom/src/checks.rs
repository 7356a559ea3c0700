//! Named residual checks shared by the verification stages and the CLI
//! report.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Short label of the identity being tested.
    pub anchor: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `residual <= tol`.
    pub fn at_most(name: &str, anchor: &str, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            tol,
            pass: residual.is_finite() && residual <= tol,
        }
    }

    /// Negative control: passes when `residual > tol`.
    pub fn at_least(name: &str, anchor: &str, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            tol,
            pass: residual.is_finite() && residual > tol,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}
