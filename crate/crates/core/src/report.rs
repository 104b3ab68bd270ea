use std::fmt;

use serde::Serialize;

/// One pass/fail entry of a validation report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `statistic <= threshold`.
    pub fn at_most(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic <= threshold,
            detail: None,
        }
    }

    /// Passes when `statistic < threshold`.
    pub fn below(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic < threshold,
            detail: None,
        }
    }

    /// Passes when `statistic > threshold`.
    pub fn above(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic > threshold,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// A named list of checks. Statistical and structural failures are data,
/// not errors.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub title: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn new(title: impl Into<String>) -> Self {
        ValidationReport {
            title: title.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Fraction of passing checks whose name starts with `prefix`
    /// (1.0 when there are none).
    pub fn pass_fraction(&self, prefix: &str) -> f64 {
        let (n, ok) = self
            .checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .fold((0usize, 0usize), |(n, ok), c| (n + 1, ok + c.passed as usize));
        if n == 0 {
            1.0
        } else {
            ok as f64 / n as f64
        }
    }

    pub fn count(&self, prefix: &str) -> usize {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).count()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.failures().count();
        writeln!(f, "{}: {} checks, {} failed", self.title, self.checks.len(), failed)?;
        for c in &self.checks {
            write!(
                f,
                "  [{}] {}: {:.4e} (threshold {:.4e})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.statistic,
                c.threshold
            )?;
            if let Some(d) = &c.detail {
                write!(f, " {d}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
