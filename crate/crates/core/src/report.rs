//! Pass/fail records shared by the exact and Monte Carlo checks.

/// One verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub check: String,
    /// Pivot step (0-based), when the check has one.
    pub k: Option<usize>,
    /// Coordinate (0-based), when the check has one.
    pub j: Option<usize>,
    pub observed: f64,
    pub bound: f64,
    /// `bound − observed` after any allowed tolerance; negative on failure.
    pub slack: f64,
    pub pass: bool,
}

impl VerificationRecord {
    /// `observed <= bound + tol`.
    pub fn upper(check: impl Into<String>, k: Option<usize>, j: Option<usize>, observed: f64, bound: f64, tol: f64) -> Self {
        let slack = bound + tol - observed;
        Self {
            check: check.into(),
            k,
            j,
            observed,
            bound,
            slack,
            pass: slack >= 0.0,
        }
    }

    /// `|observed − expected| <= tol`.
    pub fn close(check: impl Into<String>, k: Option<usize>, j: Option<usize>, observed: f64, expected: f64, tol: f64) -> Self {
        let slack = tol - (observed - expected).abs();
        Self {
            check: check.into(),
            k,
            j,
            observed,
            bound: expected,
            slack,
            pass: slack >= 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub records: Vec<VerificationRecord>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: VerificationRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerificationRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    /// Smallest slack over all records (`+∞` when empty).
    pub fn worst_slack(&self) -> f64 {
        self.records.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min)
    }
}
