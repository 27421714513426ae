//! Verification records shared by the identity checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    ReportOnly,
}

/// Two sides of an identity with their truncation tails. Passes iff
/// |lhs − rhs| ≤ tails[0] + tails[1] + tolerance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub gap: f64,
    pub relative_gap: f64,
    pub tails: [f64; 2],
    pub tolerance: f64,
    pub terms: [usize; 2],
    pub verdict: Verdict,
    pub truncation: serde_json::Value,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(
        check: &str,
        lhs: Complex64,
        rhs: Complex64,
        tails: [f64; 2],
        tolerance: f64,
        terms: [usize; 2],
        truncation: serde_json::Value,
    ) -> Self {
        let gap = (lhs - rhs).norm();
        let scale = lhs.norm().max(rhs.norm());
        let relative_gap = if scale > 0.0 { gap / scale } else { gap };
        let verdict = if gap <= tails[0] + tails[1] + tolerance { Verdict::Pass } else { Verdict::Fail };
        Self {
            check: check.to_string(),
            lhs,
            rhs,
            gap,
            relative_gap,
            tails,
            tolerance,
            terms,
            verdict,
            truncation,
            notes: Vec::new(),
        }
    }

    /// Same record with an externally measured gap (sup norms, residual tables).
    #[allow(clippy::too_many_arguments)]
    pub fn with_gap(
        check: &str,
        lhs: Complex64,
        rhs: Complex64,
        gap: f64,
        tails: [f64; 2],
        tolerance: f64,
        terms: [usize; 2],
        truncation: serde_json::Value,
    ) -> Self {
        let mut r = Self::new(check, lhs, rhs, tails, tolerance, terms, truncation);
        let scale = lhs.norm().max(rhs.norm());
        r.gap = gap;
        r.relative_gap = if scale > 0.0 { gap / scale } else { gap };
        r.verdict = if gap <= tails[0] + tails[1] + tolerance { Verdict::Pass } else { Verdict::Fail };
        r
    }

    pub fn report_only(mut self, note: &str) -> Self {
        self.verdict = Verdict::ReportOnly;
        self.notes.push(note.to_string());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}
