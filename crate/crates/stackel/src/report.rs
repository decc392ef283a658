//! Check outcomes.

use std::collections::BTreeMap;

use serde::Serialize;

/// Outcome classification of a check.
///
/// `Pass`/`Fail` report whether the tested conditions hold. The remaining
/// variants are classifications a check can legitimately produce without the
/// system being wrong: a nonregular check finding an ordinary Stäckel system
/// reports `Regular`, the two-dimensional factorization test reports
/// `Factorizable`/`Nonfactorizable`, a side condition with no real momenta
/// reports `Obstructed`, and a check that does not apply to the given system
/// reports `NotApplicable`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Degenerate,
    Regular,
    Factorizable,
    Nonfactorizable,
    Obstructed,
    NotApplicable,
}

impl Verdict {
    /// Only `Fail` means a tested condition was violated.
    pub fn is_failure(self) -> bool {
        matches!(self, Verdict::Fail)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Degenerate => "degenerate",
            Verdict::Regular => "regular",
            Verdict::Factorizable => "factorizable",
            Verdict::Nonfactorizable => "nonfactorizable",
            Verdict::Obstructed => "obstructed",
            Verdict::NotApplicable => "not_applicable",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "pass" => Verdict::Pass,
            "fail" => Verdict::Fail,
            "degenerate" => Verdict::Degenerate,
            "regular" => Verdict::Regular,
            "factorizable" => Verdict::Factorizable,
            "nonfactorizable" => Verdict::Nonfactorizable,
            "obstructed" => Verdict::Obstructed,
            "not_applicable" => Verdict::NotApplicable,
            other => return Err(format!("unknown verdict '{}'", other)),
        })
    }
}

/// Result of one check over a set of sample points.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    /// Stable identifier of the check, e.g. `"nonregular.side_ratio"`.
    pub name: String,
    pub verdict: Verdict,
    /// Tolerance the residuals were held against.
    pub tolerance: f64,
    /// Number of sample points that contributed.
    pub samples: usize,
    /// Largest scaled residual seen.
    pub max_residual: f64,
    /// Per-sample fitted multiplier values, keyed by multiplier name.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub multipliers: BTreeMap<String, Vec<f64>>,
    /// Human-readable remarks: conventions applied, degeneracies skipped,
    /// classifications made.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    /// A report whose verdict is `Pass` iff `max_residual <= tolerance`.
    pub fn from_residual(name: impl Into<String>, tolerance: f64, samples: usize, max_residual: f64) -> Self {
        CheckReport {
            name: name.into(),
            verdict: if max_residual <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            tolerance,
            samples,
            max_residual,
            multipliers: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn multiplier(mut self, key: impl Into<String>, values: Vec<f64>) -> Self {
        self.multipliers.insert(key.into(), values);
        self
    }

    pub fn is_failure(&self) -> bool {
        self.verdict.is_failure()
    }
}

/// Track the maximum of scaled residuals.
#[derive(Debug, Clone, Copy, Default)]
pub struct ResidualMax(pub f64);

impl ResidualMax {
    pub fn push(&mut self, r: f64) {
        if r > self.0 {
            self.0 = r;
        }
    }
    pub fn get(self) -> f64 {
        self.0
    }
}
