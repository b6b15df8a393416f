//! Tabular verdicts for inequalities evaluated over parameter grids.

use std::fmt;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Row excluded from the verdict (for example a near-threshold coupling).
    Skip,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub params: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

/// Left and right sides of a named inequality over a parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub bound: String,
    pub param_names: Vec<String>,
    pub rows: Vec<BoundRow>,
    /// Empirical constant where the inequality's constant is not explicit.
    pub fitted_constant: Option<f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(bound: impl Into<String>, param_names: &[&str]) -> Self {
        BoundReport {
            bound: bound.into(),
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            fitted_constant: None,
            notes: Vec::new(),
        }
    }

    /// Adds a row whose verdict is `lhs <= rhs + tol`; margin is `rhs - lhs`.
    pub fn push_le(&mut self, params: Vec<f64>, lhs: f64, rhs: f64, tol: f64) {
        let verdict = if lhs <= rhs + tol { Verdict::Pass } else { Verdict::Fail };
        self.push(params, lhs, rhs, rhs - lhs, verdict);
    }

    pub fn push(&mut self, params: Vec<f64>, lhs: f64, rhs: f64, margin: f64, verdict: Verdict) {
        assert_eq!(params.len(), self.param_names.len(), "parameter arity");
        self.rows.push(BoundRow {
            params,
            lhs,
            rhs,
            margin,
            verdict,
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail).count()
    }

    pub fn skipped(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == Verdict::Skip).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn verdict(&self) -> Verdict {
        if self.passed() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Smallest margin over non-skipped rows.
    pub fn min_margin(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.verdict != Verdict::Skip)
            .map(|r| r.margin)
            .reduce(f64::min)
    }

    /// `bound,<params>,lhs,rhs,margin,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header = vec!["bound".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.extend(["lhs", "rhs", "margin", "verdict"].map(String::from));
        let _ = writeln!(out, "{}", header.join(","));
        for r in &self.rows {
            let mut fields = vec![self.bound.clone()];
            fields.extend(r.params.iter().map(|p| fmt_num(*p)));
            fields.extend([fmt_num(r.lhs), fmt_num(r.rhs), fmt_num(r.margin), r.verdict.to_string()]);
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    /// Human-readable summary with the overall verdict.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} ({} rows, {} failed, {} skipped)",
            self.bound,
            self.verdict(),
            self.rows.len(),
            self.failures(),
            self.skipped()
        );
        if let Some(m) = self.min_margin() {
            let _ = write!(s, "; min margin {m:.6e}");
        }
        if let Some(c) = self.fitted_constant {
            let _ = write!(s, "; fitted constant {c:.6e}");
        }
        for n in &self.notes {
            let _ = write!(s, "\n  {n}");
        }
        s
    }
}

/// Shortest round-trip representation; integers print without a fraction.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() && x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_verdicts() {
        let mut r = BoundReport::new("demo", &["s"]);
        r.push_le(vec![0.5], 1.0, 2.0, 0.0);
        r.push_le(vec![0.25], 3.0, 2.0, 0.0);
        r.push(vec![1.0], 0.0, 0.0, 0.0, Verdict::Skip);
        assert_eq!(r.failures(), 1);
        assert_eq!(r.skipped(), 1);
        assert!(!r.passed());
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "bound,s,lhs,rhs,margin,verdict");
        assert_eq!(lines[1], "demo,5e-1,1,2,1,PASS");
        assert_eq!(lines[2], "demo,2.5e-1,3,2,-1,FAIL");
        assert_eq!(r.min_margin(), Some(-1.0));
        assert!(r.summary().starts_with("demo: FAIL"));
    }
}
