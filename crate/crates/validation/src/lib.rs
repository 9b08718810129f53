//! Pass/fail bookkeeping for the end-to-end acceptance run.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

/// Collects one line per check and the wall time of each criterion.
#[derive(Debug, Default)]
pub struct Ledger {
    outcomes: Vec<Outcome>,
}

impl Ledger {
    pub fn check(&mut self, id: &str, pass: bool, detail: impl Into<String>) -> bool {
        let o = Outcome { id: id.to_string(), pass, detail: detail.into() };
        println!("{} {:<4} {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail);
        self.outcomes.push(o);
        pass
    }

    /// Records a check that could not be evaluated because a step failed.
    pub fn broken(&mut self, id: &str, err: impl std::fmt::Display) {
        self.check(id, false, format!("could not run: {err}"));
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.pass).count()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{} of {} checks passed", self.outcomes.len() - self.failures(), self.outcomes.len());
        let failed: Vec<&str> = self.outcomes.iter().filter(|o| !o.pass).map(|o| o.id.as_str()).collect();
        if !failed.is_empty() {
            let _ = write!(s, "; failed: {}", failed.join(", "));
        }
        s
    }
}

/// Runs `f` and returns its value with the elapsed time.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

/// `|a - b| / max(|b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_counts_failures() {
        let mut l = Ledger::default();
        l.check("1a", true, "ok");
        l.check("1b", false, "off");
        assert_eq!(l.failures(), 1);
        assert_eq!(l.summary(), "1 of 2 checks passed; failed: 1b");
    }

    #[test]
    fn relative_error_uses_floor() {
        assert_eq!(relative_error(1e-12, 0.0, 1.0), 1e-12);
        assert!((relative_error(1.02, 1.0, 1.0) - 0.02).abs() < 1e-12);
    }
}
