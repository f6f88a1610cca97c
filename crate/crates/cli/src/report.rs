use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: measured <= tolerance,
            measured,
            tolerance,
        }
    }

    /// A yes/no condition, reported as measured 0 (holds) or 1 (fails)
    /// against tolerance 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

/// Collects checks, keeping the worst measurement per name across trials.
#[derive(Debug, Default)]
pub struct Checks {
    by_name: BTreeMap<String, Check>,
}

impl Checks {
    pub fn push(&mut self, check: Check) {
        match self.by_name.get_mut(&check.name) {
            Some(prev) => {
                prev.pass &= check.pass;
                if check.measured > prev.measured || check.measured.is_nan() {
                    prev.measured = check.measured;
                }
            }
            None => {
                self.by_name.insert(check.name.clone(), check);
            }
        }
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn all_pass(&self) -> bool {
        self.by_name.values().all(|c| c.pass)
    }

    pub fn into_sorted(self) -> Vec<Check> {
        self.by_name.into_values().collect()
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub inputs: Value,
    pub checks: Vec<Check>,
    pub elapsed_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_keeps_the_worst_value_and_sorts() {
        let mut agg = Checks::default();
        agg.push(Check::at_most("b", 1e-12, 1e-8));
        agg.push(Check::at_most("a", 1e-3, 1e-8));
        agg.push(Check::at_most("b", 1e-10, 1e-8));
        assert!(!agg.all_pass());
        let sorted = agg.into_sorted();
        assert_eq!(sorted.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(sorted[1].measured, 1e-10);
        assert!(sorted[1].pass);
    }

    #[test]
    fn boolean_checks_respect_the_measured_bound() {
        let yes = Check::holds("x", true);
        let no = Check::holds("x", false);
        assert!(yes.pass && yes.measured <= yes.tolerance);
        assert!(!no.pass && no.measured > no.tolerance);
    }
}
