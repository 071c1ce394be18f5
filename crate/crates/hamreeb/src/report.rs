use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `residual ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), residual, tolerance, passed: residual <= tolerance }
    }

    /// Passes when `residual ≥ tolerance`; for checks that something is far from a value.
    pub fn at_least(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), residual, tolerance, passed: residual >= tolerance }
    }

    /// A yes/no outcome, with residual 0 on success and 1 on failure.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), residual: if ok { 0.0 } else { 1.0 }, tolerance: 0.0, passed: ok }
    }

    pub fn failed(name: impl Into<String>, why: &str) -> Self {
        let mut c = Check::holds(format!("{}: {why}", name.into()), false);
        c.residual = f64::NAN;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Command-specific output.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub results: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            inputs: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
            results: Value::Null,
            artifacts: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.into(), value.into());
        self
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.passed &= c.passed;
        self.checks.push(c);
        self
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) -> &mut Self {
        for c in checks {
            self.check(c);
        }
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Checks as CSV: `name,residual,tolerance,passed`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "residual", "tolerance", "passed"]).expect("in-memory write");
        for c in &self.checks {
            w.write_record([c.name.clone(), crate::io::fmt_f64(c.residual), crate::io::fmt_f64(c.tolerance), c.passed.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_and_schema() {
        let mut r = Report::new("demo");
        r.input("seed", 0).check(Check::at_most("a", 1e-9, 1e-6)).check(Check::at_least("b", 0.2, 0.5));
        assert!(!r.passed);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["command"], "demo");
        assert_eq!(v["checks"][1]["passed"], false);
        assert!(v.get("results").is_none());
        assert!(r.to_csv().starts_with("name,residual,tolerance,passed\na,1.0000000000000001e-9,"));
    }
}
