//! Verification reports: stored numbers plus the flags derived from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Le => value <= bound,
            Relation::Lt => value < bound,
            Relation::Ge => value >= bound,
            Relation::Gt => value > bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<=" => Relation::Le,
            "<" => Relation::Lt,
            ">=" => Relation::Ge,
            ">" => Relation::Gt,
            _ => return None,
        })
    }
}

/// One hypothesis proxy: `value relation bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation,
            bound,
            passed: relation.holds(value, bound),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.passed == self.relation.holds(self.value, self.bound)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRow {
    pub iteration: usize,
    pub rho: f64,
    pub eps: f64,
    pub delta_norm: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    Stagnated,
    MaxIterations,
    Halted,
    Checked,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Stagnated => "stagnated",
            Status::MaxIterations => "max_iterations",
            Status::Halted => "halted",
            Status::Checked => "checked",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub title: String,
    pub status: Status,
    pub residual: f64,
    pub residual_rho: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub twist: f64,
    pub empirical_nu: f64,
    pub min_divisor: f64,
    pub truncation_loss: f64,
    pub iterations: Vec<IterationRow>,
    pub values: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            status: Status::Checked,
            residual: f64::NAN,
            residual_rho: f64::NAN,
            n_plus: f64::NAN,
            n_minus: f64::NAN,
            twist: f64::NAN,
            empirical_nu: f64::NAN,
            min_divisor: f64::NAN,
            truncation_loss: 0.0,
            iterations: Vec::new(),
            values: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn push_value(&mut self, name: impl Into<String>, v: f64) {
        self.values.push((name.into(), v));
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Every flag agrees with the numbers stored next to it.
    pub fn is_consistent(&self) -> bool {
        self.checks.iter().all(Check::is_consistent)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        writeln!(out, "{}", "=".repeat(self.title.len().max(8))).unwrap();
        let rows: Vec<(String, String)> = self
            .scalar_fields()
            .into_iter()
            .map(|(k, v)| (k.to_string(), format!("{v:.6e}")))
            .chain(std::iter::once(("status".to_string(), self.status.as_str().to_string())))
            .chain(self.values.iter().map(|(k, v)| (k.clone(), format!("{v:.6e}"))))
            .collect();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            writeln!(out, "{k:<width$}  {v}").unwrap();
        }
        if !self.checks.is_empty() {
            writeln!(out).unwrap();
            writeln!(out, "checks").unwrap();
            let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &self.checks {
                writeln!(
                    out,
                    "  {:<w$}  {:>13.6e} {:>2} {:<13.6e}  {}",
                    c.name,
                    c.value,
                    c.relation.symbol(),
                    c.bound,
                    if c.passed { "PASS" } else { "FAIL" }
                )
                .unwrap();
            }
        }
        if !self.iterations.is_empty() {
            writeln!(out).unwrap();
            writeln!(out, "  iter  rho           eps           |Delta|       lambda").unwrap();
            for r in &self.iterations {
                writeln!(
                    out,
                    "  {:>4}  {:<12.6e}  {:<12.6e}  {:<12.6e}  {:.6e}",
                    r.iteration, r.rho, r.eps, r.delta_norm, r.lambda
                )
                .unwrap();
            }
        }
        out
    }

    fn scalar_fields(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("residual", self.residual),
            ("residual_rho", self.residual_rho),
            ("n_plus", self.n_plus),
            ("n_minus", self.n_minus),
            ("twist", self.twist),
            ("empirical_nu", self.empirical_nu),
            ("min_divisor", self.min_divisor),
            ("truncation_loss", self.truncation_loss),
        ]
    }

    /// `key=value` block; floats in round-trip form.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "title={}", self.title).unwrap();
        writeln!(out, "status={}", self.status.as_str()).unwrap();
        for (k, v) in self.scalar_fields() {
            writeln!(out, "{k}={v:?}").unwrap();
        }
        writeln!(out, "iterations={}", self.iterations.len()).unwrap();
        for (k, v) in &self.values {
            writeln!(out, "value.{k}={v:?}").unwrap();
        }
        for c in &self.checks {
            writeln!(out, "check.{}.value={:?}", c.name, c.value).unwrap();
            writeln!(out, "check.{}.relation={}", c.name, c.relation.symbol()).unwrap();
            writeln!(out, "check.{}.bound={:?}", c.name, c.bound).unwrap();
            writeln!(out, "check.{}.passed={}", c.name, c.passed).unwrap();
        }
        writeln!(out, "all_passed={}", self.all_passed()).unwrap();
        out
    }

    pub fn iterations_csv(&self) -> String {
        let mut out = String::from("iteration,rho,eps,delta_norm,lambda\n");
        for r in &self.iterations {
            writeln!(out, "{},{:?},{:?},{:?},{:?}", r.iteration, r.rho, r.eps, r.delta_norm, r.lambda).unwrap();
        }
        out
    }
}

pub fn parse_kv(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Re-derive every `check.*.passed` flag of a key=value report from its numbers.
pub fn kv_flags_consistent(map: &BTreeMap<String, String>) -> bool {
    let names: Vec<&str> = map
        .keys()
        .filter_map(|k| k.strip_prefix("check.")?.strip_suffix(".passed"))
        .collect();
    let all_ok = names.iter().all(|n| {
        let get = |f: &str| map.get(&format!("check.{n}.{f}"));
        let (Some(v), Some(r), Some(b), Some(p)) = (get("value"), get("relation"), get("bound"), get("passed")) else {
            return false;
        };
        let (Ok(v), Some(r), Ok(b), Ok(p)) = (v.parse::<f64>(), Relation::parse(r), b.parse::<f64>(), p.parse::<bool>()) else {
            return false;
        };
        r.holds(v, b) == p
    });
    let summary = map.get("all_passed").and_then(|s| s.parse::<bool>().ok());
    let derived = names.iter().all(|n| map.get(&format!("check.{n}.passed")).map(String::as_str) == Some("true"));
    all_ok && summary.is_none_or(|s| s == derived)
}
