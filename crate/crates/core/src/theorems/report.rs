use std::fmt::{self, Write as _};

use serde_json::{json, Map, Value};

use super::CheckId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    /// Quadrature and closed forms only.
    Deterministic,
    /// Monte Carlo with `3σ` slack.
    Statistical,
}

impl Tier {
    pub fn tag(self) -> &'static str {
        match self {
            Tier::Deterministic => "deterministic",
            Tier::Statistical => "statistical",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "==",
            Relation::Ge => ">=",
        }
    }

    /// Whether `lhs rel rhs` holds up to `tol`. An inequality with `-inf` on
    /// the small side holds; `-inf` on the large side fails unless both are.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        if lhs.is_nan() || rhs.is_nan() {
            return false;
        }
        let ninf = f64::NEG_INFINITY;
        match self {
            Relation::Le if lhs == ninf => true,
            Relation::Ge if rhs == ninf => true,
            Relation::Le | Relation::Ge if lhs == ninf || rhs == ninf => false,
            Relation::Eq if lhs == ninf || rhs == ninf => lhs == rhs,
            Relation::Le => lhs - rhs <= tol,
            Relation::Ge => rhs - lhs <= tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }

    /// How far the relation is from failing; larger is worse.
    pub(crate) fn excess(self, lhs: f64, rhs: f64, tol: f64) -> f64 {
        if self.holds(lhs, rhs, tol) && (lhs == f64::NEG_INFINITY || rhs == f64::NEG_INFINITY) {
            return f64::NEG_INFINITY;
        }
        if !self.holds(lhs, rhs, tol) && !(lhs - rhs).is_finite() {
            return f64::INFINITY;
        }
        let d = lhs - rhs;
        match self {
            Relation::Le => d - tol,
            Relation::Ge => -d - tol,
            Relation::Eq => d.abs() - tol,
        }
    }
}

/// A small numeric table (per-`k` rows and similar).
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub id: CheckId,
    pub tier: Tier,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub tolerance: f64,
    /// Combined standard error at the reported point (0 for exact checks).
    pub sigma: f64,
    pub pass: bool,
    pub seed: u64,
    pub values: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub table: Option<Table>,
}

impl CheckReport {
    pub(crate) fn new(id: CheckId, lhs: f64, rhs: f64, relation: Relation, tolerance: f64) -> Self {
        Self {
            id,
            tier: id.tier(),
            lhs,
            rhs,
            relation,
            tolerance,
            sigma: 0.0,
            pass: relation.holds(lhs, rhs, tolerance),
            seed: 0,
            values: Vec::new(),
            notes: Vec::new(),
            table: None,
        }
    }

    pub(crate) fn value(mut self, name: &str, v: f64) -> Self {
        self.values.push((name.into(), v));
        self
    }

    pub(crate) fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn to_json(&self) -> Value {
        let values: Map<String, Value> = self.values.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        let table = self.table.as_ref().map(|t| {
            json!({
                "columns": t.columns,
                "rows": t.rows.iter().map(|r| r.iter().map(|&x| num(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            })
        });
        json!({
            "id": self.id.tag(),
            "tier": self.tier.tag(),
            "lhs": num(self.lhs),
            "rhs": num(self.rhs),
            "relation": self.relation.symbol(),
            "tolerance": num(self.tolerance),
            "sigma": num(self.sigma),
            "pass": self.pass,
            "seed": self.seed,
            "values": values,
            "notes": self.notes,
            "table": table,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} [{}] {}: lhs = {} {} rhs = {} (tolerance {}, sigma {}, seed {})",
            self.id,
            self.tier.tag(),
            if self.pass { "PASS" } else { "FAIL" },
            fmt_num(self.lhs),
            self.relation.symbol(),
            fmt_num(self.rhs),
            fmt_num(self.tolerance),
            fmt_num(self.sigma),
            self.seed
        );
        for (k, v) in &self.values {
            let _ = writeln!(s, "  {k} = {}", fmt_num(*v));
        }
        if let Some(t) = &self.table {
            let _ = writeln!(s, "  {}", t.columns.join("\t"));
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(|&x| fmt_num(x)).collect();
                let _ = writeln!(s, "  {}", cells.join("\t"));
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        s
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// JSON number, with non-finite values as the strings `inf`, `-inf`, `nan`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_num(x))
    }
}

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NINF: f64 = f64::NEG_INFINITY;

    #[test]
    fn infinite_sides() {
        assert!(Relation::Le.holds(NINF, 1.0, 0.0));
        assert!(!Relation::Le.holds(1.0, NINF, 10.0));
        assert!(Relation::Ge.holds(1.0, NINF, 0.0));
        assert!(!Relation::Ge.holds(NINF, 1.0, 10.0));
        assert!(Relation::Eq.holds(NINF, NINF, 0.0));
        assert!(!Relation::Eq.holds(NINF, 0.0, 1e9));
        assert!(Relation::Le.holds(NINF, NINF, 0.0));
        assert!(!Relation::Le.holds(f64::NAN, 0.0, 1.0));
    }

    #[test]
    fn json_renders_infinities_as_strings() {
        let r = CheckReport::new(CheckId::Chain, NINF, 0.5, Relation::Le, 0.1).value("x", f64::INFINITY);
        let v = r.to_json();
        assert_eq!(v["lhs"], "-inf");
        assert_eq!(v["values"]["x"], "inf");
        assert_eq!(v["pass"], true);
        assert!(r.to_text().contains("T-CHAIN [statistical] PASS"));
    }

    proptest! {
        #[test]
        fn pass_iff_relation_within_tolerance(lhs in -5.0f64..5.0, rhs in -5.0f64..5.0, tol in 0.0f64..2.0) {
            prop_assert_eq!(Relation::Le.holds(lhs, rhs, tol), lhs - rhs <= tol);
            prop_assert_eq!(Relation::Ge.holds(lhs, rhs, tol), rhs - lhs <= tol);
            prop_assert_eq!(Relation::Eq.holds(lhs, rhs, tol), (lhs - rhs).abs() <= tol);
            for rel in [Relation::Le, Relation::Ge, Relation::Eq] {
                prop_assert_eq!(rel.holds(lhs, rhs, tol), rel.excess(lhs, rhs, tol) <= 0.0);
            }
        }
    }
}
