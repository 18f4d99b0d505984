use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{run_sweep, Evaluators, ScenarioConfig, ScenarioError, SweepRow, SweepVar};
use crate::absorption::{reference_deviation, Catalog, MediumConditions};
use crate::channel::User;
use crate::outage::Method;

/// Agreement tolerances used by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Analytic vs Monte Carlo: |a − mc| ≤ max(mc_floor, mc_sigmas·stderr).
    pub mc_floor: f64,
    pub mc_sigmas: f64,
    pub exact_vs_simplified: f64,
    /// Used instead of `exact_vs_simplified` when thermal noise is zero.
    pub exact_vs_simplified_noiseless: f64,
    pub lemma3_vs_mgf: f64,
    /// Relative k(f) deviation of the shipped catalog from the reference
    /// list; exceeding it warns.
    pub absorption_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mc_floor: 0.015,
            mc_sigmas: 4.0,
            exact_vs_simplified: 0.005,
            exact_vs_simplified_noiseless: 1e-6,
            lemma3_vs_mgf: 0.015,
            absorption_rel: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOutcome {
    Pass,
    Warn,
    Fail,
}

impl CheckOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckOutcome::Pass => "PASS",
            CheckOutcome::Warn => "WARN",
            CheckOutcome::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub outcome: CheckOutcome,
    /// Number of compared pairs.
    pub compared: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    /// Rows flagged not_converged or not_decayed.
    pub flagged_rows: usize,
    pub passed: bool,
}

impl ValidationReport {
    /// 0 pass, 2 failed check, 4 numeric flags without failed checks.
    pub fn exit_code(&self) -> i32 {
        if !self.passed {
            2
        } else if self.flagged_rows > 0 {
            4
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ =
            writeln!(s, "validation report: {}", if self.scenario.is_empty() { "(unnamed)" } else { &self.scenario });
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  {:<4} {:<44} n={:<5} max_dev={:.3e} tol={:.3e} {}",
                c.outcome.as_str(),
                c.name,
                c.compared,
                c.max_deviation,
                c.tolerance,
                c.detail
            );
        }
        if self.flagged_rows > 0 {
            let _ = writeln!(s, "  {} rows flagged not_converged/not_decayed", self.flagged_rows);
        }
        let _ = writeln!(s, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

type Key = (Option<u64>, String, User, crate::channel::Access);

fn key(r: &SweepRow) -> Key {
    (r.sweep_value.map(f64::to_bits), r.scheme.clone(), r.user, r.mode)
}

fn by_method(rows: &[SweepRow], method: Method) -> BTreeMap<Key, &SweepRow> {
    rows.iter().filter(|r| r.method == method && r.is_ok() && r.estimate.is_some()).map(|r| (key(r), r)).collect()
}

fn describe(k: &Key) -> String {
    let v = k.0.map_or(String::new(), |b| format!("{}=", f64::from_bits(b)));
    format!("{v}{} {} {}", k.1, k.2.as_str(), k.3.as_str())
}

/// Compares two methods on every row where both produced an estimate.
/// `allowed` returns the tolerance for a pair.
fn compare<F>(rows: &[SweepRow], name: String, a: Method, b: Method, allowed: F, tolerance: f64) -> Option<Check>
where
    F: Fn(&SweepRow, &SweepRow) -> f64,
{
    let left = by_method(rows, a);
    let right = by_method(rows, b);
    let mut compared = 0;
    let mut max_dev: f64 = 0.0;
    let mut failures = Vec::new();
    for (k, ra) in &left {
        let Some(rb) = right.get(k) else { continue };
        compared += 1;
        let dev = (ra.estimate.unwrap() - rb.estimate.unwrap()).abs();
        max_dev = max_dev.max(dev);
        let tol = allowed(ra, rb);
        if dev > tol {
            failures.push(format!("{} ({dev:.4} > {tol:.4})", describe(k)));
        }
    }
    if compared == 0 {
        return None;
    }
    let outcome = if failures.is_empty() { CheckOutcome::Pass } else { CheckOutcome::Fail };
    let detail = match failures.len() {
        0 => String::new(),
        n => format!("{n} failing, first: {}", failures[0]),
    };
    Some(Check { name, outcome, compared, max_deviation: max_dev, tolerance, detail })
}

/// Near-user outage must not increase with the carrier count.
fn carrier_monotonicity(rows: &[SweepRow], method: Method) -> Option<Check> {
    let mut series: BTreeMap<(String, crate::channel::Access), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.method == method && r.user == User::Near && r.is_ok()) {
        if let (Some(x), Some(e)) = (r.sweep_value, r.estimate) {
            series.entry((r.scheme.clone(), r.mode)).or_default().push((x, e));
        }
    }
    if series.is_empty() {
        return None;
    }
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut first = None;
    for ((scheme, mode), pts) in &series {
        for w in pts.windows(2) {
            compared += 1;
            let rise = w[1].1 - w[0].1;
            worst = worst.max(rise);
            if rise > 1e-9 && first.is_none() {
                first = Some(format!("{scheme} {}: N={} -> {}", mode.as_str(), w[0].0, w[1].0));
            }
        }
    }
    Some(Check {
        name: format!("near outage nonincreasing in N ({})", method.as_str()),
        outcome: if first.is_none() { CheckOutcome::Pass } else { CheckOutcome::Fail },
        compared,
        max_deviation: worst,
        tolerance: 1e-9,
        detail: first.unwrap_or_default(),
    })
}

/// Shipped catalog against the reference absorption list; warns rather
/// than fails.
pub fn absorption_check(tolerance: f64) -> Check {
    let dev = reference_deviation(&Catalog::table_preset(), &MediumConditions::default());
    let max = dev.iter().map(|d| d.2.abs()).fold(0.0, f64::max);
    let outcome = if max <= tolerance { CheckOutcome::Pass } else { CheckOutcome::Warn };
    let detail = dev.iter().map(|(f, k, _)| format!("{:.2}THz:{k:.4}", f / 1e12)).collect::<Vec<_>>().join(" ");
    Check {
        name: "absorption reproduction (relative)".into(),
        outcome,
        compared: dev.len(),
        max_deviation: max,
        tolerance,
        detail,
    }
}

/// Checks one set of sweep rows against the tolerances.
pub fn checks_for_rows(config: &ScenarioConfig, rows: &[SweepRow], tol: &Tolerances) -> Vec<Check> {
    let mut checks = Vec::new();
    for m in [Method::ExactIntegral, Method::Simplified, Method::Lemma3, Method::Mgf] {
        let allowed = |a: &SweepRow, b: &SweepRow| {
            let se = a.stderr.or(b.stderr).unwrap_or(0.0);
            tol.mc_floor.max(tol.mc_sigmas * se)
        };
        checks.extend(compare(
            rows,
            format!("{} vs montecarlo", m.as_str()),
            m,
            Method::MonteCarlo,
            allowed,
            tol.mc_floor,
        ));
    }
    let es_tol = if config.budget.noise_w == 0.0 { tol.exact_vs_simplified_noiseless } else { tol.exact_vs_simplified };
    checks.extend(compare(
        rows,
        "exact-integral vs simplified".into(),
        Method::ExactIntegral,
        Method::Simplified,
        |_, _| es_tol,
        es_tol,
    ));
    checks.extend(compare(
        rows,
        "lemma3 vs mgf".into(),
        Method::Lemma3,
        Method::Mgf,
        |_, _| tol.lemma3_vs_mgf,
        tol.lemma3_vs_mgf,
    ));
    if config.sweep.as_ref().is_some_and(|s| s.variable == SweepVar::Subcarriers) {
        for m in [Method::Lemma3, Method::Mgf] {
            checks.extend(carrier_monotonicity(rows, m));
        }
    }
    checks
}

/// Runs the scenario and every analytic/Monte Carlo and cross-method
/// comparison it supports.
pub fn validate(
    config: &ScenarioConfig,
    eval: &Evaluators,
) -> Result<(ValidationReport, Vec<SweepRow>), ScenarioError> {
    let rows = run_sweep(config, eval)?;
    let tol = &config.tolerances;
    let mut checks = checks_for_rows(config, &rows, tol);
    checks.push(absorption_check(tol.absorption_rel));
    let flagged_rows = rows.iter().filter(|r| r.is_numeric_flag()).count();
    let passed = checks.iter().all(|c| c.outcome != CheckOutcome::Fail);
    Ok((ValidationReport { scenario: config.name.clone(), checks, flagged_rows, passed }, rows))
}
