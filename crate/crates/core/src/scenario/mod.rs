//! Scenario documents, parameter sweeps and validation reports driven by the
//! command-line tool.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "name": "example",
//!   "radius_m": 60.0,
//!   "absorption_per_m": 0.05,
//!   "a1": 0.33,
//!   "tau1": 3.0,
//!   "tau2": 0.5,
//!   "budget": { "transmit_power_w": 1.0, "tx_gain_db": 20.0, "rx_gain_db": 20.0, "noise_w": 1e-21 },
//!   "fading": { "shape": 2.0, "power": 1.0 },
//!   "schemes": [{ "kind": "random" }, { "kind": "proposed" }],
//!   "methods": ["exact-integral", "simplified", "montecarlo"],
//!   "trials": 100000,
//!   "seed": 1,
//!   "sweep": { "variable": "k", "grid": [0.01, 0.05, 0.1] }
//! }
//! ```
//!
//! Omitted fields take the defaults of [`ScenarioConfig`]. Supplying
//! `subcarriers` (or `n_subcarriers`, or sweeping `N_subcarriers`) switches
//! to the multi-carrier link, where `absorption_per_m` is unused.

mod report;

pub use report::{absorption_check, checks_for_rows, validate, Check, CheckOutcome, Tolerances, ValidationReport};

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Access, ChannelError, FadingModel, LinkBudget, PowerSplit, Subcarrier, SubcarrierPlan, User};
use crate::montecarlo::{estimate_outage_mc_all, McError, Targets, TrialConfig};
use crate::outage::{
    multicarrier_outage_lemma3, multicarrier_outage_mgf, outage_exact_single, outage_simplified_single, EstimateStatus,
    ExactSpec, Method, MgfSpec, OutageError, OutageEstimate, OutageQuery,
};
use crate::pairing::{distance_laws, multicarrier_thresholds, PairingError, PairingScheme, Scheme, Thresholds};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("config: {0}")]
    Config(String),
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(String),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Config(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub transmit_power_w: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub noise_w: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { transmit_power_w: 1.0, tx_gain_db: 20.0, rx_gain_db: 20.0, noise_w: 1e-21 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "k")]
    Absorption,
    #[serde(rename = "a1")]
    PowerSplit,
    #[serde(rename = "N_subcarriers")]
    Subcarriers,
    #[serde(rename = "tau1")]
    NearTarget,
    #[serde(rename = "tau2")]
    FarTarget,
    #[serde(rename = "R")]
    Radius,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Absorption => "k",
            SweepVar::PowerSplit => "a1",
            SweepVar::Subcarriers => "N_subcarriers",
            SweepVar::NearTarget => "tau1",
            SweepVar::FarTarget => "tau2",
            SweepVar::Radius => "R",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVar,
    pub grid: Vec<f64>,
}

fn default_carrier() -> f64 {
    1e12
}
fn default_users() -> Vec<User> {
    User::ALL.to_vec()
}
fn default_modes() -> Vec<Access> {
    Access::ALL.to_vec()
}
fn default_trials() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub radius_m: f64,
    /// Absorption coefficient of the single-carrier link (1/m).
    #[serde(default)]
    pub absorption_per_m: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    pub a1: f64,
    pub tau1: f64,
    pub tau2: f64,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub fading: FadingModel,
    pub schemes: Vec<Scheme>,
    /// Multi-carrier plan; defaults to the six reference carriers when only
    /// a carrier count is given.
    #[serde(default)]
    pub subcarriers: Option<Vec<Subcarrier>>,
    /// Number of leading carriers in use.
    #[serde(default)]
    pub n_subcarriers: Option<usize>,
    #[serde(default = "default_users")]
    pub users: Vec<User>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Access>,
    /// Defaults to exact-integral, simplified and montecarlo for a single
    /// carrier, lemma3, mgf and montecarlo otherwise.
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Reject threshold-scheme pairs with d1 ≥ d2 in Monte Carlo.
    #[serde(default)]
    pub ordered_pairs: bool,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Parameters of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub sweep: Option<(SweepVar, f64)>,
    pub radius: f64,
    pub k: f64,
    pub a1: f64,
    pub targets: Targets,
    pub plan: Option<SubcarrierPlan>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn multicarrier(&self) -> bool {
        self.subcarriers.is_some()
            || self.n_subcarriers.is_some()
            || self.sweep.as_ref().is_some_and(|s| s.variable == SweepVar::Subcarriers)
    }

    fn full_plan(&self) -> Result<SubcarrierPlan, ScenarioError> {
        match &self.subcarriers {
            Some(c) => SubcarrierPlan::new(c.clone()).map_err(|e| ScenarioError::Config(e.to_string())),
            None => Ok(SubcarrierPlan::reference()),
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        if !self.methods.is_empty() {
            self.methods.clone()
        } else if self.multicarrier() {
            vec![Method::Lemma3, Method::Mgf, Method::MonteCarlo]
        } else {
            vec![Method::ExactIntegral, Method::Simplified, Method::MonteCarlo]
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schemes.is_empty() {
            return config_err("at least one pairing scheme is required");
        }
        if self.users.is_empty() || self.modes.is_empty() {
            return config_err("users and modes must be nonempty");
        }
        if self.trials == 0 && self.methods().contains(&Method::MonteCarlo) {
            return config_err("trials must be at least 1");
        }
        let multi = self.multicarrier();
        if multi && self.methods().iter().any(|m| matches!(m, Method::ExactIntegral | Method::Simplified)) {
            return config_err("exact-integral and simplified apply to a single carrier only");
        }
        if let Some(s) = &self.sweep {
            if s.grid.is_empty() {
                return config_err("sweep grid must be nonempty");
            }
            if s.grid.windows(2).any(|w| !(w[0] < w[1])) {
                return config_err("sweep grid must be strictly increasing");
            }
            if s.variable == SweepVar::Absorption && multi {
                return config_err("sweeping k needs a single-carrier scenario");
            }
        }
        for p in self.points()? {
            self.check_point(&p)?;
        }
        Ok(())
    }

    fn check_point(&self, p: &Point) -> Result<(), ScenarioError> {
        let ctx = |e: String| {
            ScenarioError::Config(match p.sweep {
                Some((v, x)) => format!("{} = {x}: {e}", v.as_str()),
                None => e,
            })
        };
        PowerSplit::new(p.a1).map_err(|e| ctx(e.to_string()))?;
        OutageQuery::new(User::Near, Access::Noma, p.targets.near).map_err(|e| ctx(e.to_string()))?;
        OutageQuery::new(User::Far, Access::Noma, p.targets.far).map_err(|e| ctx(e.to_string()))?;
        self.budget(p).map_err(|e| ctx(e.to_string()))?;
        self.fading.validate().map_err(|e| ctx(e.to_string()))?;
        for s in &self.schemes {
            PairingScheme::new(*s, p.radius).map_err(|e| ctx(e.to_string()))?;
        }
        if p.plan.is_none() && !(p.k > 0.0 && p.k.is_finite()) {
            return Err(ctx(format!("absorption coefficient must be positive, got {}", p.k)));
        }
        Ok(())
    }

    /// Grid points in sweep order, or the single base point.
    pub fn points(&self) -> Result<Vec<Point>, ScenarioError> {
        let base = |sweep| -> Result<Point, ScenarioError> {
            let plan = if self.multicarrier() {
                let full = self.full_plan()?;
                let n = self.n_subcarriers.unwrap_or(full.len());
                Some(full.prefix(n).map_err(|e| ScenarioError::Config(e.to_string()))?)
            } else {
                None
            };
            Ok(Point {
                sweep,
                radius: self.radius_m,
                k: self.absorption_per_m,
                a1: self.a1,
                targets: Targets { near: self.tau1, far: self.tau2 },
                plan,
            })
        };
        let Some(sweep) = &self.sweep else { return Ok(vec![base(None)?]) };
        sweep
            .grid
            .iter()
            .map(|&x| {
                let mut p = base(Some((sweep.variable, x)))?;
                match sweep.variable {
                    SweepVar::Absorption => p.k = x,
                    SweepVar::PowerSplit => p.a1 = x,
                    SweepVar::NearTarget => p.targets.near = x,
                    SweepVar::FarTarget => p.targets.far = x,
                    SweepVar::Radius => p.radius = x,
                    SweepVar::Subcarriers => {
                        if x.fract() != 0.0 || x < 1.0 {
                            return config_err(format!("N_subcarriers grid values must be positive integers, got {x}"));
                        }
                        let plan =
                            self.full_plan()?.prefix(x as usize).map_err(|e| ScenarioError::Config(e.to_string()))?;
                        p.plan = Some(plan);
                    }
                }
                Ok(p)
            })
            .collect()
    }

    /// Link budget at a point; for a multi-carrier point the carrier fields
    /// hold the first subcarrier and per-carrier budgets are derived from it.
    pub fn budget(&self, p: &Point) -> Result<LinkBudget, ChannelError> {
        let b = &self.budget;
        let (f, k) = match &p.plan {
            Some(plan) => (plan.carriers()[0].frequency_hz, plan.carriers()[0].absorption_per_m),
            None => (self.carrier_hz, p.k),
        };
        LinkBudget::from_db_gains(b.transmit_power_w, b.tx_gain_db, b.rx_gain_db, b.noise_w, f, k)
    }
}

impl Point {
    /// The subcarrier plan, with a single-carrier link as a one-carrier plan.
    pub fn effective_plan(&self, carrier_hz: f64) -> Result<SubcarrierPlan, ChannelError> {
        match &self.plan {
            Some(p) => Ok(p.clone()),
            None => SubcarrierPlan::new(vec![Subcarrier { frequency_hz: carrier_hz, absorption_per_m: self.k }]),
        }
    }

    pub fn thresholds(&self) -> Result<Thresholds, PairingError> {
        match &self.plan {
            Some(plan) => multicarrier_thresholds(self.a1, &plan.absorption()),
            None => Thresholds::single(self.a1, self.k),
        }
    }
}

/// Row status beyond the estimator flags.
pub const STATUS_INFEASIBLE: &str = "infeasible";
pub const STATUS_ERROR: &str = "error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: String,
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub user: User,
    pub mode: Access,
    pub method: Method,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == EstimateStatus::Ok.as_str()
    }

    /// Numeric flags (not converged, not decayed) as opposed to infeasible
    /// or failed rows.
    pub fn is_numeric_flag(&self) -> bool {
        self.status == EstimateStatus::NotConverged.as_str() || self.status == EstimateStatus::NotDecayed.as_str()
    }
}

pub const CSV_COLUMNS: [&str; 9] =
    ["sweep_var", "sweep_value", "scheme", "user", "mode", "method", "estimate", "stderr", "status"];

/// Scheme label used in output: the kind, with the user count where one
/// applies.
pub fn scheme_label(s: &Scheme) -> String {
    match s {
        Scheme::Random | Scheme::Proposed => s.name().to_string(),
        Scheme::NearestFarthest { users } => format!("{}_{users}", s.name()),
        Scheme::Enhanced { users, truncate_near } => {
            format!("{}_{users}{}", s.name(), if *truncate_near { "_truncated" } else { "" })
        }
    }
}

/// Evaluator settings shared by all grid points.
#[derive(Debug, Clone, Copy, Default)]
pub struct Evaluators {
    pub exact: ExactSpec,
    pub mgf: MgfSpec,
}

struct RowKey<'a> {
    point: &'a Point,
    scheme: &'a Scheme,
    user: User,
    mode: Access,
}

impl RowKey<'_> {
    fn row(&self, method: Method, estimate: Option<f64>, stderr: Option<f64>, status: &str) -> SweepRow {
        SweepRow {
            sweep_var: self.point.sweep.map_or(String::new(), |(v, _)| v.as_str().to_string()),
            sweep_value: self.point.sweep.map(|(_, x)| x),
            scheme: scheme_label(self.scheme),
            user: self.user,
            mode: self.mode,
            method,
            estimate,
            stderr,
            status: status.to_string(),
        }
    }

    fn analytic(&self, method: Method, result: Result<OutageEstimate, OutageError>) -> SweepRow {
        match result {
            Ok(e) => self.row(method, Some(e.probability), None, e.status.as_str()),
            Err(e) => {
                log::warn!(
                    "{} {} {} {}: {e}",
                    scheme_label(self.scheme),
                    self.user.as_str(),
                    self.mode.as_str(),
                    method.as_str()
                );
                self.row(method, None, None, STATUS_ERROR)
            }
        }
    }
}

/// Rows for one (point, scheme) in (user, mode, method) order.
fn evaluate_scheme(
    config: &ScenarioConfig,
    point: &Point,
    scheme: &Scheme,
    methods: &[Method],
    eval: &Evaluators,
) -> Result<Vec<SweepRow>, ScenarioError> {
    let pairing = PairingScheme::new(*scheme, point.radius).map_err(|e| ScenarioError::Config(e.to_string()))?;
    let budget = config.budget(point).map_err(|e| ScenarioError::Config(e.to_string()))?;
    let split = PowerSplit::new(point.a1).map_err(|e| ScenarioError::Config(e.to_string()))?;
    let plan = point.effective_plan(config.carrier_hz).map_err(|e| ScenarioError::Config(e.to_string()))?;
    let thresholds = point.thresholds().ok();
    let laws = distance_laws(&pairing, thresholds.as_ref());

    let mc = if methods.contains(&Method::MonteCarlo) && laws.is_ok() {
        let trial = TrialConfig {
            trials: config.trials,
            seed: config.seed,
            scheme: pairing,
            thresholds,
            budget,
            split,
            fading: config.fading,
            plan: point.plan.clone(),
            targets: point.targets,
            ordered: config.ordered_pairs,
        };
        Some(estimate_outage_mc_all(&trial))
    } else {
        None
    };

    let mut rows = Vec::new();
    for &user in &config.users {
        for &mode in &config.modes {
            let key = RowKey { point, scheme, user, mode };
            let (near, far) = match &laws {
                Ok(l) => l,
                Err(e) => {
                    log::warn!("{}: {e}", scheme_label(scheme));
                    let status =
                        if matches!(e, PairingError::EmptyFarRegion { .. }) { STATUS_INFEASIBLE } else { STATUS_ERROR };
                    rows.extend(methods.iter().map(|&m| key.row(m, None, None, status)));
                    continue;
                }
            };
            let law = if user == User::Near { near } else { far };
            let query = OutageQuery::new(user, mode, point.targets.of(user))
                .map_err(|e| ScenarioError::Config(e.to_string()))?;
            for &method in methods {
                let row = match method {
                    Method::ExactIntegral => key.analytic(
                        method,
                        outage_exact_single(&query, &budget, split, &config.fading, law, &eval.exact),
                    ),
                    Method::Simplified => key.analytic(method, outage_simplified_single(&query, split, point.k, law)),
                    Method::Lemma3 => key.analytic(method, multicarrier_outage_lemma3(&query, split, &plan, law)),
                    Method::Mgf => key.analytic(
                        method,
                        multicarrier_outage_mgf(&query, split, &plan, law, &budget, &config.fading, &eval.mgf),
                    ),
                    Method::MonteCarlo => match mc.as_ref().expect("montecarlo requested") {
                        Ok(table) => {
                            let u = User::ALL.iter().position(|&x| x == user).unwrap();
                            let a = Access::ALL.iter().position(|&x| x == mode).unwrap();
                            let e = table[u][a];
                            key.row(method, Some(e.mean), Some(e.std_error), EstimateStatus::Ok.as_str())
                        }
                        Err(e) => {
                            log::warn!("montecarlo {}: {e}", scheme_label(scheme));
                            let status = match e {
                                McError::Pairing(PairingError::EmptyFarRegion { .. }) => STATUS_INFEASIBLE,
                                _ => STATUS_ERROR,
                            };
                            key.row(method, None, None, status)
                        }
                    },
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Evaluates every (grid point × scheme × user × mode × method). Grid
/// points run concurrently; rows come back in grid order.
pub fn run_sweep(config: &ScenarioConfig, eval: &Evaluators) -> Result<Vec<SweepRow>, ScenarioError> {
    config.validate()?;
    let methods = config.methods();
    let points = config.points()?;
    let jobs: Vec<(&Point, &Scheme)> = points.iter().flat_map(|p| config.schemes.iter().map(move |s| (p, s))).collect();
    let chunks: Vec<Vec<SweepRow>> =
        jobs.par_iter().map(|(p, s)| evaluate_scheme(config, p, s, &methods, eval)).collect::<Result<_, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v}"))
}

/// CSV with the fixed column set; empty optional fields stay blank.
pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.sweep_var.clone(),
            fmt_opt(r.sweep_value),
            r.scheme.clone(),
            r.user.as_str().to_string(),
            r.mode.as_str().to_string(),
            r.method.as_str().to_string(),
            fmt_opt(r.estimate),
            fmt_opt(r.stderr),
            r.status.clone(),
        ])?;
    }
    w.flush().map_err(|e| ScenarioError::Io(e.to_string()))?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String, ScenarioError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

/// Shipped experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Outage against absorption coefficient.
    Fig2,
    /// Outage against power split.
    Fig3,
    /// Multi-carrier outage against carrier count.
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig2, Preset::Fig3, Preset::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    pub fn json(self) -> &'static str {
        match self {
            Preset::Fig2 => include_str!("../../presets/fig2.json"),
            Preset::Fig3 => include_str!("../../presets/fig3.json"),
            Preset::Fig4 => include_str!("../../presets/fig4.json"),
        }
    }

    pub fn config(self) -> ScenarioConfig {
        ScenarioConfig::from_json(self.json()).expect("shipped preset is valid")
    }
}

impl std::str::FromStr for Preset {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ScenarioError::Config(format!("unknown preset '{s}' (expected fig2, fig3 or fig4)")))
    }
}

/// Fixed-width text table of sweep rows.
pub fn render_rows(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>14} {:>10} {:<22} {:<5} {:<5} {:<15} {:>10} {:>10} status",
        "sweep", "value", "scheme", "user", "mode", "method", "estimate", "stderr"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>14} {:>10} {:<22} {:<5} {:<5} {:<15} {:>10} {:>10} {}",
            r.sweep_var,
            r.sweep_value.map_or(String::new(), |v| format!("{v}")),
            r.scheme,
            r.user.as_str(),
            r.mode.as_str(),
            r.method.as_str(),
            r.estimate.map_or("-".into(), |v| format!("{v:.6}")),
            r.stderr.map_or("-".into(), |v| format!("{v:.6}")),
            r.status
        );
    }
    s
}
