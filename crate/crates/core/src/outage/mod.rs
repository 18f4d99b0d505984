//! Analytic outage probabilities for single- and multi-carrier THz-NOMA.

mod multicarrier;
mod single;

pub use multicarrier::{
    conditional_mgf, multicarrier_outage_lemma3, multicarrier_outage_mgf, noiseless_log_capacity, MgfSpec,
};
pub use single::{outage_exact_single, outage_simplified_single, ExactSpec};

use serde::{Deserialize, Serialize};

use crate::channel::{Access, ChannelError, User};
use crate::numerics::{adaptive, NumericsError, QuadratureSpec};
use crate::pairing::{DistanceLaw, PairingError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OutageError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

/// Which user, which access mode, and the spectral-efficiency target τ in
/// bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageQuery {
    pub user: User,
    pub access: Access,
    pub target: f64,
}

impl OutageQuery {
    pub fn new(user: User, access: Access, target: f64) -> Result<Self, OutageError> {
        let q = Self { user, access, target };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), OutageError> {
        if self.target > 0.0 && self.target.is_finite() {
            Ok(())
        } else {
            Err(OutageError::Domain(format!("target spectral efficiency must be positive, got {}", self.target)))
        }
    }

    /// SINR below which the user is in outage: 2^τ − 1 for NOMA, 2^{2τ} − 1
    /// for OMA.
    pub fn sinr_threshold(&self) -> f64 {
        (self.target / self.access.time_share() * std::f64::consts::LN_2).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactIntegral,
    Simplified,
    Lemma3,
    Mgf,
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactIntegral => "exact-integral",
            Method::Simplified => "simplified",
            Method::Lemma3 => "lemma3",
            Method::Mgf => "mgf",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    #[default]
    Ok,
    NotConverged,
    NotDecayed,
}

impl EstimateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateStatus::Ok => "ok",
            EstimateStatus::NotConverged => "not_converged",
            EstimateStatus::NotDecayed => "not_decayed",
        }
    }

    pub fn is_ok(self) -> bool {
        self == EstimateStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    /// Outage probability, clamped to [0, 1].
    pub probability: f64,
    pub method: Method,
    pub std_error: Option<f64>,
    /// Value before clamping.
    pub unclamped: f64,
    pub status: EstimateStatus,
}

impl OutageEstimate {
    pub fn new(unclamped: f64, method: Method, status: EstimateStatus) -> Self {
        if !(0.0..=1.0).contains(&unclamped) {
            log::debug!("{} outage {unclamped} clamped to [0, 1]", method.as_str());
        }
        Self { probability: unclamped.clamp(0.0, 1.0), method, std_error: None, unclamped, status }
    }
}

/// Mass below this quantile of a law starting at d = 0 is left out of
/// distance integrals.
const LOW_TAIL: f64 = 1e-12;

/// Integration breakpoints: quantiles of `law` inside [a, b], in ln d.
fn log_panels(law: &DistanceLaw, a: f64, b: f64, count: usize) -> Vec<f64> {
    let (lo, _) = law.support();
    let a = if a <= lo && lo == 0.0 { law.quantile(LOW_TAIL) } else { a };
    if !(a < b) || a <= 0.0 {
        return Vec::new();
    }
    let mut cuts: Vec<f64> =
        (1..count).map(|i| law.quantile(i as f64 / count as f64)).filter(|&d| d > a && d < b).collect();
    cuts.insert(0, a);
    cuts.push(b);
    cuts.dedup();
    cuts.into_iter().map(f64::ln).collect()
}

/// ∫_a^b g(d) f(d) dd over `law`, integrated in ln d between law quantiles.
/// Returns (value, error estimate, converged).
fn integrate_over_law<G: FnMut(f64) -> f64>(
    law: &DistanceLaw,
    a: f64,
    b: f64,
    mut g: G,
    spec: &QuadratureSpec,
) -> Result<(f64, f64, bool), NumericsError> {
    let cuts = log_panels(law, a, b, 16);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    for w in cuts.windows(2) {
        let run = adaptive(
            |u: f64| {
                let d = u.exp();
                g(d) * law.pdf(d) * d
            },
            w[0],
            w[1],
            spec,
        )?;
        value += run.value;
        error += run.error;
        converged &= run.converged;
    }
    Ok((value, error, converged))
}
