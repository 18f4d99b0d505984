//! Monte Carlo oracle: places users, runs the pairing procedure, draws
//! Gamma fading and evaluates the full SINR expressions.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by the master seed with
//! stream id `i`, and results are reduced from integer counts, so estimates
//! do not depend on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    multicarrier_spectral_efficiency, sinr, spectral_efficiency, Access, ChannelError, FadingModel, LinkBudget,
    PowerSplit, SubcarrierPlan, User,
};
use crate::pairing::{sample_ordered_pair, sample_pair, PairingError, PairingScheme, Thresholds};

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error("invalid trial configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Spectral-efficiency targets in bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub near: f64,
    pub far: f64,
}

impl Targets {
    pub fn of(&self, user: User) -> f64 {
        match user {
            User::Near => self.near,
            User::Far => self.far,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    pub scheme: PairingScheme,
    /// Required by the threshold-based schemes.
    pub thresholds: Option<Thresholds>,
    /// Budget of a single-carrier link; with a plan, its power, gains and
    /// noise apply to every subcarrier.
    pub budget: LinkBudget,
    pub split: PowerSplit,
    pub fading: FadingModel,
    pub plan: Option<SubcarrierPlan>,
    pub targets: Targets,
    /// Discard pairs with d1 ≥ d2 (only possible for the threshold schemes).
    #[serde(default)]
    pub ordered: bool,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.trials == 0 {
            return Err(McError::Config("trial count must be at least 1".into()));
        }
        self.scheme.validate()?;
        self.budget.validate()?;
        self.fading.validate()?;
        for t in [self.targets.near, self.targets.far] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(McError::Config(format!("targets must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }

    fn gamma(&self) -> Result<Gamma<f64>, McError> {
        Gamma::new(self.fading.shape, self.fading.scale()).map_err(|e| McError::Config(e.to_string()))
    }

    fn carriers(&self) -> usize {
        self.plan.as_ref().map_or(1, SubcarrierPlan::len)
    }

    fn pair(&self, rng: &mut ChaCha8Rng) -> Result<(f64, f64), McError> {
        let t = self.thresholds.as_ref();
        Ok(if self.ordered { sample_ordered_pair(&self.scheme, t, rng)? } else { sample_pair(&self.scheme, t, rng)? })
    }

    fn spectral_efficiency(&self, user: User, access: Access, d: f64, chis: &[f64]) -> Result<f64, McError> {
        Ok(match &self.plan {
            Some(plan) => multicarrier_spectral_efficiency(plan, user, access, d, chis, &self.budget, self.split)?,
            None => spectral_efficiency(sinr(&self.budget, self.split, user, access, chis[0], d)?, access),
        })
    }

    /// One trial: pair distances and per-user, per-carrier fading draws.
    fn draw(&self, trial: u64, gamma: &Gamma<f64>) -> Result<Draw, McError> {
        let mut rng = self.rng(trial);
        let (d1, d2) = self.pair(&mut rng)?;
        let n = self.carriers();
        let chis: Vec<f64> = (0..2 * n).map(|_| gamma.sample(&mut rng)).collect();
        Ok(Draw { d: [d1, d2], chis })
    }
}

struct Draw {
    d: [f64; 2],
    chis: Vec<f64>,
}

impl Draw {
    fn user(&self, user: User) -> (f64, &[f64]) {
        let n = self.chis.len() / 2;
        match user {
            User::Near => (self.d[0], &self.chis[..n]),
            User::Far => (self.d[1], &self.chis[n..]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    /// 99% normal-approximation interval, clipped to [0, 1].
    pub ci99: (f64, f64),
}

impl McEstimate {
    pub fn from_count(hits: u64, trials: u64) -> Self {
        let n = trials as f64;
        let mean = hits as f64 / n;
        let std_error = (mean * (1.0 - mean) / n).sqrt();
        let half = Z99 * std_error;
        Self { mean, std_error, trials, ci99: ((mean - half).max(0.0), (mean + half).min(1.0)) }
    }

    /// True when `value` lies within max(floor, sigmas × stderr) of the mean.
    pub fn agrees_with(&self, value: f64, floor: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= floor.max(sigmas * self.std_error)
    }
}

/// Runs `body` over all trials in parallel and sums the integer counts it
/// returns.
fn count_trials<const K: usize, F>(config: &TrialConfig, body: F) -> Result<[u64; K], McError>
where
    F: Fn(&Draw) -> Result<[u64; K], McError> + Sync,
{
    config.validate()?;
    let gamma = config.gamma()?;
    (0..config.trials)
        .into_par_iter()
        .map(|i| body(&config.draw(i, &gamma)?))
        .try_reduce(|| [0; K], |a, b| Ok(std::array::from_fn(|j| a[j] + b[j])))
}

/// Outage of one user and access mode: fraction of trials whose spectral
/// efficiency falls short of the user's target.
pub fn estimate_outage_mc(config: &TrialConfig, user: User, access: Access) -> Result<McEstimate, McError> {
    let target = config.targets.of(user);
    let [hits] = count_trials(config, |draw| {
        let (d, chis) = draw.user(user);
        Ok([u64::from(config.spectral_efficiency(user, access, d, chis)? < target)])
    })?;
    Ok(McEstimate::from_count(hits, config.trials))
}

/// Outage for every (user, access) combination from one set of draws,
/// indexed as `[user][access]` in [`User::ALL`] / [`Access::ALL`] order.
pub fn estimate_outage_mc_all(config: &TrialConfig) -> Result<[[McEstimate; 2]; 2], McError> {
    let counts = count_trials::<4, _>(config, |draw| {
        let mut out = [0; 4];
        for (i, user) in User::ALL.into_iter().enumerate() {
            let (d, chis) = draw.user(user);
            for (j, access) in Access::ALL.into_iter().enumerate() {
                out[2 * i + j] =
                    u64::from(config.spectral_efficiency(user, access, d, chis)? < config.targets.of(user));
            }
        }
        Ok(out)
    })?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| McEstimate::from_count(counts[2 * i + j], config.trials))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingBenefit {
    /// Fraction of trials with NOMA spectral efficiency strictly above OMA.
    pub rate: McEstimate,
    /// Mean of (NOMA − OMA) spectral efficiency in bps/Hz.
    pub mean_gap: f64,
}

/// How often NOMA beats OMA for each user on the same channel draw.
/// Returns (near, far).
pub fn estimate_pairing_benefit(config: &TrialConfig) -> Result<(PairingBenefit, PairingBenefit), McError> {
    config.validate()?;
    let gamma = config.gamma()?;
    let per_trial = |i: u64| -> Result<([u64; 2], [f64; 2]), McError> {
        let draw = config.draw(i, &gamma)?;
        let mut wins = [0; 2];
        let mut gaps = [0.0; 2];
        for (u, user) in User::ALL.into_iter().enumerate() {
            let (d, chis) = draw.user(user);
            let gap = config.spectral_efficiency(user, Access::Noma, d, chis)?
                - config.spectral_efficiency(user, Access::Oma, d, chis)?;
            wins[u] = u64::from(gap > 0.0);
            gaps[u] = gap;
        }
        Ok((wins, gaps))
    };
    // gaps are collected in trial order so the floating-point sum is
    // independent of scheduling
    let results: Vec<([u64; 2], [f64; 2])> =
        (0..config.trials).into_par_iter().map(per_trial).collect::<Result<_, _>>()?;
    let n = config.trials;
    let benefit = |u: usize| PairingBenefit {
        rate: McEstimate::from_count(results.iter().map(|r| r.0[u]).sum(), n),
        mean_gap: results.iter().map(|r| r.1[u]).sum::<f64>() / n as f64,
    };
    Ok((benefit(0), benefit(1)))
}

/// Empirical CDF of the sampled near (d1) or far (d2) distance on `grid`.
pub fn empirical_distance_cdf(config: &TrialConfig, user: User, grid: &[f64]) -> Result<Vec<McEstimate>, McError> {
    let distances = sample_distances(config, user)?;
    let mut sorted = distances;
    sorted.sort_by(f64::total_cmp);
    Ok(grid
        .iter()
        .map(|&x| McEstimate::from_count(sorted.partition_point(|&d| d <= x) as u64, config.trials))
        .collect())
}

/// Sampled distances of one user, in trial order.
pub fn sample_distances(config: &TrialConfig, user: User) -> Result<Vec<f64>, McError> {
    config.validate()?;
    let idx = match user {
        User::Near => 0,
        User::Far => 1,
    };
    (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = config.rng(i);
            let (d1, d2) = config.pair(&mut rng)?;
            Ok([d1, d2][idx])
        })
        .collect()
}
