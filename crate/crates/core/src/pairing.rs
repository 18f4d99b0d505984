//! User-pairing schemes: NOMA-over-OMA distance thresholds, analytic
//! distance laws of the paired users, and an operational pair sampler.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Upper bound on uniform draws spent looking for one user inside a region.
pub const MAX_REDRAWS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairingError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("scheme {0} needs pairing thresholds")]
    MissingThresholds(&'static str),
    #[error("far-user region is empty: threshold {threshold} m is not below the disc radius {radius} m")]
    EmptyFarRegion { threshold: f64, radius: f64 },
    #[error("no {region} user found after {attempts} draws")]
    SamplingExhausted { region: &'static str, attempts: u64 },
}

fn domain<T>(msg: impl Into<String>) -> Result<T, PairingError> {
    Err(PairingError::Domain(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// Two users drawn at random from the disc.
    Random,
    /// Nearest and farthest of `users` uniformly placed users.
    NearestFarthest { users: usize },
    /// Near user inside R_th1, far user outside R_th2.
    Proposed,
    /// Nearest of `users` as the near user, far user outside R_th2.
    /// `truncate_near` additionally conditions the near user on R_th1.
    Enhanced {
        users: usize,
        #[serde(default)]
        truncate_near: bool,
    },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Random => "random",
            Scheme::NearestFarthest { .. } => "nearest_farthest",
            Scheme::Proposed => "proposed",
            Scheme::Enhanced { .. } => "enhanced",
        }
    }

    pub fn needs_thresholds(&self) -> bool {
        matches!(self, Scheme::Proposed | Scheme::Enhanced { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingScheme {
    pub scheme: Scheme,
    /// Disc radius R in metres.
    pub radius: f64,
}

impl PairingScheme {
    pub fn new(scheme: Scheme, radius: f64) -> Result<Self, PairingError> {
        let p = Self { scheme, radius };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PairingError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return domain(format!("disc radius must be positive, got {}", self.radius));
        }
        match self.scheme {
            Scheme::NearestFarthest { users } | Scheme::Enhanced { users, .. } if users < 2 => {
                domain(format!("{} needs at least two users, got {users}", self.scheme.name()))
            }
            _ => Ok(()),
        }
    }
}

/// Distances R_th1 (near user) and R_th2 (far user) that make NOMA beat OMA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub near: f64,
    pub far: f64,
}

impl Thresholds {
    pub fn single(a1: f64, k: f64) -> Result<Self, PairingError> {
        Ok(Self { near: threshold_near(a1, k)?, far: threshold_far(a1, k)? })
    }
}

fn check_threshold_inputs(a1: f64, k: f64) -> Result<(), PairingError> {
    if !(0.0..0.5).contains(&a1) {
        return domain(format!("near-user power fraction must lie in [0, 0.5), got {a1}"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return domain(format!("absorption coefficient must be positive, got {k}"));
    }
    Ok(())
}

/// R_th1 = ln((1 − a1)/(1 − 2a1)) / k.
pub fn threshold_near(a1: f64, k: f64) -> Result<f64, PairingError> {
    check_threshold_inputs(a1, k)?;
    Ok((a1 / (1.0 - 2.0 * a1)).ln_1p() / k)
}

/// R_th2 = ln(a1²/(1 − 2a1) + 1) / k.
pub fn threshold_far(a1: f64, k: f64) -> Result<f64, PairingError> {
    check_threshold_inputs(a1, k)?;
    Ok((a1 * a1 / (1.0 - 2.0 * a1)).ln_1p() / k)
}

/// Thresholds valid on every subcarrier: the smallest near threshold and
/// the largest far threshold over the plan.
pub fn multicarrier_thresholds(a1: f64, ks: &[f64]) -> Result<Thresholds, PairingError> {
    if ks.is_empty() {
        return domain("absorption list is empty");
    }
    let mut near = f64::INFINITY;
    let mut far = f64::NEG_INFINITY;
    for &k in ks {
        near = near.min(threshold_near(a1, k)?);
        far = far.max(threshold_far(a1, k)?);
    }
    Ok(Thresholds { near, far })
}

/// Shape of a paired user's distance distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    /// Nearest of `n` uniform users in the disc.
    MinOf { n: usize },
    /// Farthest of `n` uniform users in the disc.
    MaxOf { n: usize },
    /// Uniform over the annulus lo ≤ d ≤ hi.
    Annulus { lo: f64, hi: f64 },
    /// Nearest of `n`, conditioned on d ≤ cap.
    MinOfWithin { n: usize, cap: f64 },
}

/// PDF/CDF/support of a paired user's distance from the access point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceLaw {
    pub kind: LawKind,
    pub radius: f64,
    /// Set when a threshold beyond the disc was clipped to its edge.
    pub clipped: bool,
}

fn min_of_cdf(n: usize, x: f64) -> f64 {
    // 1 - (1 - x)^n
    -(n as f64 * (-x).ln_1p()).exp_m1()
}

impl DistanceLaw {
    fn new(kind: LawKind, radius: f64) -> Self {
        Self { kind, radius, clipped: false }
    }

    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            LawKind::MinOf { .. } | LawKind::MaxOf { .. } => (0.0, self.radius),
            LawKind::Annulus { lo, hi } => (lo, hi),
            LawKind::MinOfWithin { cap, .. } => (0.0, cap),
        }
    }

    fn x(&self, d: f64) -> f64 {
        (d / self.radius).powi(2)
    }

    /// The law's closed-form CDF evaluated without restricting d to the
    /// support.
    pub fn cdf_unclamped(&self, d: f64) -> f64 {
        let x = self.x(d);
        match self.kind {
            LawKind::MinOf { n } => 1.0 - (1.0 - x).powi(n as i32),
            LawKind::MaxOf { n } => x.powi(n as i32),
            LawKind::Annulus { lo, hi } => (d * d - lo * lo) / (hi * hi - lo * lo),
            LawKind::MinOfWithin { n, cap } => (1.0 - (1.0 - x).powi(n as i32)) / min_of_cdf(n, self.x(cap)),
        }
    }

    pub fn cdf(&self, d: f64) -> f64 {
        let (lo, hi) = self.support();
        if d.is_nan() {
            return f64::NAN;
        }
        if d <= lo {
            return 0.0;
        }
        if d >= hi {
            return 1.0;
        }
        let x = self.x(d);
        let v = match self.kind {
            LawKind::MinOf { n } => min_of_cdf(n, x),
            LawKind::MaxOf { n } => (n as f64 * x.ln()).exp(),
            LawKind::Annulus { lo, hi } => (d * d - lo * lo) / (hi * hi - lo * lo),
            LawKind::MinOfWithin { n, cap } => min_of_cdf(n, x) / min_of_cdf(n, self.x(cap)),
        };
        v.clamp(0.0, 1.0)
    }

    /// 1 − F(d), accurate in the upper tail.
    pub fn survival(&self, d: f64) -> f64 {
        let (lo, hi) = self.support();
        if d <= lo {
            return 1.0;
        }
        if d >= hi {
            return 0.0;
        }
        let x = self.x(d);
        match self.kind {
            LawKind::MinOf { n } => (n as f64 * (-x).ln_1p()).exp(),
            LawKind::MaxOf { n } => -(n as f64 * x.ln()).exp_m1(),
            _ => 1.0 - self.cdf(d),
        }
    }

    pub fn pdf(&self, d: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(d >= lo && d <= hi) {
            return 0.0;
        }
        let r2 = self.radius * self.radius;
        let x = self.x(d);
        let nf = |n: usize| n as f64;
        match self.kind {
            LawKind::MinOf { n } => nf(n) * ((nf(n) - 1.0) * (-x).ln_1p()).exp() * 2.0 * d / r2,
            LawKind::MaxOf { n } => {
                if d == 0.0 {
                    0.0
                } else {
                    nf(n) * ((nf(n) - 1.0) * x.ln()).exp() * 2.0 * d / r2
                }
            }
            LawKind::Annulus { lo, hi } => 2.0 * d / (hi * hi - lo * lo),
            LawKind::MinOfWithin { n, cap } => {
                nf(n) * ((nf(n) - 1.0) * (-x).ln_1p()).exp() * 2.0 * d / r2 / min_of_cdf(n, self.x(cap))
            }
        }
    }

    /// Inverse CDF for p in [0, 1].
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let r = self.radius;
        let nf = |n: usize| n as f64;
        match self.kind {
            LawKind::MinOf { n } => r * (-((1.0 - p).ln() / nf(n)).exp_m1()).sqrt(),
            LawKind::MaxOf { n } => r * (p.ln() / nf(n)).exp().sqrt(),
            LawKind::Annulus { lo, hi } => (lo * lo + p * (hi * hi - lo * lo)).sqrt(),
            LawKind::MinOfWithin { n, cap } => {
                let q = p * min_of_cdf(n, self.x(cap));
                (r * (-((-q).ln_1p() / nf(n)).exp_m1()).sqrt()).min(cap)
            }
        }
    }
}

fn require_thresholds<'a>(scheme: &Scheme, thresholds: Option<&'a Thresholds>) -> Result<&'a Thresholds, PairingError> {
    let t = thresholds.ok_or(PairingError::MissingThresholds(scheme.name()))?;
    if !(t.near > 0.0 && t.far >= 0.0 && t.near.is_finite() && t.far.is_finite()) {
        return domain(format!("thresholds must be positive, got {t:?}"));
    }
    Ok(t)
}

fn far_region(t: &Thresholds, radius: f64) -> Result<DistanceLaw, PairingError> {
    if t.far >= radius {
        return Err(PairingError::EmptyFarRegion { threshold: t.far, radius });
    }
    Ok(DistanceLaw::new(LawKind::Annulus { lo: t.far, hi: radius }, radius))
}

fn near_cap(t: &Thresholds, radius: f64) -> (f64, bool) {
    if t.near > radius {
        log::warn!("near threshold {} m exceeds disc radius {radius} m; clipping to the disc", t.near);
        (radius, true)
    } else {
        (t.near, false)
    }
}

/// Analytic distance laws of the near (d1) and far (d2) user.
pub fn distance_laws(
    scheme: &PairingScheme,
    thresholds: Option<&Thresholds>,
) -> Result<(DistanceLaw, DistanceLaw), PairingError> {
    scheme.validate()?;
    let r = scheme.radius;
    match scheme.scheme {
        Scheme::Random => {
            Ok((DistanceLaw::new(LawKind::MinOf { n: 2 }, r), DistanceLaw::new(LawKind::MaxOf { n: 2 }, r)))
        }
        Scheme::NearestFarthest { users } => {
            Ok((DistanceLaw::new(LawKind::MinOf { n: users }, r), DistanceLaw::new(LawKind::MaxOf { n: users }, r)))
        }
        Scheme::Proposed => {
            let t = require_thresholds(&scheme.scheme, thresholds)?;
            let far = far_region(t, r)?;
            let (cap, clipped) = near_cap(t, r);
            let near = DistanceLaw { clipped, ..DistanceLaw::new(LawKind::Annulus { lo: 0.0, hi: cap }, r) };
            Ok((near, far))
        }
        Scheme::Enhanced { users, truncate_near } => {
            let t = require_thresholds(&scheme.scheme, thresholds)?;
            let far = far_region(t, r)?;
            let near = if truncate_near {
                let (cap, clipped) = near_cap(t, r);
                if clipped {
                    DistanceLaw { clipped, ..DistanceLaw::new(LawKind::MinOf { n: users }, r) }
                } else {
                    DistanceLaw::new(LawKind::MinOfWithin { n: users, cap }, r)
                }
            } else {
                DistanceLaw::new(LawKind::MinOf { n: users }, r)
            };
            Ok((near, far))
        }
    }
}

fn uniform_u<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Smallest and largest of `n` uniform draws, as squared normalised radii.
fn extreme_u<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..n {
        let u = uniform_u(rng);
        lo = lo.min(u);
        hi = hi.max(u);
    }
    (lo, hi)
}

/// A uniform-disc user redrawn until its distance falls in [lo, hi].
fn user_in_region<R: Rng + ?Sized>(
    rng: &mut R,
    radius: f64,
    lo: f64,
    hi: f64,
    region: &'static str,
) -> Result<f64, PairingError> {
    for _ in 0..MAX_REDRAWS {
        let d = radius * uniform_u(rng).sqrt();
        if d >= lo && d <= hi {
            return Ok(d);
        }
    }
    Err(PairingError::SamplingExhausted { region, attempts: MAX_REDRAWS })
}

fn nearest_within<R: Rng + ?Sized>(rng: &mut R, radius: f64, users: usize, cap: f64) -> Result<f64, PairingError> {
    let batches = (MAX_REDRAWS / users as u64).max(1);
    for _ in 0..batches {
        let d = radius * extreme_u(rng, users).0.sqrt();
        if d <= cap {
            return Ok(d);
        }
    }
    Err(PairingError::SamplingExhausted { region: "near", attempts: batches * users as u64 })
}

/// Draws one (d1, d2) pair by running the pairing procedure on uniformly
/// placed users.
///
/// Random and nearest-farthest pairs satisfy d1 ≤ d2 by construction. The
/// threshold schemes select each user independently from its own region,
/// so when R_th2 < R_th1 a pair with d1 > d2 is possible; use
/// [`sample_ordered_pair`] to exclude those.
pub fn sample_pair<R: Rng + ?Sized>(
    scheme: &PairingScheme,
    thresholds: Option<&Thresholds>,
    rng: &mut R,
) -> Result<(f64, f64), PairingError> {
    let r = scheme.radius;
    match scheme.scheme {
        Scheme::Random => {
            let (a, b) = (uniform_u(rng), uniform_u(rng));
            Ok((r * a.min(b).sqrt(), r * a.max(b).sqrt()))
        }
        Scheme::NearestFarthest { users } => {
            let (lo, hi) = extreme_u(rng, users);
            Ok((r * lo.sqrt(), r * hi.sqrt()))
        }
        Scheme::Proposed => {
            let t = require_thresholds(&scheme.scheme, thresholds)?;
            if t.far >= r {
                return Err(PairingError::EmptyFarRegion { threshold: t.far, radius: r });
            }
            let d1 = user_in_region(rng, r, 0.0, t.near, "near")?;
            let d2 = user_in_region(rng, r, t.far, r, "far")?;
            Ok((d1, d2))
        }
        Scheme::Enhanced { users, truncate_near } => {
            let t = require_thresholds(&scheme.scheme, thresholds)?;
            if t.far >= r {
                return Err(PairingError::EmptyFarRegion { threshold: t.far, radius: r });
            }
            let d1 = if truncate_near {
                nearest_within(rng, r, users, t.near.min(r))?
            } else {
                r * extreme_u(rng, users).0.sqrt()
            };
            let d2 = user_in_region(rng, r, t.far, r, "far")?;
            Ok((d1, d2))
        }
    }
}

/// Like [`sample_pair`], redrawing whole pairs until d1 < d2.
pub fn sample_ordered_pair<R: Rng + ?Sized>(
    scheme: &PairingScheme,
    thresholds: Option<&Thresholds>,
    rng: &mut R,
) -> Result<(f64, f64), PairingError> {
    for _ in 0..MAX_REDRAWS {
        let (d1, d2) = sample_pair(scheme, thresholds, rng)?;
        if d1 < d2 {
            return Ok((d1, d2));
        }
    }
    Err(PairingError::SamplingExhausted { region: "ordered pair", attempts: MAX_REDRAWS })
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
/// Sorts `samples` in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
