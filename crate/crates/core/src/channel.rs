//! Line-of-sight THz channel, NOMA/OMA SINR with molecular absorption
//! noise, and spectral efficiency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::absorption::PhysicalConstants;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("domain error: {0}")]
    Domain(String),
}

fn domain<T>(msg: impl Into<String>) -> Result<T, ChannelError> {
    Err(ChannelError::Domain(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum User {
    Near,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Noma,
    Oma,
}

impl User {
    pub const ALL: [User; 2] = [User::Near, User::Far];
    pub fn as_str(self) -> &'static str {
        match self {
            User::Near => "near",
            User::Far => "far",
        }
    }
}

impl Access {
    pub const ALL: [Access; 2] = [Access::Noma, Access::Oma];
    pub fn as_str(self) -> &'static str {
        match self {
            Access::Noma => "noma",
            Access::Oma => "oma",
        }
    }
    /// Fraction of the slot the user transmits in.
    pub fn time_share(self) -> f64 {
        match self {
            Access::Noma => 1.0,
            Access::Oma => 0.5,
        }
    }
}

/// Transmit power, antenna gains, thermal noise and the carrier a link runs
/// on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub transmit_power_w: f64,
    /// Linear transmit antenna gain.
    pub tx_gain: f64,
    /// Linear receive antenna gain.
    pub rx_gain: f64,
    pub noise_w: f64,
    pub carrier_hz: f64,
    pub absorption_per_m: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl LinkBudget {
    pub fn new(
        transmit_power_w: f64,
        tx_gain: f64,
        rx_gain: f64,
        noise_w: f64,
        carrier_hz: f64,
        absorption_per_m: f64,
    ) -> Result<Self, ChannelError> {
        let b = Self { transmit_power_w, tx_gain, rx_gain, noise_w, carrier_hz, absorption_per_m };
        b.validate()?;
        Ok(b)
    }

    /// Same as [`LinkBudget::new`] with antenna gains given in dB.
    pub fn from_db_gains(
        transmit_power_w: f64,
        tx_gain_db: f64,
        rx_gain_db: f64,
        noise_w: f64,
        carrier_hz: f64,
        absorption_per_m: f64,
    ) -> Result<Self, ChannelError> {
        Self::new(
            transmit_power_w,
            db_to_linear(tx_gain_db),
            db_to_linear(rx_gain_db),
            noise_w,
            carrier_hz,
            absorption_per_m,
        )
    }

    /// 1 W, 20 dB at both ends, N0 = 1e-21 W, 1 THz carrier.
    pub fn reference(absorption_per_m: f64) -> Self {
        Self::from_db_gains(1.0, 20.0, 20.0, 1e-21, 1e12, absorption_per_m).expect("reference budget is valid")
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [self.transmit_power_w, self.tx_gain, self.rx_gain, self.carrier_hz];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return domain(format!("power, gains and carrier must be positive: {self:?}"));
        }
        if !(self.noise_w >= 0.0 && self.noise_w.is_finite()) {
            return domain(format!("thermal noise must be nonnegative, got {}", self.noise_w));
        }
        if !(self.absorption_per_m >= 0.0 && self.absorption_per_m.is_finite()) {
            return domain(format!("absorption coefficient must be nonnegative, got {}", self.absorption_per_m));
        }
        Ok(())
    }

    /// ζ = (c / 4πf)².
    pub fn zeta(&self) -> f64 {
        let c = PhysicalConstants::TABLE.speed_of_light;
        (c / (4.0 * PI * self.carrier_hz)).powi(2)
    }

    pub fn antenna_gain(&self) -> f64 {
        self.tx_gain * self.rx_gain
    }

    /// G_t G_r P ζ: received power per unit channel gain before spreading.
    pub fn full_power_coefficient(&self) -> f64 {
        self.antenna_gain() * self.transmit_power_w * self.zeta()
    }

    pub fn with_carrier(&self, carrier_hz: f64, absorption_per_m: f64) -> Self {
        Self { carrier_hz, absorption_per_m, ..*self }
    }

    pub fn with_noise(&self, noise_w: f64) -> Self {
        Self { noise_w, ..*self }
    }

    /// Beer-Lambert LoS power gain ζ d⁻² e^{−kd}.
    pub fn path_gain(&self, d: f64) -> Result<f64, ChannelError> {
        check_distance(d)?;
        Ok(self.zeta() / (d * d) * (-self.absorption_per_m * d).exp())
    }

    fn transmittance(&self, d: f64) -> (f64, f64) {
        let kd = self.absorption_per_m * d;
        // (e^{-kd}, 1 - e^{-kd}) without cancellation
        ((-kd).exp(), -(-kd).exp_m1())
    }
}

fn check_distance(d: f64) -> Result<(), ChannelError> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        domain(format!("distance must be positive and finite, got {d}"))
    }
}

fn check_fading(chi: f64) -> Result<(), ChannelError> {
    if chi >= 0.0 && chi.is_finite() {
        Ok(())
    } else {
        domain(format!("fading power must be nonnegative, got {chi}"))
    }
}

fn ratio(signal: f64, noise: f64) -> f64 {
    if signal == 0.0 {
        0.0
    } else {
        signal / noise
    }
}

/// NOMA power fractions. `a1` goes to the near user; `a1 < 0.5` so the far
/// user always receives the larger share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerSplit {
    a1: f64,
}

impl PowerSplit {
    pub fn new(a1: f64) -> Result<Self, ChannelError> {
        if (0.0..0.5).contains(&a1) {
            Ok(Self { a1 })
        } else {
            domain(format!("near-user power fraction must lie in [0, 0.5), got {a1}"))
        }
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        1.0 - self.a1
    }
}

impl TryFrom<f64> for PowerSplit {
    type Error = ChannelError;
    fn try_from(a1: f64) -> Result<Self, Self::Error> {
        PowerSplit::new(a1)
    }
}

impl From<PowerSplit> for f64 {
    fn from(s: PowerSplit) -> f64 {
        s.a1
    }
}

/// How the fading power Θ maps onto the Gamma distribution of χ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaParameterization {
    /// shape m, scale Θ (mean mΘ)
    #[default]
    ShapeScale,
    /// shape m, scale Θ/m (mean Θ)
    MeanPower,
}

/// Nakagami-m fading: the channel power χ is Gamma distributed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingModel {
    pub shape: f64,
    pub power: f64,
    #[serde(default)]
    pub parameterization: GammaParameterization,
}

impl FadingModel {
    pub fn new(shape: f64, power: f64, parameterization: GammaParameterization) -> Result<Self, ChannelError> {
        let f = Self { shape, power, parameterization };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.shape >= 0.5 && self.shape.is_finite()) {
            return domain(format!("Nakagami shape must be at least 0.5, got {}", self.shape));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return domain(format!("fading power must be positive, got {}", self.power));
        }
        Ok(())
    }

    /// Scale of the Gamma law of χ.
    pub fn scale(&self) -> f64 {
        match self.parameterization {
            GammaParameterization::ShapeScale => self.power,
            GammaParameterization::MeanPower => self.power / self.shape,
        }
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale()
    }
}

impl Default for FadingModel {
    fn default() -> Self {
        Self { shape: 2.0, power: 1.0, parameterization: GammaParameterization::ShapeScale }
    }
}

/// Near-user NOMA SINR after perfect SIC.
pub fn sinr_noma_near(budget: &LinkBudget, split: PowerSplit, chi: f64, d: f64) -> Result<f64, ChannelError> {
    check_distance(d)?;
    check_fading(chi)?;
    let (e, absorbed) = budget.transmittance(d);
    let g = split.a1() * budget.antenna_gain() * budget.transmit_power_w * budget.zeta() / (d * d);
    let signal = g * e * chi;
    let noise = budget.noise_w + g * absorbed * chi;
    Ok(ratio(signal, noise))
}

/// Far-user NOMA SINR; the near user's signal is interference and the
/// absorption noise carries the full transmit power.
pub fn sinr_noma_far(budget: &LinkBudget, split: PowerSplit, chi: f64, d: f64) -> Result<f64, ChannelError> {
    check_distance(d)?;
    check_fading(chi)?;
    let (e, absorbed) = budget.transmittance(d);
    let g = budget.antenna_gain() * budget.transmit_power_w * budget.zeta() / (d * d);
    let signal = split.a2() * g * e * chi;
    let interference = split.a1() * g * e * chi;
    let noise = budget.noise_w + (split.a1() + split.a2()) * g * absorbed * chi;
    Ok(ratio(signal, interference + noise))
}

/// OMA SINR: full power for half the slot.
pub fn sinr_oma(budget: &LinkBudget, chi: f64, d: f64) -> Result<f64, ChannelError> {
    check_distance(d)?;
    check_fading(chi)?;
    let (e, absorbed) = budget.transmittance(d);
    let g = budget.antenna_gain() * budget.transmit_power_w * budget.zeta() / (d * d);
    Ok(ratio(g * e * chi, budget.noise_w + g * absorbed * chi))
}

pub fn sinr(
    budget: &LinkBudget,
    split: PowerSplit,
    user: User,
    access: Access,
    chi: f64,
    d: f64,
) -> Result<f64, ChannelError> {
    match (access, user) {
        (Access::Noma, User::Near) => sinr_noma_near(budget, split, chi, d),
        (Access::Noma, User::Far) => sinr_noma_far(budget, split, chi, d),
        (Access::Oma, _) => sinr_oma(budget, chi, d),
    }
}

/// Spectral efficiency in bps/Hz with unit slot duration.
pub fn spectral_efficiency(sinr: f64, access: Access) -> f64 {
    access.time_share() * sinr.ln_1p() / std::f64::consts::LN_2
}

/// One subcarrier: centre frequency and its absorption coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subcarrier {
    pub frequency_hz: f64,
    pub absorption_per_m: f64,
}

/// Ordered subcarriers shared by both users of a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Subcarrier>", into = "Vec<Subcarrier>")]
pub struct SubcarrierPlan {
    carriers: Vec<Subcarrier>,
}

impl SubcarrierPlan {
    pub fn new(carriers: Vec<Subcarrier>) -> Result<Self, ChannelError> {
        if carriers.is_empty() {
            return domain("subcarrier plan needs at least one carrier");
        }
        if carriers.iter().any(|c| !(c.absorption_per_m > 0.0 && c.absorption_per_m.is_finite())) {
            return domain("every subcarrier needs a positive absorption coefficient");
        }
        if carriers.iter().any(|c| !(c.frequency_hz > 0.0 && c.frequency_hz.is_finite())) {
            return domain("every subcarrier needs a positive frequency");
        }
        if carriers.windows(2).any(|w| w[1].frequency_hz <= w[0].frequency_hz) {
            return domain("subcarrier frequencies must be strictly increasing");
        }
        Ok(Self { carriers })
    }

    /// The six 0.85–1.1 THz carriers with their quoted absorption.
    pub fn reference() -> Self {
        use crate::absorption::{REFERENCE_ABSORPTION, REFERENCE_FREQUENCIES_HZ};
        Self::new(
            REFERENCE_FREQUENCIES_HZ
                .iter()
                .zip(REFERENCE_ABSORPTION)
                .map(|(&frequency_hz, absorption_per_m)| Subcarrier { frequency_hz, absorption_per_m })
                .collect(),
        )
        .expect("reference plan is valid")
    }

    /// First `n` carriers.
    pub fn prefix(&self, n: usize) -> Result<Self, ChannelError> {
        if n == 0 || n > self.carriers.len() {
            return domain(format!("cannot take {n} of {} subcarriers", self.carriers.len()));
        }
        Ok(Self { carriers: self.carriers[..n].to_vec() })
    }

    pub fn len(&self) -> usize {
        self.carriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carriers.is_empty()
    }

    pub fn carriers(&self) -> &[Subcarrier] {
        &self.carriers
    }

    pub fn absorption(&self) -> Vec<f64> {
        self.carriers.iter().map(|c| c.absorption_per_m).collect()
    }

    /// Budget for carrier `n`: same power, gains and noise, carrier-specific
    /// f and k.
    pub fn budget(&self, base: &LinkBudget, n: usize) -> LinkBudget {
        let c = self.carriers[n];
        base.with_carrier(c.frequency_hz, c.absorption_per_m)
    }
}

impl TryFrom<Vec<Subcarrier>> for SubcarrierPlan {
    type Error = ChannelError;
    fn try_from(v: Vec<Subcarrier>) -> Result<Self, Self::Error> {
        SubcarrierPlan::new(v)
    }
}

impl From<SubcarrierPlan> for Vec<Subcarrier> {
    fn from(p: SubcarrierPlan) -> Self {
        p.carriers
    }
}

/// Aggregate spectral efficiency over all subcarriers of `plan`, one fading
/// draw per carrier.
pub fn multicarrier_spectral_efficiency(
    plan: &SubcarrierPlan,
    user: User,
    access: Access,
    d: f64,
    fadings: &[f64],
    budget: &LinkBudget,
    split: PowerSplit,
) -> Result<f64, ChannelError> {
    if fadings.len() != plan.len() {
        return domain(format!("{} fading draws for {} subcarriers", fadings.len(), plan.len()));
    }
    let mut total = 0.0;
    for (n, &chi) in fadings.iter().enumerate() {
        let b = plan.budget(budget, n);
        total += spectral_efficiency(sinr(&b, split, user, access, chi, d)?, access);
    }
    Ok(total)
}

/// SINR(χ) = signal·χ / (thermal + self_noise·χ) at a fixed distance:
/// the form every SINR above reduces to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrCoefficients {
    pub signal: f64,
    pub self_noise: f64,
    pub thermal: f64,
}

impl SinrCoefficients {
    pub fn at(
        budget: &LinkBudget,
        split: PowerSplit,
        user: User,
        access: Access,
        d: f64,
    ) -> Result<Self, ChannelError> {
        check_distance(d)?;
        let (e, absorbed) = budget.transmittance(d);
        let g = budget.full_power_coefficient() / (d * d);
        let (signal, self_noise) = match (access, user) {
            (Access::Noma, User::Near) => (split.a1() * g * e, split.a1() * g * absorbed),
            (Access::Noma, User::Far) => (split.a2() * g * e, split.a1() * g * e + g * absorbed),
            (Access::Oma, _) => (g * e, g * absorbed),
        };
        Ok(Self { signal, self_noise, thermal: budget.noise_w })
    }

    pub fn sinr(&self, chi: f64) -> f64 {
        ratio(self.signal * chi, self.thermal + self.self_noise * chi)
    }

    /// SINR as χ → ∞ (the value at every χ when thermal noise is zero).
    pub fn ceiling(&self) -> f64 {
        self.signal / self.self_noise
    }
}
