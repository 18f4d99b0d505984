use serde::{Deserialize, Serialize};

use super::quadrature::adaptive;
use super::{ComplexValue, NumericsError, QuadratureSpec};

/// Panel layout and truncation rule for the semi-infinite inversion
/// integral ∫_0^∞ g(ω) dω.
///
/// The range is cut into panels of geometrically growing width starting at
/// `omega_min`. Each panel is integrated adaptively; integration stops once
/// `settle_panels` consecutive panels each contribute less than
/// `truncation_tol` in magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GilPelaezSpec {
    pub omega_min: f64,
    pub first_panel: f64,
    pub growth: f64,
    pub truncation_tol: f64,
    pub settle_panels: usize,
    pub omega_max: f64,
    pub panel: QuadratureSpec,
}

impl Default for GilPelaezSpec {
    fn default() -> Self {
        Self {
            omega_min: 1e-8,
            first_panel: 1.0,
            growth: 2.0,
            truncation_tol: 1e-6,
            settle_panels: 3,
            omega_max: 1e9,
            panel: QuadratureSpec { abs_tol: 1e-8, rel_tol: 1e-8, max_subdivisions: 20_000 },
        }
    }
}

impl GilPelaezSpec {
    /// A looser layout for expensive integrands where ~1e-4 on the CDF is
    /// enough.
    pub fn coarse() -> Self {
        Self {
            truncation_tol: 2e-5,
            panel: QuadratureSpec { abs_tol: 2e-6, rel_tol: 1e-5, max_subdivisions: 400 },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        self.panel.validate()?;
        let ok = self.omega_min > 0.0
            && self.first_panel > 0.0
            && self.growth >= 1.0
            && self.truncation_tol > 0.0
            && self.settle_panels >= 1
            && self.omega_max > self.omega_min;
        if ok {
            Ok(())
        } else {
            Err(NumericsError::Domain("invalid Gil-Pelaez panel specification".into()))
        }
    }
}

/// ∫_0^∞ g(ω) dω for an inversion integrand g(ω) = Im[M(jω) e^{jωt}] / ω.
///
/// The integrand must have a finite limit at ω → 0⁺; integration starts at
/// `omega_min`.
pub fn integrate_gil_pelaez<F: FnMut(f64) -> f64>(
    mut integrand: F,
    spec: &GilPelaezSpec,
) -> Result<f64, NumericsError> {
    spec.validate()?;
    let mut total = 0.0;
    let mut lo = spec.omega_min;
    let mut width = spec.first_panel;
    let mut quiet = 0;
    let mut all_converged = true;
    let mut worst_err = 0.0_f64;
    loop {
        let hi = lo + width;
        let run = adaptive(&mut integrand, lo, hi, &spec.panel)?;
        all_converged &= run.converged;
        worst_err = worst_err.max(run.error);
        total += run.value;
        if run.value.abs() < spec.truncation_tol {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= spec.settle_panels {
            break;
        }
        if hi >= spec.omega_max {
            return Err(NumericsError::NotDecayed { estimate: total, omega_max: hi });
        }
        lo = hi;
        width *= spec.growth;
    }
    if all_converged {
        Ok(total)
    } else {
        Err(NumericsError::NotConverged { estimate: total, error: worst_err })
    }
}

/// CDF at `t` of a random variable X from its transform M(jω) = E[e^{-jωX}]:
///
/// F(t) = 1/2 + (1/π) ∫_0^∞ Im[M(jω) e^{jωt}] / ω dω.
///
/// With M(jω) the conjugate characteristic function this is the classical
/// inversion formula; the sign is pinned by the unit-step and exponential
/// tests below.
pub fn gil_pelaez_cdf<M: FnMut(f64) -> ComplexValue>(
    mut transform: M,
    t: f64,
    spec: &GilPelaezSpec,
) -> Result<f64, NumericsError> {
    let integrand = |w: f64| {
        let m = transform(w);
        let rot = ComplexValue::new(0.0, w * t).exp();
        (m * rot).im / w
    };
    match integrate_gil_pelaez(integrand, spec) {
        Ok(v) => Ok(0.5 + v / std::f64::consts::PI),
        Err(NumericsError::NotConverged { estimate, error }) => Err(NumericsError::NotConverged {
            estimate: 0.5 + estimate / std::f64::consts::PI,
            error: error / std::f64::consts::PI,
        }),
        Err(NumericsError::NotDecayed { estimate, omega_max }) => {
            Err(NumericsError::NotDecayed { estimate: 0.5 + estimate / std::f64::consts::PI, omega_max })
        }
        Err(e) => Err(e),
    }
}

/// Midpoint-rule form of the inversion integral on ω_k = (k + 1/2)·h:
///
/// F(t) = M(0)/2 + (h/π) Σ_k Im[M(jω_k) e^{jω_k t}] / ω_k.
///
/// For a distribution whose mass lies within 2π/h of `t` the sum is exact
/// once M has decayed; the only error is truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GilPelaezSeries {
    pub step: f64,
    /// Summation stops once |M(jω)|/π stays below this for `settle_terms`
    /// consecutive terms; for |M| decaying at least like 1/ω that bounds
    /// the neglected tail.
    pub decay_tol: f64,
    pub settle_terms: usize,
    pub max_terms: usize,
}

impl GilPelaezSeries {
    /// Step chosen so that all mass on [lo, hi] is well inside the
    /// aliasing window around `t`.
    pub fn for_support(lo: f64, hi: f64, t: f64, decay_tol: f64, max_terms: usize) -> Self {
        let reach = (t - lo).abs().max((hi - t).abs()).max(1e-3);
        Self { step: 2.0 * std::f64::consts::PI / (1.5 * reach), decay_tol, settle_terms: 16, max_terms }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        if self.step > 0.0 && self.decay_tol > 0.0 && self.settle_terms >= 1 && self.max_terms >= 1 {
            Ok(())
        } else {
            Err(NumericsError::Domain("invalid Gil-Pelaez series specification".into()))
        }
    }
}

/// CDF at `t` by the midpoint series. `transform(k, ω_k)` is called for
/// k = 0, 1, 2, ... in order and returns M(jω_k) = E[e^{-jω_k X}]; `mass`
/// is M(0).
pub fn gil_pelaez_series_cdf<M>(
    mut transform: M,
    t: f64,
    mass: f64,
    series: &GilPelaezSeries,
) -> Result<f64, NumericsError>
where
    M: FnMut(usize, f64) -> Result<ComplexValue, NumericsError>,
{
    series.validate()?;
    let h = series.step;
    let mut sum = 0.0;
    let mut quiet = 0;
    for k in 0..series.max_terms {
        let w = (k as f64 + 0.5) * h;
        let m = transform(k, w)?;
        sum += (m * ComplexValue::new(0.0, w * t).exp()).im / w;
        if m.norm() <= std::f64::consts::PI * series.decay_tol {
            quiet += 1;
            if quiet >= series.settle_terms {
                return Ok(0.5 * mass + h * sum / std::f64::consts::PI);
            }
        } else {
            quiet = 0;
        }
    }
    Err(NumericsError::NotDecayed {
        estimate: 0.5 * mass + h * sum / std::f64::consts::PI,
        omega_max: (series.max_terms as f64 - 0.5) * h,
    })
}
