//! Special functions, quadrature and root finding shared by the analytic
//! evaluators.
//!
//! Everything here is a pure function of its inputs.

mod gamma;
mod gil_pelaez;
mod quadrature;
mod roots;

pub use gamma::{ln_gamma, reg_lower_inc_gamma};
pub use gil_pelaez::{gil_pelaez_cdf, gil_pelaez_series_cdf, integrate_gil_pelaez, GilPelaezSeries, GilPelaezSpec};
pub(crate) use quadrature::adaptive;
pub use quadrature::{integrate_finite, integrate_finite_complex, kronrod_nodes, QuadValue, QuadratureSpec};
pub use roots::find_root_monotone;

/// Complex number used for MGF / characteristic-function values.
pub type ComplexValue = num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    /// The adaptive scheme ran out of subdivisions. `estimate` is the best
    /// value reached and `error` its estimated absolute error.
    #[error("quadrature did not converge: estimate {estimate}, error estimate {error:.3e}")]
    NotConverged { estimate: f64, error: f64 },
    /// The oscillatory integrand had not decayed by the maximum frequency.
    #[error("integrand did not decay before omega = {omega_max}: estimate {estimate}")]
    NotDecayed { estimate: f64, omega_max: f64 },
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

impl NumericsError {
    /// Best available estimate carried by a flagged result, if any.
    pub fn estimate(&self) -> Option<f64> {
        match self {
            NumericsError::NotConverged { estimate, .. } | NumericsError::NotDecayed { estimate, .. } => {
                Some(*estimate)
            }
            _ => None,
        }
    }
}
