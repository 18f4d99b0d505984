//! Outage analysis for two-user NOMA pairing in terahertz links with
//! molecular absorption.
//!
//! - [`absorption`]: line-by-line absorption coefficient k(f).
//! - [`channel`]: link budget, SINR forms and per-user rates.
//! - [`pairing`]: pairing thresholds, user-selection schemes and the
//!   resulting distance laws.
//! - [`outage`]: closed-form, quadrature and characteristic-function
//!   outage estimators for one or several subcarriers.
//! - [`montecarlo`]: seeded, parallel simulation of the same quantities.
//! - [`scenario`]: JSON scenarios, parameter sweeps, CSV output and
//!   cross-method validation.
//! - [`numerics`]: quadrature, root finding, incomplete gamma and
//!   Gil-Pelaez inversion.

pub mod absorption;
pub mod channel;
pub mod montecarlo;
pub mod numerics;
pub mod outage;
pub mod pairing;
pub mod scenario;
