use serde::{Deserialize, Serialize};

use super::{integrate_over_law, EstimateStatus, Method, OutageError, OutageEstimate, OutageQuery};
use crate::channel::{Access, FadingModel, LinkBudget, PowerSplit, User};
use crate::numerics::{reg_lower_inc_gamma, QuadratureSpec};
use crate::pairing::DistanceLaw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSpec {
    pub quadrature: QuadratureSpec,
}

impl Default for ExactSpec {
    fn default() -> Self {
        Self { quadrature: QuadratureSpec { abs_tol: 1e-10, rel_tol: 1e-8, max_subdivisions: 2000 } }
    }
}

/// Fraction of the received signal that survives interference: a2 for the
/// far NOMA user, 1 otherwise.
fn signal_fraction(query: &OutageQuery, split: PowerSplit) -> f64 {
    match (query.access, query.user) {
        (Access::Noma, User::Far) => split.a2(),
        _ => 1.0,
    }
}

/// Distance beyond which the SINR ceiling falls below y, or `None` when
/// it is below y everywhere.
fn threshold_distance(c1: f64, y: f64, k: f64) -> Option<f64> {
    let excess = c1 * (1.0 + y) - y;
    if excess <= 0.0 {
        None
    } else if k == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some((excess / y).ln_1p() / k)
    }
}

/// Single-carrier outage with thermal noise, by integrating the
/// conditional fading outage over the distance law.
pub fn outage_exact_single(
    query: &OutageQuery,
    budget: &LinkBudget,
    split: PowerSplit,
    fading: &FadingModel,
    law: &DistanceLaw,
    spec: &ExactSpec,
) -> Result<OutageEstimate, OutageError> {
    query.validate()?;
    budget.validate()?;
    fading.validate()?;
    let y = query.sinr_threshold();
    let c1 = signal_fraction(query, split);
    let k = budget.absorption_per_m;
    let Some(d_th) = threshold_distance(c1, y, k) else {
        return Ok(OutageEstimate::new(1.0, Method::ExactIntegral, EstimateStatus::Ok));
    };
    let b = match (query.access, query.user) {
        (Access::Noma, User::Near) => split.a1() * budget.full_power_coefficient(),
        _ => budget.full_power_coefficient(),
    };
    let (lo, hi) = law.support();
    let tail = law.survival(d_th.max(lo));
    if budget.noise_w == 0.0 || d_th <= lo {
        return Ok(OutageEstimate::new(tail, Method::ExactIntegral, EstimateStatus::Ok));
    }
    let (m, scale, n0) = (fading.shape, fading.scale(), budget.noise_w);
    // c1(1+y)e^{-kd} - y, written to stay accurate as d approaches d_th
    let margin = |d: f64| if k == 0.0 { c1 * (1.0 + y) - y } else { y * (k * (d_th - d)).exp_m1() };
    let conditional = |d: f64| {
        let arg = y * n0 * d * d / (scale * b * margin(d));
        reg_lower_inc_gamma(m, arg).unwrap_or(1.0)
    };
    let (value, _, converged) = integrate_over_law(law, lo, d_th.min(hi), conditional, &spec.quadrature)?;
    let status = if converged { EstimateStatus::Ok } else { EstimateStatus::NotConverged };
    Ok(OutageEstimate::new(value + tail, Method::ExactIntegral, status))
}

/// Single-carrier outage when absorption noise dominates thermal noise:
/// the user is in outage exactly when it lies beyond the threshold
/// distance.
pub fn outage_simplified_single(
    query: &OutageQuery,
    split: PowerSplit,
    k: f64,
    law: &DistanceLaw,
) -> Result<OutageEstimate, OutageError> {
    query.validate()?;
    if !(k >= 0.0 && k.is_finite()) {
        return Err(OutageError::Domain(format!("absorption coefficient must be nonnegative, got {k}")));
    }
    let y = query.sinr_threshold();
    let unclamped = match threshold_distance(signal_fraction(query, split), y, k) {
        None => 1.0,
        Some(d) if d.is_infinite() => 0.0,
        Some(d) => 1.0 - law.cdf_unclamped(d),
    };
    Ok(OutageEstimate::new(unclamped, Method::Simplified, EstimateStatus::Ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::{distance_laws, PairingScheme, Scheme, Thresholds};
    use approx::assert_abs_diff_eq;

    fn laws(scheme: Scheme, a1: f64, k: f64) -> (DistanceLaw, DistanceLaw) {
        let t = Thresholds::single(a1, k).unwrap();
        distance_laws(&PairingScheme::new(scheme, 60.0).unwrap(), Some(&t)).unwrap()
    }

    fn all_schemes() -> [Scheme; 4] {
        [
            Scheme::Random,
            Scheme::NearestFarthest { users: 300 },
            Scheme::Proposed,
            Scheme::Enhanced { users: 300, truncate_near: false },
        ]
    }

    fn q(user: User, access: Access, target: f64) -> OutageQuery {
        OutageQuery::new(user, access, target).unwrap()
    }

    #[test]
    fn proposed_near_value() {
        let (near, _) = laws(Scheme::Proposed, 0.33, 0.05);
        let split = PowerSplit::new(0.33).unwrap();
        let p = outage_simplified_single(&q(User::Near, Access::Noma, 3.0), split, 0.05, &near).unwrap();
        assert_abs_diff_eq!(p.probability, 0.9613, epsilon = 1e-4);
        let d_th = (8.0f64 / 7.0).ln() / 0.05;
        let r1 = (0.67f64 / 0.34).ln() / 0.05;
        assert_abs_diff_eq!(p.probability, 1.0 - (d_th / r1).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn degenerate_cases() {
        let split = PowerSplit::new(0.33).unwrap();
        let (_, far) = laws(Scheme::Random, 0.33, 0.05);
        // y2 >= a2/a1: interference ceiling
        let y_limit: f64 = 0.67 / 0.33;
        let tau = (1.0 + y_limit).log2() + 0.01;
        let p = outage_simplified_single(&q(User::Far, Access::Noma, tau), split, 0.05, &far).unwrap();
        assert_eq!(p.probability, 1.0);
        let budget = LinkBudget::reference(0.05);
        let e = outage_exact_single(
            &q(User::Far, Access::Noma, tau),
            &budget,
            split,
            &FadingModel::default(),
            &far,
            &ExactSpec::default(),
        )
        .unwrap();
        assert_eq!(e.probability, 1.0);
        // small target: threshold distance past the support
        let p = outage_simplified_single(&q(User::Far, Access::Noma, 1e-4), split, 0.05, &far).unwrap();
        assert_eq!(p.probability, 0.0);
        assert!(p.unclamped < 0.0);
    }

    #[test]
    fn exact_equals_simplified_without_thermal_noise() {
        let split = PowerSplit::new(0.33).unwrap();
        for k in [0.01, 0.05, 0.1] {
            let budget = LinkBudget::reference(k).with_noise(0.0);
            for s in all_schemes() {
                let (near, far) = laws(s, 0.33, k);
                for access in Access::ALL {
                    for (user, law, tau) in [(User::Near, &near, 3.0), (User::Far, &far, 0.5)] {
                        let query = q(user, access, tau);
                        let a = outage_exact_single(
                            &query,
                            &budget,
                            split,
                            &FadingModel::default(),
                            law,
                            &ExactSpec::default(),
                        )
                        .unwrap();
                        let b = outage_simplified_single(&query, split, k, law).unwrap();
                        assert_abs_diff_eq!(a.probability, b.probability, epsilon = 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn thermal_noise_only_adds_outage() {
        let split = PowerSplit::new(0.33).unwrap();
        let (near, far) = laws(Scheme::Random, 0.33, 0.05);
        let mut prev = [0.0; 2];
        for n0 in [0.0, 1e-21, 1e-12, 1e-10, 1e-9] {
            let budget = LinkBudget::reference(0.05).with_noise(n0);
            let mut now = [0.0; 2];
            for (i, (user, law, tau)) in [(User::Near, &near, 3.0), (User::Far, &far, 0.5)].into_iter().enumerate() {
                let e = outage_exact_single(
                    &q(user, Access::Noma, tau),
                    &budget,
                    split,
                    &FadingModel::default(),
                    law,
                    &ExactSpec::default(),
                )
                .unwrap();
                assert!(e.status.is_ok());
                now[i] = e.probability;
                assert!(now[i] >= prev[i] - 1e-9, "n0 = {n0}");
            }
            prev = now;
        }
        assert!(prev[1] > 0.0);
    }

    #[test]
    fn monotone_in_target_and_absorption() {
        let split = PowerSplit::new(0.33).unwrap();
        for s in all_schemes() {
            for user in User::ALL {
                for access in Access::ALL {
                    let mut prev_k = 0.0;
                    for i in 1..=10 {
                        let k = 0.01 * i as f64;
                        let (near, far) = laws(Scheme::Random, 0.33, 0.05);
                        let law = if user == User::Near { near } else { far };
                        let p = outage_simplified_single(&q(user, access, 1.0), split, k, &law).unwrap().probability;
                        assert!(p >= prev_k - 1e-12);
                        prev_k = p;
                    }
                    let (near, far) = laws(s, 0.33, 0.05);
                    let law = if user == User::Near { near } else { far };
                    let mut prev_t = 0.0;
                    for i in 1..=40 {
                        let p = outage_simplified_single(&q(user, access, 0.1 * i as f64), split, 0.05, &law)
                            .unwrap()
                            .probability;
                        assert!(p >= prev_t - 1e-12);
                        prev_t = p;
                    }
                }
            }
        }
    }

    #[test]
    fn tiny_target_never_fails() {
        let split = PowerSplit::new(0.33).unwrap();
        let (near, _) = laws(Scheme::Random, 0.33, 0.05);
        let budget = LinkBudget::reference(0.05);
        let e = outage_exact_single(
            &q(User::Near, Access::Noma, 1e-6),
            &budget,
            split,
            &FadingModel::default(),
            &near,
            &ExactSpec::default(),
        )
        .unwrap();
        assert!(e.probability < 1e-9);
    }
}
