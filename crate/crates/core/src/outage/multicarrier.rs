use serde::{Deserialize, Serialize};

use super::{log_panels, EstimateStatus, Method, OutageError, OutageEstimate, OutageQuery};
use crate::channel::{Access, FadingModel, LinkBudget, PowerSplit, SinrCoefficients, SubcarrierPlan, User};
use crate::numerics::{
    adaptive, find_root_monotone, gil_pelaez_series_cdf, kronrod_nodes, ln_gamma, reg_lower_inc_gamma, ComplexValue,
    GilPelaezSeries, NumericsError, QuadratureSpec,
};
use crate::pairing::DistanceLaw;

/// share · ln(1 + SINR) on one carrier with thermal noise neglected.
pub fn noiseless_log_capacity(user: User, access: Access, split: PowerSplit, k: f64, d: f64) -> f64 {
    let share = access.time_share();
    match (access, user) {
        (Access::Noma, User::Far) => -share * (-split.a2() * (-k * d).exp()).ln_1p(),
        _ => -share * (-(-k * d).exp_m1()).ln(),
    }
}

fn total_log_capacity(query: &OutageQuery, split: PowerSplit, ks: &[f64], d: f64) -> f64 {
    ks.iter().map(|&k| noiseless_log_capacity(query.user, query.access, split, k, d)).sum()
}

/// Multi-carrier outage with thermal noise neglected: the aggregate
/// capacity is a decreasing function of distance, so outage is the law's
/// mass beyond the distance where it meets the target.
pub fn multicarrier_outage_lemma3(
    query: &OutageQuery,
    split: PowerSplit,
    plan: &SubcarrierPlan,
    law: &DistanceLaw,
) -> Result<OutageEstimate, OutageError> {
    query.validate()?;
    let ks = plan.absorption();
    let target = query.target * std::f64::consts::LN_2;
    let (lo, hi) = law.support();
    let lo = lo.max(hi * 1e-12);
    let excess = |d: f64| total_log_capacity(query, split, &ks, d) - target;
    let p = if excess(hi) >= 0.0 {
        0.0
    } else if excess(lo) < 0.0 {
        1.0
    } else {
        let d_star = find_root_monotone(excess, lo, hi, 1e-13 * hi)?;
        law.survival(d_star)
    };
    Ok(OutageEstimate::new(p, Method::Lemma3, EstimateStatus::Ok))
}

/// Gamma shape/scale and the log-χ window holding all but ~1e-13 of the
/// fading mass.
struct GammaWindow {
    m: f64,
    scale: f64,
    ln_norm: f64,
    u_lo: f64,
    u_hi: f64,
}

impl GammaWindow {
    fn new(fading: &FadingModel) -> Self {
        let m = fading.shape;
        let scale = fading.scale();
        let x_lo = (1e-13f64.ln() + ln_gamma(m + 1.0)) / m;
        let x_hi = m + 40.0 + 10.0 * m.sqrt();
        Self {
            m,
            scale,
            ln_norm: ln_gamma(m) + m * scale.ln(),
            u_lo: x_lo.exp().ln() + scale.ln(),
            u_hi: (x_hi * scale).ln(),
        }
    }

    /// χ f(χ): the Gamma density with respect to u = ln χ.
    fn density_u(&self, u: f64) -> f64 {
        let chi = u.exp();
        (self.m * u - chi / self.scale - self.ln_norm).exp()
    }

    fn mass(&self, ua: f64, ub: f64) -> f64 {
        let p = |u: f64| reg_lower_inc_gamma(self.m, u.exp() / self.scale).unwrap_or(1.0);
        p(ub) - p(ua)
    }

    fn panels(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = (self.u_hi - self.u_lo).ceil().max(1.0) as usize;
        let w = (self.u_hi - self.u_lo) / n as f64;
        (0..n).map(move |i| (self.u_lo + i as f64 * w, self.u_lo + (i + 1) as f64 * w))
    }
}

/// share · ln W as a function of χ at fixed distance.
struct LogCapacity {
    share: f64,
    c: SinrCoefficients,
}

impl LogCapacity {
    fn at(&self, chi: f64) -> f64 {
        self.share * self.c.sinr(chi).ln_1p()
    }
    fn ceiling(&self) -> f64 {
        self.share * self.c.ceiling().ln_1p()
    }
}

fn coefficients(
    query: &OutageQuery,
    budget: &LinkBudget,
    split: PowerSplit,
    d: f64,
) -> Result<LogCapacity, OutageError> {
    if !(budget.absorption_per_m > 0.0) {
        return Err(OutageError::Domain("the MGF path needs a positive absorption coefficient".into()));
    }
    let c = SinrCoefficients::at(budget, split, query.user, query.access, d)?;
    Ok(LogCapacity { share: query.access.time_share(), c })
}

/// E[W^{-s·share} | d] for one carrier, with W = 1 + SINR and the
/// expectation over Gamma fading, computed by direct quadrature in ln χ.
/// `budget` is the carrier's own budget. Requires Re s ≥ 0.
pub fn conditional_mgf(
    query: &OutageQuery,
    budget: &LinkBudget,
    split: PowerSplit,
    fading: &FadingModel,
    d: f64,
    s: ComplexValue,
) -> Result<ComplexValue, OutageError> {
    fading.validate()?;
    budget.validate()?;
    if s.re < 0.0 || !s.is_finite() {
        return Err(OutageError::Domain(format!("MGF argument needs a nonnegative finite real part, got {s}")));
    }
    let lc = coefficients(query, budget, split, d)?;
    let y_inf = lc.ceiling();
    let h_inf = (-s * y_inf).exp();
    if budget.noise_w == 0.0 || s == ComplexValue::new(0.0, 0.0) {
        return Ok(h_inf);
    }
    let g = GammaWindow::new(fading);
    let spec = QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-10, max_subdivisions: 400 };
    let mut total = h_inf;
    let mut error = 0.0;
    let mut converged = true;
    for (ua, ub) in g.panels() {
        let mass = g.mass(ua, ub);
        let bound = (s.norm() * (y_inf - lc.at(ua.exp()))).min(2.0) * mass;
        if bound < 1e-14 {
            continue;
        }
        let run = adaptive(|u: f64| ((-s * lc.at(u.exp())).exp() - h_inf) * g.density_u(u), ua, ub, &spec)?;
        total += run.value;
        error += run.error;
        converged &= run.converged;
    }
    if converged {
        Ok(total)
    } else {
        Err(NumericsError::NotConverged { estimate: total.re, error }.into())
    }
}

/// Controls for [`multicarrier_outage_mgf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfSpec {
    /// Bound on the neglected inversion tail.
    pub decay_tol: f64,
    /// Largest ω the inversion may reach before the result is flagged.
    pub omega_cap: f64,
    /// ω the first distance/fading tables are built for; doubled as needed.
    pub initial_omega: f64,
    /// Mass of a law starting at d = 0 left out below its lowest quantile.
    pub low_tail: f64,
    /// A carrier is treated as fading-independent at a distance when its
    /// MGF differs from the noiseless one by less than this.
    pub point_mass_tol: f64,
    /// Phase cycles allowed per 21-point panel at the table's ω.
    pub cycles_per_panel: f64,
    /// Cap on stored quadrature points per table.
    pub max_points: usize,
}

impl Default for MgfSpec {
    fn default() -> Self {
        Self {
            decay_tol: 1e-3,
            omega_cap: 131_072.0,
            initial_omega: 16.0,
            low_tail: 1e-9,
            point_mass_tol: 1e-9,
            cycles_per_panel: 2.0,
            max_points: 40_000_000,
        }
    }
}

/// e^{-jωy} advanced by a fixed ω step.
#[derive(Clone, Copy)]
struct Phasor {
    weight: f64,
    z: ComplexValue,
    step: ComplexValue,
}

impl Phasor {
    fn new(weight: f64, y: f64, omega: f64, h: f64) -> Self {
        Self { weight, z: ComplexValue::new(0.0, -omega * y).exp(), step: ComplexValue::new(0.0, -h * y).exp() }
    }
    fn advance(&mut self) {
        self.z *= self.step;
    }
}

/// A distance node where at least one carrier's fading matters.
struct MixedNode {
    weight: f64,
    fixed: Phasor,
    /// Ranges into the flat point list, one per fading-dependent carrier.
    carriers: Vec<(usize, usize)>,
}

/// Discretised joint law of (d, χ_1..χ_N) good for ω up to the table's
/// `omega`.
struct MgfTable {
    simple: Vec<Phasor>,
    mixed: Vec<MixedNode>,
    points: Vec<Phasor>,
}

impl MgfTable {
    fn advance(&mut self) {
        self.simple.iter_mut().for_each(Phasor::advance);
        self.points.iter_mut().for_each(Phasor::advance);
        self.mixed.iter_mut().for_each(|n| n.fixed.advance());
    }

    fn value(&self) -> ComplexValue {
        let mut total: ComplexValue = self.simple.iter().map(|p| p.z * p.weight).sum();
        for node in &self.mixed {
            let mut prod = node.fixed.z;
            for &(a, b) in &node.carriers {
                prod *= self.points[a..b].iter().map(|p| p.z * p.weight).sum::<ComplexValue>();
            }
            total += prod * node.weight;
        }
        total
    }
}

struct MgfModel<'a> {
    query: &'a OutageQuery,
    split: PowerSplit,
    budgets: Vec<LinkBudget>,
    ks: Vec<f64>,
    fading: &'a FadingModel,
    law: &'a DistanceLaw,
    gamma: GammaWindow,
    d_lo: f64,
    spec: &'a MgfSpec,
}

impl MgfModel<'_> {
    fn x0(&self, d: f64) -> f64 {
        total_log_capacity(self.query, self.split, &self.ks, d)
    }

    fn subdivisions(&self, width: f64, phase_span: f64, omega: f64) -> usize {
        let by_phase = phase_span.abs() * omega / (2.0 * std::f64::consts::PI * self.spec.cycles_per_panel);
        (width / 0.5).max(by_phase).ceil().max(1.0) as usize
    }

    fn fading_matters(&self, lc: &LogCapacity, noise: f64, omega: f64) -> bool {
        if noise == 0.0 {
            return false;
        }
        let m = self.fading.shape;
        if m <= 1.0 {
            return true;
        }
        // |E[e^{-jωy}] - e^{-jωy∞}| ≤ ω·share·(α/β)·(N0/β)·E[1/χ]
        let knee = noise / lc.c.self_noise;
        let bound = omega * lc.share * lc.c.ceiling() * knee / (self.fading.scale() * (m - 1.0));
        bound > self.spec.point_mass_tol
    }

    fn fading_points(&self, lc: &LogCapacity, omega: f64, at: f64, h: f64, out: &mut Vec<Phasor>) {
        let g = &self.gamma;
        for (ua, ub) in g.panels() {
            if g.mass(ua, ub) < 1e-13 {
                continue;
            }
            let span = lc.at(ub.exp()) - lc.at(ua.exp());
            let n = self.subdivisions(0.0, span, omega);
            let w = (ub - ua) / n as f64;
            for i in 0..n {
                let a = ua + i as f64 * w;
                for (u, wt) in kronrod_nodes(a, a + w) {
                    out.push(Phasor::new(wt * g.density_u(u), lc.at(u.exp()), at, h));
                }
            }
        }
    }

    /// Tables resolving phases up to `omega`, with phasors set at ω = `at`.
    fn build(&self, omega: f64, at: f64, h: f64) -> Result<Option<MgfTable>, OutageError> {
        let (_, hi) = self.law.support();
        let cuts = log_panels(self.law, self.d_lo, hi, 32);
        let mut table = MgfTable { simple: Vec::new(), mixed: Vec::new(), points: Vec::new() };
        for c in cuts.windows(2) {
            let span = self.x0(c[0].exp()) - self.x0(c[1].exp());
            let n = self.subdivisions(c[1] - c[0], span, omega);
            let w = (c[1] - c[0]) / n as f64;
            for i in 0..n {
                let a = c[0] + i as f64 * w;
                for (u, wt) in kronrod_nodes(a, a + w) {
                    let d = u.exp();
                    let weight = wt * self.law.pdf(d) * d;
                    let mut fixed = 0.0;
                    let mut carriers = Vec::new();
                    for (b, &k) in self.budgets.iter().zip(&self.ks) {
                        let lc = coefficients(self.query, b, self.split, d)?;
                        if self.fading_matters(&lc, b.noise_w, omega) {
                            let start = table.points.len();
                            self.fading_points(&lc, omega, at, h, &mut table.points);
                            carriers.push((start, table.points.len()));
                        } else {
                            fixed += noiseless_log_capacity(self.query.user, self.query.access, self.split, k, d);
                        }
                    }
                    if carriers.is_empty() {
                        table.simple.push(Phasor::new(weight, fixed, at, h));
                    } else {
                        table.mixed.push(MixedNode { weight, fixed: Phasor::new(1.0, fixed, at, h), carriers });
                    }
                    if table.simple.len() + table.points.len() > self.spec.max_points {
                        return Ok(None);
                    }
                }
            }
        }
        Ok(Some(table))
    }
}

/// Multi-carrier outage by inverting the MGF of the aggregate log-capacity
/// X = Σ_n share·ln(1 + SINR_n): outage = Pr(X < τ ln 2).
///
/// The MGF averages the per-carrier conditional MGFs over fading and then
/// over the distance law; the CDF is recovered with the Gil-Pelaez
/// midpoint series.
pub fn multicarrier_outage_mgf(
    query: &OutageQuery,
    split: PowerSplit,
    plan: &SubcarrierPlan,
    law: &DistanceLaw,
    budget: &LinkBudget,
    fading: &FadingModel,
    spec: &MgfSpec,
) -> Result<OutageEstimate, OutageError> {
    query.validate()?;
    budget.validate()?;
    fading.validate()?;
    let (lo, _) = law.support();
    let d_lo = if lo == 0.0 { law.quantile(spec.low_tail) } else { lo };
    let model = MgfModel {
        query,
        split,
        budgets: (0..plan.len()).map(|n| plan.budget(budget, n)).collect(),
        ks: plan.absorption(),
        fading,
        law,
        gamma: GammaWindow::new(fading),
        d_lo,
        spec,
    };
    let target = query.target * std::f64::consts::LN_2;
    let kept = law.survival(d_lo);
    let x_top = model.x0(d_lo);
    // thermal noise only lowers X below its noiseless value
    if target >= x_top {
        return Ok(OutageEstimate::new(kept, Method::Mgf, EstimateStatus::Ok));
    }
    if budget.noise_w == 0.0 && target <= model.x0(law.support().1) {
        return Ok(OutageEstimate::new(0.0, Method::Mgf, EstimateStatus::Ok));
    }
    let mut series = GilPelaezSeries::for_support(0.0, x_top, target, spec.decay_tol, 1);
    series.max_terms = (spec.omega_cap / series.step).ceil().max(1.0) as usize;
    let h = series.step;

    let mut table: Option<MgfTable> = None;
    let mut table_omega = 0.0;
    let mut exhausted = false;
    let result = gil_pelaez_series_cdf(
        |_, omega| {
            if table.is_none() || omega > table_omega {
                table_omega = spec.initial_omega.max(table_omega);
                while table_omega < omega {
                    table_omega *= 2.0;
                }
                match model.build(table_omega, omega, h) {
                    Ok(Some(t)) => table = Some(t),
                    Ok(None) => {
                        exhausted = true;
                        return Err(NumericsError::NotConverged { estimate: f64::NAN, error: f64::NAN });
                    }
                    Err(OutageError::Numerics(e)) => return Err(e),
                    Err(e) => return Err(NumericsError::Domain(e.to_string())),
                }
            } else if let Some(t) = table.as_mut() {
                t.advance();
            }
            Ok(table.as_ref().map(MgfTable::value).unwrap_or_default())
        },
        target,
        kept,
        &series,
    );
    let (value, status) = match result {
        Ok(v) => (v, EstimateStatus::Ok),
        Err(NumericsError::NotDecayed { estimate, .. }) => (estimate, EstimateStatus::NotDecayed),
        Err(NumericsError::NotConverged { .. }) if exhausted => {
            return Err(OutageError::Domain(format!("MGF tables exceed {} points", spec.max_points)))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(OutageEstimate::new(value, Method::Mgf, status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outage::{outage_exact_single, outage_simplified_single, ExactSpec};
    use crate::pairing::{distance_laws, multicarrier_thresholds, PairingScheme, Scheme, Thresholds};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    fn q(user: User, access: Access, target: f64) -> OutageQuery {
        OutageQuery::new(user, access, target).unwrap()
    }

    fn split() -> PowerSplit {
        PowerSplit::new(0.33).unwrap()
    }

    fn reference_laws(scheme: Scheme, plan: &SubcarrierPlan) -> (DistanceLaw, DistanceLaw) {
        let t = multicarrier_thresholds(0.33, &plan.absorption()).unwrap();
        distance_laws(&PairingScheme::new(scheme, 60.0).unwrap(), Some(&t)).unwrap()
    }

    #[test]
    fn lemma3_single_carrier_matches_simplified() {
        let plan = SubcarrierPlan::new(vec![crate::channel::Subcarrier { frequency_hz: 1e12, absorption_per_m: 0.05 }])
            .unwrap();
        let t = Thresholds::single(0.33, 0.05).unwrap();
        for scheme in [Scheme::Random, Scheme::Proposed, Scheme::NearestFarthest { users: 300 }] {
            let (near, far) = distance_laws(&PairingScheme::new(scheme, 60.0).unwrap(), Some(&t)).unwrap();
            for access in Access::ALL {
                for (user, law) in [(User::Near, near), (User::Far, far)] {
                    for tau in [0.2, 0.5, 1.0, 3.0, 6.0] {
                        let query = q(user, access, tau);
                        let a = multicarrier_outage_lemma3(&query, split(), &plan, &law).unwrap();
                        let b = outage_simplified_single(&query, split(), 0.05, &law).unwrap();
                        assert_abs_diff_eq!(a.probability, b.probability, epsilon = 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn lemma3_far_ceiling() {
        let plan = SubcarrierPlan::reference();
        let (_, far) = reference_laws(Scheme::Random, &plan);
        let ceiling: f64 = 6.0 * -(1.0f64 - 0.67).ln() / std::f64::consts::LN_2;
        let p = multicarrier_outage_lemma3(&q(User::Far, Access::Noma, ceiling + 0.01), split(), &plan, &far).unwrap();
        assert_eq!(p.probability, 1.0);
    }

    #[test]
    fn lemma3_near_outage_falls_with_carriers() {
        let full = SubcarrierPlan::reference();
        let (near, _) = reference_laws(Scheme::Proposed, &full);
        let mut prev = 1.0;
        for n in 1..=6 {
            let p =
                multicarrier_outage_lemma3(&q(User::Near, Access::Noma, 8.0), split(), &full.prefix(n).unwrap(), &near)
                    .unwrap()
                    .probability;
            assert!(p <= prev + 1e-12);
            prev = p;
        }
        assert!(prev < 1.0);
    }

    #[test]
    fn conditional_mgf_basics() {
        let budget = LinkBudget::reference(0.0357).with_carrier(0.85e12, 0.0357);
        let f = FadingModel::default();
        let one =
            conditional_mgf(&q(User::Near, Access::Noma, 1.0), &budget, split(), &f, 5.0, ComplexValue::new(0.0, 0.0))
                .unwrap();
        assert_eq!(one, ComplexValue::new(1.0, 0.0));
        let quiet = budget.with_noise(0.0);
        let j = ComplexValue::new(0.0, 1.0);
        let pm = conditional_mgf(&q(User::Near, Access::Noma, 1.0), &quiet, split(), &f, 5.0, j).unwrap();
        let y = noiseless_log_capacity(User::Near, Access::Noma, split(), 0.0357, 5.0);
        assert_abs_diff_eq!((pm - (-j * y).exp()).norm(), 0.0, epsilon = 1e-14);
        let v = conditional_mgf(&q(User::Near, Access::Noma, 1.0), &budget, split(), &f, 5.0, j).unwrap();
        assert!(v.norm() <= 1.0 + 1e-12);
        assert!(conditional_mgf(
            &q(User::Near, Access::Noma, 1.0),
            &budget,
            split(),
            &f,
            5.0,
            ComplexValue::new(-1.0, 0.0)
        )
        .is_err());
    }

    #[test]
    fn conditional_mgf_against_sampling() {
        let budget = LinkBudget::reference(0.05).with_noise(3e-9);
        let f = FadingModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gamma = Gamma::new(f.shape, f.scale()).unwrap();
        let chis: Vec<f64> = (0..400_000).map(|_| gamma.sample(&mut rng)).collect();
        for (user, access, d) in
            [(User::Near, Access::Noma, 5.0), (User::Far, Access::Noma, 20.0), (User::Far, Access::Oma, 30.0)]
        {
            let query = q(user, access, 1.0);
            let c = SinrCoefficients::at(&budget, split(), user, access, d).unwrap();
            for w in [0.5, 1.0, 4.0] {
                let s = ComplexValue::new(0.0, w);
                let exact = conditional_mgf(&query, &budget, split(), &f, d, s).unwrap();
                let mc: ComplexValue = chis
                    .iter()
                    .map(|&chi| (-s * access.time_share() * c.sinr(chi).ln_1p()).exp())
                    .sum::<ComplexValue>()
                    / chis.len() as f64;
                // sample mean of unit-modulus terms: stderr below 1/sqrt(n)
                assert!(
                    (exact - mc).norm() < 5.0 / (chis.len() as f64).sqrt(),
                    "{user:?} {access:?} {w}: {exact} vs {mc}"
                );
            }
        }
    }

    #[test]
    fn mgf_matches_lemma3_without_thermal_noise() {
        let full = SubcarrierPlan::reference();
        let budget = LinkBudget::reference(0.05).with_noise(1e-30);
        let (near, far) = reference_laws(Scheme::Proposed, &full);
        for n in [1, 3, 6] {
            let plan = full.prefix(n).unwrap();
            for access in Access::ALL {
                for (user, law, tau) in [(User::Near, near, 8.0), (User::Far, far, 0.5)] {
                    let query = q(user, access, tau);
                    let a = multicarrier_outage_lemma3(&query, split(), &plan, &law).unwrap();
                    let b = multicarrier_outage_mgf(
                        &query,
                        split(),
                        &plan,
                        &law,
                        &budget,
                        &FadingModel::default(),
                        &MgfSpec::default(),
                    )
                    .unwrap();
                    assert!(b.status.is_ok());
                    assert_abs_diff_eq!(a.probability, b.probability, epsilon = 5e-3);
                }
            }
        }
    }

    #[test]
    fn mgf_matches_exact_single_with_thermal_noise() {
        let plan = SubcarrierPlan::new(vec![crate::channel::Subcarrier { frequency_hz: 1e12, absorption_per_m: 0.05 }])
            .unwrap();
        let budget = LinkBudget::reference(0.05).with_noise(1e-9);
        let t = Thresholds::single(0.33, 0.05).unwrap();
        let (near, far) = distance_laws(&PairingScheme::new(Scheme::Random, 60.0).unwrap(), Some(&t)).unwrap();
        let f = FadingModel::default();
        for (user, law, tau, gap) in [(User::Near, near, 1.0, 0.01), (User::Far, far, 0.5, 5e-4)] {
            let query = q(user, Access::Noma, tau);
            let a = outage_exact_single(&query, &budget, split(), &f, &law, &ExactSpec::default()).unwrap();
            let b = multicarrier_outage_mgf(&query, split(), &plan, &law, &budget, &f, &MgfSpec::default()).unwrap();
            let s = outage_simplified_single(&query, split(), 0.05, &law).unwrap();
            assert!((a.probability - s.probability).abs() > gap);
            assert!(b.status.is_ok());
            assert_abs_diff_eq!(a.probability, b.probability, epsilon = 1e-3);
        }
    }
}
