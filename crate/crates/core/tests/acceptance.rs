//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL|WARN`
//! line before asserting.

use std::sync::OnceLock;

use thz_noma::absorption::REFERENCE_ABSORPTION;
use thz_noma::channel::{Access, FadingModel, LinkBudget, PowerSplit, SubcarrierPlan, User};
use thz_noma::montecarlo::{estimate_pairing_benefit, sample_distances, Targets, TrialConfig};
use thz_noma::numerics::{gil_pelaez_series_cdf, reg_lower_inc_gamma, ComplexValue, GilPelaezSeries, NumericsError};
use thz_noma::outage::{
    multicarrier_outage_lemma3, multicarrier_outage_mgf, outage_exact_single, outage_simplified_single, ExactSpec,
    Method, MgfSpec, OutageQuery,
};
use thz_noma::pairing::{
    distance_laws, ks_statistic, threshold_far, threshold_near, PairingScheme, Scheme, Thresholds,
};
use thz_noma::scenario::{
    absorption_check, checks_for_rows, csv_string, run_sweep, CheckOutcome, Evaluators, Preset, ScenarioConfig,
    SweepRow,
};

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
}

fn schemes() -> [Scheme; 4] {
    [
        Scheme::Random,
        Scheme::NearestFarthest { users: 300 },
        Scheme::Proposed,
        Scheme::Enhanced { users: 300, truncate_near: false },
    ]
}

fn fig2() -> &'static (ScenarioConfig, Vec<SweepRow>) {
    static ROWS: OnceLock<(ScenarioConfig, Vec<SweepRow>)> = OnceLock::new();
    ROWS.get_or_init(|| {
        let config = Preset::Fig2.config();
        let rows = run_sweep(&config, &Evaluators::default()).expect("fig2 sweep runs");
        (config, rows)
    })
}

fn worst_gap(rows: &[SweepRow], method: Method, sigmas: f64, floor: f64) -> (usize, f64, usize) {
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    let mut failing = 0;
    for a in rows.iter().filter(|r| r.method == method && r.is_ok()) {
        let mc = rows
            .iter()
            .find(|r| {
                r.method == Method::MonteCarlo
                    && r.sweep_value == a.sweep_value
                    && r.scheme == a.scheme
                    && r.user == a.user
                    && r.mode == a.mode
            })
            .expect("montecarlo row");
        let dev = (a.estimate.unwrap() - mc.estimate.unwrap()).abs();
        compared += 1;
        worst = worst.max(dev);
        if dev > floor.max(sigmas * mc.stderr.unwrap()) {
            failing += 1;
        }
    }
    (compared, worst, failing)
}

#[test]
fn criterion_01_analytic_matches_monte_carlo() {
    let (_, rows) = fig2();
    assert!(rows.iter().all(SweepRow::is_ok), "every fig2 row evaluates cleanly");
    let (n, worst, failing) = worst_gap(rows, Method::ExactIntegral, 4.0, 0.015);
    assert_eq!(n, 10 * 4 * 2 * 2);
    report(1, failing == 0, &format!("{n} grid points, max |analytic - MC| = {worst:.4}"));
    assert_eq!(failing, 0);
}

#[test]
fn criterion_02_exact_matches_simplified() {
    let split = PowerSplit::new(0.33).unwrap();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for i in 1..=10 {
        let k = 0.01 * i as f64;
        let budget = LinkBudget::reference(k);
        assert_eq!(budget.noise_w, 1e-21);
        let t = Thresholds::single(0.33, k).unwrap();
        for s in schemes() {
            let (near, far) = distance_laws(&PairingScheme::new(s, 60.0).unwrap(), Some(&t)).unwrap();
            for (user, law, tau) in [(User::Near, &near, 3.0), (User::Far, &far, 0.5)] {
                for access in Access::ALL {
                    let q = OutageQuery::new(user, access, tau).unwrap();
                    let e =
                        outage_exact_single(&q, &budget, split, &FadingModel::default(), law, &ExactSpec::default())
                            .unwrap();
                    let s = outage_simplified_single(&q, split, k, law).unwrap();
                    assert!(e.status.is_ok());
                    worst = worst.max((e.probability - s.probability).abs());
                    n += 1;
                }
            }
        }
    }
    report(2, worst <= 0.005, &format!("{n} points, max |exact - simplified| = {worst:.2e}"));
    assert!(worst <= 0.005);
}

#[test]
fn criterion_03_multicarrier_three_way() {
    let config = Preset::Fig4.config();
    let rows = run_sweep(&config, &Evaluators::default()).unwrap();
    assert!(rows.iter().all(SweepRow::is_ok));
    let (n1, w1, f1) = worst_gap(&rows, Method::Lemma3, 4.0, 0.015);
    let (n2, w2, f2) = worst_gap(&rows, Method::Mgf, 4.0, 0.015);
    let checks = checks_for_rows(&config, &rows, &config.tolerances);
    let l_vs_m = checks.iter().find(|c| c.name == "lemma3 vs mgf").unwrap();
    let monotone = checks
        .iter()
        .filter(|c| c.name.starts_with("near outage nonincreasing"))
        .all(|c| c.outcome == CheckOutcome::Pass);
    let pass = f1 == 0 && f2 == 0 && l_vs_m.outcome == CheckOutcome::Pass && monotone;
    report(
        3,
        pass,
        &format!(
            "{n1}+{n2} MC comparisons (max {w1:.4}, {w2:.4}), lemma3 vs mgf max {:.2e}, near monotone in N: {monotone}",
            l_vs_m.max_deviation
        ),
    );
    assert!(pass);

    // the same comparison without the sweep plumbing, N0 → 0
    let split = PowerSplit::new(0.33).unwrap();
    let budget = LinkBudget::reference(0.0494).with_noise(1e-30);
    let plan = SubcarrierPlan::reference();
    let t = thz_noma::pairing::multicarrier_thresholds(0.33, &plan.absorption()).unwrap();
    let (near, _) = distance_laws(&PairingScheme::new(Scheme::Random, 60.0).unwrap(), Some(&t)).unwrap();
    let q = OutageQuery::new(User::Near, Access::Noma, 8.0).unwrap();
    let a = multicarrier_outage_lemma3(&q, split, &plan, &near).unwrap();
    let b = multicarrier_outage_mgf(&q, split, &plan, &near, &budget, &FadingModel::default(), &MgfSpec::default())
        .unwrap();
    assert!((a.probability - b.probability).abs() < 1e-3);
}

#[test]
fn criterion_04_noma_beats_oma_under_threshold_pairing() {
    let mut all = true;
    let mut detail = Vec::new();
    for a1 in [0.1, 0.2, 0.3, 0.4] {
        for k in [0.03, 0.05] {
            for scheme in [Scheme::Proposed, Scheme::Enhanced { users: 300, truncate_near: false }] {
                let config = TrialConfig {
                    trials: 100_000,
                    seed: 4,
                    scheme: PairingScheme::new(scheme, 60.0).unwrap(),
                    thresholds: Some(Thresholds::single(a1, k).unwrap()),
                    budget: LinkBudget::reference(k).with_noise(0.0),
                    split: PowerSplit::new(a1).unwrap(),
                    fading: FadingModel::default(),
                    plan: None,
                    targets: Targets { near: 3.0, far: 0.5 },
                    ordered: false,
                };
                let (near, far) = estimate_pairing_benefit(&config).unwrap();
                let ok = near.rate.mean == 1.0 && far.rate.mean == 1.0;
                if !ok {
                    detail.push(format!("{} a1={a1} k={k}: {} {}", scheme.name(), near.rate.mean, far.rate.mean));
                }
                all &= ok;
            }
        }
    }
    report(4, all, if all { "16 configurations x 1e5 pairs, NOMA > OMA in every trial" } else { "violations" });
    assert!(all, "{detail:?}");
}

#[test]
fn criterion_05_threshold_ordering() {
    let mut ok = true;
    for k in [0.01, 0.05, 0.1] {
        let mut prev = (0.0, 0.0);
        for i in 1..=49 {
            let a1 = 0.01 * i as f64;
            let (n, f) = (threshold_near(a1, k).unwrap(), threshold_far(a1, k).unwrap());
            ok &= n > f && n > prev.0 && f > prev.1;
            prev = (n, f);
        }
    }
    for i in 1..=49 {
        let a1 = 0.01 * i as f64;
        let at = |k| (threshold_near(a1, k).unwrap(), threshold_far(a1, k).unwrap());
        let (a, b, c) = (at(0.01), at(0.05), at(0.1));
        ok &= a.0 > b.0 && b.0 > c.0 && a.1 > b.1 && b.1 > c.1;
    }
    report(5, ok, "R_th1 > R_th2, both increasing in a1 and decreasing in k");
    assert!(ok);
}

#[test]
fn criterion_06_distance_law_fidelity() {
    let t = Thresholds::single(0.33, 0.05).unwrap();
    let mut worst: f64 = 0.0;
    let all_schemes = [
        Scheme::Random,
        Scheme::NearestFarthest { users: 300 },
        Scheme::Proposed,
        Scheme::Enhanced { users: 300, truncate_near: false },
        Scheme::Enhanced { users: 300, truncate_near: true },
    ];
    for s in all_schemes {
        let scheme = PairingScheme::new(s, 60.0).unwrap();
        let (near, far) = distance_laws(&scheme, Some(&t)).unwrap();
        let config = TrialConfig {
            trials: 1_000_000,
            seed: 6,
            scheme,
            thresholds: Some(t),
            budget: LinkBudget::reference(0.05),
            split: PowerSplit::new(0.33).unwrap(),
            fading: FadingModel::default(),
            plan: None,
            targets: Targets { near: 3.0, far: 0.5 },
            ordered: false,
        };
        for (user, law) in [(User::Near, near), (User::Far, far)] {
            let mut d = sample_distances(&config, user).unwrap();
            let ks = ks_statistic(&mut d, |x| law.cdf(x));
            worst = worst.max(ks);
        }
    }
    report(6, worst <= 0.005, &format!("max KS over schemes and users at 1e6 samples = {worst:.5}"));
    assert!(worst <= 0.005);
}

#[test]
fn criterion_07_gap_narrows_toward_half_split() {
    let k = 0.03;
    let budget = LinkBudget::reference(k);
    let gap = |a1: f64, user: User| {
        let t = Thresholds::single(a1, k).unwrap();
        let (near, far) = distance_laws(&PairingScheme::new(Scheme::Proposed, 60.0).unwrap(), Some(&t)).unwrap();
        let (law, tau) = if user == User::Near { (near, 3.0) } else { (far, 0.5) };
        let split = PowerSplit::new(a1).unwrap();
        let p = |access| {
            let q = OutageQuery::new(user, access, tau).unwrap();
            outage_exact_single(&q, &budget, split, &FadingModel::default(), &law, &ExactSpec::default())
                .unwrap()
                .probability
        };
        p(Access::Noma) - p(Access::Oma)
    };
    let mut ok = true;
    let mut detail = String::new();
    for user in User::ALL {
        let (lo, hi) = (gap(0.10, user), gap(0.45, user));
        ok &= hi.abs() < lo.abs();
        detail.push_str(&format!("{}: |gap| {:.4} at a1=0.10 vs {:.4} at 0.45; ", user.as_str(), lo.abs(), hi.abs()));
    }
    report(7, ok, detail.trim_end_matches("; "));
    assert!(ok);
}

#[test]
fn criterion_08_absorption_reproduction() {
    let check = absorption_check(0.15);
    let label = match check.outcome {
        CheckOutcome::Pass => "PASS",
        CheckOutcome::Warn => "WARN",
        CheckOutcome::Fail => "FAIL",
    };
    println!(
        "criterion 8: {label} - max relative deviation {:.2}% from {:?} ({})",
        100.0 * check.max_deviation,
        REFERENCE_ABSORPTION,
        check.detail
    );
    assert_ne!(check.outcome, CheckOutcome::Fail);
}

#[test]
fn criterion_09_numerics_gates() {
    // closed form for integer shape: P(m, x) = 1 − e^{−x} Σ_{j<m} x^j / j!
    let closed = |m: u32, x: f64| {
        let mut term = 1.0;
        let mut sum = 0.0;
        for j in 0..m {
            if j > 0 {
                term *= x / j as f64;
            }
            sum += term;
        }
        1.0 - (-x).exp() * sum
    };
    let mut gamma_err: f64 = 0.0;
    for i in 0..100 {
        let x = 0.05 + 0.3 * i as f64;
        for m in [1, 2, 3, 5, 8] {
            let got = reg_lower_inc_gamma(m as f64, x).unwrap();
            gamma_err = gamma_err.max((got - closed(m, x)).abs());
        }
    }

    let value = |r: Result<f64, NumericsError>| match r {
        Ok(v) => v,
        Err(e) => e.estimate().expect("flagged result carries an estimate"),
    };
    let mut exp_err: f64 = 0.0;
    for i in 1..=20 {
        let p = i as f64 / 21.0;
        let t = -(1.0 - p).ln();
        let series = GilPelaezSeries::for_support(0.0, 40.0, t, 1e-5, 1_000_000);
        let m = |_: usize, w: f64| Ok(ComplexValue::new(1.0, w).inv());
        exp_err = exp_err.max((value(gil_pelaez_series_cdf(m, t, 1.0, &series)) - p).abs());
    }
    let mut step_err: f64 = 0.0;
    for t in [-2.0, -1.0, -0.5, -0.2, 0.2, 0.5, 1.0, 2.0] {
        let series = GilPelaezSeries::for_support(-3.0, 3.0, t, 1e-4, 200_000);
        let m = |_: usize, _: f64| Ok(ComplexValue::new(1.0, 0.0));
        let expected = if t > 0.0 { 1.0 } else { 0.0 };
        step_err = step_err.max((value(gil_pelaez_series_cdf(m, t, 1.0, &series)) - expected).abs());
    }
    let pass = gamma_err <= 1e-12 && exp_err <= 1e-4 && step_err <= 1e-3;
    report(
        9,
        pass,
        &format!("incomplete gamma {gamma_err:.1e}, exponential CDF {exp_err:.1e}, unit step {step_err:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_reproducible_csv() {
    let (config, rows) = fig2();
    let first = csv_string(rows).unwrap();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let again = serial.install(|| run_sweep(config, &Evaluators::default()).unwrap());
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let (a, b) = wide.install(|| {
        rayon::join(
            || run_sweep(config, &Evaluators::default()).unwrap(),
            || run_sweep(config, &Evaluators::default()).unwrap(),
        )
    });
    let same = [again, a, b].iter().all(|r| csv_string(r).unwrap() == first);
    report(10, same, &format!("{} CSV bytes identical across 1-thread, 4-thread and concurrent reruns", first.len()));
    assert!(same);
}
