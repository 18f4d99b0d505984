use super::NumericsError;

const MAX_BISECTIONS: usize = 2_000;

/// Bisection root of a monotone function on [lo, hi].
///
/// Returns the midpoint of a bracket no wider than `tol`. A bracket without
/// a sign change is reported as [`NumericsError::NoSignChange`]; callers
/// typically read that as "the event is certain" or "impossible".
pub fn find_root_monotone<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericsError> {
    if !(lo <= hi) || !(tol > 0.0) {
        return Err(NumericsError::Domain(format!("bad bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange { lo, hi, f_lo: fa, f_hi: fb });
    }
    let lo_negative = fa < 0.0;
    for _ in 0..MAX_BISECTIONS {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_negative {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_and_exponential() {
        assert_abs_diff_eq!(find_root_monotone(|x| x - 3.0, 0.0, 10.0, 1e-10).unwrap(), 3.0, epsilon = 1e-10);
        let r = find_root_monotone(|x| (-x).exp() - 0.5, 0.0, 10.0, 1e-10).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn log_sum_over_subcarriers() {
        let ks = [0.0357, 0.04, 0.0446, 0.0494, 0.0545, 0.0598];
        let target = 8.0 * std::f64::consts::LN_2;
        let f = |x: f64| ks.iter().map(|k: &f64| -(-(-k * x).exp_m1()).ln()).sum::<f64>() - target;
        let r = find_root_monotone(f, 1e-9, 60.0, 1e-10).unwrap();
        // forward evaluation brackets the root
        assert!(f(r - 1e-9) > 0.0 && f(r + 1e-9) < 0.0);
        assert!(f(r).abs() < 1e-8);
    }

    #[test]
    fn missing_sign_change() {
        let err = find_root_monotone(|x| x + 1.0, 0.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, NumericsError::NoSignChange { .. }));
    }

    proptest! {
        #[test]
        fn root_minimises_residual_locally(root in -5.0f64..5.0, slope in 0.1f64..10.0) {
            let tol = 1e-8;
            let f = |x: f64| slope * (x - root) + 0.1 * (x - root).powi(3);
            let x = find_root_monotone(f, -10.0, 10.0, tol).unwrap();
            prop_assert!(f(x).abs() <= f(x - tol).abs());
            prop_assert!(f(x).abs() <= f(x + tol).abs());
        }
    }
}
