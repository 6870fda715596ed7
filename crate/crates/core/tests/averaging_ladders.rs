use std::f64::consts::{FRAC_2_PI, PI};

use fockfield::averaging::{
    associated_value, cesaro_average, cesaro_estimate, log_ladder, p_rescaling_study, rms_average, sweep_average,
    Estimator, GeneralizedNumber, Profile, SweepMode, DEFAULT_TOL,
};

/// Composite Simpson with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `(1/η)∫₀^η |cos(1/ε)|^k dε` via `u = 1/ε`, cell by cell between zeros of cos.
fn abs_cos_oracle(eta: f64, k: i32) -> f64 {
    let u0 = 1.0 / eta;
    let u1 = 2e5;
    let f = |u: f64| u.cos().abs().powi(k) / (u * u);
    let mut acc = 0.0;
    let mut a = u0;
    let mut m = (u0 / PI - 0.5).floor() + 1.0;
    while a < u1 {
        let b = ((m + 0.5) * PI).min(u1);
        acc += simpson(a, b, 16, f);
        a = b;
        m += 1.0;
    }
    let mean = if k == 1 { FRAC_2_PI } else { 0.5 };
    (acc + mean / u1) / eta
}

#[test]
fn abs_cos_inverse_matches_cell_oracle() {
    let gn = GeneralizedNumber::abs_cos_inverse(1.0);
    for eta in [1e-1, 1e-2, 1e-3] {
        let oracle = abs_cos_oracle(eta, 1);
        let v = cesaro_average(&gn, eta, 1e-4).unwrap();
        assert!((v - oracle).abs() < 2e-4, "eta {eta}: {v} vs {oracle}");
    }
    assert!((cesaro_average(&gn, 1e-3, 1e-4).unwrap() - FRAC_2_PI).abs() < 1e-3);
}

#[test]
fn trivial_families() {
    for c in [0.0, 0.25, 3.0] {
        let v = cesaro_average(&GeneralizedNumber::constant(c), 0.37, 1e-6).unwrap();
        assert!((v - c).abs() < 1e-12);
    }
    let linear = GeneralizedNumber::from_fn("eps", Some(1.0), |e| e);
    for eta in [0.5, 1e-2] {
        assert!((cesaro_average(&linear, eta, 1e-6).unwrap() - eta / 2.0).abs() < 1e-6);
    }
    let unbounded = GeneralizedNumber::from_fn("1/eps", None, |e| 1.0 / e);
    assert!(cesaro_average(&unbounded, 0.1, 1e-4).is_err());
}

#[test]
fn ladder_reports_limit_or_window() {
    let ladder = log_ladder(1e-1, 1e-6, 2);
    let zero = associated_value(&GeneralizedNumber::constant(0.0), &ladder, DEFAULT_TOL).unwrap();
    assert_eq!(zero.limit, Some(0.0));
    assert_eq!((zero.liminf, zero.limsup), (0.0, 0.0));
    let r = associated_value(&GeneralizedNumber::abs_cos_inverse(1.0), &ladder, DEFAULT_TOL).unwrap();
    assert!((r.limit.unwrap() - FRAC_2_PI).abs() < 2e-3);
    assert!(r.liminf <= r.limsup);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert!(json.get("A_values").is_some());
    assert!(associated_value(&GeneralizedNumber::constant(1.0), &ladder[..4], DEFAULT_TOL).is_err());
}

#[test]
fn log_oscillation_has_no_limit_but_a_window() {
    let ladder = log_ladder(1e-1, 1e-6, 2);
    let r = associated_value(&GeneralizedNumber::abs_cos_log(1.0), &ladder, DEFAULT_TOL).unwrap();
    assert!(r.limit.is_none());
    assert!((r.liminf - 0.44).abs() <= 0.02 && (r.limsup - 0.82).abs() <= 0.02);
    // the Cesàro mean of |cos(log(1/ε))| is a fixed periodic function of log η;
    // its closed form is (1/η)∫ over ε, checked at one point
    let eta: f64 = 1e-3;
    let oracle = {
        // s = log(1/ε): (1/η)∫_{log(1/η)}^∞ |cos s| e^{-s} ds
        let s0 = -eta.ln();
        let mut acc = 0.0;
        let mut a = s0;
        let mut m = (s0 / PI - 0.5).floor() + 1.0;
        while a < s0 + 60.0 {
            let b = (m + 0.5) * PI;
            acc += simpson(a, b, 64, |s| s.cos().abs() * (-s).exp());
            a = b;
            m += 1.0;
        }
        acc / eta
    };
    let v = cesaro_average(&GeneralizedNumber::abs_cos_log(1.0), eta, 1e-6).unwrap();
    assert!((v - oracle).abs() < 1e-5, "{v} vs {oracle}");
}

#[test]
fn rescaling_in_p() {
    let ladder = log_ladder(1e-1, 1e-6, 2);
    let s = p_rescaling_study(Profile::AbsCos, &[1.0, 2.0, 3.0], &ladder, DEFAULT_TOL).unwrap();
    for r in &s.reports {
        assert!((r.limit.unwrap() - FRAC_2_PI).abs() < 5e-3);
    }
    let c = p_rescaling_study(Profile::Constant(1.0), &[1.0, 5.0], &ladder, DEFAULT_TOL).unwrap();
    assert!(c.reports.iter().all(|r| (r.limit.unwrap() - 1.0).abs() < 1e-12), "{:?}", c.reports.iter().map(|r| r.limit).collect::<Vec<_>>());
    let l = p_rescaling_study(Profile::AbsCosLog, &[1.0, 4.0], &ladder, DEFAULT_TOL).unwrap();
    assert!(l.reports[1].window_width() < l.reports[0].window_width());
}

#[test]
fn rms_of_abs_cos() {
    let gn = GeneralizedNumber::abs_cos_inverse(1.0);
    let eta = 1e-4;
    let v = rms_average(&gn, eta, 1e-4).unwrap();
    assert!((v - abs_cos_oracle(eta, 2).sqrt()).abs() < 1e-3);
    assert!((v - 0.5f64.sqrt()).abs() < 2e-3);
    assert!((rms_average(&GeneralizedNumber::constant(0.3), 0.1, 1e-6).unwrap() - 0.3).abs() < 1e-9);
    let w = rms_average(&GeneralizedNumber::abs_cos_log(1.0), 1e-3, 1e-4).unwrap();
    assert!(w > 0.4 && w < 1.0);
}

#[test]
fn bounded_values_stay_in_range_and_scale() {
    let gn = GeneralizedNumber::abs_cos_power(3.0, 1.0);
    for eta in log_ladder(1.0, 1e-4, 1) {
        let v = cesaro_average(&gn, eta, 1e-4).unwrap();
        assert!((0.0..=1.0).contains(&v));
        for lambda in [2.0, 10.0] {
            let s = cesaro_average(&gn.scaled(lambda), eta, 1e-4 * lambda).unwrap();
            assert!((s - lambda * v).abs() <= 2e-4 * lambda);
        }
    }
}

#[test]
fn estimators_agree() {
    for g in [1.0, 3.0] {
        let gn = GeneralizedNumber::abs_cos_inverse(g);
        for eta in [0.3, 2e-2] {
            let tol = 2e-4;
            let a = cesaro_estimate(&gn, eta, tol, Estimator::Substituted).unwrap();
            let b = cesaro_estimate(&gn, eta, tol, Estimator::Dyadic).unwrap();
            assert!((a.value - b.value).abs() <= 2.0 * tol, "g {g}, eta {eta}: {} vs {}", a.value, b.value);
        }
    }
}

#[test]
fn sweep_of_samples() {
    let n = 10_000;
    let samples: Vec<(f64, f64)> = log_ladder(1e-1, 1e-5, 2500)
        .into_iter()
        .take(n)
        .map(|e| (e, (1.0 / e).cos().abs()))
        .collect();
    assert_eq!(samples.len(), n);
    let r = sweep_average("abs_cos", &samples, SweepMode::Random { draws: 4000, seed: 11 }).unwrap();
    assert!((r.limit.unwrap() - FRAC_2_PI).abs() < 1e-2);
    assert!(r.diagnostics.contains_key("standard_error"));
    let again = sweep_average("abs_cos", &samples, SweepMode::Random { draws: 4000, seed: 11 }).unwrap();
    assert_eq!(r, again);

    let flat: Vec<(f64, f64)> = (1..=20).map(|i| (i as f64 * 0.01, 0.3)).collect();
    let t = sweep_average("flat", &flat, SweepMode::Trapezoid { tol: 1e-6 }).unwrap();
    assert!((t.limit.unwrap() - 0.3).abs() < 1e-12 && t.window_width() == 0.0);
    let r = sweep_average("flat", &flat, SweepMode::Random { draws: 64, seed: 1 }).unwrap();
    assert_eq!(r.diagnostics["spread"], serde_json::json!(0.0));

    let alt: Vec<(f64, f64)> = (1..=20).map(|i| (i as f64 * 0.01, if i % 2 == 0 { 0.2 } else { 0.7 })).collect();
    let w = sweep_average("alt", &alt, SweepMode::Trapezoid { tol: 1e-6 }).unwrap();
    assert_eq!((w.liminf, w.limsup), (0.2, 0.7));
    assert!(sweep_average("short", &alt[..5], SweepMode::Trapezoid { tol: 1e-6 }).is_err());
}
