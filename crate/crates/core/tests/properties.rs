use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use fockfield::averaging::{cesaro_average, sweep_average, GeneralizedNumber, SweepMode};
use fockfield::fock::{annihilate, create, exp_energy, inner, FockBasis, FockVector, ModeGrid};
use fockfield::gfcalc::{heaviside_power_pairing, Transition};
use fockfield::Complex64;

fn basis(j: usize, n_max: usize) -> Arc<FockBasis> {
    FockBasis::new(ModeGrid::line(2.0 * PI, j, 1.0).unwrap(), n_max)
}

fn modes(m: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), m).prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ccr_on_safe_sector(j in 1usize..=3, n_max in 2usize..=4, seed in modes(7), seed2 in modes(7)) {
        let b = basis(j, n_max);
        let m = b.grid().mode_count();
        let (psi, chi) = (&seed[..m], &seed2[..m]);
        let w = b.grid().weight();
        let c: Complex64 = psi.iter().zip(chi).map(|(a, b)| a * b).sum::<Complex64>() * w;
        let safe = n_max - 2;
        let am = annihilate(&b, psi).unwrap();
        let ap = create(&b, chi).unwrap();
        let scale = 1.0 + c.norm();
        prop_assert!(am.commutator(&ap).unwrap().deviation_from_scalar(c, safe) <= 1e-10 * scale);
        prop_assert!(create(&b, psi).unwrap().commutator(&ap).unwrap().max_abs_on_sector(safe) <= 1e-10 * scale);
        prop_assert!(am.commutator(&annihilate(&b, chi).unwrap()).unwrap().max_abs_on_sector(safe) <= 1e-10 * scale);
    }

    #[test]
    fn energy_exponential_preserves_norm(theta in -20.0..20.0f64, amps in prop::collection::vec(-1.0..1.0f64, 10)) {
        let b = basis(1, 2);
        let v = FockVector::from_amplitudes(&b, amps.iter().map(|&a| Complex64::new(a, 0.5 * a)).collect()).unwrap();
        let u = exp_energy(&b, theta).apply(&v).unwrap();
        prop_assert!((u.norm() - v.norm()).abs() <= 1e-12);
        prop_assert!((inner(&u, &u).unwrap().re - v.norm().powi(2)).abs() <= 1e-12);
    }

    #[test]
    fn power_pairing_is_profile_and_scale_free(n1 in 1u32..=6, n2 in 1u32..=6, k in 0usize..3, log_eps in -4.0..0.0f64) {
        let t = &Transition::stock()[k];
        let v = heaviside_power_pairing(n1, n2, t, 10f64.powf(log_eps)).unwrap();
        let expect = 1.0 / (n1 as f64 + 1.0) - 1.0 / (n2 as f64 + 1.0);
        prop_assert!((v - expect).abs() <= 1e-8);
    }

    #[test]
    fn cesaro_average_is_bounded_and_homogeneous(g in 0.2..5.0f64, log_eta in -4.0..0.0f64, lambda in 0.5..10.0f64) {
        let gn = GeneralizedNumber::abs_cos_inverse(g);
        let eta = 10f64.powf(log_eta);
        let tol = 1e-4;
        let a = cesaro_average(&gn, eta, tol).unwrap();
        prop_assert!((-tol..=1.0 + tol).contains(&a));
        let s = cesaro_average(&gn.scaled(lambda), eta, tol * lambda).unwrap();
        prop_assert!((s - lambda * a).abs() <= 2.0 * tol * lambda);
    }

    #[test]
    fn sweep_window_brackets_values(vals in prop::collection::vec(0.0..1.0f64, 8..60), seed in any::<u64>()) {
        let samples: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, &v)| (1e-3 * (i + 1) as f64, v)).collect();
        let t = sweep_average("p", &samples, SweepMode::Trapezoid { tol: 1e-3 }).unwrap();
        prop_assert!(t.liminf <= t.limsup);
        prop_assert!(t.a_values.iter().all(|&a| (0.0..=1.0 + 1e-12).contains(&a)));
        let r = sweep_average("p", &samples, SweepMode::Random { draws: 64, seed }).unwrap();
        let m = r.limit.unwrap();
        prop_assert!(m >= r.liminf - 1e-12 && m <= r.limsup + 1e-12);
    }
}
