use fockfield::gfcalc::{
    combine, embed_distribution, heaviside_jump_integral, heaviside_power_pairing, is_infinitesimal, product,
    Distribution, Mollifier, Representative, SmoothedHeaviside, TestFunction, Transition, UniformGrid,
    DEFAULT_SLOPE_THRESHOLD,
};

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `φ(y) = (1/π) ∫_0^b Fφ(u) cos(uy) du`, by brute-force Simpson.
fn kernel_oracle(m: &Mollifier, y: f64) -> f64 {
    simpson(0.0, m.b, 4000, |u| m.eval(u) * (u * y).cos()) / std::f64::consts::PI
}

#[test]
fn zero_embeds_to_zero() {
    let grid = UniformGrid::spanning(-1.0, 1.0, 201).unwrap();
    let r = embed_distribution(Distribution::Zero, &Mollifier::standard(), 0.05, grid).unwrap();
    for eps in [0.5, 0.05] {
        assert!(r.sample(eps).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn kernel_matches_brute_force_transform() {
    for m in Mollifier::stock() {
        for y in [0.0, 0.7, 3.0, 12.5, 40.0] {
            assert!((m.kernel(y) - kernel_oracle(&m, y)).abs() < 1e-10, "{} at {y}", m.label);
        }
    }
}

#[test]
fn embedded_delta_pairs_to_one() {
    let eps = 1e-2;
    let grid = UniformGrid::spanning(-1.0, 1.0, 401).unwrap();
    let m = Mollifier::standard();
    let r = embed_distribution(Distribution::Delta, &m, eps, grid).unwrap();
    let window = 20.0;
    let p = r.pair(eps, &TestFunction::unit(-window, window)).unwrap();
    // the part of the kernel outside the window, in kernel units
    let outside = 2.0 * (1.0 - m.kernel_cumulative(window / eps)).abs();
    assert!((p - 1.0).abs() < 1e-8 + outside, "pairing {p}, tail {outside}");
    assert!(outside < 1e-6);
}

#[test]
fn embedded_heaviside_is_a_smooth_step() {
    let eps = 0.05;
    let m = Mollifier::standard();
    let grid = UniformGrid::spanning(-2.0, 2.0, 401).unwrap();
    let r = embed_distribution(Distribution::Heaviside, &m, eps, grid).unwrap();
    // oracle: 1/2 + ∫_0^{x/ε} φ
    for x in [-0.3, -0.05, 0.0, 0.02, 0.2] {
        let y = x / eps;
        let oracle = 0.5 + simpson(0.0, y, 2000, |s| kernel_oracle(&m, s));
        assert!((r.eval(eps, x) - oracle).abs() < 1e-8, "x = {x}");
    }
    // far left the step has died out
    assert!(r.eval(eps, -300.0 * eps).abs() < 1e-8);
    assert!((r.eval(eps, 300.0 * eps) - 1.0).abs() < 1e-8);
    assert!((r.derivative(1, eps, 0.01).unwrap() - m.kernel(0.2) / eps).abs() < 1e-12);
}

#[test]
fn coarse_grid_is_rejected() {
    let grid = UniformGrid::spanning(-1.0, 1.0, 11).unwrap();
    assert!(embed_distribution(Distribution::Delta, &Mollifier::standard(), 1e-3, grid).is_err());
}

#[test]
fn product_has_a_unit_and_evaluates_pointwise() {
    let grid = UniformGrid::spanning(-1.0, 1.0, 201).unwrap();
    let one = Representative::constant(grid, 1.0);
    let h = SmoothedHeaviside::new(Transition::Arctan).representative(grid);
    let p = product(&one, &h).unwrap();
    for x in [-0.4, 0.0, 0.3] {
        assert_eq!(p.eval(0.1, x), h.eval(0.1, x));
    }
    let hh = product(&h, &h).unwrap();
    for t in Transition::stock() {
        let r = SmoothedHeaviside::new(t).representative(grid);
        let sq = product(&r, &r).unwrap();
        assert!((sq.eval(0.01, 0.0) - 0.25).abs() < 1e-15);
    }
    let diff = combine(1.0, &hh, -1.0, &hh).unwrap();
    assert_eq!(diff.eval(0.2, 0.1), 0.0);
    let other = Representative::constant(UniformGrid::spanning(-2.0, 2.0, 201).unwrap(), 1.0);
    assert!(product(&one, &other).is_err());
}

#[test]
fn product_of_smoothed_abs_tends_to_smoothed_square() {
    let m = Mollifier::standard();
    let grid = UniformGrid::spanning(-2.0, 2.0, 801).unwrap();
    let abs = embed_distribution(Distribution::function(f64::abs), &m, 5e-3, grid).unwrap();
    let sq = embed_distribution(Distribution::function(|x| x * x), &m, 5e-3, grid).unwrap();
    let gap = combine(1.0, &product(&abs, &abs).unwrap(), -1.0, &sq).unwrap();
    let psi = TestFunction::bump(0.1, 1.0);
    let p: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&e| gap.pair(e, &psi).unwrap().abs()).collect();
    assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");
    assert!(p[2] < 0.25 * p[0]);
}

#[test]
fn jump_integral_is_minus_one_sixth() {
    for t in Transition::stock() {
        for eps in [1.0, 1e-3] {
            assert!((heaviside_jump_integral(&t, eps).unwrap() + 1.0 / 6.0).abs() < 1e-8);
        }
    }
}

#[test]
fn power_pairings_follow_antiderivative() {
    let t = Transition::SmoothStep;
    assert!((heaviside_power_pairing(2, 1, &t, 0.1).unwrap() + 1.0 / 6.0).abs() < 1e-8);
    assert!((heaviside_power_pairing(3, 1, &t, 0.1).unwrap() + 0.25).abs() < 1e-8);
    for n1 in 1..=6u32 {
        for n2 in 1..=6u32 {
            let v = heaviside_power_pairing(n1, n2, &Transition::Tanh, 0.02).unwrap();
            let expect = 1.0 / (n1 as f64 + 1.0) - 1.0 / (n2 as f64 + 1.0);
            assert!((v - expect).abs() < 1e-8, "({n1},{n2})");
        }
    }
    assert_eq!(heaviside_power_pairing(4, 4, &Transition::Arctan, 0.5).unwrap(), 0.0);
}

#[test]
fn smoothed_heaviside_is_not_infinitesimal() {
    let grid = UniformGrid::spanning(-2.0, 2.0, 401).unwrap();
    let h = SmoothedHeaviside::new(Transition::Tanh).representative(grid);
    let ladder = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let r = is_infinitesimal(&h, &[TestFunction::bump(0.2, 1.0)], &ladder, DEFAULT_SLOPE_THRESHOLD).unwrap();
    assert!(!r.verdict);
    let zero = Representative::constant(grid, 0.0);
    assert!(is_infinitesimal(&zero, &[TestFunction::bump(0.0, 1.0)], &ladder, DEFAULT_SLOPE_THRESHOLD).unwrap().verdict);
    assert!(is_infinitesimal(&h, &[], &ladder[..3], DEFAULT_SLOPE_THRESHOLD).is_err());
}

#[test]
fn transitions_have_consistent_derivatives() {
    for t in Transition::stock() {
        assert!((t.value(0.0) - 0.5).abs() < 1e-15);
        for y in [-2.0, -0.3, 0.4, 1.7] {
            let h = 1e-5;
            let fd = (t.value(y + h) - t.value(y - h)) / (2.0 * h);
            let fd2 = (t.derivative(y + h) - t.derivative(y - h)) / (2.0 * h);
            assert!((fd - t.derivative(y)).abs() < 1e-8, "{}", t.label());
            assert!((fd2 - t.second_derivative(y)).abs() < 1e-6, "{}", t.label());
        }
    }
}
