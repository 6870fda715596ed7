use std::f64::consts::PI;

use fockfield::dynamics::{
    assemble_hamiltonian, dyson_series, evolve_operator, field_equation_check, heisenberg_derivative_check,
    hille_yoshida_approx, interacting_field, interacting_momentum, s_matrix, s_matrix_ode, theorem2_check,
    theorem3_generator, zero_point_energy, HamiltonianBundle, ModelParams,
};
use fockfield::field::RegularizedDelta;
use fockfield::fock::{FieldOperator, ModeGrid};
use fockfield::gfcalc::Mollifier;
use fockfield::linalg::{self, HermitianSpectrum};
use fockfield::Complex64;

fn line(j: usize) -> ModeGrid {
    ModeGrid::line(2.0 * PI, j, 1.0).unwrap()
}

fn bundle(j: usize, n_max: usize, power: usize, g: f64) -> HamiltonianBundle {
    assemble_hamiltonian(&ModelParams::sharp(line(j), n_max, power, g)).unwrap()
}

fn scalar(b: &HamiltonianBundle, z: Complex64) -> FieldOperator {
    FieldOperator::identity(&b.basis).scale(z)
}

#[test]
fn hamiltonian_is_hermitian_and_affine_in_g() {
    let b = bundle(1, 3, 3, 0.0);
    assert!(b.h0.hermitian_defect() <= 1e-12);
    let free = b.p0.add(&scalar(&b, Complex64::new(b.e_zp, 0.0))).unwrap();
    assert!(b.h0.sub(&free).unwrap().max_abs_on_sector(2) < 1e-12);
    let e_zp = 0.5 * (1.0 + 2.0 * 2f64.sqrt());
    assert!((b.e_zp - e_zp).abs() < 1e-12);
    let p = &b.params;
    assert!((zero_point_energy(&p.grid, &p.mollifier, p.eps) - e_zp).abs() < 1e-12);
    let b1 = b.with_coupling(0.1).unwrap();
    let b2 = b.with_coupling(0.2).unwrap();
    let d1 = b1.h0.sub(&b.h0).unwrap().scale(Complex64::new(10.0, 0.0));
    let d2 = b2.h0.sub(&b.h0).unwrap().scale(Complex64::new(5.0, 0.0));
    assert!(d1.sub(&d2).unwrap().max_abs() < 1e-11);
    assert!(d1.sub(&b.v_unit).unwrap().max_abs() < 1e-11);
}

#[test]
fn off_grid_and_underresolved_inputs_fail() {
    let mut p = ModelParams::sharp(line(1), 3, 3, 0.1);
    p.quad_points = Some(3);
    assert!(assemble_hamiltonian(&p).is_err());
    let b = bundle(1, 3, 3, 0.1);
    assert!(field_equation_check(&b, &[0.123], 0.0).is_err());
    let shallow = bundle(1, 2, 3, 0.1);
    assert!(field_equation_check(&shallow, &shallow.params.grid_point(&[0]), 0.0).is_err());
}

#[test]
fn operator_evolution_is_unitary_conjugation() {
    let b = bundle(1, 3, 3, 0.2);
    let phi = b.field.field(&[0.5], 0.0).unwrap();
    assert!(evolve_operator(&b.h0, &phi, 0.0).unwrap().sub(&phi).unwrap().max_abs() < 1e-13);
    assert!(evolve_operator(&b.h0, &b.h0, 1.7).unwrap().sub(&b.h0).unwrap().max_abs() < 1e-12);
    let before = HermitianSpectrum::new(phi.matrix()).unwrap().values;
    let after = HermitianSpectrum::new(evolve_operator(&b.h0, &phi, 2.3).unwrap().matrix()).unwrap().values;
    for (x, y) in before.iter().zip(after.iter()) {
        assert!((x - y).abs() < 1e-9);
    }
    let u = linalg::identity(b.basis.len());
    assert!(linalg::unitarity_defect(&b.propagator(0.9).unwrap()) < 1e-9);
    assert!(linalg::unitarity_defect(&u) == 0.0);
}

#[test]
fn interacting_field_initial_condition_and_free_limit() {
    let b = bundle(2, 3, 3, 0.1);
    let x = [0.4];
    let at_tau = interacting_field(&b, &x, 0.0).unwrap();
    assert!(at_tau.sub(&b.field.field(&x, 0.0).unwrap()).unwrap().max_abs() < 1e-12);
    assert!(interacting_field(&b, &x, 1.1).unwrap().hermitian_defect() < 1e-10);
    let free = bundle(2, 3, 3, 0.0);
    for t in [0.6, -1.4] {
        let phi = interacting_field(&free, &x, t).unwrap();
        // H = P₀ + E_zp only below the top sector, where Φ₀ keeps its mode phases
        let d = phi.sub(&free.field.field(&x, t).unwrap()).unwrap();
        assert!(d.max_abs_on_sector(1) < 1e-9);
    }
}

#[test]
fn heisenberg_difference_quotient_is_second_order() {
    let b = bundle(1, 3, 3, 0.3);
    let r = heisenberg_derivative_check(&b, &[0.2], 0.5, 1e-2).unwrap();
    assert!((3.5..=4.5).contains(&r.ratio), "ratio {}", r.ratio);
}

#[test]
fn free_field_equations_are_exact_in_sharp_config() {
    let b = bundle(2, 4, 3, 0.0);
    let x = b.params.grid_point(&[3]);
    let r = field_equation_check(&b, &x, 0.4).unwrap();
    assert!(r.smeared_defect <= 1e-8 && r.unsmeared_residual <= 1e-8, "{r:?}");
    let g = b.with_coupling(0.1).unwrap();
    let r = field_equation_check(&g, &x, 0.4).unwrap();
    assert!(r.smeared_defect <= 1e-7);
    assert!(r.unsmeared_residual > 0.0);
}

#[test]
fn interacting_commutators_keep_regularized_delta() {
    // truncation breaks the identity on the top sectors, and the evolution
    // mixes them in; it holds exactly on the evolved safe sector U·D
    let b = bundle(2, 4, 3, 0.2);
    let rho = RegularizedDelta::new(&b.params.grid, &b.params.mollifier, b.params.eps);
    let (x, x2, t) = (0.3, -0.8, 0.7);
    let u = b.propagator(t).unwrap();
    let pulled_back = |op: &FieldOperator| linalg::adjoint(&u).dot(op.matrix()).dot(&u);
    let cols = b.basis.sector_end(2);
    let phi = interacting_field(&b, &[x], t).unwrap();
    let pi = interacting_momentum(&b, &[x2], t).unwrap();
    let target = scalar(&b, Complex64::new(0.0, rho.eval(&[x - x2])));
    let ccr = phi.commutator(&pi).unwrap().sub(&target).unwrap();
    assert!(linalg::max_abs_on_columns(&pulled_back(&ccr), cols) < 1e-9);
    let phi2 = interacting_field(&b, &[x2], t).unwrap();
    let pp = phi.commutator(&phi2).unwrap();
    assert!(linalg::max_abs_on_columns(&pulled_back(&pp), cols) < 1e-9);
    // without the pull-back the top-sector defect leaks into low sectors
    assert!(ccr.max_abs_on_sector(2) > 1e-6);
}

#[test]
fn s_matrix_limits() {
    let b = bundle(1, 3, 3, 0.1);
    assert!(s_matrix(&b, 0.0).unwrap().sub(&FieldOperator::identity(&b.basis)).unwrap().max_abs() < 1e-12);
    assert!(linalg::unitarity_defect(s_matrix(&b, 1.3).unwrap().matrix()) < 1e-10);
    let free = bundle(1, 3, 3, 0.0);
    let t = 0.8;
    let s = s_matrix(&free, t).unwrap();
    let phase = scalar(&free, Complex64::from_polar(1.0, -t * free.e_zp));
    assert!(s.sub(&phase).unwrap().max_abs_on_sector(2) < 1e-9);
}

#[test]
fn theorem2_pipelines_agree() {
    let b = bundle(1, 2, 3, 0.1);
    assert!(theorem2_check(&b, &[0.4], 0.7).unwrap() <= 1e-9);
    let free = bundle(1, 3, 3, 0.0);
    assert!(theorem2_check(&free, &[-1.0], 0.7).unwrap() <= 1e-10);
    assert!(theorem2_check(&b, &[0.4], 0.0).unwrap() <= 1e-14);
}

#[test]
fn theorem3_generator_decomposition() {
    let free = bundle(1, 3, 3, 0.0);
    let (g, rep) = theorem3_generator(&free, 0.9).unwrap();
    assert!(rep.sharp);
    assert!(g.sub(&scalar(&free, Complex64::new(free.e_zp, 0.0))).unwrap().max_abs_on_sector(rep.level) < 1e-10);
    // mollified: the defect is the closed-form frequency shift
    let mut p = ModelParams::sharp(line(2), 3, 3, 0.1);
    p.eps = 0.35;
    let b = assemble_hamiltonian(&p).unwrap();
    let (_, rep) = theorem3_generator(&b, 0.6).unwrap();
    assert!(!rep.sharp);
    let grid = &p.grid;
    let shift: Vec<f64> = (0..grid.mode_count())
        .map(|j| {
            let k = grid.momentum(j)[0];
            (1.0 + k * k).sqrt() * (p.mollifier.eval(p.eps * k.abs()).powi(2) - 1.0)
        })
        .collect();
    let mut oracle: f64 = 0.0;
    for i in 0..b.basis.sector_end(rep.level) {
        let s: f64 = b.basis.occupation(i).iter().zip(&shift).map(|(&n, s)| n as f64 * s).sum();
        oracle = oracle.max(s.abs());
    }
    assert!(oracle > 1e-3);
    assert!((rep.defect - oracle).abs() < 1e-9, "{} vs {oracle}", rep.defect);
    assert!(rep.q_eps_defect < 1e-9);
}

#[test]
fn ode_evolution_matches_exact_product() {
    let free = bundle(1, 3, 3, 0.0);
    let r = s_matrix_ode(&free, 1.0, 1e-2).unwrap();
    let id = linalg::identity(free.basis.len());
    let cols = free.basis.sector_end(2);
    assert!(linalg::max_abs_on_columns(&(r.operator.matrix() - &id), cols) < 1e-8);
    let b = bundle(1, 3, 3, 0.1);
    let r = s_matrix_ode(&b, 1.0, 1e-3).unwrap();
    assert!(r.comparison_defect.unwrap() <= 1e-6);
    assert!(r.unitarity_defects.iter().all(|&d| d < 1e-9));
    assert!(s_matrix_ode(&b, 1.0, 0.0).is_err());
}

#[test]
fn hille_yoshida_converges_first_order() {
    let b = bundle(1, 3, 3, 0.2);
    let exact = |theta: f64| HermitianSpectrum::new(b.h0.matrix()).unwrap().unitary(-theta);
    let err = |theta: f64, n: usize| {
        let a = hille_yoshida_approx(&b.h0, theta, n).unwrap();
        linalg::max_abs(&(a.matrix() - &exact(theta)).view())
    };
    let id = FieldOperator::identity(&b.basis);
    for n in [1, 8] {
        assert!(hille_yoshida_approx(&b.h0, 0.0, n).unwrap().sub(&id).unwrap().max_abs() < 1e-15);
    }
    let r = err(2e-3, 1) / err(1e-3, 1);
    assert!((3.6..=4.4).contains(&r), "small-θ ratio {r}");
    // first order in 1/n once n‖θH‖ is large
    let r = err(0.5, 2048) / err(0.5, 4096);
    assert!((1.8..=2.2).contains(&r), "1/n ratio {r}");
    assert!(err(0.5, 4096) < 1e-2);
}

#[test]
fn dyson_orders() {
    let free = bundle(1, 3, 3, 0.0);
    let cols = free.basis.sector_end(2);
    let id = linalg::identity(free.basis.len());
    for k in 0..=3 {
        let d = dyson_series(&free, 0.8, k).unwrap();
        assert!(linalg::max_abs_on_columns(&(d.matrix() - &id), cols) < 1e-10);
    }
    let err = |b: &HamiltonianBundle, k: usize| {
        let exact = s_matrix(b, 1.0).unwrap().scale(Complex64::from_polar(1.0, b.e_zp));
        exact.sub(&dyson_series(b, 1.0, k).unwrap()).unwrap().max_abs()
    };
    let b = bundle(1, 3, 3, 1e-2);
    let h = b.with_coupling(5e-3).unwrap();
    let r1 = err(&b, 1) / err(&h, 1);
    assert!((3.2..=4.8).contains(&r1), "order-1 ratio {r1}");
    // first-order term is S⁰ times an anti-Hermitian integral
    let s0 = dyson_series(&b, 1.0, 0).unwrap();
    let m = linalg::adjoint(s0.matrix()).dot(&(dyson_series(&b, 1.0, 1).unwrap().matrix() - s0.matrix()));
    assert!(linalg::max_abs(&(&m + &linalg::adjoint(&m)).view()) < 1e-10);
    assert!(dyson_series(&b, 1.0, 4).is_err());
}

#[test]
fn mollifier_choice_is_irrelevant_in_sharp_config() {
    let mut p = ModelParams::sharp(line(1), 3, 3, 0.1);
    let a = assemble_hamiltonian(&p).unwrap();
    p.mollifier = Mollifier::gaussian();
    let b = assemble_hamiltonian(&p).unwrap();
    assert!(a.h0.sub(&b.h0).unwrap().max_abs() < 1e-13);
}
