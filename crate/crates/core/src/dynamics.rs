//! Hamiltonian assembly, exponentials, interacting field and the identity
//! checks of the calculation chain.
//!
//! The Hamiltonian density is integrated over the box with a uniform rule of
//! `Q ≥ 2(N+1)J + 1` points per dimension, which is exact for every
//! trigonometric polynomial produced by `Φ₀^{N+1}` when `χ ≡ 1`. Powers are
//! matrix powers of the truncated `Φ₀`.
//!
//! Identity checks are restricted to a safe sector: states whose particle
//! number leaves room for the sector mixing of the operators involved, so
//! that truncation at `n_max` cannot reach them.

use std::sync::{Arc, OnceLock};

use ndarray::Array1;
use ndarray_linalg::solve::{FactorizeInto, Solve};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{RegularizedDelta, RegularizedField};
use crate::fock::{self, FieldOperator, FockBasis, ModeGrid};
use crate::gfcalc::{Cutoff, Mollifier};
use crate::linalg::{self, CMat, HermitianSpectrum, I};
use crate::quad::CumulativeRule;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Model parameters of one Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub grid: ModeGrid,
    pub n_max: usize,
    pub mollifier: Mollifier,
    /// Position cutoff `χ(εξ)`; absent means `χ ≡ 1` on the box.
    pub cutoff: Option<Cutoff>,
    pub eps: f64,
    pub coupling: f64,
    /// Interaction exponent `N` in `g/(N+1)·Φ^{N+1}`.
    pub power: usize,
    pub tau: f64,
    /// Quadrature points per dimension; defaults to `2(N+1)J + 1`.
    pub quad_points: Option<usize>,
}

impl ModelParams {
    /// Sharp configuration: every grid momentum on the mollifier plateau, no cutoff.
    pub fn sharp(grid: ModeGrid, n_max: usize, power: usize, coupling: f64) -> Self {
        let mollifier = Mollifier::standard();
        let eps = 0.5 * mollifier.sharp_threshold(grid.max_momentum()).min(1.0);
        Self { grid, n_max, mollifier, cutoff: None, eps, coupling, power, tau: 0.0, quad_points: None }
    }

    pub fn min_quad_points(&self) -> usize {
        2 * (self.power + 1) * self.grid.j_max + 1
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points.unwrap_or_else(|| self.min_quad_points())
    }

    pub fn validate(&self) -> Result<()> {
        if self.power < 1 {
            return Err(invalid("interaction exponent N must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if self.quad_points() < self.min_quad_points() {
            return Err(invalid(format!(
                "quadrature underresolved: {} points per dimension, need at least {}",
                self.quad_points(),
                self.min_quad_points()
            )));
        }
        if !self.coupling.is_finite() || !self.tau.is_finite() {
            return Err(invalid("coupling and tau must be finite"));
        }
        Ok(())
    }

    /// True when `Fφ(ε k_j) = 1` on every grid mode and `χ ≡ 1` on the box.
    pub fn is_sharp(&self) -> bool {
        let plateau = (0..self.grid.mode_count()).all(|j| self.mollifier.eval(self.eps * self.grid.momentum_norm(j)) == 1.0);
        let corner = 0.5 * self.grid.length * (self.grid.dim as f64).sqrt();
        let flat = self.cutoff.as_ref().is_none_or(|c| c.eval(&[self.eps * corner]) == 1.0 && self.eps * corner <= c.profile.a);
        plateau && flat
    }

    /// Highest particle number on which the interacting identities are exact.
    pub fn safe_level(&self) -> Option<usize> {
        self.n_max.checked_sub(self.power + 1)
    }

    /// Quadrature nodes `ξ_q` and weights `(L/Q)^d χ(εξ_q)`.
    pub fn quadrature(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let q = self.quad_points();
        let l = self.grid.length;
        let h = l / q as f64;
        let side: Vec<f64> = (0..q).map(|i| -0.5 * l + i as f64 * h).collect();
        let mut nodes: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..self.grid.dim {
            nodes = nodes
                .into_iter()
                .flat_map(|p| {
                    side.iter().map(move |&x| {
                        let mut v = p.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        let base = h.powi(self.grid.dim as i32);
        let weights = nodes
            .iter()
            .map(|xi| {
                let chi = match &self.cutoff {
                    Some(c) => c.eval(&xi.iter().map(|v| self.eps * v).collect::<Vec<_>>()),
                    None => 1.0,
                };
                base * chi
            })
            .collect();
        (nodes, weights)
    }

    /// Checks that `x` is a quadrature node.
    pub fn check_on_grid(&self, x: &[f64]) -> Result<()> {
        let q = self.quad_points() as f64;
        let l = self.grid.length;
        let ok = x.len() == self.grid.dim
            && x.iter().all(|&v| {
                let s = (v + 0.5 * l) * q / l;
                (s - s.round()).abs() < 1e-9 && s.round() >= 0.0 && s.round() < q
            });
        if ok {
            Ok(())
        } else {
            Err(Error::OffGrid(x.to_vec()))
        }
    }

    /// The `i`-th quadrature node along each axis.
    pub fn grid_point(&self, index: &[usize]) -> Vec<f64> {
        let h = self.grid.length / self.quad_points() as f64;
        index.iter().map(|&i| -0.5 * self.grid.length + i as f64 * h).collect()
    }
}

/// `H₀ = H_quad + V` with its parts.
#[derive(Debug)]
pub struct HamiltonianBundle {
    pub params: ModelParams,
    pub basis: Arc<FockBasis>,
    pub field: RegularizedField,
    pub h0: FieldOperator,
    pub h_quad: FieldOperator,
    /// `V = g·V_unit`
    pub v: FieldOperator,
    /// `(1/(N+1)) Σ_q w_q Φ₀(ξ_q, τ)^{N+1}`
    pub v_unit: FieldOperator,
    pub p0: FieldOperator,
    /// `Q_ε = H_quad − P₀ − E_zp·Id`
    pub q_eps: FieldOperator,
    pub e_zp: f64,
    spectrum: OnceLock<HermitianSpectrum>,
    quad_spectrum: OnceLock<HermitianSpectrum>,
}

const ASSEMBLY_CHUNK: usize = 4;

fn hermitize(m: CMat) -> CMat {
    let adj = linalg::adjoint(&m);
    (m + adj).mapv(|z| 0.5 * z)
}

fn matrix_power(a: &CMat, n: usize) -> CMat {
    let mut out = a.clone();
    for _ in 1..n {
        out = out.dot(a);
    }
    out
}

pub fn assemble_hamiltonian(p: &ModelParams) -> Result<HamiltonianBundle> {
    p.validate()?;
    let basis = FockBasis::new(p.grid.clone(), p.n_max);
    assemble_on(p, basis)
}

fn assemble_on(p: &ModelParams, basis: Arc<FockBasis>) -> Result<HamiltonianBundle> {
    let field = RegularizedField::new(&basis, &p.mollifier, p.eps);
    let (nodes, weights) = p.quadrature();
    let n = basis.len();
    let d = p.grid.dim;
    let m2 = p.grid.mass * p.grid.mass;
    let zero = || (CMat::zeros((n, n)), CMat::zeros((n, n)));
    let items: Vec<(&Vec<f64>, f64)> = nodes.iter().zip(weights.iter().copied()).collect();
    // fixed-size chunks summed in order keep the reduction deterministic
    let partials: Vec<(CMat, CMat)> = items
        .par_chunks(ASSEMBLY_CHUNK)
        .map(|chunk| {
            let (mut quad, mut inter) = zero();
            for &(xi, w) in chunk {
                if w == 0.0 {
                    continue;
                }
                let phi = field.derivative_matrix(xi, p.tau, 0, &vec![0; d]);
                let pi = field.derivative_matrix(xi, p.tau, 1, &vec![0; d]);
                let mut density = pi.dot(&pi) + phi.dot(&phi).mapv(|z| z * m2);
                for mu in 0..d {
                    let mut s = vec![0; d];
                    s[mu] = 1;
                    let g = field.derivative_matrix(xi, p.tau, 0, &s);
                    density += &g.dot(&g);
                }
                quad.scaled_add(Complex64::new(0.5 * w, 0.0), &density);
                inter.scaled_add(Complex64::new(w / (p.power + 1) as f64, 0.0), &matrix_power(&phi, p.power + 1));
            }
            (quad, inter)
        })
        .collect();
    let (mut quad, mut inter) = zero();
    for (a, b) in partials {
        quad += &a;
        inter += &b;
    }
    let scale = 1.0 + linalg::max_abs(&quad.view());
    let defect = linalg::hermitian_defect(&quad).max(linalg::hermitian_defect(&inter));
    if defect > 1e-9 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let h_quad = FieldOperator::new(&basis, hermitize(quad))?;
    let v_unit = FieldOperator::new(&basis, hermitize(inter))?;
    let v = v_unit.scale(Complex64::new(p.coupling, 0.0));
    let h0 = h_quad.add(&v)?;
    let e_zp = h_quad.matrix()[[0, 0]].re;
    let p0 = fock::energy_operator(&basis);
    let q_eps = h_quad.sub(&p0)?.sub(&FieldOperator::identity(&basis).scale(Complex64::new(e_zp, 0.0)))?;
    Ok(HamiltonianBundle {
        params: p.clone(),
        basis,
        field,
        h0,
        h_quad,
        v,
        v_unit,
        p0,
        q_eps,
        e_zp,
        spectrum: OnceLock::new(),
        quad_spectrum: OnceLock::new(),
    })
}

/// `½ Σ_j Fφ(ε|k_j|)² k⁰_j`, the vacuum energy of the quadratic part when `χ ≡ 1`.
pub fn zero_point_energy(grid: &ModeGrid, mollifier: &Mollifier, eps: f64) -> f64 {
    0.5 * (0..grid.mode_count())
        .map(|j| mollifier.eval(eps * grid.momentum_norm(j)).powi(2) * grid.frequency(j))
        .sum::<f64>()
}

impl HamiltonianBundle {
    pub fn spectrum(&self) -> Result<&HermitianSpectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = HermitianSpectrum::new(self.h0.matrix())?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    fn quad_spectrum(&self) -> Result<&HermitianSpectrum> {
        if let Some(s) = self.quad_spectrum.get() {
            return Ok(s);
        }
        let s = HermitianSpectrum::new(self.h_quad.matrix())?;
        Ok(self.quad_spectrum.get_or_init(|| s))
    }

    /// `exp(iθH₀)`.
    pub fn propagator(&self, theta: f64) -> Result<CMat> {
        Ok(self.spectrum()?.unitary(theta))
    }

    /// Same model with a different coupling, reusing the assembled parts.
    pub fn with_coupling(&self, g: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.coupling = g;
        let v = self.v_unit.scale(Complex64::new(g, 0.0));
        let h0 = self.h_quad.add(&v)?;
        Ok(Self {
            params,
            basis: self.basis.clone(),
            field: RegularizedField::new(&self.basis, &self.params.mollifier, self.params.eps),
            h0,
            h_quad: self.h_quad.clone(),
            v,
            v_unit: self.v_unit.clone(),
            p0: self.p0.clone(),
            q_eps: self.q_eps.clone(),
            e_zp: self.e_zp,
            spectrum: OnceLock::new(),
            quad_spectrum: self.quad_spectrum.clone(),
        })
    }

    /// `(1/(N+1)) Σ_q w_q Φ₀(ξ_q, t)^{N+1}` built from the free field at time `t`.
    pub fn interaction_at(&self, t: f64) -> Result<FieldOperator> {
        let p = &self.params;
        let (nodes, weights) = p.quadrature();
        let n = self.basis.len();
        let d = p.grid.dim;
        let items: Vec<(&Vec<f64>, f64)> = nodes.iter().zip(weights.iter().copied()).collect();
        let partials: Vec<CMat> = items
            .par_chunks(ASSEMBLY_CHUNK)
            .map(|chunk| {
                let mut acc = CMat::zeros((n, n));
                for &(xi, w) in chunk {
                    let phi = self.field.derivative_matrix(xi, t, 0, &vec![0; d]);
                    acc.scaled_add(Complex64::new(w / (p.power + 1) as f64, 0.0), &matrix_power(&phi, p.power + 1));
                }
                acc
            })
            .collect();
        let mut acc = CMat::zeros((n, n));
        for a in partials {
            acc += &a;
        }
        FieldOperator::new(&self.basis, hermitize(acc))
    }
}

/// `exp(iθH) A exp(−iθH)`.
pub fn evolve_operator(h: &FieldOperator, a: &FieldOperator, theta: f64) -> Result<FieldOperator> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_defect()));
    }
    let spec = HermitianSpectrum::new(h.matrix())?;
    conjugate(&spec.unitary(theta), a)
}

fn conjugate(u: &CMat, a: &FieldOperator) -> Result<FieldOperator> {
    FieldOperator::new(a.basis(), u.dot(a.matrix()).dot(&linalg::adjoint(u)))
}

/// `Φ(x, t, τ) = e^{i(t−τ)H₀} Φ₀(x, τ) e^{−i(t−τ)H₀}`.
pub fn interacting_field(bundle: &HamiltonianBundle, x: &[f64], t: f64) -> Result<FieldOperator> {
    let tau = bundle.params.tau;
    let phi0 = bundle.field.field(x, tau)?;
    conjugate(&bundle.propagator(t - tau)?, &phi0)
}

/// `Π(x, t)` by the same conjugation of `Π₀(x, τ)`.
pub fn interacting_momentum(bundle: &HamiltonianBundle, x: &[f64], t: f64) -> Result<FieldOperator> {
    let tau = bundle.params.tau;
    let pi0 = bundle.field.momentum(x, tau)?;
    conjugate(&bundle.propagator(t - tau)?, &pi0)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeisenbergReport {
    pub h: f64,
    pub defect: f64,
    pub defect_half: f64,
    pub ratio: f64,
}

/// Central difference of `Φ(x, ·)` against `i[H₀, Φ(x, t)]`, at `h` and `h/2`.
pub fn heisenberg_derivative_check(bundle: &HamiltonianBundle, x: &[f64], t: f64, h: f64) -> Result<HeisenbergReport> {
    if !(h > 0.0) {
        return Err(invalid("step must be positive"));
    }
    let phi = interacting_field(bundle, x, t)?;
    let exact = linalg::commutator(bundle.h0.matrix(), phi.matrix()).mapv(|z| I * z);
    let defect_at = |step: f64| -> Result<f64> {
        let fwd = interacting_field(bundle, x, t + step)?;
        let bwd = interacting_field(bundle, x, t - step)?;
        let fd = (fwd.matrix() - bwd.matrix()).mapv(|z| z / (2.0 * step));
        Ok(linalg::max_abs(&(fd - &exact).view()))
    };
    let defect = defect_at(h)?;
    let defect_half = defect_at(0.5 * h)?;
    Ok(HeisenbergReport { h, defect, defect_half, ratio: defect / defect_half })
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldEquationReport {
    /// `∂_tΦ = ρ ⊛ Π` defect.
    pub phi_defect: f64,
    /// `∂_tΠ = ρ ⊛ (ΔΦ − m²Φ − gΦ^N)` defect, in the smeared gradient form.
    pub pi_defect: f64,
    pub smeared_defect: f64,
    /// `‖∂_tΦ − Π‖`
    pub unsmeared_phi_residual: f64,
    /// `‖∂_tΠ − (ΔΦ − m²Φ − gΦ^N)‖`
    pub unsmeared_pi_residual: f64,
    pub unsmeared_residual: f64,
    pub safe_level: usize,
}

/// Smeared field-equation identities on the evolved safe sector.
///
/// With `U = e^{i(t−τ)H₀}` every operator at time `t` is `U A(τ) U†`. Defects
/// `D` are measured as `‖U†DU‖` on states with at most `n_max − (N+1)`
/// particles, i.e. on the image of the safe sector under the evolution.
pub fn field_equation_check(bundle: &HamiltonianBundle, x: &[f64], t: f64) -> Result<FieldEquationReport> {
    let p = &bundle.params;
    p.check_on_grid(x)?;
    let safe = p.safe_level().ok_or_else(|| {
        invalid(format!("n_max = {} leaves no safe sector for N = {}", p.n_max, p.power))
    })?;
    let tau = p.tau;
    let d = p.grid.dim;
    let n = bundle.basis.len();
    let m2 = p.grid.mass * p.grid.mass;
    let g = p.coupling;
    let rho = RegularizedDelta::new(&p.grid, &p.mollifier, p.eps);
    let (nodes, weights) = p.quadrature();
    let field = &bundle.field;
    let zeros = vec![0u32; d];

    let phi_x = field.derivative_matrix(x, tau, 0, &zeros);
    let pi_x = field.derivative_matrix(x, tau, 1, &zeros);
    let h0 = bundle.h0.matrix();
    let dphi = linalg::commutator(h0, &phi_x).mapv(|z| I * z);
    let dpi = linalg::commutator(h0, &pi_x).mapv(|z| I * z);

    let mut smeared_pi = CMat::zeros((n, n));
    let mut smeared_force = CMat::zeros((n, n));
    for (xi, &w) in nodes.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        let y: Vec<f64> = xi.iter().zip(x).map(|(a, b)| a - b).collect();
        let r = rho.eval(&y);
        let phi = field.derivative_matrix(xi, tau, 0, &zeros);
        smeared_pi.scaled_add(Complex64::new(w * r, 0.0), &field.derivative_matrix(xi, tau, 1, &zeros));
        let mut local = phi.mapv(|z| -m2 * r * z) - matrix_power(&phi, p.power).mapv(|z| g * r * z);
        for mu in 0..d {
            let mut s = zeros.clone();
            s[mu] = 1;
            local.scaled_add(Complex64::new(-rho.gradient(&y, mu), 0.0), &field.derivative_matrix(xi, tau, 0, &s));
        }
        smeared_force.scaled_add(Complex64::new(w, 0.0), &local);
    }
    let mut lap = CMat::zeros((n, n));
    for mu in 0..d {
        let mut s = zeros.clone();
        s[mu] = 2;
        lap += &field.derivative_matrix(x, tau, 0, &s);
    }
    let local_force = lap - phi_x.mapv(|z| m2 * z) - matrix_power(&phi_x, p.power).mapv(|z| g * z);

    let u = bundle.propagator(t - tau)?;
    let ud = linalg::adjoint(&u);
    let cols = bundle.basis.sector_end(safe);
    let measure = |defect: CMat| -> f64 {
        let evolved = u.dot(&defect).dot(&ud);
        let back = ud.dot(&evolved).dot(&u);
        linalg::max_abs_on_columns(&back, cols)
    };
    let phi_defect = measure(&dphi - &smeared_pi);
    let pi_defect = measure(&dpi - &smeared_force);
    let unsmeared_phi_residual = measure(&dphi - &pi_x);
    let unsmeared_pi_residual = measure(&dpi - &local_force);
    Ok(FieldEquationReport {
        phi_defect,
        pi_defect,
        smeared_defect: phi_defect.max(pi_defect),
        unsmeared_phi_residual,
        unsmeared_pi_residual,
        unsmeared_residual: unsmeared_phi_residual.max(unsmeared_pi_residual),
        safe_level: safe,
    })
}

/// `S_τ(t) = e^{i(t−τ)P₀} e^{−i(t−τ)H₀}`.
pub fn s_matrix(bundle: &HamiltonianBundle, t: f64) -> Result<FieldOperator> {
    let theta = t - bundle.params.tau;
    let e = fock::exp_energy(&bundle.basis, theta);
    let mut m = bundle.propagator(-theta)?;
    for (r, mut row) in m.rows_mut().into_iter().enumerate() {
        let ph = e.matrix()[[r, r]];
        row.mapv_inplace(|z| z * ph);
    }
    FieldOperator::new(&bundle.basis, m)
}

/// `‖Φ(x,t,τ) − S_τ(t)^{-1} Φ₀(x,t) S_τ(t)‖`.
pub fn theorem2_check(bundle: &HamiltonianBundle, x: &[f64], t: f64) -> Result<f64> {
    let lhs = interacting_field(bundle, x, t)?;
    let s = s_matrix(bundle, t)?;
    let phi_t = bundle.field.field(x, t)?;
    let rhs = linalg::adjoint(s.matrix()).dot(phi_t.matrix()).dot(s.matrix());
    Ok(linalg::max_abs(&(lhs.matrix() - &rhs).view()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem3Report {
    /// `‖G(t) − E_zp·Id − g·V(t)‖` on states below the top sector.
    pub defect: f64,
    /// Closed form `max |Σ_j k⁰_j (Fφ(εk_j)² − 1) n_j|` over the same states (χ ≡ 1).
    pub oracle: f64,
    /// `‖(G(t) − E_zp·Id − g·V(t)) − e^{iθP₀}Q_ε e^{−iθP₀}‖`.
    pub q_eps_defect: f64,
    pub level: usize,
    pub sharp: bool,
}

/// `G(t) = e^{iθP₀}H₀e^{−iθP₀} − P₀` and its decomposition against the
/// simplified generator `E_zp·Id + g·V(t)`.
pub fn theorem3_generator(bundle: &HamiltonianBundle, t: f64) -> Result<(FieldOperator, Theorem3Report)> {
    let theta = t - bundle.params.tau;
    let energies = fock::energies(&bundle.basis);
    let gen = generator(bundle.h0.matrix(), &energies, theta, 0.0);
    let g = FieldOperator::new(&bundle.basis, gen)?;
    let v_t = bundle.interaction_at(t)?;
    let level = bundle.params.n_max.saturating_sub(1);
    let mut rest = g.matrix() - &v_t.matrix().mapv(|z| z * bundle.params.coupling);
    for i in 0..rest.nrows() {
        rest[[i, i]] -= bundle.e_zp;
    }
    let cols = bundle.basis.sector_end(level);
    let defect = linalg::max_abs_on_columns(&rest, cols);
    let q_t = generator(bundle.q_eps.matrix(), &energies, theta, 0.0) + bundle.p0.matrix();
    let q_eps_defect = linalg::max_abs_on_columns(&(&rest - &q_t), cols);
    let grid = bundle.basis.grid();
    let p = &bundle.params;
    let shift: Vec<f64> = (0..grid.mode_count())
        .map(|j| grid.frequency(j) * (p.mollifier.eval(p.eps * grid.momentum_norm(j)).powi(2) - 1.0))
        .collect();
    let oracle = (0..cols)
        .map(|i| bundle.basis.occupation(i).iter().zip(&shift).map(|(&n, s)| n as f64 * s).sum::<f64>().abs())
        .fold(0.0, f64::max);
    Ok((g, Theorem3Report { defect, oracle, q_eps_defect, level, sharp: p.is_sharp() }))
}

/// `e^{iθP₀} A e^{−iθP₀} − P₀ − shift·Id` using the diagonal energies.
fn generator(a: &CMat, energies: &[f64], theta: f64, shift: f64) -> CMat {
    let mut out = a.clone();
    for ((r, c), z) in out.indexed_iter_mut() {
        if r != c {
            *z *= Complex64::from_polar(1.0, theta * (energies[r] - energies[c]));
        }
    }
    for (i, e) in energies.iter().enumerate() {
        out[[i, i]] -= e + shift;
    }
    out
}

/// Trajectory summary of an integrated evolution.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub method: String,
    pub times: Vec<f64>,
    pub unitarity_defects: Vec<f64>,
    pub operator: FieldOperator,
    /// Distance to the exact-exponential reference, when computed.
    pub comparison_defect: Option<f64>,
}

impl EvolutionResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "times": self.times,
            "unitarity_defects": self.unitarity_defects,
            "comparison_defect": self.comparison_defect,
        })
    }
}

const ODE_UNITARITY_LIMIT: f64 = 1e-5;
const ODE_RECORD_EVERY: usize = 50;

/// Integrates `dS/dt = −i(G(t) − E_zp)S` from `S(τ) = Id` with classical RK4
/// and compares with `e^{i(t−τ)E_zp} S_τ(t)`.
pub fn s_matrix_ode(bundle: &HamiltonianBundle, t: f64, dt: f64) -> Result<EvolutionResult> {
    if !(dt > 0.0) {
        return Err(invalid("dt must be positive"));
    }
    let tau = bundle.params.tau;
    let span = t - tau;
    let steps = ((span.abs() / dt).round() as usize).max(1);
    let h = span / steps as f64;
    let energies = fock::energies(&bundle.basis);
    let h0 = bundle.h0.matrix();
    let rhs = |s: f64, y: &CMat| -> CMat { generator(h0, &energies, s - tau, bundle.e_zp).dot(y).mapv(|z| -I * z) };
    let mut y = linalg::identity(bundle.basis.len());
    let mut times = vec![tau];
    let mut defects = vec![0.0];
    for k in 0..steps {
        let s = tau + k as f64 * h;
        let k1 = rhs(s, &y);
        let k2 = rhs(s + 0.5 * h, &(&y + &k1.mapv(|z| z * (0.5 * h))));
        let k3 = rhs(s + 0.5 * h, &(&y + &k2.mapv(|z| z * (0.5 * h))));
        let k4 = rhs(s + h, &(&y + &k3.mapv(|z| z * h)));
        y = y + (k1 + k2.mapv(|z| 2.0 * z) + k3.mapv(|z| 2.0 * z) + k4).mapv(|z| z * (h / 6.0));
        if (k + 1) % ODE_RECORD_EVERY == 0 || k + 1 == steps {
            let defect = linalg::unitarity_defect(&y);
            if defect > ODE_UNITARITY_LIMIT {
                return Err(Error::StepRejected { defect, limit: ODE_UNITARITY_LIMIT });
            }
            times.push(s + h);
            defects.push(defect);
        }
    }
    let reference = s_matrix(bundle, t)?.scale(Complex64::from_polar(1.0, span * bundle.e_zp));
    let comparison = linalg::max_abs(&(&y - reference.matrix()).view());
    Ok(EvolutionResult {
        method: "ode-rk4".into(),
        times,
        unitarity_defects: defects,
        operator: FieldOperator::new(&bundle.basis, y)?,
        comparison_defect: Some(comparison),
    })
}

/// `(Id + (i/n)θH)^{−n}` by `n` solves against one LU factorization.
pub fn hille_yoshida_approx(h: &FieldOperator, theta: f64, n: usize) -> Result<FieldOperator> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_defect()));
    }
    let dim = h.basis().len();
    let mut m = h.matrix().mapv(|z| z * I * (theta / n as f64));
    for i in 0..dim {
        m[[i, i]] += ONE;
    }
    let lu = m.factorize_into().map_err(|e| Error::Linalg(format!("singular resolvent: {e}")))?;
    let mut out = linalg::identity(dim);
    for mut col in out.columns_mut() {
        let mut v: Array1<Complex64> = col.to_owned();
        for _ in 0..n {
            v = lu.solve(&v)?;
        }
        col.assign(&v);
    }
    FieldOperator::new(h.basis(), out)
}

/// Interaction-picture Dyson expansion of `e^{i(t−τ)E_zp} S_τ(t)` in `g`.
///
/// The free factor `S⁰(s) = e^{i(s−τ)P₀} e^{−i(s−τ)(H_quad − E_zp)}` is kept
/// exact and the series expands
/// `Y(s) = Id + Σ_k Y_k(s)`, `Y_k(s) = −i∫_τ^s V_I(s')Y_{k−1}(s')ds'` with
/// `V_I(s) = e^{i(s−τ)H_quad} V e^{−i(s−τ)H_quad}`. Returns `S⁰(t)·Y(t)`
/// truncated at `order`; order 0 is the free factor alone.
pub fn dyson_series(bundle: &HamiltonianBundle, t: f64, order: usize) -> Result<FieldOperator> {
    if order > 3 {
        return Err(invalid(format!("Dyson order must be at most 3, got {order}")));
    }
    let tau = bundle.params.tau;
    let span = t - tau;
    let qs = bundle.quad_spectrum()?;
    let free = {
        let mut m = qs.unitary(-span).mapv(|z| z * Complex64::from_polar(1.0, span * bundle.e_zp));
        let e = fock::energies(&bundle.basis);
        for (r, mut row) in m.rows_mut().into_iter().enumerate() {
            let ph = Complex64::from_polar(1.0, span * e[r]);
            row.mapv_inplace(|z| z * ph);
        }
        m
    };
    let n = bundle.basis.len();
    let mut total = linalg::identity(n);
    if order > 0 && span != 0.0 && bundle.params.coupling != 0.0 {
        let spread = qs.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - qs.values.iter().copied().fold(f64::INFINITY, f64::min);
        let panels = ((span.abs() * spread / 2.0).ceil() as usize).clamp(4, 400);
        let rule = CumulativeRule::new(tau, t, panels, 12);
        let v = bundle.v.matrix();
        let vi: Vec<CMat> = rule
            .nodes
            .par_iter()
            .map(|&s| {
                let u = qs.unitary(s - tau);
                u.dot(v).dot(&linalg::adjoint(&u))
            })
            .collect();
        let pp = rule.per_panel();
        let mut prev: Vec<CMat> = vec![linalg::identity(n); rule.len()];
        for _ in 0..order {
            let integrand: Vec<CMat> = vi.par_iter().zip(prev.par_iter()).map(|(a, y)| a.dot(y).mapv(|z| -I * z)).collect();
            let mut next = Vec::with_capacity(rule.len());
            let mut carry = CMat::zeros((n, n));
            for p in 0..rule.panels() {
                for i in 0..pp {
                    let mut acc = carry.clone();
                    for j in 0..pp {
                        acc.scaled_add(Complex64::new(rule.running_weight(i, j), 0.0), &integrand[p * pp + j]);
                    }
                    next.push(acc);
                }
                for j in 0..pp {
                    carry.scaled_add(Complex64::new(rule.weights[p * pp + j], 0.0), &integrand[p * pp + j]);
                }
            }
            total += &carry;
            prev = next;
        }
    }
    FieldOperator::new(&bundle.basis, free.dot(&total))
}

/// Unsmeared field-equation residual at one point of a co-scaled ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualPoint {
    pub eps: f64,
    pub j_max: usize,
    pub dim: usize,
    pub smeared_defect: f64,
    pub unsmeared_residual: f64,
}

/// Field-equation report along `(ε_n, J_n)`, with the grid rebuilt per level.
pub fn residual_curve(template: &ModelParams, ladder: &[(f64, usize)], x: &[f64], t: f64) -> Result<Vec<ResidualPoint>> {
    ladder
        .iter()
        .map(|&(eps, j)| {
            let mut p = template.clone();
            p.grid = ModeGrid::new(template.grid.dim, template.grid.length, j, template.grid.mass)?;
            p.eps = eps;
            p.quad_points = None;
            let b = assemble_hamiltonian(&p)?;
            let r = field_equation_check(&b, x, t)?;
            Ok(ResidualPoint {
                eps,
                j_max: j,
                dim: b.basis.len(),
                smeared_defect: r.smeared_defect,
                unsmeared_residual: r.unsmeared_residual,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quadrature_nodes_and_grid_check() {
        let p = ModelParams::sharp(ModeGrid::line(2.0 * PI, 2, 1.0).unwrap(), 4, 3, 0.1);
        assert_eq!(p.quad_points(), 17);
        let (nodes, w) = p.quadrature();
        assert_eq!(nodes.len(), 17);
        assert!((w.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        assert!(p.check_on_grid(&p.grid_point(&[5])).is_ok());
        assert!(matches!(p.check_on_grid(&[0.1234]), Err(Error::OffGrid(_))));
        assert!(p.is_sharp());
        assert_eq!(p.safe_level(), Some(0));
    }

    #[test]
    fn underresolved_quadrature_is_rejected() {
        let mut p = ModelParams::sharp(ModeGrid::line(2.0 * PI, 2, 1.0).unwrap(), 3, 3, 0.1);
        p.quad_points = Some(9);
        assert!(assemble_hamiltonian(&p).is_err());
    }

    #[test]
    fn dyson_order_bound() {
        let p = ModelParams::sharp(ModeGrid::line(2.0 * PI, 1, 1.0).unwrap(), 2, 1, 0.1);
        let b = assemble_hamiltonian(&p).unwrap();
        assert!(dyson_series(&b, 0.5, 4).is_err());
    }
}
