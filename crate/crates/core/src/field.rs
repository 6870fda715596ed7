//! Regularized free field and conjugate momentum as truncated operators.
//!
//! `Φ₀(x,t) = Σ_j c_j (a_j† e^{i(k⁰_j t − k_j·x)} + a_j e^{−i(k⁰_j t − k_j·x)})`
//! with `c_j = Fφ(ε|k_j|)/√(2 L^d k⁰_j)`. Time and space derivatives act
//! analytically on the mode phases.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::fock::{FieldOperator, FockBasis, ModeGrid};
use crate::gfcalc::Mollifier;
use crate::linalg::{self, CMat};

/// `ρ_ε(y) = L^{-d} Σ_j Fφ(ε|k_j|)² cos(k_j·y)`.
#[derive(Debug, Clone)]
pub struct RegularizedDelta {
    grid: ModeGrid,
    weights: Vec<f64>,
}

impl RegularizedDelta {
    pub fn new(grid: &ModeGrid, mollifier: &Mollifier, eps: f64) -> Self {
        let weights = (0..grid.mode_count()).map(|j| mollifier.eval(eps * grid.momentum_norm(j)).powi(2)).collect();
        Self { grid: grid.clone(), weights }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let s: f64 = self.weights.iter().enumerate().map(|(j, f2)| f2 * self.grid.phase(j, y).cos()).sum();
        s / self.grid.volume()
    }

    /// `∂ρ/∂y_μ`.
    pub fn gradient(&self, y: &[f64], mu: usize) -> f64 {
        let s: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, f2)| -f2 * self.grid.momentum(j)[mu] * self.grid.phase(j, y).sin())
            .sum();
        s / self.grid.volume()
    }

    /// `Fφ(ε|k_j|)²` per mode.
    pub fn mode_weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Free-field evaluator with a concurrent read cache keyed by `(x, t, kind)`.
#[derive(Debug)]
pub struct RegularizedField {
    basis: Arc<FockBasis>,
    mollifier: Mollifier,
    eps: f64,
    amplitudes: Vec<f64>,
    cache: RwLock<HashMap<CacheKey, Arc<FieldOperator>>>,
    caching: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    x: Vec<u64>,
    t: u64,
    time_order: u32,
    space: Vec<u32>,
}

impl RegularizedField {
    pub fn new(basis: &Arc<FockBasis>, mollifier: &Mollifier, eps: f64) -> Self {
        let g = basis.grid();
        let vol = g.volume();
        let amplitudes = (0..g.mode_count())
            .map(|j| mollifier.eval(eps * g.momentum_norm(j)) / (2.0 * vol * g.frequency(j)).sqrt())
            .collect();
        Self {
            basis: basis.clone(),
            mollifier: mollifier.clone(),
            eps,
            amplitudes,
            cache: RwLock::new(HashMap::new()),
            caching: true,
        }
    }

    /// Disables the evaluation cache (every call rebuilds its operator).
    pub fn without_cache(mut self) -> Self {
        self.caching = false;
        self
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> RegularizedDelta {
        RegularizedDelta::new(self.basis.grid(), &self.mollifier, self.eps)
    }

    /// Mode amplitudes `c_j`.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// `∂_t^{n} ∂_x^{α} Φ₀(x, t)` as a dense matrix.
    pub fn derivative_matrix(&self, x: &[f64], t: f64, time_order: u32, space: &[u32]) -> CMat {
        let g = self.basis.grid();
        let m = g.mode_count();
        let mut alpha = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        for j in 0..m {
            let w = g.frequency(j);
            let arg = w * t - g.phase(j, x);
            let mut up = Complex64::from_polar(self.amplitudes[j], arg);
            let mut down = up.conj();
            let i = linalg::I;
            for _ in 0..time_order {
                up *= i * w;
                down *= -i * w;
            }
            for (mu, &n) in space.iter().enumerate() {
                let k = g.momentum(j)[mu];
                for _ in 0..n {
                    up *= -i * k;
                    down *= i * k;
                }
            }
            alpha.push(up);
            beta.push(down);
        }
        self.basis.ladder_sum(&alpha, &beta)
    }

    fn cached(&self, x: &[f64], t: f64, time_order: u32, space: &[u32]) -> Result<Arc<FieldOperator>> {
        let build = || FieldOperator::new(&self.basis, self.derivative_matrix(x, t, time_order, space));
        if !self.caching {
            return Ok(Arc::new(build()?));
        }
        let key = CacheKey {
            x: x.iter().map(|v| v.to_bits()).collect(),
            t: t.to_bits(),
            time_order,
            space: space.to_vec(),
        };
        if let Some(op) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(op.clone());
        }
        let op = Arc::new(build()?);
        self.cache.write().expect("cache lock").entry(key).or_insert_with(|| op.clone());
        Ok(op)
    }

    /// `Φ₀(x, t)`.
    pub fn field(&self, x: &[f64], t: f64) -> Result<Arc<FieldOperator>> {
        self.cached(x, t, 0, &vec![0; x.len()])
    }

    /// `Π₀(x, t) = ∂_t Φ₀(x, t)`.
    pub fn momentum(&self, x: &[f64], t: f64) -> Result<Arc<FieldOperator>> {
        self.cached(x, t, 1, &vec![0; x.len()])
    }

    /// `∂_μ Φ₀(x, t)`.
    pub fn gradient(&self, x: &[f64], t: f64, mu: usize) -> Result<Arc<FieldOperator>> {
        let mut space = vec![0; x.len()];
        space[mu] = 1;
        self.cached(x, t, 0, &space)
    }

    /// `ΔΦ₀(x, t)`.
    pub fn laplacian(&self, x: &[f64], t: f64) -> Result<FieldOperator> {
        let d = self.basis.grid().dim;
        let mut acc = CMat::zeros((self.basis.len(), self.basis.len()));
        for mu in 0..d {
            let mut space = vec![0; d];
            space[mu] = 2;
            acc += &self.derivative_matrix(x, t, 0, &space);
        }
        FieldOperator::new(&self.basis, acc)
    }

    /// `∂_t² Φ₀(x, t)`.
    pub fn second_time_derivative(&self, x: &[f64], t: f64) -> Result<FieldOperator> {
        FieldOperator::new(&self.basis, self.derivative_matrix(x, t, 2, &vec![0; x.len()]))
    }

    /// `Σ_j c_j²` and `Σ_j c_j² (k⁰_j)²`: vacuum expectations of `Φ₀²` and `Π₀²`.
    pub fn vacuum_fluctuations(&self) -> (f64, f64) {
        let g = self.basis.grid();
        let phi: f64 = self.amplitudes.iter().map(|c| c * c).sum();
        let pi: f64 = self.amplitudes.iter().enumerate().map(|(j, c)| c * c * g.frequency(j).powi(2)).sum();
        (phi, pi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CcrReport {
    /// Mean diagonal of `[Φ₀(x), Π₀(x')]` over the safe sector.
    pub commutator: Complex64,
    /// `i ρ_ε(x − x')`.
    pub target: Complex64,
    /// `‖[Φ₀, Π₀] − iρ·Id‖` on the safe sector.
    pub defect: f64,
    pub phi_phi: f64,
    pub pi_pi: f64,
    pub safe_level: usize,
}

impl CcrReport {
    pub fn max_defect(&self) -> f64 {
        self.defect.max(self.phi_phi).max(self.pi_pi)
    }
}

/// Equal-time commutators on the safe sector `n ≤ n_max − 2`.
pub fn ccr_check(rf: &RegularizedField, x: &[f64], x2: &[f64], t: f64) -> Result<CcrReport> {
    let basis = rf.basis();
    let safe = basis.n_max().saturating_sub(2);
    let y: Vec<f64> = x.iter().zip(x2).map(|(a, b)| a - b).collect();
    let target = linalg::I * rf.delta().eval(&y);
    let phi = rf.field(x, t)?;
    let pi2 = rf.momentum(x2, t)?;
    let c = phi.commutator(&pi2)?;
    let cols = basis.sector_end(safe);
    let commutator = (0..cols).map(|i| c.matrix()[[i, i]]).sum::<Complex64>() / cols as f64;
    let defect = c.deviation_from_scalar(target, safe);
    let phi_phi = phi.commutator(&*rf.field(x2, t)?)?.max_abs_on_sector(safe);
    let pi_pi = rf.momentum(x, t)?.commutator(&pi2)?.max_abs_on_sector(safe);
    Ok(CcrReport { commutator, target, defect, phi_phi, pi_pi, safe_level: safe })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn delta_integrates_to_one() {
        let grid = ModeGrid::line(2.0 * PI, 3, 1.0).unwrap();
        let rho = RegularizedDelta::new(&grid, &Mollifier::standard(), 0.2);
        let q = 64;
        let h = grid.length / q as f64;
        let s: f64 = (0..q).map(|i| h * rho.eval(&[-PI + i as f64 * h])).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(rho.eval(&[0.4]), rho.eval(&[-0.4]));
    }

    #[test]
    fn cache_returns_identical_operator() {
        let basis = FockBasis::new(ModeGrid::line(2.0 * PI, 1, 1.0).unwrap(), 2);
        let rf = RegularizedField::new(&basis, &Mollifier::standard(), 0.1);
        let a = rf.field(&[0.3], 0.2).unwrap();
        let b = rf.field(&[0.3], 0.2).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let c = RegularizedField::new(&basis, &Mollifier::standard(), 0.1).without_cache();
        let d = c.field(&[0.3], 0.2).unwrap();
        assert_eq!(a.matrix(), d.matrix());
    }
}
