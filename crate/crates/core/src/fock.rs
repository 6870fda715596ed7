//! Truncated bosonic Fock space over a periodic momentum grid.
//!
//! Basis states are occupation vectors with total particle number at most
//! `n_max`, ordered by total number and then lexicographically. Raising a
//! state out of the top sector drops the amplitude, which keeps creation and
//! annihilation exact mutual adjoints on the truncated space.
//!
//! Smearing is bilinear: `a⁻(ψ) = Σ √w ψ_j a_j` with no conjugation of `ψ`,
//! so `a⁻(ψ) = a⁺(ψ̄)†`. The inner product conjugates its first argument.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat, CVec};

/// Discrete momentum grid of a periodic box `[-L/2, L/2)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub dim: usize,
    pub length: f64,
    pub j_max: usize,
    pub mass: f64,
    #[serde(skip)]
    indices: Vec<Vec<i64>>,
    #[serde(skip)]
    momenta: Vec<Vec<f64>>,
    #[serde(skip)]
    frequencies: Vec<f64>,
}

impl ModeGrid {
    pub fn new(dim: usize, length: f64, j_max: usize, mass: f64) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(invalid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid(format!("box length must be positive, got {length}")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid(format!("mass must be positive, got {mass}")));
        }
        let side: Vec<i64> = (-(j_max as i64)..=j_max as i64).collect();
        let mut indices: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..dim {
            indices = indices
                .into_iter()
                .flat_map(|prefix| {
                    side.iter().map(move |&j| {
                        let mut v = prefix.clone();
                        v.push(j);
                        v
                    })
                })
                .collect();
        }
        let momenta: Vec<Vec<f64>> = indices
            .iter()
            .map(|j| j.iter().map(|&ji| 2.0 * PI * ji as f64 / length).collect())
            .collect();
        let frequencies = momenta
            .iter()
            .map(|k| (k.iter().map(|x| x * x).sum::<f64>() + mass * mass).sqrt())
            .collect();
        Ok(Self { dim, length, j_max, mass, indices, momenta, frequencies })
    }

    /// One-dimensional grid, the default configuration.
    pub fn line(length: f64, j_max: usize, mass: f64) -> Result<Self> {
        Self::new(1, length, j_max, mass)
    }

    pub fn mode_count(&self) -> usize {
        self.indices.len()
    }

    pub fn mode_index(&self, mode: usize) -> &[i64] {
        &self.indices[mode]
    }

    pub fn mode_of(&self, index: &[i64]) -> Option<usize> {
        if index.len() != self.dim || index.iter().any(|&j| j.unsigned_abs() as usize > self.j_max) {
            return None;
        }
        let side = 2 * self.j_max as i64 + 1;
        Some(index.iter().fold(0i64, |acc, &j| acc * side + j + self.j_max as i64) as usize)
    }

    pub fn momentum(&self, mode: usize) -> &[f64] {
        &self.momenta[mode]
    }

    pub fn momentum_norm(&self, mode: usize) -> f64 {
        self.momenta[mode].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn frequency(&self, mode: usize) -> f64 {
        self.frequencies[mode]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn max_momentum(&self) -> f64 {
        (0..self.mode_count()).map(|j| self.momentum_norm(j)).fold(0.0, f64::max)
    }

    /// Momentum-space measure weight `(2π/L)^d`.
    pub fn weight(&self) -> f64 {
        (2.0 * PI / self.length).powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// `k · x` for mode `mode`.
    pub fn phase(&self, mode: usize, x: &[f64]) -> f64 {
        self.momenta[mode].iter().zip(x).map(|(k, xi)| k * xi).sum()
    }
}

/// Occupation-number basis with total-particle truncation.
#[derive(Debug, Clone)]
pub struct FockBasis {
    grid: ModeGrid,
    n_max: usize,
    states: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    sector_start: Vec<usize>,
    raise: Vec<Vec<(usize, usize, f64)>>,
}

impl FockBasis {
    pub fn new(grid: ModeGrid, n_max: usize) -> Arc<Self> {
        let m = grid.mode_count();
        let mut states = Vec::new();
        let mut sector_start = Vec::with_capacity(n_max + 2);
        for total in 0..=n_max {
            sector_start.push(states.len());
            let mut current = vec![0u32; m];
            push_compositions(&mut states, &mut current, 0, total as u32);
        }
        sector_start.push(states.len());
        let lookup = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut basis = Self { grid, n_max, states, lookup, sector_start, raise: Vec::new() };
        basis.raise = (0..m)
            .map(|mode| {
                let mut entries = Vec::new();
                for (col, occ) in basis.states.iter().enumerate() {
                    if basis.sector_of(col) == n_max {
                        continue;
                    }
                    let mut next = occ.clone();
                    next[mode] += 1;
                    let row = basis.lookup[&next];
                    entries.push((row, col, (next[mode] as f64).sqrt()));
                }
                entries
            })
            .collect();
        Arc::new(basis)
    }

    /// Basis size `Σ_{s ≤ n_max} C(M + s − 1, s)` without building the basis.
    pub fn dimension_for(modes: usize, n_max: usize) -> usize {
        (0..=n_max).map(|s| binomial(modes + s - 1, s)).sum()
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn occupation(&self, index: usize) -> &[u32] {
        &self.states[index]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.lookup.get(occupation).copied()
    }

    pub fn sector_of(&self, index: usize) -> usize {
        self.states[index].iter().sum::<u32>() as usize
    }

    /// Number of basis states with total particle number `<= level`.
    pub fn sector_end(&self, level: usize) -> usize {
        self.sector_start[level.min(self.n_max) + 1]
    }

    /// Index range of the states with exactly `total` particles.
    pub fn sector_range(&self, total: usize) -> std::ops::Range<usize> {
        self.sector_start[total]..self.sector_start[total + 1]
    }

    /// Non-zero entries `(row, col, √(n_j + 1))` of the mode-`j` raising operator.
    pub fn raising_entries(&self, mode: usize) -> &[(usize, usize, f64)] {
        &self.raise[mode]
    }

    pub fn same_as(&self, other: &FockBasis) -> bool {
        std::ptr::eq(self, other) || (self.grid == other.grid && self.n_max == other.n_max)
    }

    pub fn descriptor(&self) -> BasisDescriptor {
        BasisDescriptor {
            dim: self.grid.dim,
            length: self.grid.length,
            j_max: self.grid.j_max,
            mass: self.grid.mass,
            n_max: self.n_max,
            size: self.len(),
        }
    }

    /// Dense `Σ_j (α_j a_j† + β_j a_j)`.
    pub fn ladder_sum(&self, alpha: &[Complex64], beta: &[Complex64]) -> CMat {
        let n = self.len();
        let mut out = Array2::zeros((n, n));
        for (mode, entries) in self.raise.iter().enumerate() {
            let (a, b) = (alpha[mode], beta[mode]);
            for &(row, col, f) in entries {
                out[[row, col]] += a * f;
                out[[col, row]] += b * f;
            }
        }
        out
    }
}

fn push_compositions(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == current.len() {
        current[pos] = left;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for v in 0..=left {
        current[pos] = v;
        push_compositions(out, current, pos + 1, left - v);
    }
    current[pos] = 0;
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub dim: usize,
    pub length: f64,
    pub j_max: usize,
    pub mass: f64,
    pub n_max: usize,
    pub size: usize,
}

/// Complex amplitudes over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct FockVector {
    basis: Arc<FockBasis>,
    amps: CVec,
}

impl FockVector {
    pub fn zeros(basis: &Arc<FockBasis>) -> Self {
        Self { basis: basis.clone(), amps: Array1::zeros(basis.len()) }
    }

    pub fn vacuum(basis: &Arc<FockBasis>) -> Self {
        let mut v = Self::zeros(basis);
        v.amps[0] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn occupation(basis: &Arc<FockBasis>, occupation: &[u32]) -> Result<Self> {
        let idx = basis
            .index_of(occupation)
            .ok_or_else(|| invalid(format!("occupation {occupation:?} is not in the basis")))?;
        let mut v = Self::zeros(basis);
        v.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_amplitudes(basis: &Arc<FockBasis>, amps: CVec) -> Result<Self> {
        if amps.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: amps.len() });
        }
        Ok(Self { basis: basis.clone(), amps })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self { basis: self.basis.clone(), amps: self.amps.mapv(|z| z / n) })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { basis: self.basis.clone(), amps: self.amps.mapv(|z| z * c) }
    }

    pub fn add(&self, other: &FockVector) -> Result<Self> {
        check_basis(&self.basis, &other.basis)?;
        Ok(Self { basis: self.basis.clone(), amps: &self.amps + &other.amps })
    }

    /// Largest total particle number with a non-zero amplitude.
    pub fn max_sector(&self) -> Option<usize> {
        (0..self.basis.len()).rev().find(|&i| self.amps[i] != Complex64::new(0.0, 0.0)).map(|i| self.basis.sector_of(i))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() != 0.0)
            .map(|(i, z)| serde_json::json!([i, z.re, z.im]))
            .collect();
        serde_json::json!({ "basis": self.basis.descriptor(), "amplitudes": entries })
    }
}

/// `⟨f1, f2⟩ = Σ conj(f1_i) f2_i`.
pub fn inner(f1: &FockVector, f2: &FockVector) -> Result<Complex64> {
    check_basis(&f1.basis, &f2.basis)?;
    Ok(f1.amps.iter().zip(f2.amps.iter()).map(|(a, b)| a.conj() * b).sum())
}

fn check_basis(a: &FockBasis, b: &FockBasis) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::BasisMismatch)
    }
}

/// Complex matrix over a [`FockBasis`] with its Hermitian flag and
/// sector-mixing width.
#[derive(Debug, Clone)]
pub struct FieldOperator {
    basis: Arc<FockBasis>,
    matrix: CMat,
    hermitian: bool,
    width: usize,
}

impl FieldOperator {
    pub fn new(basis: &Arc<FockBasis>, matrix: CMat) -> Result<Self> {
        if matrix.dim() != (basis.len(), basis.len()) {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: matrix.nrows() });
        }
        let hermitian = linalg::hermitian_defect(&matrix) <= 1e-12 * (1.0 + linalg::max_abs(&matrix.view()));
        let width = sector_width(basis, &matrix);
        Ok(Self { basis: basis.clone(), matrix, hermitian, width })
    }

    pub fn identity(basis: &Arc<FockBasis>) -> Self {
        Self { basis: basis.clone(), matrix: linalg::identity(basis.len()), hermitian: true, width: 0 }
    }

    pub fn zero(basis: &Arc<FockBasis>) -> Self {
        Self::diagonal(basis, vec![Complex64::new(0.0, 0.0); basis.len()])
    }

    fn diagonal(basis: &Arc<FockBasis>, diag: Vec<Complex64>) -> Self {
        let hermitian = diag.iter().all(|z| z.im.abs() <= 1e-12 * (1.0 + z.re.abs()));
        Self {
            basis: basis.clone(),
            matrix: Array2::from_diag(&Array1::from(diag)),
            hermitian,
            width: 0,
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            matrix: linalg::adjoint(&self.matrix),
            hermitian: self.hermitian,
            width: self.width,
        }
    }

    pub fn compose(&self, other: &FieldOperator) -> Result<Self> {
        check_basis(&self.basis, &other.basis)?;
        Self::new(&self.basis, self.matrix.dot(&other.matrix))
    }

    pub fn commutator(&self, other: &FieldOperator) -> Result<Self> {
        check_basis(&self.basis, &other.basis)?;
        Self::new(&self.basis, linalg::commutator(&self.matrix, &other.matrix))
    }

    pub fn add(&self, other: &FieldOperator) -> Result<Self> {
        check_basis(&self.basis, &other.basis)?;
        Self::new(&self.basis, &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &FieldOperator) -> Result<Self> {
        check_basis(&self.basis, &other.basis)?;
        Self::new(&self.basis, &self.matrix - &other.matrix)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let hermitian = self.hermitian && c.im == 0.0;
        Self { basis: self.basis.clone(), matrix: self.matrix.mapv(|z| z * c), hermitian, width: self.width }
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        check_basis(&self.basis, &v.basis)?;
        Ok(FockVector { basis: self.basis.clone(), amps: self.matrix.dot(&v.amps) })
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix.view())
    }

    /// Max-norm of the operator acting on states with at most `level` particles.
    pub fn max_abs_on_sector(&self, level: usize) -> f64 {
        linalg::max_abs_on_columns(&self.matrix, self.basis.sector_end(level))
    }

    /// `self − c·Id` restricted to states with at most `level` particles.
    pub fn deviation_from_scalar(&self, c: Complex64, level: usize) -> f64 {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[[i, i]] -= c;
        }
        linalg::max_abs_on_columns(&m, self.basis.sector_end(level))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.basis.len();
        let mut entries = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let z = self.matrix[[r, c]];
                if z.norm() != 0.0 {
                    entries.push(serde_json::json!([r, c, z.re, z.im]));
                }
            }
        }
        serde_json::json!({
            "basis": self.basis.descriptor(),
            "hermitian": self.hermitian,
            "width": self.width,
            "entries": entries,
        })
    }
}

fn sector_width(basis: &FockBasis, m: &CMat) -> usize {
    let sectors: Vec<usize> = (0..basis.len()).map(|i| basis.sector_of(i)).collect();
    let mut w = 0;
    for ((r, c), z) in m.indexed_iter() {
        if z.norm() != 0.0 {
            w = w.max(sectors[r].abs_diff(sectors[c]));
        }
    }
    w
}

fn check_modes(basis: &FockBasis, psi: &[Complex64]) -> Result<()> {
    let m = basis.grid().mode_count();
    if psi.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: psi.len() });
    }
    Ok(())
}

/// `a⁺(ψ) = Σ_j √w ψ_j a_j†`, truncated at `n_max`.
pub fn create(basis: &Arc<FockBasis>, psi: &[Complex64]) -> Result<FieldOperator> {
    check_modes(basis, psi)?;
    let sw = basis.grid().weight().sqrt();
    let alpha: Vec<Complex64> = psi.iter().map(|p| p * sw).collect();
    let zero = vec![Complex64::new(0.0, 0.0); psi.len()];
    FieldOperator::new(basis, basis.ladder_sum(&alpha, &zero))
}

/// `a⁻(ψ) = Σ_j √w ψ_j a_j` (bilinear, no conjugation of `ψ`).
pub fn annihilate(basis: &Arc<FockBasis>, psi: &[Complex64]) -> Result<FieldOperator> {
    check_modes(basis, psi)?;
    let sw = basis.grid().weight().sqrt();
    let beta: Vec<Complex64> = psi.iter().map(|p| p * sw).collect();
    let zero = vec![Complex64::new(0.0, 0.0); psi.len()];
    FieldOperator::new(basis, basis.ladder_sum(&zero, &beta))
}

/// Eigenvalue `Σ_j k⁰_j n_j` of every basis state.
pub fn energies(basis: &FockBasis) -> Vec<f64> {
    let freq = basis.grid().frequencies();
    (0..basis.len())
        .map(|i| basis.occupation(i).iter().zip(freq).map(|(&n, w)| n as f64 * w).sum())
        .collect()
}

/// Diagonal energy operator `P₀` (normal ordered, no zero-point term).
pub fn energy_operator(basis: &Arc<FockBasis>) -> FieldOperator {
    FieldOperator::diagonal(basis, energies(basis).into_iter().map(|e| Complex64::new(e, 0.0)).collect())
}

/// `exp(iθP₀)`.
pub fn exp_energy(basis: &Arc<FockBasis>, theta: f64) -> FieldOperator {
    let mut op = FieldOperator::diagonal(
        basis,
        energies(basis).into_iter().map(|e| Complex64::from_polar(1.0, theta * e)).collect(),
    );
    op.hermitian = theta == 0.0;
    op
}
