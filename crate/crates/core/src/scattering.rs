//! Transition amplitudes `|⟨F₁, S_τ(t)F₂⟩|` and their association over ε.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{sweep_average, AverageReport, SweepMode};
use crate::dynamics::{assemble_hamiltonian, dyson_series, s_matrix, HamiltonianBundle, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::fock::{self, FockBasis, FockVector, ModeGrid};
use crate::gfcalc::Mollifier;

const NORM_TOL: f64 = 1e-12;

/// Grid-independent description of a state, rebuilt on every basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum StateRecipe {
    Vacuum,
    /// Occupations given as `(mode index vector, count)` pairs.
    Occupation { modes: Vec<(Vec<i64>, u32)> },
    /// `Σ_j exp(−(k_j − k0)²/(4σ²)) a_j† Ω`, normalized on the grid.
    OneParticlePacket { k0: Vec<f64>, sigma: f64 },
    /// `a⁺(ψ₁)a⁺(ψ₂)Ω` for two Gaussian packets, normalized.
    TwoParticle { first: Packet, second: Packet },
    Superposition { terms: Vec<(f64, f64, StateRecipe)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    pub k0: Vec<f64>,
    pub sigma: f64,
}

impl Packet {
    fn profile(&self, grid: &ModeGrid) -> Result<Vec<Complex64>> {
        if self.k0.len() != grid.dim || !(self.sigma > 0.0) {
            return Err(invalid("packet needs one k0 component per dimension and sigma > 0"));
        }
        Ok((0..grid.mode_count())
            .map(|j| {
                let d2: f64 = grid.momentum(j).iter().zip(&self.k0).map(|(k, c)| (k - c).powi(2)).sum();
                Complex64::new((-d2 / (4.0 * self.sigma * self.sigma)).exp(), 0.0)
            })
            .collect())
    }
}

impl StateRecipe {
    pub fn packet(k0: f64, sigma: f64) -> Self {
        StateRecipe::OneParticlePacket { k0: vec![k0], sigma }
    }

    pub fn build(&self, basis: &Arc<FockBasis>) -> Result<FockVector> {
        let grid = basis.grid();
        let v = match self {
            StateRecipe::Vacuum => FockVector::vacuum(basis),
            StateRecipe::Occupation { modes } => {
                let mut occ = vec![0u32; grid.mode_count()];
                for (idx, n) in modes {
                    let m = grid
                        .mode_of(idx)
                        .ok_or_else(|| invalid(format!("mode {idx:?} is not on the grid")))?;
                    occ[m] += n;
                }
                FockVector::occupation(basis, &occ)?
            }
            StateRecipe::OneParticlePacket { k0, sigma } => {
                let psi = Packet { k0: k0.clone(), sigma: *sigma }.profile(grid)?;
                fock::create(basis, &psi)?.apply(&FockVector::vacuum(basis))?
            }
            StateRecipe::TwoParticle { first, second } => {
                if basis.n_max() < 2 {
                    return Err(invalid("two-particle state needs n_max >= 2"));
                }
                let a = fock::create(basis, &first.profile(grid)?)?;
                let b = fock::create(basis, &second.profile(grid)?)?;
                a.apply(&b.apply(&FockVector::vacuum(basis))?)?
            }
            StateRecipe::Superposition { terms } => {
                let mut acc = FockVector::zeros(basis);
                for (re, im, r) in terms {
                    acc = acc.add(&r.build(basis)?.scaled(Complex64::new(*re, *im)))?;
                }
                acc
            }
        };
        v.normalized()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRecord {
    pub eps: f64,
    pub ladder_index: usize,
    pub j_max: usize,
    pub dim: usize,
    pub mollifier: String,
    pub value: f64,
    pub phase_re: f64,
    pub phase_im: f64,
    pub seed: u64,
}

fn check_normalized(v: &FockVector) -> Result<()> {
    let n = v.norm();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

/// `⟨F₁, S_τ(t)F₂⟩` for normalized states.
pub fn transition(bundle: &HamiltonianBundle, f1: &FockVector, f2: &FockVector, t: f64) -> Result<Complex64> {
    check_normalized(f1)?;
    check_normalized(f2)?;
    let s = s_matrix(bundle, t)?;
    fock::inner(f1, &s.apply(f2)?)
}

pub fn amplitude(bundle: &HamiltonianBundle, f1: &FockVector, f2: &FockVector, t: f64) -> Result<AmplitudeRecord> {
    let z = transition(bundle, f1, f2, t)?;
    let value = z.norm();
    let phase = if value > 0.0 { z / value } else { Complex64::new(1.0, 0.0) };
    Ok(AmplitudeRecord {
        eps: bundle.params.eps,
        ladder_index: 0,
        j_max: bundle.params.grid.j_max,
        dim: bundle.basis.len(),
        mollifier: bundle.params.mollifier.label.clone(),
        value,
        phase_re: phase.re,
        phase_im: phase.im,
        seed: 0,
    })
}

/// `ε_n = ε₀·J₀/J_n` with `J_n = round(J₀·r^n)`: the momentum reach
/// `ε_n·k_max(J_n)` stays fixed while the grid refines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoScaledLadder {
    pub j0: usize,
    pub eps0: f64,
    pub ratio: f64,
    pub levels: usize,
}

impl CoScaledLadder {
    pub fn points(&self) -> Result<Vec<(f64, usize)>> {
        if self.j0 == 0 || !(self.ratio > 1.0) || !(self.eps0 > 0.0) {
            return Err(invalid("co-scaled ladder needs J0 >= 1, ratio > 1 and eps0 > 0"));
        }
        let mut out: Vec<(f64, usize)> = Vec::with_capacity(self.levels);
        for n in 0..self.levels {
            let j = (self.j0 as f64 * self.ratio.powi(n as i32)).round() as usize;
            if out.last().is_some_and(|&(_, prev)| prev == j) {
                return Err(invalid(format!("ratio {} repeats J = {j}; use a larger ratio", self.ratio)));
            }
            out.push((self.eps0 * self.j0 as f64 / j as f64, j));
        }
        Ok(out)
    }
}

/// Everything but `ε`, `J` and the mollifier, which the sweep varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTemplate {
    pub dim: usize,
    pub length: f64,
    pub mass: f64,
    pub n_max: usize,
    pub power: usize,
    pub coupling: f64,
    pub tau: f64,
    /// Basis dimension budget per ladder level.
    pub dim_cap: usize,
    pub seed: u64,
}

impl SweepTemplate {
    pub fn params(&self, eps: f64, j: usize, mollifier: &Mollifier) -> Result<ModelParams> {
        let grid = ModeGrid::new(self.dim, self.length, j, self.mass)?;
        Ok(ModelParams {
            grid,
            n_max: self.n_max,
            mollifier: mollifier.clone(),
            cutoff: None,
            eps,
            coupling: self.coupling,
            power: self.power,
            tau: self.tau,
            quad_points: None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub records: Vec<AmplitudeRecord>,
    pub complete: bool,
    pub failure: Option<String>,
}

/// One record per `(ladder level, mollifier)`, ordered by level then mollifier.
///
/// Levels whose basis exceeds `dim_cap` end the sweep; the records computed so
/// far are returned with `complete = false`.
pub fn amplitude_sweep(
    template: &SweepTemplate,
    ladder: &[(f64, usize)],
    f1: &StateRecipe,
    f2: &StateRecipe,
    t: f64,
    mollifiers: &[Mollifier],
) -> Result<SweepResult> {
    let mut allowed = Vec::new();
    let mut failure = None;
    for (idx, &(eps, j)) in ladder.iter().enumerate() {
        let modes = (2 * j + 1).pow(template.dim as u32);
        let dim = FockBasis::dimension_for(modes, template.n_max);
        if dim > template.dim_cap {
            failure = Some(Error::DimensionBudget { dim, cap: template.dim_cap }.to_string());
            break;
        }
        allowed.push((idx, eps, j));
    }
    let jobs: Vec<(usize, f64, usize, &Mollifier)> = allowed
        .iter()
        .flat_map(|&(idx, eps, j)| mollifiers.iter().map(move |m| (idx, eps, j, m)))
        .collect();
    let records: Vec<AmplitudeRecord> = jobs
        .par_iter()
        .map(|&(idx, eps, j, m)| {
            let p = template.params(eps, j, m)?;
            let bundle = assemble_hamiltonian(&p)?;
            let a = f1.build(&bundle.basis)?;
            let b = f2.build(&bundle.basis)?;
            let mut rec = amplitude(&bundle, &a, &b, t)?;
            rec.ladder_index = idx;
            rec.seed = template.seed;
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult { complete: failure.is_none(), records, failure })
}

/// CSV with columns `eps,J,dim,mollifier,value,phase_re,phase_im,seed`.
pub fn records_to_csv(records: &[AmplitudeRecord]) -> String {
    let mut out = String::from("eps,J,dim,mollifier,value,phase_re,phase_im,seed\n");
    for r in records {
        out.push_str(&format!(
            "{:e},{},{},{},{:e},{:e},{:e},{}\n",
            r.eps, r.j_max, r.dim, r.mollifier, r.value, r.phase_re, r.phase_im, r.seed
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct AssociationReport {
    pub reports: Vec<AverageReport>,
    /// Spread of the per-mollifier central values (limit when present, else window midpoint).
    pub spread: f64,
}

/// Per-mollifier averaging of sweep records plus the cross-mollifier spread.
pub fn associate_amplitude(records: &[AmplitudeRecord], mode: SweepMode) -> Result<AssociationReport> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if !labels.contains(&r.mollifier.as_str()) {
            labels.push(&r.mollifier);
        }
    }
    if labels.is_empty() {
        return Err(invalid("no records to associate"));
    }
    let reports: Vec<AverageReport> = labels
        .iter()
        .map(|&l| {
            let samples: Vec<(f64, f64)> = records.iter().filter(|r| r.mollifier == l).map(|r| (r.eps, r.value)).collect();
            sweep_average(l, &samples, mode)
        })
        .collect::<Result<_>>()?;
    let centers: Vec<f64> = reports.iter().map(|r| r.limit.unwrap_or(0.5 * (r.liminf + r.limsup))).collect();
    let spread = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max) - centers.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AssociationReport { reports, spread })
}

/// `⟨F₁, S_k F₂⟩` for the order-`k` Dyson partial sum, which approximates
/// `e^{i(t−τ)E_zp} S_τ(t)`.
pub fn perturbative_amplitude(
    bundle: &HamiltonianBundle,
    f1: &FockVector,
    f2: &FockVector,
    t: f64,
    order: usize,
) -> Result<Complex64> {
    check_normalized(f1)?;
    check_normalized(f2)?;
    let s = dyson_series(bundle, t, order)?;
    fock::inner(f1, &s.apply(f2)?)
}
