//! TOML experiment configuration. Unknown keys are rejected at every level.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::Deserialize;

use fockfield::averaging::{Profile, SweepMode, DEFAULT_TOL};
use fockfield::dynamics::ModelParams;
use fockfield::fock::ModeGrid;
use fockfield::gfcalc::{Mollifier, Transition};
use fockfield::scattering::{CoScaledLadder, StateRecipe, SweepTemplate};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `run --out` takes precedence.
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Average(AverageSpec),
    Heaviside(HeavisideSpec),
    Ccr(CcrSpec),
    Evolve(EvolveSpec),
    Smatrix(SmatrixSpec),
    Sweep(SweepSpec),
    Dyson(DysonSpec),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Average(_) => "average",
            Experiment::Heaviside(_) => "heaviside",
            Experiment::Ccr(_) => "ccr",
            Experiment::Evolve(_) => "evolve",
            Experiment::Smatrix(_) => "smatrix",
            Experiment::Sweep(_) => "sweep",
            Experiment::Dyson(_) => "dyson",
        }
    }
}

pub const KINDS: [(&str, &str); 7] = [
    ("average", "Cesaro averages of an oscillating generalized number over an eta ladder"),
    ("heaviside", "smoothed Heaviside power pairings and the H^2 - H infinitesimal check"),
    ("ccr", "ladder and field commutators, translation property, Klein-Gordon identity"),
    ("evolve", "Hamiltonian, field-equation, generator, ODE and Hille-Yoshida checks"),
    ("smatrix", "transition amplitudes between state recipes"),
    ("sweep", "amplitude sweep over a co-scaled ladder, CSV records plus association"),
    ("dyson", "Dyson partial sums against the exact S-matrix for a list of couplings"),
];

fn two_pi() -> f64 {
    2.0 * PI
}
fn one_f() -> f64 {
    1.0
}
fn one_u() -> usize {
    1
}
fn three() -> usize {
    3
}
fn standard() -> String {
    "standard".into()
}

/// Model fields shared by the operator experiments. `eps` absent means the
/// sharp configuration of the chosen mollifier.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "one_u")]
    pub dim: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
    pub j_max: usize,
    #[serde(default = "one_f")]
    pub mass: f64,
    pub n_max: usize,
    #[serde(default = "three")]
    pub power: usize,
    #[serde(default)]
    pub coupling: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "standard")]
    pub mollifier: String,
    pub eps: Option<f64>,
    pub quad_points: Option<usize>,
}

pub fn mollifier(label: &str) -> Result<Mollifier, String> {
    Mollifier::by_label(label).ok_or_else(|| {
        let known: Vec<String> = Mollifier::stock().into_iter().map(|m| m.label).collect();
        format!("unknown mollifier {label:?}; known: {}", known.join(", "))
    })
}

pub fn transition(label: &str) -> Result<Transition, String> {
    Transition::stock()
        .into_iter()
        .find(|t| t.label() == label)
        .ok_or_else(|| format!("unknown transition {label:?}; known: tanh, arctan, smoothstep"))
}

impl ModelSpec {
    pub fn params(&self) -> Result<ModelParams, String> {
        let grid = ModeGrid::new(self.dim, self.length, self.j_max, self.mass).map_err(|e| e.to_string())?;
        let m = mollifier(&self.mollifier)?;
        let eps = match self.eps {
            Some(e) => e,
            None => 0.5 * m.sharp_threshold(grid.max_momentum()).min(1.0),
        };
        let p = ModelParams {
            grid,
            n_max: self.n_max,
            mollifier: m,
            cutoff: None,
            eps,
            coupling: self.coupling,
            power: self.power,
            tau: self.tau,
            quad_points: self.quad_points,
        };
        p.validate().map_err(|e| e.to_string())?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaLadder {
    pub hi: f64,
    pub lo: f64,
    pub per_decade: usize,
}

impl Default for EtaLadder {
    fn default() -> Self {
        Self { hi: 1e-1, lo: 1e-6, per_decade: 2 }
    }
}

fn default_powers() -> Vec<f64> {
    vec![1.0]
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn limit_tol() -> f64 {
    2e-3
}
fn window_tol() -> f64 {
    0.02
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageSpec {
    pub profile: Profile,
    #[serde(default = "default_powers")]
    pub powers: Vec<f64>,
    #[serde(default)]
    pub ladder: EtaLadder,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub expect_limit: Option<f64>,
    #[serde(default = "limit_tol")]
    pub limit_tol: f64,
    pub expect_window: Option<[f64; 2]>,
    #[serde(default = "window_tol")]
    pub window_tol: f64,
}

fn stock_transitions() -> Vec<String> {
    vec!["tanh".into(), "arctan".into(), "smoothstep".into()]
}
fn heaviside_eps() -> Vec<f64> {
    vec![1.0, 1e-2, 1e-4]
}
fn yes() -> bool {
    true
}
fn pairing_tol() -> f64 {
    1e-8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavisideSpec {
    #[serde(default = "stock_transitions")]
    pub transitions: Vec<String>,
    #[serde(default = "heaviside_eps")]
    pub eps: Vec<f64>,
    /// Extra `(n1, n2)` pairs for `∫(H^n1 − H^n2)H' dx`.
    #[serde(default)]
    pub pairings: Vec<[u32; 2]>,
    #[serde(default = "yes")]
    pub infinitesimal: bool,
    #[serde(default = "pairing_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcrCheck {
    Ladder,
    Field,
    Translation,
    KleinGordon,
}

fn ccr_checks() -> Vec<CcrCheck> {
    vec![CcrCheck::Ladder, CcrCheck::Field]
}
fn j_values() -> Vec<usize> {
    vec![1, 2, 3]
}
fn n_max_values() -> Vec<usize> {
    vec![2, 3, 4]
}
fn ccr_eps() -> f64 {
    0.05
}
fn ccr_points() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [0.4, -1.1], [2.0, 0.3]]
}
fn ccr_times() -> Vec<f64> {
    vec![0.0, 0.7]
}
fn thetas() -> Vec<f64> {
    vec![0.7, -1.3, 2.0]
}
fn identity_tol() -> f64 {
    1e-10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcrSpec {
    #[serde(default = "ccr_checks")]
    pub checks: Vec<CcrCheck>,
    #[serde(default = "j_values")]
    pub j_values: Vec<usize>,
    #[serde(default = "n_max_values")]
    pub n_max_values: Vec<usize>,
    #[serde(default = "two_pi")]
    pub length: f64,
    #[serde(default = "one_f")]
    pub mass: f64,
    #[serde(default = "standard")]
    pub mollifier: String,
    #[serde(default = "ccr_eps")]
    pub eps: f64,
    /// `(x, x')` pairs for the field commutators; `x` alone for the identities.
    #[serde(default = "ccr_points")]
    pub points: Vec<[f64; 2]>,
    #[serde(default = "ccr_times")]
    pub times: Vec<f64>,
    /// Shifts used by the translation check.
    #[serde(default = "thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "identity_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveCheck {
    Hamiltonian,
    FieldPipelines,
    Generator,
    Ode,
    OdeOrder,
    FieldEquation,
    ResidualCurve,
    HilleYoshida,
    Heisenberg,
}

fn evolve_t() -> f64 {
    0.7
}
fn evolve_x() -> f64 {
    0.4
}
fn grid_indices() -> Vec<usize> {
    vec![0]
}
fn zero_times() -> Vec<f64> {
    vec![0.0]
}
fn ode_dt() -> f64 {
    1e-3
}
fn order_dt() -> [f64; 2] {
    [0.02, 0.01]
}
fn hy_n() -> Vec<usize> {
    vec![8, 32, 128]
}
fn hy_theta() -> f64 {
    1.3
}
fn residual_levels() -> Vec<usize> {
    vec![1, 2, 3]
}
fn residual_eps0() -> f64 {
    1.5
}
fn residual_x() -> f64 {
    -PI
}
fn residual_t() -> f64 {
    0.5
}
fn heisenberg_h() -> f64 {
    1e-2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub model: ModelSpec,
    pub checks: Vec<EvolveCheck>,
    /// Couplings to run every check at; defaults to the model coupling.
    pub couplings: Option<Vec<f64>>,
    #[serde(default = "evolve_t")]
    pub t: f64,
    #[serde(default = "evolve_x")]
    pub x: f64,
    /// Quadrature-grid indices for the field-equation check.
    #[serde(default = "grid_indices")]
    pub grid_indices: Vec<usize>,
    #[serde(default = "zero_times")]
    pub times: Vec<f64>,
    #[serde(default = "ode_dt")]
    pub dt: f64,
    #[serde(default = "one_f")]
    pub order_coupling: f64,
    #[serde(default = "order_dt")]
    pub order_dt: [f64; 2],
    #[serde(default = "hy_n")]
    pub hy_n: Vec<usize>,
    #[serde(default = "hy_theta")]
    pub hy_theta: f64,
    /// Grid sizes `J` of the residual curve, with `ε = residual_eps0 / J`.
    #[serde(default = "residual_levels")]
    pub residual_levels: Vec<usize>,
    #[serde(default = "residual_eps0")]
    pub residual_eps0: f64,
    #[serde(default = "residual_x")]
    pub residual_x: f64,
    #[serde(default = "residual_t")]
    pub residual_t: f64,
    #[serde(default = "heisenberg_h")]
    pub heisenberg_h: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmatrixSpec {
    pub model: ModelSpec,
    pub states: Vec<StateRecipe>,
    #[serde(default = "one_f")]
    pub t: f64,
}

fn dim_cap() -> usize {
    2000
}
fn standard_list() -> Vec<String> {
    vec![standard()]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "one_u")]
    pub dim: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
    #[serde(default = "one_f")]
    pub mass: f64,
    pub n_max: usize,
    #[serde(default = "three")]
    pub power: usize,
    #[serde(default)]
    pub coupling: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "dim_cap")]
    pub dim_cap: usize,
    pub ladder: CoScaledLadder,
    pub f1: StateRecipe,
    pub f2: StateRecipe,
    #[serde(default = "one_f")]
    pub t: f64,
    #[serde(default = "standard_list")]
    pub mollifiers: Vec<String>,
    pub association: Option<SweepMode>,
    /// Maximal allowed spread of the amplitude over the whole sweep.
    pub constant_tol: Option<f64>,
    /// Maximal allowed spread across mollifiers at each ladder level.
    pub mollifier_tol: Option<f64>,
}

impl SweepSpec {
    pub fn template(&self, seed: u64) -> SweepTemplate {
        SweepTemplate {
            dim: self.dim,
            length: self.length,
            mass: self.mass,
            n_max: self.n_max,
            power: self.power,
            coupling: self.coupling,
            tau: self.tau,
            dim_cap: self.dim_cap,
            seed,
        }
    }
}

fn dyson_order() -> usize {
    2
}
fn dyson_couplings() -> Vec<f64> {
    vec![1e-2, 5e-3]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DysonSpec {
    pub model: ModelSpec,
    #[serde(default = "one_f")]
    pub t: f64,
    #[serde(default = "dyson_order")]
    pub order: usize,
    #[serde(default = "dyson_couplings")]
    pub couplings: Vec<f64>,
    /// Allowed range of each error ratio between consecutive couplings.
    pub expect_ratio: Option<[f64; 2]>,
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
        return Err(format!("name must be a non-empty plain file name, got {:?}", cfg.name));
    }
    Ok(cfg)
}
