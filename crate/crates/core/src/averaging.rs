//! Association by averaging over ε for bounded oscillating generalized numbers.
//!
//! Two estimators of the Cesàro mean `A(η) = (1/η)∫₀^η R(ε)dε` are provided.
//! The substituted estimator needs an [`Oscillation`] hint `R(ε) = W(θ(ε))`
//! with a periodic wave `W` and a monotone phase `θ`; it integrates whole
//! periods of `W` in the phase variable and closes the infinite tail with an
//! Euler–Maclaurin expansion. The dyadic estimator works on any closure and
//! splits `(0, η]` into panels `(η2^{-k-1}, η2^{-k}]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::quad::GaussLegendre;

/// Monotone phase `θ(ε)`, decreasing in ε and tending to `+∞` as `ε → 0⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Phase {
    /// `θ = g·ε^{-p}`
    InversePower { g: f64, p: f64 },
    /// `θ = p·ln(1/ε)`
    LogInverse { p: f64 },
}

impl Phase {
    pub fn theta(&self, eps: f64) -> f64 {
        match *self {
            Phase::InversePower { g, p } => g * eps.powf(-p),
            Phase::LogInverse { p } => -p * eps.ln(),
        }
    }

    /// `ε(θ)`.
    pub fn eps(&self, theta: f64) -> f64 {
        match *self {
            Phase::InversePower { g, p } => (g / theta).powf(1.0 / p),
            Phase::LogInverse { p } => (-theta / p).exp(),
        }
    }

    /// `w = -dε/dθ` and its first two θ-derivatives.
    fn weight(&self, theta: f64) -> (f64, f64, f64) {
        match *self {
            Phase::InversePower { g, p } => {
                let a = 1.0 / p;
                let w = a * (g / theta).powf(a) / theta;
                (w, -(a + 1.0) * w / theta, (a + 1.0) * (a + 2.0) * w / (theta * theta))
            }
            Phase::LogInverse { p } => {
                let w = (-theta / p).exp() / p;
                (w, -w / p, w / (p * p))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveShape {
    /// `|cos θ|`, period π, kinks at `π/2 + kπ`
    AbsCos,
    /// `cos θ`, period 2π
    Cos,
}

/// `W(θ) = amplitude · shape(θ)^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub shape: WaveShape,
    pub amplitude: f64,
    pub power: u32,
}

impl Wave {
    pub fn eval(&self, theta: f64) -> f64 {
        let base = match self.shape {
            WaveShape::AbsCos => theta.cos().abs(),
            WaveShape::Cos => theta.cos(),
        };
        self.amplitude * base.powi(self.power as i32)
    }

    pub fn period(&self) -> f64 {
        match self.shape {
            WaveShape::AbsCos => PI,
            WaveShape::Cos => 2.0 * PI,
        }
    }

    /// Phase where a period cell starts (a kink for `|cos|`).
    fn origin(&self) -> f64 {
        match self.shape {
            WaveShape::AbsCos => 0.5 * PI,
            WaveShape::Cos => 0.0,
        }
    }

    fn squared(&self) -> Self {
        Self { shape: self.shape, amplitude: self.amplitude * self.amplitude, power: 2 * self.power }
    }

    fn can_be_negative(&self) -> bool {
        self.amplitude < 0.0 || (self.shape == WaveShape::Cos && self.power % 2 == 1)
    }

    pub fn sup(&self) -> f64 {
        self.amplitude.abs()
    }
}

/// `R(ε) = W(θ(ε))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub phase: Phase,
    pub wave: Wave,
}

impl Oscillation {
    pub fn eval(&self, eps: f64) -> f64 {
        self.wave.eval(self.phase.theta(eps))
    }
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bounded ε-family `R(ε)` to be associated to a number.
#[derive(Clone)]
pub struct GeneralizedNumber {
    pub label: String,
    value: Scalar,
    hint: Option<Oscillation>,
    pub bound: Option<f64>,
}

impl fmt::Debug for GeneralizedNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedNumber")
            .field("label", &self.label)
            .field("hint", &self.hint)
            .field("bound", &self.bound)
            .finish()
    }
}

impl GeneralizedNumber {
    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(label: impl Into<String>, bound: Option<f64>, f: F) -> Self {
        Self { label: label.into(), value: Arc::new(f), hint: None, bound }
    }

    pub fn oscillating(label: impl Into<String>, osc: Oscillation) -> Self {
        let o = osc;
        Self { label: label.into(), value: Arc::new(move |e| o.eval(e)), hint: Some(osc), bound: Some(osc.wave.sup()) }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(format!("{c}"), Some(c.abs()), move |_| c)
    }

    /// `|cos(g/ε)|`
    pub fn abs_cos_inverse(g: f64) -> Self {
        Self::abs_cos_power(g, 1.0)
    }

    /// `|cos(g·ε^{-p})|`
    pub fn abs_cos_power(g: f64, p: f64) -> Self {
        Self::oscillating(
            format!("|cos({g}*eps^-{p})|"),
            Oscillation {
                phase: Phase::InversePower { g, p },
                wave: Wave { shape: WaveShape::AbsCos, amplitude: 1.0, power: 1 },
            },
        )
    }

    /// `|cos(p·log(1/ε))|`
    pub fn abs_cos_log(p: f64) -> Self {
        Self::oscillating(
            format!("|cos({p}*log(1/eps))|"),
            Oscillation {
                phase: Phase::LogInverse { p },
                wave: Wave { shape: WaveShape::AbsCos, amplitude: 1.0, power: 1 },
            },
        )
    }

    pub fn eval(&self, eps: f64) -> f64 {
        (self.value)(eps)
    }

    pub fn hint(&self) -> Option<&Oscillation> {
        self.hint.as_ref()
    }

    /// `λ·R`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let f = self.value.clone();
        Self {
            label: format!("{lambda}*{}", self.label),
            value: Arc::new(move |e| lambda * f(e)),
            hint: self.hint.map(|o| Oscillation {
                phase: o.phase,
                wave: Wave { amplitude: o.wave.amplitude * lambda, ..o.wave },
            }),
            bound: self.bound.map(|b| b * lambda.abs()),
        }
    }

    fn squared(&self) -> Self {
        let f = self.value.clone();
        Self {
            label: format!("({})^2", self.label),
            value: Arc::new(move |e| f(e).powi(2)),
            hint: self.hint.map(|o| Oscillation { phase: o.phase, wave: o.wave.squared() }),
            bound: self.bound.map(|b| b * b),
        }
    }
}

/// Which Cesàro estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Substituted estimator when a hint exists, dyadic otherwise.
    Auto,
    Substituted,
    Dyadic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Period cells or dyadic panels used.
    pub work: usize,
    pub estimator: &'static str,
}

const CELL_BUDGET: usize = 2_000_000;
const PANEL_BUDGET: usize = 1 << 22;

/// `(1/η)∫₀^η R(ε)dε` within `tol`.
pub fn cesaro_average(gn: &GeneralizedNumber, eta: f64, tol: f64) -> Result<f64> {
    Ok(cesaro_estimate(gn, eta, tol, Estimator::Auto)?.value)
}

pub fn cesaro_estimate(gn: &GeneralizedNumber, eta: f64, tol: f64, estimator: Estimator) -> Result<Estimate> {
    if !(eta > 0.0 && eta.is_finite()) || !(tol > 0.0) {
        return Err(invalid(format!("need eta > 0 and tol > 0, got eta = {eta}, tol = {tol}")));
    }
    let bound = gn.bound.ok_or(Error::Unbounded)?;
    match (estimator, gn.hint) {
        (Estimator::Auto | Estimator::Substituted, Some(h)) => substituted(&h, eta, tol),
        (Estimator::Substituted, None) => Err(invalid("substituted estimator needs an oscillation hint")),
        _ => dyadic(&*gn.value, bound, eta, tol, false),
    }
}

fn gl20() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Cell moments `m_i = ∫_0^P W(origin + s) s^i ds`, i = 0, 1, 2.
fn cell_moments(wave: &Wave) -> [f64; 3] {
    let p = wave.period();
    let gl = GaussLegendre::new(40);
    let mut m = [0.0; 3];
    for (s, w) in gl.mapped(0.0, p) {
        let v = w * wave.eval(wave.origin() + s);
        m[0] += v;
        m[1] += v * s;
        m[2] += v * s * s;
    }
    m
}

fn substituted(osc: &Oscillation, eta: f64, tol: f64) -> Result<Estimate> {
    let wave = osc.wave;
    let phase = osc.phase;
    let period = wave.period();
    let [m0, m1, m2] = cell_moments(&wave);
    let target = 0.25 * tol * eta;
    let theta_a = phase.theta(eta);
    let integrate = |a: f64, b: f64| -> f64 {
        gl20().mapped(a, b).map(|(t, w)| w * wave.eval(t) * phase.weight(t).0).sum()
    };

    // first, possibly partial, cell up to the next cell origin
    let k0 = ((theta_a - wave.origin()) / period).floor() + 1.0;
    let mut theta = wave.origin() + k0 * period;
    let mut total = if theta > theta_a { integrate(theta_a, theta) } else { 0.0 };
    let mut cells = 1usize;
    loop {
        let (w, dw, ddw) = phase.weight(theta);
        let em_error = 2.0 * period.powi(3) * wave.sup() * ddw.abs();
        if em_error <= target {
            let tail = m0 * phase.eps(theta) / period
                + (0.5 * m0 - m1 / period) * w
                + (-m0 * period / 12.0 + 0.5 * m1 - 0.5 * m2 / period) * dw;
            total += tail;
            return Ok(Estimate { value: total / eta, error: em_error / eta, work: cells, estimator: "substituted" });
        }
        let rest = phase.eps(theta);
        if wave.sup() * rest <= target {
            total += (m0 / period) * rest;
            return Ok(Estimate {
                value: total / eta,
                error: wave.sup() * rest / eta,
                work: cells,
                estimator: "substituted",
            });
        }
        if cells >= CELL_BUDGET {
            return Err(Error::BudgetExceeded { partial: total / eta, error: wave.sup() * rest / eta, tol });
        }
        total += integrate(theta, theta + period);
        theta += period;
        cells += 1;
    }
}

/// Composite Gauss–Legendre on `[a, b]` with doubling until two consecutive
/// refinements agree within `tol`.
fn panel_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, check_sign: bool) -> Result<(f64, usize)> {
    let gl = gl20();
    let eval = |n: usize| -> Result<f64> {
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let lo = a + i as f64 * h;
            for (x, w) in gl.mapped(lo, lo + h) {
                let v = f(x);
                if check_sign && v < 0.0 {
                    return Err(Error::NegativeSample { eps: x, value: v });
                }
                acc += w * v;
            }
        }
        Ok(acc)
    };
    let mut n = 1;
    let mut prev = eval(n)?;
    let mut agreements = 0;
    let mut used = n;
    while n < PANEL_BUDGET {
        n *= 2;
        used += n;
        let next = eval(n)?;
        if (next - prev).abs() <= tol {
            agreements += 1;
            if agreements == 2 {
                return Ok((next, used));
            }
        } else {
            agreements = 0;
        }
        prev = next;
    }
    Err(Error::BudgetExceeded { partial: prev, error: f64::NAN, tol })
}

fn dyadic(f: &dyn Fn(f64) -> f64, bound: f64, eta: f64, tol: f64, check_sign: bool) -> Result<Estimate> {
    // tail (0, η2^{-K}] is bounded by B·η2^{-K}
    let k_max = ((bound / (0.25 * tol)).max(1.0).log2().ceil() as usize).max(1);
    let panel_tol = 0.5 * tol * eta / k_max as f64;
    let mut total = 0.0;
    let mut work = 0;
    let mut hi = eta;
    let mut last_mean = 0.0;
    for _ in 0..k_max {
        let lo = 0.5 * hi;
        let (v, used) = panel_integral(f, lo, hi, panel_tol, check_sign).map_err(|e| match e {
            Error::BudgetExceeded { error, tol, .. } => {
                Error::BudgetExceeded { partial: total / eta, error, tol }
            }
            other => other,
        })?;
        total += v;
        work += used;
        last_mean = v / (hi - lo);
        hi = lo;
    }
    // bounded-tail cutoff: extend the last panel mean over the remaining interval
    total += last_mean * hi;
    Ok(Estimate { value: total / eta, error: bound * hi / eta + 0.5 * tol, work, estimator: "dyadic" })
}

/// `((1/η)∫₀^η R²dε)^{1/2}` within `tol`, for `R ≥ 0`.
pub fn rms_average(gn: &GeneralizedNumber, eta: f64, tol: f64) -> Result<f64> {
    let sq = gn.squared();
    let first = match gn.hint {
        Some(h) => {
            if h.wave.can_be_negative() {
                let eps = h.phase.eps(h.wave.period() * 1e3);
                return Err(Error::NegativeSample { eps, value: gn.eval(eps) });
            }
            substituted(sq.hint.as_ref().expect("squared hint"), eta, tol)?.value
        }
        None => {
            let b = sq.bound.ok_or(Error::Unbounded)?;
            dyadic(&*gn.value.clone(), gn.bound.unwrap_or(b), eta, tol, true)?;
            dyadic(&*sq.value, b, eta, tol, false)?.value
        }
    };
    // second pass: d√x = dx/(2√x) so the mean square needs tol·2·rms
    let tol2 = tol * (2.0 * first.max(0.0).sqrt()).max(tol);
    let second = match sq.hint {
        Some(h) => substituted(&h, eta, tol2)?.value,
        None => dyadic(&*sq.value, sq.bound.unwrap_or(1.0), eta, tol2, false)?.value,
    };
    Ok(second.max(0.0).sqrt())
}

/// Summary of an averaging experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageReport {
    pub label: String,
    pub eta_ladder: Vec<f64>,
    #[serde(rename = "A_values")]
    pub a_values: Vec<f64>,
    pub limit: Option<f64>,
    pub liminf: f64,
    pub limsup: f64,
    pub seed: Option<u64>,
    pub diagnostics: BTreeMap<String, Value>,
}

impl AverageReport {
    pub fn window_width(&self) -> f64 {
        self.limsup - self.liminf
    }

    /// JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

/// Logarithmic ladder from `hi` down to `lo`, `per_decade` points per decade.
pub fn log_ladder(hi: f64, lo: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|i| hi * (lo / hi).powf(i as f64 / n as f64)).collect()
}

/// Tolerance used for every `A(η)` in [`associated_value`].
pub const DEFAULT_TOL: f64 = 2e-4;
const WINDOW_POINTS_PER_DECADE: usize = 24;

/// Runs the Cesàro average over a decreasing η-ladder.
///
/// The limit is reported when the last four values are pairwise within
/// `3·tol`. The window is taken over a dense ladder spanning the last two
/// decades of the given ladder.
pub fn associated_value(gn: &GeneralizedNumber, ladder: &[f64], tol: f64) -> Result<AverageReport> {
    if ladder.len() < 6 {
        return Err(invalid(format!("need at least 6 ladder points, got {}", ladder.len())));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) || ladder.iter().any(|&e| !(e > 0.0)) {
        return Err(invalid("ladder must be positive and strictly decreasing"));
    }
    let estimates: Vec<Estimate> = ladder
        .par_iter()
        .map(|&eta| cesaro_estimate(gn, eta, tol, Estimator::Auto))
        .collect::<Result<_>>()?;
    let a_values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let tail = &a_values[a_values.len() - 4..];
    let cauchy = tail.iter().all(|x| tail.iter().all(|y| (x - y).abs() <= 3.0 * tol));
    let limit = cauchy.then_some(*tail.last().unwrap());
    let eta_min = *ladder.last().unwrap();
    let hi = (eta_min * 100.0).min(ladder[0]);
    let dense = log_ladder(hi, eta_min, WINDOW_POINTS_PER_DECADE);
    let dense_values: Vec<f64> = dense
        .par_iter()
        .map(|&eta| cesaro_average(gn, eta, tol))
        .collect::<Result<_>>()?;
    let liminf = dense_values.iter().copied().fold(f64::INFINITY, f64::min);
    let limsup = dense_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("tol".into(), Value::from(tol));
    diagnostics.insert("estimator".into(), Value::from(estimates[0].estimator));
    diagnostics.insert("work".into(), Value::from(estimates.iter().map(|e| e.work).collect::<Vec<_>>()));
    diagnostics.insert("error_bounds".into(), Value::from(estimates.iter().map(|e| e.error).collect::<Vec<_>>()));
    diagnostics.insert("window_ladder".into(), Value::from(dense.clone()));
    diagnostics.insert("window_values".into(), Value::from(dense_values));
    Ok(AverageReport {
        label: gn.label.clone(),
        eta_ladder: ladder.to_vec(),
        a_values,
        limit,
        liminf,
        limsup,
        seed: None,
        diagnostics,
    })
}

/// Bounded almost-periodic profile `f` used as `R_p(ε) = f((1/ε)^p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    AbsCos,
    /// `|cos(log u)|`
    AbsCosLog,
    Constant(f64),
}

impl Profile {
    pub fn rescaled(&self, p: f64) -> GeneralizedNumber {
        match *self {
            Profile::AbsCos => GeneralizedNumber::abs_cos_power(1.0, p),
            Profile::AbsCosLog => GeneralizedNumber::abs_cos_log(p),
            Profile::Constant(c) => GeneralizedNumber::constant(c),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RescalingStudy {
    pub p_values: Vec<f64>,
    pub reports: Vec<AverageReport>,
    /// `max − min` of the reported limits, when every p has one.
    pub spread: Option<f64>,
}

pub fn p_rescaling_study(f: Profile, p_list: &[f64], ladder: &[f64], tol: f64) -> Result<RescalingStudy> {
    if p_list.iter().any(|&p| !(p > 0.0)) {
        return Err(invalid("rescaling powers must be positive"));
    }
    let reports: Vec<AverageReport> =
        p_list.iter().map(|&p| associated_value(&f.rescaled(p), ladder, tol)).collect::<Result<_>>()?;
    let limits: Option<Vec<f64>> = reports.iter().map(|r| r.limit).collect();
    let spread = limits.map(|l| {
        l.iter().copied().fold(f64::NEG_INFINITY, f64::max) - l.iter().copied().fold(f64::INFINITY, f64::min)
    });
    Ok(RescalingStudy { p_values: p_list.to_vec(), reports, spread })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", deny_unknown_fields)]
pub enum SweepMode {
    /// Piecewise-linear interpolation in ε, then Cesàro means over `[ε_min, η]`.
    Trapezoid { tol: f64 },
    /// Seeded uniform subsampling of the small-ε half of the records.
    Random { draws: usize, seed: u64 },
}

const SWEEP_LADDER: usize = 8;
const RANDOM_BATCHES: usize = 8;

/// Averages a discrete `(ε, value)` record.
///
/// The window `[liminf, limsup]` is the range of the raw values over the
/// small-ε half of the record.
pub fn sweep_average(label: &str, samples: &[(f64, f64)], mode: SweepMode) -> Result<AverageReport> {
    if samples.len() < 8 {
        return Err(invalid(format!("need at least 8 samples, got {}", samples.len())));
    }
    let mut s: Vec<(f64, f64)> = samples.to_vec();
    if s.iter().any(|p| !(p.0 > 0.0) || !p.1.is_finite()) {
        return Err(invalid("samples need positive eps and finite values"));
    }
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = s.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(invalid(format!("duplicate eps {}", w[0].0)));
    }
    let half = &s[..s.len().div_ceil(2)];
    let liminf = half.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let limsup = half.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("samples".into(), Value::from(s.len()));
    let (eps_min, eps_max) = (s[0].0, s[s.len() - 1].0);
    match mode {
        SweepMode::Trapezoid { tol } => {
            // prefix integrals of the interpolant
            let mut prefix = vec![0.0; s.len()];
            for i in 1..s.len() {
                prefix[i] = prefix[i - 1] + 0.5 * (s[i].1 + s[i - 1].1) * (s[i].0 - s[i - 1].0);
            }
            let integral_to = |eta: f64| -> f64 {
                let i = s.partition_point(|p| p.0 <= eta).clamp(1, s.len() - 1);
                let (x0, y0, x1, y1) = (s[i - 1].0, s[i - 1].1, s[i].0, s[i].1);
                let yt = y0 + (y1 - y0) * (eta - x0) / (x1 - x0);
                prefix[i - 1] + 0.5 * (y0 + yt) * (eta - x0)
            };
            let ratio = eps_min / eps_max;
            let ladder: Vec<f64> = (0..SWEEP_LADDER)
                .map(|i| eps_max * ratio.powf(i as f64 / SWEEP_LADDER as f64))
                .collect();
            let a_values: Vec<f64> = ladder.iter().map(|&eta| integral_to(eta) / (eta - eps_min)).collect();
            let tail = &a_values[a_values.len() - 4..];
            let cauchy = tail.iter().all(|x| tail.iter().all(|y| (x - y).abs() <= 3.0 * tol));
            diagnostics.insert("tol".into(), Value::from(tol));
            diagnostics.insert("mode".into(), Value::from("trapezoid"));
            Ok(AverageReport {
                label: label.into(),
                eta_ladder: ladder,
                limit: cauchy.then_some(*tail.last().unwrap()),
                a_values,
                liminf,
                limsup,
                seed: None,
                diagnostics,
            })
        }
        SweepMode::Random { draws, seed } => {
            if draws < RANDOM_BATCHES {
                return Err(invalid(format!("need at least {RANDOM_BATCHES} draws")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let picks: Vec<f64> = (0..draws).map(|_| half[rng.random_range(0..half.len())].1).collect();
            let batch = draws / RANDOM_BATCHES;
            let a_values: Vec<f64> = picks
                .chunks(batch)
                .take(RANDOM_BATCHES)
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect();
            let mean = picks.iter().sum::<f64>() / draws as f64;
            // shifted by the first draw so that constant data gives exactly zero
            let shift = picks[0];
            let dm = picks.iter().map(|v| v - shift).sum::<f64>() / draws as f64;
            let var = (picks.iter().map(|v| (v - shift - dm).powi(2)).sum::<f64>() / draws as f64).max(0.0);
            diagnostics.insert("mode".into(), Value::from("random"));
            diagnostics.insert("draws".into(), Value::from(draws));
            diagnostics.insert("spread".into(), Value::from(var.sqrt()));
            diagnostics.insert("standard_error".into(), Value::from((var / draws as f64).sqrt()));
            diagnostics.insert("region".into(), Value::from(vec![eps_min, half[half.len() - 1].0]));
            Ok(AverageReport {
                label: label.into(),
                eta_ladder: Vec::new(),
                a_values,
                limit: Some(mean),
                liminf,
                limsup,
                seed: Some(seed),
                diagnostics,
            })
        }
    }
}
