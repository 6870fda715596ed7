//! Scalar generalized-function calculus at representative level.
//!
//! A mollifier is given by its Fourier-side profile `Fφ`, a smooth even
//! plateau bump. The position-space kernel `φ(y) = (1/2π)∫Fφ(u)e^{iuy}du` is
//! synthesized by quadrature and `φ_ε(x) = φ(x/ε)/ε`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{adaptive_gk, GaussLegendre};

/// Transition function used inside the plateau-bump profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    /// `ψ(x) = exp(-1/x)`
    Exp,
    /// `ψ(x) = exp(-1/x²)`
    Gauss,
}

impl BumpKind {
    fn psi(self, x: f64) -> (f64, f64, f64) {
        if x <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        match self {
            BumpKind::Exp => {
                let e = (-1.0 / x).exp();
                let x2 = x * x;
                (e, e / x2, e * (1.0 / (x2 * x2) - 2.0 / (x2 * x)))
            }
            BumpKind::Gauss => {
                let x2 = x * x;
                let e = (-1.0 / x2).exp();
                (e, 2.0 * e / (x2 * x), e * (4.0 / (x2 * x2 * x2) - 6.0 / (x2 * x2)))
            }
        }
    }

    /// Smooth step falling from 1 at `t = 0` to 0 at `t = 1`, with its first
    /// two derivatives in `t`.
    fn step(self, t: f64) -> (f64, f64, f64) {
        if t <= 0.0 {
            return (1.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let (q, dq, ddq) = self.psi(1.0 - t);
        let (r, dr, ddr) = self.psi(t);
        let (dq, ddq) = (-dq, ddq);
        let s = q + r;
        let num = dq * r - q * dr;
        let dnum = ddq * r - q * ddr;
        let value = q / s;
        let d1 = num / (s * s);
        let d2 = dnum / (s * s) - 2.0 * num * (dq + dr) / (s * s * s);
        (value, d1, d2)
    }
}

/// Even plateau bump `Fφ`: 1 on `|u| ≤ a`, 0 on `|u| ≥ b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub label: String,
    pub kind: BumpKind,
    pub a: f64,
    pub b: f64,
}

impl Mollifier {
    pub fn new(label: impl Into<String>, kind: BumpKind, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(invalid(format!("plateau bump needs 0 < a < b, got a = {a}, b = {b}")));
        }
        Ok(Self { label: label.into(), kind, a, b })
    }

    pub fn standard() -> Self {
        Self::new("standard", BumpKind::Exp, 0.5, 1.0).expect("valid stock profile")
    }

    pub fn gaussian() -> Self {
        Self::new("gaussian", BumpKind::Gauss, 0.5, 1.0).expect("valid stock profile")
    }

    pub fn wide() -> Self {
        Self::new("wide", BumpKind::Exp, 0.6, 1.5).expect("valid stock profile")
    }

    /// The three stock profiles used for mollifier-independence studies.
    pub fn stock() -> Vec<Self> {
        vec![Self::standard(), Self::gaussian(), Self::wide()]
    }

    pub fn by_label(label: &str) -> Option<Self> {
        Self::stock().into_iter().find(|m| m.label == label)
    }

    /// `(Fφ(u), Fφ'(u), Fφ''(u))`.
    pub fn eval_with_derivatives(&self, u: f64) -> (f64, f64, f64) {
        let w = self.b - self.a;
        let t = (u.abs() - self.a) / w;
        let (v, d1, d2) = self.kind.step(t);
        (v, u.signum() * d1 / w, d2 / (w * w))
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.eval_with_derivatives(u).0
    }

    /// Largest `ε` for which every grid momentum up to `k_max` sits on the plateau.
    pub fn sharp_threshold(&self, k_max: f64) -> f64 {
        if k_max == 0.0 {
            f64::INFINITY
        } else {
            self.a / k_max
        }
    }

    /// Position-space kernel `φ(y)`.
    pub fn kernel(&self, y: f64) -> f64 {
        let plateau = if y == 0.0 { self.a } else { (self.a * y).sin() / y };
        let panels = ((y.abs() * (self.b - self.a) / PI).ceil() as usize).max(4);
        let ramp = gl32().integrate_composite(self.a, self.b, panels, |u| self.eval(u) * (u * y).cos());
        (plateau + ramp) / PI
    }

    /// `∫_{-∞}^{y} φ`, the unit-step convolution at scale 1.
    pub fn kernel_cumulative(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.5;
        }
        // (1/π)∫_0^b Fφ(u) sin(uy)/u du, with the plateau part as a sine integral
        let panels = ((y.abs() * self.b / PI).ceil() as usize).max(4);
        let sinc = |u: f64| if u == 0.0 { y } else { (u * y).sin() / u };
        let plateau = gl32().integrate_composite(0.0, self.a, panels, sinc);
        let ramp = gl32().integrate_composite(self.a, self.b, panels, |u| self.eval(u) * sinc(u));
        0.5 + (plateau + ramp) / PI
    }
}

impl fmt::Display for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({:?}, a={}, b={})", self.label, self.kind, self.a, self.b)
    }
}

fn gl32() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

/// Position-space cutoff `χ(εξ)`, a plateau bump in position units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub profile: Mollifier,
}

impl Cutoff {
    pub fn new(kind: BumpKind, a: f64, b: f64) -> Result<Self> {
        Ok(Self { profile: Mollifier::new("cutoff", kind, a, b)? })
    }

    /// `χ(y)` for a position `y` (Euclidean norm).
    pub fn eval(&self, y: &[f64]) -> f64 {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.profile.eval(r)
    }
}

/// Evenly spaced sample points `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || len < 2 {
            return Err(invalid("grid needs a positive step and at least two points"));
        }
        Ok(Self { start, step, len })
    }

    /// `len` points covering `[lo, hi]` inclusive.
    pub fn spanning(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(hi > lo) || len < 2 {
            return Err(invalid("grid needs hi > lo and at least two points"));
        }
        Self::new(lo, (hi - lo) / (len - 1) as f64, len)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }
}

type Rule = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// An ε-parameterized real family `(ε, x) ↦ r(ε, x)` living on a sample grid.
#[derive(Clone)]
pub struct Representative {
    label: String,
    grid: UniformGrid,
    rule: Rule,
    derivatives: [Option<Rule>; 2],
    focus: Vec<f64>,
}

impl fmt::Debug for Representative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Representative")
            .field("label", &self.label)
            .field("grid", &self.grid)
            .field("focus", &self.focus)
            .finish()
    }
}

impl Representative {
    pub fn new<F>(label: impl Into<String>, grid: UniformGrid, rule: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self { label: label.into(), grid, rule: Arc::new(rule), derivatives: [None, None], focus: Vec::new() }
    }

    pub fn constant(grid: UniformGrid, c: f64) -> Self {
        let mut r = Self::new(format!("{c}"), grid, move |_, _| c);
        r.derivatives = [Some(Arc::new(|_, _| 0.0)), Some(Arc::new(|_, _| 0.0))];
        r
    }

    /// Declares analytic x-derivatives of order 1 and 2.
    pub fn with_derivatives<F1, F2>(mut self, d1: F1, d2: F2) -> Self
    where
        F1: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.derivatives = [Some(Arc::new(d1)), Some(Arc::new(d2))];
        self
    }

    /// Points where the ε-dependence concentrates; pairings refine around them.
    pub fn with_focus(mut self, focus: Vec<f64>) -> Self {
        self.focus = focus;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn focus(&self) -> &[f64] {
        &self.focus
    }

    pub fn eval(&self, eps: f64, x: f64) -> f64 {
        (self.rule)(eps, x)
    }

    /// Analytic derivative of order 1 or 2, when declared.
    pub fn derivative(&self, order: usize, eps: f64, x: f64) -> Option<f64> {
        match order {
            1 | 2 => self.derivatives[order - 1].as_ref().map(|d| d(eps, x)),
            _ => None,
        }
    }

    pub fn sample(&self, eps: f64) -> Vec<f64> {
        self.grid.points().into_iter().map(|x| self.eval(eps, x)).collect()
    }

    /// `∫ r(ε, x) ψ(x) dx` over the test function's support.
    pub fn pair(&self, eps: f64, test: &TestFunction) -> Result<f64> {
        let (lo, hi) = test.support;
        let mut breaks = vec![lo, hi];
        for &c in &self.focus {
            for off in [-10.0, -1.0, 0.0, 1.0, 10.0] {
                let p = c + off * eps;
                if p > lo && p < hi {
                    breaks.push(p);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let scale = 1e-13;
        let r = adaptive_gk(|x| self.eval(eps, x) * (test.f)(x), &breaks, scale, 20_000)?;
        Ok(r.value)
    }

    /// CSV with columns `eps,x,value` over the sample grid.
    pub fn to_csv(&self, eps_list: &[f64]) -> String {
        let mut out = String::from("eps,x,value\n");
        for &eps in eps_list {
            for x in self.grid.points() {
                out.push_str(&format!("{eps:e},{x:e},{:e}\n", self.eval(eps, x)));
            }
        }
        out
    }
}

/// Pointwise product per ε; no smoothing is reapplied.
pub fn product(r1: &Representative, r2: &Representative) -> Result<Representative> {
    if r1.grid != r2.grid {
        return Err(Error::GridMismatch);
    }
    let (a, b) = (r1.rule.clone(), r2.rule.clone());
    let mut out = Representative::new(format!("({})*({})", r1.label, r2.label), r1.grid, move |e, x| {
        a(e, x) * b(e, x)
    });
    if let ([Some(a1), Some(a2)], [Some(b1), Some(b2)]) = (&r1.derivatives, &r2.derivatives) {
        let (a0, b0) = (r1.rule.clone(), r2.rule.clone());
        let (a1c, b1c) = (a1.clone(), b1.clone());
        let d1 = move |e, x| a1c(e, x) * b0(e, x) + a0(e, x) * b1c(e, x);
        let (a0, b0) = (r1.rule.clone(), r2.rule.clone());
        let (a1, a2, b1, b2) = (a1.clone(), a2.clone(), b1.clone(), b2.clone());
        let d2 = move |e, x| a2(e, x) * b0(e, x) + 2.0 * a1(e, x) * b1(e, x) + a0(e, x) * b2(e, x);
        out = out.with_derivatives(d1, d2);
    }
    let mut focus = r1.focus.clone();
    focus.extend_from_slice(&r2.focus);
    focus.sort_by(f64::total_cmp);
    focus.dedup();
    Ok(out.with_focus(focus))
}

/// Linear combination `c1·r1 + c2·r2`.
pub fn combine(c1: f64, r1: &Representative, c2: f64, r2: &Representative) -> Result<Representative> {
    if r1.grid != r2.grid {
        return Err(Error::GridMismatch);
    }
    let (a, b) = (r1.rule.clone(), r2.rule.clone());
    let mut focus = r1.focus.clone();
    focus.extend_from_slice(&r2.focus);
    focus.sort_by(f64::total_cmp);
    focus.dedup();
    Ok(Representative::new(
        format!("{c1}*({}) + {c2}*({})", r1.label, r2.label),
        r1.grid,
        move |e, x| c1 * a(e, x) + c2 * b(e, x),
    )
    .with_focus(focus))
}

/// Distribution to embed by convolution with `φ_ε`.
#[derive(Clone)]
pub enum Distribution {
    Zero,
    Delta,
    Heaviside,
    /// A locally integrable function, convolved by direct quadrature.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Distribution {
    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Distribution::Function(Arc::new(f))
    }
}

/// Nodes per unit of `y` in the sampled kernel table.
const KERNEL_DENSITY: f64 = 8.0;
/// Kernel support kept in the table, in units of `y = x/ε`.
const KERNEL_REACH: f64 = 400.0;

/// Sampled `φ(y)` on a uniform grid, used for convolving general functions.
#[derive(Debug, Clone)]
struct KernelTable {
    h: f64,
    values: Vec<f64>,
}

impl KernelTable {
    fn new(phi: &Mollifier) -> Self {
        // spacing below π/b so the trapezoid sum of the bandlimited kernel
        // against smooth data has no aliasing at the band edge
        let h = 1.0 / (KERNEL_DENSITY * phi.b);
        let n = (KERNEL_REACH / h).ceil() as usize;
        let values = (0..=n).map(|m| phi.kernel(m as f64 * h)).collect();
        Self { h, values }
    }

    fn convolve(&self, f: &dyn Fn(f64) -> f64, eps: f64, x: f64) -> f64 {
        let step = self.h * eps;
        let mut acc = self.values[0] * f(x);
        for (m, &v) in self.values.iter().enumerate().skip(1) {
            let s = m as f64 * step;
            acc += v * (f(x - s) + f(x + s));
        }
        acc * self.h
    }
}

/// Convolution `f * φ_ε` as a representative on `grid`.
pub fn embed_distribution(
    f: Distribution,
    phi: &Mollifier,
    eps: f64,
    grid: UniformGrid,
) -> Result<Representative> {
    check_eps(eps)?;
    check_resolution(phi, eps, &grid)?;
    let phi = phi.clone();
    let rep = match f {
        Distribution::Zero => Representative::constant(grid, 0.0),
        Distribution::Delta => {
            Representative::new(format!("delta*{}", phi.label), grid, move |e, x| phi.kernel(x / e) / e)
                .with_focus(vec![0.0])
        }
        Distribution::Heaviside => {
            let p2 = phi.clone();
            Representative::new(format!("H*{}", phi.label), grid, move |e, x| phi.kernel_cumulative(x / e))
                .with_derivatives(
                    {
                        let p = p2.clone();
                        move |e, x| p.kernel(x / e) / e
                    },
                    move |e, x| {
                        let h = 1e-4 * e;
                        (p2.kernel((x + h) / e) - p2.kernel((x - h) / e)) / (2.0 * h * e)
                    },
                )
                .with_focus(vec![0.0])
        }
        Distribution::Function(g) => {
            let table = Arc::new(KernelTable::new(&phi));
            Representative::new(format!("f*{}", phi.label), grid, move |e, x| table.convolve(&*g, e, x))
        }
    };
    Ok(rep)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("eps must be positive, got {eps}")))
    }
}

/// Grid spacing guard: sampling must resolve the band `|u| ≤ b/ε`.
pub fn check_resolution(phi: &Mollifier, eps: f64, grid: &UniformGrid) -> Result<()> {
    let limit = eps / phi.b;
    if grid.step > limit {
        return Err(Error::Resolution { spacing: grid.step, eps, limit });
    }
    Ok(())
}

/// Saturating transition `h` with `h(-∞) = 0`, `h(+∞) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// `(1 + tanh y)/2`
    Tanh,
    /// `1/2 + atan(y)/π`, algebraic tails
    Arctan,
    /// Compactly supported smooth step on `[-1, 1]`
    SmoothStep,
    /// `∫_{-∞}^{y} φ` for a mollifier
    Convolution(Mollifier),
}

impl Transition {
    pub fn stock() -> Vec<Self> {
        vec![Transition::Tanh, Transition::Arctan, Transition::SmoothStep]
    }

    pub fn label(&self) -> String {
        match self {
            Transition::Tanh => "tanh".into(),
            Transition::Arctan => "arctan".into(),
            Transition::SmoothStep => "smoothstep".into(),
            Transition::Convolution(m) => format!("conv-{}", m.label),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        match self {
            Transition::Tanh => 0.5 * (1.0 + y.tanh()),
            Transition::Arctan => 0.5 + y.atan() / PI,
            Transition::SmoothStep => BumpKind::Exp.step(0.5 * (1.0 - y)).0,
            Transition::Convolution(m) => m.kernel_cumulative(y),
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            Transition::Tanh => {
                let c = y.cosh();
                0.5 / (c * c)
            }
            Transition::Arctan => 1.0 / (PI * (1.0 + y * y)),
            Transition::SmoothStep => -0.5 * BumpKind::Exp.step(0.5 * (1.0 - y)).1,
            Transition::Convolution(m) => m.kernel(y),
        }
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        match self {
            Transition::Tanh => {
                let c = y.cosh();
                -y.tanh() / (c * c)
            }
            Transition::Arctan => -2.0 * y / (PI * (1.0 + y * y).powi(2)),
            Transition::SmoothStep => 0.25 * BumpKind::Exp.step(0.5 * (1.0 - y)).2,
            Transition::Convolution(m) => {
                let h = 1e-4;
                (m.kernel(y + h) - m.kernel(y - h)) / (2.0 * h)
            }
        }
    }
}

/// `H_ε(x) = h(x/ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedHeaviside {
    pub transition: Transition,
}

impl SmoothedHeaviside {
    pub fn new(transition: Transition) -> Self {
        Self { transition }
    }

    pub fn value(&self, eps: f64, x: f64) -> f64 {
        self.transition.value(x / eps)
    }

    pub fn derivative(&self, eps: f64, x: f64) -> f64 {
        self.transition.derivative(x / eps) / eps
    }

    pub fn representative(&self, grid: UniformGrid) -> Representative {
        let (h0, h1, h2) = (self.transition.clone(), self.transition.clone(), self.transition.clone());
        Representative::new(format!("H[{}]", self.transition.label()), grid, move |e, x| h0.value(x / e))
            .with_derivatives(move |e, x| h1.derivative(x / e) / e, move |e, x| h2.second_derivative(x / e) / (e * e))
            .with_focus(vec![0.0])
    }

    /// `H_ε'` as a representative.
    pub fn derivative_representative(&self, grid: UniformGrid) -> Representative {
        let h = self.transition.clone();
        Representative::new(format!("H'[{}]", self.transition.label()), grid, move |e, x| h.derivative(x / e) / e)
            .with_focus(vec![0.0])
    }
}

/// `∫(H_ε² − H_ε)·H_ε' dx`.
pub fn heaviside_jump_integral(h: &Transition, eps: f64) -> Result<f64> {
    heaviside_power_pairing(2, 1, h, eps)
}

/// `∫(H_ε^{n1} − H_ε^{n2})·H_ε' dx` by adaptive quadrature on `[-10ε, 10ε]`
/// with the tails integrated through the antiderivative in `H`.
pub fn heaviside_power_pairing(n1: u32, n2: u32, h: &Transition, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if n1 == 0 || n2 == 0 {
        return Err(invalid("powers must be at least 1"));
    }
    let window = 10.0 * eps;
    let (lo, hi) = (h.value(-10.0), h.value(10.0));
    if !(lo < 0.25 && hi > 0.75) {
        return Err(Error::Quadrature(format!(
            "window ±10ε misses the transition of {} (h(-10) = {lo}, h(10) = {hi})",
            h.label()
        )));
    }
    let anti = |v: f64| v.powi(n1 as i32 + 1) / (n1 as f64 + 1.0) - v.powi(n2 as i32 + 1) / (n2 as f64 + 1.0);
    let left_tail = anti(lo) - anti(0.0);
    let right_tail = anti(1.0) - anti(hi);
    let integrand = |x: f64| {
        let v = h.value(x / eps);
        (v.powi(n1 as i32) - v.powi(n2 as i32)) * h.derivative(x / eps) / eps
    };
    let breaks = [-window, -eps, 0.0, eps, window];
    let core = adaptive_gk(integrand, &breaks, 1e-13, 10_000)?;
    Ok(left_tail + core.value + right_tail)
}

/// Test function `ψ` with compact (or effectively compact) support.
#[derive(Clone)]
pub struct TestFunction {
    pub label: String,
    pub support: (f64, f64),
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({}, {:?})", self.label, self.support)
    }
}

impl TestFunction {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(label: &str, support: (f64, f64), f: F) -> Self {
        Self { label: label.into(), support, f: Arc::new(f) }
    }

    /// Standard bump `exp(-1/(1 - ((x - c)/r)²))` on `(c - r, c + r)`.
    pub fn bump(center: f64, radius: f64) -> Self {
        Self::new(&format!("bump({center},{radius})"), (center - radius, center + radius), move |x| {
            let t = (x - center) / radius;
            if t.abs() >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - t * t)).exp()
            }
        })
    }

    /// Constant 1 on a window, standing in for `ψ ≡ 1`.
    pub fn unit(lo: f64, hi: f64) -> Self {
        Self::new("one", (lo, hi), |_| 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InfinitesimalReport {
    pub verdict: bool,
    pub slopes: Vec<f64>,
    pub pairings: Vec<Vec<f64>>,
    pub threshold: f64,
}

pub const DEFAULT_SLOPE_THRESHOLD: f64 = 0.8;

/// Samples the decay of `⟨r(ε), ψ⟩` over an ε-ladder.
pub fn is_infinitesimal(
    r: &Representative,
    tests: &[TestFunction],
    ladder: &[f64],
    threshold: f64,
) -> Result<InfinitesimalReport> {
    if ladder.len() < 4 {
        return Err(invalid(format!("need at least 4 ladder points, got {}", ladder.len())));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) || ladder.iter().any(|&e| !(e > 0.0)) {
        return Err(invalid("ladder must be positive and strictly decreasing"));
    }
    let mut slopes = Vec::with_capacity(tests.len());
    let mut pairings = Vec::with_capacity(tests.len());
    let mut verdict = true;
    for t in tests {
        let p: Vec<f64> = ladder.iter().map(|&e| r.pair(e, t)).collect::<Result<_>>()?;
        let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let slope = if scale == 0.0 {
            f64::INFINITY
        } else {
            let pts: Vec<(f64, f64)> = ladder
                .iter()
                .zip(&p)
                .map(|(&e, &v)| (e.ln(), v.abs().max(1e-300).ln()))
                .collect();
            fit_slope(&pts)
        };
        let decaying = scale == 0.0 || (slope >= threshold && p.last().unwrap().abs() < p[0].abs());
        verdict &= decaying;
        slopes.push(slope);
        pairings.push(p);
    }
    Ok(InfinitesimalReport { verdict, slopes, pairings, threshold })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_shape() {
        for m in Mollifier::stock() {
            assert_eq!(m.eval(0.0), 1.0);
            assert_eq!(m.eval(m.a), 1.0);
            assert_eq!(m.eval(m.b), 0.0);
            assert_eq!(m.eval(-0.7 * m.b), m.eval(0.7 * m.b));
            let mut prev = 1.0;
            for i in 0..=200 {
                let u = m.a + (m.b - m.a) * i as f64 / 200.0;
                let v = m.eval(u);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        for m in Mollifier::stock() {
            for &u in &[0.55, 0.7, 0.8, -0.75, 0.95] {
                let h = 1e-5;
                let (_, d1, d2) = m.eval_with_derivatives(u);
                let fd1 = (m.eval(u + h) - m.eval(u - h)) / (2.0 * h);
                let fd2 = (m.eval(u + h) - 2.0 * m.eval(u) + m.eval(u - h)) / (h * h);
                assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "{m} {u}: {d1} {fd1}");
                assert!((d2 - fd2).abs() < 1e-3 * (1.0 + d2.abs()), "{m} {u}: {d2} {fd2}");
            }
        }
    }

    #[test]
    fn kernel_has_unit_mass_and_cumulative_limits() {
        let m = Mollifier::standard();
        // trapezoid sum of a bandlimited function is exact
        let h = 1.0 / m.b;
        let mass: f64 = h * (m.kernel(0.0) + 2.0 * (1..2000).map(|i| m.kernel(i as f64 * h)).sum::<f64>());
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
        assert!(m.kernel_cumulative(-300.0).abs() < 1e-8);
        assert!((m.kernel_cumulative(300.0) - 1.0).abs() < 1e-8);
        assert_eq!(m.kernel_cumulative(0.0), 0.5);
    }

    #[test]
    fn transitions_are_consistent() {
        for t in Transition::stock().into_iter().chain([Transition::Convolution(Mollifier::standard())]) {
            for &y in &[-2.0, -0.3, 0.0, 0.4, 1.7] {
                let h = 1e-5;
                let fd = (t.value(y + h) - t.value(y - h)) / (2.0 * h);
                assert!((t.derivative(y) - fd).abs() < 1e-6, "{} {y}", t.label());
            }
            assert!((t.value(0.0) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn power_pairing_closed_form() {
        for n1 in 1..=6u32 {
            for n2 in 1..=6u32 {
                let v = heaviside_power_pairing(n1, n2, &Transition::Tanh, 0.3).unwrap();
                let exact = 1.0 / (n1 as f64 + 1.0) - 1.0 / (n2 as f64 + 1.0);
                assert!((v - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn resolution_guard() {
        let g = UniformGrid::spanning(-1.0, 1.0, 11).unwrap();
        let err = embed_distribution(Distribution::Delta, &Mollifier::standard(), 0.01, g);
        assert!(matches!(err, Err(Error::Resolution { .. })));
        assert!(embed_distribution(Distribution::Delta, &Mollifier::standard(), -1.0, g).is_err());
    }
}
