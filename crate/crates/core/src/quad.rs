//! One-dimensional quadrature rules shared by the scalar and operator layers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule with `panels` equal panels.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Kronrod 15-point extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration over consecutive
/// breakpoints. The worst segment is bisected until the summed error estimate
/// drops below `abs_tol` or `max_segments` is reached.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(Error::Quadrature("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if w[1] < w[0] {
            return Err(Error::Quadrature("breakpoints must be non-decreasing".into()));
        }
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        heap.push(Segment { a: w[0], b: w[1], value, error });
    }
    loop {
        let total_err: f64 = heap.iter().map(|s| s.error).sum();
        if total_err <= abs_tol || heap.len() >= max_segments {
            let value = heap.iter().map(|s| s.value).sum();
            if total_err > abs_tol {
                return Err(Error::BudgetExceeded { partial: value, error: total_err, tol: abs_tol });
            }
            return Ok(QuadResult { value, error: total_err, evaluations });
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in f64
            let value = heap.iter().map(|s| s.value).sum::<f64>() + worst.value;
            return Ok(QuadResult { value, error: total_err, evaluations });
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&mut f, a, b);
            evaluations += 15;
            heap.push(Segment { a, b, value, error });
        }
    }
}

/// Composite Gauss rule on `[a, b]` that also yields running integrals at
/// every node, used for nested time-ordered integrals.
///
/// For panel `p` with nodes `s_i`, `cumulative[i][j] = ∫_{start_p}^{s_i} l_j(s) ds`
/// where `l_j` are the Lagrange polynomials of the panel nodes.
#[derive(Debug, Clone)]
pub struct CumulativeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    panels: usize,
    per_panel: usize,
    cumulative: Vec<Vec<f64>>,
    panel_width: f64,
}

impl CumulativeRule {
    pub fn new(a: f64, b: f64, panels: usize, per_panel: usize) -> Self {
        let gl = GaussLegendre::new(per_panel);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * per_panel);
        let mut weights = Vec::with_capacity(panels * per_panel);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in gl.mapped(lo, lo + h) {
                nodes.push(x);
                weights.push(w);
            }
        }
        // reference panel [0, 1]
        let refn: Vec<f64> = gl.nodes().iter().map(|x| 0.5 * (x + 1.0)).collect();
        let fine = GaussLegendre::new(per_panel + 2);
        let cumulative = refn
            .iter()
            .map(|&si| {
                (0..per_panel)
                    .map(|j| {
                        fine.integrate(0.0, si, |s| {
                            refn.iter()
                                .enumerate()
                                .filter(|&(m, _)| m != j)
                                .map(|(_, &xm)| (s - xm) / (refn[j] - xm))
                                .product::<f64>()
                        })
                    })
                    .collect()
            })
            .collect();
        Self { nodes, weights, panels, per_panel, cumulative, panel_width: h }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn per_panel(&self) -> usize {
        self.per_panel
    }

    /// Weight of node `j` (same panel) in the running integral up to node `i`.
    pub fn running_weight(&self, i: usize, j: usize) -> f64 {
        self.panel_width * self.cumulative[i][j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(5);
        // degree 9 is exact for 5 nodes
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-11, "{v} vs {exact}");
        let s: f64 = gl.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_is_accurate() {
        let gl = GaussLegendre::new(64);
        let v = gl.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kink() {
        let r = adaptive_gk(|x: f64| x.abs(), &[-1.0, 0.3, 2.0], 1e-12, 1000).unwrap();
        assert!((r.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reports_budget() {
        let r = adaptive_gk(|x: f64| (1.0 / x).sin(), &[1e-6, 1.0], 1e-14, 4);
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn cumulative_rule_integrates_running_polynomials() {
        let rule = CumulativeRule::new(0.0, 2.0, 2, 6);
        // running integral of f(s) = s^3 to each node equals s^4 / 4
        let f: Vec<f64> = rule.nodes.iter().map(|s| s.powi(3)).collect();
        let pp = rule.per_panel();
        let mut carry = 0.0;
        for p in 0..rule.panels() {
            for i in 0..pp {
                let idx = p * pp + i;
                let run: f64 = (0..pp).map(|j| rule.running_weight(i, j) * f[p * pp + j]).sum();
                let s = rule.nodes[idx];
                assert!((carry + run - s.powi(4) / 4.0).abs() < 1e-12);
            }
            carry += (0..pp).map(|j| rule.weights[p * pp + j] * f[p * pp + j]).sum::<f64>();
        }
        assert!((carry - 4.0).abs() < 1e-12);
    }
}
