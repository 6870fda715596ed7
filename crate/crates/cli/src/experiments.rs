//! Experiment drivers. Each one returns its artifacts in memory; nothing
//! touches the disk here.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use fockfield::averaging::{log_ladder, p_rescaling_study};
use fockfield::dynamics::{
    assemble_hamiltonian, dyson_series, field_equation_check, heisenberg_derivative_check, hille_yoshida_approx,
    residual_curve, s_matrix, s_matrix_ode, theorem2_check, theorem3_generator, zero_point_energy,
    HamiltonianBundle, ModelParams,
};
use fockfield::field::{ccr_check, RegularizedField};
use fockfield::fock::{self, annihilate, create, FieldOperator, FockBasis, ModeGrid};
use fockfield::gfcalc::{
    combine, heaviside_jump_integral, heaviside_power_pairing, is_infinitesimal, product, SmoothedHeaviside,
    TestFunction, Transition, UniformGrid, DEFAULT_SLOPE_THRESHOLD,
};
use fockfield::linalg::{self, HermitianSpectrum};
use fockfield::scattering::{amplitude, amplitude_sweep, associate_amplitude, records_to_csv};
use fockfield::{Complex64, Error};

use crate::config::{
    self, AverageSpec, CcrCheck, CcrSpec, DysonSpec, EvolveCheck, EvolveSpec, Experiment, HeavisideSpec,
    SmatrixSpec, SweepSpec,
};

const AMPLITUDE_SLACK: f64 = 1e-12;

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    /// Pretty JSON; `serde_json::Value` objects keep their keys sorted.
    fn json(name: &str, value: Value) -> Self {
        let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
        text.push('\n');
        Self { name: name.into(), bytes: text.into_bytes() }
    }
}

/// One row of a defect table.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    /// `<=`, `>=`, `in`, `is` or `info` (reported only).
    pub op: &'static str,
    pub limit: Value,
    pub pass: bool,
}

impl Check {
    fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value: Some(value), op: "<=", limit: json!(limit), pass: value <= limit }
    }

    fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let pass = (lo..=hi).contains(&value);
        Self { name: name.into(), value: Some(value), op: "in", limit: json!([lo, hi]), pass }
    }

    fn is(name: impl Into<String>, value: bool, expected: bool) -> Self {
        let v = if value { 1.0 } else { 0.0 };
        Self { name: name.into(), value: Some(v), op: "is", limit: json!(expected), pass: value == expected }
    }

    fn info(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value: Some(value), op: "info", limit: Value::Null, pass: true }
    }

    fn missing(name: impl Into<String>, why: &str) -> Self {
        Self { name: name.into(), value: None, op: "is", limit: json!(why), pass: false }
    }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub violations: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    /// Bad input detected before or during the run; nothing is written.
    Invalid(String),
    /// The computation hit a size or accuracy budget; partial artifacts are kept.
    Budget { message: String, partial: Vec<Artifact>, violations: Vec<String> },
    Failed(String),
}

impl std::fmt::Debug for Artifact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Artifact({}, {} bytes)", self.name, self.bytes.len())
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_budget() {
            return RunError::Budget { message: e.to_string(), partial: Vec::new(), violations: Vec::new() };
        }
        match e {
            Error::InvalidArgument(_)
            | Error::Resolution { .. }
            | Error::OffGrid(_)
            | Error::NotNormalized(_)
            | Error::DimensionMismatch { .. }
            | Error::Unbounded => RunError::Invalid(e.to_string()),
            other => RunError::Failed(other.to_string()),
        }
    }
}

impl From<String> for RunError {
    fn from(e: String) -> Self {
        RunError::Invalid(e)
    }
}

fn violations(checks: &[Check]) -> Vec<String> {
    checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
}

fn finish(name: &str, checks: Vec<Check>, mut data: Value) -> Outcome {
    let v = violations(&checks);
    data["checks"] = serde_json::to_value(&checks).expect("checks serialize");
    Outcome { artifacts: vec![Artifact::json(name, data)], violations: v }
}

pub fn run(exp: &Experiment, seed: u64) -> Result<Outcome, RunError> {
    match exp {
        Experiment::Average(s) => average(s),
        Experiment::Heaviside(s) => heaviside(s),
        Experiment::Ccr(s) => ccr(s),
        Experiment::Evolve(s) => evolve(s),
        Experiment::Smatrix(s) => smatrix(s),
        Experiment::Sweep(s) => sweep(s, seed),
        Experiment::Dyson(s) => dyson(s),
    }
}

fn average(s: &AverageSpec) -> Result<Outcome, RunError> {
    let l = s.ladder;
    if !(l.hi > l.lo && l.lo > 0.0) || l.per_decade == 0 {
        return Err(RunError::Invalid("ladder needs hi > lo > 0 and per_decade >= 1".into()));
    }
    let ladder = log_ladder(l.hi, l.lo, l.per_decade);
    let study = p_rescaling_study(s.profile, &s.powers, &ladder, s.tol)?;
    let mut checks = Vec::new();
    for (p, r) in study.p_values.iter().zip(&study.reports) {
        if let Some(target) = s.expect_limit {
            let name = format!("limit p={p}");
            checks.push(match r.limit {
                Some(v) => Check::within(name, v, target - s.limit_tol, target + s.limit_tol),
                None => Check::missing(name, "no limit reported"),
            });
        }
        if let Some([lo, hi]) = s.expect_window {
            checks.push(Check::within(format!("liminf p={p}"), r.liminf, lo - s.window_tol, lo + s.window_tol));
            checks.push(Check::within(format!("limsup p={p}"), r.limsup, hi - s.window_tol, hi + s.window_tol));
        }
    }
    let data = json!({ "profile": s.profile, "tol": s.tol, "study": study });
    Ok(finish("average.json", checks, data))
}

fn heaviside(s: &HeavisideSpec) -> Result<Outcome, RunError> {
    let transitions: Vec<Transition> = s.transitions.iter().map(|l| config::transition(l)).collect::<Result<_, _>>()?;
    let mut jumps = Vec::new();
    let mut pairings = Vec::new();
    let mut worst_jump: f64 = 0.0;
    let mut worst_pair: f64 = 0.0;
    for t in &transitions {
        for &eps in &s.eps {
            let v = heaviside_jump_integral(t, eps)?;
            worst_jump = worst_jump.max((v + 1.0 / 6.0).abs());
            jumps.push(json!({ "transition": t.label(), "eps": eps, "value": v }));
            for &[n1, n2] in &s.pairings {
                let v = heaviside_power_pairing(n1, n2, t, eps)?;
                let expected = 1.0 / (n1 as f64 + 1.0) - 1.0 / (n2 as f64 + 1.0);
                worst_pair = worst_pair.max((v - expected).abs());
                pairings.push(json!({ "transition": t.label(), "eps": eps, "n1": n1, "n2": n2, "value": v, "expected": expected }));
            }
        }
    }
    let mut checks = vec![Check::le("jump integral |I + 1/6|", worst_jump, s.tol)];
    if !s.pairings.is_empty() {
        checks.push(Check::le("power pairing deviation", worst_pair, s.tol));
    }
    let mut data = json!({ "jump_integral": jumps, "pairings": pairings });
    if s.infinitesimal {
        let grid = UniformGrid::spanning(-2.0, 2.0, 401)?;
        let heav = SmoothedHeaviside::new(Transition::Tanh);
        let h = heav.representative(grid);
        let gap = combine(1.0, &product(&h, &h)?, -1.0, &h)?;
        let ladder = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
        let tests = [TestFunction::bump(0.1, 1.0), TestFunction::bump(-0.3, 0.8)];
        let inf = is_infinitesimal(&gap, &tests, &ladder, DEFAULT_SLOPE_THRESHOLD)?;
        let jump = product(&gap, &heav.derivative_representative(grid))?;
        let whole = is_infinitesimal(&jump, &[TestFunction::unit(-1.0, 1.0)], &ladder, DEFAULT_SLOPE_THRESHOLD)?;
        checks.push(Check::is("H^2 - H infinitesimal", inf.verdict, true));
        checks.push(Check::is("(H^2 - H)H' infinitesimal", whole.verdict, false));
        data["infinitesimal"] = json!({ "eps_ladder": ladder, "h2_minus_h": inf, "jump": whole });
    }
    Ok(finish("heaviside.json", checks, data))
}

fn ladder_ccr_defect(basis: &Arc<FockBasis>) -> Result<f64, Error> {
    let m = basis.grid().mode_count();
    let w = basis.grid().weight();
    let safe = basis.n_max().saturating_sub(2);
    let psi: Vec<Complex64> = (0..m).map(|j| Complex64::new(0.3 + 0.1 * j as f64, 0.2 - 0.05 * j as f64)).collect();
    let chi: Vec<Complex64> = (0..m).map(|j| Complex64::new((j as f64).cos(), (1.0 + j as f64).sin())).collect();
    let am = annihilate(basis, &psi)?;
    let ap = create(basis, &chi)?;
    let c: Complex64 = psi.iter().zip(&chi).map(|(a, b)| a * b).sum::<Complex64>() * w;
    let d1 = am.commutator(&ap)?.deviation_from_scalar(c, safe);
    let d2 = create(basis, &psi)?.commutator(&ap)?.max_abs_on_sector(safe);
    let d3 = am.commutator(&annihilate(basis, &chi)?)?.max_abs_on_sector(safe);
    Ok(d1.max(d2).max(d3))
}

fn ccr(s: &CcrSpec) -> Result<Outcome, RunError> {
    let m = config::mollifier(&s.mollifier)?;
    let on = |c: CcrCheck| s.checks.contains(&c);
    let mut worst = [0.0f64; 4];
    let mut rows = Vec::new();
    for &j in &s.j_values {
        for &n_max in &s.n_max_values {
            let basis = FockBasis::new(ModeGrid::line(s.length, j, s.mass)?, n_max);
            let rf = RegularizedField::new(&basis, &m, s.eps);
            let mut row = json!({ "j_max": j, "n_max": n_max, "dim": basis.len() });
            if on(CcrCheck::Ladder) {
                let d = ladder_ccr_defect(&basis)?;
                worst[0] = worst[0].max(d);
                row["ladder"] = json!(d);
            }
            if on(CcrCheck::Field) {
                let mut d: f64 = 0.0;
                for &[x, x2] in &s.points {
                    for &t in &s.times {
                        d = d.max(ccr_check(&rf, &[x], &[x2], t)?.max_defect());
                    }
                }
                worst[1] = worst[1].max(d);
                row["field"] = json!(d);
            }
            if on(CcrCheck::Translation) || on(CcrCheck::KleinGordon) {
                let (mut tr, mut kg) = (0.0f64, 0.0f64);
                for &[x, _] in &s.points {
                    for &t in &s.times {
                        if on(CcrCheck::Translation) {
                            for &theta in &s.thetas {
                                let e = fock::exp_energy(&basis, theta);
                                let e_inv = fock::exp_energy(&basis, -theta);
                                for (lhs, rhs) in [
                                    (rf.field(&[x], t)?, rf.field(&[x], t + theta)?),
                                    (rf.momentum(&[x], t)?, rf.momentum(&[x], t + theta)?),
                                ] {
                                    let conj = e.compose(&lhs)?.compose(&e_inv)?;
                                    tr = tr.max(conj.sub(&rhs)?.max_abs());
                                }
                            }
                        }
                        if on(CcrCheck::KleinGordon) {
                            let phi = rf.field(&[x], t)?;
                            let lhs = rf.second_time_derivative(&[x], t)?.sub(&rf.laplacian(&[x], t)?)?;
                            let mass2 = Complex64::new(s.mass * s.mass, 0.0);
                            kg = kg.max(lhs.add(&phi.scale(mass2))?.max_abs());
                        }
                    }
                }
                worst[2] = worst[2].max(tr);
                worst[3] = worst[3].max(kg);
                if on(CcrCheck::Translation) {
                    row["translation"] = json!(tr);
                }
                if on(CcrCheck::KleinGordon) {
                    row["klein_gordon"] = json!(kg);
                }
            }
            rows.push(row);
        }
    }
    let names = ["ladder commutators", "[Phi0, Pi0] - i rho Id", "translation", "Klein-Gordon"];
    let kinds = [CcrCheck::Ladder, CcrCheck::Field, CcrCheck::Translation, CcrCheck::KleinGordon];
    let checks = kinds
        .iter()
        .zip(names)
        .zip(worst)
        .filter(|((k, _), _)| on(**k))
        .map(|((_, n), w)| Check::le(n, w, s.tol))
        .collect();
    let data = json!({ "mollifier": s.mollifier, "eps": s.eps, "rows": rows });
    Ok(finish("ccr.json", checks, data))
}

fn scalar(b: &HamiltonianBundle, z: f64) -> FieldOperator {
    FieldOperator::identity(&b.basis).scale(Complex64::new(z, 0.0))
}

fn evolve(s: &EvolveSpec) -> Result<Outcome, RunError> {
    let base = s.model.params()?;
    let couplings = s.couplings.clone().unwrap_or_else(|| vec![base.coupling]);
    let dim = base.grid.dim;
    let x = vec![s.x; dim];
    let mut checks = Vec::new();
    let mut details = Vec::new();
    let first = assemble_hamiltonian(&base)?;
    for &g in &couplings {
        let b = first.with_coupling(g)?;
        let p = &b.params;
        let sharp = p.is_sharp();
        let tag = |what: &str| format!("{what} g={g}");
        let mut d = json!({ "coupling": g, "e_zp": b.e_zp, "sharp": sharp, "dim": b.basis.len() });
        for &c in &s.checks {
            match c {
                EvolveCheck::Hamiltonian => {
                    let level = p.n_max - 1;
                    let free = b.p0.add(&scalar(&b, b.e_zp))?;
                    let defect = b.h_quad.sub(&free)?.max_abs_on_sector(level);
                    let mode_sum = zero_point_energy(&p.grid, &p.mollifier, p.eps);
                    checks.push(if sharp { Check::le(tag("H_quad - P0 - E_zp"), defect, 1e-10) } else { Check::info(tag("H_quad - P0 - E_zp"), defect) });
                    checks.push(Check::le(tag("E_zp - mode sum"), (b.e_zp - mode_sum).abs(), 1e-12));
                    d["mode_sum"] = json!(mode_sum);
                }
                EvolveCheck::FieldPipelines => {
                    checks.push(Check::le(tag("field pipelines defect"), theorem2_check(&b, &x, s.t)?, 1e-9));
                }
                EvolveCheck::Generator => {
                    let (_, rep) = theorem3_generator(&b, s.t)?;
                    checks.push(if rep.sharp {
                        Check::le(tag("generator decomposition"), rep.defect, 1e-9)
                    } else {
                        Check::le(tag("generator defect - closed form"), (rep.defect - rep.oracle).abs(), 1e-9)
                    });
                    d["generator"] = serde_json::to_value(&rep).expect("report serializes");
                }
                EvolveCheck::Ode => {
                    let r = s_matrix_ode(&b, s.t, s.dt)?;
                    let agree = r.comparison_defect.unwrap_or(f64::NAN);
                    checks.push(Check::le(tag("ODE vs direct"), agree, 1e-6));
                    let worst = r.unitarity_defects.iter().copied().fold(0.0, f64::max);
                    checks.push(Check::info(tag("ODE unitarity defect"), worst));
                }
                EvolveCheck::OdeOrder => {
                    let strong = b.with_coupling(s.order_coupling)?;
                    let [h1, h2] = s.order_dt;
                    let e1 = s_matrix_ode(&strong, s.t, h1)?.comparison_defect.unwrap_or(f64::NAN);
                    let e2 = s_matrix_ode(&strong, s.t, h2)?.comparison_defect.unwrap_or(f64::NAN);
                    checks.push(Check::within(tag("ODE step-halving ratio"), e1 / e2, 12.0, 20.0));
                    d["ode_order"] = json!({ "coupling": s.order_coupling, "dt": s.order_dt, "errors": [e1, e2] });
                }
                EvolveCheck::FieldEquation => {
                    let (mut smeared, mut residual) = (0.0f64, 0.0f64);
                    for &i in &s.grid_indices {
                        for &t in &s.times {
                            let r = field_equation_check(&b, &p.grid_point(&vec![i; dim]), t)?;
                            smeared = smeared.max(r.smeared_defect);
                            residual = residual.max(r.unsmeared_residual);
                        }
                    }
                    checks.push(if sharp { Check::le(tag("smeared field equations"), smeared, 1e-7) } else { Check::info(tag("smeared field equations"), smeared) });
                    checks.push(Check::info(tag("unsmeared residual"), residual));
                }
                EvolveCheck::ResidualCurve => {
                    let mut template: ModelParams = p.clone();
                    template.quad_points = None;
                    let ladder: Vec<(f64, usize)> = s.residual_levels.iter().map(|&j| (s.residual_eps0 / j as f64, j)).collect();
                    let curve = residual_curve(&template, &ladder, &vec![s.residual_x; dim], s.residual_t)?;
                    for pt in &curve {
                        checks.push(Check::info(tag(&format!("residual J={} eps={:.4}", pt.j_max, pt.eps)), pt.unsmeared_residual));
                    }
                    d["residual_curve"] = serde_json::to_value(&curve).expect("curve serializes");
                }
                EvolveCheck::HilleYoshida => {
                    let exact = HermitianSpectrum::new(b.h0.matrix())?.unitary(-s.hy_theta);
                    let mut errs = Vec::new();
                    for &n in &s.hy_n {
                        let a = hille_yoshida_approx(&b.h0, s.hy_theta, n)?;
                        let e = linalg::max_abs(&(a.matrix() - &exact).view());
                        checks.push(Check::info(tag(&format!("Hille-Yoshida n={n}")), e));
                        errs.push(e);
                    }
                    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
                    checks.push(Check::is(tag("Hille-Yoshida strictly decreasing"), decreasing, true));
                }
                EvolveCheck::Heisenberg => {
                    let r = heisenberg_derivative_check(&b, &x, s.t, s.heisenberg_h)?;
                    checks.push(Check::within(tag("Heisenberg quotient halving ratio"), r.ratio, 3.5, 4.5));
                }
            }
        }
        details.push(d);
    }
    let data = json!({ "model": base, "t": s.t, "couplings": details });
    Ok(finish("evolve.json", checks, data))
}

fn smatrix(s: &SmatrixSpec) -> Result<Outcome, RunError> {
    let b = assemble_hamiltonian(&s.model.params()?)?;
    let states = s.states.iter().map(|r| r.build(&b.basis)).collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, f1) in states.iter().enumerate() {
        for (j, f2) in states.iter().enumerate() {
            let a = amplitude(&b, f1, f2, s.t)?;
            worst = worst.max(a.value);
            records.push(json!({ "i": i, "j": j, "value": a.value, "phase_re": a.phase_re, "phase_im": a.phase_im }));
        }
    }
    let unitarity = linalg::unitarity_defect(s_matrix(&b, s.t)?.matrix());
    let checks = vec![
        Check::le("max amplitude", worst, 1.0 + AMPLITUDE_SLACK),
        Check::le("S unitarity defect", unitarity, 1e-10),
    ];
    let data = json!({ "t": s.t, "states": s.states, "amplitudes": records, "e_zp": b.e_zp });
    Ok(finish("smatrix.json", checks, data))
}

fn sweep(s: &SweepSpec, seed: u64) -> Result<Outcome, RunError> {
    let mollifiers = s.mollifiers.iter().map(|l| config::mollifier(l)).collect::<Result<Vec<_>, _>>()?;
    if mollifiers.is_empty() {
        return Err(RunError::Invalid("at least one mollifier is required".into()));
    }
    let ladder = s.ladder.points()?;
    let template = s.template(seed);
    let res = amplitude_sweep(&template, &ladder, &s.f1, &s.f2, s.t, &mollifiers)?;
    let recs = &res.records;
    let mut checks = Vec::new();
    let worst = recs.iter().map(|r| r.value).fold(0.0, f64::max);
    checks.push(Check::le("max amplitude", worst, 1.0 + AMPLITUDE_SLACK));
    if let Some(tol) = s.constant_tol {
        let lo = recs.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
        let spread = if recs.is_empty() { 0.0 } else { worst - lo };
        checks.push(Check::le("sweep spread", spread, tol));
    }
    if let Some(tol) = s.mollifier_tol {
        let mut spread: f64 = 0.0;
        for r in recs {
            let head = recs.iter().find(|q| q.ladder_index == r.ladder_index).expect("own level");
            spread = spread.max((r.value - head.value).abs());
        }
        checks.push(Check::le("mollifier spread", spread, tol));
    }
    let mut data = json!({
        "complete": res.complete,
        "failure": res.failure,
        "ladder": ladder,
        "ladder_model": "co-scaled: eps_n = eps0*J0/J_n, J_n = round(J0*ratio^n); a discrete stand-in for eps -> 0",
        "template": template,
        "t": s.t,
        "records": recs.len(),
    });
    if let Some(mode) = s.association {
        match associate_amplitude(recs, mode) {
            Ok(a) => data["association"] = serde_json::to_value(&a).expect("association serializes"),
            Err(e) => data["association_error"] = json!(e.to_string()),
        }
    }
    let v = violations(&checks);
    data["checks"] = serde_json::to_value(&checks).expect("checks serialize");
    let artifacts = vec![
        Artifact { name: "sweep.csv".into(), bytes: records_to_csv(recs).into_bytes() },
        Artifact::json("sweep.json", data),
    ];
    if !res.complete {
        let message = res.failure.unwrap_or_else(|| "sweep stopped early".into());
        return Err(RunError::Budget { message, partial: artifacts, violations: v });
    }
    Ok(Outcome { artifacts, violations: v })
}

fn dyson(s: &DysonSpec) -> Result<Outcome, RunError> {
    if s.couplings.is_empty() {
        return Err(RunError::Invalid("at least one coupling is required".into()));
    }
    let base = assemble_hamiltonian(&s.model.params()?)?;
    let mut errors = Vec::new();
    for &g in &s.couplings {
        let b = base.with_coupling(g)?;
        let span = s.t - b.params.tau;
        let exact = s_matrix(&b, s.t)?.scale(Complex64::from_polar(1.0, span * b.e_zp));
        let approx = dyson_series(&b, s.t, s.order)?;
        errors.push(exact.sub(&approx)?.max_abs());
    }
    let mut checks: Vec<Check> =
        s.couplings.iter().zip(&errors).map(|(g, e)| Check::info(format!("order-{} error g={g}", s.order), *e)).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    for (i, r) in ratios.iter().enumerate() {
        let name = format!("error ratio g={} / g={}", s.couplings[i], s.couplings[i + 1]);
        checks.push(match s.expect_ratio {
            Some([lo, hi]) => Check::within(name, *r, lo, hi),
            None => Check::info(name, *r),
        });
    }
    let data = json!({ "order": s.order, "t": s.t, "couplings": s.couplings, "errors": errors, "ratios": ratios });
    Ok(finish("dyson.json", checks, data))
}
