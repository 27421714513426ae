//! Acceptance suite: AC-1 .. AC-10 as library calls returning one row each.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::appoisson::{
    bohr_mean_sampled, bracket_series, n_direct, n_series, psf_lattice_verify, psf_modelset_verify, APSeries,
    APTerm, Domain, Gaussian2D, PsfFunction, SeriesPolicy,
};
use crate::cutproject::{CutProjectScheme, PlainLattice};
use crate::duality::{
    bump_window, janssen_apply, janssen_cutoff_sensitivity, painless_dual, painless_lattice, painless_nodes,
    wexler_raz_residuals, JanssenReference,
};
use crate::error::Result;
use crate::gabor_op::{covariance_residual, frame_apply, frame_expand, GaborSystem, NodeSource, TruncationPolicy, WeightMode};
use crate::internal_windows::{psi_n_hat, wiener_tail, Bump, BumpSpec, DecayKernel};
use crate::modelset::{density_estimate, enumerate_model_set, ModelSetSpec, WindowInterval};
use crate::tf_core::{ambiguity_analytic, moyal_check, AnalyticWindow, Grid1, PhasePoint, Signal};

/// Seed for the random evaluation points of AC-3.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcceptanceRow {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub elapsed_s: f64,
    pub metrics: Value,
    pub error: Option<String>,
}

impl AcceptanceRow {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => format!("{} {status} {} ({:.2}s) error: {e}", self.id, self.title, self.elapsed_s),
            None => format!("{} {status} {} ({:.2}s) {}", self.id, self.title, self.elapsed_s, self.metrics),
        }
    }
}

type Check = fn(u64) -> Result<(bool, Value)>;

const CHECKS: [(&str, &str, Check); 10] = [
    ("AC-1", "lattice Poisson summation", ac1),
    ("AC-2", "model-set Poisson summation", ac2),
    ("AC-3", "weighted FIGA series", ac3),
    ("AC-4", "Bohr coefficient recovery", ac4),
    ("AC-5", "lattice Janssen representation", ac5),
    ("AC-6", "Wexler-Raz on the painless fixture", ac6),
    ("AC-7", "model-set Janssen representation", ac7),
    ("AC-8", "model-set density", ac8),
    ("AC-9", "kernel facts", ac9),
    ("AC-10", "operator properties", ac10),
];

pub fn acceptance_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs the selected criteria (all when `only` is empty) in order.
pub fn run_acceptance(only: &[String], seed: u64) -> Vec<AcceptanceRow> {
    CHECKS
        .iter()
        .filter(|(id, _, _)| only.is_empty() || only.iter().any(|o| o.eq_ignore_ascii_case(id)))
        .map(|(id, title, check)| {
            let t0 = Instant::now();
            let out = check(seed);
            let elapsed_s = t0.elapsed().as_secs_f64();
            let (passed, metrics, error) = match out {
                Ok((p, m)) => (p, m, None),
                Err(e) => (false, Value::Null, Some(e.to_string())),
            };
            let limit = runtime_limit(id);
            let in_time = limit.is_none_or(|l| elapsed_s < l);
            AcceptanceRow {
                id: id.to_string(),
                title: title.to_string(),
                passed: passed && in_time,
                elapsed_s,
                metrics: with_limit(metrics, limit, in_time),
                error,
            }
        })
        .collect()
}

fn runtime_limit(id: &str) -> Option<f64> {
    match id {
        "AC-1" => Some(1.0),
        "AC-2" => Some(10.0),
        "AC-3" => Some(30.0),
        "AC-8" => Some(5.0),
        _ => None,
    }
}

fn with_limit(mut metrics: Value, limit: Option<f64>, in_time: bool) -> Value {
    if let (Some(l), Value::Object(m)) = (limit, &mut metrics) {
        m.insert("runtime_limit_s".into(), json!(l));
        m.insert("within_runtime".into(), json!(in_time));
    }
    metrics
}

fn gaussian() -> Result<PsfFunction> {
    Ok(PsfFunction::Gaussian(Gaussian2D::new(1.0, 1.0)?))
}

fn scheme_a(half_width: f64) -> Result<ModelSetSpec> {
    Ok(ModelSetSpec::new(CutProjectScheme::scheme_a(), WindowInterval::new(half_width)?))
}

fn ac1(_: u64) -> Result<(bool, Value)> {
    let l = PlainLattice::scaled_integer(2.0)?;
    let r = psf_lattice_verify(&l, &gaussian()?, PhasePoint::ORIGIN, &SeriesPolicy::new(8.0, 8.0, 1e-9))?;
    // (Σ_k e^{-4πk²})², summed directly
    let theta: f64 = (-20i32..=20).map(|k| (-4.0 * std::f64::consts::PI * (k * k) as f64).exp()).sum();
    let oracle = theta * theta;
    let ok = r.gap < 1e-9 && (r.lhs.re - oracle).abs() < 1e-9 && (r.rhs.re - oracle).abs() < 1e-9;
    Ok((ok, json!({ "lhs": r.lhs.re, "rhs": r.rhs.re, "theta_oracle": oracle, "gap": r.gap, "tails": r.tails })))
}

fn ac2(_: u64) -> Result<(bool, Value)> {
    let spec = scheme_a(0.5)?;
    let bump = Bump::new(BumpSpec::standard(spec.window))?;
    let f = gaussian()?;
    let mut rows = Vec::new();
    let mut ok = true;
    for z in [PhasePoint::ORIGIN, PhasePoint::new(0.3, 0.1)] {
        let r = psf_modelset_verify(&spec, &bump, &f, z, &SeriesPolicy::new(8.0, 5.0, 1e-8))?;
        ok &= r.relative_gap < 1e-6;
        rows.push(json!({ "z": [z.x, z.w], "relative_gap": r.relative_gap, "tails": r.tails, "truncation": r.truncation }));
    }
    Ok((ok, json!({ "points": rows })))
}

fn ac3(seed: u64) -> Result<(bool, Value)> {
    let spec = scheme_a(0.5)?;
    let bump = Bump::shared(BumpSpec::standard(spec.window))?;
    let domain = Domain::ModelSet { spec, kernel: DecayKernel::psi_hat_squared(bump) };
    let g = vec![AnalyticWindow::g0()];
    let f = AnalyticWindow::g0();
    let series = n_series(&domain, &g, &g, &f, &f, &SeriesPolicy::new(8.0, 4.0, 1e-8))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zs = vec![PhasePoint::ORIGIN];
    zs.extend((0..10).map(|_| PhasePoint::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0))));
    let mut worst: f64 = 0.0;
    for z in &zs {
        let (direct, _) = n_direct(&domain, &g, &g, &f, &f, *z, 8.0)?;
        worst = worst.max((direct - series.eval(*z)).norm() / direct.norm());
    }
    Ok((worst < 1e-6, json!({ "points": zs.len(), "max_relative_gap": worst, "series_terms": series.len(), "series_tail": series.tail })))
}

fn ac4(_: u64) -> Result<(bool, Value)> {
    let spec = scheme_a(4.0)?;
    let bump = Bump::new(BumpSpec::standard(spec.window))?;
    let f = AnalyticWindow::g0();
    let z = PhasePoint::new(0.2, -0.1);
    let series = bracket_series(&f, &f, &bump, &spec, z, &SeriesPolicy::new(8.0, 5.0, 1e-8))?;
    // oracle: w_ψ(λ) A(f,f)(λ - z) from an independent enumeration of the nodes
    let set = enumerate_model_set(&spec, 14.0, Some(&bump))?;
    let mut nodes: Vec<(PhasePoint, Complex64)> = set
        .points
        .iter()
        .map(|p| {
            let l = PhasePoint::from_slice(&p.lambda);
            (l, bump.value(p.internal) * ambiguity_analytic(&f, &f, l - z))
        })
        .collect();
    nodes.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()));
    let (mut worst, mut worst_term): (f64, f64) = (0.0, 0.0);
    let mut rows = Vec::new();
    for (l, expected) in nodes.iter().take(5) {
        let sampled = bohr_mean_sampled(&series, *l, 64.0, 1.0 / 16.0)?;
        let rel = (sampled - expected).norm() / expected.norm();
        let single = APSeries::new(vec![APTerm { freq: *l, coef: *expected }], "single term", 0.0);
        let term = (single.box_mean(*l, 64.0) - expected).norm() / expected.norm();
        worst = worst.max(rel);
        worst_term = worst_term.max(term);
        rows.push(json!({ "node": [l.x, l.w], "expected": expected.norm(), "relative_error": rel }));
    }
    let ok = worst < 5e-2 && worst_term < 1e-12;
    Ok((ok, json!({ "window_measure": 8.0, "nodes": rows, "max_relative_error": worst, "per_term_mean_error": worst_term })))
}

fn ac5(_: u64) -> Result<(bool, Value)> {
    let domain = Domain::Lattice(PlainLattice::scaled_integer(1.0)?);
    let g = vec![Signal::Analytic(AnalyticWindow::g0())];
    let grid = Grid1::span(-6.0, 6.0, 1.0 / 64.0)?;
    let policy = SeriesPolicy::new(8.0, 6.0, 1e-7);
    let (_, r) = janssen_apply(&domain, &g, &g, &g[0], &grid, &policy, JanssenReference::Direct)?;
    let ok = r.report.gap < 1e-7;
    Ok((ok, json!({ "relative_sup_gap": r.report.gap, "tails": r.report.tails, "terms": r.report.terms })))
}

fn ac6(_: u64) -> Result<(bool, Value)> {
    let (a, b) = (0.5, 0.5);
    let grid = Grid1::span(-4.0, 4.0, 1.0 / 64.0)?;
    let bump = Bump::new(BumpSpec::standard(WindowInterval::new(1.0)?))?;
    let g = bump_window(&bump, &grid);
    let dual = painless_dual(a, b, &g)?;
    let gs = [Signal::Sampled(g)];
    let hs = [Signal::Sampled(dual.h.clone())];
    let domain = Domain::Lattice(painless_lattice(a, b)?);
    let wr = wexler_raz_residuals(&domain, &gs, &hs, &SeriesPolicy::new(8.0, 15.9, 1e-8))?;
    let system = GaborSystem::new(gs.to_vec(), NodeSource::Explicit(painless_nodes(a, b, &grid, 2.0)?), WeightMode::None)?;
    let signals = [
        AnalyticWindow::g0(),
        AnalyticWindow::hermite(1, 1.0),
        AnalyticWindow::hermite(2, 0.8),
        AnalyticWindow::gaussian(0.5).tf_shift(PhasePoint::new(0.7, 3.0)),
        AnalyticWindow::g0().tf_shift(PhasePoint::new(-1.3, -5.5)),
    ];
    let mut worst: f64 = 0.0;
    for f in signals {
        let f = Signal::Analytic(f);
        let out = frame_apply(&system, Some(&hs), &f, &grid, &TruncationPolicy::new(f64::MAX, 1e-12))?;
        let fr = f.render(&grid)?;
        worst = worst.max(out.signal.sup_distance(&fr)? / fr.sup_norm());
    }
    let ok = wr.sup_residual < 1e-8 && worst < 1e-6;
    Ok((
        ok,
        json!({
            "wr_sup_residual": wr.sup_residual, "wr_rows": wr.residuals.len(), "max_reconstruction_error": worst,
            "symbol_min": dual.symbol_min, "symbol_max": dual.symbol_max,
        }),
    ))
}

fn ac7(_: u64) -> Result<(bool, Value)> {
    let spec = scheme_a(4.0)?;
    let bump = Bump::shared(BumpSpec { n: 4, ..BumpSpec::standard(spec.window) })?;
    let domain = Domain::ModelSet { spec: spec.clone(), kernel: DecayKernel::phi_n(bump) };
    let g = vec![Signal::Analytic(AnalyticWindow::g0())];
    let grid = Grid1::span(-6.0, 6.0, 1.0 / 32.0)?;
    let policy = SeriesPolicy::new(8.0, 5.0, 1e-3);
    let (_, r) = janssen_apply(&domain, &g, &g, &g[0], &grid, &policy, JanssenReference::Direct)?;
    let ok = r.report.gap < 1e-3;
    // limit kernel: needs a generic set, hence the internal shift
    let generic = spec.with_shift(vec![0.0, 0.0], 0.1)?;
    let curve = janssen_cutoff_sensitivity(&generic, &g, &g, &g[0], &grid, &policy, &[10.0, 20.0, 40.0, 80.0, 160.0])?;
    Ok((
        ok,
        json!({
            "phi_n4_relative_sup_gap": r.report.gap, "tails": r.report.tails, "terms": r.report.terms,
            "truncation": r.report.truncation, "phi_limit_report_only": curve.report.truncation["curve"],
        }),
    ))
}

fn ac8(_: u64) -> Result<(bool, Value)> {
    let mut rows = Vec::new();
    let mut ok = true;
    for hw in [0.5, 4.0] {
        let e = density_estimate(&scheme_a(hw)?, 100.0)?;
        ok &= e.relative_gap < 0.02;
        rows.push(json!({ "window_measure": 2.0 * hw, "count": e.count, "estimate": e.estimate, "theoretical": e.theoretical, "relative_gap": e.relative_gap }));
    }
    Ok((ok, json!({ "radius": 100.0, "windows": rows })))
}

fn ac9(_: u64) -> Result<(bool, Value)> {
    let omega = WindowInterval::new(0.5)?;
    let limit = DecayKernel::phi_limit(omega);
    let at_zero = limit.eval(0.0);
    let phi8 = DecayKernel::phi_n(Bump::shared(BumpSpec { n: 8, ..BumpSpec::standard(omega) })?);
    let proxy_gap = (0..=1000)
        .map(|k| -5.0 + k as f64 * 0.01)
        .map(|t| (phi8.eval(t) - limit.eval(t)).abs())
        .fold(0.0, f64::max);
    let spec = BumpSpec::standard(omega);
    let cauchy = |n: u32, m: u32| -> f64 {
        let (a, b) = (BumpSpec { n, ..spec }, BumpSpec { n: m, ..spec });
        (0..=8000).map(|k| -20.0 + k as f64 * 0.005).map(|t| (psi_n_hat(&a, t) - psi_n_hat(&b, t)).abs()).fold(0.0, f64::max)
    };
    let gaps = [cauchy(2, 4), cauchy(4, 6), cauchy(6, 8)];
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let limit_tail = wiener_tail(&limit, 0.0);
    let phi_n_tail = wiener_tail(&DecayKernel::phi_n(Bump::shared(BumpSpec { n: 4, ..spec })?), 0.0);
    let flags = !limit_tail.summable && phi_n_tail.summable && phi_n_tail.value.is_finite();
    let ok = at_zero == 1.0 && proxy_gap < 2e-2 && decreasing && flags;
    Ok((
        ok,
        json!({
            "phi_limit_at_zero": at_zero, "phi8_vs_limit_sup_gap": proxy_gap, "cauchy_gaps_2_4_6_8": gaps,
            "phi_limit_summable": limit_tail.summable, "phi_n_summable": phi_n_tail.summable, "phi_n_wiener_norm": phi_n_tail.value,
        }),
    ))
}

fn ac10(_: u64) -> Result<(bool, Value)> {
    let spec = scheme_a(0.5)?;
    let g = AnalyticWindow::g0();
    let system = GaborSystem::analytic(vec![g.clone()], NodeSource::ModelSet(spec))?;
    let grid = Grid1::span(-8.0, 8.0, 1.0 / 16.0)?;
    let policy = TruncationPolicy::new(8.0, 1e-6);
    let cov = covariance_residual(&system, None, PhasePoint::new(0.3, 0.7), &g, &grid, &policy)?;
    let f1 = AnalyticWindow::hermite(1, 1.0).tf_shift(PhasePoint::new(0.4, -0.2));
    let f2 = AnalyticWindow::gaussian(0.7).tf_shift(PhasePoint::new(-0.3, 0.5));
    let s1 = frame_expand(&system, None, &f1, &policy)?;
    let s2 = frame_expand(&system, None, &f2, &policy)?;
    let (lhs, rhs) = (s1.window.inner(&f2), f1.inner(&s2.window));
    let adjoint = (lhs - rhs).norm();
    let moyal = moyal_check(&g, &g, &g, &g, 6.0, 1.0 / 16.0)?;
    let ok = cov.residual < 1e-6 && adjoint < 1e-9 && (moyal.lhs - 1.0).norm() < 1e-6;
    Ok((
        ok,
        json!({
            "covariance_residual": cov.residual, "covariance_nodes": cov.nodes, "self_adjoint_gap": adjoint,
            "moyal": moyal.lhs.re, "moyal_gap": (moyal.lhs - 1.0).norm(),
        }),
    ))
}
