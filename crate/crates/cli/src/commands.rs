use msgabor::appoisson::{
    bracket_dual_eval, bracket_series, n_direct, n_series, psf_lattice_verify, psf_modelset_verify, APSeries,
};
use msgabor::cutproject::scheme_diagnostics;
use msgabor::duality::{
    bump_window, density_diagnostic, figa_check, janssen_apply, janssen_cutoff_sensitivity, painless_dual,
    painless_lattice, painless_nodes, weighted_dual_residuals, weighted_tight_residuals, wexler_raz_residuals,
    DualityReport, JanssenReference,
};
use msgabor::gabor_op::{covariance_residual, frame_apply, frame_bounds_estimate, GaborSystem, NodeSource, WeightMode};
use msgabor::internal_windows::{psi_n_hat, psi_n_values, Bump, BumpSpec};
use msgabor::modelset::{density_estimate, enumerate_model_set, genericity_margin, WindowInterval};
use msgabor::report::{Verdict, VerificationReport};
use msgabor::suite::{acceptance_ids, run_acceptance};
use msgabor::tf_core::{AnalyticWindow, Grid1, SampledSignal, Signal};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{DomainKind, ExperimentConfig, KernelName};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    SchemeCheck,
    ModelsetEnumerate,
    ModelsetDensity,
    ModelsetGenericity,
    BumpEval,
    BumpTable,
    PsfLattice,
    PsfModelset,
    BracketEval,
    NseriesBuild,
    NseriesEval,
    GaborApply,
    GaborBounds,
    GaborCovariance,
    DualityFiga,
    DualityJanssen,
    DualityWexlerRaz,
    DualityTight,
    DualityDual,
    DualityDensity,
    SuiteAcceptance,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Self::SchemeCheck => "scheme check",
            Self::ModelsetEnumerate => "modelset enumerate",
            Self::ModelsetDensity => "modelset density",
            Self::ModelsetGenericity => "modelset genericity",
            Self::BumpEval => "bump eval",
            Self::BumpTable => "bump table",
            Self::PsfLattice => "psf lattice",
            Self::PsfModelset => "psf modelset",
            Self::BracketEval => "bracket eval",
            Self::NseriesBuild => "nseries build",
            Self::NseriesEval => "nseries eval",
            Self::GaborApply => "gabor apply",
            Self::GaborBounds => "gabor bounds",
            Self::GaborCovariance => "gabor covariance",
            Self::DualityFiga => "duality figa",
            Self::DualityJanssen => "duality janssen",
            Self::DualityWexlerRaz => "duality wexler-raz",
            Self::DualityTight => "duality tight",
            Self::DualityDual => "duality dual",
            Self::DualityDensity => "duality density",
            Self::SuiteAcceptance => "suite acceptance",
        }
    }

    /// File stem of the report and table outputs.
    pub fn stem(self) -> String {
        self.name().replace(' ', "-")
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub verdict: Verdict,
    pub lhs: Option<Complex64>,
    pub rhs: Option<Complex64>,
    pub gap: Option<f64>,
    pub tails: Option<[f64; 2]>,
    pub details: Value,
    pub table: Option<Table>,
}

impl Outcome {
    fn report_only(details: Value) -> Self {
        Self { verdict: Verdict::ReportOnly, lhs: None, rhs: None, gap: None, tails: None, details, table: None }
    }

    fn from_report(r: &VerificationReport) -> Self {
        Self {
            verdict: r.verdict,
            lhs: Some(r.lhs),
            rhs: Some(r.rhs),
            gap: Some(r.gap),
            tails: Some(r.tails),
            details: json!({
                "check": r.check, "relative_gap": r.relative_gap, "tolerance": r.tolerance,
                "terms": r.terms, "truncation": r.truncation, "notes": r.notes,
            }),
            table: None,
        }
    }

    fn with_table(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.table = Some(Table { header, rows });
        self
    }

    fn extend(mut self, extra: Value) -> Self {
        if let (Value::Object(m), Value::Object(e)) = (&mut self.details, extra) {
            m.extend(e);
        }
        self
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn series_table(s: &APSeries) -> Vec<Vec<String>> {
    s.terms().iter().map(|t| vec![num(t.freq.x), num(t.freq.w), num(t.coef.re), num(t.coef.im)]).collect()
}

fn signal_table(s: &SampledSignal) -> Vec<Vec<String>> {
    s.samples.iter().enumerate().map(|(j, v)| vec![num(s.grid.t(j)), num(v.re), num(v.im)]).collect()
}

fn analytic(w: &[AnalyticWindow]) -> Vec<Signal> {
    w.iter().cloned().map(Signal::Analytic).collect()
}

/// Painless fixture or the configured domain with analytic windows.
struct DualitySetup {
    domain: msgabor::appoisson::Domain,
    g: Vec<Signal>,
    h: Vec<Signal>,
    grid: Grid1,
    painless: Option<(GaborSystem, f64)>,
    policy: msgabor::appoisson::SeriesPolicy,
}

fn duality_setup(cfg: &ExperimentConfig) -> Result<DualitySetup, CliError> {
    if let Some(p) = &cfg.painless {
        let grid = Grid1::span(p.grid.lo, p.grid.hi, p.grid.step)?;
        let bump = Bump::new(BumpSpec::new(WindowInterval::new(p.omega_half_width)?, cfg.bump.eps, cfg.bump.n, cfg.bump.s_max)?)?;
        let g = bump_window(&bump, &grid);
        let dual = painless_dual(p.a, p.b, &g)?;
        let gs = vec![Signal::Sampled(g)];
        let nodes = painless_nodes(p.a, p.b, &grid, 2.0 * p.omega_half_width)?;
        // the direct reference must see every fixture node
        let reach = nodes.positions().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut policy = cfg.series_policy();
        policy.radius = policy.radius.max(reach + 1.0);
        let system = GaborSystem::new(gs.clone(), NodeSource::Explicit(nodes), WeightMode::None)?;
        return Ok(DualitySetup {
            domain: msgabor::appoisson::Domain::Lattice(painless_lattice(p.a, p.b)?),
            g: gs,
            h: vec![Signal::Sampled(dual.h)],
            grid,
            painless: Some((system, dual.symbol_max)),
            policy,
        });
    }
    Ok(DualitySetup {
        domain: cfg.domain()?,
        g: analytic(cfg.windows()),
        h: analytic(cfg.duals()),
        grid: cfg.grid()?,
        painless: None,
        policy: cfg.series_policy(),
    })
}

/// A failing report if any, otherwise the one with the largest gap.
fn worst_report(reports: &[VerificationReport]) -> Result<&VerificationReport, CliError> {
    reports
        .iter()
        .max_by(|a, b| (!a.passed(), a.gap).partial_cmp(&(!b.passed(), b.gap)).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| CliError::config("no evaluation points"))
}

fn residual_table(r: &DualityReport) -> Vec<Vec<String>> {
    r.residuals
        .iter()
        .map(|x| {
            vec![
                num(x.freq.x),
                num(x.freq.w),
                num(x.internal),
                (x.origin as u8).to_string(),
                num(x.value.re),
                num(x.value.im),
                num(x.residual),
            ]
        })
        .collect()
}

const RESIDUAL_HEADER: [&str; 7] = ["freq1", "freq2", "internal", "origin", "re", "im", "residual"];

fn require_modelset(cfg: &ExperimentConfig, what: &str) -> Result<(), CliError> {
    if cfg.system.domain != DomainKind::Modelset {
        return Err(CliError::config(format!("{what} needs system.domain = \"modelset\"")));
    }
    Ok(())
}

pub fn run(check: Check, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match check {
        Check::SchemeCheck => {
            let d = scheme_diagnostics(&cfg.scheme()?, cfg.radius, 1e-9)?;
            let mut o = Outcome::report_only(serde_json::to_value(&d).expect("serializable"));
            o.verdict = if d.pass { Verdict::Pass } else { Verdict::Fail };
            Ok(o)
        }
        Check::ModelsetEnumerate => {
            let spec = cfg.model_set()?;
            let set = enumerate_model_set(&spec, cfg.radius, Some(&*cfg.bump()?))?;
            let rows = set
                .points
                .iter()
                .map(|p| vec![num(p.lambda[0]), num(p.lambda[1]), num(p.internal), num(p.weight)])
                .collect();
            Ok(Outcome::report_only(json!({ "count": set.len(), "radius": cfg.radius, "density": spec.density() }))
                .with_table(vec!["lambda1", "lambda2", "internal", "weight"], rows))
        }
        Check::ModelsetDensity => {
            let e = density_estimate(&cfg.model_set()?, cfg.radius)?;
            Ok(Outcome::report_only(serde_json::to_value(&e).expect("serializable")))
        }
        Check::ModelsetGenericity => {
            let m = genericity_margin(&cfg.model_set()?, cfg.radius)?;
            Ok(Outcome::report_only(json!({ "radius": cfg.radius, "margin": m, "generic": m > 0.0 })))
        }
        Check::BumpEval => {
            let spec = cfg.bump_spec()?;
            if !(cfg.t_step > 0.0 && cfg.t_max > 0.0) {
                return Err(CliError::config("t_max and t_step must be positive"));
            }
            let k = (cfg.t_max / cfg.t_step).round() as i64;
            let rows = (-k..=k)
                .map(|i| i as f64 * cfg.t_step)
                .map(|t| vec![num(t), num(psi_n_hat(&spec, t))])
                .collect();
            Ok(Outcome::report_only(json!({ "bump": spec, "hat_at_zero": psi_n_hat(&spec, 0.0) }))
                .with_table(vec!["t", "psi_hat"], rows))
        }
        Check::BumpTable => {
            let spec = cfg.bump_spec()?;
            let w = spec.omega_half_width;
            let grid = if cfg.grid.lo <= -w && cfg.grid.hi >= w { cfg.grid()? } else { Grid1::span(-1.25 * w, 1.25 * w, w / 256.0)? };
            let values = psi_n_values(&spec, &grid)?;
            let rows = values.iter().enumerate().map(|(j, v)| vec![num(grid.t(j)), num(*v)]).collect();
            Ok(Outcome::report_only(json!({ "bump": spec, "grid": grid })).with_table(vec!["x", "psi"], rows))
        }
        Check::PsfLattice => {
            let r = psf_lattice_verify(&cfg.lattice()?, &cfg.psf()?, cfg.z(), &cfg.series_policy())?;
            Ok(Outcome::from_report(&r))
        }
        Check::PsfModelset => {
            let r = psf_modelset_verify(&cfg.model_set()?, &*cfg.bump()?, &cfg.psf()?, cfg.z(), &cfg.series_policy())?;
            Ok(Outcome::from_report(&r))
        }
        Check::BracketEval => {
            let (spec, bump, policy) = (cfg.model_set()?, cfg.bump()?, cfg.series_policy());
            let (f, g) = (cfg.f1(), cfg.windows()[0].clone());
            let series = bracket_series(&f, &g, &bump, &spec, cfg.z(), &policy)?;
            let mut reports = Vec::new();
            for zt in cfg.points() {
                let (dual, tail) = bracket_dual_eval(&f, &g, &bump, &spec, cfg.z(), zt, &policy)?;
                reports.push(VerificationReport::new("bracket", series.eval(zt), dual, [series.tail, tail], policy.tol, [series.len(), 0], json!({ "z_tilde": zt })));
            }
            let points: Vec<Value> = reports
                .iter()
                .map(|r| json!({ "z_tilde": r.truncation["z_tilde"], "primal": r.lhs, "dual": r.rhs, "gap": r.gap }))
                .collect();
            let worst = worst_report(&reports)?;
            Ok(Outcome::from_report(worst)
                .extend(json!({ "points": points, "series_terms": series.len(), "series_note": series.note }))
                .with_table(vec!["freq1", "freq2", "re", "im"], series_table(&series)))
        }
        Check::NseriesBuild => {
            let s = n_series(&cfg.domain()?, cfg.windows(), cfg.duals(), &cfg.f1(), &cfg.f2(), &cfg.series_policy())?;
            Ok(Outcome::report_only(json!({ "terms": s.len(), "tail": s.tail.min(f64::MAX), "note": s.note }))
                .with_table(vec!["freq1", "freq2", "re", "im"], series_table(&s)))
        }
        Check::NseriesEval => {
            let domain = cfg.domain()?;
            let policy = cfg.series_policy();
            let (f1, f2) = (cfg.f1(), cfg.f2());
            let s = n_series(&domain, cfg.windows(), cfg.duals(), &f1, &f2, &policy)?;
            let tail = if s.tail.is_finite() { s.tail } else { 0.0 };
            let mut reports = Vec::new();
            for z in cfg.points() {
                let (direct, dtail) = n_direct(&domain, cfg.windows(), cfg.duals(), &f1, &f2, z, policy.radius)?;
                reports.push(VerificationReport::new("nseries", direct, s.eval(z), [dtail, tail], policy.tol, [0, s.len()], json!({ "z": z })));
            }
            let worst = worst_report(&reports)?;
            let mut o = Outcome::from_report(worst);
            if s.tail.is_infinite() && o.verdict == Verdict::Pass {
                o.verdict = Verdict::ReportOnly;
            }
            let rows: Vec<Value> = reports
                .iter()
                .map(|r| json!({ "z": r.truncation["z"], "direct": r.lhs, "series": r.rhs, "gap": r.gap, "relative_gap": r.relative_gap }))
                .collect();
            Ok(o.extend(json!({ "points": rows, "series_note": s.note })))
        }
        Check::GaborApply => {
            let system = cfg.gabor_system()?;
            let duals = cfg.duals.as_ref().map(|d| analytic(d));
            let out = frame_apply(&system, duals.as_deref(), &cfg.signal()?, &cfg.grid()?, &cfg.truncation())?;
            Ok(Outcome::report_only(json!({ "tail": out.tail, "rounding": out.rounding, "nodes": out.nodes, "grid": out.signal.grid }))
                .with_table(vec!["t", "re", "im"], signal_table(&out.signal)))
        }
        Check::GaborBounds => {
            let b = frame_bounds_estimate(&cfg.gabor_system()?, &cfg.grid()?, &cfg.truncation(), cfg.seed())?;
            Ok(Outcome::report_only(serde_json::to_value(&b).expect("serializable")))
        }
        Check::GaborCovariance => {
            let f = match cfg.signal()? {
                Signal::Analytic(a) => a,
                Signal::Sampled(_) => return Err(CliError::config("covariance needs an analytic signal")),
            };
            let r = covariance_residual(&cfg.gabor_system()?, cfg.duals.as_deref(), cfg.z(), &f, &cfg.grid()?, &cfg.truncation())?;
            let mut o = Outcome::report_only(serde_json::to_value(&r).expect("serializable"));
            o.gap = Some(r.residual);
            o.verdict = if r.residual <= cfg.policy.tol { Verdict::Pass } else { Verdict::Fail };
            Ok(o)
        }
        Check::DualityFiga => {
            let r = figa_check(&cfg.domain()?, cfg.windows(), cfg.duals(), &cfg.f1(), &cfg.f2(), &cfg.series_policy())?;
            Ok(Outcome::from_report(&r.report))
        }
        Check::DualityJanssen => {
            let s = duality_setup(cfg)?;
            let f = cfg.signal()?;
            let policy = s.policy;
            if cfg.painless.is_none() && cfg.system.kernel == KernelName::PhiLimit && !cfg.cutoffs.is_empty() {
                require_modelset(cfg, "the limit-kernel sensitivity curve")?;
                let r = janssen_cutoff_sensitivity(&cfg.model_set()?, &s.g, &s.h, &f, &s.grid, &policy, &cfg.cutoffs)?;
                return Ok(Outcome::from_report(&r.report));
            }
            let reference = match &s.painless {
                Some((system, _)) => JanssenReference::System(system),
                None => JanssenReference::Direct,
            };
            let (out, r) = janssen_apply(&s.domain, &s.g, &s.h, &f, &s.grid, &policy, reference)?;
            Ok(Outcome::from_report(&r.report).with_table(vec!["t", "re", "im"], signal_table(&out)))
        }
        Check::DualityWexlerRaz => {
            let s = duality_setup(cfg)?;
            let r = wexler_raz_residuals(&s.domain, &s.g, &s.h, &s.policy)?;
            Ok(Outcome::from_report(&r.report)
                .extend(json!({ "sup_residual": r.sup_residual, "rows": r.residuals.len() }))
                .with_table(RESIDUAL_HEADER.to_vec(), residual_table(&r)))
        }
        Check::DualityTight | Check::DualityDual => {
            require_modelset(cfg, check.name())?;
            let (spec, bump) = (cfg.model_set()?, cfg.bump()?);
            let r = if check == Check::DualityTight {
                weighted_tight_residuals(&spec, &bump, cfg.windows(), &cfg.series_policy())?
            } else {
                weighted_dual_residuals(&spec, &bump, cfg.windows(), cfg.duals(), &cfg.series_policy())?
            };
            Ok(Outcome::from_report(&r.report)
                .extend(json!({ "sup_residual": r.sup_residual, "rows": r.residuals.len() }))
                .with_table(RESIDUAL_HEADER.to_vec(), residual_table(&r)))
        }
        Check::DualityDensity => {
            let s = duality_setup(cfg)?;
            let b_g = match (cfg.upper_bound, &s.painless) {
                (Some(b), _) => b,
                (None, Some((_, symbol_max))) => *symbol_max,
                (None, None) => return Err(CliError::config("upper_bound is required outside the painless fixture")),
            };
            let d = density_diagnostic(&s.domain, &s.g[0], &s.h[0], b_g, &s.policy)?;
            Ok(Outcome::report_only(serde_json::to_value(&d).expect("serializable")).extend(json!({ "policy": s.policy })))
        }
        Check::SuiteAcceptance => {
            let rows = run_acceptance(&cfg.only, cfg.seed());
            for r in &rows {
                eprintln!("{}", r.line());
            }
            let passed = rows.iter().all(|r| r.passed);
            let table = rows
                .iter()
                .map(|r| vec![r.id.clone(), r.passed.to_string(), format!("{:.3}", r.elapsed_s), r.title.clone()])
                .collect();
            let mut o = Outcome::report_only(json!({ "rows": rows }));
            o.verdict = if passed { Verdict::Pass } else { Verdict::Fail };
            Ok(o.with_table(vec!["id", "passed", "elapsed_s", "title"], table))
        }
    }
}

/// Resolved truncation and rough term counts, without computing anything.
pub fn plan(check: Check, cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let p = &cfg.policy;
    let box_area = |r: f64| (2.0 * (r + 2.0)).powi(2);
    let lattice_vol = || -> Result<f64, CliError> { Ok(cfg.lattice()?.volume()) };
    let scheme_vol = || -> Result<f64, CliError> { Ok(cfg.scheme()?.volume()) };
    let density = |lattice: bool| -> Result<f64, CliError> {
        Ok(if lattice { 1.0 / lattice_vol()? } else { cfg.model_set()?.density() })
    };
    let lattice = cfg.system.domain == DomainKind::Lattice && cfg.painless.is_none();
    let estimate = match check {
        Check::SchemeCheck => json!({ "lattice_points": std::f64::consts::PI * cfg.radius.powi(3) * 4.0 / 3.0 / scheme_vol()? }),
        Check::ModelsetEnumerate | Check::ModelsetDensity | Check::ModelsetGenericity => {
            json!({ "points": cfg.model_set()?.density() * (2.0 * cfg.radius).powi(2) })
        }
        Check::BumpEval => json!({ "samples": 2.0 * (cfg.t_max / cfg.t_step).round() + 1.0 }),
        Check::BumpTable => json!({ "samples": ((cfg.grid.hi - cfg.grid.lo) / cfg.grid.step).round() + 1.0 }),
        Check::GaborApply | Check::GaborBounds | Check::GaborCovariance => json!({
            "nodes": density(lattice)? * box_area(p.radius),
            "grid_samples": ((cfg.grid.hi - cfg.grid.lo) / cfg.grid.step).round() + 1.0,
        }),
        Check::SuiteAcceptance => json!({ "criteria": if cfg.only.is_empty() { acceptance_ids().iter().map(|s| s.to_string()).collect() } else { cfg.only.clone() } }),
        Check::PsfLattice => json!({ "primal_terms": box_area(p.radius) / lattice_vol()?, "dual_terms": box_area(p.dual_radius) * lattice_vol()? }),
        _ if lattice => json!({ "primal_terms": box_area(p.radius) / lattice_vol()?, "dual_terms": box_area(p.dual_radius) * lattice_vol()? }),
        _ if cfg.painless.is_some() => json!({ "primal_terms": null, "dual_terms": null, "note": "painless fixture: counts follow the fixture grid" }),
        _ => {
            let dual = p.internal_cutoff.map(|t| box_area(p.dual_radius) * 2.0 * t * scheme_vol().unwrap_or(f64::NAN));
            json!({ "primal_terms": density(false)? * box_area(p.radius), "dual_terms": dual })
        }
    };
    Ok(json!({
        "check": check.name(),
        "dry_run": true,
        "truncation": {
            "radius": p.radius, "dual_radius": p.dual_radius,
            "internal_cutoff": p.internal_cutoff.map_or(json!("auto"), |t| json!(t)),
            "tol": p.tol, "enumeration_radius": cfg.radius, "shell": 2.0,
        },
        "estimated_terms": estimate,
        "seed": cfg.seed(),
    }))
}
