//! Duality identities as runnable checks: FIGA, Janssen representation,
//! Wexler-Raz tables, weighted tight/dual conditions, density bookkeeping and
//! the painless lattice fixture.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::appoisson::{abs_integral, n_direct, n_series, sup_norm, Domain, DualMode, SeriesPolicy, SHELL};
use crate::cutproject::PlainLattice;
use crate::error::{invalid, Error, Result};
use crate::gabor_op::{frame_apply, node_coefficient, shifted_on_grid, GaborSystem, NodeSource, TruncationPolicy, WeightMode};
use crate::internal_windows::{Bump, DecayKernel, KernelKind, WienerProfile, DEFAULT_K_MAX};
use crate::modelset::{genericity_margin, ModelSetSpec, WeightedPoint, WeightedPointSet};
use crate::report::VerificationReport;
use crate::tf_core::{AnalyticWindow, Grid1, PhasePoint, SampledSignal, Signal};

/// Modes per deterministic reduction chunk.
const CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub freq: PhasePoint,
    pub internal: f64,
    pub origin: bool,
    pub value: Complex64,
    /// |value - δ|.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualityReport {
    pub report: VerificationReport,
    pub residuals: Vec<ResidualRow>,
    pub sup_residual: f64,
}

impl DualityReport {
    fn plain(report: VerificationReport) -> Self {
        Self { report, residuals: Vec::new(), sup_residual: 0.0 }
    }

    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn analytic_signals(w: &[AnalyticWindow]) -> Vec<Signal> {
    w.iter().cloned().map(Signal::Analytic).collect()
}

fn unweighted_limit(domain: &Domain) -> bool {
    matches!(domain, Domain::ModelSet { kernel, .. } if kernel.kind() == KernelKind::PhiLimit)
}

/// Refuses unweighted model-set identities on non-generic sets.
fn require_generic(domain: &Domain, radius: f64) -> Result<()> {
    if let Domain::ModelSet { spec, .. } = domain {
        if unweighted_limit(domain) {
            let m = genericity_margin(spec, radius)?;
            if !(m > 0.0) {
                return Err(Error::NotGeneric(m));
            }
        }
    }
    Ok(())
}

/// Σ_i Σ_λ w²⟨f1, π(λ)g_i⟩⟨π(λ)h_i, f2⟩ against its dual series at z = 0.
pub fn figa_check(
    domain: &Domain,
    g: &[AnalyticWindow],
    h: &[AnalyticWindow],
    f1: &AnalyticWindow,
    f2: &AnalyticWindow,
    policy: &SeriesPolicy,
) -> Result<DualityReport> {
    require_generic(domain, policy.radius)?;
    let (lhs, lhs_tail) = n_direct(domain, g, h, f1, f2, PhasePoint::ORIGIN, policy.radius)?;
    let series = n_series(domain, g, h, f1, f2, policy)?;
    let rhs = series.eval(PhasePoint::ORIGIN);
    let rhs_tail = if series.tail.is_finite() { series.tail } else { 0.0 };
    let r = VerificationReport::new(
        "figa",
        lhs,
        rhs,
        [lhs_tail, rhs_tail],
        policy.tol,
        [0, series.len()],
        json!({ "policy": policy, "series": series.note }),
    );
    let r = if series.tail.is_finite() { r } else { r.report_only("limit kernel: conditionally truncated dual side") };
    Ok(DualityReport::plain(r))
}

/// Mode coefficient mult(η) Σ_i ⟨h_i, π(Jν)g_i⟩.
fn mode_coefficient(mode: &DualMode, g: &[Signal], h: &[Signal]) -> Result<Complex64> {
    let jn = mode.freq.rotate_j();
    let mut s = Complex64::new(0.0, 0.0);
    for (gi, hi) in g.iter().zip(h) {
        s += node_coefficient(hi, gi, jn)?;
    }
    Ok(mode.multiplier * s)
}

fn check_pairs(g: &[Signal], h: &[Signal]) -> Result<()> {
    if g.is_empty() || g.len() != h.len() {
        return invalid("window lists must be non-empty and of equal length");
    }
    Ok(())
}

/// Internal cutoff for operator-level sums: explicit, or from the kernel's
/// Wiener tail against ∫|Σ⟨h_i, π(Jν)g_i⟩| dν.
fn operator_cutoff(domain: &Domain, g: &[Signal], h: &[Signal], policy: &SeriesPolicy) -> Result<(f64, f64)> {
    let Domain::ModelSet { kernel, .. } = domain else {
        return Ok((0.0, 0.0));
    };
    if !kernel.summable() {
        let Some(c) = policy.internal_cutoff else {
            return Err(Error::NonSummableTail);
        };
        return Ok((c, f64::INFINITY));
    }
    let coef = |nu: PhasePoint| -> f64 {
        let jn = nu.rotate_j();
        g.iter().zip(h).map(|(gi, hi)| node_coefficient(hi, gi, jn).map_or(f64::INFINITY, |c| c.norm())).sum()
    };
    let l1 = abs_integral(&coef, PhasePoint::ORIGIN, policy.dual_radius + SHELL, 1.0 / 8.0);
    let profile = WienerProfile::new(kernel, DEFAULT_K_MAX);
    let tail = |c: f64| l1 * domain.internal_tail_factor(Some(&profile), c);
    let cutoff = match policy.internal_cutoff {
        Some(c) => c,
        None => {
            let mut t = 2.0;
            while tail(t) > 0.05 * policy.tol {
                t *= 1.25;
                if t > 1e6 {
                    return Err(Error::NonSummableTail);
                }
            }
            t
        }
    };
    Ok((cutoff, tail(cutoff)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JanssenOutput {
    pub signal: SampledSignal,
    pub modes: usize,
    pub cutoff: f64,
    /// Sup-norm tail per unit ‖f‖∞: physical shell and internal cutoff.
    pub tails: [f64; 2],
}

/// Kernel envelope frozen at geometric breakpoints; valid because the
/// envelope is non-increasing.
struct StepBound {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepBound {
    fn new(domain: &Domain, cutoff: f64) -> Self {
        let mut breaks = vec![0.0];
        let mut t = 1.0;
        while t < cutoff {
            breaks.push(t);
            t *= 1.02;
        }
        let values = breaks.par_iter().map(|&t| domain.kernel_bound(t)).collect();
        Self { breaks, values }
    }

    fn at(&self, u: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= u.abs());
        self.values[k.max(1) - 1]
    }
}

/// Dual-side operator Σ_η mult(η) Σ_i ⟨h_i, π(Jν)g_i⟩ π(Jν) applied to f on `grid`.
pub fn janssen_operator(
    domain: &Domain,
    g: &[Signal],
    h: &[Signal],
    f: &Signal,
    grid: &Grid1,
    policy: &SeriesPolicy,
) -> Result<JanssenOutput> {
    domain.validate()?;
    check_pairs(g, h)?;
    let (cutoff, internal_tail) = operator_cutoff(domain, g, h, policy)?;
    let modes = domain.dual_points(PhasePoint::ORIGIN, policy.dual_radius + SHELL, cutoff)?;
    let bounds = StepBound::new(domain, cutoff);
    // Window factors first; the kernel is evaluated only where its envelope matters.
    let coefs: Vec<Result<(DualMode, Complex64, f64)>> = modes
        .par_iter()
        .map(|m| mode_coefficient(m, g, h).map(|c| (*m, c, c.norm() * bounds.at(m.internal))))
        .collect();
    let mut kept = Vec::new();
    let mut shell = 0.0;
    for r in coefs {
        let (m, c, bound) = r?;
        if sup_norm(m.freq) > policy.dual_radius {
            shell += bound;
        } else if bound > 0.0 {
            kept.push((m, c, bound));
        }
    }
    // Each mode moves ‖f‖∞ by at most its bound; drop the smallest within 1% of tol.
    kept.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut dropped = 0.0;
    let skip = kept
        .iter()
        .take_while(|(_, _, bound)| {
            dropped += bound;
            dropped <= 1e-2 * policy.tol
        })
        .count();
    let dropped: f64 = kept[..skip].iter().map(|(_, _, bound)| bound).sum();
    let kept: Vec<(DualMode, Complex64)> =
        kept[skip..].par_iter().map(|(m, c, _)| (*m, c * domain.kernel_factor(m.internal))).collect();
    let partials: Vec<Result<Vec<Complex64>>> = kept
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len];
            for (m, c) in chunk {
                let (s0, vals, _) = shifted_on_grid(f, m.freq.rotate_j(), grid)?;
                for (o, v) in acc[s0..s0 + vals.len()].iter_mut().zip(&vals) {
                    *o += c * v;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len];
    for p in partials {
        for (o, v) in out.iter_mut().zip(&p?) {
            *o += v;
        }
    }
    Ok(JanssenOutput {
        signal: SampledSignal { grid: *grid, samples: out },
        modes: kept.len(),
        cutoff,
        tails: [2.0 * shell + dropped, internal_tail],
    })
}

/// The direct frame operator matching a domain's node weights.
pub fn direct_system(domain: &Domain, g: &[Signal]) -> Result<GaborSystem> {
    match domain {
        Domain::Lattice(l) => GaborSystem::new(g.to_vec(), NodeSource::Lattice(l.clone()), WeightMode::None),
        Domain::ModelSet { spec, kernel } => {
            let mode = match (kernel.kind(), kernel.bump()) {
                (KernelKind::PhiLimit, _) => WeightMode::None,
                (KernelKind::PhiN { .. }, Some(b)) => WeightMode::Bump { bump: b.clone(), scale: kernel.omega().measure() },
                (KernelKind::PsiHatSquared { .. }, Some(b)) => WeightMode::Bump { bump: b.clone(), scale: 1.0 },
                _ => unreachable!("bump-backed kernels carry their bump"),
            };
            GaborSystem::new(g.to_vec(), NodeSource::ModelSet(spec.clone()), mode)
        }
    }
}

/// What the Janssen output is compared against.
pub enum JanssenReference<'a> {
    /// Direct frame operator of the domain, truncated at `policy.radius`.
    Direct,
    /// Direct frame operator of an explicit system (e.g. a residue-complete node set).
    System(&'a GaborSystem),
    /// A precomputed signal on the same grid.
    Oracle(&'a SampledSignal),
}

/// Janssen representation applied to f, with the sup-norm gap to the reference
/// relative to ‖f‖∞.
pub fn janssen_apply(
    domain: &Domain,
    g: &[Signal],
    h: &[Signal],
    f: &Signal,
    grid: &Grid1,
    policy: &SeriesPolicy,
    reference: JanssenReference<'_>,
) -> Result<(SampledSignal, DualityReport)> {
    require_generic(domain, policy.radius)?;
    let jan = janssen_operator(domain, g, h, f, grid, policy)?;
    let direct_policy = TruncationPolicy::new(policy.radius, policy.tol.max(1e-300));
    let (reference, ref_tail, nodes) = match reference {
        JanssenReference::Direct => {
            let a = frame_apply(&direct_system(domain, g)?, Some(h), f, grid, &direct_policy)?;
            (a.signal, a.tail, a.nodes)
        }
        JanssenReference::System(sys) => {
            let a = frame_apply(sys, Some(h), f, grid, &direct_policy)?;
            (a.signal, a.tail, a.nodes)
        }
        JanssenReference::Oracle(s) => (s.clone(), 0.0, 0),
    };
    let fs = f.render(grid)?;
    let fnorm = fs.sup_norm();
    if !(fnorm > 0.0) {
        return invalid("test signal vanishes on the grid");
    }
    let gap = jan.signal.sup_distance(&reference)? / fnorm;
    let internal = jan.tails[1];
    let r = VerificationReport::with_gap(
        "janssen",
        Complex64::new(jan.signal.sup_norm() / fnorm, 0.0),
        Complex64::new(reference.sup_norm() / fnorm, 0.0),
        gap,
        [jan.tails[0] + if internal.is_finite() { internal } else { 0.0 }, ref_tail / fnorm],
        policy.tol,
        [jan.modes, nodes],
        json!({ "policy": policy, "internal_cutoff": jan.cutoff, "janssen_tails": [jan.tails[0], internal.min(f64::MAX)] }),
    );
    let r = if internal.is_finite() { r } else { r.report_only("limit kernel: conditionally truncated mode sum") };
    Ok((jan.signal, DualityReport::plain(r)))
}

/// Janssen gap of the unweighted model-set operator as a function of the
/// internal cutoff. Report-only: the limit kernel series is conditionally
/// convergent.
#[allow(clippy::too_many_arguments)]
pub fn janssen_cutoff_sensitivity(
    spec: &ModelSetSpec,
    g: &[Signal],
    h: &[Signal],
    f: &Signal,
    grid: &Grid1,
    policy: &SeriesPolicy,
    cutoffs: &[f64],
) -> Result<DualityReport> {
    let domain = Domain::ModelSet { spec: spec.clone(), kernel: DecayKernel::phi_limit(spec.window) };
    require_generic(&domain, policy.radius)?;
    let direct_policy = TruncationPolicy::new(policy.radius, policy.tol.max(1e-300));
    let direct = frame_apply(&direct_system(&domain, g)?, Some(h), f, grid, &direct_policy)?;
    let fnorm = f.render(grid)?.sup_norm();
    let mut curve = Vec::with_capacity(cutoffs.len());
    for &c in cutoffs {
        let jan = janssen_operator(&domain, g, h, f, grid, &policy.with_cutoff(c))?;
        curve.push(json!({ "cutoff": c, "gap": jan.signal.sup_distance(&direct.signal)? / fnorm, "modes": jan.modes }));
    }
    let last = curve.last().and_then(|v| v["gap"].as_f64()).unwrap_or(f64::NAN);
    let r = VerificationReport::with_gap(
        "janssen_limit_kernel",
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        last,
        [0.0, direct.tail / fnorm],
        policy.tol,
        [cutoffs.len(), direct.nodes],
        json!({ "policy": policy, "curve": curve }),
    )
    .report_only("limit kernel is not absolutely summable; gap reported against the internal cutoff");
    Ok(DualityReport::plain(r))
}

/// Cutoff for residual tables: explicit, or where the kernel envelope times
/// Σ‖h_i‖‖g_i‖ drops below a tenth of the tolerance.
fn table_cutoff(domain: &Domain, g: &[Signal], h: &[Signal], policy: &SeriesPolicy) -> Result<(f64, f64)> {
    let Domain::ModelSet { kernel, .. } = domain else {
        return Ok((0.0, 0.0));
    };
    let scale = domain.multiplier_scale();
    let norms: f64 = g.iter().zip(h).map(|(a, b)| a.norm() * b.norm()).sum();
    let bound = |t: f64| scale * kernel.envelope(t) * norms;
    if let Some(c) = policy.internal_cutoff {
        return Ok((c, bound(c)));
    }
    if !kernel.summable() {
        return Err(Error::NonSummableTail);
    }
    let mut t = 2.0;
    while bound(t) > 0.1 * policy.tol {
        t *= 1.25;
        if t > 1e6 {
            return Err(Error::NonSummableTail);
        }
    }
    Ok((t, bound(t)))
}

/// r(η) = mult(η) Σ_i ⟨h_i, π(Jν)g_i⟩ - δ_(η,0) over the enumerated modes;
/// η = 0 is identified by integer coordinates.
pub fn wexler_raz_residuals(domain: &Domain, g: &[Signal], h: &[Signal], policy: &SeriesPolicy) -> Result<DualityReport> {
    domain.validate()?;
    check_pairs(g, h)?;
    let (cutoff, beyond) = table_cutoff(domain, g, h, policy)?;
    let modes = domain.dual_modes(PhasePoint::ORIGIN, policy.dual_radius, cutoff)?;
    let rows: Vec<Result<ResidualRow>> = modes
        .par_iter()
        .map(|m| {
            let value = mode_coefficient(m, g, h)?;
            let delta = if m.origin { 1.0 } else { 0.0 };
            Ok(ResidualRow { freq: m.freq, internal: m.internal, origin: m.origin, value, residual: (value - delta).norm() })
        })
        .collect();
    let residuals: Vec<ResidualRow> = rows.into_iter().collect::<Result<_>>()?;
    let sup = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let origin = residuals.iter().find(|r| r.origin).map_or(Complex64::new(0.0, 0.0), |r| r.value);
    let mut r = VerificationReport::with_gap(
        "wexler_raz",
        origin,
        Complex64::new(1.0, 0.0),
        sup,
        [0.0, 0.0],
        policy.tol,
        [residuals.len(), 0],
        json!({ "policy": policy, "internal_cutoff": cutoff, "bound_beyond_cutoff": beyond }),
    );
    if unweighted_limit(domain) {
        r = r.report_only("limit kernel: residuals beyond the cutoff decay only like 1/|p2*|");
    }
    Ok(DualityReport { report: r, residuals, sup_residual: sup })
}

fn psi2_domain(spec: &ModelSetSpec, bump: &Arc<Bump>) -> Domain {
    Domain::ModelSet { spec: spec.clone(), kernel: DecayKernel::psi_hat_squared(bump.clone()) }
}

/// Normalized weighted tight frame condition vol(Γ)⁻¹ψ²̂(-p2*)Σ⟨g_i, π(Jν)g_i⟩ = δ.
pub fn weighted_tight_residuals(
    spec: &ModelSetSpec,
    bump: &Arc<Bump>,
    g: &[AnalyticWindow],
    policy: &SeriesPolicy,
) -> Result<DualityReport> {
    weighted_dual_residuals(spec, bump, g, g, policy)
}

/// Weighted dual frame condition vol(Γ)⁻¹ψ²̂(-p2*)Σ⟨h_i, π(Jν)g_i⟩ = δ, with the
/// η = 0 normalization vol(Γ)⁻¹ψ²̂(0)Σ⟨h_i, g_i⟩ - 1 recorded.
pub fn weighted_dual_residuals(
    spec: &ModelSetSpec,
    bump: &Arc<Bump>,
    g: &[AnalyticWindow],
    h: &[AnalyticWindow],
    policy: &SeriesPolicy,
) -> Result<DualityReport> {
    let domain = psi2_domain(spec, bump);
    let mut rep = wexler_raz_residuals(&domain, &analytic_signals(g), &analytic_signals(h), policy)?;
    let norm: Complex64 = g.iter().zip(h).map(|(a, b)| b.inner(a)).sum();
    let normalization = bump.psi2_at_zero() / spec.scheme.volume() * norm - 1.0;
    rep.report.notes.push(format!("origin normalization residual {:.3e}", normalization.norm()));
    rep.report.truncation["origin_normalization"] = json!(normalization.norm());
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityDiagnostic {
    pub density: f64,
    /// ⟨h, g⟩.
    pub hg: Complex64,
    /// Σ w²⟨h, π(λ)g⟩⟨π(λ)h, g⟩: the frame decomposition at f1 = h, f2 = g.
    pub cross: Complex64,
    /// Σ w²|⟨h, π(λ)g⟩|².
    pub quadratic: f64,
    /// B_g ‖h‖².
    pub bessel_bound: f64,
    /// Dual multiplier at η = 0; a dual pair satisfies origin_multiplier·⟨h, g⟩ = 1.
    pub origin_multiplier: f64,
    pub origin_residual: f64,
    /// Sup of the Wexler-Raz table for the supplied pair.
    pub wr_floor: f64,
    pub tail: f64,
    pub chain_consistent: bool,
    pub necessity_consistent: bool,
    pub notes: Vec<String>,
}

/// Bookkeeping of the density necessity argument for a supplied pair (g, h).
/// Nothing is claimed about frame existence.
pub fn density_diagnostic(
    domain: &Domain,
    g: &Signal,
    h: &Signal,
    b_g: f64,
    policy: &SeriesPolicy,
) -> Result<DensityDiagnostic> {
    domain.validate()?;
    if !(b_g > 0.0) {
        return invalid("upper frame bound must be positive");
    }
    let nodes = domain.nodes(PhasePoint::ORIGIN, policy.radius + SHELL)?;
    let terms: Vec<Result<(bool, Complex64, f64)>> = nodes
        .par_iter()
        .map(|n| {
            let a = node_coefficient(h, g, n.z)?;
            let b = node_coefficient(g, h, n.z)?.conj();
            let w2 = n.weight * n.weight;
            Ok((sup_norm(n.z) > policy.radius, w2 * a * b, w2 * a.norm_sqr()))
        })
        .collect();
    let (mut cross, mut quadratic, mut tail) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for t in terms {
        let (shell, c, q) = t?;
        if shell {
            tail += c.norm().max(q);
        } else {
            cross += c;
            quadratic += q;
        }
    }
    let hg = node_coefficient(h, g, PhasePoint::ORIGIN)?;
    let wr = wexler_raz_residuals(domain, std::slice::from_ref(g), std::slice::from_ref(h), policy)?;
    let origin_multiplier = domain.multiplier_scale() * domain.kernel_factor(0.0);
    let origin_residual = (origin_multiplier * hg - 1.0).norm();
    let bessel_bound = b_g * h.norm().powi(2);
    let tol = policy.tol;
    let chain_consistent = (hg - cross).norm() <= tol * hg.norm().max(1e-300) + 2.0 * tail
        && quadratic <= bessel_bound * (1.0 + tol);
    let mut notes = Vec::new();
    let density = domain.density();
    let necessity_consistent = if chain_consistent && origin_residual <= tol {
        notes.push("pair behaves as a dual pair on the truncation; necessity requires D ≥ 1".into());
        density >= 1.0 - tol
    } else {
        notes.push("pair is not a verified dual pair; the necessity bound is not engaged".into());
        true
    };
    Ok(DensityDiagnostic {
        density,
        hg,
        cross,
        quadratic,
        bessel_bound,
        origin_multiplier,
        origin_residual,
        wr_floor: wr.sup_residual,
        tail: 2.0 * tail,
        chain_consistent,
        necessity_consistent,
        notes,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PainlessDual {
    pub h: SampledSignal,
    /// b⁻¹ Σ_k |g(t - ak)|² over one period [start, start + a).
    pub symbol: SampledSignal,
    pub symbol_min: f64,
    pub symbol_max: f64,
}

fn grid_multiple(x: f64, step: f64, what: &str) -> Result<usize> {
    let k = x / step;
    if (k - k.round()).abs() > 1e-9 * k.abs().max(1.0) || k.round() < 1.0 {
        return Err(Error::IncompatibleGrids(format!("{what} = {x} is not a multiple of the grid step {step}")));
    }
    Ok(k.round() as usize)
}

/// h(t) = b g(t) / Σ_k |g(t - ak)|² for a window supported on an interval of
/// length at most 1/b; symbol extrema are the frame bounds.
pub fn painless_dual(a: f64, b: f64, g: &SampledSignal) -> Result<PainlessDual> {
    if !(a > 0.0 && b > 0.0) {
        return invalid("lattice parameters must be positive");
    }
    let step = g.grid.step;
    let na = grid_multiple(a, step, "a")?;
    let nz: Vec<usize> = (0..g.samples.len()).filter(|&j| g.samples[j].norm() > 0.0).collect();
    let (Some(&first), Some(&last)) = (nz.first(), nz.last()) else {
        return Err(Error::NotPainless("window vanishes".into()));
    };
    if (last - first) as f64 * step > 1.0 / b + 1e-9 {
        return Err(Error::NotPainless(format!("support length {} exceeds 1/b", (last - first) as f64 * step)));
    }
    let n = g.samples.len();
    let periodized = |j: usize| -> f64 {
        let r = j % na;
        (r..n).step_by(na).map(|i| g.samples[i].norm_sqr()).sum::<f64>() / b
    };
    let period: Vec<f64> = (0..na).map(periodized).collect();
    let symbol_min = period.iter().cloned().fold(f64::INFINITY, f64::min);
    let symbol_max = period.iter().cloned().fold(0.0, f64::max);
    if !(symbol_min > 1e-12 * symbol_max) {
        return Err(Error::NotPainless(format!("symbol minimum {symbol_min:.3e}: coverage gap")));
    }
    let samples = (0..n).map(|j| g.samples[j] / period[j % na]).collect();
    let h = SampledSignal { grid: g.grid, samples };
    let symbol = SampledSignal::from_real(Grid1 { start: g.grid.start, step, len: na }, &period)?;
    Ok(PainlessDual { h, symbol, symbol_min, symbol_max })
}

/// Nodes (ak, bl) covering the grid, with l running over a complete residue
/// set modulo 1/(b·step): on the grid the discretized frame operator of a
/// painless pair is then exactly the multiplication by its symbol.
pub fn painless_nodes(a: f64, b: f64, grid: &Grid1, support: f64) -> Result<WeightedPointSet> {
    if !(a > 0.0 && b > 0.0 && support > 0.0) {
        return invalid("lattice parameters and support must be positive");
    }
    grid_multiple(a, grid.step, "a")?;
    let count = grid_multiple(1.0 / b, grid.step, "1/b")? as i64;
    let k0 = ((grid.start - support) / a).floor() as i64;
    let k1 = ((grid.end() + support) / a).ceil() as i64;
    let half = count / 2;
    let points = (k0..=k1)
        .flat_map(|k| {
            (-half..count - half).map(move |l| WeightedPoint {
                coords: vec![k, l],
                lambda: vec![a * k as f64, b * l as f64],
                internal: 0.0,
                weight: 1.0,
            })
        })
        .collect();
    Ok(WeightedPointSet { points })
}

/// ψ_n-style bump sampled on `grid` (zero outside its window).
pub fn bump_window(bump: &Bump, grid: &Grid1) -> SampledSignal {
    SampledSignal::from_fn(*grid, |t| Complex64::new(bump.value(t), 0.0))
}

/// Separable lattice aZ × bZ.
pub fn painless_lattice(a: f64, b: f64) -> Result<PlainLattice> {
    PlainLattice::separable(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::internal_windows::BumpSpec;
    use crate::modelset::WindowInterval;

    fn fixture() -> (Grid1, SampledSignal, PainlessDual) {
        let grid = Grid1::span(-4.0, 4.0, 1.0 / 64.0).unwrap();
        let bump = Bump::new(BumpSpec::standard(WindowInterval::new(1.0).unwrap())).unwrap();
        let g = bump_window(&bump, &grid);
        let d = painless_dual(0.5, 0.5, &g).unwrap();
        (grid, g, d)
    }

    #[test]
    fn painless_symbol_is_positive_and_dual_is_exact() {
        let (_, g, d) = fixture();
        assert!(d.symbol_min > 0.0 && d.symbol_max >= d.symbol_min);
        // b⁻¹ Σ_k g(t-ak) conj h(t-ak) = 1
        let n = g.samples.len();
        for j in (0..n).step_by(7) {
            let mut s = 0.0;
            let mut i = j % 32;
            while i < n {
                s += (g.samples[i] * d.h.samples[i].conj()).re;
                i += 32;
            }
            assert!((s / 0.5 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coverage_gap_is_rejected() {
        let grid = Grid1::span(-4.0, 4.0, 1.0 / 64.0).unwrap();
        let g = SampledSignal::from_fn(grid, |t| Complex64::new(if t.abs() < 0.2 { 1.0 } else { 0.0 }, 0.0));
        assert!(matches!(painless_dual(0.5, 0.5, &g), Err(Error::NotPainless(_))));
    }

    #[test]
    fn residue_complete_nodes() {
        let grid = Grid1::span(-1.0, 1.0, 1.0 / 64.0).unwrap();
        let set = painless_nodes(0.5, 0.5, &grid, 1.0).unwrap();
        let freqs: Vec<f64> = set.points.iter().filter(|p| p.coords[0] == 0).map(|p| p.lambda[1]).collect();
        assert_eq!(freqs.len(), 128);
        assert_eq!(freqs[0], -32.0);
        assert_eq!(*freqs.last().unwrap(), 31.5);
    }

    #[test]
    fn critical_gaussian_wexler_raz() {
        let domain = Domain::Lattice(PlainLattice::scaled_integer(1.0).unwrap());
        let g = vec![Signal::Analytic(AnalyticWindow::g0())];
        let r = wexler_raz_residuals(&domain, &g, &g, &SeriesPolicy::new(4.0, 2.0, 1e-8)).unwrap();
        let origin = r.residuals.iter().find(|x| x.origin).unwrap();
        assert!(origin.residual < 1e-12);
        let off = r.residuals.iter().find(|x| x.freq == PhasePoint::new(1.0, 0.0)).unwrap();
        assert!((off.residual - (-std::f64::consts::PI / 2.0).exp()).abs() < 1e-12);
    }
}
