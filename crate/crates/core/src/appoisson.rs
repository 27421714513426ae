//! Almost periodic series and Poisson summation over lattices and model sets:
//! PSF verifiers, ψ-bracket products, Bohr means and the N-function series.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cutproject::PlainLattice;
use crate::error::{invalid, Error, Result};
use crate::internal_windows::{block_tail, psi_n_hat_envelope, Bump, DecayKernel, KernelKind, WienerProfile, DEFAULT_K_MAX};
use crate::modelset::{enumerate_model_set, ModelSetSpec};
use crate::report::VerificationReport;
use crate::tf_core::{ambiguity_analytic, wigner_analytic, AnalyticWindow, PhasePoint};

/// Frequencies closer than this in every coordinate are merged.
const MERGE_TOL: f64 = 1e-12;
/// Width of the shell used to estimate truncation tails.
pub(crate) const SHELL: f64 = 2.0;
/// Smallest admissible half side of a Bohr box.
const MIN_BOHR_RADIUS: f64 = 16.0;

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

pub(crate) fn sup_norm(p: PhasePoint) -> f64 {
    p.x.abs().max(p.w.abs())
}

fn sinc(x: f64) -> f64 {
    crate::internal_windows::sinc(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct APTerm {
    pub freq: PhasePoint,
    pub coef: Complex64,
}

/// Σ coef · e^(-2πi freq·z) over a finite frequency set.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct APSeries {
    terms: Vec<APTerm>,
    pub note: String,
    pub tail: f64,
}

impl APSeries {
    /// Sorts the terms and merges coinciding frequencies.
    pub fn new(mut terms: Vec<APTerm>, note: impl Into<String>, tail: f64) -> Self {
        terms.sort_by(|a, b| a.freq.x.total_cmp(&b.freq.x).then(a.freq.w.total_cmp(&b.freq.w)));
        let mut merged: Vec<APTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            let mut hit = None;
            for (i, m) in merged.iter().enumerate().rev() {
                if t.freq.x - m.freq.x > MERGE_TOL {
                    break;
                }
                if (t.freq.w - m.freq.w).abs() <= MERGE_TOL {
                    hit = Some(i);
                    break;
                }
            }
            match hit {
                Some(i) => merged[i].coef += t.coef,
                None => merged.push(t),
            }
        }
        Self { terms: merged, note: note.into(), tail }
    }

    pub fn terms(&self) -> &[APTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: PhasePoint) -> Complex64 {
        self.terms.iter().map(|t| t.coef * cis(-2.0 * PI * t.freq.dot(&z))).sum()
    }

    pub fn eval_many(&self, zs: &[PhasePoint]) -> Vec<Complex64> {
        zs.par_iter().map(|&z| self.eval(z)).collect()
    }

    /// Stored coefficient at `freq`, zero if absent.
    pub fn coefficient(&self, freq: PhasePoint) -> Complex64 {
        self.terms
            .iter()
            .find(|t| (t.freq.x - freq.x).abs() <= MERGE_TOL && (t.freq.w - freq.w).abs() <= MERGE_TOL)
            .map_or(Complex64::new(0.0, 0.0), |t| t.coef)
    }

    /// Mean of series · e^(2πi freq·z) over [-R, R]², exact per term.
    pub fn box_mean(&self, freq: PhasePoint, r: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coef * sinc(2.0 * r * (t.freq.x - freq.x)) * sinc(2.0 * r * (t.freq.w - freq.w)))
            .sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let terms = self.terms.iter().map(|t| APTerm { freq: t.freq, coef: c * t.coef }).collect();
        Self { terms, note: self.note.clone(), tail: c.norm() * self.tail }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(terms, format!("{} + {}", self.note, other.note), self.tail + other.tail)
    }

    /// Largest |freq - centre|∞ over terms above `rel` of the largest coefficient.
    pub fn significant_bandwidth(&self, centre: PhasePoint, rel: f64) -> f64 {
        let top = self.terms.iter().map(|t| t.coef.norm()).fold(0.0, f64::max);
        self.terms
            .iter()
            .filter(|t| t.coef.norm() > rel * top)
            .map(|t| sup_norm(t.freq - centre))
            .fold(0.0, f64::max)
    }
}

/// Input of [`bohr_mean`]: a series (exact box means) or a sampled callable.
pub enum BohrSource<'a> {
    Series(&'a APSeries),
    Function { f: &'a (dyn Fn(PhasePoint) -> Complex64 + Sync), max_freq: f64 },
}

fn check_bohr_box(r: f64, step: f64, bandwidth: f64) -> Result<usize> {
    if !(r >= MIN_BOHR_RADIUS) {
        return invalid(format!("Bohr box half side must be at least {MIN_BOHR_RADIUS}"));
    }
    if !(step > 0.0) {
        return invalid("sampling step must be positive");
    }
    if !(step * bandwidth < 0.5) {
        return Err(Error::QuadratureUnderResolved(format!(
            "step {step} aliases relative frequency {bandwidth}"
        )));
    }
    Ok((r / step).round() as usize)
}

/// Average of fn(z)·e^(2πi freq·z) over the centred box of half side `r`.
/// Series are averaged analytically; callables on the midpoint grid of `step`.
pub fn bohr_mean(src: BohrSource<'_>, freq: PhasePoint, r: f64, step: f64) -> Result<Complex64> {
    match src {
        BohrSource::Series(s) => {
            check_bohr_box(r, step, 0.0)?;
            Ok(s.box_mean(freq, r))
        }
        BohrSource::Function { f, max_freq } => {
            let k = check_bohr_box(r, step, max_freq + sup_norm(freq))?;
            let h = r / k as f64;
            let xs: Vec<f64> = (0..2 * k).map(|i| -r + (i as f64 + 0.5) * h).collect();
            let rows: Vec<Complex64> = xs
                .par_iter()
                .map(|&x| {
                    xs.iter()
                        .map(|&w| {
                            let z = PhasePoint::new(x, w);
                            f(z) * cis(2.0 * PI * freq.dot(&z))
                        })
                        .sum()
                })
                .collect();
            Ok(rows.iter().sum::<Complex64>() / (4 * k * k) as f64)
        }
    }
}

/// Midpoint-grid box average of a series, computed axis by axis. Identical to
/// sampling the series on the 2D grid, at linear cost in the grid side.
pub fn bohr_mean_sampled(series: &APSeries, freq: PhasePoint, r: f64, step: f64) -> Result<Complex64> {
    let k = check_bohr_box(r, step, series.significant_bandwidth(freq, 1e-14))?;
    let h = r / k as f64;
    let axis = |delta: f64| -> Complex64 {
        (0..2 * k)
            .map(|i| cis(-2.0 * PI * delta * (-r + (i as f64 + 0.5) * h)))
            .sum::<Complex64>()
            / (2 * k) as f64
    };
    let parts: Vec<Complex64> = series
        .terms()
        .par_iter()
        .map(|t| t.coef * axis(t.freq.x - freq.x) * axis(t.freq.w - freq.w))
        .collect();
    Ok(parts.iter().sum())
}

/// F(u) = amp · e^(-π|u|²/s²), F̂(ξ) = amp · s² e^(-π s²|ξ|²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2D {
    pub amp: f64,
    pub width: f64,
}

impl Gaussian2D {
    pub fn new(amp: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !amp.is_finite() {
            return invalid("Gaussian needs a finite amplitude and a positive width");
        }
        Ok(Self { amp, width })
    }

    pub fn value(&self, u: PhasePoint) -> f64 {
        self.amp * (-PI * u.dot(&u) / (self.width * self.width)).exp()
    }

    pub fn hat(&self, xi: PhasePoint) -> f64 {
        let s2 = self.width * self.width;
        self.amp * s2 * (-PI * s2 * xi.dot(&xi)).exp()
    }
}

/// Test functions on the phase plane with closed-form Fourier transforms.
#[derive(Clone, Debug)]
pub enum PsfFunction {
    Gaussian(Gaussian2D),
    /// F = A(f, g), F̂ = W(f̂, ĝ).
    Ambiguity { f: AnalyticWindow, g: AnalyticWindow },
}

impl PsfFunction {
    pub fn value(&self, u: PhasePoint) -> Complex64 {
        match self {
            Self::Gaussian(gs) => Complex64::new(gs.value(u), 0.0),
            Self::Ambiguity { f, g } => ambiguity_analytic(f, g, u),
        }
    }

    pub fn hat(&self, xi: PhasePoint) -> Complex64 {
        match self {
            Self::Gaussian(gs) => Complex64::new(gs.hat(xi), 0.0),
            Self::Ambiguity { f, g } => ambiguity_hat(f, g, xi),
        }
    }

    pub fn scale_by(&self, c: f64) -> Self {
        match self {
            Self::Gaussian(gs) => Self::Gaussian(Gaussian2D { amp: c * gs.amp, width: gs.width }),
            Self::Ambiguity { f, g } => {
                Self::Ambiguity { f: f.scale(Complex64::new(c, 0.0)), g: g.clone() }
            }
        }
    }
}

/// 2D Fourier transform of A(f, g): W(f̂, ĝ).
pub fn ambiguity_hat(f: &AnalyticWindow, g: &AnalyticWindow, xi: PhasePoint) -> Complex64 {
    wigner_analytic(&f.fourier(), &g.fourier(), xi)
}

/// Truncation of a primal/dual pair of sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolicy {
    /// Sup-norm radius of the primal node box (around the evaluation point).
    pub radius: f64,
    /// Sup-norm radius of the physical dual box.
    pub dual_radius: f64,
    /// |p2*| cutoff; chosen from `tol` when absent (required for unweighted sets).
    pub internal_cutoff: Option<f64>,
    pub tol: f64,
}

impl SeriesPolicy {
    pub fn new(radius: f64, dual_radius: f64, tol: f64) -> Self {
        Self { radius, dual_radius, internal_cutoff: None, tol }
    }

    pub fn with_cutoff(mut self, t: f64) -> Self {
        self.internal_cutoff = Some(t);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.dual_radius > 0.0 && self.tol > 0.0) {
            return invalid("policy radii and tolerance must be positive");
        }
        if let Some(t) = self.internal_cutoff {
            if !(t > 0.0) {
                return invalid("internal cutoff must be positive");
            }
        }
        Ok(())
    }
}

fn require_planar(spec: &ModelSetSpec) -> Result<()> {
    if spec.scheme.d() != 1 {
        return invalid("phase-space series are implemented for d = 1");
    }
    Ok(())
}

fn shift_parts(spec: &ModelSetSpec) -> (PhasePoint, f64) {
    match &spec.shift {
        Some(s) => (PhasePoint::from_slice(&s.s), s.t),
        None => (PhasePoint::ORIGIN, 0.0),
    }
}

#[derive(Clone, Debug)]
struct DualPoint {
    p1: PhasePoint,
    p2: f64,
}

fn model_dual_points(spec: &ModelSetSpec, centre: PhasePoint, radius: f64, cutoff: f64) -> Result<Vec<DualPoint>> {
    let dual = spec.scheme.dual();
    let raw = dual.enumerate_slab(&[centre.x, centre.w], radius, -cutoff, cutoff)?;
    Ok(raw.into_iter().map(|p| DualPoint { p1: PhasePoint::new(p.point[0], p.point[1]), p2: p.point[2] }).collect())
}

fn in_shell(p: PhasePoint, centre: PhasePoint, radius: f64) -> bool {
    sup_norm(p - centre) > radius
}

/// ∫_{|t|>T} of the ψ̂_n envelope.
fn psi_hat_envelope_tail(bump: &Bump, t: f64) -> f64 {
    let e = |s: f64| psi_n_hat_envelope(bump.spec(), s);
    2.0 * (e(t) + block_tail(t.max(1.0), e))
}

/// ∫ |h| over the box of half side `radius` around `centre`, midpoint rule.
pub(crate) fn abs_integral(h: &(dyn Fn(PhasePoint) -> f64 + Sync), centre: PhasePoint, radius: f64, step: f64) -> f64 {
    let k = (radius / step).ceil() as usize;
    let dx = radius / k as f64;
    let rows: Vec<f64> = (0..2 * k)
        .into_par_iter()
        .map(|i| {
            let x = centre.x - radius + (i as f64 + 0.5) * dx;
            (0..2 * k)
                .map(|j| h(PhasePoint::new(x, centre.w - radius + (j as f64 + 0.5) * dx)))
                .sum::<f64>()
        })
        .collect();
    rows.iter().sum::<f64>() * dx * dx
}

/// Smallest internal cutoff on a doubling ladder with `tail(T)` ≤ target.
fn auto_cutoff(target: f64, tail: impl Fn(f64) -> f64) -> Result<f64> {
    let mut t = 2.0;
    while t <= 1e6 {
        if tail(t) <= target {
            return Ok(t);
        }
        t *= 1.25;
    }
    Err(Error::NonSummableTail)
}

/// Σ_{λ∈Λ} F(λ)e^(-2πiλ·z) = vol(Λ)^-1 Σ_{λ*∈Λ*} F̂(z - λ*).
pub fn psf_lattice_verify(
    lattice: &PlainLattice,
    func: &PsfFunction,
    z: PhasePoint,
    policy: &SeriesPolicy,
) -> Result<VerificationReport> {
    policy.validate()?;
    if lattice.d() != 1 {
        return invalid("phase-space series are implemented for d = 1");
    }
    let primal = lattice.enumerate_around(&[0.0, 0.0], policy.radius + SHELL)?;
    let (mut lhs, mut lhs_tail, mut n_lhs) = (Complex64::new(0.0, 0.0), 0.0, 0);
    for p in &primal {
        let l = PhasePoint::from_slice(&p.point);
        let term = func.value(l) * cis(-2.0 * PI * l.dot(&z));
        if in_shell(l, PhasePoint::ORIGIN, policy.radius) {
            lhs_tail += term.norm();
        } else {
            lhs += term;
            n_lhs += 1;
        }
    }
    let dual = lattice.dual().enumerate_around(&[z.x, z.w], policy.dual_radius + SHELL)?;
    let inv = 1.0 / lattice.volume();
    let (mut rhs, mut rhs_tail, mut n_rhs) = (Complex64::new(0.0, 0.0), 0.0, 0);
    for p in &dual {
        let l = PhasePoint::from_slice(&p.point);
        let term = inv * func.hat(z - l);
        if in_shell(l, z, policy.dual_radius) {
            rhs_tail += term.norm();
        } else {
            rhs += term;
            n_rhs += 1;
        }
    }
    Ok(VerificationReport::new(
        "psf_lattice",
        lhs,
        rhs,
        [2.0 * lhs_tail, 2.0 * rhs_tail],
        policy.tol,
        [n_lhs, n_rhs],
        json!({ "z": z, "radius": policy.radius, "dual_radius": policy.dual_radius, "shell": SHELL }),
    ))
}

/// Primal side Σ_λ w_ψ(λ) F(λ) e^(-2πiλ·z) with its shell tail.
fn modelset_primal(
    spec: &ModelSetSpec,
    bump: &Bump,
    value: &(dyn Fn(PhasePoint) -> Complex64 + Sync),
    z: PhasePoint,
    centre: PhasePoint,
    radius: f64,
) -> Result<(Complex64, f64, usize)> {
    let pts = enumerate_model_set(spec, sup_norm(centre) + radius + SHELL, Some(bump))?;
    let terms: Vec<(bool, Complex64)> = pts
        .points
        .par_iter()
        .filter(|p| sup_norm(PhasePoint::from_slice(&p.lambda) - centre) <= radius + SHELL && p.weight != 0.0)
        .map(|p| {
            let l = PhasePoint::from_slice(&p.lambda);
            (in_shell(l, centre, radius), p.weight * value(l) * cis(-2.0 * PI * l.dot(&z)))
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    let (mut tail, mut n) = (0.0, 0);
    for (shell, t) in terms {
        if shell {
            tail += t.norm();
        } else {
            sum += t;
            n += 1;
        }
    }
    Ok((sum, 2.0 * tail, n))
}

/// Dual side Σ_{γ*} vol(Γ)^-1 e^(-2πi(s·p1*+t p2*)) ψ̂(-p2*) F̂(z - p1*) with
/// physical-shell and internal-cutoff tails.
fn modelset_dual(
    spec: &ModelSetSpec,
    bump: &Bump,
    hat: &(dyn Fn(PhasePoint) -> Complex64 + Sync),
    z: PhasePoint,
    policy: &SeriesPolicy,
) -> Result<(Complex64, [f64; 2], usize, f64)> {
    let vol = spec.scheme.volume();
    let (s, t) = shift_parts(spec);
    let box_r = policy.dual_radius + SHELL;
    let hat_l1 = abs_integral(&|xi| hat(xi).norm(), PhasePoint::ORIGIN, box_r + sup_norm(z), 1.0 / 16.0);
    let cutoff = match policy.internal_cutoff {
        Some(c) => c,
        None => auto_cutoff(0.05 * policy.tol, |c| 2.0 * hat_l1 * psi_hat_envelope_tail(bump, c))?,
    };
    let internal_tail = 2.0 * hat_l1 * psi_hat_envelope_tail(bump, cutoff);
    let pts = model_dual_points(spec, z, box_r, cutoff)?;
    let terms: Vec<(bool, Complex64)> = pts
        .par_iter()
        .map(|p| {
            let phase = cis(-2.0 * PI * (s.dot(&p.p1) + t * p.p2));
            let term = phase * bump.hat(-p.p2) / vol * hat(z - p.p1);
            (in_shell(p.p1, z, policy.dual_radius), term)
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    let (mut shell_tail, mut n) = (0.0, 0);
    for (shell, term) in terms {
        if shell {
            shell_tail += term.norm();
        } else {
            sum += term;
            n += 1;
        }
    }
    Ok((sum, [2.0 * shell_tail, internal_tail], n, cutoff))
}

/// Σ_{λ∈Λ(Ω)} w_ψ(λ)F(λ)e^(-2πiλ·z) = Σ_{γ*} w̃_ψ(-p2*(γ*)) F̂(z - p1*(γ*)).
pub fn psf_modelset_verify(
    spec: &ModelSetSpec,
    bump: &Bump,
    func: &PsfFunction,
    z: PhasePoint,
    policy: &SeriesPolicy,
) -> Result<VerificationReport> {
    policy.validate()?;
    require_planar(spec)?;
    let value = |u: PhasePoint| func.value(u);
    let hat = |xi: PhasePoint| func.hat(xi);
    let (lhs, lhs_tail, n_lhs) = modelset_primal(spec, bump, &value, z, PhasePoint::ORIGIN, policy.radius)?;
    let (rhs, [shell, internal], n_rhs, cutoff) = modelset_dual(spec, bump, &hat, z, policy)?;
    Ok(VerificationReport::new(
        "psf_modelset",
        lhs,
        rhs,
        [lhs_tail, shell + internal],
        policy.tol,
        [n_lhs, n_rhs],
        json!({
            "z": z, "radius": policy.radius, "dual_radius": policy.dual_radius,
            "internal_cutoff": cutoff, "internal_tail": internal, "dual_shell_tail": shell,
            "bump_n": bump.spec().n,
        }),
    ))
}

/// Primal ψ-bracket [f, g]_ψ(z, ·) = Σ_λ w_ψ(λ) A(f,g)(λ - z) e^(-2πiλ·z̃) as a
/// series in z̃, over nodes within `policy.radius` of z.
pub fn bracket_series(
    f: &AnalyticWindow,
    g: &AnalyticWindow,
    bump: &Bump,
    spec: &ModelSetSpec,
    z: PhasePoint,
    policy: &SeriesPolicy,
) -> Result<APSeries> {
    policy.validate()?;
    require_planar(spec)?;
    let pts = enumerate_model_set(spec, sup_norm(z) + policy.radius + SHELL, Some(bump))?;
    let terms: Vec<(bool, APTerm)> = pts
        .points
        .par_iter()
        .filter(|p| p.weight != 0.0)
        .map(|p| {
            let l = PhasePoint::from_slice(&p.lambda);
            let coef = p.weight * ambiguity_analytic(f, g, l - z);
            (in_shell(l, z, policy.radius), APTerm { freq: l, coef })
        })
        .filter(|(_, t)| sup_norm(t.freq - z) <= policy.radius + SHELL)
        .collect();
    let tail = 2.0 * terms.iter().filter(|(s, _)| *s).map(|(_, t)| t.coef.norm()).sum::<f64>();
    let kept: Vec<APTerm> = terms.into_iter().filter(|(s, _)| !*s).map(|(_, t)| t).collect();
    let note = format!("nodes of the model set with |λ - z|∞ ≤ {} around z = ({}, {})", policy.radius, z.x, z.w);
    Ok(APSeries::new(kept, note, tail))
}

/// Dual form of the bracket at z̃:
/// Σ_{γ*} w̃_ψ(-p2*) e^(-2πi z·(z̃ - p1*)) W(f̂, ĝ)(z̃ - p1*). Returns value and tail.
pub fn bracket_dual_eval(
    f: &AnalyticWindow,
    g: &AnalyticWindow,
    bump: &Bump,
    spec: &ModelSetSpec,
    z: PhasePoint,
    zt: PhasePoint,
    policy: &SeriesPolicy,
) -> Result<(Complex64, f64)> {
    policy.validate()?;
    require_planar(spec)?;
    let (fh, gh) = (f.fourier(), g.fourier());
    let hat = |xi: PhasePoint| cis(-2.0 * PI * z.dot(&xi)) * wigner_analytic(&fh, &gh, xi);
    let (v, tails, _, _) = modelset_dual(spec, bump, &hat, zt, policy)?;
    Ok((v, tails[0] + tails[1]))
}

/// Node set and weights of an N-function.
#[derive(Clone, Debug)]
pub enum Domain {
    Lattice(PlainLattice),
    /// Node weight and dual multiplier follow the kernel:
    /// ψ²̂ → (ψ_n, vol⁻¹ψ²̂), Φ_n → (|Ω|ψ_n, D·Φ_n), Φ → (1_Ω, D·Φ).
    ModelSet { spec: ModelSetSpec, kernel: DecayKernel },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainNode {
    pub z: PhasePoint,
    pub weight: f64,
}

/// One Fourier mode of a lattice or model-set operator series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualMode {
    /// β* or p1*(η).
    pub freq: PhasePoint,
    /// p2*(η); zero for lattices.
    pub internal: f64,
    /// vol⁻¹ (lattice) or the kernel multiplier, including the shift phase.
    pub multiplier: Complex64,
    pub origin: bool,
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Lattice(l) if l.d() != 1 => invalid("phase-space series are implemented for d = 1"),
            Self::ModelSet { spec, kernel } => {
                require_planar(spec)?;
                if (kernel.omega().half_width() - spec.window.half_width()).abs() > 1e-12 * spec.window.half_width() {
                    return invalid("kernel window differs from the model-set window");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn density(&self) -> f64 {
        match self {
            Self::Lattice(l) => 1.0 / l.volume(),
            Self::ModelSet { spec, .. } => spec.density(),
        }
    }

    /// w(λ) for a node with internal value `internal`.
    pub fn node_weight(&self, internal: f64) -> f64 {
        match self {
            Self::Lattice(_) => 1.0,
            Self::ModelSet { kernel, .. } => match (kernel.kind(), kernel.bump()) {
                (KernelKind::PhiLimit, _) => 1.0,
                (KernelKind::PhiN { .. }, Some(b)) => kernel.omega().measure() * b.value(internal),
                (KernelKind::PsiHatSquared { .. }, Some(b)) => b.value(internal),
                _ => unreachable!("bump-backed kernels carry their bump"),
            },
        }
    }

    /// Weighted nodes with |λ - centre|∞ ≤ radius; zero weights dropped.
    pub fn nodes(&self, centre: PhasePoint, radius: f64) -> Result<Vec<DomainNode>> {
        let out = match self {
            Self::Lattice(l) => l
                .enumerate_around(&[centre.x, centre.w], radius)?
                .into_iter()
                .map(|p| DomainNode { z: PhasePoint::from_slice(&p.point), weight: 1.0 })
                .collect(),
            Self::ModelSet { spec, .. } => enumerate_model_set(spec, sup_norm(centre) + radius, None)?
                .points
                .into_iter()
                .map(|p| DomainNode { z: PhasePoint::from_slice(&p.lambda), weight: self.node_weight(p.internal) })
                .filter(|n| n.weight != 0.0 && sup_norm(n.z - centre) <= radius)
                .collect(),
        };
        Ok(out)
    }

    pub(crate) fn multiplier_scale(&self) -> f64 {
        match self {
            Self::Lattice(l) => 1.0 / l.volume(),
            Self::ModelSet { spec, kernel } => match kernel.kind() {
                KernelKind::PsiHatSquared { .. } => 1.0 / spec.scheme.volume(),
                _ => spec.density(),
            },
        }
    }

    /// Kernel value at -internal (1 on lattices).
    pub fn kernel_factor(&self, internal: f64) -> f64 {
        match self {
            Self::Lattice(_) => 1.0,
            Self::ModelSet { kernel, .. } => kernel.eval(-internal),
        }
    }

    /// Non-increasing bound of |kernel_factor| beyond |internal|.
    pub fn kernel_bound(&self, internal: f64) -> f64 {
        match self {
            Self::Lattice(_) => 1.0,
            Self::ModelSet { kernel, .. } => kernel.envelope(internal.abs()),
        }
    }

    /// Modes as in `dual_modes` with the multiplier lacking its kernel factor.
    pub fn dual_points(&self, centre: PhasePoint, radius: f64, cutoff: f64) -> Result<Vec<DualMode>> {
        let scale = self.multiplier_scale();
        match self {
            Self::Lattice(l) => Ok(l
                .dual()
                .enumerate_around(&[centre.x, centre.w], radius)?
                .into_iter()
                .map(|p| DualMode {
                    freq: PhasePoint::from_slice(&p.point),
                    internal: 0.0,
                    multiplier: Complex64::new(scale, 0.0),
                    origin: p.is_origin(),
                })
                .collect()),
            Self::ModelSet { spec, .. } => {
                let (s, t) = shift_parts(spec);
                let raw = spec.scheme.dual().enumerate_slab(&[centre.x, centre.w], radius, -cutoff, cutoff)?;
                Ok(raw
                    .iter()
                    .map(|p| {
                        let freq = PhasePoint::new(p.point[0], p.point[1]);
                        let internal = p.point[2];
                        DualMode {
                            freq,
                            internal,
                            multiplier: cis(2.0 * PI * (s.dot(&freq) + t * internal)) * scale,
                            origin: p.is_origin(),
                        }
                    })
                    .collect())
            }
        }
    }

    /// Fourier modes with |freq - centre|∞ ≤ radius and |internal| ≤ cutoff.
    pub fn dual_modes(&self, centre: PhasePoint, radius: f64, cutoff: f64) -> Result<Vec<DualMode>> {
        let mut modes = self.dual_points(centre, radius, cutoff)?;
        if let Self::ModelSet { .. } = self {
            modes.par_iter_mut().for_each(|m| m.multiplier *= self.kernel_factor(m.internal));
        }
        Ok(modes)
    }

    /// Bound on Σ over |internal| > T of |kernel multiplier| per unit of
    /// ∫|window factor|; infinite for the unweighted limit kernel.
    pub fn internal_tail_factor(&self, profile: Option<&WienerProfile>, cutoff: f64) -> f64 {
        match self {
            Self::Lattice(_) => 0.0,
            Self::ModelSet { spec, kernel } => {
                if !kernel.summable() {
                    return f64::INFINITY;
                }
                let tail = match profile {
                    Some(p) => p.tail(cutoff).value,
                    None => WienerProfile::new(kernel, DEFAULT_K_MAX).tail(cutoff).value,
                };
                // mode density in (p1*, p2*) is vol(Γ)
                self.multiplier_scale() * spec.scheme.volume() * tail
            }
        }
    }
}

/// Window factor ⟨π(Jν)f1, f2⟩ Σ_i ⟨h_i, π(Jν)g_i⟩ of the mode ν.
pub fn window_factor(
    g: &[AnalyticWindow],
    h: &[AnalyticWindow],
    f1: &AnalyticWindow,
    f2: &AnalyticWindow,
    nu: PhasePoint,
) -> Complex64 {
    let jn = nu.rotate_j();
    let a = f1.tf_shift(jn).inner(f2);
    let b: Complex64 = g.iter().zip(h).map(|(gi, hi)| hi.inner(&gi.tf_shift(jn))).sum();
    a * b
}

fn check_windows(g: &[AnalyticWindow], h: &[AnalyticWindow]) -> Result<()> {
    if g.is_empty() || g.len() != h.len() {
        return invalid("window lists must be non-empty and of equal length");
    }
    Ok(())
}

/// Fourier series of N(z) = Σ_i Σ_λ w(λ)² ⟨π(z)f1, π(λ)g_i⟩⟨π(λ)h_i, π(z)f2⟩.
pub fn n_series(
    domain: &Domain,
    g: &[AnalyticWindow],
    h: &[AnalyticWindow],
    f1: &AnalyticWindow,
    f2: &AnalyticWindow,
    policy: &SeriesPolicy,
) -> Result<APSeries> {
    policy.validate()?;
    domain.validate()?;
    check_windows(g, h)?;
    let factor = |nu: PhasePoint| window_factor(g, h, f1, f2, nu);
    let box_r = policy.dual_radius + SHELL;
    let mut notes = Vec::new();
    let (cutoff, internal_tail) = match domain {
        Domain::Lattice(_) => (0.0, 0.0),
        Domain::ModelSet { kernel, .. } => {
            let l1 = abs_integral(&|nu| factor(nu).norm(), PhasePoint::ORIGIN, box_r, 1.0 / 8.0);
            if kernel.summable() {
                let profile = WienerProfile::new(kernel, DEFAULT_K_MAX);
                let cutoff = match policy.internal_cutoff {
                    Some(c) => c,
                    None => auto_cutoff(0.05 * policy.tol, |c| l1 * domain.internal_tail_factor(Some(&profile), c))?,
                };
                (cutoff, l1 * domain.internal_tail_factor(Some(&profile), cutoff))
            } else {
                let Some(c) = policy.internal_cutoff else {
                    return Err(Error::NonSummableTail);
                };
                notes.push("conditionally truncated: the limit kernel is not absolutely summable".to_string());
                (c, f64::INFINITY)
            }
        }
    };
    let modes = domain.dual_modes(PhasePoint::ORIGIN, box_r, cutoff)?;
    let terms: Vec<(bool, APTerm)> = modes
        .par_iter()
        .map(|m| (in_shell(m.freq, PhasePoint::ORIGIN, policy.dual_radius), APTerm { freq: m.freq, coef: m.multiplier * factor(m.freq) }))
        .collect();
    let shell_tail = 2.0 * terms.iter().filter(|(s, _)| *s).map(|(_, t)| t.coef.norm()).sum::<f64>();
    let kept: Vec<APTerm> = terms.into_iter().filter(|(s, _)| !*s).map(|(_, t)| t).collect();
    notes.insert(
        0,
        format!(
            "modes with |freq|∞ ≤ {} and |internal| ≤ {cutoff}; physical tail {shell_tail:.3e}, internal tail {internal_tail:.3e}",
            policy.dual_radius
        ),
    );
    Ok(APSeries::new(kept, notes.join("; "), shell_tail + internal_tail))
}

/// N(z) by the direct node sum, with its shell tail.
pub fn n_direct(
    domain: &Domain,
    g: &[AnalyticWindow],
    h: &[AnalyticWindow],
    f1: &AnalyticWindow,
    f2: &AnalyticWindow,
    z: PhasePoint,
    radius: f64,
) -> Result<(Complex64, f64)> {
    domain.validate()?;
    check_windows(g, h)?;
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    let (a, b) = (f1.tf_shift(z), f2.tf_shift(z));
    let nodes = domain.nodes(z, radius + SHELL)?;
    let terms: Vec<(bool, Complex64)> = nodes
        .par_iter()
        .map(|n| {
            let s: Complex64 = g
                .iter()
                .zip(h)
                .map(|(gi, hi)| a.inner(&gi.tf_shift(n.z)) * hi.tf_shift(n.z).inner(&b))
                .sum();
            (in_shell(n.z, z, radius), n.weight * n.weight * s)
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut tail = 0.0;
    for (shell, t) in terms {
        if shell {
            tail += t.norm();
        } else {
            sum += t;
        }
    }
    Ok((sum, 2.0 * tail))
}

/// Truncation of the F-function smoke check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FCheckPolicy {
    /// |p1(γ)|∞ bound for the difference vectors γ ∈ Γ.
    pub gamma_radius: f64,
    /// |p1*(η)|∞ bound for the modes η ∈ Γ*.
    pub eta_radius: f64,
    /// |p2*(η)| bound.
    pub eta_cutoff: f64,
    /// Half side and step of the phase-plane quadrature grid.
    pub grid_half_width: f64,
    pub grid_step: f64,
    /// Node radius of the bracket evaluations.
    pub bracket_radius: f64,
    pub rel_tol: f64,
}

impl Default for FCheckPolicy {
    fn default() -> Self {
        Self {
            gamma_radius: 3.0,
            eta_radius: 3.0,
            eta_cutoff: 8.0,
            grid_half_width: 5.0,
            grid_step: 0.125,
            bracket_radius: 8.0,
            rel_tol: 5e-2,
        }
    }
}

/// F(z, z̃) = [f1, g]_ψ · conj [f2, h]_ψ against its truncated double series
/// vol(Γ)^-1 Σ_γ Σ_η P(p2γ, p2*η) Q(p1γ, p1*η) e^(-2πi p1γ·z̃) e^(-2πi p1*η·z),
/// with P(a, ζ) = ∫ψ(y+a)ψ(y)e^(-2πiyζ)dy and Q(u, ξ) = ∫A1(x+u) conj A2(x) e^(-2πix·ξ)dx.
/// A coarse check: one report per sample, verdict on `rel_tol`.
#[allow(clippy::too_many_arguments)]
pub fn f_function_check(
    spec: &ModelSetSpec,
    bump: &Bump,
    f1: &AnalyticWindow,
    f2: &AnalyticWindow,
    g: &AnalyticWindow,
    h: &AnalyticWindow,
    samples: &[(PhasePoint, PhasePoint)],
    policy: &FCheckPolicy,
) -> Result<Vec<VerificationReport>> {
    require_planar(spec)?;
    if spec.shift.is_some() {
        return invalid("the F-function check expects an unshifted model set");
    }
    let w = spec.window.half_width();
    let gammas: Vec<(PhasePoint, f64)> = spec
        .scheme
        .enumerate_slab(&[0.0, 0.0], policy.gamma_radius, -2.0 * w, 2.0 * w)?
        .into_iter()
        .map(|p| (PhasePoint::new(p.point[0], p.point[1]), p.point[2]))
        .collect();
    let etas: Vec<(PhasePoint, f64)> = spec
        .scheme
        .dual()
        .enumerate_slab(&[0.0, 0.0], policy.eta_radius, -policy.eta_cutoff, policy.eta_cutoff)?
        .into_iter()
        .map(|p| (PhasePoint::new(p.point[0], p.point[1]), p.point[2]))
        .collect();
    let coeffs = f_coefficients(bump, f1, f2, g, h, &gammas, &etas, policy)?;
    let vol = spec.scheme.volume();
    let sp = SeriesPolicy::new(policy.bracket_radius, policy.eta_radius, 1.0);
    let mut out = Vec::with_capacity(samples.len());
    for &(z, zt) in samples {
        let b1 = bracket_series(f1, g, bump, spec, z, &sp)?;
        let b2 = bracket_series(f2, h, bump, spec, z, &sp)?;
        let lhs = b1.eval(zt) * b2.eval(zt).conj();
        let mut rhs = Complex64::new(0.0, 0.0);
        for (i, (u, _)) in gammas.iter().enumerate() {
            let pg = cis(-2.0 * PI * u.dot(&zt));
            for (j, (xi, _)) in etas.iter().enumerate() {
                rhs += coeffs[i * etas.len() + j] * pg * cis(-2.0 * PI * xi.dot(&z));
            }
        }
        rhs /= vol;
        let tol = policy.rel_tol * lhs.norm().max(rhs.norm());
        out.push(VerificationReport::new(
            "f_function",
            lhs,
            rhs,
            [b1.tail * b2.eval(zt).norm() + b2.tail * b1.eval(zt).norm(), 0.0],
            tol,
            [gammas.len(), etas.len()],
            json!({ "z": z, "z_tilde": zt, "policy": policy }),
        ));
    }
    Ok(out)
}

/// P(a, ζ) · Q(u, ξ) for all pairs, row-major in (γ, η).
#[allow(clippy::too_many_arguments)]
fn f_coefficients(
    bump: &Bump,
    f1: &AnalyticWindow,
    f2: &AnalyticWindow,
    g: &AnalyticWindow,
    h: &AnalyticWindow,
    gammas: &[(PhasePoint, f64)],
    etas: &[(PhasePoint, f64)],
    policy: &FCheckPolicy,
) -> Result<Vec<Complex64>> {
    if !(policy.grid_step > 0.0 && policy.grid_half_width > 0.0) {
        return invalid("quadrature grid must be positive");
    }
    let band = etas.iter().map(|(xi, _)| sup_norm(*xi)).fold(0.0, f64::max);
    if !(policy.grid_step * band < 0.5) {
        return Err(Error::QuadratureUnderResolved(format!("grid step {} for modes up to {band}", policy.grid_step)));
    }
    // phase-plane grid for Q
    let k = (policy.grid_half_width / policy.grid_step).round() as usize;
    let hq = policy.grid_half_width / k as f64;
    let xs: Vec<f64> = (0..2 * k).map(|i| -policy.grid_half_width + (i as f64 + 0.5) * hq).collect();
    let n = xs.len();
    let a2: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|q| ambiguity_analytic(f2, h, PhasePoint::new(xs[q / n], xs[q % n])).conj())
        .collect();
    // internal grid for P
    let w = bump.half_width();
    let m = 1024;
    let hp = 2.0 * w / m as f64;
    let ys: Vec<f64> = (0..m).map(|i| -w + (i as f64 + 0.5) * hp).collect();
    let psi: Vec<f64> = ys.iter().map(|&y| bump.value(y)).collect();

    let rows: Vec<Vec<Complex64>> = gammas
        .par_iter()
        .map(|&(u, a)| {
            let prod: Vec<Complex64> = (0..n * n)
                .map(|q| ambiguity_analytic(f1, g, PhasePoint::new(xs[q / n] + u.x, xs[q % n] + u.w)) * a2[q])
                .collect();
            let pa: Vec<f64> = ys.iter().zip(&psi).map(|(&y, &p)| p * bump.value(y + a)).collect();
            etas.iter()
                .map(|&(xi, zeta)| {
                    let p: Complex64 = ys
                        .iter()
                        .zip(&pa)
                        .map(|(&y, &v)| v * cis(-2.0 * PI * y * zeta))
                        .sum::<Complex64>()
                        * hp;
                    let ex: Vec<Complex64> = xs.iter().map(|&x| cis(-2.0 * PI * x * xi.x)).collect();
                    let ew: Vec<Complex64> = xs.iter().map(|&x| cis(-2.0 * PI * x * xi.w)).collect();
                    let mut q = Complex64::new(0.0, 0.0);
                    for (i, e1) in ex.iter().enumerate() {
                        let row: Complex64 = prod[i * n..(i + 1) * n].iter().zip(&ew).map(|(v, e2)| v * e2).sum();
                        q += e1 * row;
                    }
                    p * q * hq * hq
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutproject::CutProjectScheme;
    use crate::internal_windows::BumpSpec;
    use crate::modelset::WindowInterval;

    #[test]
    fn series_merges_coinciding_frequencies() {
        let p = PhasePoint::new(0.5, -1.0);
        let q = PhasePoint::new(0.5 + 1e-14, -1.0);
        let s = APSeries::new(
            vec![APTerm { freq: p, coef: Complex64::new(1.0, 0.0) }, APTerm { freq: q, coef: Complex64::new(2.0, 0.0) }],
            "",
            0.0,
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s.coefficient(p), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn box_mean_of_single_exponential() {
        let l0 = PhasePoint::new(0.3, -0.7);
        let s = APSeries::new(vec![APTerm { freq: l0, coef: Complex64::new(1.0, 0.0) }], "", 0.0);
        assert!((s.box_mean(l0, 16.0) - 1.0).norm() < 1e-15);
        let v = bohr_mean_sampled(&s, l0, 16.0, 0.25).unwrap();
        assert!((v - 1.0).norm() < 1e-12);
    }

    #[test]
    fn bohr_guards() {
        let s = APSeries::default();
        assert!(bohr_mean(BohrSource::Series(&s), PhasePoint::ORIGIN, 8.0, 0.1).is_err());
        let f = |_: PhasePoint| Complex64::new(1.0, 0.0);
        let src = BohrSource::Function { f: &f, max_freq: 10.0 };
        assert!(matches!(bohr_mean(src, PhasePoint::ORIGIN, 16.0, 0.1), Err(Error::QuadratureUnderResolved(_))));
    }

    #[test]
    fn ambiguity_hat_matches_quadrature() {
        let f = AnalyticWindow::g0().tf_shift(PhasePoint::new(0.3, -0.2));
        let g = AnalyticWindow::hermite(1, 1.2);
        let xi = PhasePoint::new(0.4, 0.25);
        let h = 1.0 / 16.0;
        let k = 128;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..2 * k {
            for j in 0..2 * k {
                let u = PhasePoint::new(-8.0 + (i as f64 + 0.5) * h, -8.0 + (j as f64 + 0.5) * h);
                s += ambiguity_analytic(&f, &g, u) * cis(-2.0 * PI * u.dot(&xi));
            }
        }
        s *= h * h;
        assert!((s - ambiguity_hat(&f, &g, xi)).norm() < 1e-10, "{s} vs {}", ambiguity_hat(&f, &g, xi));
    }

    #[test]
    fn self_dual_gaussian_on_integer_lattice() {
        let l = PlainLattice::scaled_integer(1.0).unwrap();
        let f = PsfFunction::Gaussian(Gaussian2D::new(1.0, 1.0).unwrap());
        let r = psf_lattice_verify(&l, &f, PhasePoint::ORIGIN, &SeriesPolicy::new(6.0, 6.0, 1e-15)).unwrap();
        assert!(r.gap < 1e-15);
        assert!(r.passed());
    }

    #[test]
    fn shifted_modelset_psf_phases() {
        let spec = ModelSetSpec::new(CutProjectScheme::scheme_a(), WindowInterval::new(0.5).unwrap())
            .with_shift(vec![0.2, -0.35], 0.1)
            .unwrap();
        let bump = Bump::new(BumpSpec::standard(spec.window)).unwrap();
        let f = PsfFunction::Gaussian(Gaussian2D::new(1.0, 1.0).unwrap());
        let r = psf_modelset_verify(&spec, &bump, &f, PhasePoint::new(0.3, 0.1), &SeriesPolicy::new(8.0, 5.0, 1e-8))
            .unwrap();
        assert!(r.relative_gap < 1e-6, "{r:?}");
    }

    #[test]
    fn unweighted_series_needs_explicit_cutoff() {
        let spec = ModelSetSpec::new(CutProjectScheme::scheme_a(), WindowInterval::new(0.5).unwrap());
        let domain = Domain::ModelSet { spec: spec.clone(), kernel: DecayKernel::phi_limit(spec.window) };
        let g = vec![AnalyticWindow::g0()];
        let f = AnalyticWindow::g0();
        let p = SeriesPolicy::new(8.0, 4.0, 1e-6);
        assert!(matches!(n_series(&domain, &g, &g, &f, &f, &p), Err(Error::NonSummableTail)));
        let s = n_series(&domain, &g, &g, &f, &f, &p.with_cutoff(5.0)).unwrap();
        assert!(s.tail.is_infinite());
    }
}
