//! Gabor systems over weighted node sets: analysis coefficients, (mixed) frame
//! operators by direct truncated sums, covariance residuals and frame-bound
//! estimates.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutproject::PlainLattice;
use crate::error::{invalid, Error, Result};
use crate::internal_windows::Bump;
use crate::modelset::{enumerate_model_set, ModelSetSpec, WeightedPointSet};
use crate::tf_core::{AnalyticWindow, Grid1, PhasePoint, SampledSignal, Signal};

/// Nodes per deterministic reduction chunk.
const CHUNK: usize = 64;

#[derive(Clone, Debug)]
pub enum NodeSource {
    Lattice(PlainLattice),
    ModelSet(ModelSetSpec),
    Explicit(WeightedPointSet),
}

#[derive(Clone, Debug)]
pub enum WeightMode {
    None,
    /// w(λ) = scale · ψ_n(p2(γ)); the operators use w².
    Bump { bump: Arc<Bump>, scale: f64 },
}

#[derive(Clone, Debug)]
pub struct GaborSystem {
    pub windows: Vec<Signal>,
    pub nodes: NodeSource,
    pub weight_mode: WeightMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub node_radius: f64,
    pub tail_tol: f64,
    pub report_tails: bool,
}

impl TruncationPolicy {
    pub fn new(node_radius: f64, tail_tol: f64) -> Self {
        Self { node_radius, tail_tol, report_tails: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.node_radius > 0.0 && self.tail_tol > 0.0) {
            return invalid("policy radius and tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub z: PhasePoint,
    pub weight: f64,
}

/// Width of the annulus beyond the radius used for tail estimates.
pub const ANNULUS: f64 = 2.0;

impl GaborSystem {
    pub fn new(windows: Vec<Signal>, nodes: NodeSource, weight_mode: WeightMode) -> Result<Self> {
        if windows.is_empty() {
            return invalid("a Gabor system needs at least one window");
        }
        if let (NodeSource::Lattice(_), WeightMode::Bump { .. }) = (&nodes, &weight_mode) {
            return invalid("bump weights need nodes with internal values");
        }
        if let WeightMode::Bump { scale, .. } = weight_mode {
            if !(scale >= 0.0) {
                return invalid("weight scale must be nonnegative");
            }
        }
        Ok(Self { windows, nodes, weight_mode })
    }

    pub fn analytic(windows: Vec<AnalyticWindow>, nodes: NodeSource) -> Result<Self> {
        Self::new(windows.into_iter().map(Signal::Analytic).collect(), nodes, WeightMode::None)
    }

    pub fn with_weights(mut self, mode: WeightMode) -> Result<Self> {
        self.weight_mode = mode;
        Self::new(self.windows, self.nodes, self.weight_mode)
    }

    /// Nodes with |λ|∞ ≤ radius and nonzero weight, in source order.
    pub fn node_list(&self, radius: f64) -> Result<Vec<Node>> {
        let raw: Vec<(PhasePoint, f64, f64)> = match &self.nodes {
            NodeSource::Lattice(l) => l
                .enumerate_around(&[0.0, 0.0], radius)?
                .into_iter()
                .map(|p| (PhasePoint::from_slice(&p.point), 0.0, 1.0))
                .collect(),
            NodeSource::ModelSet(spec) => enumerate_model_set(spec, radius, None)?
                .points
                .into_iter()
                .map(|p| (PhasePoint::from_slice(&p.lambda), p.internal, 1.0))
                .collect(),
            NodeSource::Explicit(set) => set
                .points
                .iter()
                .filter(|p| p.lambda.iter().all(|v| v.abs() <= radius))
                .map(|p| (PhasePoint::from_slice(&p.lambda), p.internal, p.weight))
                .collect(),
        };
        Ok(raw
            .into_iter()
            .map(|(z, internal, base)| {
                let weight = match &self.weight_mode {
                    WeightMode::None => base,
                    WeightMode::Bump { bump, scale } => scale * bump.value(internal),
                };
                Node { z, weight }
            })
            .filter(|n| n.weight != 0.0)
            .collect())
    }

    /// Nodes with radius < |λ|∞ ≤ radius + ANNULUS.
    pub fn annulus(&self, radius: f64) -> Result<Vec<Node>> {
        Ok(self
            .node_list(radius + ANNULUS)?
            .into_iter()
            .filter(|n| n.z.x.abs().max(n.z.w.abs()) > radius)
            .collect())
    }

    fn duals<'a>(&'a self, duals: Option<&'a [Signal]>) -> Result<&'a [Signal]> {
        match duals {
            Some(h) if h.len() != self.windows.len() => invalid("dual window count must match"),
            Some(h) => Ok(h),
            None => Ok(&self.windows),
        }
    }
}

/// π(z)w restricted to a grid: first grid index and values. The second value
/// is the translation rounding error for sampled windows.
pub(crate) fn shifted_on_grid(w: &Signal, z: PhasePoint, grid: &Grid1) -> Result<(usize, Vec<Complex64>, f64)> {
    match w {
        Signal::Analytic(a) => {
            let reach = a
                .atoms()
                .iter()
                .map(|at| (at.shift.x + z.x, 8.0 * at.width * (1.0 + at.order as f64).sqrt()))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (c, r)| (lo.min(c - r), hi.max(c + r)));
            let j0 = ((reach.0 - grid.start) / grid.step).floor().max(0.0) as usize;
            let j1 = (((reach.1 - grid.start) / grid.step).ceil().max(0.0) as usize).min(grid.len);
            if j0 >= j1 {
                return Ok((0, Vec::new(), 0.0));
            }
            let sub = Grid1 { start: grid.t(j0), step: grid.step, len: j1 - j0 };
            Ok((j0, a.tf_shift(z).render(&sub), 0.0))
        }
        Signal::Sampled(s) => {
            let lo = s.grid.start + z.x;
            let hi = s.grid.end() + z.x;
            if hi < grid.start - grid.step || lo > grid.end() + grid.step {
                return Ok((0, Vec::new(), 0.0));
            }
            let (shifted, rounding) = s.tf_shift(z)?;
            let off = grid.offset_to(&shifted.grid)?;
            let lo = off.max(0);
            let hi = (off + shifted.samples.len() as i64).min(grid.len as i64);
            if lo >= hi {
                return Ok((0, Vec::new(), rounding));
            }
            let vals = shifted.samples[(lo - off) as usize..(hi - off) as usize].to_vec();
            Ok((lo as usize, vals, rounding))
        }
    }
}

fn coefficient_on_grid(f: &SampledSignal, start: usize, vals: &[Complex64]) -> Complex64 {
    f.samples[start..start + vals.len()]
        .iter()
        .zip(vals)
        .map(|(a, b)| a * b.conj())
        .sum::<Complex64>()
        * f.grid.step
}

/// ⟨f, π(z) g⟩ for any pairing of representations.
pub fn node_coefficient(f: &Signal, g: &Signal, z: PhasePoint) -> Result<Complex64> {
    match (f, g) {
        (Signal::Analytic(fa), Signal::Analytic(ga)) => Ok(fa.inner(&ga.tf_shift(z))),
        (Signal::Sampled(fs), _) => {
            let (start, vals, _) = shifted_on_grid(g, z, &fs.grid)?;
            Ok(coefficient_on_grid(fs, start, &vals))
        }
        (Signal::Analytic(fa), Signal::Sampled(gs)) => {
            let (shifted, _) = gs.tf_shift(z)?;
            Ok(shifted.inner_analytic(fa).conj())
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Coefficient {
    pub node: PhasePoint,
    pub window: usize,
    pub value: Complex64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Analysis {
    pub coefficients: Vec<Coefficient>,
    pub tail: f64,
}

/// Tail estimate: twice the weighted coefficient mass on the annulus beyond the radius.
pub fn tail_estimate(system: &GaborSystem, duals: Option<&[Signal]>, f: &Signal, radius: f64) -> Result<f64> {
    let h = system.duals(duals)?;
    let ring = system.annulus(radius)?;
    let norms: Vec<f64> = h.iter().map(Signal::norm).collect();
    let mut total = 0.0;
    for n in &ring {
        for (g, hn) in system.windows.iter().zip(&norms) {
            total += n.weight * n.weight * node_coefficient(f, g, n.z)?.norm() * hn;
        }
    }
    Ok(2.0 * total)
}

fn check_tail(system: &GaborSystem, duals: Option<&[Signal]>, f: &Signal, policy: &TruncationPolicy) -> Result<f64> {
    policy.validate()?;
    let tail = tail_estimate(system, duals, f, policy.node_radius)?;
    if tail > policy.tail_tol {
        return Err(Error::TailBudget { bound: tail, tol: policy.tail_tol });
    }
    Ok(tail)
}

/// Coefficients w(λ)⟨f, π(λ)g_i⟩ over the enumerated nodes.
pub fn analysis(system: &GaborSystem, f: &Signal, policy: &TruncationPolicy) -> Result<Analysis> {
    let tail = check_tail(system, None, f, policy)?;
    let nodes = system.node_list(policy.node_radius)?;
    let mut coefficients = Vec::with_capacity(nodes.len() * system.windows.len());
    for n in &nodes {
        for (i, g) in system.windows.iter().enumerate() {
            let value = node_coefficient(f, g, n.z)? * n.weight;
            coefficients.push(Coefficient { node: n.z, window: i, value });
        }
    }
    Ok(Analysis { coefficients, tail })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Applied {
    pub signal: SampledSignal,
    pub tail: f64,
    pub rounding: f64,
    pub nodes: usize,
}

/// Σ_i Σ_λ w² ⟨f, π(λ)g_i⟩ π(λ)h_i on the given node list, rendered on `grid`.
pub fn apply_on_nodes(
    nodes: &[Node],
    g: &[Signal],
    h: &[Signal],
    f: &Signal,
    grid: &Grid1,
) -> Result<(SampledSignal, f64)> {
    let fs = match f {
        Signal::Sampled(s) if s.grid.offset_to(grid)? == 0 && s.grid.len == grid.len => s.clone(),
        _ => f.render(grid)?,
    };
    let partials: Vec<Result<(Vec<Complex64>, f64)>> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len];
            let mut rounding: f64 = 0.0;
            for n in chunk {
                let w2 = n.weight * n.weight;
                for (gi, hi) in g.iter().zip(h) {
                    let c = match (f, gi) {
                        (Signal::Analytic(fa), Signal::Analytic(ga)) => fa.inner(&ga.tf_shift(n.z)),
                        _ => {
                            let (s0, vals, r) = shifted_on_grid(gi, n.z, grid)?;
                            rounding = rounding.max(r);
                            coefficient_on_grid(&fs, s0, &vals)
                        }
                    } * w2;
                    if c == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let (s0, vals, r) = shifted_on_grid(hi, n.z, grid)?;
                    rounding = rounding.max(r);
                    for (o, v) in acc[s0..s0 + vals.len()].iter_mut().zip(&vals) {
                        *o += c * v;
                    }
                }
            }
            Ok((acc, rounding))
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len];
    let mut rounding: f64 = 0.0;
    for p in partials {
        let (acc, r) = p?;
        rounding = rounding.max(r);
        for (o, v) in out.iter_mut().zip(&acc) {
            *o += v;
        }
    }
    Ok((SampledSignal { grid: *grid, samples: out }, rounding))
}

/// S_(g,h) f rendered on `grid` (h = g when `duals` is None).
pub fn frame_apply(
    system: &GaborSystem,
    duals: Option<&[Signal]>,
    f: &Signal,
    grid: &Grid1,
    policy: &TruncationPolicy,
) -> Result<Applied> {
    let h = system.duals(duals)?;
    let tail = check_tail(system, duals, f, policy)?;
    let nodes = system.node_list(policy.node_radius)?;
    let (signal, rounding) = apply_on_nodes(&nodes, &system.windows, h, f, grid)?;
    Ok(Applied { signal, tail, rounding, nodes: nodes.len() })
}

/// Closed-form S_(g,h) f as an atom list, for analytic f, g, h.
pub fn expand_on_nodes(
    nodes: &[Node],
    g: &[AnalyticWindow],
    h: &[AnalyticWindow],
    f: &AnalyticWindow,
) -> AnalyticWindow {
    let parts: Vec<AnalyticWindow> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out = AnalyticWindow::zero();
            for n in chunk {
                for (gi, hi) in g.iter().zip(h) {
                    let c = f.inner(&gi.tf_shift(n.z)) * (n.weight * n.weight);
                    if c.norm() > 1e-300 {
                        out.extend(&hi.tf_shift(n.z).scale(c));
                    }
                }
            }
            out
        })
        .collect();
    let mut out = AnalyticWindow::zero();
    for p in &parts {
        out.extend(p);
    }
    out
}

fn analytic_windows(ws: &[Signal]) -> Result<Vec<AnalyticWindow>> {
    ws.iter()
        .map(|w| match w {
            Signal::Analytic(a) => Ok(a.clone()),
            Signal::Sampled(_) => invalid("closed-form expansion needs analytic windows"),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Expanded {
    pub window: AnalyticWindow,
    pub tail: f64,
    pub nodes: usize,
}

pub fn frame_expand(
    system: &GaborSystem,
    duals: Option<&[AnalyticWindow]>,
    f: &AnalyticWindow,
    policy: &TruncationPolicy,
) -> Result<Expanded> {
    let g = analytic_windows(&system.windows)?;
    let h = match duals {
        Some(d) => d.to_vec(),
        None => g.clone(),
    };
    let dual_signals: Vec<Signal> = h.iter().cloned().map(Signal::Analytic).collect();
    let tail = check_tail(system, Some(&dual_signals), &Signal::Analytic(f.clone()), policy)?;
    let nodes = system.node_list(policy.node_radius)?;
    Ok(Expanded { window: expand_on_nodes(&nodes, &g, &h, f), tail, nodes: nodes.len() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub z: PhasePoint,
    pub residual: f64,
    pub nodes: usize,
    pub tail: f64,
}

/// ‖S^Λ π(z) f − π(z) S^(Λ−z) f‖∞ / ‖π(z) f‖∞ with node sets matched through the shift.
pub fn covariance_residual(
    system: &GaborSystem,
    duals: Option<&[AnalyticWindow]>,
    z: PhasePoint,
    f: &AnalyticWindow,
    grid: &Grid1,
    policy: &TruncationPolicy,
) -> Result<CovarianceReport> {
    let g = analytic_windows(&system.windows)?;
    let h = match duals {
        Some(d) => d.to_vec(),
        None => g.clone(),
    };
    let shifted_f = f.tf_shift(z);
    let dual_signals: Vec<Signal> = h.iter().cloned().map(Signal::Analytic).collect();
    let tail = check_tail(system, Some(&dual_signals), &Signal::Analytic(shifted_f.clone()), policy)?;
    let nodes = system.node_list(policy.node_radius)?;
    let moved: Vec<Node> = nodes.iter().map(|n| Node { z: n.z - z, weight: n.weight }).collect();
    let lhs = expand_on_nodes(&nodes, &g, &h, &shifted_f).sample(grid);
    let rhs = expand_on_nodes(&moved, &g, &h, f).tf_shift(z).sample(grid);
    let scale = shifted_f.sample(grid).sup_norm().max(1e-300);
    Ok(CovarianceReport { z, residual: lhs.sup_distance(&rhs)? / scale, nodes: nodes.len(), tail })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_residual: f64,
    pub upper_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub nodes: usize,
}

/// Power-iteration cap for each bound.
pub const POWER_ITERATIONS: usize = 400;

/// Extremal Rayleigh quotients of S restricted to signals on `grid`: power
/// iteration for B, power iteration on B·I − S for A, seeded from the best of
/// 32 random vectors.
pub fn frame_bounds_estimate(
    system: &GaborSystem,
    grid: &Grid1,
    policy: &TruncationPolicy,
    seed: u64,
) -> Result<FrameBounds> {
    policy.validate()?;
    let nodes = system.node_list(policy.node_radius)?;
    let apply = |v: &[Complex64]| -> Result<Vec<Complex64>> {
        let f = Signal::Sampled(SampledSignal { grid: *grid, samples: v.to_vec() });
        Ok(apply_on_nodes(&nodes, &system.windows, &system.windows, &f, grid)?.0.samples)
    };
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x * y.conj()).sum() };
    let normalize = |v: &mut Vec<Complex64>| {
        let n = dot(v, v).re.sqrt().max(1e-300);
        v.iter_mut().for_each(|x| *x /= n);
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(32);
    for _ in 0..32 {
        let mut v: Vec<Complex64> =
            (0..grid.len).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        normalize(&mut v);
        let sv = apply(&v)?;
        probes.push((dot(&sv, &v).re, v));
    }
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));

    // upper bound
    let mut v = probes.last().expect("32 probes").1.clone();
    let (mut upper, mut upper_residual, mut it_up) = (0.0, f64::INFINITY, 0);
    for it in 0..POWER_ITERATIONS {
        let sv = apply(&v)?;
        let rho = dot(&sv, &v).re;
        upper_residual = sv.iter().zip(&v).map(|(a, b)| (a - b * rho).norm_sqr()).sum::<f64>().sqrt();
        let change = (rho - upper).abs();
        upper = rho;
        v = sv;
        normalize(&mut v);
        it_up = it + 1;
        if change <= 1e-10 * rho.abs().max(1e-300) && upper_residual <= 1e-3 * rho.abs() {
            break;
        }
    }
    // lower bound via the shifted operator c·I − S
    let c = upper * (1.0 + 1e-6) + 1e-300;
    let mut v = probes[0].1.clone();
    let (mut mu, mut lower_residual, mut it_lo) = (0.0, f64::INFINITY, 0);
    for it in 0..POWER_ITERATIONS {
        let sv = apply(&v)?;
        let tv: Vec<Complex64> = v.iter().zip(&sv).map(|(a, b)| a * c - b).collect();
        let m = dot(&tv, &v).re;
        lower_residual = tv.iter().zip(&v).map(|(a, b)| (a - b * m).norm_sqr()).sum::<f64>().sqrt();
        let change = (m - mu).abs();
        mu = m;
        v = tv;
        normalize(&mut v);
        it_lo = it + 1;
        if change <= 1e-10 * c && lower_residual <= 1e-3 * c {
            break;
        }
    }
    let lower = (c - mu).max(0.0);
    let converged = it_up < POWER_ITERATIONS && it_lo < POWER_ITERATIONS;
    Ok(FrameBounds {
        lower,
        upper,
        lower_residual,
        upper_residual,
        iterations: it_up + it_lo,
        converged,
        nodes: nodes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g0() -> AnalyticWindow {
        AnalyticWindow::g0()
    }

    #[test]
    fn empty_node_set_gives_zero() {
        let sys = GaborSystem::analytic(vec![g0()], NodeSource::Explicit(WeightedPointSet::default())).unwrap();
        let grid = Grid1::span(-4.0, 4.0, 0.125).unwrap();
        let out = frame_apply(&sys, None, &Signal::Analytic(g0()), &grid, &TruncationPolicy::new(3.0, 1e-6)).unwrap();
        assert_eq!(out.signal.sup_norm(), 0.0);
    }

    #[test]
    fn single_node_projects_onto_g0() {
        let nodes = WeightedPointSet::explicit(&[vec![0.0, 0.0]]);
        let sys = GaborSystem::analytic(vec![g0()], NodeSource::Explicit(nodes)).unwrap();
        let grid = Grid1::span(-4.0, 4.0, 0.125).unwrap();
        let out = frame_apply(&sys, None, &Signal::Analytic(g0()), &grid, &TruncationPolicy::new(3.0, 1e-6)).unwrap();
        assert!(out.signal.sup_distance(&g0().sample(&grid)).unwrap() < 1e-14);
    }

    #[test]
    fn sampled_and_analytic_routes_agree() {
        let lat = PlainLattice::scaled_integer(1.0).unwrap();
        let sys = GaborSystem::analytic(vec![g0()], NodeSource::Lattice(lat)).unwrap();
        let grid = Grid1::span(-8.0, 8.0, 1.0 / 32.0).unwrap();
        let f = AnalyticWindow::hermite(1, 1.2).tf_shift(PhasePoint::new(0.3, 0.2));
        let pol = TruncationPolicy::new(7.0, 1e-6);
        let a = frame_apply(&sys, None, &Signal::Analytic(f.clone()), &grid, &pol).unwrap();
        let b = frame_apply(&sys, None, &Signal::Sampled(f.sample(&grid)), &grid, &pol).unwrap();
        assert!(a.signal.sup_distance(&b.signal).unwrap() < 1e-9);
    }
}
