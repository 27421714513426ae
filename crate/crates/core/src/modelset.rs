//! Simple model sets Λ(Ω) = { p1(γ) : γ ∈ Γ, p2(γ) ∈ Ω } with weights,
//! density and separation estimates, and ε-dual model sets.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutproject::{CutProjectScheme, LatticeBasis};
use crate::error::{invalid, Error, Result};
use crate::internal_windows::{Bump, DecayKernel, WienerProfile, WienerTail, DEFAULT_K_MAX};

/// Symmetric interval Ω = [-w, w].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WindowInterval {
    half_width: f64,
}

impl WindowInterval {
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return invalid("window half width must be positive and finite");
        }
        Ok(Self { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn measure(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Closed-interval membership.
    pub fn contains(&self, t: f64) -> bool {
        t.abs() <= self.half_width
    }
}

impl TryFrom<f64> for WindowInterval {
    type Error = Error;
    fn try_from(w: f64) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WindowInterval> for f64 {
    fn from(w: WindowInterval) -> f64 {
        w.half_width
    }
}

/// Shift (s, t) giving Λ_(s,t) = s + Λ(Ω - t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSetShift {
    pub s: Vec<f64>,
    pub t: f64,
}

#[derive(Clone, Debug)]
pub struct ModelSetSpec {
    pub scheme: CutProjectScheme,
    pub window: WindowInterval,
    pub shift: Option<ModelSetShift>,
}

impl ModelSetSpec {
    pub fn new(scheme: CutProjectScheme, window: WindowInterval) -> Self {
        Self { scheme, window, shift: None }
    }

    pub fn with_shift(mut self, s: Vec<f64>, t: f64) -> Result<Self> {
        if s.len() != 2 * self.scheme.d() {
            return invalid("shift s must live in physical space");
        }
        self.shift = Some(ModelSetShift { s, t });
        Ok(self)
    }

    /// |Ω| / vol(Γ).
    pub fn density(&self) -> f64 {
        self.window.measure() / self.scheme.volume()
    }

    fn shift_parts(&self) -> (Vec<f64>, f64) {
        match &self.shift {
            Some(sh) => (sh.s.clone(), sh.t),
            None => (vec![0.0; 2 * self.scheme.d()], 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub coords: Vec<i64>,
    pub lambda: Vec<f64>,
    /// Internal value tested against Ω (p2(γ) + t for shifted sets).
    pub internal: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedPointSet {
    pub points: Vec<WeightedPoint>,
}

impl WeightedPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.lambda.clone()).collect()
    }

    /// Unit-weight points at explicit positions (no internal space).
    pub fn explicit(positions: &[Vec<f64>]) -> Self {
        let points = positions
            .iter()
            .map(|l| WeightedPoint { coords: Vec::new(), lambda: l.clone(), internal: 0.0, weight: 1.0 })
            .collect();
        Self { points }
    }
}

/// Points of Λ_(s,t)(Ω) with |λ|∞ ≤ radius, ordered by integer coordinates.
pub fn enumerate_model_set(
    spec: &ModelSetSpec,
    radius: f64,
    weight: Option<&Bump>,
) -> Result<WeightedPointSet> {
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    if let Some(b) = weight {
        if (b.half_width() - spec.window.half_width()).abs() > 1e-12 * spec.window.half_width() {
            return invalid("bump window differs from the model-set window");
        }
    }
    let (s, t) = spec.shift_parts();
    let w = spec.window.half_width();
    let centre: Vec<f64> = s.iter().map(|v| -v).collect();
    let raw = spec.scheme.enumerate_slab(&centre, radius, -w - t, w - t)?;
    let m = 2 * spec.scheme.d();
    let points = raw
        .into_iter()
        .filter_map(|p| {
            let internal = p.point[m] + t;
            if !spec.window.contains(internal) {
                return None;
            }
            let lambda: Vec<f64> = p.point[..m].iter().zip(&s).map(|(a, b)| a + b).collect();
            if lambda.iter().any(|v| v.abs() > radius) {
                return None;
            }
            let weight = weight.map_or(1.0, |b| b.value(internal));
            Some(WeightedPoint { coords: p.coords, lambda, internal, weight })
        })
        .collect();
    Ok(WeightedPointSet { points })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub radius: f64,
    pub count: usize,
    pub estimate: f64,
    pub theoretical: f64,
    pub relative_gap: f64,
    pub warning: Option<String>,
}

/// Volume of the Euclidean ball of radius r in R^m.
pub fn ball_volume(m: usize, r: f64) -> f64 {
    // V_m = π^(m/2) r^m / Γ(m/2 + 1), via V_m = 2π r² V_(m-2) / m
    let (mut v, start) = if m % 2 == 0 { (1.0, 0) } else { (2.0 * r, 1) };
    let mut k = start;
    while k < m {
        k += 2;
        v *= 2.0 * PI * r * r / k as f64;
    }
    v
}

/// Counting estimate over the Euclidean ball, normalized by its volume.
pub fn density_estimate(spec: &ModelSetSpec, radius: f64) -> Result<DensityEstimate> {
    let set = enumerate_model_set(spec, radius, None)?;
    let count = set
        .points
        .iter()
        .filter(|p| p.lambda.iter().map(|v| v * v).sum::<f64>() <= radius * radius)
        .count();
    let m = 2 * spec.scheme.d();
    let estimate = count as f64 / ball_volume(m, radius);
    let theoretical = spec.density();
    let warning = (radius < 20.0).then(|| format!("radius {radius} below 20; estimate is coarse"));
    Ok(DensityEstimate {
        radius,
        count,
        estimate,
        theoretical,
        relative_gap: (estimate - theoretical).abs() / theoretical,
        warning,
    })
}

const REL_STEP: f64 = 0.125;

/// Upper-bound estimate of sup_x #(Λ ∩ B(x,1)) for planar point sets: unit
/// balls centred on a grid of step 1/8, enlarged by the grid covering radius.
pub fn relative_separation(points: &WeightedPointSet) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let pos = points.positions();
    if pos[0].len() != 2 {
        // point-centred balls of radius 2 contain every unit ball through that point
        return pos
            .iter()
            .map(|c| pos.iter().filter(|p| dist2(p, c) <= 4.0).count())
            .max()
            .unwrap_or(0) as f64;
    }
    let r = 1.0 + REL_STEP / 2f64.sqrt();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pos {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    // bucket points into unit cells
    let cell = |v: f64, k: usize| ((v - lo[k]) / r).floor() as i64;
    let nx = cell(hi[0], 0) + 1;
    let ny = cell(hi[1], 1) + 1;
    let mut buckets: Vec<Vec<[f64; 2]>> = vec![Vec::new(); (nx * ny) as usize];
    for p in &pos {
        buckets[(cell(p[0], 0) * ny + cell(p[1], 1)) as usize].push([p[0], p[1]]);
    }
    let gx = ((hi[0] - lo[0]) / REL_STEP).ceil() as i64;
    let gy = ((hi[1] - lo[1]) / REL_STEP).ceil() as i64;
    let best = (0..=gx)
        .into_par_iter()
        .map(|i| {
            let cx = lo[0] + i as f64 * REL_STEP;
            let mut best = 0usize;
            for j in 0..=gy {
                let cy = lo[1] + j as f64 * REL_STEP;
                let (bx, by) = (cell(cx, 0), cell(cy, 1));
                let mut count = 0;
                for ix in (bx - 1).max(0)..=(bx + 1).min(nx - 1) {
                    for iy in (by - 1).max(0)..=(by + 1).min(ny - 1) {
                        count += buckets[(ix * ny + iy) as usize]
                            .iter()
                            .filter(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2) <= r * r)
                            .count();
                    }
                }
                best = best.max(count);
            }
            best
        })
        .max()
        .unwrap_or(0);
    best as f64
}

/// Upper-bound estimate of rel(Γ) for a full lattice: centres sample a
/// fundamental parallelepiped on an 8^n grid.
pub fn lattice_relative_separation(lattice: &LatticeBasis) -> Result<f64> {
    let n = lattice.dim();
    let steps = 8usize;
    let b = lattice.matrix();
    // covering radius of the centre grid: half the longest cell diagonal
    let mut cover: f64 = 0.0;
    for signs in 0..(1usize << n) {
        let mut v = vec![0.0; n];
        for j in 0..n {
            let sg = if signs >> j & 1 == 1 { 1.0 } else { -1.0 };
            for (i, vi) in v.iter_mut().enumerate() {
                *vi += sg * b[(i, j)] / steps as f64;
            }
        }
        cover = cover.max(v.iter().map(|x| x * x).sum::<f64>().sqrt() / 2.0);
    }
    let r = 1.0 + cover;
    let mut best = 0usize;
    let total = steps.pow(n as u32);
    for idx in 0..total {
        let mut u = vec![0.0; n];
        let mut rem = idx;
        for uj in u.iter_mut() {
            *uj = (rem % steps) as f64 / steps as f64;
            rem /= steps;
        }
        let c = lattice.embed_real(&u);
        let lo: Vec<f64> = c.iter().map(|v| v - r).collect();
        let hi: Vec<f64> = c.iter().map(|v| v + r).collect();
        let count = lattice
            .enumerate_in_box(&lo, &hi)?
            .iter()
            .filter(|p| dist2(&p.point, &c) <= r * r)
            .count();
        best = best.max(count);
    }
    Ok(best as f64)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// min distance of internal values near Ω to ∂Ω; +∞ when none are near.
pub fn genericity_margin(spec: &ModelSetSpec, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    let (s, t) = spec.shift_parts();
    let w = spec.window.half_width();
    let centre: Vec<f64> = s.iter().map(|v| -v).collect();
    let raw = spec.scheme.enumerate_slab(&centre, radius, -w - 0.1 - t, w + 0.1 - t)?;
    let m = 2 * spec.scheme.d();
    Ok(raw
        .iter()
        .map(|p| (p.point[m] + t).abs() - w)
        .map(f64::abs)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsDualSet {
    /// Internal cutoff T of Ω̃_ε = [-T, T].
    pub cutoff: f64,
    pub threshold: f64,
    pub tail: WienerTail,
    pub density: f64,
    pub dual_rel: f64,
    pub points: WeightedPointSet,
}

/// Search step for the internal cutoff.
pub const CUTOFF_STEP: f64 = 0.25;

/// ε-dual model set over the dual scheme: T is the smallest grid value with
/// Wiener tail below eps / (D · rel(Γ*) · C · M).
pub fn eps_dual_model_set(
    spec: &ModelSetSpec,
    kernel: &DecayKernel,
    eps: f64,
    c: f64,
    m: usize,
    radius: f64,
) -> Result<EpsDualSet> {
    eps_dual_with_profile(spec, kernel, &WienerProfile::new(kernel, DEFAULT_K_MAX), eps, c, m, radius)
}

pub fn eps_dual_with_profile(
    spec: &ModelSetSpec,
    kernel: &DecayKernel,
    profile: &WienerProfile,
    eps: f64,
    c: f64,
    m: usize,
    radius: f64,
) -> Result<EpsDualSet> {
    if !(eps > 0.0 && c > 0.0 && m >= 1 && radius > 0.0) {
        return invalid("eps, C, radius must be positive and M ≥ 1");
    }
    let dual = spec.scheme.dual();
    let density = spec.density();
    let dual_rel = lattice_relative_separation(dual.lattice())?;
    let threshold = eps / (density * dual_rel * c * m as f64);
    let steps = (profile.k_max() as f64 / CUTOFF_STEP) as usize;
    let below = |i: usize| profile.tail(i as f64 * CUTOFF_STEP).value < threshold;
    if !below(steps) {
        return Err(Error::NonSummableTail);
    }
    // tail is non-increasing in T
    let (mut lo, mut hi) = (0usize, steps);
    if below(0) {
        hi = 0;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let cutoff = hi as f64 * CUTOFF_STEP;
    let tail = profile.tail(cutoff);
    let md = 2 * spec.scheme.d();
    let raw = dual.enumerate_slab(&vec![0.0; md], radius, -cutoff, cutoff)?;
    let points = raw
        .into_iter()
        .map(|p| WeightedPoint {
            internal: p.point[md],
            weight: kernel.eval(-p.point[md]),
            lambda: p.point[..md].to_vec(),
            coords: p.coords,
        })
        .collect();
    Ok(EpsDualSet { cutoff, threshold, tail, density, dual_rel, points: WeightedPointSet { points } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::internal_windows::BumpSpec;

    fn half() -> WindowInterval {
        WindowInterval::new(0.5).unwrap()
    }

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-14);
        assert!((ball_volume(3, 2.0) - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
        assert!((ball_volume(1, 1.5) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn origin_in_small_radius() {
        let spec = ModelSetSpec::new(CutProjectScheme::scheme_a(), half());
        let set = enumerate_model_set(&spec, 0.1, None).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.points[0].lambda, vec![0.0, 0.0]);
    }

    #[test]
    fn bump_weights_vanish_off_window() {
        let spec = ModelSetSpec::new(CutProjectScheme::scheme_a(), half());
        let bump = Bump::new(BumpSpec::standard(half())).unwrap();
        let set = enumerate_model_set(&spec, 10.0, Some(&bump)).unwrap();
        let origin = set.points.iter().find(|p| p.coords.iter().all(|&c| c == 0)).unwrap();
        assert!(origin.weight > 0.0);
        assert!((origin.weight - bump.value(0.0)).abs() < 1e-15);
        for p in &set.points {
            assert!(p.internal.abs() <= 0.5);
            if p.internal.abs() >= 0.5 {
                assert_eq!(p.weight, 0.0);
            }
        }
    }

    #[test]
    fn single_point_separation() {
        let set = WeightedPointSet::explicit(&[vec![0.3, 0.4]]);
        assert_eq!(relative_separation(&set), 1.0);
        assert_eq!(relative_separation(&WeightedPointSet::default()), 0.0);
    }

    #[test]
    fn integer_grid_separation() {
        let mut pos = Vec::new();
        for i in -3..=3 {
            for j in -3..=3 {
                if ((i * i + j * j) as f64) <= 9.0 {
                    pos.push(vec![i as f64, j as f64]);
                }
            }
        }
        let rel = relative_separation(&WeightedPointSet::explicit(&pos));
        assert!((1.0..=5.0).contains(&rel), "{rel}");
    }

    #[test]
    fn boundary_hit_gives_zero_margin() {
        let scheme = CutProjectScheme::new(
            1,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.5, 0.25, 1.0]],
        )
        .unwrap();
        let spec = ModelSetSpec::new(scheme, half());
        assert_eq!(genericity_margin(&spec, 5.0).unwrap(), 0.0);
    }
}
