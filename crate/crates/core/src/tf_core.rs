//! Time-frequency layer on the line: analytic Gauss–Hermite windows with closed
//! form inner products, sampled signals, π(z), STFT, ambiguity, Wigner and the
//! Fourier transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Phase-space point z = (x, ω).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PhasePoint {
    pub x: f64,
    pub w: f64,
}

impl PhasePoint {
    pub const ORIGIN: Self = Self { x: 0.0, w: 0.0 };

    pub fn new(x: f64, w: f64) -> Self {
        Self { x, w }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { x: v[0], w: v[1] }
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.w * o.w
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(c * self.x, c * self.w)
    }

    /// J(x, ω) = (ω, -x).
    pub fn rotate_j(&self) -> Self {
        Self::new(self.w, -self.x)
    }
}

impl std::ops::Add for PhasePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.w + o.w)
    }
}

impl std::ops::Sub for PhasePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.w - o.w)
    }
}

impl std::ops::Neg for PhasePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.w)
    }
}

impl From<[f64; 2]> for PhasePoint {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<PhasePoint> for [f64; 2] {
    fn from(z: PhasePoint) -> Self {
        [z.x, z.w]
    }
}

/// J = ((0, I), (-I, 0)) and σ(θ, z) = θ · Jz.
#[derive(Clone, Copy, Debug, Default)]
pub struct SymplecticForm;

impl SymplecticForm {
    pub fn apply(&self, z: PhasePoint) -> PhasePoint {
        z.rotate_j()
    }

    pub fn sigma(&self, theta: PhasePoint, z: PhasePoint) -> f64 {
        theta.dot(&z.rotate_j())
    }
}

/// Uniform grid start + j·step, j < len.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid1 {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite()) || len == 0 {
            return invalid("grid needs a positive step and at least one point");
        }
        Ok(Self { start, step, len })
    }

    /// Grid on [lo, hi) with the given step.
    pub fn span(lo: f64, hi: f64, step: f64) -> Result<Self> {
        Self::new(lo, step, ((hi - lo) / step).round() as usize)
    }

    pub fn t(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.t(self.len - 1)
    }

    /// Integer offset of `other` relative to `self` when both share a lattice.
    pub fn offset_to(&self, other: &Grid1) -> Result<i64> {
        if (self.step - other.step).abs() > 1e-12 * self.step {
            return Err(Error::IncompatibleGrids(format!("steps {} and {}", self.step, other.step)));
        }
        let k = (other.start - self.start) / self.step;
        let r = k.round();
        if (k - r).abs() > 1e-6 {
            return Err(Error::IncompatibleGrids("grid origins are not aligned".into()));
        }
        Ok(r as i64)
    }
}

/// Gauss–Hermite atom coef · π(shift) h_k^s, with
/// h_k^s(u) = s^(-1/2) 2^(1/4) (2^k k!)^(-1/2) H_k(√(2π) u/s) e^(-π u²/s²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub coef: Complex64,
    pub order: u32,
    pub width: f64,
    pub shift: PhasePoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Gaussian,
    Hermite,
}

/// JSON form of an atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDef {
    pub coef: [f64; 2],
    pub kind: AtomKind,
    pub width: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub order: u32,
    #[serde(default)]
    pub shift: [f64; 2],
}

fn is_zero(k: &u32) -> bool {
    *k == 0
}

impl Atom {
    pub fn new(coef: Complex64, order: u32, width: f64, shift: PhasePoint) -> Self {
        Self { coef, order, width, shift }
    }

    pub fn from_def(def: &AtomDef) -> Result<Self> {
        if !(def.width > 0.0 && def.width.is_finite()) {
            return invalid("atom width must be positive");
        }
        let order = match def.kind {
            AtomKind::Gaussian if def.order != 0 => return invalid("gaussian atoms have order 0"),
            AtomKind::Gaussian => 0,
            AtomKind::Hermite => def.order,
        };
        Ok(Self::new(Complex64::new(def.coef[0], def.coef[1]), order, def.width, def.shift.into()))
    }

    pub fn to_def(&self) -> AtomDef {
        AtomDef {
            coef: [self.coef.re, self.coef.im],
            kind: if self.order == 0 { AtomKind::Gaussian } else { AtomKind::Hermite },
            width: self.width,
            order: self.order,
            shift: self.shift.into(),
        }
    }

    /// π(z) M_w0 T_x0 = e^(-2πi z_x w0) M_(w0+z_w) T_(x0+z_x).
    pub fn tf_shift(&self, z: PhasePoint) -> Self {
        let phase = Complex64::from_polar(1.0, -2.0 * PI * z.x * self.shift.w);
        Self { coef: self.coef * phase, shift: self.shift + z, ..*self }
    }

    /// F(π(x,ω) h_k^s) = e^(2πixω) (-i)^k π(ω,-x) h_k^(1/s).
    pub fn fourier(&self) -> Self {
        let (x, w) = (self.shift.x, self.shift.w);
        let phase = Complex64::from_polar(1.0, 2.0 * PI * x * w) * (-I).powu(self.order);
        Self { coef: self.coef * phase, order: self.order, width: 1.0 / self.width, shift: PhasePoint::new(w, -x) }
    }

    /// t ↦ f(-t).
    pub fn reflect(&self) -> Self {
        let sign = if self.order % 2 == 0 { 1.0 } else { -1.0 };
        Self { coef: self.coef * sign, shift: -self.shift, ..*self }
    }

    fn term(&self) -> Term {
        let s = self.width;
        let norm = s.powf(-0.5) * 2f64.powf(0.25)
            / (2f64.powi(self.order as i32) * factorial(self.order)).sqrt();
        let kappa = (2.0 * PI).sqrt() / s;
        let poly = hermite_coeffs(self.order)
            .into_iter()
            .enumerate()
            .map(|(j, h)| self.coef * (norm * h * kappa.powi(j as i32)))
            .collect();
        Term {
            poly,
            m: self.shift.x,
            a: PI / (s * s),
            beta: 2.0 * PI * self.shift.w,
            c: I * (2.0 * PI * self.shift.w * self.shift.x),
        }
    }

    pub fn value(&self, t: f64) -> Complex64 {
        self.term().value(t)
    }

    /// Upper bound of |atom(t)| for |t - x0| ≥ r: |coef| N_k |H_k| e^(-π r²/s²) tail envelope.
    fn modulus_bound(&self, u: f64) -> f64 {
        let s = self.width;
        let norm = s.powf(-0.5) * 2f64.powf(0.25)
            / (2f64.powi(self.order as i32) * factorial(self.order)).sqrt();
        let y = (2.0 * PI).sqrt() * u.abs() / s;
        let hb: f64 = hermite_coeffs(self.order)
            .iter()
            .enumerate()
            .map(|(j, h)| h.abs() * y.powi(j as i32))
            .sum();
        self.coef.norm() * norm * hb * (-PI * u * u / (s * s)).exp()
    }

    /// Bound of ∫ |atom| over t ∉ [lo, hi].
    pub fn outside_mass(&self, lo: f64, hi: f64) -> f64 {
        let s = self.width;
        let x0 = self.shift.x;
        let side = |d: f64| -> f64 {
            // d = distance from centre to the excluded half-line (may be negative)
            let h = s / 64.0;
            let mut total = 0.0;
            let mut u = d;
            let stop = d.max(0.0) + 12.0 * s * (1.0 + self.order as f64).sqrt();
            while u < stop {
                let v = if u < 0.0 { self.modulus_bound(0.0).max(self.modulus_bound(u)) } else { self.modulus_bound(u) };
                total += v * h;
                u += h;
            }
            total
        };
        side(hi - x0) + side(x0 - lo)
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Coefficients of the physicists' Hermite polynomial H_k.
fn hermite_coeffs(k: u32) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for n in 1..k as usize {
        let mut next = vec![0.0; n + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += 2.0 * c;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= 2.0 * n as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// P(t - m) · exp(-a (t-m)² + iβ (t-m) + c).
#[derive(Clone, Debug)]
struct Term {
    poly: Vec<Complex64>,
    m: f64,
    a: f64,
    beta: f64,
    c: Complex64,
}

impl Term {
    fn value(&self, t: f64) -> Complex64 {
        let u = t - self.m;
        let p = self.poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c);
        p * Complex64::new(-self.a * u * u, self.beta * u).exp() * self.c.exp()
    }

    fn conj(&self) -> Self {
        Self {
            poly: self.poly.iter().map(|c| c.conj()).collect(),
            beta: -self.beta,
            c: self.c.conj(),
            ..*self
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let a = self.a + o.a;
        let m = (self.a * self.m + o.a * o.m) / a;
        let (d1, d2) = (m - self.m, m - o.m);
        let p1 = shift_poly(&self.poly, d1);
        let p2 = shift_poly(&o.poly, d2);
        let mut poly = vec![Complex64::new(0.0, 0.0); p1.len() + p2.len() - 1];
        for (i, x) in p1.iter().enumerate() {
            for (j, y) in p2.iter().enumerate() {
                poly[i + j] += x * y;
            }
        }
        let dm = self.m - o.m;
        let c = self.c + o.c + I * (self.beta * d1 + o.beta * d2) - self.a * o.a / a * dm * dm;
        Self { poly, m, a, beta: self.beta + o.beta, c }
    }

    /// ∫ over R, from Gaussian moments with complex mean iβ/(2a).
    fn integral(&self) -> Complex64 {
        let a = self.a;
        let mu = I * (self.beta / (2.0 * a));
        let sigma2 = 1.0 / (2.0 * a);
        let mut sum = Complex64::new(0.0, 0.0);
        for (j, &p) in self.poly.iter().enumerate() {
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            // E[(μ + σZ)^j] = Σ_k C(j,k) μ^(j-k) σ^k E[Z^k]
            let mut mom = Complex64::new(0.0, 0.0);
            let mut binom = 1.0;
            for k in 0..=j {
                if k > 0 {
                    binom = binom * (j - k + 1) as f64 / k as f64;
                }
                if k % 2 == 0 {
                    let ez = double_factorial(k as i64 - 1) * sigma2.powi(k as i32 / 2);
                    mom += mu.powu((j - k) as u32) * (binom * ez);
                }
            }
            sum += p * mom;
        }
        let gauss = (self.c - self.beta * self.beta / (4.0 * a)).exp();
        sum * gauss * (PI / a).sqrt()
    }
}

fn double_factorial(n: i64) -> f64 {
    let mut r = 1.0;
    let mut k = n;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}

/// Coefficients of P(u + d) from those of P(u).
fn shift_poly(p: &[Complex64], d: f64) -> Vec<Complex64> {
    if d == 0.0 || p.len() == 1 {
        return p.to_vec();
    }
    let n = p.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (j, &c) in p.iter().enumerate() {
        // (u + d)^j = Σ_k C(j,k) d^(j-k) u^k
        let mut binom = 1.0;
        for k in 0..=j {
            if k > 0 {
                binom = binom * (j - k + 1) as f64 / k as f64;
            }
            out[k] += c * (binom * d.powi((j - k) as i32));
        }
    }
    out
}

/// ⟨a, b⟩ = ∫ a · conj(b) for two atoms.
pub fn atom_inner(a: &Atom, b: &Atom) -> Complex64 {
    a.term().mul(&b.term().conj()).integral()
}

/// Finite combination of Gauss–Hermite atoms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalyticWindow {
    atoms: Vec<Atom>,
}

impl Serialize for AnalyticWindow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let defs: Vec<AtomDef> = self.atoms.iter().map(Atom::to_def).collect();
        defs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnalyticWindow {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let defs = Vec::<AtomDef>::deserialize(d)?;
        Self::from_defs(&defs).map_err(serde::de::Error::custom)
    }
}

impl AnalyticWindow {
    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    pub fn from_defs(defs: &[AtomDef]) -> Result<Self> {
        Ok(Self { atoms: defs.iter().map(Atom::from_def).collect::<Result<_>>()? })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Unit-norm Gaussian 2^(1/4) e^(-π t²/s²)/√s.
    pub fn gaussian(width: f64) -> Self {
        Self::hermite(0, width)
    }

    /// Standard Gaussian g0 = 2^(1/4) e^(-π t²).
    pub fn g0() -> Self {
        Self::gaussian(1.0)
    }

    pub fn hermite(order: u32, width: f64) -> Self {
        Self { atoms: vec![Atom::new(Complex64::new(1.0, 0.0), order, width, PhasePoint::ORIGIN)] }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { atoms: self.atoms.iter().map(|a| Atom { coef: a.coef * c, ..*a }).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        Self { atoms }
    }

    pub fn push(&mut self, atom: Atom) {
        self.atoms.push(atom);
    }

    pub fn extend(&mut self, other: &Self) {
        self.atoms.extend_from_slice(&other.atoms);
    }

    pub fn tf_shift(&self, z: PhasePoint) -> Self {
        Self { atoms: self.atoms.iter().map(|a| a.tf_shift(z)).collect() }
    }

    pub fn fourier(&self) -> Self {
        Self { atoms: self.atoms.iter().map(Atom::fourier).collect() }
    }

    pub fn reflect(&self) -> Self {
        Self { atoms: self.atoms.iter().map(Atom::reflect).collect() }
    }

    pub fn value(&self, t: f64) -> Complex64 {
        self.atoms.iter().map(|a| a.value(t)).sum()
    }

    pub fn render(&self, grid: &Grid1) -> Vec<Complex64> {
        let terms: Vec<Term> = self.atoms.iter().map(Atom::term).collect();
        (0..grid.len)
            .map(|j| {
                let t = grid.t(j);
                terms.iter().map(|term| term.value(t)).sum()
            })
            .collect()
    }

    pub fn sample(&self, grid: &Grid1) -> SampledSignal {
        SampledSignal { grid: *grid, samples: self.render(grid) }
    }

    /// ⟨self, other⟩ in closed form.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let mine: Vec<Term> = self.atoms.iter().map(Atom::term).collect();
        let theirs: Vec<Term> = other.atoms.iter().map(|a| a.term().conj()).collect();
        let mut s = Complex64::new(0.0, 0.0);
        for x in &mine {
            for y in &theirs {
                s += x.mul(y).integral();
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// Bound of ∫ |f| outside [lo, hi].
    pub fn outside_mass(&self, lo: f64, hi: f64) -> f64 {
        self.atoms.iter().map(|a| a.outside_mass(lo, hi)).sum()
    }

    /// Largest |ω| + 8/s over atoms: effective band edge.
    pub fn band_edge(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.shift.w.abs() + 8.0 * (1.0 + a.order as f64).sqrt() / a.width)
            .fold(0.0, f64::max)
    }
}

/// Samples of a function on a uniform grid, zero outside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub grid: Grid1,
    pub samples: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: Grid1, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len {
            return invalid("sample count does not match grid length");
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid1) -> Self {
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); grid.len] }
    }

    pub fn from_fn(grid: Grid1, f: impl Fn(f64) -> Complex64) -> Self {
        Self { grid, samples: (0..grid.len).map(|j| f(grid.t(j))).collect() }
    }

    pub fn from_real(grid: Grid1, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn energy(&self) -> f64 {
        self.grid.step * self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// sup |self - other| over a shared grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid.offset_to(&other.grid)? != 0 || self.grid.len != other.grid.len {
            return Err(Error::IncompatibleGrids("signals live on different grids".into()));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|v| v * c).collect() }
    }

    /// Translation by x rounded to the grid and exact modulation by ω;
    /// returns the rounding error of the translation.
    pub fn tf_shift(&self, z: PhasePoint) -> Result<(Self, f64)> {
        let span = self.grid.len as f64 * self.grid.step;
        if z.x.abs() > span {
            return Err(Error::ShiftOutOfRange(format!("|x| = {} exceeds grid span {span}", z.x.abs())));
        }
        let k = (z.x / self.grid.step).round();
        let rounding = (z.x - k * self.grid.step).abs();
        let grid = Grid1 { start: self.grid.start + k * self.grid.step, ..self.grid };
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, 2.0 * PI * z.w * grid.t(j)))
            .collect();
        Ok((Self { grid, samples }, rounding))
    }

    /// t ↦ f(-t) on the mirrored grid.
    pub fn reflect(&self) -> Self {
        let grid = Grid1 { start: -self.grid.end(), ..self.grid };
        Self { grid, samples: self.samples.iter().rev().copied().collect() }
    }

    /// Riemann/trapezoid ⟨self, other⟩ over the overlap of aligned grids.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        let off = self.grid.offset_to(&other.grid)?;
        let mut s = Complex64::new(0.0, 0.0);
        for (j, v) in self.samples.iter().enumerate() {
            let k = j as i64 - off;
            if k >= 0 && (k as usize) < other.samples.len() {
                s += v * other.samples[k as usize].conj();
            }
        }
        Ok(s * self.grid.step)
    }

    /// ⟨self, g⟩ against an analytic window sampled on this grid.
    pub fn inner_analytic(&self, g: &AnalyticWindow) -> Complex64 {
        let rendered = g.render(&self.grid);
        self.samples.iter().zip(&rendered).map(|(a, b)| a * b.conj()).sum::<Complex64>() * self.grid.step
    }

    pub fn fourier(&self) -> SampledSignal {
        fourier(self)
    }
}

/// Unitary DFT approximation of f̂(ξ) = ∫ f(t) e^(-2πitξ) dt, zero padded to a
/// power of two; output grid ξ_k = -1/(2h) + k/(N h).
pub fn fourier(f: &SampledSignal) -> SampledSignal {
    let n = f.samples.len().next_power_of_two();
    let h = f.grid.step;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, v) in f.samples.iter().enumerate() {
        buf[j] = if j % 2 == 0 { *v } else { -v };
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let grid = Grid1 { start: -0.5 / h, step: 1.0 / (n as f64 * h), len: n };
    let t0 = f.grid.start;
    let samples = buf
        .into_iter()
        .enumerate()
        .map(|(k, v)| v * h * Complex64::from_polar(1.0, -2.0 * PI * grid.t(k) * t0))
        .collect();
    SampledSignal { grid, samples }
}

/// Either representation of a function on the line.
#[derive(Clone, Debug, PartialEq)]
pub enum Signal {
    Analytic(AnalyticWindow),
    Sampled(SampledSignal),
}

impl From<AnalyticWindow> for Signal {
    fn from(w: AnalyticWindow) -> Self {
        Signal::Analytic(w)
    }
}

impl From<SampledSignal> for Signal {
    fn from(s: SampledSignal) -> Self {
        Signal::Sampled(s)
    }
}

impl Signal {
    pub fn reflect(&self) -> Self {
        match self {
            Signal::Analytic(a) => Signal::Analytic(a.reflect()),
            Signal::Sampled(s) => Signal::Sampled(s.reflect()),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Signal::Analytic(a) => a.norm(),
            Signal::Sampled(s) => s.norm(),
        }
    }

    pub fn render(&self, grid: &Grid1) -> Result<SampledSignal> {
        match self {
            Signal::Analytic(a) => Ok(a.sample(grid)),
            Signal::Sampled(s) => {
                let off = grid.offset_to(&s.grid)?;
                let mut out = SampledSignal::zeros(*grid);
                for (j, v) in out.samples.iter_mut().enumerate() {
                    let k = j as i64 - off;
                    if k >= 0 && (k as usize) < s.samples.len() {
                        *v = s.samples[k as usize];
                    }
                }
                Ok(out)
            }
        }
    }
}

/// π(z) f; the second value is the grid rounding error (0 for analytic input).
pub fn tf_shift(f: &Signal, z: PhasePoint) -> Result<(Signal, f64)> {
    match f {
        Signal::Analytic(a) => Ok((Signal::Analytic(a.tf_shift(z)), 0.0)),
        Signal::Sampled(s) => s.tf_shift(z).map(|(s, e)| (Signal::Sampled(s), e)),
    }
}

/// ⟨f1, f2⟩.
pub fn inner_product(f1: &Signal, f2: &Signal) -> Result<Complex64> {
    match (f1, f2) {
        (Signal::Analytic(a), Signal::Analytic(b)) => Ok(a.inner(b)),
        (Signal::Sampled(s), Signal::Analytic(b)) => Ok(s.inner_analytic(b)),
        (Signal::Analytic(a), Signal::Sampled(s)) => Ok(s.inner_analytic(a).conj()),
        (Signal::Sampled(a), Signal::Sampled(b)) => a.inner(b),
    }
}

fn nyquist_guard(f: &Signal, g: &Signal, w: f64) -> Result<()> {
    let step = match (f, g) {
        (Signal::Sampled(s), _) | (_, Signal::Sampled(s)) => s.grid.step,
        _ => return Ok(()),
    };
    let nyq = 0.5 / step;
    if w.abs() >= nyq {
        return Err(Error::QuadratureUnderResolved(format!("|ω| = {} at or beyond Nyquist {nyq}", w.abs())));
    }
    Ok(())
}

/// V_g f(z) = ⟨f, π(z) g⟩.
pub fn stft(f: &Signal, g: &Signal, z: PhasePoint) -> Result<Complex64> {
    nyquist_guard(f, g, z.w)?;
    let (shifted, _) = tf_shift(g, z)?;
    inner_product(f, &shifted)
}

/// A(f,g)(x,ω) = ∫ f(t+x/2) conj g(t-x/2) e^(-2πitω) dt = e^(πixω) V_g f(x,ω).
pub fn ambiguity(f: &Signal, g: &Signal, z: PhasePoint) -> Result<Complex64> {
    Ok(Complex64::from_polar(1.0, PI * z.x * z.w) * stft(f, g, z)?)
}

/// W(f,g)(x,ω) = ∫ f(x+t/2) conj g(x-t/2) e^(-2πitω) dt = 2 e^(4πixω) ⟨f, π(2x,2ω) Rg⟩.
pub fn wigner(f: &Signal, g: &Signal, z: PhasePoint) -> Result<Complex64> {
    nyquist_guard(f, g, 2.0 * z.w)?;
    let (shifted, _) = tf_shift(&g.reflect(), z.scale(2.0))?;
    Ok(2.0 * Complex64::from_polar(1.0, 4.0 * PI * z.x * z.w) * inner_product(f, &shifted)?)
}

pub fn ambiguity_analytic(f: &AnalyticWindow, g: &AnalyticWindow, z: PhasePoint) -> Complex64 {
    Complex64::from_polar(1.0, PI * z.x * z.w) * f.inner(&g.tf_shift(z))
}

pub fn wigner_analytic(f: &AnalyticWindow, g: &AnalyticWindow, z: PhasePoint) -> Complex64 {
    2.0 * Complex64::from_polar(1.0, 4.0 * PI * z.x * z.w) * f.inner(&g.reflect().tf_shift(z.scale(2.0)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MoyalReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub gap: f64,
    pub extent: f64,
    pub step: f64,
}

/// ⟨W(f1,f2), W(g1,g2)⟩ on the square [-extent, extent]² against ⟨f1,g1⟩ conj⟨f2,g2⟩.
pub fn moyal_check(
    f1: &AnalyticWindow,
    f2: &AnalyticWindow,
    g1: &AnalyticWindow,
    g2: &AnalyticWindow,
    extent: f64,
    step: f64,
) -> Result<MoyalReport> {
    if !(extent > 0.0 && step > 0.0) {
        return invalid("extent and step must be positive");
    }
    let n = (extent / step).round() as i64;
    let mut lhs = Complex64::new(0.0, 0.0);
    for i in -n..=n {
        for j in -n..=n {
            let z = PhasePoint::new(i as f64 * step, j as f64 * step);
            lhs += wigner_analytic(f1, f2, z) * wigner_analytic(g1, g2, z).conj();
        }
    }
    lhs *= step * step;
    let rhs = f1.inner(g1) * f2.inner(g2).conj();
    Ok(MoyalReport { lhs, rhs, gap: (lhs - rhs).norm(), extent, step })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn hermite_polys() {
        assert_eq!(hermite_coeffs(0), vec![1.0]);
        assert_eq!(hermite_coeffs(2), vec![-2.0, 0.0, 4.0]);
        assert_eq!(hermite_coeffs(3), vec![0.0, -12.0, 0.0, 8.0]);
    }

    #[test]
    fn hermite_functions_orthonormal() {
        for s in [0.7, 1.0, 1.6] {
            for k in 0..5 {
                for l in 0..5 {
                    let v = AnalyticWindow::hermite(k, s).inner(&AnalyticWindow::hermite(l, s));
                    let want = if k == l { 1.0 } else { 0.0 };
                    assert!(close(v, Complex64::new(want, 0.0), 1e-12), "{k} {l} {v}");
                }
            }
        }
    }

    #[test]
    fn g0_ambiguity_closed_form() {
        let g = AnalyticWindow::g0();
        assert!(close(ambiguity_analytic(&g, &g, PhasePoint::ORIGIN), Complex64::new(1.0, 0.0), 1e-14));
        let v = ambiguity_analytic(&g, &g, PhasePoint::new(1.0, 0.0));
        assert!(close(v, Complex64::new((-PI / 2.0).exp(), 0.0), 1e-14));
    }

    #[test]
    fn commutation_phase() {
        let g = AnalyticWindow::hermite(1, 1.3);
        let (x, w) = (0.4, -0.9);
        let mt = g.tf_shift(PhasePoint::new(x, 0.0)).tf_shift(PhasePoint::new(0.0, w));
        let tm = g.tf_shift(PhasePoint::new(0.0, w)).tf_shift(PhasePoint::new(x, 0.0));
        for t in [-1.0, 0.2, 0.77] {
            let want = tm.value(t) * Complex64::from_polar(1.0, 2.0 * PI * x * w);
            assert!(close(mt.value(t), want, 1e-12));
        }
    }

    #[test]
    fn fourier_of_g0_is_g0() {
        let grid = Grid1::span(-8.0, 8.0, 1.0 / 16.0).unwrap();
        let f = AnalyticWindow::g0().sample(&grid);
        let fh = fourier(&f);
        for (k, v) in fh.samples.iter().enumerate() {
            let xi = fh.grid.t(k);
            if xi.abs() <= 4.0 {
                assert!(close(*v, AnalyticWindow::g0().value(xi), 1e-8));
            }
        }
        assert!((f.norm() - fh.norm()).abs() < 1e-10);
    }

    #[test]
    fn shift_out_of_range() {
        let grid = Grid1::span(-1.0, 1.0, 0.25).unwrap();
        let f = SampledSignal::zeros(grid);
        assert!(matches!(f.tf_shift(PhasePoint::new(5.0, 0.0)), Err(Error::ShiftOutOfRange(_))));
    }
}
