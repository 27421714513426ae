//! Internal-space bumps ψ_n (infinite convolution products of normalized
//! indicators), their sinc-product transforms, the decay kernels built from
//! them, and Wiener amalgam tail estimates.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modelset::WindowInterval;
use crate::tf_core::Grid1;

/// Fourier coefficients retained for the cached bump grid.
pub const BUMP_COEFFS: usize = 1 << 14;
/// Zero padding factor of the cached bump grid.
pub const BUMP_PADDING: usize = 4;
/// Relative spectral truncation error above which a grid counts as under-resolved.
pub const UNDER_RESOLVED: f64 = 2e-2;
/// Unit intervals summed directly by [`wiener_tail`].
pub const DEFAULT_K_MAX: usize = 1024;

/// sin(πx)/(πx), with a Taylor branch near 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let y = (PI * x) * (PI * x);
        1.0 - y / 6.0 + y * y / 120.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub omega_half_width: f64,
    pub eps: f64,
    pub n: u32,
    pub s_max: u32,
}

impl BumpSpec {
    pub fn new(omega: WindowInterval, eps: f64, n: u32, s_max: u32) -> Result<Self> {
        let spec = Self { omega_half_width: omega.half_width(), eps, n, s_max };
        spec.validate()?;
        Ok(spec)
    }

    /// eps = 1/2, n = 1, s_max = 40.
    pub fn standard(omega: WindowInterval) -> Self {
        Self { omega_half_width: omega.half_width(), eps: 0.5, n: 1, s_max: 40 }
    }

    pub fn with_n(&self, n: u32) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_half_width > 0.0 && self.omega_half_width.is_finite()) {
            return invalid("omega_half_width must be positive");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid("eps must lie in (0, 1)");
        }
        if self.n == 0 || self.s_max == 0 {
            return invalid("n and s_max must be positive");
        }
        if !(self.omega_n_measure() > 0.0) {
            return invalid("Ω_n has zero measure");
        }
        Ok(())
    }

    pub fn omega(&self) -> WindowInterval {
        WindowInterval::new(self.omega_half_width).expect("validated half width")
    }

    /// |Ω_n| = (1 - eps^n)|Ω|.
    pub fn omega_n_measure(&self) -> f64 {
        (1.0 - self.eps.powi(self.n as i32)) * 2.0 * self.omega_half_width
    }

    /// Lengths |eps^(n s) Ω_n|, s = 0..=s_max.
    pub fn factor_lengths(&self) -> Vec<f64> {
        let r = self.eps.powi(self.n as i32);
        let mut len = self.omega_n_measure();
        (0..=self.s_max)
            .map(|_| {
                let l = len;
                len *= r;
                l
            })
            .collect()
    }
}

/// ψ̂_n(t) = Π_s sinc(t |eps^(ns) Ω_n|).
pub fn psi_n_hat(spec: &BumpSpec, t: f64) -> f64 {
    let r = spec.eps.powi(spec.n as i32);
    let mut len = spec.omega_n_measure();
    let mut prod = 1.0;
    for _ in 0..=spec.s_max {
        prod *= sinc(t * len);
        len *= r;
    }
    prod
}

/// Monotone envelope Π_s min(1, 1/(π|t| ℓ_s)) ≥ |ψ̂_n(t)|.
pub fn psi_n_hat_envelope(spec: &BumpSpec, t: f64) -> f64 {
    let t = t.abs();
    spec.factor_lengths()
        .iter()
        .map(|l| (1.0 / (PI * t * l)).min(1.0))
        .product()
}

/// Upper bound of Σ_{k ≥ k0} f(k) for a non-increasing f, summed in doubling blocks.
pub(crate) fn block_tail(k0: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut k = k0.max(1.0);
    let mut total = 0.0;
    for _ in 0..200 {
        let block = k * f(k);
        total += block;
        if block < 1e-300 || (block < 1e-18 * total && f(2.0 * k) < 1e-300) {
            break;
        }
        k *= 2.0;
    }
    total
}

/// Bound of (2/L) Σ_{k ≥ k0} |ψ̂_n(k/L)|: direct envelope sum over 16 k0 terms, blocks beyond.
fn coefficient_tail(spec: &BumpSpec, k0: usize, period: f64) -> f64 {
    let direct: f64 = (k0..16 * k0).map(|k| psi_n_hat_envelope(spec, k as f64 / period)).sum();
    let rest = block_tail((16 * k0) as f64, |k| psi_n_hat_envelope(spec, k / period));
    2.0 / period * (direct + rest)
}

/// Cached bump: ψ_n on a periodic grid of period 2|Ω| built from 2^14
/// Fourier coefficients, zero padded ×4.
#[derive(Debug)]
pub struct Bump {
    spec: BumpSpec,
    period: f64,
    fine_step: f64,
    fine: Vec<f64>,
    coeffs: Vec<f64>,
    truncation_bound: f64,
    envelope_l1: f64,
    /// ψ² sampled at x = m·fine_step, m ≥ 0, x < half width.
    squares: Vec<f64>,
    psi2_at_zero: f64,
    alias_free: f64,
}

impl Bump {
    pub fn new(spec: BumpSpec) -> Result<Self> {
        spec.validate()?;
        let w = spec.omega_half_width;
        let period = 4.0 * w;
        let n = BUMP_COEFFS;
        let p = n * BUMP_PADDING;
        let coeffs: Vec<f64> = (0..n / 2).map(|k| psi_n_hat(&spec, k as f64 / period)).collect();
        let truncation_bound = coefficient_tail(&spec, n / 2, period);
        let rel = truncation_bound * 2.0 * w;
        if rel > UNDER_RESOLVED {
            return Err(Error::GridUnderResolved(format!(
                "spectral truncation bound {rel:.3e} (relative) for n={}",
                spec.n
            )));
        }

        // ψ(x_j), x_j = -L/2 + j L/P: coefficient k carries the factor (-1)^k
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        for (k, &c) in coeffs.iter().enumerate() {
            let v = if k % 2 == 0 { c } else { -c };
            buf[k] = Complex64::new(v, 0.0);
            if k > 0 {
                buf[p - k] = Complex64::new(v, 0.0);
            }
        }
        FftPlanner::new().plan_fft_inverse(p).process(&mut buf);
        let fine: Vec<f64> = buf.iter().map(|z| z.re / period).collect();
        let fine_step = period / p as f64;

        let centre = p / 2;
        let squares: Vec<f64> = (0..)
            .map(|m| (m, m as f64 * fine_step))
            .take_while(|&(_, x)| x < w)
            .map(|(m, _)| fine[centre + m] * fine[centre + m])
            .collect();

        let envelope_l1 = envelope_l1(&spec);
        let mut bump = Self {
            spec,
            period,
            fine_step,
            fine,
            coeffs,
            truncation_bound,
            envelope_l1,
            squares,
            psi2_at_zero: 0.0,
            alias_free: 0.0,
        };
        bump.psi2_at_zero = bump.psi2_hat_with_stride(0.0, 1);
        // smallest u with psi2 envelope below 1e-15 relative
        let target = 1e-15 * bump.psi2_at_zero;
        let mut u = 1.0;
        while bump.psi2_envelope(u) > target && u < 1e12 {
            u *= 1.25;
        }
        bump.alias_free = u;
        Ok(bump)
    }

    pub fn shared(spec: BumpSpec) -> Result<Arc<Self>> {
        Self::new(spec).map(Arc::new)
    }

    pub fn spec(&self) -> &BumpSpec {
        &self.spec
    }

    pub fn half_width(&self) -> f64 {
        self.spec.omega_half_width
    }

    /// Bound on the pointwise error from the dropped Fourier coefficients.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    /// ∫ of the ψ̂_n envelope over R.
    pub fn envelope_l1(&self) -> f64 {
        self.envelope_l1
    }

    pub fn fine_grid(&self) -> (f64, f64, &[f64]) {
        (-self.period / 2.0, self.fine_step, &self.fine)
    }

    pub fn hat(&self, t: f64) -> f64 {
        psi_n_hat(&self.spec, t)
    }

    /// ψ_n(x) by cubic interpolation of the cached grid; 0 outside the open window.
    pub fn value(&self, x: f64) -> f64 {
        if !(x.abs() < self.spec.omega_half_width) {
            return 0.0;
        }
        let pos = (x + self.period / 2.0) / self.fine_step;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        let y = |j: usize| self.fine[j.min(self.fine.len() - 1)];
        let (ym, y0, y1, y2) = (y(i - 1), y(i), y(i + 1), y(i + 2));
        // four-point Lagrange weights on nodes -1, 0, 1, 2
        let wm = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w0 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w1 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w2 = (f + 1.0) * f * (f - 1.0) / 6.0;
        wm * ym + w0 * y0 + w1 * y1 + w2 * y2
    }

    /// ψ_n(x) by direct summation of the retained Fourier series.
    pub fn direct_value(&self, x: f64) -> f64 {
        let mut s = self.coeffs[0];
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            s += 2.0 * c * (2.0 * PI * k as f64 * x / self.period).cos();
        }
        s / self.period
    }

    /// Bound on |ψ²̂(t)| ≤ (E ∗ E)(t), E the ψ̂_n envelope. Using that E is even
    /// and decreasing, the half line s ≤ t/2 is split into a flat piece and a
    /// geometric partition, each cell bounded by its endpoint values.
    pub fn psi2_envelope(&self, t: f64) -> f64 {
        let t = t.abs();
        let e = |s: f64| psi_n_hat_envelope(&self.spec, s);
        let cap = self.psi2_at_zero.max(1e-300) * 1.0000001;
        if t == 0.0 {
            return cap;
        }
        // s < 0: E(t - s) ≤ E(t)
        let mut half = e(t) * self.envelope_l1 / 2.0;
        let flat = (1.0 / (PI * self.spec.factor_lengths()[0])).min(t / 2.0);
        half += e(t - flat) * flat;
        let mut s = flat;
        while s < t / 2.0 {
            let next = (s * 1.05).min(t / 2.0);
            half += e(t - next) * (next - s) * e(s);
            s = next;
        }
        (2.0 * half).min(cap)
    }

    /// ψ²̂ on the grid k·dt, k·dt ≤ t_max, by one FFT of the even extension of
    /// ψ² (same trapezoid as [`Bump::psi2_hat`] at stride 1); dt ≤ 1/32.
    pub fn psi2_hat_table(&self, t_max: f64) -> (f64, Vec<f64>) {
        let h = self.fine_step;
        let p = ((32.0 / h).ceil() as usize).max(2 * self.squares.len()).next_power_of_two();
        let dt = 1.0 / (p as f64 * h);
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        buf[0] = Complex64::new(self.squares[0], 0.0);
        for (m, &v) in self.squares.iter().enumerate().skip(1) {
            buf[m] = Complex64::new(v, 0.0);
            buf[p - m] = Complex64::new(v, 0.0);
        }
        FftPlanner::new().plan_fft_forward(p).process(&mut buf);
        let count = ((t_max / dt).ceil() as usize + 1).min(p / 2);
        (dt, buf[..count].iter().map(|v| v.re * h).collect())
    }

    /// Aliasing bound of the stride-1 trapezoid at t.
    pub fn psi2_full_alias_bound(&self, t: f64) -> f64 {
        let u = 1.0 / self.fine_step - t.abs();
        if u <= 0.0 {
            return f64::INFINITY;
        }
        2.0 * self.psi2_envelope(u)
    }

    fn stride_for(&self, t: f64) -> usize {
        let mut stride = 1;
        while stride < 64 {
            let h = 2.0 * stride as f64 * self.fine_step;
            if 1.0 / h - t.abs() >= self.alias_free {
                stride *= 2;
            } else {
                break;
            }
        }
        stride
    }

    /// Aliasing bound of the trapezoid quadrature for ψ²̂(t) at the chosen stride.
    pub fn psi2_alias_bound(&self, t: f64) -> f64 {
        let h = self.stride_for(t) as f64 * self.fine_step;
        let u = 1.0 / h - t.abs();
        if u <= 0.0 {
            return f64::INFINITY;
        }
        2.0 * self.psi2_envelope(u)
    }

    /// Fourier transform of ψ_n² at t (even, real), trapezoid on the cached grid.
    pub fn psi2_hat(&self, t: f64) -> f64 {
        self.psi2_hat_with_stride(t, self.stride_for(t))
    }

    fn psi2_hat_with_stride(&self, t: f64, stride: usize) -> f64 {
        let h = stride as f64 * self.fine_step;
        let theta = 2.0 * PI * h * t;
        let step = Complex64::new(theta.cos(), theta.sin());
        let mut rot = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (q, m) in (0..self.squares.len()).step_by(stride).enumerate().skip(1) {
            if q % 64 == 0 {
                let a = theta * q as f64;
                rot = Complex64::new(a.cos(), a.sin());
            } else {
                rot *= step;
            }
            acc += self.squares[m] * rot.re;
        }
        h * (self.squares[0] + 2.0 * acc)
    }

    /// ‖ψ_n‖₂² = ψ²̂(0).
    pub fn psi2_at_zero(&self) -> f64 {
        self.psi2_at_zero
    }
}

fn envelope_l1(spec: &BumpSpec) -> f64 {
    let l0 = spec.factor_lengths()[0];
    let t0 = 1.0 / (PI * l0);
    // E = 1 on [0, t0]; log-spaced trapezoid beyond
    let mut total = t0;
    let n = 20000;
    let ratio: f64 = (1e9f64).powf(1.0 / n as f64);
    let mut a = t0;
    let mut fa = psi_n_hat_envelope(spec, a);
    for _ in 0..n {
        let b = a * ratio;
        let fb = psi_n_hat_envelope(spec, b);
        total += 0.5 * (fa + fb) * (b - a);
        a = b;
        fa = fb;
    }
    // remainder beyond a: E ≤ 1/(π t ℓ0) · 1/(π t ℓ1)
    let l1 = spec.factor_lengths().get(1).copied().unwrap_or(l0);
    total += 1.0 / (PI * PI * l0 * l1 * a);
    2.0 * total
}

/// ψ_n sampled on a user grid covering Ω, via an inverse DFT of ψ̂_n on the
/// reciprocal grid with ×4 zero padding.
pub fn psi_n_values(spec: &BumpSpec, grid: &Grid1) -> Result<Vec<f64>> {
    spec.validate()?;
    let w = spec.omega_half_width;
    if grid.len < 2 || !(grid.step > 0.0) {
        return invalid("grid needs at least two points and a positive step");
    }
    if grid.start > -w || grid.end() < w {
        return invalid("grid must cover Ω");
    }
    let base = grid.len.next_power_of_two();
    let period = base as f64 * grid.step;
    let bound = coefficient_tail(spec, base / 2, period);
    if bound * 2.0 * w > UNDER_RESOLVED {
        return Err(Error::GridUnderResolved(format!(
            "grid step {} leaves spectral tail {:.3e}",
            grid.step,
            bound * 2.0 * w
        )));
    }
    let p = base * BUMP_PADDING;
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    for k in 0..base / 2 {
        let c = psi_n_hat(spec, k as f64 / period);
        let phase = 2.0 * PI * k as f64 * grid.start / period;
        buf[k] = Complex64::from_polar(c, phase);
        if k > 0 {
            buf[p - k] = Complex64::from_polar(c, -phase);
        }
    }
    FftPlanner::new().plan_fft_inverse(p).process(&mut buf);
    Ok((0..grid.len).map(|j| buf[j * BUMP_PADDING].re / period).collect())
}

/// w_ψ at an internal value: ψ_n(x), zero outside Ω.
pub fn weight(bump: &Bump, internal_value: f64) -> f64 {
    bump.value(internal_value)
}

/// w̃_ψ(t) = vol(Γ)^-1 ψ̂_n(t).
pub fn dual_weight(spec: &BumpSpec, scheme_volume: f64, internal_dual_value: f64) -> Result<f64> {
    if !(scheme_volume > 0.0) {
        return invalid("scheme volume must be positive");
    }
    Ok(psi_n_hat(spec, internal_dual_value) / scheme_volume)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    PhiLimit,
    PhiN { n: u32 },
    PsiHatSquared { n: u32 },
}

/// Even decay kernel on the internal dual space.
#[derive(Clone, Debug)]
pub struct DecayKernel {
    kind: KernelKind,
    omega: WindowInterval,
    bump: Option<Arc<Bump>>,
}

impl DecayKernel {
    pub fn phi_limit(omega: WindowInterval) -> Self {
        Self { kind: KernelKind::PhiLimit, omega, bump: None }
    }

    /// |Ω| ψ²̂_n for the given bump (its n is used).
    pub fn phi_n(bump: Arc<Bump>) -> Self {
        let n = bump.spec().n;
        Self { kind: KernelKind::PhiN { n }, omega: bump.spec().omega(), bump: Some(bump) }
    }

    pub fn psi_hat_squared(bump: Arc<Bump>) -> Self {
        let n = bump.spec().n;
        Self { kind: KernelKind::PsiHatSquared { n }, omega: bump.spec().omega(), bump: Some(bump) }
    }

    /// Builds the kernel of the requested kind from a bump template (eps, s_max, Ω).
    pub fn build(kind: KernelKind, template: &BumpSpec) -> Result<Self> {
        Ok(match kind {
            KernelKind::PhiLimit => Self::phi_limit(template.omega()),
            KernelKind::PhiN { n } => Self::phi_n(Bump::shared(template.with_n(n))?),
            KernelKind::PsiHatSquared { n } => Self::psi_hat_squared(Bump::shared(template.with_n(n))?),
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn omega(&self) -> WindowInterval {
        self.omega
    }

    pub fn bump(&self) -> Option<&Arc<Bump>> {
        self.bump.as_ref()
    }

    pub fn eval(&self, t: f64) -> f64 {
        match (&self.kind, &self.bump) {
            (KernelKind::PhiLimit, _) => sinc(self.omega.measure() * t),
            (KernelKind::PhiN { .. }, Some(b)) => self.omega.measure() * b.psi2_hat(t),
            (KernelKind::PsiHatSquared { .. }, Some(b)) => b.psi2_hat(t),
            _ => unreachable!("bump-backed kernels carry their bump"),
        }
    }

    /// Non-increasing bound of |kernel| on |s| ≥ |t|.
    pub fn envelope(&self, t: f64) -> f64 {
        match (&self.kind, &self.bump) {
            (KernelKind::PhiLimit, _) => (1.0 / (PI * self.omega.measure() * t.abs())).min(1.0),
            (KernelKind::PhiN { .. }, Some(b)) => self.omega.measure() * b.psi2_envelope(t),
            (KernelKind::PsiHatSquared { .. }, Some(b)) => b.psi2_envelope(t),
            _ => unreachable!(),
        }
    }

    pub fn summable(&self) -> bool {
        !matches!(self.kind, KernelKind::PhiLimit)
    }
}

/// Kernel evaluation with the quadrature resolution check.
pub fn kernel_eval(kernel: &DecayKernel, t: f64) -> Result<f64> {
    if let Some(b) = kernel.bump() {
        let alias = b.psi2_alias_bound(t);
        if !(alias <= 1e-3 * b.psi2_at_zero()) {
            return Err(Error::QuadratureUnderResolved(format!(
                "aliasing bound {alias:.3e} at t = {t}"
            )));
        }
    }
    Ok(kernel.eval(t))
}

/// Per-interval sup table of a kernel, reusable across tail queries.
#[derive(Clone, Debug)]
pub struct WienerProfile {
    sups: Vec<f64>,
    kernel: DecayKernel,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WienerTail {
    pub t: f64,
    pub direct: f64,
    pub remainder: f64,
    pub summable: bool,
    pub value: f64,
}

impl WienerProfile {
    pub fn new(kernel: &DecayKernel, k_max: usize) -> Self {
        let sups = match kernel.bump() {
            None => (0..k_max)
                .into_par_iter()
                .map(|k| {
                    (0..=32)
                        .map(|i| kernel.eval(k as f64 + i as f64 / 32.0).abs())
                        .fold(0.0, f64::max)
                })
                .collect(),
            Some(b) => {
                let scale = match kernel.kind() {
                    KernelKind::PhiN { .. } => kernel.omega().measure(),
                    _ => 1.0,
                };
                let (dt, table) = b.psi2_hat_table(k_max as f64 + 1.0);
                (0..k_max)
                    .map(|k| {
                        let lo = (k as f64 / dt).floor() as usize;
                        let hi = (((k + 1) as f64 / dt).ceil() as usize).min(table.len() - 1);
                        let resolved = table[lo.min(hi)..=hi].iter().map(|v| v.abs()).fold(0.0, f64::max)
                            + b.psi2_full_alias_bound(k as f64 + 1.0);
                        scale * resolved.min(b.psi2_envelope(k as f64))
                    })
                    .collect()
            }
        };
        Self { sups, kernel: kernel.clone() }
    }

    pub fn k_max(&self) -> usize {
        self.sups.len()
    }

    /// Σ over [k, k+1] and its mirror, k ≥ ⌈T⌉, of the interval sups.
    pub fn tail(&self, t: f64) -> WienerTail {
        let k0 = t.max(0.0).ceil() as usize;
        let kmax = self.sups.len();
        let direct: f64 = 2.0 * self.sups.iter().skip(k0).sum::<f64>();
        let start = k0.max(kmax) as f64;
        let (remainder, summable) = if self.kernel.summable() {
            (2.0 * block_tail(start, |k| self.kernel.envelope(k)), true)
        } else {
            (f64::INFINITY, false)
        };
        let mut value = direct + remainder;
        if k0 >= kmax && remainder < 1e-15 {
            value = 0.0;
        }
        WienerTail { t, direct, remainder, summable, value }
    }
}

/// Wiener amalgam norm of the kernel restricted to |t| ≥ T.
pub fn wiener_tail(kernel: &DecayKernel, t: f64) -> WienerTail {
    WienerProfile::new(kernel, DEFAULT_K_MAX).tail(t)
}
