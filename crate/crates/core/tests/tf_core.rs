use msgabor::tf_core::*;
use msgabor::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cis(a: f64) -> Complex64 {
    Complex64::from_polar(1.0, a)
}

/// ∫ f(s + x/2) conj g(s - x/2) e^{-2πisω} ds, trapezoid on [-L, L].
fn ambiguity_quadrature(f: &AnalyticWindow, g: &AnalyticWindow, x: f64, w: f64) -> Complex64 {
    let (l, h) = (14.0, 1.0 / 256.0);
    let n = (2.0 * l / h) as i64;
    (0..=n)
        .map(|k| {
            let s = -l + k as f64 * h;
            f.value(s + x / 2.0) * g.value(s - x / 2.0).conj() * cis(-2.0 * PI * s * w)
        })
        .sum::<Complex64>()
        * h
}

fn atom(width: f64, x: f64, w: f64, c: Complex64) -> AnalyticWindow {
    AnalyticWindow::gaussian(width).tf_shift(PhasePoint::new(x, w)).scale(c)
}

#[test]
fn gaussian_ambiguity_closed_form() {
    let g = AnalyticWindow::g0();
    assert!((ambiguity_analytic(&g, &g, PhasePoint::ORIGIN) - 1.0).norm() < 1e-15);
    assert!((ambiguity_analytic(&g, &g, PhasePoint::new(1.0, 0.0)).re - 0.20788).abs() < 1e-5);
    for (x, w) in [(0.3, -1.2), (1.7, 0.4), (-2.0, 2.5)] {
        let exact = (-PI * (x * x + w * w) / 2.0).exp();
        assert!((ambiguity_analytic(&g, &g, PhasePoint::new(x, w)) - exact).norm() < 1e-14);
        assert!((ambiguity_quadrature(&g, &g, x, w) - exact).norm() < 1e-10);
    }
}

#[test]
fn closed_forms_match_quadrature_on_random_atoms() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let mut r = |lo: f64, hi: f64| rng.random_range(lo..hi);
        let f = atom(r(0.6, 1.6), r(-1.0, 1.0), r(-1.0, 1.0), cis(r(0.0, 6.0)));
        let g = atom(r(0.6, 1.6), r(-1.0, 1.0), r(-1.0, 1.0), Complex64::new(1.0, 0.0));
        let (x, w) = (r(-1.5, 1.5), r(-1.5, 1.5));
        let exact = ambiguity_analytic(&f, &g, PhasePoint::new(x, w));
        let quad = ambiguity_quadrature(&f, &g, x, w);
        let scale = f.norm() * g.norm();
        assert!((exact - quad).norm() < 1e-9 * scale, "{exact} {quad}");
    }
}

#[test]
fn involutions() {
    let f = atom(0.8, 0.4, -0.3, cis(0.7));
    let g = AnalyticWindow::hermite(1, 1.2).tf_shift(PhasePoint::new(-0.2, 0.5));
    for k in 0..20 {
        let z = PhasePoint::new(-2.0 + 0.21 * k as f64, 1.5 - 0.17 * k as f64);
        let a = ambiguity_analytic(&f, &g, PhasePoint::new(-z.x, -z.w));
        assert!((a - ambiguity_analytic(&g, &f, z).conj()).norm() < 1e-10);
        assert!((wigner_analytic(&f, &g, z) - wigner_analytic(&g, &f, z).conj()).norm() < 1e-10);
    }
}

#[test]
fn stft_and_ambiguity_differ_by_a_phase() {
    let f = Signal::Analytic(atom(1.0, 0.5, 0.2, Complex64::new(1.0, 0.0)));
    let g = Signal::Analytic(AnalyticWindow::g0());
    let z = PhasePoint::new(0.7, -1.1);
    let v = stft(&f, &g, z).unwrap();
    let a = ambiguity(&f, &g, z).unwrap();
    assert!((v - cis(-PI * z.x * z.w) * a).norm() < 1e-14);
}

#[test]
fn wigner_of_fourier_pair_is_a_rotation() {
    let f = atom(0.9, 0.6, -0.4, cis(1.1));
    let g = atom(1.3, -0.2, 0.3, Complex64::new(1.0, 0.0));
    let (fh, gh) = (f.fourier(), g.fourier());
    for (x, w) in [(0.1, 0.2), (-0.7, 0.4), (1.2, -0.9)] {
        let lhs = wigner_analytic(&fh, &gh, PhasePoint::new(x, w));
        let rhs = wigner_analytic(&f, &g, PhasePoint::new(-w, x));
        assert!((lhs - rhs).norm() < 1e-8);
    }
}

#[test]
fn time_frequency_shifts_commute_up_to_a_phase() {
    let f = AnalyticWindow::hermite(2, 0.9);
    let (x, w) = (0.8, -1.3);
    let mt = f.tf_shift(PhasePoint::new(x, 0.0)).tf_shift(PhasePoint::new(0.0, w));
    let tm = f.tf_shift(PhasePoint::new(0.0, w)).tf_shift(PhasePoint::new(x, 0.0));
    for k in 0..40 {
        let t = -3.0 + 0.15 * k as f64;
        assert!((mt.value(t) - cis(2.0 * PI * x * w) * tm.value(t)).norm() < 1e-12);
        let direct = cis(2.0 * PI * w * t) * f.value(t - x);
        assert!((mt.value(t) - direct).norm() < 1e-12);
    }
    assert_eq!(f.tf_shift(PhasePoint::ORIGIN).value(0.3), f.value(0.3));
}

#[test]
fn sampled_fourier_of_g0() {
    let grid = Grid1::new(-8.0, 1.0 / 32.0, 512).unwrap();
    let s = AnalyticWindow::g0().sample(&grid);
    let fh = fourier(&s);
    let g0 = AnalyticWindow::g0();
    let err = (0..fh.grid.len)
        .filter(|&k| fh.grid.t(k).abs() <= 4.0)
        .map(|k| (fh.samples[k] - g0.value(fh.grid.t(k))).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
    assert!((fh.norm() - s.norm()).abs() < 1e-10);
}

#[test]
fn moyal_identity() {
    let g = AnalyticWindow::g0();
    let r = moyal_check(&g, &g, &g, &g, 6.0, 1.0 / 16.0).unwrap();
    assert!((r.lhs - 1.0).norm() < 1e-6);
    let f = atom(0.8, 0.3, 0.1, cis(0.4));
    let h = AnalyticWindow::hermite(1, 1.0);
    let r = moyal_check(&f, &g, &h, &g, 7.0, 1.0 / 16.0).unwrap();
    assert!(r.gap < 1e-6, "{r:?}");
}

#[test]
fn sampled_and_analytic_ambiguity_agree() {
    let grid = Grid1::span(-10.0, 10.0, 1.0 / 64.0).unwrap();
    let f = atom(1.0, 0.5, 0.5, Complex64::new(1.0, 0.0));
    let g = AnalyticWindow::g0();
    let z = PhasePoint::new(0.5, 1.25);
    let sampled = ambiguity(&Signal::Sampled(f.sample(&grid)), &Signal::Sampled(g.sample(&grid)), z).unwrap();
    assert!((sampled - ambiguity_analytic(&f, &g, z)).norm() < 1e-9);
}

#[test]
fn sampled_shift_out_of_range() {
    let grid = Grid1::span(-1.0, 1.0, 0.25).unwrap();
    let f = Signal::Sampled(SampledSignal::zeros(grid));
    assert!(matches!(tf_shift(&f, PhasePoint::new(5.0, 0.0)), Err(Error::ShiftOutOfRange(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ambiguity_covariance(x in -1.5f64..1.5, w in -1.5f64..1.5, t in -1.5f64..1.5, z in -1.5f64..1.5) {
        let f = atom(0.9, 0.2, -0.1, cis(0.3));
        let g = AnalyticWindow::hermite(1, 1.1);
        let lhs = ambiguity_analytic(&f.tf_shift(PhasePoint::new(x, w)), &g, PhasePoint::new(t, z));
        let rhs = cis(PI * t * w) * cis(-PI * x * (z - w)) * ambiguity_analytic(&f, &g, PhasePoint::new(t - x, z - w));
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn shifts_are_unitary(x in -3.0f64..3.0, w in -3.0f64..3.0, width in 0.5f64..2.0) {
        let f = AnalyticWindow::hermite(2, width);
        let g = AnalyticWindow::gaussian(1.0);
        let z = PhasePoint::new(x, w);
        prop_assert!((f.tf_shift(z).norm() - f.norm()).abs() < 1e-12);
        prop_assert!((f.tf_shift(z).inner(&g.tf_shift(z)) - f.inner(&g)).norm() < 1e-12);
        prop_assert!((f.fourier().inner(&g.fourier()) - f.inner(&g)).norm() < 1e-12);
    }
}
