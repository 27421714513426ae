use msgabor::internal_windows::*;
use msgabor::modelset::WindowInterval;
use msgabor::tf_core::Grid1;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn unit() -> BumpSpec {
    BumpSpec::standard(WindowInterval::new(0.5).unwrap())
}

fn sinc_oracle(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) }
}

#[test]
fn psi_hat_basics() {
    let spec = unit();
    assert_eq!(psi_n_hat(&spec, 0.0), 1.0);
    assert!(psi_n_hat(&spec, 1.0 / spec.omega_n_measure()).abs() < 1e-15);
    let long = BumpSpec { s_max: 80, ..spec };
    assert!((psi_n_hat(&spec, 1.0) - psi_n_hat(&long, 1.0)).abs() < 1e-10);
}

#[test]
fn dual_weight_is_a_sinc_product() {
    let spec = unit();
    let vol = msgabor::cutproject::CutProjectScheme::scheme_a().volume();
    assert!((dual_weight(&spec, vol, 0.0).unwrap() - 1.0 / vol).abs() < 1e-15);
    // independent product: lengths |Ω_n| eps^k, k = 0..=s_max
    let mut len = (1.0 - spec.eps.powi(spec.n as i32)) * 2.0 * spec.omega_half_width;
    let mut prod = 1.0;
    for _ in 0..=spec.s_max {
        prod *= sinc_oracle(len);
        len *= spec.eps.powi(spec.n as i32);
    }
    assert!((dual_weight(&spec, vol, 1.0).unwrap() - prod / vol).abs() < 1e-14);
    assert!((dual_weight(&spec, vol / 2.0, 1.0).unwrap() - 2.0 * prod / vol).abs() < 1e-14);
    assert!(dual_weight(&spec, 0.0, 1.0).is_err());
}

#[test]
fn sampled_bump_is_a_probability_density_on_the_window() {
    let spec = unit();
    let grid = Grid1::span(-1.0, 1.0, 1.0 / 512.0).unwrap();
    let v = psi_n_values(&spec, &grid).unwrap();
    let mass: f64 = v.iter().sum::<f64>() * grid.step;
    assert!((mass - 1.0).abs() < 1e-6);
    for (j, x) in v.iter().enumerate() {
        if grid.t(j).abs() > 0.5 {
            assert!(x.abs() < 1e-6);
        }
    }
}

#[test]
fn bump_fourier_consistency() {
    let spec = unit();
    let grid = Grid1::span(-0.625, 0.625, 1.0 / 4096.0).unwrap();
    let v = psi_n_values(&spec, &grid).unwrap();
    for k in 0..12 {
        let t = k as f64 * 0.75;
        let dft: f64 = v.iter().enumerate().map(|(j, x)| x * (2.0 * PI * t * grid.t(j)).cos()).sum::<f64>() * grid.step;
        assert!((dft - psi_n_hat(&spec, t)).abs() < 1e-8, "t={t}: {dft} vs {}", psi_n_hat(&spec, t));
    }
}

#[test]
fn weights() {
    let bump = Bump::new(unit()).unwrap();
    assert!(weight(&bump, 0.0) > 0.0);
    assert_eq!(weight(&bump, 0.5), 0.0);
    for x in [0.013, -0.21, 0.377] {
        assert!((bump.value(x) - bump.direct_value(x)).abs() < 1e-6);
    }
}

#[test]
fn limit_kernel_values() {
    let omega = WindowInterval::new(0.5).unwrap();
    let limit = DecayKernel::phi_limit(omega);
    assert_eq!(kernel_eval(&limit, 0.0).unwrap(), 1.0);
    for k in 1..=3 {
        assert!(kernel_eval(&limit, k as f64 / omega.measure()).unwrap().abs() < 1e-12);
    }
    let wide = DecayKernel::phi_limit(WindowInterval::new(4.0).unwrap());
    assert!(wide.eval(1.0 / 8.0).abs() < 1e-12);
}

#[test]
fn finite_kernel_at_zero_matches_quadrature() {
    let spec = BumpSpec { n: 6, ..unit() };
    let phi = DecayKernel::phi_n(Bump::shared(spec.clone()).unwrap());
    let grid = Grid1::span(-0.625, 0.625, 1.0 / 4096.0).unwrap();
    let l2: f64 = psi_n_values(&spec, &grid).unwrap().iter().map(|x| x * x).sum::<f64>() * grid.step;
    let at0 = kernel_eval(&phi, 0.0).unwrap();
    assert!((at0 - l2).abs() < 1e-6 * l2);
    assert!((at0 - 1.0).abs() < 0.02);
}

#[test]
fn finite_kernels_approach_the_limit() {
    let omega = WindowInterval::new(0.5).unwrap();
    let limit = DecayKernel::phi_limit(omega);
    let gap = |n: u32| {
        let phi = DecayKernel::phi_n(Bump::shared(BumpSpec { n, ..unit() }).unwrap());
        (0..=200).map(|k| -5.0 + k as f64 * 0.05).map(|t| (phi.eval(t) - limit.eval(t)).abs()).fold(0.0, f64::max)
    };
    let (g4, g8) = (gap(4), gap(8));
    assert!(g8 < 0.05 && g8 < g4, "{g4} {g8}");
}

#[test]
fn uniform_cauchy_gaps_shrink() {
    let sup = |n: u32, m: u32| {
        let (a, b) = (BumpSpec { n, ..unit() }, BumpSpec { n: m, ..unit() });
        (0..=4000).map(|k| -20.0 + k as f64 * 0.01).map(|t| (psi_n_hat(&a, t) - psi_n_hat(&b, t)).abs()).fold(0.0, f64::max)
    };
    let g = [sup(2, 4), sup(4, 6), sup(6, 8)];
    assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
    assert!(sup(2, 8) > sup(6, 8));
}

#[test]
fn wiener_tails() {
    let phi3 = DecayKernel::phi_n(Bump::shared(BumpSpec { n: 3, ..unit() }).unwrap());
    let t0 = wiener_tail(&phi3, 0.0);
    let t5 = wiener_tail(&phi3, 5.0);
    let t50 = wiener_tail(&phi3, 50.0);
    assert!(t0.summable && t0.value.is_finite());
    assert!(t0.value > t5.value && t5.value > t50.value);
    let limit = DecayKernel::phi_limit(WindowInterval::new(0.5).unwrap());
    let l10 = wiener_tail(&limit, 10.0);
    assert!(!l10.summable && l10.value.is_infinite());
    // direct parts grow like log(K_max / T): roughly (2/π) log 10 more mass from 10 than from 100
    let l100 = wiener_tail(&limit, 100.0);
    let diff = l10.direct - l100.direct;
    assert!((diff - 2.0 / PI * 10f64.ln()).abs() < 0.3, "{diff}");
    assert_eq!(wiener_tail(&phi3, 1e7).value, 0.0);
}

fn phi2() -> &'static DecayKernel {
    static K: OnceLock<DecayKernel> = OnceLock::new();
    K.get_or_init(|| DecayKernel::phi_n(Bump::shared(BumpSpec { n: 2, ..unit() }).unwrap()))
}

proptest! {
    #[test]
    fn psi_hat_is_even(t in -200.0f64..200.0, n in 1u32..8) {
        let spec = BumpSpec { n, ..unit() };
        prop_assert_eq!(psi_n_hat(&spec, t), psi_n_hat(&spec, -t));
    }

    #[test]
    fn psi_hat_is_bounded_by_its_envelope(t in 0.0f64..500.0, n in 1u32..6) {
        let spec = BumpSpec { n, ..unit() };
        prop_assert!(psi_n_hat(&spec, t).abs() <= psi_n_hat_envelope(&spec, t) * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_envelopes_dominate(t in 0.0f64..300.0) {
        let phi = phi2();
        prop_assert!(phi.eval(t).abs() <= phi.envelope(t) * (1.0 + 1e-9));
        let limit = DecayKernel::phi_limit(WindowInterval::new(0.5).unwrap());
        prop_assert!(limit.eval(t).abs() <= limit.envelope(t) + 1e-15);
    }
}
