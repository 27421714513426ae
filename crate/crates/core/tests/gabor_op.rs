use msgabor::cutproject::*;
use msgabor::duality::{bump_window, painless_dual, painless_nodes};
use msgabor::gabor_op::*;
use msgabor::internal_windows::*;
use msgabor::modelset::*;
use msgabor::tf_core::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;

fn scheme_a(hw: f64) -> ModelSetSpec {
    ModelSetSpec::new(CutProjectScheme::scheme_a(), WindowInterval::new(hw).unwrap())
}

fn lattice_system(c: f64) -> GaborSystem {
    GaborSystem::analytic(vec![AnalyticWindow::g0()], NodeSource::Lattice(PlainLattice::scaled_integer(c).unwrap())).unwrap()
}

fn grid() -> Grid1 {
    Grid1::span(-6.0, 6.0, 1.0 / 32.0).unwrap()
}

fn policy() -> TruncationPolicy {
    TruncationPolicy::new(8.0, 1e-8)
}

#[test]
fn single_node_is_a_rank_one_projection() {
    let set = WeightedPointSet::explicit(&[vec![0.0, 0.0]]);
    let sys = GaborSystem::analytic(vec![AnalyticWindow::g0()], NodeSource::Explicit(set)).unwrap();
    let f = Signal::Analytic(AnalyticWindow::g0());
    let out = frame_apply(&sys, None, &f, &grid(), &policy()).unwrap();
    let g0 = AnalyticWindow::g0().sample(&grid());
    assert!(out.signal.sup_distance(&g0).unwrap() < 1e-14);
    let empty = GaborSystem::analytic(vec![AnalyticWindow::g0()], NodeSource::Explicit(WeightedPointSet::default())).unwrap();
    assert_eq!(frame_apply(&empty, None, &f, &grid(), &policy()).unwrap().signal.sup_norm(), 0.0);
}

#[test]
fn explicit_duals_equal_to_the_windows_change_nothing() {
    let sys = lattice_system(0.5);
    let f = Signal::Analytic(AnalyticWindow::hermite(1, 1.0));
    let a = frame_apply(&sys, None, &f, &grid(), &policy()).unwrap();
    let b = frame_apply(&sys, Some(&sys.windows), &f, &grid(), &policy()).unwrap();
    assert_eq!(a.signal.samples, b.signal.samples);
}

#[test]
fn linearity() {
    let sys = GaborSystem::analytic(vec![AnalyticWindow::g0()], NodeSource::ModelSet(scheme_a(4.0))).unwrap();
    let f1 = AnalyticWindow::hermite(1, 1.0);
    let f2 = AnalyticWindow::gaussian(0.7).tf_shift(PhasePoint::new(0.5, -1.0));
    let (al, be) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
    let run = |f: AnalyticWindow| frame_apply(&sys, None, &Signal::Analytic(f), &grid(), &policy()).unwrap().signal;
    let combo = run(f1.scale(al).plus(&f2.scale(be)));
    let (s1, s2) = (run(f1), run(f2));
    let expected = SampledSignal { grid: grid(), samples: s1.samples.iter().zip(&s2.samples).map(|(a, b)| al * a + be * b).collect() };
    assert!(combo.sup_distance(&expected).unwrap() < 1e-10);
}

#[test]
fn frame_operator_is_self_adjoint() {
    for sys in [lattice_system(0.8), GaborSystem::analytic(vec![AnalyticWindow::g0()], NodeSource::ModelSet(scheme_a(4.0))).unwrap()] {
        let f1 = AnalyticWindow::hermite(1, 1.0).tf_shift(PhasePoint::new(0.4, -0.2));
        let f2 = AnalyticWindow::gaussian(0.7).tf_shift(PhasePoint::new(-0.3, 0.5));
        let s1 = frame_expand(&sys, None, &f1, &policy()).unwrap().window;
        let s2 = frame_expand(&sys, None, &f2, &policy()).unwrap().window;
        assert!((s1.inner(&f2) - f1.inner(&s2)).norm() < 1e-9);
        // sampled route
        let g = grid();
        let a = frame_apply(&sys, None, &Signal::Analytic(f1.clone()), &g, &policy()).unwrap().signal;
        let b = frame_apply(&sys, None, &Signal::Analytic(f2.clone()), &g, &policy()).unwrap().signal;
        let lhs = a.inner(&f2.sample(&g)).unwrap();
        let rhs = f1.sample(&g).inner(&b).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
    }
}

#[test]
fn covariance() {
    let g = AnalyticWindow::g0();
    let f = AnalyticWindow::hermite(1, 1.0);
    let wide = Grid1::span(-8.0, 8.0, 1.0 / 16.0).unwrap();
    let lat = lattice_system(1.0);
    assert_eq!(covariance_residual(&lat, None, PhasePoint::ORIGIN, &f, &wide, &policy()).unwrap().residual, 0.0);
    let r = covariance_residual(&lat, None, PhasePoint::new(1.0, -1.0), &f, &wide, &policy()).unwrap();
    assert!(r.residual < 1e-8, "{r:?}");
    let ms = GaborSystem::analytic(vec![g], NodeSource::ModelSet(scheme_a(0.5))).unwrap();
    let r = covariance_residual(&ms, None, PhasePoint::new(0.3, 0.7), &f, &wide, &TruncationPolicy::new(8.0, 1e-6)).unwrap();
    assert!(r.residual < 1e-6, "{r:?}");
}

#[test]
fn painless_frame_bounds_match_the_symbol() {
    let grid = Grid1::span(-4.0, 4.0, 1.0 / 64.0).unwrap();
    let bump = Bump::new(BumpSpec::standard(WindowInterval::new(1.0).unwrap())).unwrap();
    let g = bump_window(&bump, &grid);
    let d = painless_dual(0.5, 0.5, &g).unwrap();
    let sys = GaborSystem::new(vec![Signal::Sampled(g)], NodeSource::Explicit(painless_nodes(0.5, 0.5, &grid, 2.0).unwrap()), WeightMode::None).unwrap();
    let b = frame_bounds_estimate(&sys, &grid, &TruncationPolicy::new(f64::MAX, 1.0), 11).unwrap();
    assert!((b.upper / d.symbol_max - 1.0).abs() < 0.02, "{b:?} {}", d.symbol_max);
    assert!((b.lower / d.symbol_min - 1.0).abs() < 0.02, "{b:?} {}", d.symbol_min);
}

#[test]
fn sparse_model_set_is_not_a_frame() {
    let sys = GaborSystem::analytic(vec![AnalyticWindow::g0()], NodeSource::ModelSet(scheme_a(0.5))).unwrap();
    let grid = Grid1::span(-4.0, 4.0, 1.0 / 8.0).unwrap();
    let b = frame_bounds_estimate(&sys, &grid, &TruncationPolicy::new(8.0, 1.0), 3).unwrap();
    assert!(b.lower < 1e-2 * b.upper, "{b:?}");
}

#[test]
fn large_n_weights_approach_the_unweighted_operator() {
    let spec = scheme_a(0.5);
    assert!(genericity_margin(&spec, 10.0).unwrap() > 0.0);
    let f = AnalyticWindow::hermite(1, 1.0);
    let plain = GaborSystem::analytic(vec![AnalyticWindow::g0()], NodeSource::ModelSet(spec.clone())).unwrap();
    let target = frame_expand(&plain, None, &f, &policy()).unwrap().window;
    let gap = |n: u32| {
        let bump = Arc::new(Bump::new(BumpSpec { n, ..BumpSpec::standard(spec.window) }).unwrap());
        let sys = plain.clone().with_weights(WeightMode::Bump { bump, scale: spec.window.measure() }).unwrap();
        let w = frame_expand(&sys, None, &f, &policy()).unwrap().window;
        w.plus(&target.scale(Complex64::new(-1.0, 0.0))).norm()
    };
    let (g1, g3, g6) = (gap(1), gap(3), gap(6));
    assert!(g3 < g1 && g6 < g3, "{g1} {g3} {g6}");
}

#[test]
fn lattices_reject_bump_weights() {
    let bump = Arc::new(Bump::new(BumpSpec::standard(WindowInterval::new(0.5).unwrap())).unwrap());
    let r = lattice_system(1.0).with_weights(WeightMode::Bump { bump, scale: 1.0 });
    assert!(r.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lattice_covariance_on_lattice_shifts(k in -3i64..3, l in -3i64..3) {
        let lat = lattice_system(1.0);
        let wide = Grid1::span(-8.0, 8.0, 1.0 / 16.0).unwrap();
        let r = covariance_residual(&lat, None, PhasePoint::new(k as f64, l as f64), &AnalyticWindow::g0(), &wide, &policy()).unwrap();
        prop_assert!(r.residual < 1e-8);
    }

    #[test]
    fn analysis_matches_node_coefficients(x in -2.0f64..2.0, w in -2.0f64..2.0) {
        let f = Signal::Analytic(AnalyticWindow::hermite(2, 1.0));
        let g = Signal::Analytic(AnalyticWindow::g0());
        let z = PhasePoint::new(x, w);
        let grid = Grid1::span(-10.0, 10.0, 1.0 / 64.0).unwrap();
        let sampled = node_coefficient(&f.render(&grid).map(Signal::Sampled).unwrap(), &g, z).unwrap();
        let exact = node_coefficient(&f, &g, z).unwrap();
        prop_assert!((sampled - exact).norm() < 1e-10);
    }
}
