use msgabor::cutproject::*;
use proptest::prelude::*;

fn scheme_a_rows() -> [[f64; 3]; 3] {
    let s = f64::sqrt;
    [[1.0, 0.0, s(2.0)], [0.0, 1.0, s(3.0)], [s(5.0), s(7.0), 1.0]]
}

#[test]
fn identity_box_has_27_points() {
    let id = CutProjectScheme::new(1, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let pts = id.enumerate_in_box(&[-1.5; 3], &[1.5; 3]).unwrap();
    assert_eq!(pts.len(), 27);
}

#[test]
fn scheme_a_box_count_matches_brute_force() {
    let rows = scheme_a_rows();
    let mut brute = 0;
    for a in -40i64..=40 {
        for b in -40i64..=40 {
            for c in -40i64..=40 {
                // generators are the columns of the row listing
                let p: Vec<f64> = rows.iter().map(|r| a as f64 * r[0] + b as f64 * r[1] + c as f64 * r[2]).collect();
                if p.iter().all(|v| v.abs() <= 10.0) {
                    brute += 1;
                }
            }
        }
    }
    let pts = CutProjectScheme::scheme_a().enumerate_in_box(&[-10.0; 3], &[10.0; 3]).unwrap();
    assert_eq!(pts.len(), brute);
}

#[test]
fn scheme_a_volumes() {
    let s = CutProjectScheme::scheme_a();
    let det = (1.0 - 21f64.sqrt() - 10f64.sqrt()).abs();
    assert!((s.volume() - det).abs() < 1e-12);
    assert!((s.volume() - 6.74486).abs() < 1e-5);
    assert!((s.dual().volume() - 1.0 / det).abs() < 1e-12);
}

#[test]
fn scheme_a_projections() {
    let s = CutProjectScheme::scheme_a();
    let pts = s.enumerate_in_box(&[-3.0; 3], &[3.0; 3]).unwrap();
    let e1 = pts.iter().find(|p| p.coords == vec![1, 0, 0]).unwrap();
    assert_eq!(s.project(e1, Projection::Physical).unwrap(), vec![1.0, 0.0]);
    assert!((s.project(e1, Projection::Internal).unwrap()[0] - 5f64.sqrt()).abs() < 1e-14);
    let e3 = pts.iter().find(|p| p.coords == vec![0, 0, 1]).unwrap();
    let phys = s.project(e3, Projection::Physical).unwrap();
    assert!((phys[0] - 2f64.sqrt()).abs() < 1e-14 && (phys[1] - 3f64.sqrt()).abs() < 1e-14);
    assert_eq!(s.project(e3, Projection::Internal).unwrap(), vec![1.0]);
}

#[test]
fn plain_lattice_dual_and_adjoint() {
    let l = PlainLattice::separable(0.5, 0.5).unwrap();
    assert!((l.dual().volume() - 4.0).abs() < 1e-14);
    let pts = l.dual().enumerate_around(&[0.0, 0.0], 2.5).unwrap();
    assert!(pts.iter().all(|p| p.point.iter().all(|v| (v / 2.0 - (v / 2.0).round()).abs() < 1e-12)));
    assert_eq!(pts.len(), 9);
}

#[test]
fn diagnostics_on_scheme_a() {
    let s = CutProjectScheme::scheme_a();
    let d20 = scheme_diagnostics(&s, 20.0, 1e-9).unwrap();
    let d50 = scheme_diagnostics(&s, 50.0, 1e-9).unwrap();
    assert!(d20.integrality_max_deviation < 1e-9 && d20.integrality_pass);
    assert!(d50.internal_covering_radius < d20.internal_covering_radius);
    assert!(d20.pass);
}

#[test]
fn degenerate_physical_rows_fail_injectivity() {
    let s = CutProjectScheme::new(1, &[vec![1.0, 0.0, 0.5], vec![1.0, 0.0, 1.5], vec![0.0, 1.0, 0.0]]).unwrap();
    let d = scheme_diagnostics(&s, 10.0, 1e-9).unwrap();
    assert!(!d.injectivity_pass);
    assert!(!d.pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scheme_and_dual_pair_to_integers(a in -20i64..20, b in -20i64..20, c in -20i64..20,
                                        p in -20i64..20, q in -20i64..20, r in -20i64..20) {
        let s = CutProjectScheme::scheme_a();
        let x = s.lattice().embed(&[a, b, c]);
        let y = s.dual().lattice().embed(&[p, q, r]);
        let dot: f64 = x.iter().zip(&y).map(|(u, v)| u * v).sum();
        prop_assert!((dot - dot.round()).abs() < 1e-9);
        prop_assert_eq!(dot.round() as i64, a * p + b * q + c * r);
    }

    #[test]
    fn enumeration_is_exact_for_random_boxes(cx in -5.0f64..5.0, cy in -5.0f64..5.0, cz in -5.0f64..5.0, w in 0.5f64..3.0) {
        let s = CutProjectScheme::scheme_a();
        let lo = [cx - w, cy - w, cz - w];
        let hi = [cx + w, cy + w, cz + w];
        let pts = s.enumerate_in_box(&lo, &hi).unwrap();
        for p in &pts {
            prop_assert!(p.point.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| *v >= l - 1e-12 && *v <= h + 1e-12));
        }
        // independent count from a wider box filtered in test code
        let wide = s.enumerate_in_box(&[cx - w - 1.0, cy - w - 1.0, cz - w - 1.0], &[cx + w + 1.0, cy + w + 1.0, cz + w + 1.0]).unwrap();
        let inside = wide.iter().filter(|p| p.point.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| v >= l && v <= h)).count();
        prop_assert_eq!(inside, pts.len());
    }
}
