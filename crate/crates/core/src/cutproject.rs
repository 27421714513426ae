//! Lattices in R^(2d) x R and plain lattices in R^(2d): bases, duals,
//! projections and exact enumeration of lattice points inside boxes.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Upper bound on the number of integer slabs scanned by one enumeration.
const MAX_SCAN: f64 = 5e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub point: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    Physical,
    Internal,
}

impl LatticePoint {
    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Physical part (first 2d coordinates) or internal part (last coordinate).
    pub fn project(&self, d: usize, which: Projection) -> Result<Vec<f64>> {
        let n = self.point.len();
        match which {
            Projection::Physical if n >= 2 * d => Ok(self.point[..2 * d].to_vec()),
            Projection::Internal if n == 2 * d + 1 => Ok(vec![self.point[2 * d]]),
            Projection::Internal => Err(Error::NoInternalSpace),
            Projection::Physical => invalid("point dimension smaller than 2d"),
        }
    }
}

/// A full-rank lattice `basis * Z^n`; columns of `basis` are the generators.
#[derive(Clone, Debug)]
pub struct LatticeBasis {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
    volume: f64,
}

impl LatticeBasis {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return invalid(format!("basis must be square, got {n} rows"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("basis entries must be finite");
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_matrix(basis: DMatrix<f64>) -> Result<Self> {
        let n = basis.nrows();
        let scale = basis.amax().max(f64::MIN_POSITIVE).powi(n as i32);
        let det = basis.determinant();
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::SingularBasis);
        }
        let inverse = basis.clone().try_inverse().ok_or(Error::SingularBasis)?;
        Ok(Self { basis, inverse, volume: det.abs() })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.basis.row(i).iter().copied().collect())
            .collect()
    }

    /// Inverse-transpose basis; exact involution since the inverse is stored.
    pub fn dual(&self) -> Self {
        Self {
            basis: self.inverse.transpose(),
            inverse: self.basis.transpose(),
            volume: 1.0 / self.volume,
        }
    }

    pub fn embed(&self, coords: &[i64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|j| self.basis[(r, j)] * coords[j] as f64).sum())
            .collect()
    }

    /// `basis · u` for real coordinates.
    pub fn embed_real(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|j| self.basis[(r, j)] * u[j]).sum())
            .collect()
    }

    pub fn point(&self, coords: &[i64]) -> LatticePoint {
        LatticePoint { coords: coords.to_vec(), point: self.embed(coords) }
    }

    /// Real preimage `basis^-1 x`.
    pub fn preimage(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|j| self.inverse[(r, j)] * x[j]).sum())
            .collect()
    }

    /// All lattice points whose embedding lies in the closed box `[lo, hi]`,
    /// sorted lexicographically by integer coordinates.
    pub fn enumerate_in_box(&self, lo: &[f64], hi: &[f64]) -> Result<Vec<LatticePoint>> {
        let n = self.dim();
        if lo.len() != n || hi.len() != n {
            return invalid(format!("box dimension must be {n}"));
        }
        if lo.iter().chain(hi).any(|v| !v.is_finite()) {
            return invalid("box bounds must be finite");
        }
        if lo.iter().zip(hi).any(|(a, b)| a > b) {
            return invalid("empty box");
        }

        // integer bounding box of the preimage parallelepiped
        let mut kmin = vec![f64::INFINITY; n];
        let mut kmax = vec![f64::NEG_INFINITY; n];
        let mut corner = vec![0.0; n];
        for mask in 0..(1usize << n) {
            for j in 0..n {
                corner[j] = if mask >> j & 1 == 1 { hi[j] } else { lo[j] };
            }
            for (j, y) in self.preimage(&corner).into_iter().enumerate() {
                kmin[j] = kmin[j].min(y);
                kmax[j] = kmax[j].max(y);
            }
        }
        let kmin: Vec<i64> = kmin.iter().map(|v| (v - 1e-9).floor() as i64).collect();
        let kmax: Vec<i64> = kmax.iter().map(|v| (v + 1e-9).ceil() as i64).collect();

        // the widest coordinate is solved for, the rest are scanned
        let solved = (0..n).max_by_key(|&j| kmax[j] - kmin[j]).unwrap();
        let scanned: Vec<usize> = (0..n).filter(|&j| j != solved).collect();
        let scan_size: f64 = scanned.iter().map(|&j| (kmax[j] - kmin[j] + 1) as f64).product();
        if scan_size > MAX_SCAN {
            return invalid(format!("box too large for enumeration ({scan_size:.3e} slabs)"));
        }

        let outer: Vec<i64> = match scanned.first() {
            Some(&j) => (kmin[j]..=kmax[j]).collect(),
            None => vec![0],
        };
        let mut points: Vec<LatticePoint> = outer
            .par_iter()
            .flat_map_iter(|&first| {
                let mut found = Vec::new();
                let mut k = vec![0i64; n];
                if let Some(&j) = scanned.first() {
                    k[j] = first;
                }
                let rest = &scanned[scanned.len().min(1)..];
                for &j in rest {
                    k[j] = kmin[j];
                }
                loop {
                    self.solve_line(&mut k, solved, kmin[solved], kmax[solved], lo, hi, &mut found);
                    // odometer over the remaining scanned coordinates
                    let mut advanced = false;
                    for &j in rest {
                        if k[j] < kmax[j] {
                            k[j] += 1;
                            advanced = true;
                            break;
                        }
                        k[j] = kmin[j];
                    }
                    if !advanced {
                        break;
                    }
                }
                found
            })
            .collect();
        points.sort_by(|a, b| a.coords.cmp(&b.coords));
        Ok(points)
    }

    #[allow(clippy::too_many_arguments)]
    fn solve_line(
        &self,
        k: &mut [i64],
        s: usize,
        smin: i64,
        smax: i64,
        lo: &[f64],
        hi: &[f64],
        out: &mut Vec<LatticePoint>,
    ) {
        let n = self.dim();
        let mut a = smin as f64;
        let mut b = smax as f64;
        let mut partial = vec![0.0; n];
        for r in 0..n {
            partial[r] = (0..n)
                .filter(|&j| j != s)
                .map(|j| self.basis[(r, j)] * k[j] as f64)
                .sum();
            let c = self.basis[(r, s)];
            let (l, u) = (lo[r] - partial[r], hi[r] - partial[r]);
            if c.abs() < 1e-300 {
                if l > 1e-12 * (1.0 + l.abs()) || u < -1e-12 * (1.0 + u.abs()) {
                    return;
                }
                continue;
            }
            let (l, u) = if c > 0.0 { (l / c, u / c) } else { (u / c, l / c) };
            a = a.max(l);
            b = b.min(u);
        }
        if a > b + 2.0 {
            return;
        }
        let start = (a.floor() as i64 - 1).max(smin);
        let end = (b.ceil() as i64 + 1).min(smax);
        for ks in start..=end {
            k[s] = ks;
            let x = self.embed(k);
            if x.iter().zip(lo).zip(hi).all(|((v, l), h)| v >= l && v <= h) {
                out.push(LatticePoint { coords: k.to_vec(), point: x });
            }
        }
    }
}

/// JSON form of a scheme or plain lattice: `{ "d": 1, "basis": [[..],..] }` (rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDef {
    pub d: usize,
    pub basis: Vec<Vec<f64>>,
}

/// Lattice Γ in R^(2d) x R with p1 = first 2d coordinates, p2 = last one.
#[derive(Clone, Debug)]
pub struct CutProjectScheme {
    d: usize,
    lattice: LatticeBasis,
}

impl CutProjectScheme {
    pub fn new(d: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if d == 0 {
            return invalid("d must be positive");
        }
        if rows.len() != 2 * d + 1 {
            return invalid(format!("scheme basis must be {0}x{0}", 2 * d + 1));
        }
        Ok(Self { d, lattice: LatticeBasis::from_rows(rows)? })
    }

    pub fn from_def(def: &BasisDef) -> Result<Self> {
        Self::new(def.d, &def.basis)
    }

    pub fn to_def(&self) -> BasisDef {
        BasisDef { d: self.d, basis: self.lattice.rows() }
    }

    /// Default fixture: rows (1,0,√2), (0,1,√3), (√5,√7,1).
    pub fn scheme_a() -> Self {
        let s = f64::sqrt;
        Self::new(1, &[vec![1.0, 0.0, s(2.0)], vec![0.0, 1.0, s(3.0)], vec![s(5.0), s(7.0), 1.0]])
            .expect("fixture basis is invertible")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    pub fn volume(&self) -> f64 {
        self.lattice.volume()
    }

    pub fn dual(&self) -> Self {
        Self { d: self.d, lattice: self.lattice.dual() }
    }

    pub fn enumerate_in_box(&self, lo: &[f64], hi: &[f64]) -> Result<Vec<LatticePoint>> {
        self.lattice.enumerate_in_box(lo, hi)
    }

    /// Points with |p1| ≤ radius (sup norm, around `center`) and p2 in [tlo, thi].
    pub fn enumerate_slab(
        &self,
        center: &[f64],
        radius: f64,
        tlo: f64,
        thi: f64,
    ) -> Result<Vec<LatticePoint>> {
        let m = 2 * self.d;
        let mut lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let mut hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        if lo.len() != m {
            return invalid(format!("center must have {m} coordinates"));
        }
        lo.push(tlo);
        hi.push(thi);
        self.lattice.enumerate_in_box(&lo, &hi)
    }

    pub fn project(&self, point: &LatticePoint, which: Projection) -> Result<Vec<f64>> {
        point.project(self.d, which)
    }
}

pub fn dual_scheme(scheme: &CutProjectScheme) -> CutProjectScheme {
    scheme.dual()
}

/// Plain lattice Λ = A Z^(2d) in phase space.
#[derive(Clone, Debug)]
pub struct PlainLattice {
    d: usize,
    lattice: LatticeBasis,
}

impl PlainLattice {
    pub fn new(d: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if d == 0 || rows.len() != 2 * d {
            return invalid(format!("plain lattice basis must be {0}x{0}", 2 * d));
        }
        Ok(Self { d, lattice: LatticeBasis::from_rows(rows)? })
    }

    pub fn from_def(def: &BasisDef) -> Result<Self> {
        Self::new(def.d, &def.basis)
    }

    /// a Z x b Z in the time-frequency plane.
    pub fn separable(a: f64, b: f64) -> Result<Self> {
        Self::new(1, &[vec![a, 0.0], vec![0.0, b]])
    }

    pub fn scaled_integer(c: f64) -> Result<Self> {
        Self::separable(c, c)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    pub fn volume(&self) -> f64 {
        self.lattice.volume()
    }

    pub fn dual(&self) -> Self {
        Self { d: self.d, lattice: self.lattice.dual() }
    }

    /// Adjoint lattice Λ° = J Λ*, J = ((0, I), (-I, 0)).
    pub fn adjoint(&self) -> Self {
        let dual = self.lattice.dual();
        let m = 2 * self.d;
        let b = dual.matrix();
        let rotated = DMatrix::from_fn(m, m, |i, j| {
            if i < self.d {
                b[(i + self.d, j)]
            } else {
                -b[(i - self.d, j)]
            }
        });
        Self { d: self.d, lattice: LatticeBasis::from_matrix(rotated).expect("rotation of a basis") }
    }

    pub fn enumerate_in_box(&self, lo: &[f64], hi: &[f64]) -> Result<Vec<LatticePoint>> {
        self.lattice.enumerate_in_box(lo, hi)
    }

    /// Points with sup-norm distance at most `radius` from `center`.
    pub fn enumerate_around(&self, center: &[f64], radius: f64) -> Result<Vec<LatticePoint>> {
        let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        self.lattice.enumerate_in_box(&lo, &hi)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeDiagnostics {
    pub radius: f64,
    pub point_count: usize,
    pub injectivity_min_distance: f64,
    pub injectivity_pass: bool,
    pub internal_covering_radius: f64,
    pub integrality_max_deviation: f64,
    pub integrality_pass: bool,
    pub pass: bool,
}

/// Heuristic checks of injectivity of p1, density of p2(Γ) and exact duality.
pub fn scheme_diagnostics(scheme: &CutProjectScheme, radius: f64, tol: f64) -> Result<SchemeDiagnostics> {
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    let n = scheme.lattice.dim();
    let lo = vec![-radius; n];
    let hi = vec![radius; n];
    let pts: Vec<LatticePoint> = scheme
        .enumerate_in_box(&lo, &hi)?
        .into_iter()
        .filter(|p| p.point.iter().map(|v| v * v).sum::<f64>() <= radius * radius)
        .collect();
    let m = 2 * scheme.d;

    let physical: Vec<Vec<f64>> = pts.iter().map(|p| p.point[..m].to_vec()).collect();
    let min_dist = min_pairwise_distance(&physical);

    let mut internal: Vec<f64> = pts
        .iter()
        .map(|p| p.point[m])
        .filter(|t| (-0.5..=0.5).contains(t))
        .collect();
    internal.sort_by(f64::total_cmp);
    let covering = covering_radius(&internal, -0.5, 0.5);

    let dual_pts = scheme.dual().enumerate_in_box(&lo, &hi)?;
    let stride = |len: usize| (len / 200).max(1);
    let mut dev: f64 = 0.0;
    for p in pts.iter().step_by(stride(pts.len())) {
        for q in dual_pts.iter().step_by(stride(dual_pts.len())) {
            let dot: f64 = p.point.iter().zip(&q.point).map(|(a, b)| a * b).sum();
            dev = dev.max((dot - dot.round()).abs());
        }
    }
    let injectivity_pass = min_dist > tol;
    let integrality_pass = dev < 1e-9;
    Ok(SchemeDiagnostics {
        radius,
        point_count: pts.len(),
        injectivity_min_distance: min_dist,
        injectivity_pass,
        internal_covering_radius: covering,
        integrality_max_deviation: dev,
        integrality_pass,
        pass: injectivity_pass && integrality_pass,
    })
}

/// Minimum Euclidean distance between distinct entries (sweep along the first axis).
pub fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let mut best = f64::INFINITY;
    for (i, &a) in idx.iter().enumerate() {
        for &b in &idx[i + 1..] {
            if points[b][0] - points[a][0] >= best {
                break;
            }
            let d2: f64 = points[a].iter().zip(&points[b]).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.min(d2.sqrt());
        }
    }
    best
}

/// Largest distance from a point of [lo, hi] to the sorted sample set.
pub fn covering_radius(sorted: &[f64], lo: f64, hi: f64) -> f64 {
    match (sorted.first(), sorted.last()) {
        (Some(&first), Some(&last)) => {
            let inner = sorted.windows(2).map(|w| (w[1] - w[0]) / 2.0).fold(0.0, f64::max);
            inner.max(first - lo).max(hi - last)
        }
        _ => hi - lo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_box_count() {
        let s = CutProjectScheme::new(
            1,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        let pts = s.enumerate_in_box(&[-1.5; 3], &[1.5; 3]).unwrap();
        assert_eq!(pts.len(), 27);
    }

    #[test]
    fn tiny_box_gives_origin() {
        let s = CutProjectScheme::scheme_a();
        let pts = s.enumerate_in_box(&[-1e-6; 3], &[1e-6; 3]).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].is_origin());
    }

    #[test]
    fn scheme_a_projections() {
        let s = CutProjectScheme::scheme_a();
        let p = s.lattice().point(&[1, 0, 0]);
        assert_eq!(s.project(&p, Projection::Physical).unwrap(), vec![1.0, 0.0]);
        assert!((s.project(&p, Projection::Internal).unwrap()[0] - 5f64.sqrt()).abs() < 1e-15);
        let q = s.lattice().point(&[0, 0, 1]);
        let phys = s.project(&q, Projection::Physical).unwrap();
        assert!((phys[0] - 2f64.sqrt()).abs() < 1e-15 && (phys[1] - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.project(&q, Projection::Internal).unwrap(), vec![1.0]);
    }

    #[test]
    fn plain_lattice_has_no_internal_space() {
        let l = PlainLattice::scaled_integer(1.0).unwrap();
        let p = l.lattice().point(&[1, 2]);
        assert_eq!(p.project(1, Projection::Internal), Err(Error::NoInternalSpace));
    }

    #[test]
    fn singular_basis_rejected() {
        let r = CutProjectScheme::new(
            1,
            &[vec![1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
        );
        assert_eq!(r.unwrap_err(), Error::SingularBasis);
    }

    #[test]
    fn dual_of_diagonal() {
        let l = PlainLattice::scaled_integer(0.5).unwrap();
        let d = l.dual();
        assert_eq!(d.lattice().rows(), vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(d.dual().lattice().rows(), l.lattice().rows());
    }

    #[test]
    fn adjoint_of_separable() {
        let l = PlainLattice::separable(0.5, 0.25).unwrap();
        let adj = l.adjoint();
        // Λ* = 2Z x 4Z, J(x, ω) = (ω, -x)
        let p = adj.lattice().embed(&[1, 0]);
        let q = adj.lattice().embed(&[0, 1]);
        assert_eq!(p, vec![0.0, -2.0]);
        assert_eq!(q, vec![4.0, 0.0]);
    }

    #[test]
    fn scheme_a_dual_volume() {
        let s = CutProjectScheme::scheme_a();
        let expected = (1.0 - 21f64.sqrt() - 10f64.sqrt()).abs();
        assert!((s.volume() - expected).abs() < 1e-12 * expected);
        assert!((s.dual().volume() - 1.0 / expected).abs() < 1e-12);
    }

    #[test]
    fn covering_radius_basic() {
        assert_eq!(covering_radius(&[0.0], -0.5, 0.5), 0.5);
        assert!((covering_radius(&[-0.25, 0.25], -0.5, 0.5) - 0.25).abs() < 1e-15);
    }
}
