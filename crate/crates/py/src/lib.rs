//! Python bindings: windows, model sets, bumps, the Poisson and duality checks,
//! and the acceptance suite. Reports come back as plain dicts.

use std::sync::Arc;

use msgabor_core::appoisson::{self, Domain, Gaussian2D, PsfFunction, SeriesPolicy};
use msgabor_core::cutproject::{CutProjectScheme, PlainLattice};
use msgabor_core::duality::{self, JanssenReference};
use msgabor_core::internal_windows::{Bump, BumpSpec, DecayKernel, KernelKind};
use msgabor_core::modelset::{self, ModelSetSpec, WindowInterval};
use msgabor_core::suite;
use msgabor_core::tf_core::{self, AnalyticWindow, Grid1, PhasePoint, Signal};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: msgabor_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn point(z: (f64, f64)) -> PhasePoint {
    PhasePoint::new(z.0, z.1)
}

fn policy(radius: f64, dual_radius: f64, tol: f64, internal_cutoff: Option<f64>) -> SeriesPolicy {
    let p = SeriesPolicy::new(radius, dual_radius, tol);
    match internal_cutoff {
        Some(c) => p.with_cutoff(c),
        None => p,
    }
}

/// Finite combination of Gauss-Hermite atoms.
#[pyclass(name = "AnalyticWindow", module = "msgabor", frozen)]
struct PyWindow {
    inner: AnalyticWindow,
}

#[pymethods]
impl PyWindow {
    #[staticmethod]
    fn g0() -> Self {
        Self { inner: AnalyticWindow::g0() }
    }

    #[staticmethod]
    fn gaussian(width: f64) -> Self {
        Self { inner: AnalyticWindow::gaussian(width) }
    }

    #[staticmethod]
    #[pyo3(signature = (order, width=1.0))]
    fn hermite(order: u32, width: f64) -> Self {
        Self { inner: AnalyticWindow::hermite(order, width) }
    }

    /// π(x, ω) applied to the window.
    fn tf_shift(&self, x: f64, w: f64) -> Self {
        Self { inner: self.inner.tf_shift(PhasePoint::new(x, w)) }
    }

    fn scale(&self, c: Complex64) -> Self {
        Self { inner: self.inner.scale(c) }
    }

    fn __add__(&self, other: PyRef<'_, PyWindow>) -> Self {
        Self { inner: self.inner.plus(&other.inner) }
    }

    fn inner(&self, other: PyRef<'_, PyWindow>) -> Complex64 {
        self.inner.inner(&other.inner)
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn __call__(&self, t: f64) -> Complex64 {
        self.inner.value(t)
    }

    /// Samples on [lo, hi) with the given step.
    fn sample(&self, lo: f64, hi: f64, step: f64) -> PyResult<Vec<Complex64>> {
        let grid = Grid1::span(lo, hi, step).map_err(err)?;
        Ok(self.inner.render(&grid))
    }

    /// Ambiguity function A(self, g)(x, ω).
    fn ambiguity(&self, g: PyRef<'_, PyWindow>, x: f64, w: f64) -> Complex64 {
        tf_core::ambiguity_analytic(&self.inner, &g.inner, PhasePoint::new(x, w))
    }

    fn __repr__(&self) -> String {
        format!("AnalyticWindow(atoms={})", self.inner.len())
    }
}

fn windows(list: &[PyRef<'_, PyWindow>]) -> Vec<AnalyticWindow> {
    list.iter().map(|w| w.inner.clone()).collect()
}

/// Smooth bump ψ_n on the internal window [-w, w].
#[pyclass(name = "Bump", module = "msgabor", frozen)]
struct PyBump {
    inner: Arc<Bump>,
}

#[pymethods]
impl PyBump {
    #[new]
    #[pyo3(signature = (omega_half_width=0.5, eps=0.5, n=1, s_max=40))]
    fn new(omega_half_width: f64, eps: f64, n: u32, s_max: u32) -> PyResult<Self> {
        let omega = WindowInterval::new(omega_half_width).map_err(err)?;
        let spec = BumpSpec::new(omega, eps, n, s_max).map_err(err)?;
        Ok(Self { inner: Bump::shared(spec).map_err(err)? })
    }

    fn value(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    fn hat(&self, t: f64) -> f64 {
        self.inner.hat(t)
    }

    fn psi2_hat(&self, t: f64) -> f64 {
        self.inner.psi2_hat(t)
    }
}

/// Simple model set over a cut-and-project scheme (SCHEME-A unless a basis is given).
#[pyclass(name = "ModelSet", module = "msgabor", frozen)]
struct PyModelSet {
    inner: ModelSetSpec,
}

#[pymethods]
impl PyModelSet {
    #[new]
    #[pyo3(signature = (omega_half_width=0.5, basis=None, shift=None))]
    fn new(omega_half_width: f64, basis: Option<Vec<Vec<f64>>>, shift: Option<(f64, f64, f64)>) -> PyResult<Self> {
        let scheme = match basis {
            Some(rows) => CutProjectScheme::new(1, &rows).map_err(err)?,
            None => CutProjectScheme::scheme_a(),
        };
        let spec = ModelSetSpec::new(scheme, WindowInterval::new(omega_half_width).map_err(err)?);
        let spec = match shift {
            Some((s1, s2, t)) => spec.with_shift(vec![s1, s2], t).map_err(err)?,
            None => spec,
        };
        Ok(Self { inner: spec })
    }

    fn density(&self) -> f64 {
        self.inner.density()
    }

    /// Points (λ1, λ2, internal, weight) with |λ|∞ ≤ radius.
    #[pyo3(signature = (radius, bump=None))]
    fn enumerate(&self, radius: f64, bump: Option<PyRef<'_, PyBump>>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let set = modelset::enumerate_model_set(&self.inner, radius, bump.as_ref().map(|b| &*b.inner)).map_err(err)?;
        Ok(set.points.iter().map(|p| (p.lambda[0], p.lambda[1], p.internal, p.weight)).collect())
    }

    fn density_estimate<'py>(&self, py: Python<'py>, radius: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &modelset::density_estimate(&self.inner, radius).map_err(err)?)
    }

    fn genericity_margin(&self, radius: f64) -> PyResult<f64> {
        modelset::genericity_margin(&self.inner, radius).map_err(err)
    }
}

/// Node set with its dual multipliers: a lattice cZ² or a model set with a kernel.
#[pyclass(name = "Domain", module = "msgabor", frozen)]
struct PyDomain {
    inner: Domain,
}

#[pymethods]
impl PyDomain {
    #[staticmethod]
    #[pyo3(signature = (a, b=None))]
    fn lattice(a: f64, b: Option<f64>) -> PyResult<Self> {
        let l = PlainLattice::separable(a, b.unwrap_or(a)).map_err(err)?;
        Ok(Self { inner: Domain::Lattice(l) })
    }

    /// kernel: "psi2", "phi_n" or "phi_limit"; n is the bump order.
    #[staticmethod]
    #[pyo3(signature = (model_set, kernel="psi2", n=1))]
    fn model_set(model_set: PyRef<'_, PyModelSet>, kernel: &str, n: u32) -> PyResult<Self> {
        let kind = match kernel {
            "psi2" => KernelKind::PsiHatSquared { n },
            "phi_n" => KernelKind::PhiN { n },
            "phi_limit" => KernelKind::PhiLimit,
            other => return Err(PyValueError::new_err(format!("unknown kernel {other:?}"))),
        };
        let spec = model_set.inner.clone();
        let kernel = DecayKernel::build(kind, &BumpSpec::standard(spec.window)).map_err(err)?;
        Ok(Self { inner: Domain::ModelSet { spec, kernel } })
    }

    fn density(&self) -> f64 {
        self.inner.density()
    }
}

/// Trigonometric series Σ c e^(-2πi ν·z).
#[pyclass(name = "Series", module = "msgabor", frozen)]
struct PySeries {
    inner: appoisson::APSeries,
}

#[pymethods]
impl PySeries {
    fn __call__(&self, x: f64, w: f64) -> Complex64 {
        self.inner.eval(PhasePoint::new(x, w))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn tail(&self) -> f64 {
        self.inner.tail
    }

    #[getter]
    fn note(&self) -> String {
        self.inner.note.clone()
    }

    fn terms(&self) -> Vec<((f64, f64), Complex64)> {
        self.inner.terms().iter().map(|t| ((t.freq.x, t.freq.w), t.coef)).collect()
    }

    /// Analytic Bohr mean at a frequency over the box of half side r.
    #[pyo3(signature = (x, w, r=64.0))]
    fn bohr_mean(&self, x: f64, w: f64, r: f64) -> Complex64 {
        self.inner.box_mean(PhasePoint::new(x, w), r)
    }
}

#[pyfunction]
#[pyo3(signature = (scale=1.0, z=(0.0, 0.0), radius=8.0, dual_radius=8.0, tol=1e-9))]
fn psf_lattice<'py>(py: Python<'py>, scale: f64, z: (f64, f64), radius: f64, dual_radius: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let l = PlainLattice::scaled_integer(scale).map_err(err)?;
    let f = PsfFunction::Gaussian(Gaussian2D::new(1.0, 1.0).map_err(err)?);
    let r = appoisson::psf_lattice_verify(&l, &f, point(z), &SeriesPolicy::new(radius, dual_radius, tol)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (model_set, bump, z=(0.0, 0.0), radius=8.0, dual_radius=5.0, tol=1e-8))]
fn psf_modelset<'py>(
    py: Python<'py>,
    model_set: PyRef<'_, PyModelSet>,
    bump: PyRef<'_, PyBump>,
    z: (f64, f64),
    radius: f64,
    dual_radius: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = PsfFunction::Gaussian(Gaussian2D::new(1.0, 1.0).map_err(err)?);
    let p = SeriesPolicy::new(radius, dual_radius, tol);
    let r = appoisson::psf_modelset_verify(&model_set.inner, &bump.inner, &f, point(z), &p).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (domain, g, h, f1, f2, radius=8.0, dual_radius=4.0, tol=1e-8, internal_cutoff=None))]
#[allow(clippy::too_many_arguments)]
fn n_series(
    domain: PyRef<'_, PyDomain>,
    g: Vec<PyRef<'_, PyWindow>>,
    h: Vec<PyRef<'_, PyWindow>>,
    f1: PyRef<'_, PyWindow>,
    f2: PyRef<'_, PyWindow>,
    radius: f64,
    dual_radius: f64,
    tol: f64,
    internal_cutoff: Option<f64>,
) -> PyResult<PySeries> {
    let p = policy(radius, dual_radius, tol, internal_cutoff);
    let s = appoisson::n_series(&domain.inner, &windows(&g), &windows(&h), &f1.inner, &f2.inner, &p).map_err(err)?;
    Ok(PySeries { inner: s })
}

/// Direct node sum N(z) and its tail.
#[pyfunction]
#[pyo3(signature = (domain, g, h, f1, f2, z=(0.0, 0.0), radius=8.0))]
fn n_direct(
    domain: PyRef<'_, PyDomain>,
    g: Vec<PyRef<'_, PyWindow>>,
    h: Vec<PyRef<'_, PyWindow>>,
    f1: PyRef<'_, PyWindow>,
    f2: PyRef<'_, PyWindow>,
    z: (f64, f64),
    radius: f64,
) -> PyResult<(Complex64, f64)> {
    appoisson::n_direct(&domain.inner, &windows(&g), &windows(&h), &f1.inner, &f2.inner, point(z), radius).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, g, bump, model_set, z=(0.0, 0.0), radius=8.0, dual_radius=5.0, tol=1e-8))]
#[allow(clippy::too_many_arguments)]
fn bracket_series(
    f: PyRef<'_, PyWindow>,
    g: PyRef<'_, PyWindow>,
    bump: PyRef<'_, PyBump>,
    model_set: PyRef<'_, PyModelSet>,
    z: (f64, f64),
    radius: f64,
    dual_radius: f64,
    tol: f64,
) -> PyResult<PySeries> {
    let p = SeriesPolicy::new(radius, dual_radius, tol);
    let s = appoisson::bracket_series(&f.inner, &g.inner, &bump.inner, &model_set.inner, point(z), &p).map_err(err)?;
    Ok(PySeries { inner: s })
}

#[pyfunction]
#[pyo3(signature = (domain, g, h, f1, f2, radius=8.0, dual_radius=4.0, tol=1e-8, internal_cutoff=None))]
#[allow(clippy::too_many_arguments)]
fn figa<'py>(
    py: Python<'py>,
    domain: PyRef<'_, PyDomain>,
    g: Vec<PyRef<'_, PyWindow>>,
    h: Vec<PyRef<'_, PyWindow>>,
    f1: PyRef<'_, PyWindow>,
    f2: PyRef<'_, PyWindow>,
    radius: f64,
    dual_radius: f64,
    tol: f64,
    internal_cutoff: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = policy(radius, dual_radius, tol, internal_cutoff);
    let r = duality::figa_check(&domain.inner, &windows(&g), &windows(&h), &f1.inner, &f2.inner, &p).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (domain, g, h, radius=8.0, dual_radius=4.0, tol=1e-8, internal_cutoff=None))]
#[allow(clippy::too_many_arguments)]
fn wexler_raz<'py>(
    py: Python<'py>,
    domain: PyRef<'_, PyDomain>,
    g: Vec<PyRef<'_, PyWindow>>,
    h: Vec<PyRef<'_, PyWindow>>,
    radius: f64,
    dual_radius: f64,
    tol: f64,
    internal_cutoff: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let sig = |w: &[PyRef<'_, PyWindow>]| -> Vec<Signal> { windows(w).into_iter().map(Signal::Analytic).collect() };
    let p = policy(radius, dual_radius, tol, internal_cutoff);
    let r = duality::wexler_raz_residuals(&domain.inner, &sig(&g), &sig(&h), &p).map_err(err)?;
    to_py(py, &r)
}

/// Janssen operator applied to f on [lo, hi), compared with the direct frame operator.
#[pyfunction]
#[pyo3(signature = (domain, g, h, f, lo=-6.0, hi=6.0, step=1.0/32.0, radius=8.0, dual_radius=5.0, tol=1e-6, internal_cutoff=None))]
#[allow(clippy::too_many_arguments)]
fn janssen<'py>(
    py: Python<'py>,
    domain: PyRef<'_, PyDomain>,
    g: Vec<PyRef<'_, PyWindow>>,
    h: Vec<PyRef<'_, PyWindow>>,
    f: PyRef<'_, PyWindow>,
    lo: f64,
    hi: f64,
    step: f64,
    radius: f64,
    dual_radius: f64,
    tol: f64,
    internal_cutoff: Option<f64>,
) -> PyResult<(Vec<Complex64>, Bound<'py, PyAny>)> {
    let sig = |w: &[PyRef<'_, PyWindow>]| -> Vec<Signal> { windows(w).into_iter().map(Signal::Analytic).collect() };
    let grid = Grid1::span(lo, hi, step).map_err(err)?;
    let p = policy(radius, dual_radius, tol, internal_cutoff);
    let f = Signal::Analytic(f.inner.clone());
    let (dom, g, h) = (domain.inner.clone(), sig(&g), sig(&h));
    let (out, r) = py
        .detach(|| duality::janssen_apply(&dom, &g, &h, &f, &grid, &p, JanssenReference::Direct))
        .map_err(err)?;
    Ok((out.samples, to_py(py, &r)?))
}

/// Painless pair on aZ x bZ with a bump on [-w, w]: symbol extrema and the
/// Wexler-Raz sup residual.
#[pyfunction]
#[pyo3(signature = (a=0.5, b=0.5, omega_half_width=1.0, lo=-4.0, hi=4.0, step=1.0/64.0, dual_radius=15.9))]
#[allow(clippy::too_many_arguments)]
fn painless<'py>(
    py: Python<'py>,
    a: f64,
    b: f64,
    omega_half_width: f64,
    lo: f64,
    hi: f64,
    step: f64,
    dual_radius: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = Grid1::span(lo, hi, step).map_err(err)?;
    let bump = Bump::new(BumpSpec::standard(WindowInterval::new(omega_half_width).map_err(err)?)).map_err(err)?;
    let g = duality::bump_window(&bump, &grid);
    let dual = duality::painless_dual(a, b, &g).map_err(err)?;
    let domain = Domain::Lattice(duality::painless_lattice(a, b).map_err(err)?);
    let wr = duality::wexler_raz_residuals(
        &domain,
        &[Signal::Sampled(g)],
        &[Signal::Sampled(dual.h.clone())],
        &SeriesPolicy::new(8.0, dual_radius, 1e-8),
    )
    .map_err(err)?;
    to_py(py, &serde_json::json!({
        "symbol_min": dual.symbol_min, "symbol_max": dual.symbol_max,
        "wr_sup_residual": wr.sup_residual, "wr_rows": wr.residuals.len(),
    }))
}

/// Runs acceptance criteria (all when `ids` is empty); one dict per criterion.
#[pyfunction]
#[pyo3(signature = (ids=Vec::new(), seed=suite::DEFAULT_SEED))]
fn run_acceptance<'py>(py: Python<'py>, ids: Vec<String>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let rows = py.detach(|| suite::run_acceptance(&ids, seed));
    to_py(py, &rows)
}

#[pymodule]
fn msgabor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindow>()?;
    m.add_class::<PyBump>()?;
    m.add_class::<PyModelSet>()?;
    m.add_class::<PyDomain>()?;
    m.add_class::<PySeries>()?;
    m.add_function(wrap_pyfunction!(psf_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(psf_modelset, m)?)?;
    m.add_function(wrap_pyfunction!(n_series, m)?)?;
    m.add_function(wrap_pyfunction!(n_direct, m)?)?;
    m.add_function(wrap_pyfunction!(bracket_series, m)?)?;
    m.add_function(wrap_pyfunction!(figa, m)?)?;
    m.add_function(wrap_pyfunction!(wexler_raz, m)?)?;
    m.add_function(wrap_pyfunction!(janssen, m)?)?;
    m.add_function(wrap_pyfunction!(painless, m)?)?;
    m.add_function(wrap_pyfunction!(run_acceptance, m)?)?;
    Ok(())
}
