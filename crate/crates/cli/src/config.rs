use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use msgabor::appoisson::{Domain, Gaussian2D, PsfFunction, SeriesPolicy};
use msgabor::cutproject::{BasisDef, CutProjectScheme, PlainLattice};
use msgabor::gabor_op::{GaborSystem, NodeSource, TruncationPolicy, WeightMode};
use msgabor::internal_windows::{Bump, BumpSpec, DecayKernel, KernelKind};
use msgabor::modelset::{ModelSetSpec, WindowInterval};
use msgabor::suite::DEFAULT_SEED;
use msgabor::tf_core::{AnalyticWindow, Grid1, PhasePoint, SampledSignal, Signal};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Lattice,
    Modelset,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Psi2,
    PhiN,
    PhiLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    None,
    Bump,
}

/// A scheme given inline or as a path to a scheme JSON file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeRef {
    Path(PathBuf),
    Inline(BasisDef),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeDef {
    Scaled { scale: f64 },
    Separable { a: f64, b: f64 },
    Basis(BasisDef),
}

impl Default for LatticeDef {
    fn default() -> Self {
        Self::Scaled { scale: 1.0 }
    }
}

/// Node set, windows and weights of a Gabor system.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemDef {
    pub domain: DomainKind,
    pub lattice: LatticeDef,
    /// SCHEME-A when absent.
    pub scheme: Option<SchemeRef>,
    pub omega_half_width: f64,
    /// (s1, s2, t).
    pub shift: Option<[f64; 3]>,
    pub kernel: KernelName,
    pub windows: Vec<AnalyticWindow>,
    pub weights: Weights,
    pub weight_scale: f64,
}

impl Default for SystemDef {
    fn default() -> Self {
        Self {
            domain: DomainKind::Modelset,
            lattice: LatticeDef::default(),
            scheme: None,
            omega_half_width: 0.5,
            shift: None,
            kernel: KernelName::Psi2,
            windows: vec![AnalyticWindow::g0()],
            weights: Weights::None,
            weight_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BumpDef {
    pub eps: f64,
    pub n: u32,
    pub s_max: u32,
}

impl Default for BumpDef {
    fn default() -> Self {
        Self { eps: 0.5, n: 1, s_max: 40 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyDef {
    pub radius: f64,
    pub dual_radius: f64,
    pub internal_cutoff: Option<f64>,
    pub tol: f64,
}

impl Default for PolicyDef {
    fn default() -> Self {
        Self { radius: 8.0, dual_radius: 5.0, internal_cutoff: None, tol: 1e-8 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridDef {
    fn default() -> Self {
        Self { lo: -6.0, hi: 6.0, step: 1.0 / 32.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PsfDef {
    Gaussian { amp: f64, width: f64 },
    Ambiguity { f: AnalyticWindow, g: AnalyticWindow },
}

impl Default for PsfDef {
    fn default() -> Self {
        Self::Gaussian { amp: 1.0, width: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalRef {
    Csv { csv: PathBuf },
    Analytic(AnalyticWindow),
}

/// Lattice aZ x bZ with a bump window on Ω = [-w, w] and its painless dual.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PainlessDef {
    pub a: f64,
    pub b: f64,
    pub omega_half_width: f64,
    pub grid: GridDef,
}

impl Default for PainlessDef {
    fn default() -> Self {
        Self { a: 0.5, b: 0.5, omega_half_width: 1.0, grid: GridDef { lo: -4.0, hi: 4.0, step: 1.0 / 64.0 } }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand the config is meant for, e.g. "duality figa".
    pub check: Option<String>,
    pub seed: Option<u64>,
    pub system: SystemDef,
    /// Dual windows h; the system windows when absent.
    pub duals: Option<Vec<AnalyticWindow>>,
    pub f1: Option<AnalyticWindow>,
    pub f2: Option<AnalyticWindow>,
    pub signal: Option<SignalRef>,
    pub psf: PsfDef,
    pub bump: BumpDef,
    pub policy: PolicyDef,
    pub grid: GridDef,
    pub z: [f64; 2],
    pub points: Vec<[f64; 2]>,
    /// Enumeration / diagnostic radius.
    pub radius: f64,
    pub t_max: f64,
    pub t_step: f64,
    pub painless: Option<PainlessDef>,
    /// Internal cutoffs of the limit-kernel sensitivity curve.
    pub cutoffs: Vec<f64>,
    /// Upper frame bound B_g for the density diagnostic.
    pub upper_bound: Option<f64>,
    /// Acceptance ids to run; all when empty.
    pub only: Vec<String>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            check: None,
            seed: None,
            system: SystemDef::default(),
            duals: None,
            f1: None,
            f2: None,
            signal: None,
            psf: PsfDef::default(),
            bump: BumpDef::default(),
            policy: PolicyDef::default(),
            grid: GridDef::default(),
            z: [0.0, 0.0],
            points: Vec::new(),
            radius: 10.0,
            t_max: 10.0,
            t_step: 0.05,
            painless: None,
            cutoffs: Vec::new(),
            upper_bound: None,
            only: Vec::new(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Parses a JSON file, reporting the failing field path on error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: Self = read_json(path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn scheme(&self) -> Result<CutProjectScheme, CliError> {
        match &self.system.scheme {
            None => Ok(CutProjectScheme::scheme_a()),
            Some(SchemeRef::Inline(def)) => Ok(CutProjectScheme::from_def(def)?),
            Some(SchemeRef::Path(p)) => Ok(CutProjectScheme::from_def(&read_json::<BasisDef>(&self.resolve(p))?)?),
        }
    }

    pub fn window(&self) -> Result<WindowInterval, CliError> {
        Ok(WindowInterval::new(self.system.omega_half_width)?)
    }

    pub fn model_set(&self) -> Result<ModelSetSpec, CliError> {
        let spec = ModelSetSpec::new(self.scheme()?, self.window()?);
        match self.system.shift {
            Some([s1, s2, t]) => Ok(spec.with_shift(vec![s1, s2], t)?),
            None => Ok(spec),
        }
    }

    pub fn bump_spec(&self) -> Result<BumpSpec, CliError> {
        Ok(BumpSpec::new(self.window()?, self.bump.eps, self.bump.n, self.bump.s_max)?)
    }

    pub fn bump(&self) -> Result<Arc<Bump>, CliError> {
        Ok(Bump::shared(self.bump_spec()?)?)
    }

    pub fn lattice(&self) -> Result<PlainLattice, CliError> {
        Ok(match &self.system.lattice {
            LatticeDef::Scaled { scale } => PlainLattice::scaled_integer(*scale)?,
            LatticeDef::Separable { a, b } => PlainLattice::separable(*a, *b)?,
            LatticeDef::Basis(def) => PlainLattice::from_def(def)?,
        })
    }

    pub fn kernel_kind(&self) -> KernelKind {
        let n = self.bump.n;
        match self.system.kernel {
            KernelName::Psi2 => KernelKind::PsiHatSquared { n },
            KernelName::PhiN => KernelKind::PhiN { n },
            KernelName::PhiLimit => KernelKind::PhiLimit,
        }
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        Ok(match self.system.domain {
            DomainKind::Lattice => Domain::Lattice(self.lattice()?),
            DomainKind::Modelset => Domain::ModelSet {
                spec: self.model_set()?,
                kernel: DecayKernel::build(self.kernel_kind(), &self.bump_spec()?)?,
            },
        })
    }

    pub fn gabor_system(&self) -> Result<GaborSystem, CliError> {
        let nodes = match self.system.domain {
            DomainKind::Lattice => NodeSource::Lattice(self.lattice()?),
            DomainKind::Modelset => NodeSource::ModelSet(self.model_set()?),
        };
        let sys = GaborSystem::analytic(self.system.windows.clone(), nodes)?;
        Ok(match self.system.weights {
            Weights::None => sys,
            Weights::Bump => sys.with_weights(WeightMode::Bump { bump: self.bump()?, scale: self.system.weight_scale })?,
        })
    }

    pub fn windows(&self) -> &[AnalyticWindow] {
        &self.system.windows
    }

    pub fn duals(&self) -> &[AnalyticWindow] {
        self.duals.as_deref().unwrap_or(&self.system.windows)
    }

    pub fn f1(&self) -> AnalyticWindow {
        self.f1.clone().unwrap_or_else(AnalyticWindow::g0)
    }

    pub fn f2(&self) -> AnalyticWindow {
        self.f2.clone().unwrap_or_else(|| self.f1())
    }

    pub fn series_policy(&self) -> SeriesPolicy {
        let p = &self.policy;
        let s = SeriesPolicy::new(p.radius, p.dual_radius, p.tol);
        match p.internal_cutoff {
            Some(c) => s.with_cutoff(c),
            None => s,
        }
    }

    pub fn truncation(&self) -> TruncationPolicy {
        TruncationPolicy::new(self.policy.radius, self.policy.tol)
    }

    pub fn grid(&self) -> Result<Grid1, CliError> {
        Ok(Grid1::span(self.grid.lo, self.grid.hi, self.grid.step)?)
    }

    pub fn z(&self) -> PhasePoint {
        PhasePoint::new(self.z[0], self.z[1])
    }

    pub fn points(&self) -> Vec<PhasePoint> {
        if self.points.is_empty() {
            vec![self.z()]
        } else {
            self.points.iter().map(|p| PhasePoint::new(p[0], p[1])).collect()
        }
    }

    pub fn psf(&self) -> Result<PsfFunction, CliError> {
        Ok(match &self.psf {
            PsfDef::Gaussian { amp, width } => PsfFunction::Gaussian(Gaussian2D::new(*amp, *width)?),
            PsfDef::Ambiguity { f, g } => PsfFunction::Ambiguity { f: f.clone(), g: g.clone() },
        })
    }

    /// The test signal: `signal` if given, otherwise f1.
    pub fn signal(&self) -> Result<Signal, CliError> {
        match &self.signal {
            None => Ok(Signal::Analytic(self.f1())),
            Some(SignalRef::Analytic(w)) => Ok(Signal::Analytic(w.clone())),
            Some(SignalRef::Csv { csv }) => read_signal_csv(&self.resolve(csv)).map(Signal::Sampled),
        }
    }
}

/// Reads a uniformly sampled signal from CSV rows (t, re, im).
pub fn read_signal_csv(path: &Path) -> Result<SampledSignal, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut ts = Vec::new();
    let mut samples = Vec::new();
    for (i, row) in rdr.deserialize::<(f64, f64, f64)>().enumerate() {
        let (t, re, im) = row.map_err(|e| CliError::config(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        ts.push(t);
        samples.push(Complex64::new(re, im));
    }
    if ts.len() < 2 {
        return Err(CliError::config(format!("{}: need at least two samples", path.display())));
    }
    let step = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    if let Some(j) = ts.windows(2).position(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0)) {
        return Err(CliError::config(format!("{}: samples not uniform at row {}", path.display(), j + 2)));
    }
    let grid = Grid1::new(ts[0], step, ts.len())?;
    Ok(SampledSignal::new(grid, samples)?)
}
