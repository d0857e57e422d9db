//! Experiment runner: INI-style configs, scenario dispatch and reproducible outputs.
//!
//! A config has four sections:
//!
//! ```text
//! [surface]         family, radius, amplitude, semi_major, semi_minor, turns
//! [problem]         scenario, T, zero_order, c0, alpha, forcing, initial,
//!                   target_mean, tolerance, max_iterations, probes, holder_alpha
//! [discretization]  N, M, scheme, band_h, band_delta
//! [output]          directory, seed
//! ```
//!
//! Every run writes CSV files and a `manifest.txt` with the resolved config,
//! per-check results and SHA-256 digests of the files. Identical configs give
//! byte-identical outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diagnostics::{
    compatibility_check, holder_estimate, interpolation_check, mass_ledger, max_principle_monitor,
    norm_equivalence_check, CurveGeometry, DEFAULT_PAIR_BUDGET,
};
use crate::error::Error;
use crate::evolution::{
    duality_check, EmbeddedMetric, FlatMetric, Forcing, IvpConfig, MetricFamily, Propagator, Scheme, ZeroOrder,
};
use crate::expr::Expr;
use crate::grid::{max_abs_diff, ParameterGrid, ScalarField, SpaceTimeField};
use crate::metric::{
    assemble_metric, greens_formula_check, pullback_identity_check, trace_identity, AmbientPolynomial2,
};
use crate::narrowband::{
    build_band, elliptic_part_check, max_active_difference, os_operator_equivalence, Band, ExtendedCoefficients,
    FlatStrip,
};
use crate::periodic::{
    contraction_estimate, fixed_point_solve, monodromy_solve, periodicity_residuals, PeriodicProblem,
    MAX_MONODROMY_NODES,
};
use crate::surface::{build_frame, commutator_check, Chart, FieldDerivatives, SurfaceFamily};

pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_STEPS: usize = 512;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config: {0}")]
    Validation(String),

    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario {scenario}: {source}")]
    Solver {
        scenario: Scenario,
        #[source]
        source: Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for config problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Validation(_) | Self::Read { .. } => 2,
            Self::Solver { .. } | Self::Io { .. } => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Ivp,
    IvpDecay,
    PeriodicFixed,
    PeriodicMonodromy,
    Contraction,
    BandCheck,
    Identities,
    Holder,
    MaxPrinciple,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Self::Ivp,
        Self::IvpDecay,
        Self::PeriodicFixed,
        Self::PeriodicMonodromy,
        Self::Contraction,
        Self::BandCheck,
        Self::Identities,
        Self::Holder,
        Self::MaxPrinciple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ivp => "ivp",
            Self::IvpDecay => "ivp_decay",
            Self::PeriodicFixed => "periodic-fixed",
            Self::PeriodicMonodromy => "periodic-monodromy",
            Self::Contraction => "contraction",
            Self::BandCheck => "band-check",
            Self::Identities => "identities",
            Self::Holder => "holder",
            Self::MaxPrinciple => "max-principle",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Ivp => "initial value problem with mass ledger",
            Self::IvpDecay => "heat decay of cos(theta) on a stationary circle against exp(-t/R^2) cos(theta)",
            Self::PeriodicFixed => "relaxed-periodic solution by fixed-point iteration, with a uniqueness probe",
            Self::PeriodicMonodromy => "periodic solution by a direct monodromy solve",
            Self::Contraction => "measured Lipschitz constants of the end map against the exponential bound",
            Self::BandCheck => "narrow-band extension identities on the reference curve",
            Self::Identities => "commutator, trace, Green, pullback and duality identities",
            Self::Holder => "Hölder norm estimators, interpolation and norm-equivalence checks",
            Self::MaxPrinciple => "maximum-principle monitor with a forced negative control",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario '{s}' (see list-scenarios)"))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZeroOrderMode {
    Zero,
    Constant,
    Divergence,
    DivergencePlus,
}

impl ZeroOrderMode {
    fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Constant => "constant",
            Self::Divergence => "divergence",
            Self::DivergencePlus => "divergence_plus",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub surface: SurfaceFamily,
    pub period: f64,
    pub nodes: usize,
    pub steps: usize,
    pub scheme: Scheme,
    pub zero_order: ZeroOrderMode,
    pub c0: f64,
    pub alpha: f64,
    /// `None` means `f = 0`.
    pub forcing: Option<Expr>,
    pub initial: Option<Expr>,
    pub target_mean: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub probes: usize,
    pub holder_alpha: f64,
    pub band_h: f64,
    pub band_delta: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

const KEYS: &[(&str, &[&str])] = &[
    ("surface", &["family", "radius", "amplitude", "semi_major", "semi_minor", "turns"]),
    (
        "problem",
        &[
            "scenario",
            "T",
            "zero_order",
            "c0",
            "alpha",
            "forcing",
            "initial",
            "target_mean",
            "tolerance",
            "max_iterations",
            "probes",
            "holder_alpha",
        ],
    ),
    ("discretization", &["N", "M", "scheme", "band_h", "band_delta"]),
    ("output", &["directory", "seed"]),
];

/// Help text listing every key with its default.
pub const CONFIG_HELP: &str = "\
Config keys (INI sections) and defaults:
  [surface]        family = circle | breathing | rotating_ellipse | bean (required)
                   radius = 1, amplitude = 0.2, semi_major = 1.5, semi_minor = 1, turns = 1
  [problem]        scenario (required), T = 1, zero_order = zero | constant | divergence | divergence_plus
                   c0 = 1, alpha = 0.5, forcing = zero | <expression in theta, t, T, pi>
                   initial = <expression> (scenario default), target_mean = 1
                   tolerance = 1e-10, max_iterations = 200, probes = 6, holder_alpha = 0.5
  [discretization] N = 256, M = 512, scheme = crank_nicolson | backward_euler
                   band_h = 0.0078125, band_delta = 0.2
  [output]         directory = out, seed = 0";

struct Entry {
    value: String,
    line: usize,
}

fn parse_sections(text: &str) -> Result<BTreeMap<(String, String), Entry>, RunError> {
    let mut map = BTreeMap::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| RunError::Parse { line, message: format!("malformed section header '{s}'") })?
                .trim();
            if !KEYS.iter().any(|(sec, _)| *sec == name) {
                return Err(RunError::Parse { line, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| RunError::Parse { line, message: format!("expected 'key = value', found '{s}'") })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| RunError::Parse { line, message: format!("key '{key}' appears before any section") })?;
        let allowed = KEYS.iter().find(|(name, _)| *name == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(RunError::Parse { line, message: format!("unknown key '{key}' in [{sec}]") });
        }
        if value.is_empty() {
            return Err(RunError::Parse { line, message: format!("empty value for '{key}'") });
        }
        let previous = map.insert((sec.to_string(), key.to_string()), Entry { value: value.to_string(), line });
        if previous.is_some() {
            return Err(RunError::Parse { line, message: format!("duplicate key '{key}' in [{sec}]") });
        }
    }
    Ok(map)
}

struct Lookup(BTreeMap<(String, String), Entry>);

impl Lookup {
    fn raw(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.0.get(&(sec.to_string(), key.to_string()))
    }

    fn get<T: FromStr>(&self, sec: &str, key: &str, default: T) -> Result<T, RunError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(sec, key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|err| RunError::Parse { line: e.line, message: format!("bad value for '{key}': {err}") }),
        }
    }

    fn expr(&self, sec: &str, key: &str) -> Result<Option<Expr>, RunError> {
        match self.raw(sec, key) {
            None => Ok(None),
            Some(e) if e.value == "zero" => Ok(None),
            Some(e) => Expr::parse(&e.value)
                .map(Some)
                .map_err(|err| RunError::Parse { line: e.line, message: format!("{key}: {err}") }),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Read { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, RunError> {
    let map = Lookup(parse_sections(text)?);
    let scenario = match map.raw("problem", "scenario") {
        None => return Err(RunError::Validation("[problem] scenario is required".into())),
        Some(e) => e.value.parse().map_err(|message| RunError::Parse { line: e.line, message })?,
    };
    let period: f64 = map.get("problem", "T", 1.0)?;
    let family: String = match map.raw("surface", "family") {
        None => return Err(RunError::Validation("[surface] family is required".into())),
        Some(e) => e.value.clone(),
    };
    let surface = match family.as_str() {
        "circle" => SurfaceFamily::Circle { radius: map.get("surface", "radius", 1.0)?, period },
        "breathing" => SurfaceFamily::BreathingCircle { amplitude: map.get("surface", "amplitude", 0.2)?, period },
        "rotating_ellipse" => SurfaceFamily::RotatingEllipse {
            semi_major: map.get("surface", "semi_major", 1.5)?,
            semi_minor: map.get("surface", "semi_minor", 1.0)?,
            turns: map.get("surface", "turns", 1)?,
            period,
        },
        "bean" => SurfaceFamily::Bean { amplitude: map.get("surface", "amplitude", 0.2)?, period },
        other => {
            let line = map.raw("surface", "family").map_or(0, |e| e.line);
            return Err(RunError::Parse {
                line,
                message: format!("unknown family '{other}' (one of {})", SurfaceFamily::names().join(", ")),
            });
        }
    };
    let zero_order = match map.get::<String>("problem", "zero_order", "zero".into())?.as_str() {
        "zero" => ZeroOrderMode::Zero,
        "constant" => ZeroOrderMode::Constant,
        "divergence" => ZeroOrderMode::Divergence,
        "divergence_plus" => ZeroOrderMode::DivergencePlus,
        other => {
            let line = map.raw("problem", "zero_order").map_or(0, |e| e.line);
            return Err(RunError::Parse { line, message: format!("unknown zero_order '{other}'") });
        }
    };
    let config = ExperimentConfig {
        scenario,
        surface,
        period,
        nodes: map.get("discretization", "N", DEFAULT_NODES)?,
        steps: map.get("discretization", "M", DEFAULT_STEPS)?,
        scheme: map.get("discretization", "scheme", Scheme::CrankNicolson)?,
        zero_order,
        c0: map.get("problem", "c0", 1.0)?,
        alpha: map.get("problem", "alpha", 0.5)?,
        forcing: map.expr("problem", "forcing")?,
        initial: map.expr("problem", "initial")?,
        target_mean: map.get("problem", "target_mean", 1.0)?,
        tolerance: map.get("problem", "tolerance", 1e-10)?,
        max_iterations: map.get("problem", "max_iterations", 200)?,
        probes: map.get("problem", "probes", 6)?,
        holder_alpha: map.get("problem", "holder_alpha", 0.5)?,
        band_h: map.get("discretization", "band_h", 1.0 / 128.0)?,
        band_delta: map.get("discretization", "band_delta", 0.2)?,
        output_dir: map.get("output", "directory", PathBuf::from("out"))?,
        seed: map.get("output", "seed", 0)?,
    };
    let config = if config.scenario == Scenario::Contraction {
        ExperimentConfig { zero_order: ZeroOrderMode::Constant, ..config }
    } else {
        config
    };
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let fail = |m: String| Err(RunError::Validation(m));
        if !(self.period > 0.0) || !self.period.is_finite() {
            return fail(format!("T must be positive, got {}", self.period));
        }
        self.surface.validate().map_err(|e| RunError::Validation(e.to_string()))?;
        ParameterGrid::new(self.nodes, self.steps, self.period).map_err(|e| RunError::Validation(e.to_string()))?;
        if self.nodes < 8 {
            return fail(format!("N must be at least 8, got {}", self.nodes));
        }
        if self.steps < 2 {
            return fail(format!("M must be at least 2, got {}", self.steps));
        }
        if !(self.tolerance > 0.0) {
            return fail(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.holder_alpha > 0.0 && self.holder_alpha <= 1.0) {
            return fail(format!("holder_alpha must lie in (0, 1], got {}", self.holder_alpha));
        }
        if self.zero_order == ZeroOrderMode::Constant && self.c0 < 0.0 {
            return fail(format!("constant zero-order coefficient must be nonnegative, got {}", self.c0));
        }
        match self.scenario {
            Scenario::Contraction => {
                let threshold = std::f64::consts::LN_2 / self.period;
                if !(self.c0 > threshold) {
                    return fail(format!("c0 must exceed ln2/T ≈ {threshold:.4}"));
                }
            }
            Scenario::PeriodicMonodromy if self.nodes > MAX_MONODROMY_NODES => {
                return fail(format!("monodromy solve supports N <= {MAX_MONODROMY_NODES}, got {}", self.nodes));
            }
            Scenario::IvpDecay => {
                if !matches!(self.surface, SurfaceFamily::Circle { .. }) {
                    return fail("ivp_decay needs family = circle".into());
                }
                if self.zero_order != ZeroOrderMode::Zero || self.forcing.is_some() || self.initial.is_some() {
                    return fail("ivp_decay fixes zero_order = zero, forcing = zero and u0 = cos(theta)".into());
                }
            }
            Scenario::MaxPrinciple => {
                if self.scheme != Scheme::BackwardEuler {
                    return fail("max-principle needs scheme = backward_euler".into());
                }
                if self.zero_order != ZeroOrderMode::Zero || self.forcing.is_some() {
                    return fail("max-principle needs zero_order = zero and forcing = zero".into());
                }
            }
            Scenario::BandCheck | Scenario::Holder if !(self.band_h > 0.0 && self.band_delta >= 2.0 * self.band_h) => {
                return fail(format!(
                    "band needs band_delta >= 2 band_h > 0 (got {}, {})",
                    self.band_delta, self.band_h
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Resolved config as `section.key = value` lines in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![("problem.scenario".to_string(), self.scenario.to_string())];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match &self.surface {
            SurfaceFamily::Circle { radius, .. } => {
                push("surface.family", "circle".into());
                push("surface.radius", num(*radius));
            }
            SurfaceFamily::BreathingCircle { amplitude, .. } => {
                push("surface.family", "breathing".into());
                push("surface.amplitude", num(*amplitude));
            }
            SurfaceFamily::RotatingEllipse { semi_major, semi_minor, turns, .. } => {
                push("surface.family", "rotating_ellipse".into());
                push("surface.semi_major", num(*semi_major));
                push("surface.semi_minor", num(*semi_minor));
                push("surface.turns", turns.to_string());
            }
            SurfaceFamily::Bean { amplitude, .. } => {
                push("surface.family", "bean".into());
                push("surface.amplitude", num(*amplitude));
            }
        }
        push("problem.T", num(self.period));
        push("problem.zero_order", self.zero_order.name().into());
        push("problem.c0", num(self.c0));
        push("problem.alpha", num(self.alpha));
        push("problem.forcing", self.forcing.as_ref().map_or("zero".into(), |e| e.source().to_string()));
        push("problem.initial", self.initial.as_ref().map_or("default".into(), |e| e.source().to_string()));
        push("problem.target_mean", num(self.target_mean));
        push("problem.tolerance", num(self.tolerance));
        push("problem.max_iterations", self.max_iterations.to_string());
        push("problem.probes", self.probes.to_string());
        push("problem.holder_alpha", num(self.holder_alpha));
        push("discretization.N", self.nodes.to_string());
        push("discretization.M", self.steps.to_string());
        push("discretization.scheme", self.scheme.to_string());
        push("discretization.band_h", num(self.band_h));
        push("discretization.band_delta", num(self.band_delta));
        push("output.seed", self.seed.to_string());
        out
    }

    pub fn grid(&self) -> ParameterGrid {
        ParameterGrid::new(self.nodes, self.steps, self.period).expect("validated grid")
    }

    pub fn chart(&self) -> Arc<dyn Chart> {
        Arc::new(self.surface.clone())
    }

    pub fn zero_order(&self) -> ZeroOrder {
        match self.zero_order {
            ZeroOrderMode::Zero => ZeroOrder::Zero,
            ZeroOrderMode::Constant => ZeroOrder::Constant(self.c0),
            ZeroOrderMode::Divergence => ZeroOrder::Divergence,
            ZeroOrderMode::DivergencePlus => ZeroOrder::DivergencePlus(self.alpha),
        }
    }

    pub fn forcing(&self) -> Forcing {
        match &self.forcing {
            None => Forcing::Zero,
            Some(e) => {
                let (e, period) = (e.clone(), self.period);
                Forcing::function(move |th, t| e.eval(th, t, period))
            }
        }
    }

    fn initial_or(&self, grid: &ParameterGrid, default: impl Fn(f64) -> f64) -> ScalarField {
        match &self.initial {
            Some(e) => grid.sample(0.0, |th| e.eval(th, 0.0, self.period)),
            None => grid.sample(0.0, default),
        }
    }
}

/// One asserted quantity of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, relation: "<=", passed: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, relation: ">=", passed: value >= threshold }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> [Self; 2] {
        [Self::at_least(&format!("{name}_low"), value, lo), Self::at_most(&format!("{name}_high"), value, hi)]
    }
}

#[derive(Clone, Debug)]
pub struct OutputFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub version: &'static str,
    pub config: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub summary: Vec<(String, String)>,
    pub files: Vec<OutputFile>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "periflow manifest");
        let _ = writeln!(s, "version: {}", self.version);
        let _ = writeln!(s, "scenario: {}", self.scenario);
        for (k, v) in &self.config {
            let _ = writeln!(s, "config.{k}: {v}");
        }
        for (k, v) in &self.summary {
            let _ = writeln!(s, "summary.{k}: {v}");
        }
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(s, "check.{}: {verdict} {:.6e} {} {:.6e}", c.name, c.value, c.relation, c.threshold);
        }
        for f in &self.files {
            let _ = writeln!(s, "file.{}: sha256={} bytes={}", f.name, f.sha256, f.bytes);
        }
        let _ = writeln!(s, "status: {}", if self.passed() { "pass" } else { "fail" });
        s
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV `t,theta,u` for the given levels on the uniform chart grid, rows sorted by `(t, theta)`.
pub fn field_csv(levels: &[ScalarField]) -> String {
    let mut s = String::from("t,theta,u\n");
    for level in levels {
        let dtheta = std::f64::consts::TAU / level.len() as f64;
        for (i, u) in level.values.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", fmt17(level.time), fmt17(i as f64 * dtheta), fmt17(*u));
        }
    }
    s
}

pub fn emit_field_csv(levels: &[ScalarField], path: &Path) -> Result<(), RunError> {
    fs::write(path, field_csv(levels)).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// CSV `x,y,d,value` over the stored band nodes.
pub fn band_csv(band: &Band, values: &[f64]) -> String {
    let mut s = String::from("x,y,d,value\n");
    for (k, v) in values.iter().enumerate() {
        let x = band.grid.position(k);
        let _ = writeln!(s, "{},{},{},{}", fmt17(x.x), fmt17(x.y), fmt17(band.field.d[k]), fmt17(*v));
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Outcome {
    checks: Vec<Check>,
    summary: Vec<(String, String)>,
    files: Vec<(String, String)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: Vec::new(), summary: Vec::new(), files: Vec::new() }
    }

    fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn number(&mut self, key: &str, value: f64) {
        self.note(key, format!("{value:.6e}"));
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

/// A smooth mean-free random field with four Fourier modes.
pub fn random_smooth(grid: &ParameterGrid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (1..=4).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    grid.sample(0.0, |th| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let k = (k + 1) as f64;
                (a * (k * th).cos() + b * (k * th).sin()) / (k * k)
            })
            .sum()
    })
}

/// Runs the scenario, writes all outputs into `config.output_dir` and returns the manifest.
pub fn run_scenario(config: &ExperimentConfig) -> Result<RunManifest, RunError> {
    config.validate()?;
    let solver = |source: Error| RunError::Solver { scenario: config.scenario, source };
    let outcome = match config.scenario {
        Scenario::Ivp => run_ivp(config, false),
        Scenario::IvpDecay => run_ivp(config, true),
        Scenario::PeriodicFixed => run_periodic_fixed(config),
        Scenario::PeriodicMonodromy => run_periodic_monodromy(config),
        Scenario::Contraction => run_contraction(config),
        Scenario::BandCheck => run_band_check(config),
        Scenario::Identities => run_identities(config),
        Scenario::Holder => run_holder(config),
        Scenario::MaxPrinciple => run_max_principle(config),
    }
    .map_err(solver)?;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
    let mut files = Vec::new();
    for (name, contents) in &outcome.files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
        files.push(OutputFile { name: name.clone(), bytes: contents.len(), sha256: sha256_hex(contents.as_bytes()) });
    }
    let manifest = RunManifest {
        scenario: config.scenario,
        version: env!("CARGO_PKG_VERSION"),
        config: config.echo(),
        checks: outcome.checks,
        summary: outcome.summary,
        files,
    };
    let tmp = dir.join("manifest.txt.tmp");
    let path = dir.join("manifest.txt");
    fs::write(&tmp, manifest.render()).map_err(|source| RunError::Io { path: tmp.clone(), source })?;
    fs::rename(&tmp, &path).map_err(|source| RunError::Io { path, source })?;
    Ok(manifest)
}

fn embedded(config: &ExperimentConfig, grid: &ParameterGrid) -> Arc<EmbeddedMetric> {
    Arc::new(EmbeddedMetric::new(config.chart(), grid))
}

fn run_ivp(config: &ExperimentConfig, decay: bool) -> crate::Result<Outcome> {
    let grid = config.grid();
    let family = embedded(config, &grid);
    let forcing = config.forcing();
    let ivp = IvpConfig::new(grid.clone(), config.scheme, config.zero_order());
    let propagator = Propagator::new(family.as_ref(), &ivp, &forcing)?;
    let u0 = if decay { grid.sample(0.0, f64::cos) } else { config.initial_or(&grid, f64::cos) };
    let trajectory = propagator.solve_ivp(&u0)?;
    let ledger = mass_ledger(&trajectory, &propagator)?;
    let mut out = Outcome::new();
    let (m0, m_end) = (ledger.mass[0], *ledger.mass.last().expect("levels"));
    out.number("mass_initial", m0);
    out.number("mass_final", m_end);
    out.number("mass_max_defect", ledger.max_defect());

    if decay {
        let r = config.surface.breathing_radius(0.0).expect("circle");
        let mut worst = 0.0f64;
        for level in &trajectory.levels {
            let decay = (-level.time / (r * r)).exp();
            for (i, u) in level.values.iter().enumerate() {
                worst = worst.max((u - decay * grid.theta(i).cos()).abs());
            }
        }
        out.checks.push(Check::at_most("max_error_vs_exact", worst, 5e-5));
    }
    if config.zero_order().is_conservative() && m0 != 0.0 {
        out.checks.push(Check::at_most("mass_defect_relative", ledger.max_defect() / m0.abs(), 1e-8));
        if config.forcing.is_none() && config.zero_order == ZeroOrderMode::Divergence {
            out.checks.push(Check::at_most("mass_drift_relative", (m_end - m0).abs() / m0.abs(), 1e-8));
        }
    }
    let constant = u0.values.iter().all(|v| *v == u0.values[0]);
    if constant && config.forcing.is_none() && config.zero_order == ZeroOrderMode::Divergence {
        if let Some(r0) = config.surface.breathing_radius(0.0) {
            let c = u0.values[0];
            let mut worst = 0.0f64;
            for level in &trajectory.levels {
                let exact = c * r0 / config.surface.breathing_radius(level.time).expect("radial family");
                worst = worst.max(level.values.iter().map(|u| (u - exact).abs()).fold(0.0, f64::max));
            }
            out.checks.push(Check::at_most("closed_form_error", worst, 1e-6));
        }
    }
    out.file("trajectory.csv", field_csv(&trajectory.levels));
    out.file("mass.csv", ledger.to_csv());
    Ok(out)
}

fn periodic_problem(config: &ExperimentConfig, zero: ZeroOrder) -> PeriodicProblem {
    let grid = config.grid();
    let family: Arc<dyn MetricFamily> = embedded(config, &grid);
    PeriodicProblem::new(family, IvpConfig::new(grid, config.scheme, zero), config.forcing(), config.target_mean)
}

fn mean_drift_check(config: &ExperimentConfig, out: &mut Outcome, drift: f64) {
    if config.zero_order == ZeroOrderMode::DivergencePlus && config.forcing.is_none() {
        let expected = config.target_mean * ((-config.alpha * config.period).exp() - 1.0);
        out.number("mean_drift_expected", expected);
        out.checks.push(Check::at_most("mean_drift_error", (drift - expected).abs(), 1e-4));
    }
}

fn run_periodic_fixed(config: &ExperimentConfig) -> crate::Result<Outcome> {
    let problem = periodic_problem(config, config.zero_order());
    let grid = problem.grid().clone();
    let report = fixed_point_solve(&problem, config.tolerance, config.max_iterations, None)?;
    let start = random_smooth(&grid, config.seed);
    let second = fixed_point_solve(&problem, config.tolerance, config.max_iterations, Some(&start))?;
    let measure0 = problem.propagator()?.measure(0);
    let res = periodicity_residuals(&report.trajectory, &measure0);
    let mut out = Outcome::new();
    out.note("iterations", report.iterations);
    out.number("final_residual", *report.residuals.last().unwrap_or(&0.0));
    out.number("max_ratio", report.max_ratio());
    out.number("relaxed_residual", res.relaxed);
    out.number("strict_residual", res.strict);
    out.number("mean_drift", res.mean_drift);
    out.number("initial_mean", measure0.mean(&report.initial.values));
    out.checks.push(Check::at_least("converged", f64::from(u8::from(report.converged && second.converged)), 1.0));
    out.checks.push(Check::at_most(
        "uniqueness_gap",
        max_abs_diff(&report.initial.values, &second.initial.values),
        1e-8,
    ));
    if grid.nodes() <= MAX_MONODROMY_NODES {
        let direct = monodromy_solve(&problem)?;
        let gap = report.trajectory.sup_distance(&direct.trajectory);
        out.checks.push(Check::at_most("cross_method_gap", gap, 1e-8));
    }
    out.checks.push(Check::at_most("relaxed_residual", res.relaxed, 1e-8_f64.max(10.0 * config.tolerance)));
    mean_drift_check(config, &mut out, res.mean_drift);
    out.file("trajectory.csv", field_csv(&report.trajectory.levels));
    Ok(out)
}

fn run_periodic_monodromy(config: &ExperimentConfig) -> crate::Result<Outcome> {
    let problem = periodic_problem(config, config.zero_order());
    let grid = problem.grid().clone();
    let report = monodromy_solve(&problem)?;
    let propagator = problem.propagator()?;
    let measure0 = propagator.measure(0);
    let res = periodicity_residuals(&report.trajectory, &measure0);
    let mean = measure0.mean(&report.initial.values);
    let mut out = Outcome::new();
    out.number("sigma_min", report.sigma_min);
    out.number("sigma_max", report.sigma_max);
    out.number("relaxed_residual", res.relaxed);
    out.number("strict_residual", res.strict);
    out.number("mean_drift", res.mean_drift);
    out.number("initial_mean", mean);
    out.checks.push(Check::at_least("sigma_min", report.sigma_min, 1e-8));
    out.checks.push(Check::at_most("initial_mean_error", (mean - config.target_mean).abs(), 1e-12));
    out.checks.push(Check::at_most("relaxed_residual", res.relaxed, 1e-8));
    if config.zero_order == ZeroOrderMode::Divergence {
        let f = config.forcing().sample(&grid)?;
        let compat = compatibility_check(&f, problem.family.as_ref(), &grid)?;
        out.number("compatibility", compat);
        out.checks.push(Check::at_most("compatibility", compat.abs(), 1e-12));
        out.checks.push(Check::at_most("strict_residual", res.strict, 1e-8));
    }
    mean_drift_check(config, &mut out, res.mean_drift);
    let ledger = mass_ledger(&report.trajectory, &propagator)?;
    out.file("trajectory.csv", field_csv(&report.trajectory.levels));
    out.file("mass.csv", ledger.to_csv());
    Ok(out)
}

fn run_contraction(config: &ExperimentConfig) -> crate::Result<Outcome> {
    let problem = periodic_problem(config, ZeroOrder::Constant(config.c0));
    let grid = problem.grid().clone();
    let mut probes = vec![(grid.sample(0.0, f64::cos), ScalarField::zeros(grid.nodes(), 0.0))];
    for j in 0..config.probes {
        let seed = config.seed.wrapping_add(2 * j as u64);
        let a = random_smooth(&grid, seed);
        let b = random_smooth(&grid, seed + 1);
        probes.push((a, b));
    }
    let mut out = Outcome::new();
    match contraction_estimate(&problem, config.c0, &probes) {
        Ok(est) => {
            out.number("epsilon", est.epsilon);
            out.number("slack", est.slack);
            out.number("theta_j", est.theta_j);
            out.number("theta_k", est.theta_k);
            out.checks.push(Check::at_most("theta_j", est.theta_j, est.bound));
            out.checks.push(Check::at_most("theta_k_vs_2theta_j", est.theta_k, 2.0 * est.theta_j));
            out.checks.push(Check::at_most("theta_k", est.theta_k, 1.0 - f64::EPSILON));
        }
        Err(Error::ContractionViolation { probe, ratio, bound }) => {
            out.note("violating_probe", probe);
            out.checks.push(Check::at_most("contraction", ratio, bound));
        }
        Err(e) => return Err(e),
    }
    let report = fixed_point_solve(&problem, config.tolerance, config.max_iterations, None)?;
    let residual = *report.residuals.last().unwrap_or(&0.0);
    out.note("iterations", report.iterations);
    out.number("final_residual", residual);
    out.checks.push(Check::at_most("fixed_point_residual", residual, config.tolerance));
    out.checks.push(Check::at_most("fixed_point_iterations", report.iterations as f64, 40.0));
    let csv: String = std::iter::once("iterate,residual\n".to_string())
        .chain(report.residuals.iter().enumerate().map(|(k, r)| format!("{},{}\n", k + 1, fmt17(*r))))
        .collect();
    out.file("residuals.csv", csv);
    Ok(out)
}

/// Closed-form `Delta_M cos(3 theta)` on the chart at time `t`.
fn laplacian_cos3(chart: &dyn Chart, theta: f64, t: f64) -> f64 {
    let d1 = chart.d_theta(theta, t);
    let s = d1.norm();
    let ds = d1.dot(&chart.d_theta2(theta, t)) / s;
    let (u1, u2) = (-3.0 * (3.0 * theta).sin(), -9.0 * (3.0 * theta).cos());
    u2 / (s * s) - u1 * ds / (s * s * s)
}

/// Observed convergence order from errors at spacings `h` and `h/2`.
fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn generic_field(band: &Band) -> Vec<f64> {
    (0..band.len())
        .map(|k| {
            let x = band.grid.position(k);
            (2.0 * x.x).sin() * x.y.cos() + x.x * x.y * x.y
        })
        .collect()
}

fn run_band_check(config: &ExperimentConfig) -> crate::Result<Outcome> {
    let chart = config.chart();
    let (h, delta) = (config.band_h, config.band_delta);
    let band = build_band(chart.clone(), 0.0, h, delta)?;
    let fine = build_band(chart.clone(), 0.0, 0.5 * h, delta)?;
    let grid = config.grid();
    let mut out = Outcome::new();
    out.note("band_nodes", band.len());
    out.note("band_active_nodes", band.grid.active_nodes().count());

    let eikonal = band.eikonal_residual();
    out.checks.push(Check::at_most("eikonal_residual", eikonal, 1e-4));

    let u = grid.sample(0.0, |th| (3.0 * th).cos());
    let lifted = band.lift_field(&u);
    let back = band.band_average_extract(&lifted, &grid, 8)?;
    out.checks.push(Check::at_most("round_trip", max_abs_diff(&back.values, &u.values), 1e-6));

    let extension = |b: &Band| -> crate::Result<f64> {
        let u = b.lift_fn(|th| (3.0 * th).cos());
        let exact = b.lift_fn(|th| laplacian_cos3(chart.as_ref(), th, 0.0));
        let l = b.extended_operator_apply(&u, &ExtendedCoefficients::default())?;
        Ok(max_active_difference(b, &l, &exact))
    };
    let (e0, e1) = (extension(&band)?, extension(&fine)?);
    out.number("extension_error_h", e0);
    out.number("extension_error_h2", e1);
    out.checks.extend(Check::within("extension_order", order(e0, e1), 1.7, 2.3));

    let (o0, o1) = (
        os_operator_equivalence(&band, &generic_field(&band))?,
        os_operator_equivalence(&fine, &generic_field(&fine))?,
    );
    out.number("os_residual_h", o0);
    out.number("os_residual_h2", o1);
    out.checks.extend(Check::within("os_order", order(o0, o1), 1.7, 2.3));
    out.number("elliptic_part_residual_h", elliptic_part_check(&band, &generic_field(&band))?);

    let strip = FlatStrip { n1: 64, half_rows: 3, h: 1.0 / 16.0 };
    let flat_grid = ParameterGrid::new(strip.n1, 8, 1.0)?;
    let flat = FlatMetric { nodes: strip.n1, period: 1.0, length: strip.length() };
    let forcing = Forcing::function(|th, t| th.sin() * (1.0 + t));
    let ivp = IvpConfig::new(flat_grid.clone(), Scheme::BackwardEuler, ZeroOrder::Zero);
    let propagator = Propagator::new(&flat, &ivp, &forcing)?;
    let u0: Vec<f64> = (0..strip.n1).map(|i| (0.3 * i as f64).cos()).collect();
    let one_d = propagator.step(0, &u0, false)?;
    let f1: Vec<f64> = propagator.forcing(1).to_vec();
    let band_step = strip.backward_euler_step(&strip.lift(&u0), &strip.lift(&f1), flat_grid.dt())?;
    let flat_gap = max_abs_diff(&strip.extract(&band_step), &one_d);
    out.checks.push(Check::at_most("flat_strip_equivalence", flat_gap, 1e-12));

    out.file("band.csv", band_csv(&band, &lifted));
    Ok(out)
}

fn run_identities(config: &ExperimentConfig) -> crate::Result<Outcome> {
    let chart = config.chart();
    let grid = config.grid();
    let mut out = Outcome::new();
    let (mut commutator, mut trace, mut green) = (0.0f64, 0.0f64, 0.0f64);
    let u = grid.sample(0.0, |th| th.cos() + 0.5 * (2.0 * th).sin());
    let w = grid.sample(0.0, |th| (3.0 * th).cos() - 0.25 * th.sin());
    let der =
        FieldDerivatives::sample(&grid, |th| -th.sin() + (2.0 * th).cos(), |th| -th.cos() - 2.0 * (2.0 * th).sin());
    for k in 0..4 {
        let t = config.period * k as f64 / 4.0;
        let frame = build_frame(chart.as_ref(), &grid, t)?;
        let metric = assemble_metric(chart.as_ref(), &grid, t)?;
        commutator = commutator.max(commutator_check(&frame, &u, Some(&der))?);
        trace = trace.max(trace_identity(&metric, &frame)?.max_difference);
        green = green.max(greens_formula_check(&metric, &u, &w)?);
    }
    out.checks.push(Check::at_most("commutator", commutator, 1e-9));
    out.checks.push(Check::at_most("trace_identity", trace, 1e-9));
    out.checks.push(Check::at_most("greens_formula", green, 1e-9));

    let poly = AmbientPolynomial2([0.3, 1.0, -0.5, 0.7, 1.1, -0.4]);
    let mut errors = Vec::new();
    for level in 0..4 {
        let g = grid.with_nodes(grid.nodes() >> (3 - level))?;
        errors.push(pullback_identity_check(chart.as_ref(), &g, 0.3 * config.period, &poly)?);
    }
    for (j, pair) in errors.windows(2).enumerate() {
        out.number(&format!("pullback_error_{j}"), pair[0]);
        out.checks.extend(Check::within(&format!("pullback_order_{j}"), order(pair[0], pair[1]), 1.7, 2.3));
    }
    out.number("pullback_error_3", errors[3]);

    let duality = |m: usize| -> crate::Result<f64> {
        let g = grid.with_steps(m)?;
        let family = EmbeddedMetric::new(chart.clone(), &g);
        let period = config.period;
        let u = SpaceTimeField::sample(&g, |th, t| th.cos() * (1.0 + t * t / (period * period)));
        let phi = SpaceTimeField::sample(&g, |th, t| {
            (2.0 * th).sin() + th.cos() * (std::f64::consts::TAU * t / period).sin()
        });
        Ok(duality_check(&family, &g, &u, &phi)?.residual)
    };
    let (d0, d1) = (duality(grid.steps() / 2)?, duality(grid.steps())?);
    out.number("duality_residual_coarse", d0);
    out.number("duality_residual", d1);
    out.checks.push(Check::at_least("duality_order", order(d0, d1), 1.7));
    Ok(out)
}

fn run_holder(config: &ExperimentConfig) -> crate::Result<Outcome> {
    let grid = config.grid();
    let chart = config.chart();
    let family = embedded(config, &grid);
    let ivp = IvpConfig::new(grid.clone(), config.scheme, config.zero_order());
    let propagator = Propagator::new(family.as_ref(), &ivp, &config.forcing())?;
    let u0 = config.initial_or(&grid, f64::cos);
    let trajectory = propagator.solve_ivp(&u0)?;
    let geometry = CurveGeometry::from_chart(chart.as_ref(), &grid);
    let alpha = config.holder_alpha;
    let est = holder_estimate(&trajectory, &geometry, alpha, DEFAULT_PAIR_BUDGET, config.seed)?;
    let mut out = Outcome::new();
    out.number("sup_norm", est.sup_norm());
    out.number("holder_coefficient", est.holder_coefficient());
    out.number("time_holder", est.time_holder());
    out.number("norm_alpha", est.norm_alpha());
    out.number("norm_1_alpha", est.norm_1_alpha());
    out.number("norm_2_alpha", est.norm_2_alpha());
    if alpha < 1.0 {
        let rows =
            interpolation_check(&trajectory, &geometry, alpha, &[0.5, 0.25, 0.125], DEFAULT_PAIR_BUDGET, config.seed)?;
        for row in rows {
            out.checks.push(Check::at_most(&format!("interpolation_eps_{}", row.epsilon), row.lhs, row.rhs));
        }
    }
    let band = build_band(chart, 0.0, config.band_h, config.band_delta)?;
    let ne = norm_equivalence_check(&u0, &geometry, &band, alpha, DEFAULT_PAIR_BUDGET, config.seed)?;
    out.number("norm_ratio_sup", ne.sup_ratio);
    out.number("norm_ratio_alpha", ne.alpha_ratio);
    out.number("norm_ratio_first_order", ne.first_order_ratio);
    for (name, r) in [("norm_ratio_alpha", ne.alpha_ratio), ("norm_ratio_first_order", ne.first_order_ratio)] {
        out.checks.extend(Check::within(name, r, 1.0 / ne.bound, ne.bound));
    }
    Ok(out)
}

fn run_max_principle(config: &ExperimentConfig) -> crate::Result<Outcome> {
    let grid = config.grid();
    let family = embedded(config, &grid);
    let ivp = IvpConfig::new(grid.clone(), Scheme::BackwardEuler, ZeroOrder::Zero);
    let u0 = config.initial_or(&grid, |th| th.cos() + 0.3 * (2.0 * th).sin());
    let trajectory = Propagator::new(family.as_ref(), &ivp, &Forcing::Zero)?.solve_ivp(&u0)?;
    let report = max_principle_monitor(&trajectory, &ZeroOrder::Zero);
    // u_t = Delta u - f, so a negative forcing lifts the zero state
    let forced = Propagator::new(family.as_ref(), &ivp, &Forcing::function(|_, _| -1.0))?
        .solve_ivp(&ScalarField::zeros(grid.nodes(), 0.0))?;
    let control = max_principle_monitor(&forced, &ZeroOrder::Zero);
    let mut out = Outcome::new();
    out.number("max_initial", report.maxima[0]);
    out.number("max_final", *report.maxima.last().expect("levels"));
    out.note("control_first_violation", control.first_violation.map_or("none".into(), |k| k.to_string()));
    out.checks.push(Check::at_least("monotone", f64::from(u8::from(report.monotone)), 1.0));
    out.checks.push(Check::at_least(
        "control_violation_detected",
        f64::from(u8::from(control.first_violation == Some(1))),
        1.0,
    ));
    out.file("trajectory.csv", field_csv(&trajectory.levels));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str("[problem]\nscenario = ivp_decay\n[surface]\nfamily = circle\n").unwrap();
        assert_eq!((c.nodes, c.steps, c.scheme), (256, 512, Scheme::CrankNicolson));
        assert_eq!(c.scenario, Scenario::IvpDecay);
    }

    #[test]
    fn contraction_threshold_is_validated() {
        let text = "[problem]\nscenario = contraction\nc0 = 0.5\nT = 1\n[surface]\nfamily = circle\n";
        let err = parse_config_str(text).unwrap_err();
        assert_eq!(err.to_string(), "invalid config: c0 must exceed ln2/T ≈ 0.6931");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let text = "[problem]\nscenario = ivp\n[discretization]\nN 256\n";
        match parse_config_str(text).unwrap_err() {
            RunError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
        let unknown = "[problem]\nscenario = ivp\nspeed = 3\n";
        assert!(matches!(parse_config_str(unknown), Err(RunError::Parse { line: 3, .. })));
        let orphan = "scenario = ivp\n";
        assert!(matches!(parse_config_str(orphan), Err(RunError::Parse { line: 1, .. })));
        let dup = "[problem]\nscenario = ivp\nscenario = ivp\n";
        assert!(matches!(parse_config_str(dup), Err(RunError::Parse { line: 3, .. })));
    }

    #[test]
    fn bad_expression_is_a_parse_error() {
        let text = "[surface]\nfamily = circle\n[problem]\nscenario = ivp\nforcing = cos(theta\n";
        assert!(matches!(parse_config_str(text), Err(RunError::Parse { line: 5, .. })));
    }

    #[test]
    fn csv_row_counts() {
        let static_field = field_csv(&[ScalarField::zeros(4, 0.0)]);
        assert_eq!(static_field.lines().count(), 5);
        let levels: Vec<_> = (0..3).map(|k| ScalarField::zeros(4, 0.5 * k as f64)).collect();
        let csv = field_csv(&levels);
        assert_eq!(csv.lines().count(), 13);
        assert!(csv.starts_with("t,theta,u\n"));
        assert!(!csv.contains('\r'));
        let row = csv.lines().nth(2).unwrap();
        assert_eq!(row, "0.0000000000000000e0,1.5707963267948966e0,0.0000000000000000e0");
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
