//! Experiment configuration: a single TOML file declaring lattice, drive,
//! times, window, convention, outputs and tolerance overrides.
//!
//! The parsed form round-trips: `canonical_toml` of a parsed config
//! re-parses to an equal structure.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drive::{DriveProtocol, InterpOrder, SampledSeries, Waveform};
use crate::kernel::{AxisWindow, Convention, Window};
use crate::lattice::LatticeSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Read(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Validation(String),
}

fn default_schema_version() -> u32 {
    crate::io::SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub convention: ConventionSpec,
    /// Refuse triangular drives outside the separable closed form instead of
    /// falling back to the exact dressed kernel.
    #[serde(default)]
    pub require_phase_constraint: bool,
    pub lattice: LatticeConfig,
    pub drive: DriveConfig,
    pub times: TimesSpec,
    pub window: WindowSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionSpec {
    #[default]
    Forward,
    PaperMm,
}

impl From<ConventionSpec> for Convention {
    fn from(c: ConventionSpec) -> Convention {
        match c {
            ConventionSpec::Forward => Convention::ForwardSchrodinger,
            ConventionSpec::PaperMm => Convention::PaperMm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordination: Option<usize>,
    /// Row-major integer matrix, one row per primitive direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub alpha: Vec<WaveformSpec>,
    pub beta: Vec<WaveformSpec>,
}

/// Real or complex scalar: `1.0` or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Scalar> for C64 {
    fn from(s: Scalar) -> C64 {
        match s {
            Scalar::Real(x) => C64::new(x, 0.0),
            Scalar::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WaveformSpec {
    Constant {
        value: Scalar,
    },
    Harmonic {
        amplitude: Scalar,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Sampled {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<Scalar>>,
        /// Two-column CSV (time, value) or three-column (time, re, im),
        /// relative to the config file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        /// 1 (linear) or 3 (cubic).
        #[serde(default = "default_interp")]
        interpolation: u8,
    },
}

fn default_interp() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Per-axis inclusive [min, max].
    pub ranges: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_oracle_tol")]
    pub oracle: f64,
    #[serde(default = "default_mm_tol")]
    pub mm_residual: f64,
    #[serde(default = "default_unitarity_tol")]
    pub unitarity: f64,
    #[serde(default = "default_constraint_tol")]
    pub phase_constraint: f64,
}

fn default_oracle_tol() -> f64 {
    1e-5
}
fn default_mm_tol() -> f64 {
    1e-10
}
fn default_unitarity_tol() -> f64 {
    1e-8
}
fn default_constraint_tol() -> f64 {
    crate::kernel::DEFAULT_CONSTRAINT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle: default_oracle_tol(),
            mm_residual: default_mm_tol(),
            unitarity: default_unitarity_tol(),
            phase_constraint: default_constraint_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OutputSpec {
    KernelCsv,
    ProbabilityMap {
        source: Vec<i64>,
    },
    Wavepacket {
        initial: InitialState,
    },
    Verify {
        #[serde(default = "default_oracle_step")]
        oracle_step: f64,
        #[serde(default = "default_margin")]
        margin: i64,
        /// Also check the redundant non-primitive shift recurrences.
        #[serde(default)]
        include_redundant: bool,
    },
}

fn default_oracle_step() -> f64 {
    1e-2
}
fn default_margin() -> i64 {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    Delta { site: Vec<i64> },
    Gaussian { center: Vec<f64>, width: f64 },
}

/// A config resolved against the filesystem into core types.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub lattice: LatticeSpec,
    pub drive: DriveProtocol,
    pub times: Vec<f64>,
    pub window: Window,
    pub convention: Convention,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    /// Canonical serialized form; re-parses to an equal structure.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, base_dir: &Path) -> Result<Experiment, ConfigError> {
        if self.schema_version != crate::io::SCHEMA_VERSION {
            return Err(ConfigError::Validation(format!(
                "schema_version {} unsupported (expected {})",
                self.schema_version,
                crate::io::SCHEMA_VERSION
            )));
        }
        let lattice = self.lattice.resolve()?;
        let drive = self.drive.resolve(base_dir)?;
        if drive.coordination() != lattice.coordination()
            || drive.dimension() != lattice.dimension()
        {
            return Err(ConfigError::Validation(format!(
                "drive arity (c, d) = ({}, {}) does not match lattice ({}, {})",
                drive.coordination(),
                drive.dimension(),
                lattice.coordination(),
                lattice.dimension()
            )));
        }
        let times = self.times.resolve()?;
        if let Some(tm) = drive.t_max() {
            if times.iter().any(|&t| t > tm + 1e-12) {
                return Err(ConfigError::Validation(format!(
                    "requested times exceed the sampled drive range end {tm}"
                )));
            }
        }
        let window = self.window.resolve(lattice.dimension())?;
        for out in &self.outputs {
            match out {
                OutputSpec::ProbabilityMap { source } => {
                    if window.flatten(source).is_none() {
                        return Err(ConfigError::Validation(format!(
                            "probability-map source {source:?} outside window"
                        )));
                    }
                }
                OutputSpec::Wavepacket { initial: InitialState::Delta { site } } => {
                    if window.flatten(site).is_none() {
                        return Err(ConfigError::Validation(format!(
                            "wavepacket site {site:?} outside window"
                        )));
                    }
                }
                OutputSpec::Wavepacket { initial: InitialState::Gaussian { center, width } } => {
                    if center.len() != window.dimension() || !(*width > 0.0) {
                        return Err(ConfigError::Validation(
                            "gaussian wavepacket needs a center per axis and width > 0".into(),
                        ));
                    }
                }
                OutputSpec::Verify { oracle_step, margin, .. } => {
                    if !(*oracle_step > 0.0) {
                        return Err(ConfigError::Validation("oracle_step must be positive".into()));
                    }
                    if *margin < 0 {
                        return Err(ConfigError::Validation("margin must be non-negative".into()));
                    }
                }
                OutputSpec::KernelCsv => {}
            }
        }
        Ok(Experiment {
            config: self.clone(),
            lattice,
            drive,
            times,
            window,
            convention: self.convention.into(),
        })
    }
}

impl LatticeConfig {
    fn resolve(&self) -> Result<LatticeSpec, ConfigError> {
        match (&self.builtin, &self.sigma) {
            (Some(name), None) => match name.as_str() {
                "chain" => Ok(LatticeSpec::chain()),
                "square" => Ok(LatticeSpec::square()),
                "triangular" => Ok(LatticeSpec::triangular()),
                other => Err(ConfigError::Validation(format!(
                    "unknown builtin lattice {other:?} (chain, square, triangular)"
                ))),
            },
            (None, Some(rows)) => {
                let d = self
                    .dimension
                    .ok_or_else(|| ConfigError::Validation("explicit lattice needs dimension".into()))?;
                let c = self.coordination.ok_or_else(|| {
                    ConfigError::Validation("explicit lattice needs coordination".into())
                })?;
                if rows.len() != d || rows.iter().any(|r| r.len() != c) {
                    return Err(ConfigError::Validation(format!(
                        "sigma must be {d} rows of {c} entries"
                    )));
                }
                let flat: Vec<i64> = rows.iter().flatten().copied().collect();
                LatticeSpec::new(d, c, flat)
                    .map_err(|e| ConfigError::Validation(e.to_string()))
            }
            (Some(_), Some(_)) => Err(ConfigError::Validation(
                "give either builtin or an explicit sigma, not both".into(),
            )),
            (None, None) => Err(ConfigError::Validation(
                "lattice needs builtin = \"chain\" | \"square\" | \"triangular\" or an explicit sigma"
                    .into(),
            )),
        }
    }
}

impl DriveConfig {
    fn resolve(&self, base_dir: &Path) -> Result<DriveProtocol, ConfigError> {
        let alphas: Vec<Waveform> = self
            .alpha
            .iter()
            .map(|w| w.resolve(base_dir, false))
            .collect::<Result<_, _>>()?;
        let betas: Vec<Waveform> = self
            .beta
            .iter()
            .map(|w| w.resolve(base_dir, true))
            .collect::<Result<_, _>>()?;
        DriveProtocol::new(alphas, betas).map_err(|e| ConfigError::Validation(e.to_string()))
    }
}

impl WaveformSpec {
    fn resolve(&self, base_dir: &Path, real_only: bool) -> Result<Waveform, ConfigError> {
        let reject_complex = |v: C64, what: &str| -> Result<C64, ConfigError> {
            if real_only && v.im != 0.0 {
                Err(ConfigError::Validation(format!("{what} must be real for field components")))
            } else {
                Ok(v)
            }
        };
        match self {
            WaveformSpec::Constant { value } => {
                Ok(Waveform::Constant(reject_complex((*value).into(), "constant value")?))
            }
            WaveformSpec::Harmonic { amplitude, omega, phase } => Ok(Waveform::Harmonic {
                amplitude: reject_complex((*amplitude).into(), "harmonic amplitude")?,
                omega: *omega,
                phase: *phase,
            }),
            WaveformSpec::Sampled { t0, dt, values, path, interpolation } => {
                let order = match interpolation {
                    1 => InterpOrder::Linear,
                    3 => InterpOrder::Cubic,
                    other => {
                        return Err(ConfigError::Validation(format!(
                            "interpolation order must be 1 or 3, got {other}"
                        )))
                    }
                };
                let (t0, dt, vals): (f64, f64, Vec<C64>) = match (values, path) {
                    (Some(vals), None) => {
                        let t0 = t0.unwrap_or(0.0);
                        let dt = dt.ok_or_else(|| {
                            ConfigError::Validation("inline sampled drive needs dt".into())
                        })?;
                        (t0, dt, vals.iter().map(|&s| s.into()).collect())
                    }
                    (None, Some(rel)) => read_sampled_csv(&base_dir.join(rel))?,
                    _ => {
                        return Err(ConfigError::Validation(
                            "sampled drive needs either inline values or a csv path".into(),
                        ))
                    }
                };
                if real_only {
                    if let Some(bad) = vals.iter().find(|v| v.im != 0.0) {
                        return Err(ConfigError::Validation(format!(
                            "sampled field component has complex sample {bad}"
                        )));
                    }
                }
                let series = SampledSeries::new(t0, dt, vals, order)
                    .map_err(|e| ConfigError::Validation(e.to_string()))?;
                Ok(Waveform::Sampled(series))
            }
        }
    }
}

fn read_sampled_csv(path: &Path) -> Result<(f64, f64, Vec<C64>), ConfigError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ConfigError::Validation(format!("{}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ConfigError::Validation(format!("{}: {e}", path.display())))?;
        let parse = |idx: usize| -> Result<f64, ConfigError> {
            rec.get(idx)
                .ok_or_else(|| {
                    ConfigError::Validation(format!(
                        "{} line {}: missing column {}",
                        path.display(),
                        line + 1,
                        idx + 1
                    ))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    ConfigError::Validation(format!(
                        "{} line {}: {e}",
                        path.display(),
                        line + 1
                    ))
                })
        };
        times.push(parse(0)?);
        let re = parse(1)?;
        let im = if rec.len() > 2 { parse(2)? } else { 0.0 };
        values.push(C64::new(re, im));
    }
    if times.len() < 2 {
        return Err(ConfigError::Validation(format!(
            "{}: need at least two samples",
            path.display()
        )));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(ConfigError::Validation(format!(
            "{}: sample times must increase",
            path.display()
        )));
    }
    for (k, pair) in times.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(ConfigError::Validation(format!(
                "{} line {}: non-uniform time grid",
                path.display(),
                k + 2
            )));
        }
    }
    Ok((times[0], dt, values))
}

impl TimesSpec {
    fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        let times = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(start), Some(stop), Some(count)) => {
                if count == 0 {
                    return Err(ConfigError::Validation("times count must be positive".into()));
                }
                if count == 1 {
                    vec![start]
                } else {
                    (0..count)
                        .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                        .collect()
                }
            }
            _ => {
                return Err(ConfigError::Validation(
                    "times needs either values = [...] or start/stop/count".into(),
                ))
            }
        };
        if times.is_empty() {
            return Err(ConfigError::Validation("times must be non-empty".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(ConfigError::Validation("times must be finite and non-negative".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(ConfigError::Validation("times must be sorted".into()));
        }
        Ok(times)
    }
}

impl WindowSpec {
    fn resolve(&self, dimension: usize) -> Result<Window, ConfigError> {
        if self.ranges.len() != dimension {
            return Err(ConfigError::Validation(format!(
                "window has {} axes, lattice dimension is {dimension}",
                self.ranges.len()
            )));
        }
        let axes: Result<Vec<AxisWindow>, _> = self
            .ranges
            .iter()
            .map(|&[lo, hi]| AxisWindow::new(lo, hi))
            .collect();
        let axes = axes.map_err(|e| ConfigError::Validation(e.to_string()))?;
        Window::new(axes).map_err(|e| ConfigError::Validation(e.to_string()))
    }
}

/// Build the initial state vector on the window.
pub fn initial_state(window: &Window, spec: &InitialState) -> Result<Vec<C64>, ConfigError> {
    let n = window.site_count();
    match spec {
        InitialState::Delta { site } => {
            let idx = window.flatten(site).ok_or_else(|| {
                ConfigError::Validation(format!("delta site {site:?} outside window"))
            })?;
            let mut state = vec![C64::new(0.0, 0.0); n];
            state[idx] = C64::new(1.0, 0.0);
            Ok(state)
        }
        InitialState::Gaussian { center, width } => {
            let mut state = vec![C64::new(0.0, 0.0); n];
            for (idx, site) in window.sites().iter().enumerate() {
                let r2: f64 = site
                    .iter()
                    .zip(center)
                    .map(|(&s, &c)| (s as f64 - c).powi(2))
                    .sum();
                state[idx] = C64::new((-r2 / (2.0 * width * width)).exp(), 0.0);
            }
            let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in &mut state {
                *a /= norm;
            }
            Ok(state)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[lattice]
builtin = "chain"

[[drive.alpha]]
kind = "constant"
value = 1.0

[[drive.beta]]
kind = "constant"
value = 0.0

[times]
values = [0.0]

[window]
ranges = [[-5, 5]]
"#;

    #[test]
    fn minimal_config_parses_and_resolves() {
        let cfg = ExperimentConfig::from_str(MINIMAL).unwrap();
        let exp = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(exp.lattice, LatticeSpec::chain());
        assert_eq!(exp.times, vec![0.0]);
        assert_eq!(exp.convention, Convention::ForwardSchrodinger);
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = ExperimentConfig::from_str(MINIMAL).unwrap();
        let canon = cfg.canonical_toml();
        let again = ExperimentConfig::from_str(&canon).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_arity_mismatch() {
        let text = MINIMAL.replace("builtin = \"chain\"", "builtin = \"square\"");
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        assert!(cfg.resolve(Path::new(".")).is_err());
    }

    #[test]
    fn rejects_unknown_keys_with_location() {
        let text = format!("{MINIMAL}\nnonsense = 3\n");
        let err = ExperimentConfig::from_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nonsense"), "{msg}");
    }

    #[test]
    fn start_stop_count_grid() {
        let text = MINIMAL.replace("values = [0.0]", "start = 0.0\nstop = 2.0\ncount = 5");
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        let exp = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(exp.times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn rejects_unsorted_times() {
        let text = MINIMAL.replace("values = [0.0]", "values = [1.0, 0.5]");
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        assert!(cfg.resolve(Path::new(".")).is_err());
    }

    #[test]
    fn explicit_sigma_lattice() {
        let text = MINIMAL.replace(
            "builtin = \"chain\"",
            "dimension = 1\ncoordination = 2\nsigma = [[1, 2]]",
        );
        let text = text.replace(
            "[[drive.beta]]",
            "[[drive.alpha]]\nkind = \"constant\"\nvalue = [0.0, 0.5]\n\n[[drive.beta]]",
        );
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        let exp = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(exp.lattice.coordination(), 2);
        assert_eq!(exp.lattice.sigma(0, 1), 2);
    }

    #[test]
    fn gaussian_initial_state_is_normalized() {
        let w = Window::line(AxisWindow::symmetric(10));
        let s = initial_state(
            &w,
            &InitialState::Gaussian { center: vec![0.0], width: 2.0 },
        )
        .unwrap();
        let norm: f64 = s.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
