//! Scenario configuration: TOML document, preset expansion and validation.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use wgsqz::coefficients::{Direction, MAX_EMITTERS};
use wgsqz::dynamics::InitialState;

use crate::error::ConfigError;
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Coeffs,
    Evolve,
    Steady,
    PhaseMap,
    Spectrum,
    Sweep,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Coeffs => "coeffs",
            Scenario::Evolve => "evolve",
            Scenario::Steady => "steady",
            Scenario::PhaseMap => "phase-map",
            Scenario::Spectrum => "spectrum",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionName {
    #[default]
    Bidirectional,
    Unidirectional,
}

impl From<DirectionName> for Direction {
    fn from(d: DirectionName) -> Self {
        match d {
            DirectionName::Bidirectional => Direction::Bidirectional,
            DirectionName::Unidirectional => Direction::Unidirectional,
        }
    }
}

/// Emitters, reservoir and drive. Lengths are in units of the guided
/// wavelength; rates in units of the single-emitter guided decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub positions: Vec<f64>,
    /// Degree of squeezing.
    pub r: f64,
    /// Squeezing phase in radians.
    pub theta: f64,
    /// Half distance between the two squeezing sources.
    pub source_half_separation: f64,
    pub direction: DirectionName,
    /// Rabi frequency of the coherent drive.
    pub rabi: f64,
    /// Drive phase in radians.
    pub drive_phase: f64,
    /// Replace the squeezed reservoir by a thermal one with this occupation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thermal_photons: Option<f64>,
    /// Keep the pairwise rates and shifts.
    pub dipole_coupling: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            positions: vec![0.0],
            r: 0.5,
            theta: 0.0,
            source_half_separation: 0.0,
            direction: DirectionName::Bidirectional,
            rabi: 0.0,
            drive_phase: 0.0,
            thermal_photons: None,
            dipole_coupling: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// Named start state, ignored when `bloch` is given.
    pub initial: String,
    /// Product start state, one Bloch vector per emitter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bloch: Option<Vec<[f64; 3]>>,
    pub t_max: f64,
    pub samples: usize,
    /// Emitters whose polarisations are summed into `sx` and `sy`.
    pub subset: Vec<usize>,
    pub populations: bool,
    /// Two emitters only: concurrence and fidelity to the limiting NOON state.
    pub entanglement: bool,
    /// Also run the thermal reservoir with the same mean occupation.
    pub compare_thermal: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            initial: "plus-x".into(),
            bloch: None,
            t_max: 20.0,
            samples: 2001,
            subset: vec![0],
            populations: false,
            entanglement: false,
            compare_thermal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyConfig {
    /// Start state used when the steady state is not unique.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseMapConfig {
    pub n_min: f64,
    pub n_max: f64,
    pub n_points: usize,
    pub rc_min: f64,
    pub rc_max: f64,
    pub rc_points: usize,
    /// Photon numbers at which the width of the entangled region is reported.
    pub widths: Vec<f64>,
}

impl Default for PhaseMapConfig {
    fn default() -> Self {
        Self {
            n_min: 0.0,
            n_max: 4.0,
            n_points: 81,
            rc_min: 0.0,
            rc_max: 0.5,
            rc_points: 101,
            widths: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    /// Regression in the time domain followed by a trapezoid transform.
    #[default]
    Regression,
    /// Direct linear solve at every detuning.
    Resolvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub method: SpectrumMethod,
    pub horizon: f64,
    pub samples: usize,
    pub omega_max: f64,
    pub omega_points: usize,
    pub floor_cutoff: f64,
    pub atol: f64,
    pub rtol: f64,
    pub compare_uncoupled: bool,
    /// Start state for the long-time limit; needed when a dark state exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            method: SpectrumMethod::Regression,
            horizon: 100.0,
            samples: 20_000,
            omega_max: 12.0,
            omega_points: 1600,
            floor_cutoff: 1e-6,
            atol: 1e-12,
            rtol: 1e-10,
            compare_uncoupled: false,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Rigid displacement of every emitter.
    #[default]
    Shift,
    /// Separation of a pair about its fixed centre.
    Separation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Window in which the `1/e` crossing is searched.
    pub t_max: f64,
    pub samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::Shift,
            start: 0.0,
            stop: 1.0,
            points: 101,
            t_max: 20.0,
            samples: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_output")]
    pub output: String,
    /// Also write the generator matrix of the configured system as `generator.bin`.
    #[serde(default)]
    pub dump_generator: bool,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub steady: SteadyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_map: Option<PhaseMapConfig>,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_output() -> String {
    "out".into()
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            preset: None,
            output: default_output(),
            dump_generator: false,
            system: SystemConfig::default(),
            numerics: NumericsConfig::default(),
            evolve: EvolveConfig::default(),
            steady: SteadyConfig::default(),
            phase_map: None,
            spectrum: SpectrumConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        self.scenario.ok_or_else(|| ConfigError::invalid("scenario", "no scenario given"))
    }

    /// TOML text that parses back to `self`.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario()?;
        let s = &self.system;
        let n = s.positions.len();
        if n == 0 || n > MAX_EMITTERS {
            return Err(ConfigError::invalid("system.positions", format!("need 1 to {MAX_EMITTERS} emitters, got {n}")));
        }
        if s.positions.iter().any(|p| !p.is_finite()) {
            return Err(ConfigError::invalid("system.positions", "positions must be finite"));
        }
        for i in 0..n {
            for j in 0..i {
                if s.positions[i] == s.positions[j] {
                    return Err(ConfigError::invalid("system.positions", format!("emitters {j} and {i} coincide")));
                }
            }
        }
        non_negative("system.r", s.r)?;
        finite("system.theta", s.theta)?;
        finite("system.source_half_separation", s.source_half_separation)?;
        non_negative("system.rabi", s.rabi)?;
        finite("system.drive_phase", s.drive_phase)?;
        if let Some(t) = s.thermal_photons {
            non_negative("system.thermal_photons", t)?;
        }

        let num = &self.numerics;
        positive("numerics.atol", num.atol)?;
        non_negative("numerics.rtol", num.rtol)?;
        if num.max_steps == 0 {
            return Err(ConfigError::invalid("numerics.max_steps", "must be positive"));
        }

        let ev = &self.evolve;
        if let Some(b) = &ev.bloch {
            if b.len() != n {
                return Err(ConfigError::invalid("evolve.bloch", format!("need one vector per emitter ({n})")));
            }
            for v in b {
                let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(len <= 1.0 + 1e-12) {
                    return Err(ConfigError::invalid("evolve.bloch", "Bloch vectors must have length <= 1"));
                }
            }
        } else {
            initial_state("evolve.initial", &ev.initial, n)?;
        }
        positive("evolve.t_max", ev.t_max)?;
        at_least("evolve.samples", ev.samples, 2)?;
        if ev.subset.is_empty() || ev.subset.iter().any(|&i| i >= n) {
            return Err(ConfigError::invalid("evolve.subset", format!("indices must lie in 0..{n}")));
        }
        if ev.entanglement && n != 2 {
            return Err(ConfigError::invalid("evolve.entanglement", "needs exactly two emitters"));
        }
        if let Some(name) = &self.steady.initial {
            initial_state("steady.initial", name, n)?;
        }

        if let Some(pm) = &self.phase_map {
            non_negative("phase_map.n_min", pm.n_min)?;
            if !(pm.n_max.is_finite() && pm.n_max >= pm.n_min) {
                return Err(ConfigError::invalid("phase_map.n_max", "must be finite and >= n_min"));
            }
            at_least("phase_map.n_points", pm.n_points, 1)?;
            finite("phase_map.rc_min", pm.rc_min)?;
            if !(pm.rc_max.is_finite() && pm.rc_max >= pm.rc_min) {
                return Err(ConfigError::invalid("phase_map.rc_max", "must be finite and >= rc_min"));
            }
            at_least("phase_map.rc_points", pm.rc_points, 1)?;
            for &w in &pm.widths {
                positive("phase_map.widths", w)?;
            }
        }

        let sp = &self.spectrum;
        positive("spectrum.horizon", sp.horizon)?;
        at_least("spectrum.samples", sp.samples, 3)?;
        positive("spectrum.omega_max", sp.omega_max)?;
        at_least("spectrum.omega_points", sp.omega_points, 2)?;
        positive("spectrum.floor_cutoff", sp.floor_cutoff)?;
        positive("spectrum.atol", sp.atol)?;
        non_negative("spectrum.rtol", sp.rtol)?;
        if let Some(name) = &sp.initial {
            initial_state("spectrum.initial", name, n)?;
        }

        let sw = &self.sweep;
        finite("sweep.start", sw.start)?;
        finite("sweep.stop", sw.stop)?;
        at_least("sweep.points", sw.points, 1)?;
        positive("sweep.t_max", sw.t_max)?;
        at_least("sweep.samples", sw.samples, 2)?;
        if sw.parameter == SweepParameter::Separation {
            if n != 2 {
                return Err(ConfigError::invalid("sweep.parameter", "separation sweeps need exactly two emitters"));
            }
            let (lo, hi) = (sw.start.min(sw.stop), sw.start.max(sw.stop));
            if lo <= 0.0 || (sw.points == 1 && hi <= 0.0) {
                return Err(ConfigError::invalid("sweep.start", "separations must be positive"));
            }
        }
        Ok(())
    }
}

fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must be finite"))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be >= 0, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be > 0, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be at least {min}, got {v}")))
    }
}

pub(crate) fn initial_state(key: &str, name: &str, n: usize) -> Result<InitialState, ConfigError> {
    let state = InitialState::from_str(name).map_err(|_| {
        let names: Vec<&str> = InitialState::ALL.iter().map(|s| s.name()).collect();
        ConfigError::invalid(key, format!("unknown state `{name}` (expected one of {})", names.join(", ")))
    })?;
    if matches!(state, InitialState::BellPlus | InitialState::BellMinus) && n != 2 {
        return Err(ConfigError::invalid(key, "Bell states need exactly two emitters"));
    }
    Ok(state)
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_error(text: &str, err: toml::de::Error) -> ConfigError {
    let (line, column) = err.span().map_or((0, 0), |s| position(text, s.start));
    ConfigError::Parse {
        line,
        column,
        message: err.message().to_string(),
    }
}

/// Overlay `top` onto `base`, descending into tables.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Overrides supplied outside the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub scenario: Option<Scenario>,
    pub output: Option<String>,
}

/// Defaults, then the preset, then the document, then `overrides`.
/// The scenario is not required here; see [`ScenarioConfig::validate`].
pub fn resolve(text: Option<&str>, overrides: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let doc: toml::Table = match text {
        Some(t) => {
            // Every field has a default, so the document alone must already fit
            // the schema; checking it here keeps source spans in the errors.
            toml::from_str::<ScenarioConfig>(t).map_err(|e| parse_error(t, e))?;
            t.parse::<toml::Table>().map_err(|e| parse_error(t, e))?
        }
        None => toml::Table::new(),
    };
    let preset_name = match (&overrides.preset, doc.get("preset")) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(toml::Value::String(p))) => Some(p.clone()),
        (None, Some(_)) => return Err(ConfigError::invalid("preset", "must be a string")),
        (None, None) => None,
    };
    let mut table = match &preset_name {
        Some(name) => toml::Table::try_from(presets::preset(name)?).expect("preset serialises"),
        None => toml::Table::new(),
    };
    merge(&mut table, doc);
    let text_for_errors = text.unwrap_or("");
    let mut cfg: ScenarioConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| parse_error(text_for_errors, e))?;
    cfg.preset = preset_name;
    if let Some(s) = overrides.scenario {
        cfg.scenario = Some(s);
    }
    if let Some(o) = &overrides.output {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg = resolve(Some(text), &Overrides::default())?;
    cfg.validate()?;
    Ok(cfg)
}
