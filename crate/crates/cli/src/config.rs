//! Scenario configuration.
//!
//! A config is a JSON object with the blocks `medium`, `rates`, `fields`,
//! `calib`, `numerics` and `output`. Every key is optional and falls back to
//! the metastable-helium defaults; unknown keys are rejected. Rates and
//! detunings are in rad/s, or in Hz when the key carries an `_hz` suffix.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use eit_core::doppler::LineshapeMethod;
use eit_core::model::{hz_to_rad, HELIUM4_MASS};
use eit_core::observables::{Model, SweepSettings};
use eit_core::{FieldConfig, MediumParams, RateSet};

use crate::error::{CliError, CliResult};

/// Fully resolved configuration, defaults applied and units in SI / rad/s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub medium: MediumBlock,
    pub rates: RatesBlock,
    pub fields: FieldsBlock,
    pub calib: CalibBlock,
    pub numerics: NumericsBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumBlock {
    pub wavelength_m: f64,
    pub temperature_k: f64,
    pub atomic_mass_kg: f64,
    pub cell_length_m: f64,
}

impl Default for MediumBlock {
    fn default() -> Self {
        let he = MediumParams::helium_metastable();
        Self {
            wavelength_m: he.wavelength,
            temperature_k: he.temperature,
            atomic_mass_kg: HELIUM4_MASS,
            cell_length_m: he.cell_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatesBlock {
    pub gamma0: f64,
    pub gamma_coll: f64,
    pub gamma_t: f64,
    pub gamma_r: f64,
    pub gamma_0vcc: f64,
    pub gamma_1vcc: f64,
    pub eta: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldsBlock {
    pub omega_p: f64,
    pub omega_c: f64,
    pub delta_c: f64,
    /// Coupling values for the sweep scenarios.
    pub omega_c_values: Vec<f64>,
    /// Coupling detunings for the fano scenario.
    pub delta_c_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibBlock {
    pub t0: f64,
    /// Converts Ω_C² into the reported coupling-intensity axis.
    pub intensity_coefficient: f64,
}

impl Default for CalibBlock {
    fn default() -> Self {
        Self {
            t0: 0.46,
            intensity_coefficient: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineshapeChoice {
    Quadrature,
    ClosedForm,
}

impl From<LineshapeChoice> for LineshapeMethod {
    fn from(choice: LineshapeChoice) -> Self {
        match choice {
            LineshapeChoice::Quadrature => LineshapeMethod::Quadrature,
            LineshapeChoice::ClosedForm => LineshapeMethod::ClosedForm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsBlock {
    pub lineshape: LineshapeChoice,
    /// Raman-detuning samples per spectrum (odd).
    pub width_points: usize,
    /// Half span of a spectrum in units of the predicted EIT width.
    pub span_factor: f64,
    pub oracle_nodes: usize,
    /// Half span of the velocity grid in units of the most probable speed.
    pub oracle_span: f64,
    /// Factors applied to both VCC rates in the oracle check.
    pub vcc_multipliers: Vec<f64>,
}

impl Default for NumericsBlock {
    fn default() -> Self {
        let sweep = SweepSettings::default();
        Self {
            lineshape: LineshapeChoice::Quadrature,
            width_points: sweep.points,
            span_factor: sweep.span_factor,
            oracle_nodes: 201,
            oracle_span: 5.0,
            vcc_multipliers: vec![0.0, 1.0, 10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    gamma0: Option<f64>,
    gamma0_hz: Option<f64>,
    gamma_coll: Option<f64>,
    gamma_coll_hz: Option<f64>,
    gamma_t: Option<f64>,
    gamma_t_hz: Option<f64>,
    gamma_r: Option<f64>,
    gamma_r_hz: Option<f64>,
    gamma_0vcc: Option<f64>,
    gamma_0vcc_hz: Option<f64>,
    gamma_1vcc: Option<f64>,
    gamma_1vcc_hz: Option<f64>,
    eta: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFields {
    omega_p: Option<f64>,
    omega_c: Option<f64>,
    delta_c: Option<f64>,
    delta_c_hz: Option<f64>,
    omega_c_values: Option<Vec<f64>>,
    delta_c_values: Option<Vec<f64>>,
    delta_c_values_hz: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    medium: MediumBlock,
    #[serde(default)]
    rates: RawRates,
    #[serde(default)]
    fields: RawFields,
    #[serde(default)]
    calib: CalibBlock,
    #[serde(default)]
    numerics: NumericsBlock,
    #[serde(default)]
    output: OutputBlock,
}

/// Ten coupling values evenly spaced in Ω_C² up to 5e7 rad/s.
pub fn default_omega_c_values() -> Vec<f64> {
    (1..=10).map(|k| 5e7 * (k as f64 / 10.0).sqrt()).collect()
}

/// Coupling detunings of 0, 0.4, 1.0, 1.4 and 2.1 GHz.
pub fn default_delta_c_values() -> Vec<f64> {
    [0.0, 0.4e9, 1.0e9, 1.4e9, 2.1e9].iter().map(|&hz| hz_to_rad(hz)).collect()
}

fn pick(key: &str, rad: Option<f64>, hz: Option<f64>, default: f64) -> CliResult<f64> {
    match (rad, hz) {
        (Some(_), Some(_)) => Err(CliError::Config(format!("{key} and {key}_hz are both given"))),
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(hz_to_rad(v)),
        (None, None) => Ok(default),
    }
}

fn pick_list(key: &str, rad: Option<Vec<f64>>, hz: Option<Vec<f64>>, default: Vec<f64>) -> CliResult<Vec<f64>> {
    match (rad, hz) {
        (Some(_), Some(_)) => Err(CliError::Config(format!("{key} and {key}_hz are both given"))),
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(v.into_iter().map(hz_to_rad).collect()),
        (None, None) => Ok(default),
    }
}

fn resolve_rates(raw: RawRates) -> CliResult<RatesBlock> {
    let d = RateSet::helium_defaults();
    Ok(RatesBlock {
        gamma0: pick("rates.gamma0", raw.gamma0, raw.gamma0_hz, d.gamma0)?,
        gamma_coll: pick("rates.gamma_coll", raw.gamma_coll, raw.gamma_coll_hz, d.gamma_coll)?,
        gamma_t: pick("rates.gamma_t", raw.gamma_t, raw.gamma_t_hz, d.gamma_t)?,
        gamma_r: pick("rates.gamma_r", raw.gamma_r, raw.gamma_r_hz, d.gamma_r)?,
        gamma_0vcc: pick("rates.gamma_0vcc", raw.gamma_0vcc, raw.gamma_0vcc_hz, d.gamma_0vcc)?,
        gamma_1vcc: pick("rates.gamma_1vcc", raw.gamma_1vcc, raw.gamma_1vcc_hz, d.gamma_1vcc)?,
        eta: raw.eta.unwrap_or(d.eta),
        beta: raw.beta.unwrap_or(d.beta),
    })
}

fn resolve_fields(raw: RawFields) -> CliResult<FieldsBlock> {
    let d = FieldConfig::helium_nominal();
    Ok(FieldsBlock {
        omega_p: raw.omega_p.unwrap_or(d.omega_p),
        omega_c: raw.omega_c.unwrap_or(d.omega_c),
        delta_c: pick("fields.delta_c", raw.delta_c, raw.delta_c_hz, d.delta_c)?,
        omega_c_values: raw.omega_c_values.unwrap_or_else(default_omega_c_values),
        delta_c_values: pick_list(
            "fields.delta_c_values",
            raw.delta_c_values,
            raw.delta_c_values_hz,
            default_delta_c_values(),
        )?,
    })
}

fn require(ok: bool, key: &str, reason: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: {reason}")))
    }
}

impl Config {
    pub fn from_value(value: Value) -> CliResult<Self> {
        let raw: RawConfig =
            serde_path_to_error::deserialize(value).map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
        let config = Config {
            medium: raw.medium,
            rates: resolve_rates(raw.rates)?,
            fields: resolve_fields(raw.fields)?,
            calib: raw.calib,
            numerics: raw.numerics,
            output: raw.output,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.medium_params()?;
        self.rate_set()?;
        self.base_fields()?;
        let f = &self.fields;
        require(
            f.omega_c_values.iter().all(|v| v.is_finite() && *v >= 0.0),
            "fields.omega_c_values",
            "must be finite and non-negative",
        )?;
        require(!f.delta_c_values.is_empty(), "fields.delta_c_values", "must not be empty")?;
        require(f.delta_c_values.iter().all(|v| v.is_finite()), "fields.delta_c_values", "must be finite")?;
        let c = &self.calib;
        require(c.t0 > 0.0 && c.t0 <= 1.0, "calib.t0", "must lie in (0, 1]")?;
        require(
            c.intensity_coefficient.is_finite() && c.intensity_coefficient > 0.0,
            "calib.intensity_coefficient",
            "must be positive",
        )?;
        let n = &self.numerics;
        require(
            n.width_points >= 5 && n.width_points % 2 == 1,
            "numerics.width_points",
            "must be odd and at least 5",
        )?;
        require(n.span_factor.is_finite() && n.span_factor > 0.0, "numerics.span_factor", "must be positive")?;
        require(
            n.oracle_nodes % 2 == 1 && (31..=401).contains(&n.oracle_nodes),
            "numerics.oracle_nodes",
            "must be odd and within 31..=401",
        )?;
        require(n.oracle_span.is_finite() && n.oracle_span >= 4.0, "numerics.oracle_span", "must be at least 4")?;
        require(
            !n.vcc_multipliers.is_empty() && n.vcc_multipliers.iter().all(|m| m.is_finite() && *m >= 0.0),
            "numerics.vcc_multipliers",
            "must be a non-empty list of non-negative factors",
        )?;
        require(!self.output.dir.is_empty(), "output.dir", "must not be empty")
    }

    pub fn medium_params(&self) -> CliResult<MediumParams> {
        let m = &self.medium;
        MediumParams::new(m.wavelength_m, m.temperature_k, m.atomic_mass_kg, m.cell_length_m)
            .map_err(|e| CliError::in_block("medium", e))
    }

    pub fn rate_set(&self) -> CliResult<RateSet> {
        let r = &self.rates;
        let rates = RateSet {
            gamma0: r.gamma0,
            gamma_coll: r.gamma_coll,
            gamma_t: r.gamma_t,
            gamma_r: r.gamma_r,
            gamma_0vcc: r.gamma_0vcc,
            gamma_1vcc: r.gamma_1vcc,
            eta: r.eta,
            beta: r.beta,
        };
        rates.validate().map_err(|e| CliError::in_block("rates", e))?;
        Ok(rates)
    }

    /// Probe, coupling and coupling detuning at two-photon resonance.
    pub fn base_fields(&self) -> CliResult<FieldConfig> {
        let f = &self.fields;
        FieldConfig::new(f.omega_p, f.omega_c, f.delta_c, 0.0).map_err(|e| CliError::in_block("fields", e))
    }

    pub fn model_with(&self, rates: RateSet) -> CliResult<Model> {
        Model::new(self.medium_params()?, rates, self.numerics.lineshape.into()).map_err(CliError::from)
    }

    pub fn model(&self) -> CliResult<Model> {
        self.model_with(self.rate_set()?)
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            points: self.numerics.width_points,
            span_factor: self.numerics.span_factor,
            intensity_coefficient: self.calib.intensity_coefficient,
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Config::from_value(Value::Object(Map::new())).expect("defaults are valid")
    }
}

pub fn parse_config(text: &str) -> CliResult<Config> {
    Config::from_value(parse_value(text)?)
}

/// Parses config text into a JSON value. Blank text stands for `{}`.
pub fn parse_value(text: &str) -> CliResult<Value> {
    if text.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
    if !value.is_object() {
        return Err(CliError::Config("top level must be an object".into()));
    }
    Ok(value)
}

/// The unit twin of a key: `gamma_r` ↔ `gamma_r_hz`.
fn twin(key: &str) -> String {
    match key.strip_suffix("_hz") {
        Some(base) => base.to_string(),
        None => format!("{key}_hz"),
    }
}

/// Applies one `a.b.c=value` override. The value is read as JSON when it
/// parses, otherwise as a string. Setting a key drops its unit twin.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override path `{path}` has an empty segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut node = root;
    for key in parents {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override path `{path}` crosses a non-object")))?;
        node = map.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let map = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("override path `{path}` crosses a non-object")))?;
    map.remove(&twin(last));
    map.insert(last.to_string(), value);
    Ok(())
}

/// Config text (possibly blank) plus overrides, resolved and validated.
pub fn load(text: &str, overrides: &[String]) -> CliResult<Config> {
    let mut value = parse_value(text)?;
    for assignment in overrides {
        apply_override(&mut value, assignment)?;
    }
    Config::from_value(value)
}
