//! The five reproduction scenarios. Each computes one table plus a summary;
//! [`run`] writes both next to each other.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use eit_core::limits::{delay_closed_peak, delta_eff_from_slope, saturation_omega_c_sq};
use eit_core::model::rad_to_hz;
use eit_core::observables::{
    calibrate, group_delay, linear_fit, peak_transmission, sweep_coupling, transmission_spectrum, width_grid,
};
use eit_core::oracle::{compare_ansatz, resonant_grid, solve_binned};
use eit_core::{FieldConfig, RateSet};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    Fano,
    WidthSweep,
    TransmissionSweep,
    DelaySweep,
    OracleCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Fano,
        Scenario::WidthSweep,
        Scenario::TransmissionSweep,
        Scenario::DelaySweep,
        Scenario::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fano => "fano",
            Scenario::WidthSweep => "width-sweep",
            Scenario::TransmissionSweep => "transmission-sweep",
            Scenario::DelaySweep => "delay-sweep",
            Scenario::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub table: Table,
    pub summary: Map<String, Value>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    scenario: &'static str,
    columns: &'a [String],
    rows: usize,
    config: &'a Config,
    summary: &'a Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub csv: PathBuf,
    pub metadata: PathBuf,
}

pub fn compute(scenario: Scenario, config: &Config) -> CliResult<Output> {
    match scenario {
        Scenario::Fano => fano(config),
        Scenario::WidthSweep => width_sweep(config),
        Scenario::TransmissionSweep => transmission_sweep(config),
        Scenario::DelaySweep => delay_sweep(config),
        Scenario::OracleCheck => oracle_check(config),
    }
}

/// Computes the scenario and writes `<name>.csv` and `<name>.json` into
/// `dir`, which is created if needed.
pub fn run(scenario: Scenario, config: &Config, dir: &Path) -> CliResult<Written> {
    let output = compute(scenario, config)?;
    let csv = output.table.to_csv()?;
    let meta = Metadata {
        scenario: scenario.name(),
        columns: output.table.headers(),
        rows: output.table.rows().len(),
        config,
        summary: &output.summary,
    };
    let mut meta_text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Numeric(e.to_string()))?;
    meta_text.push('\n');

    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let written = Written {
        csv: dir.join(format!("{}.csv", scenario.name())),
        metadata: dir.join(format!("{}.json", scenario.name())),
    };
    fs::write(&written.csv, csv).map_err(|e| CliError::Io(format!("{}: {e}", written.csv.display())))?;
    fs::write(&written.metadata, meta_text).map_err(|e| CliError::Io(format!("{}: {e}", written.metadata.display())))?;
    Ok(written)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn require_sweep(config: &Config) -> CliResult<Vec<f64>> {
    if config.fields.omega_c_values.len() < 2 {
        return Err(CliError::Config("fields.omega_c_values: a sweep needs at least two values".into()));
    }
    Ok(sorted(&config.fields.omega_c_values))
}

fn fano(config: &Config) -> CliResult<Output> {
    let model = config.model()?;
    let base = config.base_fields()?;
    let calib = calibrate(&model, &base, config.calib.t0)?;
    let mut table = Table::new(&["delta_c_rad_s", "delta_r_rad_s", "transmission", "im_chi", "re_chi"]);
    let mut asymmetry = Vec::new();
    for &delta_c in &config.fields.delta_c_values {
        let fields = FieldConfig::new(base.omega_p, base.omega_c, delta_c, 0.0)?;
        let grid = width_grid(&model, &fields, config.numerics.width_points, config.numerics.span_factor)?;
        let s = transmission_spectrum(&model, &fields, &calib, &grid)?;
        let n = s.len();
        let skew = (0..n / 2)
            .map(|i| (s.transmission[i] - s.transmission[n - 1 - i]).abs())
            .fold(0.0, f64::max);
        asymmetry.push(json!({ "delta_c_rad_s": delta_c, "max_asymmetry": skew }));
        for i in 0..n {
            table.push(vec![delta_c, s.delta_r[i], s.transmission[i], s.im_chi[i], s.re_chi[i]])?;
        }
    }
    let mut summary = Map::new();
    summary.insert("norm_a".into(), json!(calib.norm_a));
    summary.insert("asymmetry".into(), Value::Array(asymmetry));
    Ok(Output { table, summary })
}

fn width_sweep(config: &Config) -> CliResult<Output> {
    let model = config.model()?;
    let base = config.base_fields()?;
    let calib = calibrate(&model, &base, config.calib.t0)?;
    let omega_c = require_sweep(config)?;
    let outcomes = sweep_coupling(&model, &base, &calib, &omega_c, &config.sweep_settings())?;

    let failures: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.row.as_ref().err().map(|e| format!("omega_c = {:e}: {e}", o.omega_c)))
        .collect();
    if !failures.is_empty() {
        return Err(CliError::Numeric(failures.join("; ")));
    }
    let rows: Vec<_> = outcomes.into_iter().map(|o| o.row.expect("failures handled")).collect();

    let mut table = Table::new(&[
        "omega_c_rad_s",
        "omega_c_sq",
        "fwhm_fit_rad_s",
        "fwhm_bisect_rad_s",
        "peak_t",
        "group_delay_s",
    ]);
    for r in &rows {
        table.push(vec![r.omega_c, r.omega_c * r.omega_c, r.eit_fwhm, r.fwhm_bisect, r.peak_t, r.group_delay])?;
    }
    let x: Vec<f64> = rows.iter().map(|r| r.omega_c * r.omega_c).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.eit_fwhm).collect();
    let fit = linear_fit(&x, &y)?;
    let delta_eff = delta_eff_from_slope(fit.slope);

    let mut summary = Map::new();
    summary.insert("norm_a".into(), json!(calib.norm_a));
    summary.insert("slope_s".into(), json!(fit.slope));
    summary.insert("intercept_rad_s".into(), json!(fit.intercept));
    summary.insert("r_squared".into(), json!(fit.r_squared));
    summary.insert("delta_eff_rad_s".into(), json!(delta_eff));
    summary.insert("delta_eff_ghz".into(), json!(rad_to_hz(delta_eff) / 1e9));
    summary.insert(
        "slope_per_intensity".into(),
        json!(fit.slope / config.calib.intensity_coefficient),
    );
    summary.insert(
        "flagged_omega_c".into(),
        json!(rows.iter().filter(|r| r.flagged).map(|r| r.omega_c).collect::<Vec<_>>()),
    );
    Ok(Output { table, summary })
}

fn transmission_sweep(config: &Config) -> CliResult<Output> {
    let model = config.model()?;
    let base = config.base_fields()?;
    let t0 = config.calib.t0;
    let calib = calibrate(&model, &base, t0)?;
    let omega_c = require_sweep(config)?;
    let k = config.calib.intensity_coefficient;
    let rows: Vec<Vec<f64>> = omega_c
        .par_iter()
        .map(|&oc| -> CliResult<Vec<f64>> {
            let fields = base.with_omega_c(oc);
            let t = peak_transmission(&model, &fields, &calib)?;
            let closed = model.limits(oc, t0)?.peak_trans_closed();
            Ok(vec![oc, oc * oc, k * oc * oc, t, closed])
        })
        .collect::<CliResult<_>>()?;
    let mut table = Table::new(&["omega_c_rad_s", "omega_c_sq", "coupling_intensity", "peak_t", "peak_t_closed"]);
    for row in rows {
        table.push(row)?;
    }
    let lim = model.limits(0.0, t0)?;
    let mut summary = Map::new();
    summary.insert("norm_a".into(), json!(calib.norm_a));
    summary.insert(
        "saturation_omega_c_sq".into(),
        json!(saturation_omega_c_sq(lim.gamma_r, lim.gamma, lim.w_d)),
    );
    Ok(Output { table, summary })
}

fn delay_sweep(config: &Config) -> CliResult<Output> {
    let model = config.model()?;
    let base = config.base_fields()?;
    let t0 = config.calib.t0;
    let calib = calibrate(&model, &base, t0)?;
    let omega_c = require_sweep(config)?;
    let k = config.calib.intensity_coefficient;
    let rows: Vec<Vec<f64>> = omega_c
        .par_iter()
        .map(|&oc| -> CliResult<Vec<f64>> {
            let fields = base.with_omega_c(oc);
            let tau = group_delay(&model, &fields, &calib)?;
            let closed = model.limits(oc, t0)?.delay_closed();
            Ok(vec![oc, oc * oc, k * oc * oc, tau, closed])
        })
        .collect::<CliResult<_>>()?;
    let mut table = Table::new(&[
        "omega_c_rad_s",
        "omega_c_sq",
        "coupling_intensity",
        "group_delay_s",
        "group_delay_closed_s",
    ]);
    let (mut best, mut best_oc) = (f64::MIN, 0.0);
    for row in rows {
        if row[3] > best {
            (best, best_oc) = (row[3], row[0]);
        }
        table.push(row)?;
    }
    let mut summary = Map::new();
    summary.insert("norm_a".into(), json!(calib.norm_a));
    summary.insert("max_group_delay_s".into(), json!(best));
    summary.insert("omega_c_at_max_rad_s".into(), json!(best_oc));
    summary.insert(
        "closed_form_peak_s".into(),
        json!(delay_closed_peak(model.rates.gamma_r, t0)),
    );
    Ok(Output { table, summary })
}

fn oracle_check(config: &Config) -> CliResult<Output> {
    let base_rates = config.rate_set()?;
    let medium = config.medium_params()?;
    let fields = config.base_fields()?;
    let nodes = config.numerics.oracle_nodes;
    let span = config.numerics.oracle_span;
    let rows: Vec<Vec<f64>> = config
        .numerics
        .vcc_multipliers
        .par_iter()
        .map(|&mult| -> CliResult<Vec<f64>> {
            let rates = RateSet {
                gamma_0vcc: base_rates.gamma_0vcc * mult,
                gamma_1vcc: base_rates.gamma_1vcc * mult,
                ..base_rates
            };
            let model = config.model_with(rates)?;
            let (ansatz, _) = model.solve(&fields)?;
            let grid = resonant_grid(&medium, &rates, &fields, nodes, span)?;
            let binned = solve_binned(&fields, &rates, &grid)?;
            let cmp = compare_ansatz(&binned, &ansatz, &grid)?;
            let im_binned = binned.totals(&grid).r_ab.im;
            let rel = if ansatz.r_ab.im != 0.0 {
                (im_binned / ansatz.r_ab.im - 1.0).abs()
            } else {
                im_binned.abs()
            };
            Ok(vec![
                mult,
                rates.gamma_0vcc,
                rates.gamma_1vcc,
                ansatz.r_ab.im,
                im_binned,
                rel,
                cmp.pop_err,
                cmp.coh_err,
                cmp.shape_err,
                binned.thermalization_distance(&grid)?,
            ])
        })
        .collect::<CliResult<_>>()?;
    let mut table = Table::new(&[
        "vcc_multiplier",
        "gamma_0vcc",
        "gamma_1vcc",
        "im_r_ab_ansatz",
        "im_r_ab_binned",
        "relative_difference",
        "pop_err",
        "coh_err",
        "shape_err",
        "thermalization_distance",
    ]);
    for row in rows {
        table.push(row)?;
    }
    let mut summary = Map::new();
    summary.insert("velocity_nodes".into(), json!(nodes));
    summary.insert("velocity_span".into(), json!(span));
    Ok(Output { table, summary })
}
