//! Velocity-integrated steady state under the thermalized ansatz
//! ρ_ij(v) = W(v)·R_ij.
//!
//! Unknowns are ordered (R_aa, R_bb, R_cc, Re R_cb, Im R_cb). Rates with a
//! prime below are evaluated at the probe detuning Δ + δ_R, unprimed ones at
//! the coupling detuning Δ.

use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64;

use crate::doppler::{DopplerRates, Lineshape};
use crate::error::{Error, Result};
use crate::model::{FieldConfig, RateSet};

const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub r_aa: f64,
    pub r_bb: f64,
    pub r_cc: f64,
    pub re_rcb: f64,
    pub im_rcb: f64,
    pub r_ab: Complex64,
}

impl SteadyState {
    pub fn r_cb(&self) -> Complex64 {
        Complex64::new(self.re_rcb, self.im_rcb)
    }

    pub fn population_sum(&self) -> f64 {
        self.r_aa + self.r_bb + self.r_cc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// Max-norm residual of the row-equilibrated system.
    pub residual_norm: f64,
    /// Residual of the excited-plus-ground balance that closure replaced, in
    /// rad/s.
    pub dropped_equation_residual: f64,
    /// 1-norm condition number of the row-equilibrated matrix.
    pub condition_estimate: f64,
}

/// Square real system together with what is needed to reconstruct R_ab.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: Matrix5<f64>,
    pub rhs: Vector5<f64>,
    /// Coefficients and constant of the dropped balance equation.
    pub dropped: ([f64; 5], f64),
    pub fields: FieldConfig,
    pub rates: RateSet,
    pub at_probe: DopplerRates,
}

/// Builds the five real rows. `at_coupling` must be evaluated at Δ and
/// `at_probe` at Δ + δ_R, both for the same fields.
pub fn assemble_system(
    fields: &FieldConfig,
    rates: &RateSet,
    at_coupling: &DopplerRates,
    at_probe: &DopplerRates,
) -> LinearSystem {
    let (x1, x3, x4) = (at_coupling.gx1, at_coupling.gx3, at_coupling.gx4);
    let y1 = at_coupling.gy1;
    let y4 = at_coupling.gy4;
    let (x1p, x3p, x4p) = (at_probe.gx1, at_probe.gx3, at_probe.gx4);
    let (y1p, y3p) = (at_probe.gy1, at_probe.gy3);
    let g0 = rates.gamma0;
    let gt = rates.gamma_t;

    let m = 2.0 * rates.gamma_r + 2.0 * rates.eta * rates.gamma_1vcc + x3p + x4;
    let n = 2.0 * fields.delta_r - y3p + y4;

    // Populations enter through D = R_aa − R_bb and E = R_aa − R_cc.
    #[rustfmt::skip]
    let matrix = Matrix5::new(
        // excited-state balance
        -(g0 + gt) - x4p - x3, x4p, x3, x1p + x1, y1 - y1p,
        // closure
        1.0, 1.0, 1.0, 0.0, 0.0,
        // ground-state imbalance
        x4p - x3, -(1.0 - rates.beta) * gt - x4p, (1.0 - rates.beta) * gt + x3, x1 - x1p, y1p + y1,
        // Raman coherence, real part
        x1p + x1, -x1p, -x1, -m, -n,
        // Raman coherence, imaginary part
        y1p - y1, -y1p, y1, n, -m,
    );
    let rhs = Vector5::new(0.0, 1.0, 0.0, 0.0, 0.0);
    let dropped = (
        [g0 + x4p + x3, -gt - x4p, -gt - x3, -(x1p + x1), y1p - y1],
        gt,
    );
    LinearSystem {
        matrix,
        rhs,
        dropped,
        fields: *fields,
        rates: *rates,
        at_probe: *at_probe,
    }
}

fn norm_one(m: &Matrix5<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

fn degenerate_regime(system: &LinearSystem) -> String {
    let f = &system.fields;
    if system.rates.beta == 1.0 && f.omega_p == 0.0 && f.omega_c == 0.0 {
        "beta = 1 with zero optical fields leaves the ground-state split undetermined".into()
    } else if system.rates.gamma_t == 0.0 {
        "zero transit rate leaves the ground-state populations undetermined".into()
    } else {
        format!(
            "singular steady-state system (omega_p = {:e}, omega_c = {:e}, beta = {})",
            f.omega_p, f.omega_c, system.rates.beta
        )
    }
}

/// Solves the system by LU with partial pivoting after row equilibration.
pub fn solve_steady(system: &LinearSystem) -> Result<(SteadyState, SolveReport)> {
    let mut a = system.matrix;
    let mut b = system.rhs;
    for i in 0..5 {
        let scale = a.row(i).amax();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Degenerate(degenerate_regime(system)));
        }
        a.row_mut(i).scale_mut(1.0 / scale);
        b[i] /= scale;
    }
    let lu = a.lu();
    let inverse = lu
        .try_inverse()
        .ok_or_else(|| Error::Degenerate(degenerate_regime(system)))?;
    let condition = norm_one(&a) * norm_one(&inverse);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::Degenerate(degenerate_regime(system)));
    }
    let x = lu
        .solve(&b)
        .ok_or_else(|| Error::Degenerate(degenerate_regime(system)))?;
    let residual_norm = (a * x - b).amax();

    let (coeffs, constant) = system.dropped;
    let dropped_equation_residual = (coeffs.iter().zip(x.iter()).map(|(c, v)| c * v).sum::<f64>() + constant).abs();

    let mut state = SteadyState {
        r_aa: x[0],
        r_bb: x[1],
        r_cc: x[2],
        re_rcb: x[3],
        im_rcb: x[4],
        r_ab: Complex64::new(0.0, 0.0),
    };
    state.r_ab = compute_r_ab(&state, &system.fields, &system.at_probe);
    Ok((
        state,
        SolveReport {
            residual_norm,
            dropped_equation_residual,
            condition_estimate: condition,
        },
    ))
}

/// Probe coherence from the solved populations and Raman coherence. The
/// rates divided by a Rabi frequency are taken in cancelled form, so zero
/// fields are regular.
pub fn compute_r_ab(state: &SteadyState, fields: &FieldConfig, at_probe: &DopplerRates) -> Complex64 {
    let (vx, vy) = profile_of(fields, at_probe);
    let hc = 0.5 * fields.omega_c;
    let hp = 0.5 * fields.omega_p;
    let d = state.r_aa - state.r_bb;
    let (r, s) = (state.re_rcb, state.im_rcb);
    Complex64::new(
        -hc * vx * s - hc * vy * r + hp * vy * d,
        hc * vx * r - hc * vy * s - hp * vx * d,
    )
}

/// Recovers V_X and V_Y from a rate set. The rates store them scaled by
/// field products; the sum Γ_X3 + Γ_X4 = (Ω_C² + Ω_P²)/2·V_X is used when
/// available, otherwise the lineshape is taken to be irrelevant because both
/// fields vanish.
fn profile_of(fields: &FieldConfig, rates: &DopplerRates) -> (f64, f64) {
    let scale = 0.5 * (fields.omega_c * fields.omega_c + fields.omega_p * fields.omega_p);
    if scale == 0.0 {
        return (0.0, 0.0);
    }
    ((rates.gx3 + rates.gx4) / scale, (rates.gy3 + rates.gy4) / scale)
}

/// Evaluates the lineshape at Δ and Δ + δ_R and solves.
pub fn solve_point(fields: &FieldConfig, rates: &RateSet, lineshape: &Lineshape) -> Result<(SteadyState, SolveReport)> {
    fields.validate()?;
    rates.validate()?;
    let at = fields.delta_c;
    let probe = fields.probe_detuning();
    let coupling = DopplerRates::from_profile(fields, lineshape.at(at)?, at);
    let probe_rates = DopplerRates::from_profile(fields, lineshape.at(probe)?, probe);
    let system = assemble_system(fields, rates, &coupling, &probe_rates);
    solve_steady(&system)
}
