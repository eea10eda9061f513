//! Closed-form reference formulas. Used for grid scaling and sanity checks
//! only; the full model is never fed from here.

use crate::model::{MediumParams, RateSet};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub omega_c: f64,
    pub gamma_r: f64,
    /// Optical linewidth Γ.
    pub gamma: f64,
    /// Doppler half width W_D.
    pub w_d: f64,
    pub t0: f64,
    pub delta_eff: f64,
}

impl LimitParams {
    /// Parameters for a medium and rate set. δ_eff defaults to W_D.
    pub fn from_model(medium: &MediumParams, rates: &RateSet, omega_c: f64, t0: f64) -> Result<Self> {
        let w_d = medium.doppler_widths()?.hwhm;
        Ok(Self {
            omega_c,
            gamma_r: rates.gamma_r,
            gamma: rates.optical_linewidth(),
            w_d,
            t0,
            delta_eff: w_d,
        })
    }

    pub fn with_omega_c(self, omega_c: f64) -> Self {
        Self { omega_c, ..self }
    }

    pub fn width_javan(&self) -> f64 {
        width_javan(self.omega_c, self.delta_eff)
    }

    pub fn width_linear(&self) -> f64 {
        width_linear(self.omega_c, self.gamma_r, self.gamma, self.w_d)
    }

    pub fn peak_trans_closed(&self) -> f64 {
        peak_trans_closed(self.omega_c, self.gamma_r, self.gamma, self.w_d, self.t0)
    }

    pub fn delay_closed(&self) -> f64 {
        delay_closed(self.omega_c, self.gamma_r, self.gamma, self.w_d, self.t0)
    }

    pub fn below_inhomogeneous(&self) -> bool {
        below_inhomogeneous(self.omega_c, self.gamma_r, self.gamma, self.w_d)
    }
}

/// Ω_C²/(4δ_eff).
pub fn width_javan(omega_c: f64, delta_eff: f64) -> f64 {
    omega_c * omega_c / (4.0 * delta_eff)
}

/// δ_eff that reproduces a measured slope dΓ_EIT/d(Ω_C²).
pub fn delta_eff_from_slope(slope: f64) -> f64 {
    1.0 / (4.0 * slope)
}

/// 2Γ_R + Ω_C²/(2W_D + Γ).
pub fn width_linear(omega_c: f64, gamma_r: f64, gamma: f64, w_d: f64) -> f64 {
    2.0 * gamma_r + omega_c * omega_c / (2.0 * w_d + gamma)
}

/// Coupling intensity Ω_C² = 2Γ_R(2W_D + Γ) at which the linear-regime
/// width doubles.
pub fn saturation_omega_c_sq(gamma_r: f64, gamma: f64, w_d: f64) -> f64 {
    2.0 * gamma_r * (2.0 * w_d + gamma)
}

pub fn peak_trans_closed(omega_c: f64, gamma_r: f64, gamma: f64, w_d: f64, t0: f64) -> f64 {
    let x = omega_c * omega_c / saturation_omega_c_sq(gamma_r, gamma, w_d);
    (t0.ln() / (1.0 + x)).exp()
}

pub fn delay_closed(omega_c: f64, gamma_r: f64, gamma: f64, w_d: f64, t0: f64) -> f64 {
    let oc2 = omega_c * omega_c;
    let denom = saturation_omega_c_sq(gamma_r, gamma, w_d) + oc2;
    -t0.ln() * (2.0 * w_d + gamma) * oc2 / (denom * denom)
}

/// Maximum of `delay_closed` over Ω_C, −ln(T₀)/(8Γ_R).
pub fn delay_closed_peak(gamma_r: f64, t0: f64) -> f64 {
    -t0.ln() / (8.0 * gamma_r)
}

/// Ω_inhom = 2·sqrt(2Γ_R/Γ)·W_D.
pub fn omega_inhom(gamma_r: f64, gamma: f64, w_d: f64) -> f64 {
    2.0 * (2.0 * gamma_r / gamma).sqrt() * w_d
}

pub fn below_inhomogeneous(omega_c: f64, gamma_r: f64, gamma: f64, w_d: f64) -> bool {
    omega_c < omega_inhom(gamma_r, gamma, w_d)
}
