//! Domain types shared by every solver: the vapor cell, the relaxation rates
//! and the two optical fields.
//!
//! Every rate, Rabi frequency and detuning is stored in rad/s. Quantities
//! quoted as "/2π" (Hz) are converted with [`hz_to_rad`] on the way in.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a helium-4 atom, kg.
pub const HELIUM4_MASS: f64 = 4.002_602 * ATOMIC_MASS_UNIT;

/// Default VCC rate for both populations and the Raman coherence, s⁻¹.
pub const DEFAULT_VCC_RATE: f64 = 1.0e7;

#[inline]
pub fn hz_to_rad(hz: f64) -> f64 {
    2.0 * PI * hz
}

#[inline]
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / (2.0 * PI)
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1], got {value}")))
    }
}

/// The atomic vapor cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Optical wavelength, m.
    pub wavelength: f64,
    /// Vapor temperature, K.
    pub temperature: f64,
    /// Mass of one atom, kg.
    pub atomic_mass: f64,
    /// Cell length, m. Only carried for reporting; the optical depth is set
    /// through the calibrated transmission.
    pub cell_length: f64,
}

impl MediumParams {
    pub fn new(wavelength: f64, temperature: f64, atomic_mass: f64, cell_length: f64) -> Result<Self> {
        let medium = Self {
            wavelength,
            temperature,
            atomic_mass,
            cell_length,
        };
        medium.validate()?;
        Ok(medium)
    }

    /// Metastable helium at 1083 nm in a 2.5 cm cell at room temperature.
    pub fn helium_metastable() -> Self {
        Self {
            wavelength: 1.083e-6,
            temperature: 300.0,
            atomic_mass: HELIUM4_MASS,
            cell_length: 0.025,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("wavelength", self.wavelength)?;
        check_positive("temperature", self.temperature)?;
        check_positive("atomic_mass", self.atomic_mass)?;
        check_positive("cell_length", self.cell_length)
    }

    /// Optical wavenumber k = 2π/λ, rad/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Most probable speed u = sqrt(2 k_B T / m).
    pub fn most_probable_speed(&self) -> Result<f64> {
        check_positive("temperature", self.temperature)?;
        check_positive("atomic_mass", self.atomic_mass)?;
        Ok((2.0 * BOLTZMANN * self.temperature / self.atomic_mass).sqrt())
    }

    pub fn doppler_widths(&self) -> Result<DopplerWidths> {
        self.validate()?;
        DopplerWidths::new(self.wavenumber(), self.most_probable_speed()?)
    }
}

/// Doppler widths of the optical line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerWidths {
    /// 1/e half-width k·u, rad/s.
    pub ku: f64,
    /// Half-width at half-maximum W_D = k·u·sqrt(ln 2), rad/s.
    pub hwhm: f64,
}

impl DopplerWidths {
    /// Widths for a wavenumber and a most probable speed. `speed = 0` is the
    /// cold limit and yields zero widths.
    pub fn new(wavenumber: f64, speed: f64) -> Result<Self> {
        check_positive("wavenumber", wavenumber)?;
        check_non_negative("speed", speed)?;
        let ku = wavenumber * speed;
        Ok(Self {
            ku,
            hwhm: ku * std::f64::consts::LN_2.sqrt(),
        })
    }
}

/// Relaxation and collision rates, all in s⁻¹ (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    /// Spontaneous decay of the excited state, Γ₀.
    pub gamma0: f64,
    /// Collisional dephasing of the optical coherences.
    pub gamma_coll: f64,
    /// Diffusive transit rate through the beam.
    pub gamma_t: f64,
    /// Raman (lower-level) coherence decay, transit included.
    pub gamma_r: f64,
    /// Strong-collision VCC rate for all populations.
    pub gamma_0vcc: f64,
    /// Strong-collision VCC rate for the Raman coherence.
    pub gamma_1vcc: f64,
    /// Coherence loss per VCC, η = 1 − α.
    pub eta: f64,
    /// Bias of the returning atoms toward |b⟩.
    pub beta: f64,
}

impl RateSet {
    /// Metastable helium at 1 Torr, beam diameter 1.5 cm.
    pub fn helium_defaults() -> Self {
        Self {
            gamma0: 1.0e7,
            gamma_coll: 1.33e8,
            gamma_t: hz_to_rad(410.0),
            gamma_r: hz_to_rad(4300.0),
            gamma_0vcc: DEFAULT_VCC_RATE,
            gamma_1vcc: DEFAULT_VCC_RATE,
            eta: 1.0e-4,
            beta: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("gamma0", self.gamma0)?;
        check_non_negative("gamma_coll", self.gamma_coll)?;
        check_non_negative("gamma_t", self.gamma_t)?;
        check_non_negative("gamma_r", self.gamma_r)?;
        check_non_negative("gamma_0vcc", self.gamma_0vcc)?;
        check_non_negative("gamma_1vcc", self.gamma_1vcc)?;
        check_unit_interval("eta", self.eta)?;
        check_unit_interval("beta", self.beta)?;
        if self.gamma_r < self.gamma_t {
            return Err(Error::invalid(
                "gamma_r",
                format!(
                    "Raman decay {} must include the transit rate {}",
                    self.gamma_r, self.gamma_t
                ),
            ));
        }
        Ok(())
    }

    /// Full optical coherence decay Γ = Γ₀ + Γ_coll + 2Γ_t, so that the
    /// optical coherences relax at Γ/2.
    pub fn optical_linewidth(&self) -> f64 {
        self.gamma0 + self.gamma_coll + 2.0 * self.gamma_t
    }

    /// Depolarization ratio α = 1 − η of the coherence VCC kernel.
    pub fn alpha(&self) -> f64 {
        1.0 - self.eta
    }

    /// Net Raman coherence decay of the thermalized system, Γ_R + η·Γ₁VCC.
    pub fn effective_raman_decay(&self) -> f64 {
        self.gamma_r + self.eta * self.gamma_1vcc
    }
}

/// Probe and coupling fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    /// Probe Rabi frequency Ω_P.
    pub omega_p: f64,
    /// Coupling Rabi frequency Ω_C.
    pub omega_c: f64,
    /// Coupling detuning Δ from the Doppler line center.
    pub delta_c: f64,
    /// Raman detuning δ_R; the probe detuning is Δ + δ_R.
    pub delta_r: f64,
}

impl FieldConfig {
    pub fn new(omega_p: f64, omega_c: f64, delta_c: f64, delta_r: f64) -> Result<Self> {
        let fields = Self {
            omega_p,
            omega_c,
            delta_c,
            delta_r,
        };
        fields.validate()?;
        Ok(fields)
    }

    /// Resonant fields at the nominal helium Rabi frequencies.
    pub fn helium_nominal() -> Self {
        Self {
            omega_p: 3.0e6,
            omega_c: 3.0e7,
            delta_c: 0.0,
            delta_r: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("omega_p", self.omega_p)?;
        check_non_negative("omega_c", self.omega_c)?;
        if !self.delta_c.is_finite() {
            return Err(Error::invalid("delta_c", "must be finite"));
        }
        if !self.delta_r.is_finite() {
            return Err(Error::invalid("delta_r", "must be finite"));
        }
        Ok(())
    }

    /// Probe detuning Δ_P = Δ + δ_R.
    pub fn probe_detuning(&self) -> f64 {
        self.delta_c + self.delta_r
    }

    pub fn with_delta_r(self, delta_r: f64) -> Self {
        Self { delta_r, ..self }
    }

    pub fn with_omega_c(self, omega_c: f64) -> Self {
        Self { omega_c, ..self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn helium_most_probable_speed_near_1100() {
        let u = MediumParams::helium_metastable().most_probable_speed().unwrap();
        assert!((u - 1100.0).abs() / 1100.0 < 0.03, "u = {u}");
    }

    #[test]
    fn speed_scales_as_sqrt_temperature_over_mass() {
        let base = MediumParams::helium_metastable();
        let u = base.most_probable_speed().unwrap();
        let hot = MediumParams {
            temperature: 4.0 * base.temperature,
            ..base
        };
        let heavy = MediumParams {
            atomic_mass: 4.0 * base.atomic_mass,
            ..base
        };
        assert_relative_eq!(hot.most_probable_speed().unwrap(), 2.0 * u, max_relative = 1e-14);
        assert_relative_eq!(heavy.most_probable_speed().unwrap(), 0.5 * u, max_relative = 1e-14);
    }

    #[test]
    fn non_positive_medium_is_rejected() {
        let base = MediumParams::helium_metastable();
        let cold = MediumParams {
            temperature: 0.0,
            ..base
        };
        assert!(matches!(
            cold.most_probable_speed(),
            Err(Error::InvalidParameter { name: "temperature", .. })
        ));
        assert!(MediumParams::new(-1.0, 300.0, HELIUM4_MASS, 0.02).is_err());
        assert!(MediumParams::new(1e-6, 300.0, 0.0, 0.02).is_err());
    }

    #[test]
    fn helium_doppler_hwhm_near_0_9_ghz() {
        let widths = MediumParams::helium_metastable().doppler_widths().unwrap();
        let hwhm_ghz = rad_to_hz(widths.hwhm) / 1e9;
        assert!((hwhm_ghz - 0.9).abs() / 0.9 < 0.10, "W_D/2π = {hwhm_ghz} GHz");
        assert_relative_eq!(widths.ku / widths.hwhm, 1.0 / std::f64::consts::LN_2.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn cold_limit_has_zero_widths() {
        let widths = DopplerWidths::new(5.8e6, 0.0).unwrap();
        assert_eq!(widths.ku, 0.0);
        assert_eq!(widths.hwhm, 0.0);
    }

    #[test]
    fn helium_optical_linewidth() {
        let rates = RateSet {
            gamma_t: 2.6e3,
            ..RateSet::helium_defaults()
        };
        let gamma = rates.optical_linewidth();
        assert_relative_eq!(gamma, 1.43e8, max_relative = 0.01);
        let mhz = rad_to_hz(gamma) / 1e6;
        assert!((mhz - 22.3).abs() / 22.3 < 0.03, "Γ/2π = {mhz} MHz");
    }

    #[test]
    fn zero_rates_give_zero_linewidth() {
        let rates = RateSet {
            gamma0: 0.0,
            gamma_coll: 0.0,
            gamma_t: 0.0,
            gamma_r: 0.0,
            gamma_0vcc: 0.0,
            gamma_1vcc: 0.0,
            eta: 0.0,
            beta: 0.0,
        };
        rates.validate().unwrap();
        assert_eq!(rates.optical_linewidth(), 0.0);
    }

    #[test]
    fn transit_enters_linewidth_twice() {
        let a = RateSet::helium_defaults();
        let b = RateSet {
            gamma_t: 2.0 * a.gamma_t,
            gamma_r: 10.0 * a.gamma_r,
            ..a
        };
        assert_relative_eq!(
            b.optical_linewidth() - a.optical_linewidth(),
            2.0 * a.gamma_t,
            max_relative = 1e-6
        );
    }

    #[test]
    fn rate_ranges_are_enforced() {
        let ok = RateSet::helium_defaults();
        ok.validate().unwrap();
        for bad in [
            RateSet { eta: 1.5, ..ok },
            RateSet { eta: -0.1, ..ok },
            RateSet { beta: 1.01, ..ok },
            RateSet { gamma0: -1.0, ..ok },
            RateSet { gamma_r: 0.5 * ok.gamma_t, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn negative_rabi_frequency_is_rejected() {
        assert!(FieldConfig::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(FieldConfig::new(1.0, -1.0, 0.0, 0.0).is_err());
        assert!(FieldConfig::new(1.0, 1.0, f64::NAN, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn hz_round_trip_is_exact(hz in -1e12f64..1e12) {
            let back = rad_to_hz(hz_to_rad(hz));
            prop_assert!((back - hz).abs() <= 1e-12 * hz.abs().max(1e-300));
        }

        #[test]
        fn linewidth_is_linear(
            g0 in 0.0f64..1e9, gc in 0.0f64..1e9, gt in 0.0f64..1e6,
            h0 in 0.0f64..1e9, hc in 0.0f64..1e9, ht in 0.0f64..1e6,
        ) {
            let base = RateSet::helium_defaults();
            let a = RateSet { gamma0: g0, gamma_coll: gc, gamma_t: gt, ..base };
            let b = RateSet { gamma0: h0, gamma_coll: hc, gamma_t: ht, ..base };
            let sum = RateSet { gamma0: g0 + h0, gamma_coll: gc + hc, gamma_t: gt + ht, ..base };
            let lhs = sum.optical_linewidth();
            let rhs = a.optical_linewidth() + b.optical_linewidth();
            prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.max(1.0));
        }
    }
}
