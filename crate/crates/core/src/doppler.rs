//! Doppler-averaged lineshapes and the Doppler-broadened pumping rates.
//!
//! For a Maxwellian of most probable speed `u` and an optical coherence
//! decaying at Γ/2, the absorptive and dispersive averages are
//!
//! ```text
//! V_X(Δ) = (Γ/2)/(√π u) ∫ exp(−v²/u²) / [(Γ/2)² + (Δ − kv)²] dv
//! V_Y(Δ) =     1/(√π u) ∫ (Δ − kv) exp(−v²/u²) / [(Γ/2)² + (Δ − kv)²] dv
//! ```
//!
//! Both carry units of time. The adaptive quadrature in [`vx_quadrature`] and
//! [`vy_quadrature`] is the reference; [`vx_closed_form`] is the
//! real-argument closed form, exact only at Δ = 0.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::FieldConfig;
use crate::quadrature::{integrate, Integral, Tolerance};

/// Truncation of the Gaussian in units of u; exp(−64) is far below f64
/// resolution of the retained mass.
const VELOCITY_SPAN: f64 = 8.0;
const REL_TOL: f64 = 1e-11;
const MAX_SEGMENTS: usize = 4000;
/// Entries kept per lineshape before the memo table is flushed.
const CACHE_LIMIT: usize = 1 << 18;

fn check_widths(gamma: f64, ku: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    if !(ku.is_finite() && ku > 0.0) {
        return Err(Error::invalid("ku", format!("must be > 0, got {ku}")));
    }
    Ok(())
}

/// Breakpoints on the dimensionless velocity axis x = v/u: the domain ends,
/// the Lorentzian resonance at x = q, and a geometric ladder q ± p·4ᵏ so
/// every segment sees at most a factor ~16 variation of the Lorentzian.
fn breakpoints(p: f64, q: f64) -> Vec<f64> {
    let mut points = vec![-VELOCITY_SPAN, VELOCITY_SPAN];
    if q.abs() < VELOCITY_SPAN {
        points.push(q);
    }
    let mut step = p;
    while step < 2.0 * VELOCITY_SPAN {
        for x in [q - step, q + step] {
            if x.abs() < VELOCITY_SPAN {
                points.push(x);
            }
        }
        step *= 4.0;
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

fn run(
    context: &str,
    f: impl Fn(f64) -> f64,
    points: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    integrate(f, points, tol, MAX_SEGMENTS).map_err(|best| Error::NumericFailure {
        context: context.to_string(),
        achieved: if best.value != 0.0 {
            best.abs_error / best.value.abs()
        } else {
            best.abs_error
        },
    })
}

/// Absorptive Doppler average V_X(Δ) by adaptive quadrature, seconds.
pub fn vx_quadrature(delta: f64, gamma: f64, ku: f64) -> Result<f64> {
    check_widths(gamma, ku)?;
    let p = gamma / (2.0 * ku);
    let q = delta / ku;
    let integrand = |x: f64| {
        let d = q - x;
        (-x * x).exp() / (p * p + d * d)
    };
    let integral = run("V_X quadrature", integrand, &breakpoints(p, q), Tolerance::relative(REL_TOL))?;
    Ok(p / (PI.sqrt() * ku) * integral.value)
}

/// Dispersive Doppler average V_Y(Δ) by adaptive quadrature, seconds.
pub fn vy_quadrature(delta: f64, gamma: f64, ku: f64) -> Result<f64> {
    check_widths(gamma, ku)?;
    let p = gamma / (2.0 * ku);
    let q = delta / ku;
    let integrand = |x: f64| {
        let d = q - x;
        d * (-x * x).exp() / (p * p + d * d)
    };
    let tol = Tolerance::relative(REL_TOL).with_magnitude(1e-2 * REL_TOL);
    let integral = run("V_Y quadrature", integrand, &breakpoints(p, q), tol)?;
    Ok(integral.value / (PI.sqrt() * ku))
}

/// Scaled complementary error function exp(x²)·erfc(x) for x ≥ 0.
///
/// Above x = 5 the product is summed from its asymptotic series, since
/// exp(x²) alone overflows long before the product underflows.
pub fn erfcx(x: f64) -> f64 {
    if x <= 5.0 {
        return erfc(x) * (x * x).exp();
    }
    let inv_2x2 = 1.0 / (2.0 * x * x);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut n = 1.0;
    loop {
        let next = -term * (2.0 * n - 1.0) * inv_2x2;
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        sum += next;
        term = next;
        n += 1.0;
    }
    sum / (x * PI.sqrt())
}

/// Real-argument closed form (√π/ku)·[1 − erf(p)]·exp(p² − q²)·cos(2pq)
/// with p = Γ/(2ku) and q = Δ/ku.
pub fn vx_closed_form(delta: f64, gamma: f64, ku: f64) -> Result<f64> {
    check_widths(gamma, ku)?;
    let p = gamma / (2.0 * ku);
    let q = delta / ku;
    Ok(PI.sqrt() / ku * erfcx(p) * (-q * q).exp() * (2.0 * p * q).cos())
}

/// How V_X is evaluated. V_Y always comes from quadrature since no closed
/// form is available for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineshapeMethod {
    #[default]
    Quadrature,
    ClosedForm,
}

/// Pair of Doppler averages at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub vx: f64,
    pub vy: f64,
}

/// Memoizing evaluator of (V_X, V_Y) for a fixed (Γ, ku).
///
/// Spectra only ever request two arguments per point (Δ and Δ + δ_R), and
/// the first is shared across the whole sweep.
#[derive(Debug)]
pub struct Lineshape {
    gamma: f64,
    ku: f64,
    method: LineshapeMethod,
    cache: Mutex<HashMap<u64, Profile>>,
}

impl Lineshape {
    pub fn new(gamma: f64, ku: f64, method: LineshapeMethod) -> Result<Self> {
        check_widths(gamma, ku)?;
        Ok(Self {
            gamma,
            ku,
            method,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ku(&self) -> f64 {
        self.ku
    }

    pub fn method(&self) -> LineshapeMethod {
        self.method
    }

    pub fn at(&self, delta: f64) -> Result<Profile> {
        // -0.0 and 0.0 must share an entry.
        let key = (delta + 0.0).to_bits();
        if let Some(hit) = self.cache.lock().expect("lineshape cache poisoned").get(&key) {
            return Ok(*hit);
        }
        let vx = match self.method {
            LineshapeMethod::Quadrature => vx_quadrature(delta, self.gamma, self.ku)?,
            LineshapeMethod::ClosedForm => vx_closed_form(delta, self.gamma, self.ku)?,
        };
        let vy = vy_quadrature(delta, self.gamma, self.ku)?;
        let profile = Profile { vx, vy };
        let mut cache = self.cache.lock().expect("lineshape cache poisoned");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, profile);
        Ok(profile)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().expect("lineshape cache poisoned").len()
    }
}

/// The eight Doppler-broadened rates at one detuning argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerRates {
    pub gx1: f64,
    pub gx2: f64,
    pub gx3: f64,
    pub gx4: f64,
    pub gy1: f64,
    pub gy2: f64,
    pub gy3: f64,
    pub gy4: f64,
    pub evaluated_at: f64,
}

impl DopplerRates {
    pub fn from_profile(fields: &FieldConfig, profile: Profile, at: f64) -> Self {
        let (oc, op) = (fields.omega_c, fields.omega_p);
        let cross = 0.5 * oc * op;
        let sum = 0.5 * (oc * oc + op * op);
        let diff = 0.5 * (oc * oc - op * op);
        let coupling = 0.5 * oc * oc;
        let probe = 0.5 * op * op;
        Self {
            gx1: cross * profile.vx,
            gx2: sum * profile.vx,
            gx3: coupling * profile.vx,
            gx4: probe * profile.vx,
            gy1: cross * profile.vy,
            gy2: diff * profile.vy,
            gy3: coupling * profile.vy,
            gy4: probe * profile.vy,
            evaluated_at: at,
        }
    }
}

/// Doppler-broadened rates at detuning `at`, using quadrature lineshapes.
pub fn doppler_rates(fields: &FieldConfig, gamma: f64, ku: f64, at: f64) -> Result<DopplerRates> {
    fields.validate()?;
    let profile = Profile {
        vx: vx_quadrature(at, gamma, ku)?,
        vy: vy_quadrature(at, gamma, ku)?,
    };
    Ok(DopplerRates::from_profile(fields, profile, at))
}
