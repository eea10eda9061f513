//! Calibrated transmission, EIT width, peak transmission and group delay.

use rayon::prelude::*;

use crate::doppler::{Lineshape, LineshapeMethod};
use crate::error::{Error, Result};
use crate::fit::{fit_dip, Guess};
use crate::limits::LimitParams;
use crate::model::{FieldConfig, MediumParams, RateSet};
use crate::steady::{solve_point, SolveReport, SteadyState};

/// Medium, rates and a shared lineshape cache.
#[derive(Debug)]
pub struct Model {
    pub medium: MediumParams,
    pub rates: RateSet,
    lineshape: Lineshape,
}

impl Model {
    pub fn new(medium: MediumParams, rates: RateSet, method: LineshapeMethod) -> Result<Self> {
        medium.validate()?;
        rates.validate()?;
        let ku = medium.doppler_widths()?.ku;
        let lineshape = Lineshape::new(rates.optical_linewidth(), ku, method)?;
        Ok(Self {
            medium,
            rates,
            lineshape,
        })
    }

    pub fn helium() -> Self {
        Self::new(
            MediumParams::helium_metastable(),
            RateSet::helium_defaults(),
            LineshapeMethod::Quadrature,
        )
        .expect("helium defaults are valid")
    }

    pub fn lineshape(&self) -> &Lineshape {
        &self.lineshape
    }

    pub fn solve(&self, fields: &FieldConfig) -> Result<(SteadyState, SolveReport)> {
        solve_point(fields, &self.rates, &self.lineshape)
    }

    /// Closed-form reference parameters, with Γ_R including the coherence
    /// loss to collisions.
    pub fn limits(&self, omega_c: f64, t0: f64) -> Result<LimitParams> {
        let mut p = LimitParams::from_model(&self.medium, &self.rates, omega_c, t0)?;
        p.gamma_r = self.rates.effective_raman_decay();
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub norm_a: f64,
    pub t0: f64,
}

/// A = −ln(T₀)/Im R_ab evaluated without coupling, at Δ = δ_R = 0 and the
/// configured probe.
pub fn calibrate(model: &Model, fields: &FieldConfig, t0: f64) -> Result<Calibration> {
    if !(t0 > 0.0 && t0 <= 1.0) {
        return Err(Error::invalid("t0", format!("must lie in (0, 1], got {t0}")));
    }
    let reference = FieldConfig::new(fields.omega_p, 0.0, 0.0, 0.0)?;
    let (state, _) = model.solve(&reference)?;
    let im = state.r_ab.im;
    if t0 == 1.0 {
        return Ok(Calibration { norm_a: 0.0, t0 });
    }
    if !(im > 0.0) {
        return Err(Error::NumericFailure {
            context: "calibration: no resonant absorption without coupling".into(),
            achieved: im,
        });
    }
    Ok(Calibration {
        norm_a: -t0.ln() / im,
        t0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub delta_r: Vec<f64>,
    pub im_chi: Vec<f64>,
    pub re_chi: Vec<f64>,
    pub transmission: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.delta_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_r.is_empty()
    }
}

fn check_grid(delta_r: &[f64]) -> Result<()> {
    if delta_r.len() < 3 {
        return Err(Error::invalid("delta_r", "need at least three detunings"));
    }
    if !delta_r.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("delta_r", "detunings must be strictly increasing"));
    }
    Ok(())
}

pub fn transmission_spectrum(model: &Model, fields: &FieldConfig, calib: &Calibration, delta_r: &[f64]) -> Result<Spectrum> {
    check_grid(delta_r)?;
    let points: Vec<(f64, f64)> = delta_r
        .par_iter()
        .map(|&d| {
            model
                .solve(&fields.with_delta_r(d))
                .map(|(s, _)| (calib.norm_a * s.r_ab.im, calib.norm_a * s.r_ab.re))
                .map_err(|e| e.at_detuning(d))
        })
        .collect::<Result<_>>()?;
    let im_chi: Vec<f64> = points.iter().map(|p| p.0).collect();
    Ok(Spectrum {
        delta_r: delta_r.to_vec(),
        transmission: im_chi.iter().map(|x| (-x).exp()).collect(),
        re_chi: points.iter().map(|p| p.1).collect(),
        im_chi,
    })
}

/// Symmetric detuning grid of `points` samples over ±`span_factor` times
/// the linear-regime width prediction.
pub fn width_grid(model: &Model, fields: &FieldConfig, points: usize, span_factor: f64) -> Result<Vec<f64>> {
    if points < 3 || points % 2 == 0 {
        return Err(Error::invalid("points", "need an odd count of at least three"));
    }
    let predicted = model.limits(fields.omega_c, 1.0)?.width_linear();
    let half = span_factor * predicted;
    let mid = (points / 2) as f64;
    Ok((0..points).map(|i| (i as f64 - mid) / mid * half).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthEstimate {
    pub fwhm_fit: f64,
    pub fwhm_bisect: f64,
    /// RMS fit residual relative to the fitted dip depth.
    pub fit_residual: f64,
}

impl WidthEstimate {
    /// Fit and bisection disagree by more than 5%.
    pub fn flagged(&self) -> bool {
        (self.fwhm_fit - self.fwhm_bisect).abs() > 0.05 * self.fwhm_fit
    }
}

fn quadratic_through(x: [f64; 3], y: [f64; 3]) -> impl Fn(f64) -> f64 {
    move |t| {
        let mut sum = 0.0;
        for i in 0..3 {
            let mut term = y[i];
            for j in 0..3 {
                if i != j {
                    term *= (t - x[j]) / (x[i] - x[j]);
                }
            }
            sum += term;
        }
        sum
    }
}

fn stencil(len: usize, i: usize) -> [usize; 3] {
    let start = i.saturating_sub(1).min(len - 3);
    [start, start + 1, start + 2]
}

/// Half-depth crossing between samples `lo` and `hi`, where the reciprocal
/// depth g crosses `target`. A quadratic in g is exact for a Lorentzian.
fn crossing(x: &[f64], g: &[f64], lo: usize, hi: usize, target: f64) -> f64 {
    let anchor = if hi > lo { lo } else { hi };
    let idx = stencil(x.len(), anchor);
    let ok = idx.iter().all(|&i| g[i].is_finite());
    let (mut a, mut b) = (x[lo], x[hi]);
    let linear = |t: f64| g[lo] + (g[hi] - g[lo]) * (t - x[lo]) / (x[hi] - x[lo]);
    let q = quadratic_through(idx.map(|i| x[i]), idx.map(|i| g[i]));
    let f = |t: f64| if ok { q(t) } else { linear(t) } - target;
    let (fa, fb) = (f(a), f(b));
    if fa.signum() == fb.signum() {
        let t = (target - g[lo]) / (g[hi] - g[lo]);
        return x[lo] + t * (x[hi] - x[lo]);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
        if (b - a).abs() <= 1e-15 * (x[hi] - x[lo]).abs() {
            break;
        }
    }
    0.5 * (a + b)
}

fn bisect_fwhm(x: &[f64], y: &[f64], background: f64, imin: usize) -> Option<f64> {
    let g: Vec<f64> = y
        .iter()
        .map(|v| {
            let d = background - v;
            if d > 0.0 {
                1.0 / d
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let idx = stencil(x.len(), imin);
    let vertex = if idx.iter().all(|&i| g[i].is_finite()) {
        let (x0, x1, x2) = (x[idx[0]], x[idx[1]], x[idx[2]]);
        let (g0, g1, g2) = (g[idx[0]], g[idx[1]], g[idx[2]]);
        let d01 = (g1 - g0) / (x1 - x0);
        let d12 = (g2 - g1) / (x2 - x1);
        let c2 = (d12 - d01) / (x2 - x0);
        if c2 > 0.0 {
            let c1 = d01 - c2 * (x0 + x1);
            let xv = (-c1 / (2.0 * c2)).clamp(x0, x2);
            quadratic_through([x0, x1, x2], [g0, g1, g2])(xv).min(g[imin])
        } else {
            g[imin]
        }
    } else {
        g[imin]
    };
    if !vertex.is_finite() {
        return None;
    }
    let target = 2.0 * vertex;
    let right = (imin + 1..x.len()).find(|&j| g[j] >= target)?;
    let left = (0..imin).rev().find(|&j| g[j] >= target)?;
    let xr = crossing(x, &g, right - 1, right, target);
    let xl = crossing(x, &g, left + 1, left, target);
    Some(xr - xl)
}

/// Width of the transparency dip in Im χ, from a Lorentzian fit and from
/// half-depth bisection.
pub fn eit_width(spectrum: &Spectrum) -> Result<WidthEstimate> {
    let x = &spectrum.delta_r;
    let y = &spectrum.im_chi;
    check_grid(x)?;
    let last = y.len() - 1;
    let imin = y
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::NoResonance)?;
    let edge = y[0].max(y[last]);
    if imin == 0 || imin == last || !(y[imin] < y[0].min(y[last])) {
        return Err(Error::NoResonance);
    }
    let rough = bisect_fwhm(x, y, edge, imin).unwrap_or((x[last] - x[0]) / 20.0);
    let guess = Guess {
        background: edge,
        depth: edge - y[imin],
        center: x[imin],
        half_width: 0.5 * rough,
    };
    match fit_dip(x, y, guess) {
        Ok(fit) => {
            let fwhm_bisect = bisect_fwhm(x, y, fit.background, imin).unwrap_or(rough);
            Ok(WidthEstimate {
                fwhm_fit: 2.0 * fit.half_width,
                fwhm_bisect,
                fit_residual: fit.relative_rms,
            })
        }
        Err(reason) => Err(Error::FitFailure {
            reason,
            fwhm_bisect: rough,
        }),
    }
}

/// T at two-photon resonance.
pub fn peak_transmission(model: &Model, fields: &FieldConfig, calib: &Calibration) -> Result<f64> {
    let (state, _) = model.solve(&fields.with_delta_r(0.0))?;
    Ok((-calib.norm_a * state.r_ab.im).exp())
}

fn re_r_ab(model: &Model, fields: &FieldConfig, delta_r: f64) -> Result<f64> {
    Ok(model.solve(&fields.with_delta_r(delta_r))?.0.r_ab.re)
}

/// Richardson-extrapolated central difference of `f` at zero.
pub(crate) fn richardson_derivative(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// (A/2)·dRe R_ab/dδ_R at δ_R = 0 with base step `h`.
pub fn group_delay_with_step(model: &Model, fields: &FieldConfig, calib: &Calibration, h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("h", "step must be positive"));
    }
    let slope = richardson_derivative(|d| re_r_ab(model, fields, d), h)?;
    Ok(0.5 * calib.norm_a * slope)
}

/// Default derivative step, min(Γ_EIT, 2Γ_R)/50 with Γ_EIT from the linear
/// width law.
pub fn default_delay_step(model: &Model, fields: &FieldConfig) -> Result<f64> {
    let predicted = model.limits(fields.omega_c, 1.0)?.width_linear();
    Ok(predicted.min(2.0 * model.rates.gamma_r) / 50.0)
}

/// Group delay τ_g = (A/2)·dRe R_ab/dδ_R at δ_R = 0, refined until two
/// successive step sizes agree.
pub fn group_delay(model: &Model, fields: &FieldConfig, calib: &Calibration) -> Result<f64> {
    let mut h = default_delay_step(model, fields)?;
    let mut previous = group_delay_with_step(model, fields, calib, h)?;
    let mut change = f64::INFINITY;
    for _ in 0..4 {
        h *= 0.5;
        let next = group_delay_with_step(model, fields, calib, h)?;
        change = (next - previous).abs();
        if change <= 1e-6 * next.abs() + 1e-15 {
            return Ok(next);
        }
        previous = next;
    }
    Err(Error::NumericFailure {
        context: "group delay under step refinement".into(),
        achieved: change,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub coupling_intensity_label: f64,
    pub omega_c: f64,
    /// FWHM from the Lorentzian fit, or from bisection when the fit fails.
    pub eit_fwhm: f64,
    pub fwhm_bisect: f64,
    pub fit_residual: f64,
    pub peak_t: f64,
    pub group_delay: f64,
    /// Fit failed, or fit and bisection disagree by more than 5%.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub omega_c: f64,
    pub row: Result<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub points: usize,
    pub span_factor: f64,
    pub intensity_coefficient: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            points: 401,
            span_factor: 10.0,
            intensity_coefficient: 1.0,
        }
    }
}

pub fn sweep_row(model: &Model, fields: &FieldConfig, calib: &Calibration, settings: &SweepSettings) -> Result<SweepRow> {
    let grid = width_grid(model, fields, settings.points, settings.span_factor)?;
    let spectrum = transmission_spectrum(model, fields, calib, &grid)?;
    let (width, flagged) = match eit_width(&spectrum) {
        Ok(w) => (w, w.flagged()),
        Err(Error::FitFailure { fwhm_bisect, .. }) => (
            WidthEstimate {
                fwhm_fit: fwhm_bisect,
                fwhm_bisect,
                fit_residual: f64::NAN,
            },
            true,
        ),
        Err(e) => return Err(e),
    };
    Ok(SweepRow {
        coupling_intensity_label: settings.intensity_coefficient * fields.omega_c * fields.omega_c,
        omega_c: fields.omega_c,
        eit_fwhm: width.fwhm_fit,
        fwhm_bisect: width.fwhm_bisect,
        fit_residual: width.fit_residual,
        peak_t: peak_transmission(model, fields, calib)?,
        group_delay: group_delay(model, fields, calib)?,
        flagged,
    })
}

/// Width, peak transmission and delay per coupling value, ordered by Ω_C.
/// Failing rows are kept with their error.
pub fn sweep_coupling(
    model: &Model,
    base: &FieldConfig,
    calib: &Calibration,
    omega_c: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<SweepOutcome>> {
    if omega_c.len() < 2 {
        return Err(Error::invalid("omega_c", "a sweep needs at least two coupling values"));
    }
    let mut values = omega_c.to_vec();
    values.sort_by(f64::total_cmp);
    Ok(values
        .par_iter()
        .map(|&oc| SweepOutcome {
            omega_c: oc,
            row: FieldConfig::new(base.omega_p, oc, base.delta_c, 0.0)
                .and_then(|fields| sweep_row(model, &fields, calib, settings)),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least-squares line through (x, y).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("x", "need at least two matching points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hz_to_rad;
    use approx::assert_relative_eq;

    fn synthetic(width: f64, center: f64) -> Spectrum {
        let x: Vec<f64> = (0..401).map(|i| (i as f64 - 200.0) / 200.0 * 10.0 * width).collect();
        let h = 0.5 * width;
        let im_chi: Vec<f64> = x.iter().map(|d| 0.7 - 0.4 * h * h / ((d - center).powi(2) + h * h)).collect();
        Spectrum {
            transmission: im_chi.iter().map(|v| (-v).exp()).collect(),
            re_chi: vec![0.0; x.len()],
            delta_r: x,
            im_chi,
        }
    }

    #[test]
    fn synthetic_lorentzian_width() {
        let w = hz_to_rad(10e3);
        for center in [0.0, 0.137 * w] {
            let est = eit_width(&synthetic(w, center)).unwrap();
            assert_relative_eq!(est.fwhm_fit, w, max_relative = 1e-6);
            assert_relative_eq!(est.fwhm_bisect, w, max_relative = 1e-6);
            assert!(!est.flagged());
        }
    }

    #[test]
    fn monotone_spectrum_has_no_resonance() {
        let mut s = synthetic(1.0, 0.0);
        s.im_chi = s.delta_r.iter().map(|d| 1.0 + 1e-3 * d).collect();
        assert_eq!(eit_width(&s), Err(Error::NoResonance));
    }

    #[test]
    fn linear_injection_gives_exact_delay() {
        let c = 3.7e-9;
        let slope = richardson_derivative(|d| Ok(c * d + 0.25), 100.0).unwrap();
        assert_relative_eq!(slope, c, max_relative = 1e-9);
        let cubic = richardson_derivative(|d| Ok(c * d + 1e-3 * d * d + 1e-7 * d * d * d), 10.0).unwrap();
        assert_relative_eq!(cubic, c + 0.0, max_relative = 1e-9);
    }

    #[test]
    fn calibration_fixed_points() {
        let model = Model::helium();
        let fields = FieldConfig::helium_nominal();
        assert_eq!(calibrate(&model, &fields, 1.0).unwrap().norm_a, 0.0);
        assert!(calibrate(&model, &fields, 0.0).is_err());
        assert!(calibrate(&model, &fields, 1.2).is_err());
        let weak = FieldConfig::new(1e3, 0.0, 0.0, 0.0).unwrap();
        let calib = calibrate(&model, &weak, 0.46).unwrap();
        let im = model.solve(&weak).unwrap().0.r_ab.im;
        assert_relative_eq!(calib.norm_a * im, -(0.46f64.ln()), max_relative = 1e-14);
        assert_relative_eq!(peak_transmission(&model, &weak, &calib).unwrap(), 0.46, max_relative = 1e-12);
    }

    #[test]
    fn line_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, 2.5, max_relative = 1e-14);
        assert_relative_eq!(fit.intercept, -1.0, max_relative = 1e-14);
        assert_relative_eq!(fit.r_squared, 1.0);
    }
}
