//! Levenberg-Marquardt fit of an inverted Lorentzian on a flat background,
//! y = b − a·h²/((x − c)² + h²) with h the half width.

use nalgebra::{Matrix4, Vector4};

const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DipFit {
    pub background: f64,
    pub depth: f64,
    pub center: f64,
    pub half_width: f64,
    /// RMS residual relative to the fitted depth.
    pub relative_rms: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Guess {
    pub background: f64,
    pub depth: f64,
    pub center: f64,
    pub half_width: f64,
}

fn model(p: &Vector4<f64>, t: f64) -> (f64, Vector4<f64>) {
    let (b, a, c, h) = (p[0], p[1], p[2], p[3]);
    let dx = t - c;
    let d = dx * dx + h * h;
    let l = h * h / d;
    let grad = Vector4::new(1.0, -l, -a * h * h * 2.0 * dx / (d * d), -a * 2.0 * h * dx * dx / (d * d));
    (b - a * l, grad)
}

fn cost(p: &Vector4<f64>, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(&t, &y)| (y - model(p, t).0).powi(2)).sum()
}

/// Fits in coordinates scaled by the guess so that all parameters are O(1).
pub(crate) fn fit_dip(x: &[f64], y: &[f64], guess: Guess) -> Result<DipFit, String> {
    if x.len() != y.len() || x.len() < 5 {
        return Err("need at least five points".into());
    }
    if !(guess.half_width > 0.0) || !(guess.depth > 0.0) {
        return Err("degenerate initial guess".into());
    }
    let (x0, xs) = (guess.center, guess.half_width);
    let (y0, ys) = (guess.background, guess.depth);
    let tx: Vec<f64> = x.iter().map(|v| (v - x0) / xs).collect();
    let ty: Vec<f64> = y.iter().map(|v| (v - y0) / ys).collect();

    let mut p = Vector4::new(0.0, 1.0, 0.0, 1.0);
    let mut current = cost(&p, &tx, &ty);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&t, &yv) in tx.iter().zip(&ty) {
            let (f, g) = model(&p, t);
            jtj += g * g.transpose();
            jtr += g * (yv - f);
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_cost = cost(&trial, &tx, &ty);
            if trial_cost.is_finite() && trial_cost <= current {
                let small_step = step.norm() <= 1e-13 * (p.norm() + 1e-13);
                let small_gain = current - trial_cost <= 1e-15 * current.max(1e-300);
                p = trial;
                current = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if small_step || small_gain || current == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill step left at any damping: a minimum in floating point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(format!("no convergence after {MAX_ITERATIONS} iterations"));
    }
    if !(p[1] > 0.0) || p[3] == 0.0 || !p.iter().all(|v| v.is_finite()) {
        return Err("fit collapsed to a non-dip".into());
    }
    let depth = p[1] * ys;
    let relative_rms = (current / tx.len() as f64).sqrt() / p[1];
    Ok(DipFit {
        background: y0 + p[0] * ys,
        depth,
        center: x0 + p[2] * xs,
        half_width: (p[3] * xs).abs(),
        relative_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_lorentzian() {
        let (b, a, c, h) = (0.8, 0.3, 1.2e3, 3.1e4);
        let x: Vec<f64> = (0..401).map(|i| -4e5 + 2e3 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| b - a * h * h / ((t - c).powi(2) + h * h)).collect();
        let guess = Guess {
            background: 0.79,
            depth: 0.25,
            center: 0.0,
            half_width: 2e4,
        };
        let fit = fit_dip(&x, &y, guess).unwrap();
        assert!((fit.half_width / h - 1.0).abs() < 1e-9);
        assert!((fit.center - c).abs() < 1e-6 * h);
        assert!((fit.background - b).abs() < 1e-10);
        assert!(fit.relative_rms < 1e-10);
    }

    #[test]
    fn noisy_data_still_fits() {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        let h = 5.0;
        let x: Vec<f64> = (0..201).map(|i| -50.0 + 0.5 * i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|t| 2.0 - h * h / (t * t + h * h) + 1e-3 * (rng.random::<f64>() - 0.5))
            .collect();
        let guess = Guess {
            background: 2.0,
            depth: 1.0,
            center: 0.5,
            half_width: 4.0,
        };
        let fit = fit_dip(&x, &y, guess).unwrap();
        assert!((fit.half_width / h - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_guess() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let guess = Guess {
            background: 1.0,
            depth: 0.0,
            center: 2.0,
            half_width: 1.0,
        };
        assert!(fit_dip(&x, &x, guess).is_err());
    }
}
