//! Velocity-resolved steady state on a discrete grid with strong-collision
//! kernels. Slow, but free of the thermalized ansatz.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{FieldConfig, MediumParams, RateSet};
use crate::steady::SteadyState;

const UNKNOWNS_PER_NODE: usize = 9;
const RESIDUAL_LIMIT: f64 = 1e-8;
const MAX_NODES: usize = 401;

// Per-node unknown layout.
const AA: usize = 0;
const BB: usize = 1;
const CC: usize = 2;
const AB_RE: usize = 3;
const AB_IM: usize = 4;
const CA_RE: usize = 5;
const CA_IM: usize = 6;
const CB_RE: usize = 7;
const CB_IM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    /// Node velocities in m/s, ascending and symmetric about zero.
    pub nodes: Vec<f64>,
    /// Quadrature weights in m/s.
    pub weights: Vec<f64>,
    /// Half-width in units of the most probable speed.
    pub span: f64,
    pub speed: f64,
    pub wavenumber: f64,
    /// Maxwellian at the nodes, rescaled so that Σ w·W = 1 exactly.
    pub maxwell: Vec<f64>,
}

fn maxwellian(v: f64, u: f64) -> f64 {
    (-(v / u).powi(2)).exp() / (PI.sqrt() * u)
}

fn check_grid_request(n_nodes: usize, span: f64) -> Result<()> {
    if n_nodes < 31 || n_nodes % 2 == 0 {
        return Err(Error::invalid("n_nodes", format!("need an odd count of at least 31, got {n_nodes}")));
    }
    if n_nodes > MAX_NODES {
        return Err(Error::invalid("n_nodes", format!("dense oracle limited to {MAX_NODES} nodes")));
    }
    if !(span >= 4.0) || !span.is_finite() {
        return Err(Error::invalid("span", format!("must be at least 4, got {span}")));
    }
    Ok(())
}

impl VelocityGrid {
    fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>, span: f64, speed: f64, wavenumber: f64) -> Result<Self> {
        if speed <= 0.0 {
            return Err(Error::invalid("temperature", "velocity grid needs a nonzero thermal speed"));
        }
        let raw: Vec<f64> = nodes.iter().map(|&v| maxwellian(v, speed)).collect();
        let norm: f64 = raw.iter().zip(&weights).map(|(m, w)| m * w).sum();
        let maxwell = raw.iter().map(|m| m / norm).collect();
        Ok(Self {
            nodes,
            weights,
            span,
            speed,
            wavenumber,
            maxwell,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ w·W(v) with the analytic Maxwellian, before rescaling.
    pub fn raw_normalization(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&v, w)| w * maxwellian(v, self.speed))
            .sum()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    fn integrate_complex(&self, values: &[Complex64]) -> Complex64 {
        values.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }
}

/// Uniform grid over [−span·u, span·u] with trapezoid weights.
pub fn build_grid(medium: &MediumParams, n_nodes: usize, span: f64) -> Result<VelocityGrid> {
    check_grid_request(n_nodes, span)?;
    let u = medium.most_probable_speed()?;
    let half = span * u;
    let h = 2.0 * half / (n_nodes - 1) as f64;
    let mid = (n_nodes / 2) as f64;
    let nodes: Vec<f64> = (0..n_nodes).map(|i| (i as f64 - mid) * h).collect();
    let mut weights = vec![h; n_nodes];
    weights[0] *= 0.5;
    weights[n_nodes - 1] *= 0.5;
    VelocityGrid::from_nodes(nodes, weights, span, u, medium.wavenumber())
}

/// Node density mixing a uniform part with Lorentzian bumps at ±center.
struct GradedDensity {
    half: f64,
    center: f64,
    width: f64,
    core_fraction: f64,
}

impl GradedDensity {
    fn bump_mass(&self, v: f64, c: f64) -> f64 {
        let lo = ((-self.half - c) / self.width).atan();
        let hi = ((self.half - c) / self.width).atan();
        (((v - c) / self.width).atan() - lo) / (hi - lo)
    }

    fn bump_density(&self, v: f64, c: f64) -> f64 {
        let lo = ((-self.half - c) / self.width).atan();
        let hi = ((self.half - c) / self.width).atan();
        let x = (v - c) / self.width;
        1.0 / (self.width * (1.0 + x * x) * (hi - lo))
    }

    fn cdf(&self, v: f64) -> f64 {
        let bumps = 0.5 * (self.bump_mass(v, self.center) + self.bump_mass(v, -self.center));
        self.core_fraction * bumps + (1.0 - self.core_fraction) * (v + self.half) / (2.0 * self.half)
    }

    fn density(&self, v: f64) -> f64 {
        let bumps = 0.5 * (self.bump_density(v, self.center) + self.bump_density(v, -self.center));
        self.core_fraction * bumps + (1.0 - self.core_fraction) / (2.0 * self.half)
    }

    fn invert(&self, s: f64) -> f64 {
        let (mut lo, mut hi) = (-self.half, self.half);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * self.half {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Grid clustered around the resonant velocities ±`center` (m/s) with core
/// width `core_width` (m/s). Nodes are equally spaced in the cumulative node
/// density and weighted by its exact Jacobian.
pub fn build_graded_grid(
    medium: &MediumParams,
    n_nodes: usize,
    span: f64,
    center: f64,
    core_width: f64,
    core_fraction: f64,
) -> Result<VelocityGrid> {
    check_grid_request(n_nodes, span)?;
    if !(core_width > 0.0) || !core_width.is_finite() {
        return Err(Error::invalid("core_width", "must be positive"));
    }
    if !(0.0..1.0).contains(&core_fraction) {
        return Err(Error::invalid("core_fraction", "must lie in [0, 1)"));
    }
    let u = medium.most_probable_speed()?;
    let density = GradedDensity {
        half: span * u,
        center: center.abs().min(span * u),
        width: core_width,
        core_fraction,
    };
    let mid = n_nodes / 2;
    let ds = 1.0 / (n_nodes - 1) as f64;
    let mut nodes = vec![0.0; n_nodes];
    for i in mid + 1..n_nodes {
        let v = if i == n_nodes - 1 {
            density.half
        } else {
            density.invert(i as f64 * ds)
        };
        nodes[i] = v;
        nodes[n_nodes - 1 - i] = -v;
    }
    let mut weights: Vec<f64> = nodes.iter().map(|&v| ds / density.density(v)).collect();
    weights[0] *= 0.5;
    weights[n_nodes - 1] *= 0.5;
    VelocityGrid::from_nodes(nodes, weights, span, u, medium.wavenumber())
}

/// Graded grid suited to the given fields: clustered at the coupling and
/// probe resonances with the homogeneous velocity width Γ/(2k).
pub fn resonant_grid(medium: &MediumParams, rates: &RateSet, fields: &FieldConfig, n_nodes: usize, span: f64) -> Result<VelocityGrid> {
    let k = medium.wavenumber();
    let center = (fields.delta_c + 0.5 * fields.delta_r) / k;
    let width = 0.5 * rates.optical_linewidth() / k;
    build_graded_grid(medium, n_nodes, span, center, width, 0.6)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedState {
    pub nodes: Vec<f64>,
    pub rho_aa: Vec<f64>,
    pub rho_bb: Vec<f64>,
    pub rho_cc: Vec<f64>,
    pub rho_ab: Vec<Complex64>,
    pub rho_ca: Vec<Complex64>,
    pub rho_cb: Vec<Complex64>,
    pub residual: f64,
}

/// Velocity integrals of a binned solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinnedTotals {
    pub r_aa: f64,
    pub r_bb: f64,
    pub r_cc: f64,
    pub r_ab: Complex64,
    pub r_ca: Complex64,
    pub r_cb: Complex64,
}

impl BinnedState {
    pub fn totals(&self, grid: &VelocityGrid) -> BinnedTotals {
        BinnedTotals {
            r_aa: grid.integrate(&self.rho_aa),
            r_bb: grid.integrate(&self.rho_bb),
            r_cc: grid.integrate(&self.rho_cc),
            r_ab: grid.integrate_complex(&self.rho_ab),
            r_ca: grid.integrate_complex(&self.rho_ca),
            r_cb: grid.integrate_complex(&self.rho_cb),
        }
    }

    pub fn trace(&self, grid: &VelocityGrid) -> f64 {
        let t = self.totals(grid);
        t.r_aa + t.r_bb + t.r_cc
    }

    fn check_grid(&self, grid: &VelocityGrid) -> Result<()> {
        if self.nodes != grid.nodes {
            return Err(Error::GridMismatch(format!(
                "state has {} nodes, grid has {} (or node positions differ)",
                self.nodes.len(),
                grid.len()
            )));
        }
        Ok(())
    }

    /// Largest deviation of the normalized population profiles from the
    /// Maxwellian, relative to the Maxwellian peak.
    pub fn thermalization_distance(&self, grid: &VelocityGrid) -> Result<f64> {
        self.check_grid(grid)?;
        let peak = grid.maxwell.iter().cloned().fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for rho in [&self.rho_aa, &self.rho_bb, &self.rho_cc] {
            let total = grid.integrate(rho);
            if total.abs() < 1e-9 {
                continue;
            }
            for (r, w) in rho.iter().zip(&grid.maxwell) {
                worst = worst.max((r / total - w).abs() / peak);
            }
        }
        Ok(worst)
    }
}

/// Per-node coefficients of the velocity-resolved equations. The kernel
/// in-terms are left out and added by the caller.
struct NodeEquations {
    local: [[f64; UNKNOWNS_PER_NODE]; UNKNOWNS_PER_NODE],
    rhs: [f64; UNKNOWNS_PER_NODE],
}

fn node_equations(fields: &FieldConfig, rates: &RateSet, velocity: f64, wavenumber: f64, maxwell: f64) -> NodeEquations {
    let (op, oc) = (fields.omega_p, fields.omega_c);
    let (hp, hc) = (0.5 * op, 0.5 * oc);
    let half_gamma = 0.5 * rates.optical_linewidth();
    let g0 = rates.gamma0;
    let gt = rates.gamma_t;
    let bt = 0.5 * rates.beta * gt;
    let v0 = rates.gamma_0vcc;
    let raman = rates.gamma_r + rates.gamma_1vcc;
    let kv = wavenumber * velocity;
    let d1 = fields.delta_c + fields.delta_r - kv;
    let d2 = fields.delta_c - kv;

    let mut m = [[0.0; UNKNOWNS_PER_NODE]; UNKNOWNS_PER_NODE];
    let mut rhs = [0.0; UNKNOWNS_PER_NODE];

    m[AA][AA] = -(g0 + gt + v0);
    m[AA][AB_IM] = op;
    m[AA][CA_IM] = -oc;

    m[BB][AA] = 0.5 * g0;
    m[BB][BB] = -(gt + v0) + bt;
    m[BB][CC] = -bt;
    m[BB][AB_IM] = -op;
    rhs[BB] = -0.5 * gt * maxwell;

    m[CC][AA] = 0.5 * g0;
    m[CC][BB] = -bt;
    m[CC][CC] = -(gt + v0) + bt;
    m[CC][CA_IM] = oc;
    rhs[CC] = -0.5 * gt * maxwell;

    m[AB_RE][AB_RE] = -half_gamma;
    m[AB_RE][AB_IM] = -d1;
    m[AB_RE][CB_IM] = -hc;

    m[AB_IM][AB_RE] = d1;
    m[AB_IM][AB_IM] = -half_gamma;
    m[AB_IM][CB_RE] = hc;
    m[AB_IM][AA] = -hp;
    m[AB_IM][BB] = hp;

    m[CA_RE][CA_RE] = -half_gamma;
    m[CA_RE][CA_IM] = d2;
    m[CA_RE][CB_IM] = hp;

    m[CA_IM][CA_RE] = -d2;
    m[CA_IM][CA_IM] = -half_gamma;
    m[CA_IM][CB_RE] = -hp;
    m[CA_IM][AA] = hc;
    m[CA_IM][CC] = -hc;

    m[CB_RE][CB_RE] = -raman;
    m[CB_RE][CB_IM] = -fields.delta_r;
    m[CB_RE][CA_IM] = hp;
    m[CB_RE][AB_IM] = -hc;

    m[CB_IM][CB_RE] = fields.delta_r;
    m[CB_IM][CB_IM] = -raman;
    m[CB_IM][CA_RE] = -hp;
    m[CB_IM][AB_RE] = hc;

    NodeEquations { local: m, rhs }
}

/// Kernel in-term rates for each unknown: population kernels are
/// conservative, the Raman coherence kernel keeps a fraction α, and the
/// optical coherences have none.
fn kernel_rates(rates: &RateSet) -> [f64; UNKNOWNS_PER_NODE] {
    let pop = rates.gamma_0vcc;
    let coh = rates.alpha() * rates.gamma_1vcc;
    [pop, pop, pop, 0.0, 0.0, 0.0, 0.0, coh, coh]
}

fn assemble_dense(fields: &FieldConfig, rates: &RateSet, grid: &VelocityGrid) -> (DMatrix<f64>, DVector<f64>) {
    let n = grid.len();
    let size = UNKNOWNS_PER_NODE * n;
    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut b = DVector::<f64>::zeros(size);
    let kernel = kernel_rates(rates);
    for i in 0..n {
        let eq = node_equations(fields, rates, grid.nodes[i], grid.wavenumber, grid.maxwell[i]);
        let base = UNKNOWNS_PER_NODE * i;
        for r in 0..UNKNOWNS_PER_NODE {
            for c in 0..UNKNOWNS_PER_NODE {
                a[(base + r, base + c)] = eq.local[r][c];
            }
            b[base + r] = eq.rhs[r];
        }
        for (k, &rate) in kernel.iter().enumerate() {
            if rate == 0.0 {
                continue;
            }
            let scale = rate * grid.maxwell[i];
            for j in 0..n {
                a[(base + k, UNKNOWNS_PER_NODE * j + k)] += scale * grid.weights[j];
            }
        }
    }
    (a, b)
}

/// Solves the velocity-resolved steady state with a dense LU.
pub fn solve_binned(fields: &FieldConfig, rates: &RateSet, grid: &VelocityGrid) -> Result<BinnedState> {
    fields.validate()?;
    rates.validate()?;
    if grid.len() < 3 || grid.weights.len() != grid.len() {
        return Err(Error::GridMismatch("grid nodes and weights disagree".into()));
    }
    let (mut a, mut b) = assemble_dense(fields, rates, grid);
    for r in 0..a.nrows() {
        let scale = a.row(r).amax();
        if scale == 0.0 {
            return Err(Error::Degenerate(format!("velocity-resolved equation {r} has no coefficients")));
        }
        a.row_mut(r).scale_mut(1.0 / scale);
        b[r] /= scale;
    }
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("velocity-resolved system is singular".into()))?;
    // One step of iterative refinement.
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let residual = (&b - &a * &x).amax();
    if !residual.is_finite() || residual > RESIDUAL_LIMIT {
        return Err(Error::NumericFailure {
            context: "velocity-resolved solve".into(),
            achieved: residual,
        });
    }

    let n = grid.len();
    let pick = |k: usize| (0..n).map(|i| x[UNKNOWNS_PER_NODE * i + k]).collect::<Vec<_>>();
    let pair = |re: usize, im: usize| {
        (0..n)
            .map(|i| Complex64::new(x[UNKNOWNS_PER_NODE * i + re], x[UNKNOWNS_PER_NODE * i + im]))
            .collect::<Vec<_>>()
    };
    Ok(BinnedState {
        nodes: grid.nodes.clone(),
        rho_aa: pick(AA),
        rho_bb: pick(BB),
        rho_cc: pick(CC),
        rho_ab: pair(AB_RE, AB_IM),
        rho_ca: pair(CA_RE, CA_IM),
        rho_cb: pair(CB_RE, CB_IM),
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsatzComparison {
    pub pop_err: f64,
    pub coh_err: f64,
    pub shape_err: f64,
}

pub fn compare_ansatz(binned: &BinnedState, ansatz: &SteadyState, grid: &VelocityGrid) -> Result<AnsatzComparison> {
    binned.check_grid(grid)?;
    let totals = binned.totals(grid);
    let pops = [
        (&binned.rho_aa, totals.r_aa, ansatz.r_aa),
        (&binned.rho_bb, totals.r_bb, ansatz.r_bb),
        (&binned.rho_cc, totals.r_cc, ansatz.r_cc),
    ];
    let mut pop_err: f64 = 0.0;
    let mut shape_err: f64 = 0.0;
    for (rho, total, r) in pops {
        pop_err = pop_err.max((total - r).abs());
        let deviation: Vec<f64> = rho.iter().zip(&grid.maxwell).map(|(p, w)| (p - w * r).abs()).collect();
        shape_err = shape_err.max(grid.integrate(&deviation));
    }
    let coh_err = (totals.r_cb - ansatz.r_cb()).norm();
    Ok(AnsatzComparison {
        pop_err,
        coh_err,
        shape_err,
    })
}

/// Strong-collision kernel on the grid: entry (i, j) is the rate density
/// for a jump from node j into node i.
pub fn strong_collision_kernel(grid: &VelocityGrid, rate: f64) -> DMatrix<f64> {
    let n = grid.len();
    DMatrix::from_fn(n, n, |i, _| rate * grid.maxwell[i])
}

/// Largest violation of W(v)·K(v→v′) = W(v′)·K(v′→v) over node pairs,
/// relative to the largest term.
pub fn detailed_balance_defect(grid: &VelocityGrid, rate: f64) -> f64 {
    let k = strong_collision_kernel(grid, rate);
    let n = grid.len();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let forward = grid.maxwell[j] * k[(i, j)];
            let backward = grid.maxwell[i] * k[(j, i)];
            worst = worst.max((forward - backward).abs());
            scale = scale.max(forward.abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Residual of the velocity-resolved equations evaluated with the full
/// discretized kernel matrix rather than its rank-one form. Returned in the
/// units of each equation, maximized over nodes and normalized by the
/// largest local term.
pub fn literal_kernel_residual(fields: &FieldConfig, rates: &RateSet, grid: &VelocityGrid, state: &BinnedState) -> Result<f64> {
    state.check_grid(grid)?;
    let n = grid.len();
    let k_pop = strong_collision_kernel(grid, rates.gamma_0vcc);
    let k_coh = strong_collision_kernel(grid, rates.alpha() * rates.gamma_1vcc);
    let w = DVector::from_column_slice(&grid.weights);
    let weighted = |values: Vec<f64>, k: &DMatrix<f64>| k * DVector::from_iterator(n, values.iter().zip(w.iter()).map(|(x, w)| x * w));
    let in_aa = weighted(state.rho_aa.clone(), &k_pop);
    let in_bb = weighted(state.rho_bb.clone(), &k_pop);
    let in_cc = weighted(state.rho_cc.clone(), &k_pop);
    let in_r = weighted(state.rho_cb.iter().map(|c| c.re).collect(), &k_coh);
    let in_s = weighted(state.rho_cb.iter().map(|c| c.im).collect(), &k_coh);

    let mut worst: f64 = 0.0;
    for i in 0..n {
        let eq = node_equations(fields, rates, grid.nodes[i], grid.wavenumber, grid.maxwell[i]);
        let x = [
            state.rho_aa[i],
            state.rho_bb[i],
            state.rho_cc[i],
            state.rho_ab[i].re,
            state.rho_ab[i].im,
            state.rho_ca[i].re,
            state.rho_ca[i].im,
            state.rho_cb[i].re,
            state.rho_cb[i].im,
        ];
        let kernel_in = [in_aa[i], in_bb[i], in_cc[i], 0.0, 0.0, 0.0, 0.0, in_r[i], in_s[i]];
        for r in 0..UNKNOWNS_PER_NODE {
            let terms: Vec<f64> = (0..UNKNOWNS_PER_NODE).map(|c| eq.local[r][c] * x[c]).collect();
            let scale = terms
                .iter()
                .map(|t| t.abs())
                .chain([kernel_in[r].abs(), eq.rhs[r].abs()])
                .fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            let value = terms.iter().sum::<f64>() + kernel_in[r] - eq.rhs[r];
            worst = worst.max(value.abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParams {
        MediumParams::helium_metastable()
    }

    #[test]
    fn uniform_grid_normalization() {
        let g = build_grid(&medium(), 201, 5.0).unwrap();
        assert!((g.raw_normalization() - 1.0).abs() < 1e-10);
        assert!((g.integrate(&g.maxwell) - 1.0).abs() < 1e-14);
        for (a, b) in g.nodes.iter().zip(g.nodes.iter().rev()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn span_tail_bound() {
        let narrow = build_grid(&medium(), 161, 4.0).unwrap();
        let wide = build_grid(&medium(), 241, 6.0).unwrap();
        assert_eq!(narrow.nodes[1] - narrow.nodes[0], wide.nodes[1] - wide.nodes[0]);
        assert!((narrow.raw_normalization() - wide.raw_normalization()).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_grid_requests() {
        assert!(build_grid(&medium(), 30, 5.0).is_err());
        assert!(build_grid(&medium(), 32, 5.0).is_err());
        assert!(build_grid(&medium(), 201, 3.0).is_err());
    }

    #[test]
    fn graded_grid_is_symmetric_and_clustered() {
        let g = build_graded_grid(&medium(), 201, 5.0, 0.0, 12.0, 0.6).unwrap();
        for (a, b) in g.nodes.iter().zip(g.nodes.iter().rev()) {
            assert!((a + b).abs() < 1e-9 * g.speed);
        }
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        let center = g.nodes[101] - g.nodes[100];
        let edge = g.nodes[200] - g.nodes[199];
        assert!(center < 2.0, "central spacing {center}");
        assert!(edge > 20.0 * center);
        assert!((g.raw_normalization() - 1.0).abs() < 1e-6, "{}", g.raw_normalization());
    }

    #[test]
    fn graded_grid_reproduces_doppler_average() {
        let rates = RateSet::helium_defaults();
        let gamma = rates.optical_linewidth();
        let m = medium();
        let ku = m.doppler_widths().unwrap().ku;
        for delta in [0.0, 2.0 * PI * 0.4e9] {
            let fields = FieldConfig::new(0.0, 0.0, delta, 0.0).unwrap();
            let g = resonant_grid(&m, &rates, &fields, 201, 5.0).unwrap();
            let half = 0.5 * gamma;
            let values: Vec<f64> = g
                .nodes
                .iter()
                .zip(&g.maxwell)
                .map(|(v, w)| {
                    let d = delta - g.wavenumber * v;
                    w * half / (half * half + d * d)
                })
                .collect();
            let exact = crate::doppler::vx_quadrature(delta, gamma, ku).unwrap();
            let rel = (g.integrate(&values) / exact - 1.0).abs();
            assert!(rel < 1e-6, "delta = {delta:e}: rel {rel:e}");
        }
    }

    #[test]
    fn detailed_balance_holds_pairwise() {
        let g = build_grid(&medium(), 61, 5.0).unwrap();
        assert!(detailed_balance_defect(&g, 1e7) < 1e-12);
    }

    #[test]
    fn field_free_thermal_state() {
        let g = build_grid(&medium(), 61, 5.0).unwrap();
        let fields = FieldConfig::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let s = solve_binned(&fields, &RateSet::helium_defaults(), &g).unwrap();
        for i in 0..g.len() {
            assert!(s.rho_aa[i].abs() < 1e-14);
            assert!((s.rho_bb[i] - 0.5 * g.maxwell[i]).abs() < 1e-10 * g.maxwell[i].max(1e-30));
            assert!((s.rho_cc[i] - 0.5 * g.maxwell[i]).abs() < 1e-10 * g.maxwell[i].max(1e-30));
            assert!(s.rho_cb[i].norm() < 1e-14);
        }
        assert!((s.trace(&g) - 1.0).abs() < 1e-12);
    }
}
