use eit_core::doppler::{Lineshape, LineshapeMethod};
use eit_core::model::{FieldConfig, MediumParams, RateSet};
use eit_core::oracle::{
    build_grid, compare_ansatz, literal_kernel_residual, resonant_grid, solve_binned, AnsatzComparison, BinnedState,
    VelocityGrid,
};
use eit_core::steady::{solve_point, SteadyState};
use eit_core::Error;

fn run(fields: &FieldConfig, rates: &RateSet, n: usize) -> (SteadyState, BinnedState, VelocityGrid, AnsatzComparison) {
    let medium = MediumParams::helium_metastable();
    let ku = medium.doppler_widths().unwrap().ku;
    let ls = Lineshape::new(rates.optical_linewidth(), ku, LineshapeMethod::Quadrature).unwrap();
    let (ansatz, _) = solve_point(fields, rates, &ls).unwrap();
    let grid = resonant_grid(&medium, rates, fields, n, 5.0).unwrap();
    let binned = solve_binned(fields, rates, &grid).unwrap();
    let cmp = compare_ansatz(&binned, &ansatz, &grid).unwrap();
    (ansatz, binned, grid, cmp)
}

fn scaled_vcc(mult: f64, eta: f64) -> RateSet {
    let base = RateSet::helium_defaults();
    RateSet {
        gamma_0vcc: base.gamma_0vcc * mult,
        gamma_1vcc: base.gamma_1vcc * mult,
        eta,
        ..base
    }
}

#[test]
fn field_free_agreement() {
    let fields = FieldConfig::new(0.0, 0.0, 0.0, 0.0).unwrap();
    let (_, binned, grid, cmp) = run(&fields, &RateSet::helium_defaults(), 61);
    assert!(cmp.pop_err < 1e-10 && cmp.coh_err < 1e-10 && cmp.shape_err < 1e-10, "{cmp:?}");
    assert!((binned.trace(&grid) - 1.0).abs() < 1e-9);
}

#[test]
fn nominal_probe_coherence_matches_ansatz() {
    let fields = FieldConfig::helium_nominal();
    for eta in [0.0, 1e-4] {
        let (ansatz, binned, grid, cmp) = run(&fields, &scaled_vcc(1.0, eta), 201);
        let binned_im = binned.totals(&grid).r_ab.im;
        let rel = (binned_im / ansatz.r_ab.im - 1.0).abs();
        println!("eta = {eta}: ansatz {:.6e}, binned {:.6e}, rel {rel:.3e}, {cmp:?}", ansatz.r_ab.im, binned_im);
        assert!(rel < 0.05);
        assert!(cmp.shape_err < 0.05);
        assert!((binned.trace(&grid) - 1.0).abs() < 1e-9);
        assert!(binned.rho_aa.iter().chain(&binned.rho_bb).chain(&binned.rho_cc).all(|&r| r >= -1e-12));
    }
}

#[test]
fn faster_collisions_restore_the_ansatz() {
    let fields = FieldConfig::helium_nominal();
    let mut shape = Vec::new();
    let mut thermal = Vec::new();
    for mult in [1.0, 10.0, 100.0] {
        let (_, binned, grid, cmp) = run(&fields, &scaled_vcc(mult, 0.0), 201);
        shape.push(cmp.shape_err);
        thermal.push(binned.thermalization_distance(&grid).unwrap());
    }
    println!("shape_err {shape:?}, thermalization {thermal:?}");
    assert!(shape.windows(2).all(|w| w[1] < w[0]));
    assert!(thermal[2] < thermal[0]);
}

#[test]
fn no_collisions_burn_velocity_holes() {
    let fields = FieldConfig::helium_nominal().with_omega_c(5e7);
    let (_, _, _, nominal) = run(&fields, &scaled_vcc(1.0, 0.0), 201);
    let (_, binned, grid, frozen) = run(&fields, &scaled_vcc(0.0, 0.0), 201);
    println!("nominal {nominal:?}\nno VCC  {frozen:?}");
    assert!(frozen.shape_err >= 10.0 * nominal.shape_err);

    // The coupling empties |c⟩ only in the resonant velocity class.
    let center = binned.rho_cc.len() / 2;
    let resonant = binned.rho_cc[center] / grid.maxwell[center];
    let far = grid.nodes.iter().position(|&v| v > 1.5 * grid.speed).unwrap();
    let off_resonant = binned.rho_cc[far] / grid.maxwell[far];
    assert!(resonant < 0.2 * off_resonant, "{resonant} vs {off_resonant}");
}

#[test]
fn rank_one_form_equals_literal_kernel() {
    let fields = FieldConfig::helium_nominal().with_delta_r(2.0e4);
    let rates = RateSet::helium_defaults();
    let (_, binned, grid, _) = run(&fields, &rates, 101);
    let residual = literal_kernel_residual(&fields, &rates, &grid, &binned).unwrap();
    assert!(residual < 1e-9, "{residual:e}");
}

#[test]
fn lower_state_balance_holds_with_conjugate_coherence() {
    // Ground-state |c⟩ balance written with complex coherences, taking
    // ρ_ac as the conjugate of ρ_ca.
    let fields = FieldConfig::helium_nominal().with_delta_r(1.0e4);
    let rates = RateSet::helium_defaults();
    let (_, binned, grid, _) = run(&fields, &rates, 101);
    let gt = rates.gamma_t;
    let v0 = rates.gamma_0vcc;
    let total_cc = grid.integrate(&binned.rho_cc);
    let i = num_complex::Complex64::i();
    let mut worst: f64 = 0.0;
    for n in 0..grid.len() {
        let w = grid.maxwell[n];
        let rho_ca = binned.rho_ca[n];
        let rho_ac = rho_ca.conj();
        let rate = 0.5 * rates.gamma0 * binned.rho_aa[n] - gt * binned.rho_cc[n]
            + 0.5 * gt * (w - rates.beta * (binned.rho_bb[n] - binned.rho_cc[n]))
            - v0 * binned.rho_cc[n]
            + v0 * w * total_cc;
        let value = rate + i * 0.5 * fields.omega_c * (rho_ac - rho_ca);
        let scale = (gt + v0) * w.max(binned.rho_cc[n].abs()) + fields.omega_c * rho_ca.norm();
        worst = worst.max(value.norm() / scale.max(f64::MIN_POSITIVE));
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn grid_refinement_converges() {
    let fields = FieldConfig::helium_nominal();
    let rates = scaled_vcc(1.0, 0.0);
    let values: Vec<f64> = [51, 101, 201]
        .iter()
        .map(|&n| {
            let (_, binned, grid, _) = run(&fields, &rates, n);
            binned.totals(&grid).r_ab.im
        })
        .collect();
    let coarse = (values[1] - values[0]).abs();
    let fine = (values[2] - values[1]).abs();
    println!("Im R_ab by node count {values:?}");
    assert!(fine <= 0.5 * coarse || fine < 1e-9 * values[2].abs(), "{coarse:e} -> {fine:e}");
}

#[test]
fn mismatched_grid_is_rejected() {
    let medium = MediumParams::helium_metastable();
    let fields = FieldConfig::helium_nominal();
    let (ansatz, binned, _, _) = run(&fields, &RateSet::helium_defaults(), 61);
    let other = build_grid(&medium, 63, 5.0).unwrap();
    assert!(matches!(compare_ansatz(&binned, &ansatz, &other), Err(Error::GridMismatch(_))));
}
