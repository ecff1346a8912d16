//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers (run with `--nocapture` to see them on
//! success; failures always show them).
//!
//! Expensive runs are shared between criteria through lazy fixtures.

use once_cell::sync::Lazy;

use bloch_ensemble::geometry::Vec3;
use bloch_ensemble::grid::{lyapunov, OmegaGrid, SpinProfile};
use bloch_ensemble::rotation_field::{build_ode, build_sweep};
use bloch_ensemble::scenarios::{equator_scenario, paper_scenario, paper_target_profile};
use bloch_ensemble::simulator::{run, RotationMethod, RunResult, SimConfig};
use bloch_ensemble::ControlClock;

const TAU: f64 = std::f64::consts::TAU;

fn golden_config() -> SimConfig {
    paper_scenario().expect("paper scenario").config
}

/// Golden run with the cross-check integrators enabled.
static GOLDEN: Lazy<RunResult> = Lazy::new(|| {
    let mut config = golden_config();
    config.lab_frame_check = true;
    run(&config).expect("golden run")
});

/// Golden run with the ODE-built rotation field.
static GOLDEN_ODE: Lazy<RunResult> = Lazy::new(|| {
    let mut config = golden_config();
    config.method = RotationMethod::Ode;
    run(&config).expect("golden ode run")
});

/// Dense run (h = T/10000) over two periods for the decay identity.
static DENSE: Lazy<RunResult> = Lazy::new(|| {
    let mut config = golden_config();
    config.steps_per_period = 10_000;
    config.periods = 2;
    config.record_stride = 1;
    run(&config).expect("dense run")
});

#[test]
fn criterion_01_golden_reproduction() {
    let result = &*GOLDEN;
    let l0 = result.summary.lyapunov_initial;
    let lf = result.summary.lyapunov_final;
    let ratio = lf / l0;
    println!(
        "criterion 1 (golden reproduction): {} — L(0) = {l0:.6}, L(20T) = {lf:.6}, \
         ratio = {ratio:.5}, wall = {:.2}s",
        if (l0 - 0.1929).abs() <= 0.05 && ratio <= 0.05 { "PASS" } else { "FAIL" },
        result.summary.wall_seconds,
    );
    assert!((l0 - 0.1929).abs() <= 0.05, "L(0) = {l0}");
    assert!(ratio <= 0.05, "ratio = {ratio}");
    assert!(ratio > 0.0);
}

#[test]
fn criterion_02_decay_identity() {
    // dL/dt = -(u1^2 + u2^2), checked by forward differences on the dense
    // run. Samples spread over the active-control window (0, 0.8T]; the
    // criterion floor excludes vanishing derivatives.
    let result = &*DENSE;
    let spp = 10_000usize;
    let h = TAU / spp as f64;
    let recs = &result.records;
    let mut worst = 0.0_f64;
    let mut used = 0;
    // the t = 0 slope explicitly, then spread over (0, 0.8T]
    for j in 0..20 {
        let idx = if j == 0 {
            0
        } else {
            ((j as f64 + 0.5) / 20.0 * 0.8 * spp as f64).floor() as usize
        };
        let fd = (recs[idx + 1].lyapunov - recs[idx].lyapunov) / h;
        let pred = -(recs[idx].u1.powi(2) + recs[idx].u2.powi(2));
        if pred.abs() > 1e-6 {
            worst = worst.max((fd - pred).abs() / pred.abs());
            used += 1;
        }
    }
    // supplementary absolute check over the whole two-period window
    let mut abs_defect = 0.0_f64;
    for i in 0..recs.len() - 1 {
        let fd = (recs[i + 1].lyapunov - recs[i].lyapunov) / h;
        let pred = -(recs[i].u1.powi(2) + recs[i].u2.powi(2));
        abs_defect = abs_defect.max((fd - pred).abs());
    }
    println!(
        "criterion 2 (decay identity): {} — worst relative error {worst:.5} over {used} samples, \
         max absolute defect {abs_defect:.2e} over 2T",
        if worst <= 0.02 && abs_defect <= 1e-4 { "PASS" } else { "FAIL" },
    );
    assert!(used >= 15, "too few usable samples: {used}");
    assert!(worst <= 0.02, "relative error {worst}");
    assert!(abs_defect <= 1e-4, "absolute defect {abs_defect}");
}

#[test]
fn criterion_03_monotonicity() {
    let result = &*GOLDEN;
    let h = golden_config().step_size();
    let slack_per_record = 10.0 * h * h;
    let mut cumulative = 0.0_f64;
    let mut max_increase = 0.0_f64;
    for pair in result.records.windows(2) {
        let d = pair[1].lyapunov - pair[0].lyapunov;
        if d > 0.0 {
            cumulative += d;
            max_increase = max_increase.max(d);
        }
    }
    println!(
        "criterion 3 (monotonicity): {} — cumulative increase {cumulative:.2e} (<= 1e-4), \
         max single increase {max_increase:.2e} (<= K h^2 = {slack_per_record:.2e})",
        if cumulative <= 1e-4 && max_increase <= slack_per_record { "PASS" } else { "FAIL" },
    );
    assert!(max_increase <= slack_per_record, "single increase {max_increase}");
    assert!(cumulative <= 1e-4, "cumulative increase {cumulative}");
}

#[test]
fn criterion_04_rotation_field_correctness() {
    let mf = golden_config().mf;
    let sweep = build_sweep(&mf).expect("sweep");
    let ode = build_ode(&mf).expect("ode");
    let sweep_report = sweep.validate(&mf).expect("sweep report");
    let ode_report = ode.validate(&mf).expect("ode report");
    let sweep_ratio = GOLDEN.summary.lyapunov_final / GOLDEN.summary.lyapunov_initial;
    let ode_ratio = GOLDEN_ODE.summary.lyapunov_final / GOLDEN_ODE.summary.lyapunov_initial;
    let pass = sweep_report.max_flatten_residual <= 1e-12
        && ode_report.max_flatten_residual <= 1e-6
        && sweep_report.max_ortho_defect <= 1e-10
        && sweep_report.max_det_defect <= 1e-10
        && ode_report.max_ortho_defect <= 1e-10
        && ode_report.max_det_defect <= 1e-10
        && sweep_ratio <= 0.05
        && ode_ratio <= 0.05;
    println!(
        "criterion 4 (rotation field): {} — sweep residual {:.2e}, ode residual {:.2e}, \
         defects {:.2e}/{:.2e}, closed-loop ratios {:.5}/{:.5}",
        if pass { "PASS" } else { "FAIL" },
        sweep_report.max_flatten_residual,
        ode_report.max_flatten_residual,
        sweep_report.max_ortho_defect.max(sweep_report.max_det_defect),
        ode_report.max_ortho_defect.max(ode_report.max_det_defect),
        sweep_ratio,
        ode_ratio,
    );
    assert!(sweep_report.max_flatten_residual <= 1e-12);
    assert!(ode_report.max_flatten_residual <= 1e-6);
    assert!(sweep_report.max_ortho_defect <= 1e-10 && sweep_report.max_det_defect <= 1e-10);
    assert!(ode_report.max_ortho_defect <= 1e-10 && ode_report.max_det_defect <= 1e-10);
    assert!(sweep_ratio <= 0.05 && ode_ratio <= 0.05);
}

#[test]
fn criterion_05_equilibrium() {
    let mut config = golden_config();
    config.m0 = config.mf.clone();
    config.record_stride = 1;
    let result = run(&config).expect("equilibrium run");
    let mut max_l = 0.0_f64;
    let mut max_u = 0.0_f64;
    for rec in &result.records {
        max_l = max_l.max(rec.lyapunov.abs());
        max_u = max_u.max(rec.u1.abs()).max(rec.u2.abs());
    }
    println!(
        "criterion 5 (equilibrium): {} — max L = {max_l:.2e} (<= 1e-9), max |u| = {max_u:.2e} (<= 1e-12)",
        if max_l <= 1e-9 && max_u <= 1e-12 { "PASS" } else { "FAIL" },
    );
    assert!(max_l <= 1e-9, "max L {max_l}");
    assert!(max_u <= 1e-12, "max |u| {max_u}");
}

#[test]
fn criterion_06_frame_impulse_equivalence() {
    let check = GOLDEN.summary.lab_check.expect("lab check enabled");
    // sigma vanishes exactly at even period boundaries
    let clock = ControlClock::new(TAU).unwrap();
    for k in 0..=10u64 {
        assert_eq!(clock.sigma_at_step(2 * k * 1000, 1000), 0.0, "step form, k = {k}");
    }
    for k in 1..=5u32 {
        assert_eq!(clock.sigma(2.0 * k as f64 * TAU), 0.0, "closed form, k = {k}");
    }
    // M = M1 on [2kT, (2k+1)T]: the lab reconstruction is bit-for-bit
    let m1 = bloch_ensemble::from_n_frame(
        &GOLDEN.final_n,
        &golden_config().rotation_field().unwrap(),
        0.0,
    )
    .unwrap();
    let m = bloch_ensemble::reconstruct_lab(&m1, 1.0);
    assert_eq!(m.values(), m1.values());
    println!(
        "criterion 6 (frame/impulse equivalence): {} — lab vs M1 Linf {:.2e} (<= 1e-10) over {} samples \
         [N-path vs M1-path gap, informational: {:.2e}]",
        if check.max_lab_vs_m1 <= 1e-10 { "PASS" } else { "FAIL" },
        check.max_lab_vs_m1,
        check.samples,
        check.max_m1_vs_n,
    );
    assert_eq!(check.samples, 11);
    assert!(check.max_lab_vs_m1 <= 1e-10, "lab vs m1 {}", check.max_lab_vs_m1);
}

#[test]
fn criterion_07_refinement_studies() {
    // grid study: N = 100 vs N = 200 at shared nodes
    let coarse = &*GOLDEN;
    let fine_grid = OmegaGrid::new(0.0, 1.0, 200).unwrap();
    let mut fine_config = golden_config();
    fine_config.grid = fine_grid.clone();
    fine_config.m0 = bloch_ensemble::scenarios::paper_initial_profile(&fine_grid);
    fine_config.mf = paper_target_profile(&fine_grid);
    let fine = run(&fine_config).expect("N=200 run");
    let mut grid_delta = 0.0_f64;
    for i in 0..=100 {
        let d = (coarse.final_lab.values()[i] - fine.final_lab.values()[2 * i]).norm();
        grid_delta = grid_delta.max(d);
    }
    // step study: h vs h/2
    let mut half_config = golden_config();
    half_config.steps_per_period = 2000;
    let half = run(&half_config).expect("h/2 run");
    let step_delta = coarse
        .final_lab
        .linf_distance(&half.final_lab)
        .expect("same grid");
    println!(
        "criterion 7 (refinement): {} — grid delta {grid_delta:.2e} (<= 5e-2), \
         step delta {step_delta:.2e} (<= 1e-2), L(20T) deltas {:.2e}/{:.2e}",
        if grid_delta <= 5e-2 && step_delta <= 1e-2 { "PASS" } else { "FAIL" },
        (fine.summary.lyapunov_final - coarse.summary.lyapunov_final).abs(),
        (half.summary.lyapunov_final - coarse.summary.lyapunov_final).abs(),
    );
    assert!(grid_delta <= 5e-2, "grid delta {grid_delta}");
    assert!(step_delta <= 1e-2, "step delta {step_delta}");
}

#[test]
fn criterion_08_equator_counterexample() {
    let config = equator_scenario().expect("equator scenario").config;
    let result = run(&config).expect("equator run");
    let mut max_u = 0.0_f64;
    let mut l_min = f64::INFINITY;
    let mut l_max = f64::NEG_INFINITY;
    for rec in &result.records {
        max_u = max_u.max(rec.u1.abs()).max(rec.u2.abs());
        l_min = l_min.min(rec.lyapunov);
        l_max = l_max.max(rec.lyapunov);
    }
    let drift = l_max - l_min;
    let linfs: Vec<f64> = result
        .records
        .iter()
        .filter_map(|r| r.linf_to_target)
        .collect();
    let non_decreasing = linfs.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    println!(
        "criterion 8 (equator counterexample): {} — max |u| = {max_u:.2e} (<= 1e-12), \
         L drift = {drift:.2e} (<= 1e-9), linf {:.6} -> {:.6} non-decreasing: {non_decreasing}",
        if max_u <= 1e-12 && drift <= 1e-9 && non_decreasing { "PASS" } else { "FAIL" },
        linfs.first().unwrap(),
        linfs.last().unwrap(),
    );
    assert!(max_u <= 1e-12, "max |u| {max_u}");
    assert!(drift <= 1e-9, "L drift {drift}");
    assert!(non_decreasing);
}

#[test]
fn criterion_09_convergence_surrogate() {
    let linfs: Vec<(f64, f64)> = GOLDEN
        .records
        .iter()
        .filter_map(|r| r.linf_to_target.map(|l| (r.t, l)))
        .collect();
    assert_eq!(linfs.len(), 11, "samples at t = 2kT for k = 0..=10");
    let k1 = linfs[1].1;
    let k10 = linfs[10].1;
    let factor = k1 / k10;
    println!(
        "criterion 9 (convergence surrogate): {} — |M(2T)-Mf| = {k1:.5}, |M(20T)-Mf| = {k10:.5}, \
         factor {factor:.2} (>= 3), final (<= 0.15)",
        if factor >= 3.0 && k10 <= 0.15 { "PASS" } else { "FAIL" },
    );
    assert!(factor >= 3.0, "factor {factor}");
    assert!(k10 <= 0.15, "k10 {k10}");
}

#[test]
fn criterion_10_quadrature_derivative_suites() {
    // exactness on linear data, on a non-unit span too
    let mut worst_int = 0.0_f64;
    let mut worst_der = 0.0_f64;
    for (lo, hi, n) in [(0.0, 1.0, 100usize), (-1.5, 2.5, 73)] {
        let g = OmegaGrid::new(lo, hi, n).unwrap();
        let samples: Vec<f64> = g.nodes().iter().map(|w| 0.7 - 1.3 * w).collect();
        let exact = 0.7 * g.span() - 1.3 * (hi * hi - lo * lo) / 2.0;
        worst_int = worst_int.max((g.integrate(&samples).unwrap() - exact).abs());
        let p = SpinProfile::from_fn(g.clone(), |w| Vec3::new(2.0 * w - 1.0, 0.0, 0.5 * w));
        let d = p.derivative().unwrap();
        for di in d.iter().take(g.n_nodes() - 1).skip(1) {
            worst_der = worst_der.max((*di - Vec3::new(2.0, 0.0, 0.5)).norm());
        }
    }
    // Lyapunov at the poles: L(-e3) = 0, L(+e3) = 2 (omega_hi - omega_lo)
    let g = OmegaGrid::new(-1.5, 2.5, 80).unwrap();
    let l_south = lyapunov(&SpinProfile::constant(g.clone(), -Vec3::E3)).unwrap();
    let l_north = lyapunov(&SpinProfile::constant(g.clone(), Vec3::E3)).unwrap();
    let north_err = (l_north - 2.0 * g.span()).abs();
    println!(
        "criterion 10 (quadrature/derivative units): {} — linear quadrature err {worst_int:.2e}, \
         linear derivative err {worst_der:.2e}, L(-e3) = {l_south:.2e}, |L(+e3) - 2 span| = {north_err:.2e}",
        if worst_int <= 1e-12 && worst_der <= 1e-12 && l_south.abs() <= 1e-12 && north_err <= 1e-12 {
            "PASS"
        } else {
            "FAIL"
        },
    );
    assert!(worst_int <= 1e-12);
    assert!(worst_der <= 1e-12);
    assert!(l_south.abs() <= 1e-12);
    assert!(north_err <= 1e-12);
}

/// Cross-implementation regression values, frozen from an independent
/// prototype of the same formulas. Wider bands than the criteria: the
/// 20000-step trajectories may diverge in the last digits.
#[test]
fn regression_against_independent_prototype() {
    let l0 = GOLDEN.summary.lyapunov_initial;
    assert!((l0 - 0.19090996805614022).abs() <= 1e-9, "L(0) = {l0:.17}");
    let lf = GOLDEN.summary.lyapunov_final;
    assert!((lf - 0.0013546142237190989).abs() <= 1e-6, "L(20T) = {lf:.17}");
    let linfs: Vec<f64> = GOLDEN
        .records
        .iter()
        .filter_map(|r| r.linf_to_target)
        .collect();
    assert!((linfs[1] - 0.137107796).abs() <= 1e-4, "linf(2T) = {}", linfs[1]);
    assert!((linfs[10] - 0.019722927746163424).abs() <= 1e-4, "linf(20T) = {}", linfs[10]);
    // record-sampled control extremes
    let u1_max = GOLDEN.records.iter().map(|r| r.u1).fold(f64::NEG_INFINITY, f64::max);
    assert!((u1_max - 0.38100514156886306).abs() <= 1e-6, "u1 max = {u1_max}");
    // Lyapunov is stable under grid refinement on the golden scenario
    let g200 = OmegaGrid::new(0.0, 1.0, 200).unwrap();
    let mf200 = paper_target_profile(&g200);
    let m0200 = bloch_ensemble::scenarios::paper_initial_profile(&g200);
    let r200 = build_sweep(&mf200).unwrap();
    let n0 = bloch_ensemble::to_n_frame(&m0200, &r200, 0.0).unwrap();
    let l0_200 = lyapunov(&n0).unwrap();
    assert!((l0_200 - 0.1909098820802306).abs() <= 1e-9, "L(0) at N=200 = {l0_200:.17}");
    assert!((l0_200 - l0).abs() <= 1e-3, "regrid gap {}", (l0_200 - l0).abs());
    // equator invariants have closed forms
    let eq = equator_scenario().unwrap().config;
    let r = eq.rotation_field().unwrap();
    let n0 = bloch_ensemble::to_n_frame(&eq.m0, &r, 0.0).unwrap();
    let l_eq = lyapunov(&n0).unwrap();
    assert!((l_eq - (1.0 - 0.5_f64.sqrt())).abs() <= 1e-12, "equator L(0) = {l_eq:.17}");
    let linf_eq = eq.m0.linf_distance(&eq.mf).unwrap();
    assert!((linf_eq - (2.0 - 2.0_f64.sqrt()).sqrt()).abs() <= 1e-12);
}
