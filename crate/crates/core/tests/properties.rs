use proptest::prelude::*;
use wsi_core::coefficients::{BodyGeometry, SimulationParams};
use wsi_core::cummins::solve_decay_nondispersive;
use wsi_core::nonlocal::{
    contraction_rate, forcing, signal, zero_forcing, zero_signal, CompatibilityMode, NonlocalSolver, QuadrantGrid,
};
use wsi_core::special::make_kernel_k0;
use wsi_core::transmission::{CoupledState, RunSettings, Side, TransmissionSolver};

fn standard_body(epsilon: f64, kappa: f64) -> (SimulationParams, BodyGeometry) {
    (SimulationParams::new(epsilon, kappa, 1.0, 1.0 / 6.0).unwrap(), BodyGeometry::flat(1.0, 1.0, 257).unwrap())
}

fn bump(x: f64) -> f64 {
    (-2.0 * (x - 3.0f64).powi(2)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn decay_runs_stay_mirror_symmetric(eps in 0.0f64..0.1, kappa in 0.2f64..0.5, delta0 in 0.1f64..0.6) {
        let (p, g) = standard_body(eps, kappa);
        let dx = 0.05;
        let solver = TransmissionSolver::new(p, g, dx, 241).unwrap();
        let state = CoupledState::return_to_equilibrium(p.ell, dx, 241, delta0).unwrap();
        let mut settings = RunSettings::new(0.25 * dx, 3.0);
        settings.energy = false;
        let out = solver.run(&state, &settings).unwrap();
        prop_assert!(out.terminal.is_none());
        prop_assert!(out.max_mirror_defect < 1e-12);
        prop_assert!(out.max_abs_mean_discharge < 1e-10);
        prop_assert!(out.max_transmission_defect < 1e-8);
        let ext = &out.final_state.as_ref().unwrap().exterior;
        for (a, b) in ext.zeta(Side::Plus).iter().zip(ext.zeta(Side::Minus)) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn radiated_energy_is_nondecreasing(eps in 0.0f64..0.1, delta0 in -0.3f64..0.4) {
        let (p, g) = standard_body(eps, 0.0);
        let traj = solve_decay_nondispersive(&p, &g, delta0, 15.0, 0.005).unwrap();
        let radiated = traj.radiated_energy().unwrap();
        prop_assert!(radiated.iter().all(|e| *e >= -1e-14));
        prop_assert!(radiated.windows(2).all(|w| w[1] >= w[0] - 1e-14));
    }
}

#[test]
fn homogeneous_solution_contracts_in_weighted_norm() {
    let kappa = 0.5;
    let a = 0.5;
    let dx = 0.01;
    let kernel = make_kernel_k0(kappa, dx, 20.5).unwrap();
    let rate = contraction_rate(&kernel, a, 200.0, 20000).unwrap();
    assert!(rate > 0.0);
    let grid = QuadrantGrid { dx, nx: 2001, dt: dx, t_end: 4.0, output_every: 50 };
    let solver = NonlocalSolver::new(kernel, grid).unwrap().with_weight(a);
    let init = signal(|x: f64| x * x * (-(x - 2.0) * (x - 2.0)).exp());
    let sol = solver.solve_right_caputo(&init, &zero_signal(), &zero_forcing(), CompatibilityMode::Strict { tolerance: 1e-12 }).unwrap();
    let norms = sol.field.weighted_norms();
    for (t, n) in sol.field.times.iter().zip(&norms) {
        assert!(*n <= (-rate * t).exp() * norms[0] + 1e-4, "t = {t}: {n} vs {}", (-rate * t).exp() * norms[0]);
    }
}

#[test]
fn left_problem_approaches_leftward_transport() {
    // u_t - u_x = g'(t)e^{-x} with u(t, 0) = g(t): following characteristics
    // back to the boundary, u(0, x) = g(x) - ∫_0^x g'(s) e^{-(x-s)} ds.
    let g = |t: f64| (-2.0 * (t - 3.0f64).powi(2)).exp();
    let dg = move |t: f64| -4.0 * (t - 3.0) * g(t);
    let exact = |x: f64| {
        let n = 2000;
        let h = x / n as f64;
        let integral: f64 = (0..=n)
            .map(|i| {
                let s = i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * dg(s) * (-(x - s)).exp()
            })
            .sum::<f64>()
            * h;
        g(x) - integral
    };
    let mut errors = Vec::new();
    for kappa in [0.2, 0.1, 0.05] {
        let dx = kappa / 8.0;
        let grid = QuadrantGrid { dx, nx: (6.0 / dx).round() as usize + 1, dt: dx, t_end: 9.0, output_every: 40 };
        let solver = NonlocalSolver::new(make_kernel_k0(kappa, dx, 6.5).unwrap(), grid).unwrap();
        let sol = solver.solve_left_bvp(&signal(g), &forcing(move |t, x| dg(t) * (-x).exp()), 1e-6).unwrap();
        let err = (0..=60)
            .map(|k| {
                let x = 0.1 * k as f64;
                let j = (x / dx).round() as usize;
                (sol.recovered_initial[j] - exact(x)).abs()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 0.1, "{errors:?}");
}

#[test]
fn compatible_solutions_have_bounded_time_curvature() {
    let kappa = 0.5;
    let c = bump(0.0);
    let mut curvature = Vec::new();
    for dx in [0.02, 0.01, 0.005] {
        let grid = QuadrantGrid { dx, nx: (8.0 / dx).round() as usize + 1, dt: dx, t_end: 3.0, output_every: 1 };
        let solver = NonlocalSolver::new(make_kernel_k0(kappa, dx, 8.5).unwrap(), grid).unwrap();
        let sol = solver
            .solve_right_caputo(&signal(bump), &signal(move |_| c), &zero_forcing(), CompatibilityMode::Strict { tolerance: 1e-10 })
            .unwrap();
        let mut worst = 0.0f64;
        for j in [1, (0.5 / dx) as usize, (1.0 / dx) as usize] {
            let col = sol.field.column(j).unwrap();
            for w in col.values.windows(3) {
                worst = worst.max(((w[2] - 2.0 * w[1] + w[0]) / (dx * dx)).abs());
            }
        }
        curvature.push(worst);
    }
    assert!(curvature[2] < 1.5 * curvature[0], "{curvature:?}");
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let (p, g) = standard_body(0.05, 0.3);
    let solver = TransmissionSolver::new(p, g, 0.05, 241).unwrap();
    let state = CoupledState::return_to_equilibrium(p.ell, 0.05, 241, 0.5).unwrap();
    let settings = RunSettings::new(0.0125, 1.0);
    let a = solver.run(&state, &settings).unwrap();
    let b = solver.run(&state, &settings).unwrap();
    assert_eq!(a.final_state, b.final_state);
    let bits = |o: &wsi_core::transmission::RunOutput| -> Vec<u64> { o.rows.iter().map(|r| r.balance_defect.to_bits()).collect() };
    assert_eq!(bits(&a), bits(&b));
}
