//! End-to-end acceptance checks. Each criterion runs at desk scale and
//! reports one pass/fail line with the measured numbers.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coefficients::{BodyGeometry, SimulationParams};
use crate::cummins::{
    decay_diagnostics, envelope_at, find_poles, gamma, seed_grid, sigma0, solve_burgers_exterior,
    solve_decay_dispersive, solve_decay_nondispersive, LinearCummins, SIGMA_DOMAIN_LIMIT,
};
use crate::elliptic::{apply_r0, apply_r1, boundary_trace_r1, HalfLineGrid, Orientation, Placement};
use crate::error::Result;
use crate::nonlocal::{
    caputo_transform, forcing, laplace_transform_fn, signal, zero_forcing, zero_signal, BromwichLine,
    CompatibilityMode, NonlocalSolver, QuadrantGrid,
};
use crate::series::TimeSeries;
use crate::special::{gauss_legendre8, j0, j1, laplace_numeric, make_kernel_k0, make_kernel_k1};
use crate::transmission::{CoupledState, RunOutput, RunSettings, TransmissionSolver};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub time_limit: Option<f64>,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub const CRITERIA: [(u8, &str, Option<f64>); 13] = [
    (1, "special-function fidelity", Some(5.0)),
    (2, "elliptic operators", Some(10.0)),
    (3, "sigma0 and gamma", Some(1.0)),
    (4, "transmission invariants", Some(60.0)),
    (5, "energy balance", None),
    (6, "dispersive Cummins vs coupled solver", Some(120.0)),
    (7, "non-dispersive Cummins vs coupled solver", None),
    (8, "dispersion slows the decay", None),
    (9, "transfer-function poles", None),
    (10, "nonlocal solver vs Laplace oracle", Some(60.0)),
    (11, "boundary-jump formula", None),
    (12, "Riemann-Liouville emergent trace", None),
    (13, "transport limit", None),
];

pub fn run_criterion(id: u8) -> CriterionOutcome {
    let (_, title, time_limit) = CRITERIA.iter().copied().find(|c| c.0 == id).unwrap_or((id, "unknown criterion", None));
    let start = Instant::now();
    let result = match id {
        1 => special_functions(),
        2 => elliptic_operators(),
        3 => sigma_and_gamma(),
        4 => transmission_invariants(),
        5 => energy_balance(),
        6 => dispersive_cummins(),
        7 => nondispersive_cummins(),
        8 => dispersion_slows_decay(),
        9 => transfer_poles(),
        10 => laplace_oracle(),
        11 => boundary_jump(),
        12 => emergent_trace(),
        13 => transport_limit(),
        _ => Ok((false, "no such criterion".to_string())),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = time_limit {
        if seconds > limit {
            passed = false;
            detail.push_str(&format!("; runtime {seconds:.1} s exceeds {limit} s"));
        }
    }
    CriterionOutcome { id, title, passed, detail, seconds, time_limit }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0)).collect()
}

type Check = Result<(bool, String)>;

fn standard_body(epsilon: f64, kappa: f64) -> Result<(SimulationParams, BodyGeometry)> {
    Ok((SimulationParams::new(epsilon, kappa, 1.0, 1.0 / 6.0)?, BodyGeometry::flat(1.0, 1.0, 513)?))
}

fn decay_run(epsilon: f64, kappa: f64, delta0: f64, dx: f64, length: f64, t_end: f64, energy: bool) -> Result<(TransmissionSolver, RunOutput)> {
    let (p, g) = standard_body(epsilon, kappa)?;
    let n = (length / dx).round() as usize + 1;
    let solver = TransmissionSolver::new(p, g, dx, n)?;
    let state = CoupledState::return_to_equilibrium(p.ell, dx, n, delta0)?;
    let mut settings = RunSettings::new(0.25 * dx, t_end);
    settings.energy = energy;
    let out = solver.run(&state, &settings)?;
    Ok((solver, out))
}

fn special_functions() -> Check {
    let mut worst = 0.0f64;
    for k in 0..=1000 {
        let t = 0.05 * k as f64;
        for (n, val) in [(0.0, j0(t)), (1.0, j1(t))] {
            let panels = 64;
            let h = std::f64::consts::PI / panels as f64;
            let integral: f64 = (0..panels)
                .map(|i| gauss_legendre8(i as f64 * h, (i + 1) as f64 * h, |th| (n * th - t * th.sin()).cos()))
                .sum::<f64>()
                / std::f64::consts::PI;
            worst = worst.max((val - integral).abs());
        }
    }
    let mut worst_symbol = 0.0f64;
    for kappa in [0.1, 0.5, 1.0] {
        let k0 = make_kernel_k0(kappa, 0.001, 80.0)?;
        let k1 = make_kernel_k1(kappa, 0.001, 80.0)?;
        for p in [0.5, 1.0, 2.0] {
            let pc = Complex64::new(p, 0.0);
            for k in [&k0, &k1] {
                let s = TimeSeries::new(0.0, k.step, k.samples.clone())?;
                let num = laplace_numeric(&s, pc, 1e-10)?.value;
                let exact = k.symbol(pc).expect("analytic kernel");
                worst_symbol = worst_symbol.max((num - exact).norm());
            }
        }
    }
    Ok((
        worst < 1e-10 && worst_symbol < 1e-5,
        format!("max |J - integral| = {worst:.2e} (< 1e-10), max symbol error = {worst_symbol:.2e} (< 1e-5)"),
    ))
}

fn random_grid(rng: &mut ChaCha8Rng, n: usize, dx: f64, placement: Placement) -> Result<HalfLineGrid> {
    let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = match placement {
        Placement::Nodes => HalfLineGrid::nodes(1.0, Orientation::Rightward, dx, vals)?,
        Placement::Cells => HalfLineGrid::cells(1.0, Orientation::Rightward, dx, vals)?,
    };
    let norm = g.l2_norm();
    Ok(g.with_values(g.values.iter().map(|v| v / norm).collect()))
}

fn elliptic_operators() -> Check {
    let kappa = 0.3;
    let dx = 0.02;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_norm = 0.0f64;
    let mut worst_trace = 0.0f64;
    for _ in 0..100 {
        let f = random_grid(&mut rng, 400, dx, Placement::Nodes)?;
        worst_norm = worst_norm.max(apply_r0(&f, kappa)?.l2_norm()).max(apply_r1(&f, kappa)?.l2_norm());
        worst_trace = worst_trace.max(boundary_trace_r1(&f, kappa)?.abs() * (2.0 * kappa).sqrt());
        let c = random_grid(&mut rng, 400, dx, Placement::Cells)?;
        worst_norm = worst_norm.max(apply_r1(&c, kappa)?.l2_norm());
    }
    let error = |h: f64, neumann: bool| -> Result<f64> {
        let k = 0.5;
        let len = 6.0;
        let n = (len / h).round() as usize + 1;
        let g = HalfLineGrid::nodes(0.0, Orientation::Rightward, h, vec![2.0; n])?;
        let u = if neumann { apply_r1(&g, k)? } else { apply_r0(&g, k)? };
        Ok((0..n)
            .map(|j| {
                let y = g.distance(j);
                let exact = if neumann {
                    2.0 * (1.0 - (y / k).cosh() / (len / k).cosh())
                } else {
                    2.0 * (1.0 - ((0.5 * len - y) / k).cosh() / (0.5 * len / k).cosh())
                };
                (u.values[j] - exact).abs()
            })
            .fold(0.0, f64::max))
    };
    let order0 = (error(0.04, false)? / error(0.02, false)?).log2();
    let order1 = (error(0.04, true)? / error(0.02, true)?).log2();
    let norm_ok = worst_norm <= 1.0 + 5.0 * dx * dx;
    let trace_ok = worst_trace <= 1.0 + 5.0 * dx;
    Ok((
        norm_ok && trace_ok && order0 >= 1.9 && order1 >= 1.9,
        format!(
            "max norm {worst_norm:.6} (≤ {:.6}), max trace·√(2κ) {worst_trace:.4} (≤ {:.2}), orders R0 {order0:.2}, R1 {order1:.2} (≥ 1.9)",
            1.0 + 5.0 * dx * dx,
            1.0 + 5.0 * dx
        ),
    ))
}

fn sigma_and_gamma() -> Check {
    let mut worst = 0.0f64;
    let n = 10_000;
    for k in 0..n {
        let r = -5.0 + (SIGMA_DOMAIN_LIMIT + 5.0) * (k as f64 + 0.5) / n as f64;
        let s = sigma0(r)?;
        worst = worst.max((s * s * s - s * s + r).abs());
    }
    let at0 = (sigma0(0.0)? - 1.0).abs();
    let at_limit = (sigma0(SIGMA_DOMAIN_LIMIT)? - 2.0 / 3.0).abs();
    let ell = 1.0;
    let g0 = (gamma(0.0, ell)? - 0.25 * ell * ell).abs();
    let g_small = (gamma(1e-9, ell)? - 0.25 * ell * ell).abs();
    Ok((
        worst < 1e-12 && at0 < 1e-12 && at_limit < 1e-12 && g0 < 1e-8 && g_small < 1e-8,
        format!(
            "cubic residual {worst:.1e}, |σ₀(0)-1| {at0:.1e}, |σ₀(4/27)-2/3| {at_limit:.1e}, |γ(0)-ℓ²/4| {g0:.1e}, |γ(1e-9)-ℓ²/4| {g_small:.1e}"
        ),
    ))
}

fn transmission_invariants() -> Check {
    let (_, out) = decay_run(0.05, 0.3, 1.0, 0.025, 0.025 * 1999.0, 20.0, false)?;
    if let Some(e) = &out.terminal {
        return Ok((false, format!("run stopped early: {e}")));
    }
    let ok = out.max_transmission_defect < 1e-8 && out.max_mirror_defect < 1e-12 && out.max_abs_mean_discharge < 1e-10;
    Ok((
        ok,
        format!(
            "N = 2000, Δx = 0.025, Δt = Δx/4: transmission defect {:.1e}, mirror defect {:.1e}, max |⟨q_i⟩| {:.1e}",
            out.max_transmission_defect, out.max_mirror_defect, out.max_abs_mean_discharge
        ),
    ))
}

fn energy_balance() -> Check {
    let (_, out) = decay_run(0.0, 0.3, 1.0, 0.025, 50.0, 20.0, true)?;
    let e0 = out.rows[0].e_ext + out.rows[0].e_int;
    let drift = out.rows.iter().map(|r| ((r.e_ext + r.e_int - e0) / e0).abs()).fold(0.0, f64::max);
    let kappa = (0.3f64 / 3.0).sqrt();
    let (_, coarse) = decay_run(0.1, kappa, 1.0, 0.05, 20.0, 10.0, true)?;
    let (_, fine) = decay_run(0.1, kappa, 1.0, 0.025, 20.0, 10.0, true)?;
    let (dc, df) = (coarse.integrated_balance_defect(), fine.integrated_balance_defect());
    let ratio = dc / df;
    Ok((
        drift < 1e-6 && ratio >= 3.0,
        format!("ε=0 relative drift {drift:.1e} (< 1e-6); ε=0.1, μ=0.3 integrated defect {dc:.2e} → {df:.2e}, ratio {ratio:.2} (≥ 3)"),
    ))
}

fn dispersive_cummins() -> Check {
    let (p, g) = standard_body(0.0, 0.3)?;
    let ode = solve_decay_dispersive(&p, &g, 1.0, 40.0, 0.0025)?;
    let mut errors = Vec::new();
    for dx in [0.05, 0.025, 0.0125] {
        let (_, out) = decay_run(0.0, 0.3, 1.0, dx, 25.0, 40.0, false)?;
        errors.push(out.rows.iter().map(|r| (r.delta - ode.delta.sample(r.t)).abs()).fold(0.0, f64::max));
    }
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    Ok((
        errors[1] < 1e-3 && decreasing,
        format!(
            "sup |δ_coupled - δ_Cummins| on [0,40] for Δx = 0.05, 0.025, 0.0125: {:.2e}, {:.2e}, {:.2e} (reference Δx = 0.025 < 1e-3, decreasing)",
            errors[0], errors[1], errors[2]
        ),
    ))
}

fn nondispersive_cummins() -> Check {
    let (p, g) = standard_body(0.1, 0.0)?;
    let t_end = 20.0;
    let ode = solve_decay_nondispersive(&p, &g, 0.3, t_end, 0.001)?;
    let energy = ode.nondispersive_energy(&g)?;
    let monotone = energy.windows(2).all(|w| w[1] <= w[0] + 1e-13);
    let field = solve_burgers_exterior(&ode.delta_dot, &p, 40.0, 0.05)?;
    let horizon = field.shock.map_or(t_end, |(t, _)| t.min(t_end));
    let mut runs = Vec::new();
    for kappa in [0.1, 0.05] {
        let (_, out) = decay_run(0.1, kappa, 0.3, kappa / 4.0, 25.0, t_end, false)?;
        runs.push(out);
    }
    // δ_κ = δ_0 + Cκ² + ..., so (4δ_{κ/2} - δ_κ)/3 removes the leading term.
    let coarse = &runs[0];
    let fine = &runs[1];
    let mut worst = 0.0f64;
    let mut raw = [0.0f64; 2];
    for r in &coarse.rows {
        if r.t > horizon {
            break;
        }
        let f = sample_rows(fine, r.t);
        let exact = ode.delta.sample(r.t);
        worst = worst.max(((4.0 * f - r.delta) / 3.0 - exact).abs());
        raw[0] = raw[0].max((r.delta - exact).abs());
        raw[1] = raw[1].max((f - exact).abs());
    }
    Ok((
        worst < 5e-3 && monotone,
        format!(
            "window [0, {horizon:.2}] (first characteristic crossing); raw errors κ=0.1: {:.2e}, κ=0.05: {:.2e}; extrapolated {worst:.2e} (< 5e-3); energy monotone: {monotone}",
            raw[0], raw[1]
        ),
    ))
}

fn sample_rows(out: &RunOutput, t: f64) -> f64 {
    let rows = &out.rows;
    let k = rows.partition_point(|r| r.t < t);
    if k == 0 {
        return rows[0].delta;
    }
    if k >= rows.len() {
        return rows[rows.len() - 1].delta;
    }
    let (a, b) = (&rows[k - 1], &rows[k]);
    let w = (t - a.t) / (b.t - a.t);
    a.delta * (1.0 - w) + b.delta * w
}

fn dispersion_slows_decay() -> Check {
    let mut envelopes = Vec::new();
    let mut reports = Vec::new();
    for kappa in [0.0, 0.3, 1.0] {
        let (p, g) = standard_body(0.0, kappa)?;
        let dt = if kappa > 0.0 { 0.01f64.min(kappa / 8.0) } else { 0.005 };
        let traj = solve_decay_dispersive(&p, &g, 1.0, 80.0, dt)?;
        envelopes.push(envelope_at(&traj.delta, 40.0).unwrap_or(0.0));
        reports.push(decay_diagnostics(&traj, Some((20.0, 80.0)))?);
    }
    let increasing = envelopes.windows(2).all(|w| w[1] > w[0]);
    let r2 = |i: usize| reports[i].exponential_fit.as_ref().map_or(f64::NAN, |f| f.r_squared);
    let slope = reports[2].loglog_fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let ok = increasing && r2(0) > 0.999 && r2(2) < 0.9 && (-2.0..=-1.0).contains(&slope);
    Ok((
        ok,
        format!(
            "envelope(40) for κ = 0, 0.3, 1: {:.2e}, {:.2e}, {:.2e} (increasing: {increasing}); exponential R² κ=0: {:.6} (> 0.999), κ=1: {:.4} (< 0.9); log-log slope κ=1: {slope:.3} (in [-2, -1])",
            envelopes[0],
            envelopes[1],
            envelopes[2],
            r2(0),
            r2(2)
        ),
    ))
}

fn transfer_poles() -> Check {
    let seeds = seed_grid((-3.0, 1.0), (-5.0, 5.0), 40, 60);
    let mut worst = f64::NEG_INFINITY;
    let mut total = 0;
    let mut parts = Vec::new();
    for kappa in [0.05, 0.1, 0.3, 0.6, 1.0] {
        let (p, g) = standard_body(0.0, kappa)?;
        let sys = LinearCummins::new(&p, &g)?;
        let roots = find_poles(&sys, &seeds);
        total += roots.len();
        let m = roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(m);
        parts.push(format!("κ={kappa}: {} roots, max Re {m:.3}", roots.len()));
    }
    Ok((total > 0 && worst <= -1e-3, format!("{} (all ≤ -1e-3)", parts.join("; "))))
}

fn laplace_oracle() -> Check {
    let kappa = 0.5;
    let dx = 0.005;
    let bump = |x: f64| (-2.0 * (x - 3.0f64).powi(2)).exp();
    let c = bump(0.0);
    let kernel = make_kernel_k0(kappa, dx, 10.5)?;
    let grid = QuadrantGrid { dx, nx: (10.0 / dx).round() as usize + 1, dt: dx, t_end: 5.0, output_every: 20 };
    let solver = NonlocalSolver::new(kernel.clone(), grid)?;
    let sol = solver.solve_right_caputo(&signal(bump), &signal(move |_| c), &zero_forcing(), CompatibilityMode::Strict { tolerance: 1e-10 })?;
    let line = BromwichLine::standard();
    let initial: Vec<Complex64> = line.points.iter().map(|p| laplace_transform_fn(&bump, *p, 12.0, 120)).collect();
    let symbols: Vec<Complex64> = line.points.iter().map(|p| kernel.symbol(*p).expect("analytic kernel")).collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut bound = 0.0f64;
    for (row, t) in sol.field.times.iter().enumerate() {
        let values: Vec<Complex64> = line
            .points
            .iter()
            .zip(&initial)
            .zip(&symbols)
            .map(|((p, u), k)| caputo_transform(*k, *p, *u, c, *t))
            .collect();
        for j in 0..=100 {
            let x = 0.1 * j as f64;
            let e = sol.field.sample(row, x) - line.invert(&values, x);
            bound = bound.max(line.truncation_bound(&values, x));
            sum += e * e;
            count += 1;
        }
    }
    let l2 = (sum / count as f64 * 50.0).sqrt();
    Ok((l2 < 1e-4, format!("Δx = Δt = {dx}: L² error on [0,5]×[0,10] = {l2:.2e} (< 1e-4), oracle tail bound {bound:.1e}")))
}

fn boundary_jump() -> Check {
    let kappa = 0.5;
    let dx = 0.005;
    let grid = QuadrantGrid { dx, nx: 401, dt: dx, t_end: 5.0, output_every: 1 };
    let solver = NonlocalSolver::new(make_kernel_k0(kappa, dx, 2.5)?, grid)?;
    let sol = solver.solve_right_caputo(&zero_signal(), &signal(|t| t), &zero_forcing(), CompatibilityMode::Diagnostic)?;
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let t = 0.5 * k as f64;
        let measured = sol.boundary_jump.sample(t);
        let formula = -kappa * (1.0 - (-t / kappa).exp());
        worst = worst.max(((measured - formula) / formula).abs());
    }
    Ok((
        worst < 0.05,
        format!(
            "ubar = t, f = 0: max relative deviation from -κ(1-e^(-t/κ)) at t = 0.5..5 is {:.1e} (< 5e-2); rate defect {:.2}",
            worst,
            sol.compatibility.rate_defect
        ),
    ))
}

fn emergent_trace() -> Check {
    let kappa = 0.5;
    let dx = 0.01;
    let grid = QuadrantGrid { dx, nx: 501, dt: 0.005, t_end: 4.0, output_every: 10 };
    let solver = NonlocalSolver::new(make_kernel_k0(kappa, dx, 5.5)?, grid)?;
    let a = 1.0 / kappa;
    let s1 = solver.solve_right_riemann_liouville(&signal(|x| (-x).exp()), &zero_forcing())?;
    let e1 = s1
        .emergent_trace
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - (-a * s1.emergent_trace.time(i)).exp()).abs())
        .fold(0.0, f64::max);
    let s2 = solver.solve_right_riemann_liouville(&signal(|x| (1.0 + x) * (-x).exp()), &forcing(|t, x| t.sin() * (-x).exp()))?;
    let e2 = s2
        .emergent_trace
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = s2.emergent_trace.time(i);
            let exact = (-a * t).exp() + (a * t.sin() - t.cos() + (-a * t).exp()) / (a * a + 1.0);
            (v - exact).abs()
        })
        .fold(0.0, f64::max);
    let init = signal(|x: f64| x * x * (-x).exp());
    let f = forcing(|t: f64, x: f64| x * (-x - t).exp());
    let caputo = solver.solve_right_caputo(&init, &zero_signal(), &f, CompatibilityMode::Strict { tolerance: 1e-12 })?;
    let rl = solver.solve_right_riemann_liouville(&init, &f)?;
    let agree = caputo
        .field
        .values
        .iter()
        .flatten()
        .zip(rl.field.values.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok((
        e1 < 1e-4 && e2 < 1e-4 && agree < 1e-8,
        format!("trace errors {e1:.1e}, {e2:.1e} (< 1e-4); Caputo/RL discrepancy with zero trace {agree:.1e} (< 1e-8)"),
    ))
}

fn transport_limit() -> Check {
    let bump = |x: f64| (-2.0 * (x - 3.0f64).powi(2)).exp();
    let c = bump(0.0);
    let exact = move |t: f64, x: f64| if x >= t { bump(x - t) } else { c };
    let mut errors = Vec::new();
    for kappa in [0.4, 0.2, 0.1, 0.05] {
        let dx = kappa / 8.0;
        let grid = QuadrantGrid { dx, nx: (10.0 / dx).round() as usize + 1, dt: dx, t_end: 5.0, output_every: (0.5 / dx).round() as usize };
        let solver = NonlocalSolver::new(make_kernel_k0(kappa, dx, 10.5)?, grid)?;
        let sol = solver.solve_right_caputo(&signal(bump), &signal(move |_| c), &zero_forcing(), CompatibilityMode::Strict { tolerance: 1e-10 })?;
        let mut sum = 0.0;
        let mut count = 0;
        for (row, t) in sol.field.times.iter().enumerate() {
            for j in 0..=200 {
                let x = 0.05 * j as f64;
                sum += (sol.field.sample(row, x) - exact(*t, x)).powi(2);
                count += 1;
            }
        }
        errors.push((sum / count as f64 * 50.0).sqrt());
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let (p, _) = standard_body(1e-9, 0.0)?;
    let dd = TimeSeries::from_fn(0.0, 0.005, 1601, |t| t * t * (-t).exp());
    let field = solve_burgers_exterior(&dd, &p, 5.0, 0.05)?;
    let mut worst = 0.0f64;
    for (n, row) in field.q.iter().enumerate() {
        let t = n as f64 * dd.step;
        for (j, x) in field.x.iter().enumerate() {
            let tau = t - (x - p.ell);
            let q = if tau < 0.0 { 0.0 } else { -p.ell * tau * tau * (-tau).exp() };
            worst = worst.max((row[j] - q).abs());
        }
    }
    Ok((
        monotone && worst < 1e-6,
        format!(
            "L² error vs shifted transport for κ = 0.4, 0.2, 0.1, 0.05: {:.2e}, {:.2e}, {:.2e}, {:.2e} (decreasing: {monotone}); Burgers at ε = 1e-9 vs -ℓδ̇(t-(x-ℓ)): {worst:.1e} (< 1e-6)",
            errors[0], errors[1], errors[2], errors[3]
        ),
    ))
}
