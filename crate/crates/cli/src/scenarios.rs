//! Scenario preparation and execution. `prepare_*` validates everything
//! and returns a job; the job only computes and writes.

use std::path::Path;

use anyhow::anyhow;
use rayon::prelude::*;
use serde_json::{json, Value};
use wsi_core::acceptance::{run_criterion, CRITERIA};
use wsi_core::coefficients::{SimulationParams, SolidState};
use wsi_core::cummins::{
    check_release, decay_diagnostics, exterior_reconstruction_linear, solve_burgers_exterior, solve_decay_dispersive,
    solve_decay_nondispersive, DecayRegime, DecayTrajectory,
};
use wsi_core::transmission::{
    CoupledState, ExteriorState, PrescribedProblem, RunOutput, RunSettings, Side, TransmissionSolver,
};
use wsi_core::TimeSeries;

use crate::config::{Regime, RunConfig};
use crate::output::{gnuplot_script, invalid, other, CliError, OutDir, Outcome};
use crate::signals::Tag;

pub type Job = Box<dyn FnOnce(&mut OutDir) -> Result<Outcome, CliError> + Send>;

pub const SERIES_HEADER: [&str; 7] = ["t", "mean_discharge", "delta", "delta_dot", "e_ext", "e_int", "balance_defect"];
pub const FIELD_HEADER: [&str; 4] = ["t", "x", "zeta", "q"];

pub fn prepare(scenario: &str, config: &RunConfig, base_dir: &Path) -> Result<Job, CliError> {
    match scenario {
        "simulate" => prepare_simulate(config, base_dir),
        "toy" => prepare_toy(config, base_dir),
        "decay" => prepare_decay(config, base_dir),
        "nonlocal" => crate::nonlocal::prepare(config, base_dir),
        "verify" => prepare_verify(config),
        other => Err(invalid(anyhow!("unknown scenario {other:?}"))),
    }
}

fn initial_exterior(config: &RunConfig, ell: f64, dx: f64, nodes: usize) -> Result<ExteriorState, CliError> {
    match &config.initial.zeta {
        None => ExteriorState::rest(ell, dx, nodes).map_err(invalid),
        Some(s) => {
            let tag = Tag::parse(s).map_err(|e| invalid(e.context("initial.zeta")))?;
            ExteriorState::from_fns(ell, dx, nodes, |x| tag.value(x.abs() - ell), |_| 0.0).map_err(invalid)
        }
    }
}

fn field_rows(state: &CoupledState) -> Vec<[f64; 4]> {
    let ext = &state.exterior;
    let mut rows: Vec<[f64; 4]> = ext.node_rows(Side::Minus).iter().rev().map(|r| [state.time, r[0], r[1], r[2]]).collect();
    rows.extend(ext.node_rows(Side::Plus).iter().map(|r| [state.time, r[0], r[1], r[2]]));
    rows
}

fn series_rows(out: &RunOutput) -> Vec<[f64; 7]> {
    out.rows
        .iter()
        .map(|r| [r.t, r.mean_discharge, r.delta, r.delta_dot, r.e_ext, r.e_int, r.balance_defect])
        .collect()
}

fn prepare_simulate(config: &RunConfig, base_dir: &Path) -> Result<Job, CliError> {
    let c = config.clone();
    let params = c.params.build().map_err(invalid)?;
    let geometry = c.geometry.build(params.ell, base_dir).map_err(invalid)?;
    let nodes = c.grid.nodes().map_err(invalid)?;
    c.grid.steps().map_err(invalid)?;
    let dx = c.grid.dx;
    let solver = TransmissionSolver::new(params, geometry, dx, nodes).map_err(invalid)?;
    let state = CoupledState {
        exterior: initial_exterior(&c, params.ell, dx, nodes)?,
        solid: SolidState::at_rest(c.initial.delta0),
        time: 0.0,
    };
    solver.check_initial(&state, c.grid.transmission_tolerance).map_err(invalid)?;
    solver.coupled_rhs(&state).map_err(invalid)?;
    let dt = c.grid.dt();
    let limit = solver.max_stable_step(&state.exterior, c.grid.cfl).map_err(invalid)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(invalid(anyhow!("grid.dt = {dt} exceeds the stability limit {limit} (cfl = {})", c.grid.cfl)));
    }
    let settings = RunSettings {
        dt,
        t_end: c.grid.t_end,
        cfl: c.grid.cfl,
        transmission_tolerance: c.grid.transmission_tolerance,
        record_every: c.grid.record_every,
        snapshot_every: c.grid.snapshot_every,
        energy: c.grid.energy,
    };
    settings.validate().map_err(invalid)?;
    Ok(Box::new(move |dir: &mut OutDir| {
        let out = solver.run(&state, &settings).map_err(other)?;
        dir.csv("series.csv", &SERIES_HEADER, series_rows(&out)).map_err(other)?;
        let mut states: Vec<&CoupledState> = out.snapshots.iter().collect();
        if let Some(last) = &out.final_state {
            if states.last().is_none_or(|s| s.time != last.time) {
                states.push(last);
            }
        }
        dir.csv("fields.csv", &FIELD_HEADER, states.iter().flat_map(|s| field_rows(s))).map_err(other)?;
        dir.text("plot.gp", &gnuplot_script("heave displacement", &["series.csv".into()], "delta", 3)).map_err(other)?;
        let summary = json!({
            "steps_recorded": out.rows.len(),
            "final_time": out.final_state.as_ref().map(|s| s.time),
            "max_transmission_defect": out.max_transmission_defect,
            "max_mirror_defect": out.max_mirror_defect,
            "max_abs_zeta": out.max_abs_zeta,
            "max_abs_zeta_slope": out.max_abs_zeta_slope,
            "max_abs_mean_discharge": out.max_abs_mean_discharge,
            "integrated_balance_defect": if settings.energy { Some(out.integrated_balance_defect()) } else { None },
        });
        Ok(Outcome { outputs: dir.files.clone(), summary, terminal: out.terminal, exit_code: 0 })
    }))
}

fn prepare_toy(config: &RunConfig, base_dir: &Path) -> Result<Job, CliError> {
    let c = config.clone();
    let params = c.params.build().map_err(invalid)?;
    let geometry = c.geometry.build(params.ell, base_dir).map_err(invalid)?;
    let nodes = c.grid.nodes().map_err(invalid)?;
    let steps = c.grid.steps().map_err(invalid)?;
    let dx = c.grid.dx;
    let (f, g) = c.toy.build().map_err(invalid)?;
    let solver = TransmissionSolver::new(params, geometry, dx, nodes).map_err(invalid)?;
    let ext = initial_exterior(&c, params.ell, dx, nodes)?;
    let tol = c.grid.transmission_tolerance;
    if (ext.mean_discharge() - f.value(0.0)).abs() > tol || (ext.discharge_jump() - 2.0 * g.value(0.0)).abs() > tol {
        return Err(invalid(anyhow!(
            "toy: initial data have ⟨q⟩ = {}, ⟦q⟧ = {} but the prescribed values at t = 0 are {}, {}",
            ext.mean_discharge(),
            ext.discharge_jump(),
            f.value(0.0),
            2.0 * g.value(0.0)
        )));
    }
    let dt = c.grid.dt();
    let limit = solver.max_stable_step(&ext, c.grid.cfl).map_err(invalid)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(invalid(anyhow!("grid.dt = {dt} exceeds the stability limit {limit} (cfl = {})", c.grid.cfl)));
    }
    Ok(Box::new(move |dir: &mut OutDir| {
        let f_dot = |t: f64| f.derivative(t);
        let g_dot = |t: f64| g.derivative(t);
        let problem = PrescribedProblem { solver: &solver, f_dot: &f_dot, g_dot: &g_dot };
        let e0 = solver.exterior_energy(&ext).map_err(other)?;
        let mut rows = vec![[0.0, ext.mean_discharge(), ext.discharge_jump(), e0]];
        let wrap = |t: f64, e: ExteriorState| CoupledState { exterior: e, solid: SolidState::at_rest(0.0), time: t };
        let mut snapshots = vec![field_rows(&wrap(0.0, ext.clone()))];
        let mut state = ext;
        let mut terminal = None;
        let mut worst_drift = 0.0f64;
        let mut worst_defect = 0.0f64;
        let mut t = 0.0;
        for k in 1..=steps {
            match problem.step(&state, t, dt, c.grid.cfl) {
                Ok(s) => state = s,
                Err(e) if e.is_terminal() => {
                    terminal = Some(e);
                    break;
                }
                Err(e) => return Err(other(e)),
            }
            t = k as f64 * dt;
            worst_defect = worst_defect
                .max((state.mean_discharge() - f.value(t)).abs())
                .max((state.discharge_jump() - 2.0 * g.value(t)).abs());
            let record = k % c.grid.record_every == 0 || k == steps;
            let snap = c.grid.snapshot_every.is_some_and(|every| k % every == 0) || k == steps;
            if record || snap {
                let e = solver.exterior_energy(&state).map_err(other)?;
                worst_drift = worst_drift.max((e - e0).abs());
                if record {
                    rows.push([t, state.mean_discharge(), state.discharge_jump(), e]);
                }
                if snap {
                    snapshots.push(field_rows(&wrap(t, state.clone())));
                }
            }
        }
        if terminal.is_some() {
            snapshots.push(field_rows(&wrap(t, state.clone())));
        }
        dir.csv("series.csv", &["t", "mean_discharge", "discharge_jump", "e_ext"], &rows).map_err(other)?;
        dir.csv("fields.csv", &FIELD_HEADER, snapshots.iter().flatten()).map_err(other)?;
        let summary = json!({
            "initial_energy": e0,
            "final_energy": rows.last().map(|r| r[3]),
            "max_energy_change": worst_drift,
            "max_prescription_defect": worst_defect,
            "final_time": t,
        });
        Ok(Outcome { outputs: dir.files.clone(), summary, terminal, exit_code: 0 })
    }))
}

struct DecayJob {
    regime: Regime,
    kappa: Option<f64>,
    params: SimulationParams,
    run: Box<dyn FnOnce() -> wsi_core::Result<(DecayTrajectory, Option<wsi_core::Error>)> + Send>,
}

fn label(regime: Regime, kappa: Option<f64>) -> String {
    match (regime, kappa) {
        (Regime::Nondispersive, _) => "decay_nondispersive".into(),
        (Regime::Dispersive, Some(k)) => format!("decay_dispersive_k{k}"),
        (Regime::Full, Some(k)) => format!("decay_full_k{k}"),
        (_, None) => "decay".into(),
    }
}

fn prepare_decay(config: &RunConfig, base_dir: &Path) -> Result<Job, CliError> {
    let c = config.clone();
    let d = c.decay.clone();
    let base = c.params.build().map_err(invalid)?;
    let geometry = c.geometry.build(base.ell, base_dir).map_err(invalid)?;
    if d.regimes.is_empty() {
        return Err(invalid(anyhow!("decay.regimes is empty")));
    }
    if !(d.t_end > 0.0) || !(d.dt > 0.0) || d.dt > d.t_end {
        return Err(invalid(anyhow!("decay: need 0 < dt ≤ t_end")));
    }
    if let Some([a, b]) = d.window {
        if !(0.0 <= a && a < b && b <= d.t_end) {
            return Err(invalid(anyhow!("decay.window must satisfy 0 ≤ start < end ≤ t_end")));
        }
    }
    let mut jobs: Vec<DecayJob> = Vec::new();
    for &regime in &d.regimes {
        match regime {
            Regime::Nondispersive => {
                let p = SimulationParams { kappa: 0.0, ..base };
                check_release(&p, &geometry, d.delta0).map_err(invalid)?;
                let (g, delta0, t_end, dt) = (geometry.clone(), d.delta0, d.t_end, d.dt);
                jobs.push(DecayJob {
                    regime,
                    kappa: None,
                    params: p,
                    run: Box::new(move || match solve_decay_nondispersive(&p, &g, delta0, t_end, dt) {
                        Ok(traj) => Ok((traj, None)),
                        Err(e) if e.is_terminal() => {
                            // keep whatever stretch of the trajectory precedes the event
                            let stop = match &e {
                                wsi_core::Error::Shock { time, .. } if time.is_finite() => *time,
                                _ => 0.0,
                            };
                            let n = ((stop / dt).floor() as usize).max(1);
                            let partial = solve_decay_nondispersive(&p, &g, delta0, n as f64 * dt, dt)?;
                            Ok((partial, Some(e)))
                        }
                        Err(e) => Err(e),
                    }),
                });
            }
            Regime::Dispersive => {
                for &k in &d.kappas {
                    let p = SimulationParams::new(0.0, k, base.ell, base.tau_buoy).map_err(invalid)?;
                    if k > 0.0 && d.dt > k / 8.0 {
                        return Err(invalid(anyhow!("decay.dt = {} must not exceed κ/8 = {} for κ = {k}", d.dt, k / 8.0)));
                    }
                    let (g, delta0, t_end, dt) = (geometry.clone(), d.delta0, d.t_end, d.dt);
                    jobs.push(DecayJob {
                        regime,
                        kappa: Some(k),
                        params: p,
                        run: Box::new(move || solve_decay_dispersive(&p, &g, delta0, t_end, dt).map(|t| (t, None))),
                    });
                }
            }
            Regime::Full => {
                for &k in &d.kappas {
                    if !(k > 0.0) {
                        return Err(invalid(anyhow!("decay: the full regime needs κ > 0, got {k}")));
                    }
                    let p = SimulationParams { kappa: k, ..base };
                    let dx = c.grid.dx.min(k / 4.0);
                    let nodes = (d.full_length / dx).round() as usize + 1;
                    let solver = TransmissionSolver::new(p, geometry.clone(), dx, nodes).map_err(invalid)?;
                    let state = CoupledState::return_to_equilibrium(p.ell, dx, nodes, d.delta0).map_err(invalid)?;
                    solver.coupled_rhs(&state).map_err(invalid)?;
                    let step = 0.25 * dx;
                    let every = ((d.dt / step).round() as usize).max(1);
                    let mut settings = RunSettings::new(step, d.t_end);
                    settings.energy = false;
                    settings.record_every = every;
                    let delta0 = d.delta0;
                    jobs.push(DecayJob {
                        regime,
                        kappa: Some(k),
                        params: p,
                        run: Box::new(move || {
                            let out = solver.run(&state, &settings)?;
                            let h = step * every as f64;
                            let pick = |f: fn(&wsi_core::transmission::SeriesRow) -> f64| -> Vec<f64> {
                                out.rows.iter().filter(|r| r.t == 0.0 || ((r.t / h).round() * h - r.t).abs() < 1e-9).map(f).collect()
                            };
                            let traj = DecayTrajectory {
                                delta: TimeSeries::new(0.0, h, pick(|r| r.delta))?,
                                delta_dot: TimeSeries::new(0.0, h, pick(|r| r.delta_dot))?,
                                regime: DecayRegime::FullCoupled,
                                params: p,
                                delta0,
                            };
                            Ok((traj, out.terminal))
                        }),
                    });
                }
            }
        }
    }
    Ok(Box::new(move |dir: &mut OutDir| {
        let results: Vec<_> = jobs
            .into_par_iter()
            .map(|job| {
                let DecayJob { regime, kappa, params, run } = job;
                (regime, kappa, params, run())
            })
            .collect();
        let mut entries = Vec::new();
        let mut terminal = None;
        let mut files = Vec::new();
        for (regime, kappa, params, result) in results {
            let (traj, event) = result.map_err(other)?;
            let name = label(regime, kappa);
            let rows: Vec<[f64; 3]> =
                (0..traj.delta.len()).map(|i| [traj.delta.time(i), traj.delta.values[i], traj.delta_dot.values[i]]).collect();
            dir.csv(&format!("{name}.csv"), &["t", "delta", "delta_dot"], &rows).map_err(other)?;
            files.push(format!("{name}.csv"));
            let report = if event.is_none() && traj.delta.end_time() >= 20.0 {
                Some(decay_diagnostics(&traj, d.window.map(|[a, b]| (a, b))).map_err(other)?)
            } else {
                None
            };
            let radiated = if regime == Regime::Nondispersive { traj.radiated_energy().ok().and_then(|r| r.last().copied()) } else { None };
            if d.exterior && event.is_none() {
                write_exterior(dir, &name, regime, &traj, &params, &d)?;
            }
            entries.push(json!({
                "regime": regime,
                "kappa": kappa,
                "file": format!("{name}.csv"),
                "final_time": traj.delta.end_time(),
                "diagnostics": report,
                "radiated_energy": radiated,
                "terminal": event.as_ref().map(crate::output::terminal_json),
            }));
            if terminal.is_none() {
                terminal = event;
            }
        }
        dir.json("diagnostics.json", &entries).map_err(other)?;
        dir.text("plot.gp", &gnuplot_script("return to equilibrium", &files, "delta", 2)).map_err(other)?;
        Ok(Outcome { outputs: dir.files.clone(), summary: Value::Array(entries), terminal, exit_code: 0 })
    }))
}

fn write_exterior(
    dir: &mut OutDir,
    name: &str,
    regime: Regime,
    traj: &DecayTrajectory,
    params: &SimulationParams,
    d: &crate::config::DecayConfig,
) -> Result<(), CliError> {
    let every = ((0.1 / traj.delta_dot.step).round() as usize).max(1);
    let mut rows: Vec<[f64; 4]> = Vec::new();
    match regime {
        Regime::Nondispersive => {
            let field = solve_burgers_exterior(&traj.delta_dot, params, d.exterior_x_max, d.exterior_dx).map_err(other)?;
            for (n, (q, z)) in field.q.iter().zip(&field.zeta).enumerate().step_by(every) {
                let t = field.t_start + n as f64 * field.t_step;
                rows.extend(field.x.iter().enumerate().map(|(j, x)| [t, *x, z[j], q[j]]));
            }
        }
        Regime::Dispersive => {
            let field = exterior_reconstruction_linear(&traj.delta_dot, params, d.exterior_x_max, d.exterior_dx).map_err(other)?;
            let nt = field.q.first().map_or(0, |r| r.len());
            for n in (0..nt).step_by(every) {
                let t = n as f64 * field.t_step;
                rows.extend(field.x.iter().enumerate().map(|(i, x)| [t, *x, field.zeta[i][n], field.q[i][n]]));
            }
        }
        Regime::Full => return Ok(()),
    }
    dir.csv(&format!("{}_exterior.csv", name), &FIELD_HEADER, &rows).map_err(other)
}

fn prepare_verify(config: &RunConfig) -> Result<Job, CliError> {
    let ids: Vec<u8> = match &config.verify.criteria {
        Some(ids) => ids.clone(),
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    if ids.is_empty() {
        return Err(invalid(anyhow!("verify.criteria is empty")));
    }
    for id in &ids {
        if !CRITERIA.iter().any(|c| c.0 == *id) {
            return Err(invalid(anyhow!("verify: no criterion {id}")));
        }
    }
    Ok(Box::new(move |dir: &mut OutDir| {
        let mut outcomes = Vec::new();
        for id in ids {
            let o = run_criterion(id);
            println!("{o}");
            outcomes.push(o);
        }
        let passed = outcomes.iter().filter(|o| o.passed).count();
        println!("{passed} of {} criteria passed", outcomes.len());
        dir.json("verify.json", &outcomes).map_err(other)?;
        let summary = json!({ "passed": passed, "total": outcomes.len() });
        Ok(Outcome { outputs: dir.files.clone(), summary, terminal: None, exit_code: if passed == outcomes.len() { 0 } else { 1 } })
    }))
}
