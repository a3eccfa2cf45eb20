//! Nonlocal transport on the quadrant t, x > 0:
//! ∂ₜu + K ∗ₓ ∂ₓu = f (Caputo form), ∂ₜu + ∂ₓ(K ∗ₓ u) = f (Riemann-Liouville
//! form) and the left-going problem ∂ₜu - K ∗ₓ ∂ₓu = f.
//!
//! The convolution is discretized by product integration against a piecewise
//! linear interpolant of u, so with W_m the mean of K over [(m-1)Δx, mΔx]
//!
//!   (K ∗ ∂ₓu)(x_j) ≈ Σ_{m=1..j} W_m (u_{j-m+1} - u_{j-m}).
//!
//! The operator only looks to the left, so no closure is needed at the far
//! end of the grid.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{trapezoid, TimeSeries};
use crate::special::{gauss_legendre8, CausalKernel, KernelKind, GL8_NODES, GL8_WEIGHTS};

pub type Signal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Forcing = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn signal(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Signal {
    Arc::new(f)
}

pub fn forcing(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Forcing {
    Arc::new(f)
}

pub fn zero_signal() -> Signal {
    Arc::new(|_| 0.0)
}

pub fn zero_forcing() -> Forcing {
    Arc::new(|_, _| 0.0)
}

/// (∫ e^{-2ax} |u|² dx)^{1/2} by the trapezoid rule on x_j = jΔx.
pub fn weighted_norm(u: &[f64], a: f64, dx: f64) -> f64 {
    let w: Vec<f64> = u.iter().enumerate().map(|(j, v)| (-2.0 * a * j as f64 * dx).exp() * v * v).collect();
    trapezoid(&w, dx).sqrt()
}

/// Samples u(t_i, x_j) stored at output times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantField {
    pub times: Vec<f64>,
    pub x_step: f64,
    /// One row per output time.
    pub values: Vec<Vec<f64>>,
    /// Exponential weight a of the L²_a norm used in reports.
    pub weight: f64,
    pub kernel: KernelKind,
}

impl QuadrantField {
    pub fn nx(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.x_step
    }

    /// Row index of the output time closest to `t`.
    pub fn row_at(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Linear interpolation in x within one row.
    pub fn sample(&self, row: usize, x: f64) -> f64 {
        let v = &self.values[row];
        let s = x / self.x_step;
        let i = s.floor().max(0.0) as usize;
        if i + 1 >= v.len() {
            return *v.last().unwrap_or(&0.0);
        }
        let w = s - i as f64;
        v[i] * (1.0 - w) + v[i + 1] * w
    }

    pub fn weighted_norms(&self) -> Vec<f64> {
        self.values.iter().map(|row| weighted_norm(row, self.weight, self.x_step)).collect()
    }

    /// Column j as a time series (output times must be uniform).
    pub fn column(&self, j: usize) -> Result<TimeSeries> {
        let step = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 1.0 };
        TimeSeries::new(self.times[0], step, self.values.iter().map(|r| r[j]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    /// |ubar(0) - u_in(0)|
    pub corner_defect: f64,
    /// max_t |ubar'(t) - f(t, 0)|
    pub rate_defect: f64,
    pub compatible: bool,
}

/// Corner continuity and the boundary-rate condition ubar' = f(·, 0), with
/// ubar' by centred differences (second order one-sided at the ends).
pub fn check_compatibility(
    u_in: &[f64],
    ubar: &[f64],
    f_boundary: &[f64],
    dt: f64,
    tolerance: f64,
) -> CompatibilityReport {
    let corner = match (u_in.first(), ubar.first()) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    };
    let n = ubar.len().min(f_boundary.len());
    let mut rate = 0.0f64;
    if n >= 3 {
        for i in 0..n {
            let d = if i == 0 {
                (-3.0 * ubar[0] + 4.0 * ubar[1] - ubar[2]) / (2.0 * dt)
            } else if i == n - 1 {
                (3.0 * ubar[n - 1] - 4.0 * ubar[n - 2] + ubar[n - 3]) / (2.0 * dt)
            } else {
                (ubar[i + 1] - ubar[i - 1]) / (2.0 * dt)
            };
            rate = rate.max((d - f_boundary[i]).abs());
        }
    }
    CompatibilityReport { corner_defect: corner, rate_defect: rate, compatible: corner <= tolerance && rate <= tolerance }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CompatibilityMode {
    /// Reject data whose compatibility defects exceed the tolerance.
    Strict { tolerance: f64 },
    /// Accept anything and measure the boundary jump one cell in.
    Diagnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantGrid {
    pub dx: f64,
    /// Number of points x_j = jΔx, j = 0..nx-1.
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Store every n-th time step.
    pub output_every: usize,
}

impl QuadrantGrid {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0) || !(self.dt > 0.0) || !(self.t_end >= 0.0) || self.nx < 3 {
            return Err(Error::Config(format!(
                "quadrant grid needs Δx, Δt > 0, T ≥ 0 and at least 3 points (Δx={}, Δt={}, T={}, nx={})",
                self.dx, self.dt, self.t_end, self.nx
            )));
        }
        if ((self.t_end / self.dt).round() * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::Config(format!("T = {} is not a multiple of Δt = {}", self.t_end, self.dt)));
        }
        Ok(())
    }
}

pub struct CaputoSolution {
    pub field: QuadrantField,
    pub compatibility: CompatibilityReport,
    /// u(t, Δx) - ubar(t) at the output times.
    pub boundary_jump: TimeSeries,
}

pub struct RiemannLiouvilleSolution {
    pub field: QuadrantField,
    /// u(t, 0) produced by the scheme.
    pub emergent_trace: TimeSeries,
    /// e^{-K(0)t} u_in(0) + ∫ e^{-K(0)(t-s)} f(s, 0) ds.
    pub closed_form_trace: TimeSeries,
}

pub struct LeftSolution {
    /// Forward-ordered in time.
    pub field: QuadrantField,
    pub recovered_initial: Vec<f64>,
}

/// Method-of-lines solver for one kernel and grid.
pub struct NonlocalSolver {
    pub kernel: CausalKernel,
    pub grid: QuadrantGrid,
    pub weight: f64,
    means: Vec<f64>,
}

impl NonlocalSolver {
    pub fn new(kernel: CausalKernel, grid: QuadrantGrid) -> Result<Self> {
        grid.validate()?;
        match kernel.kind {
            KernelKind::BesselK0 { kappa } | KernelKind::BesselK1 { kappa } => {
                if grid.dx > kappa / 8.0 * (1.0 + 1e-12) {
                    return Err(Error::Resolution(format!("Δx = {} does not resolve the kernel (need ≤ κ/8 = {})", grid.dx, kappa / 8.0)));
                }
            }
            KernelKind::Table => {
                if kernel.horizon() + kernel.step < (grid.nx - 1) as f64 * grid.dx {
                    return Err(Error::Config(format!(
                        "kernel table covers [0, {}] but the grid reaches {}",
                        kernel.horizon(),
                        (grid.nx - 1) as f64 * grid.dx
                    )));
                }
            }
            KernelKind::Fractional { .. } => {}
        }
        let means = kernel.cell_means(grid.dx, grid.nx);
        Ok(Self { kernel, grid, weight: 0.0, means })
    }

    pub fn with_weight(mut self, a: f64) -> Self {
        self.weight = a;
        self
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.grid.dx
    }

    /// Σ_{m=1..j} W_m (u_{j-m+1} - u_{j-m}) for every j (0 at j = 0).
    pub fn convolved_gradient(&self, u: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
        let w = &self.means;
        let conv = |j: usize| -> f64 { (1..=j).map(|m| w[m] * d[j - m]).sum() };
        if u.len() > 512 {
            (0..u.len()).into_par_iter().map(conv).collect()
        } else {
            (0..u.len()).map(conv).collect()
        }
    }

    fn field(&self, times: Vec<f64>, values: Vec<Vec<f64>>) -> QuadrantField {
        QuadrantField { times, x_step: self.grid.dx, values, weight: self.weight, kernel: self.kernel.kind.clone() }
    }

    fn initial_samples(&self, initial: &Signal) -> Vec<f64> {
        (0..self.grid.nx).map(|j| initial(self.x(j))).collect()
    }

    /// Caputo-type problem with boundary value `ubar` at x = 0.
    pub fn solve_right_caputo(
        &self,
        initial: &Signal,
        boundary: &Signal,
        f: &Forcing,
        mode: CompatibilityMode,
    ) -> Result<CaputoSolution> {
        let g = &self.grid;
        let steps = g.steps();
        let u_in = self.initial_samples(initial);
        let ubar: Vec<f64> = (0..=steps).map(|n| boundary(n as f64 * g.dt)).collect();
        let f0: Vec<f64> = (0..=steps).map(|n| f(n as f64 * g.dt, 0.0)).collect();
        let tol = match mode {
            CompatibilityMode::Strict { tolerance } => tolerance,
            CompatibilityMode::Diagnostic => f64::INFINITY,
        };
        let report = check_compatibility(&u_in, &ubar, &f0, g.dt, tol);
        if let CompatibilityMode::Strict { tolerance } = mode {
            if !report.compatible {
                return Err(Error::Compatibility(format!(
                    "corner defect {:e}, rate defect {:e} (tolerance {tolerance:e})",
                    report.corner_defect, report.rate_defect
                )));
            }
        }
        let rhs = |t: f64, u: &[f64]| -> Vec<f64> {
            let mut v = u.to_vec();
            v[0] = boundary(t);
            let c = self.convolved_gradient(&v);
            (0..v.len()).map(|j| if j == 0 { 0.0 } else { f(t, self.x(j)) - c[j] }).collect()
        };
        let mut u = u_in;
        u[0] = ubar[0];
        let (times, values) = integrate(&rhs, u, g, |t, u| u[0] = boundary(t));
        let jump: Vec<f64> = times.iter().zip(&values).map(|(t, row)| row[1] - boundary(*t)).collect();
        let out_step = g.dt * g.output_every.max(1) as f64;
        Ok(CaputoSolution {
            boundary_jump: TimeSeries::new(0.0, out_step, jump)?,
            field: self.field(times, values),
            compatibility: report,
        })
    }

    /// Riemann-Liouville-type problem; the trace at x = 0 is part of the
    /// solution and obeys u̇(t, 0) = f(t, 0) - K(0) u(t, 0).
    pub fn solve_right_riemann_liouville(&self, initial: &Signal, f: &Forcing) -> Result<RiemannLiouvilleSolution> {
        let k0 = self.kernel.value(0.0);
        if !k0.is_finite() {
            return Err(Error::Config("the Riemann-Liouville form needs a kernel bounded at the origin".into()));
        }
        let g = &self.grid;
        let boundary_values: Vec<f64> = (0..self.grid.nx).map(|j| self.kernel.value(self.x(j))).collect();
        let rhs = |t: f64, u: &[f64]| -> Vec<f64> {
            let c = self.convolved_gradient(u);
            (0..u.len())
                .map(|j| if j == 0 { f(t, 0.0) - k0 * u[0] } else { f(t, self.x(j)) - c[j] - boundary_values[j] * u[0] })
                .collect()
        };
        let u = self.initial_samples(initial);
        let (times, values) = integrate(&rhs, u.clone(), g, |_, _| {});
        let out_step = g.dt * g.output_every.max(1) as f64;
        let trace = TimeSeries::new(0.0, out_step, values.iter().map(|r| r[0]).collect())?;
        // I_{n+1} = e^{-k0 Δ} I_n + ∫ over the step, by 8-point Gauss per step.
        let mut closed = Vec::with_capacity(times.len());
        let mut acc = u[0];
        let mut t_prev = 0.0;
        closed.push(acc);
        for &t in times.iter().skip(1) {
            let seg = gauss_legendre8(t_prev, t, |s| (-k0 * (t - s)).exp() * f(s, 0.0));
            acc = (-k0 * (t - t_prev)).exp() * acc + seg;
            closed.push(acc);
            t_prev = t;
        }
        Ok(RiemannLiouvilleSolution {
            field: self.field(times, values),
            emergent_trace: trace,
            closed_form_trace: TimeSeries::new(0.0, out_step, closed)?,
        })
    }

    /// Left-going boundary value problem on [0, T_max], integrated backward
    /// from u(T_max, ·) = 0; data must have died out by T_max.
    pub fn solve_left_bvp(&self, boundary: &Signal, f: &Forcing, tolerance: f64) -> Result<LeftSolution> {
        let g = &self.grid;
        let t_max = g.t_end;
        let steps = g.steps();
        let tail = ((0.05 * steps as f64).ceil() as usize).max(2);
        let mut residual = 0.0f64;
        for n in steps - tail.min(steps)..=steps {
            let t = n as f64 * g.dt;
            residual = residual.max(boundary(t).abs());
            for j in 0..g.nx {
                residual = residual.max(f(t, self.x(j)).abs());
            }
        }
        if residual > tolerance {
            return Err(Error::Config(format!(
                "data have not decayed by T_max = {t_max}: max |data| over the last 5% is {residual:e}"
            )));
        }
        let ubar: Vec<f64> = (0..=steps).map(|n| boundary(n as f64 * g.dt)).collect();
        let f0: Vec<f64> = (0..=steps).map(|n| f(n as f64 * g.dt, 0.0)).collect();
        let report = check_compatibility(&[ubar[steps]], &ubar, &f0, g.dt, tolerance.max(10.0 * g.dt * g.dt));
        if report.rate_defect > tolerance.max(10.0 * g.dt * g.dt) {
            return Err(Error::Compatibility(format!("ubar' differs from f(·, 0) by {:e}", report.rate_defect)));
        }
        let rev_boundary = |s: f64| boundary(t_max - s);
        let rhs = |s: f64, u: &[f64]| -> Vec<f64> {
            let mut v = u.to_vec();
            v[0] = rev_boundary(s);
            let c = self.convolved_gradient(&v);
            (0..v.len()).map(|j| if j == 0 { 0.0 } else { -f(t_max - s, self.x(j)) - c[j] }).collect()
        };
        let mut u = vec![0.0; g.nx];
        u[0] = rev_boundary(0.0);
        let (times, mut values) = integrate(&rhs, u, g, |s, u| u[0] = rev_boundary(s));
        let recovered = values.last().cloned().unwrap_or_default();
        values.reverse();
        let times = times.iter().rev().map(|s| t_max - s).collect();
        Ok(LeftSolution { field: self.field(times, values), recovered_initial: recovered })
    }
}

/// Classical RK4 on the grid's time line; `fix` re-imposes constraints
/// (boundary values) after every stage and step.
fn integrate(
    rhs: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    mut u: Vec<f64>,
    g: &QuadrantGrid,
    fix: impl Fn(f64, &mut Vec<f64>),
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let steps = g.steps();
    let every = g.output_every.max(1);
    let dt = g.dt;
    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let stage = |u: &[f64], k: &[f64], h: f64| -> Vec<f64> { u.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    for n in 0..steps {
        let t = n as f64 * dt;
        let k1 = rhs(t, &u);
        let mut s = stage(&u, &k1, 0.5 * dt);
        fix(t + 0.5 * dt, &mut s);
        let k2 = rhs(t + 0.5 * dt, &s);
        let mut s = stage(&u, &k2, 0.5 * dt);
        fix(t + 0.5 * dt, &mut s);
        let k3 = rhs(t + 0.5 * dt, &s);
        let mut s = stage(&u, &k3, dt);
        fix(t + dt, &mut s);
        let k4 = rhs(t + dt, &s);
        for i in 0..u.len() {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t1 = (n + 1) as f64 * dt;
        fix(t1, &mut u);
        if (n + 1) % every == 0 {
            times.push(t1);
            values.push(u.clone());
        }
    }
    (times, values)
}

/// Vertical integration line p = a + iξ, ξ ∈ [0, ξ_max], for inverting
/// Laplace transforms of real functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BromwichLine {
    pub abscissa: f64,
    pub step: f64,
    pub points: Vec<Complex64>,
}

impl BromwichLine {
    pub fn new(abscissa: f64, step: f64, xi_max: f64) -> Result<Self> {
        if !(abscissa > 0.0) || !(step > 0.0) || !(xi_max > step) {
            return Err(Error::Config(format!(
                "Bromwich line needs a > 0 and 0 < h < ξ_max (a={abscissa}, h={step}, ξ_max={xi_max})"
            )));
        }
        let n = (xi_max / step).round() as usize;
        Ok(Self { abscissa, step, points: (0..=n).map(|k| Complex64::new(abscissa, k as f64 * step)).collect() })
    }

    /// The default oracle line: Re p = 0.5, h = 0.02, |ξ| ≤ 200.
    pub fn standard() -> Self {
        Self::new(0.5, 0.02, 200.0).expect("valid constants")
    }

    /// (e^{ax}/π) Re ∫_0^{ξ_max} e^{iξx} F(a + iξ) dξ, trapezoid rule.
    pub fn invert(&self, values: &[Complex64], x: f64) -> f64 {
        let mut acc = 0.5 * values[0].re;
        let rot = Complex64::from_polar(1.0, self.step * x);
        let mut phase = rot;
        for v in &values[1..values.len() - 1] {
            acc += (phase * v).re;
            phase *= rot;
        }
        acc += 0.5 * (phase * values[values.len() - 1]).re;
        (self.abscissa * x).exp() / std::f64::consts::PI * self.step * acc
    }

    /// Rough size of the neglected tail, assuming |F| ~ ξ⁻² beyond ξ_max.
    pub fn truncation_bound(&self, values: &[Complex64], x: f64) -> f64 {
        let last = values.last().map_or(0.0, |v| v.norm());
        let xi_max = self.points.last().map_or(0.0, |p| p.im);
        (self.abscissa * x).exp() / std::f64::consts::PI * last * xi_max
    }
}

/// ∫_0^L e^{-px} f(x) dx by composite 8-point Gauss. The panel count is
/// raised so that each panel sees at most two radians of e^{-i Im(p) x}.
pub fn laplace_transform_fn(f: &dyn Fn(f64) -> f64, p: Complex64, length: f64, panels: usize) -> Complex64 {
    let panels = panels.max((p.im.abs() * length / 2.0).ceil() as usize).max(1);
    let h = length / panels as f64;
    let half = 0.5 * h;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let c = (k as f64 + 0.5) * h;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            for y in [c - half * x, c + half * x] {
                acc += *w * (-p * y).exp() * f(y);
            }
        }
    }
    acc * half
}

/// c_a = min over p = a + iξ, |ξ| ≤ ξ_max, of Re(p K̃(p)).
pub fn contraction_rate(kernel: &CausalKernel, a: f64, xi_max: f64, samples: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for k in 0..=samples {
        let p = Complex64::new(a, xi_max * k as f64 / samples as f64);
        let sym = kernel
            .symbol(p)
            .ok_or_else(|| Error::Config("the contraction rate needs an analytic kernel symbol".into()))?;
        best = best.min((p * sym).re);
    }
    Ok(best)
}

/// Transform of the Caputo solution for f = 0 and constant boundary value c:
/// ũ(t, p) = e^{-pK̃t} ũ_in(p) + c (1 - e^{-pK̃t}) / p.
pub fn caputo_transform(symbol: Complex64, p: Complex64, initial_transform: Complex64, c: f64, t: f64) -> Complex64 {
    let e = (-p * symbol * t).exp();
    e * initial_transform + c * (1.0 - e) / p
}
