//! Return to equilibrium: the body is released from rest at δ₀ into still
//! water.
//!
//! Without dispersion the radiated wave is a simple Burgers wave and the
//! exterior reduces to a nonlinear damping 𝔠(δ̇) built from the root σ₀ of
//! σ³ - σ² + r = 0. In the linear dispersive regime the damping becomes a
//! memory term with the kernel J₁(t/κ)/t.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{beta, tau0_sq, tau_mu_sq, BodyGeometry, SimulationParams};
use crate::error::{Error, Result};
use crate::nonlocal::{signal, zero_forcing, zero_signal, CompatibilityMode, NonlocalSolver, QuadrantGrid};
use crate::series::TimeSeries;
use crate::special::{causal_convolve, make_kernel_k0, make_kernel_k1};

/// Largest admissible argument of σ₀.
pub const SIGMA_DOMAIN_LIMIT: f64 = 4.0 / 27.0;

/// Real root of σ³ - σ² + r = 0 on the branch through σ₀(0) = 1; decreasing,
/// with σ₀(4/27) = 2/3.
pub fn sigma0(r: f64) -> Result<f64> {
    if !(r <= SIGMA_DOMAIN_LIMIT) {
        return Err(Error::Domain(format!("σ₀ is defined for r ≤ 4/27, got {r}")));
    }
    // σ = y + 1/3 gives y³ - y/3 + (r - 2/27) = 0.
    let q = r - 2.0 / 27.0;
    let mut s = if r < 0.0 {
        let disc = (0.25 * q * q - 1.0 / 729.0).sqrt();
        1.0 / 3.0 + (-0.5 * q + disc).cbrt() + (-0.5 * q - disc).cbrt()
    } else {
        let theta = (-13.5 * q).clamp(-1.0, 1.0).acos();
        1.0 / 3.0 + 2.0 / 3.0 * (theta / 3.0).cos()
    };
    for _ in 0..3 {
        let d = 3.0 * s * s - 2.0 * s;
        if d.abs() < 1e-6 {
            break;
        }
        let f = s * s * s - s * s + r;
        s -= f / d;
    }
    Ok(s)
}

/// σ₀'(r) = -1 / (3σ₀² - 2σ₀).
pub fn sigma0_derivative(r: f64) -> Result<f64> {
    let s = sigma0(r)?;
    Ok(-1.0 / (3.0 * s * s - 2.0 * s))
}

/// σ₀(r) - 1 without cancellation near r = 0.
pub fn sigma0_minus_one(r: f64) -> Result<f64> {
    if r.abs() < 1e-3 {
        Ok(-r * (1.0 + r * (2.0 + r * (7.0 + r * (30.0 + r * 143.0)))))
    } else {
        Ok(sigma0(r)? - 1.0)
    }
}

const GAMMA_SERIES_THRESHOLD: f64 = 1e-4;

/// γ(εδ̇) in 𝔠(δ̇) = ℓδ̇ + εδ̇²γ(εδ̇); smooth with γ(0) = ℓ²/4.
pub fn gamma(eps_delta_dot: f64, ell: f64) -> Result<f64> {
    let x = eps_delta_dot;
    let r = 0.5 * ell * x;
    if (ell * x).abs() < GAMMA_SERIES_THRESHOLD {
        check_domain(r)?;
        return Ok(0.25 * ell * ell * (1.0 + r * (2.0 + r * (6.0 + r * 22.0))));
    }
    let s = sigma0_minus_one(r)?;
    Ok((-s * (2.0 + 3.0 * s) - ell * x) / (x * x))
}

fn check_domain(r: f64) -> Result<()> {
    if r > SIGMA_DOMAIN_LIMIT {
        return Err(Error::Domain(format!("εℓδ̇/2 = {r} exceeds 4/27: the radiated wave is no longer single-valued")));
    }
    Ok(())
}

/// Non-dispersive damping 𝔠(δ̇) = -(σ₀ - 1)(3σ₀ - 1)/ε with σ₀ = σ₀(εℓδ̇/2).
pub fn cummins_nondispersive(delta_dot: f64, epsilon: f64, ell: f64) -> Result<f64> {
    let x = epsilon * delta_dot;
    check_domain(0.5 * ell * x)?;
    if (ell * x).abs() < GAMMA_SERIES_THRESHOLD {
        return Ok(ell * delta_dot + epsilon * delta_dot * delta_dot * gamma(x, ell)?);
    }
    let s = sigma0_minus_one(0.5 * ell * x)?;
    Ok(-s * (2.0 + 3.0 * s) / epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayRegime {
    NondispersiveNonlinear,
    DispersiveLinear,
    FullCoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrajectory {
    pub delta: TimeSeries,
    pub delta_dot: TimeSeries,
    pub regime: DecayRegime,
    pub params: SimulationParams,
    pub delta0: f64,
}

impl DecayTrajectory {
    /// τ₀(εδ)²δ̇² + δ² along the trajectory.
    pub fn nondispersive_energy(&self, geometry: &BodyGeometry) -> Result<Vec<f64>> {
        let eps = self.params.epsilon;
        self.delta
            .values
            .iter()
            .zip(&self.delta_dot.values)
            .map(|(d, v)| Ok(tau0_sq(&self.params, geometry, eps * d)? * v * v + d * d))
            .collect()
    }

    /// Running ∫ 𝔠(δ̇)δ̇ dt, the energy radiated to the exterior.
    pub fn radiated_energy(&self) -> Result<Vec<f64>> {
        let p = &self.params;
        let mut out = vec![0.0];
        let mut prev = 0.0;
        let dot = &self.delta_dot.values;
        let pw = |v: f64| -> Result<f64> { Ok(cummins_nondispersive(v, p.epsilon, p.ell)? * v) };
        let mut last = pw(dot[0])?;
        for v in &dot[1..] {
            let cur = pw(*v)?;
            prev += 0.5 * self.delta.step * (last + cur);
            out.push(prev);
            last = cur;
        }
        Ok(out)
    }
}

/// Admissibility of the release height: ε|δ₀| < τ₀(ε|δ₀|)·2r₀/ℓ.
pub fn check_release(params: &SimulationParams, geometry: &BodyGeometry, delta0: f64) -> Result<()> {
    let ed = params.epsilon * delta0.abs();
    let tau0 = tau0_sq(params, geometry, params.epsilon * delta0)
        .map_err(|e| Error::Config(format!("release height δ₀ = {delta0}: {e}")))?
        .sqrt();
    let tau_abs = tau0_sq(params, geometry, ed).map_err(|e| Error::Config(e.to_string()))?.sqrt();
    let bound = tau_abs.min(tau0) * 2.0 * SIGMA_DOMAIN_LIMIT / params.ell;
    if !(ed < bound) {
        return Err(Error::Config(format!("release height too large: ε|δ₀| = {ed} ≥ {bound}")));
    }
    Ok(())
}

/// RK4 for τ₀(εδ)²δ̈ + 𝔠(δ̇) + δ - εβ(εδ)δ̇² = 0.
pub fn solve_decay_nondispersive(
    params: &SimulationParams,
    geometry: &BodyGeometry,
    delta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<DecayTrajectory> {
    check_step(t_end, dt)?;
    check_release(params, geometry, delta0)?;
    let eps = params.epsilon;
    let accel = |d: f64, v: f64| -> Result<f64> {
        let ed = eps * d;
        let tau2 = tau0_sq(params, geometry, ed)?;
        let c = cummins_nondispersive(v, eps, params.ell).map_err(|e| match e {
            Error::Domain(_) => Error::Shock { time: f64::NAN, position: params.ell },
            other => other,
        })?;
        Ok((-d - c + eps * beta(geometry, ed)? * v * v) / tau2)
    };
    let n = (t_end / dt).round() as usize;
    let mut d = vec![delta0; n + 1];
    let mut v = vec![0.0; n + 1];
    for k in 0..n {
        let (d0, v0) = (d[k], v[k]);
        let step = || -> Result<(f64, f64)> {
            let a1 = accel(d0, v0)?;
            let (d2, v2) = (d0 + 0.5 * dt * v0, v0 + 0.5 * dt * a1);
            let a2 = accel(d2, v2)?;
            let (d3, v3) = (d0 + 0.5 * dt * v2, v0 + 0.5 * dt * a2);
            let a3 = accel(d3, v3)?;
            let (d4, v4) = (d0 + dt * v3, v0 + dt * a3);
            let a4 = accel(d4, v4)?;
            Ok((d0 + dt / 6.0 * (v0 + 2.0 * v2 + 2.0 * v3 + v4), v0 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)))
        };
        let (dn, vn) = step().map_err(|e| match e {
            Error::Shock { .. } => Error::Shock { time: k as f64 * dt, position: params.ell },
            other => other,
        })?;
        d[k + 1] = dn;
        v[k + 1] = vn;
    }
    Ok(DecayTrajectory {
        delta: TimeSeries::new(0.0, dt, d)?,
        delta_dot: TimeSeries::new(0.0, dt, v)?,
        regime: DecayRegime::NondispersiveNonlinear,
        params: *params,
        delta0,
    })
}

fn check_step(t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Config(format!("need Δt > 0 and T ≥ 0 (Δt={dt}, T={t_end})")));
    }
    Ok(())
}

/// Constants of the linear dispersive Cummins equation
/// (τ_μ² + ℓκ)δ̈ + ℓ K₁ ∗ δ̇ + δ = 0, K₁(t) = J₁(t/κ)/t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCummins {
    /// τ_μ² at the rest position.
    pub inertia: f64,
    pub ell: f64,
    pub kappa: f64,
}

impl LinearCummins {
    pub fn new(params: &SimulationParams, geometry: &BodyGeometry) -> Result<Self> {
        Ok(Self { inertia: tau_mu_sq(params, geometry, 0.0)?, ell: params.ell, kappa: params.kappa })
    }

    /// Leading coefficient τ_μ² + ℓκ.
    pub fn mass(&self) -> f64 {
        self.inertia + self.ell * self.kappa
    }

    fn root(&self, s: Complex64) -> Result<Complex64> {
        let z = 1.0 + self.kappa * self.kappa * s * s;
        if z.norm() < 1e-14 {
            return Err(Error::Domain(format!("s = {s} is a branch point ±i/κ")));
        }
        Ok(z.sqrt())
    }

    /// P(s) = τ_μ²s² + sℓ√(1+κ²s²) + 1.
    pub fn denominator(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.inertia * s * s + s * self.ell * self.root(s)? + 1.0)
    }

    pub fn denominator_derivative(&self, s: Complex64) -> Result<Complex64> {
        let w = self.root(s)?;
        Ok(2.0 * self.inertia * s + self.ell * w + self.ell * self.kappa * self.kappa * s * s / w)
    }

    /// Ĥ(s) = (τ_μ²s + ℓ√(1+κ²s²)) / P(s), so that δ̂ = Ĥ δ₀.
    pub fn transfer_function(&self, s: Complex64) -> Result<Complex64> {
        Ok((self.inertia * s + self.ell * self.root(s)?) / self.denominator(s)?)
    }
}

pub fn transfer_function(s: Complex64, system: &LinearCummins) -> Result<Complex64> {
    system.transfer_function(s)
}

/// Newton's method on P from every seed; returns the distinct converged roots.
pub fn find_poles(system: &LinearCummins, seeds: &[Complex64]) -> Vec<Complex64> {
    let mut roots: Vec<Complex64> = Vec::new();
    for &seed in seeds {
        let mut s = seed;
        let mut converged = false;
        for _ in 0..100 {
            let (Ok(p), Ok(dp)) = (system.denominator(s), system.denominator_derivative(s)) else { break };
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            s -= step;
            if !s.re.is_finite() || s.norm() > 1e6 {
                break;
            }
            if step.norm() < 1e-13 * (1.0 + s.norm()) {
                converged = system.denominator(s).is_ok_and(|v| v.norm() < 1e-10);
                break;
            }
        }
        if converged && !roots.iter().any(|r| (r - s).norm() < 1e-7) {
            roots.push(s);
        }
    }
    roots
}

/// Seeds on an nx × ny grid over [re_min, re_max] × [im_min, im_max].
pub fn seed_grid(re: (f64, f64), im: (f64, f64), nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let a = re.0 + (re.1 - re.0) * (i as f64 + 0.5) / nx as f64;
            let b = im.0 + (im.1 - im.0) * (j as f64 + 0.5) / ny as f64;
            out.push(Complex64::new(a, b));
        }
    }
    out
}

/// Crank-Nicolson for the linear dispersive equation with the memory term
/// by the trapezoid rule over the full history. κ = 0 gives the damped
/// oscillator τ₀²δ̈ + ℓδ̇ + δ = 0.
pub fn solve_decay_dispersive(
    params: &SimulationParams,
    geometry: &BodyGeometry,
    delta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<DecayTrajectory> {
    check_step(t_end, dt)?;
    let sys = LinearCummins::new(&SimulationParams { epsilon: 0.0, ..*params }, geometry)?;
    let kappa = params.kappa;
    let ell = params.ell;
    if kappa > 0.0 && dt > kappa / 8.0 * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!("Δt = {dt} does not resolve the memory kernel (need ≤ κ/8 = {})", kappa / 8.0)));
    }
    let n = (t_end / dt).round() as usize;
    let kernel: Vec<f64> = if kappa > 0.0 { make_kernel_k1(kappa, dt, n as f64 * dt + dt)?.samples } else { Vec::new() };
    let m = sys.mass();
    let mut d = vec![delta0; n + 1];
    let mut v = vec![0.0; n + 1];
    // history[k] = ∫_0^{t_k} K₁(t_k - s) v(s) ds
    let mut hist_prev = 0.0;
    let k0 = kernel.first().copied().unwrap_or(0.0);
    for k in 0..n {
        let (lhs, rhs) = if kappa > 0.0 {
            // Trapezoid history at t_{k+1} without the v_{k+1} term.
            let mut h = 0.5 * kernel[k + 1] * v[0];
            for i in 1..=k {
                h += kernel[k + 1 - i] * v[i];
            }
            h *= dt;
            (
                m / dt + 0.25 * dt + 0.25 * ell * dt * k0,
                m * v[k] / dt - d[k] - 0.25 * dt * v[k] - 0.5 * ell * (hist_prev + h),
            )
        } else {
            (m / dt + 0.25 * dt + 0.5 * ell, m * v[k] / dt - d[k] - 0.25 * dt * v[k] - 0.5 * ell * v[k])
        };
        let vn = rhs / lhs;
        v[k + 1] = vn;
        d[k + 1] = d[k] + 0.5 * dt * (v[k] + vn);
        if kappa > 0.0 {
            let mut h = 0.5 * kernel[k + 1] * v[0];
            for i in 1..=k {
                h += kernel[k + 1 - i] * v[i];
            }
            hist_prev = dt * (h + 0.5 * k0 * vn);
        }
    }
    Ok(DecayTrajectory {
        delta: TimeSeries::new(0.0, dt, d)?,
        delta_dot: TimeSeries::new(0.0, dt, v)?,
        regime: DecayRegime::DispersiveLinear,
        params: *params,
        delta0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through (x, y).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

pub const ENVELOPE_METHOD: &str = "local maxima of |delta| with parabolic refinement, log-linear interpolation between peaks";

/// Peaks of |δ| with parabolic refinement, as (time, value).
pub fn envelope_peaks(delta: &TimeSeries) -> Vec<(f64, f64)> {
    let a: Vec<f64> = delta.values.iter().map(|v| v.abs()).collect();
    let mut peaks = Vec::new();
    for i in 1..a.len().saturating_sub(1) {
        if a[i] > a[i - 1] && a[i] >= a[i + 1] && a[i] > 0.0 {
            let denom = a[i - 1] - 2.0 * a[i] + a[i + 1];
            let (off, val) = if denom < 0.0 {
                let off = 0.5 * (a[i - 1] - a[i + 1]) / denom;
                (off, a[i] - 0.25 * (a[i - 1] - a[i + 1]) * off)
            } else {
                (0.0, a[i])
            };
            peaks.push((delta.time(i) + off * delta.step, val));
        }
    }
    peaks
}

/// Envelope of |δ| at time t; None outside the span of the peaks.
pub fn envelope_at(delta: &TimeSeries, t: f64) -> Option<f64> {
    let peaks = envelope_peaks(delta);
    let k = peaks.windows(2).position(|w| w[0].0 <= t && t <= w[1].0)?;
    let (t0, a0) = peaks[k];
    let (t1, a1) = peaks[k + 1];
    let w = (t - t0) / (t1 - t0);
    Some((a0.ln() * (1.0 - w) + a1.ln() * w).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub regime: DecayRegime,
    pub degenerate: bool,
    pub window: (f64, f64),
    pub envelope_method: String,
    pub peak_count: usize,
    /// ln|δ| envelope ≈ a + λt
    pub exponential_fit: Option<LinearFit>,
    /// ln|δ| envelope ≈ b + s ln t
    pub loglog_fit: Option<LinearFit>,
    /// ∫₀^T (1 + t²) δ² dt
    pub weighted_energy: f64,
}

/// Envelope fits over `window` (default: the last half of the run).
pub fn decay_diagnostics(traj: &DecayTrajectory, window: Option<(f64, f64)>) -> Result<DecayReport> {
    let delta = &traj.delta;
    if delta.end_time() < 20.0 {
        return Err(Error::Config(format!("decay diagnostics need a run of at least 20 time units, got {}", delta.end_time())));
    }
    let window = window.unwrap_or((0.5 * delta.end_time(), delta.end_time()));
    let weighted: Vec<f64> = delta.values.iter().enumerate().map(|(i, d)| (1.0 + delta.time(i).powi(2)) * d * d).collect();
    let weighted_energy = crate::series::trapezoid(&weighted, delta.step);
    let peaks: Vec<(f64, f64)> =
        envelope_peaks(delta).into_iter().filter(|(t, a)| *t >= window.0 && *t <= window.1 && *a > 0.0).collect();
    let degenerate = delta.max_abs() == 0.0 || peaks.len() < 3;
    let (exponential_fit, loglog_fit) = if degenerate {
        (None, None)
    } else {
        let t: Vec<f64> = peaks.iter().map(|p| p.0).collect();
        let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
        let la: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
        (linear_fit(&t, &la), linear_fit(&lt, &la))
    };
    Ok(DecayReport {
        regime: traj.regime,
        degenerate,
        window,
        envelope_method: ENVELOPE_METHOD.to_string(),
        peak_count: peaks.len(),
        exponential_fit,
        loglog_fit,
        weighted_energy,
    })
}

/// Radiated field of the non-dispersive regime, sampled on a (t, x) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurgersField {
    pub t_start: f64,
    pub t_step: f64,
    pub x: Vec<f64>,
    /// q[n][j] = q(t_n, x_j)
    pub q: Vec<Vec<f64>>,
    pub zeta: Vec<Vec<f64>>,
    /// First crossing of characteristics (time, position), if any before T.
    pub shock: Option<(f64, f64)>,
}

/// Propagation speed 3σ₀(-εq/2) - 2 of the value q.
pub fn burgers_speed(q: f64, epsilon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Ok(1.0);
    }
    Ok(3.0 * sigma0(-0.5 * epsilon * q)? - 2.0)
}

/// ζ = (σ₀(-εq/2)² - 1)/ε, with ζ = q at ε = 0.
pub fn burgers_elevation(q: f64, epsilon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Ok(q);
    }
    let s = sigma0_minus_one(-0.5 * epsilon * q)?;
    Ok(s * (2.0 + s) / epsilon)
}

/// Method of characteristics on [ℓ, x_max] for the boundary data q = -ℓδ̇.
/// Rows end before the first characteristic crossing.
pub fn solve_burgers_exterior(
    delta_dot: &TimeSeries,
    params: &SimulationParams,
    x_max: f64,
    dx: f64,
) -> Result<BurgersField> {
    let ell = params.ell;
    let eps = params.epsilon;
    if !(dx > 0.0) || !(x_max > ell) {
        return Err(Error::Config(format!("need Δx > 0 and x_max > ℓ (Δx={dx}, x_max={x_max})")));
    }
    let nt = delta_dot.len();
    let emitted: Vec<f64> = delta_dot.values.iter().map(|v| -ell * v).collect();
    let speed: Vec<f64> = emitted.iter().map(|q| burgers_speed(*q, eps)).collect::<Result<_>>()?;
    let t_end = delta_dot.end_time();
    let mut shock: Option<(f64, f64)> = None;
    for k in 0..nt.saturating_sub(1) {
        let (c0, c1) = (speed[k], speed[k + 1]);
        if c1 > c0 {
            let (t0, t1) = (delta_dot.time(k), delta_dot.time(k + 1));
            let ts = (c1 * t1 - c0 * t0) / (c1 - c0);
            let xs = ell + c0 * (ts - t0);
            if xs <= x_max && ts <= t_end && shock.is_none_or(|(t, _)| ts < t) {
                shock = Some((ts, xs));
            }
        }
    }
    let nx = ((x_max - ell) / dx).round() as usize + 1;
    let x: Vec<f64> = (0..nx).map(|j| ell + j as f64 * dx).collect();
    let rows = match shock {
        Some((ts, _)) => (0..nt).take_while(|n| delta_dot.time(*n) < ts).count(),
        None => nt,
    };
    let mut q = vec![vec![0.0; nx]; rows];
    for (j, xj) in x.iter().enumerate() {
        let arrival: Vec<f64> = (0..nt).map(|k| delta_dot.time(k) + (xj - ell) / speed[k]).collect();
        let mut k = 0;
        for (n, row) in q.iter_mut().enumerate() {
            let t = delta_dot.time(n);
            if t < arrival[0] {
                row[j] = 0.0;
                continue;
            }
            while k + 1 < nt && arrival[k + 1] <= t {
                k += 1;
            }
            row[j] = if k + 1 < nt && arrival[k + 1] > arrival[k] {
                let emit = |tau: f64| -> Result<(f64, f64)> {
                    let qv = cubic_sample(&emitted, delta_dot.start, delta_dot.step, tau);
                    Ok((tau + (xj - ell) / burgers_speed(qv, eps)? - t, qv))
                };
                let (mut a, mut b) = (delta_dot.time(k), delta_dot.time(k + 1));
                let (mut fa, mut fb) = (arrival[k] - t, arrival[k + 1] - t);
                let mut value = emitted[k];
                let mut side = 0;
                for _ in 0..40 {
                    if fb == fa {
                        break;
                    }
                    let c = (a * fb - b * fa) / (fb - fa);
                    let (fc, qc) = emit(c)?;
                    value = qc;
                    if fc.abs() < 1e-14 || (b - a).abs() < 1e-15 {
                        break;
                    }
                    if (fc < 0.0) == (fa < 0.0) {
                        a = c;
                        fa = fc;
                        if side == -1 {
                            fb *= 0.5;
                        }
                        side = -1;
                    } else {
                        b = c;
                        fb = fc;
                        if side == 1 {
                            fa *= 0.5;
                        }
                        side = 1;
                    }
                }
                value
            } else {
                emitted[k]
            };
        }
    }
    let zeta = q
        .iter()
        .map(|row| row.iter().map(|v| burgers_elevation(*v, eps)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    Ok(BurgersField { t_start: delta_dot.start, t_step: delta_dot.step, x, q, zeta, shock })
}

/// Catmull-Rom interpolation of uniformly spaced samples.
fn cubic_sample(values: &[f64], start: f64, step: f64, t: f64) -> f64 {
    let n = values.len();
    let s = ((t - start) / step).clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n.saturating_sub(2));
    let w = s - i as f64;
    let p0 = values[i.saturating_sub(1)];
    let p1 = values[i];
    let p2 = values[(i + 1).min(n - 1)];
    let p3 = values[(i + 2).min(n - 1)];
    p1 + 0.5 * w * (p2 - p0 + w * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + w * (3.0 * (p1 - p2) + p3 - p0)))
}

/// Linear dispersive exterior field, q[i][n] = q(t_n, x_i).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearExterior {
    pub t_step: f64,
    pub x: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub zeta: Vec<Vec<f64>>,
}

/// Solves ∂ₓq + K₀ ∗ₜ ∂ₜq = 0 for x > ℓ with q(t, ℓ) = -ℓδ̇(t), marching in x
/// (the nonlocal solver with the roles of t and x exchanged), then
/// ζ = K₀ ∗ₜ q.
pub fn exterior_reconstruction_linear(
    delta_dot: &TimeSeries,
    params: &SimulationParams,
    x_max: f64,
    x_step: f64,
) -> Result<LinearExterior> {
    let ell = params.ell;
    let dt = delta_dot.step;
    if !(x_max > ell) || !(x_step > 0.0) {
        return Err(Error::Config(format!("need x_max > ℓ and a positive x step (x_max={x_max}, step={x_step})")));
    }
    if delta_dot.values[0].abs() > 1e-12 {
        return Err(Error::Compatibility(format!("δ̇(0) = {} must vanish", delta_dot.values[0])));
    }
    let span = x_max - ell;
    let steps = (span / x_step).round() as usize;
    let x: Vec<f64> = (0..=steps).map(|i| ell + i as f64 * x_step).collect();
    let n = delta_dot.len();
    if params.kappa == 0.0 {
        let q: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| {
                (0..n)
                    .map(|k| {
                        let tau = delta_dot.time(k) - (xi - ell);
                        if tau < delta_dot.start { 0.0 } else { -ell * delta_dot.sample(tau) }
                    })
                    .collect()
            })
            .collect();
        return Ok(LinearExterior { t_step: dt, zeta: q.clone(), x, q });
    }
    let kernel = make_kernel_k0(params.kappa, dt, delta_dot.end_time() + dt)?;
    let grid = QuadrantGrid { dx: dt, nx: n, dt: x_step, t_end: steps as f64 * x_step, output_every: 1 };
    let solver = NonlocalSolver::new(kernel.clone(), grid)?;
    let dd = delta_dot.clone();
    let init = signal(move |t| -ell * dd.sample(t));
    let sol = solver.solve_right_caputo(&init, &zero_signal(), &zero_forcing(), CompatibilityMode::Strict { tolerance: 1e-12 })?;
    let q = sol.field.values;
    let zeta = q
        .iter()
        .map(|row| Ok(causal_convolve(&kernel, &TimeSeries::new(0.0, dt, row.clone())?)?.values))
        .collect::<Result<_>>()?;
    Ok(LinearExterior { t_step: dt, x, q, zeta })
}
