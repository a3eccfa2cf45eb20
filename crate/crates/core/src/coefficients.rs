//! Body geometry, hydrodynamic coefficients, added mass and the interior
//! pressure problem.

use serde::{Deserialize, Serialize};

use crate::elliptic::Tridiagonal;
use crate::error::{Error, Result};
use crate::series::trapezoid_weights;

/// Default number of samples of h_eq across the body.
pub const DEFAULT_GEOMETRY_SAMPLES: usize = 512;

/// Dimensionless parameters. κ is stored; μ = 3κ² is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub epsilon: f64,
    pub kappa: f64,
    pub ell: f64,
    pub tau_buoy: f64,
}

impl SimulationParams {
    pub fn new(epsilon: f64, kappa: f64, ell: f64, tau_buoy: f64) -> Result<Self> {
        let p = Self { epsilon, kappa, ell, tau_buoy };
        p.validate()?;
        Ok(p)
    }

    pub fn from_mu(epsilon: f64, mu: f64, ell: f64, tau_buoy: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return Err(Error::Domain(format!("μ must be nonnegative, got {mu}")));
        }
        Self::new(epsilon, (mu / 3.0).sqrt(), ell, tau_buoy)
    }

    pub fn mu(&self) -> f64 {
        3.0 * self.kappa * self.kappa
    }

    /// Hard checks; returns soft warnings for values outside the weakly
    /// nonlinear, weakly dispersive regime.
    pub fn validate(&self) -> Result<Vec<String>> {
        let finite = [self.epsilon, self.kappa, self.ell, self.tau_buoy].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("parameters must be finite".into()));
        }
        if self.epsilon < 0.0 || self.kappa < 0.0 {
            return Err(Error::Config(format!("ε and κ must be nonnegative (ε={}, κ={})", self.epsilon, self.kappa)));
        }
        if !(self.ell > 0.0) || !(self.tau_buoy > 0.0) {
            return Err(Error::Config(format!("ℓ and τ_buoy must be positive (ℓ={}, τ_buoy={})", self.ell, self.tau_buoy)));
        }
        let mut warnings = vec![];
        if self.epsilon > 1.0 {
            warnings.push(format!("ε = {} lies outside [0, 1]", self.epsilon));
        }
        if self.mu() > 1.0 {
            warnings.push(format!("μ = {} lies outside [0, 1]", self.mu()));
        }
        Ok(warnings)
    }
}

/// Solid unknowns: mean interior discharge, displacement and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolidState {
    pub mean_discharge: f64,
    pub displacement: f64,
    pub velocity: f64,
}

impl SolidState {
    pub fn at_rest(displacement: f64) -> Self {
        Self { mean_discharge: 0.0, displacement, velocity: 0.0 }
    }
}

/// Even equilibrium depth profile on [-ℓ, ℓ], uniformly sampled with the
/// end points included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyGeometry {
    pub ell: f64,
    pub h_eq: Vec<f64>,
    pub mass: f64,
}

impl BodyGeometry {
    pub fn from_samples(ell: f64, h_eq: Vec<f64>) -> Result<Self> {
        if !(ell > 0.0) {
            return Err(Error::Config(format!("half-width must be positive, got {ell}")));
        }
        let n = h_eq.len();
        if n < 3 {
            return Err(Error::Config("geometry needs at least 3 samples".into()));
        }
        for (k, h) in h_eq.iter().enumerate() {
            if !(*h > 0.0) || *h > 1.0 || !h.is_finite() {
                return Err(Error::Config(format!("h_eq must lie in (0, 1], sample {k} is {h}")));
            }
        }
        for k in 0..n / 2 {
            if (h_eq[k] - h_eq[n - 1 - k]).abs() > 1e-12 {
                return Err(Error::Config(format!("h_eq is not even: samples {k} and {} differ", n - 1 - k)));
            }
        }
        let mut g = Self { ell, h_eq, mass: 0.0 };
        g.mass = g.mean(|_, h| 1.0 - h);
        Ok(g)
    }

    /// Samples an even profile given as a function of |x|.
    pub fn from_fn(ell: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if samples < 3 {
            return Err(Error::Config("geometry needs at least 3 samples".into()));
        }
        let mut h = vec![0.0; samples];
        let dx = 2.0 * ell / (samples - 1) as f64;
        for k in 0..samples.div_ceil(2) {
            let x = (ell - k as f64 * dx).max(0.0);
            h[k] = f(x);
            h[samples - 1 - k] = h[k];
        }
        Self::from_samples(ell, h)
    }

    pub fn flat(ell: f64, depth: f64, samples: usize) -> Result<Self> {
        Self::from_fn(ell, samples, |_| depth)
    }

    /// h_eq(x) = centre + (edge - centre)(x/ℓ)².
    pub fn parabolic(ell: f64, centre: f64, edge: f64, samples: usize) -> Result<Self> {
        Self::from_fn(ell, samples, |x| centre + (edge - centre) * (x / ell).powi(2))
    }

    /// Linear interpolation of scattered (x, h) pairs onto a uniform grid;
    /// ℓ is taken from the largest |x|.
    pub fn from_pairs(pairs: &[(f64, f64)], samples: usize) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::Config("geometry table needs at least two rows".into()));
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ell = sorted.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
        let lookup = |x: f64| -> f64 {
            let i = sorted.partition_point(|p| p.0 <= x);
            if i == 0 {
                sorted[0].1
            } else if i == sorted.len() {
                sorted[sorted.len() - 1].1
            } else {
                let (x0, h0) = sorted[i - 1];
                let (x1, h1) = sorted[i];
                h0 + (h1 - h0) * (x - x0) / (x1 - x0)
            }
        };
        let dx = 2.0 * ell / (samples.max(3) - 1) as f64;
        let h = (0..samples.max(3)).map(|k| lookup(-ell + k as f64 * dx)).collect::<Vec<_>>();
        let n = h.len();
        for k in 0..n / 2 {
            let tol = 1e-12;
            if (h[k] - h[n - 1 - k]).abs() > tol {
                return Err(Error::Config(format!("tabulated h_eq is not even near x = {}", -ell + k as f64 * dx)));
            }
        }
        let mut even = h;
        for k in 0..n / 2 {
            even[n - 1 - k] = even[k];
        }
        Self::from_samples(ell, even)
    }

    pub fn len(&self) -> usize {
        self.h_eq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_eq.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.ell / (self.len() - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        -self.ell + k as f64 * self.spacing()
    }

    /// True when the body has zero draft somewhere.
    pub fn is_degenerate(&self) -> bool {
        self.h_eq.iter().any(|h| *h >= 1.0)
    }

    pub fn edge_depth(&self) -> f64 {
        self.h_eq[self.len() - 1]
    }

    /// h_eq at x, linear between samples.
    pub fn depth_at(&self, x: f64) -> Result<f64> {
        if x.abs() > self.ell * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("x = {x} lies outside [-{0}, {0}]", self.ell)));
        }
        let s = ((x + self.ell) / self.spacing()).clamp(0.0, (self.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.len() - 2);
        let w = s - k as f64;
        Ok(self.h_eq[k] * (1.0 - w) + self.h_eq[k + 1] * w)
    }

    /// (1/2ℓ)∫ g(x, h_eq(x)) dx by the trapezoid rule.
    fn mean(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let w = trapezoid_weights(self.len(), self.spacing());
        let s: f64 = (0..self.len()).map(|k| w[k] * g(self.x(k), self.h_eq[k])).sum();
        s / (2.0 * self.ell)
    }

    fn check_clearance(&self, eps_delta: f64) -> Result<()> {
        let hmin = self.h_eq.iter().fold(f64::INFINITY, |m, h| m.min(*h));
        if !(hmin + eps_delta > 0.0) {
            return Err(Error::BottomContact(format!("min h_eq + εδ = {} ≤ 0", hmin + eps_delta)));
        }
        Ok(())
    }
}

/// Archimedes mass (1/2ℓ)∫(1 - h_eq).
pub fn archimedes_mass(geometry: &BodyGeometry) -> f64 {
    geometry.mean(|_, h| 1.0 - h)
}

/// α(εδ) = (1/2ℓ)∫ 1/h_w.
pub fn alpha(geometry: &BodyGeometry, eps_delta: f64) -> Result<f64> {
    geometry.check_clearance(eps_delta)?;
    Ok(geometry.mean(|_, h| 1.0 / (h + eps_delta)))
}

/// α′(εδ) = -(1/2ℓ)∫ 1/h_w².
pub fn alpha_prime(geometry: &BodyGeometry, eps_delta: f64) -> Result<f64> {
    geometry.check_clearance(eps_delta)?;
    Ok(-geometry.mean(|_, h| 1.0 / (h + eps_delta).powi(2)))
}

/// β(εδ) = (1/2)(1/2ℓ)∫ x²/h_w².
pub fn beta(geometry: &BodyGeometry, eps_delta: f64) -> Result<f64> {
    geometry.check_clearance(eps_delta)?;
    Ok(0.5 * geometry.mean(|x, h| x * x / (h + eps_delta).powi(2)))
}

/// Interior average of 1/h_w over the two edges.
pub fn edge_inverse_depth(geometry: &BodyGeometry, eps_delta: f64) -> Result<f64> {
    geometry.check_clearance(eps_delta)?;
    let n = geometry.len();
    Ok(0.5 * (1.0 / (geometry.h_eq[0] + eps_delta) + 1.0 / (geometry.h_eq[n - 1] + eps_delta)))
}

/// τ_μ(εδ)² = τ_buoy² + (1/2ℓ)∫ x²/h_w + κ²⟨1/h_w⟩.
pub fn tau_mu_sq(params: &SimulationParams, geometry: &BodyGeometry, eps_delta: f64) -> Result<f64> {
    geometry.check_clearance(eps_delta)?;
    let inertia = geometry.mean(|x, h| x * x / (h + eps_delta));
    let k2 = params.kappa * params.kappa;
    Ok(params.tau_buoy.powi(2) + inertia + k2 * edge_inverse_depth(geometry, eps_delta)?)
}

/// τ₀(εδ)², the non-dispersive value.
pub fn tau0_sq(params: &SimulationParams, geometry: &BodyGeometry, eps_delta: f64) -> Result<f64> {
    tau_mu_sq(&SimulationParams { kappa: 0.0, ..*params }, geometry, eps_delta)
}

/// The symmetric 2×2 added-mass matrix for a boundary layer of width κ.
pub fn added_mass_matrix(
    params: &SimulationParams,
    geometry: &BodyGeometry,
    eps_delta: f64,
    h_plus: f64,
    h_minus: f64,
) -> Result<[[f64; 2]; 2]> {
    added_mass_matrix_with_layer(params, geometry, eps_delta, h_plus, h_minus, params.kappa)
}

/// As [`added_mass_matrix`], with the boundary-layer width `layer` in place
/// of κ in the exterior contributions (τ_μ² still uses κ).
pub fn added_mass_matrix_with_layer(
    params: &SimulationParams,
    geometry: &BodyGeometry,
    eps_delta: f64,
    h_plus: f64,
    h_minus: f64,
    layer: f64,
) -> Result<[[f64; 2]; 2]> {
    if !(h_plus > 0.0) || !(h_minus > 0.0) {
        return Err(Error::Depth(format!("exterior depth at the contact points: h+ = {h_plus}, h- = {h_minus}")));
    }
    let ell = params.ell;
    let avg = 0.5 * (1.0 / h_plus + 1.0 / h_minus);
    let jump = 1.0 / h_plus - 1.0 / h_minus;
    let a = alpha(geometry, eps_delta)? + layer / ell * avg;
    let b = -0.5 * layer * jump;
    let d = tau_mu_sq(params, geometry, eps_delta)? + ell * layer * avg;
    let det = a * d - b * b;
    if !(det > 1e-12) || !(a > 0.0) {
        return Err(Error::SingularAddedMass(format!("det = {det:e}, leading entry {a}")));
    }
    Ok([[a, b], [b, d]])
}

/// Solves M (x, y)ᵀ = rhs for a symmetric 2×2 matrix.
pub fn solve_2x2(m: &[[f64; 2]; 2], rhs: [f64; 2]) -> [f64; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [(m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det, (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det]
}

/// q_i(x) = ⟨q_i⟩ - x δ̇ under the body.
pub fn interior_discharge(params: &SimulationParams, solid: &SolidState, x: f64) -> Result<f64> {
    if x.abs() > params.ell * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("x = {x} lies outside the body [-{0}, {0}]", params.ell)));
    }
    Ok(solid.mean_discharge - x * solid.velocity)
}

/// ζ_w(x) = δ + (h_eq(x) - 1)/ε. At ε = 0 only a flat-bottomed body of
/// unit equilibrium depth has a finite limit.
pub fn wetted_surface(geometry: &BodyGeometry, params: &SimulationParams, delta: f64, x: f64) -> Result<f64> {
    let h = geometry.depth_at(x)?;
    if params.epsilon == 0.0 {
        if geometry.h_eq.iter().any(|v| (*v - 1.0).abs() > 1e-14) {
            return Err(Error::Config("ε = 0 requires h_eq ≡ 1 for the wetted surface".into()));
        }
        return Ok(delta);
    }
    Ok(delta + (h - 1.0) / params.epsilon)
}

/// Interior contributions (ε/2)(⟨q_i⟩ ∓ ℓδ̇)²/h_w² + κ²δ̈/h_w at x = ±ℓ,
/// returned as (plus, minus).
pub fn interior_boundary_terms(
    params: &SimulationParams,
    geometry: &BodyGeometry,
    solid: &SolidState,
    delta_ddot: f64,
) -> Result<(f64, f64)> {
    let ed = params.epsilon * solid.displacement;
    geometry.check_clearance(ed)?;
    let n = geometry.len();
    let k2 = params.kappa * params.kappa;
    let term = |q: f64, h: f64| 0.5 * params.epsilon * q * q / (h * h) + k2 * delta_ddot / h;
    let hp = geometry.h_eq[n - 1] + ed;
    let hm = geometry.h_eq[0] + ed;
    let ell = params.ell;
    Ok((
        term(solid.mean_discharge - ell * solid.velocity, hp),
        term(solid.mean_discharge + ell * solid.velocity, hm),
    ))
}

/// Solves -(h_w P′)′ = -δ̈ + ε(q_i²/h_w)″ for P = Π_i/ε on the geometry grid,
/// with P(ℓ) = boundary.0 and P(-ℓ) = boundary.1.
pub fn interior_pressure(
    params: &SimulationParams,
    geometry: &BodyGeometry,
    solid: &SolidState,
    delta_ddot: f64,
    boundary: (f64, f64),
) -> Result<Vec<f64>> {
    let ed = params.epsilon * solid.displacement;
    geometry.check_clearance(ed)?;
    let n = geometry.len();
    let dx = geometry.spacing();
    let h: Vec<f64> = geometry.h_eq.iter().map(|v| v + ed).collect();
    let flux: Vec<f64> = (0..n)
        .map(|k| {
            let q = solid.mean_discharge - geometry.x(k) * solid.velocity;
            q * q / h[k]
        })
        .collect();
    let m = n - 2;
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let inv = 1.0 / (dx * dx);
    for i in 0..m {
        let k = i + 1;
        let hl = 0.5 * (h[k - 1] + h[k]);
        let hr = 0.5 * (h[k] + h[k + 1]);
        sub[i] = -hl * inv;
        sup[i] = -hr * inv;
        diag[i] = (hl + hr) * inv;
        rhs[i] = -delta_ddot + params.epsilon * (flux[k + 1] - 2.0 * flux[k] + flux[k - 1]) * inv;
    }
    rhs[0] += 0.5 * (h[0] + h[1]) * inv * boundary.1;
    rhs[m - 1] += 0.5 * (h[n - 2] + h[n - 1]) * inv * boundary.0;
    Tridiagonal::factor(&sub, &diag, &sup)?.solve_in_place(&mut rhs);
    let mut p = Vec::with_capacity(n);
    p.push(boundary.1);
    p.extend(rhs);
    p.push(boundary.0);
    Ok(p)
}


/// Mean of a profile sampled on the geometry grid, (1/2ℓ)∫ f.
pub fn body_mean(geometry: &BodyGeometry, values: &[f64]) -> f64 {
    let w = trapezoid_weights(geometry.len(), geometry.spacing());
    w.iter().zip(values).map(|(a, b)| a * b).sum::<f64>() / (2.0 * geometry.ell)
}

/// Physical inputs for the dimensionless scaling (SI units, mass per unit width).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalInputs {
    pub amplitude: f64,
    pub depth: f64,
    pub wavelength: f64,
    pub half_width: f64,
    pub body_mass: f64,
    pub density: f64,
    pub gravity: f64,
}

/// Dimensionless numbers plus the scales needed to undo them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub epsilon: f64,
    pub mu: f64,
    pub kappa: f64,
    pub ell: f64,
    pub mass: f64,
    pub tau_buoy: f64,
    pub depth: f64,
    pub wavelength: f64,
    pub density: f64,
    pub gravity: f64,
}

pub fn nondimensionalize(input: &PhysicalInputs) -> Result<Scaling> {
    let v = [
        input.amplitude,
        input.depth,
        input.wavelength,
        input.half_width,
        input.body_mass,
        input.density,
        input.gravity,
    ];
    if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::Config("all physical inputs must be positive".into()));
    }
    let epsilon = input.amplitude / input.depth;
    let mu = (input.depth / input.wavelength).powi(2);
    let mass = input.body_mass / (2.0 * input.half_width * input.density * input.depth);
    Ok(Scaling {
        epsilon,
        mu,
        kappa: (mu / 3.0).sqrt(),
        ell: input.half_width / input.wavelength,
        mass,
        tau_buoy: (mu * mass).sqrt(),
        depth: input.depth,
        wavelength: input.wavelength,
        density: input.density,
        gravity: input.gravity,
    })
}

impl Scaling {
    pub fn params(&self) -> SimulationParams {
        SimulationParams { epsilon: self.epsilon, kappa: self.kappa, ell: self.ell, tau_buoy: self.tau_buoy }
    }

    pub fn redimensionalize(&self) -> PhysicalInputs {
        let half_width = self.ell * self.wavelength;
        PhysicalInputs {
            amplitude: self.epsilon * self.depth,
            depth: self.depth,
            wavelength: self.wavelength,
            half_width,
            body_mass: self.mass * 2.0 * half_width * self.density * self.depth,
            density: self.density,
            gravity: self.gravity,
        }
    }

    /// L/√(g h₀).
    pub fn time_scale(&self) -> f64 {
        self.wavelength / (self.gravity * self.depth).sqrt()
    }

    /// a√(g h₀).
    pub fn discharge_scale(&self) -> f64 {
        self.epsilon * self.depth * (self.gravity * self.depth).sqrt()
    }

    /// Surface elevation and displacement scale a.
    pub fn elevation_scale(&self) -> f64 {
        self.epsilon * self.depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_params(kappa: f64) -> SimulationParams {
        SimulationParams { epsilon: 0.1, kappa, ell: 1.0, tau_buoy: 1.0 / 6.0 }
    }

    #[test]
    fn masses() {
        let g = BodyGeometry::flat(2.0, 0.5, 101).unwrap();
        assert!((archimedes_mass(&g) - 0.5).abs() < 1e-14);
        assert!((g.mass - 0.5).abs() < 1e-14);
        let one = BodyGeometry::flat(1.0, 1.0, 11).unwrap();
        assert_eq!(archimedes_mass(&one), 0.0);
        assert!(one.is_degenerate());
        let mut errs = vec![];
        for n in [101, 201] {
            let p = BodyGeometry::parabolic(1.5, 0.5, 0.75, n).unwrap();
            errs.push((archimedes_mass(&p) - (0.5 - 1.0 / 12.0)).abs());
        }
        assert!(errs[1] < 1e-5 && errs[0] / errs[1] > 3.9, "{errs:?}");
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(BodyGeometry::from_samples(1.0, vec![0.5, 0.6, 0.7]).is_err());
        assert!(BodyGeometry::from_samples(1.0, vec![0.5, 1.2, 0.5]).is_err());
        assert!(BodyGeometry::from_samples(1.0, vec![0.5, 0.0, 0.5]).is_err());
    }

    #[test]
    fn alpha_values() {
        let one = BodyGeometry::flat(1.0, 1.0, 65).unwrap();
        assert!((alpha(&one, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((alpha_prime(&one, 0.0).unwrap() + 1.0).abs() < 1e-14);
        let half = BodyGeometry::flat(1.0, 0.5, 65).unwrap();
        assert!((alpha(&half, 0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!((alpha_prime(&half, 0.5).unwrap() + 1.0).abs() < 1e-14);
        assert!((alpha(&half, 0.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((alpha_prime(&half, 0.0).unwrap() + 4.0).abs() < 1e-14);
        assert!(matches!(alpha(&half, -0.5), Err(Error::BottomContact(_))));
    }

    #[test]
    fn tau_and_beta() {
        let g = BodyGeometry::flat(1.0, 1.0, 2001).unwrap();
        let p0 = SimulationParams { epsilon: 0.0, kappa: 0.0, ell: 1.0, tau_buoy: 1.0 / 6.0 };
        assert!((tau_mu_sq(&p0, &g, 0.0).unwrap() - 0.361_111_111).abs() < 1e-6);
        let p = SimulationParams::from_mu(0.0, 0.3, 1.0, 1.0 / 6.0).unwrap();
        assert!((tau_mu_sq(&p, &g, 0.0).unwrap() - 0.461_111_111).abs() < 1e-6);
        assert!((beta(&g, 0.0).unwrap() - 1.0 / 6.0).abs() < 1e-6);
        assert!((tau0_sq(&p, &g, 0.0).unwrap() - 0.361_111_111).abs() < 1e-6);
    }

    #[test]
    fn added_mass_examples() {
        let g = BodyGeometry::flat(1.0, 1.0, 2001).unwrap();
        let p = unit_params(0.0);
        let m = added_mass_matrix(&p, &g, 0.0, 1.2, 0.9).unwrap();
        assert_eq!(m[0][1], 0.0);
        assert!((m[0][0] - 1.0).abs() < 1e-12);
        let p3 = unit_params(0.3);
        let m = added_mass_matrix(&p3, &g, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(m[0][1], 0.0);
        assert!((m[0][0] - 1.3).abs() < 1e-12);
        let t = tau_mu_sq(&p3, &g, 0.0).unwrap();
        assert!((m[1][1] - (t + 0.3)).abs() < 1e-12);
        let asym = added_mass_matrix(&p3, &g, 0.0, 1.1, 0.8).unwrap();
        assert_eq!(asym[0][1], asym[1][0]);
        let x = solve_2x2(&asym, [1.0, 2.0]);
        assert!((asym[0][0] * x[0] + asym[0][1] * x[1] - 1.0).abs() < 1e-13);
        assert!((asym[1][0] * x[0] + asym[1][1] * x[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn discharge_and_wetted_surface() {
        let p = unit_params(0.1);
        assert_eq!(interior_discharge(&p, &SolidState::at_rest(0.3), 0.4).unwrap(), 0.0);
        let z = SolidState { mean_discharge: 2.0, displacement: 0.0, velocity: 1.0 };
        assert_eq!(interior_discharge(&p, &z, 1.0).unwrap(), 1.0);
        let z = SolidState { mean_discharge: 0.0, displacement: 0.0, velocity: 1.0 };
        assert_eq!(interior_discharge(&p, &z, -1.0).unwrap(), 1.0);
        assert!(interior_discharge(&p, &z, 1.5).is_err());

        let flat = BodyGeometry::flat(1.0, 1.0, 33).unwrap();
        assert_eq!(wetted_surface(&flat, &p, 0.2, 0.3).unwrap(), 0.2);
        let g = BodyGeometry::flat(1.0, 0.95, 33).unwrap();
        assert!((wetted_surface(&g, &p, 0.0, 0.1).unwrap() + 0.5).abs() < 1e-12);
        let par = BodyGeometry::parabolic(1.0, 0.9, 0.95, 41).unwrap();
        assert_eq!(wetted_surface(&par, &p, 0.1, 0.35).unwrap(), wetted_surface(&par, &p, 0.1, -0.35).unwrap());
        let p0 = SimulationParams { epsilon: 0.0, ..p };
        assert!(wetted_surface(&par, &p0, 0.1, 0.0).is_err());
        assert_eq!(wetted_surface(&flat, &p0, 0.1, 0.0).unwrap(), 0.1);
    }

    #[test]
    fn rest_pressure_vanishes() {
        let g = BodyGeometry::parabolic(1.0, 0.6, 0.8, 101).unwrap();
        let p = interior_pressure(&unit_params(0.2), &g, &SolidState::default(), 0.0, (0.0, 0.0)).unwrap();
        assert!(p.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pressure_parabola() {
        let hbar = 0.7;
        let ell = 1.3;
        let mut errs = vec![];
        for n in [41, 81] {
            let g = BodyGeometry::flat(ell, hbar, n).unwrap();
            let params = SimulationParams { epsilon: 0.0, kappa: 0.1, ell, tau_buoy: 0.3 };
            let p = interior_pressure(&params, &g, &SolidState::default(), 1.0, (0.0, 0.0)).unwrap();
            let e = (0..n).map(|k| (p[k] - (g.x(k).powi(2) - ell * ell) / (2.0 * hbar)).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        // Constant coefficients: the three-point scheme is exact on quadratics.
        assert!(errs[0] < 1e-12 && errs[1] < 1e-12, "{errs:?}");
    }

    #[test]
    fn pressure_reproduces_newton_equation() {
        // Boundary data built so that the δ equation holds; the mean pressure
        // must then equal τ_buoy²δ̈ + δ.
        let params = SimulationParams { epsilon: 0.2, kappa: 0.25, ell: 1.0, tau_buoy: 0.4 };
        let solid = SolidState { mean_discharge: 0.3, displacement: 0.4, velocity: -0.7 };
        let dd = 0.9;
        let mut errs = vec![];
        for n in [101, 201, 401] {
            let g = BodyGeometry::parabolic(1.0, 0.5, 0.8, n).unwrap();
            let ed = params.epsilon * solid.displacement;
            let exterior_mean = tau_mu_sq(&params, &g, ed).unwrap() * dd + solid.displacement
                - params.epsilon * beta(&g, ed).unwrap() * solid.velocity.powi(2)
                - 0.5 * params.epsilon * alpha_prime(&g, ed).unwrap() * solid.mean_discharge.powi(2);
            let exterior_jump = 0.37;
            let (gp, gm) = interior_boundary_terms(&params, &g, &solid, dd).unwrap();
            let bp = exterior_mean + 0.5 * exterior_jump - gp;
            let bm = exterior_mean - 0.5 * exterior_jump - gm;
            let p = interior_pressure(&params, &g, &solid, dd, (bp, bm)).unwrap();
            let lhs = body_mean(&g, &p);
            errs.push((lhs - (params.tau_buoy.powi(2) * dd + solid.displacement)).abs());
        }
        assert!(errs[2] < 1e-4, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn scaling_examples() {
        let input = PhysicalInputs {
            amplitude: 0.1,
            depth: 1.0,
            wavelength: 10.0,
            half_width: 2.0,
            body_mass: 1200.0,
            density: 1000.0,
            gravity: 9.81,
        };
        let s = nondimensionalize(&input).unwrap();
        assert!((s.epsilon - 0.1).abs() < 1e-15);
        assert!((s.mu - 0.01).abs() < 1e-15);
        assert!((s.kappa - 0.057_735_026_918_962_58).abs() < 1e-12);
        let back = s.redimensionalize();
        for (a, b) in [
            (back.amplitude, input.amplitude),
            (back.half_width, input.half_width),
            (back.body_mass, input.body_mass),
            (back.wavelength, input.wavelength),
        ] {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
        // A rectangular box of draft d floats with h_eq = 1 - d/h0.
        let draft = 0.3;
        let boxed = PhysicalInputs { body_mass: 1000.0 * 2.0 * 2.0 * draft, ..input };
        let sb = nondimensionalize(&boxed).unwrap();
        let g = BodyGeometry::flat(sb.ell, 1.0 - draft, 65).unwrap();
        assert!((sb.mass - archimedes_mass(&g)).abs() < 1e-14);
        assert!((sb.tau_buoy.powi(2) - sb.mu * sb.mass).abs() < 1e-15);
        assert!(nondimensionalize(&PhysicalInputs { depth: 0.0, ..input }).is_err());
    }

    proptest! {
        #[test]
        fn alpha_decreasing(centre in 0.2f64..0.9, edge in 0.2f64..0.9, ed in -0.15f64..0.5, step in 1e-3f64..0.2) {
            let g = BodyGeometry::parabolic(1.0, centre, edge, 65).unwrap();
            prop_assert!(alpha(&g, ed + step).unwrap() < alpha(&g, ed).unwrap());
            prop_assert!(alpha_prime(&g, ed).unwrap() < 0.0);
        }

        #[test]
        fn dispersion_adds_mass(centre in 0.2f64..0.9, edge in 0.2f64..0.9, kappa in 0.0f64..0.6, ed in -0.1f64..0.3) {
            let g = BodyGeometry::parabolic(1.0, centre, edge, 65).unwrap();
            let p = SimulationParams { epsilon: 0.1, kappa, ell: 1.0, tau_buoy: 0.2 };
            let hmax = g.h_eq.iter().fold(0.0f64, |m, h| m.max(*h)) + ed;
            let t = tau_mu_sq(&p, &g, ed).unwrap();
            prop_assert!(t >= p.tau_buoy.powi(2) + kappa * kappa / hmax - 1e-14);
            prop_assert!(t > p.tau_buoy.powi(2));
        }

        #[test]
        fn added_mass_symmetric_positive(hp in 0.3f64..2.0, hm in 0.3f64..2.0, kappa in 0.0f64..1.0) {
            let g = BodyGeometry::flat(1.0, 0.8, 33).unwrap();
            let p = SimulationParams { epsilon: 0.1, kappa, ell: 1.0, tau_buoy: 0.2 };
            let m = added_mass_matrix(&p, &g, 0.0, hp, hm).unwrap();
            prop_assert_eq!(m[0][1], m[1][0]);
            prop_assert!(m[0][0] * m[1][1] - m[0][1] * m[0][1] > 0.0);
        }
    }
}
