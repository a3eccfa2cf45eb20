//! Coupled exterior-wave / floating-body solver.
//!
//! Each half-line carries the elevation ζ on cells y_{k+1/2} and the discharge
//! q on nodes y_k, with y the distance to the contact point. The contact value
//! q_0 is the trace entering the transmission conditions and the far node is
//! a wall. The momentum update uses the cell Neumann inverse of (1 - κ²∂²)
//! followed by a node difference, which is the discrete form of ∂ₓR₁, and the
//! boundary forcing is carried by the discrete boundary-layer profile. With
//! ε = 0 this assembly conserves the discrete energy exactly in continuous
//! time.

use serde::{Deserialize, Serialize};

use crate::coefficients::{
    added_mass_matrix_with_layer, alpha, alpha_prime, beta, solve_2x2, tau_mu_sq, BodyGeometry,
    SimulationParams, SolidState,
};
use crate::elliptic::{
    boundary_layer_profile, check_resolution, effective_layer_width, Closure, HalfLineGrid, HelmholtzSolver,
    Orientation,
};
use crate::error::{Error, Result};
use crate::series::trapezoid_weights;

/// ε-regular shallow-water flux ζ + ε(ζ²/2 + q²/h).
pub fn shallow_flux(zeta: f64, q: f64, epsilon: f64) -> Result<f64> {
    let h = 1.0 + epsilon * zeta;
    if !(h > 0.0) {
        return Err(Error::Depth(format!("h = {h} at ζ = {zeta}")));
    }
    Ok(zeta + epsilon * (0.5 * zeta * zeta + q * q / h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Exterior fields: ζ on N-1 cells and q on N nodes, per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorState {
    pub zeta_plus: HalfLineGrid,
    pub q_plus: HalfLineGrid,
    pub zeta_minus: HalfLineGrid,
    pub q_minus: HalfLineGrid,
}

impl ExteriorState {
    pub fn from_arrays(
        ell: f64,
        spacing: f64,
        zeta_plus: Vec<f64>,
        q_plus: Vec<f64>,
        zeta_minus: Vec<f64>,
        q_minus: Vec<f64>,
    ) -> Result<Self> {
        let n = q_plus.len();
        if q_minus.len() != n || zeta_plus.len() + 1 != n || zeta_minus.len() + 1 != n {
            return Err(Error::Config(format!(
                "exterior arrays must have N nodes and N-1 cells on both sides (got {}, {}, {}, {})",
                zeta_plus.len(),
                q_plus.len(),
                zeta_minus.len(),
                q_minus.len()
            )));
        }
        Ok(Self {
            zeta_plus: HalfLineGrid::cells(ell, Orientation::Rightward, spacing, zeta_plus)?,
            q_plus: HalfLineGrid::nodes(ell, Orientation::Rightward, spacing, q_plus)?,
            zeta_minus: HalfLineGrid::cells(-ell, Orientation::Leftward, spacing, zeta_minus)?,
            q_minus: HalfLineGrid::nodes(-ell, Orientation::Leftward, spacing, q_minus)?,
        })
    }

    pub fn rest(ell: f64, spacing: f64, nodes: usize) -> Result<Self> {
        Self::from_arrays(ell, spacing, vec![0.0; nodes - 1], vec![0.0; nodes], vec![0.0; nodes - 1], vec![0.0; nodes])
    }

    /// Samples ζ(x) at cell centres and q(x) at nodes, x the physical abscissa.
    pub fn from_fns(
        ell: f64,
        spacing: f64,
        nodes: usize,
        zeta: impl Fn(f64) -> f64,
        q: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let cell = |s: f64, k: usize| s * (ell + (k as f64 + 0.5) * spacing);
        let node = |s: f64, k: usize| s * (ell + k as f64 * spacing);
        Self::from_arrays(
            ell,
            spacing,
            (0..nodes - 1).map(|k| zeta(cell(1.0, k))).collect(),
            (0..nodes).map(|k| q(node(1.0, k))).collect(),
            (0..nodes - 1).map(|k| zeta(cell(-1.0, k))).collect(),
            (0..nodes).map(|k| q(node(-1.0, k))).collect(),
        )
    }

    pub fn nodes(&self) -> usize {
        self.q_plus.len()
    }

    pub fn spacing(&self) -> f64 {
        self.q_plus.spacing
    }

    pub fn zeta(&self, side: Side) -> &[f64] {
        match side {
            Side::Plus => &self.zeta_plus.values,
            Side::Minus => &self.zeta_minus.values,
        }
    }

    pub fn q(&self, side: Side) -> &[f64] {
        match side {
            Side::Plus => &self.q_plus.values,
            Side::Minus => &self.q_minus.values,
        }
    }

    /// ⟨q⟩ at the contact points.
    pub fn mean_discharge(&self) -> f64 {
        0.5 * (self.q_plus.values[0] + self.q_minus.values[0])
    }

    /// ⟦q⟧ = q(ℓ) - q(-ℓ).
    pub fn discharge_jump(&self) -> f64 {
        self.q_plus.values[0] - self.q_minus.values[0]
    }

    /// Second-order extrapolation of ζ to the contact point.
    pub fn zeta_trace(&self, side: Side) -> f64 {
        let z = self.zeta(side);
        1.5 * z[0] - 0.5 * z[1]
    }

    /// ζ interpolated to nodes (extrapolated at the contact point).
    pub fn zeta_at_nodes(&self, side: Side) -> Vec<f64> {
        let z = self.zeta(side);
        let n = self.nodes();
        let mut out = vec![0.0; n];
        out[0] = self.zeta_trace(side);
        for j in 1..n - 1 {
            out[j] = 0.5 * (z[j - 1] + z[j]);
        }
        out[n - 1] = z[n - 2];
        out
    }

    /// (x, ζ, q) at every node of one side, ordered away from the body.
    pub fn node_rows(&self, side: Side) -> Vec<[f64; 3]> {
        let zn = self.zeta_at_nodes(side);
        let grid = match side {
            Side::Plus => &self.q_plus,
            Side::Minus => &self.q_minus,
        };
        (0..self.nodes()).map(|j| [grid.position(j), zn[j], grid.values[j]]).collect()
    }

    pub fn max_abs_zeta(&self) -> f64 {
        self.zeta_plus.values.iter().chain(&self.zeta_minus.values).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_zeta_slope(&self) -> f64 {
        let dx = self.spacing();
        [&self.zeta_plus.values, &self.zeta_minus.values]
            .iter()
            .flat_map(|z| z.windows(2).map(|w| ((w[1] - w[0]) / dx).abs()))
            .fold(0.0, f64::max)
    }

    /// Largest deviation from ζ(-x) = ζ(x), q(-x) = -q(x).
    pub fn mirror_defect(&self) -> f64 {
        let a = self.zeta_plus.values.iter().zip(&self.zeta_minus.values).map(|(p, m)| (p - m).abs());
        let b = self.q_plus.values.iter().zip(&self.q_minus.values).map(|(p, m)| (p + m).abs());
        a.chain(b).fold(0.0, f64::max)
    }

    fn check_depth(&self, epsilon: f64) -> Result<f64> {
        let mut hmax = 1.0f64;
        for z in self.zeta_plus.values.iter().chain(&self.zeta_minus.values) {
            let h = 1.0 + epsilon * z;
            if !(h > 0.0) {
                return Err(Error::Depth(format!("exterior depth h = {h}")));
            }
            hmax = hmax.max(h);
        }
        Ok(hmax)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledState {
    pub exterior: ExteriorState,
    pub solid: SolidState,
    pub time: f64,
}

impl CoupledState {
    /// Still water around a body released at displacement δ₀.
    pub fn return_to_equilibrium(ell: f64, spacing: f64, nodes: usize, delta0: f64) -> Result<Self> {
        Ok(Self { exterior: ExteriorState::rest(ell, spacing, nodes)?, solid: SolidState::at_rest(delta0), time: 0.0 })
    }

    /// (|⟨q⟩ - ⟨q_i⟩|, |⟦q⟧ + 2ℓδ̇|).
    pub fn transmission_defects(&self, ell: f64) -> (f64, f64) {
        (
            (self.exterior.mean_discharge() - self.solid.mean_discharge).abs(),
            (self.exterior.discharge_jump() + 2.0 * ell * self.solid.velocity).abs(),
        )
    }
}

/// Time derivative of the exterior fields, same layout as [`ExteriorState`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorDerivative {
    pub zeta_plus: Vec<f64>,
    pub q_plus: Vec<f64>,
    pub zeta_minus: Vec<f64>,
    pub q_minus: Vec<f64>,
}

impl ExteriorDerivative {
    pub fn q(&self, side: Side) -> &[f64] {
        match side {
            Side::Plus => &self.q_plus,
            Side::Minus => &self.q_minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub exterior: ExteriorDerivative,
    /// d⟨q_i⟩/dt
    pub mean_discharge_rate: f64,
    pub velocity: f64,
    /// δ̈
    pub acceleration: f64,
}

/// Contact-point values of 𝔥 and the field itself on cells.
#[derive(Debug, Clone, PartialEq)]
pub struct HFunctional {
    pub plus: f64,
    pub minus: f64,
    pub field_plus: Vec<f64>,
    pub field_minus: Vec<f64>,
}

impl HFunctional {
    pub fn average(&self) -> f64 {
        0.5 * (self.plus + self.minus)
    }

    pub fn jump(&self) -> f64 {
        self.plus - self.minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_ext: f64,
    pub e_int: f64,
    /// ∫𝕽 over both half-lines.
    pub residual_integral: f64,
    /// εκ²ℓ⟨1/h_w²⟩δ̇³
    pub cubic_boundary_term: f64,
    /// d/dt(E_ext + E_int) + cubic term - 3εκ²∫𝕽.
    pub balance_defect: f64,
}

impl EnergyReport {
    pub fn total(&self) -> f64 {
        self.e_ext + self.e_int
    }
}

struct SideTerms {
    dzeta: Vec<f64>,
    /// -∂ₓR₁f at nodes, zero at both ends.
    b: Vec<f64>,
    r: Vec<f64>,
    h_contact: f64,
    h_value: f64,
}

/// Precomputed operators for one grid and parameter set.
#[derive(Debug, Clone)]
pub struct TransmissionSolver {
    pub params: SimulationParams,
    pub geometry: BodyGeometry,
    pub spacing: f64,
    pub nodes: usize,
    cell_solver: HelmholtzSolver,
    profile: Vec<f64>,
    layer: f64,
}

impl TransmissionSolver {
    pub fn new(params: SimulationParams, geometry: BodyGeometry, spacing: f64, nodes: usize) -> Result<Self> {
        params.validate()?;
        if (geometry.ell - params.ell).abs() > 1e-12 * params.ell {
            return Err(Error::Config(format!("geometry half-width {} differs from ℓ = {}", geometry.ell, params.ell)));
        }
        if nodes < 4 {
            return Err(Error::Config("need at least 4 nodes per side".into()));
        }
        check_resolution(spacing, (nodes - 1) as f64 * spacing, params.kappa)?;
        let cell_solver = HelmholtzSolver::new(Closure::NeumannCells, nodes - 1, spacing, params.kappa)?;
        let profile = boundary_layer_profile(nodes, spacing, params.kappa)?;
        let layer = effective_layer_width(&profile, spacing, params.kappa);
        Ok(Self { params, geometry, spacing, nodes, cell_solver, profile, layer })
    }

    /// Discrete boundary-layer profile, 1 at the contact point.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Effective width replacing κ in the added-mass matrix.
    pub fn layer_width(&self) -> f64 {
        self.layer
    }

    fn check_layout(&self, ext: &ExteriorState) -> Result<()> {
        if ext.nodes() != self.nodes || (ext.spacing() - self.spacing).abs() > 1e-14 * self.spacing {
            return Err(Error::Config(format!(
                "state grid ({} nodes, Δx = {}) does not match the solver ({} nodes, Δx = {})",
                ext.nodes(),
                ext.spacing(),
                self.nodes,
                self.spacing
            )));
        }
        Ok(())
    }

    fn side_terms(&self, zeta: &[f64], q: &[f64], sign: f64) -> Result<SideTerms> {
        let eps = self.params.epsilon;
        let m = self.nodes - 1;
        let dx = self.spacing;
        let mut f = vec![0.0; m];
        let mut dzeta = vec![0.0; m];
        for c in 0..m {
            let qc = 0.5 * (q[c] + q[c + 1]);
            f[c] = shallow_flux(zeta[c], qc, eps)?;
            dzeta[c] = -sign * (q[c + 1] - q[c]) / dx;
        }
        let r = self.cell_solver.solve(&f);
        let mut b = vec![0.0; self.nodes];
        for j in 1..m {
            b[j] = -sign * (r[j] - r[j - 1]) / dx;
        }
        let zb = 1.5 * zeta[0] - 0.5 * zeta[1];
        let hb = 1.0 + eps * zb;
        if !(hb > 0.0) {
            return Err(Error::Depth(format!("contact-point depth h = {hb}")));
        }
        let h_value = 0.5 * eps * (zb * zb / hb - q[0] * q[0] / (hb * hb)) + r[0] / hb;
        Ok(SideTerms { dzeta, b, r, h_contact: hb, h_value })
    }

    /// 𝔥 at both contact points and on the cells.
    pub fn h_functional(&self, ext: &ExteriorState) -> Result<HFunctional> {
        self.check_layout(ext)?;
        let eps = self.params.epsilon;
        let field = |side: Side, t: &SideTerms| -> Vec<f64> {
            let z = ext.zeta(side);
            let q = ext.q(side);
            (0..self.nodes - 1)
                .map(|c| {
                    let h = 1.0 + eps * z[c];
                    let qc = 0.5 * (q[c] + q[c + 1]);
                    0.5 * eps * (z[c] * z[c] / h - qc * qc / (h * h)) + t.r[c] / h
                })
                .collect()
        };
        let tp = self.side_terms(ext.zeta(Side::Plus), ext.q(Side::Plus), 1.0)?;
        let tm = self.side_terms(ext.zeta(Side::Minus), ext.q(Side::Minus), -1.0)?;
        Ok(HFunctional {
            plus: tp.h_value,
            minus: tm.h_value,
            field_plus: field(Side::Plus, &tp),
            field_minus: field(Side::Minus, &tm),
        })
    }

    fn solve_solid(&self, solid: &SolidState, hp: f64, hm: f64, h_plus: f64, h_minus: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        let ed = p.epsilon * solid.displacement;
        let m = added_mass_matrix_with_layer(p, &self.geometry, ed, h_plus, h_minus, self.layer)?;
        if !(m[1][1] > 0.0) {
            return Err(Error::SingularAddedMass(format!("indefinite added mass, entry {}", m[1][1])));
        }
        let ap = alpha_prime(&self.geometry, ed)?;
        let avg = 0.5 * (hp + hm);
        let jump = hp - hm;
        let rhs = [
            -p.epsilon * ap * solid.velocity * solid.mean_discharge - jump / (2.0 * p.ell),
            -solid.displacement
                + p.epsilon * beta(&self.geometry, ed)? * solid.velocity.powi(2)
                + 0.5 * p.epsilon * ap * solid.mean_discharge.powi(2)
                + avg,
        ];
        let x = solve_2x2(&m, rhs);
        Ok((x[0], x[1]))
    }

    /// (d⟨q_i⟩/dt, δ̈) from the 2×2 added-mass system.
    pub fn solid_rhs(&self, state: &CoupledState) -> Result<(f64, f64)> {
        self.check_layout(&state.exterior)?;
        let ext = &state.exterior;
        let tp = self.side_terms(ext.zeta(Side::Plus), ext.q(Side::Plus), 1.0)?;
        let tm = self.side_terms(ext.zeta(Side::Minus), ext.q(Side::Minus), -1.0)?;
        self.solve_solid(&state.solid, tp.h_value, tm.h_value, tp.h_contact, tm.h_contact)
    }

    pub fn coupled_rhs(&self, state: &CoupledState) -> Result<StateDerivative> {
        self.check_layout(&state.exterior)?;
        let ext = &state.exterior;
        let ed = self.params.epsilon * state.solid.displacement;
        let hmin = self.geometry.h_eq.iter().fold(f64::INFINITY, |m, h| m.min(*h));
        if !(hmin + ed > 0.0) {
            return Err(Error::BottomContact(format!("h_eq + εδ = {} at t = {}", hmin + ed, state.time)));
        }
        let tp = self.side_terms(ext.zeta(Side::Plus), ext.q(Side::Plus), 1.0)?;
        let tm = self.side_terms(ext.zeta(Side::Minus), ext.q(Side::Minus), -1.0)?;
        let (qdot, dd) = self.solve_solid(&state.solid, tp.h_value, tm.h_value, tp.h_contact, tm.h_contact)?;
        let ell = self.params.ell;
        let forced = |t: SideTerms, amp: f64| -> (Vec<f64>, Vec<f64>) {
            let mut b = t.b;
            for (bj, e) in b.iter_mut().zip(&self.profile) {
                *bj += amp * e;
            }
            (t.dzeta, b)
        };
        let (zp, qp) = forced(tp, qdot - ell * dd);
        let (zm, qm) = forced(tm, qdot + ell * dd);
        Ok(StateDerivative {
            exterior: ExteriorDerivative { zeta_plus: zp, q_plus: qp, zeta_minus: zm, q_minus: qm },
            mean_discharge_rate: qdot,
            velocity: state.solid.velocity,
            acceleration: dd,
        })
    }

    /// Exterior derivative with prescribed ⟨q⟩ = f and ⟦q⟧ = 2g.
    pub fn prescribed_rhs(&self, ext: &ExteriorState, f_dot: f64, g_dot: f64) -> Result<ExteriorDerivative> {
        self.check_layout(ext)?;
        ext.check_depth(self.params.epsilon)?;
        let tp = self.side_terms(ext.zeta(Side::Plus), ext.q(Side::Plus), 1.0)?;
        let tm = self.side_terms(ext.zeta(Side::Minus), ext.q(Side::Minus), -1.0)?;
        let add = |mut b: Vec<f64>, amp: f64| {
            for (bj, e) in b.iter_mut().zip(&self.profile) {
                *bj += amp * e;
            }
            b
        };
        Ok(ExteriorDerivative {
            q_plus: add(tp.b, f_dot + g_dot),
            q_minus: add(tm.b, f_dot - g_dot),
            zeta_plus: tp.dzeta,
            zeta_minus: tm.dzeta,
        })
    }

    /// Largest Δt allowed by the CFL constant `cfl` for this state.
    pub fn max_stable_step(&self, ext: &ExteriorState, cfl: f64) -> Result<f64> {
        let hmax = ext.check_depth(self.params.epsilon)?;
        Ok(cfl * self.spacing / hmax.sqrt())
    }

    /// One classical RK4 step.
    pub fn step(&self, state: &CoupledState, dt: f64, cfl: f64) -> Result<CoupledState> {
        let limit = self.max_stable_step(&state.exterior, cfl)?;
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!("Δt = {dt} exceeds the CFL limit {limit}")));
        }
        let k1 = self.coupled_rhs(state)?;
        let s2 = advance(state, &k1, 0.5 * dt);
        let k2 = self.coupled_rhs(&s2)?;
        let s3 = advance(state, &k2, 0.5 * dt);
        let k3 = self.coupled_rhs(&s3)?;
        let s4 = advance(state, &k3, dt);
        let k4 = self.coupled_rhs(&s4)?;
        let mut next = state.clone();
        let w = dt / 6.0;
        let ext = &mut next.exterior;
        let comb = |x: &mut [f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| {
            for i in 0..x.len() {
                x[i] += w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
            }
        };
        let e = |k: &StateDerivative| k.exterior.clone();
        let (e1, e2, e3, e4) = (e(&k1), e(&k2), e(&k3), e(&k4));
        comb(&mut ext.zeta_plus.values, &e1.zeta_plus, &e2.zeta_plus, &e3.zeta_plus, &e4.zeta_plus);
        comb(&mut ext.q_plus.values, &e1.q_plus, &e2.q_plus, &e3.q_plus, &e4.q_plus);
        comb(&mut ext.zeta_minus.values, &e1.zeta_minus, &e2.zeta_minus, &e3.zeta_minus, &e4.zeta_minus);
        comb(&mut ext.q_minus.values, &e1.q_minus, &e2.q_minus, &e3.q_minus, &e4.q_minus);
        let s = &mut next.solid;
        s.mean_discharge += w
            * (k1.mean_discharge_rate + 2.0 * k2.mean_discharge_rate + 2.0 * k3.mean_discharge_rate + k4.mean_discharge_rate);
        s.displacement += w * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
        s.velocity += w * (k1.acceleration + 2.0 * k2.acceleration + 2.0 * k3.acceleration + k4.acceleration);
        next.time = state.time + dt;
        Ok(next)
    }

    /// Discrete exterior energy ½∫(ζ² + q²/h + κ²(∂ₓq)²/h).
    pub fn exterior_energy(&self, ext: &ExteriorState) -> Result<f64> {
        let eps = self.params.epsilon;
        let k2 = self.params.kappa.powi(2);
        let dx = self.spacing;
        let w = trapezoid_weights(self.nodes, dx);
        let mut e = 0.0;
        for side in [Side::Plus, Side::Minus] {
            let z = ext.zeta(side);
            let q = ext.q(side);
            let zn = ext.zeta_at_nodes(side);
            for c in 0..self.nodes - 1 {
                let h = 1.0 + eps * z[c];
                if !(h > 0.0) {
                    return Err(Error::Depth(format!("exterior depth h = {h}")));
                }
                let dq = (q[c + 1] - q[c]) / dx;
                e += 0.5 * dx * (z[c] * z[c] + k2 * dq * dq / h);
            }
            for j in 0..self.nodes {
                let h = 1.0 + eps * zn[j];
                e += 0.5 * w[j] * q[j] * q[j] / h;
            }
        }
        Ok(e)
    }

    /// ℓ(δ² + τ_μ²δ̇² + α⟨q_i⟩²).
    pub fn interior_energy(&self, solid: &SolidState) -> Result<f64> {
        let ed = self.params.epsilon * solid.displacement;
        Ok(self.params.ell
            * (solid.displacement.powi(2)
                + tau_mu_sq(&self.params, &self.geometry, ed)? * solid.velocity.powi(2)
                + alpha(&self.geometry, ed)? * solid.mean_discharge.powi(2)))
    }

    fn total_energy(&self, state: &CoupledState) -> Result<f64> {
        Ok(self.exterior_energy(&state.exterior)? + self.interior_energy(&state.solid)?)
    }

    /// Energy diagnostics; the time derivative of the energy is taken by a
    /// centred difference along the current right-hand side.
    pub fn energy_report(&self, state: &CoupledState) -> Result<EnergyReport> {
        let rhs = self.coupled_rhs(state)?;
        let eps = self.params.epsilon;
        let k2 = self.params.kappa.powi(2);
        let dx = self.spacing;
        let ext = &state.exterior;
        let mut residual = 0.0;
        for side in [Side::Plus, Side::Minus] {
            let s = side.sign();
            let z = ext.zeta(side);
            let q = ext.q(side);
            let qt = rhs.exterior.q(side);
            let m = self.nodes - 1;
            for c in 0..m {
                let h = 1.0 + eps * z[c];
                let dq = (q[c + 1] - q[c]) / dx;
                let dqt = (qt[c + 1] - qt[c]) / dx;
                let dz = if c == 0 {
                    (-3.0 * z[0] + 4.0 * z[1] - z[2]) / (2.0 * dx)
                } else if c == m - 1 {
                    (3.0 * z[m - 1] - 4.0 * z[m - 2] + z[m - 3]) / (2.0 * dx)
                } else {
                    (z[c + 1] - z[c - 1]) / (2.0 * dx)
                };
                let qc = 0.5 * (q[c] + q[c + 1]);
                residual += dx * (s * dq.powi(3) / (6.0 * h * h) + qc * dqt * dz / (3.0 * h * h));
            }
        }
        let ed = eps * state.solid.displacement;
        let n = self.geometry.len();
        let inv_sq = 0.5 * ((self.geometry.h_eq[0] + ed).powi(-2) + (self.geometry.h_eq[n - 1] + ed).powi(-2));
        let cubic = eps * k2 * self.params.ell * inv_sq * state.solid.velocity.powi(3);
        let eta = 1e-5;
        let plus = self.total_energy(&advance(state, &rhs, eta))?;
        let minus = self.total_energy(&advance(state, &rhs, -eta))?;
        let rate = (plus - minus) / (2.0 * eta);
        let e_ext = self.exterior_energy(ext)?;
        let e_int = self.interior_energy(&state.solid)?;
        Ok(EnergyReport {
            e_ext,
            e_int,
            residual_integral: residual,
            cubic_boundary_term: cubic,
            balance_defect: rate + cubic - 3.0 * eps * k2 * residual,
        })
    }

    /// Rejects initial data that violate the transmission conditions.
    pub fn check_initial(&self, state: &CoupledState, tolerance: f64) -> Result<()> {
        self.check_layout(&state.exterior)?;
        let (a, b) = state.transmission_defects(self.params.ell);
        if a > tolerance || b > tolerance {
            return Err(Error::Transmission(format!(
                "initial data: |⟨q⟩ - ⟨q_i⟩| = {a:e}, |⟦q⟧ + 2ℓδ̇| = {b:e}"
            )));
        }
        state.exterior.check_depth(self.params.epsilon)?;
        Ok(())
    }

    /// Integrates from `initial` and records diagnostics along the way.
    pub fn run(&self, initial: &CoupledState, settings: &RunSettings) -> Result<RunOutput> {
        settings.validate()?;
        self.check_initial(initial, settings.transmission_tolerance)?;
        let steps = (settings.t_end / settings.dt).round() as usize;
        let mut out = RunOutput::default();
        let mut state = initial.clone();
        let t0 = initial.time;
        let record = |state: &CoupledState, out: &mut RunOutput| -> Result<()> {
            let report = if settings.energy { Some(self.energy_report(state)?) } else { None };
            let (tc_mean, tc_jump) = state.transmission_defects(self.params.ell);
            out.rows.push(SeriesRow {
                t: state.time,
                mean_discharge: state.solid.mean_discharge,
                delta: state.solid.displacement,
                delta_dot: state.solid.velocity,
                e_ext: report.map_or(f64::NAN, |r| r.e_ext),
                e_int: report.map_or(f64::NAN, |r| r.e_int),
                balance_defect: report.map_or(f64::NAN, |r| r.balance_defect),
                residual_integral: report.map_or(f64::NAN, |r| r.residual_integral),
                cubic_boundary_term: report.map_or(f64::NAN, |r| r.cubic_boundary_term),
                transmission_mean_defect: tc_mean,
                transmission_jump_defect: tc_jump,
            });
            Ok(())
        };
        let monitor = |state: &CoupledState, out: &mut RunOutput| {
            let (a, b) = state.transmission_defects(self.params.ell);
            out.max_transmission_defect = out.max_transmission_defect.max(a).max(b);
            out.max_mirror_defect = out.max_mirror_defect.max(state.exterior.mirror_defect());
            out.max_abs_zeta = out.max_abs_zeta.max(state.exterior.max_abs_zeta());
            out.max_abs_zeta_slope = out.max_abs_zeta_slope.max(state.exterior.max_abs_zeta_slope());
            out.max_abs_mean_discharge = out.max_abs_mean_discharge.max(state.solid.mean_discharge.abs());
        };
        record(&state, &mut out)?;
        monitor(&state, &mut out);
        if let Some(every) = settings.snapshot_every {
            if every > 0 {
                out.snapshots.push(state.clone());
            }
        }
        for k in 1..=steps {
            let next = match self.step(&state, settings.dt, settings.cfl) {
                Ok(mut s) => {
                    s.time = t0 + k as f64 * settings.dt;
                    s
                }
                Err(e) if e.is_terminal() => {
                    out.terminal = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            };
            state = next;
            monitor(&state, &mut out);
            let (a, b) = state.transmission_defects(self.params.ell);
            if a > settings.transmission_tolerance || b > settings.transmission_tolerance {
                out.terminal = Some(Error::Transmission(format!(
                    "defects {a:e}, {b:e} exceed tolerance at t = {}",
                    state.time
                )));
                break;
            }
            if k % settings.record_every.max(1) == 0 || k == steps {
                if let Err(e) = record(&state, &mut out) {
                    if e.is_terminal() {
                        out.terminal = Some(e);
                        break;
                    }
                    return Err(e);
                }
            }
            if let Some(every) = settings.snapshot_every {
                if every > 0 && k % every == 0 {
                    out.snapshots.push(state.clone());
                }
            }
        }
        out.final_state = Some(state);
        Ok(out)
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(u, v)| u + a * v).collect()
}

/// state + dt·k
pub fn advance(state: &CoupledState, k: &StateDerivative, dt: f64) -> CoupledState {
    let e = &state.exterior;
    let d = &k.exterior;
    CoupledState {
        exterior: ExteriorState {
            zeta_plus: e.zeta_plus.with_values(axpy(&e.zeta_plus.values, dt, &d.zeta_plus)),
            q_plus: e.q_plus.with_values(axpy(&e.q_plus.values, dt, &d.q_plus)),
            zeta_minus: e.zeta_minus.with_values(axpy(&e.zeta_minus.values, dt, &d.zeta_minus)),
            q_minus: e.q_minus.with_values(axpy(&e.q_minus.values, dt, &d.q_minus)),
        },
        solid: SolidState {
            mean_discharge: state.solid.mean_discharge + dt * k.mean_discharge_rate,
            displacement: state.solid.displacement + dt * k.velocity,
            velocity: state.solid.velocity + dt * k.acceleration,
        },
        time: state.time + dt,
    }
}

/// ext + dt·k
pub fn advance_exterior(ext: &ExteriorState, k: &ExteriorDerivative, dt: f64) -> ExteriorState {
    ExteriorState {
        zeta_plus: ext.zeta_plus.with_values(axpy(&ext.zeta_plus.values, dt, &k.zeta_plus)),
        q_plus: ext.q_plus.with_values(axpy(&ext.q_plus.values, dt, &k.q_plus)),
        zeta_minus: ext.zeta_minus.with_values(axpy(&ext.zeta_minus.values, dt, &k.zeta_minus)),
        q_minus: ext.q_minus.with_values(axpy(&ext.q_minus.values, dt, &k.q_minus)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_tc_tolerance")]
    pub transmission_tolerance: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Compute energy diagnostics at every recorded step.
    #[serde(default = "default_true")]
    pub energy: bool,
}

fn default_cfl() -> f64 {
    0.5
}
fn default_tc_tolerance() -> f64 {
    1e-8
}
fn default_record_every() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl RunSettings {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            cfl: default_cfl(),
            transmission_tolerance: default_tc_tolerance(),
            record_every: 1,
            snapshot_every: None,
            energy: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.cfl > 0.0) {
            return Err(Error::Config(format!(
                "need Δt > 0, T ≥ 0 and a positive CFL constant (Δt={}, T={}, cfl={})",
                self.dt, self.t_end, self.cfl
            )));
        }
        Ok(())
    }
}

/// One row of the time-series output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub mean_discharge: f64,
    pub delta: f64,
    pub delta_dot: f64,
    pub e_ext: f64,
    pub e_int: f64,
    pub balance_defect: f64,
    pub residual_integral: f64,
    pub cubic_boundary_term: f64,
    pub transmission_mean_defect: f64,
    pub transmission_jump_defect: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<SeriesRow>,
    pub snapshots: Vec<CoupledState>,
    pub final_state: Option<CoupledState>,
    /// Set when the run stopped early (depth loss, bottom contact, ...).
    pub terminal: Option<Error>,
    pub max_transmission_defect: f64,
    pub max_mirror_defect: f64,
    pub max_abs_zeta: f64,
    pub max_abs_zeta_slope: f64,
    pub max_abs_mean_discharge: f64,
}

impl RunOutput {
    /// ∫|balance defect| dt by the trapezoid rule over recorded rows.
    pub fn integrated_balance_defect(&self) -> f64 {
        self.rows.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].balance_defect.abs() + w[1].balance_defect.abs())).sum()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn delta(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta).collect()
    }

    pub fn delta_dot(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta_dot).collect()
    }
}

/// Prescribed-data transmission problem: ⟨q⟩ = f(t), ⟦q⟧ = 2g(t).
pub struct PrescribedProblem<'a> {
    pub solver: &'a TransmissionSolver,
    pub f_dot: &'a dyn Fn(f64) -> f64,
    pub g_dot: &'a dyn Fn(f64) -> f64,
}

impl PrescribedProblem<'_> {
    fn rhs(&self, ext: &ExteriorState, t: f64) -> Result<ExteriorDerivative> {
        self.solver.prescribed_rhs(ext, (self.f_dot)(t), (self.g_dot)(t))
    }

    pub fn step(&self, ext: &ExteriorState, t: f64, dt: f64, cfl: f64) -> Result<ExteriorState> {
        let limit = self.solver.max_stable_step(ext, cfl)?;
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!("Δt = {dt} exceeds the CFL limit {limit}")));
        }
        let k1 = self.rhs(ext, t)?;
        let k2 = self.rhs(&advance_exterior(ext, &k1, 0.5 * dt), t + 0.5 * dt)?;
        let k3 = self.rhs(&advance_exterior(ext, &k2, 0.5 * dt), t + 0.5 * dt)?;
        let k4 = self.rhs(&advance_exterior(ext, &k3, dt), t + dt)?;
        let w = dt / 6.0;
        let comb = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..x.len()).map(|i| x[i] + w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
        };
        Ok(ExteriorState {
            zeta_plus: ext.zeta_plus.with_values(comb(&ext.zeta_plus.values, &k1.zeta_plus, &k2.zeta_plus, &k3.zeta_plus, &k4.zeta_plus)),
            q_plus: ext.q_plus.with_values(comb(&ext.q_plus.values, &k1.q_plus, &k2.q_plus, &k3.q_plus, &k4.q_plus)),
            zeta_minus: ext
                .zeta_minus
                .with_values(comb(&ext.zeta_minus.values, &k1.zeta_minus, &k2.zeta_minus, &k3.zeta_minus, &k4.zeta_minus)),
            q_minus: ext.q_minus.with_values(comb(&ext.q_minus.values, &k1.q_minus, &k2.q_minus, &k3.q_minus, &k4.q_minus)),
        })
    }
}
