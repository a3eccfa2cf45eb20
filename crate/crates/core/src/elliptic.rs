//! Discrete inverses of (1 - κ²∂²) on truncated half-lines.
//!
//! Grid values are stored against the distance y = |x - origin| >= 0, so a
//! leftward grid holds exactly the same array as its rightward mirror image.
//! Only derivatives pick up the orientation sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::trapezoid_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Rightward,
    Leftward,
}

impl Orientation {
    /// dx/dy along the grid.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Rightward => 1.0,
            Orientation::Leftward => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Rightward => Orientation::Leftward,
            Orientation::Leftward => Orientation::Rightward,
        }
    }
}

/// Nodes sit at y_j = jΔx, cells at y_j = (j + 1/2)Δx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Nodes,
    Cells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGrid {
    pub origin: f64,
    pub orientation: Orientation,
    pub spacing: f64,
    pub placement: Placement,
    pub values: Vec<f64>,
}

impl HalfLineGrid {
    pub fn nodes(origin: f64, orientation: Orientation, spacing: f64, values: Vec<f64>) -> Result<Self> {
        Self::build(origin, orientation, spacing, Placement::Nodes, values)
    }

    pub fn cells(origin: f64, orientation: Orientation, spacing: f64, values: Vec<f64>) -> Result<Self> {
        Self::build(origin, orientation, spacing, Placement::Cells, values)
    }

    fn build(
        origin: f64,
        orientation: Orientation,
        spacing: f64,
        placement: Placement,
        values: Vec<f64>,
    ) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Config(format!("grid spacing must be positive, got {spacing}")));
        }
        if values.len() < 3 {
            return Err(Error::Config(format!("a half-line grid needs at least 3 points, got {}", values.len())));
        }
        Ok(Self { origin, orientation, spacing, placement, values })
    }

    /// Samples `f(y)` at the grid distances.
    pub fn from_distance_fn(
        origin: f64,
        orientation: Orientation,
        spacing: f64,
        placement: Placement,
        count: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let shift = if placement == Placement::Cells { 0.5 } else { 0.0 };
        let values = (0..count).map(|j| f((j as f64 + shift) * spacing)).collect();
        Self::build(origin, orientation, spacing, placement, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn distance(&self, j: usize) -> f64 {
        match self.placement {
            Placement::Nodes => j as f64 * self.spacing,
            Placement::Cells => (j as f64 + 0.5) * self.spacing,
        }
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + self.orientation.sign() * self.distance(j)
    }

    /// Truncation length of the covered interval.
    pub fn length(&self) -> f64 {
        match self.placement {
            Placement::Nodes => (self.len() - 1) as f64 * self.spacing,
            Placement::Cells => self.len() as f64 * self.spacing,
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self { values, ..self.clone() }
    }

    /// Reflection through x = 0: same values, opposite orientation.
    pub fn mirrored(&self) -> Self {
        Self { origin: -self.origin, orientation: self.orientation.flipped(), ..self.clone() }
    }

    /// Quadrature weights (trapezoid on nodes, midpoint on cells).
    pub fn weights(&self) -> Vec<f64> {
        match self.placement {
            Placement::Nodes => trapezoid_weights(self.len(), self.spacing),
            Placement::Cells => vec![self.spacing; self.len()],
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights().iter().zip(&self.values).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
    }

    pub fn integral(&self) -> f64 {
        self.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// Boundary-layer resolution and truncation length checks.
    pub fn validate_for(&self, kappa: f64) -> Result<()> {
        check_resolution(self.spacing, self.length(), kappa)
    }
}

pub fn check_resolution(spacing: f64, length: f64, kappa: f64) -> Result<()> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("κ must be positive, got {kappa}")));
    }
    if spacing > 0.25 * kappa * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!("Δx = {spacing} exceeds κ/4 = {}", 0.25 * kappa)));
    }
    if length < 10.0 * kappa * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("truncation length {length} is shorter than 10κ = {}", 10.0 * kappa)));
    }
    Ok(())
}

/// Thomas factorisation of a tridiagonal matrix, reusable for many right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    sub: Vec<f64>,
    upper_scaled: Vec<f64>,
    pivot_inv: Vec<f64>,
}

impl Tridiagonal {
    /// Row i reads sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1].
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        if sub.len() != n || sup.len() != n || n == 0 {
            return Err(Error::Config("tridiagonal bands must have equal nonzero length".into()));
        }
        let mut upper_scaled = vec![0.0; n];
        let mut pivot_inv = vec![0.0; n];
        for i in 0..n {
            let pivot = diag[i] - if i > 0 { sub[i] * upper_scaled[i - 1] } else { 0.0 };
            if pivot.abs() < 1e-300 {
                return Err(Error::Domain("zero pivot in tridiagonal solve".into()));
            }
            pivot_inv[i] = 1.0 / pivot;
            upper_scaled[i] = sup[i] * pivot_inv[i];
        }
        Ok(Self { sub: sub.to_vec(), upper_scaled, pivot_inv })
    }

    pub fn len(&self) -> usize {
        self.pivot_inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot_inv.is_empty()
    }

    pub fn solve_in_place(&self, d: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(d.len(), n);
        d[0] *= self.pivot_inv[0];
        for i in 1..n {
            d[i] = (d[i] - self.sub[i] * d[i - 1]) * self.pivot_inv[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.upper_scaled[i] * d[i + 1];
        }
    }
}

/// Boundary closures of the discrete (1 - κ²∂²) operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// R₀ on nodes: u = 0 at the contact point and at the far end.
    DirichletNodes,
    /// R₁ on nodes: ghost-point Neumann at the contact point, u = 0 far away.
    NeumannNodes,
    /// R₁ on cells: zero flux through both ends.
    NeumannCells,
}

/// Cached factorisation of one discrete operator on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzSolver {
    pub closure: Closure,
    pub kappa: f64,
    pub spacing: f64,
    pub count: usize,
    factor: Tridiagonal,
}

impl HelmholtzSolver {
    pub fn new(closure: Closure, count: usize, spacing: f64, kappa: f64) -> Result<Self> {
        if count < 3 {
            return Err(Error::Config(format!("need at least 3 grid points, got {count}")));
        }
        let length = match closure {
            Closure::NeumannCells => count as f64 * spacing,
            _ => (count - 1) as f64 * spacing,
        };
        check_resolution(spacing, length, kappa)?;
        let r = kappa * kappa / (spacing * spacing);
        let (sub, diag, sup) = match closure {
            Closure::DirichletNodes => {
                let m = count - 2;
                (vec![-r; m], vec![1.0 + 2.0 * r; m], vec![-r; m])
            }
            Closure::NeumannNodes => {
                let m = count - 1;
                let mut sup = vec![-r; m];
                sup[0] = -2.0 * r;
                (vec![-r; m], vec![1.0 + 2.0 * r; m], sup)
            }
            Closure::NeumannCells => {
                let mut diag = vec![1.0 + 2.0 * r; count];
                diag[0] = 1.0 + r;
                diag[count - 1] = 1.0 + r;
                (vec![-r; count], diag, vec![-r; count])
            }
        };
        let factor = Tridiagonal::factor(&sub, &diag, &sup)?;
        Ok(Self { closure, kappa, spacing, count, factor })
    }

    pub fn solve(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.count];
        self.solve_into(f, &mut out);
        out
    }

    pub fn solve_into(&self, f: &[f64], out: &mut [f64]) {
        debug_assert_eq!(f.len(), self.count);
        let n = self.count;
        match self.closure {
            Closure::DirichletNodes => {
                out[0] = 0.0;
                out[n - 1] = 0.0;
                out[1..n - 1].copy_from_slice(&f[1..n - 1]);
                self.factor.solve_in_place(&mut out[1..n - 1]);
            }
            Closure::NeumannNodes => {
                out[n - 1] = 0.0;
                out[..n - 1].copy_from_slice(&f[..n - 1]);
                self.factor.solve_in_place(&mut out[..n - 1]);
            }
            Closure::NeumannCells => {
                out.copy_from_slice(f);
                self.factor.solve_in_place(out);
            }
        }
    }
}

fn solver_for(f: &HalfLineGrid, kappa: f64, neumann: bool) -> Result<HelmholtzSolver> {
    let closure = match (f.placement, neumann) {
        (Placement::Nodes, false) => Closure::DirichletNodes,
        (Placement::Nodes, true) => Closure::NeumannNodes,
        (Placement::Cells, true) => Closure::NeumannCells,
        (Placement::Cells, false) => {
            return Err(Error::Config("the Dirichlet operator is defined on node grids only".into()))
        }
    };
    HelmholtzSolver::new(closure, f.len(), f.spacing, kappa)
}

/// Dirichlet inverse R₀ f.
pub fn apply_r0(f: &HalfLineGrid, kappa: f64) -> Result<HalfLineGrid> {
    let s = solver_for(f, kappa, false)?;
    Ok(f.with_values(s.solve(&f.values)))
}

/// Neumann inverse R₁ f.
pub fn apply_r1(f: &HalfLineGrid, kappa: f64) -> Result<HalfLineGrid> {
    let s = solver_for(f, kappa, true)?;
    Ok(f.with_values(s.solve(&f.values)))
}

/// Derivative in x of nodal values: centred inside, zero at the contact point
/// (Neumann) and second-order one-sided at the far end.
pub fn neumann_gradient(values: &[f64], spacing: f64, sign: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    let c = sign / (2.0 * spacing);
    for j in 1..n - 1 {
        d[j] = c * (values[j + 1] - values[j - 1]);
    }
    d[n - 1] = c * (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]);
    d
}

/// ∂ₓR₁f on a node grid.
pub fn apply_dx_r1(f: &HalfLineGrid, kappa: f64) -> Result<HalfLineGrid> {
    if f.placement != Placement::Nodes {
        return Err(Error::Config("apply_dx_r1 expects a node grid".into()));
    }
    let v = apply_r1(f, kappa)?;
    Ok(f.with_values(neumann_gradient(&v.values, f.spacing, f.orientation.sign())))
}

/// κ⁻¹∫ e^{-y/κ} f(y) dy, the contact-point value of R₁f on the half-line.
pub fn boundary_trace_r1(f: &HalfLineGrid, kappa: f64) -> Result<f64> {
    f.validate_for(kappa)?;
    let w = f.weights();
    Ok((0..f.len()).map(|j| w[j] * (-f.distance(j) / kappa).exp() * f.values[j]).sum::<f64>() / kappa)
}

/// Discrete analogue of e^{-y/κ} on nodes: homogeneous difference equation
/// with value 1 at the contact point and 0 at the far end.
pub fn boundary_layer_profile(count: usize, spacing: f64, kappa: f64) -> Result<Vec<f64>> {
    let s = HelmholtzSolver::new(Closure::DirichletNodes, count, spacing, kappa)?;
    let r = kappa * kappa / (spacing * spacing);
    let mut rhs = vec![0.0; count];
    rhs[1] = r;
    let mut e = s.solve(&rhs);
    e[0] = 1.0;
    Ok(e)
}

/// Discrete counterpart of ∫(E² + κ²E'²)dy = κ for the profile above, using
/// trapezoid weights for E and midpoint weights for its differences.
pub fn effective_layer_width(profile: &[f64], spacing: f64, kappa: f64) -> f64 {
    0.5 * spacing + kappa * kappa * (1.0 - profile[1]) / spacing
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(n: usize, dx: f64, placement: Placement, seed: u64) -> HalfLineGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = HalfLineGrid { origin: 1.0, orientation: Orientation::Rightward, spacing: dx, placement, values: vals };
        let norm = g.l2_norm();
        g.with_values(g.values.iter().map(|v| v / norm).collect())
    }

    #[test]
    fn zero_in_zero_out() {
        let g = HalfLineGrid::nodes(1.0, Orientation::Rightward, 0.05, vec![0.0; 101]).unwrap();
        assert!(apply_r0(&g, 0.3).unwrap().values.iter().all(|v| *v == 0.0));
        assert!(apply_r1(&g, 0.3).unwrap().values.iter().all(|v| *v == 0.0));
        assert_eq!(boundary_trace_r1(&g, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn rejects_coarse_or_short_grids() {
        let coarse = HalfLineGrid::nodes(1.0, Orientation::Rightward, 0.1, vec![1.0; 200]).unwrap();
        assert!(matches!(apply_r0(&coarse, 0.3), Err(Error::Resolution(_))));
        let short = HalfLineGrid::nodes(1.0, Orientation::Rightward, 0.05, vec![1.0; 20]).unwrap();
        assert!(matches!(apply_r1(&short, 0.3), Err(Error::Resolution(_))));
    }

    fn constant_error(dx: f64, neumann: bool) -> f64 {
        let kappa = 0.5;
        let len = 6.0;
        let n = (len / dx).round() as usize + 1;
        let g = HalfLineGrid::nodes(0.0, Orientation::Rightward, dx, vec![2.0; n]).unwrap();
        let u = if neumann { apply_r1(&g, kappa) } else { apply_r0(&g, kappa) }.unwrap();
        (0..n)
            .map(|j| {
                let y = g.distance(j);
                let exact = if neumann {
                    2.0 * (1.0 - (y / kappa).cosh() / (len / kappa).cosh())
                } else {
                    2.0 * (1.0 - ((0.5 * len - y) / kappa).cosh() / (0.5 * len / kappa).cosh())
                };
                (u.values[j] - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_forcing_second_order() {
        for neumann in [false, true] {
            let e1 = constant_error(0.04, neumann);
            let e2 = constant_error(0.02, neumann);
            let order = (e1 / e2).log2();
            assert!(order > 1.9, "neumann={neumann} order {order}");
        }
    }

    #[test]
    fn constant_is_fixed_by_cell_neumann() {
        let g = HalfLineGrid::cells(0.0, Orientation::Rightward, 0.05, vec![3.0; 100]).unwrap();
        let v = apply_r1(&g, 0.2).unwrap();
        assert!(v.values.iter().all(|x| (x - 3.0).abs() < 1e-12));
    }

    #[test]
    fn operator_norms_at_most_one() {
        let dx = 0.02;
        for seed in 0..100 {
            for placement in [Placement::Nodes, Placement::Cells] {
                let f = random_unit(400, dx, placement, seed);
                if placement == Placement::Nodes {
                    assert!(apply_r0(&f, 0.3).unwrap().l2_norm() <= 1.0 + 5.0 * dx * dx);
                }
                assert!(apply_r1(&f, 0.3).unwrap().l2_norm() <= 1.0 + 5.0 * dx * dx);
            }
        }
    }

    #[test]
    fn trace_bound() {
        let dx = 0.02;
        let kappa = 0.3;
        for seed in 0..100 {
            let f = random_unit(400, dx, Placement::Nodes, seed);
            let t = boundary_trace_r1(&f, kappa).unwrap();
            assert!(t.abs() <= (2.0 * kappa).powf(-0.5) * (1.0 + 5.0 * dx));
        }
    }

    #[test]
    fn trace_matches_solve_at_origin() {
        let kappa = 0.4;
        let mut errs = vec![];
        for &dx in &[0.05, 0.025] {
            let n = (8.0 / dx) as usize + 1;
            let g = HalfLineGrid::from_distance_fn(0.0, Orientation::Rightward, dx, Placement::Nodes, n, |y| {
                (-(y - 1.0) * (y - 1.0)).exp()
            })
            .unwrap();
            let a = boundary_trace_r1(&g, kappa).unwrap();
            let b = apply_r1(&g, kappa).unwrap().values[0];
            errs.push((a - b).abs());
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn dx_r1_of_linear_is_r0_of_one() {
        let kappa = 0.3;
        let dx = 0.01;
        let n = 801;
        // Data constant far out so the truncation has no effect on the comparison.
        let f = HalfLineGrid::from_distance_fn(1.0, Orientation::Rightward, dx, Placement::Nodes, n, |y| {
            if y < 5.0 {
                y
            } else {
                5.0
            }
        })
        .unwrap();
        let d = apply_dx_r1(&f, kappa).unwrap();
        for j in 0..200 {
            let y = f.distance(j);
            assert!((d.values[j] - (1.0 - (-y / kappa).exp())).abs() < 2e-3, "y={y}");
        }
    }

    #[test]
    fn push_through_identity_for_smooth_data() {
        let kappa = 0.25;
        let dx = 0.01;
        let n = 801;
        let bump = |y: f64| (-(y - 2.0) * (y - 2.0) * 2.0).exp();
        let dbump = |y: f64| -4.0 * (y - 2.0) * bump(y);
        let f = HalfLineGrid::from_distance_fn(0.0, Orientation::Rightward, dx, Placement::Nodes, n, bump).unwrap();
        let df = HalfLineGrid::from_distance_fn(0.0, Orientation::Rightward, dx, Placement::Nodes, n, dbump).unwrap();
        let a = apply_dx_r1(&f, kappa).unwrap();
        let b = apply_r0(&df, kappa).unwrap();
        let gap = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 10.0 * dx * dx, "{gap}");
    }

    #[test]
    fn mirror_symmetry_is_exact() {
        let f = random_unit(200, 0.02, Placement::Nodes, 7);
        let m = f.mirrored();
        assert_eq!(apply_r1(&f, 0.2).unwrap().values, apply_r1(&m, 0.2).unwrap().values);
        let a = apply_dx_r1(&f, 0.2).unwrap();
        let b = apply_dx_r1(&m, 0.2).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(*x, -*y);
        }
        assert_eq!(m.position(3), -f.position(3));
    }

    #[test]
    fn layer_width_tends_to_kappa() {
        let kappa = 0.3;
        for &dx in &[0.05, 0.025, 0.0125] {
            let n = (6.0 / dx) as usize + 1;
            let e = boundary_layer_profile(n, dx, kappa).unwrap();
            let w = effective_layer_width(&e, dx, kappa);
            assert!((w - kappa - dx * dx / (8.0 * kappa)).abs() < dx * dx * 0.05, "{dx}: {w}");
            assert!((e[10] - (-(10.0 * dx) / kappa).exp()).abs() < 0.02);
        }
    }

    proptest! {
        #[test]
        fn maximum_principle(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..150).map(|_| rng.gen_range(0.0..1.0)).collect();
            let g = HalfLineGrid::nodes(0.0, Orientation::Leftward, 0.02, vals).unwrap();
            prop_assert!(apply_r0(&g, 0.2).unwrap().values.iter().all(|v| *v >= -1e-14));
            prop_assert!(apply_r1(&g, 0.2).unwrap().values.iter().all(|v| *v >= -1e-14));
        }

        #[test]
        fn scaled_derivative_bound(seed in 0u64..1000) {
            let dx = 0.02;
            let kappa = 0.2;
            let f = random_unit(150, dx, Placement::Nodes, seed);
            let u = apply_r0(&f, kappa).unwrap();
            let d: f64 = u.values.windows(2).map(|w| (kappa * (w[1] - w[0]) / dx).powi(2) * dx).sum();
            prop_assert!(d.sqrt() <= 1.0 + 5.0 * dx * dx);
        }
    }
}
