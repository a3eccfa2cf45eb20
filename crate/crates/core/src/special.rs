//! Bessel functions of order 0 and 1, the causal Bessel kernels and their
//! convolution / Laplace quadratures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const SERIES_LIMIT: f64 = 12.0;
const ASYMPTOTIC_LIMIT: f64 = 30.0;

/// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
pub(crate) const GL8_NODES: [f64; 4] =
    [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
pub(crate) const GL8_WEIGHTS: [f64; 4] =
    [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Integrates `f` over [a, b] with 8-point Gauss-Legendre.
pub(crate) fn gauss_legendre8(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

/// J_n(t) for n in {0, 1} and t >= 0.
pub fn bessel_j(n: u32, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite and nonnegative, got {t}")));
    }
    match n {
        0 => Ok(j0(t)),
        1 => Ok(j1(t)),
        _ => Err(Error::Domain(format!("only orders 0 and 1 are supported, got {n}"))),
    }
}

/// J_0 for any real argument.
pub fn j0(t: f64) -> f64 {
    let x = t.abs();
    if x <= SERIES_LIMIT {
        power_series(0, x)
    } else if x <= ASYMPTOTIC_LIMIT {
        miller(x).0
    } else {
        hankel(0, x)
    }
}

/// J_1 for any real argument (odd function).
pub fn j1(t: f64) -> f64 {
    let x = t.abs();
    let v = if x <= SERIES_LIMIT {
        power_series(1, x)
    } else if x <= ASYMPTOTIC_LIMIT {
        miller(x).1
    } else {
        hankel(1, x)
    };
    if t < 0.0 {
        -v
    } else {
        v
    }
}

fn power_series(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let peak = q.sqrt();
    for k in 1..300u32 {
        term *= -q / (k as f64 * (k + order) as f64);
        sum += term;
        if (k as f64) > peak && term.abs() <= 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Backward recurrence normalised by J_0 + 2 sum J_2k = 1.
fn miller(x: f64) -> (f64, f64) {
    let mut m = (1.5 * x + 40.0) as usize;
    m += m % 2;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    let mut order_one = 0.0;
    for k in (1..=m).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx == 1 {
            order_one = current;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e200 {
            current *= 1e-200;
            above *= 1e-200;
            norm *= 1e-200;
            order_one *= 1e-200;
        }
    }
    norm += current;
    (current / norm, order_one / norm)
}

fn hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= last {
            break;
        }
        term = next;
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-18 {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (cos_chi, sin_chi) = if order == 0 { ((c + s) * r, (s - c) * r) } else { ((s - c) * r, (-s - c) * r) };
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Which analytic kernel a sampled [`CausalKernel`] represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// (1/κ) J_0(t/κ)
    BesselK0 { kappa: f64 },
    /// J_1(t/κ) / t
    BesselK1 { kappa: f64 },
    /// t^(α-1) / Γ(α), 0 < α <= 1
    Fractional { alpha: f64 },
    /// Tabulated values, linear between samples.
    Table,
}

/// A causal convolution kernel sampled on t_j = j * step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalKernel {
    pub samples: Vec<f64>,
    pub step: f64,
    pub kind: KernelKind,
}

fn check_kernel_args(kappa: f64, step: f64, horizon: f64) -> Result<usize> {
    if !(kappa > 0.0) || !(step > 0.0) || !(horizon > 0.0) {
        return Err(Error::Domain(format!(
            "kernel parameters must be positive (kappa={kappa}, step={step}, horizon={horizon})"
        )));
    }
    Ok((horizon / step + 1e-9).floor() as usize + 1)
}

/// Samples (1/κ) J_0(t/κ) on [0, horizon].
pub fn make_kernel_k0(kappa: f64, step: f64, horizon: f64) -> Result<CausalKernel> {
    let n = check_kernel_args(kappa, step, horizon)?;
    let samples = (0..n).map(|j| j0(j as f64 * step / kappa) / kappa).collect();
    Ok(CausalKernel { samples, step, kind: KernelKind::BesselK0 { kappa } })
}

/// Samples J_1(t/κ)/t on [0, horizon], with the limit 1/(2κ) at t = 0.
pub fn make_kernel_k1(kappa: f64, step: f64, horizon: f64) -> Result<CausalKernel> {
    let n = check_kernel_args(kappa, step, horizon)?;
    let samples = (0..n)
        .map(|j| {
            if j == 0 {
                0.5 / kappa
            } else {
                let t = j as f64 * step;
                j1(t / kappa) / t
            }
        })
        .collect();
    Ok(CausalKernel { samples, step, kind: KernelKind::BesselK1 { kappa } })
}

/// Samples t^(α-1)/Γ(α). The t = 0 entry holds the mean over the first step
/// since the kernel is unbounded there when α < 1.
pub fn make_kernel_fractional(alpha: f64, step: f64, horizon: f64) -> Result<CausalKernel> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("fractional order must lie in (0, 1], got {alpha}")));
    }
    let n = check_kernel_args(1.0, step, horizon)?;
    let g = libm::tgamma(alpha);
    let samples = (0..n)
        .map(|j| {
            if j == 0 {
                step.powf(alpha - 1.0) / (alpha * g)
            } else {
                (j as f64 * step).powf(alpha - 1.0) / g
            }
        })
        .collect();
    Ok(CausalKernel { samples, step, kind: KernelKind::Fractional { alpha } })
}

/// Wraps user-supplied samples.
pub fn make_kernel_table(samples: Vec<f64>, step: f64) -> Result<CausalKernel> {
    if !(step > 0.0) || samples.len() < 2 {
        return Err(Error::Config("kernel table needs a positive step and at least two samples".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("kernel table contains non-finite values".into()));
    }
    Ok(CausalKernel { samples, step, kind: KernelKind::Table })
}

impl CausalKernel {
    pub fn horizon(&self) -> f64 {
        (self.samples.len().saturating_sub(1)) as f64 * self.step
    }

    /// Laplace transform of the analytic kernel, principal branch.
    pub fn symbol(&self, p: Complex64) -> Option<Complex64> {
        match self.kind {
            KernelKind::BesselK0 { kappa } => Some(1.0 / (1.0 + kappa * kappa * p * p).sqrt()),
            KernelKind::BesselK1 { kappa } => Some(1.0 / ((1.0 + kappa * kappa * p * p).sqrt() + kappa * p)),
            KernelKind::Fractional { alpha } => Some(p.powf(-alpha)),
            KernelKind::Table => None,
        }
    }

    /// Point value at distance `y >= 0` (infinite at 0 for singular kernels).
    pub fn value(&self, y: f64) -> f64 {
        match self.kind {
            KernelKind::BesselK0 { kappa } => j0(y / kappa) / kappa,
            KernelKind::BesselK1 { kappa } => {
                if y == 0.0 {
                    0.5 / kappa
                } else {
                    j1(y / kappa) / y
                }
            }
            KernelKind::Fractional { alpha } => {
                if y == 0.0 && alpha < 1.0 {
                    f64::INFINITY
                } else {
                    y.powf(alpha - 1.0) / libm::tgamma(alpha)
                }
            }
            KernelKind::Table => {
                let s = y / self.step;
                let i = s.floor() as usize;
                if i + 1 >= self.samples.len() {
                    *self.samples.last().unwrap_or(&0.0)
                } else {
                    let w = s - i as f64;
                    self.samples[i] * (1.0 - w) + self.samples[i + 1] * w
                }
            }
        }
    }

    /// Cell means W_m = (1/h) ∫_{(m-1)h}^{mh} K for m = 1..n-1 (entry 0 is unused).
    pub fn cell_means(&self, h: f64, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n];
        match self.kind {
            KernelKind::Fractional { alpha } => {
                let g = libm::tgamma(alpha + 1.0);
                for (m, wm) in w.iter_mut().enumerate().skip(1) {
                    let a = (m - 1) as f64 * h;
                    let b = m as f64 * h;
                    *wm = (b.powf(alpha) - a.powf(alpha)) / (g * h);
                }
            }
            KernelKind::Table => {
                for (m, wm) in w.iter_mut().enumerate().skip(1) {
                    let a = (m - 1) as f64 * h;
                    let b = m as f64 * h;
                    *wm = gauss_legendre8(a, b, |y| self.value(y)) / h;
                }
            }
            _ => {
                for (m, wm) in w.iter_mut().enumerate().skip(1) {
                    let a = (m - 1) as f64 * h;
                    let b = m as f64 * h;
                    *wm = gauss_legendre8(a, b, |y| self.value(y)) / h;
                }
            }
        }
        w
    }
}

/// Trapezoid quadrature of ∫_0^t K(t-s) f(s) ds at every sample of `signal`.
pub fn causal_convolve(kernel: &CausalKernel, signal: &TimeSeries) -> Result<TimeSeries> {
    if (kernel.step - signal.step).abs() > 1e-12 * signal.step {
        return Err(Error::Config(format!(
            "kernel step {} differs from signal step {}",
            kernel.step, signal.step
        )));
    }
    let n = signal.len();
    if kernel.samples.len() < n {
        return Err(Error::Config(format!(
            "kernel horizon {} shorter than signal duration {}",
            kernel.horizon(),
            signal.duration()
        )));
    }
    let k = &kernel.samples;
    let f = &signal.values;
    let h = signal.step;
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().skip(1) {
        let mut s = 0.5 * (k[i] * f[0] + k[0] * f[i]);
        for j in 1..i {
            s += k[i - j] * f[j];
        }
        *o = h * s;
    }
    Ok(TimeSeries { start: signal.start, step: h, values: out })
}

/// Result of a truncated numerical Laplace transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEstimate {
    pub value: Complex64,
    /// Bound on the neglected tail, from the signal size near the horizon.
    pub truncation_bound: f64,
    /// Set when the bound exceeds the requested tolerance.
    pub accuracy_warning: bool,
}

/// Trapezoid quadrature of ∫_0^H e^{-pt} f(t) dt over the sampled record.
pub fn laplace_numeric(signal: &TimeSeries, p: Complex64, tolerance: f64) -> Result<LaplaceEstimate> {
    if !(p.re > 0.0) {
        return Err(Error::Domain(format!("Laplace variable needs Re p > 0, got {p}")));
    }
    let h = signal.step;
    let n = signal.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &v) in signal.values.iter().enumerate() {
        let t = signal.time(i);
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        acc += w * v * (-p * t).exp();
    }
    let horizon = signal.end_time();
    let tail = signal.values[n - n.div_ceil(10)..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = tail * (-p.re * horizon).exp() / p.re;
    Ok(LaplaceEstimate { value: acc * h, truncation_bound: bound, accuracy_warning: bound > tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// J_n(t) = (1/π) ∫_0^π cos(nθ − t sinθ) dθ by the periodic trapezoid rule.
    fn integral_definition(n: u32, t: f64) -> f64 {
        let m = 2 * (t as usize) + 200;
        let h = std::f64::consts::PI / m as f64;
        let mut s = 0.0;
        for k in 0..=m {
            let th = k as f64 * h;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            s += w * (n as f64 * th - t * th.sin()).cos();
        }
        s * h / std::f64::consts::PI
    }

    #[test]
    fn reference_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert!((j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-13);
        assert!((j1(50.0) + 0.097_511_828_125_175_14).abs() < 1e-14);
        assert!(j0(2.404_825_557_695_773).abs() < 1e-10);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(2, 1.0).is_err());
    }

    #[test]
    fn matches_integral_definition_up_to_100() {
        for i in 0..=2000 {
            let t = i as f64 * 0.05;
            for n in 0..2 {
                let a = bessel_j(n, t).unwrap();
                let b = integral_definition(n, t);
                assert!((a - b).abs() < 1e-12, "n={n} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_recurrence() {
        let h = 1e-4;
        for i in 1..=500 {
            let t = i as f64 * 0.1;
            let d = (j0(t + h) - j0(t - h)) / (2.0 * h);
            assert!((d + j1(t)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn kernel_origin_values() {
        assert_eq!(make_kernel_k0(1.0, 0.1, 1.0).unwrap().samples[0], 1.0);
        assert_eq!(make_kernel_k0(0.5, 0.1, 1.0).unwrap().samples[0], 2.0);
        assert_eq!(make_kernel_k1(1.0, 0.1, 1.0).unwrap().samples[0], 0.5);
        assert_eq!(make_kernel_k1(2.0, 0.1, 1.0).unwrap().samples[0], 0.25);
        let k1 = make_kernel_k1(1.0, 0.5, 2.0).unwrap();
        assert!((k1.samples[2] - 0.440_050_585_7).abs() < 1e-10);
        assert!(make_kernel_k0(0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn convolution_of_ones_is_time() {
        let k = make_kernel_fractional(1.0, 0.01, 2.0).unwrap();
        let s = TimeSeries::from_fn(0.0, 0.01, 201, |_| 1.0);
        let c = causal_convolve(&k, &s).unwrap();
        assert_eq!(c.values[0], 0.0);
        for (i, v) in c.values.iter().enumerate() {
            assert!((v - s.time(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_rejects_mismatched_steps() {
        let k = make_kernel_k0(1.0, 0.01, 2.0).unwrap();
        let s = TimeSeries::from_fn(0.0, 0.02, 10, |_| 1.0);
        assert!(causal_convolve(&k, &s).is_err());
    }

    #[test]
    fn convolution_against_fine_quadrature() {
        // K0 * e^{-t} at t = 2, reference from Gauss-Legendre on 400 panels.
        let kappa = 0.5;
        let t_end = 2.0;
        let reference: f64 = (0..400)
            .map(|i| {
                let a = i as f64 * t_end / 400.0;
                gauss_legendre8(a, a + t_end / 400.0, |s| j0((t_end - s) / kappa) / kappa * (-s).exp())
            })
            .sum();
        let mut errs = vec![];
        for &h in &[0.02, 0.005] {
            let k = make_kernel_k0(kappa, h, t_end).unwrap();
            let n = (t_end / h).round() as usize + 1;
            let s = TimeSeries::from_fn(0.0, h, n, |t| (-t).exp());
            let c = causal_convolve(&k, &s).unwrap();
            errs.push((c.values[n - 1] - reference).abs() / reference.abs());
        }
        assert!(errs[1] < 1e-4, "{errs:?}");
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn laplace_of_constant() {
        let s = TimeSeries::from_fn(0.0, 0.001, 40_001, |_| 1.0);
        let est = laplace_numeric(&s, Complex64::new(2.0, 0.0), 1e-8).unwrap();
        assert!((est.value.re - 0.5).abs() < 1e-6);
        assert!(!est.accuracy_warning);
        let short = TimeSeries::from_fn(0.0, 0.01, 101, |_| 1.0);
        assert!(laplace_numeric(&short, Complex64::new(2.0, 0.0), 1e-8).unwrap().accuracy_warning);
    }

    #[test]
    fn kernel_symbols_match_numeric_transform() {
        for &(kappa, h) in &[(1.0, 0.002)] {
            let horizon = 200.0 * kappa;
            let k0 = make_kernel_k0(kappa, h, horizon).unwrap();
            let k1 = make_kernel_k1(kappa, h, horizon).unwrap();
            for &p in &[Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)] {
                for k in [&k0, &k1] {
                    let s = TimeSeries::new(0.0, h, k.samples.clone()).unwrap();
                    let num = laplace_numeric(&s, p, 1e-6).unwrap().value;
                    let exact = k.symbol(p).unwrap();
                    assert!((num - exact).norm() < 1e-5, "p={p}: {num} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn cell_means_integrate_kernel() {
        let k = make_kernel_k0(0.5, 0.01, 1.0).unwrap();
        let w = k.cell_means(0.01, 101);
        // Sum of cell integrals = ∫_0^1 K0 = ∫_0^2 J0.
        let total: f64 = w.iter().skip(1).sum::<f64>() * 0.01;
        let reference = 1.425_770_293_197_026_6; // ∫_0^2 J0(s) ds
        assert!((total - reference).abs() < 1e-12, "{total}");
        let f = make_kernel_fractional(0.5, 0.01, 1.0).unwrap();
        let wf = f.cell_means(0.01, 101);
        let tot: f64 = wf.iter().skip(1).sum::<f64>() * 0.01;
        assert!((tot - 1.0 / libm::tgamma(1.5)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn convolution_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.1f64..5.0) {
            let k = make_kernel_k0(0.7, 0.05, 5.0).unwrap();
            let f = TimeSeries::from_fn(0.0, 0.05, 101, |t| (w * t).sin());
            let g = TimeSeries::from_fn(0.0, 0.05, 101, |t| (-t).exp() * t);
            let comb = TimeSeries::from_fn(0.0, 0.05, 101, |t| a * (w * t).sin() + b * (-t).exp() * t);
            let cf = causal_convolve(&k, &f).unwrap();
            let cg = causal_convolve(&k, &g).unwrap();
            let cc = causal_convolve(&k, &comb).unwrap();
            for i in 0..101 {
                let lhs = cc.values[i];
                let rhs = a * cf.values[i] + b * cg.values[i];
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn j0_bounded_and_even(t in 0.0f64..100.0) {
            prop_assert!(j0(t).abs() <= 1.0 + 1e-15);
            prop_assert!(j1(t).abs() <= 0.582);
            prop_assert_eq!(j0(-t), j0(t));
            prop_assert_eq!(j1(-t), -j1(t));
        }
    }
}
