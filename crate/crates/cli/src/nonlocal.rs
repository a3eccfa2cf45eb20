//! JSON problem files for the nonlocal transport solvers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use wsi_core::nonlocal::{check_compatibility, contraction_rate, forcing, signal, CompatibilityMode, NonlocalSolver, QuadrantField, QuadrantGrid};
use wsi_core::special::{make_kernel_fractional, make_kernel_k0, make_kernel_table, CausalKernel, KernelKind};

use crate::config::{read_pairs, resolve, RunConfig};
use crate::output::{invalid, other, CliError, OutDir, Outcome};
use crate::scenarios::Job;
use crate::signals::{ForcingSpec, SignalSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Caputo,
    RiemannLiouville,
    Left,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub form: Form,
    /// `bessel_k0`, `fractional:α` or `table:path` (two columns y, K(y)).
    pub kernel: String,
    #[serde(default)]
    pub kappa: Option<f64>,
    pub grid: QuadrantGrid,
    /// Exponential weight of the reported L²_a norms.
    #[serde(default)]
    pub weight: f64,
    #[serde(default = "zero_signal_spec")]
    pub initial: SignalSpec,
    #[serde(default = "zero_signal_spec")]
    pub boundary: SignalSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default = "strict")]
    pub mode: String,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn zero_signal_spec() -> SignalSpec {
    SignalSpec::Tag("zero".into())
}
fn strict() -> String {
    "strict".into()
}
fn default_tolerance() -> f64 {
    1e-8
}

impl ProblemSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn kernel(&self, base_dir: &Path) -> Result<CausalKernel> {
        let g = &self.grid;
        if !(g.dx > 0.0) || g.nx < 2 {
            bail!("grid: need dx > 0 and nx ≥ 2");
        }
        let horizon = (g.nx as f64 + 1.0) * g.dx;
        let (name, arg) = self.kernel.split_once(':').unwrap_or((self.kernel.as_str(), ""));
        Ok(match name.trim() {
            "bessel_k0" => {
                let kappa = self.kappa.ok_or_else(|| anyhow!("kernel bessel_k0 needs kappa"))?;
                make_kernel_k0(kappa, g.dx, horizon)?
            }
            "fractional" => {
                let alpha: f64 = arg.trim().parse().map_err(|_| anyhow!("fractional kernel needs an exponent, e.g. fractional:0.5"))?;
                make_kernel_fractional(alpha, g.dx, horizon)?
            }
            "table" => {
                let path = resolve(base_dir, Path::new(arg.trim()));
                let pairs = read_pairs(&path)?;
                if pairs.len() < 2 {
                    bail!("{}: a kernel table needs at least two rows", path.display());
                }
                let step = pairs[1].0 - pairs[0].0;
                if pairs[0].0 != 0.0 || !(step > 0.0) {
                    bail!("{}: kernel table must start at y = 0 with increasing y", path.display());
                }
                for (k, (y, _)) in pairs.iter().enumerate() {
                    if (y - k as f64 * step).abs() > 1e-9 * step.max(1.0) * (k as f64 + 1.0) {
                        bail!("{}: kernel table is not uniformly spaced at row {}", path.display(), k + 1);
                    }
                }
                make_kernel_table(pairs.iter().map(|p| p.1).collect(), step)?
            }
            other => bail!("unknown kernel {other:?}"),
        })
    }

    fn mode(&self) -> Result<CompatibilityMode> {
        match self.mode.as_str() {
            "strict" => Ok(CompatibilityMode::Strict { tolerance: self.tolerance }),
            "diagnostic" => Ok(CompatibilityMode::Diagnostic),
            other => bail!("mode must be strict or diagnostic, got {other:?}"),
        }
    }
}

pub fn problem_path(config: &RunConfig, base_dir: &Path) -> Result<PathBuf> {
    let nl = config.nonlocal.as_ref().ok_or_else(|| anyhow!("the nonlocal scenario needs a [nonlocal] section with a problem file"))?;
    Ok(resolve(base_dir, &nl.problem))
}

pub fn prepare(config: &RunConfig, base_dir: &Path) -> Result<Job, CliError> {
    let path = problem_path(config, base_dir).map_err(invalid)?;
    let problem_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| base_dir.to_path_buf());
    let spec = ProblemSpec::load(&path).map_err(invalid)?;
    prepare_spec(spec, &problem_dir)
}

pub fn prepare_spec(spec: ProblemSpec, base_dir: &Path) -> Result<Job, CliError> {
    let kernel = spec.kernel(base_dir).map_err(invalid)?;
    let mode = spec.mode().map_err(invalid)?;
    let solver = NonlocalSolver::new(kernel.clone(), spec.grid).map_err(invalid)?.with_weight(spec.weight);
    let initial = spec.initial.build().map_err(|e| invalid(e.context("initial")))?;
    let boundary = spec.boundary.build().map_err(|e| invalid(e.context("boundary")))?;
    let (ft, fx) = spec.forcing.build().map_err(|e| invalid(e.context("forcing")))?;
    let u_in = signal(move |x| initial.value(x));
    let ubar = signal(move |t| boundary.value(t));
    let f = forcing(move |t, x| ft.value(t) * fx.value(x));
    if spec.form == Form::RiemannLiouville && !kernel.value(0.0).is_finite() {
        return Err(invalid(anyhow!("the Riemann-Liouville form needs a kernel bounded at the origin")));
    }
    if let (Form::Caputo, CompatibilityMode::Strict { tolerance }) = (spec.form, mode) {
        let g = &spec.grid;
        let ub: Vec<f64> = (0..=g.steps()).map(|n| ubar(n as f64 * g.dt)).collect();
        let f0: Vec<f64> = (0..=g.steps()).map(|n| f(n as f64 * g.dt, 0.0)).collect();
        let report = check_compatibility(&[u_in(0.0)], &ub, &f0, g.dt, tolerance);
        if !report.compatible {
            return Err(invalid(wsi_core::Error::Compatibility(format!(
                "corner defect {:e}, rate defect {:e} (tolerance {tolerance:e}); use mode = \"diagnostic\" to run anyway",
                report.corner_defect, report.rate_defect
            ))));
        }
    }
    Ok(Box::new(move |dir: &mut OutDir| {
        let contraction = if spec.weight > 0.0 && !matches!(kernel.kind, KernelKind::Table) {
            contraction_rate(&kernel, spec.weight, 200.0, 20000).ok()
        } else {
            None
        };
        let (field, mut summary) = match spec.form {
            Form::Caputo => {
                let s = solver.solve_right_caputo(&u_in, &ubar, &f, mode).map_err(|e| {
                    if matches!(e, wsi_core::Error::Compatibility(_)) {
                        invalid(e)
                    } else {
                        other(e)
                    }
                })?;
                let rows: Vec<[f64; 2]> = s.boundary_jump.times().zip(&s.boundary_jump.values).map(|(t, v)| [t, *v]).collect();
                dir.csv("boundary_jump.csv", &["t", "jump"], &rows).map_err(other)?;
                (s.field, json!({ "compatibility": s.compatibility }))
            }
            Form::RiemannLiouville => {
                let s = solver.solve_right_riemann_liouville(&u_in, &f).map_err(other)?;
                let rows: Vec<[f64; 3]> = s
                    .emergent_trace
                    .times()
                    .zip(s.emergent_trace.values.iter().zip(&s.closed_form_trace.values))
                    .map(|(t, (a, b))| [t, *a, *b])
                    .collect();
                let worst = rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
                dir.csv("trace.csv", &["t", "trace", "closed_form"], &rows).map_err(other)?;
                (s.field, json!({ "max_trace_deviation": worst }))
            }
            Form::Left => {
                let s = solver.solve_left_bvp(&ubar, &f, spec.tolerance).map_err(|e| match e {
                    wsi_core::Error::Compatibility(_) | wsi_core::Error::Config(_) => invalid(e),
                    e => other(e),
                })?;
                let rows: Vec<[f64; 2]> = s.recovered_initial.iter().enumerate().map(|(j, u)| [j as f64 * spec.grid.dx, *u]).collect();
                dir.csv("initial_state.csv", &["x", "u"], &rows).map_err(other)?;
                (s.field, json!({ "data_decay_horizon": spec.grid.t_end }))
            }
        };
        write_field(dir, &field)?;
        summary["weighted_norms"] = json!(field.weighted_norms());
        summary["weight"] = json!(spec.weight);
        summary["contraction_rate"] = json!(contraction);
        summary["problem"] = json!(spec);
        Ok(Outcome { outputs: dir.files.clone(), summary, terminal: None, exit_code: 0 })
    }))
}

fn write_field(dir: &mut OutDir, field: &QuadrantField) -> Result<(), CliError> {
    let rows = field
        .times
        .iter()
        .zip(&field.values)
        .flat_map(|(t, row)| row.iter().enumerate().map(move |(j, u)| [*t, j as f64 * field.x_step, *u]));
    dir.csv("field.csv", &["t", "x", "u"], rows).map_err(other)
}
