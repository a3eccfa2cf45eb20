//! TOML run configuration. Every section has defaults reproducing the
//! standard decay test (δ₀ = 1, τ_buoy = 1/6, flat bottom h_eq = 1, ℓ = 1).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use wsi_core::coefficients::{BodyGeometry, SimulationParams};

use crate::signals::Tag;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub toy: ToyConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlocal: Option<NonlocalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub epsilon: f64,
    /// Give either kappa or mu (κ² = μ/3); kappa = 0.3 if neither is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "one")]
    pub ell: f64,
    #[serde(default = "sixth")]
    pub tau_buoy: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { epsilon: 0.0, kappa: None, mu: None, ell: 1.0, tau_buoy: 1.0 / 6.0 }
    }
}

impl ParamsConfig {
    pub fn build(&self) -> Result<SimulationParams> {
        let p = match (self.kappa, self.mu) {
            (Some(_), Some(_)) => bail!("params: give kappa or mu, not both"),
            (Some(k), None) => SimulationParams::new(self.epsilon, k, self.ell, self.tau_buoy)?,
            (None, Some(mu)) => SimulationParams::from_mu(self.epsilon, mu, self.ell, self.tau_buoy)?,
            (None, None) => SimulationParams::new(self.epsilon, 0.3, self.ell, self.tau_buoy)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// `flat:h`, `parabolic:h_centre,h_edge`, or `csv:path` with (x, h_eq) rows.
    #[serde(default = "flat_profile")]
    pub profile: String,
    #[serde(default = "geometry_samples")]
    pub samples: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { profile: flat_profile(), samples: geometry_samples() }
    }
}

impl GeometryConfig {
    pub fn build(&self, ell: f64, base_dir: &Path) -> Result<BodyGeometry> {
        let (kind, args) = self.profile.split_once(':').unwrap_or((self.profile.as_str(), ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| anyhow!("geometry: bad number {v:?}")))
                .collect()
        };
        let g = match kind.trim() {
            "flat" => {
                let v = nums()?;
                if v.len() != 1 {
                    bail!("geometry: flat takes one depth");
                }
                BodyGeometry::flat(ell, v[0], self.samples)?
            }
            "parabolic" => {
                let v = nums()?;
                if v.len() != 2 {
                    bail!("geometry: parabolic takes centre and edge depths");
                }
                BodyGeometry::parabolic(ell, v[0], v[1], self.samples)?
            }
            "csv" => {
                let path = resolve(base_dir, Path::new(args.trim()));
                let pairs = read_pairs(&path)?;
                let g = BodyGeometry::from_pairs(&pairs, self.samples)?;
                if (g.ell - ell).abs() > 1e-9 * ell {
                    bail!("geometry: {} spans half-width {}, but params.ell = {ell}", path.display(), g.ell);
                }
                g
            }
            other => bail!("geometry: unknown profile {other:?}"),
        };
        Ok(g)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "grid_dx")]
    pub dx: f64,
    /// Nodes per side; defaults to covering `length`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default = "grid_length")]
    pub length: f64,
    /// Defaults to dx / 4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "grid_t_end")]
    pub t_end: f64,
    #[serde(default = "half")]
    pub cfl: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default = "yes")]
    pub energy: bool,
    #[serde(default = "tc_tolerance")]
    pub transmission_tolerance: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dx: grid_dx(),
            nodes: None,
            length: grid_length(),
            dt: None,
            t_end: grid_t_end(),
            cfl: half(),
            record_every: 1,
            snapshot_every: None,
            energy: true,
            transmission_tolerance: tc_tolerance(),
        }
    }
}

impl GridConfig {
    pub fn nodes(&self) -> Result<usize> {
        if !(self.dx > 0.0) {
            bail!("grid: dx must be positive");
        }
        let n = match self.nodes {
            Some(n) => n,
            None => {
                if !(self.length > 0.0) {
                    bail!("grid: length must be positive");
                }
                (self.length / self.dx).round() as usize + 1
            }
        };
        if n < 3 {
            bail!("grid: need at least 3 nodes per side");
        }
        Ok(n)
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(0.25 * self.dx)
    }

    pub fn steps(&self) -> Result<usize> {
        let dt = self.dt();
        if !(dt > 0.0) || !(self.t_end >= 0.0) {
            bail!("grid: need dt > 0 and t_end >= 0");
        }
        if self.record_every == 0 {
            bail!("grid: record_every must be at least 1");
        }
        if self.snapshot_every == Some(0) {
            bail!("grid: snapshot_every must be at least 1");
        }
        Ok((self.t_end / dt).round() as usize)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "one")]
    pub delta0: f64,
    /// Optional symmetric exterior elevation as a signal of the distance
    /// from the body edge, |x| - ℓ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<String>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { delta0: 1.0, zeta: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    /// Prescribed mean discharge ⟨q⟩(t).
    #[serde(default = "zero_tag")]
    pub mean: String,
    /// Prescribed half-jump: ⟦q⟧(t) = 2·jump(t).
    #[serde(default = "zero_tag")]
    pub jump: String,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self { mean: zero_tag(), jump: zero_tag() }
    }
}

impl ToyConfig {
    pub fn build(&self) -> Result<(Tag, Tag)> {
        let f = Tag::parse(&self.mean).context("toy.mean")?;
        let g = Tag::parse(&self.jump).context("toy.jump")?;
        Ok((f, g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Nondispersive,
    Dispersive,
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "default_regimes")]
    pub regimes: Vec<Regime>,
    /// κ values for the dispersive and full regimes.
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "one")]
    pub delta0: f64,
    #[serde(default = "decay_t_end")]
    pub t_end: f64,
    #[serde(default = "decay_dt")]
    pub dt: f64,
    /// Fit window for the decay diagnostics; defaults to the second half.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Exterior length per side for the full coupled regime.
    #[serde(default = "full_length")]
    pub full_length: f64,
    /// Also write the exterior fields (Burgers or linear reconstruction).
    #[serde(default)]
    pub exterior: bool,
    #[serde(default = "exterior_x_max")]
    pub exterior_x_max: f64,
    #[serde(default = "exterior_dx")]
    pub exterior_dx: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            regimes: default_regimes(),
            kappas: default_kappas(),
            delta0: 1.0,
            t_end: decay_t_end(),
            dt: decay_dt(),
            window: None,
            full_length: full_length(),
            exterior: false,
            exterior_x_max: exterior_x_max(),
            exterior_dx: exterior_dx(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlocalConfig {
    /// JSON problem file, relative to the configuration file.
    pub problem: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Scenario run in every cell: simulate, toy, decay or nonlocal.
    pub scenario: String,
    /// Dotted configuration paths mapped to the values to try.
    pub parameters: BTreeMap<String, Vec<toml::Value>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<u8>>,
}

fn one() -> f64 {
    1.0
}
fn sixth() -> f64 {
    1.0 / 6.0
}
fn half() -> f64 {
    0.5
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn flat_profile() -> String {
    "flat:1".into()
}
fn geometry_samples() -> usize {
    513
}
fn grid_dx() -> f64 {
    0.025
}
fn grid_length() -> f64 {
    25.0
}
fn grid_t_end() -> f64 {
    20.0
}
fn tc_tolerance() -> f64 {
    1e-8
}
fn zero_tag() -> String {
    "zero".into()
}
fn default_regimes() -> Vec<Regime> {
    vec![Regime::Nondispersive, Regime::Dispersive]
}
fn default_kappas() -> Vec<f64> {
    vec![0.0, 0.3, 1.0]
}
fn decay_t_end() -> f64 {
    40.0
}
fn decay_dt() -> f64 {
    0.01
}
fn full_length() -> f64 {
    25.0
}
fn exterior_x_max() -> f64 {
    10.0
}
fn exterior_dx() -> f64 {
    0.05
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Two-column numeric CSV; a non-numeric first line is taken as a header.
pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            bail!("{}: line {} has fewer than two columns", path.display(), i + 1);
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => out.push((a, b)),
            _ if i == 0 => continue,
            _ => bail!("{}: line {} is not numeric", path.display(), i + 1),
        }
    }
    Ok(out)
}

/// Sets `path` (dot separated) in a TOML table, creating tables on the way.
pub fn set_dotted(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let table = cur.as_table_mut().ok_or_else(|| anyhow!("sweep: {path:?} runs through a non-table value"))?;
        if i + 1 == parts.len() {
            table.insert((*key).to_string(), value);
            return Ok(());
        }
        cur = table.entry((*key).to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    bail!("sweep: empty parameter path")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_standard_decay_test() {
        let c: RunConfig = toml::from_str("").unwrap();
        let p = c.params.build().unwrap();
        assert_eq!((p.epsilon, p.kappa, p.ell, p.tau_buoy), (0.0, 0.3, 1.0, 1.0 / 6.0));
        assert_eq!(c.initial.delta0, 1.0);
        assert_eq!(c.grid.nodes().unwrap(), 1001);
        assert_eq!(c.grid.dt(), 0.00625);
        let g = c.geometry.build(1.0, Path::new(".")).unwrap();
        assert!(g.h_eq.iter().all(|h| *h == 1.0));
    }

    #[test]
    fn rejects_unknown_keys_and_double_dispersion() {
        assert!(toml::from_str::<RunConfig>("[params]\nkapa = 0.3").is_err());
        let c: RunConfig = toml::from_str("[params]\nkappa = 0.3\nmu = 0.27").unwrap();
        assert!(c.params.build().is_err());
        let c: RunConfig = toml::from_str("[params]\nmu = 0.27").unwrap();
        assert!((c.params.build().unwrap().kappa - 0.3).abs() < 1e-12);
    }

    #[test]
    fn dotted_paths() {
        let mut v: toml::Value = toml::from_str("[params]\nepsilon = 0.1").unwrap();
        set_dotted(&mut v, "params.kappa", toml::Value::Float(0.5)).unwrap();
        set_dotted(&mut v, "grid.dx", toml::Value::Float(0.05)).unwrap();
        let c: RunConfig = v.clone().try_into().unwrap();
        assert_eq!(c.params.kappa, Some(0.5));
        assert_eq!(c.params.epsilon, 0.1);
        assert_eq!(c.grid.dx, 0.05);
        assert!(set_dotted(&mut v, "params.epsilon.x", toml::Value::Float(1.0)).is_err());
    }
}
