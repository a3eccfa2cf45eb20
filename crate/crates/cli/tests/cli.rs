use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn wsi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsi")).args(args).current_dir(cwd).env_remove("WSI_OUT_DIR").output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect()).collect();
    (header, rows)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = "[params]\nepsilon = 0.05\nkappa = 0.3\n[grid]\ndx = 0.05\nlength = 10\nt_end = 2\nsnapshot_every = 20\n";

#[test]
fn toy_at_rest_stays_at_rest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "toy.toml", "[grid]\ndx = 0.05\nlength = 10\nt_end = 1\n[toy]\nmean = \"zero\"\njump = \"zero\"\n");
    let out = wsi(&["toy", "--config", &cfg, "--out", "toy"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&tmp.path().join("toy/series.csv"));
    assert_eq!(header, "t,mean_discharge,discharge_jump,e_ext");
    assert!(rows.iter().all(|r| r[1..].iter().all(|v| *v == 0.0)));
    let (header, fields) = csv_rows(&tmp.path().join("toy/fields.csv"));
    assert_eq!(header, "t,x,zeta,q");
    assert!(fields.iter().all(|r| r[2] == 0.0 && r[3] == 0.0));
    let m = json(&tmp.path().join("toy/manifest.json"));
    assert_eq!(m["summary"]["max_energy_change"], 0.0);
}

#[test]
fn toy_with_closed_boundary_conserves_energy_in_the_linear_case() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "toy.toml",
        "[params]\nepsilon = 0.0\nkappa = 0.3\n[grid]\ndx = 0.025\nlength = 15\nt_end = 3\n[initial]\nzeta = \"gauss:0.5,4,2\"\n",
    );
    let out = wsi(&["toy", "--config", &cfg, "--out", "toy"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&tmp.path().join("toy/manifest.json"));
    let e0 = m["summary"]["initial_energy"].as_f64().unwrap();
    let drift = m["summary"]["max_energy_change"].as_f64().unwrap();
    assert!(e0 > 0.1 && drift < 1e-8 * e0, "{e0} {drift}");
    assert!(m["summary"]["max_prescription_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn simulate_writes_documented_outputs_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", SMALL);
    for dir in ["a", "b"] {
        let out = wsi(&["simulate", "--config", &cfg, "--out", dir], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["series.csv", "fields.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let (header, rows) = csv_rows(&tmp.path().join("a/series.csv"));
    assert_eq!(header, "t,mean_discharge,delta,delta_dot,e_ext,e_int,balance_defect");
    assert_eq!(rows[0][2], 1.0);
    assert_eq!(rows.len(), 161);
    let (_, fields) = csv_rows(&tmp.path().join("a/fields.csv"));
    // snapshots at steps 0, 20, ..., 160; 201 nodes per side
    assert_eq!(fields.len(), 9 * 402);
    assert!(fields[..402].windows(2).all(|w| w[1][1] > w[0][1]));
    let m = json(&tmp.path().join("a/manifest.json"));
    assert_eq!(m["config_text"], SMALL);
    assert_eq!(m["config"]["params"]["epsilon"], 0.05);
    assert!(m["terminal"].is_null());
    assert!(m["summary"]["max_mirror_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn output_directory_defaults_to_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", "[grid]\ndx = 0.05\nlength = 10\nt_end = 0.1\n");
    let out = Command::new(env!("CARGO_BIN_EXE_wsi"))
        .args(["simulate", "--config", &cfg])
        .current_dir(tmp.path())
        .env("WSI_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from-env/series.csv").exists());
}

#[test]
fn validation_errors_exit_2_with_json() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        "[params]\nkapa = 0.3\n",
        "[params]\nkappa = -1\n",
        "[grid]\ndx = 0.05\nlength = 10\ndt = 0.5\n",
        "[geometry]\nprofile = \"flat:1\"\n[initial]\ndelta0 = -50\n[params]\nepsilon = 0.1\n",
        "[decay]\nregimes = [\"full\"]\nkappas = [0.0]\n",
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("bad{i}.toml"), body);
        let scenario = if body.contains("[decay]") { "decay" } else { "simulate" };
        let out = wsi(&[scenario, "--config", &cfg, "--out", &format!("o{i}")], tmp.path());
        assert_eq!(out.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"], "validation");
        assert!(!tmp.path().join(format!("o{i}")).exists(), "case {i} computed before rejecting");
    }
}

#[test]
fn bottom_contact_exits_3_with_partial_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "contact.toml",
        "[params]\nepsilon = 0.5\n[geometry]\nprofile = \"flat:0.2\"\n[grid]\ndx = 0.05\nlength = 20\nt_end = 10\nenergy = false\n[initial]\ndelta0 = 1.2\n",
    );
    let out = wsi(&["simulate", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "bottom_contact");
    let (_, rows) = csv_rows(&tmp.path().join("o/series.csv"));
    let last = rows.last().unwrap()[0];
    assert!(last > 1.0 && last < 10.0);
    assert_eq!(json(&tmp.path().join("o/manifest.json"))["terminal"]["kind"], "bottom_contact");
}

#[test]
fn decay_writes_one_series_per_kappa_and_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "decay.toml",
        "[params]\nepsilon = 0.1\n[decay]\nregimes = [\"nondispersive\", \"dispersive\"]\nkappas = [0.0, 0.3]\nt_end = 20\ndt = 0.01\n",
    );
    let out = wsi(&["decay", "--config", &cfg, "--out", "d"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["decay_nondispersive.csv", "decay_dispersive_k0.csv", "decay_dispersive_k0.3.csv", "plot.gp"] {
        assert!(tmp.path().join("d").join(f).exists(), "{f}");
    }
    let (header, rows) = csv_rows(&tmp.path().join("d/decay_dispersive_k0.3.csv"));
    assert_eq!(header, "t,delta,delta_dot");
    assert_eq!(rows.len(), 2001);
    assert_eq!(rows[0][1], 1.0);
    let diag = json(&tmp.path().join("d/diagnostics.json"));
    assert_eq!(diag.as_array().unwrap().len(), 3);
    let radiated = diag[0]["radiated_energy"].as_f64().unwrap();
    assert!(radiated > 0.0);
    assert!(diag[2]["diagnostics"]["exponential_fit"]["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn sweep_cells_match_standalone_runs() {
    let tmp = TempDir::new().unwrap();
    let body = format!("{SMALL}[sweep]\nscenario = \"simulate\"\n[sweep.parameters]\n\"params.kappa\" = [0.3, 0.5]\n\"initial.delta0\" = [0.5, 1.0]\n");
    let cfg = write(tmp.path(), "sweep.toml", &body);
    let out = wsi(&["sweep", "--config", &cfg, "--out", "s", "--threads", "3"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&tmp.path().join("s/sweep.json"));
    let cells = summary["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    assert_eq!(cells[1]["overrides"]["params.kappa"], 0.5);
    assert_eq!(cells[1]["overrides"]["initial.delta0"], 0.5);
    for cell in cells {
        assert_eq!(cell["status"], "ok");
    }
    let m = json(&tmp.path().join("s/cell-002/manifest.json"));
    let cell_cfg = write(tmp.path(), "cell.toml", m["config_text"].as_str().unwrap());
    let out = wsi(&["simulate", "--config", &cell_cfg, "--out", "alone"], tmp.path());
    assert!(out.status.success());
    for f in ["series.csv", "fields.csv"] {
        assert_eq!(fs::read(tmp.path().join("s/cell-002").join(f)).unwrap(), fs::read(tmp.path().join("alone").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_rejects_a_bad_cell_before_running_any() {
    let tmp = TempDir::new().unwrap();
    let body = format!("{SMALL}[sweep]\nscenario = \"simulate\"\n[sweep.parameters]\n\"params.kappa\" = [0.3, -0.5]\n");
    let cfg = write(tmp.path(), "sweep.toml", &body);
    let out = wsi(&["sweep", "--config", &cfg, "--out", "s"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep cell 1"));
    assert!(!tmp.path().join("s").exists());
}

const PROBLEM: &str = r#"{"form": "caputo", "kernel": "bessel_k0", "kappa": 0.5,
 "grid": {"dx": 0.02, "nx": 301, "dt": 0.02, "t_end": 2, "output_every": 25},
 "weight": 0.5, "initial": "bump:1,0,1", "boundary": "zero"}"#;

#[test]
fn nonlocal_problem_files() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "p.json", PROBLEM);
    let out = wsi(&["nonlocal", "--config", "p.json", "--out", "direct"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = write(tmp.path(), "n.toml", "[nonlocal]\nproblem = \"p.json\"\n");
    let out = wsi(&["nonlocal", "--config", &cfg, "--out", "via_toml"], tmp.path());
    assert!(out.status.success());
    let (header, rows) = csv_rows(&tmp.path().join("direct/field.csv"));
    assert_eq!(header, "t,x,u");
    assert_eq!(rows.len(), 5 * 301);
    assert_eq!(fs::read(tmp.path().join("direct/field.csv")).unwrap(), fs::read(tmp.path().join("via_toml/field.csv")).unwrap());
    let m = json(&tmp.path().join("direct/manifest.json"));
    let norms: Vec<f64> = m["summary"]["weighted_norms"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let c = m["summary"]["contraction_rate"].as_f64().unwrap();
    assert!(c > 0.0);
    for (i, n) in norms.iter().enumerate() {
        assert!(*n <= (-c * 0.5 * i as f64).exp() * norms[0] + 1e-3);
    }
}

#[test]
fn nonlocal_strict_mode_rejects_incompatible_data() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "p.json", &PROBLEM.replace("\"boundary\": \"zero\"", "\"boundary\": \"ramp:1\""));
    let out = wsi(&["nonlocal", "--config", "p.json", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "compatibility");
    write(
        tmp.path(),
        "d.json",
        &PROBLEM.replace("\"boundary\": \"zero\"", "\"boundary\": \"ramp:1\", \"mode\": \"diagnostic\""),
    );
    let out = wsi(&["nonlocal", "--config", "d.json", "--out", "o"], tmp.path());
    assert!(out.status.success());
    let (header, jump) = csv_rows(&tmp.path().join("o/boundary_jump.csv"));
    assert_eq!(header, "t,jump");
    let last = jump.last().unwrap();
    let expected = -0.5 * (1.0 - (-last[0] / 0.5f64).exp());
    assert!((last[1] - expected).abs() < 0.05 * expected.abs());
}

#[test]
fn nonlocal_kernel_choices() {
    let tmp = TempDir::new().unwrap();
    let table: String = (0..=400).map(|k| format!("{},{}\n", 0.01 * k as f64, (-(0.01 * k as f64)).exp())).collect();
    write(tmp.path(), "kernel.csv", &format!("y,K\n{table}"));
    let rl = r#"{"form": "riemann_liouville", "kernel": "table:kernel.csv",
      "grid": {"dx": 0.01, "nx": 301, "dt": 0.01, "t_end": 1, "output_every": 10}, "initial": "exp:1,1"}"#;
    write(tmp.path(), "rl.json", rl);
    let out = wsi(&["nonlocal", "--config", "rl.json", "--out", "rl"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&tmp.path().join("rl/manifest.json"));
    assert!(m["summary"]["max_trace_deviation"].as_f64().unwrap() < 1e-6);
    let frac = PROBLEM.replace("\"bessel_k0\"", "\"fractional:0.5\"");
    write(tmp.path(), "f.json", &frac);
    let out = wsi(&["nonlocal", "--config", "f.json", "--out", "f"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    write(tmp.path(), "bad.json", &PROBLEM.replace("\"bessel_k0\"", "\"airy\""));
    assert_eq!(wsi(&["nonlocal", "--config", "bad.json", "--out", "b"], tmp.path()).status.code(), Some(2));
}

#[test]
fn verify_prints_a_table() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "v.toml", "[verify]\ncriteria = [3, 9]\n");
    let out = wsi(&["verify", "--config", &cfg, "--out", "v"], tmp.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let report = json(&tmp.path().join("v/verify.json"));
    assert_eq!(report.as_array().unwrap().len(), 2);
    let cfg = write(tmp.path(), "bad.toml", "[verify]\ncriteria = [42]\n");
    assert_eq!(wsi(&["verify", "--config", &cfg], tmp.path()).status.code(), Some(2));
}
