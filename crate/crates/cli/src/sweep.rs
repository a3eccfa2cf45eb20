//! Cartesian parameter sweeps. Every cell is validated before any cell
//! runs; cells then execute on the rayon pool, each in its own directory.

use std::path::Path;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{set_dotted, RunConfig};
use crate::output::{invalid, other, write_manifest, CliError, ManifestInput, OutDir};
use crate::scenarios::{prepare, Job};

struct Cell {
    index: usize,
    overrides: Value,
    config_text: String,
    config: Value,
    job: Job,
}

/// Every combination of the listed values, first key varying slowest.
pub fn combinations(parameters: &[(String, Vec<toml::Value>)]) -> Vec<Vec<(String, toml::Value)>> {
    let mut out: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for (key, values) in parameters {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut row = prefix.clone();
                    row.push((key.clone(), v.clone()));
                    row
                })
            })
            .collect();
    }
    out
}

pub fn run(raw: &toml::Value, config: &RunConfig, base_dir: &Path, out: &Path) -> Result<i32, CliError> {
    let sweep = config.sweep.as_ref().ok_or_else(|| invalid(anyhow!("the sweep scenario needs a [sweep] section")))?;
    let scenario = sweep.scenario.as_str();
    if matches!(scenario, "sweep" | "verify") {
        return Err(invalid(anyhow!("sweep.scenario cannot be {scenario:?}")));
    }
    if sweep.parameters.is_empty() {
        return Err(invalid(anyhow!("sweep.parameters is empty")));
    }
    let parameters: Vec<(String, Vec<toml::Value>)> = sweep.parameters.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    if let Some((k, _)) = parameters.iter().find(|(_, v)| v.is_empty()) {
        return Err(invalid(anyhow!("sweep.parameters.{k} has no values")));
    }
    let mut cells = Vec::new();
    for (index, combo) in combinations(&parameters).into_iter().enumerate() {
        let mut value = raw.clone();
        if let Some(t) = value.as_table_mut() {
            t.remove("sweep");
        }
        let mut overrides = Map::new();
        for (key, v) in &combo {
            set_dotted(&mut value, key, v.clone()).map_err(invalid)?;
            overrides.insert(key.clone(), serde_json::to_value(v).map_err(other)?);
        }
        let describe = || format!("sweep cell {index} ({})", Value::Object(overrides.clone()));
        let cfg: RunConfig = value.clone().try_into().with_context(describe).map_err(invalid)?;
        let job = prepare(scenario, &cfg, base_dir).map_err(|e| match e {
            CliError::Validation(err) => invalid(err.context(describe())),
            e => e,
        })?;
        cells.push(Cell {
            index,
            overrides: Value::Object(overrides),
            config_text: toml::to_string(&value).map_err(other)?,
            config: serde_json::to_value(&cfg).map_err(other)?,
            job,
        });
    }
    std::fs::create_dir_all(out).map_err(|e| other(anyhow!("creating {}: {e}", out.display())))?;
    let results: Vec<Value> = cells
        .into_par_iter()
        .map(|cell| {
            let name = format!("cell-{:03}", cell.index);
            let dir_path = out.join(&name);
            let mut entry = json!({ "index": cell.index, "dir": name, "overrides": cell.overrides });
            let result = OutDir::create(&dir_path).map_err(other).and_then(|mut dir| {
                let outcome = (cell.job)(&mut dir)?;
                let input = ManifestInput {
                    scenario: &sweep.scenario,
                    config_text: &cell.config_text,
                    config: &cell.config,
                    overrides: Some(&cell.overrides),
                };
                write_manifest(&dir_path, &input, &outcome).map_err(other)?;
                Ok(outcome)
            });
            match result {
                Ok(o) => {
                    entry["exit_code"] = json!(o.exit_code());
                    entry["status"] = json!(if o.terminal.is_some() { "terminal" } else { "ok" });
                    if let Some(t) = &o.terminal {
                        entry["message"] = json!(t.to_string());
                    }
                }
                Err(e) => {
                    entry["exit_code"] = json!(e.exit_code());
                    entry["status"] = json!("error");
                    entry["message"] = json!(e.to_string());
                }
            }
            entry
        })
        .collect();
    let codes: Vec<i64> = results.iter().map(|r| r["exit_code"].as_i64().unwrap_or(1)).collect();
    let summary = json!({
        "scenario": sweep.scenario,
        "parameters": serde_json::to_value(&sweep.parameters).map_err(other)?,
        "cells": results,
    });
    std::fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&summary).map_err(other)? + "\n").map_err(other)?;
    Ok(if codes.iter().any(|c| *c != 0 && *c != 3) {
        1
    } else if codes.contains(&3) {
        3
    } else {
        0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_order() {
        let p = vec![
            ("a".to_string(), vec![toml::Value::Integer(1), toml::Value::Integer(2)]),
            ("b".to_string(), vec![toml::Value::Integer(3), toml::Value::Integer(4), toml::Value::Integer(5)]),
        ];
        let c = combinations(&p);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![("a".into(), toml::Value::Integer(1)), ("b".into(), toml::Value::Integer(3))]);
        assert_eq!(c[5], vec![("a".into(), toml::Value::Integer(2)), ("b".into(), toml::Value::Integer(5))]);
    }
}
