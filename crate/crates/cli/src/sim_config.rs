//! Plain-text benchmark grid configuration.
//!
//! ```text
//! # keys before the first section are defaults for every section
//! reps = 50
//! seed = 2024
//!
//! [two-view]
//! n = 50
//! p = 80, 100
//! joint_rank = 4
//! individual_ranks = 5, 4
//! angles = 90, 30
//! snrs = 2, 0.5
//! rank_modes = estimated, under, over
//! ```
//!
//! Each section is one grid; its cells are every combination of rank mode,
//! SNR and angle, in that nesting order.

use std::collections::BTreeMap;
use std::path::Path;

use ppd_core::{RankMode, SimConfig};

use crate::error::{CliError, CliResult};

const KEYS: &[&str] = &[
    "n",
    "p",
    "joint_rank",
    "individual_ranks",
    "angles",
    "snrs",
    "rank_modes",
    "reps",
    "seed",
    "bootstrap_reps",
    "singular_value_range",
];

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub name: String,
    pub cells: Vec<SimConfig>,
    pub reps: usize,
    pub seed: u64,
    pub bootstrap_reps: usize,
}

struct Entry {
    value: String,
    line: usize,
}

fn config_error(path: &Path, line: usize, message: String) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line: line as u64,
        column: None,
        message,
    }
}

fn list<T: std::str::FromStr>(path: &Path, key: &str, e: &Entry) -> CliResult<Vec<T>> {
    let items: Vec<&str> = e
        .value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(config_error(
            path,
            e.line,
            format!("key '{key}' has no values"),
        ));
    }
    items
        .into_iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| config_error(path, e.line, format!("key '{key}': cannot parse '{s}'")))
        })
        .collect()
}

fn single<T: std::str::FromStr>(path: &Path, key: &str, e: &Entry) -> CliResult<T> {
    let values: Vec<T> = list(path, key, e)?;
    match <[T; 1]>::try_from(values) {
        Ok([v]) => Ok(v),
        Err(_) => Err(config_error(
            path,
            e.line,
            format!("key '{key}' takes a single value"),
        )),
    }
}

fn build_grid(
    path: &Path,
    name: &str,
    entries: &BTreeMap<String, Entry>,
    header_line: usize,
) -> CliResult<GridSpec> {
    let need = |key: &str| -> CliResult<&Entry> {
        entries.get(key).ok_or_else(|| {
            config_error(
                path,
                header_line,
                format!("section '{name}' is missing key '{key}'"),
            )
        })
    };
    let n: usize = single(path, "n", need("n")?)?;
    let dims: Vec<usize> = list(path, "p", need("p")?)?;
    let joint_rank: usize = single(path, "joint_rank", need("joint_rank")?)?;
    let individual_ranks: Vec<usize> = list(path, "individual_ranks", need("individual_ranks")?)?;
    let angles: Vec<f64> = list(path, "angles", need("angles")?)?;
    let snrs: Vec<f64> = list(path, "snrs", need("snrs")?)?;
    let modes: Vec<RankMode> = list(path, "rank_modes", need("rank_modes")?)?;
    let reps: usize = entries
        .get("reps")
        .map(|e| single(path, "reps", e))
        .transpose()?
        .unwrap_or(50);
    let seed: u64 = entries
        .get("seed")
        .map(|e| single(path, "seed", e))
        .transpose()?
        .unwrap_or(42);
    let bootstrap_reps: usize = entries
        .get("bootstrap_reps")
        .map(|e| single(path, "bootstrap_reps", e))
        .transpose()?
        .unwrap_or(100);
    let singular_value_range = match entries.get("singular_value_range") {
        None => (1.0, 2.0),
        Some(e) => match list::<f64>(path, "singular_value_range", e)?.as_slice() {
            [lo, hi] => (*lo, *hi),
            _ => {
                return Err(config_error(
                    path,
                    e.line,
                    "key 'singular_value_range' takes two values".to_string(),
                ))
            }
        },
    };
    if reps == 0 {
        return Err(config_error(
            path,
            entries["reps"].line,
            "key 'reps' must be at least 1".into(),
        ));
    }
    if bootstrap_reps == 0 {
        return Err(config_error(
            path,
            entries["bootstrap_reps"].line,
            "key 'bootstrap_reps' must be at least 1".into(),
        ));
    }
    let mut cells = Vec::new();
    for &rank_mode in &modes {
        for &snr in &snrs {
            for &angle_deg in &angles {
                let cell = SimConfig {
                    n,
                    dims: dims.clone(),
                    joint_rank,
                    individual_ranks: individual_ranks.clone(),
                    angle_deg,
                    snr,
                    seed,
                    rank_mode,
                    singular_value_range,
                };
                cell.validate().map_err(|e| {
                    config_error(path, header_line, format!("section '{name}': {e}"))
                })?;
                cells.push(cell);
            }
        }
    }
    Ok(GridSpec {
        name: name.to_string(),
        cells,
        reps,
        seed,
        bootstrap_reps,
    })
}

pub fn parse_sim_config(path: &Path, text: &str) -> CliResult<Vec<GridSpec>> {
    let mut defaults: BTreeMap<String, Entry> = BTreeMap::new();
    let mut sections: Vec<(String, usize, BTreeMap<String, Entry>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| {
                    config_error(path, line_no, format!("malformed section header '{line}'"))
                })?;
            sections.push((name.to_string(), line_no, BTreeMap::new()));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_error(
                path,
                line_no,
                format!("expected key = value, found '{line}'"),
            )
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(config_error(path, line_no, format!("unknown key '{key}'")));
        }
        let target = match sections.last_mut() {
            Some((_, _, map)) => map,
            None => &mut defaults,
        };
        if target.contains_key(key) {
            return Err(config_error(
                path,
                line_no,
                format!("duplicate key '{key}'"),
            ));
        }
        target.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line: line_no,
            },
        );
    }
    if sections.is_empty() {
        return Ok(vec![build_grid(path, "grid", &defaults, 1)?]);
    }
    sections
        .into_iter()
        .map(|(name, line, mut entries)| {
            for (k, e) in &defaults {
                entries.entry(k.clone()).or_insert(Entry {
                    value: e.value.clone(),
                    line: e.line,
                });
            }
            build_grid(path, &name, &entries, line)
        })
        .collect()
}
