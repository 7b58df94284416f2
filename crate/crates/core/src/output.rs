//! Run directories: snapshot CSVs, atom ledger, and a JSON manifest.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::{AtomLedger, Trajectory};
use crate::measure::{Grid, MeasureState};

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_ECHO: &str = "config.toml";
pub const LEDGER: &str = "atoms.csv";
pub const TRACES: &str = "traces.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
    pub atoms_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub grid: Grid,
    pub flux: String,
    pub snapshots: Vec<SnapshotEntry>,
    pub ledger: String,
    pub traces: String,
    pub dt_history: Vec<f64>,
    pub extinction_times: Vec<Option<f64>>,
    pub max_balance_residual: f64,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

/// `x,u_r` at cell centres.
pub fn snapshot_csv(state: &MeasureState) -> String {
    let mut out = String::from("x,u_r\n");
    for (i, u) in state.regular.iter().enumerate() {
        let _ = writeln!(out, "{},{}", state.grid.center(i), u);
    }
    out
}

/// `t,atom_index,position,mass` for the atoms of one state.
pub fn atoms_csv(state: &MeasureState) -> String {
    let mut out = String::from("t,atom_index,position,mass\n");
    for (j, a) in state.atoms.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", state.time, j, a.position, a.mass);
    }
    out
}

/// Every ledger sample, `t,atom_index,position,mass`.
pub fn ledger_csv(ledger: &AtomLedger) -> String {
    let mut out = String::from("t,atom_index,position,mass\n");
    for (j, a) in ledger.atoms.iter().enumerate() {
        for e in &a.entries {
            let _ = writeln!(out, "{},{},{},{}", e.t, j, a.position, e.mass);
        }
    }
    out
}

/// Trace fluxes per step, `t,atom_index,h_minus,h_plus` (blank once the atom is gone).
pub fn traces_csv(ledger: &AtomLedger) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("t,atom_index,h_minus,h_plus\n");
    for (j, a) in ledger.atoms.iter().enumerate() {
        for e in &a.entries {
            let _ = writeln!(out, "{},{},{},{}", e.t, j, opt(e.h_minus), opt(e.h_plus));
        }
    }
    out
}

/// Writes the snapshot, ledger and manifest files of `traj` into `dir`.
pub fn write_run(
    dir: &Path,
    config: &RunConfig,
    flux_description: &str,
    traj: &Trajectory,
    warnings: &[String],
    wall_clock_seconds: f64,
) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_ECHO), config.to_toml_string()?)?;
    let mut snapshots = Vec::with_capacity(traj.snapshots.len());
    for (n, s) in traj.snapshots.iter().enumerate() {
        let file = format!("snapshot_{n:04}.csv");
        let atoms_file = format!("snapshot_{n:04}_atoms.csv");
        fs::write(dir.join(&file), snapshot_csv(s))?;
        fs::write(dir.join(&atoms_file), atoms_csv(s))?;
        snapshots.push(SnapshotEntry { t: s.time, file, atoms_file });
    }
    fs::write(dir.join(LEDGER), ledger_csv(&traj.ledger))?;
    fs::write(dir.join(TRACES), traces_csv(&traj.ledger))?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        grid: traj.grid,
        flux: flux_description.to_string(),
        snapshots,
        ledger: LEDGER.into(),
        traces: TRACES.into(),
        dt_history: traj.dt_history(),
        extinction_times: traj.extinction_times(),
        max_balance_residual: traj.steps.iter().map(|s| s.balance_residual).fold(0.0, f64::max),
        warnings: warnings.to_vec(),
        wall_clock_seconds,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    Ok(serde_json::from_str(&text)?)
}

/// Parses an `x,u_r` file back into pairs.
pub fn read_snapshot_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("x,u_r") {
        return Err(Error::InvalidConfig(format!("{} is not a snapshot file", path.display())));
    }
    lines
        .map(|l| {
            let (x, u) = l
                .split_once(',')
                .ok_or_else(|| Error::InvalidConfig(format!("malformed row {l:?} in {}", path.display())))?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad number {s:?} in {}", path.display())))
            };
            Ok((parse(x)?, parse(u)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::run;
    use crate::presets::preset;

    #[test]
    fn writes_a_complete_run_directory() {
        let mut cfg = preset("inverse_power_p1").unwrap();
        cfg.grid.cells = 40;
        cfg.solver.end_time = 0.3;
        let flux = cfg.flux().unwrap();
        let (s, w) = cfg.initial_state().unwrap();
        let traj = run(&s, &flux, &cfg.solver_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = write_run(dir.path(), &cfg, &flux.describe(), &traj, &w, 0.0).unwrap();
        for e in &m.snapshots {
            assert!(fs::metadata(dir.path().join(&e.file)).unwrap().len() > 0);
            assert!(fs::metadata(dir.path().join(&e.atoms_file)).unwrap().len() > 0);
        }
        let back = read_manifest(dir.path()).unwrap();
        assert_eq!(back.snapshots, m.snapshots);
        assert_eq!(back.config, cfg);
        let rows = read_snapshot_csv(&dir.path().join(&m.snapshots[1].file)).unwrap();
        assert_eq!(rows.len(), 40);
        assert_eq!(rows[5].1, traj.snapshots[1].regular[5]);
        let ledger = fs::read_to_string(dir.path().join(LEDGER)).unwrap();
        assert!(ledger.starts_with("t,atom_index,position,mass\n"));
    }
}
