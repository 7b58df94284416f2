//! Named configurations used by the CLI and the test suites.

use crate::config::{FluxSection, GridSection, OutputSection, RunConfig, SolverSection, VerifySection};
use crate::measure::{AtomSpec, InitialSpec, Piece};

pub const PRESETS: &[&str] = &["inverse_power_p1", "inverse_power_p2", "bump", "equilibrium", "two_atoms"];
pub const PAIRS: &[&str] = &["comparison_half", "comparison_no_atom", "contraction"];

fn base(flux: FluxSection, initial: InitialSpec, end_time: f64, snapshots: &[f64]) -> RunConfig {
    RunConfig {
        grid: GridSection { x_lo: -1.0, x_hi: 3.0, cells: 400 },
        flux,
        initial,
        solver: SolverSection { end_time, snapshot_times: snapshots.to_vec(), ..Default::default() },
        verify: VerifySection::default(),
        output: OutputSection::default(),
    }
}

fn unit_atom() -> Vec<AtomSpec> {
    vec![AtomSpec { x: 0.0, mass: 1.0 }]
}

/// Single-run presets.
pub fn preset(name: &str) -> Option<RunConfig> {
    let atom_only = InitialSpec { atoms: unit_atom(), ..Default::default() };
    let cfg = match name {
        // unit atom under 1 - (1+u)^-p; the atom decays like 1 - t
        "inverse_power_p1" => base(FluxSection::InversePower { p: 1.0 }, atom_only, 0.9, &[0.25, 0.5, 0.75]),
        "inverse_power_p2" => base(FluxSection::InversePower { p: 2.0 }, atom_only, 0.9, &[0.25, 0.5, 0.75]),
        // non-monotone flux: decay rate 1/2, extinct at t = 2
        "bump" => base(FluxSection::Bump, atom_only, 2.5, &[0.25, 0.5, 1.0, 1.5, 2.0]),
        // flux constant beyond the knee and u at the knee: nothing moves
        "equilibrium" => base(
            FluxSection::Equilibrium { level: 0.5, knee: 1.0 },
            InitialSpec {
                pieces: vec![Piece { from: -1.0, to: 3.0, value: 1.0 }],
                atoms: unit_atom(),
                ..Default::default()
            },
            1.0,
            &[0.5],
        ),
        "two_atoms" => base(
            FluxSection::InversePower { p: 1.0 },
            InitialSpec {
                pieces: vec![Piece { from: 0.5, to: 1.0, value: 0.5 }],
                atoms: vec![AtomSpec { x: 0.0, mass: 0.5 }, AtomSpec { x: 1.5, mass: 0.3 }],
                ..Default::default()
            },
            1.0,
            &[0.25, 0.5, 0.75],
        ),
        _ => return None,
    };
    Some(cfg)
}

/// Ordered or perturbed pairs `(u, v)` sharing grid, flux and solver settings.
pub fn pair(name: &str) -> Option<(RunConfig, RunConfig)> {
    let snaps = [0.25, 0.5, 0.75];
    let make = |initial: InitialSpec| base(FluxSection::Bump, initial, 1.0, &snaps);
    let pieces = |scale: f64| {
        vec![Piece { from: -0.6, to: -0.2, value: 0.6 * scale }, Piece { from: 0.4, to: 1.2, value: 0.8 * scale }]
    };
    let (u, v) = match name {
        // u0 = v0 / 2, atomwise and pointwise
        "comparison_half" => (
            InitialSpec { pieces: pieces(0.5), atoms: vec![AtomSpec { x: 0.0, mass: 0.5 }], ..Default::default() },
            InitialSpec { pieces: pieces(1.0), atoms: unit_atom(), ..Default::default() },
        ),
        // u has no atom where v has one
        "comparison_no_atom" => (
            InitialSpec { pieces: pieces(0.5), ..Default::default() },
            InitialSpec { pieces: pieces(1.0), atoms: unit_atom(), ..Default::default() },
        ),
        // same atom, bump profile perturbed in its peak
        "contraction" => {
            let profile = |peak: f64| vec![[0.2, 0.0], [0.7, peak], [1.2, 0.0]];
            (
                InitialSpec {
                    samples: profile(0.6),
                    atoms: vec![AtomSpec { x: 0.0, mass: 0.5 }],
                    ..Default::default()
                },
                InitialSpec {
                    samples: profile(0.9),
                    atoms: vec![AtomSpec { x: 0.0, mass: 0.5 }],
                    ..Default::default()
                },
            )
        }
        _ => return None,
    };
    Some((make(u), make(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            c.flux().unwrap();
        }
        for name in PAIRS {
            let (u, v) = pair(name).unwrap();
            u.validate().unwrap();
            v.validate().unwrap();
            let (a, _) = u.initial_state().unwrap();
            let (b, _) = v.initial_state().unwrap();
            if name.starts_with("comparison") {
                assert!(a.leq(&b, 0.0).unwrap());
            }
        }
        assert!(preset("nope").is_none());
    }
}
