//! Explicit Godunov time marching with Dirac atoms on cell interfaces.
//!
//! A live atom splits the line: the cell to its left drains into it with the
//! flux `phi(s_-(u_L))`, the cell to its right is fed with `phi(s_+(u_R))`
//! (boundary data "infinity" on both sides), and the atom mass follows
//! `C' = -(h_plus - h_minus)`. When `C` reaches zero the step is cut at that
//! instant, the atom is removed and its interface reverts to the ordinary
//! Godunov flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::measure::{Grid, MeasureState};

/// How the boundary datum at a live atom is realised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum PhantomMode {
    /// Fluxes from `s_+` / `s_-`, i.e. the boundary datum is truly infinite.
    #[default]
    ExactTail,
    /// Godunov fluxes against a finite phantom state `m`.
    FinitePhantom { m: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cfl: f64,
    pub phantom_mode: PhantomMode,
    pub u_cap: f64,
    pub snapshot_times: Vec<f64>,
    pub end_time: f64,
    /// Keep every `history_stride`-th step as a dense frame (0 keeps none).
    pub history_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.45,
            phantom_mode: PhantomMode::ExactTail,
            u_cap: 1e6,
            snapshot_times: Vec::new(),
            end_time: 1.0,
            history_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return Err(Error::InvalidConfig(format!("end time must be finite and >= 0, got {}", self.end_time)));
        }
        if !(self.u_cap > 0.0) {
            return Err(Error::InvalidConfig("u_cap must be positive".into()));
        }
        if let PhantomMode::FinitePhantom { m } = self.phantom_mode {
            if !(m > self.u_cap && m.is_finite()) {
                return Err(Error::InvalidConfig(format!("finite phantom state {m} must exceed u_cap {}", self.u_cap)));
            }
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidConfig(format!("invalid snapshot time {t}")));
        }
        Ok(())
    }

    /// Sorted, deduplicated output times in `[0, end_time]`, always including both ends.
    pub fn output_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> =
            self.snapshot_times.iter().copied().filter(|&t| t <= self.end_time).chain([0.0, self.end_time]).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        ts
    }
}

/// One ledger sample for one atom: mass at the start of a step and the trace
/// fluxes used during it (absent once the atom is gone or at the final time).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub t: f64,
    pub mass: f64,
    pub h_minus: Option<f64>,
    pub h_plus: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomHistory {
    pub position: f64,
    pub interface: usize,
    pub initial_mass: f64,
    pub entries: Vec<LedgerEntry>,
    pub extinction_time: Option<f64>,
}

/// Mass and trace-flux history of every atom.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomLedger {
    pub atoms: Vec<AtomHistory>,
}

impl AtomLedger {
    pub fn for_state(state: &MeasureState) -> Self {
        Self {
            atoms: state
                .atoms
                .iter()
                .map(|a| AtomHistory {
                    position: a.position,
                    interface: a.interface,
                    initial_mass: a.mass,
                    entries: Vec::new(),
                    extinction_time: a.extinction_time,
                })
                .collect(),
        }
    }

    /// Mass of atom `j` at time `t`, linear between samples.
    pub fn mass_at(&self, j: usize, t: f64) -> Option<f64> {
        let e = &self.atoms.get(j)?.entries;
        let k = e.partition_point(|s| s.t <= t);
        if k == 0 {
            return e.first().map(|s| s.mass);
        }
        if k == e.len() {
            return e.last().map(|s| s.mass);
        }
        let (a, b) = (e[k - 1], e[k]);
        Some(a.mass + (b.mass - a.mass) * (t - a.t) / (b.t - a.t))
    }
}

/// Bookkeeping for one (sub)step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub total_mass_before: f64,
    pub total_mass_after: f64,
    /// Flux entering through the left domain boundary.
    pub inflow_left: f64,
    /// Flux leaving through the right domain boundary.
    pub outflow_right: f64,
    /// `|change in total mass + (outflow_right - inflow_left) dt|`.
    pub balance_residual: f64,
    /// Largest overshoot of the local min/max bounds among cells away from live atoms.
    pub max_principle_excess: f64,
}

/// Dense record of the solution at one time level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub regular: Vec<f64>,
    pub atom_masses: Vec<f64>,
    pub atom_alive: Vec<bool>,
}

impl Frame {
    fn of(state: &MeasureState) -> Self {
        Self {
            t: state.time,
            regular: state.regular.clone(),
            atom_masses: state.atoms.iter().map(|a| a.mass).collect(),
            atom_alive: state.atoms.iter().map(|a| a.alive).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Grid,
    pub initial: MeasureState,
    pub snapshots: Vec<MeasureState>,
    pub ledger: AtomLedger,
    pub steps: Vec<StepRecord>,
    pub history: Vec<Frame>,
    /// Steps between consecutive history frames (0 when no history was kept).
    pub history_stride: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &MeasureState {
        self.snapshots.last().expect("a trajectory always has a final snapshot")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&MeasureState> {
        self.snapshots.iter().find(|s| (s.time - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }

    pub fn dt_history(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.dt).collect()
    }

    pub fn extinction_times(&self) -> Vec<Option<f64>> {
        self.ledger.atoms.iter().map(|a| a.extinction_time).collect()
    }
}

/// Largest stable step `cfl * dx / lipschitz_bound`.
pub fn cfl_limit(grid: &Grid, flux: &FluxModel, cfl: f64) -> f64 {
    cfl * grid.dx() / flux.lipschitz_bound()
}

/// Step size from the CFL bound, shortened to land on the next output time and
/// on a predicted extinction (`time_to_extinction`, relative to `state.time`).
pub fn cfl_dt(state: &MeasureState, config: &SolverConfig, flux: &FluxModel, time_to_extinction: Option<f64>) -> f64 {
    let eps = 1e-12 * (1.0 + state.time.abs());
    let next_stop = config.output_times().into_iter().find(|&s| s > state.time + eps).unwrap_or(config.end_time);
    let mut dt = cfl_limit(&state.grid, flux, config.cfl).min(next_stop - state.time);
    if let Some(tte) = time_to_extinction {
        dt = dt.min(tte);
    }
    dt.max(0.0)
}

/// `(h_minus, h_plus)` at live atom `j`: the flux drained from the left cell
/// and the flux fed into the right cell.
pub fn atom_boundary_fluxes(
    state: &MeasureState,
    j: usize,
    flux: &FluxModel,
    config: &SolverConfig,
) -> Result<(f64, f64)> {
    let atom = state.atoms.get(j).ok_or(Error::DeadAtom(j))?;
    if !atom.alive {
        return Err(Error::DeadAtom(j));
    }
    let k = atom.interface;
    Ok(boundary_fluxes(flux, config.phantom_mode, state.regular[k - 1], state.regular[k]))
}

#[inline]
fn boundary_fluxes(flux: &FluxModel, mode: PhantomMode, u_left: f64, u_right: f64) -> (f64, f64) {
    match mode {
        PhantomMode::ExactTail => (flux.flux_at_s_minus(u_left), flux.flux_at_s_plus(u_right)),
        PhantomMode::FinitePhantom { m } => (flux.godunov(u_left, m), flux.godunov(m, u_right)),
    }
}

/// Interface fluxes for one step. `out_of_left[k]` leaves the cell left of
/// interface `k`, `into_right[k]` enters the cell to its right; the two differ
/// only at live atoms.
struct InterfaceFluxes {
    out_of_left: Vec<f64>,
    into_right: Vec<f64>,
    /// Per atom: `(h_minus, h_plus)` when alive.
    atom: Vec<Option<(f64, f64)>>,
}

fn interface_fluxes(state: &MeasureState, flux: &FluxModel, config: &SolverConfig) -> Result<InterfaceFluxes> {
    let n = state.grid.n_cells;
    let u = &state.regular;
    let mut f = vec![0.0; n + 1];
    f[0] = flux.value(u[0]);
    f[n] = flux.value(u[n - 1]);
    for k in 1..n {
        f[k] = flux.godunov(u[k - 1], u[k]);
    }
    let mut into_right = f.clone();
    let mut atom = vec![None; state.atoms.len()];
    for (j, a) in state.live_atoms() {
        let (h_minus, h_plus) = boundary_fluxes(flux, config.phantom_mode, u[a.interface - 1], u[a.interface]);
        if config.phantom_mode == PhantomMode::ExactTail && h_plus < h_minus - 1e-14 * (1.0 + flux.sup_bound()) {
            return Err(Error::Internal(format!(
                "atom {j}: h_plus {h_plus} < h_minus {h_minus} contradicts the trace-flux ordering"
            )));
        }
        f[a.interface] = h_minus;
        into_right[a.interface] = h_plus;
        atom[j] = Some((h_minus, h_plus));
    }
    Ok(InterfaceFluxes { out_of_left: f, into_right, atom })
}

fn time_to_extinction(state: &MeasureState, fluxes: &InterfaceFluxes) -> Option<f64> {
    state
        .atoms
        .iter()
        .zip(&fluxes.atom)
        .filter_map(|(a, h)| {
            let (hm, hp) = (*h)?;
            let rate = hp - hm;
            (rate > 0.0).then(|| a.mass / rate)
        })
        .min_by(f64::total_cmp)
}

/// Removes atom `j` from the live set once its mass is exhausted; its
/// interface carries the ordinary Godunov flux from then on.
pub fn merge_on_extinction(state: &mut MeasureState, j: usize) {
    let t = state.time;
    let atom = &mut state.atoms[j];
    debug_assert!(atom.mass <= 1e-12 * (1.0 + atom.mass), "merging an atom that still has mass");
    atom.mass = 0.0;
    atom.alive = false;
    atom.extinction_time.get_or_insert(t);
    log::debug!("atom {j} at x = {} extinct at t = {t}", atom.position);
}

/// Advances `state` by `dt`, splitting the step at any extinction that falls
/// inside it. Returns one record per substep.
pub fn step(
    state: &mut MeasureState,
    ledger: &mut AtomLedger,
    flux: &FluxModel,
    config: &SolverConfig,
    dt: f64,
) -> Result<Vec<StepRecord>> {
    let limit = cfl_limit(&state.grid, flux, 1.0);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let mut records = Vec::with_capacity(1);
    let mut remaining = dt;
    while remaining > 0.0 {
        let fluxes = interface_fluxes(state, flux, config)?;
        let tte = time_to_extinction(state, &fluxes);
        let (sub, dies) = match tte {
            Some(t) if t <= remaining * (1.0 + 1e-12) => (t.min(remaining), true),
            _ => (remaining, false),
        };
        records.push(substep(state, ledger, &fluxes, sub, dies)?);
        remaining = if dies { remaining - sub } else { 0.0 };
        if remaining <= 1e-15 * dt {
            break;
        }
    }
    Ok(records)
}

fn substep(
    state: &mut MeasureState,
    ledger: &mut AtomLedger,
    fluxes: &InterfaceFluxes,
    dt: f64,
    extinction_in_step: bool,
) -> Result<StepRecord> {
    let n = state.grid.n_cells;
    let dx = state.grid.dx();
    let lambda = dt / dx;
    let t = state.time;
    let mass_before = state.total_mass();

    for (hist, (atom, h)) in ledger.atoms.iter_mut().zip(state.atoms.iter().zip(&fluxes.atom)) {
        hist.entries.push(LedgerEntry { t, mass: atom.mass, h_minus: h.map(|p| p.0), h_plus: h.map(|p| p.1) });
    }

    // cells next to a live atom are exempt from the local max principle
    let mut exempt = vec![false; n];
    for (_, a) in state.live_atoms() {
        exempt[a.interface - 1] = true;
        exempt[a.interface] = true;
    }

    let old = std::mem::take(&mut state.regular);
    let mut new = vec![0.0; n];
    let mut excess: f64 = 0.0;
    let mut delta_regular = 0.0;
    let scale = old.iter().fold(1.0f64, |m, &v| m.max(v));
    for i in 0..n {
        let mut v = old[i] - lambda * (fluxes.out_of_left[i + 1] - fluxes.into_right[i]);
        if v < 0.0 {
            if v < -1e-12 * scale {
                state.regular = old;
                return Err(Error::Internal(format!(
                    "negative cell average {v} in cell {i} at t = {t}; the scheme is not monotone here"
                )));
            }
            v = 0.0;
        }
        if !exempt[i] && i > 0 && i + 1 < n {
            let lo = old[i - 1].min(old[i]).min(old[i + 1]);
            let hi = old[i - 1].max(old[i]).max(old[i + 1]);
            excess = excess.max(v - hi).max(lo - v);
        }
        delta_regular += v - old[i];
        new[i] = v;
    }
    state.regular = new;

    let mut delta_atoms = 0.0;
    let mut dying = Vec::new();
    for (j, h) in fluxes.atom.iter().enumerate() {
        if let Some((hm, hp)) = *h {
            let atom = &mut state.atoms[j];
            let decrement = dt * (hp - hm);
            let mut c = atom.mass - decrement;
            let exhausted = extinction_in_step && c <= 1e-12 * atom.mass.max(1e-300);
            if exhausted {
                c = 0.0;
            } else if c < 0.0 {
                return Err(Error::Internal(format!("atom {j} mass went negative without an extinction event")));
            }
            delta_atoms += c - atom.mass;
            atom.mass = c;
            if exhausted {
                dying.push(j);
            }
        }
    }

    state.time = t + dt;
    for j in dying {
        merge_on_extinction(state, j);
        ledger.atoms[j].extinction_time = state.atoms[j].extinction_time;
    }

    let inflow_left = fluxes.into_right[0];
    let outflow_right = fluxes.out_of_left[n];
    let balance_residual = ((delta_regular * dx + delta_atoms) + dt * (outflow_right - inflow_left)).abs();
    Ok(StepRecord {
        t,
        dt,
        total_mass_before: mass_before,
        total_mass_after: state.total_mass(),
        inflow_left,
        outflow_right,
        balance_residual,
        max_principle_excess: excess.max(0.0),
    })
}

/// Evolution bookkeeping shared by single and coupled runs.
struct Runner<'a> {
    flux: &'a FluxModel,
    config: &'a SolverConfig,
    initial: MeasureState,
    state: MeasureState,
    ledger: AtomLedger,
    steps: Vec<StepRecord>,
    history: Vec<Frame>,
    snapshots: Vec<MeasureState>,
    step_count: usize,
}

impl<'a> Runner<'a> {
    fn new(initial: &MeasureState, flux: &'a FluxModel, config: &'a SolverConfig) -> Self {
        let mut r = Self {
            flux,
            config,
            initial: initial.clone(),
            state: initial.clone(),
            ledger: AtomLedger::for_state(initial),
            steps: Vec::new(),
            history: Vec::new(),
            snapshots: Vec::new(),
            step_count: 0,
        };
        if config.history_stride > 0 {
            r.history.push(Frame::of(&r.state));
        }
        r
    }

    fn proposed_dt(&self) -> Result<f64> {
        let fluxes = interface_fluxes(&self.state, self.flux, self.config)?;
        let tte = time_to_extinction(&self.state, &fluxes);
        Ok(cfl_dt(&self.state, self.config, self.flux, tte))
    }

    fn advance(&mut self, dt: f64, stop: f64) -> Result<()> {
        let recs = step(&mut self.state, &mut self.ledger, self.flux, self.config, dt)?;
        self.steps.extend(recs);
        if (self.state.time - stop).abs() <= 1e-12 * (1.0 + stop.abs()) {
            self.state.time = stop;
        }
        self.step_count += 1;
        let stride = self.config.history_stride;
        if stride > 0 && (self.step_count.is_multiple_of(stride) || self.state.time >= self.config.end_time) {
            self.history.push(Frame::of(&self.state));
        }
        Ok(())
    }

    fn snapshot(&mut self) {
        self.snapshots.push(self.state.clone());
    }

    fn finish(mut self) -> Trajectory {
        let t = self.state.time;
        for (hist, atom) in self.ledger.atoms.iter_mut().zip(&self.state.atoms) {
            hist.entries.push(LedgerEntry { t, mass: atom.mass, h_minus: None, h_plus: None });
        }
        if self.config.history_stride > 0 && self.history.last().is_none_or(|f| f.t < t) {
            self.history.push(Frame::of(&self.state));
        }
        Trajectory {
            grid: self.state.grid,
            initial: self.initial,
            snapshots: self.snapshots,
            ledger: self.ledger,
            steps: self.steps,
            history: self.history,
            history_stride: self.config.history_stride,
        }
    }
}

fn reached(t: f64, stop: f64) -> bool {
    t >= stop - 1e-12 * (1.0 + stop.abs())
}

/// Evolves `initial` to `config.end_time`, taking snapshots at the output times.
pub fn run(initial: &MeasureState, flux: &FluxModel, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut r = Runner::new(initial, flux, config);
    for stop in config.output_times() {
        while !reached(r.state.time, stop) {
            let dt = r.proposed_dt()?;
            r.advance(dt, stop)?;
        }
        r.snapshot();
    }
    Ok(r.finish())
}

/// Evolves two initial states in lockstep with a common step sequence, so that
/// their ledgers and dense histories can be compared step by step.
pub fn run_coupled(
    u0: &MeasureState,
    v0: &MeasureState,
    flux: &FluxModel,
    config: &SolverConfig,
) -> Result<(Trajectory, Trajectory)> {
    config.validate()?;
    if u0.grid != v0.grid {
        return Err(Error::GridMismatch);
    }
    let mut a = Runner::new(u0, flux, config);
    let mut b = Runner::new(v0, flux, config);
    for stop in config.output_times() {
        while !reached(a.state.time, stop) {
            let dt = a.proposed_dt()?.min(b.proposed_dt()?);
            a.advance(dt, stop)?;
            b.advance(dt, stop)?;
            b.state.time = a.state.time;
        }
        a.snapshot();
        b.snapshot();
    }
    Ok((a.finish(), b.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{AtomSpec, InitialSpec, Piece};

    fn grid(n: usize) -> Grid {
        Grid::new(-1.0, 3.0, n).unwrap()
    }

    fn delta_state(n: usize) -> MeasureState {
        let spec = InitialSpec { atoms: vec![AtomSpec { x: 0.0, mass: 1.0 }], ..Default::default() };
        MeasureState::from_config(grid(n), &spec, 1e6).unwrap().0
    }

    #[test]
    fn cfl_dt_examples() {
        let g = Grid::new(0.0, 1.0, 100).unwrap();
        let s = MeasureState { grid: g, regular: vec![0.0; 100], atoms: vec![], time: 0.0 };
        let flux = FluxModel::inverse_power(1.0).unwrap();
        let cfg = SolverConfig { end_time: 10.0, ..Default::default() };
        assert!((cfl_dt(&s, &cfg, &flux, None) - 0.0045).abs() < 1e-15);
        let cfg2 = SolverConfig { end_time: 10.0, snapshot_times: vec![0.001], ..Default::default() };
        assert!((cfl_dt(&s, &cfg2, &flux, None) - 0.001).abs() < 1e-15);
        assert!((cfl_dt(&s, &cfg, &flux, Some(0.0003)) - 0.0003).abs() < 1e-15);
    }

    #[test]
    fn boundary_flux_examples() {
        let s = delta_state(400);
        let ip = FluxModel::inverse_power(1.0).unwrap();
        let cfg = SolverConfig::default();
        assert_eq!(atom_boundary_fluxes(&s, 0, &ip, &cfg).unwrap(), (0.0, 1.0));
        let m = 1e6;
        let cfg_p = SolverConfig { phantom_mode: PhantomMode::FinitePhantom { m }, u_cap: 1e5, ..Default::default() };
        let (hm, hp) = atom_boundary_fluxes(&s, 0, &ip, &cfg_p).unwrap();
        assert_eq!(hm, 0.0);
        assert!((hp - (1.0 - 1.0 / (1.0 + m))).abs() < 1e-15);
        let b = FluxModel::bump();
        let (hm, hp) = atom_boundary_fluxes(&s, 0, &b, &cfg).unwrap();
        assert_eq!(hm, 0.0);
        assert!((hp - 0.5).abs() < 1e-14);

        let mut dead = s.clone();
        dead.atoms[0].alive = false;
        assert!(matches!(atom_boundary_fluxes(&dead, 0, &ip, &cfg), Err(Error::DeadAtom(0))));
    }

    #[test]
    fn constant_state_is_stationary() {
        let spec = InitialSpec { pieces: vec![Piece { from: -1.0, to: 3.0, value: 0.7 }], ..Default::default() };
        let (s, _) = MeasureState::from_config(grid(80), &spec, 1e6).unwrap();
        let flux = FluxModel::bump();
        let cfg = SolverConfig { end_time: 0.5, ..Default::default() };
        let traj = run(&s, &flux, &cfg).unwrap();
        assert_eq!(traj.final_state().regular, s.regular);
    }

    #[test]
    fn single_step_decays_the_example_atom() {
        let mut s = delta_state(400);
        let flux = FluxModel::inverse_power(1.0).unwrap();
        let cfg = SolverConfig::default();
        let mut ledger = AtomLedger::for_state(&s);
        let dt = 0.001;
        let recs = step(&mut s, &mut ledger, &flux, &cfg, dt).unwrap();
        assert_eq!(recs.len(), 1);
        assert!((s.atoms[0].mass - (1.0 - dt)).abs() < 1e-15);
        assert!(recs[0].balance_residual < 1e-15);
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let mut s = delta_state(400);
        let flux = FluxModel::inverse_power(1.0).unwrap();
        let mut ledger = AtomLedger::for_state(&s);
        assert!(matches!(step(&mut s, &mut ledger, &flux, &SolverConfig::default(), 0.02), Err(Error::Cfl { .. })));
    }

    #[test]
    fn oversized_step_is_split_at_extinction() {
        let mut s = delta_state(400);
        s.atoms[0].mass = 0.002;
        let flux = FluxModel::inverse_power(1.0).unwrap();
        let mut ledger = AtomLedger::for_state(&s);
        let recs = step(&mut s, &mut ledger, &flux, &SolverConfig::default(), 0.005).unwrap();
        assert_eq!(recs.len(), 2);
        assert!((recs[0].dt - 0.002).abs() < 1e-15);
        assert!(!s.atoms[0].alive);
        assert_eq!(s.atoms[0].mass, 0.0);
        assert!((s.atoms[0].extinction_time.unwrap() - 0.002).abs() < 1e-15);
        assert!((s.time - 0.005).abs() < 1e-15);
    }

    #[test]
    fn zero_end_time_gives_one_snapshot() {
        let s = delta_state(40);
        let flux = FluxModel::inverse_power(1.0).unwrap();
        let cfg = SolverConfig { end_time: 0.0, ..Default::default() };
        let traj = run(&s, &flux, &cfg).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0], s);
    }

    #[test]
    fn after_extinction_interface_uses_godunov() {
        let s = delta_state(100);
        let flux = FluxModel::inverse_power(1.0).unwrap();
        let cfg = SolverConfig { end_time: 1.2, history_stride: 0, ..Default::default() };
        let traj = run(&s, &flux, &cfg).unwrap();
        let fin = traj.final_state();
        assert!(!fin.atoms[0].alive);
        let t_ext = traj.ledger.atoms[0].extinction_time.unwrap();
        assert!((t_ext - 1.0).abs() < 1e-12);
        let e = traj.ledger.atoms[0].entries.iter().find(|e| e.t > t_ext).unwrap();
        assert_eq!(e.mass, 0.0);
        assert!(e.h_minus.is_none());
    }

    #[test]
    fn finite_phantom_must_exceed_cap() {
        let cfg =
            SolverConfig { phantom_mode: PhantomMode::FinitePhantom { m: 10.0 }, u_cap: 100.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { cfl: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
