//! Discrete nonnegative Radon measures: cell averages for the regular part and
//! a sorted list of Dirac atoms sitting on cell interfaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[x_lo, x_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, n_cells: usize) -> Result<Self> {
        if !(x_lo < x_hi && x_lo.is_finite() && x_hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("grid needs x_lo < x_hi, got [{x_lo}, {x_hi}]")));
        }
        if n_cells == 0 {
            return Err(Error::InvalidConfig("grid needs at least one cell".into()));
        }
        Ok(Self { x_lo, x_hi, n_cells })
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx()
    }

    /// Position of interface `k` (`0..=n_cells`); cell `i` spans interfaces `i` and `i + 1`.
    pub fn interface(&self, k: usize) -> f64 {
        if k == self.n_cells {
            self.x_hi
        } else {
            self.x_lo + k as f64 * self.dx()
        }
    }

    pub fn nearest_interface(&self, x: f64) -> usize {
        let k = ((x - self.x_lo) / self.dx()).round();
        k.clamp(0.0, self.n_cells as f64) as usize
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { n_cells: self.n_cells * factor, ..*self }
    }
}

/// A Dirac mass on a cell interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub interface: usize,
    pub mass: f64,
    pub alive: bool,
    pub extinction_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureState {
    pub grid: Grid,
    pub regular: Vec<f64>,
    pub atoms: Vec<Atom>,
    pub time: f64,
}

/// Piecewise-constant contribution `value` on `[from, to)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub from: f64,
    pub to: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub x: f64,
    pub mass: f64,
}

/// Initial datum: piecewise-constant pieces (summed where they overlap), an
/// optional piecewise-linear sampled profile (zero outside its range) and atoms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub pieces: Vec<Piece>,
    #[serde(default)]
    pub samples: Vec<[f64; 2]>,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
}

impl InitialSpec {
    /// Exact integral of the regular part over `[a, b]`.
    pub fn regular_integral(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            let lo = a.max(p.from);
            let hi = b.min(p.to);
            if hi > lo {
                total += p.value * (hi - lo);
            }
        }
        for w in self.samples.windows(2) {
            let ([x0, y0], [x1, y1]) = (w[0], w[1]);
            let lo = a.max(x0);
            let hi = b.min(x1);
            if hi > lo && x1 > x0 {
                let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
            }
        }
        total
    }

    /// Mean of the regular part over `[a, b]`; exact when a single piece covers the interval.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        let touches_samples = self.samples.windows(2).any(|w| w[1][0] > a && w[0][0] < b);
        let mut overlapping = self.pieces.iter().filter(|p| p.to > a && p.from < b);
        if let (Some(p), None, false) = (overlapping.next(), overlapping.next(), touches_samples) {
            if p.from <= a && p.to >= b {
                return p.value;
            }
        }
        self.regular_integral(a, b) / (b - a)
    }

    pub fn analytic_mass(&self) -> f64 {
        let regular = self.regular_integral(f64::NEG_INFINITY, f64::INFINITY);
        regular + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }
}

impl MeasureState {
    /// Discretises `spec` on `grid`. Atoms are snapped to the nearest interior
    /// interface; zero-mass atoms are dropped with a warning; the regular part
    /// is cell-averaged and truncated at `u_cap`.
    pub fn from_config(grid: Grid, spec: &InitialSpec, u_cap: f64) -> Result<(Self, Vec<String>)> {
        let mut warnings = Vec::new();
        for p in &spec.pieces {
            if !(p.value >= 0.0 && p.value.is_finite()) || !(p.from <= p.to) {
                return Err(Error::InvalidInitial(format!(
                    "regular part must be a nonnegative density: piece [{}, {}) has value {}",
                    p.from, p.to, p.value
                )));
            }
        }
        if spec.samples.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidInitial("sample abscissae must increase strictly".into()));
        }
        if let Some(s) = spec.samples.iter().find(|s| !(s[1] >= 0.0 && s[1].is_finite())) {
            return Err(Error::InvalidInitial(format!(
                "regular part must be a nonnegative density: sample at x = {} has value {}",
                s[0], s[1]
            )));
        }
        let regular: Vec<f64> =
            (0..grid.n_cells).map(|i| spec.cell_average(grid.interface(i), grid.interface(i + 1)).min(u_cap)).collect();

        let mut atoms: Vec<Atom> = Vec::new();
        for a in &spec.atoms {
            if !a.mass.is_finite() || a.mass < 0.0 {
                return Err(Error::InvalidInitial(format!(
                    "atom masses must be positive: atom at x = {} has mass {}",
                    a.x, a.mass
                )));
            }
            if a.mass == 0.0 {
                let msg = format!("dropping zero-mass atom at x = {}", a.x);
                log::warn!("{msg}");
                warnings.push(msg);
                continue;
            }
            let k = grid.nearest_interface(a.x);
            if k == 0 || k == grid.n_cells {
                return Err(Error::InvalidInitial(format!(
                    "atom at x = {} does not lie strictly inside the domain",
                    a.x
                )));
            }
            if atoms.iter().any(|b| b.interface == k) {
                return Err(Error::InvalidInitial(format!(
                    "two atoms snap to the same interface x = {}",
                    grid.interface(k)
                )));
            }
            atoms.push(Atom {
                position: grid.interface(k),
                interface: k,
                mass: a.mass,
                alive: true,
                extinction_time: None,
            });
        }
        atoms.sort_by_key(|a| a.interface);
        Ok((Self { grid, regular, atoms, time: 0.0 }, warnings))
    }

    pub fn regular_mass(&self) -> f64 {
        self.regular.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn singular_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Regular mass plus atom masses.
    pub fn total_mass(&self) -> f64 {
        self.regular_mass() + self.singular_mass()
    }

    pub fn live_atoms(&self) -> impl Iterator<Item = (usize, &Atom)> {
        self.atoms.iter().enumerate().filter(|(_, a)| a.alive)
    }

    /// Partial order on measures over the same grid, up to `tol`.
    pub fn leq(&self, other: &MeasureState, tol: f64) -> Result<bool> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.regular.iter().zip(&other.regular).any(|(a, b)| *a > *b + tol) {
            return Ok(false);
        }
        for a in self.atoms.iter().filter(|a| a.mass > tol) {
            let matched = other.atoms.iter().any(|b| b.interface == a.interface && b.mass >= a.mass - tol);
            if !matched {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// L1 distance of the regular parts over `[x_left, x_right]`, partial cells
    /// weighted by their overlap with the window.
    pub fn l1_distance_regular(&self, other: &MeasureState, x_left: f64, x_right: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(windowed_l1(&self.grid, &self.regular, &other.regular, x_left, x_right))
    }
}

/// Windowed L1 distance between two cell-average arrays on `grid`.
pub fn windowed_l1(grid: &Grid, a: &[f64], b: &[f64], x_left: f64, x_right: f64) -> f64 {
    if !(x_right > x_left) {
        return 0.0;
    }
    let dx = grid.dx();
    let first = (((x_left - grid.x_lo) / dx).floor().max(0.0) as usize).min(grid.n_cells);
    let mut sum = 0.0;
    for i in first..grid.n_cells {
        let (lo, hi) = (grid.interface(i), grid.interface(i + 1));
        if lo >= x_right {
            break;
        }
        let overlap = hi.min(x_right) - lo.max(x_left);
        if overlap > 0.0 {
            sum += (a[i] - b[i]).abs() * overlap;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(-1.0, 3.0, 400).unwrap()
    }

    fn state(regular: Vec<f64>, atoms: Vec<Atom>) -> MeasureState {
        MeasureState { grid: grid(), regular, atoms, time: 0.0 }
    }

    fn atom(k: usize, mass: f64) -> Atom {
        Atom { position: grid().interface(k), interface: k, mass, alive: true, extinction_time: None }
    }

    #[test]
    fn total_mass_examples() {
        let z = state(vec![0.0; 400], vec![]);
        assert_eq!(z.total_mass(), 0.0);
        let one = state(vec![0.0; 400], vec![atom(100, 1.0)]);
        assert_eq!(one.total_mass(), 1.0);
        let g = Grid::new(0.0, 2.0, 200).unwrap();
        let s = MeasureState {
            grid: g,
            regular: vec![0.5; 200],
            atoms: vec![Atom { position: 1.0, interface: 100, mass: 0.25, alive: true, extinction_time: None }],
            time: 0.0,
        };
        assert!((s.total_mass() - 1.25).abs() < 1e-13);
    }

    #[test]
    fn leq_examples() {
        let b = state((0..400).map(|i| (i % 7) as f64).collect(), vec![atom(100, 1.0)]);
        assert!(b.leq(&b, 0.0).unwrap());
        let mut half = b.clone();
        half.regular.iter_mut().for_each(|v| *v *= 0.5);
        half.atoms[0].mass = 0.5;
        assert!(half.leq(&b, 0.0).unwrap());
        let tol = 1e-6;
        let mut lowered = b.clone();
        lowered.regular[3] -= 2.0 * tol;
        assert!(!b.leq(&lowered, tol).unwrap());
        let other =
            MeasureState { grid: Grid::new(0.0, 1.0, 10).unwrap(), regular: vec![0.0; 10], atoms: vec![], time: 0.0 };
        assert!(matches!(b.leq(&other, 0.0), Err(Error::GridMismatch)));
    }

    #[test]
    fn l1_examples() {
        let g = grid();
        let a = state(vec![1.0; 400], vec![]);
        let z = state(vec![0.0; 400], vec![]);
        assert_eq!(a.l1_distance_regular(&a, -1.0, 3.0).unwrap(), 0.0);
        assert!((a.l1_distance_regular(&z, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-12);
        let ind = state((0..400).map(|i| if (0.0..1.0).contains(&g.center(i)) { 1.0 } else { 0.0 }).collect(), vec![]);
        assert!((ind.l1_distance_regular(&z, -1.0, 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(a.l1_distance_regular(&z, 1.0, 1.0).unwrap(), 0.0);
        // partial cell: half of a cell of width 0.01
        assert!((a.l1_distance_regular(&z, 0.0, 0.005).unwrap() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn from_config_examples() {
        let spec = InitialSpec { atoms: vec![AtomSpec { x: 0.0, mass: 1.0 }], ..Default::default() };
        let (s, w) = MeasureState::from_config(grid(), &spec, 1e6).unwrap();
        assert!(w.is_empty());
        assert_eq!(s.atoms.len(), 1);
        assert_eq!(s.atoms[0].interface, 100);
        assert!(s.atoms[0].position.abs() < 1e-15);
        assert_eq!(s.atoms[0].mass, 1.0);

        let spec = InitialSpec { atoms: vec![AtomSpec { x: 0.0, mass: 0.0 }], ..Default::default() };
        let (s, w) = MeasureState::from_config(grid(), &spec, 1e6).unwrap();
        assert!(s.atoms.is_empty());
        assert_eq!(w.len(), 1);

        let spec = InitialSpec { pieces: vec![Piece { from: 0.0, to: 1.0, value: 1.0 }], ..Default::default() };
        let (s, _) = MeasureState::from_config(grid(), &spec, 1e6).unwrap();
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_config_errors() {
        let neg = InitialSpec { atoms: vec![AtomSpec { x: 0.0, mass: -1.0 }], ..Default::default() };
        assert!(matches!(MeasureState::from_config(grid(), &neg, 1e6), Err(Error::InvalidInitial(_))));
        let dup = InitialSpec {
            atoms: vec![AtomSpec { x: 0.0, mass: 1.0 }, AtomSpec { x: 0.001, mass: 1.0 }],
            ..Default::default()
        };
        assert!(matches!(MeasureState::from_config(grid(), &dup, 1e6), Err(Error::InvalidInitial(_))));
        let neg_density = InitialSpec { pieces: vec![Piece { from: 0.0, to: 1.0, value: -0.1 }], ..Default::default() };
        assert!(matches!(MeasureState::from_config(grid(), &neg_density, 1e6), Err(Error::InvalidInitial(_))));
        let outside = InitialSpec { atoms: vec![AtomSpec { x: 5.0, mass: 1.0 }], ..Default::default() };
        assert!(MeasureState::from_config(grid(), &outside, 1e6).is_err());
    }

    #[test]
    fn cap_truncates_regular_part() {
        let spec = InitialSpec { pieces: vec![Piece { from: 0.0, to: 1.0, value: 50.0 }], ..Default::default() };
        let (s, _) = MeasureState::from_config(grid(), &spec, 10.0).unwrap();
        assert!(s.regular.iter().all(|&v| v <= 10.0));
    }
}
