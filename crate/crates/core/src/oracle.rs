//! Reference solutions for the inverse-power delta problem
//! `phi(u) = 1 - (1+u)^-p`, `u_0 = delta_0`, and a generic convergence harness.
//!
//! For `t < 1` the regular part is `(p t / x)^(1/(1+p)) - 1` on `0 < x <= p t`
//! and the atom carries `1 - t`. Once the atom is gone the left edge of the
//! profile becomes a shock `xi(t)` travelling at `phi(u) / u`, which is
//! integrated numerically from `xi(1) = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{windowed_l1, Atom, Grid, MeasureState};

/// Micro-steps per ODE step in the start-up phase.
const BOOTSTRAP_SUBSTEPS: usize = 1000;
/// Length of the start-up phase in ODE steps.
const BOOTSTRAP_STEPS: usize = 10;

/// Closed-form solution with a tabulated free boundary.
#[derive(Clone, Debug)]
pub struct ExampleSolution {
    p: f64,
    /// `(t, xi)` on `[1, T]`; empty when `T <= 1`.
    xi: Vec<(f64, f64)>,
}

impl ExampleSolution {
    pub fn new(p: f64, end_time: f64, dt_ode: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidFlux(format!("exponent must be positive, got {p}")));
        }
        Ok(Self { p, xi: solve_xi(p, end_time, dt_ode)? })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn xi_table(&self) -> &[(f64, f64)] {
        &self.xi
    }

    /// Left edge of the profile: 0 before extinction, `xi(t)` after.
    pub fn left_edge(&self, t: f64) -> Result<f64> {
        if t <= 1.0 {
            return Ok(0.0);
        }
        let last = self.xi.last().map_or(1.0, |e| e.0);
        if t > last * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("free boundary tabulated only up to t = {last}")));
        }
        let k = self.xi.partition_point(|e| e.0 <= t).clamp(1, self.xi.len() - 1);
        let (a, b) = (self.xi[k - 1], self.xi[k]);
        Ok(a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0))
    }

    pub fn atom_mass(&self, t: f64) -> f64 {
        (1.0 - t).max(0.0)
    }

    /// Regular part at `(x, t)`. At `t = 0` the data is the bare atom.
    pub fn regular(&self, x: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let right = self.p * t;
        let left = self.left_edge(t)?;
        if x <= 0.0 || x < left || x > right {
            return Ok(0.0);
        }
        Ok((right / x).powf(1.0 / (1.0 + self.p)) - 1.0)
    }

    /// Exact mean of the regular part over `[a, b]`.
    pub fn cell_average(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let right = self.p * t;
        let lo = a.max(self.left_edge(t)?).max(0.0);
        let hi = b.min(right);
        if hi <= lo {
            return Ok(0.0);
        }
        let e = 1.0 / (1.0 + self.p);
        let scale = right.powf(e) / (1.0 - e);
        let antiderivative = |x: f64| scale * x.powf(1.0 - e) - x;
        Ok((antiderivative(hi) - antiderivative(lo)) / (b - a))
    }

    /// Cell averages on `grid` at time `t`, with the atom snapped to the
    /// interface nearest the origin.
    pub fn snapshot(&self, grid: &Grid, t: f64) -> Result<MeasureState> {
        let regular = (0..grid.n_cells)
            .map(|i| self.cell_average(grid.interface(i), grid.interface(i + 1), t))
            .collect::<Result<Vec<_>>>()?;
        let k = grid.nearest_interface(0.0);
        let mass = self.atom_mass(t);
        let atom = Atom {
            position: grid.interface(k),
            interface: k,
            mass,
            alive: mass > 0.0,
            extinction_time: (mass == 0.0).then_some(1.0),
        };
        Ok(MeasureState { grid: *grid, regular, atoms: vec![atom], time: t })
    }
}

/// `(regular value, atom mass)` of the example at `(x, t)`.
pub fn exact_example(p: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    let sol = ExampleSolution::new(p, t.max(1.0), 1e-3)?;
    Ok((sol.regular(x, t)?, sol.atom_mass(t)))
}

/// Shock speed of the free boundary, `phi(u) / u` with `u` the state just right of it.
fn xi_rate(p: f64, t: f64, xi: f64) -> f64 {
    if xi <= 0.0 {
        return 0.0;
    }
    let r = (p * t / xi).powf(1.0 / (1.0 + p));
    if r <= 1.0 {
        return p;
    }
    (1.0 - r.powf(-p)) / (r - 1.0)
}

/// Rate for `eta = xi^(p/(1+p))`, in which the start at `xi = 0` is regular.
fn eta_rate(p: f64, t: f64, eta: f64) -> f64 {
    let a = 1.0 / (1.0 + p);
    let b = 1.0 - a;
    if eta <= 0.0 {
        return b * (p * t).powf(-a);
    }
    let xi = eta.powf(1.0 / b);
    b * xi.powf(-a) * xi_rate(p, t, xi)
}

/// Tabulates the free boundary on `[1, end_time]`.
///
/// In `xi` the right-hand side behaves like `xi^(1/(1+p))` near zero, so
/// `xi = 0` is a spurious solution. The integration runs in
/// `eta = xi^(p/(1+p))`: a short start-up with implicit trapezoid micro-steps
/// (positive root by bisection), then classical RK4.
pub fn solve_xi(p: f64, end_time: f64, dt_ode: f64) -> Result<Vec<(f64, f64)>> {
    if end_time <= 1.0 {
        return Ok(Vec::new());
    }
    if !(dt_ode > 0.0) {
        return Err(Error::Precondition("ODE step must be positive".into()));
    }
    let b = p / (1.0 + p);
    let to_xi = |eta: f64| eta.powf(1.0 / b);
    let mut table = vec![(1.0, 0.0)];
    let mut t = 1.0;
    let mut eta = 0.0;

    let boot_end = (1.0 + BOOTSTRAP_STEPS as f64 * dt_ode).min(end_time);
    let n_micro = BOOTSTRAP_SUBSTEPS * BOOTSTRAP_STEPS;
    let delta = (boot_end - 1.0) / n_micro as f64;
    for m in 1..=n_micro {
        let t_next = 1.0 + m as f64 * delta;
        let explicit = eta + 0.5 * delta * eta_rate(p, t, eta);
        let g = |z: f64| z - explicit - 0.5 * delta * eta_rate(p, t_next, z);
        // g < 0 at the previous value, g > 0 where xi would reach p t
        let (mut lo, mut hi) = (eta, (p * t_next).powf(b));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        eta = 0.5 * (lo + hi);
        t = t_next;
        if m % BOOTSTRAP_SUBSTEPS == 0 {
            table.push((t, to_xi(eta)));
        }
    }

    let n_steps = ((end_time - t) / dt_ode).ceil() as usize;
    let h = if n_steps > 0 { (end_time - t) / n_steps as f64 } else { 0.0 };
    let t0 = t;
    for s in 0..n_steps {
        let k1 = eta_rate(p, t, eta);
        let k2 = eta_rate(p, t + 0.5 * h, eta + 0.5 * h * k1);
        let k3 = eta_rate(p, t + 0.5 * h, eta + 0.5 * h * k2);
        let k4 = eta_rate(p, t + h, eta + h * k3);
        eta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t0 + (s + 1) as f64 * h;
        table.push((t, to_xi(eta)));
    }

    for w in table.windows(2) {
        if !(w[1].1 >= w[0].1) {
            return Err(Error::Internal(format!("free boundary decreased near t = {}", w[1].0)));
        }
    }
    if let Some(&(t, x)) = table.iter().find(|&&(t, x)| x >= p * t) {
        return Err(Error::Internal(format!("free boundary {x} reached p t at t = {t}")));
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub dx: f64,
    pub l1_error: f64,
    pub atom_mass_error: f64,
    /// `log2(previous error / this error)`; absent on the coarsest grid.
    pub observed_order: Option<f64>,
}

/// Runs `simulate` on each grid size and compares the result with `reference`
/// on the same grid. The L1 error is restricted to `window` when given.
pub fn convergence_study<S, R>(
    grids: &[usize],
    window: Option<(f64, f64)>,
    mut simulate: S,
    mut reference: R,
) -> Result<Vec<ConvergenceRow>>
where
    S: FnMut(usize) -> Result<MeasureState>,
    R: FnMut(&Grid, f64) -> Result<MeasureState>,
{
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(grids.len());
    for &n in grids {
        let computed = simulate(n)?;
        let exact = reference(&computed.grid, computed.time)?;
        if exact.grid != computed.grid {
            return Err(Error::GridMismatch);
        }
        let g = computed.grid;
        let (xl, xr) = window.unwrap_or((g.x_lo, g.x_hi));
        let l1_error = windowed_l1(&g, &computed.regular, &exact.regular, xl, xr);
        let atom_mass_error = computed
            .atoms
            .iter()
            .map(|a| {
                let m = exact.atoms.iter().find(|b| b.interface == a.interface).map_or(0.0, |b| b.mass);
                (a.mass - m).abs()
            })
            .sum();
        let observed_order = rows.last().map(|prev| (prev.l1_error / l1_error).log2());
        rows.push(ConvergenceRow { n_cells: n, dx: g.dx(), l1_error, atom_mass_error, observed_order });
    }
    Ok(rows)
}
