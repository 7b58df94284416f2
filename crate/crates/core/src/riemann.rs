//! Self-similar Riemann solutions read off flux hulls, and the modified
//! Riemann problem with a Dirac atom at the interface.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::{FluxModel, Visible};
use crate::hull::HullEdge;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Wave {
    Shock {
        left: f64,
        right: f64,
        speed: f64,
    },
    /// `table` holds `(speed, state)` nodes with nondecreasing speeds,
    /// interpolated linearly.
    Rarefaction {
        left: f64,
        right: f64,
        speed_lo: f64,
        speed_hi: f64,
        #[serde(skip)]
        table: Vec<(f64, f64)>,
    },
}

impl Wave {
    pub fn speed_lo(&self) -> f64 {
        match *self {
            Wave::Shock { speed, .. } => speed,
            Wave::Rarefaction { speed_lo, .. } => speed_lo,
        }
    }

    pub fn speed_hi(&self) -> f64 {
        match *self {
            Wave::Shock { speed, .. } => speed,
            Wave::Rarefaction { speed_hi, .. } => speed_hi,
        }
    }

    pub fn left(&self) -> f64 {
        match *self {
            Wave::Shock { left, .. } | Wave::Rarefaction { left, .. } => left,
        }
    }

    pub fn right(&self) -> f64 {
        match *self {
            Wave::Shock { right, .. } | Wave::Rarefaction { right, .. } => right,
        }
    }
}

/// Ordered waves of a self-similar solution `u(x, t) = U(x / t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveFan {
    pub far_left: f64,
    pub far_right: f64,
    pub waves: Vec<Wave>,
    /// Set when an infinite state was replaced by this finite cap.
    pub truncated_at: Option<f64>,
}

impl WaveFan {
    pub fn constant(u: f64) -> Self {
        Self { far_left: u, far_right: u, waves: Vec::new(), truncated_at: None }
    }

    /// `U(xi)`; at a shock speed the right state is returned.
    pub fn eval(&self, xi: f64) -> f64 {
        let mut state = self.far_left;
        for w in &self.waves {
            match w {
                Wave::Shock { right, speed, .. } => {
                    if xi < *speed {
                        return state;
                    }
                    state = *right;
                }
                Wave::Rarefaction { right, speed_lo, speed_hi, table, .. } => {
                    if xi < *speed_lo {
                        return state;
                    }
                    if xi <= *speed_hi {
                        return interpolate(table, xi);
                    }
                    state = *right;
                }
            }
        }
        state
    }

    /// Piecewise-linear description of `U` on `[xi_lo, xi_hi]` as
    /// `(xi0, xi1, u0, u1)` segments.
    fn segments(&self, xi_lo: f64, xi_hi: f64) -> Vec<(f64, f64, f64, f64)> {
        let mut segs = Vec::new();
        let mut cursor = xi_lo;
        let mut state = self.far_left;
        let push = |a: f64, b: f64, u0: f64, u1: f64, segs: &mut Vec<_>| {
            let (a2, b2) = (a.max(xi_lo), b.min(xi_hi));
            if b2 > a2 {
                let slope = if b > a { (u1 - u0) / (b - a) } else { 0.0 };
                segs.push((a2, b2, u0 + slope * (a2 - a), u0 + slope * (b2 - a)));
            }
        };
        for w in &self.waves {
            match w {
                Wave::Shock { right, speed, .. } => {
                    push(cursor, *speed, state, state, &mut segs);
                    cursor = cursor.max(*speed);
                    state = *right;
                }
                Wave::Rarefaction { right, speed_lo, table, .. } => {
                    push(cursor, *speed_lo, state, state, &mut segs);
                    for p in table.windows(2) {
                        push(p[0].0, p[1].0, p[0].1, p[1].1, &mut segs);
                    }
                    cursor = cursor.max(table.last().map_or(*speed_lo, |p| p.0));
                    state = *right;
                }
            }
        }
        push(cursor, xi_hi, state, state, &mut segs);
        segs
    }

    /// Exact integral of `U` over `[xi_a, xi_b]`.
    pub fn integrate(&self, xi_a: f64, xi_b: f64) -> f64 {
        self.segments(xi_a, xi_b).iter().map(|&(a, b, u0, u1)| 0.5 * (u0 + u1) * (b - a)).sum()
    }
}

fn interpolate(table: &[(f64, f64)], xi: f64) -> f64 {
    let k = table.partition_point(|p| p.0 < xi);
    if k == 0 {
        return table[0].1;
    }
    if k >= table.len() {
        return table[table.len() - 1].1;
    }
    let (a, b) = (table[k - 1], table[k]);
    if b.0 == a.0 {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (xi - a.0) / (b.0 - a.0)
}

fn check_state(u: f64) -> Result<()> {
    if u >= 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(u))
    }
}

/// Entropy solution of the Riemann problem with states `u_left | u_right`:
/// the convex hull on `[u_left, u_right]` when `u_left < u_right`, the concave
/// hull on `[u_right, u_left]` otherwise. Hull edges that skip samples with
/// a visible gap become shocks; runs of tight edges become rarefactions.
pub fn solve_standard_riemann(u_left: f64, u_right: f64, flux: &FluxModel) -> Result<WaveFan> {
    check_state(u_left)?;
    check_state(u_right)?;
    if u_left == u_right {
        return Ok(WaveFan::constant(u_left));
    }
    // Edges in traversal order from the left state to the right state,
    // each as (from_state, to_state, slope, is_shock).
    let dev_tol = 1e-12 * (1.0 + flux.sup_bound());
    let classify = |e: &HullEdge| e.skipped > 0 && e.deviation > dev_tol;
    let path: Vec<(f64, f64, f64, bool)> = if u_left < u_right {
        flux.convex_hull(u_left, u_right)?.edges().iter().map(|e| (e.left.0, e.right.0, e.slope, classify(e))).collect()
    } else {
        flux.concave_hull(u_right, u_left)?
            .edges()
            .iter()
            .rev()
            .map(|e| (e.right.0, e.left.0, e.slope, classify(e)))
            .collect()
    };

    let mut waves = Vec::new();
    let mut i = 0;
    while i < path.len() {
        let (from, to, slope, shock) = path[i];
        if shock {
            waves.push(Wave::Shock { left: from, right: to, speed: slope });
            i += 1;
            continue;
        }
        let start = i;
        while i < path.len() && !path[i].3 {
            i += 1;
        }
        let run = &path[start..i];
        let mut table = Vec::with_capacity(run.len() + 1);
        table.push((run[0].2, run[0].0));
        for w in run.windows(2) {
            table.push((0.5 * (w[0].2 + w[1].2), w[0].1));
        }
        table.push((run[run.len() - 1].2, run[run.len() - 1].1));
        // guard against rounding in the averaged speeds
        for k in 1..table.len() {
            if table[k].0 < table[k - 1].0 {
                table[k].0 = table[k - 1].0;
            }
        }
        waves.push(Wave::Rarefaction {
            left: run[0].0,
            right: run[run.len() - 1].1,
            speed_lo: table[0].0,
            speed_hi: table[table.len() - 1].0,
            table,
        });
    }
    Ok(WaveFan { far_left: u_left, far_right: u_right, waves, truncated_at: None })
}

/// Solution of the Riemann problem `u_minus | u_plus` with an atom of mass
/// `atom_mass` at the origin, valid for `0 < t < tau`.
#[derive(Clone, Debug, Serialize)]
pub struct ModifiedRiemannSolution {
    pub u_minus: f64,
    pub u_plus: f64,
    pub atom_mass: f64,
    /// `s_-(u_minus)` with its flux value.
    pub left_trace: Visible,
    /// `s_+(u_plus)` with its flux value.
    pub right_trace: Visible,
    pub left_fan: WaveFan,
    pub right_fan: WaveFan,
    /// `phi(s_+(u_plus)) - phi(s_-(u_minus))`.
    pub atom_decay_rate: f64,
    /// `atom_mass / atom_decay_rate`, infinite for a vanishing rate.
    #[serde(serialize_with = "serialize_extended_time")]
    pub tau: f64,
}

fn serialize_extended_time<S: serde::Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_finite() {
        s.serialize_f64(*t)
    } else {
        s.serialize_str("inf")
    }
}

impl ModifiedRiemannSolution {
    pub fn atom_mass_at(&self, t: f64) -> f64 {
        (self.atom_mass - self.atom_decay_rate * t).max(0.0)
    }

    /// Regular part at `(x, t)`, `t > 0`.
    pub fn regular(&self, x: f64, t: f64) -> f64 {
        if x < 0.0 {
            self.left_fan.eval(x / t)
        } else {
            self.right_fan.eval(x / t)
        }
    }

    /// Exact average of the regular part over `[a, b]` at time `t > 0`.
    pub fn cell_average(&self, a: f64, b: f64, t: f64) -> f64 {
        let mut total = 0.0;
        if a < 0.0 {
            total += t * self.left_fan.integrate(a / t, b.min(0.0) / t);
        }
        if b > 0.0 {
            total += t * self.right_fan.integrate(a.max(0.0) / t, b / t);
        }
        total / (b - a)
    }
}

/// Builds the composite solution: the left fan joins `u_minus` to
/// `s_-(u_minus)`, the right fan joins `s_+(u_plus)` to `u_plus`, and the atom
/// decays linearly at rate `phi(s_+(u_plus)) - phi(s_-(u_minus))`. Infinite
/// visible points are truncated at `u_cap` for the fans only; the decay rate
/// uses the exact limit values.
pub fn solve_modified_riemann(
    u_minus: f64,
    u_plus: f64,
    atom_mass: f64,
    flux: &FluxModel,
    u_cap: f64,
) -> Result<ModifiedRiemannSolution> {
    if !(atom_mass > 0.0) || !atom_mass.is_finite() {
        return Err(Error::Unsupported(format!(
            "modified Riemann problem needs a positive atom mass, got {atom_mass}; \
             use solve_standard_riemann"
        )));
    }
    check_state(u_minus)?;
    check_state(u_plus)?;
    let left_trace = flux.s_minus(u_minus)?;
    let right_trace = flux.s_plus(u_plus)?;

    let left_end = left_trace.s_value.finite().unwrap_or(u_cap.max(u_minus));
    let mut left_fan = solve_standard_riemann(u_minus, left_end, flux)?;
    if left_trace.s_value.is_infinite() {
        left_fan.truncated_at = Some(left_end);
    }
    let right_start = right_trace.s_value.finite().unwrap_or(u_cap.max(u_plus));
    let mut right_fan = solve_standard_riemann(right_start, u_plus, flux)?;
    if right_trace.s_value.is_infinite() {
        right_fan.truncated_at = Some(right_start);
    }

    // Neither fan may cross the atom.
    let speed_tol = 1e-6 * flux.lipschitz_bound();
    if let Some(w) = left_fan.waves.iter().find(|w| w.speed_hi() > speed_tol) {
        return Err(Error::Internal(format!("left fan emits a wave of speed {} into x > 0", w.speed_hi())));
    }
    if let Some(w) = right_fan.waves.iter().find(|w| w.speed_lo() < -speed_tol) {
        return Err(Error::Internal(format!("right fan emits a wave of speed {} into x < 0", w.speed_lo())));
    }

    let mut rate = right_trace.flux_at_s - left_trace.flux_at_s;
    if rate < 0.0 {
        if rate < -1e-12 * (1.0 + flux.sup_bound()) {
            return Err(Error::Internal(format!("negative atom decay rate {rate}")));
        }
        rate = 0.0;
    }
    let tau = if rate > 0.0 { atom_mass / rate } else { f64::INFINITY };
    Ok(ModifiedRiemannSolution {
        u_minus,
        u_plus,
        atom_mass,
        left_trace,
        right_trace,
        left_fan,
        right_fan,
        atom_decay_rate: rate,
        tau,
    })
}
