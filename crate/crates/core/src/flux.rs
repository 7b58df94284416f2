//! Flux functions on `[0, inf)` and the quantities derived from them.
//!
//! A [`FluxModel`] wraps an evaluation rule together with its Lipschitz and
//! sup bounds and a declared description of its behaviour as `u -> inf`.
//! Extrema over half-lines are decided from that tail descriptor; extrema on
//! bounded ranges use candidate points (local extrema of the sampled flux,
//! refined by golden-section search) found once at construction.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{Hull, HullKind};

/// Golden-section iterations used to refine sampled extrema.
const GOLDEN_ITERS: usize = 30;
/// Upper bound on the number of samples used for a single hull.
const MAX_HULL_SAMPLES: usize = 4_000_000;
/// Upper bound on samples used to scan a bounded stretch of an oscillating tail.
const MAX_TAIL_SCAN: usize = 1_000_000;

/// A state in `[0, inf]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(u) => Some(u),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// Numeric view, with `f64::INFINITY` for the infinite state.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl From<f64> for Extended {
    fn from(u: f64) -> Self {
        if u.is_infinite() {
            Extended::Infinite
        } else {
            Extended::Finite(u)
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(u) => write!(f, "{u}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

/// Behaviour of the flux as `u -> inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    /// The flux is monotone on `[monotone_from, inf)` and tends to `limit`.
    AsymptoticLimit { limit: f64, monotone_from: f64 },
    /// Beyond `envelope_from` the flux stays in `[liminf, limsup]` and comes
    /// arbitrarily close to both ends.
    Oscillating { liminf: f64, limsup: f64, envelope_from: f64 },
}

impl Tail {
    /// Start of the tail region.
    pub fn start(&self) -> f64 {
        match *self {
            Tail::AsymptoticLimit { monotone_from, .. } => monotone_from,
            Tail::Oscillating { envelope_from, .. } => envelope_from,
        }
    }

    pub fn limsup(&self) -> f64 {
        match *self {
            Tail::AsymptoticLimit { limit, .. } => limit,
            Tail::Oscillating { limsup, .. } => limsup,
        }
    }

    pub fn liminf(&self) -> f64 {
        match *self {
            Tail::AsymptoticLimit { limit, .. } => limit,
            Tail::Oscillating { liminf, .. } => liminf,
        }
    }
}

/// Flux sampled at knots and interpolated by cubic Hermite pieces; constant
/// beyond the last knot.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicTable {
    u: Vec<f64>,
    phi: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicTable {
    pub fn new(u: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if u.len() != phi.len() || u.len() < 2 {
            return Err(Error::InvalidFlux("table needs at least two (u, phi) pairs of equal length".into()));
        }
        if u[0] != 0.0 {
            return Err(Error::InvalidFlux("table must start at u = 0".into()));
        }
        if u.windows(2).any(|w| w[1] <= w[0]) || u.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFlux("table knots must be finite and strictly increasing".into()));
        }
        let n = u.len();
        let mut slopes = vec![0.0; n];
        for i in 0..n {
            slopes[i] = if i == 0 {
                (phi[1] - phi[0]) / (u[1] - u[0])
            } else if i == n - 1 {
                // flat continuation beyond the last knot
                0.0
            } else {
                let (h0, h1) = (u[i] - u[i - 1], u[i + 1] - u[i]);
                let (d0, d1) = ((phi[i] - phi[i - 1]) / h0, (phi[i + 1] - phi[i]) / h1);
                (h1 * d0 + h0 * d1) / (h0 + h1)
            };
        }
        Ok(Self { u, phi, slopes })
    }

    pub fn last_knot(&self) -> f64 {
        *self.u.last().expect("nonempty")
    }

    pub fn last_value(&self) -> f64 {
        *self.phi.last().expect("nonempty")
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.u.len();
        if x >= self.u[n - 1] {
            return self.phi[n - 1];
        }
        let i = self.u.partition_point(|&k| k <= x).saturating_sub(1).min(n - 2);
        let h = self.u[i + 1] - self.u[i];
        let t = (x - self.u[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.phi[i] + h10 * h * self.slopes[i] + h01 * self.phi[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// How the flux is evaluated.
#[derive(Clone)]
pub enum FluxRule {
    /// `1 - (1 + u)^(-p)`.
    InversePower {
        p: f64,
    },
    /// `u / (1 + u^2)`.
    Bump,
    /// `tanh(u)`.
    MonotoneTanh,
    /// `level * (1 - (1 - u/knee)^3)` below `knee`, constant `level` above.
    Equilibrium {
        level: f64,
        knee: f64,
    },
    Table(CubicTable),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for FluxRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxRule::InversePower { p } => write!(f, "InversePower {{ p: {p} }}"),
            FluxRule::Bump => f.write_str("Bump"),
            FluxRule::MonotoneTanh => f.write_str("MonotoneTanh"),
            FluxRule::Equilibrium { level, knee } => {
                write!(f, "Equilibrium {{ level: {level}, knee: {knee} }}")
            }
            FluxRule::Table(t) => write!(f, "Table({} knots)", t.u.len()),
            FluxRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl FluxRule {
    fn eval(&self, u: f64) -> f64 {
        match self {
            FluxRule::InversePower { p } => 1.0 - (1.0 + u).powf(-p),
            FluxRule::Bump => u / (1.0 + u * u),
            FluxRule::MonotoneTanh => u.tanh(),
            FluxRule::Equilibrium { level, knee } => {
                if u >= *knee {
                    *level
                } else {
                    let r = 1.0 - u / knee;
                    level * (1.0 - r * r * r)
                }
            }
            FluxRule::Table(t) => t.eval(u),
            FluxRule::Custom(f) => f(u),
        }
    }

    fn derivative(&self, u: f64) -> Option<f64> {
        match self {
            FluxRule::InversePower { p } => Some(p * (1.0 + u).powf(-p - 1.0)),
            FluxRule::Bump => {
                let d = 1.0 + u * u;
                Some((1.0 - u * u) / (d * d))
            }
            FluxRule::MonotoneTanh => {
                let c = u.cosh();
                Some(1.0 / (c * c))
            }
            FluxRule::Equilibrium { level, knee } => {
                if u >= *knee {
                    Some(0.0)
                } else {
                    let r = 1.0 - u / knee;
                    Some(3.0 * level * r * r / knee)
                }
            }
            FluxRule::Table(_) | FluxRule::Custom(_) => None,
        }
    }

    /// Short human-readable descriptor.
    pub fn describe(&self) -> String {
        match self {
            FluxRule::InversePower { p } => format!("inverse_power p={p}"),
            FluxRule::Bump => "bump".into(),
            FluxRule::MonotoneTanh => "monotone_tanh".into(),
            FluxRule::Equilibrium { level, knee } => format!("equilibrium level={level} knee={knee}"),
            FluxRule::Table(t) => format!("table ({} knots)", t.u.len()),
            FluxRule::Custom(_) => "custom".into(),
        }
    }
}

/// Location and flux value of `s_+` or `s_-`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Visible {
    pub s_value: Extended,
    pub flux_at_s: f64,
    /// `false` when the extremum is only a limit at infinity.
    pub attained: bool,
    /// For oscillating tails with `s = inf`, the bracket `[liminf, limsup]`
    /// within which the realised trace flux is only known to lie.
    pub tail_bracket: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    u: f64,
    value: f64,
}

/// A bounded flux `phi: [0, inf) -> R` with its derived quantities.
#[derive(Clone, Debug)]
pub struct FluxModel {
    rule: FluxRule,
    lipschitz_bound: f64,
    sup_bound: f64,
    tail: Tail,
    search_resolution: f64,
    /// Local extrema / plateau ends in `(0, tail.start())`, plus the tail start.
    candidates: Vec<Candidate>,
}

impl FluxModel {
    /// Builds a model and spot-checks the declared bounds and tail on the
    /// search grid. `search_resolution` defaults to `1e-4 * max(U_tail, 1)`.
    pub fn new(
        rule: FluxRule,
        lipschitz_bound: f64,
        sup_bound: f64,
        tail: Tail,
        search_resolution: Option<f64>,
    ) -> Result<Self> {
        if !(lipschitz_bound > 0.0 && lipschitz_bound.is_finite()) {
            return Err(Error::InvalidFlux(format!(
                "lipschitz_bound must be positive and finite, got {lipschitz_bound}"
            )));
        }
        if !(sup_bound >= 0.0 && sup_bound.is_finite()) {
            return Err(Error::InvalidFlux(format!("sup_bound must be nonnegative and finite, got {sup_bound}")));
        }
        let u_tail = tail.start();
        if !(u_tail >= 0.0 && u_tail.is_finite()) {
            return Err(Error::InvalidFlux(format!("tail start must be in [0, inf), got {u_tail}")));
        }
        if let Tail::Oscillating { liminf, limsup, .. } = tail {
            if !(liminf <= limsup) {
                return Err(Error::InvalidFlux("oscillating tail needs liminf <= limsup".into()));
            }
        }
        let resolution = search_resolution.unwrap_or(1e-4 * u_tail.max(1.0));
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidFlux(format!("search_resolution must be positive, got {resolution}")));
        }
        let mut model =
            Self { rule, lipschitz_bound, sup_bound, tail, search_resolution: resolution, candidates: Vec::new() };
        model.candidates = model.find_candidates();
        model.validate()?;
        Ok(model)
    }

    /// `1 - (1 + u)^(-p)`: increasing, concave, tends to 1.
    pub fn inverse_power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidFlux(format!("inverse_power needs p > 0, got {p}")));
        }
        Self::new(FluxRule::InversePower { p }, p, 1.0, Tail::AsymptoticLimit { limit: 1.0, monotone_from: 0.0 }, None)
    }

    /// `u / (1 + u^2)`: rises to 1/2 at `u = 1`, then decays to 0.
    pub fn bump() -> Self {
        Self::new(FluxRule::Bump, 1.0, 0.5, Tail::AsymptoticLimit { limit: 0.0, monotone_from: 2.0 }, None)
            .expect("built-in bump flux is valid")
    }

    pub fn monotone_tanh() -> Self {
        Self::new(FluxRule::MonotoneTanh, 1.0, 1.0, Tail::AsymptoticLimit { limit: 1.0, monotone_from: 0.0 }, None)
            .expect("built-in tanh flux is valid")
    }

    /// Increasing up to `knee`, constant `level` from there on.
    pub fn equilibrium(level: f64, knee: f64) -> Result<Self> {
        if !(level > 0.0 && knee > 0.0 && level.is_finite() && knee.is_finite()) {
            return Err(Error::InvalidFlux("equilibrium flux needs level > 0 and knee > 0".into()));
        }
        Self::new(
            FluxRule::Equilibrium { level, knee },
            3.0 * level / knee,
            level,
            Tail::AsymptoticLimit { limit: level, monotone_from: knee },
            None,
        )
    }

    pub fn rule(&self) -> &FluxRule {
        &self.rule
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn search_resolution(&self) -> f64 {
        self.search_resolution
    }

    pub fn describe(&self) -> String {
        self.rule.describe()
    }

    /// `phi(u)` for `u >= 0`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::Domain(u));
        }
        Ok(self.rule.eval(u))
    }

    /// Unchecked evaluation for hot loops; callers guarantee `u >= 0`.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        self.rule.eval(u)
    }

    /// `phi'(u)`, analytic for built-ins and a central difference otherwise.
    pub fn derivative(&self, u: f64) -> f64 {
        self.rule.derivative(u).unwrap_or_else(|| {
            let h = 1e-6 * (1.0 + u);
            let lo = (u - h).max(0.0);
            (self.rule.eval(u + h) - self.rule.eval(lo)) / (u + h - lo)
        })
    }

    /// Refined interior extrema of the flux on the search grid.
    pub fn critical_points(&self) -> Vec<f64> {
        let u_tail = self.tail.start();
        self.candidates.iter().map(|c| c.u).filter(|&u| u > 0.0 && u < u_tail).collect()
    }

    fn search_grid_len(&self) -> usize {
        (self.tail.start() / self.search_resolution).ceil() as usize
    }

    fn grid_point(&self, i: usize, n: usize) -> f64 {
        if i == n {
            self.tail.start()
        } else {
            i as f64 * self.search_resolution
        }
    }

    fn find_candidates(&self) -> Vec<Candidate> {
        let n = self.search_grid_len();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Candidate { u: 0.0, value: self.value(0.0) });
            return out;
        }
        let us: Vec<f64> = (0..=n).map(|i| self.grid_point(i, n)).collect();
        let vs: Vec<f64> = us.iter().map(|&u| self.value(u)).collect();
        for i in 1..n {
            let d1 = vs[i] - vs[i - 1];
            let d2 = vs[i + 1] - vs[i];
            if d1 * d2 < 0.0 {
                let maximize = d1 > 0.0;
                let (u, v) = golden(|x| self.value(x), us[i - 1], us[i + 1], maximize);
                let better = if maximize { v >= vs[i] } else { v <= vs[i] };
                out.push(if better { Candidate { u, value: v } } else { Candidate { u: us[i], value: vs[i] } });
            } else if (d1 == 0.0) != (d2 == 0.0) {
                out.push(Candidate { u: us[i], value: vs[i] });
            }
        }
        out.push(Candidate { u: us[n], value: vs[n] });
        out
    }

    fn validate(&self) -> Result<()> {
        let span = self.tail.start().max(1.0);
        let n = ((span / self.search_resolution).ceil() as usize).max(1);
        let step = span / n as f64;
        let slack = 1e-9;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=n {
            let u = i as f64 * step;
            let v = self.value(u);
            if !v.is_finite() {
                return Err(Error::InvalidFlux(format!("flux is not finite at u = {u}")));
            }
            if v.abs() > self.sup_bound * (1.0 + slack) + slack {
                return Err(Error::InvalidFlux(format!(
                    "|phi({u})| = {} exceeds sup_bound {}",
                    v.abs(),
                    self.sup_bound
                )));
            }
            if let Some((pu, pv)) = prev {
                if (v - pv).abs() > self.lipschitz_bound * (u - pu) * (1.0 + 1e-6) + slack {
                    return Err(Error::InvalidFlux(format!(
                        "lipschitz_bound {} violated near u = {u}",
                        self.lipschitz_bound
                    )));
                }
            }
            prev = Some((u, v));
        }
        if let Tail::AsymptoticLimit { limit, monotone_from } = self.tail {
            // Geometric probe of the tail: monotone and approaching the limit.
            let start_v = self.value(monotone_from);
            let dir = (limit - start_v).signum();
            let mut u = monotone_from;
            let mut pv = start_v;
            let mut du = self.search_resolution;
            let tol = 1e-12 * (1.0 + self.sup_bound);
            while u < 1e9 {
                u += du;
                du *= 1.05;
                let v = self.value(u);
                if dir != 0.0 && (v - pv) * dir < -tol {
                    return Err(Error::InvalidFlux(format!("declared monotone tail is not monotone near u = {u}")));
                }
                if dir == 0.0 && (v - limit).abs() > tol {
                    return Err(Error::InvalidFlux(format!("declared constant tail deviates from {limit} at u = {u}")));
                }
                if dir != 0.0 && (v - limit) * dir > tol {
                    return Err(Error::InvalidFlux(format!("flux overshoots its declared limit {limit} at u = {u}")));
                }
                pv = v;
            }
            if (pv - limit).abs() > 1e-3 * (1.0 + limit.abs()) && (pv - limit).abs() >= (start_v - limit).abs() {
                return Err(Error::InvalidFlux(format!("flux does not approach its declared limit {limit}")));
            }
        }
        Ok(())
    }

    /// Extremum of the flux on `[start, inf)` restricted to the tail region.
    /// Returns `(value, location)`, the location being `None` when the value is
    /// only a limit.
    fn tail_extremum(&self, start: f64, maximize: bool) -> (f64, Option<f64>) {
        match self.tail {
            Tail::AsymptoticLimit { limit, monotone_from } => {
                let s = start.max(monotone_from);
                let vs = self.value(s);
                let towards_limit = if maximize { limit > vs } else { limit < vs };
                if towards_limit {
                    (limit, None)
                } else {
                    (vs, Some(s))
                }
            }
            Tail::Oscillating { liminf, limsup, .. } => (if maximize { limsup } else { liminf }, None),
        }
    }

    /// `s_+(u0)` together with `phi(s_+(u0))`.
    pub fn s_plus(&self, u0: f64) -> Result<Visible> {
        self.visible(u0, true)
    }

    /// `s_-(u0)` together with `phi(s_-(u0))`.
    pub fn s_minus(&self, u0: f64) -> Result<Visible> {
        self.visible(u0, false)
    }

    fn visible(&self, u0: f64, maximize: bool) -> Result<Visible> {
        if !(u0 >= 0.0 && u0.is_finite()) {
            return Err(Error::Domain(u0));
        }
        let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
        let mut best_u = u0;
        let mut best_v = self.value(u0);
        let first = self.candidates.partition_point(|c| c.u <= u0);
        for c in &self.candidates[first..] {
            if better(c.value, best_v) {
                best_u = c.u;
                best_v = c.value;
            }
        }
        let (tv, tloc) = self.tail_extremum(u0, maximize);
        let mut attained = true;
        let mut s_value = Extended::Finite(best_u);
        if better(tv, best_v) {
            best_v = tv;
            match tloc {
                Some(u) => s_value = Extended::Finite(u),
                None => {
                    s_value = Extended::Infinite;
                    attained = false;
                }
            }
        }
        let tail_bracket = match (s_value, self.tail) {
            (Extended::Infinite, Tail::Oscillating { liminf, limsup, .. }) if liminf < limsup => Some((liminf, limsup)),
            _ => None,
        };
        Ok(Visible { s_value, flux_at_s: best_v, attained, tail_bracket })
    }

    /// `phi(s_+(u))`: the sup of the flux over `[u, inf)`.
    #[inline]
    pub fn flux_at_s_plus(&self, u: f64) -> f64 {
        self.half_line_extremum(u, true)
    }

    /// `phi(s_-(u))`: the inf of the flux over `[u, inf)`.
    #[inline]
    pub fn flux_at_s_minus(&self, u: f64) -> f64 {
        self.half_line_extremum(u, false)
    }

    fn half_line_extremum(&self, u: f64, maximize: bool) -> f64 {
        let pick = |a: f64, b: f64| if maximize { a.max(b) } else { a.min(b) };
        let first = self.candidates.partition_point(|c| c.u <= u);
        let mut best = self.value(u);
        for c in &self.candidates[first..] {
            best = pick(best, c.value);
        }
        pick(best, self.tail_extremum(u, maximize).0)
    }

    /// Extremum of the flux over the bounded range `[a, b]`.
    fn range_extremum(&self, a: f64, b: f64, maximize: bool) -> f64 {
        let pick = |x: f64, y: f64| if maximize { x.max(y) } else { x.min(y) };
        let mut best = pick(self.value(a), self.value(b));
        let lo = self.candidates.partition_point(|c| c.u <= a);
        let hi = self.candidates.partition_point(|c| c.u < b);
        for c in &self.candidates[lo..hi.max(lo)] {
            best = pick(best, c.value);
        }
        if let Tail::Oscillating { envelope_from, .. } = self.tail {
            let start = a.max(envelope_from);
            if b > start {
                let n = (((b - start) / self.search_resolution).ceil() as usize).clamp(1, MAX_TAIL_SCAN);
                let h = (b - start) / n as f64;
                for i in 1..n {
                    best = pick(best, self.value(start + i as f64 * h));
                }
            }
        }
        best
    }

    /// Two-point Godunov flux on finite states.
    #[inline]
    pub fn godunov(&self, a: f64, b: f64) -> f64 {
        if a == b {
            self.value(a)
        } else if a < b {
            self.range_extremum(a, b, false)
        } else {
            self.range_extremum(b, a, true)
        }
    }

    /// Godunov flux where either argument (not both) may be infinite.
    pub fn godunov_flux(&self, a: Extended, b: Extended) -> Result<f64> {
        match (a, b) {
            (Extended::Infinite, Extended::Infinite) => {
                Err(Error::Unsupported("godunov flux with both states infinite".into()))
            }
            (Extended::Infinite, Extended::Finite(b)) => {
                check_state(b)?;
                Ok(self.flux_at_s_plus(b))
            }
            (Extended::Finite(a), Extended::Infinite) => {
                check_state(a)?;
                Ok(self.flux_at_s_minus(a))
            }
            (Extended::Finite(a), Extended::Finite(b)) => {
                check_state(a)?;
                check_state(b)?;
                Ok(self.godunov(a, b))
            }
        }
    }

    /// Sample abscissae for hull construction on `[lo, hi]`: uniform at the
    /// search resolution up to `max(U_tail, 1)`, geometric beyond.
    pub fn hull_samples(&self, lo: f64, hi: f64) -> Vec<f64> {
        let knee = self.tail.start().max(1.0);
        let mut h = self.search_resolution;
        loop {
            let pts = sample_points(lo, hi, h, knee);
            if pts.len() <= MAX_HULL_SAMPLES {
                return pts;
            }
            h *= 2.0;
        }
    }

    /// Least concave majorant of the flux on `[lo, hi]`.
    pub fn concave_hull(&self, lo: f64, hi: f64) -> Result<Hull> {
        self.hull(lo, hi, HullKind::Concave)
    }

    /// Greatest convex minorant of the flux on `[lo, hi]`.
    pub fn convex_hull(&self, lo: f64, hi: f64) -> Result<Hull> {
        self.hull(lo, hi, HullKind::Convex)
    }

    fn hull(&self, lo: f64, hi: f64, kind: HullKind) -> Result<Hull> {
        if hi.is_infinite() {
            return Err(Error::Unsupported("hull over an unbounded interval; use s_plus / s_minus".into()));
        }
        check_state(lo)?;
        check_state(hi)?;
        if lo > hi {
            return Err(Error::Unsupported(format!("hull interval [{lo}, {hi}] is reversed")));
        }
        let pts: Vec<(f64, f64)> = self.hull_samples(lo, hi).into_iter().map(|u| (u, self.value(u))).collect();
        Ok(Hull::build(pts, kind))
    }
}

fn check_state(u: f64) -> Result<()> {
    if u >= 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(u))
    }
}

fn sample_points(lo: f64, hi: f64, h: f64, knee: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    if hi <= lo {
        return pts;
    }
    let uniform_end = hi.min(knee.max(lo));
    if uniform_end > lo {
        let n = ((uniform_end - lo) / h).ceil().max(1.0) as usize;
        let step = (uniform_end - lo) / n as f64;
        pts.extend((1..n).map(|i| lo + i as f64 * step));
        pts.push(uniform_end);
    }
    let mut u = *pts.last().expect("nonempty");
    let ratio = h / knee;
    while u < hi {
        u = (u + (u * ratio).max(h)).min(hi);
        pts.push(u);
    }
    pts
}

/// Golden-section search for an extremum of `f` on `[a, b]`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> (f64, f64) {
    let g = |x: f64| if maximize { -f(x) } else { f(x) };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    let u = 0.5 * (a + b);
    (u, f(u))
}
