//! Randomised invariants of the flux machinery, the measure order and the scheme.

use mvcl_core::evolution::{run, run_coupled, SolverConfig};
use mvcl_core::flux::{Extended, FluxModel};
use mvcl_core::measure::{AtomSpec, Grid, InitialSpec, MeasureState, Piece};
use proptest::prelude::*;

fn fluxes() -> Vec<FluxModel> {
    vec![
        FluxModel::bump(),
        FluxModel::inverse_power(1.0).unwrap(),
        FluxModel::inverse_power(2.0).unwrap(),
        FluxModel::monotone_tanh(),
        FluxModel::equilibrium(0.5, 1.0).unwrap(),
    ]
}

fn flux_strategy() -> impl Strategy<Value = FluxModel> {
    (0..5usize).prop_map(|i| fluxes().swap_remove(i))
}

/// `(from, length, value)` pieces and `(interface, mass)` atoms.
type StateSpec = (Vec<(f64, f64, f64)>, Vec<(usize, f64)>);

fn state_strategy(n: usize) -> impl Strategy<Value = StateSpec> {
    let pieces = prop::collection::vec((-1.0f64..2.5, 0.05f64..1.0, 0.0f64..2.0), 0..4);
    let atoms = prop::collection::vec((1..n, 0.05f64..1.5), 0..3);
    (pieces, atoms)
}

fn build(grid: Grid, pieces: &[(f64, f64, f64)], atoms: &[(usize, f64)]) -> MeasureState {
    let mut spec = InitialSpec {
        pieces: pieces.iter().map(|&(from, len, value)| Piece { from, to: from + len, value }).collect(),
        ..Default::default()
    };
    let mut used = Vec::new();
    for &(k, mass) in atoms {
        if !used.contains(&k) {
            used.push(k);
            spec.atoms.push(AtomSpec { x: grid.interface(k), mass });
        }
    }
    MeasureState::from_config(grid, &spec, 1e6).unwrap().0
}

fn grid(n: usize) -> Grid {
    Grid::new(-1.0, 3.0, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn visible_points_are_idempotent_and_ordered(flux in flux_strategy(), u in 0.0f64..8.0) {
        let plus = flux.s_plus(u).unwrap();
        let minus = flux.s_minus(u).unwrap();
        let phi = flux.value(u);
        prop_assert!(plus.flux_at_s >= phi - 1e-12);
        prop_assert!(minus.flux_at_s <= phi + 1e-12);
        prop_assert_eq!(plus.flux_at_s, flux.flux_at_s_plus(u));
        prop_assert_eq!(minus.flux_at_s, flux.flux_at_s_minus(u));
        for (vis, sup) in [(plus, true), (minus, false)] {
            if let Extended::Finite(s) = vis.s_value {
                prop_assert!(s >= u);
                let again = if sup { flux.s_plus(s).unwrap() } else { flux.s_minus(s).unwrap() };
                prop_assert_eq!(again.s_value, vis.s_value);
                prop_assert!((again.flux_at_s - vis.flux_at_s).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn trace_fluxes_are_monotone_in_the_state(flux in flux_strategy(), a in 0.0f64..8.0, d in 0.0f64..4.0) {
        // sup over a shrinking half-line can only drop, inf can only rise
        prop_assert!(flux.flux_at_s_plus(a + d) <= flux.flux_at_s_plus(a) + 1e-12);
        prop_assert!(flux.flux_at_s_minus(a + d) >= flux.flux_at_s_minus(a) - 1e-12);
    }

    #[test]
    fn godunov_flux_is_monotone_and_consistent(
        flux in flux_strategy(),
        a in 0.0f64..6.0,
        b in 0.0f64..6.0,
        d in 0.0f64..2.0,
    ) {
        prop_assert_eq!(flux.godunov(a, a), flux.value(a));
        prop_assert!(flux.godunov(a + d, b) >= flux.godunov(a, b) - 1e-12);
        prop_assert!(flux.godunov(a, b + d) <= flux.godunov(a, b) + 1e-12);
        let lo = flux.value(a).min(flux.value(b));
        let hi = flux.value(a).max(flux.value(b));
        let g = flux.godunov(a, b);
        // the Godunov flux is an extremum of phi between the states
        if a < b {
            prop_assert!(g <= lo + 1e-12);
        } else {
            prop_assert!(g >= hi - 1e-12);
        }
        prop_assert_eq!(flux.godunov_flux(Extended::Infinite, Extended::Finite(b)).unwrap(), flux.flux_at_s_plus(b));
        prop_assert_eq!(flux.godunov_flux(Extended::Finite(a), Extended::Infinite).unwrap(), flux.flux_at_s_minus(a));
    }

    #[test]
    fn hulls_sandwich_the_flux(flux in flux_strategy(), lo in 0.0f64..3.0, len in 0.01f64..4.0) {
        let hi = lo + len;
        let cap = flux.concave_hull(lo, hi).unwrap();
        let cup = flux.convex_hull(lo, hi).unwrap();
        let tol = 1e-12 * (1.0 + flux.sup_bound());
        // between samples a chord can sit h^2 |phi''| / 8 inside a curved flux;
        // |phi''| <= 6 for every flux here
        let knee = flux.tail().start().max(1.0);
        let sampling = |u: f64| {
            let h = flux.search_resolution() * (u / knee).max(1.0);
            tol + 0.75 * h * h
        };
        for k in 0..=50 {
            let u = lo + len * k as f64 / 50.0;
            let phi = flux.value(u);
            prop_assert!(cup.eval(u) <= phi + sampling(u));
            prop_assert!(cap.eval(u) >= phi - sampling(u));
        }
        prop_assert!((cap.eval(lo) - flux.value(lo)).abs() <= tol);
        prop_assert!((cup.eval(hi) - flux.value(hi)).abs() <= tol);
    }

    #[test]
    fn measure_order_is_a_partial_order(
        (pa, aa) in state_strategy(40),
        (pb, ab) in state_strategy(40),
        (pc, ac) in state_strategy(40),
    ) {
        let g = grid(40);
        let (a, b, c) = (build(g, &pa, &aa), build(g, &pb, &ab), build(g, &pc, &ac));
        prop_assert!(a.leq(&a, 0.0).unwrap());
        if a.leq(&b, 0.0).unwrap() && b.leq(&a, 0.0).unwrap() {
            prop_assert_eq!(&a.regular, &b.regular);
        }
        if a.leq(&b, 0.0).unwrap() && b.leq(&c, 0.0).unwrap() {
            prop_assert!(a.leq(&c, 0.0).unwrap());
        }
        let mut bigger = a.clone();
        for u in &mut bigger.regular {
            *u += 0.25;
        }
        prop_assert!(a.leq(&bigger, 0.0).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_step_conserves_mass(flux in flux_strategy(), (pieces, atoms) in state_strategy(60), t in 0.05f64..0.6) {
        let s = build(grid(60), &pieces, &atoms);
        let cfg = SolverConfig { end_time: t, ..Default::default() };
        let traj = run(&s, &flux, &cfg).unwrap();
        let scale = s.total_mass().max(1.0);
        for rec in &traj.steps {
            prop_assert!(rec.balance_residual <= 1e-12 * scale, "residual {} at t = {}", rec.balance_residual, rec.t);
        }
        for frame in traj.history.windows(2) {
            prop_assert!(frame[1].regular.iter().all(|&u| u >= 0.0));
            for (m0, m1) in frame[0].atom_masses.iter().zip(&frame[1].atom_masses) {
                prop_assert!(*m1 <= *m0 && *m1 >= 0.0);
            }
        }
    }

    #[test]
    fn ordered_data_stay_ordered(
        flux in flux_strategy(),
        (pieces, atoms) in state_strategy(50),
        lift in 0.0f64..0.5,
        extra in 0.0f64..0.5,
    ) {
        let g = grid(50);
        let u0 = build(g, &pieces, &atoms);
        let mut v0 = u0.clone();
        for u in &mut v0.regular {
            *u += lift;
        }
        for a in &mut v0.atoms {
            a.mass += extra;
        }
        let cfg = SolverConfig { end_time: 0.4, ..Default::default() };
        let (u, v) = run_coupled(&u0, &v0, &flux, &cfg).unwrap();
        for (fu, fv) in u.history.iter().zip(&v.history) {
            for (a, b) in fu.regular.iter().zip(&fv.regular) {
                prop_assert!(*a <= *b + 1e-12 * (1.0 + b.abs()));
            }
            for (a, b) in fu.atom_masses.iter().zip(&fv.atom_masses) {
                prop_assert!(*a <= *b + 1e-12);
            }
        }
    }
}
