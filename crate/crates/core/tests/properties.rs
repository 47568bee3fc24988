//! Randomized invariants of the public API.

use std::f64::consts::PI;

use geophase::cranked::{geq_member, CrankedSystem};
use geophase::grid::{angle_distance, TimeGrid};
use geophase::invariant::{eigenframe, gauge_transform, InvariantPath};
use geophase::linalg::{eigh, Op, C64};
use geophase::oscillator::{closed_form_phases, OscillatorParams};
use geophase::phases::{abelian_phases, project};
use geophase::propagator::{HamiltonianSchedule, UnitaryPath};
use proptest::prelude::*;

fn hermitian(dim: usize, entries: &[f64]) -> Op {
    Op::from_fn(dim, |i, j| C64::new(entries[2 * (i * dim + j)], entries[2 * (i * dim + j) + 1])).hermitize()
}

/// `V diag(levels) V†` with `V` the eigenbasis of a random Hermitian matrix,
/// so that `e^{−2πiK} = 1`.
fn integer_crank(dim: usize, entries: &[f64], levels: &[i32]) -> Op {
    let v = eigh(&hermitian(dim, entries)).unwrap().frame;
    let d = Op::real_diagonal(&levels.iter().map(|&l| l as f64).collect::<Vec<_>>());
    (&(&v * &d) * &v.adjoint()).hermitize()
}

fn pair(max_dim: usize) -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (2..=max_dim).prop_flat_map(|d| {
        (Just(d), prop::collection::vec(-1.0f64..1.0, 2 * d * d), prop::collection::vec(-1.0f64..1.0, 2 * d * d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closed_form_levels_scale_linearly(
        big_m in 0.5f64..2.0,
        big_omega in 0.5f64..4.0,
        extra in 0.2f64..3.0,
        omega in 0.5f64..2.0,
        n in 0usize..8,
    ) {
        let p = OscillatorParams::derive(big_m, big_omega, big_m + extra, omega);
        prop_assume!(p.as_ref().is_ok_and(|p| !p.is_degenerate() && (p.mu - 1.0).abs() > 1e-3));
        let p = p.unwrap();
        let (d0, g0) = closed_form_phases(&p, 0, p.period).unwrap();
        let (dn, gn) = closed_form_phases(&p, n, p.period).unwrap();
        let k = (2 * n + 1) as f64;
        prop_assert!((gn - k * g0).abs() <= 1e-12 * gn.abs().max(1.0));
        prop_assert!((dn - k * d0).abs() <= 1e-12 * dn.abs().max(1.0));
        // the total cyclic angle depends only on the crank spectrum
        prop_assert!(angle_distance(dn + gn, -k * PI / 2.0) < 1e-9);
    }

    #[test]
    fn cranked_propagator_transports_the_invariant((dim, a, b) in pair(6), t in -4.0f64..4.0) {
        let sys = CrankedSystem::new(hermitian(dim, &a), hermitian(dim, &b)).unwrap();
        let u = sys.propagator(t);
        prop_assert!(u.unitarity_defect() < 1e-12);
        let moved = sys.i0().conjugate_by(&u).unwrap();
        prop_assert!(moved.distance(&sys.invariant(t), None) < 1e-11);
        // I = H − K at every time
        let i_t = &sys.hamiltonian(t) - sys.crank();
        prop_assert!(i_t.distance(&sys.invariant(t), None) < 1e-11);
        // the spectrum of H is that of H₀
        let e0 = eigh(sys.h0()).unwrap().values;
        let et = eigh(&sys.hamiltonian(t)).unwrap().values;
        prop_assert!(e0.iter().zip(&et).all(|(x, y)| (x - y).abs() < 1e-11));
    }

    #[test]
    fn family_members_share_the_invariant((dim, a, b) in pair(4), amp in -2.0f64..2.0, freq in 0.5f64..3.0) {
        let sys = CrankedSystem::new(hermitian(dim, &a), hermitian(dim, &b)).unwrap();
        let i0 = sys.i0().clone();
        let y = HamiltonianSchedule::analytic(dim, "y", move |t| i0.scale_real(amp * (freq * t).sin()));
        let grid = TimeGrid::new(2.0, 64).unwrap();
        let (_, u) = geq_member(&sys, &y, grid, 1e-12).unwrap();
        for (k, uk) in u.samples().iter().enumerate() {
            let moved = sys.i0().conjugate_by(uk).unwrap();
            prop_assert!(moved.distance(&sys.invariant(grid.t(k)), None) < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cyclic_geometric_phase_is_gauge_invariant(
        (dim, a, b) in pair(3),
        levels in prop::collection::vec(-2i32..=2, 3),
        amp in -1.0f64..1.0,
    ) {
        let crank = integer_crank(dim, &b, &levels[..dim]);
        let sys = CrankedSystem::new(hermitian(dim, &a), crank).unwrap();
        let spec = eigh(sys.i0()).unwrap();
        prop_assume!(spec.values.windows(2).all(|w| w[1] - w[0] > 0.1));
        let grid = TimeGrid::new(2.0 * PI, 1024).unwrap();
        let s = sys.clone();
        let inv = InvariantPath::analytic(grid, dim, move |t| s.invariant(t));
        let frame = eigenframe(&inv, true).unwrap();
        // Z(t) = e^{−i a sin(t) I₀}, periodic and commuting with I₀
        let z = UnitaryPath::from_unitaries(grid, grid.points().iter().map(|&t| spec.exp_i(amp * t.sin())).collect()).unwrap();
        let (gauged, _) = gauge_transform(&frame, &z, sys.i0()).unwrap();
        let h = sys.schedule();
        let before = abelian_phases(&project(&frame, &h).unwrap()).unwrap();
        let after = abelian_phases(&project(&gauged, &h).unwrap()).unwrap();
        for (l0, l1) in before.levels.iter().zip(&after.levels) {
            let g0 = *l0.abelian().unwrap().1.last().unwrap();
            let g1 = *l1.abelian().unwrap().1.last().unwrap();
            prop_assert!(angle_distance(g0, g1) < 1e-8, "{g0} vs {g1}");
        }
    }
}
