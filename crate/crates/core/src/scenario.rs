//! End-to-end phase pipeline for the cranked oscillator: the evolution is
//! generated by `K`, which shares its invariant with the oscillator
//! Hamiltonian. Two truncated bases are used: the `K` basis makes the
//! evolution exact, the invariant's own basis makes the frame exact.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{wrap, TimeGrid};
use crate::invariant::InvariantFrame;
use crate::linalg::{eigh, Op, C64};
use crate::oscillator::{closed_form_phases, default_interior, w_frame_at, Basis, FockSpace, OscillatorParams};
use crate::phases::{abelian_phases, project};
use crate::propagator::HamiltonianSchedule;

/// One row of the phase time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub t: f64,
    pub n: usize,
    /// `−∫⟨K⟩`, unwrapped.
    pub delta_unwrapped: f64,
    /// `∫Aⁿ` in the frame `W(t)|n⟩`, unwrapped.
    pub gamma_unwrapped: f64,
    /// `arg⟨λₙ;0|ψₙ(t)⟩`.
    pub total_mod_2pi: f64,
    /// `|⟨λₙ;0|ψₙ(t)⟩|`.
    pub fidelity: f64,
}

/// Phases of one level at the period, measured and closed-form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelSummary {
    pub n: usize,
    pub fidelity: f64,
    pub total: f64,
    pub dynamical: f64,
    /// `total − dynamical`, wrapped.
    pub geometric: f64,
    /// Connection integral in the frame `W(t)|n⟩`.
    pub geometric_frame: f64,
    /// Closed forms; absent on the degenerate line `μ = 1`.
    pub closed_dynamical: Option<f64>,
    pub closed_geometric: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct OscillatorRun {
    pub params: OscillatorParams,
    pub dim: usize,
    pub grid: TimeGrid,
    pub rows: Vec<PhaseRow>,
    pub levels: Vec<LevelSummary>,
}

/// Runs the pipeline for levels `0..=n_max` over one period on `steps`
/// intervals with truncation `dim`.
pub fn oscillator_phases(params: &OscillatorParams, dim: usize, n_max: usize, steps: usize) -> Result<OscillatorRun> {
    oscillator_phases_with(params, dim, None, n_max, steps)
}

/// [`oscillator_phases`] with an explicit interior block, which bounds the
/// levels whose cyclic evolution is trusted.
pub fn oscillator_phases_with(
    params: &OscillatorParams,
    dim: usize,
    interior: Option<usize>,
    n_max: usize,
    steps: usize,
) -> Result<OscillatorRun> {
    let grid = TimeGrid::new(params.period, steps)?;
    let (totals, dynamical) = cyclic_series(params, dim, interior, n_max, &grid)?;
    let geometric = frame_geometric_series(params, dim, n_max, &grid)?;
    let mut rows = Vec::with_capacity(grid.len() * (n_max + 1));
    for k in 0..grid.len() {
        for n in 0..=n_max {
            let z = totals[n][k];
            rows.push(PhaseRow {
                t: grid.t(k),
                n,
                delta_unwrapped: dynamical[n][k],
                gamma_unwrapped: geometric[n][k],
                total_mod_2pi: z.arg(),
                fidelity: z.norm(),
            });
        }
    }
    let last = grid.len() - 1;
    let levels = (0..=n_max)
        .map(|n| {
            let z = totals[n][last];
            let closed = match closed_form_phases(params, n, params.period) {
                Ok((d, g)) => Some((d, g)),
                Err(Error::DegenerateParameters(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(LevelSummary {
                n,
                fidelity: z.norm(),
                total: z.arg(),
                dynamical: dynamical[n][last],
                geometric: wrap(z.arg() - dynamical[n][last]),
                geometric_frame: geometric[n][last],
                closed_dynamical: closed.map(|c| c.0),
                closed_geometric: closed.map(|c| c.1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OscillatorRun { params: *params, dim, grid, rows, levels })
}

/// Per level: `⟨λₙ;0|ψₙ(t)⟩` and the dynamical angle on every grid time.
pub type CyclicSeries = (Vec<Vec<C64>>, Vec<Vec<f64>>);

/// `⟨λₙ;0|e^{−iKt}|λₙ;0⟩` and `−t⟨λₙ;0|K|λₙ;0⟩` in the `K` basis, where the
/// evolution is a diagonal phase. `interior` defaults to
/// [`default_interior`].
pub fn cyclic_series(
    params: &OscillatorParams,
    dim: usize,
    interior: Option<usize>,
    n_max: usize,
    grid: &TimeGrid,
) -> Result<CyclicSeries> {
    let n_int = interior.unwrap_or_else(|| default_interior(dim));
    let fock = FockSpace::build_with_interior(params, dim, n_int, Basis::K)?;
    if n_max >= fock.n_int {
        return Err(Error::TruncationTooSmall { level: n_max, detail: format!("interior block is {}", fock.n_int) });
    }
    let eig = eigh(&fock.invariant0)?;
    let mut totals = Vec::with_capacity(n_max + 1);
    let mut dynamical = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let v = eig.frame.column(n);
        let weights: Vec<f64> = v.iter().map(|c| c.norm_sqr()).collect();
        let kn = fock.crank.expectation(&v, &v).re;
        totals.push(
            grid.points()
                .iter()
                .map(|&t| {
                    weights
                        .iter()
                        .enumerate()
                        .map(|(j, w)| C64::from_polar(*w, -params.omega * (j as f64 + 0.5) * t))
                        .sum()
                })
                .collect(),
        );
        dynamical.push(grid.points().iter().map(|&t| -kn * t).collect());
    }
    Ok((totals, dynamical))
}

/// `γₙ(t) = ∫⟨n|W†(i∂ₜ)W|n⟩` with `W(t)` built in the invariant's basis.
fn frame_geometric_series(
    params: &OscillatorParams,
    dim: usize,
    n_max: usize,
    grid: &TimeGrid,
) -> Result<Vec<Vec<f64>>> {
    let frame = w_frame(params, dim, n_max, grid)?;
    let fock = FockSpace::build(params, dim, Basis::KTilde)?;
    let h = HamiltonianSchedule::constant(fock.crank.clone(), "K")?;
    let record = abelian_phases(&project(&frame, &h)?)?;
    record.levels.iter().map(|l| Ok(l.abelian()?.1.to_vec())).collect()
}

/// Frame `W(t)|n⟩`, `n ≤ n_max`, of the oscillator invariant in its own
/// basis. On the degenerate line the invariant is constant and so is the
/// frame.
pub fn w_frame(params: &OscillatorParams, dim: usize, n_max: usize, grid: &TimeGrid) -> Result<InvariantFrame> {
    let fock = FockSpace::build(params, dim, Basis::KTilde)?;
    let identity = Op::identity(dim);
    if n_max >= fock.frame_block {
        return Err(Error::TruncationTooSmall {
            level: n_max,
            detail: format!("frame block is {} at truncation {dim}", fock.frame_block),
        });
    }
    let cols = n_max + 1;
    let frames = grid
        .points()
        .iter()
        .map(|&t| {
            let w = if params.is_degenerate() { identity.clone() } else { w_frame_at(&fock, t)? };
            Ok(w.mat().subcols(0, cols).to_owned())
        })
        .collect::<Result<Vec<Mat<C64>>>>()?;
    let eigenvalues = (0..cols).map(|n| params.invariant_level(n)).collect();
    InvariantFrame::from_columns(*grid, eigenvalues, vec![1; cols], frames, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::angle_distance;

    #[test]
    fn reference_scenario_matches_closed_forms() {
        let p = OscillatorParams::derive(1.0, 3.0, 2.0, 1.0).unwrap();
        let run = oscillator_phases(&p, 80, 3, 256).unwrap();
        assert_eq!(run.rows.len(), 257 * 4);
        for l in &run.levels {
            assert!(l.fidelity > 1.0 - 1e-10);
            let (cd, cg) = (l.closed_dynamical.unwrap(), l.closed_geometric.unwrap());
            assert!((l.dynamical - cd).abs() < 1e-9);
            assert!(angle_distance(l.geometric, cg) < 1e-8, "{l:?}");
            assert!((l.geometric_frame - cg).abs() < 1e-6, "{l:?}");
        }
        // the frame estimator follows the closed form at every time
        for r in run.rows.iter().step_by(37) {
            let (_, g) = closed_form_phases(&p, r.n, r.t).unwrap();
            assert!((r.gamma_unwrapped - g).abs() < 1e-6, "{r:?} vs {g}");
        }
    }

    #[test]
    fn degenerate_line_runs_without_closed_forms() {
        // ν = MΩ/(mω) = 1
        let p = OscillatorParams::derive(1.0, 2.0, 2.0, 1.0).unwrap();
        assert!(p.is_degenerate());
        let run = oscillator_phases(&p, 40, 2, 64).unwrap();
        for l in &run.levels {
            assert!(l.closed_geometric.is_none());
            assert!(l.geometric.abs() < 1e-10 && l.geometric_frame.abs() < 1e-12, "{l:?}");
        }
    }

    #[test]
    fn interior_block_limits_levels() {
        let p = OscillatorParams::derive(1.0, 3.0, 2.0, 1.0).unwrap();
        let g = TimeGrid::new(p.period, 4).unwrap();
        assert!(cyclic_series(&p, 40, Some(3), 2, &g).is_ok());
        assert!(matches!(cyclic_series(&p, 40, Some(2), 2, &g), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn frame_block_limits_levels() {
        let p = OscillatorParams::derive(1.0, 3.0, 2.0, 1.0).unwrap();
        let g = TimeGrid::new(p.period, 8).unwrap();
        assert!(matches!(w_frame(&p, 40, 5, &g), Err(Error::TruncationTooSmall { .. })));
    }
}
