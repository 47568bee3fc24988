//! Phases of invariant eigenstates.
//!
//! For each eigenvalue block `n` of an invariant frame:
//! `Eⁿ = ⟨λₙ,a;t|H|λₙ,b;t⟩`, `Aⁿ = i⟨λₙ,a;t|∂ₜ|λₙ,b;t⟩`, `Δⁿ = Eⁿ − Aⁿ`,
//! and `uⁿ` solves `i duⁿ/dt = Δⁿ uⁿ`, so that
//! `U(t) = Σ uⁿ_ab(t) |λₙ,a;t⟩⟨λₙ,b;0|`. Nondegenerate blocks give the
//! dynamical angle `δₙ = −∫E` and geometric angle `γₙ = ∫A`; degenerate
//! blocks give the holonomy `Γⁿ = T exp(i∫Aⁿ)`.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{angle_distance, cumulative_simpson, first_derivative_stencil, wrap, TimeGrid};
use crate::invariant::InvariantFrame;
use crate::linalg::{Op, C64, I};
use crate::propagator::{evolve, HamiltonianSchedule, UnitaryPath};

/// Series for one eigenvalue block.
#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub n: usize,
    pub eigenvalue: f64,
    pub degeneracy: usize,
    pub e_series: Vec<Op>,
    pub a_series: Vec<Op>,
    pub delta_series: Vec<Op>,
    /// Largest anti-Hermitian part removed from `Aⁿ`, relative to `‖Aⁿ‖`.
    pub a_residual: f64,
    pub u_series: Option<Vec<Op>>,
    /// `δₙ(t)`, unwrapped; nondegenerate blocks only.
    pub dynamical: Option<Vec<f64>>,
    /// `γₙ(t)`, unwrapped; nondegenerate blocks only.
    pub geometric: Option<Vec<f64>>,
    pub holonomy: Option<Op>,
}

impl LevelRecord {
    /// `(δₙ(t), γₙ(t))` series; only defined for nondegenerate blocks.
    pub fn abelian(&self) -> Result<(&[f64], &[f64])> {
        if self.degeneracy > 1 {
            return Err(Error::DegenerateEigenvalue { level: self.n, degeneracy: self.degeneracy });
        }
        match (&self.dynamical, &self.geometric) {
            (Some(d), Some(g)) => Ok((d, g)),
            _ => Err(Error::IncompleteRecord { what: "abelian phases not computed" }),
        }
    }

    /// Scalar series of a nondegenerate block.
    pub fn scalar(series: &[Op]) -> Vec<f64> {
        series.iter().map(|m| m.get(0, 0).re).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PhaseRecord {
    pub grid: TimeGrid,
    pub levels: Vec<LevelRecord>,
}

/// Fills `E`, `A` and `Δ` for every tracked block of `frame`.
pub fn project(frame: &InvariantFrame, h: &HamiltonianSchedule) -> Result<PhaseRecord> {
    if h.dim() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: h.dim() });
    }
    let grid = frame.grid;
    let len = grid.len();
    if len < 5 {
        return Err(Error::GridTooCoarse { points: len, required: 5 });
    }
    let dt = grid.dt();
    let mut levels: Vec<LevelRecord> = (0..frame.levels())
        .map(|n| LevelRecord {
            n,
            eigenvalue: frame.eigenvalues[n],
            degeneracy: frame.degeneracies[n],
            e_series: Vec::with_capacity(len),
            a_series: Vec::with_capacity(len),
            delta_series: Vec::with_capacity(len),
            a_residual: 0.0,
            u_series: None,
            dynamical: None,
            geometric: None,
            holonomy: None,
        })
        .collect();
    for k in 0..len {
        let hk = h.eval(grid.t(k));
        let f = frame.frame(k);
        let hf = hk.mat() * f;
        let stencil = first_derivative_stencil(k, len)?;
        for (n, rec) in levels.iter_mut().enumerate() {
            let (o, d) = (frame.offset(n), frame.degeneracies[n]);
            let v = f.subcols(o, d);
            let e = v.adjoint() * hf.subcols(o, d);
            let mut dv = Mat::<C64>::zeros(f.nrows(), d);
            for &(i, w) in &stencil {
                if w != 0.0 {
                    dv += faer::Scale(C64::new(w / dt, 0.0)) * frame.frame(i).subcols(o, d);
                }
            }
            let a_raw = Op::from_mat(faer::Scale(I) * (v.adjoint() * &dv));
            let e = Op::from_mat(e).hermitize();
            let a = a_raw.hermitize();
            let rel = a_raw.anti_hermitian_norm() / a.frobenius_norm().max(1e-300);
            if a.frobenius_norm() > 1e-12 {
                rec.a_residual = rec.a_residual.max(rel);
            }
            rec.delta_series.push(&e - &a);
            rec.e_series.push(e);
            rec.a_series.push(a);
        }
    }
    Ok(PhaseRecord { grid, levels })
}

/// Integrates `i duⁿ/dt = Δⁿ uⁿ` with the propagator's integrator.
pub fn solve_un(record: &PhaseRecord, tol: f64) -> Result<PhaseRecord> {
    let mut out = record.clone();
    let grid = record.grid;
    for rec in out.levels.iter_mut() {
        if rec.delta_series.len() != grid.len() {
            return Err(Error::IncompleteRecord { what: "delta series missing" });
        }
        let sched = HamiltonianSchedule::sampled(grid, rec.delta_series.clone(), format!("Delta_{}", rec.n))?;
        let path = evolve(&sched, grid.t_max(), grid.steps(), tol)?;
        rec.u_series = Some(path.samples().to_vec());
    }
    Ok(out)
}

/// `δₙ(t) = −∫E`, `γₙ(t) = ∫A` by cumulative Simpson for every
/// nondegenerate block.
pub fn abelian_phases(record: &PhaseRecord) -> Result<PhaseRecord> {
    let mut out = record.clone();
    let dt = record.grid.dt();
    for rec in out.levels.iter_mut().filter(|r| r.degeneracy == 1) {
        if rec.e_series.len() != record.grid.len() {
            return Err(Error::IncompleteRecord { what: "energy series missing" });
        }
        let e = LevelRecord::scalar(&rec.e_series);
        let a = LevelRecord::scalar(&rec.a_series);
        rec.dynamical = Some(cumulative_simpson(&e, dt)?.into_iter().map(|x| -x).collect());
        rec.geometric = Some(cumulative_simpson(&a, dt)?);
    }
    Ok(out)
}

/// `Γⁿ(t) = T exp(i ∫₀ᵗ Aⁿ)`, later times to the left. Solves
/// `i dΓ/dt = −Aⁿ Γ` with the fourth-order integrator on the interpolated
/// connection.
pub fn nonabelian_holonomy(record: &PhaseRecord, t: f64) -> Result<PhaseRecord> {
    let grid = record.grid;
    let kmax = grid.index_of(t)?;
    let mut out = record.clone();
    for rec in out.levels.iter_mut() {
        if rec.a_series.len() != grid.len() {
            return Err(Error::IncompleteRecord { what: "connection series missing" });
        }
        let g = if kmax == 0 {
            Op::identity(rec.degeneracy)
        } else {
            let neg: Vec<Op> = rec.a_series.iter().map(|a| a.scale_real(-1.0)).collect();
            let sched = HamiltonianSchedule::sampled(grid, neg, format!("-A_{}", rec.n))?;
            evolve(&sched, grid.t(kmax), kmax, HOLONOMY_TOL)?.last().clone()
        };
        let defect = g.unitarity_defect();
        if defect > 1e-8 {
            return Err(Error::ToleranceNotMet { t, estimate: defect, tol: 1e-8 });
        }
        rec.holonomy = Some(g);
    }
    Ok(out)
}

const HOLONOMY_TOL: f64 = 1e-10;

/// `Σₙ F_n(t) uⁿ(t) F_n(0)†` at every grid point. For a frame that spans
/// the space this is `U(t)`; otherwise `U(t)` restricted to the tracked
/// subspace at `t = 0`.
pub fn reconstruct_on_levels(frame: &InvariantFrame, record: &PhaseRecord) -> Result<Vec<Op>> {
    let len = frame.grid.len();
    let dim = frame.dim();
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = Mat::<C64>::zeros(dim, dim);
        for (n, rec) in record.levels.iter().enumerate() {
            let u = rec.u_series.as_ref().ok_or(Error::IncompleteRecord { what: "u series missing" })?;
            let (o, d) = (frame.offset(n), frame.degeneracies[n]);
            let ft = frame.frame(k).subcols(o, d);
            let f0 = frame.reference().subcols(o, d);
            acc += &(ft * u[k].mat()) * f0.adjoint();
        }
        out.push(Op::from_mat(acc));
    }
    Ok(out)
}

/// `U(t) = Σ uⁿ_ab |λₙ,a;t⟩⟨λₙ,b;0|`; needs a frame spanning the space.
pub fn reconstruct_u(frame: &InvariantFrame, record: &PhaseRecord) -> Result<UnitaryPath> {
    if !frame.is_complete() {
        return Err(Error::IncompleteRecord { what: "frame does not span the whole space" });
    }
    UnitaryPath::from_samples(frame.grid, reconstruct_on_levels(frame, record)?)
}

/// Phase split of one cyclic eigenvector at the period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CyclicPhase {
    pub n: usize,
    pub a: usize,
    /// `|⟨λₙ;0|U(T)|λₙ;0⟩|`.
    pub modulus: f64,
    /// `arg⟨λₙ;0|U(T)|λₙ;0⟩` in `(−π, π]`.
    pub total: f64,
    /// `δₙ(T)`, nondegenerate blocks only.
    pub dynamical: Option<f64>,
    /// `total − dynamical`, wrapped to `(−π, π]`.
    pub geometric: Option<f64>,
    /// `γₙ(T)` from the connection integral, unwrapped.
    pub geometric_frame: Option<f64>,
}

impl CyclicPhase {
    /// Distance between the two geometric-phase estimators modulo `2π`.
    pub fn estimator_gap(&self) -> Option<f64> {
        Some(angle_distance(self.geometric?, self.geometric_frame?))
    }
}

/// Splits the total cyclic phase `arg⟨λₙ;0|U(T)|λₙ;0⟩` into its dynamical
/// part `δₙ(T)` and the remainder. Requires `abelian_phases` to have been
/// run for nondegenerate blocks.
pub fn total_phase_decompose(
    u: &UnitaryPath,
    frame: &InvariantFrame,
    record: &PhaseRecord,
    t: f64,
) -> Result<Vec<CyclicPhase>> {
    let ut = u.at(t)?;
    let kt = record.grid.index_of(t)?;
    let mut out = Vec::new();
    for (n, rec) in record.levels.iter().enumerate() {
        for a in 0..rec.degeneracy {
            let v = frame.vector(0, frame.offset(n) + a);
            let z = ut.expectation(&v, &v);
            let modulus = z.norm();
            if modulus < 1.0 - 1e-6 {
                return Err(Error::NotCyclic { level: n, modulus });
            }
            let total = z.arg();
            let (dynamical, geometric, geometric_frame) = match rec.abelian() {
                Ok((d, g)) => (Some(d[kt]), Some(wrap(total - d[kt])), Some(g[kt])),
                Err(_) => (None, None, None),
            };
            out.push(CyclicPhase { n, a, modulus, total, dynamical, geometric, geometric_frame });
        }
    }
    Ok(out)
}
