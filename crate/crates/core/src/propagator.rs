//! Time-dependent Hamiltonians and the unitary evolution they generate.
//!
//! `evolve` integrates `i dU/dt = H(t) U` with a fourth-order
//! commutator-free exponential scheme (two exponentials per step at the
//! Gauss–Legendre nodes). Each step is checked by step doubling and split
//! recursively when the estimate exceeds the tolerance.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{eigh, Eigh, Op, C64};

type OpFn = dyn Fn(f64) -> Op + Send + Sync;

#[derive(Clone)]
enum Kind {
    Constant { op: Op, eig: Arc<Eigh> },
    Analytic(Arc<OpFn>),
    Sampled { grid: TimeGrid, samples: Arc<Vec<Op>> },
}

/// Hermitian operator valued function of time.
#[derive(Clone)]
pub struct HamiltonianSchedule {
    dim: usize,
    label: String,
    period: Option<f64>,
    kind: Kind,
}

impl fmt::Debug for HamiltonianSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            Kind::Constant { .. } => "constant",
            Kind::Analytic(_) => "analytic",
            Kind::Sampled { .. } => "sampled",
        };
        f.debug_struct("HamiltonianSchedule")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("period", &self.period)
            .field("kind", &kind)
            .finish()
    }
}

impl HamiltonianSchedule {
    pub fn constant(op: Op, label: impl Into<String>) -> Result<Self> {
        let eig = eigh(&op)?;
        Ok(HamiltonianSchedule {
            dim: op.dim(),
            label: label.into(),
            period: None,
            kind: Kind::Constant { op: op.hermitize(), eig: Arc::new(eig) },
        })
    }

    pub fn zero(dim: usize) -> Self {
        HamiltonianSchedule::constant(Op::zeros(dim), "zero").expect("zero matrix is Hermitian")
    }

    pub fn analytic(dim: usize, label: impl Into<String>, f: impl Fn(f64) -> Op + Send + Sync + 'static) -> Self {
        HamiltonianSchedule { dim, label: label.into(), period: None, kind: Kind::Analytic(Arc::new(f)) }
    }

    /// Schedule known only on grid points. Off-grid values use four-point
    /// cubic interpolation, which keeps the integrator fourth order.
    pub fn sampled(grid: TimeGrid, samples: Vec<Op>, label: impl Into<String>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: samples.len() });
        }
        if grid.len() < 4 {
            return Err(Error::GridTooCoarse { points: grid.len(), required: 4 });
        }
        let dim = samples[0].dim();
        for s in &samples {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
            }
            s.check_hermitian()?;
        }
        Ok(HamiltonianSchedule {
            dim,
            label: label.into(),
            period: None,
            kind: Kind::Sampled { grid, samples: Arc::new(samples) },
        })
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant { .. })
    }

    /// True for a constant schedule whose matrix is exactly zero.
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            Kind::Constant { op, .. } => op.max_abs() == 0.0,
            _ => false,
        }
    }

    pub fn constant_eigh(&self) -> Option<&Eigh> {
        match &self.kind {
            Kind::Constant { eig, .. } => Some(eig),
            _ => None,
        }
    }

    pub fn sample_grid(&self) -> Option<TimeGrid> {
        match &self.kind {
            Kind::Sampled { grid, .. } => Some(*grid),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Op {
        match &self.kind {
            Kind::Constant { op, .. } => op.clone(),
            Kind::Analytic(f) => f(t),
            Kind::Sampled { grid, samples } => interpolate(grid, samples, t),
        }
    }

    /// Largest relative period mismatch `‖H(t+T) − H(t)‖/‖H(t)‖` on `grid`.
    pub fn check_period(&self, grid: &TimeGrid) -> Result<f64> {
        let Some(period) = self.period else {
            return Err(Error::InvalidArgument(format!("schedule '{}' declares no period", self.label)));
        };
        let mut worst = 0.0f64;
        for t in grid.points() {
            let a = self.eval(t);
            let b = self.eval(t + period);
            worst = worst.max(a.distance(&b, None) / a.frobenius_norm().max(1e-300));
        }
        if worst > 1e-10 {
            return Err(Error::NotPeriodic { mismatch: worst });
        }
        Ok(worst)
    }
}

fn interpolate(grid: &TimeGrid, samples: &[Op], t: f64) -> Op {
    let h = grid.dt();
    let n = samples.len();
    let x = t / h;
    let nearest = x.round();
    if (x - nearest).abs() < 1e-12 && nearest >= 0.0 && (nearest as usize) < n {
        return samples[nearest as usize].clone();
    }
    let base = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let nodes: Vec<f64> = (0..4).map(|j| (base + j) as f64).collect();
    let mut out = Op::zeros(samples[0].dim());
    for j in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != j {
                w *= (x - nodes[m]) / (nodes[j] - nodes[m]);
            }
        }
        out = &out + &samples[base + j].scale_real(w);
    }
    out.hermitize()
}

/// Evolution operator sampled on a uniform grid, `samples[0] = 1`.
#[derive(Clone, Debug)]
pub struct UnitaryPath {
    grid: TimeGrid,
    samples: Vec<Op>,
    /// Integration steps between consecutive samples.
    substeps: usize,
    /// Largest accepted step-doubling estimate.
    pub tol_achieved: f64,
    /// Largest `‖U U† − 1‖_F` seen before re-unitarization.
    pub max_drift: f64,
    /// Number of accepted integrator steps (after refinement).
    pub steps_taken: usize,
}

impl UnitaryPath {
    /// Wraps exactly known samples. Checks the initial condition and
    /// unitarity of every sample.
    pub fn from_samples(grid: TimeGrid, samples: Vec<Op>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: samples.len() });
        }
        let dim = samples[0].dim();
        let allowed = 1e-10 * dim as f64;
        let id_defect = samples[0].distance(&Op::identity(dim), None);
        if id_defect > allowed {
            return Err(Error::InvalidArgument(format!("path must start at the identity (defect {id_defect:.3e})")));
        }
        for s in &samples {
            let defect = s.unitarity_defect();
            if defect > allowed {
                return Err(Error::NonUnitaryInput { defect, allowed });
            }
        }
        Ok(UnitaryPath { grid, samples, substeps: 1, tol_achieved: 0.0, max_drift: 0.0, steps_taken: 0 })
    }

    /// Unitary-valued series that need not start at the identity, such as a
    /// gauge transformation.
    pub fn from_unitaries(grid: TimeGrid, samples: Vec<Op>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: samples.len() });
        }
        let allowed = 1e-10 * samples[0].dim() as f64;
        for s in &samples {
            let defect = s.unitarity_defect();
            if defect > allowed {
                return Err(Error::NonUnitaryInput { defect, allowed });
            }
        }
        Ok(UnitaryPath { grid, samples, substeps: 1, tol_achieved: 0.0, max_drift: 0.0, steps_taken: 0 })
    }

    pub fn identity(dim: usize, grid: TimeGrid) -> Self {
        UnitaryPath {
            grid,
            samples: vec![Op::identity(dim); grid.len()],
            substeps: 1,
            tol_achieved: 0.0,
            max_drift: 0.0,
            steps_taken: 0,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Op] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn at(&self, t: f64) -> Result<&Op> {
        Ok(&self.samples[self.grid.index_of(t)?])
    }

    pub fn last(&self) -> &Op {
        self.samples.last().expect("paths are never empty")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub tol: f64,
    /// Keep every `record_stride`-th step. Must divide `steps`.
    pub record_stride: usize,
    /// Maximum number of recursive step halvings.
    pub max_depth: u32,
    /// Run the step-doubling estimate on every `check_every`-th step only.
    pub check_every: usize,
}

impl EvolveOptions {
    pub fn new(tol: f64) -> Self {
        EvolveOptions { tol, record_stride: 1, max_depth: 6, check_every: 1 }
    }

    pub fn record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn check_every(mut self, every: usize) -> Self {
        self.check_every = every.max(1);
        self
    }

    pub fn max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// One fourth-order commutator-free step from `t` to `t + dt`.
pub fn cf4_step(h: &HamiltonianSchedule, t: f64, dt: f64) -> Result<Op> {
    if let Kind::Constant { eig, .. } = &h.kind {
        return Ok(eig.exp_i(dt));
    }
    let c1 = 0.5 - SQRT3 / 6.0;
    let c2 = 0.5 + SQRT3 / 6.0;
    let a1 = 0.25 + SQRT3 / 6.0;
    let a2 = 0.25 - SQRT3 / 6.0;
    let h1 = h.eval(t + c1 * dt);
    let h2 = h.eval(t + c2 * dt);
    let first = &h1.scale_real(a1) + &h2.scale_real(a2);
    let second = &h1.scale_real(a2) + &h2.scale_real(a1);
    let e1 = eigh(&first)?.exp_i(dt);
    let e2 = eigh(&second)?.exp_i(dt);
    Ok(&e2 * &e1)
}

struct StepStats {
    max_err: f64,
    steps: usize,
}

fn advance(
    h: &HamiltonianSchedule,
    t: f64,
    dt: f64,
    depth: u32,
    opts: &EvolveOptions,
    check: bool,
    stats: &mut StepStats,
) -> Result<Op> {
    let full = cf4_step(h, t, dt)?;
    if !check {
        stats.steps += 1;
        return Ok(full);
    }
    let half = &cf4_step(h, t + 0.5 * dt, 0.5 * dt)? * &cf4_step(h, t, 0.5 * dt)?;
    let err = full.distance(&half, None);
    if err <= opts.tol {
        stats.max_err = stats.max_err.max(err);
        stats.steps += 2;
        return Ok(half);
    }
    if depth >= opts.max_depth {
        return Err(Error::ToleranceNotMet { t, estimate: err, tol: opts.tol });
    }
    let a = advance(h, t, 0.5 * dt, depth + 1, opts, true, stats)?;
    let b = advance(h, t + 0.5 * dt, 0.5 * dt, depth + 1, opts, true, stats)?;
    Ok(&b * &a)
}

/// Integrates `i dU/dt = H(t) U`, `U(0) = 1`, over `steps` uniform steps.
pub fn evolve(h: &HamiltonianSchedule, t_max: f64, steps: usize, tol: f64) -> Result<UnitaryPath> {
    evolve_with(h, t_max, steps, &EvolveOptions::new(tol))
}

pub fn evolve_with(h: &HamiltonianSchedule, t_max: f64, steps: usize, opts: &EvolveOptions) -> Result<UnitaryPath> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    let fine = TimeGrid::new(t_max, steps)?;
    let grid = fine.coarsen(opts.record_stride)?;
    let dim = h.dim();

    if let Kind::Constant { eig, .. } = &h.kind {
        let samples = grid.points().iter().map(|&t| eig.exp_i(t)).collect();
        return Ok(UnitaryPath {
            grid,
            samples,
            substeps: opts.record_stride,
            tol_achieved: 0.0,
            max_drift: 0.0,
            steps_taken: steps,
        });
    }

    let mut samples = Vec::with_capacity(grid.len());
    let mut u = Op::identity(dim);
    samples.push(u.clone());
    let mut stats = StepStats { max_err: 0.0, steps: 0 };
    let mut max_drift = 0.0f64;
    let dt = fine.dt();
    for k in 0..steps {
        let t = fine.t(k);
        let check = k % opts.check_every == 0;
        let step = advance(h, t, dt, 0, opts, check, &mut stats)?;
        u = &step * &u;
        let drift = u.unitarity_defect();
        max_drift = max_drift.max(drift);
        if drift > 1e-12 {
            u = u.nearest_unitary();
        }
        if (k + 1) % opts.record_stride == 0 {
            samples.push(u.clone());
        }
    }
    Ok(UnitaryPath {
        grid,
        samples,
        substeps: opts.record_stride,
        tol_achieved: stats.max_err,
        max_drift,
        steps_taken: stats.steps,
    })
}

/// Relative commutator `‖[A, B]‖_F / (‖A‖_F ‖B‖_F)`; zero when either
/// operator vanishes.
pub fn relative_commutator(a: &Op, b: &Op) -> Result<f64> {
    let denom = a.frobenius_norm() * b.frobenius_norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(a.commutator(b)?.frobenius_norm() / denom)
}

/// Largest accepted relative commutator between a symmetry generator and
/// the invariant.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// `Ũ(t) = U(t) V(t)` with `i dV/dt = Y(t) V`, for `Y` commuting with `I(0)`.
pub fn compose_geq(u: &UnitaryPath, y: &HamiltonianSchedule, i0: &Op, tol: f64) -> Result<UnitaryPath> {
    if y.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: y.dim() });
    }
    if y.is_zero() {
        return Ok(u.clone());
    }
    for t in u.grid.points() {
        let defect = relative_commutator(&y.eval(t), i0)?;
        if defect > SYMMETRY_TOL {
            return Err(Error::SymmetryViolation { t, defect });
        }
    }
    let v = if y.is_constant() {
        let eig = y.constant_eigh().expect("constant schedule caches its spectrum");
        u.grid.points().iter().map(|&t| eig.exp_i(t)).collect::<Vec<_>>()
    } else {
        let steps = u.grid.steps() * u.substeps;
        let opts = EvolveOptions::new(tol).record_stride(u.substeps);
        evolve_with(y, u.grid.t_max(), steps, &opts)?.samples
    };
    let samples = u.samples.iter().zip(&v).map(|(a, b)| a * b).collect();
    Ok(UnitaryPath { samples, ..u.clone() })
}

/// `Ũ(t) = U(t) exp(−i Σ_j F_j(t) I(0)^(j+1))` where `F_j` are the
/// antiderivatives (vanishing at 0) of the coefficients of `I^(j+1)`.
pub fn compose_geq_polynomial(
    u: &UnitaryPath,
    i0: &Op,
    antiderivatives: &[&(dyn Fn(f64) -> f64 + Sync)],
) -> Result<UnitaryPath> {
    if i0.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: i0.dim() });
    }
    let eig = eigh(i0)?;
    let samples = u
        .grid
        .points()
        .iter()
        .zip(&u.samples)
        .map(|(&t, ut)| {
            let coeffs: Vec<f64> = antiderivatives.iter().map(|f| f(t)).collect();
            let v = eig.map(|l| {
                let phase: f64 = coeffs.iter().enumerate().map(|(j, c)| c * l.powi(j as i32 + 1)).sum();
                C64::from_polar(1.0, -phase)
            });
            ut * &v
        })
        .collect();
    Ok(UnitaryPath { samples, ..u.clone() })
}

/// If `U(t)` is a multiple of the identity within `tol·dim` (Frobenius),
/// returns the unit-modulus multiple.
pub fn loop_check(u: &UnitaryPath, t: f64, tol: f64) -> Result<Option<C64>> {
    let ut = u.at(t)?;
    let dim = ut.dim();
    let tr = ut.trace() / dim as f64;
    if tr.norm() == 0.0 {
        return Ok(None);
    }
    let c = tr / tr.norm();
    let scaled = Op::identity(dim).scale(c);
    if ut.distance(&scaled, None) <= tol * dim as f64 {
        Ok(Some(c))
    } else {
        Ok(None)
    }
}
