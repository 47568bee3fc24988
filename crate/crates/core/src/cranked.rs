//! Cranked Hamiltonians `H(t) = e^{−iKt} H₀ e^{iKt}`.
//!
//! They admit the invariant `I(t) = H(t) − K` and the propagator
//! `U(t) = e^{−iKt} e^{−i(H₀−K)t}`. Every `H̃(t) = e^{−iKt}[K + Ỹ(t)]e^{iKt}`
//! with `[Ỹ(t), H₀ − K] = 0` shares the invariant; its propagator is
//! `e^{−iKt} T exp(−i∫Ỹ)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{cumulative_simpson, unwrap, TimeGrid};
use crate::invariant::InvariantFrame;
use crate::linalg::{eigh, Eigh, Op, C64};
use crate::propagator::{evolve, relative_commutator, HamiltonianSchedule, UnitaryPath, SYMMETRY_TOL};

#[derive(Clone, Debug)]
pub struct CrankedSystem {
    h0: Op,
    k: Op,
    i0: Op,
    k_eig: Arc<Eigh>,
    i0_eig: Arc<Eigh>,
}

impl CrankedSystem {
    pub fn new(h0: Op, k: Op) -> Result<Self> {
        if h0.dim() != k.dim() {
            return Err(Error::DimensionMismatch { expected: h0.dim(), found: k.dim() });
        }
        h0.check_hermitian()?;
        k.check_hermitian()?;
        let h0 = h0.hermitize();
        let k = k.hermitize();
        let i0 = (&h0 - &k).hermitize();
        let k_eig = Arc::new(eigh(&k)?);
        let i0_eig = Arc::new(eigh(&i0)?);
        Ok(CrankedSystem { h0, k, i0, k_eig, i0_eig })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &Op {
        &self.h0
    }

    pub fn crank(&self) -> &Op {
        &self.k
    }

    /// `I(0) = H₀ − K`.
    pub fn i0(&self) -> &Op {
        &self.i0
    }

    pub fn crank_eigh(&self) -> &Eigh {
        &self.k_eig
    }

    /// `e^{−iKt}`.
    pub fn rotation(&self, t: f64) -> Op {
        self.k_eig.exp_i(t)
    }

    pub fn hamiltonian(&self, t: f64) -> Op {
        if t == 0.0 {
            return self.h0.clone();
        }
        self.h0.conjugate_by(&self.rotation(t)).expect("dims checked").hermitize()
    }

    pub fn invariant(&self, t: f64) -> Op {
        if t == 0.0 {
            return self.i0.clone();
        }
        self.i0.conjugate_by(&self.rotation(t)).expect("dims checked").hermitize()
    }

    /// `U(t) = e^{−iKt} e^{−i(H₀−K)t}`.
    pub fn propagator(&self, t: f64) -> Op {
        if t == 0.0 {
            return Op::identity(self.dim());
        }
        &self.rotation(t) * &self.i0_eig.exp_i(t)
    }

    pub fn schedule(&self) -> HamiltonianSchedule {
        let sys = self.clone();
        HamiltonianSchedule::analytic(self.dim(), "cranked", move |t| sys.hamiltonian(t))
    }

    pub fn propagator_path(&self, grid: TimeGrid) -> Result<UnitaryPath> {
        UnitaryPath::from_samples(grid, grid.points().iter().map(|&t| self.propagator(t)).collect())
    }
}

/// Member of the family sharing the cranked invariant: returns
/// `H̃(t) = e^{−iKt}[K + Ỹ(t)]e^{iKt}` and `Ũ(t) = e^{−iKt} T exp(−i∫Ỹ)`
/// on `grid`.
pub fn geq_member(
    sys: &CrankedSystem,
    ytilde: &HamiltonianSchedule,
    grid: TimeGrid,
    tol: f64,
) -> Result<(HamiltonianSchedule, UnitaryPath)> {
    if ytilde.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: ytilde.dim() });
    }
    if ytilde.is_zero() {
        let h = HamiltonianSchedule::constant(sys.k.clone(), "K")?;
        let u = UnitaryPath::from_samples(grid, grid.points().iter().map(|&t| sys.rotation(t)).collect())?;
        return Ok((h, u));
    }
    for t in grid.points() {
        let defect = relative_commutator(&ytilde.eval(t), &sys.i0)?;
        if defect > SYMMETRY_TOL {
            return Err(Error::SymmetryViolation { t, defect });
        }
    }
    let v = evolve(ytilde, grid.t_max(), grid.steps(), tol)?;
    let samples = grid.points().iter().zip(v.samples()).map(|(&t, vt)| &sys.rotation(t) * vt).collect();
    let u = UnitaryPath::from_samples(grid, samples)?;
    let (s, y) = (sys.clone(), ytilde.clone());
    let h = HamiltonianSchedule::analytic(sys.dim(), format!("cranked K + {}", ytilde.label()), move |t| {
        (&s.k + &y.eval(t)).conjugate_by(&s.rotation(t)).expect("dims checked").hermitize()
    });
    Ok((h, u))
}

/// `h(t) e^{−ig(t)K} H₀ e^{ig(t)K}`, with `g(0) = 0`.
pub fn generalized_cranked(k: &Eigh, h0: &Op, g: &dyn Fn(f64) -> f64, h: &dyn Fn(f64) -> f64, t: f64) -> Result<Op> {
    if g(0.0).abs() > 1e-14 {
        return Err(Error::InvalidArgument(format!("crank angle must vanish at t = 0, got {}", g(0.0))));
    }
    let ht = h(t);
    if ht == 0.0 {
        return Ok(Op::zeros(h0.dim()));
    }
    Ok(h0.conjugate_by(&k.exp_i(g(t)))?.scale_real(ht).hermitize())
}

/// `e^{−ig(t)K}(H₀ − cK)e^{ig(t)K}`, an invariant of the generalized
/// cranked Hamiltonian exactly when `ġ(t) = c·h(t)`.
pub fn generalized_invariant_candidate(k: &Eigh, h0: &Op, g: &dyn Fn(f64) -> f64, c: f64, t: f64) -> Result<Op> {
    let base = (h0 - &k.reconstruct().scale_real(c)).hermitize();
    Ok(base.conjugate_by(&k.exp_i(g(t)))?.hermitize())
}

/// `γₙ(T) = KₙT + ζₙ(T)` and `δₙ(T) = −KₙT − ∫₀ᵀ Ỹₙ` for a nondegenerate
/// level with gauge factor `Zₙ = e^{−iζₙ}`. The integral uses Simpson's rule
/// on `steps` intervals.
pub fn nondeg_phase_formulas(
    kn: f64,
    zeta_n: &dyn Fn(f64) -> f64,
    y_n: &dyn Fn(f64) -> f64,
    period: f64,
    steps: usize,
) -> Result<(f64, f64)> {
    let grid = TimeGrid::new(period, steps)?;
    let ys: Vec<f64> = grid.points().iter().map(|&t| y_n(t)).collect();
    let integral = *cumulative_simpson(&ys, grid.dt())?.last().expect("grid has points");
    Ok((kn * period + zeta_n(period), -kn * period - integral))
}

/// Unwrapped `ζₙ(t) = −arg⟨λₙ;0| e^{iKt} |λₙ;t⟩` for frame column `j`, i.e.
/// the phase of the gauge factor `Z(t) = e^{iKt} W(t)` on that level.
pub fn gauge_angle_series(sys: &CrankedSystem, frame: &InvariantFrame, j: usize) -> Vec<f64> {
    let v0 = frame.vector(0, j);
    let raw: Vec<f64> = (0..frame.grid.len())
        .map(|k| {
            let t = frame.grid.t(k);
            let back = sys.k_eig.exp_i_apply(-t, &frame.vector(k, j));
            let z: C64 = v0.iter().zip(&back).map(|(a, b)| a.conj() * b).sum();
            -z.arg()
        })
        .collect();
    let mut out = unwrap(&raw);
    let shift = out[0];
    for x in out.iter_mut() {
        *x -= shift;
    }
    out
}
