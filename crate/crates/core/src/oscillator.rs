//! The cranked generalized harmonic oscillator.
//!
//! `H₀ = p²/(2M) + MΩ²x²/2` is cranked by the harmonic oscillator
//! `K = p²/(2m) + mω²x²/2`. The resulting Hamiltonian
//!
//! `H(t) = ½{[a + b cos2ωt]p² + [c sin2ωt](xp+px) + [d + e cos2ωt]x²}`
//!
//! has period `T = π/ω` and the invariant `I(t) = H(t) − K`, whose spectrum
//! is that of an oscillator of mass `m̃ = (1/M − 1/m)⁻¹` and frequency `ω̃`.
//! Operators are represented in a truncated Fock basis of either `K` or
//! `I(0)`.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{TimeGrid, CENTRAL_SECOND_OFFSETS};
use crate::linalg::{eigh, Eigh, Op, Structure, C64};

/// Lines in parameter space on which the closed-form geometric phase is
/// singular are detected with this margin.
pub const DEGENERACY_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub mass: f64,
    pub omega_big: f64,
    pub crank_mass: f64,
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub nu: f64,
    pub mtilde: f64,
    pub wtilde: f64,
    pub mu: f64,
    pub zeta: f64,
    pub xi: f64,
    /// Period of `H(t)`, `π/ω`.
    pub period: f64,
    /// Period of `K`, `2π/ω`.
    pub tau: f64,
    /// `2ω̃`, the scale of `I` in units of `K₃`.
    pub bbar: f64,
}

impl OscillatorParams {
    /// Derives every scalar of the model from `(M, Ω, m, ω)`.
    #[allow(non_snake_case)]
    pub fn derive(M: f64, Omega: f64, m: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("M", M), ("Omega", Omega), ("m", m), ("omega", omega)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConstraintViolation(format!("{name} must be a positive number, got {v}")));
            }
        }
        if m <= M {
            return Err(Error::ConstraintViolation(format!(
                "the cranking mass m must exceed the oscillator mass M (m = {m}, M = {M})"
            )));
        }
        if M * Omega * Omega <= m * omega * omega {
            return Err(Error::ConstraintViolation(format!(
                "the stiffness M*Omega^2 must exceed the cranking stiffness m*omega^2 ({} <= {})",
                M * Omega * Omega,
                m * omega * omega
            )));
        }
        let nu = M * Omega / (m * omega);
        let nu2 = nu * nu;
        let mw = m * omega;
        let a = (1.0 + nu2) / (2.0 * M);
        let b = (1.0 - nu2) / (2.0 * M);
        let c = mw * (1.0 - nu2) / (2.0 * M);
        let d = mw * mw * (1.0 + nu2) / (2.0 * M);
        let e = -mw * mw * (1.0 - nu2) / (2.0 * M);
        let inv_mt = 1.0 / M - 1.0 / m;
        let mtilde = 1.0 / inv_mt;
        let wtilde = (inv_mt * (M * Omega * Omega - m * omega * omega)).sqrt();
        let mu = mw / (mtilde * wtilde);
        let zeta = -0.5 * (mtilde * b + e / (mtilde * wtilde * wtilde));
        let xi = -2.0 * mu / (1.0 + mu * mu);
        Ok(OscillatorParams {
            mass: M,
            omega_big: Omega,
            crank_mass: m,
            omega,
            a,
            b,
            c,
            d,
            e,
            nu,
            mtilde,
            wtilde,
            mu,
            zeta,
            xi,
            period: PI / omega,
            tau: 2.0 * PI / omega,
            bbar: 2.0 * wtilde,
        })
    }

    /// True on the line `μ = 1` (equivalently `ν = 1`) where `H(t)` is
    /// constant and the closed-form geometric phase is `0/0`.
    pub fn is_degenerate(&self) -> bool {
        (self.mu - 1.0).abs() < DEGENERACY_MARGIN || (self.nu - 1.0).abs() < DEGENERACY_MARGIN
    }

    fn require_nondegenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            return Err(Error::DegenerateParameters(format!(
                "mu = {:.12}, nu = {:.12}: the closed-form geometric phase is singular at mu = 1",
                self.mu, self.nu
            )));
        }
        Ok(())
    }

    /// Eigenvalue `ω̃(n + ½)` of the invariant.
    pub fn invariant_level(&self, n: usize) -> f64 {
        self.wtilde * (n as f64 + 0.5)
    }

    /// Coefficients of `H(t)`.
    pub fn hamiltonian_form(&self, t: f64) -> QuadraticForm {
        let phi = 2.0 * self.omega * t;
        QuadraticForm {
            pp: 0.5 * (self.a + self.b * phi.cos()),
            xpx: 0.5 * self.c * phi.sin(),
            xx: 0.5 * (self.d + self.e * phi.cos()),
        }
    }

    pub fn crank_form(&self) -> QuadraticForm {
        QuadraticForm { pp: 0.5 / self.crank_mass, xpx: 0.0, xx: 0.5 * self.crank_mass * self.omega * self.omega }
    }

    pub fn bare_form(&self) -> QuadraticForm {
        QuadraticForm { pp: 0.5 / self.mass, xpx: 0.0, xx: 0.5 * self.mass * self.omega_big * self.omega_big }
    }

    /// Coefficients of `I(t) = H(t) − K`.
    pub fn invariant_form(&self, t: f64) -> QuadraticForm {
        self.hamiltonian_form(t).minus(&self.crank_form())
    }
}

/// `pp·p² + xpx·(xp + px) + xx·x²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticForm {
    pub pp: f64,
    pub xpx: f64,
    pub xx: f64,
}

impl QuadraticForm {
    pub fn minus(&self, o: &QuadraticForm) -> QuadraticForm {
        QuadraticForm { pp: self.pp - o.pp, xpx: self.xpx - o.xpx, xx: self.xx - o.xx }
    }

    pub fn plus_scaled(&self, o: &QuadraticForm, s: f64) -> QuadraticForm {
        QuadraticForm { pp: self.pp + s * o.pp, xpx: self.xpx + s * o.xpx, xx: self.xx + s * o.xx }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Fock basis of `I(0)` (mass `m̃`, frequency `ω̃`): `I(0)` is diagonal.
    KTilde,
    /// Fock basis of `K` (mass `m`, frequency `ω`): `K` is diagonal.
    K,
}

/// Truncated Fock-space operators for one parameter set.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub params: OscillatorParams,
    pub basis: Basis,
    pub dim: usize,
    /// Leading block on which quadratic-operator identities are checked.
    pub n_int: usize,
    /// Leading block on which squeeze-operator identities are checked.
    pub frame_block: usize,
    /// `mass × frequency` of the reference oscillator.
    pub scale: f64,
    pub x: Op,
    pub p: Op,
    pub big_x: Op,
    pub big_p: Op,
    pub x2: Op,
    pub p2: Op,
    pub xp_px: Op,
    pub k1: Op,
    pub k2: Op,
    pub k3: Op,
    pub crank: Op,
    pub bare: Op,
    pub invariant0: Op,
    k2_eig: Arc<Eigh>,
}

/// Smallest supported truncation.
pub const MIN_DIM: usize = 16;

/// Default interior block for truncation `dim`: `max(dim − 20, dim/2)`.
pub fn default_interior(dim: usize) -> usize {
    dim.saturating_sub(20).max(dim / 2)
}

impl FockSpace {
    pub fn build(params: &OscillatorParams, dim: usize, basis: Basis) -> Result<Self> {
        Self::build_with_interior(params, dim, default_interior(dim), basis)
    }

    pub fn build_with_interior(params: &OscillatorParams, dim: usize, n_int: usize, basis: Basis) -> Result<Self> {
        if dim < MIN_DIM {
            return Err(Error::InvalidArgument(format!("truncation {dim} below the minimum {MIN_DIM}")));
        }
        if n_int == 0 || n_int + 4 > dim {
            return Err(Error::InvalidArgument(format!(
                "interior block {n_int} must satisfy 0 < N_int <= N - 4 = {}",
                dim - 4
            )));
        }
        let scale = match basis {
            Basis::KTilde => params.mtilde * params.wtilde,
            Basis::K => params.crank_mass * params.omega,
        };
        let ladder = |n: usize, f: &dyn Fn(usize, usize) -> C64| Op::from_fn(n, f);
        let sq = |k: usize| (k as f64).sqrt();
        // annihilation operator entries <i|a|j> = sqrt(j) delta_{i, j-1}
        let x = ladder(dim, &|i, j| {
            if i + 1 == j {
                C64::new(sq(j), 0.0)
            } else if j + 1 == i {
                C64::new(sq(i), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .scale_real(1.0 / (2.0 * scale).sqrt())
        .with_structure(Structure::HERMITIAN);
        let p = ladder(dim, &|i, j| {
            if i + 1 == j {
                C64::new(0.0, -sq(j))
            } else if j + 1 == i {
                C64::new(0.0, sq(i))
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .scale_real((scale / 2.0).sqrt())
        .with_structure(Structure::HERMITIAN);

        let quad = |f: QuadraticForm| quadratic(dim, scale, &f);
        let x2 = quad(QuadraticForm { pp: 0.0, xpx: 0.0, xx: 1.0 });
        let p2 = quad(QuadraticForm { pp: 1.0, xpx: 0.0, xx: 0.0 });
        let xp_px = quad(QuadraticForm { pp: 0.0, xpx: 1.0, xx: 0.0 });

        let s = params.mtilde * params.wtilde;
        let big_x = x.scale_real(s.sqrt()).with_structure(Structure::HERMITIAN);
        let big_p = p.scale_real(1.0 / s.sqrt()).with_structure(Structure::HERMITIAN);
        // X² = s x², P² = p²/s, XP + PX = xp + px
        let k1 = quad(QuadraticForm { pp: -0.25 / s, xpx: 0.0, xx: 0.25 * s });
        let k2 = quad(QuadraticForm { pp: 0.0, xpx: -0.25, xx: 0.0 });
        let k3 = quad(QuadraticForm { pp: 0.25 / s, xpx: 0.0, xx: 0.25 * s });
        let crank = quad(params.crank_form());
        let bare = quad(params.bare_form());
        let invariant0 = quad(params.invariant_form(0.0));
        let k2_eig = Arc::new(eigh(&k2)?);
        Ok(FockSpace {
            params: *params,
            basis,
            dim,
            n_int,
            frame_block: (dim / 10).max(4),
            scale,
            x,
            p,
            big_x,
            big_p,
            x2,
            p2,
            xp_px,
            k1,
            k2,
            k3,
            crank,
            bare,
            invariant0,
            k2_eig,
        })
    }

    pub fn form(&self, f: &QuadraticForm) -> Op {
        quadratic(self.dim, self.scale, f)
    }

    /// `H(t)`.
    pub fn hamiltonian(&self, t: f64) -> Op {
        self.form(&self.params.hamiltonian_form(t))
    }

    /// `I(t) = H(t) − K` from its coefficient form.
    pub fn invariant(&self, t: f64) -> Op {
        self.form(&self.params.invariant_form(t))
    }

    /// Member `K + f(t) I(t)` of the family sharing the invariant `I(t)`.
    pub fn family_hamiltonian(&self, f: f64, t: f64) -> Op {
        self.form(&self.params.crank_form().plus_scaled(&self.params.invariant_form(t), f))
    }

    /// Squeeze-type frame operator
    /// `W = e^{−iφ̄K₃} e^{−iθ̄K₂} e^{iφ̄K₃}`.
    /// The phase conjugation is done entrywise in the `K₃` eigenbasis.
    pub fn w_operator(&self, theta_bar: f64, phi_bar: f64) -> Result<Op> {
        if self.basis != Basis::KTilde {
            return Err(Error::InvalidArgument("the frame operator is built in the invariant's own basis".into()));
        }
        if theta_bar == 0.0 {
            return Ok(Op::identity(self.dim));
        }
        let squeeze = self.k2_eig.exp_i(theta_bar);
        let k3: Vec<f64> = (0..self.dim).map(|n| (2 * n + 1) as f64 / 4.0).collect();
        let w = Op::from_fn(self.dim, |i, j| squeeze.get(i, j) * C64::from_polar(1.0, -phi_bar * (k3[i] - k3[j])));
        Ok(w.with_structure(Structure::UNITARY))
    }
}

/// Banded matrix of `pp·p² + xpx·(xp+px) + xx·x²` in the Fock basis of an
/// oscillator with `mass × frequency = s`. Built from the exact entries of
/// `a²`, `a†²` and `2a†a + 1`, so the truncation only cuts the band.
fn quadratic(dim: usize, s: f64, f: &QuadraticForm) -> Op {
    let diag = f.pp * s / 2.0 + f.xx / (2.0 * s);
    let mut off_re = -f.pp * s / 2.0 + f.xx / (2.0 * s);
    // The two halves cancel exactly for the reference oscillator's own
    // Hamiltonian; do not leave rounding residue in the off-diagonal band.
    if off_re.abs() <= 64.0 * f64::EPSILON * (f.pp * s / 2.0).abs().max((f.xx / (2.0 * s)).abs()) {
        off_re = 0.0;
    }
    // coefficient of a² is off_re − i·xpx, of a†² is off_re + i·xpx
    let lower = C64::new(off_re, f.xpx);
    let mut m = Mat::<C64>::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = C64::new(diag * (2 * n + 1) as f64, 0.0);
        if n >= 2 {
            let amp = ((n * (n - 1)) as f64).sqrt();
            m[(n, n - 2)] = lower * amp;
            m[(n - 2, n)] = lower.conj() * amp;
        }
    }
    let diagonal = off_re == 0.0 && f.xpx == 0.0;
    Op::from_mat(m).with_structure(Structure { hermitian: true, unitary: false, diagonal })
}

/// Position on the unit hyperboloid traced by the invariant,
/// `I(t) = b̄ (R¹K₁ + R²K₂ + R³K₃)`, and its hyperbolic angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperbolicPoint {
    pub r: [f64; 3],
    pub theta_bar: f64,
    /// Azimuth, continuous in `t`.
    pub phi_bar: f64,
}

/// `R̄(t)`, `θ̄(t) ≥ 0` and the continuous azimuth `φ̄(t)`.
///
/// `tan φ̄ = ξ sinφ / (1 − cosφ)` with `φ = 2ωt` fixes `φ̄` only up to `π`;
/// the azimuth of `(R¹, R²)` removes that ambiguity and the branch is
/// followed across multiples of `π` so that `φ̄` grows by `π` per period.
pub fn hyperbolic_coords(params: &OscillatorParams, t: f64) -> Result<HyperbolicPoint> {
    params.require_nondegenerate()?;
    let p = params;
    let phi = 2.0 * p.omega * t;
    let r1 = 0.5 * (p.mtilde * p.b - p.e / (p.mtilde * p.wtilde * p.wtilde)) * (1.0 - phi.cos());
    let r2 = -(p.c / p.wtilde) * phi.sin();
    let r3 = 1.0 + p.zeta * (1.0 - phi.cos());
    let theta_bar = r3.max(1.0).acosh();
    let alpha = p.xi.abs();
    let u = p.omega * t;
    let k = (u / (2.0 * PI)).round();
    let v = u - 2.0 * PI * k;
    let g = v.sin().atan2(alpha * v.cos()) + 2.0 * PI * k;
    let phi_bar = -p.c.signum() * PI / 2.0 + g;
    Ok(HyperbolicPoint { r: [r1, r2, r3], theta_bar, phi_bar })
}

/// `dφ̄/dφ = −ξ / ((1 + ξ²) + (ξ² − 1) cos φ)`.
pub fn phi_bar_rate(params: &OscillatorParams, phi: f64) -> f64 {
    let xi = params.xi;
    -xi / ((1.0 + xi * xi) + (xi * xi - 1.0) * phi.cos())
}

/// Continuous `σ(t) = −2ωt + 2|ξ| arctan(tan ωt / |ξ|)`.
pub fn sigma(params: &OscillatorParams, t: f64) -> f64 {
    let alpha = params.xi.abs();
    let u = params.omega * t;
    let k = (u / PI).round();
    let v = u - PI * k;
    -2.0 * u + 2.0 * alpha * (v.sin().atan2(alpha * v.cos()) + PI * k)
}

/// Closed-form dynamical and geometric phase angles of the `n`-th cyclic
/// state at time `t`, for the evolution generated by `K`.
pub fn closed_form_phases(params: &OscillatorParams, n: usize, t: f64) -> Result<(f64, f64)> {
    params.require_nondegenerate()?;
    let p = params;
    let two_n1 = (2 * n + 1) as f64;
    let delta = -0.25 * (p.mu + 1.0 / p.mu) * p.omega * t * two_n1;
    let gamma = two_n1 * p.zeta * p.xi * sigma(p, t) / (4.0 * (1.0 - p.xi * p.xi));
    Ok((delta, gamma))
}

/// The simplified one-line expression
/// `πμ(1+μ²)(1−ν²)(2n+1) / (4(1 − M/m)(μ² − 1))`
/// often quoted for the geometric phase over one period. It equals the
/// negated dynamical phase and differs from the continuous-branch value of
/// [`closed_form_phases`] by `(2n+1)π/2`; kept for comparison.
pub fn simplified_geometric_phase(params: &OscillatorParams, n: usize) -> Result<f64> {
    params.require_nondegenerate()?;
    let p = params;
    let mu2 = p.mu * p.mu;
    Ok(PI * p.mu * (1.0 + mu2) * (1.0 - p.nu * p.nu) * (2 * n + 1) as f64
        / (4.0 * (1.0 - p.mass / p.crank_mass) * (mu2 - 1.0)))
}

/// Frame of `I(t)` in the invariant's own basis: `W[R̄(t)]`.
pub fn w_frame_at(fock: &FockSpace, t: f64) -> Result<Op> {
    let hp = hyperbolic_coords(&fock.params, t)?;
    fock.w_operator(hp.theta_bar, hp.phi_bar)
}

/// Result of evolving one invariant eigenstate under `K` for one period.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CyclicLevel {
    pub n: usize,
    pub eigenvalue: f64,
    /// `|⟨λₙ;0|ψₙ(T)⟩|`.
    pub fidelity: f64,
    /// `arg⟨λₙ;0|ψₙ(T)⟩`.
    pub total_phase: f64,
    /// `‖|ψₙ(T)⟩⟨ψₙ(T)| − |λₙ;0⟩⟨λₙ;0|‖_F`.
    pub projector_defect: f64,
    /// `⟨λₙ;0|K|λₙ;0⟩`, conserved along the evolution.
    pub crank_expectation: f64,
}

/// Evolves `|λₙ;0⟩`, `n ≤ n_max`, with the exact diagonal `e^{−iKT}` of the
/// `K` basis.
pub fn cyclic_basis_evolution(fock: &FockSpace, n_max: usize) -> Result<Vec<CyclicLevel>> {
    if fock.basis != Basis::K {
        return Err(Error::InvalidArgument("cyclic evolution needs the basis in which K is diagonal".into()));
    }
    if n_max >= fock.n_int {
        return Err(Error::TruncationTooSmall {
            level: n_max,
            detail: format!("level exceeds the interior block {}", fock.n_int),
        });
    }
    let p = &fock.params;
    let eig = eigh(&fock.invariant0)?;
    let t = p.period;
    let phases: Vec<C64> = (0..fock.dim).map(|k| C64::from_polar(1.0, -p.omega * (k as f64 + 0.5) * t)).collect();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let expected = p.invariant_level(n);
        let got = eig.values[n];
        if (got - expected).abs() > 1e-8 * expected {
            return Err(Error::TruncationTooSmall {
                level: n,
                detail: format!("eigenvalue {got} differs from {expected}"),
            });
        }
        let v = eig.frame.column(n);
        let overlap: C64 = v.iter().zip(&phases).map(|(vi, ph)| vi.conj() * ph * vi).sum();
        let fidelity = overlap.norm();
        if fidelity < 1.0 - 1e-6 {
            return Err(Error::TruncationTooSmall { level: n, detail: format!("return fidelity {fidelity}") });
        }
        let projector_defect = (2.0 * (1.0 - fidelity * fidelity)).max(0.0).sqrt();
        let crank_expectation = fock.crank.expectation(&v, &v).re;
        out.push(CyclicLevel {
            n,
            eigenvalue: got,
            fidelity,
            total_phase: overlap.arg(),
            projector_defect,
            crank_expectation,
        });
    }
    Ok(out)
}

/// Ermakov amplitude `ρ(t) = (1/m̃ − b(1 − cos2ωt))^{1/2}`.
pub fn ermakov_rho(params: &OscillatorParams, t: f64) -> f64 {
    ermakov_rho2(params, t).sqrt()
}

fn ermakov_rho2(params: &OscillatorParams, t: f64) -> f64 {
    1.0 / params.mtilde - params.b * (1.0 - (2.0 * params.omega * t).cos())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErmakovReport {
    /// `max |ρ̈ + ω²ρ − η/ρ³|` with a five-point `ρ̈`.
    pub residual: f64,
    /// `max |ρ² − (c₁ sin²ωt + c₂ cos²ωt)|`.
    pub pinney_deviation: f64,
    pub eta: f64,
}

/// Checks that `ρ` solves `ρ̈ + ω²ρ = η/ρ³` on `grid`, and that `ρ²` is the
/// quadratic form `c₁ sin²ωt + c₂ cos²ωt` of two classical solutions.
pub fn ermakov_check(params: &OscillatorParams, grid: &TimeGrid) -> Result<ErmakovReport> {
    let p = params;
    let c2 = 1.0 / p.mtilde;
    let c1 = 1.0 / p.mtilde - 2.0 * p.b;
    let eta = c2 * c1 * p.omega * p.omega;
    let h = grid.dt();
    let mut residual = 0.0f64;
    let mut pinney = 0.0f64;
    for t in grid.points() {
        let r2 = ermakov_rho2(p, t);
        if r2.is_nan() || r2 <= 0.0 {
            return Err(Error::DomainError(format!("rho^2 = {r2} is not positive at t = {t}")));
        }
        let rho = r2.sqrt();
        let mut rdd = 0.0;
        for (o, w) in CENTRAL_SECOND_OFFSETS {
            let r2o = ermakov_rho2(p, t + o * h);
            if r2o.is_nan() || r2o <= 0.0 {
                return Err(Error::DomainError(format!("rho^2 = {r2o} is not positive at t = {}", t + o * h)));
            }
            rdd += w * r2o.sqrt();
        }
        rdd /= h * h;
        residual = residual.max((rdd + p.omega * p.omega * rho - eta / rho.powi(3)).abs());
        let (s, c) = (p.omega * t).sin_cos();
        pinney = pinney.max((r2 - (c1 * s * s + c2 * c * c)).abs());
    }
    Ok(ErmakovReport { residual, pinney_deviation: pinney, eta })
}
