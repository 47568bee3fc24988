//! Dynamical invariants `dI/dt = i[I, H]`: construction, verification,
//! smooth single-valued eigenframes, symmetry generators, the frame
//! Hamiltonian `H★ = iẆW†` and gauge transformations of frames.

use std::sync::Arc;

use faer::Mat;

use crate::error::{Error, Result};
use crate::grid::{first_derivative_stencil, TimeGrid, CENTRAL_OFFSETS};
use crate::linalg::{
    cluster_ranges, eigh, unitary_eigen, unitary_power, Op, Structure, ABS_FLOOR, C64, CLUSTER_TOL, I,
};
use crate::propagator::{relative_commutator, HamiltonianSchedule, UnitaryPath, SYMMETRY_TOL};

type OpFn = dyn Fn(f64) -> Op + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Transported,
    Analytic,
}

#[derive(Clone)]
enum Storage {
    Stored(Arc<Vec<Op>>),
    Analytic(Arc<OpFn>),
}

/// `I(t)` on a time grid. Analytic paths are evaluated on demand, which
/// keeps long high-dimensional paths out of memory and lets derivatives use
/// off-grid points.
#[derive(Clone)]
pub struct InvariantPath {
    grid: TimeGrid,
    storage: Storage,
    source: Source,
    dim: usize,
}

impl std::fmt::Debug for InvariantPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InvariantPath")
            .field("grid", &self.grid)
            .field("source", &self.source)
            .field("dim", &self.dim)
            .finish()
    }
}

impl InvariantPath {
    pub fn analytic(grid: TimeGrid, dim: usize, f: impl Fn(f64) -> Op + Send + Sync + 'static) -> Self {
        InvariantPath { grid, storage: Storage::Analytic(Arc::new(f)), source: Source::Analytic, dim }
    }

    pub fn from_samples(grid: TimeGrid, samples: Vec<Op>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: samples.len() });
        }
        let dim = samples[0].dim();
        for s in &samples {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
            }
            s.check_hermitian()?;
        }
        Ok(InvariantPath { grid, storage: Storage::Stored(Arc::new(samples)), source: Source::Transported, dim })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, k: usize) -> Op {
        match &self.storage {
            Storage::Stored(s) => s[k].clone(),
            Storage::Analytic(f) => f(self.grid.t(k)),
        }
    }

    /// `dI/dt` at grid index `k`, fourth order. Analytic paths use a
    /// central stencil with off-grid samples; stored paths switch to
    /// one-sided stencils at the ends.
    pub fn derivative(&self, k: usize) -> Result<Op> {
        let h = self.grid.dt();
        let len = self.grid.len();
        if len < 5 {
            return Err(Error::GridTooCoarse { points: len, required: 5 });
        }
        let mut acc = Op::zeros(self.dim);
        match &self.storage {
            Storage::Analytic(f) => {
                let t = self.grid.t(k);
                for (o, w) in CENTRAL_OFFSETS {
                    acc = &acc + &f(t + o * h).scale_real(w / h);
                }
            }
            Storage::Stored(s) => {
                for (i, w) in first_derivative_stencil(k, len)? {
                    if w != 0.0 {
                        acc = &acc + &s[i].scale_real(w / h);
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// `I(t_k) = U(t_k) I₀ U(t_k)†`.
pub fn transport(u: &UnitaryPath, i0: &Op) -> Result<InvariantPath> {
    if i0.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: i0.dim() });
    }
    i0.check_hermitian()?;
    let samples = u.samples().iter().map(|s| i0.conjugate_by(s).map(|m| m.hermitize())).collect::<Result<Vec<_>>>()?;
    InvariantPath::from_samples(*u.grid(), samples)
}

/// `‖dI/dt − i[I, H]‖_F` at every grid point.
pub fn lvn_residual(inv: &InvariantPath, h: &HamiltonianSchedule) -> Result<Vec<f64>> {
    lvn_residual_block(inv, h, None)
}

/// As [`lvn_residual`], restricted to the leading `block` rows and columns.
pub fn lvn_residual_block(inv: &InvariantPath, h: &HamiltonianSchedule, block: Option<usize>) -> Result<Vec<f64>> {
    if h.dim() != inv.dim() {
        return Err(Error::DimensionMismatch { expected: inv.dim(), found: h.dim() });
    }
    let len = inv.grid.len();
    if len < 3 {
        return Err(Error::GridTooCoarse { points: len, required: 3 });
    }
    (0..len)
        .map(|k| {
            let it = inv.sample(k);
            let ht = h.eval(inv.grid.t(k));
            let di = inv.derivative(k)?;
            let rhs = it.commutator(&ht)?.scale(I);
            Ok(di.distance(&rhs, block))
        })
        .collect()
}

/// Largest relative commutator `‖[I(t), X(t)]‖/(‖I‖‖X‖)` over the grid;
/// fails at the first point above the symmetry tolerance.
pub fn symmetry_check(inv: &InvariantPath, x: &HamiltonianSchedule) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..inv.grid.len() {
        let t = inv.grid.t(k);
        let defect = relative_commutator(&inv.sample(k), &x.eval(t))?;
        if defect > SYMMETRY_TOL {
            return Err(Error::SymmetryViolation { t, defect });
        }
        worst = worst.max(defect);
    }
    Ok(worst)
}

/// `H̃ = H + X` for a symmetry generator `X` of the invariant.
pub fn build_geq(h: &HamiltonianSchedule, x: &HamiltonianSchedule, inv: &InvariantPath) -> Result<HamiltonianSchedule> {
    if h.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: x.dim() });
    }
    symmetry_check(inv, x)?;
    if x.is_zero() {
        return Ok(h.clone());
    }
    let (h2, x2) = (h.clone(), x.clone());
    let label = format!("{} + {}", h.label(), x.label());
    let mut out = HamiltonianSchedule::analytic(h.dim(), label, move |t| (&h2.eval(t) + &x2.eval(t)).hermitize());
    if let (Some(a), Some(b)) = (h.period(), x.period()) {
        if (a - b).abs() <= 1e-12 * a {
            out = out.with_period(a);
        }
    }
    Ok(out)
}

/// `Y(t) = U(t)† X(t) U(t)` sampled on the path's grid.
pub fn pulled_back_generator(u: &UnitaryPath, x: &HamiltonianSchedule) -> Result<HamiltonianSchedule> {
    let samples = u
        .grid()
        .points()
        .iter()
        .zip(u.samples())
        .map(|(&t, ut)| x.eval(t).conjugate_by(&ut.adjoint()).map(|m| m.hermitize()))
        .collect::<Result<Vec<_>>>()?;
    HamiltonianSchedule::sampled(*u.grid(), samples, format!("U^dag {} U", x.label()))
}

/// Minimal overlap accepted between consecutive frames.
pub const MIN_OVERLAP: f64 = 0.5;

/// Orthonormal eigenvector frames of an invariant, grouped by eigenvalue.
///
/// `frames[k]` holds the tracked eigenvectors at grid point `k` as
/// columns; level `n` occupies columns `offsets[n] .. offsets[n] + degeneracies[n]`.
#[derive(Clone, Debug)]
pub struct InvariantFrame {
    pub grid: TimeGrid,
    pub eigenvalues: Vec<f64>,
    pub degeneracies: Vec<usize>,
    offsets: Vec<usize>,
    frames: Vec<Mat<C64>>,
    /// Basis `⟨λₙ,a;0|` used when the frame is read as the unitary
    /// `W(t) = Σ |λₙ,a;t⟩⟨λₙ,a;0|`. Gauge transformations keep it fixed.
    reference: Mat<C64>,
    pub periodic: bool,
    /// Eigenphases of `V(0)†V(T)` per level before periodic closure.
    pub closure_angles: Vec<Vec<f64>>,
    /// Smallest singular value of the step-to-step overlap matrices.
    pub min_overlap: f64,
}

impl InvariantFrame {
    /// Frame from explicitly known columns (e.g. an analytic frame operator).
    pub fn from_columns(
        grid: TimeGrid,
        eigenvalues: Vec<f64>,
        degeneracies: Vec<usize>,
        frames: Vec<Mat<C64>>,
        periodic: bool,
    ) -> Result<Self> {
        if eigenvalues.len() != degeneracies.len() {
            return Err(Error::DimensionMismatch { expected: eigenvalues.len(), found: degeneracies.len() });
        }
        if frames.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: frames.len() });
        }
        let cols: usize = degeneracies.iter().sum();
        for f in &frames {
            if f.ncols() != cols || f.nrows() != frames[0].nrows() {
                return Err(Error::DimensionMismatch { expected: cols, found: f.ncols() });
            }
        }
        let offsets = offsets_of(&degeneracies);
        let reference = frames[0].clone();
        let min_overlap = min_step_overlap(&frames, &offsets, &degeneracies);
        Ok(InvariantFrame {
            grid,
            eigenvalues,
            degeneracies,
            offsets,
            frames,
            reference,
            periodic,
            closure_angles: Vec::new(),
            min_overlap,
        })
    }

    pub fn dim(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn levels(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn columns(&self) -> usize {
        self.frames[0].ncols()
    }

    pub fn is_complete(&self) -> bool {
        self.columns() == self.dim()
    }

    pub fn offset(&self, n: usize) -> usize {
        self.offsets[n]
    }

    pub fn frame(&self, k: usize) -> &Mat<C64> {
        &self.frames[k]
    }

    pub fn reference(&self) -> &Mat<C64> {
        &self.reference
    }

    /// Column `j` of the frame at grid index `k`.
    pub fn vector(&self, k: usize, j: usize) -> Vec<C64> {
        let f = &self.frames[k];
        (0..f.nrows()).map(|i| f[(i, j)]).collect()
    }

    /// Level `n` columns at grid index `k`.
    pub fn block(&self, k: usize, n: usize) -> Mat<C64> {
        self.frames[k].subcols(self.offsets[n], self.degeneracies[n]).to_owned()
    }

    /// `W(t_k) = F(t_k) F_ref†`; needs a complete frame.
    pub fn as_unitary(&self, k: usize) -> Result<Op> {
        if !self.is_complete() {
            return Err(Error::IncompleteRecord { what: "frame does not span the whole space" });
        }
        Ok(Op::from_mat(&self.frames[k] * self.reference.adjoint()).with_structure(Structure::UNITARY))
    }

    /// `Σ λₙ |λₙ,a;t⟩⟨λₙ,a;t|` at grid index `k`.
    pub fn reconstruct(&self, k: usize) -> Op {
        let f = &self.frames[k];
        let mut scaled = f.clone();
        for n in 0..self.levels() {
            for a in 0..self.degeneracies[n] {
                let j = self.offsets[n] + a;
                for i in 0..f.nrows() {
                    scaled[(i, j)] *= self.eigenvalues[n];
                }
            }
        }
        Op::from_mat(&scaled * f.adjoint())
    }

    /// Largest deviation from orthonormality over the grid.
    pub fn orthonormality_defect(&self) -> f64 {
        let c = self.columns();
        let id = Mat::<C64>::identity(c, c);
        self.frames.iter().map(|f| (f.adjoint() * f - &id).norm_l2()).fold(0.0, f64::max)
    }
}

fn offsets_of(deg: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(deg.len());
    let mut acc = 0;
    for d in deg {
        off.push(acc);
        acc += d;
    }
    off
}

fn min_step_overlap(frames: &[Mat<C64>], offsets: &[usize], deg: &[usize]) -> f64 {
    let mut worst = 1.0f64;
    for w in frames.windows(2) {
        for (n, &d) in deg.iter().enumerate() {
            let a = w[0].subcols(offsets[n], d);
            let b = w[1].subcols(offsets[n], d);
            let o = a.adjoint() * b;
            worst = worst.min(min_singular_value(&o));
        }
    }
    worst
}

fn min_singular_value(o: &Mat<C64>) -> f64 {
    if o.nrows() == 1 {
        return o[(0, 0)].norm();
    }
    match o.svd() {
        Ok(s) => {
            let d = s.S().column_vector();
            (0..d.nrows()).map(|i| d[i].re).fold(f64::INFINITY, f64::min)
        }
        Err(_) => 0.0,
    }
}

/// Unitary polar factor of a small square matrix.
fn polar_unitary(o: &Mat<C64>) -> Result<Mat<C64>> {
    if o.nrows() == 1 {
        let z = o[(0, 0)];
        return Ok(Mat::from_fn(1, 1, |_, _| z / z.norm()));
    }
    let s = o.svd().map_err(|_| Error::ConvergenceFailure { dim: o.nrows() })?;
    Ok(s.U() * s.V().adjoint())
}

#[derive(Clone, Copy, Debug)]
pub struct FrameOptions {
    /// Close the frame at the end of the grid by spreading the holonomy
    /// uniformly over the steps.
    pub enforce_periodic: bool,
    /// Track only the lowest `max_levels` eigenvalues (whole degenerate
    /// clusters are always kept together).
    pub max_levels: Option<usize>,
}

impl FrameOptions {
    pub fn new(enforce_periodic: bool) -> Self {
        FrameOptions { enforce_periodic, max_levels: None }
    }

    pub fn max_levels(mut self, n: usize) -> Self {
        self.max_levels = Some(n);
        self
    }
}

/// Smooth eigenframe of `I(t)` with parallel-transport phases.
pub fn eigenframe(inv: &InvariantPath, enforce_periodic: bool) -> Result<InvariantFrame> {
    eigenframe_with(inv, &FrameOptions::new(enforce_periodic))
}

pub fn eigenframe_with(inv: &InvariantPath, opts: &FrameOptions) -> Result<InvariantFrame> {
    let grid = *inv.grid();
    let len = grid.len();
    let first = eigh(&inv.sample(0))?;
    let scale = first.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = (CLUSTER_TOL * scale).max(ABS_FLOOR);
    let clusters = cluster_ranges(&first.values, gap);
    let n_levels = opts.max_levels.map_or(clusters.len(), |l| l.min(clusters.len()));
    let clusters = &clusters[..n_levels];
    let eigenvalues: Vec<f64> = clusters.iter().map(|r| first.values[r.start]).collect();
    let degeneracies: Vec<usize> = clusters.iter().map(|r| r.len()).collect();
    let offsets = offsets_of(&degeneracies);
    let cols: usize = degeneracies.iter().sum();
    let dim = inv.dim();

    let take = |frame: &Op| Mat::<C64>::from_fn(dim, cols, |i, j| frame.get(i, j));
    let mut frames = Vec::with_capacity(len);
    frames.push(take(&first.frame));
    let mut min_overlap = 1.0f64;

    for k in 1..len {
        let t = grid.t(k);
        let e = eigh(&inv.sample(k))?;
        for (n, r) in clusters.iter().enumerate() {
            for (a, idx) in r.clone().enumerate() {
                let drift = (e.values[idx] - eigenvalues[n]).abs();
                if drift > 1e-8 * (1.0 + eigenvalues[n].abs()) {
                    let _ = a;
                    return Err(Error::SpectrumNotConstant { level: n, t, drift });
                }
            }
        }
        // same cluster boundaries at this point
        let now = cluster_ranges(&e.values[..cols.min(e.values.len())], gap);
        let expected: Vec<_> = clusters.to_vec();
        if now.len() < n_levels || now[..n_levels] != expected[..] {
            return Err(Error::DegeneracyCrossing { t });
        }
        if cols < dim && (e.values[cols] - e.values[cols - 1]).abs() < gap {
            return Err(Error::DegeneracyCrossing { t });
        }
        let mut next = take(&e.frame);
        let prev = &frames[k - 1];
        for n in 0..n_levels {
            let (o0, d) = (offsets[n], degeneracies[n]);
            let a = prev.subcols(o0, d);
            let b = next.subcols(o0, d).to_owned();
            let o = a.adjoint() * &b;
            let ov = min_singular_value(&o);
            if ov < MIN_OVERLAP {
                return Err(Error::OverlapTooSmall { t, overlap: ov, min: MIN_OVERLAP });
            }
            min_overlap = min_overlap.min(ov);
            let q = polar_unitary(&o)?;
            let fixed = &b * q.adjoint();
            for j in 0..d {
                for i in 0..dim {
                    next[(i, o0 + j)] = fixed[(i, j)];
                }
            }
        }
        frames.push(next);
    }

    let mut closure_angles = Vec::new();
    if opts.enforce_periodic {
        let mismatch = inv.sample(0).distance(&inv.sample(len - 1), None) / inv.sample(0).frobenius_norm().max(1e-300);
        if mismatch > 1e-8 {
            return Err(Error::NotPeriodic { mismatch });
        }
        let steps = (len - 1) as f64;
        for n in 0..n_levels {
            let (o0, d) = (offsets[n], degeneracies[n]);
            let m = frames[0].subcols(o0, d).adjoint() * frames[len - 1].subcols(o0, d);
            let mop = Op::from_mat(m.to_owned());
            let (angles, _) = unitary_eigen(&mop)?;
            closure_angles.push(angles);
            for (k, f) in frames.iter_mut().enumerate() {
                let corr = unitary_power(&mop, -(k as f64) / steps)?;
                let fixed = f.subcols(o0, d) * corr.mat();
                for j in 0..d {
                    for i in 0..dim {
                        f[(i, o0 + j)] = fixed[(i, j)];
                    }
                }
            }
        }
    }

    let reference = frames[0].clone();
    Ok(InvariantFrame {
        grid,
        eigenvalues,
        degeneracies,
        offsets,
        frames,
        reference,
        periodic: opts.enforce_periodic,
        closure_angles,
        min_overlap,
    })
}

/// `H★(t) = iẆ(t)W(t)†` for the frame read as a unitary. Returns the
/// Hermitized schedule and the relative size of the discarded
/// anti-Hermitian part.
pub fn hstar(frame: &InvariantFrame) -> Result<(HamiltonianSchedule, f64)> {
    let len = frame.grid.len();
    if len < 5 {
        return Err(Error::GridTooCoarse { points: len, required: 5 });
    }
    let w: Vec<Op> = (0..len).map(|k| frame.as_unitary(k)).collect::<Result<_>>()?;
    generator_of(&frame.grid, &w, "H*")
}

/// `i (dW/dt) W†` from samples of a unitary path, Hermitized.
fn generator_of(grid: &TimeGrid, w: &[Op], label: &str) -> Result<(HamiltonianSchedule, f64)> {
    let len = grid.len();
    let h = grid.dt();
    let mut samples = Vec::with_capacity(len);
    let mut anti = 0.0f64;
    let mut norm = 0.0f64;
    for k in 0..len {
        let mut dw = Op::zeros(w[k].dim());
        for (i, c) in first_derivative_stencil(k, len)? {
            if c != 0.0 {
                dw = &dw + &w[i].scale_real(c / h);
            }
        }
        let raw = (&dw * &w[k].adjoint()).scale(I);
        anti = anti.max(raw.anti_hermitian_norm());
        let herm = raw.hermitize();
        norm = norm.max(herm.frobenius_norm());
        samples.push(herm);
    }
    // a vanishing generator (constant frame) leaves only roundoff in both parts
    let residual = anti / norm.max(1.0 / grid.t_max());
    if residual > 1e-6 {
        return Err(Error::NonHermitianGenerator { residual });
    }
    Ok((HamiltonianSchedule::sampled(*grid, samples, label)?, residual))
}

/// Gauge transformation `W → W Z` with `[Z(t), I(0)] = 0`. Returns the new
/// frame and `H★' = H★ + i W Ż Z† W†`.
pub fn gauge_transform(
    frame: &InvariantFrame,
    z: &UnitaryPath,
    i0: &Op,
) -> Result<(InvariantFrame, HamiltonianSchedule)> {
    if z.grid() != &frame.grid {
        return Err(Error::InvalidArgument("gauge path must share the frame's grid".into()));
    }
    if z.dim() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: z.dim() });
    }
    for (k, zk) in z.samples().iter().enumerate() {
        let defect = relative_commutator(zk, i0)?;
        if defect > SYMMETRY_TOL {
            return Err(Error::SymmetryViolation { t: frame.grid.t(k), defect });
        }
    }
    let fref = &frame.reference;
    let cols = frame.columns();
    let mut frames = Vec::with_capacity(frame.grid.len());
    for (k, zk) in z.samples().iter().enumerate() {
        // Z acts on the reference eigenbasis as a block-diagonal unitary
        let zr = fref.adjoint() * zk.mat() * fref;
        let zc = zr.submatrix(0, 0, cols, cols).to_owned();
        frames.push(&frame.frames[k] * &zc);
    }
    let mut out = frame.clone();
    out.frames = frames;
    out.min_overlap = min_step_overlap(&out.frames, &out.offsets, &out.degeneracies);
    out.closure_angles = Vec::new();

    let (hs, _) = hstar(frame)?;
    let len = frame.grid.len();
    let h = frame.grid.dt();
    let zs = z.samples();
    let mut samples = Vec::with_capacity(len);
    for k in 0..len {
        let mut dz = Op::zeros(frame.dim());
        for (i, c) in first_derivative_stencil(k, len)? {
            if c != 0.0 {
                dz = &dz + &zs[i].scale_real(c / h);
            }
        }
        let w = frame.as_unitary(k)?;
        let extra = (&dz * &zs[k].adjoint()).scale(I).conjugate_by(&w)?;
        samples.push((&hs.eval(frame.grid.t(k)) + &extra).hermitize());
    }
    let hprime = HamiltonianSchedule::sampled(frame.grid, samples, "H*'")?;
    Ok((out, hprime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_igen;
    use crate::propagator::evolve;

    fn spin_invariant(t: f64) -> Op {
        // rotating field direction; I(t) = n(t)·σ with n precessing about z
        let (th, ph) = (0.6f64, t);
        let nz = th.cos();
        let nx = th.sin() * ph.cos();
        let ny = th.sin() * ph.sin();
        Op::from_rows(&[vec![C64::new(nz, 0.0), C64::new(nx, -ny)], vec![C64::new(nx, ny), C64::new(-nz, 0.0)]])
    }

    #[test]
    fn transport_of_identity_path_is_constant() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let i0 = Op::real_diagonal(&[1.0, 2.0, 4.0]);
        let path = transport(&UnitaryPath::identity(3, g), &i0).unwrap();
        for k in 0..g.len() {
            assert_eq!(path.sample(k).distance(&i0, None), 0.0);
        }
        assert_eq!(path.source(), Source::Transported);
    }

    #[test]
    fn constant_commuting_pair_has_zero_residual() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let i0 = Op::real_diagonal(&[1.0, 2.0, 4.0]);
        let i0c = i0.clone();
        let inv = InvariantPath::analytic(g, 3, move |_| i0c.clone());
        let h = HamiltonianSchedule::constant(Op::real_diagonal(&[0.3, -1.0, 2.0]), "h").unwrap();
        assert!(lvn_residual(&inv, &h).unwrap().iter().all(|&r| r < 1e-14));
        let two = InvariantPath::from_samples(TimeGrid::new(1.0, 1).unwrap(), vec![i0.clone(), i0]).unwrap();
        assert!(matches!(lvn_residual(&two, &h), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn precessing_spin_invariant_and_residual_order() {
        // H = σ_z/2 rotates n about z with unit angular velocity
        let h = HamiltonianSchedule::constant(Op::real_diagonal(&[0.5, -0.5]), "h").unwrap();
        let res = |steps| {
            let g = TimeGrid::new(2.0, steps).unwrap();
            let u = evolve(&h, 2.0, steps, 1e-12).unwrap();
            let inv = transport(&u, &spin_invariant(0.0)).unwrap();
            lvn_residual(&inv, &h).unwrap().into_iter().fold(0.0, f64::max).max(g.dt() * 0.0)
        };
        let (a, b) = (res(16), res(32));
        assert!(a / b > 12.0, "{a} {b}");
        // analytic invariant agrees with the transported one
        let g = TimeGrid::new(2.0, 32).unwrap();
        let u = evolve(&h, 2.0, 32, 1e-12).unwrap();
        let tr = transport(&u, &spin_invariant(0.0)).unwrap();
        for k in 0..g.len() {
            assert!(tr.sample(k).distance(&spin_invariant(g.t(k)), None) < 1e-12);
        }
    }

    #[test]
    fn constant_diagonal_frame_is_canonical() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let i0 = Op::real_diagonal(&[3.0, 1.0, 2.0]);
        let inv = InvariantPath::analytic(g, 3, move |_| i0.clone());
        let f = eigenframe(&inv, true).unwrap();
        assert_eq!(f.eigenvalues, vec![1.0, 2.0, 3.0]);
        for k in 0..g.len() {
            let w = f.frame(k);
            assert_eq!(w[(1, 0)], C64::new(1.0, 0.0));
            assert_eq!(w[(2, 1)], C64::new(1.0, 0.0));
            assert_eq!(w[(0, 2)], C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn spin_frame_is_smooth_periodic_and_reconstructs() {
        let g = TimeGrid::new(2.0 * std::f64::consts::PI, 256).unwrap();
        let inv = InvariantPath::analytic(g, 2, spin_invariant);
        let f = eigenframe(&inv, true).unwrap();
        assert!(f.min_overlap > 0.99);
        assert!(f.orthonormality_defect() < 1e-10);
        for k in 0..g.len() {
            assert!(f.reconstruct(k).distance(&spin_invariant(g.t(k)), None) < 1e-8);
        }
        let last = g.len() - 1;
        assert!((f.frame(0) - f.frame(last)).norm_l2() < 1e-12);
        // lower state is anti-aligned with n: phase is +half the solid angle
        let expected = std::f64::consts::PI * (1.0 - 0.6f64.cos());
        let got = f.closure_angles[0][0];
        assert!(crate::grid::angle_distance(got, expected) < 1e-3, "{got} vs {expected}");
    }

    #[test]
    fn spectrum_drift_detected() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let inv = InvariantPath::analytic(g, 2, |t| Op::real_diagonal(&[1.0 + t, 3.0]));
        assert!(matches!(eigenframe(&inv, false), Err(Error::SpectrumNotConstant { .. })));
    }

    #[test]
    fn degenerate_blocks_and_periodic_check() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let inv = InvariantPath::analytic(g, 3, |_| Op::real_diagonal(&[1.0, 1.0, 2.0]));
        let f = eigenframe(&inv, true).unwrap();
        assert_eq!(f.degeneracies, vec![2, 1]);
        let open = InvariantPath::analytic(g, 2, spin_invariant);
        assert!(matches!(eigenframe(&open, true), Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn symmetry_generators() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let inv = InvariantPath::analytic(g, 2, spin_invariant);
        let good = HamiltonianSchedule::analytic(2, "sin I", |t| spin_invariant(t).scale_real(t.sin()));
        assert!(symmetry_check(&inv, &good).unwrap() < 1e-15);
        let bad = HamiltonianSchedule::constant(Op::real_diagonal(&[1.0, -1.0]), "z").unwrap();
        assert!(matches!(symmetry_check(&inv, &bad), Err(Error::SymmetryViolation { .. })));
        let h = HamiltonianSchedule::constant(Op::real_diagonal(&[0.5, -0.5]), "h").unwrap();
        let same = build_geq(&h, &HamiltonianSchedule::zero(2), &inv).unwrap();
        assert!(same.eval(0.3).distance(&h.eval(0.3), None) == 0.0);
    }

    #[test]
    fn hstar_of_constant_frame_vanishes() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let inv = InvariantPath::analytic(g, 2, |_| Op::real_diagonal(&[1.0, 2.0]));
        let f = eigenframe(&inv, false).unwrap();
        let (h, res) = hstar(&f).unwrap();
        assert!(res < 1e-12);
        assert!(h.eval(0.5).max_abs() < 1e-12);
    }

    #[test]
    fn hstar_generates_its_frame_and_splits_any_hamiltonian() {
        let tmax = 2.0 * std::f64::consts::PI;
        let g = TimeGrid::new(tmax, 512).unwrap();
        let inv = InvariantPath::analytic(g, 2, spin_invariant);
        let f = eigenframe(&inv, true).unwrap();
        let (hs, res) = hstar(&f).unwrap();
        assert!(res < 1e-8);
        let u = evolve(&hs, tmax, 512, 1.0).unwrap();
        for k in (0..g.len()).step_by(64) {
            assert!(u.samples()[k].distance(&f.as_unitary(k).unwrap(), None) < 1e-6);
        }
        assert!(u.last().distance(&Op::identity(2), None) < 1e-6);
        // the precession Hamiltonian differs from H★ by a symmetry generator
        let h = HamiltonianSchedule::constant(Op::real_diagonal(&[0.5, -0.5]), "h").unwrap();
        let samples = (0..g.len()).map(|k| &h.eval(g.t(k)) - &hs.eval(g.t(k))).collect();
        let x = HamiltonianSchedule::sampled(g, samples, "x").unwrap();
        let defects: Vec<f64> =
            (0..g.len()).map(|k| relative_commutator(&inv.sample(k), &x.eval(g.t(k))).unwrap()).collect();
        assert!(defects.iter().cloned().fold(0.0, f64::max) < 1e-8);
    }

    #[test]
    fn constant_gauge_leaves_hstar() {
        let tmax = 2.0 * std::f64::consts::PI;
        let g = TimeGrid::new(tmax, 128).unwrap();
        let inv = InvariantPath::analytic(g, 2, spin_invariant);
        let f = eigenframe(&inv, true).unwrap();
        let i0 = spin_invariant(0.0);
        let z = expm_igen(&i0, 0.8).unwrap();
        let zpath = UnitaryPath::from_samples(g, vec![Op::identity(2); g.len()]).unwrap();
        let (f1, h1) = gauge_transform(&f, &zpath, &i0).unwrap();
        let (h0, _) = hstar(&f).unwrap();
        assert!(h1.eval(1.0).distance(&h0.eval(1.0), None) < 1e-14);
        assert!((f1.frame(3) - f.frame(3)).norm_l2() < 1e-14);
        assert!(UnitaryPath::from_samples(g, vec![z.clone(); g.len()]).is_err());
        let zc = UnitaryPath::from_unitaries(g, vec![z.clone(); g.len()]).unwrap();
        let (fz, hz) = gauge_transform(&f, &zc, &i0).unwrap();
        for k in [0, 17, 128] {
            let expected = &f.as_unitary(k).unwrap() * &z;
            assert!(fz.as_unitary(k).unwrap().distance(&expected, None) < 1e-13);
        }
        assert!(hz.eval(1.0).distance(&h0.eval(1.0), None) < 1e-10);
    }
}
