//! Dense complex matrices with declared structure, Hermitian eigensolver,
//! unitary exponentials and commutator diagnostics.
//!
//! Everything downstream works in units with ħ = 1, so the propagator
//! generated by a Hermitian `A` over a time `s` is `exp(-i s A)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute floor applied to every relative tolerance.
pub const ABS_FLOOR: f64 = 1e-14;

/// Relative Hermiticity tolerance against `max|A|`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues closer than this (relative to the matrix norm) are treated as
/// one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Structure {
    pub hermitian: bool,
    pub unitary: bool,
    pub diagonal: bool,
}

impl Structure {
    pub const NONE: Structure = Structure { hermitian: false, unitary: false, diagonal: false };
    pub const HERMITIAN: Structure = Structure { hermitian: true, unitary: false, diagonal: false };
    pub const UNITARY: Structure = Structure { hermitian: false, unitary: true, diagonal: false };
}

/// Square complex matrix with structure flags.
#[derive(Clone)]
pub struct Op {
    mat: Mat<C64>,
    structure: Structure,
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Op({}x{}, {:?})", self.dim(), self.dim(), self.structure)?;
        for i in 0..self.dim().min(8) {
            for j in 0..self.dim().min(8) {
                let z = self.mat[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Op {
    pub fn zeros(dim: usize) -> Op {
        Op { mat: Mat::zeros(dim, dim), structure: Structure { hermitian: true, unitary: false, diagonal: true } }
    }

    pub fn identity(dim: usize) -> Op {
        Op { mat: Mat::identity(dim, dim), structure: Structure { hermitian: true, unitary: true, diagonal: true } }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Op {
        Op { mat: Mat::from_fn(dim, dim, f), structure: Structure::NONE }
    }

    /// Builds from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Op {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Op::from_fn(n, |i, j| rows[i][j])
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Op {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Op::from_fn(n, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(entries: &[C64]) -> Op {
        let n = entries.len();
        let hermitian = entries.iter().all(|z| z.im == 0.0);
        let unitary = entries.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-14);
        Op {
            mat: Mat::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO }),
            structure: Structure { hermitian, unitary, diagonal: true },
        }
    }

    pub fn real_diagonal(entries: &[f64]) -> Op {
        let z: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Op::diagonal(&z)
    }

    pub fn from_mat(mat: Mat<C64>) -> Op {
        assert_eq!(mat.nrows(), mat.ncols(), "operator matrices are square");
        Op { mat, structure: Structure::NONE }
    }

    /// Wraps `mat` and flags it Hermitian after checking
    /// `max|A_ij - conj(A_ji)| <= 1e-12 max|A|`.
    pub fn hermitian(mat: Mat<C64>) -> Result<Op> {
        let op = Op::from_mat(mat);
        op.check_hermitian()?;
        let s = op.structure;
        Ok(op.with_structure(Structure { hermitian: true, ..s }))
    }

    /// Wraps `mat` and flags it unitary after checking
    /// `||A A^† - 1||_F <= 1e-10 dim`.
    pub fn unitary(mat: Mat<C64>) -> Result<Op> {
        let op = Op::from_mat(mat);
        let defect = op.unitarity_defect();
        let allowed = 1e-10 * op.dim() as f64;
        if defect > allowed {
            return Err(Error::NonUnitaryInput { defect, allowed });
        }
        let s = op.structure;
        Ok(op.with_structure(Structure { unitary: true, ..s }))
    }

    pub(crate) fn with_structure(mut self, structure: Structure) -> Op {
        self.structure = structure;
        self
    }

    /// Symmetric average `(A + A^†)/2`; flagged Hermitian.
    pub fn hermitize(&self) -> Op {
        let n = self.dim();
        let mat = Mat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(self.mat[(i, i)].re, 0.0)
            } else {
                (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5
            }
        });
        Op { mat, structure: Structure { hermitian: true, ..Structure::NONE } }
    }

    /// Frobenius norm of the anti-Hermitian part `(A - A^†)/2`.
    pub fn anti_hermitian_norm(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += ((self.mat[(i, j)] - self.mat[(j, i)].conj()) * 0.5).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.mat[(i, j)]).collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Op {
        Op { mat: self.mat.adjoint().to_owned(), structure: self.structure }
    }

    pub fn scale(&self, s: C64) -> Op {
        let structure = Structure {
            hermitian: self.structure.hermitian && s.im == 0.0,
            unitary: self.structure.unitary && (s.norm() - 1.0).abs() <= 1e-15,
            diagonal: self.structure.diagonal,
        };
        Op { mat: faer::Scale(s) * &self.mat, structure }
    }

    pub fn scale_real(&self, s: f64) -> Op {
        self.scale(C64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    /// Leading `k x k` block, used for truncation-free comparisons.
    pub fn leading_block(&self, k: usize) -> Op {
        let k = k.min(self.dim());
        Op { mat: self.mat.submatrix(0, 0, k, k).to_owned(), structure: Structure::NONE }
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut d = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                d = d.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let allowed = (HERMITIAN_TOL * self.max_abs()).max(ABS_FLOOR);
        if defect > allowed {
            return Err(Error::NonHermitianInput { defect, allowed });
        }
        Ok(())
    }

    /// `||A A^† - 1||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.mat * self.mat.adjoint();
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { ONE } else { ZERO };
                acc += (prod[(i, j)] - target).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_exactly_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.mat[(i, j)] == ZERO))
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Op) -> Result<Op> {
        check_dims(self, other)?;
        let ab = &self.mat * &other.mat;
        let ba = &other.mat * &self.mat;
        Ok(Op { mat: &ab - &ba, structure: Structure::NONE })
    }

    /// `U A U^†`.
    pub fn conjugate_by(&self, u: &Op) -> Result<Op> {
        check_dims(self, u)?;
        let mat = &(&u.mat * &self.mat) * u.mat.adjoint();
        let structure = Structure { diagonal: false, ..self.structure };
        Ok(Op { mat, structure })
    }

    /// Closest unitary in Frobenius norm (polar factor), via Newton–Schulz
    /// iterations. Valid when the input is already close to unitary.
    pub fn nearest_unitary(&self) -> Op {
        let n = self.dim();
        let mut u = self.mat.clone();
        for _ in 0..6 {
            let uhu = u.adjoint() * &u;
            let mut corr = Mat::<C64>::from_fn(n, n, |i, j| -uhu[(i, j)]);
            for i in 0..n {
                corr[(i, i)] += C64::new(3.0, 0.0);
            }
            u = faer::Scale(C64::new(0.5, 0.0)) * (&u * &corr);
            let defect = (u.adjoint() * &u - Mat::<C64>::identity(n, n)).norm_l2();
            if defect <= 1e-15 * (n as f64).sqrt() {
                break;
            }
        }
        Op { mat: u, structure: Structure::UNITARY }
    }

    /// Frobenius distance to `other`, over the leading `block` rows/columns
    /// when given.
    pub fn distance(&self, other: &Op, block: Option<usize>) -> f64 {
        let k = block.unwrap_or(self.dim()).min(self.dim()).min(other.dim());
        let mut acc = 0.0;
        for j in 0..k {
            for i in 0..k {
                acc += (self.mat[(i, j)] - other.mat[(i, j)]).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn block_norm(&self, block: Option<usize>) -> f64 {
        let k = block.unwrap_or(self.dim()).min(self.dim());
        let mut acc = 0.0;
        for j in 0..k {
            for i in 0..k {
                acc += self.mat[(i, j)].norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `<u| A |v>` for column vectors.
    pub fn expectation(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (i, ui) in u.iter().enumerate().take(self.dim()) {
            if *ui == ZERO {
                continue;
            }
            let row: C64 = v.iter().enumerate().map(|(j, vj)| self.mat[(i, j)] * vj).sum();
            acc += ui.conj() * row;
        }
        acc
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.mat[(i, j)] * v[j]).sum()).collect()
    }
}

fn check_dims(a: &Op, b: &Op) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

impl Add for &Op {
    type Output = Op;
    fn add(self, rhs: &Op) -> Op {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in Op addition");
        let structure = Structure {
            hermitian: self.structure.hermitian && rhs.structure.hermitian,
            unitary: false,
            diagonal: self.structure.diagonal && rhs.structure.diagonal,
        };
        Op { mat: &self.mat + &rhs.mat, structure }
    }
}

impl Sub for &Op {
    type Output = Op;
    fn sub(self, rhs: &Op) -> Op {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in Op subtraction");
        let structure = Structure {
            hermitian: self.structure.hermitian && rhs.structure.hermitian,
            unitary: false,
            diagonal: self.structure.diagonal && rhs.structure.diagonal,
        };
        Op { mat: &self.mat - &rhs.mat, structure }
    }
}

impl Mul for &Op {
    type Output = Op;
    fn mul(self, rhs: &Op) -> Op {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in Op product");
        let structure = Structure {
            hermitian: false,
            unitary: self.structure.unitary && rhs.structure.unitary,
            diagonal: self.structure.diagonal && rhs.structure.diagonal,
        };
        Op { mat: &self.mat * &rhs.mat, structure }
    }
}

/// `||A B - B A||_F`.
pub fn comm_norm(a: &Op, b: &Op) -> Result<f64> {
    Ok(a.commutator(b)?.frobenius_norm())
}

/// Spectral decomposition `A = V diag(values) V^†` with ascending values.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub frame: Op,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(lambda)) V^†`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> Op {
        let n = self.dim();
        let v = self.frame.mat();
        let scaled = Mat::<C64>::from_fn(n, n, |i, j| v[(i, j)] * f(self.values[j]));
        Op::from_mat(&scaled * v.adjoint())
    }

    /// `exp(-i s A)`.
    pub fn exp_i(&self, s: f64) -> Op {
        if s == 0.0 {
            return Op::identity(self.dim());
        }
        self.map(|l| C64::from_polar(1.0, -s * l)).with_structure(Structure::UNITARY)
    }

    /// `exp(-i s A) v` without forming the matrix exponential.
    pub fn exp_i_apply(&self, s: f64, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let f = self.frame.mat();
        let coeffs: Vec<C64> = (0..n)
            .map(|j| {
                let c: C64 = (0..n).map(|i| f[(i, j)].conj() * v[i]).sum();
                c * C64::from_polar(1.0, -s * self.values[j])
            })
            .collect();
        (0..n).map(|i| (0..n).map(|j| f[(i, j)] * coeffs[j]).sum()).collect()
    }

    pub fn reconstruct(&self) -> Op {
        self.map(|l| C64::new(l, 0.0)).with_structure(Structure::HERMITIAN)
    }

    /// Groups of consecutive indices whose eigenvalues differ by less than
    /// `CLUSTER_TOL * scale`.
    pub fn clusters(&self, scale: f64) -> Vec<std::ops::Range<usize>> {
        cluster_ranges(&self.values, (CLUSTER_TOL * scale).max(ABS_FLOOR))
    }
}

pub(crate) fn cluster_ranges(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Hermitian eigendecomposition with deterministic eigenvector conventions.
///
/// Decoupled diagonal blocks (connected components of the nonzero pattern) are
/// solved independently. Nondegenerate eigenvectors have their first
/// dominant component made real and positive; within a degenerate cluster
/// the basis is the Gram–Schmidt orthonormalization of the projected
/// canonical vectors taken in index order.
pub fn eigh(a: &Op) -> Result<Eigh> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("eigh of an empty matrix".into()));
    }
    if !(0..n).all(|j| (0..n).all(|i| a.get(i, j).re.is_finite() && a.get(i, j).im.is_finite())) {
        return Err(Error::ConvergenceFailure { dim: n });
    }
    a.check_hermitian()?;

    let components = connected_components(a);
    let mut pairs: Vec<(f64, Vec<C64>)> = Vec::with_capacity(n);
    for comp in &components {
        let m = comp.len();
        if m == 1 {
            let k = comp[0];
            let mut v = vec![ZERO; n];
            v[k] = ONE;
            pairs.push((a.get(k, k).re, v));
            continue;
        }
        let sub = Mat::<C64>::from_fn(m, m, |i, j| a.get(comp[i], comp[j]));
        let evd = sub.self_adjoint_eigen(Side::Lower).map_err(|_| Error::ConvergenceFailure { dim: m })?;
        let s = evd.S().column_vector();
        let u = evd.U();
        for j in 0..m {
            let mut v = vec![ZERO; n];
            for i in 0..m {
                v[comp[i]] = u[(i, j)];
            }
            pairs.push((s[j].re, v));
        }
    }
    // Stable sort keeps the component/index order for exact ties.
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.1).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for range in cluster_ranges(&values, (CLUSTER_TOL * scale).max(ABS_FLOOR)) {
        if range.len() == 1 {
            fix_phase(&mut vectors[range.start]);
        } else {
            let basis = canonical_cluster_basis(&vectors[range.clone()], n);
            for (slot, v) in range.zip(basis) {
                vectors[slot] = v;
            }
        }
    }

    let frame = Op::from_fn(n, |i, j| vectors[j][i]).with_structure(Structure::UNITARY);
    Ok(Eigh { values, frame })
}

/// `exp(-i s A)` for Hermitian `A`.
pub fn expm_igen(a: &Op, s: f64) -> Result<Op> {
    if s == 0.0 {
        a.check_hermitian()?;
        return Ok(Op::identity(a.dim()));
    }
    Ok(eigh(a)?.exp_i(s))
}

fn connected_components(a: &Op) -> Vec<Vec<usize>> {
    let n = a.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if a.get(i, j) != ZERO || a.get(j, i) != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; n];
    for k in 0..n {
        let r = find(&mut parent, k);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[index_of_root[r]].push(k);
    }
    comps
}

fn fix_phase(v: &mut [C64]) {
    let max = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return;
    }
    if let Some(p) = v.iter().find(|z| z.norm() >= 0.5 * max).copied() {
        let phase = p.conj() / p.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn canonical_cluster_basis(cluster: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let d = cluster.len();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(d);
    let mut candidates: Vec<(usize, Vec<C64>, f64)> = Vec::new();
    for i in 0..n {
        if basis.len() == d {
            break;
        }
        // projection of e_i onto the cluster subspace
        let mut w = vec![ZERO; n];
        for v in cluster {
            let c = v[i].conj();
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk += c * vk;
            }
        }
        for b in &basis {
            let c: C64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
            for (wk, bk) in w.iter_mut().zip(b) {
                *wk -= c * bk;
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            basis.push(w.iter().map(|z| z / norm).collect());
        } else {
            candidates.push((i, w, norm));
        }
    }
    // Fallback for nearly-aligned clusters: complete with the largest residuals.
    while basis.len() < d {
        let mut best: Option<(Vec<C64>, f64)> = None;
        for (_, w0, _) in &candidates {
            let mut w = w0.clone();
            for b in &basis {
                let c: C64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk -= c * bk;
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(_, bn)| norm > *bn) {
                best = Some((w, norm));
            }
        }
        match best {
            Some((w, norm)) if norm > 0.0 => basis.push(w.iter().map(|z| z / norm).collect()),
            _ => break,
        }
    }
    basis
}

/// Eigen-decomposition of a unitary matrix: `M = Q diag(e^{i angle}) Q^†`,
/// angles in `(-pi, pi]`, `Q` unitary.
pub fn unitary_eigen(m: &Op) -> Result<(Vec<f64>, Op)> {
    let n = m.dim();
    let herm = Op::from_fn(n, |i, j| (m.get(i, j) + m.get(j, i).conj()) * 0.5);
    let skew = Op::from_fn(n, |i, j| (m.get(i, j) - m.get(j, i).conj()) * C64::new(0.0, -0.5));
    let first = eigh(&herm.hermitize())?;
    let mut q = first.frame.mat().to_owned();
    // cos-degenerate pairs (angle and -angle) are separated by the skew part
    for range in cluster_ranges(&first.values, 1e-7) {
        if range.len() < 2 {
            continue;
        }
        let d = range.len();
        let block = q.subcols(range.start, d).to_owned();
        let proj = &(block.adjoint() * skew.mat()) * &block;
        let sub = Op::from_mat(proj.to_owned()).hermitize();
        let rot = eigh(&sub)?;
        let rotated = &block * rot.frame.mat();
        for j in 0..d {
            for i in 0..n {
                q[(i, range.start + j)] = rotated[(i, j)];
            }
        }
    }
    let q = Op::from_mat(q).with_structure(Structure::UNITARY);
    let angles = (0..n)
        .map(|j| {
            let col = q.column(j);
            m.expectation(&col, &col).arg()
        })
        .collect();
    Ok((angles, q))
}

/// `M^p` for unitary `M` using principal angles.
pub fn unitary_power(m: &Op, p: f64) -> Result<Op> {
    let (angles, q) = unitary_eigen(m)?;
    let n = m.dim();
    let qm = q.mat();
    let scaled = Mat::<C64>::from_fn(n, n, |i, j| qm[(i, j)] * C64::from_polar(1.0, p * angles[j]));
    Ok(Op::from_mat(&scaled * qm.adjoint()).with_structure(Structure::UNITARY))
}
