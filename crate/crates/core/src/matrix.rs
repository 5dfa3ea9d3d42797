//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Composite indices of
//! bipartite operators are A-major: subsystem indices `(i, j)` map to
//! `i * dB + j`, which is the convention of [`tensor`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Entry-wise Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr - 1|` for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Default clipping tolerance for slightly negative eigenvalues.
pub const PSD_CLIP_TOL: f64 = 1e-10;

/// Hermiticity tolerance accepted by the eigensolver, relative to the largest entry.
const EIG_HERMITIAN_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 80;
/// Eigenvalues closer than this (relative) are treated as one degenerate cluster.
const DEGENERACY_TOL: f64 = 1e-10;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Which half of a bipartite system an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Hermitian, unit-trace complex matrix.
///
/// Positivity is deliberately not enforced: partial transposes and the
/// outputs of non-completely-positive maps are carried by the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace at the default tolerances.
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tolerance(mat, HERMITIAN_TOL, TRACE_TOL)
    }

    pub fn with_tolerance(mat: CMatrix, hermitian_tol: f64, trace_tol: f64) -> Result<Self> {
        expect_square(&mat)?;
        let residual = hermitian_residual(&mat);
        if residual > hermitian_tol {
            return Err(Error::NonHermitian { residual });
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > trace_tol {
            return Err(Error::NotUnitTrace {
                trace,
                residual: (trace - 1.0).abs(),
            });
        }
        Ok(Self { mat })
    }

    /// Replaces `mat` with its Hermitian part before validating the trace.
    ///
    /// Used for matrices produced by long products whose Hermiticity is
    /// only exact in exact arithmetic.
    pub fn from_hermitian_part(mat: CMatrix) -> Result<Self> {
        expect_square(&mat)?;
        Self::new(hermitian_part(&mat))
    }

    /// `|ψ⟩⟨ψ|` for a unit vector ψ.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitVector { norm });
        }
        Self::new(projector(psi))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn spectrum(&self) -> Spectrum {
        eig_hermitian(&self.mat).expect("density matrix is Hermitian by construction")
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.spectrum().values[0] >= -tol
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// `values` are ascending and column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, k)] *= v;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn max_index(&self) -> usize {
        self.values.len() - 1
    }
}

pub fn expect_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// `max_ij |M_ij - conj(M_ji)|`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn projector(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

pub fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = c64(1.0, 0.0);
    v
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn eig_hermitian(m: &CMatrix) -> Result<Spectrum> {
    let n = expect_square(m)?;
    let scale = max_abs(m).max(1.0);
    let residual = hermitian_residual(m);
    if residual > EIG_HERMITIAN_TOL * scale {
        return Err(Error::NonHermitian { residual });
    }
    if n == 0 {
        return Ok(Spectrum {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }

    let mut a = hermitian_part(m);
    let mut v = identity(n);
    let frob = a.norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    reorthonormalize_clusters(&values, &mut vectors);
    Ok(Spectrum { values, vectors })
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
///
/// The rotation is `J = diag(1, conj(e)) * [[c, s], [-s, c]]` on the (p, q)
/// plane, where `e` is the phase of `a[p][q]`; `a <- J† a J`, `v <- v J`.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b < 1e-300 {
        return;
    }
    let e = apq / b;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ec = e.conj();
    let n = a.nrows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - ec * akq * s;
        a[(k, q)] = akp * s + ec * akq * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - e * aqk * s;
        a[(q, k)] = apk * s + e * aqk * c;
    }
    a[(p, q)] = c64(0.0, 0.0);
    a[(q, p)] = c64(0.0, 0.0);
    a[(p, p)] = c64(a[(p, p)].re, 0.0);
    a[(q, q)] = c64(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - ec * vkq * s;
        v[(k, q)] = vkp * s + ec * vkq * c;
    }
}

fn reorthonormalize_clusters(values: &[f64], vectors: &mut CMatrix) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && (values[end] - values[start]).abs()
                <= DEGENERACY_TOL * values[start].abs().max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<CVector> = (start..end)
                .map(|k| vectors.column(k).into_owned())
                .collect();
            let ortho = pivoted_gram_schmidt(&[], &cols, end - start);
            for (offset, col) in ortho.into_iter().enumerate() {
                vectors.set_column(start + offset, &col);
            }
        }
        start = end;
    }
}

/// Modified Gram-Schmidt with largest-remaining-norm pivoting.
///
/// Returns up to `count` unit vectors drawn from `candidates`, each
/// orthogonal to `fixed` and to one another. Candidates whose residual norm
/// falls below `1e-12` are discarded.
pub fn pivoted_gram_schmidt(fixed: &[CVector], candidates: &[CVector], count: usize) -> Vec<CVector> {
    let mut remaining: Vec<CVector> = candidates
        .iter()
        .map(|c| {
            let mut r = c.clone();
            for f in fixed {
                let overlap = f.dotc(&r);
                r -= f * overlap;
            }
            r
        })
        .collect();
    let mut out: Vec<CVector> = Vec::with_capacity(count);
    while out.len() < count && !remaining.is_empty() {
        let (best, best_norm) = remaining
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_norm < 1e-12 {
            break;
        }
        let mut chosen = remaining.swap_remove(best);
        // second pass restores orthogonality lost to cancellation
        for f in fixed.iter().chain(out.iter()) {
            let overlap = f.dotc(&chosen);
            chosen -= f * overlap;
        }
        let unit = chosen.unscale(chosen.norm());
        for r in remaining.iter_mut() {
            let overlap = unit.dotc(r);
            *r -= &unit * overlap;
        }
        out.push(unit);
    }
    out
}

/// Extends an orthonormal family to a basis of `C^dim` using canonical basis
/// vectors as candidates.
pub fn complete_basis(partial: &[CVector], dim: usize) -> Vec<CVector> {
    let candidates: Vec<CVector> = (0..dim).map(|k| basis_vector(dim, k)).collect();
    let extra = pivoted_gram_schmidt(partial, &candidates, dim - partial.len());
    partial.iter().cloned().chain(extra).collect()
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-clip_tol, 0)` are clipped to zero.
pub fn sqrt_psd(m: &CMatrix, clip_tol: f64) -> Result<CMatrix> {
    let spec = eig_hermitian(m)?;
    let min = spec.values[0];
    if min < -clip_tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = Spectrum {
        values: spec.values.iter().map(|&v| v.max(0.0).sqrt()).collect(),
        vectors: spec.vectors,
    };
    Ok(hermitian_part(&roots.reconstruct()))
}

/// `Tr sqrt(M† M)`, the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    expect_square(m)?;
    if hermitian_residual(m) <= 1e-13 * max_abs(m).max(1.0) {
        let spec = eig_hermitian(m)?;
        return Ok(spec.values.iter().map(|v| v.abs()).sum());
    }
    let gram = m.adjoint() * m;
    let spec = eig_hermitian(&gram)?;
    Ok(spec.values.iter().map(|v| v.max(0.0).sqrt()).sum())
}

/// Kronecker product `A ⊗ B` (A-major composite index).
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

fn check_bipartite(m: &CMatrix, da: usize, db: usize) -> Result<()> {
    let n = expect_square(m)?;
    if n != da * db {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            found: n,
        });
    }
    Ok(())
}

/// Traces out one subsystem, returning the reduced operator on `keep`.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, keep: Subsystem) -> Result<CMatrix> {
    check_bipartite(m, da, db)?;
    let out = match keep {
        Subsystem::A => CMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()
        }),
        Subsystem::B => CMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()
        }),
    };
    Ok(out)
}

/// Transposes the indices of one subsystem.
pub fn partial_transpose(m: &CMatrix, da: usize, db: usize, which: Subsystem) -> Result<CMatrix> {
    check_bipartite(m, da, db)?;
    let n = da * db;
    let out = CMatrix::from_fn(n, n, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        match which {
            Subsystem::A => m[(k * db + j, i * db + l)],
            Subsystem::B => m[(i * db + l, k * db + j)],
        }
    });
    Ok(out)
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    let n = u.nrows();
    u.ncols() == n && (u.adjoint() * u - identity(n)).norm() <= tol
}
