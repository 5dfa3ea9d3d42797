//! Generalized Gell-Mann basis of su(D) and coherence (Bloch) vectors.
//!
//! Generator order: the D(D-1)/2 symmetric pair matrices `E_jk + E_kj`, then
//! the D(D-1)/2 antisymmetric ones `-i E_jk + i E_kj` (both with `j < k`,
//! lexicographic), then the D-1 diagonal matrices
//! `sqrt(2/(l(l+1))) (Σ_{m<l} E_mm - l E_ll)` for `l = 1..D-1`. For D = 2 this
//! gives the Pauli matrices in the order x, y, z.
//!
//! A state is written `ρ = (1/D)(1 + c_D n·λ)` with `c_D = sqrt(D(D-1)/2)`, so
//! pure states have `|n| = 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{c64, eig_hermitian, CMatrix, DensityMatrix};

/// Sparse entries `(row, col, value)` of one generator.
type SparseGenerator = Vec<(usize, usize, Complex64)>;

/// `(i, j, k, value)` entry of a structure tensor.
pub type TensorEntry = (usize, usize, usize, f64);

const TENSOR_ZERO: f64 = 1e-13;

/// The D²-1 generalized Gell-Mann generators together with their structure
/// tensors `c_ijk` (antisymmetric) and `d_ijk` (symmetric), stored sparsely.
#[derive(Debug, Clone)]
pub struct SuBasis {
    dim: usize,
    generators: Vec<SparseGenerator>,
    c: Vec<TensorEntry>,
    d: Vec<TensorEntry>,
}

impl SuBasis {
    pub fn new(dim: usize) -> Result<Self> {
        generate_basis(dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Dense copy of generator `i`.
    pub fn generator(&self, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.generators[i] {
            m[(r, c)] = v;
        }
        m
    }

    pub fn generators(&self) -> Vec<CMatrix> {
        (0..self.len()).map(|i| self.generator(i)).collect()
    }

    /// Nonzero entries of the antisymmetric structure constants `c_ijk`.
    pub fn c_tensor(&self) -> &[TensorEntry] {
        &self.c
    }

    /// Nonzero entries of the symmetric d-tensor `d_ijk`.
    pub fn d_tensor(&self) -> &[TensorEntry] {
        &self.d
    }

    /// `c_D = sqrt(D(D-1)/2)`.
    pub fn norm_constant(&self) -> f64 {
        let d = self.dim as f64;
        (d * (d - 1.0) / 2.0).sqrt()
    }

    /// `Tr(M λ_i)`.
    pub fn trace_with(&self, m: &CMatrix, i: usize) -> Complex64 {
        self.generators[i]
            .iter()
            .map(|&(r, c, v)| m[(c, r)] * v)
            .sum()
    }
}

/// Builds the generalized Gell-Mann basis and extracts
/// `c_ijk = -(i/4) Tr([λ_i, λ_j] λ_k)` and `d_ijk = (1/4) Tr({λ_i, λ_j} λ_k)`.
pub fn generate_basis(dim: usize) -> Result<SuBasis> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut generators: Vec<SparseGenerator> = Vec::with_capacity(dim * dim - 1);
    for j in 0..dim {
        for k in j + 1..dim {
            generators.push(vec![(j, k, c64(1.0, 0.0)), (k, j, c64(1.0, 0.0))]);
        }
    }
    for j in 0..dim {
        for k in j + 1..dim {
            generators.push(vec![(j, k, c64(0.0, -1.0)), (k, j, c64(0.0, 1.0))]);
        }
    }
    for l in 1..dim {
        let lf = l as f64;
        let scale = (2.0 / (lf * (lf + 1.0))).sqrt();
        let mut g: SparseGenerator = (0..l).map(|m| (m, m, c64(scale, 0.0))).collect();
        g.push((l, l, c64(-lf * scale, 0.0)));
        generators.push(g);
    }

    let n = generators.len();
    // t[i][j][k] = Tr(λ_i λ_j λ_k)
    let mut triple = vec![Complex64::new(0.0, 0.0); n * n * n];
    let mut product = CMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            product.fill(c64(0.0, 0.0));
            for &(a, b, x) in &generators[i] {
                for &(b2, c, y) in &generators[j] {
                    if b == b2 {
                        product[(a, c)] += x * y;
                    }
                }
            }
            for (k, gk) in generators.iter().enumerate() {
                triple[(i * n + j) * n + k] = gk.iter().map(|&(c, a, z)| product[(a, c)] * z).sum();
            }
        }
    }

    let mut c = Vec::new();
    let mut d = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let tijk = triple[(i * n + j) * n + k];
                let tjik = triple[(j * n + i) * n + k];
                let cv = ((tijk - tjik) * c64(0.0, -0.25)).re;
                let dv = ((tijk + tjik) * 0.25).re;
                if cv.abs() > TENSOR_ZERO {
                    c.push((i, j, k, cv));
                }
                if dv.abs() > TENSOR_ZERO {
                    d.push((i, j, k, dv));
                }
            }
        }
    }

    Ok(SuBasis {
        dim,
        generators,
        c,
        d,
    })
}

/// Real coherence vector of length D²-1.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceVector {
    dim: usize,
    n: Vec<f64>,
}

impl CoherenceVector {
    pub fn new(dim: usize, n: Vec<f64>) -> Result<Self> {
        if dim < 2 || n.len() != dim * dim - 1 {
            return Err(Error::DimensionMismatch {
                expected: dim.saturating_mul(dim).saturating_sub(1),
                found: n.len(),
            });
        }
        Ok(Self { dim, n })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            n: vec![0.0; dim * dim - 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.n
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.n.iter().zip(&other.n).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            n: self.n.iter().map(|x| x * s).collect(),
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.n
            .iter()
            .zip(&other.n)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn check_dims(basis: &SuBasis, dim: usize) -> Result<()> {
    if basis.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: basis.dim,
            found: dim,
        });
    }
    Ok(())
}

/// `n_i = sqrt(D/(2(D-1))) Tr(ρ λ_i)`.
pub fn to_coherence(rho: &DensityMatrix, basis: &SuBasis) -> Result<CoherenceVector> {
    check_dims(basis, rho.dim())?;
    let d = basis.dim as f64;
    let factor = (d / (2.0 * (d - 1.0))).sqrt();
    let n = (0..basis.len())
        .map(|i| factor * basis.trace_with(rho.matrix(), i).re)
        .collect();
    Ok(CoherenceVector { dim: basis.dim, n })
}

/// `ρ = (1/D)(1 + c_D n·λ)`. Positivity is not checked.
pub fn from_coherence(n: &CoherenceVector, basis: &SuBasis) -> Result<DensityMatrix> {
    check_dims(basis, n.dim)?;
    let d = basis.dim;
    let cd = basis.norm_constant();
    let mut m = CMatrix::identity(d, d);
    for (gen, &ni) in basis.generators.iter().zip(&n.n) {
        for &(r, c, v) in gen {
            m[(r, c)] += v * (cd * ni);
        }
    }
    DensityMatrix::new(m.unscale(d as f64))
}

/// `(a ★ b)_k = c_D/(D-2) d_ijk a_i b_j`.
pub fn star(a: &CoherenceVector, b: &CoherenceVector, basis: &SuBasis) -> Result<CoherenceVector> {
    check_dims(basis, a.dim)?;
    check_dims(basis, b.dim)?;
    if basis.dim == 2 {
        return Err(Error::UndefinedForDim2);
    }
    let scale = basis.norm_constant() / (basis.dim as f64 - 2.0);
    let mut out = vec![0.0; basis.len()];
    for &(i, j, k, v) in &basis.d {
        out[k] += v * a.n[i] * b.n[j];
    }
    for x in out.iter_mut() {
        *x *= scale;
    }
    Ok(CoherenceVector {
        dim: basis.dim,
        n: out,
    })
}

/// `([n★]^r n)·n` for `r = 0..=r_max`; equals `p^(r+2)` for a DPS.
pub fn invariant_ladder(n: &CoherenceVector, basis: &SuBasis, r_max: usize) -> Result<Vec<f64>> {
    if basis.dim == 2 {
        return Err(Error::UndefinedForDim2);
    }
    let mut out = Vec::with_capacity(r_max + 1);
    let mut power = n.clone();
    for r in 0..=r_max {
        if r > 0 {
            power = star(n, &power, basis)?;
        }
        out.push(power.dot(n));
    }
    Ok(out)
}

/// Tolerances for [`dps_diagnose`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpsTolerances {
    /// Bound on `|n★n - p n|`.
    pub star: f64,
    /// Bound on the deviation from the `{a, b, ..., b}` spectrum pattern, and
    /// on negative eigenvalues.
    pub spectrum: f64,
}

impl Default for DpsTolerances {
    fn default() -> Self {
        Self {
            star: 1e-8,
            spectrum: 1e-8,
        }
    }
}

/// Everything [`dps_test`] measures on the way to its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct DpsDiagnostics {
    pub coherence_norm: f64,
    /// Candidate polarization; the sign comes from `n★n·n` when D >= 3.
    pub p: f64,
    /// `|n★n - p n|`, absent for D = 2.
    pub star_residual: Option<f64>,
    /// Max deviation of the sorted spectrum from the DPS pattern for `p`.
    pub spectrum_deviation: f64,
    pub min_eigenvalue: f64,
    pub is_dps: bool,
}

/// Eigenvalues of `(1-p) 1/D + p |ψ⟩⟨ψ|`, ascending.
pub fn dps_spectrum(p: f64, dim: usize) -> Vec<f64> {
    let base = (1.0 - p) / dim as f64;
    let mut values = vec![base; dim];
    values[0] = base + p;
    values.sort_by(f64::total_cmp);
    values
}

pub fn dps_diagnose(rho: &DensityMatrix, basis: &SuBasis, tol: DpsTolerances) -> Result<DpsDiagnostics> {
    let n = to_coherence(rho, basis)?;
    let norm = n.norm();
    let (p, star_residual) = if basis.dim == 2 {
        (norm, None)
    } else {
        let nn = star(&n, &n, basis)?;
        let sign = if nn.dot(&n) < 0.0 { -1.0 } else { 1.0 };
        let p = sign * norm;
        (p, Some(nn.distance(&n.scaled(p))))
    };
    let spectrum = eig_hermitian(rho.matrix())?.values;
    let expected = dps_spectrum(p, basis.dim);
    let spectrum_deviation = spectrum
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let min_eigenvalue = spectrum[0];
    let is_dps = star_residual.is_none_or(|r| r < tol.star)
        && spectrum_deviation < tol.spectrum
        && min_eigenvalue >= -tol.spectrum;
    Ok(DpsDiagnostics {
        coherence_norm: norm,
        p,
        star_residual,
        spectrum_deviation,
        min_eigenvalue,
        is_dps,
    })
}

/// Polarization of `rho` if it is a depolarized pure state, `None` otherwise.
///
/// For D = 2 every state qualifies and `p = |n| >= 0` by convention, since
/// `±p` give identical spectra there.
pub fn dps_test(rho: &DensityMatrix, basis: &SuBasis, tol: f64) -> Option<f64> {
    let tol = DpsTolerances {
        star: tol,
        spectrum: tol,
    };
    dps_diagnose(rho, basis, tol)
        .ok()
        .filter(|d| d.is_dps)
        .map(|d| d.p)
}
