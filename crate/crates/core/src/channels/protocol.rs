use num_complex::Complex64;
use rand::Rng;

use super::WeylBasis;
use crate::bipartite::maximally_entangled;
use crate::error::{Error, Result};
use crate::matrix::{c64, identity, partial_trace, projector, tensor, tensor_vec, CMatrix, CVector, DensityMatrix, Subsystem};
use crate::random::{haar_unitary, seeded_rng};

/// Largest D for which the `D³`-dimensional ancilla unitary is built.
const PROTOCOL_MAX_DIM: usize = 5;

/// `|χ⟩ = α|Φ⁺⟩ + β|0⟩ ⊗ Σ_j |j⟩/sqrt(D)` on two ancillae.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiState {
    dim: usize,
    alpha: Complex64,
    beta: Complex64,
}

impl ChiState {
    pub fn new(dim: usize, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let d = dim as f64;
        let norm = alpha.norm_sqr() + beta.norm_sqr() + 2.0 * (alpha * beta.conj()).re / d;
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitVector { norm: norm.sqrt() });
        }
        let max = d * d / (d * d - 1.0);
        if beta.norm_sqr() > max + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "|beta|^2 = {} exceeds D^2/(D^2-1) = {max}",
                beta.norm_sqr()
            )));
        }
        Ok(Self { dim, alpha, beta })
    }

    /// Real `α >= -Re(β)/D` fixed by normalization.
    pub fn from_beta(dim: usize, beta: Complex64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let d = dim as f64;
        let disc = beta.re * beta.re / (d * d) - beta.norm_sqr() + 1.0;
        if disc < -1e-12 {
            return Err(Error::InvalidArgument(format!("no normalized state with beta = {beta}")));
        }
        let alpha = -beta.re / d + disc.max(0.0).sqrt();
        Self::new(dim, c64(alpha, 0.0), beta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn vector(&self) -> CVector {
        let d = self.dim;
        let uniform = CVector::from_element(d, c64(1.0 / (d as f64).sqrt(), 0.0));
        let zero = crate::matrix::basis_vector(d, 0);
        maximally_entangled(d) * self.alpha + tensor_vec(&zero, &uniform) * self.beta
    }
}

fn check_protocol_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if dim > PROTOCOL_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: dim.pow(3),
            limit: PROTOCOL_MAX_DIM.pow(3),
        });
    }
    Ok(())
}

/// `(1 ⊗ P ⊗ P) Σ_{m,n} (X^n Z^m)_S ⊗ |Φ_mn⟩⟨Φ_mn|_{a1 a2}` on `S ⊗ a1 ⊗ a2`,
/// with `|Φ_mn⟩ = (X^n Z^m ⊗ 1)|Φ⁺⟩` and `P|j⟩ = |-j mod D⟩`.
///
/// Maps `|ψ⟩_S|Φ⁺⟩` to itself and `|ψ⟩_S|0⟩|+⟩` to `|ψ⟩_{a1}|Φ⁺⟩_{S a2}`.
pub fn protocol1_unitary(dim: usize) -> Result<CMatrix> {
    check_protocol_dim(dim)?;
    let weyl = WeylBasis::new(dim)?;
    let phi = maximally_entangled(dim);
    let one = identity(dim);
    let mut u = CMatrix::zeros(dim.pow(3), dim.pow(3));
    for m in 0..dim {
        for n in 0..dim {
            let w = weyl.weyl(n, m);
            let bell = tensor(&w, &one) * &phi;
            u += tensor(&w, &projector(&bell));
        }
    }
    let parity = CMatrix::from_fn(dim, dim, |r, c| {
        if (r + c) % dim == 0 {
            c64(1.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    Ok(tensor(&one, &tensor(&parity, &parity)) * u)
}

fn controlled(dim: usize, target: usize, control: usize, base: &CMatrix) -> CMatrix {
    let one = identity(dim);
    let mut out = CMatrix::zeros(dim.pow(3), dim.pow(3));
    let mut power = identity(dim);
    for j in 0..dim {
        let mut factors = [one.clone(), one.clone(), one.clone()];
        factors[control] = projector(&crate::matrix::basis_vector(dim, j));
        factors[target] = power.clone();
        out += tensor(&tensor(&factors[0], &factors[1]), &factors[2]);
        power = base * power;
    }
    out
}

/// Product of the four controlled-shift and controlled-clock gates
/// `[X^j_S ⊗ |j⟩⟨j|_{a2}] [X†^j_S ⊗ |j⟩⟨j|_{a1}] [|j⟩⟨j|_S ⊗ Z†^j_{a1}] [|j⟩⟨j|_S ⊗ Z^j_{a2}]`,
/// rightmost applied first. Kept for comparison with [`protocol1_unitary`].
pub fn protocol1_literal_unitary(dim: usize) -> Result<CMatrix> {
    check_protocol_dim(dim)?;
    let weyl = WeylBasis::new(dim)?;
    let (s, a1, a2) = (0, 1, 2);
    Ok(controlled(dim, s, a2, &weyl.x)
        * controlled(dim, s, a1, &weyl.x.adjoint())
        * controlled(dim, a1, s, &weyl.z.adjoint())
        * controlled(dim, a2, s, &weyl.z))
}

/// `Tr_{a1 a2}[U (|ψ⟩⟨ψ| ⊗ |χ⟩⟨χ|) U†]`.
pub fn protocol1_with(u: &CMatrix, psi: &CVector, chi: &ChiState) -> Result<DensityMatrix> {
    let d = chi.dim;
    if psi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi.len(),
        });
    }
    if u.nrows() != d.pow(3) {
        return Err(Error::DimensionMismatch {
            expected: d.pow(3),
            found: u.nrows(),
        });
    }
    let out = u * tensor_vec(psi, &chi.vector());
    let reduced = partial_trace(&(&out * out.adjoint()), d, d * d, Subsystem::A)?;
    DensityMatrix::from_hermitian_part(reduced)
}

pub fn protocol1(psi: &CVector, chi: &ChiState) -> Result<DensityMatrix> {
    protocol1_with(&protocol1_unitary(chi.dim)?, psi, chi)
}

/// `(1 - |β|²)|ψ⟩⟨ψ| + |β|² 1/D`.
pub fn protocol1_formula(psi: &CVector, beta_sq: f64) -> Result<DensityMatrix> {
    let d = psi.len();
    DensityMatrix::from_hermitian_part(
        projector(psi).scale(1.0 - beta_sq) + identity(d).scale(beta_sq / d as f64),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeOutput {
    pub state: DensityMatrix,
    /// `(D⟨ψ|ρ|ψ⟩ - 1)/(D - 1)` of the averaged state.
    pub p_estimate: f64,
    pub std_error: f64,
    /// `(D² f - 1)/(D² - 1)`.
    pub p_expected: f64,
    pub trials: usize,
}

/// Averages `U† E_f(U |ψ⟩⟨ψ| U†) U` over `trials` seeded Haar unitaries, where
/// `E_f` does nothing with probability `f` and applies `X` otherwise.
pub fn pdps_recipe(psi: &CVector, f: f64, seed: u64, trials: usize) -> Result<RecipeOutput> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::FOutOfRange(f));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let d = psi.len();
    let weyl = WeylBasis::new(d)?;
    let mut rng = seeded_rng(seed);
    let mut acc = CMatrix::zeros(d, d);
    let mut overlaps = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = haar_unitary(d, &mut rng);
        let flip = rng.random::<f64>() >= f;
        let mut v = &u * psi;
        if flip {
            v = &weyl.x * v;
        }
        let out = u.adjoint() * v;
        overlaps.push(psi.dotc(&out).norm_sqr());
        acc += &out * out.adjoint();
    }
    let n = trials as f64;
    acc /= c64(n, 0.0);
    let mean = overlaps.iter().sum::<f64>() / n;
    let var = if trials > 1 {
        overlaps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let dd = d as f64;
    Ok(RecipeOutput {
        state: DensityMatrix::from_hermitian_part(acc)?,
        p_estimate: (dd * mean - 1.0) / (dd - 1.0),
        std_error: dd / (dd - 1.0) * (var / n).sqrt(),
        p_expected: super::twirled_polarization(d, f),
        trials,
    })
}
