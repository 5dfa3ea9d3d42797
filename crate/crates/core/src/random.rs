//! Seeded random states and unitaries.
//!
//! Every sampler takes an explicit RNG; there is no global generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{c64, CMatrix, CVector};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th independent worker stream derived from `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary.
///
/// Column-wise Gram-Schmidt of a complex Ginibre matrix. Gram-Schmidt yields
/// the QR factor with a positive real diagonal in R, which is the phase fix
/// that makes Q exactly Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = ginibre(dim, dim, rng);
    let mut q = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut col = z.column(k).into_owned();
        for _ in 0..2 {
            for j in 0..k {
                let qj = q.column(j).into_owned();
                let overlap = qj.dotc(&col);
                col -= qj * overlap;
            }
        }
        let norm = col.norm();
        q.set_column(k, &col.unscale(norm));
    }
    q
}

/// Haar-random unit vector.
pub fn haar_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v.unscale(norm)
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Random density matrix `G G† / Tr(G G†)` with `G` a `dim x rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m.unscale(tr);
    (&m + m.adjoint()).scale(0.5)
}
