//! Trace moments `Tr ρ^m`: direct, through the permutation operator on
//! `ρ^{⊗m}`, and as simulated interferometer statistics.

use rand::Rng;
use rand_distr::Binomial;

use crate::error::{Error, Result};
use crate::matrix::{eig_hermitian, expect_square, hermitian_residual, identity, max_abs, CMatrix, DensityMatrix};
use crate::random::seeded_rng;

/// Largest `D^m` accepted by the permutation contraction.
pub const TENSOR_POWER_LIMIT: usize = 4096;
/// Default tolerance on `t3` when choosing the sign of `p`.
pub const T3_TOL: f64 = 1e-8;
/// Eigenvalues in `(-ZERO_BAND, ZERO_BAND)` make the sign count indeterminate.
pub const ZERO_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    Exact,
    Permutation,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub m: usize,
    pub value: f64,
    pub method: MomentMethod,
    /// Zero for deterministic methods.
    pub shots: u64,
    pub std_error: f64,
}

/// `Σ_i λ_i^m`.
pub fn moment_exact(rho: &DensityMatrix, m: usize) -> MomentEstimate {
    let values = rho.spectrum().values;
    MomentEstimate {
        m,
        value: values.iter().map(|l| l.powi(m as i32)).sum(),
        method: MomentMethod::Exact,
        shots: 0,
        std_error: 0.0,
    }
}

/// `((1-p)/D + p)^m + (D-1)((1-p)/D)^m`.
pub fn dps_moment(p: f64, dim: usize, m: usize) -> f64 {
    let d = dim as f64;
    let base = (1.0 - p) / d;
    (base + p).powi(m as i32) + (d - 1.0) * base.powi(m as i32)
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &k in perm {
        if k >= perm.len() || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

fn tensor_power_dim(dim: usize, m: usize) -> Result<usize> {
    let total = dim
        .checked_pow(m as u32)
        .filter(|&n| n <= TENSOR_POWER_LIMIT)
        .ok_or(Error::DimensionTooLarge {
            dim: dim.saturating_pow(m as u32),
            limit: TENSOR_POWER_LIMIT,
        })?;
    Ok(total)
}

/// `Ŝ |k_0 … k_{m-1}⟩ = |k_{σ(0)} … k_{σ(m-1)}⟩` on `(C^dim)^{⊗m}`, first factor most significant.
pub fn permutation_operator(dim: usize, perm: &[usize]) -> Result<CMatrix> {
    check_permutation(perm)?;
    let n = tensor_power_dim(dim, perm.len())?;
    let m = perm.len();
    let digits = |mut idx: usize| {
        let mut out = vec![0; m];
        for slot in out.iter_mut().rev() {
            *slot = idx % dim;
            idx /= dim;
        }
        out
    };
    let mut s = CMatrix::zeros(n, n);
    for col in 0..n {
        let k = digits(col);
        let row = perm.iter().fold(0, |acc, &j| acc * dim + k[j]);
        s[(row, col)] = crate::matrix::c64(1.0, 0.0);
    }
    Ok(s)
}

/// `Tr(Ŝ_σ ρ^{⊗m}) = Σ_K Π_k ρ[K_k, K_{σ(k)}]`, contracted without forming `ρ^{⊗m}`.
pub fn moment_with_permutation(rho: &DensityMatrix, perm: &[usize]) -> Result<MomentEstimate> {
    check_permutation(perm)?;
    let dim = rho.dim();
    let m = perm.len();
    let n = tensor_power_dim(dim, m)?;
    let r = rho.matrix();
    let mut index = vec![0usize; m];
    let mut total = crate::matrix::c64(0.0, 0.0);
    for _ in 0..n {
        let term = (0..m).fold(crate::matrix::c64(1.0, 0.0), |acc, k| acc * r[(index[k], index[perm[k]])]);
        total += term;
        for slot in index.iter_mut().rev() {
            *slot += 1;
            if *slot < dim {
                break;
            }
            *slot = 0;
        }
    }
    Ok(MomentEstimate {
        m,
        value: total.re,
        method: MomentMethod::Permutation,
        shots: 0,
        std_error: 0.0,
    })
}

/// `Tr ρ^m` through the cyclic shift on `m` copies.
pub fn moment_permutation(rho: &DensityMatrix, m: usize) -> Result<MomentEstimate> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be >= 2, got {m}")));
    }
    let cycle: Vec<usize> = (0..m).map(|k| (k + 1) % m).collect();
    moment_with_permutation(rho, &cycle)
}

/// `sqrt((1 - t²)/shots)`.
pub fn swap_test_std_error(t: f64, shots: u64) -> f64 {
    ((1.0 - t * t).max(0.0) / shots as f64).sqrt()
}

/// Simulated ancilla statistics: `shots` outcomes with `P(+) = (1 + Tr ρ^m)/2`,
/// estimate `2 · fraction(+) - 1`, standard error from the true moment.
pub fn moment_montecarlo(rho: &DensityMatrix, m: usize, shots: u64, seed: u64) -> Result<MomentEstimate> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let t = moment_exact(rho, m).value;
    let prob = ((1.0 + t) / 2.0).clamp(0.0, 1.0);
    let mut rng = seeded_rng(seed);
    let plus = Binomial::new(shots, prob)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let hits: u64 = rng.sample(plus);
    Ok(MomentEstimate {
        m,
        value: 2.0 * hits as f64 / shots as f64 - 1.0,
        method: MomentMethod::MonteCarlo,
        shots,
        std_error: swap_test_std_error(t, shots),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentFit {
    pub p: f64,
    /// `false` when `±p` both reproduce `t3` (always for D = 2).
    pub sign_resolved: bool,
    pub t3_residual: f64,
}

/// Polarization of a DPS from `Tr ρ²` and `Tr ρ³`.
pub fn dps_p_from_moments(t2: f64, t3: f64, dim: usize) -> Result<MomentFit> {
    dps_p_from_moments_tol(t2, t3, dim, T3_TOL)
}

pub fn dps_p_from_moments_tol(t2: f64, t3: f64, dim: usize, tol: f64) -> Result<MomentFit> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let d = dim as f64;
    let radicand = (d * t2 - 1.0) / (d - 1.0);
    if radicand < -tol {
        return Err(Error::InconsistentMoments(format!("Tr rho^2 = {t2} is below 1/D")));
    }
    let magnitude = radicand.max(0.0).sqrt();
    if magnitude > 1.0 + tol {
        return Err(Error::InconsistentMoments(format!("Tr rho^2 = {t2} exceeds 1")));
    }
    let magnitude = magnitude.min(1.0);
    let p_min = -1.0 / (d - 1.0);
    let mut fits: Vec<(f64, f64)> = [magnitude, -magnitude]
        .into_iter()
        .filter(|&p| p >= p_min - tol)
        .map(|p| (p, (dps_moment(p, dim, 3) - t3).abs()))
        .filter(|&(_, r)| r < tol)
        .collect();
    fits.sort_by(|a, b| a.1.total_cmp(&b.1));
    let Some(&(p, residual)) = fits.first() else {
        return Err(Error::InconsistentMoments(format!(
            "no polarization with |p| = {magnitude} reproduces Tr rho^3 = {t3}"
        )));
    };
    let sign_resolved = dim > 2 && (fits.len() == 1 || magnitude == 0.0);
    // ±p share a spectrum at D = 2; report |p|
    let p = if dim == 2 { magnitude } else { p };
    Ok(MomentFit {
        p,
        sign_resolved,
        t3_residual: residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharpolyCount {
    /// Sign changes of the characteristic-polynomial coefficients.
    pub positive: usize,
    /// `#{λ > ZERO_BAND}` from the eigensolver.
    pub eigen_positive: usize,
    /// Some eigenvalue lies in `(-ZERO_BAND, ZERO_BAND)`.
    pub indeterminate: bool,
    /// `c_n, c_{n-1}, …, c_0` of `det(λ - M)`, leading coefficient first.
    pub coefficients: Vec<f64>,
}

/// `det(λ - M)` coefficients by the Faddeev-LeVerrier recursion, leading first.
pub fn charpoly(m: &CMatrix) -> Result<Vec<f64>> {
    let n = expect_square(m)?;
    let one = identity(n);
    let mut coeffs = vec![1.0];
    let mut mk = CMatrix::zeros(n, n);
    for k in 1..=n {
        mk = m * &mk + one.scale(*coeffs.last().unwrap());
        let c = -(m * &mk).trace().re / k as f64;
        coeffs.push(c);
    }
    Ok(coeffs)
}

/// Number of positive eigenvalues of a Hermitian matrix by Descartes' rule on
/// its characteristic polynomial.
pub fn count_positive_charpoly(m: &CMatrix) -> Result<CharpolyCount> {
    let n = expect_square(m)?;
    let scale = max_abs(m).max(1e-300);
    let residual = hermitian_residual(m);
    if residual > 1e-12 * scale.max(1.0) {
        return Err(Error::NonHermitian { residual });
    }
    let coefficients = charpoly(m)?;
    let norm = m.norm().max(1e-300);
    let mut binom = 1.0;
    let mut signs = Vec::with_capacity(n + 1);
    for (k, &c) in coefficients.iter().enumerate() {
        // |c_{n-k}| <= C(n,k) |M|^k; anything far below that is rounding
        if c.abs() > 1e-13 * binom * norm.powi(k as i32) {
            signs.push(c.signum());
        }
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    let positive = signs.windows(2).filter(|w| w[0] != w[1]).count();
    let values = eig_hermitian(m)?.values;
    Ok(CharpolyCount {
        positive,
        eigen_positive: values.iter().filter(|&&v| v > ZERO_BAND).count(),
        indeterminate: values.iter().any(|v| v.abs() < ZERO_BAND),
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::pt_spectrum_closed;
    use crate::matrix::{basis_vector, c64, partial_transpose, tensor, Subsystem};
    use crate::metrics::make_dps;
    use crate::random::{haar_pure, haar_unitary, random_density, random_hermitian};
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&crate::matrix::CVector::from_iterator(v.len(), v.iter().map(|&x| c64(x, 0.0))))
    }

    #[test]
    fn exact_examples() {
        let pure = DensityMatrix::pure(&haar_pure(4, &mut seeded_rng(1))).unwrap();
        for m in 1..5 {
            assert_abs_diff_eq!(moment_exact(&pure, m).value, 1.0, epsilon = 1e-12);
        }
        let mixed = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(moment_exact(&mixed, 3).value, 1.0 / 9.0, epsilon = 1e-15);
        let p: f64 = 0.35;
        let dps = make_dps(haar_pure(5, &mut seeded_rng(2)), p).unwrap().to_density();
        assert_abs_diff_eq!(moment_exact(&dps, 2).value, 0.2 + 4.0 * p * p / 5.0, epsilon = 1e-13);
        assert_abs_diff_eq!(moment_exact(&dps, 3).value, dps_moment(p, 5, 3), epsilon = 1e-13);
    }

    #[test]
    fn permutation_examples() {
        let rho = DensityMatrix::new(diag(&[0.7, 0.3])).unwrap();
        assert_abs_diff_eq!(moment_permutation(&rho, 2).unwrap().value, 0.58, epsilon = 1e-15);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(moment_permutation(&mixed, 3).unwrap().value, 1.0 / 9.0, epsilon = 1e-15);
        assert!(matches!(
            moment_permutation(&DensityMatrix::maximally_mixed(5), 6),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn contraction_matches_explicit_operator() {
        let mut rng = seeded_rng(3);
        for d in 2..=4 {
            let rho = DensityMatrix::new(random_density(d, d, &mut rng)).unwrap();
            for perm in [vec![1, 0], vec![1, 2, 0], vec![2, 0, 1]] {
                let s = permutation_operator(d, &perm).unwrap();
                let power = perm.iter().skip(1).fold(rho.matrix().clone(), |acc, _| tensor(&acc, rho.matrix()));
                let explicit = (s * power).trace();
                let contracted = moment_with_permutation(&rho, &perm).unwrap().value;
                assert_abs_diff_eq!(contracted, explicit.re, epsilon = 1e-12);
                assert_abs_diff_eq!(explicit.im, 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(contracted, moment_exact(&rho, perm.len()).value, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn swap_is_permutation_operator() {
        let s = permutation_operator(3, &[1, 0]).unwrap();
        let a = basis_vector(3, 1);
        let b = basis_vector(3, 2);
        let ab = crate::matrix::tensor_vec(&a, &b);
        let ba = crate::matrix::tensor_vec(&b, &a);
        assert!((s * ab - ba).norm() < 1e-15);
    }

    #[test]
    fn disjoint_cycles_factor() {
        let rho = DensityMatrix::new(random_density(2, 2, &mut seeded_rng(4))).unwrap();
        let t2 = moment_exact(&rho, 2).value;
        let t3 = moment_exact(&rho, 3).value;
        let est = moment_with_permutation(&rho, &[1, 0, 3, 4, 2]).unwrap().value;
        assert_abs_diff_eq!(est, t2 * t3, epsilon = 1e-12);
        assert!(moment_with_permutation(&rho, &[0, 0]).is_err());
    }

    #[test]
    fn montecarlo_examples() {
        let pure = DensityMatrix::pure(&basis_vector(3, 0)).unwrap();
        let est = moment_montecarlo(&pure, 2, 1000, 1).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.std_error, 0.0);

        let mixed = DensityMatrix::maximally_mixed(2);
        let est = moment_montecarlo(&mixed, 2, 20000, 2).unwrap();
        assert!((est.value - 0.5).abs() < 3.0 * est.std_error);

        let dps = make_dps(haar_pure(3, &mut seeded_rng(5)), 0.6).unwrap().to_density();
        let est = moment_montecarlo(&dps, 3, 100_000, 3).unwrap();
        assert!((est.value - moment_exact(&dps, 3).value).abs() < 3.0 * est.std_error);
        assert_eq!(est, moment_montecarlo(&dps, 3, 100_000, 3).unwrap());
    }

    #[test]
    fn p_from_moments_examples() {
        let fit = dps_p_from_moments(dps_moment(-0.1, 3, 2), dps_moment(-0.1, 3, 3), 3).unwrap();
        assert_abs_diff_eq!(fit.p, -0.1, epsilon = 1e-12);
        assert!(fit.sign_resolved);

        let fit = dps_p_from_moments(dps_moment(0.5, 2, 2), dps_moment(0.5, 2, 3), 2).unwrap();
        assert_abs_diff_eq!(fit.p, 0.5, epsilon = 1e-12);
        assert!(!fit.sign_resolved);
        let fit = dps_p_from_moments(dps_moment(-0.5, 2, 2), dps_moment(-0.5, 2, 3), 2).unwrap();
        assert_abs_diff_eq!(fit.p, 0.5, epsilon = 1e-12);

        let fit = dps_p_from_moments(1.0, 1.0, 4).unwrap();
        assert_abs_diff_eq!(fit.p, 1.0, epsilon = 1e-12);
        assert!(fit.sign_resolved);
    }

    #[test]
    fn p_from_moments_errors() {
        assert!(matches!(dps_p_from_moments(0.1, 0.01, 3), Err(Error::InconsistentMoments(_))));
        assert!(matches!(dps_p_from_moments(0.5, 0.5, 3), Err(Error::InconsistentMoments(_))));
        assert!(matches!(dps_p_from_moments(1.2, 1.0, 3), Err(Error::InconsistentMoments(_))));
    }

    #[test]
    fn p_from_moments_round_trip() {
        for d in 3..=6 {
            let lo = -1.0 / (d as f64 - 1.0);
            for k in 0..=40 {
                let p = lo + (1.0 - lo) * k as f64 / 40.0;
                let fit = dps_p_from_moments(dps_moment(p, d, 2), dps_moment(p, d, 3), d).unwrap();
                assert_abs_diff_eq!(fit.p, p, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn charpoly_examples() {
        let c = count_positive_charpoly(&diag(&[0.5, 0.3, 0.2])).unwrap();
        assert_eq!(c.positive, 3);
        assert_eq!(c.coefficients.len(), 4);
        assert_abs_diff_eq!(c.coefficients[3], -0.03, epsilon = 1e-15);

        let c = count_positive_charpoly(&(-identity(3))).unwrap();
        assert_eq!(c.positive, 0);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = crate::matrix::CVector::zeros(9);
        psi[0] = c64(s, 0.0);
        psi[4] = c64(s, 0.0);
        let rho = make_dps(psi, 1.0 / 3.0).unwrap().to_matrix();
        let pt = partial_transpose(&rho, 3, 3, Subsystem::B).unwrap();
        let c = count_positive_charpoly(&pt).unwrap();
        assert_eq!(c.positive, 8);
        assert_eq!(c.eigen_positive, 8);
        assert!(!c.indeterminate);
        let closed = pt_spectrum_closed(1.0 / 3.0, &[s, s, 0.0], 3, 3).unwrap();
        assert_eq!(closed.iter().filter(|&&x| x > 0.0).count(), 8);

        let bad = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(count_positive_charpoly(&bad), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn charpoly_matches_eigen_count() {
        let mut rng = seeded_rng(6);
        for n in 2..=9 {
            for _ in 0..10 {
                let h = random_hermitian(n, &mut rng);
                let c = count_positive_charpoly(&h).unwrap();
                let gap_ok = eig_hermitian(&h).unwrap().values.windows(2).all(|w| w[1] - w[0] > 1e-6);
                if gap_ok && !c.indeterminate {
                    assert_eq!(c.positive, c.eigen_positive);
                }
            }
        }
    }

    #[test]
    fn charpoly_flags_zero_eigenvalues() {
        let u = haar_unitary(4, &mut seeded_rng(7));
        let m = &u * diag(&[0.4, 0.0, -0.2, 0.1]) * u.adjoint();
        let m = (&m + m.adjoint()).scale(0.5);
        let c = count_positive_charpoly(&m).unwrap();
        assert!(c.indeterminate);
        assert_eq!(c.positive, 2);
        assert_eq!(c.eigen_positive, 2);
    }
}
