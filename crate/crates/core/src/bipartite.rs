//! Schmidt forms, marginals and partial-transpose spectra of bipartite DPS.

use crate::bloch::{dps_test, SuBasis};
use crate::error::{Error, Result};
use crate::matrix::{
    c64, complete_basis, eig_hermitian, identity, tensor, CMatrix, CVector, DensityMatrix,
};
use crate::metrics::{make_dps, DpsState};

/// PT eigenvalues in `(-NEG_TOL, 0)` are treated as zero when counting.
pub const NEG_TOL: f64 = 1e-10;
/// Tolerance used by [`consistency_check`] when comparing spectra.
pub const CONSISTENCY_TOL: f64 = 1e-8;
const SCHMIDT_NORM_TOL: f64 = 1e-10;
const PPT_CAVEAT: &str = "positive partial transpose does not certify separability";

/// `(U ⊗ V)|ψ⟩ = Σ_j b_j |j⟩|j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtForm {
    pub da: usize,
    pub db: usize,
    /// Descending, nonnegative.
    pub b: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl SchmidtForm {
    /// `Σ_j b_j e_j ⊗ e_j`.
    pub fn diagonal_vector(&self) -> CVector {
        let mut out = CVector::zeros(self.da * self.db);
        for (j, &bj) in self.b.iter().enumerate() {
            out[j * self.db + j] = c64(bj, 0.0);
        }
        out
    }

    pub fn local_unitary(&self) -> CMatrix {
        tensor(&self.u, &self.v)
    }

    /// The pure state `(U ⊗ V)† Σ_j b_j |j⟩|j⟩`.
    pub fn reconstruct(&self) -> CVector {
        self.local_unitary().adjoint() * self.diagonal_vector()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.b.iter().filter(|&&x| x > tol).count()
    }
}

fn check_dims(da: usize, db: usize) -> Result<()> {
    if da == 0 || db == 0 {
        return Err(Error::InvalidDimension(da.min(db)));
    }
    if da > db {
        return Err(Error::RequiresDaLeDb { da, db });
    }
    Ok(())
}

pub fn schmidt_pure(psi: &CVector, da: usize, db: usize) -> Result<SchmidtForm> {
    check_dims(da, db)?;
    if psi.len() != da * db {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            found: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > SCHMIDT_NORM_TOL {
        return Err(Error::NonUnitVector { norm });
    }

    let a = CMatrix::from_fn(da, db, |i, mu| psi[i * db + mu]);
    let spec = eig_hermitian(&(&a * a.adjoint()))?;
    let w: Vec<CVector> = (0..da).rev().map(|k| spec.vector(k)).collect();

    let mut b = Vec::with_capacity(da);
    let mut x: Vec<CVector> = Vec::with_capacity(db);
    for wj in &w {
        let col = a.adjoint() * wj;
        let bj = col.norm();
        b.push(bj);
        if bj < 1e-13 || x.len() < b.len() - 1 {
            continue;
        }
        let mut xj = col.unscale(bj);
        for xk in &x {
            let overlap = xk.dotc(&xj);
            xj -= xk * overlap;
        }
        let r = xj.norm();
        if r > 0.5 {
            x.push(xj.unscale(r));
        }
    }
    let x = complete_basis(&x, db);

    let u = CMatrix::from_fn(da, da, |j, i| w[j][i].conj());
    let v = CMatrix::from_fn(db, db, |j, mu| x[j][mu]);
    Ok(SchmidtForm { da, db, b, u, v })
}

/// Polarization and Schmidt form of the purification of a bipartite DPS.
pub fn schmidt_dps(
    rho: &DensityMatrix,
    da: usize,
    db: usize,
    basis: &SuBasis,
) -> Result<(f64, SchmidtForm)> {
    check_dims(da, db)?;
    if rho.dim() != da * db || basis.dim() != da * db {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            found: if rho.dim() != da * db { rho.dim() } else { basis.dim() },
        });
    }
    let p = dps_test(rho, basis, 1e-8).ok_or(Error::NotDps)?;
    if p.abs() < 1e-9 {
        return Err(Error::AmbiguousAtPZero);
    }
    let spec = rho.spectrum();
    let psi = if p > 0.0 {
        spec.vector(spec.max_index())
    } else {
        spec.vector(0)
    };
    Ok((p, schmidt_pure(&psi, da, db)?))
}

fn validate_schmidt(b: &[f64], max_len: usize) -> Result<()> {
    if b.len() > max_len {
        return Err(Error::InvalidSchmidtVector(format!(
            "{} coefficients for a factor of dimension {max_len}",
            b.len()
        )));
    }
    if let Some(x) = b.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(Error::InvalidSchmidtVector(format!("coefficient {x} is negative")));
    }
    let sum: f64 = b.iter().map(|x| x * x).sum();
    if (sum - 1.0).abs() > SCHMIDT_NORM_TOL {
        return Err(Error::InvalidSchmidtVector(format!("sum of squares is {sum}")));
    }
    Ok(())
}

/// Marginal spectrum `{(1-p)/dX + p b_i²}_{i<n} ∪ {(1-p)/dX}^{dX-n}`, ascending.
pub fn reduced_spectrum_dps(p: f64, b: &[f64], dx: usize, n_nonzero: usize) -> Result<Vec<f64>> {
    validate_schmidt(b, dx)?;
    if n_nonzero > dx || n_nonzero > b.len() {
        return Err(Error::InvalidSchmidtVector(format!(
            "n_nonzero = {n_nonzero} exceeds available coefficients"
        )));
    }
    if b[n_nonzero..].iter().any(|&x| x > SCHMIDT_NORM_TOL) {
        return Err(Error::InvalidSchmidtVector(
            "coefficients beyond n_nonzero are not zero".into(),
        ));
    }
    let base = (1.0 - p) / dx as f64;
    let mut out: Vec<f64> = b[..n_nonzero].iter().map(|x| base + p * x * x).collect();
    out.resize(dx, base);
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The marginals admit a DPS explanation. Not a proof of DPS form.
    Consistent {
        /// `None` when the marginals do not fix `p` (equal dimensions, or p ≈ 0).
        p: Option<f64>,
        b_squared: Option<Vec<f64>>,
    },
    Rejected(String),
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent { .. })
    }
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Checks whether two marginals can come from one bipartite DPS.
pub fn consistency_check(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Verdict {
    let (da, db) = (rho_a.dim(), rho_b.dim());
    if da > db {
        return Verdict::Rejected(format!("dA = {da} exceeds dB = {db}"));
    }
    let tol = CONSISTENCY_TOL;
    let sa = rho_a.spectrum().values;
    let sb = rho_b.spectrum().values;
    if sa[0] < tol {
        return Verdict::Rejected(format!("rho_A is rank deficient (min eigenvalue {:.3e})", sa[0]));
    }
    if sb[0] < tol {
        return Verdict::Rejected(format!("rho_B is rank deficient (min eigenvalue {:.3e})", sb[0]));
    }

    let extra = db - da;
    let run_fits = |mu: f64| sb.iter().filter(|&&x| (x - mu).abs() < tol).count() >= extra;
    if extra >= 2 && !sb.iter().any(|&mu| run_fits(mu)) {
        return Verdict::Rejected(format!(
            "rho_B has no degenerate eigenspace of dimension {extra}"
        ));
    }

    if extra == 0 {
        if max_deviation(&sa, &sb) < tol {
            return Verdict::Consistent {
                p: None,
                b_squared: None,
            };
        }
        return Verdict::Rejected("equal-dimension marginals have different spectra".into());
    }

    let d = (da * db) as f64;
    let shift_factor = 1.0 / da as f64 - 1.0 / db as f64;
    for &mu in &sb {
        if !run_fits(mu) {
            continue;
        }
        let p = 1.0 - db as f64 * mu;
        if p < -1.0 / (d - 1.0) - tol || p > 1.0 + tol {
            continue;
        }
        let shift = (1.0 - p) * shift_factor;
        let mut predicted: Vec<f64> = sa.iter().map(|a| a - shift).collect();
        predicted.resize(db, mu);
        predicted.sort_by(f64::total_cmp);
        if max_deviation(&predicted, &sb) >= tol {
            continue;
        }
        if p.abs() < tol {
            return Verdict::Consistent {
                p: Some(p),
                b_squared: None,
            };
        }
        let base = (1.0 - p) / da as f64;
        let mut b2: Vec<f64> = sa.iter().map(|a| (a - base) / p).collect();
        if b2.iter().any(|&x| x < -tol) {
            continue;
        }
        b2.iter_mut().for_each(|x| *x = x.max(0.0));
        b2.sort_by(|x, y| y.total_cmp(x));
        return Verdict::Consistent {
            p: Some(p),
            b_squared: Some(b2),
        };
    }
    Verdict::Rejected("no polarization explains both marginal spectra".into())
}

/// Partial-transpose spectrum of a DPS in Schmidt form, ascending.
///
/// `{(1-p)/D + p b_j²} ∪ {(1-p)/D ± p b_j b_j'}_{j<j'} ∪ {(1-p)/D}^{D-dA²}`.
pub fn pt_spectrum_closed(p: f64, b: &[f64], da: usize, db: usize) -> Result<Vec<f64>> {
    check_dims(da, db)?;
    validate_schmidt(b, da)?;
    let dim = da * db;
    let base = (1.0 - p) / dim as f64;
    let mut coeffs = b.to_vec();
    coeffs.resize(da, 0.0);
    let mut out = Vec::with_capacity(dim);
    for (j, bj) in coeffs.iter().enumerate() {
        out.push(base + p * bj * bj);
        for bk in &coeffs[j + 1..] {
            out.push(base + p * bj * bk);
            out.push(base - p * bj * bk);
        }
    }
    out.resize(dim, base);
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    /// Ascending.
    pub pt_spectrum: Vec<f64>,
    pub negativity: f64,
    pub negative_count: usize,
    /// `dA(dA-1)/2`.
    pub bound: usize,
    /// `false` means "not detected by the PPT test".
    pub entangled: bool,
    pub caveat: Option<&'static str>,
}

impl EntanglementReport {
    /// Report from a precomputed PT spectrum.
    pub fn from_pt_spectrum(pt_spectrum: Vec<f64>, da: usize) -> Self {
        Self::from_pt_spectrum_with_tol(pt_spectrum, da, NEG_TOL)
    }

    pub fn from_pt_spectrum_with_tol(mut pt_spectrum: Vec<f64>, da: usize, neg_tol: f64) -> Self {
        pt_spectrum.sort_by(f64::total_cmp);
        let negative_sum: f64 = pt_spectrum.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
        let negativity = if da > 1 {
            2.0 * negative_sum / (da - 1) as f64
        } else {
            0.0
        };
        let negative_count = pt_spectrum.iter().filter(|&&x| x < -neg_tol).count();
        let entangled = negative_count > 0;
        EntanglementReport {
            pt_spectrum,
            negativity,
            negative_count,
            bound: da * da.saturating_sub(1) / 2,
            entangled,
            caveat: (!entangled).then_some(PPT_CAVEAT),
        }
    }
}

pub fn negativity(p: f64, b: &[f64], da: usize, db: usize) -> Result<EntanglementReport> {
    let spectrum = pt_spectrum_closed(p, b, da, db)?;
    Ok(EntanglementReport::from_pt_spectrum(spectrum, da))
}

/// Brute-force report for an arbitrary bipartite state.
pub fn entanglement_report(rho: &DensityMatrix, da: usize, db: usize) -> Result<EntanglementReport> {
    check_dims(da, db)?;
    let pt = crate::matrix::partial_transpose(rho.matrix(), da, db, crate::matrix::Subsystem::B)?;
    Ok(EntanglementReport::from_pt_spectrum(eig_hermitian(&pt)?.values, da))
}

fn pauli() -> [CMatrix; 3] {
    let z = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// Two-qubit DPS in local-unitary canonical form together with its PT
/// eigenvalues `μ₁..μ₄`.
pub fn two_qubit_canonical(p: f64, omega: f64) -> Result<(DensityMatrix, [f64; 4])> {
    if !(-1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::PolarizationOutOfRange {
            p,
            min: -1.0 / 3.0,
            max: 1.0,
        });
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&omega) {
        return Err(Error::InvalidArgument(format!("omega = {omega} outside [0, pi/2]")));
    }
    let [x, y, z] = pauli();
    let one = identity(2);
    let (s, c) = omega.sin_cos();
    let m = (tensor(&one, &one)
        + tensor(&z, &one).scale(p * c)
        + tensor(&one, &z).scale(p * c)
        + tensor(&x, &x).scale(p * s)
        - tensor(&y, &y).scale(p * s)
        + tensor(&z, &z).scale(p))
    .scale(0.25);
    let mu = [
        (1.0 + p) / 4.0 + p * c / 2.0,
        (1.0 + p) / 4.0 - p * c / 2.0,
        (1.0 - p) / 4.0 + p * s / 2.0,
        (1.0 - p) / 4.0 - p * s / 2.0,
    ];
    Ok((DensityMatrix::from_hermitian_part(m)?, mu))
}

/// `|Φ⁺⟩ = Σ_i |ii⟩/sqrt(d)`.
pub fn maximally_entangled(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = c64(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// Polarization of the isotropic state with singlet fraction `f`.
pub fn isotropic_polarization(da: usize, f: f64) -> f64 {
    let d2 = (da * da) as f64;
    (d2 * f - 1.0) / (d2 - 1.0)
}

/// Isotropic state as a DPS over `|Φ⁺⟩`, and whether `f <= 1/dA`.
pub fn isotropic(da: usize, f: f64) -> Result<(DpsState, bool)> {
    if da < 2 {
        return Err(Error::InvalidDimension(da));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::FOutOfRange(f));
    }
    let p = isotropic_polarization(da, f).clamp(-1.0 / ((da * da) as f64 - 1.0), 1.0);
    let state = make_dps(maximally_entangled(da), p)?;
    Ok((state, f <= 1.0 / da as f64))
}
