//! Depolarized pure states and closed-form distance measures between them.
//!
//! Each closed form has a brute-force counterpart evaluated on the full
//! density matrices: [`fidelity_oracle`] and [`trace_distance_oracle`].

use crate::error::{Error, Result};
use crate::matrix::{
    c64, eig_hermitian, identity, projector, sqrt_psd, trace_norm, CMatrix, CVector, DensityMatrix,
    PSD_CLIP_TOL,
};

/// Slack used when clipping distance outputs to their mathematical range.
pub const CLIP_SLACK: f64 = 1e-12;
/// Tolerance on the Fuchs-van de Graaf chain checked by [`distance_report`].
pub const CHAIN_TOL: f64 = 1e-9;

/// `(1 - p) 1/D + p |ψ⟩⟨ψ|`, stored through its purification.
#[derive(Debug, Clone, PartialEq)]
pub struct DpsState {
    pure: CVector,
    p: f64,
}

/// Lower end of the positivity range, `-1/(D-1)`.
pub fn p_min_positive(dim: usize) -> f64 {
    -1.0 / (dim as f64 - 1.0)
}

/// Lower end of the completely positive range, `-1/(D²-1)`.
pub fn p_min_physical(dim: usize) -> f64 {
    let d = dim as f64;
    -1.0 / (d * d - 1.0)
}

pub fn make_dps(pure: CVector, p: f64) -> Result<DpsState> {
    let dim = pure.len();
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let norm = pure.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitVector { norm });
    }
    let min = p_min_positive(dim);
    if !(min - 1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::PolarizationOutOfRange { p, min, max: 1.0 });
    }
    Ok(DpsState {
        pure,
        p: p.clamp(min, 1.0),
    })
}

impl DpsState {
    pub fn dim(&self) -> usize {
        self.pure.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn pure(&self) -> &CVector {
        &self.pure
    }

    pub fn to_matrix(&self) -> CMatrix {
        let d = self.dim();
        identity(d).scale((1.0 - self.p) / d as f64) + projector(&self.pure).scale(self.p)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_hermitian_part(self.to_matrix())
            .expect("depolarized pure state has unit trace")
    }

    /// `f = |⟨Ψ|Φ⟩|²` between the purifications.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.pure.dotc(&other.pure).norm_sqr().min(1.0)
    }
}

fn check_pair(rho: &DpsState, sigma: &DpsState) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(())
}

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo && x >= lo - CLIP_SLACK {
        lo
    } else if x > hi && x <= hi + CLIP_SLACK {
        hi
    } else {
        x
    }
}

/// Closed-form Uhlmann fidelity `F(ρ, σ)` of two DPS of equal dimension.
///
/// Evaluates the analytic square root of the fidelity in terms of
/// `a = (1-p)(1-q)/D²`, `b = (1-p)q/D`, `c`, `d` and the overlap `f`, with
/// both branches of the `±` summed, and returns its square.
pub fn fidelity_closed(rho: &DpsState, sigma: &DpsState) -> Result<f64> {
    check_pair(rho, sigma)?;
    let dim = rho.dim() as f64;
    let (p, q) = (rho.p, sigma.p);
    let f = rho.overlap(sigma);

    let g = (((dim - 1.0) * p + 1.0) * (1.0 - p)).max(0.0).sqrt();
    let a = (1.0 - p) * (1.0 - q) / (dim * dim);
    let b = (1.0 - p) * q / dim;
    let c = q / dim * (g - (1.0 - p));
    let d = (1.0 - q + dim * q * f) / (dim * dim) * ((dim - 2.0) * p + 2.0 - 2.0 * g)
        + 2.0 * (1.0 - q) / (dim * dim) * (g - (1.0 - p));

    let centre = (2.0 * a + (b + 2.0 * c) * f + d + b * (1.0 - f)) / 2.0;
    let spread = (((b + 2.0 * c) * f + d - b * (1.0 - f)).powi(2) / 4.0
        + (b + c).powi(2) * (1.0 - f) * f)
        .sqrt();
    let sqrt_fid =
        (dim - 2.0) * a.max(0.0).sqrt() + (centre + spread).max(0.0).sqrt() + (centre - spread).max(0.0).sqrt();
    Ok(clip(sqrt_fid * sqrt_fid, 0.0, 1.0))
}

/// `F(ρ, σ) = (Tr sqrt(sqrt(ρ) σ sqrt(ρ)))²` by direct eigen-decomposition.
pub fn fidelity_oracle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let root = sqrt_psd(rho.matrix(), PSD_CLIP_TOL)?;
    let sigma_min = eig_hermitian(sigma.matrix())?.values[0];
    if sigma_min < -PSD_CLIP_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: sigma_min,
        });
    }
    let inner = &root * sigma.matrix() * &root;
    let inner = (&inner + inner.adjoint()).scale(0.5);
    let trace: f64 = eig_hermitian(&inner)?
        .values
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    Ok(clip(trace * trace, 0.0, 1.0))
}

/// Closed-form trace distance `(1/2)|ρ - σ|_tr` between two DPS.
pub fn trace_distance_closed(rho: &DpsState, sigma: &DpsState) -> Result<f64> {
    check_pair(rho, sigma)?;
    let dim = rho.dim() as f64;
    let (p, q) = (rho.p, sigma.p);
    let f = rho.overlap(sigma);
    let shift = (q - p) * (1.0 - dim / 2.0) / dim;
    let root = (((p + q - 2.0 * q * f) / 2.0).powi(2) + q * q * (1.0 - f) * f).sqrt();
    let total = (dim - 2.0) * (q - p).abs() / dim + (shift + root).abs() + (shift - root).abs();
    Ok(clip(0.5 * total, 0.0, 1.0))
}

pub fn trace_distance_oracle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let diff = rho.matrix() - sigma.matrix();
    Ok(clip(0.5 * trace_norm(&diff)?, 0.0, 1.0))
}

/// Bures metric `sqrt(2 - 2 sqrt(F))`.
pub fn bures(fidelity: f64) -> f64 {
    (2.0 - 2.0 * fidelity.clamp(0.0, 1.0).sqrt()).max(0.0).sqrt()
}

/// Bures angle `arccos(sqrt(F))` in radians.
pub fn bures_angle(fidelity: f64) -> f64 {
    fidelity.clamp(0.0, 1.0).sqrt().acos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub fidelity: f64,
    pub trace_distance: f64,
    pub bures: f64,
    pub angle: f64,
}

impl DistanceReport {
    /// Completes a report from fidelity and trace distance, checking
    /// `B²/2 <= D <= sqrt(1 - F)` within [`CHAIN_TOL`].
    pub fn from_measures(fidelity: f64, trace_distance: f64) -> Result<Self> {
        Self::from_measures_tol(fidelity, trace_distance, CHAIN_TOL)
    }

    pub fn from_measures_tol(fidelity: f64, trace_distance: f64, tol: f64) -> Result<Self> {
        let report = Self {
            fidelity,
            trace_distance,
            bures: bures(fidelity),
            angle: bures_angle(fidelity),
        };
        let (lower, upper) = report.chain_bounds();
        if lower > trace_distance + tol || trace_distance > upper + tol {
            return Err(Error::InequalityViolation(format!(
                "B^2/2 = {lower:.17e}, D = {trace_distance:.17e}, sqrt(1-F) = {upper:.17e}"
            )));
        }
        Ok(report)
    }

    /// `(B²/2, sqrt(1 - F))`.
    pub fn chain_bounds(&self) -> (f64, f64) {
        (
            self.bures * self.bures / 2.0,
            (1.0 - self.fidelity).max(0.0).sqrt(),
        )
    }
}

pub fn distance_report(rho: &DpsState, sigma: &DpsState) -> Result<DistanceReport> {
    let fidelity = fidelity_closed(rho, sigma)?;
    let trace_distance = trace_distance_closed(rho, sigma)?;
    DistanceReport::from_measures(fidelity, trace_distance)
}

/// Two unit vectors in `C^dim` with `|⟨a|b⟩|² = f`: `|0⟩` and `sqrt(f)|0⟩ + sqrt(1-f)|1⟩`.
pub fn overlap_pair(dim: usize, f: f64) -> Result<(CVector, CVector)> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::FOutOfRange(f));
    }
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut a = CVector::zeros(dim);
    a[0] = c64(1.0, 0.0);
    let mut b = CVector::zeros(dim);
    b[0] = c64(f.sqrt(), 0.0);
    b[1] = c64((1.0 - f).sqrt(), 0.0);
    Ok((a, b))
}

/// One point of the equal-polarization distance surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub p: f64,
    pub f: f64,
    pub bures: f64,
    pub trace_distance: f64,
    pub sqrt_one_minus_fidelity: f64,
}

/// Distance measures between two DPS with `p = q` over a `grid x grid` mesh of
/// `p ∈ [-1/(D²-1), 1]` and `f ∈ [0, 1]`, `p` varying slowest.
pub fn equal_polarization_surface(dim: usize, grid: usize) -> Result<Vec<SurfacePoint>> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid must be >= 2, got {grid}")));
    }
    let p_lo = p_min_physical(dim);
    let step = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (grid - 1) as f64;
    let mut out = Vec::with_capacity(grid * grid);
    for ip in 0..grid {
        let p = step(p_lo, 1.0, ip);
        for jf in 0..grid {
            let f = step(0.0, 1.0, jf);
            out.push(surface_point(dim, p, f)?);
        }
    }
    Ok(out)
}

pub fn surface_point(dim: usize, p: f64, f: f64) -> Result<SurfacePoint> {
    let (a, b) = overlap_pair(dim, f)?;
    let report = distance_report(&make_dps(a, p)?, &make_dps(b, p)?)?;
    Ok(SurfacePoint {
        p,
        f,
        bures: report.bures,
        trace_distance: report.trace_distance,
        sqrt_one_minus_fidelity: (1.0 - report.fidelity).max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::basis_vector;
    use crate::random::{haar_pure, seeded_rng};
    use approx::assert_abs_diff_eq;

    #[test]
    fn polarization_rounding_past_one_stays_finite() {
        let (x, y) = overlap_pair(3, 0.4).unwrap();
        let a = make_dps(x, 1.0 + 2e-16).unwrap();
        let b = make_dps(y, 1.0 - 3e-16).unwrap();
        assert_eq!(a.p(), 1.0);
        let f = fidelity_closed(&a, &b).unwrap();
        assert!((f - 0.4).abs() < 1e-12, "{f}");
        assert!((trace_distance_closed(&a, &b).unwrap() - 0.6_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn make_dps_examples() {
        let psi = haar_pure(4, &mut seeded_rng(1));
        let mixed = make_dps(psi, 0.0).unwrap().to_matrix();
        assert!((mixed - identity(4).scale(0.25)).norm() < 1e-15);

        let pure = make_dps(basis_vector(3, 0), 1.0).unwrap().to_matrix();
        assert!((pure - projector(&basis_vector(3, 0))).norm() < 1e-15);

        let state = make_dps(basis_vector(2, 0), -1.0 / 3.0).unwrap();
        let vals = state.to_density().spectrum().values;
        assert_abs_diff_eq!(vals[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(vals[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn make_dps_errors() {
        assert!(matches!(
            make_dps(basis_vector(3, 0), -0.6),
            Err(Error::PolarizationOutOfRange { .. })
        ));
        assert!(matches!(
            make_dps(basis_vector(3, 0).scale(2.0), 0.1),
            Err(Error::NonUnitVector { .. })
        ));
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = seeded_rng(2);
        let a = make_dps(haar_pure(5, &mut rng), 0.4).unwrap();
        assert_abs_diff_eq!(fidelity_closed(&a, &a).unwrap(), 1.0, epsilon = 1e-12);

        let psi = haar_pure(5, &mut rng);
        let phi = haar_pure(5, &mut rng);
        let f = psi.dotc(&phi).norm_sqr();
        let fp = fidelity_closed(&make_dps(psi, 1.0).unwrap(), &make_dps(phi, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(fp, f, epsilon = 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let rho = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(fidelity_oracle(&rho, &rho).unwrap(), 1.0, epsilon = 1e-14);

        let e0 = DensityMatrix::pure(&basis_vector(3, 0)).unwrap();
        let e1 = DensityMatrix::pure(&basis_vector(3, 1)).unwrap();
        assert_abs_diff_eq!(fidelity_oracle(&e0, &e1).unwrap(), 0.0, epsilon = 1e-14);

        // commuting states reduce to the classical Bhattacharyya coefficient
        let pv: [f64; 3] = [0.5, 0.3, 0.2];
        let qv = [0.1, 0.6, 0.3];
        let diag = |v: &[f64]| {
            DensityMatrix::new(CMatrix::from_fn(3, 3, |i, j| if i == j { c64(v[i], 0.0) } else { c64(0.0, 0.0) }))
                .unwrap()
        };
        let bc: f64 = pv.iter().zip(&qv).map(|(a, b)| (a * b).sqrt()).sum();
        assert_abs_diff_eq!(fidelity_oracle(&diag(&pv), &diag(&qv)).unwrap(), bc * bc, epsilon = 1e-14);
    }

    #[test]
    fn closed_forms_agree_with_oracles() {
        let mut rng = seeded_rng(3);
        use rand::Rng;
        for dim in 2..=9 {
            for _ in 0..60 {
                let lo = p_min_positive(dim);
                let p = rng.random_range(lo..=1.0);
                let q = rng.random_range(lo..=1.0);
                let a = make_dps(haar_pure(dim, &mut rng), p).unwrap();
                let b = make_dps(haar_pure(dim, &mut rng), q).unwrap();
                let fo = fidelity_oracle(&a.to_density(), &b.to_density()).unwrap();
                assert_abs_diff_eq!(fidelity_closed(&a, &b).unwrap(), fo, epsilon = 1e-8);
                let to = trace_distance_oracle(&a.to_density(), &b.to_density()).unwrap();
                assert_abs_diff_eq!(trace_distance_closed(&a, &b).unwrap(), to, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let mut rng = seeded_rng(4);
        let a = make_dps(haar_pure(6, &mut rng), 0.3).unwrap();
        let b = make_dps(haar_pure(6, &mut rng), -0.15).unwrap();
        assert_abs_diff_eq!(
            fidelity_closed(&a, &b).unwrap(),
            fidelity_closed(&b, &a).unwrap(),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            trace_distance_closed(&a, &b).unwrap(),
            trace_distance_closed(&b, &a).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn equal_polarization_trace_distance() {
        // with equal polarization ρ - σ = p (|Ψ⟩⟨Ψ| - |Φ⟩⟨Φ|), whose eigenvalues are ±p sqrt(1-f)
        let (a, b) = overlap_pair(9, 0.3).unwrap();
        let p: f64 = p_min_physical(9);
        let t = trace_distance_closed(&make_dps(a, p).unwrap(), &make_dps(b, p).unwrap()).unwrap();
        assert_abs_diff_eq!(t, p.abs() * 0.7_f64.sqrt(), epsilon = 1e-15);

        let (a, b) = overlap_pair(9, 0.0).unwrap();
        let t = trace_distance_closed(&make_dps(a, p).unwrap(), &make_dps(b, p).unwrap()).unwrap();
        assert_abs_diff_eq!(t, 1.0 / 80.0, epsilon = 1e-15);
    }

    #[test]
    fn report_examples() {
        let psi = haar_pure(4, &mut seeded_rng(5));
        let a = make_dps(psi, 0.2).unwrap();
        let r = distance_report(&a, &a).unwrap();
        assert_abs_diff_eq!(r.fidelity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.trace_distance, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bures, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.angle, 0.0, epsilon = 1e-6);

        let r = distance_report(
            &make_dps(basis_vector(3, 0), 1.0).unwrap(),
            &make_dps(basis_vector(3, 1), 1.0).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.fidelity, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.trace_distance, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bures, 2f64.sqrt(), epsilon = 1e-15);

        assert!(matches!(
            DistanceReport::from_measures(0.5, 0.9),
            Err(Error::InequalityViolation(_))
        ));
    }

    #[test]
    fn depolarization_is_not_monotone() {
        let dim = 9;
        for f in [0.0, 0.25, 0.5, 0.9] {
            let at = |p| surface_point(dim, p, f).unwrap().trace_distance;
            assert!(at(1.0) > at(p_min_physical(dim)));
            assert_abs_diff_eq!(at(0.0), 0.0, epsilon = 1e-15);
            assert!(at(p_min_physical(dim)) > 0.0);
        }
    }

    #[test]
    fn surface_shape() {
        let rows = equal_polarization_surface(9, 5).unwrap();
        assert_eq!(rows.len(), 25);
        assert_abs_diff_eq!(rows[0].p, -1.0 / 80.0, epsilon = 1e-16);
        assert_eq!(rows[24].p, 1.0);
        assert!(equal_polarization_surface(9, 1).is_err());
    }
}
