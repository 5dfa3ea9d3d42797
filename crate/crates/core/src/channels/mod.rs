//! Kraus channels, the depolarizing family and its realizations.

mod clifford;
mod protocol;

pub use clifford::{clifford_group, is_clifford, twirl, TwirlMode, TwirlResult};
pub use protocol::{
    pdps_recipe, protocol1, protocol1_formula, protocol1_literal_unitary, protocol1_unitary,
    protocol1_with, ChiState, RecipeOutput,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{
    c64, eig_hermitian, expect_square, identity, partial_trace, tensor, CMatrix, DensityMatrix,
    Subsystem,
};
use crate::metrics::{p_min_physical, p_min_positive};

/// Trace-preservation tolerance for [`KrausChannel::new`].
pub const TP_TOL: f64 = 1e-10;

/// `ρ ↦ Σ_m K_m ρ K_m†`, trace preserving.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let dim = expect_square(first)?;
        for k in &kraus {
            let n = expect_square(k)?;
            if n != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: n,
                });
            }
        }
        let sum = kraus
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let residual = (sum - identity(dim)).norm();
        if residual > TP_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self { dim, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![identity(dim)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// `ρ ↦ Σ_k w_k U_k ρ U_k†` for probabilities `w_k`.
    pub fn mixed_unitary(terms: &[(f64, CMatrix)]) -> Result<Self> {
        if terms.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::InvalidArgument("negative mixture weight".into()));
        }
        Self::new(
            terms
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(w, u)| u.scale(w.sqrt()))
                .collect(),
        )
    }

    /// Minimal Kraus form of the channel whose Jamiołkowski state is `choi`.
    pub fn from_jamiolkowski(choi: &CMatrix, dim: usize) -> Result<Self> {
        let spec = eig_hermitian(choi)?;
        let scale = dim as f64;
        let kraus = spec
            .values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &v)| v > 1e-14)
            .map(|(k, &v)| {
                let vec = spec.vector(k);
                CMatrix::from_fn(dim, dim, |i, j| vec[i * dim + j] * (scale * v).sqrt())
            })
            .collect();
        Self::new(kraus)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * rho * k.adjoint())
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        DensityMatrix::from_hermitian_part(self.apply(rho.matrix()))
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Self) -> Result<Self> {
        if first.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: first.dim,
            });
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| first.kraus.iter().map(move |b| a * b))
            .collect();
        Self::new(kraus)
    }

    /// Largest entrywise deviation from `ρ ↦ p ρ + (1-p) Tr(ρ) 1/D` over the
    /// matrix units `|i⟩⟨j|`.
    pub fn depolarizing_deviation(&self, p: f64) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(i, j)] = c64(1.0, 0.0);
                let mut expected = unit.scale(p);
                if i == j {
                    expected += identity(d).scale((1.0 - p) / d as f64);
                }
                worst = worst.max(crate::matrix::max_abs(&(self.apply(&unit) - expected)));
            }
        }
        worst
    }
}

/// Shift and clock operators with `Z X = ω X Z`, `ω = e^{2πi/D}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylBasis {
    pub dim: usize,
    pub x: CMatrix,
    pub z: CMatrix,
}

impl WeylBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let x = CMatrix::from_fn(dim, dim, |r, c| {
            if r == (c + 1) % dim {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        let z = CMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                root_of_unity(dim, r)
            } else {
                c64(0.0, 0.0)
            }
        });
        Ok(Self { dim, x, z })
    }

    /// `X^a Z^b`.
    pub fn weyl(&self, a: usize, b: usize) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |r, c| {
            if r == (c + a) % d {
                root_of_unity(d, c * b)
            } else {
                c64(0.0, 0.0)
            }
        })
    }

    /// All `D²` operators `X^a Z^b`, `a` major.
    pub fn all(&self) -> Vec<CMatrix> {
        let d = self.dim;
        (0..d * d).map(|k| self.weyl(k / d, k % d)).collect()
    }
}

pub(crate) fn root_of_unity(dim: usize, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % dim) as f64 / dim as f64)
}

/// Output of [`apply_depolarizing`].
#[derive(Debug, Clone, PartialEq)]
pub struct Depolarized {
    pub state: DensityMatrix,
    /// `p` lies in the completely positive range `[-1/(D²-1), 1]`.
    pub physically_realizable: bool,
}

pub fn apply_depolarizing(rho: &DensityMatrix, p: f64) -> Result<Depolarized> {
    let d = rho.dim();
    let min = p_min_positive(d);
    if !(min - 1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::PolarizationOutOfRange { p, min, max: 1.0 });
    }
    let out = rho.matrix().scale(p) + identity(d).scale((1.0 - p) / d as f64);
    Ok(Depolarized {
        state: DensityMatrix::from_hermitian_part(out)?,
        physically_realizable: p >= p_min_physical(d) - 1e-12,
    })
}

/// Kraus form of the depolarizing map over the Weyl operators: weight
/// `p + (1-p)/D²` on the identity and `(1-p)/D²` on every other `X^a Z^b`.
pub fn depolarizing_channel(dim: usize, p: f64) -> Result<KrausChannel> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let min = p_min_physical(dim);
    if !(min - 1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::PolarizationOutOfRange { p, min, max: 1.0 });
    }
    let d2 = (dim * dim) as f64;
    let weyl = WeylBasis::new(dim)?;
    let terms: Vec<(f64, CMatrix)> = weyl
        .all()
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            let weight = if k == 0 { p + (1.0 - p) / d2 } else { (1.0 - p) / d2 };
            (weight.max(0.0), w)
        })
        .collect();
    KrausChannel::mixed_unitary(&terms)
}

/// `(E ⊗ 1)(|Φ⁺⟩⟨Φ⁺|)`.
pub fn jamiolkowski_state(ch: &KrausChannel) -> DensityMatrix {
    let d = ch.dim;
    let phi = crate::bipartite::maximally_entangled(d);
    let one = identity(d);
    let mut out = CMatrix::zeros(d * d, d * d);
    for k in &ch.kraus {
        let v = tensor(k, &one) * &phi;
        out += &v * v.adjoint();
    }
    DensityMatrix::from_hermitian_part(out).expect("trace-preserving channel has unit-trace Choi state")
}

/// `⟨Φ⁺|E|Φ⁺⟩ = Σ_m |Tr K_m|² / D²`.
pub fn jamiolkowski_fidelity(ch: &KrausChannel) -> f64 {
    let d2 = (ch.dim * ch.dim) as f64;
    let f: f64 = ch.kraus.iter().map(|k| k.trace().norm_sqr()).sum::<f64>() / d2;
    f.clamp(0.0, 1.0)
}

/// `(D² f - 1)/(D² - 1)`.
pub fn twirled_polarization(dim: usize, f: f64) -> f64 {
    let d2 = (dim * dim) as f64;
    (d2 * f - 1.0) / (d2 - 1.0)
}

/// `V = exp(iα(X + X†))`.
pub fn weyl_cosine_unitary(dim: usize, alpha: f64) -> Result<CMatrix> {
    let w = WeylBasis::new(dim)?;
    let h = &w.x + w.x.adjoint();
    let spec = eig_hermitian(&h)?;
    let phases = CMatrix::from_diagonal(&crate::matrix::CVector::from_iterator(
        dim,
        spec.values.iter().map(|&l| Complex64::from_polar(1.0, alpha * l)),
    ));
    Ok(&spec.vectors * phases * spec.vectors.adjoint())
}

/// Identity with probability `f`, `X` with probability `1 - f`.
pub fn x_flip_channel(dim: usize, f: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::FOutOfRange(f));
    }
    let w = WeylBasis::new(dim)?;
    KrausChannel::mixed_unitary(&[(f, identity(dim)), (1.0 - f, w.x)])
}

/// `(E_pA ⊗ E_pB)(ρ)` in its four-term form.
pub fn local_depolarize(rho: &DensityMatrix, da: usize, db: usize, pa: f64, pb: f64) -> Result<DensityMatrix> {
    for (p, d) in [(pa, da), (pb, db)] {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let min = p_min_physical(d);
        if !(min - 1e-12..=1.0 + 1e-12).contains(&p) {
            return Err(Error::PolarizationOutOfRange { p, min, max: 1.0 });
        }
    }
    let m = rho.matrix();
    let rho_a = partial_trace(m, da, db, Subsystem::A)?;
    let rho_b = partial_trace(m, da, db, Subsystem::B)?;
    let (ia, ib) = (identity(da), identity(db));
    let out = m.scale(pa * pb)
        + tensor(&rho_a, &ib).scale(pa * (1.0 - pb) / db as f64)
        + tensor(&ia, &rho_b).scale((1.0 - pa) * pb / da as f64)
        + identity(da * db).scale((1.0 - pa) * (1.0 - pb) / (da * db) as f64);
    DensityMatrix::from_hermitian_part(out)
}
