use std::collections::{HashSet, VecDeque};

use num_complex::Complex64;

use super::{jamiolkowski_fidelity, jamiolkowski_state, root_of_unity, twirled_polarization, KrausChannel, WeylBasis};
use crate::error::{Error, Result};
use crate::matrix::{c64, tensor, CMatrix};
use crate::random::{haar_unitary, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwirlMode {
    /// Average over the whole Clifford group.
    ExactClifford,
    /// Average over the Clifford group without the identity.
    ExactCliffordNonIdentity,
    /// Monte-Carlo average over Haar unitaries.
    HaarSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwirlResult {
    pub channel: KrausChannel,
    pub p_hat: f64,
    /// Monte-Carlo standard error of `p_hat`; `None` for exact modes.
    pub std_error: Option<f64>,
    /// Largest deviation of `channel` from the depolarizing map with `p_hat`.
    pub depolarizing_deviation: f64,
    pub group_size: Option<usize>,
}

fn projective_key(m: &CMatrix) -> Vec<i64> {
    let pivot = m
        .iter()
        .find(|z| z.norm() > 1e-6)
        .copied()
        .unwrap_or(c64(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    m.iter()
        .flat_map(|z| {
            let w = z * phase;
            [(w.re * 1e6).round() as i64, (w.im * 1e6).round() as i64]
        })
        .collect()
}

fn generators(dim: usize) -> Result<Vec<CMatrix>> {
    let weyl = WeylBasis::new(dim)?;
    let d = dim as f64;
    let fourier = CMatrix::from_fn(dim, dim, |j, k| root_of_unity(dim, j * k) / d.sqrt());
    let phase_gate = match dim {
        2 => CMatrix::from_diagonal(&crate::matrix::CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 1.0)])),
        3 => CMatrix::from_diagonal(&crate::matrix::CVector::from_vec(vec![
            c64(1.0, 0.0),
            c64(1.0, 0.0),
            root_of_unity(3, 1),
        ])),
        _ => return Err(Error::UnsupportedDimension(dim)),
    };
    Ok(vec![fourier, phase_gate, weyl.x, weyl.z])
}

/// The Clifford group modulo global phase, for D = 2 (24 elements) and
/// D = 3 (216 elements), starting with the identity.
pub fn clifford_group(dim: usize) -> Result<Vec<CMatrix>> {
    let gens = generators(dim)?;
    let start = crate::matrix::identity(dim);
    let mut seen: HashSet<Vec<i64>> = HashSet::from([projective_key(&start)]);
    let mut queue = VecDeque::from([start.clone()]);
    let mut out = vec![start];
    while let Some(g) = queue.pop_front() {
        for h in &gens {
            let next = h * &g;
            if seen.insert(projective_key(&next)) {
                queue.push_back(next.clone());
                out.push(next);
            }
        }
    }
    Ok(out)
}

/// Whether `g` maps every Weyl operator to a Weyl operator up to phase.
pub fn is_clifford(g: &CMatrix, weyl: &WeylBasis) -> bool {
    let d = weyl.dim as f64;
    let all = weyl.all();
    all.iter().all(|w| {
        let image = g * w * g.adjoint();
        all.iter()
            .any(|v| ((v.adjoint() * &image).trace().norm() - d).abs() < 1e-9)
    })
}

/// Jamiołkowski state of `ρ ↦ U† E(U ρ U†) U` from that of `E`.
fn conjugated_choi(choi: &CMatrix, u: &CMatrix) -> CMatrix {
    let m = tensor(&u.adjoint(), &u.transpose());
    &m * choi * m.adjoint()
}

/// Twirls `ch` into a depolarizing channel.
///
/// Exact modes average `U† E(U ρ U†) U` over the Clifford group (D = 2, 3);
/// `p_hat = (D² f - 1)/(D² - 1)`. Sampling mode averages over `samples`
/// Haar unitaries (D <= 6) and estimates `p_hat` from the fidelity of a probe
/// state, which carries the Monte-Carlo error.
pub fn twirl(ch: &KrausChannel, mode: TwirlMode, samples: usize, seed: u64) -> Result<TwirlResult> {
    let dim = ch.dim();
    let choi = jamiolkowski_state(ch).into_matrix();
    let n2 = dim * dim;
    match mode {
        TwirlMode::ExactClifford | TwirlMode::ExactCliffordNonIdentity => {
            if !(2..=3).contains(&dim) {
                return Err(Error::UnsupportedDimension(dim));
            }
            let group = clifford_group(dim)?;
            let skip = usize::from(mode == TwirlMode::ExactCliffordNonIdentity);
            let used = &group[skip..];
            let mut acc = CMatrix::zeros(n2, n2);
            for g in used {
                acc += conjugated_choi(&choi, g);
            }
            acc /= c64(used.len() as f64, 0.0);
            let channel = KrausChannel::from_jamiolkowski(&acc, dim)?;
            let p_hat = twirled_polarization(dim, jamiolkowski_fidelity(ch));
            Ok(TwirlResult {
                depolarizing_deviation: channel.depolarizing_deviation(p_hat),
                channel,
                p_hat,
                std_error: None,
                group_size: Some(used.len()),
            })
        }
        TwirlMode::HaarSample => {
            if !(2..=6).contains(&dim) {
                return Err(Error::UnsupportedDimension(dim));
            }
            if samples < 2 {
                return Err(Error::InvalidArgument(format!("samples must be >= 2, got {samples}")));
            }
            let mut rng = seeded_rng(seed);
            let mut acc = CMatrix::zeros(n2, n2);
            let mut probe = Vec::with_capacity(samples);
            for _ in 0..samples {
                let u = haar_unitary(dim, &mut rng);
                acc += conjugated_choi(&choi, &u);
                // ⟨0|U† E(U|0⟩⟨0|U†) U|0⟩
                let col = u.column(0).into_owned();
                let out = ch.apply(&(&col * col.adjoint()));
                let x: Complex64 = col.dotc(&(out * &col));
                probe.push(x.re);
            }
            acc /= c64(samples as f64, 0.0);
            let channel = KrausChannel::from_jamiolkowski(&acc, dim)?;
            let n = samples as f64;
            let mean = probe.iter().sum::<f64>() / n;
            let var = probe.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let d = dim as f64;
            let p_hat = (d * mean - 1.0) / (d - 1.0);
            Ok(TwirlResult {
                depolarizing_deviation: channel.depolarizing_deviation(p_hat),
                channel,
                p_hat,
                std_error: Some(d / (d - 1.0) * (var / n).sqrt()),
                group_size: None,
            })
        }
    }
}
