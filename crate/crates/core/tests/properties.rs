use proptest::prelude::*;

use dpstate::bipartite::{negativity, pt_spectrum_closed, schmidt_pure};
use dpstate::bloch::{from_coherence, generate_basis, star, to_coherence};
use dpstate::channels::{apply_depolarizing, depolarizing_channel};
use dpstate::matrix::{eig_hermitian, identity, partial_transpose, projector, DensityMatrix, Subsystem};
use dpstate::metrics::{
    distance_report, fidelity_closed, make_dps, p_min_positive, trace_distance_closed, DpsState,
};
use dpstate::moments::{moment_exact, moment_permutation};
use dpstate::random::{haar_pure, random_density, seeded_rng};

fn dps(dim: usize, p: f64, seed: u64) -> DpsState {
    make_dps(haar_pure(dim, &mut seeded_rng(seed)), p).unwrap()
}

/// (dim, p) with p in the positive range.
fn dim_and_p() -> impl Strategy<Value = (usize, f64)> {
    (2usize..=7).prop_flat_map(|d| (Just(d), p_min_positive(d)..=1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_is_symmetric_and_bounded((dim, p) in dim_and_p(), q in 0.0..=1.0f64, s1: u64, s2: u64) {
        let q = p_min_positive(dim) + q * (1.0 - p_min_positive(dim));
        let (a, b) = (dps(dim, p, s1), dps(dim, q, s2));
        let ab = fidelity_closed(&a, &b).unwrap();
        let ba = fidelity_closed(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!((trace_distance_closed(&a, &b).unwrap() - trace_distance_closed(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn distance_chain_holds((dim, p) in dim_and_p(), q in 0.0..=1.0f64, s1: u64, s2: u64) {
        let q = p_min_positive(dim) + q * (1.0 - p_min_positive(dim));
        let r = distance_report(&dps(dim, p, s1), &dps(dim, q, s2)).unwrap();
        let (lower, upper) = r.chain_bounds();
        prop_assert!(lower <= r.trace_distance + 1e-9 && r.trace_distance <= upper + 1e-9);
    }

    #[test]
    fn coherence_round_trip(dim in 2usize..=6, rank in 1usize..=6, seed: u64) {
        let basis = generate_basis(dim).unwrap();
        let rho = DensityMatrix::new(random_density(dim, rank.min(dim), &mut seeded_rng(seed))).unwrap();
        let back = from_coherence(&to_coherence(&rho, &basis).unwrap(), &basis).unwrap();
        prop_assert!(dpstate::matrix::max_abs(&(back.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn star_condition_for_dps((dim, p) in (3usize..=6).prop_flat_map(|d| (Just(d), p_min_positive(d)..=1.0)), seed: u64) {
        let basis = generate_basis(dim).unwrap();
        let n = to_coherence(&dps(dim, p, seed).to_density(), &basis).unwrap();
        let nn = star(&n, &n, &basis).unwrap();
        prop_assert!(nn.distance(&n.scaled(p)) < 1e-10);
    }

    #[test]
    fn pt_closed_matches_brute_force(
        dims in prop::sample::select(vec![(2usize, 2usize), (2, 3), (3, 3), (2, 4), (3, 4)]),
        p in 0.0..=1.0f64,
        seed: u64,
    ) {
        let (da, db) = dims;
        let d = da * db;
        let p = p_min_positive(d) + p * (1.0 - p_min_positive(d));
        let psi = haar_pure(d, &mut seeded_rng(seed));
        let rho = identity(d).scale((1.0 - p) / d as f64) + projector(&psi).scale(p);
        let b = schmidt_pure(&psi, da, db).unwrap().b;
        let closed = pt_spectrum_closed(p, &b, da, db).unwrap();
        let brute = eig_hermitian(&partial_transpose(&rho, da, db, Subsystem::B).unwrap()).unwrap().values;
        for (x, y) in closed.iter().zip(&brute) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let r = negativity(p, &b, da, db).unwrap();
        prop_assert!(r.negative_count <= r.bound);
        prop_assert!(r.negativity >= 0.0);
    }

    #[test]
    fn permutation_moments_match_spectrum(dim in 2usize..=4, m in 2usize..=4, seed: u64) {
        let rho = DensityMatrix::new(random_density(dim, dim, &mut seeded_rng(seed))).unwrap();
        let a = moment_permutation(&rho, m).unwrap().value;
        let b = moment_exact(&rho, m).value;
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn depolarizing_composes(dim in 2usize..=4, p in 0.0..=1.0f64, q in 0.0..=1.0f64, seed: u64) {
        let rho = DensityMatrix::new(random_density(dim, dim, &mut seeded_rng(seed))).unwrap();
        let twice = apply_depolarizing(&apply_depolarizing(&rho, p).unwrap().state, q).unwrap().state;
        let once = apply_depolarizing(&rho, p * q).unwrap().state;
        prop_assert!(dpstate::matrix::max_abs(&(twice.matrix() - once.matrix())) < 1e-12);
        let ch = depolarizing_channel(dim, p).unwrap();
        let via_kraus = ch.apply(rho.matrix());
        prop_assert!(dpstate::matrix::max_abs(&(via_kraus - apply_depolarizing(&rho, p).unwrap().state.matrix())) < 1e-12);
    }
}
