//! Randomized invariants of states, probes, measures and the roof search.

use pairent::convexroof::{self, RoofObjective, RoofOptions};
use pairent::locc;
use pairent::measure::{self, pure_m, pure_profile};
use pairent::numerics::ComplexMatrix;
use pairent::probes::{self, ProbeKind};
use pairent::qstate::{self, DensityMatrix, SiteSubset, StateVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

/// Entanglement of formation of a two-qubit state from its concurrence.
fn eof(rho: &DensityMatrix) -> f64 {
    let c = probes::concurrence(rho).unwrap();
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

fn subset(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|s| mask >> s & 1 == 1).collect()
}

fn random_state(seed: u64, n: usize, d: usize, rank: usize) -> DensityMatrix {
    if rank == 1 {
        qstate::random_pure(n, d, seed).unwrap().density()
    } else {
        qstate::random_mixed(n, d, rank, seed).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_composes(seed in any::<u64>(), n in 2usize..=6, outer in 1usize..64, inner in 1usize..64) {
        let d = 2;
        let rho = random_state(seed, n, d, if n <= 4 { 3 } else { 1 });
        let s = subset(outer % (1 << n), n);
        prop_assume!(!s.is_empty());
        let t: Vec<usize> = subset(inner, s.len()).into_iter().map(|k| s[k]).collect();
        prop_assume!(!t.is_empty());
        let two_step = {
            let mid = rho.partial_trace(&SiteSubset::new(s.iter().copied(), n).unwrap()).unwrap();
            let positions = t.iter().map(|x| s.iter().position(|y| y == x).unwrap());
            mid.partial_trace(&SiteSubset::new(positions, s.len()).unwrap()).unwrap()
        };
        let direct = rho.partial_trace(&SiteSubset::new(t.iter().copied(), n).unwrap()).unwrap();
        prop_assert!(two_step.matrix().max_abs_diff(direct.matrix()) <= 1e-10);
    }

    #[test]
    fn partial_trace_of_tensor_product(seed in any::<u64>(), na in 1usize..=2, nb in 1usize..=2, d in 2usize..=3) {
        let rho = qstate::random_mixed(na, d, 2, seed).unwrap();
        let sigma = qstate::random_mixed(nb, d, 2, seed ^ 1).unwrap();
        let joint = rho.tensor(&sigma).unwrap();
        let back = joint.partial_trace(&SiteSubset::new(0..na, na + nb).unwrap()).unwrap();
        prop_assert!(back.matrix().max_abs_diff(rho.matrix()) <= 1e-10);
    }

    #[test]
    fn schmidt_spectra_coincide(seed in any::<u64>(), n in 2usize..=6, mask in 1usize..64) {
        let psi = qstate::random_pure(n, 2, seed).unwrap();
        let a = subset(mask % ((1 << n) - 1) + 1, n);
        prop_assume!(a.len() < n);
        let b: Vec<usize> = (0..n).filter(|s| !a.contains(s)).collect();
        let spec = |sites: &[usize]| {
            let r = psi.reduced(&SiteSubset::new(sites.iter().copied(), n).unwrap()).unwrap();
            let mut v = pairent::numerics::hermitian_eigenvalues(r.matrix()).unwrap();
            v.retain(|x| *x > 1e-9);
            v.sort_by(|x, y| y.total_cmp(x));
            v
        };
        let (sa, sb) = (spec(&a), spec(&b));
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        // Lengths may differ only by eigenvalues hugging the cutoff.
        let (long, short) = if sa.len() > sb.len() { (&sa, &sb) } else { (&sb, &sa) };
        prop_assert!(long[short.len()..].iter().all(|x| *x < 1e-8));
    }

    #[test]
    fn lu_invariance(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = qstate::random_pure_with(&mut rng, n, 2).unwrap();
        let mut moved = psi.clone();
        for site in 0..n {
            moved = moved.apply_local(site, &qstate::random_unitary(&mut rng, 2)).unwrap();
        }
        for kind in ProbeKind::ALL {
            prop_assert!((pure_m(&psi, kind).unwrap() - pure_m(&moved, kind).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn quasi_concurrence_dominates_concurrence(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random_state(seed, 2, 2, rank);
        prop_assert!(probes::quasi_concurrence(&rho).unwrap() >= probes::concurrence(&rho).unwrap() - 1e-9);
    }

    #[test]
    fn entropy_strong_subadditivity(seed in any::<u64>(), d in 2usize..=3, rank in 1usize..=6) {
        let rho = random_state(seed, 3, d, rank);
        let s = |sites: &[usize]| {
            let r = rho.partial_trace(&SiteSubset::new(sites.iter().copied(), 3).unwrap()).unwrap();
            probes::von_neumann_entropy(&r).unwrap()
        };
        let xyz = probes::von_neumann_entropy(&rho).unwrap();
        prop_assert!(xyz <= s(&[0, 1]) + s(&[1, 2]) - s(&[1]) + 1e-8);
    }

    #[test]
    fn mutual_information_bounds(seed in any::<u64>(), d in 2usize..=3, rank in 1usize..=9) {
        let rho = random_state(seed, 2, d, rank.min(d * d));
        let fr = probes::mutual_information_fr(&rho).unwrap();
        prop_assert!(fr >= 0.0);
        prop_assert!(fr <= (d as f64).log2() + 1e-9);
    }

    #[test]
    fn permutation_covariance(seed in any::<u64>(), n in 2usize..=5, shuffle in any::<u64>()) {
        let psi = qstate::random_pure(n, 2, seed).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let permuted = psi.permute_sites(&perm).unwrap();
        for kind in ProbeKind::ALL {
            let a = measure::measure_m(&psi, kind).unwrap();
            let b = measure::measure_m(&permuted, kind).unwrap();
            for e in &b.profile.entries {
                let original = a.profile.get(perm[e.i], perm[e.j]).unwrap();
                prop_assert!((e.value - original).abs() <= 1e-12);
            }
            prop_assert!((a.m_value - b.m_value).abs() <= 1e-12);
            prop_assert!((a.mt_value - b.mt_value).abs() <= 1e-12);
            prop_assert_eq!(a.classification, b.classification);
        }
    }

    #[test]
    fn measures_stay_normalized(seed in any::<u64>(), n in 2usize..=5) {
        let psi = qstate::random_pure(n, 2, seed).unwrap();
        let m_qc = pure_m(&psi, ProbeKind::QuasiConcurrence).unwrap();
        let m_fr = pure_m(&psi, ProbeKind::MutualInformation).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&m_qc));
        prop_assert!((0.0..=1.0 + 1e-9).contains(&m_fr));
    }

    #[test]
    fn product_states_have_zero_profiles(seed in any::<u64>(), n in 2usize..=5, d in 2usize..=3) {
        let psi = qstate::random_product(n, d, seed).unwrap();
        let profile = pure_profile(&psi, ProbeKind::MutualInformation).unwrap();
        prop_assert!(profile.values().all(|v| v.abs() <= 1e-9));
        prop_assert_eq!(measure::classify(&profile, probes::ZERO_TOL), measure::Classification::Separable);
    }

    #[test]
    fn instrument_branches_conserve_probability(seed in any::<u64>(), n in 1usize..=4, d in 2usize..=3, k in 1usize..=4) {
        let psi = qstate::random_pure(n, d, seed).unwrap();
        let inst = locc::random_instrument((seed % n as u64) as usize, d, k, seed ^ 7).unwrap();
        prop_assert!(locc::completeness_defect(inst.kraus()) <= 1e-10);
        let branches = locc::apply_instrument(&psi, &inst).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        // The branch states average back to the channel output.
        let mut avg = ComplexMatrix::zeros(psi.dim(), psi.dim());
        for b in &branches {
            avg = &avg + &b.state.density().matrix().scale(pairent::numerics::C64::new(b.probability, 0.0));
        }
        let mut channel = ComplexMatrix::zeros(psi.dim(), psi.dim());
        for kraus in inst.kraus() {
            let phi = psi.apply_local_unnormalized(inst.site(), kraus).unwrap();
            channel = &channel + &ComplexMatrix::outer(&phi, &phi);
        }
        prop_assert!(avg.max_abs_diff(&channel) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn roof_ensembles_reconstruct_and_bound(seed in any::<u64>(), rank in 2usize..=4) {
        let rho = qstate::random_mixed(2, 2, rank, seed).unwrap();
        let options = RoofOptions { restarts: 6, seed, ..Default::default() };
        for objective in [RoofObjective::Concurrence, RoofObjective::Measure(ProbeKind::MutualInformation)] {
            let r = convexroof::convex_roof(&rho, objective, &options).unwrap();
            prop_assert!(r.best.residual(&rho) <= 1e-8);
            prop_assert!(r.best_value <= r.eigen_value + 1e-12);
            prop_assert!(r.best.len() >= rank && r.best.len() <= rank + 2);
            prop_assert!(r.trace.windows(2).all(|w| w[1].running_best <= w[0].running_best));
        }
    }

    #[test]
    fn fr_roof_upper_bounds_eof(seed in any::<u64>(), rank in 2usize..=4) {
        let rho = qstate::random_mixed(2, 2, rank, seed).unwrap();
        let options = RoofOptions { restarts: 8, seed, ..Default::default() };
        let r = convexroof::convex_roof(&rho, RoofObjective::Measure(ProbeKind::MutualInformation), &options).unwrap();
        prop_assert!(r.best_value >= eof(&rho) - 1e-3);
    }

    #[test]
    fn monotone_in_restarts(seed in any::<u64>()) {
        let rho = qstate::random_mixed(2, 2, 3, seed).unwrap();
        let few = convexroof::convex_roof(&rho, RoofObjective::Concurrence, &RoofOptions { restarts: 3, seed, ..Default::default() }).unwrap();
        let more = convexroof::convex_roof(&rho, RoofObjective::Concurrence, &RoofOptions { restarts: 9, seed, ..Default::default() }).unwrap();
        prop_assert!(more.best_value <= few.best_value);
    }
}

#[test]
fn roof_of_pure_state_is_exact_without_search() {
    for kind in ProbeKind::ALL {
        let psi = qstate::random_pure(3, 2, 77).unwrap();
        let r = convexroof::convex_roof(&psi.density(), RoofObjective::Measure(kind), &RoofOptions::default()).unwrap();
        assert_eq!(r.restarts_used, 0);
        assert!((r.best_value - pure_m(&psi, kind).unwrap()).abs() <= 1e-12);
    }
}

/// Halved mutual information against entanglement of formation on random
/// two-qubit mixed states.
#[test]
#[ignore = "refuted: about 3% of random mixed two-qubit states have Fr below EoF (Werner p = 0.9: 0.748 < 0.789)"]
fn fr_dominates_eof_on_random_states() {
    let mut worst = (f64::INFINITY, 0u64);
    for seed in 0..2000u64 {
        let rank = 1 + (seed % 4) as usize;
        let rho = random_state(7_000 + seed, 2, 2, rank);
        let margin = probes::mutual_information_fr(&rho).unwrap() - eof(&rho);
        if margin < worst.0 {
            worst = (margin, 7_000 + seed);
        }
    }
    assert!(worst.0 >= -1e-8, "Fr − EoF = {:.4} at seed {}", worst.0, worst.1);
}

/// Counterexample to Fr ≥ EoF: a Werner state.
#[test]
fn werner_state_fr_against_eof() {
    let bell = qstate::epr().density();
    let p = 0.9;
    let m = &bell.matrix().scale(pairent::numerics::C64::new(p, 0.0))
        + &ComplexMatrix::identity(4).scale(pairent::numerics::C64::new((1.0 - p) / 4.0, 0.0));
    let rho = DensityMatrix::new(2, 2, m).unwrap();
    let fr = probes::mutual_information_fr(&rho).unwrap();
    // Values from the closed forms: S(ρ) with spectrum {0.925, 0.025 ×3},
    // C = (3p − 1)/2.
    assert!((fr - 0.748408134159708).abs() < 1e-9, "Fr = {fr}");
    assert!((eof(&rho) - 0.789354960988784).abs() < 1e-9);
    assert!(fr < eof(&rho));
}

#[test]
fn random_pure_states_are_normalized() {
    for seed in 0..20 {
        let psi: StateVector = qstate::random_pure(3, 3, seed).unwrap();
        let norm: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
