//! Local instruments and Monte Carlo tests of LOCC monotonicity.
//!
//! A trial starts from a pure state and applies rounds of random two-outcome
//! instruments on single sites. Each branch draws its next site and
//! instrument from a seed derived from its own outcome history, which plays
//! the role of classical communication. After every round the
//! branch-averaged `M` is compared with its previous value.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure;
use crate::numerics::{self, ComplexMatrix, C64};
use crate::probes::ProbeKind;
use crate::qstate::{self, StateVector};

/// Completeness tolerance for Σ K†K = I.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Branches less likely than this are dropped.
pub const BRANCH_FLOOR: f64 = 1e-14;
/// Margins below this count as violations.
pub const VIOLATION_THRESHOLD: f64 = -1e-8;

/// Kraus operators acting on one site.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalInstrument {
    site: usize,
    kraus: Vec<ComplexMatrix>,
}

impl LocalInstrument {
    pub fn new(site: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let d = match kraus.first() {
            Some(k) => k.rows(),
            None => return Err(Error::usage("instrument needs at least one Kraus operator")),
        };
        if kraus.iter().any(|k| k.rows() != d || k.cols() != d) {
            return Err(Error::Dimension("Kraus operators must all be d×d".into()));
        }
        let defect = completeness_defect(&kraus);
        if defect > COMPLETENESS_TOL {
            return Err(Error::usage(format!(
                "Kraus operators are not complete (defect {defect:.2e})"
            )));
        }
        Ok(Self { site, kraus })
    }

    /// Computational-basis measurement.
    pub fn projective(site: usize, d: usize) -> Self {
        let kraus = (0..d)
            .map(|k| {
                let mut p = ComplexMatrix::zeros(d, d);
                p[(k, k)] = C64::new(1.0, 0.0);
                p
            })
            .collect();
        Self { site, kraus }
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn local_dim(&self) -> usize {
        self.kraus[0].rows()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }
}

/// Max-norm of Σ K†K − I.
pub fn completeness_defect(kraus: &[ComplexMatrix]) -> f64 {
    let d = kraus[0].rows();
    let mut sum = ComplexMatrix::zeros(d, d);
    for k in kraus {
        sum = &sum + &(&k.adjoint() * k);
    }
    sum.max_abs_diff(&ComplexMatrix::identity(d))
}

/// `K_i = A_i S^{-1/2}` with Ginibre `A_i` and `S = Σ A_i†A_i`.
pub fn random_instrument(site: usize, d: usize, outcomes: usize, seed: u64) -> Result<LocalInstrument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instrument_with(&mut rng, site, d, outcomes)
}

pub fn random_instrument_with<R: Rng + ?Sized>(
    rng: &mut R,
    site: usize,
    d: usize,
    outcomes: usize,
) -> Result<LocalInstrument> {
    if outcomes == 0 {
        return Err(Error::usage("instrument needs at least one outcome"));
    }
    let ginibre: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| ComplexMatrix::from_vec(d, d, (0..d * d).map(|_| qstate::gaussian(rng)).collect()))
        .collect::<Result<_>>()?;
    let mut s = ComplexMatrix::zeros(d, d);
    for a in &ginibre {
        s = &s + &(&a.adjoint() * a);
    }
    let eig = numerics::hermitian_eigensystem(&s)?;
    let inv_sqrt = eig.map_spectrum(|x| 1.0 / (x.max(0.0) + 1e-14).sqrt());
    let kraus = ginibre.iter().map(|a| a * &inv_sqrt).collect();
    LocalInstrument::new(site, kraus)
}

/// One measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LoccBranch {
    pub outcome: usize,
    pub probability: f64,
    pub state: StateVector,
}

pub fn apply_instrument(psi: &StateVector, inst: &LocalInstrument) -> Result<Vec<LoccBranch>> {
    if inst.site() >= psi.num_sites() {
        return Err(Error::usage(format!(
            "instrument on site {} of a {}-site register",
            inst.site(),
            psi.num_sites()
        )));
    }
    if inst.local_dim() != psi.local_dim() {
        return Err(Error::Dimension(format!(
            "instrument of dimension {} on sites of dimension {}",
            inst.local_dim(),
            psi.local_dim()
        )));
    }
    let mut branches = Vec::new();
    for (outcome, k) in inst.kraus().iter().enumerate() {
        let amps = psi.apply_local_unnormalized(inst.site(), k)?;
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if p < BRANCH_FLOOR {
            continue;
        }
        branches.push(LoccBranch {
            outcome,
            probability: p,
            state: StateVector::normalized(psi.num_sites(), psi.local_dim(), amps)?,
        });
    }
    Ok(branches)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub initial_m: f64,
    /// Branch-averaged `M` after each round.
    pub round_averages: Vec<f64>,
    /// `M_before − M_after` per round.
    pub margins: Vec<f64>,
    pub worst_margin: Option<f64>,
}

impl TrialReport {
    pub fn violated(&self) -> bool {
        self.worst_margin.is_some_and(|m| m < VIOLATION_THRESHOLD)
    }
}

struct Branch {
    probability: f64,
    state: StateVector,
    seed: u64,
}

/// Runs `rounds` rounds of random two-outcome local instruments on `psi`.
pub fn locc_monotonicity_trial(psi: &StateVector, kind: ProbeKind, rounds: usize, seed: u64) -> Result<TrialReport> {
    let n = psi.num_sites();
    let d = psi.local_dim();
    let initial_m = measure::pure_m(psi, kind)?;
    let mut branches = vec![Branch {
        probability: 1.0,
        state: psi.clone(),
        seed,
    }];
    let mut previous = initial_m;
    let mut round_averages = Vec::with_capacity(rounds);
    let mut margins = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for branch in &branches {
            let mut rng = ChaCha8Rng::seed_from_u64(branch.seed);
            let site = rng.random_range(0..n);
            let inst = random_instrument_with(&mut rng, site, d, 2)?;
            for child in apply_instrument(&branch.state, &inst)? {
                next.push(Branch {
                    probability: branch.probability * child.probability,
                    state: child.state,
                    seed: rng.next_u64(),
                });
            }
        }
        branches = next;
        let mut average = 0.0;
        for b in &branches {
            average += b.probability * measure::pure_m(&b.state, kind)?;
        }
        round_averages.push(average);
        margins.push(previous - average);
        previous = average;
    }
    let worst_margin = margins.iter().copied().reduce(f64::min);
    Ok(TrialReport {
        initial_m,
        round_averages,
        margins,
        worst_margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub trials: usize,
    pub site_counts: Vec<usize>,
    pub kinds: Vec<ProbeKind>,
    pub rounds: usize,
    pub seed: u64,
}

/// Enough to replay a violating trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub seed: u64,
    pub num_sites: usize,
    pub kind: ProbeKind,
    pub margin: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub trials: usize,
    pub violations: Vec<Violation>,
    pub worst_margin: Option<f64>,
}

/// Trial `i` uses `site_counts[i % len]` sites and probe
/// `kinds[(i / len) % kinds.len()]` on a Haar-random qubit state.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport> {
    if config.site_counts.is_empty() || config.kinds.is_empty() {
        return Err(Error::usage("campaign needs at least one site count and one probe"));
    }
    let outcomes: Vec<(Option<f64>, Option<Violation>)> = (0..config.trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let n = config.site_counts[i % config.site_counts.len()];
            let kind = config.kinds[(i / config.site_counts.len()) % config.kinds.len()];
            let trial_seed = trial_seed(config.seed, i);
            let psi = qstate::random_pure(n, 2, trial_seed)?;
            let report = locc_monotonicity_trial(&psi, kind, config.rounds, trial_seed)?;
            let violation = report.violated().then(|| Violation {
                trial: i,
                seed: trial_seed,
                num_sites: n,
                kind,
                margin: report.worst_margin.unwrap_or(0.0),
                amplitudes: psi.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
            });
            Ok((report.worst_margin, violation))
        })
        .collect::<Result<_>>()?;
    let worst_margin = outcomes.iter().filter_map(|(m, _)| *m).reduce(f64::min);
    Ok(CampaignReport {
        trials: config.trials,
        violations: outcomes.into_iter().filter_map(|(_, v)| v).collect(),
        worst_margin,
    })
}

/// Per-trial seed: stream `i` of a generator keyed by the campaign seed.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{epr, ghz};

    #[test]
    fn single_outcome_instrument_is_unitary() {
        let inst = random_instrument(0, 2, 1, 3).unwrap();
        let k = &inst.kraus()[0];
        assert!((&k.adjoint() * k).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-10);
    }

    #[test]
    fn random_instrument_is_complete() {
        for seed in 0..20 {
            let inst = random_instrument(1, 2, 2, seed).unwrap();
            assert!(completeness_defect(inst.kraus()) <= 1e-10);
            let q = random_instrument(0, 3, 3, seed).unwrap();
            assert!(completeness_defect(q.kraus()) <= 1e-10);
        }
        assert!(random_instrument(0, 2, 0, 1).is_err());
    }

    #[test]
    fn projective_instrument_validates() {
        let p = LocalInstrument::projective(0, 2);
        assert!(LocalInstrument::new(0, p.kraus().to_vec()).is_ok());
        let half = vec![ComplexMatrix::from_diag(&[1.0, 0.0])];
        assert!(LocalInstrument::new(0, half).is_err());
    }

    #[test]
    fn identity_instrument_keeps_state() {
        let psi = qstate::random_pure(3, 2, 1).unwrap();
        let inst = LocalInstrument::new(1, vec![ComplexMatrix::identity(2)]).unwrap();
        let b = apply_instrument(&psi, &inst).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].probability - 1.0).abs() < 1e-14);
        assert!(b[0]
            .state
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .all(|(x, y)| (x - y).norm() < 1e-14));
    }

    #[test]
    fn measuring_one_epr_qubit() {
        let b = apply_instrument(&epr(), &LocalInstrument::projective(0, 2)).unwrap();
        assert_eq!(b.len(), 2);
        for (branch, idx) in b.iter().zip([0b00, 0b11]) {
            assert!((branch.probability - 0.5).abs() < 1e-14);
            assert!((branch.state.amplitudes()[idx].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let psi = qstate::random_pure(4, 2, 2).unwrap();
        for seed in 0..10 {
            let inst = random_instrument((seed % 4) as usize, 2, 2, seed).unwrap();
            let total: f64 = apply_instrument(&psi, &inst)
                .unwrap()
                .iter()
                .map(|b| b.probability)
                .sum();
            assert!((total - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn dimension_and_site_checks() {
        let psi = qstate::random_pure(2, 2, 0).unwrap();
        assert!(apply_instrument(&psi, &LocalInstrument::projective(2, 2)).is_err());
        assert!(apply_instrument(&psi, &LocalInstrument::projective(0, 3)).is_err());
    }

    #[test]
    fn zero_rounds_has_no_margins() {
        let r = locc_monotonicity_trial(&ghz(3).unwrap(), ProbeKind::MutualInformation, 0, 1).unwrap();
        assert!(r.margins.is_empty());
        assert_eq!(r.worst_margin, None);
        assert!(!r.violated());
    }

    #[test]
    fn measuring_ghz_leaves_products() {
        let ghz3 = ghz(3).unwrap();
        let branches = apply_instrument(&ghz3, &LocalInstrument::projective(0, 2)).unwrap();
        let after: f64 = branches
            .iter()
            .map(|b| b.probability * measure::pure_m(&b.state, ProbeKind::QuasiConcurrence).unwrap())
            .sum();
        assert!(after.abs() < 1e-12);
        let before = measure::pure_m(&ghz3, ProbeKind::QuasiConcurrence).unwrap();
        assert!((before - after - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_rounds_leave_m_unchanged() {
        let psi = qstate::random_pure(4, 2, 6).unwrap();
        for kind in ProbeKind::ALL {
            let before = measure::pure_m(&psi, kind).unwrap();
            let u = random_instrument(2, 2, 1, 9).unwrap();
            let b = apply_instrument(&psi, &u).unwrap();
            let after = measure::pure_m(&b[0].state, kind).unwrap();
            assert!((before - after).abs() <= 1e-9);
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let psi = qstate::random_pure(3, 2, 10).unwrap();
        let a = locc_monotonicity_trial(&psi, ProbeKind::MutualInformation, 3, 77).unwrap();
        let b = locc_monotonicity_trial(&psi, ProbeKind::MutualInformation, 3, 77).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.round_averages.len(), 3);
    }
}
