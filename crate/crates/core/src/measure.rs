//! Pair profiles and the averaged measures `M` and `M^T`.
//!
//! For a register of `N` sites, `M = N(P) · mean over pairs of P(ρ_ij)` with
//! `N(Q_C) = 1` and `N(Fr) = 2 − δ_{N,2}`; `M^T` is the plain pair sum.

use serde::Serialize;

use crate::convexroof::{self, RoofObjective, RoofOptions};
use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::probes::{self, ProbeKind, ZERO_TOL};
use crate::qstate::{SiteSubset, State, StateVector};

/// Probe value for one unordered pair of sites `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairValue {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl PairValue {
    /// 1-based label as printed in tables, e.g. `(1,4)`.
    pub fn label(&self) -> String {
        format!("({},{})", self.i + 1, self.j + 1)
    }
}

/// Probe values on every pair of a register, in lexicographic pair order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairProfile {
    pub kind: ProbeKind,
    pub num_sites: usize,
    pub local_dim: usize,
    pub entries: Vec<PairValue>,
}

impl PairProfile {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.entries.iter().find(|e| e.i == i && e.j == j).map(|e| e.value)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.value)
    }

    pub fn sum(&self) -> f64 {
        self.values().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.entries.len() as f64
    }
}

/// How the pair values are spread across the register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Separable,
    Homogeneous,
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureResult {
    pub profile: PairProfile,
    /// `M`: normalization factor times the pair mean.
    pub m_value: f64,
    /// `M^T`: the pair sum.
    pub mt_value: f64,
    pub factor: f64,
    pub classification: Classification,
    pub genuine_global: bool,
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

pub fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// `N(Q_C) = 1`, `N(Fr) = 2 − δ_{N,2}`.
pub fn normalization_factor(kind: ProbeKind, num_sites: usize) -> f64 {
    match kind {
        ProbeKind::QuasiConcurrence => 1.0,
        ProbeKind::MutualInformation if num_sites == 2 => 1.0,
        ProbeKind::MutualInformation => 2.0,
    }
}

/// Probe of every two-site reduction. Mixed inputs are evaluated directly
/// on their reductions, which is not the convex-roof value.
pub fn pair_profile(state: &State, kind: ProbeKind) -> Result<PairProfile> {
    let n = state.num_sites();
    if n < 2 {
        return Err(Error::usage(format!("pair profile needs N >= 2, got {n}")));
    }
    kind.check_local_dim(state.local_dim())?;
    let entries = pairs(n)
        .map(|(i, j)| {
            let rho = state.reduced(&SiteSubset::pair(i, j, n)?)?;
            Ok(PairValue {
                i,
                j,
                value: probes::probe_eval(kind, &rho)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairProfile {
        kind,
        num_sites: n,
        local_dim: state.local_dim(),
        entries,
    })
}

pub fn pure_profile(psi: &StateVector, kind: ProbeKind) -> Result<PairProfile> {
    pair_profile(&State::Pure(psi.clone()), kind)
}

/// `M` of a pure state on a register of `padded_sites ≥ N` sites, where
/// the extra sites are blank. Only the normalization changes.
pub fn padded_m(psi: &StateVector, kind: ProbeKind, padded_sites: usize) -> Result<f64> {
    let profile = pure_profile(psi, kind)?;
    let total = padded_sites.max(psi.num_sites());
    Ok(normalization_factor(kind, total) * profile.sum() / num_pairs(total) as f64)
}

/// `M` of a pure state.
pub fn pure_m(psi: &StateVector, kind: ProbeKind) -> Result<f64> {
    padded_m(psi, kind, psi.num_sites())
}

pub fn classify(profile: &PairProfile, tol: f64) -> Classification {
    let max = profile.values().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.values().fold(f64::INFINITY, f64::min);
    if max <= tol {
        Classification::Separable
    } else if max - min <= tol {
        Classification::Homogeneous
    } else {
        Classification::Heterogeneous
    }
}

/// Every pair carries a nonzero probe value.
pub fn genuine_global(profile: &PairProfile, tol: f64) -> bool {
    profile.values().all(|v| v > tol)
}

pub fn result_from_profile(profile: PairProfile, tol: f64) -> MeasureResult {
    let factor = normalization_factor(profile.kind, profile.num_sites);
    let mt_value = profile.sum();
    MeasureResult {
        m_value: factor * profile.mean(),
        mt_value,
        factor,
        classification: classify(&profile, tol),
        genuine_global: genuine_global(&profile, tol),
        profile,
    }
}

/// Direct evaluation of `M` and `M^T` for a pure state.
pub fn measure_m(psi: &StateVector, kind: ProbeKind) -> Result<MeasureResult> {
    Ok(result_from_profile(pure_profile(psi, kind)?, ZERO_TOL))
}

/// Value of `M` for any state: pure states directly, mixed states through
/// the convex roof (an upper bound on the true minimum).
pub fn measure_value(state: &State, kind: ProbeKind, roof: &RoofOptions) -> Result<f64> {
    match state {
        State::Pure(psi) => pure_m(psi, kind),
        State::Mixed(rho) => Ok(convexroof::convex_roof(rho, RoofObjective::Measure(kind), roof)?.best_value),
    }
}

/// Places `state` on the sites `placement` of a `total_sites` register,
/// with |0⟩ on every other site.
pub fn embed_with_blank(state: &StateVector, total_sites: usize, placement: &SiteSubset) -> Result<StateVector> {
    if placement.len() != state.num_sites() {
        return Err(Error::usage(format!(
            "placement {placement} has {} sites, state has {}",
            placement.len(),
            state.num_sites()
        )));
    }
    if placement.sites().last().is_some_and(|&s| s >= total_sites) {
        return Err(Error::usage(format!(
            "placement {placement} does not fit {total_sites} sites"
        )));
    }
    let d = state.local_dim();
    let dim = crate::qstate::checked_pow(d, total_sites)?;
    let weights: Vec<usize> = placement
        .sites()
        .iter()
        .map(|&s| d.pow((total_sites - 1 - s) as u32))
        .collect();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (idx, &a) in state.amplitudes().iter().enumerate() {
        let mut r = idx;
        let mut full = 0;
        for w in weights.iter().rev() {
            full += (r % d) * w;
            r /= d;
        }
        amps[full] = a;
    }
    StateVector::new(total_sites, d, amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ledger {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl Ledger {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            gap: lhs - rhs,
        }
    }
}

/// Both forms of the additivity comparison for σ ⊗ η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdditivityReport {
    /// `M(σ⊗η)` against `M(σ⊗0_E) + M(0_E⊗η)`.
    pub m_form: Ledger,
    /// `M^T(σ⊗η)` against `M^T(σ) + M^T(η)`.
    pub mt_form: Ledger,
}

pub fn additivity_check(sigma: &StateVector, eta: &StateVector, kind: ProbeKind) -> Result<AdditivityReport> {
    let (ns, ne) = (sigma.num_sites(), eta.num_sites());
    let total = ns + ne;
    let joint = measure_m(&sigma.tensor(eta)?, kind)?;
    let left = SiteSubset::new(0..ns, total)?;
    let right = SiteSubset::new(ns..total, total)?;
    let sigma_padded = pure_m(&embed_with_blank(sigma, total, &left)?, kind)?;
    let eta_padded = pure_m(&embed_with_blank(eta, total, &right)?, kind)?;
    let mt = |psi: &StateVector| -> Result<f64> {
        if psi.num_sites() < 2 {
            return Ok(0.0);
        }
        Ok(pure_profile(psi, kind)?.sum())
    };
    let (mt_sigma, mt_eta) = (mt(sigma)?, mt(eta)?);
    Ok(AdditivityReport {
        m_form: Ledger::new(joint.m_value, sigma_padded + eta_padded),
        mt_form: Ledger::new(joint.mt_value, mt_sigma + mt_eta),
    })
}

/// Strong super additivity comparison for a pure state split into
/// registers A, A′, B, B′.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsaReport {
    pub lhs: f64,
    /// Roof value of ρ^{AB} padded to the full register (upper bound).
    pub ab_upper_bound: f64,
    /// Roof value of ρ^{A′B′} padded to the full register (upper bound).
    pub ab_prime_upper_bound: f64,
    pub rhs_upper_bound: f64,
    pub margin: f64,
    /// A negative margin only says the optimizer has not yet found a
    /// decomposition low enough; it is never reported as a violation.
    pub needs_deeper_search: bool,
}

pub fn ssa_falsify(
    psi: &StateVector,
    parts: [&SiteSubset; 4],
    kind: ProbeKind,
    roof: &RoofOptions,
) -> Result<SsaReport> {
    let n = psi.num_sites();
    let mut seen = vec![false; n];
    for part in parts {
        for &s in part.sites() {
            if s >= n {
                return Err(Error::usage(format!("site {s} outside the register")));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::usage(format!("site {} appears in two registers", s + 1)));
            }
        }
    }
    if seen.iter().any(|x| !x) {
        return Err(Error::usage("registers A, A′, B, B′ must cover the state"));
    }
    let [a, a_prime, b, b_prime] = parts;
    let lhs = pure_m(psi, kind)?;
    let join = |x: &SiteSubset, y: &SiteSubset| SiteSubset::new(x.sites().iter().chain(y.sites()).copied(), n);
    let objective = RoofObjective::Padded { kind, total_sites: n };
    let roof_of = |keep: SiteSubset| -> Result<f64> {
        let rho = psi.reduced(&keep)?;
        Ok(convexroof::convex_roof(&rho, objective, roof)?.best_value)
    };
    let ab = roof_of(join(a, b)?)?;
    let ab_prime = roof_of(join(a_prime, b_prime)?)?;
    let rhs = ab + ab_prime;
    let margin = lhs - rhs;
    Ok(SsaReport {
        lhs,
        ab_upper_bound: ab,
        ab_prime_upper_bound: ab_prime,
        rhs_upper_bound: rhs,
        margin,
        needs_deeper_search: margin < -convexroof::DEFAULT_TOLERANCE,
    })
}
