//! Convex-roof extension of pure-state measures to mixed states.
//!
//! Every decomposition of ρ into `m` pure members arises from an `m×r`
//! isometry `V` applied to the eigen-ensemble: `|φ_j⟩ = Σ_i V_ji √p_i |e_i⟩`.
//! The search runs a multi-start local descent over isometries, where each
//! move left-multiplies `V` by a rotation acting on two rows (one angle and
//! one relative phase). The isometry constraint therefore holds exactly at
//! every step and only two members change per move.
//!
//! The minimum found is an upper bound on the true roof value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure;
use crate::numerics::{self, ComplexMatrix, C64, ZERO};
use crate::probes::{self, ProbeKind};
use crate::qstate::{self, DensityMatrix, StateVector};

pub const DEFAULT_RESTARTS: usize = 64;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Eigen-ensemble members with weight at or below this are dropped.
pub const MEMBER_WEIGHT_FLOOR: f64 = 1e-10;

const MAX_SWEEPS: usize = 500;
const GRID_POINTS: usize = 8;
const GOLDEN_TOL: f64 = 1e-7;
/// Continuation widths for smoothing the concurrence kink at product members.
const SMOOTHING_START: f64 = 1e-2;
const SMOOTHING_RATIO: f64 = 0.1;
const SMOOTHING_STAGES: i32 = 5;
/// A smoothed stage stops once a sweep gains less than this multiple of the
/// final tolerance, or this fraction of the current value if that is smaller.
const STAGE_TOLERANCE_FACTOR: f64 = 10.0;
const STAGE_RELATIVE_GAIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoofOptions {
    pub restarts: usize,
    /// Largest ensemble size; `None` means rank + 2.
    pub member_cap: Option<usize>,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            member_cap: None,
            seed: 0,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Pure-state quantity whose roof is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RoofObjective {
    /// `M` of each member on its own register.
    Measure(ProbeKind),
    /// `M` of each member embedded in a larger register of blank sites.
    Padded { kind: ProbeKind, total_sites: usize },
    /// Two-qubit concurrence `2|ad − bc|`, whose roof has a closed form.
    Concurrence,
}

impl RoofObjective {
    fn check(&self, rho: &DensityMatrix) -> Result<()> {
        let n = rho.num_sites();
        match *self {
            RoofObjective::Concurrence => {
                if n != 2 || rho.local_dim() != 2 {
                    return Err(Error::Unsupported("concurrence objective needs two qubits".into()));
                }
            }
            RoofObjective::Measure(kind) => {
                kind.check_local_dim(rho.local_dim())?;
                if n < 2 {
                    return Err(Error::usage("measure objective needs at least two sites"));
                }
            }
            RoofObjective::Padded { kind, total_sites } => {
                kind.check_local_dim(rho.local_dim())?;
                if n < 2 || total_sites < n {
                    return Err(Error::usage(format!(
                        "cannot pad a {n}-site state to {total_sites} sites"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value on a normalized pure state.
    pub fn pure_value(&self, psi: &StateVector) -> Result<f64> {
        match *self {
            RoofObjective::Concurrence => Ok(concurrence_unnormalized(psi.amplitudes())),
            RoofObjective::Measure(kind) => measure::pure_m(psi, kind),
            RoofObjective::Padded { kind, total_sites } => measure::padded_m(psi, kind, total_sites),
        }
    }

    /// Whether member values depend on the member only through its
    /// concurrence, so that the kink at product members can be smoothed.
    fn smoothable(&self, n: usize, d: usize) -> bool {
        match self {
            RoofObjective::Concurrence => true,
            RoofObjective::Measure(_) | RoofObjective::Padded { .. } => n == 2 && d == 2,
        }
    }

    /// `‖φ‖² · E(φ/‖φ‖)` for an unnormalized member. For smoothable
    /// objectives a positive `eps` replaces the concurrence `C` by
    /// `√(C² + eps²) − eps`, which removes the kink at `C = 0`.
    fn weighted_value(&self, n: usize, d: usize, phi: &[C64], eps: f64) -> f64 {
        let q: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        if q <= 1e-300 {
            return 0.0;
        }
        let scale = match *self {
            RoofObjective::Padded { kind, total_sites } => {
                measure::normalization_factor(kind, total_sites) / measure::num_pairs(total_sites) as f64
            }
            _ => 1.0,
        };
        if self.smoothable(n, d) {
            let c = concurrence_unnormalized(phi) / q;
            let c = if eps > 0.0 { (c * c + eps * eps).sqrt() - eps } else { c };
            let e = match *self {
                RoofObjective::Measure(ProbeKind::MutualInformation)
                | RoofObjective::Padded {
                    kind: ProbeKind::MutualInformation,
                    ..
                } => entropy_from_concurrence(c),
                _ => c,
            };
            return scale * q * e;
        }
        match *self {
            RoofObjective::Measure(kind) | RoofObjective::Padded { kind, .. } if n == 2 => {
                scale * q * two_site_pure_probe(kind, d, phi, q)
            }
            _ => {
                let amps = phi.iter().map(|z| z / q.sqrt()).collect();
                let psi = match StateVector::normalized(n, d, amps) {
                    Ok(p) => p,
                    Err(_) => return 0.0,
                };
                q * self.pure_value(&psi).unwrap_or(f64::INFINITY)
            }
        }
    }
}

/// `2|ad − bc|`; equals `‖φ‖²·C(φ/‖φ‖)` for two-qubit amplitudes.
fn concurrence_unnormalized(phi: &[C64]) -> f64 {
    2.0 * (phi[0] * phi[3] - phi[1] * phi[2]).norm()
}

/// Entanglement entropy (bits) of a pure two-qubit state with concurrence `c`.
fn entropy_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    let p = 0.5 * (1.0 + (1.0 - c * c).sqrt());
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// Probe of a pure two-site state given unnormalized amplitudes with norm² `q`.
/// Pure states reduce to: Q_C = concurrence, Fr = entanglement entropy.
fn two_site_pure_probe(kind: ProbeKind, d: usize, phi: &[C64], q: f64) -> f64 {
    match kind {
        ProbeKind::QuasiConcurrence => concurrence_unnormalized(phi) / q,
        ProbeKind::MutualInformation => {
            let mut rho_a = ComplexMatrix::zeros(d, d);
            for a in 0..d {
                for b in a..d {
                    let mut s = ZERO;
                    for t in 0..d {
                        s += phi[a * d + t] * phi[b * d + t].conj();
                    }
                    rho_a[(a, b)] = s / q;
                    rho_a[(b, a)] = (s / q).conj();
                }
            }
            probes::matrix_entropy(&rho_a).unwrap_or(f64::INFINITY)
        }
    }
}

/// Weighted set of pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDecomposition {
    pub weights: Vec<f64>,
    pub members: Vec<StateVector>,
}

impl EnsembleDecomposition {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Σ p_l |ψ_l⟩⟨ψ_l|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.members[0].dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (p, psi) in self.weights.iter().zip(&self.members) {
            let a = psi.amplitudes();
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += *p * a[i] * a[j].conj();
                }
            }
        }
        m
    }

    /// Max-norm distance between the reconstruction and `rho`.
    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        self.reconstruct().max_abs_diff(rho.matrix())
    }

    pub fn average(&self, objective: &RoofObjective) -> Result<f64> {
        let mut total = 0.0;
        for (p, psi) in self.weights.iter().zip(&self.members) {
            total += p * objective.pure_value(psi)?;
        }
        Ok(total)
    }

    /// Subnormalized vectors `√p_l |ψ_l⟩`.
    fn scaled_members(&self) -> Vec<Vec<C64>> {
        self.weights
            .iter()
            .zip(&self.members)
            .map(|(p, psi)| psi.amplitudes().iter().map(|a| a * p.sqrt()).collect())
            .collect()
    }

    fn from_scaled(n: usize, d: usize, scaled: &[Vec<C64>]) -> Result<Self> {
        let mut weights = Vec::new();
        let mut members = Vec::new();
        for phi in scaled {
            let q: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
            if q <= 1e-16 {
                continue;
            }
            weights.push(q);
            members.push(StateVector::normalized(n, d, phi.clone())?);
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { weights, members })
    }
}

/// Spectral decomposition with near-zero eigenvalues dropped.
pub fn eigen_ensemble(rho: &DensityMatrix) -> Result<EnsembleDecomposition> {
    let eig = numerics::hermitian_eigensystem(rho.matrix())?;
    let mut weights = Vec::new();
    let mut members = Vec::new();
    for k in (0..eig.values.len()).rev() {
        let mu = eig.values[k];
        if mu < -numerics::PSD_TOL {
            return Err(Error::NotPsd { eigenvalue: mu });
        }
        if mu <= MEMBER_WEIGHT_FLOOR {
            continue;
        }
        weights.push(mu);
        members.push(StateVector::normalized(
            rho.num_sites(),
            rho.local_dim(),
            eig.vectors.column(k),
        )?);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(EnsembleDecomposition { weights, members })
}

/// Applies an `m×r` isometry to an `r`-member ensemble.
pub fn steer_ensemble(base: &EnsembleDecomposition, isometry: &ComplexMatrix) -> Result<EnsembleDecomposition> {
    let r = base.len();
    if isometry.cols() != r || isometry.rows() < r {
        return Err(Error::usage(format!(
            "isometry is {}x{}, ensemble has {r} members",
            isometry.rows(),
            isometry.cols()
        )));
    }
    let defect = numerics::isometry_defect(isometry);
    if defect > 1e-10 {
        return Err(Error::usage(format!("matrix is not an isometry (defect {defect:.2e})")));
    }
    let n = base.members[0].num_sites();
    let d = base.members[0].local_dim();
    let scaled = mix(isometry, &base.scaled_members());
    EnsembleDecomposition::from_scaled(n, d, &scaled)
}

/// Rows of `V · W` where the rows of `W` are the given vectors.
fn mix(v: &ComplexMatrix, vectors: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let dim = vectors[0].len();
    (0..v.rows())
        .map(|j| {
            let mut phi = vec![ZERO; dim];
            for (i, w) in vectors.iter().enumerate() {
                let c = v[(j, i)];
                if c == ZERO {
                    continue;
                }
                for (x, y) in phi.iter_mut().zip(w) {
                    *x += c * y;
                }
            }
            phi
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub value: f64,
    pub sweeps: usize,
    /// Lowest value over this and all earlier restarts.
    pub running_best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoofResult {
    /// Upper bound on the roof value.
    pub best_value: f64,
    pub best: EnsembleDecomposition,
    /// Ensemble average over the eigen-decomposition of ρ.
    pub eigen_value: f64,
    pub restarts_used: usize,
    /// The running best did not move by more than the tolerance over the
    /// last third of the restarts.
    pub converged: bool,
    pub trace: Vec<RestartRecord>,
}

/// Minimizes the ensemble average of `objective` over decompositions of `rho`.
pub fn convex_roof(rho: &DensityMatrix, objective: RoofObjective, options: &RoofOptions) -> Result<RoofResult> {
    objective.check(rho)?;
    let base = eigen_ensemble(rho)?;
    let rank = base.len();
    let cap = options.member_cap.unwrap_or(rank + 2);
    if cap < rank {
        return Err(Error::usage(format!("member cap {cap} is below the rank {rank}")));
    }
    let eigen_value = base.average(&objective)?;
    if rank == 1 {
        return Ok(RoofResult {
            best_value: eigen_value,
            best: base,
            eigen_value,
            restarts_used: 0,
            converged: true,
            trace: Vec::new(),
        });
    }

    let n = rho.num_sites();
    let d = rho.local_dim();
    let scaled = base.scaled_members();
    let runs: Vec<(f64, usize, Vec<Vec<C64>>)> = (0..options.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                let mut v = ComplexMatrix::zeros(cap, rank);
                for i in 0..rank {
                    v[(i, i)] = C64::new(1.0, 0.0);
                }
                v
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(r as u64);
                random_isometry(&mut rng, cap, rank)
            };
            let mut search = LocalSearch::new(objective, n, d, mix(&start, &scaled));
            let sweeps = search.descend(options.tolerance);
            (search.total(), sweeps, search.members)
        })
        .collect();

    let mut trace = Vec::with_capacity(runs.len());
    let mut best_idx = 0;
    let mut best_value = f64::INFINITY;
    for (r, (value, sweeps, _)) in runs.iter().enumerate() {
        if *value < best_value {
            best_value = *value;
            best_idx = r;
        }
        trace.push(RestartRecord {
            restart: r,
            value: *value,
            sweeps: *sweeps,
            running_best: best_value,
        });
    }
    let mut best = EnsembleDecomposition::from_scaled(n, d, &runs[best_idx].2)?;
    let mut best_value = best.average(&objective)?;
    if eigen_value <= best_value {
        best = base;
        best_value = eigen_value;
    }
    let check_at = (2 * trace.len()).div_ceil(3).saturating_sub(1);
    let converged = (trace[check_at].running_best - trace[trace.len() - 1].running_best).abs() <= options.tolerance;
    Ok(RoofResult {
        best_value,
        best,
        eigen_value,
        restarts_used: trace.len(),
        converged,
        trace,
    })
}

fn random_isometry(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    loop {
        let g = ComplexMatrix::from_vec(rows, cols, (0..rows * cols).map(|_| qstate::gaussian(rng)).collect())
            .expect("shape");
        if let Some(q) = numerics::orthonormalize_columns(&g) {
            return q;
        }
    }
}

/// Two-row rotation descent over the isometry manifold.
struct LocalSearch {
    objective: RoofObjective,
    n: usize,
    d: usize,
    members: Vec<Vec<C64>>,
    values: Vec<f64>,
    eps: f64,
}

impl LocalSearch {
    fn new(objective: RoofObjective, n: usize, d: usize, members: Vec<Vec<C64>>) -> Self {
        let mut search = Self {
            objective,
            n,
            d,
            members,
            values: Vec::new(),
            eps: 0.0,
        };
        search.set_smoothing(0.0);
        search
    }

    fn value(&self, phi: &[C64]) -> f64 {
        self.objective.weighted_value(self.n, self.d, phi, self.eps)
    }

    fn set_smoothing(&mut self, eps: f64) {
        self.eps = eps;
        self.values = self.members.iter().map(|m| self.value(m)).collect();
    }

    fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    fn rotated(a: &[C64], b: &[C64], theta: f64, phase: f64) -> (Vec<C64>, Vec<C64>) {
        let (s, c) = theta.sin_cos();
        let e = C64::from_polar(1.0, phase);
        let x = a.iter().zip(b).map(|(p, q)| c * p + s * e * q).collect();
        let y = a.iter().zip(b).map(|(p, q)| -s * e.conj() * p + c * q).collect();
        (x, y)
    }

    fn pair_value(&self, j: usize, k: usize, theta: f64, phase: f64) -> f64 {
        let (x, y) = Self::rotated(&self.members[j], &self.members[k], theta, phase);
        self.value(&x) + self.value(&y)
    }

    /// Best rotation for rows (j, k); applies it if it lowers the objective.
    fn improve_pair(&mut self, j: usize, k: usize) -> f64 {
        let current = self.values[j] + self.values[k];
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut best = (0.0, 0.0, current);
        for phase in [0.0, half_pi] {
            let (theta, v) = minimize_1d(|t| self.pair_value(j, k, t, phase), -half_pi, half_pi);
            if v < best.2 {
                best = (theta, phase, v);
            }
        }
        if best.0 != 0.0 {
            let theta = best.0;
            let (phase, v) = minimize_1d(
                |p| self.pair_value(j, k, theta, p),
                -std::f64::consts::PI,
                std::f64::consts::PI,
            );
            if v < best.2 {
                best = (theta, phase, v);
            }
            let phase = best.1;
            let (theta, v) = minimize_1d(|t| self.pair_value(j, k, t, phase), -half_pi, half_pi);
            if v < best.2 {
                best = (theta, phase, v);
            }
        }
        let (theta, phase, value) = best;
        if value < current - 1e-15 * current.abs().max(1e-300) && theta != 0.0 {
            let (x, y) = Self::rotated(&self.members[j], &self.members[k], theta, phase);
            self.values[j] = self.value(&x);
            self.values[k] = self.value(&y);
            self.members[j] = x;
            self.members[k] = y;
            current - (self.values[j] + self.values[k])
        } else {
            0.0
        }
    }

    /// Descent on a decreasing smoothing schedule, ending on the exact
    /// objective. Returns the total number of sweeps.
    fn descend(&mut self, tolerance: f64) -> usize {
        let mut sweeps = 0;
        if self.objective.smoothable(self.n, self.d) {
            for stage in 0..SMOOTHING_STAGES {
                self.set_smoothing(SMOOTHING_START * SMOOTHING_RATIO.powi(stage));
                let stop = (tolerance * STAGE_TOLERANCE_FACTOR).min(STAGE_RELATIVE_GAIN * self.total());
                sweeps += self.sweep_until(stop);
            }
            self.set_smoothing(0.0);
        }
        sweeps + self.sweep_until(tolerance)
    }

    /// Sweeps over all row pairs until a sweep gains less than `tolerance`.
    fn sweep_until(&mut self, tolerance: f64) -> usize {
        let m = self.members.len();
        for sweep in 1..=MAX_SWEEPS {
            let mut gain = 0.0;
            for j in 0..m {
                for k in j + 1..m {
                    gain += self.improve_pair(j, k);
                }
            }
            if gain < tolerance {
                return sweep;
            }
        }
        MAX_SWEEPS
    }
}

/// Grid scan followed by golden-section refinement around the best cell.
/// Returns (argmin, min), never worse than the best grid point.
fn minimize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let step = (hi - lo) / GRID_POINTS as f64;
    let mut best = (0.0, f(0.0));
    let mut best_cell = None;
    for i in 0..=GRID_POINTS {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            best_cell = Some(i);
        }
    }
    let center = best_cell.map_or(0.0, |i| lo + step * i as f64);
    let (mut a, mut b) = ((center - step).max(lo), (center + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > GOLDEN_TOL {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Direct probe value against the roof value of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairwiseConditionReport {
    pub direct: f64,
    pub roof_upper_bound: f64,
    pub satisfied: bool,
}

pub fn pairwise_condition_check(
    rho: &DensityMatrix,
    kind: ProbeKind,
    options: &RoofOptions,
) -> Result<PairwiseConditionReport> {
    if rho.num_sites() != 2 {
        return Err(Error::usage("pairwise condition check takes a two-site state"));
    }
    let direct = probes::probe_eval(kind, rho)?;
    let roof = convex_roof(rho, RoofObjective::Measure(kind), options)?.best_value;
    Ok(PairwiseConditionReport {
        direct,
        roof_upper_bound: roof,
        satisfied: direct >= roof - 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::epr;

    fn werner(p: f64) -> DensityMatrix {
        let m = &epr().density().matrix().scale(C64::new(p, 0.0))
            + &ComplexMatrix::identity(4).scale(C64::new((1.0 - p) / 4.0, 0.0));
        DensityMatrix::new(2, 2, m).unwrap()
    }

    #[test]
    fn eigen_ensemble_of_pure_state() {
        let e = eigen_ensemble(&epr().density()).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e.weights[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_ensemble_of_identity() {
        let e = eigen_ensemble(&DensityMatrix::maximally_mixed(2, 2).unwrap()).unwrap();
        assert_eq!(e.len(), 4);
        for (w, psi) in e.weights.iter().zip(&e.members) {
            assert!((w - 0.25).abs() < 1e-14);
            // Basis projectors.
            assert!(psi.amplitudes().iter().filter(|a| a.norm() > 1e-12).count() == 1);
        }
    }

    #[test]
    fn eigen_ensemble_of_mems() {
        let rho = qstate::mems(0.5).unwrap();
        let e = eigen_ensemble(&rho).unwrap();
        assert_eq!(e.len(), 2);
        let mut w = e.weights.clone();
        w.sort_by(f64::total_cmp);
        assert!((w[0] - 0.5).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);
        assert!(e.residual(&rho) < 1e-12);
    }

    #[test]
    fn steering_identity_and_rotation() {
        let rho = qstate::mems(0.6).unwrap();
        let base = eigen_ensemble(&rho).unwrap();
        let same = steer_ensemble(&base, &ComplexMatrix::identity(2)).unwrap();
        assert!(same.residual(&rho) < 1e-12);
        for (a, b) in same.weights.iter().zip(&base.weights) {
            assert!((a - b).abs() < 1e-14);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]).unwrap();
        let rotated = steer_ensemble(&base, &had).unwrap();
        assert!(rotated.residual(&rho) <= 1e-10);
        assert!((rotated.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let not_iso = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(steer_ensemble(&base, &not_iso), Err(Error::Usage(_))));
    }

    #[test]
    fn pure_input_needs_no_search() {
        let psi = qstate::random_pure(3, 2, 4).unwrap();
        for kind in ProbeKind::ALL {
            let r = convex_roof(&psi.density(), RoofObjective::Measure(kind), &RoofOptions::default()).unwrap();
            assert_eq!(r.restarts_used, 0);
            assert!((r.best_value - measure::pure_m(&psi, kind).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn werner_one_is_a_bell_state() {
        let r = convex_roof(&werner(1.0), RoofObjective::Concurrence, &RoofOptions::default()).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn werner_roof_matches_closed_form() {
        let opts = RoofOptions {
            restarts: 16,
            ..Default::default()
        };
        for p in [0.2, 0.5, 0.8] {
            let rho = werner(p);
            let r = convex_roof(&rho, RoofObjective::Concurrence, &opts).unwrap();
            let expected = probes::concurrence(&rho).unwrap();
            assert!(
                (r.best_value - expected).abs() < 1e-3,
                "p={p}: {} vs {expected}",
                r.best_value
            );
            assert!(r.best.residual(&rho) < 1e-8);
        }
    }

    #[test]
    fn member_cap_below_rank_is_rejected() {
        let opts = RoofOptions {
            member_cap: Some(2),
            ..Default::default()
        };
        let rho = DensityMatrix::maximally_mixed(2, 2).unwrap();
        assert!(matches!(
            convex_roof(&rho, RoofObjective::Concurrence, &opts),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn objective_checks() {
        let qutrits = DensityMatrix::maximally_mixed(2, 3).unwrap();
        let opts = RoofOptions::default();
        assert!(convex_roof(&qutrits, RoofObjective::Concurrence, &opts).is_err());
        assert!(convex_roof(&qutrits, RoofObjective::Measure(ProbeKind::QuasiConcurrence), &opts).is_err());
    }

    #[test]
    fn running_best_is_monotone() {
        let rho = qstate::random_mixed(2, 2, 3, 17).unwrap();
        let opts = RoofOptions {
            restarts: 12,
            seed: 5,
            ..Default::default()
        };
        let r = convex_roof(&rho, RoofObjective::Concurrence, &opts).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].running_best <= w[0].running_best));
        assert!(r.best_value <= r.eigen_value);
        assert_eq!(r.restarts_used, 12);
    }

    #[test]
    fn pairwise_condition_on_pure_state() {
        let psi = qstate::random_pure(2, 2, 8).unwrap();
        let rep =
            pairwise_condition_check(&psi.density(), ProbeKind::QuasiConcurrence, &RoofOptions::default()).unwrap();
        assert!((rep.direct - rep.roof_upper_bound).abs() < 1e-12);
        assert!(rep.satisfied);
    }

    #[test]
    fn unnormalized_concurrence_scales_quadratically() {
        let psi = qstate::random_pure(2, 2, 2).unwrap();
        let c = concurrence_unnormalized(psi.amplitudes());
        let exact = probes::concurrence(&psi.density()).unwrap();
        assert!((c - exact).abs() < 1e-12);
        let scaled: Vec<C64> = psi.amplitudes().iter().map(|a| a * 0.5).collect();
        assert!((concurrence_unnormalized(&scaled) - 0.25 * c).abs() < 1e-14);
    }
}
