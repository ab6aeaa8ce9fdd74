//! Probe quantities on two-site reduced density matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};
use crate::qstate::{DensityMatrix, SiteSubset};

/// Eigenvalues of ρ at or below this are treated as exact zeros when
/// building the Wootters spectrum. Without the cut, eigensolver noise of
/// order 1e-17 in a rank-deficient ρ shows up as λ ~ 1e-8.
pub const RANK_TOL: f64 = 1e-12;

/// Probe values below this count as zero in classification contexts.
pub const ZERO_TOL: f64 = 1e-9;

/// The two probe quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    /// Quasi-concurrence λ₁ + λ₂ − λ₃ − λ₄ (qubits only).
    #[serde(rename = "qc")]
    QuasiConcurrence,
    /// Halved quantum mutual information in bits.
    #[serde(rename = "fr")]
    MutualInformation,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 2] = [ProbeKind::QuasiConcurrence, ProbeKind::MutualInformation];

    pub fn short_name(self) -> &'static str {
        match self {
            ProbeKind::QuasiConcurrence => "qc",
            ProbeKind::MutualInformation => "fr",
        }
    }

    /// Fails for Q_C on anything but qubits.
    pub fn check_local_dim(self, d: usize) -> Result<()> {
        if self == ProbeKind::QuasiConcurrence && d != 2 {
            return Err(Error::Unsupported(format!(
                "quasi-concurrence is defined for qubits only (local dimension {d})"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ProbeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qc" | "quasi-concurrence" => Ok(ProbeKind::QuasiConcurrence),
            "fr" | "mutual-information" => Ok(ProbeKind::MutualInformation),
            _ => Err(Error::usage(format!("unknown probe `{s}` (expected qc or fr)"))),
        }
    }
}

/// Square roots of the eigenvalues of ρρ̃, descending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WoottersSpectrum {
    pub lambdas: [f64; 4],
}

impl WoottersSpectrum {
    pub fn concurrence(&self) -> f64 {
        let [a, b, c, d] = self.lambdas;
        (a - b - c - d).max(0.0)
    }

    pub fn quasi_concurrence(&self) -> f64 {
        let [a, b, c, d] = self.lambdas;
        (a + b - c - d).max(0.0)
    }
}

fn check_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.num_sites() != 2 || rho.local_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "two-qubit operation on {} sites of dimension {}",
            rho.num_sites(),
            rho.local_dim()
        )));
    }
    Ok(())
}

fn sigma_yy() -> ComplexMatrix {
    let y = numerics::sigma_y();
    y.kron(&y)
}

/// ρ̃ = (σ₂⊗σ₂) ρ* (σ₂⊗σ₂).
pub fn spin_flip(rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_two_qubits(rho)?;
    let yy = sigma_yy();
    let m = &(&yy * &rho.matrix().conj()) * &yy;
    Ok(DensityMatrix::new_unchecked(2, 2, m))
}

/// Wootters spectrum of a two-qubit state.
///
/// With ρ = W W† (W built from the eigenvectors of ρ scaled by √μ), the
/// λᵢ are the singular values of the symmetric matrix Wᵀ(σ₂⊗σ₂)W. Their
/// squares are the eigenvalues of √ρ ρ̃ √ρ, but the singular values come out
/// with absolute rather than square-root error.
pub fn wootters_spectrum(rho: &DensityMatrix) -> Result<WoottersSpectrum> {
    check_two_qubits(rho)?;
    let mut eig = numerics::hermitian_eigensystem(rho.matrix())?;
    numerics::clamp_psd(&mut eig.values)?;
    let kept: Vec<usize> = (0..4).filter(|&k| eig.values[k] > RANK_TOL).collect();
    let mut w = ComplexMatrix::zeros(4, kept.len());
    for (col, &k) in kept.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for i in 0..4 {
            w[(i, col)] = eig.vectors[(i, k)] * s;
        }
    }
    let tau = &(&w.transpose() * &sigma_yy()) * &w;
    let mut lambdas = [0.0; 4];
    for (slot, s) in lambdas.iter_mut().zip(numerics::singular_values(&tau)) {
        *slot = s;
    }
    Ok(WoottersSpectrum { lambdas })
}

/// Wootters concurrence max{0, λ₁ − λ₂ − λ₃ − λ₄}.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    Ok(wootters_spectrum(rho)?.concurrence())
}

/// Q_C = λ₁ + λ₂ − λ₃ − λ₄.
pub fn quasi_concurrence(rho: &DensityMatrix) -> Result<f64> {
    Ok(wootters_spectrum(rho)?.quasi_concurrence())
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    matrix_entropy(rho.matrix())
}

pub(crate) fn matrix_entropy(m: &ComplexMatrix) -> Result<f64> {
    let mut values = numerics::hermitian_eigenvalues(m)?;
    numerics::clamp_psd(&mut values)?;
    Ok(values
        .into_iter()
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.log2())
        .sum::<f64>()
        .max(0.0))
}

/// Fr = ½[S(ρ_A) + S(ρ_B) − S(ρ_AB)], bits.
pub fn mutual_information_fr(rho: &DensityMatrix) -> Result<f64> {
    if rho.num_sites() != 2 {
        return Err(Error::Unsupported(format!(
            "mutual information of a {}-site state",
            rho.num_sites()
        )));
    }
    let a = rho.partial_trace(&SiteSubset::new([0], 2)?)?;
    let b = rho.partial_trace(&SiteSubset::new([1], 2)?)?;
    let fr = 0.5 * (von_neumann_entropy(&a)? + von_neumann_entropy(&b)? - von_neumann_entropy(rho)?);
    Ok(fr.max(0.0))
}

/// Evaluates the chosen probe on a two-site state.
pub fn probe_eval(kind: ProbeKind, rho: &DensityMatrix) -> Result<f64> {
    kind.check_local_dim(rho.local_dim())?;
    match kind {
        ProbeKind::QuasiConcurrence => quasi_concurrence(rho),
        ProbeKind::MutualInformation => mutual_information_fr(rho),
    }
}
