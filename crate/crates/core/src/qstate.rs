//! Qudit registers: pure states, density matrices, tensor products and
//! partial traces.
//!
//! Site 0 is the leftmost tensor factor, so the basis index of a register
//! reads the site digits base `d` with site 0 as the most significant digit.
//! One-based qubit labels `1..=N` map to sites `0..N`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, C64, ONE, ZERO};

/// Tolerance on the norm of a pure state.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on trace and Hermiticity of a density matrix.
pub const DENSITY_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density matrix.
pub const EIGEN_FLOOR: f64 = -1e-9;

pub(crate) fn checked_pow(d: usize, n: usize) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|n| d.checked_pow(n))
        .filter(|&dim| dim <= 1 << 24)
        .ok_or_else(|| Error::usage(format!("register {d}^{n} is too large")))
}

fn check_register(n: usize, d: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::usage("register needs at least one site"));
    }
    if d < 2 {
        return Err(Error::usage(format!("local dimension must be >= 2, got {d}")));
    }
    checked_pow(d, n)
}

/// Ordered set of distinct sites within a register.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteSubset(Vec<usize>);

impl SiteSubset {
    /// Sorts the sites; duplicates, empty sets and out-of-range sites are rejected.
    pub fn new(sites: impl IntoIterator<Item = usize>, num_sites: usize) -> Result<Self> {
        let mut v: Vec<usize> = sites.into_iter().collect();
        v.sort_unstable();
        if v.is_empty() {
            return Err(Error::usage("site subset is empty"));
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::usage(format!("site subset {v:?} repeats a site")));
        }
        if let Some(&last) = v.last() {
            if last >= num_sites {
                return Err(Error::usage(format!(
                    "site {last} outside a register of {num_sites} sites"
                )));
            }
        }
        Ok(Self(v))
    }

    pub fn pair(i: usize, j: usize, num_sites: usize) -> Result<Self> {
        Self::new([i, j], num_sites)
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    /// Sites of the register not in this subset.
    pub fn complement(&self, num_sites: usize) -> Vec<usize> {
        (0..num_sites).filter(|s| !self.contains(*s)).collect()
    }
}

impl fmt::Display for SiteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.0.iter().map(|s| (s + 1).to_string()).collect();
        write!(f, "({})", labels.join(","))
    }
}

/// Splits basis indices of an `n`-site register into (kept, traced) parts.
///
/// `full_index(a, t)` is the register index whose kept-site digits spell `a`
/// and whose remaining digits spell `t`, both read most-significant first.
struct IndexSplit {
    kept_dim: usize,
    rest_dim: usize,
    kept_offsets: Vec<usize>,
    rest_offsets: Vec<usize>,
}

impl IndexSplit {
    fn new(n: usize, d: usize, keep: &[usize]) -> Self {
        let rest: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
        let offsets = |sites: &[usize]| -> Vec<usize> {
            let weights: Vec<usize> = sites.iter().map(|&s| d.pow((n - 1 - s) as u32)).collect();
            let dim = d.pow(sites.len() as u32);
            (0..dim)
                .map(|mut idx| {
                    let mut off = 0;
                    for w in weights.iter().rev() {
                        off += (idx % d) * w;
                        idx /= d;
                    }
                    off
                })
                .collect()
        };
        let kept_offsets = offsets(keep);
        let rest_offsets = offsets(&rest);
        Self {
            kept_dim: kept_offsets.len(),
            rest_dim: rest_offsets.len(),
            kept_offsets,
            rest_offsets,
        }
    }

    fn full_index(&self, kept: usize, rest: usize) -> usize {
        self.kept_offsets[kept] + self.rest_offsets[rest]
    }
}

/// Normalized pure state of `num_sites` qudits of dimension `local_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_sites: usize,
    local_dim: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Checks the norm against [`NORM_TOL`].
    pub fn new(num_sites: usize, local_dim: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let dim = check_register(num_sites, local_dim)?;
        if amplitudes.len() != dim {
            return Err(Error::Dimension(format!(
                "{num_sites} sites of dimension {local_dim} need {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::usage(format!("state norm² is {norm}, expected 1")));
        }
        Ok(Self {
            num_sites,
            local_dim,
            amplitudes,
        })
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(num_sites: usize, local_dim: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::usage("cannot normalize the zero vector"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(num_sites, local_dim, amplitudes)
    }

    pub fn basis(num_sites: usize, local_dim: usize, index: usize) -> Result<Self> {
        let dim = check_register(num_sites, local_dim)?;
        if index >= dim {
            return Err(Error::usage(format!("basis index {index} >= dimension {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(num_sites, local_dim, amps)
    }

    /// |0…0⟩, the blank register.
    pub fn zero(num_sites: usize, local_dim: usize) -> Result<Self> {
        Self::basis(num_sites, local_dim, 0)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            num_sites: self.num_sites,
            local_dim: self.local_dim,
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.local_dim != other.local_dim {
            return Err(Error::usage(format!(
                "tensor of registers with local dimensions {} and {}",
                self.local_dim, other.local_dim
            )));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Ok(Self {
            num_sites: self.num_sites + other.num_sites,
            local_dim: self.local_dim,
            amplitudes: amps,
        })
    }

    /// Reduced density matrix on `keep`, computed as `M M†` with `M` the
    /// amplitude tensor reshaped to (kept, traced).
    pub fn reduced(&self, keep: &SiteSubset) -> Result<DensityMatrix> {
        self.check_subset(keep)?;
        let split = IndexSplit::new(self.num_sites, self.local_dim, keep.sites());
        let (kd, rd) = (split.kept_dim, split.rest_dim);
        let mut m = vec![ZERO; kd * rd];
        for a in 0..kd {
            for t in 0..rd {
                m[a * rd + t] = self.amplitudes[split.full_index(a, t)];
            }
        }
        let mut out = ComplexMatrix::zeros(kd, kd);
        for a in 0..kd {
            for b in a..kd {
                let mut s = ZERO;
                for t in 0..rd {
                    s += m[a * rd + t] * m[b * rd + t].conj();
                }
                out[(a, b)] = s;
                out[(b, a)] = s.conj();
            }
        }
        Ok(DensityMatrix {
            num_sites: keep.len(),
            local_dim: self.local_dim,
            matrix: out,
        })
    }

    /// Applies a `d×d` operator to one site; the result is not renormalized.
    pub fn apply_local_unnormalized(&self, site: usize, op: &ComplexMatrix) -> Result<Vec<C64>> {
        let d = self.local_dim;
        if site >= self.num_sites {
            return Err(Error::usage(format!("site {site} outside the register")));
        }
        if op.rows() != d || op.cols() != d {
            return Err(Error::Dimension(format!(
                "{}x{} operator on a site of dimension {d}",
                op.rows(),
                op.cols()
            )));
        }
        let stride = d.pow((self.num_sites - 1 - site) as u32);
        let mut out = vec![ZERO; self.dim()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let digit = (idx / stride) % d;
            let base = idx - digit * stride;
            let mut s = ZERO;
            for k in 0..d {
                s += op[(digit, k)] * self.amplitudes[base + k * stride];
            }
            *slot = s;
        }
        Ok(out)
    }

    /// Applies a unitary to one site.
    pub fn apply_local(&self, site: usize, op: &ComplexMatrix) -> Result<Self> {
        let amps = self.apply_local_unnormalized(site, op)?;
        Self::normalized(self.num_sites, self.local_dim, amps)
    }

    /// Reorders sites: site `k` of the output is site `perm[k]` of the input.
    pub fn permute_sites(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_sites;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::usage(format!("{perm:?} is not a permutation of {n} sites")));
        }
        let d = self.local_dim;
        let mut out = vec![ZERO; self.dim()];
        let mut digits = vec![0usize; n];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut r = idx;
            for k in (0..n).rev() {
                digits[k] = r % d;
                r /= d;
            }
            let mut src = 0;
            let mut src_digits = vec![0usize; n];
            for k in 0..n {
                src_digits[perm[k]] = digits[k];
            }
            for &dg in &src_digits {
                src = src * d + dg;
            }
            *slot = self.amplitudes[src];
        }
        Ok(Self {
            num_sites: n,
            local_dim: d,
            amplitudes: out,
        })
    }

    fn check_subset(&self, keep: &SiteSubset) -> Result<()> {
        match keep.sites().last() {
            Some(&s) if s < self.num_sites => Ok(()),
            _ => Err(Error::usage(format!(
                "subset {keep} does not fit a register of {} sites",
                self.num_sites
            ))),
        }
    }
}

/// Hermitian, PSD, trace-one operator on a qudit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_sites: usize,
    local_dim: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(num_sites: usize, local_dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dim = check_register(num_sites, local_dim)?;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Dimension(format!(
                "{num_sites} sites of dimension {local_dim} need a {dim}x{dim} matrix"
            )));
        }
        let dev = matrix.hermitian_deviation();
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::usage(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = numerics::hermitian_eigenvalues(&matrix)?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < EIGEN_FLOOR {
            return Err(Error::NotPsd { eigenvalue: min });
        }
        Ok(Self {
            num_sites,
            local_dim,
            matrix,
        })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn new_unchecked(num_sites: usize, local_dim: usize, matrix: ComplexMatrix) -> Self {
        Self {
            num_sites,
            local_dim,
            matrix,
        }
    }

    pub fn maximally_mixed(num_sites: usize, local_dim: usize) -> Result<Self> {
        let dim = check_register(num_sites, local_dim)?;
        Ok(Self {
            num_sites,
            local_dim,
            matrix: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.local_dim != other.local_dim {
            return Err(Error::usage(format!(
                "tensor of registers with local dimensions {} and {}",
                self.local_dim, other.local_dim
            )));
        }
        Ok(Self {
            num_sites: self.num_sites + other.num_sites,
            local_dim: self.local_dim,
            matrix: self.matrix.kron(&other.matrix),
        })
    }

    /// Partial trace over every site not in `keep`.
    pub fn partial_trace(&self, keep: &SiteSubset) -> Result<Self> {
        match keep.sites().last() {
            Some(&s) if s < self.num_sites => {}
            _ => {
                return Err(Error::usage(format!(
                    "subset {keep} does not fit a register of {} sites",
                    self.num_sites
                )))
            }
        }
        let split = IndexSplit::new(self.num_sites, self.local_dim, keep.sites());
        let kd = split.kept_dim;
        let mut out = ComplexMatrix::zeros(kd, kd);
        for a in 0..kd {
            for b in 0..kd {
                let mut s = ZERO;
                for t in 0..split.rest_dim {
                    s += self.matrix[(split.full_index(a, t), split.full_index(b, t))];
                }
                out[(a, b)] = s;
            }
        }
        Ok(Self {
            num_sites: keep.len(),
            local_dim: self.local_dim,
            matrix: out,
        })
    }

    /// Conjugates by a unitary acting on one site.
    pub fn apply_local_unitary(&self, site: usize, u: &ComplexMatrix) -> Result<Self> {
        let d = self.local_dim;
        if site >= self.num_sites || u.rows() != d || u.cols() != d {
            return Err(Error::usage("local unitary does not fit the register"));
        }
        let mut full = ComplexMatrix::identity(1);
        for s in 0..self.num_sites {
            full = if s == site {
                full.kron(u)
            } else {
                full.kron(&ComplexMatrix::identity(d))
            };
        }
        let m = &(&full * &self.matrix) * &full.adjoint();
        Ok(Self::new_unchecked(self.num_sites, d, m))
    }
}

/// A pure or mixed register state.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl State {
    pub fn num_sites(&self) -> usize {
        match self {
            State::Pure(s) => s.num_sites(),
            State::Mixed(r) => r.num_sites(),
        }
    }

    pub fn local_dim(&self) -> usize {
        match self {
            State::Pure(s) => s.local_dim(),
            State::Mixed(r) => r.local_dim(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(s) => s.density(),
            State::Mixed(r) => r.clone(),
        }
    }

    pub fn reduced(&self, keep: &SiteSubset) -> Result<DensityMatrix> {
        match self {
            State::Pure(s) => s.reduced(keep),
            State::Mixed(r) => r.partial_trace(keep),
        }
    }

    /// Tensor product of two states of the same kind.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => a.tensor(b).map(State::Pure),
            (State::Mixed(a), State::Mixed(b)) => a.tensor(b).map(State::Mixed),
            _ => Err(Error::usage("tensor of a pure state with a density matrix")),
        }
    }
}

fn amp(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn qubits_from_terms(n: usize, terms: &[(f64, &str)]) -> Result<StateVector> {
    let mut amps = vec![ZERO; 1 << n];
    for &(c, bits) in terms {
        let idx = usize::from_str_radix(bits, 2).expect("literal bit string");
        amps[idx] += amp(c);
    }
    StateVector::new(n, 2, amps)
}

pub fn ghz(n: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::usage("ghz needs N >= 2"));
    }
    let dim = checked_pow(2, n)?;
    let mut amps = vec![ZERO; dim];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = amp(h);
    amps[dim - 1] = amp(h);
    StateVector::new(n, 2, amps)
}

pub fn w_state(n: usize) -> Result<StateVector> {
    if n < 3 {
        return Err(Error::usage("w needs N >= 3"));
    }
    let dim = checked_pow(2, n)?;
    let mut amps = vec![ZERO; dim];
    let a = 1.0 / (n as f64).sqrt();
    for k in 0..n {
        amps[1 << (n - 1 - k)] = amp(a);
    }
    StateVector::new(n, 2, amps)
}

pub fn epr() -> StateVector {
    ghz(2).expect("valid")
}

/// ½(|0000⟩+|0110⟩+|1001⟩+|1111⟩): EPR pairs on qubits (1,4) and (2,3).
pub fn psi4() -> StateVector {
    qubits_from_terms(4, &[(0.5, "0000"), (0.5, "0110"), (0.5, "1001"), (0.5, "1111")]).expect("valid")
}

pub fn chi4() -> StateVector {
    let a = 1.0 / (2.0 * 2f64.sqrt());
    qubits_from_terms(
        4,
        &[
            (a, "0000"),
            (-a, "0011"),
            (-a, "0101"),
            (a, "0110"),
            (a, "1001"),
            (a, "1010"),
            (a, "1100"),
            (a, "1111"),
        ],
    )
    .expect("valid")
}

pub fn cluster4() -> StateVector {
    qubits_from_terms(4, &[(0.5, "0000"), (0.5, "0110"), (0.5, "1001"), (-0.5, "1111")]).expect("valid")
}

fn check_unit_interval(x: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::usage(format!("{name} parameter x={x} outside [0, 1]")));
    }
    Ok(())
}

/// Maximally entangled mixed state family in the basis {00, 01, 10, 11}.
pub fn mems(x: f64) -> Result<DensityMatrix> {
    check_unit_interval(x, "mems")?;
    let h = x / 2.0;
    let m = ComplexMatrix::from_real_rows(&[
        &[h, 0.0, 0.0, h],
        &[0.0, 1.0 - x, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0],
        &[h, 0.0, 0.0, h],
    ])?;
    Ok(DensityMatrix::new_unchecked(2, 2, m))
}

/// Four-qubit purification √(1−x)|0101⟩ + √(x/4)(|0000⟩+|0011⟩+|1100⟩+|1111⟩).
pub fn pure_mems(x: f64) -> Result<StateVector> {
    check_unit_interval(x, "puremems")?;
    let a = (1.0 - x).sqrt();
    let b = (x / 4.0).sqrt();
    qubits_from_terms(4, &[(a, "0101"), (b, "0000"), (b, "0011"), (b, "1100"), (b, "1111")])
}

/// Resolves a library state name such as `ghz:5`, `mems:0.3` or `basis:3:5`.
pub fn named_state(spec: &str) -> Result<State> {
    let spec = spec.trim();
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or_default().to_ascii_lowercase();
    let args: Vec<&str> = parts.collect();
    let arity = |k: usize| -> Result<()> {
        if args.len() != k {
            return Err(Error::usage(format!(
                "state `{name}` takes {k} parameter(s), got {}",
                args.len()
            )));
        }
        Ok(())
    };
    let count = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::usage(format!("`{s}` is not a site count in `{spec}`")))
    };
    let real = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::usage(format!("`{s}` is not a number in `{spec}`")))
    };
    let pure = |s: StateVector| State::Pure(s);
    match name.as_str() {
        "epr" => arity(0).map(|_| pure(epr())),
        "ghz" => {
            arity(1)?;
            ghz(count(args[0])?).map(pure)
        }
        "w" => {
            arity(1)?;
            w_state(count(args[0])?).map(pure)
        }
        "psi4" => arity(0).map(|_| pure(psi4())),
        "chi4" => arity(0).map(|_| pure(chi4())),
        "cluster4" => arity(0).map(|_| pure(cluster4())),
        "mems" => {
            arity(1)?;
            mems(real(args[0])?).map(State::Mixed)
        }
        "puremems" => {
            arity(1)?;
            pure_mems(real(args[0])?).map(pure)
        }
        "zero" => {
            arity(1)?;
            StateVector::zero(count(args[0])?, 2).map(pure)
        }
        "basis" => {
            arity(2)?;
            let n = count(args[0])?;
            let k: usize = args[1]
                .parse()
                .map_err(|_| Error::usage(format!("`{}` is not a basis index", args[1])))?;
            StateVector::basis(n, 2, k).map(pure)
        }
        _ => Err(Error::usage(format!("unknown state `{spec}`"))),
    }
}

/// Haar-random pure state from normalized complex Gaussian amplitudes.
pub fn random_pure(num_sites: usize, local_dim: usize, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_with(&mut rng, num_sites, local_dim)
}

pub fn random_pure_with<R: Rng + ?Sized>(rng: &mut R, num_sites: usize, local_dim: usize) -> Result<StateVector> {
    let dim = check_register(num_sites, local_dim)?;
    let amps = (0..dim).map(|_| gaussian(rng)).collect();
    StateVector::normalized(num_sites, local_dim, amps)
}

/// Product of independent single-site Haar states.
pub fn random_product(num_sites: usize, local_dim: usize, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_product_with(&mut rng, num_sites, local_dim)
}

pub fn random_product_with<R: Rng + ?Sized>(rng: &mut R, num_sites: usize, local_dim: usize) -> Result<StateVector> {
    check_register(num_sites, local_dim)?;
    let mut state = random_pure_with(rng, 1, local_dim)?;
    for _ in 1..num_sites {
        state = state.tensor(&random_pure_with(rng, 1, local_dim)?)?;
    }
    Ok(state)
}

/// Random mixed state of the given rank: the register marginal of a Haar
/// purification with a `rank`-dimensional environment.
pub fn random_mixed(num_sites: usize, local_dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_mixed_with(&mut rng, num_sites, local_dim, rank)
}

pub fn random_mixed_with<R: Rng + ?Sized>(
    rng: &mut R,
    num_sites: usize,
    local_dim: usize,
    rank: usize,
) -> Result<DensityMatrix> {
    let dim = check_register(num_sites, local_dim)?;
    if rank == 0 || rank > dim {
        return Err(Error::usage(format!("rank {rank} outside 1..={dim}")));
    }
    let g = ComplexMatrix::from_vec(dim, rank, (0..dim * rank).map(|_| gaussian(rng)).collect())?;
    let mut m = &g * &g.adjoint();
    let tr = m.trace().re;
    m = m.scale(C64::new(1.0 / tr, 0.0));
    // Exact Hermitian symmetry.
    for i in 0..dim {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in i + 1..dim {
            let z = m[(i, j)];
            m[(j, i)] = z.conj();
        }
    }
    Ok(DensityMatrix::new_unchecked(num_sites, local_dim, m))
}

/// Haar-random `d×d` unitary (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    loop {
        let g = ComplexMatrix::from_vec(d, d, (0..d * d).map(|_| gaussian(rng)).collect()).expect("square");
        if let Some(q) = numerics::orthonormalize_columns(&g) {
            return q;
        }
    }
}

/// Standard complex Gaussian with E|z|² = 1.
pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Result of parsing a ket expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedKet {
    pub state: StateVector,
    /// Euclidean norm of the expression before normalization.
    pub input_norm: f64,
    /// Set when the input norm differed from 1 by more than 1e-6.
    pub normalization_warning: bool,
}

/// Parses `coeff|digits⟩ + …`. The local dimension defaults to
/// `max(2, largest digit + 1)`.
pub fn parse_ket(text: &str, local_dim: Option<usize>) -> Result<ParsedKet> {
    let terms = KetParser::new(text).parse()?;
    let width = terms[0].1.len();
    if let Some((pos, digits)) = terms.iter().map(|(_, d, p)| (p, d)).find(|(_, d)| d.len() != width) {
        return Err(Error::Parse {
            position: *pos,
            message: format!("ket has {} digits, expected {width}", digits.len()),
        });
    }
    let max_digit = terms.iter().flat_map(|(_, d, _)| d.iter().copied()).max().unwrap_or(0);
    let d = local_dim.unwrap_or((max_digit + 1).max(2));
    if max_digit >= d {
        return Err(Error::usage(format!(
            "digit {max_digit} not valid for local dimension {d}"
        )));
    }
    let dim = check_register(width, d)?;
    let mut amps = vec![ZERO; dim];
    for (c, digits, _) in &terms {
        let idx = digits.iter().fold(0, |acc, &x| acc * d + x);
        amps[idx] += c;
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::Parse {
            position: 0,
            message: "ket expression is the zero vector".into(),
        });
    }
    let state = StateVector::normalized(width, d, amps)?;
    Ok(ParsedKet {
        state,
        input_norm: norm,
        normalization_warning: (norm - 1.0).abs() > 1e-6,
    })
}

/// Recursive-descent parser over characters.
///
/// ```text
/// sum    := ['+'|'-'] term (('+'|'-') term)*
/// term   := [coeff ['*']] '|' digit+ ('>' | '⟩')
/// coeff  := unary (('*'|'/') unary)*
/// unary  := '-' unary | atom
/// atom   := number ['i'] | 'i' | 'sqrt' '(' expr ')' | '(' expr ')'
/// expr   := coeff (('+'|'-') coeff)*
/// ```
struct KetParser {
    chars: Vec<char>,
    // Character offset of each retained char in the original text.
    offsets: Vec<usize>,
    end: usize,
    pos: usize,
}

type Term = (C64, Vec<usize>, usize);

impl KetParser {
    fn new(text: &str) -> Self {
        let (offsets, chars) = text.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).unzip();
        Self {
            chars,
            offsets,
            end: text.chars().count(),
            pos: 0,
        }
    }

    fn position(&self, pos: usize) -> usize {
        self.offsets.get(pos).copied().unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.position(self.pos),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<Vec<Term>> {
        if self.chars.is_empty() {
            return self.err("empty ket expression");
        }
        let mut terms = Vec::new();
        let mut sign = if self.eat('-') {
            -1.0
        } else {
            self.eat('+');
            1.0
        };
        loop {
            let (c, digits, at) = self.term()?;
            terms.push((c * sign, digits, at));
            match self.peek() {
                None => break,
                Some('+') => {
                    self.pos += 1;
                    sign = 1.0;
                }
                Some('-') => {
                    self.pos += 1;
                    sign = -1.0;
                }
                Some(ch) => return self.err(format!("unexpected `{ch}` after ket")),
            }
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<Term> {
        let coeff = if self.peek() == Some('|') {
            ONE
        } else {
            let c = self.coeff()?;
            self.eat('*');
            c
        };
        let at = self.position(self.pos);
        if !self.eat('|') {
            return self.err("expected `|` starting a ket");
        }
        let mut digits = Vec::new();
        while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
            digits.push(d as usize);
            self.pos += 1;
        }
        if digits.is_empty() {
            return self.err("ket has no digits");
        }
        if !(self.eat('>') || self.eat('⟩')) {
            return self.err("expected `>` or `⟩` closing the ket");
        }
        Ok((coeff, digits, at))
    }

    fn expr(&mut self) -> Result<C64> {
        let mut acc = self.coeff()?;
        loop {
            if self.eat('+') {
                acc += self.coeff()?;
            } else if self.eat('-') {
                acc -= self.coeff()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn coeff(&mut self) -> Result<C64> {
        let mut acc = self.unary()?;
        loop {
            // `*|` belongs to the term, not to the coefficient.
            if self.peek() == Some('*') && self.chars.get(self.pos + 1) != Some(&'|') {
                self.pos += 1;
                acc *= self.unary()?;
            } else if self.eat('/') {
                let at = self.pos;
                let den = self.unary()?;
                if den.norm() == 0.0 {
                    self.pos = at;
                    return self.err("division by zero");
                }
                acc /= den;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<C64> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<C64> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(v)
            }
            Some('i') => {
                self.pos += 1;
                Ok(numerics::I)
            }
            Some('s') => {
                let word: String = self.chars[self.pos..].iter().take(4).collect();
                if word != "sqrt" {
                    return self.err("unknown identifier");
                }
                self.pos += 4;
                if !self.eat('(') {
                    return self.err("expected `(` after sqrt");
                }
                let v = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(v.sqrt())
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some('e' | 'E')) {
                    let save = self.pos;
                    self.pos += 1;
                    if matches!(self.peek(), Some('+' | '-')) {
                        self.pos += 1;
                    }
                    if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                    } else {
                        self.pos = save;
                    }
                }
                let lit: String = self.chars[start..self.pos].iter().collect();
                let Ok(x) = lit.parse::<f64>() else {
                    self.pos = start;
                    return self.err(format!("bad number `{lit}`"));
                };
                if self.eat('i') {
                    Ok(C64::new(0.0, x))
                } else {
                    Ok(C64::new(x, 0.0))
                }
            }
            Some(c) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// JSON state file: `{"n", "d", "amplitudes": [[re, im], …]}` for pure
/// states or `{"n", "d", "matrix": [[[re, im], …], …]}` for mixed ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateFile {
    Pure {
        n: usize,
        d: usize,
        amplitudes: Vec<[f64; 2]>,
    },
    Mixed {
        n: usize,
        d: usize,
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

impl StateFile {
    pub fn from_state(state: &State) -> Self {
        let pair = |z: &C64| [z.re, z.im];
        match state {
            State::Pure(s) => StateFile::Pure {
                n: s.num_sites(),
                d: s.local_dim(),
                amplitudes: s.amplitudes().iter().map(pair).collect(),
            },
            State::Mixed(r) => {
                let m = r.matrix();
                StateFile::Mixed {
                    n: r.num_sites(),
                    d: r.local_dim(),
                    matrix: (0..m.rows()).map(|i| m.row(i).iter().map(pair).collect()).collect(),
                }
            }
        }
    }

    pub fn into_state(self) -> Result<State> {
        let c = |p: &[f64; 2]| C64::new(p[0], p[1]);
        match self {
            StateFile::Pure { n, d, amplitudes } => {
                StateVector::new(n, d, amplitudes.iter().map(c).collect()).map(State::Pure)
            }
            StateFile::Mixed { n, d, matrix } => {
                let rows: Vec<Vec<C64>> = matrix.iter().map(|r| r.iter().map(c).collect()).collect();
                DensityMatrix::new(n, d, ComplexMatrix::from_rows(&rows)?).map(State::Mixed)
            }
        }
    }

    pub fn parse(text: &str) -> Result<State> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: e.column(),
            message: format!("state file: {e}"),
        })?;
        file.into_state()
    }
}
