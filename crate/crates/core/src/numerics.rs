//! Dense complex-matrix kernel.
//!
//! Everything here operates on small matrices (a few hundred rows at most).
//! The Hermitian eigensolver is a cyclic complex Jacobi iteration, which is
//! slow asymptotically but accurate to working precision for the sizes this
//! crate deals with. Non-Hermitian spectra go through a complex Schur
//! decomposition and are only used as a cross-check path.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance for Hermiticity checks when a matrix is built.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Imaginary parts of a theoretically real spectrum below this are dropped.
pub const IMAG_TOL: f64 = 1e-8;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                m[(i, j)] = ai * bj.conj();
            }
        }
        m
    }

    /// Hermitian matrix, checked against [`HERMITIAN_TOL`].
    pub fn hermitian(rows: usize, data: Vec<C64>) -> Result<Self> {
        let m = Self::from_vec(rows, rows, data)?;
        let dev = m.hermitian_deviation();
        if dev > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Second Pauli matrix σ₂ = [[0, −i], [i, 0]].
pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix {
        rows: 2,
        cols: 2,
        data: vec![ZERO, -I, I, ZERO],
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigensystem {
    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|x| x)
    }

    /// `V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mut scaled = v.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * &v.adjoint()
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn hermitian_eigensystem(a: &ComplexMatrix) -> Result<Eigensystem> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigensystem of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let scale = a.max_abs().max(1.0);
    let dev = a.hermitian_deviation();
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = a.rows;
    let mut m = a.clone();
    // Symmetrize exactly so every rotation sees a true Hermitian matrix.
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);

    let off_norm = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += m[(i, j)].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };
    let frob = a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = m[(p, q)];
                let babs = b.norm();
                if babs <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Skip rotations that cannot change the diagonal in floating point.
                if babs < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    m[(p, q)] = ZERO;
                    m[(q, p)] = ZERO;
                    continue;
                }
                let phase = b / babs;
                let theta = (aqq - app) / (2.0 * babs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) · [[c, s], [−s, c]] in the (p, q) plane.
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -s * phase.conj();
                let g_qq = c * phase.conj();
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * g_pp + mkq * g_qp;
                    m[(k, q)] = mkp * g_pq + mkq * g_qq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = g_pp.conj() * mpk + g_qp.conj() * mqk;
                    m[(q, k)] = g_pq.conj() * mpk + g_qq.conj() * mqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
        converged = off_norm(&m) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence { residual: off_norm(&m) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(Eigensystem { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigensystem(a).map(|e| e.values)
}

/// Clamp a PSD spectrum: values in `[-PSD_TOL, 0)` become zero, anything
/// more negative is an error.
pub fn clamp_psd(values: &mut [f64]) -> Result<()> {
    for x in values.iter_mut() {
        if *x < -PSD_TOL {
            return Err(Error::NotPsd { eigenvalue: *x });
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Ok(())
}

/// Principal square root of a PSD Hermitian matrix.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut eig = hermitian_eigensystem(a)?;
    clamp_psd(&mut eig.values)?;
    Ok(eig.map_spectrum(f64::sqrt))
}

/// Eigenvalues of a general square matrix via complex Schur decomposition.
pub fn general_eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    if a.rows == 0 {
        return Ok(Vec::new());
    }
    let m = a.to_nalgebra();
    let schur = nalgebra::Schur::try_new(m, f64::EPSILON, 10_000).ok_or(Error::NoConvergence { residual: f64::NAN })?;
    let (_, t) = schur.unpack();
    // For complex input the Schur form is upper triangular.
    let mut residual: f64 = 0.0;
    for j in 0..t.ncols() {
        for i in j + 1..t.nrows() {
            residual = residual.max(t[(i, j)].norm());
        }
    }
    if residual > 1e-8 * a.max_abs().max(1.0) {
        return Err(Error::NoConvergence { residual });
    }
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Interpret a spectrum that should be real and nonnegative: imaginary parts
/// below [`IMAG_TOL`] are discarded, slightly negative real parts clamped.
pub fn real_nonnegative_spectrum(values: &[C64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    for z in values {
        if z.im.abs() > IMAG_TOL {
            return Err(Error::ComplexSpectrum { imag: z.im });
        }
        out.push(z.re);
    }
    clamp_psd(&mut out)?;
    Ok(out)
}

/// Singular values of a (small) complex matrix, descending.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.rows == 0 || a.cols == 0 {
        return Vec::new();
    }
    let svd = a.to_nalgebra().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Determinant through LU decomposition.
pub fn determinant(a: &ComplexMatrix) -> C64 {
    a.to_nalgebra().determinant()
}

/// Orthonormalize the columns of `a` (Gram-Schmidt with reorthogonalization).
/// Returns `None` if the columns are numerically dependent.
pub fn orthonormalize_columns(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let mut q = a.clone();
    let (rows, cols) = (a.rows, a.cols);
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let mut proj = ZERO;
                for i in 0..rows {
                    proj += q[(i, k)].conj() * q[(i, j)];
                }
                for i in 0..rows {
                    let qik = q[(i, k)];
                    q[(i, j)] -= proj * qik;
                }
            }
        }
        let norm = (0..rows).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return None;
        }
        for i in 0..rows {
            q[(i, j)] /= norm;
        }
    }
    Some(q)
}

/// Max-norm deviation of `A†A` from the identity.
pub fn isometry_defect(a: &ComplexMatrix) -> f64 {
    let g = &a.adjoint() * a;
    g.max_abs_diff(&ComplexMatrix::identity(a.cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_spectrum() {
        let e = hermitian_eigensystem(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
    }

    #[test]
    fn diagonal_sorted_ascending() {
        let e = hermitian_eigensystem(&ComplexMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let a = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]]).unwrap();
        let e = hermitian_eigensystem(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eigensystem(&a), Err(Error::NotHermitian { .. })));
        assert!(ComplexMatrix::hermitian(2, a.into_vec()).is_err());
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = psd_sqrt(&ComplexMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::from_diag(&[2.0, 3.0])) < 1e-14);
        let id = psd_sqrt(&ComplexMatrix::identity(3)).unwrap();
        assert!(id.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn sqrt_rejects_negative() {
        let err = psd_sqrt(&ComplexMatrix::from_diag(&[1.0, -0.5])).unwrap_err();
        assert_eq!(err, Error::NotPsd { eigenvalue: -0.5 });
        // Tiny negative values are clamped.
        let s = psd_sqrt(&ComplexMatrix::from_diag(&[1.0, -1e-12])).unwrap();
        assert_eq!(s[(1, 1)], ZERO);
    }

    #[test]
    fn general_diagonal_and_nilpotent() {
        let mut ev = general_eigenvalues(&ComplexMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (k, z) in ev.iter().enumerate() {
            assert!((z - c(k as f64 + 1.0, 0.0)).norm() < 1e-12);
        }
        let nil = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        for z in general_eigenvalues(&nil).unwrap() {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn real_spectrum_filter() {
        assert_eq!(
            real_nonnegative_spectrum(&[c(1.0, 1e-10), c(-1e-12, 0.0)]).unwrap(),
            vec![1.0, 0.0]
        );
        assert!(matches!(
            real_nonnegative_spectrum(&[c(1.0, 1e-3)]),
            Err(Error::ComplexSpectrum { .. })
        ));
    }

    #[test]
    fn kron_shapes() {
        let a = ComplexMatrix::identity(2);
        let b = sigma_y();
        let k = a.kron(&b);
        assert_eq!((k.rows(), k.cols()), (4, 4));
        assert_eq!(k[(2, 3)], -I);
        assert_eq!(k[(0, 2)], ZERO);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(ComplexMatrix::from_vec(2, 2, vec![ZERO; 3]).is_err());
    }
}
