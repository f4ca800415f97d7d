//! Small dense complex linear algebra.
//!
//! Dimensions here never exceed 8 (one qubit for Alice, two for Eve), so
//! everything is a plain row-major `Vec<Complex64>`. Values are immutable
//! once built; every operation returns a fresh value.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

pub type C64 = Complex64;

/// Default normalization tolerance for state vectors.
pub const TOL_NORM: f64 = 1e-10;
/// Default tolerance for `‖M†M − I‖_max`.
pub const TOL_UNITARY: f64 = 1e-9;

/// Residual norm below which a basis-completion candidate is rejected.
const COMPLETION_ACCEPT: f64 = 1e-6;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense complex column vector.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct CVec(Vec<C64>);

impl TryFrom<Vec<C64>> for CVec {
    type Error = Error;

    fn try_from(v: Vec<C64>) -> Result<Self> {
        CVec::new(v)
    }
}

impl From<CVec> for Vec<C64> {
    fn from(v: CVec) -> Self {
        v.0
    }
}

impl fmt::Debug for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.0.iter().map(|z| (z.re, z.im)))
            .finish()
    }
}

impl CVec {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty);
        }
        Ok(CVec(entries))
    }

    pub fn from_real(entries: &[f64]) -> Self {
        assert!(!entries.is_empty(), "empty vector");
        CVec(entries.iter().map(|&x| re(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "empty vector");
        CVec(vec![C64::default(); dim])
    }

    /// Standard basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = re(1.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Self {
        self.scale(re(1.0 / self.norm()))
    }

    pub fn scale(&self, k: C64) -> Self {
        CVec(self.0.iter().map(|z| z * k).collect())
    }

    pub fn scale_re(&self, k: f64) -> Self {
        self.scale(re(k))
    }

    pub fn conj(&self) -> Self {
        CVec(self.0.iter().map(|z| z.conj()).collect())
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVec) -> Result<C64> {
        inner(self, other)
    }

    pub fn kron(&self, other: &CVec) -> CVec {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        CVec(out)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &CVec) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Distance to `other` minimized over a global phase `e^{iθ}`.
    pub fn phase_distance(&self, other: &CVec) -> f64 {
        let overlap = inner(other, self).expect("dimension mismatch");
        let phase = if overlap.norm() > 1e-300 {
            overlap / overlap.norm()
        } else {
            re(1.0)
        };
        self.max_abs_diff(&other.scale(phase))
    }

    /// Linear combination `Σ coeffs[i] · vecs[i]`.
    pub fn combine(coeffs: &[C64], vecs: &[&CVec]) -> CVec {
        assert_eq!(coeffs.len(), vecs.len());
        assert!(!vecs.is_empty());
        let dim = vecs[0].dim();
        let mut out = vec![C64::default(); dim];
        for (k, v) in coeffs.iter().zip(vecs) {
            assert_eq!(v.dim(), dim, "dimension mismatch");
            for (o, x) in out.iter_mut().zip(&v.0) {
                *o += k * x;
            }
        }
        CVec(out)
    }
}

impl Index<usize> for CVec {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for &CVec {
    type Output = CVec;

    fn add(self, rhs: &CVec) -> CVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVec {
    type Output = CVec;

    fn sub(self, rhs: &CVec) -> CVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// `⟨u|v⟩`.
pub fn inner(u: &CVec, v: &CVec) -> Result<C64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(u.0.iter().zip(&v.0).map(|(a, b)| a.conj() * b).sum())
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Serialize for CMat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[C64]> = self.data.chunks(self.cols).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<C64>>::deserialize(d)?;
        CMat::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        CMat {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = re(1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if r == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(CMat {
            rows: r,
            cols,
            data,
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| re(x)).collect())
                .collect(),
        )
        .expect("ragged or empty rows")
    }

    /// Matrix whose j-th column is `cols[j]`.
    pub fn from_columns(cols: &[CVec]) -> Result<Self> {
        let first = cols.first().ok_or(Error::Empty)?;
        let rows = first.dim();
        let mut m = Self::zeros(rows, cols.len());
        for (j, v) in cols.iter().enumerate() {
            if v.dim() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    got: v.dim(),
                });
            }
            for i in 0..rows {
                m.data[i * m.cols + j] = v[i];
            }
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> CVec {
        CVec((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn columns(&self) -> Vec<CVec> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Copy of the sub-block `[r0, r0+nr) × [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
        let mut out = CMat::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out.data[i * nc + j] = self.get(r0 + i, c0 + j);
            }
        }
        out
    }

    /// Block-diagonal `diag(a, b)`.
    pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
        let n = a.rows + b.rows;
        let m = a.cols + b.cols;
        let mut out = CMat::zeros(n, m);
        for i in 0..a.rows {
            for j in 0..a.cols {
                out.data[i * m + j] = a.get(i, j);
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                out.data[(a.rows + i) * m + a.cols + j] = b.get(i, j);
            }
        }
        out
    }

    /// Horizontal concatenation `[a | b]`.
    pub fn hstack(a: &CMat, b: &CMat) -> Result<CMat> {
        if a.rows != b.rows {
            return Err(Error::DimensionMismatch {
                expected: a.rows,
                got: b.rows,
            });
        }
        let mut cols = a.columns();
        cols.extend(b.columns());
        CMat::from_columns(&cols)
    }

    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: rhs.rows,
            });
        }
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C64::default() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.dim(),
            });
        }
        Ok(CVec(
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
                .collect(),
        ))
    }

    pub fn dagger(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn kron(&self, rhs: &CMat) -> CMat {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = CMat::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out.data[(i * rhs.rows + k) * cols + j * rhs.cols + l] = a * rhs.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, k: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn add(&self, rhs: &CMat) -> Result<CMat> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMat) -> Result<CMat> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &CMat, f: impl Fn(C64, C64) -> C64) -> Result<CMat> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: rhs.rows * rhs.cols,
            });
        }
        Ok(CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.rows, self.cols));
        }
        let g = self.dagger().matmul(self)?;
        Ok(g.max_abs_diff(&CMat::identity(self.rows)))
    }

    pub fn is_unitary(&self, tol: f64) -> Result<bool> {
        is_unitary(self, tol)
    }

    /// Number of entries with modulus above `tol`.
    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.data.iter().filter(|z| z.norm() > tol).count()
    }

    pub fn outer(u: &CVec, v: &CVec) -> CMat {
        let mut m = CMat::zeros(u.dim(), v.dim());
        for i in 0..u.dim() {
            for j in 0..v.dim() {
                m.data[i * v.dim() + j] = u[i] * v[j].conj();
            }
        }
        m
    }

    /// Hermitian defect `‖M − M†‖_max`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.dagger())
    }
}

impl Mul for &CMat {
    type Output = CMat;

    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs).expect("dimension mismatch")
    }
}

impl Mul<&CVec> for &CMat {
    type Output = CVec;

    fn mul(self, rhs: &CVec) -> CVec {
        self.apply(rhs).expect("dimension mismatch")
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kron(b)
}

pub fn dagger(m: &CMat) -> CMat {
    m.dagger()
}

/// True iff `‖m†m − I‖_max ≤ tol`.
pub fn is_unitary(m: &CMat, tol: f64) -> Result<bool> {
    Ok(m.unitarity_defect()? <= tol)
}

/// Max entrywise defect of the Gram matrix of `vecs` from the identity.
pub fn gram_defect(vecs: &[CVec]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, u) in vecs.iter().enumerate() {
        for (j, v) in vecs.iter().enumerate() {
            let g = inner(u, v).expect("dimension mismatch");
            let target = if i == j { re(1.0) } else { C64::default() };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// Extends orthonormal `seeds` to an orthonormal basis of `C^dim`.
///
/// Seeds are kept unmodified and come first. Standard basis vectors are then
/// swept in index order, orthogonalized against everything accepted so far
/// and kept when the residual norm exceeds 1e-6.
pub fn complete_orthonormal_basis(seeds: &[CVec], dim: usize) -> Result<Vec<CVec>> {
    if seeds.len() > dim {
        return Err(Error::TooManySeeds {
            count: seeds.len(),
            dim,
        });
    }
    for s in seeds {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
    }
    let defect = gram_defect(seeds);
    if defect > TOL_NORM {
        return Err(Error::NotOrthonormal(defect));
    }

    let mut out: Vec<CVec> = seeds.to_vec();
    for k in 0..dim {
        if out.len() == dim {
            break;
        }
        let mut r = CVec::basis(dim, k);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for q in &out {
                let p = inner(q, &r)?;
                r = &r - &q.scale(p);
            }
        }
        let n = r.norm();
        if n > COMPLETION_ACCEPT {
            out.push(r.scale_re(1.0 / n));
        }
    }
    if out.len() != dim {
        return Err(Error::CompletionFailed);
    }
    Ok(out)
}

/// Haar-distributed unitary from a seeded Ginibre matrix.
///
/// Columns are Gram-Schmidt orthonormalized, which is the QR factorization
/// with a positive diagonal of R.
pub fn haar_random_unitary(dim: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_unitary_with(dim, &mut rng)
}

pub fn haar_random_unitary_with<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        let cols: Vec<CVec> = (0..dim).map(|_| ginibre_vec(dim, rng)).collect();
        let mut q: Vec<CVec> = Vec::with_capacity(dim);
        let mut ok = true;
        for v in cols {
            let mut r = v;
            for _ in 0..2 {
                for prev in &q {
                    let p = inner(prev, &r).expect("same dim");
                    r = &r - &prev.scale(p);
                }
            }
            let n = r.norm();
            if n < 1e-8 {
                ok = false;
                break;
            }
            q.push(r.scale_re(1.0 / n));
        }
        if ok {
            return CMat::from_columns(&q).expect("non-empty");
        }
    }
}

fn ginibre_vec<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    CVec(
        (0..dim)
            .map(|_| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                c(a, b)
            })
            .collect(),
    )
}

/// Haar-random unit vector.
pub fn random_state<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    ginibre_vec(dim, rng).normalized()
}

/// Random Hermitian matrix (GUE-like, unit Frobenius norm).
pub fn random_hermitian<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_columns(&(0..dim).map(|_| ginibre_vec(dim, rng)).collect::<Vec<_>>())
        .expect("non-empty");
    let h = g.add(&g.dagger()).expect("square");
    let fro = h.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    h.scale(re(1.0 / fro))
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors.
pub fn hermitian_eigen(m: &CMat) -> Result<(Vec<f64>, Vec<CVec>)> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows, m.cols));
    }
    let n = m.rows;
    let na = nalgebra::DMatrix::<C64>::from_fn(n, n, |i, j| {
        // symmetrize so round-off asymmetry cannot leak in
        (m.get(i, j) + m.get(j, i).conj()) * 0.5
    });
    let eig = na.symmetric_eigen();
    let mut pairs: Vec<(f64, CVec)> = (0..n)
        .map(|k| {
            let v = CVec((0..n).map(|i| eig.eigenvectors[(i, k)]).collect());
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// `exp(iθK)` for Hermitian `K`.
pub fn expi_hermitian(k: &CMat, theta: f64) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(k)?;
    let v = CMat::from_columns(&vecs)?;
    let n = vals.len();
    let mut d = CMat::zeros(n, n);
    for (i, l) in vals.iter().enumerate() {
        d.data[i * n + i] = C64::from_polar(1.0, theta * l);
    }
    Ok(&(&v * &d) * &v.dagger())
}

/// Common single-qubit gates.
pub mod gates {
    use super::{c, re, CMat};

    pub fn identity2() -> CMat {
        CMat::identity(2)
    }

    pub fn sigma_x() -> CMat {
        CMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn sigma_y() -> CMat {
        CMat::from_rows(vec![
            vec![re(0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), re(0.0)],
        ])
        .expect("2x2")
    }

    pub fn sigma_z() -> CMat {
        CMat::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    pub fn hadamard() -> CMat {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMat::from_real_rows(&[&[h, h], &[h, -h]])
    }

    /// CNOT with the first qubit as control.
    pub fn cnot() -> CMat {
        CMat::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
    }
}
