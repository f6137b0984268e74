//! Small dense complex matrices and a Hermitian eigensolver.
//!
//! The matrices here are at most a handful of rows, so a cyclic complex
//! Jacobi sweep is accurate and fast enough.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

pub type C<T> = Complex<T>;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![C::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let data = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        CMatrix { dim, data }
    }

    pub fn from_real(dim: usize, entries: &[T]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        CMatrix { dim, data: entries.iter().map(|&r| C::new(r, T::zero())).collect() }
    }

    /// `|v><v|`.
    pub fn outer(v: &[C<T>]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        CMatrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        (0..self.dim).map(|i| (0..self.dim).fold(C::zero(), |acc, j| acc + self[(i, j)] * v[j])).collect()
    }

    /// `<v|A|v>`.
    pub fn expectation(&self, v: &[C<T>]) -> C<T> {
        let av = self.apply(v);
        v.iter().zip(&av).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn distance(&self, other: &Self) -> T {
        (self - other).max_abs()
    }

    pub fn hermitian_defect(&self) -> T {
        self.distance(&self.adjoint())
    }

    /// Leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> Self {
        Self::from_fn(k, |i, j| self[(i, j)])
    }

    /// Eigen-decomposition of a Hermitian matrix (only the upper triangle
    /// and the real diagonal are trusted).
    ///
    /// Eigenvalues come back in descending order. Each eigenvector has its
    /// largest-magnitude component made real and positive; among
    /// components tied for largest, the first one wins.
    pub fn hermitian_eigen(&self) -> HermitianEigen<T> {
        let n = self.dim;
        let mut a = Self::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => self[(i, j)],
            std::cmp::Ordering::Equal => C::new(self[(i, i)].re, T::zero()),
            std::cmp::Ordering::Greater => self[(j, i)].conj(),
        });
        let mut v = Self::identity(n);
        let scale = a.max_abs();
        let threshold = scale * T::epsilon() * T::constant(0.5);
        for _sweep in 0..100 {
            let off = off_diagonal_max(&a);
            if off <= threshold || scale == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
        });
        let values = order.iter().map(|&k| a[(k, k)].re).collect();
        let vectors = order
            .iter()
            .map(|&k| {
                let col: Vec<C<T>> = (0..n).map(|i| v[(i, k)]).collect();
                fix_phase(col)
            })
            .collect();
        HermitianEigen { values, vectors }
    }

    /// Projector onto the span of eigenvectors whose eigenvalue is at least
    /// `-tolerance`.
    pub fn nonnegative_projector(&self, tolerance: T) -> Self {
        let eig = self.hermitian_eigen();
        let mut p = Self::zeros(self.dim);
        for (val, vec) in eig.values.iter().zip(&eig.vectors) {
            if *val >= -tolerance {
                p = &p + &Self::outer(vec);
            }
        }
        p
    }
}

fn off_diagonal_max<T: Real>(a: &CMatrix<T>) -> T {
    let mut m = T::zero();
    for i in 0..a.dim {
        for j in i + 1..a.dim {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Zeroes `a[p][q]` with the unitary `G = diag(1, e^{-iφ}) R`, where `R`
/// is the real Jacobi rotation for the phase-stripped pivot.
fn jacobi_rotate<T: Real>(a: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == T::zero() {
        return;
    }
    let phase = apq / mag;
    let one = T::one();
    let tau = (a[(q, q)].re - a[(p, p)].re) / (T::two() * mag);
    let t = if tau >= T::zero() {
        one / (tau + (one + tau * tau).sqrt())
    } else {
        -one / (-tau + (one + tau * tau).sqrt())
    };
    let c = one / (one + t * t).sqrt();
    let s = t * c;
    let phase_conj = phase.conj();
    let g_pp = C::new(c, T::zero());
    let g_pq = C::new(s, T::zero());
    let g_qp = phase_conj * (-s);
    let g_qq = phase_conj * c;
    let n = a.dim;

    // A <- A G (columns p, q)
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * g_pp + aiq * g_qp;
        a[(i, q)] = aip * g_pq + aiq * g_qq;
    }
    // A <- G^H A (rows p, q)
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = g_pp.conj() * apj + g_qp.conj() * aqj;
        a[(q, j)] = g_pq.conj() * apj + g_qq.conj() * aqj;
    }
    a[(p, q)] = C::zero();
    a[(q, p)] = C::zero();
    a[(p, p)].im = T::zero();
    a[(q, q)].im = T::zero();
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * g_pp + viq * g_qp;
        v[(i, q)] = vip * g_pq + viq * g_qq;
    }
}

/// Rotates the global phase so the first largest-magnitude component is
/// real and positive.
pub fn fix_phase<T: Real>(mut v: Vec<C<T>>) -> Vec<C<T>> {
    let max = v.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    if max == T::zero() {
        return v;
    }
    let slack = max * T::tol(1e-12);
    let lead = v.iter().position(|z| z.norm() >= max - slack).expect("maximum exists");
    let rot = v[lead].conj() / v[lead].norm();
    for z in v.iter_mut() {
        *z = *z * rot;
    }
    v[lead] = C::new(v[lead].re, T::zero());
    v
}

pub fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(C::zero(), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn normalize<T: Real>(v: &[C<T>]) -> Vec<C<T>> {
    let n = norm(v);
    v.iter().map(|z| z / n).collect()
}

/// Standard basis vector `e_index` of length `dim`.
pub fn basis<T: Real>(dim: usize, index: usize) -> Vec<C<T>> {
    let mut v = vec![C::zero(); dim];
    v[index] = C::one();
    v
}

/// First `count` columns of a Haar-random `dim x dim` unitary, obtained by
/// Gram-Schmidt on complex Gaussian vectors.
pub fn haar_orthonormal<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize, count: usize) -> Vec<Vec<C<T>>> {
    let mut out: Vec<Vec<C<T>>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v: Vec<C<T>> = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C::new(T::constant(re), T::constant(im))
            })
            .collect();
        for u in &out {
            let overlap = inner(u, &v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi = *vi - ui * overlap;
            }
        }
        let n = norm(&v);
        if n > T::tol(1e-8) {
            out.push(v.iter().map(|z| z / n).collect());
        }
    }
    out
}

/// Spectrum and eigenvectors, descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<C<T>>>,
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;

    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        CMatrix::from_fn(n, |i, j| (0..n).fold(C::zero(), |acc, k| acc + self[(i, k)] * rhs[(k, j)]))
    }
}
