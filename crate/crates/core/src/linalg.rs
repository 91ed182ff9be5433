//! Fixed-capacity vectors and matrices for chart computations.
//!
//! Charts have dimension at most [`MAX_DIM`], so everything lives on the stack.
//! Hot loops (geodesic integration, quadrature) allocate nothing.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: usize,
    data: [f64; MAX_DIM],
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension {dim} unsupported");
        Vector { dim, data: [0.0; MAX_DIM] }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Vector::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v.data[i] = 1.0;
        v
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut v = Vector::zeros(dim);
        for i in 0..dim {
            v.data[i] = f(i);
        }
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        (0..self.dim).map(|i| self.data[i] * other.data[i]).sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn outer(&self, other: &Vector) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.data[i] * other.data[j])
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        debug_assert!(i < self.dim);
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        debug_assert!(i < self.dim);
        &mut self.data[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(mut self, rhs: Vector) -> Vector {
        self += rhs;
        self
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.data[i] += rhs.data[i];
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(mut self, rhs: Vector) -> Vector {
        self -= rhs;
        self
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.data[i] -= rhs.data[i];
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(mut self, s: f64) -> Vector {
        for v in &mut self.data {
            *v *= s;
        }
        self
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    #[inline]
    fn mul(self, v: Vector) -> Vector {
        v * self
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        self * -1.0
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.is_empty() || v.len() > MAX_DIM {
            return Err(D::Error::custom(format!("vector length {} not in 1..={MAX_DIM}", v.len())));
        }
        Ok(Vector::from_slice(&v))
    }
}

/// Square matrix of chart dimension, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: [[f64; MAX_DIM]; MAX_DIM],
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension {dim} unsupported");
        Matrix { dim, data: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        Matrix::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Matrix::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        Matrix::from_fn(rows.len(), |i, j| rows[i][j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        Vector::from_fn(self.dim, |i| (0..self.dim).map(|j| self.data[i][j] * v[j]).sum())
    }

    /// `u^T M v`
    #[inline]
    pub fn bilinear(&self, u: &Vector, v: &Vector) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += u[i] * self.data[i][j] * v[j];
            }
        }
        s
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| (0..self.dim).map(|k| self.data[i][k] * other.data[k][j]).sum())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.data[j][i])
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| s * self.data[i][j])
    }

    /// Frobenius inner product `tr(A^T B)`.
    pub fn contract(&self, other: &Matrix) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.data[i][j] * other.data[i][j];
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.data[i][j].abs());
            }
        }
        m
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..i {
                m = m.max((self.data[i][j] - self.data[j][i]).abs());
            }
        }
        m
    }

    pub fn symmetrize(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| 0.5 * (self.data[i][j] + self.data[j][i]))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.data[i][..self.dim].to_vec()).collect()
    }

    /// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
    pub fn sym_eigenvalues(&self) -> Vector {
        let n = self.dim;
        let mut values = match n {
            1 => Vector::from_slice(&[self.data[0][0]]),
            2 => {
                let (a, b, d) = (self.data[0][0], 0.5 * (self.data[0][1] + self.data[1][0]), self.data[1][1]);
                let mean = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                Vector::from_slice(&[mean - rad, mean + rad])
            }
            _ => {
                let mut a = self.symmetrize();
                for _sweep in 0..50 {
                    let mut off = 0.0;
                    for p in 0..n {
                        for q in p + 1..n {
                            off += a.data[p][q] * a.data[p][q];
                        }
                    }
                    if off < 1e-30 * (1.0 + a.max_abs().powi(2)) {
                        break;
                    }
                    for p in 0..n {
                        for q in p + 1..n {
                            let apq = a.data[p][q];
                            if apq == 0.0 {
                                continue;
                            }
                            let theta = 0.5 * (a.data[q][q] - a.data[p][p]) / apq;
                            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                            let t = if theta == 0.0 { 1.0 } else { t };
                            let c = 1.0 / (t * t + 1.0).sqrt();
                            let s = t * c;
                            for k in 0..n {
                                let akp = a.data[k][p];
                                let akq = a.data[k][q];
                                a.data[k][p] = c * akp - s * akq;
                                a.data[k][q] = s * akp + c * akq;
                            }
                            for k in 0..n {
                                let apk = a.data[p][k];
                                let aqk = a.data[q][k];
                                a.data[p][k] = c * apk - s * aqk;
                                a.data[q][k] = s * apk + c * aqk;
                            }
                        }
                    }
                }
                Vector::from_fn(n, |i| a.data[i][i])
            }
        };
        let s = &mut values.data[..n];
        s.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        values
    }

    /// Cholesky factor `L` with `M = L L^T`, or `NotPositiveDefinite`.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut d = self.data[j][j];
            for k in 0..j {
                d -= l.data[j][k] * l.data[j][k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { min_eigenvalue: self.sym_eigenvalues()[0] });
            }
            let d = d.sqrt();
            l.data[j][j] = d;
            for i in j + 1..n {
                let mut s = self.data[i][j];
                for k in 0..j {
                    s -= l.data[i][k] * l.data[j][k];
                }
                l.data[i][j] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    /// Ratio of extreme eigenvalues for a symmetric positive definite matrix.
    pub fn condition_number(&self) -> f64 {
        let ev = self.sym_eigenvalues();
        ev[self.dim - 1] / ev[0]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i][j]
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(self, rhs: Matrix) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn solve(&self, b: &Vector) -> Vector {
        let n = self.l.dim;
        let mut z = *b;
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l.data[i][k] * z[k];
            }
            z[i] = s / self.l.data[i][i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= self.l.data[k][i] * z[k];
            }
            z[i] = s / self.l.data[i][i];
        }
        z
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.l.dim;
        let mut inv = Matrix::zeros(n);
        for j in 0..n {
            let col = self.solve(&Vector::basis(n, j));
            for i in 0..n {
                inv.data[i][j] = col[i];
            }
        }
        inv.symmetrize()
    }
}

/// Array `Γ^k_{ij}` indexed as `[k][i][j]`.
#[derive(Clone, Copy, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel { dim, data: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM] }
    }

    /// Levi-Civita type symbols `½ g^{ks}(∂_j g_is + ∂_i g_js − ∂_s g_ij)` from a
    /// metric inverse and its coordinate derivatives `dg[s] = ∂_s g`.
    pub fn from_metric_derivatives(inverse: &Matrix, dg: &[Matrix]) -> Self {
        let n = inverse.dim();
        let mut lowered = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        for s in 0..n {
            for i in 0..n {
                for j in 0..n {
                    lowered[s][i][j] = 0.5 * (dg[j][(i, s)] + dg[i][(j, s)] - dg[s][(i, j)]);
                }
            }
        }
        let mut out = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.data[k][i][j] = (0..n).map(|s| inverse[(k, s)] * lowered[s][i][j]).sum();
                }
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[k][i][j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[k][i][j] = v;
    }

    /// `Γ^k_{ij} u^i v^j` for each `k`.
    pub fn contract(&self, u: &Vector, v: &Vector) -> Vector {
        Vector::from_fn(self.dim, |k| {
            let mut s = 0.0;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    s += self.data[k][i][j] * u[i] * v[j];
                }
            }
            s
        })
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        let mut m = 0.0_f64;
        for k in 0..self.dim {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    m = m.max((self.data[k][i][j] - other.data[k][i][j]).abs());
                }
            }
        }
        m
    }
}

impl fmt::Debug for Christoffel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<Vec<Vec<f64>>> =
            (0..self.dim).map(|k| (0..self.dim).map(|i| self.data[k][i][..self.dim].to_vec()).collect()).collect();
        f.debug_list().entries(v).finish()
    }
}

/// Pairwise (cascade) summation; order of `values` fixes the result bitwise.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_and_inverts() {
        let m = Matrix::from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let ch = m.cholesky().unwrap();
        let inv = ch.inverse();
        let id = m.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        match m.cholesky() {
            Err(Error::NotPositiveDefinite { min_eigenvalue }) => assert!((min_eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jacobi_matches_characteristic_roots() {
        // diag(1,2,3) conjugated by a rotation about the z-axis.
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let r = Matrix::from_rows(&[&[c, -s, 0.0], &[s, c, 0.0], &[0.0, 0.0, 1.0]]);
        let m = r.matmul(&Matrix::diagonal(&[1.0, 2.0, 3.0])).matmul(&r.transpose());
        let ev = m.sym_eigenvalues();
        for (k, e) in [1.0, 2.0, 3.0].iter().enumerate() {
            assert!((ev[k] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_unit(8);
        for deg in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_eq!(pairwise_sum(&v).to_bits(), pairwise_sum(&v.clone()).to_bits());
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
