//! Small dense linear algebra for dimensions one to three.
//!
//! Everything here is a value type. Matrices keep a fixed `3 x 3` backing
//! array and a logical dimension, so they are `Copy` and never allocate.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("dimension {dim} not in 1..=3")))
    }
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct Vector {
    dim: usize,
    data: [f64; MAX_DIM],
}

impl Vector {
    pub fn new(components: &[f64]) -> Result<Self> {
        check_dim(components.len())?;
        let mut data = [0.0; MAX_DIM];
        data[..components.len()].copy_from_slice(components);
        Ok(Self { dim: components.len(), data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self { dim, data: [0.0; MAX_DIM] }
    }

    /// Standard basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[k] = 1.0;
        v
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut v = Self::zeros(dim);
        for i in 0..dim {
            v.data[i] = f(i);
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    pub fn cross(&self, other: &Vector) -> Result<Vector> {
        if self.dim != 3 || other.dim != 3 {
            return Err(Error::InvalidInput("cross product needs dimension 3".into()));
        }
        let (a, b) = (&self.data, &other.data);
        Ok(Vector {
            dim: 3,
            data: [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ],
        })
    }

    /// Dyadic product `self ⊗ other`.
    pub fn outer(&self, other: &Vector) -> SquareMatrix {
        debug_assert_eq!(self.dim, other.dim);
        SquareMatrix::from_fn(self.dim, |i, j| self.data[i] * other.data[j])
    }

    pub fn normalized(&self) -> Result<UnitVector> {
        UnitVector::normalize(self)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.as_slice().to_vec()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(&v)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        let dim = self.dim;
        &mut self.data[..dim][i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        Vector::from_fn(self.dim, |i| self.data[i] + rhs.data[i])
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        Vector::from_fn(self.dim, |i| self.data[i] - rhs.data[i])
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        Vector::from_fn(self.dim, |i| self.data[i] * s)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// A vector of Euclidean length one (to within `1e-12`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector(Vector);

impl UnitVector {
    pub const NORM_TOLERANCE: f64 = 1e-12;

    pub fn new(v: Vector) -> Result<Self> {
        let norm = v.norm();
        if !v.is_finite() || (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::InvalidInput(format!("vector of norm {norm} is not a unit vector")));
        }
        Ok(Self(v))
    }

    pub fn normalize(v: &Vector) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidInput("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self(*v * (1.0 / norm)))
    }

    pub fn vector(&self) -> &Vector {
        &self.0
    }
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    dim: usize,
    data: [[f64; MAX_DIM]; MAX_DIM],
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} not in 1..=3");
        Self { dim, data: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row slices; every row must have `rows.len()` entries
    /// and every entry must be finite.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            m.data[i][..dim].copy_from_slice(row);
        }
        if !m.is_finite() {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(m)
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        check_dim(entries.len())?;
        Ok(Self::from_fn(entries.len(), |i, j| if i == j { entries[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(f64::is_finite)
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).flat_map(move |i| self.data[i][..self.dim].iter().copied())
    }

    pub fn row(&self, i: usize) -> Vector {
        Vector::from_fn(self.dim, |j| self.data[i][j])
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_fn(self.dim, |i| self.data[i][j])
    }

    pub fn from_columns(columns: &[Vector]) -> Result<Self> {
        let dim = columns.len();
        check_dim(dim)?;
        if columns.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidInput("column dimensions disagree".into()));
        }
        Ok(Self::from_fn(dim, |i, j| columns[j][i]))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.data[j][i])
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    /// Frobenius inner product `⟨A, B⟩ = tr(Aᵀ B)`.
    pub fn inner(&self, other: &SquareMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.entries().zip(other.entries()).map(|(a, b)| a * b).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn det(&self) -> f64 {
        let a = &self.data;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Cofactor matrix by signed minor expansion; `Cof A = (det A) A^{-T}` when
    /// `A` is invertible, and well defined when it is not.
    pub fn cofactor(&self) -> SquareMatrix {
        let a = &self.data;
        match self.dim {
            1 => Self::identity(1),
            2 => Self::from_fn(2, |i, j| {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[1 - i][1 - j]
            }),
            _ => Self::from_fn(3, |i, j| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                // Cyclic index choice absorbs the (-1)^{i+j} sign.
                a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]
            }),
        }
    }

    pub fn inverse(&self) -> Result<SquareMatrix> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Domain(format!("matrix with determinant {det:e} is not invertible")));
        }
        Ok(self.cofactor().transpose() * (1.0 / det))
    }

    /// `A^{-T}`.
    pub fn inverse_transpose(&self) -> Result<SquareMatrix> {
        Ok(self.inverse()?.transpose())
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.dim, v.dim());
        Vector::from_fn(self.dim, |i| (0..self.dim).map(|k| self.data[i][k] * v[k]).sum())
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn sym(&self) -> SymmetricTensor {
        SymmetricTensor::symmetrize(self)
    }

    /// `A − (tr A / n) Id`.
    pub fn deviatoric(&self) -> SquareMatrix {
        *self - Self::identity(self.dim) * (self.trace() / self.dim as f64)
    }

    /// Returns the matrix with at most `MAX_DIM` leading entries per row.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.data[i][..self.dim].to_vec()).collect()
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SquareMatrix::from_rows(&rows)
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.dim && j < self.dim, "index ({i},{j}) out of bounds");
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.dim && j < self.dim, "index ({i},{j}) out of bounds");
        &mut self.data[i][j]
    }
}

impl Add for SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: SquareMatrix) -> SquareMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        SquareMatrix::from_fn(self.dim, |i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl Sub for SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: SquareMatrix) -> SquareMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        SquareMatrix::from_fn(self.dim, |i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl Mul for SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: SquareMatrix) -> SquareMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        SquareMatrix::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.data[i][k] * rhs.data[k][j]).sum()
        })
    }
}

impl Mul<f64> for SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, s: f64) -> SquareMatrix {
        SquareMatrix::from_fn(self.dim, |i, j| self.data[i][j] * s)
    }
}

impl Neg for SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        self * -1.0
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

/// Symmetric matrix; symmetry holds exactly because every constructor
/// symmetrizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricTensor(SquareMatrix);

impl SymmetricTensor {
    pub fn symmetrize(m: &SquareMatrix) -> Self {
        let mut out = *m;
        for i in 0..m.dim {
            for j in (i + 1)..m.dim {
                let v = 0.5 * (m.data[i][j] + m.data[j][i]);
                out.data[i][j] = v;
                out.data[j][i] = v;
            }
        }
        Self(out)
    }

    /// Accepts a matrix that is symmetric up to `1e-12·‖m‖`.
    pub fn try_from_matrix(m: &SquareMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let skew = (*m - m.transpose()).norm();
        if skew > 1e-12 * m.norm() {
            return Err(Error::InvalidInput(format!("matrix is not symmetric (skew part {skew:e})")));
        }
        Ok(Self::symmetrize(m))
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        Ok(Self(SquareMatrix::diag(entries)?))
    }

    pub fn identity(dim: usize) -> Self {
        Self(SquareMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(SquareMatrix::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }
}

impl Index<(usize, usize)> for SymmetricTensor {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Eigenvalues in descending order together with orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: [f64; MAX_DIM],
    eigenvectors: SquareMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.dim]
    }

    pub fn eigenvectors(&self) -> &SquareMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vector {
        self.eigenvectors.column(k)
    }

    /// `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> SymmetricTensor {
        self.map_eigenvalues(|x| x)
    }

    fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SymmetricTensor {
        let q = &self.eigenvectors;
        let vals: Vec<f64> = self.eigenvalues().iter().map(|&l| f(l)).collect();
        let m = SquareMatrix::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| q[(i, k)] * vals[k] * q[(j, k)]).sum()
        });
        SymmetricTensor::symmetrize(&m)
    }
}

/// Determinant of a 2x2 block `a c − b²` using a fused multiply-add to recover
/// the rounding error of `b²`.
fn det2_sym(a: f64, b: f64, c: f64) -> f64 {
    let w = b * b;
    let err = (-b).mul_add(b, w);
    a.mul_add(c, -w) + err
}

fn eig2(a: f64, b: f64, c: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let mean = 0.5 * (a + c);
    let radius = (0.5 * (a - c)).hypot(b);
    let det = det2_sym(a, b, c);
    // Larger-magnitude root first, the other one from the determinant.
    let (l1, l2) = if mean >= 0.0 {
        let l1 = mean + radius;
        (l1, if l1 != 0.0 { det / l1 } else { mean - radius })
    } else {
        let l2 = mean - radius;
        (if l2 != 0.0 { det / l2 } else { mean + radius }, l2)
    };
    let (l1, l2) = if l1 >= l2 { (l1, l2) } else { (l2, l1) };

    let v1 = if b == 0.0 {
        if a >= c {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else {
        let p = [b, l1 - a];
        let q = [l1 - c, b];
        let (p2, q2) = (p[0].hypot(p[1]), q[0].hypot(q[1]));
        if p2 >= q2 {
            [p[0] / p2, p[1] / p2]
        } else {
            [q[0] / q2, q[1] / q2]
        }
    };
    let v2 = [-v1[1], v1[0]];
    ([l1, l2], [v1, v2])
}

fn char_poly(s: &SquareMatrix, lambda: f64) -> (f64, f64) {
    let shifted = *s - SquareMatrix::identity(3) * lambda;
    let value = shifted.det();
    // d/dλ det(S − λI) = −tr(adj(S − λI)).
    let derivative = -shifted.cofactor().trace();
    (value, derivative)
}

fn polish_root(s: &SquareMatrix, lambda: f64) -> f64 {
    let (p, dp) = char_poly(s, lambda);
    if dp == 0.0 || !dp.is_finite() || p == 0.0 {
        return lambda;
    }
    let candidate = lambda - p / dp;
    let (pc, _) = char_poly(s, candidate);
    if pc.is_finite() && pc.abs() < p.abs() {
        candidate
    } else {
        lambda
    }
}

fn eigenvalues3(s: &SquareMatrix) -> [f64; 3] {
    let a = &s.data;
    let q = s.trace() / 3.0;
    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q, q, q];
    }
    let b = (*s - SquareMatrix::identity(3) * q) * (1.0 / p);
    let r = (b.det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    let mut l = [polish_root(s, l1), polish_root(s, l2), polish_root(s, l3)];
    l.sort_by(|x, y| y.total_cmp(x));
    l
}

/// Unit null vector of the rank-two matrix `M` from the largest cross product
/// of two of its rows.
fn null_vector3(m: &SquareMatrix) -> Option<Vector> {
    let rows = [m.row(0), m.row(1), m.row(2)];
    let candidates = [
        rows[0].cross(&rows[1]).ok()?,
        rows[1].cross(&rows[2]).ok()?,
        rows[2].cross(&rows[0]).ok()?,
    ];
    let best = candidates.iter().max_by(|x, y| x.norm().total_cmp(&y.norm()))?;
    let n = best.norm();
    (n > 0.0 && n.is_finite()).then(|| *best * (1.0 / n))
}

/// Any unit vector orthogonal to the unit vector `u` (dimension 3).
fn orthogonal_unit(u: &Vector) -> Vector {
    let k = (0..3)
        .min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
        .unwrap_or(0);
    let e = Vector::basis(3, k);
    let w = e - *u * u.dot(&e);
    w * (1.0 / w.norm())
}

fn eigenvectors3(s: &SquareMatrix, l: &[f64; 3]) -> SquareMatrix {
    let scale = l[0].abs().max(l[2].abs());
    if l[0] - l[2] <= f64::EPSILON * scale {
        return SquareMatrix::identity(3);
    }
    // Solve for the eigenvector of the most isolated eigenvalue, then the
    // remaining 2x2 problem on its orthogonal complement.
    let isolated = if l[0] - l[1] >= l[1] - l[2] { 0 } else { 2 };
    let shifted = *s - SquareMatrix::identity(3) * l[isolated];
    let u = null_vector3(&shifted).unwrap_or_else(|| Vector::basis(3, isolated));
    let v = orthogonal_unit(&u);
    let w = u.cross(&v).expect("dimension 3");
    let sv = s.mul_vec(&v);
    let sw = s.mul_vec(&w);
    let (_, vecs) = eig2(v.dot(&sv), v.dot(&sw), w.dot(&sw));
    let x = v * vecs[0][0] + w * vecs[0][1];
    let y = v * vecs[1][0] + w * vecs[1][1];
    let cols = if isolated == 0 { [u, x, y] } else { [x, y, u] };
    SquareMatrix::from_columns(&cols).expect("dimension 3")
}

fn sign_normalize(v: Vector) -> Vector {
    match v.as_slice().iter().find(|x| x.abs() > 1e-14) {
        Some(&first) if first < 0.0 => -v,
        _ => v,
    }
}

fn finish_decomposition(dim: usize, vals: &[f64], vecs: &[Vector]) -> SpectralDecomposition {
    let mut order: Vec<usize> = (0..dim).collect();
    let normalized: Vec<Vector> = vecs.iter().map(|v| sign_normalize(*v)).collect();
    order.sort_by(|&i, &j| {
        vals[j].total_cmp(&vals[i]).then_with(|| {
            let (a, b) = (normalized[i].as_slice(), normalized[j].as_slice());
            b.iter()
                .zip(a)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut eigenvalues = [0.0; MAX_DIM];
    let mut columns = Vec::with_capacity(dim);
    for (k, &i) in order.iter().enumerate() {
        eigenvalues[k] = vals[i];
        columns.push(normalized[i]);
    }
    SpectralDecomposition {
        dim,
        eigenvalues,
        eigenvectors: SquareMatrix::from_columns(&columns).expect("valid dimension"),
    }
}

/// Symmetric eigendecomposition: closed form in 2D, trigonometric
/// characteristic-polynomial roots with one Newton polish in 3D.
///
/// Exactly decoupled rows (both off-diagonal entries zero) are split off
/// before the 3x3 solve so that graded block-diagonal inputs keep full
/// relative accuracy in every eigenvalue.
pub fn sym_eig(s: &SymmetricTensor) -> Result<SpectralDecomposition> {
    let m = s.matrix();
    if !m.is_finite() {
        return Err(Error::InvalidInput("non-finite entries in symmetric tensor".into()));
    }
    let a = &m.data;
    match m.dim {
        1 => Ok(finish_decomposition(1, &[a[0][0]], &[Vector::basis(1, 0)])),
        2 => {
            let (vals, vecs) = eig2(a[0][0], a[0][1], a[1][1]);
            let v: Vec<Vector> = vecs.iter().map(|c| Vector::new(c).expect("dim 2")).collect();
            Ok(finish_decomposition(2, &vals, &v))
        }
        _ => {
            let decoupled = (0..3).find(|&k| {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                a[k][i] == 0.0 && a[k][j] == 0.0
            });
            if let Some(k) = decoupled {
                let (i, j) = if k == 0 { (1, 2) } else if k == 1 { (0, 2) } else { (0, 1) };
                let (vals, vecs) = eig2(a[i][i], a[i][j], a[j][j]);
                let embed = |c: [f64; 2]| {
                    let mut v = Vector::zeros(3);
                    v[i] = c[0];
                    v[j] = c[1];
                    v
                };
                let all_vals = [a[k][k], vals[0], vals[1]];
                let all_vecs = [Vector::basis(3, k), embed(vecs[0]), embed(vecs[1])];
                return Ok(finish_decomposition(3, &all_vals, &all_vecs));
            }
            let vals = eigenvalues3(m);
            let q = eigenvectors3(m, &vals);
            let cols = [q.column(0), q.column(1), q.column(2)];
            Ok(finish_decomposition(3, &vals, &cols))
        }
    }
}

/// Applies a scalar function to a symmetric tensor through its spectral
/// projectors. Eigenvalues that agree to `1e-12` relative share one projector,
/// so the result does not depend on the eigenvector choice inside a repeated
/// eigenspace. A non-finite `f(λ)` is reported as a domain error.
pub fn primary_matrix_function(
    s: &SymmetricTensor,
    f: impl Fn(f64) -> f64,
) -> Result<SymmetricTensor> {
    let spec = sym_eig(s)?;
    apply_spectral(&spec, f)
}

pub(crate) fn apply_spectral(
    spec: &SpectralDecomposition,
    f: impl Fn(f64) -> f64,
) -> Result<SymmetricTensor> {
    let dim = spec.dim();
    let vals = spec.eigenvalues();
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = SquareMatrix::zeros(dim);
    let mut k = 0;
    while k < dim {
        let mut end = k + 1;
        while end < dim && (vals[k] - vals[end]).abs() <= 1e-12 * scale {
            end += 1;
        }
        let mean = vals[k..end].iter().sum::<f64>() / (end - k) as f64;
        let fv = f(mean);
        if !fv.is_finite() {
            return Err(Error::Domain(format!("function undefined at eigenvalue {mean:e}")));
        }
        for idx in k..end {
            let v = spec.eigenvector(idx);
            out = out + v.outer(&v) * fv;
        }
        k = end;
    }
    Ok(SymmetricTensor::symmetrize(&out))
}

/// Principal logarithm of a symmetric positive definite tensor.
pub fn spd_log(s: &SymmetricTensor) -> Result<SymmetricTensor> {
    let spec = sym_eig(s)?;
    let min = spec.eigenvalues()[spec.dim() - 1];
    if min <= 0.0 {
        return Err(Error::NotSpd { min_eigenvalue: min });
    }
    apply_spectral(&spec, f64::ln)
}

/// Matrix exponential of a symmetric tensor.
pub fn sym_exp(s: &SymmetricTensor) -> Result<SymmetricTensor> {
    primary_matrix_function(s, f64::exp)
}

/// `S − (tr S / n) Id`.
pub fn deviatoric(s: &SymmetricTensor) -> SymmetricTensor {
    SymmetricTensor::symmetrize(&s.matrix().deviatoric())
}

pub fn cofactor(a: &SquareMatrix) -> SquareMatrix {
    a.cofactor()
}

/// Cross-product matrix: `anti(v) w = v × w`.
pub fn anti(v: &Vector) -> Result<SquareMatrix> {
    if v.dim() != 3 {
        return Err(Error::InvalidInput("anti needs dimension 3".into()));
    }
    SquareMatrix::from_rows(&[[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
}

/// `cos θ Id + sin θ anti(ϑ) + (1 − cos θ) ϑ⊗ϑ`, the rotation by `θ` about the
/// unit axis `ϑ`.
pub fn rotation_about_axis(axis: &UnitVector, theta: f64) -> Result<SquareMatrix> {
    let v = axis.vector();
    if v.dim() != 3 {
        return Err(Error::InvalidInput("rotation axis must be three dimensional".into()));
    }
    let (s, c) = theta.sin_cos();
    Ok(SquareMatrix::identity(3) * c + anti(v)? * s + v.outer(v) * (1.0 - c))
}

/// Singular value decomposition `F = L diag(σ) Rᵀ` with `σ` descending.
#[derive(Clone, Copy, Debug)]
pub struct SingularSystem {
    dim: usize,
    values: [f64; MAX_DIM],
    pub left: SquareMatrix,
    pub right: SquareMatrix,
}

impl SingularSystem {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    /// `R diag(f(σ)) Rᵀ`, a function of the right stretch `U`.
    pub fn right_function(&self, f: impl Fn(f64) -> f64) -> Result<SymmetricTensor> {
        spectral_sum(&self.right, self.values(), f)
    }

    /// `L diag(f(σ)) Lᵀ`, a function of the left stretch `V`.
    pub fn left_function(&self, f: impl Fn(f64) -> f64) -> Result<SymmetricTensor> {
        spectral_sum(&self.left, self.values(), f)
    }
}

fn spectral_sum(q: &SquareMatrix, vals: &[f64], f: impl Fn(f64) -> f64) -> Result<SymmetricTensor> {
    let dim = vals.len();
    let mut fv = [0.0; MAX_DIM];
    for (k, &v) in vals.iter().enumerate() {
        fv[k] = f(v);
        if !fv[k].is_finite() {
            return Err(Error::Domain(format!("function undefined at singular value {v:e}")));
        }
    }
    let m = SquareMatrix::from_fn(dim, |i, j| (0..dim).map(|k| q[(i, k)] * fv[k] * q[(j, k)]).sum());
    Ok(SymmetricTensor::symmetrize(&m))
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Column rotations give every singular value to high relative accuracy when
/// `F = B D` with `D` diagonal and `B` well conditioned, which is the shape of
/// the graded rank-one probes `F + t ξ⊗η` used throughout the lab.
pub fn singular_system(f: &SquareMatrix) -> Result<SingularSystem> {
    if !f.is_finite() {
        return Err(Error::InvalidInput("non-finite entries in matrix".into()));
    }
    let n = f.dim;
    let mut w = *f;
    let mut r = SquareMatrix::identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    alpha += w.data[i][p] * w.data[i][p];
                    beta += w.data[i][q] * w.data[i][q];
                    gamma += w.data[i][p] * w.data[i][q];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                for m in [&mut w, &mut r] {
                    for i in 0..n {
                        let (xp, xq) = (m.data[i][p], m.data[i][q]);
                        m.data[i][p] = c * xp - s * xq;
                        m.data[i][q] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<(f64, usize)> = (0..n).map(|j| (w.column(j).norm(), j)).collect();
    sigma.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut values = [0.0; MAX_DIM];
    let mut left_cols: Vec<Vector> = Vec::with_capacity(n);
    let mut right_cols: Vec<Vector> = Vec::with_capacity(n);
    for (k, &(s, j)) in sigma.iter().enumerate() {
        values[k] = s;
        right_cols.push(r.column(j));
        left_cols.push(if s > 0.0 { w.column(j) * (1.0 / s) } else { Vector::zeros(n) });
    }
    complete_basis(&mut left_cols);
    Ok(SingularSystem {
        dim: n,
        values,
        left: SquareMatrix::from_columns(&left_cols)?,
        right: SquareMatrix::from_columns(&right_cols)?,
    })
}

/// Replaces zero columns by unit vectors orthogonal to the others.
fn complete_basis(cols: &mut [Vector]) {
    let n = cols.len();
    for k in 0..n {
        if cols[k].norm() > 0.5 {
            continue;
        }
        for e in 0..n {
            let mut cand = Vector::basis(n, e);
            for (j, c) in cols.iter().enumerate() {
                if j != k && c.norm() > 0.5 {
                    cand = cand - *c * c.dot(&cand);
                }
            }
            let norm = cand.norm();
            if norm > 1e-6 {
                cols[k] = cand * (1.0 / norm);
                break;
            }
        }
    }
}

fn require_orientation(f: &SquareMatrix) -> Result<()> {
    let det = f.det();
    if det > 0.0 {
        Ok(())
    } else {
        Err(Error::Orientation { det })
    }
}

/// Singular system of a deformation gradient, rejecting `det F ≤ 0`.
pub fn stretch_system(f: &SquareMatrix) -> Result<SingularSystem> {
    require_orientation(f)?;
    singular_system(f)
}

/// `U = √(FᵀF)`.
pub fn right_stretch(f: &SquareMatrix) -> Result<SymmetricTensor> {
    stretch_system(f)?.right_function(|x| x)
}

/// `V = √(FFᵀ)`.
pub fn left_stretch(f: &SquareMatrix) -> Result<SymmetricTensor> {
    stretch_system(f)?.left_function(|x| x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn max_abs_diff(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
        (*a - *b).to_rows().into_iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn diagonal_eigenproblem_is_exact() {
        let s = SymmetricTensor::diag(&[E.powi(16), E.powi(4)]).unwrap();
        let spec = sym_eig(&s).unwrap();
        assert_eq!(spec.eigenvalues(), &[E.powi(16), E.powi(4)]);
        assert_eq!(*spec.eigenvectors(), SquareMatrix::identity(2));

        let f = SquareMatrix::diag(&[E.powi(8), E.powi(2)]).unwrap();
        let b = (f * f.transpose()).sym();
        let spec = sym_eig(&b).unwrap();
        assert_relative_eq!(spec.eigenvalues()[0], E.powi(16), max_relative = 1e-15);
        assert_relative_eq!(spec.eigenvalues()[1], E.powi(4), max_relative = 1e-15);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let s = SymmetricTensor::diag(&[1.0, f64::NAN]).unwrap();
        assert!(matches!(sym_eig(&s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn repeated_eigenvalues_give_orthonormal_vectors() {
        let s = SymmetricTensor::diag(&[2.0, 2.0, 5.0]).unwrap();
        let spec = sym_eig(&s).unwrap();
        assert_eq!(spec.eigenvalues(), &[5.0, 2.0, 2.0]);
        let q = spec.eigenvectors();
        assert!(max_abs_diff(&(q.transpose() * *q), &SquareMatrix::identity(3)) < 1e-14);

        let iso = SymmetricTensor::identity(3);
        let spec = sym_eig(&iso).unwrap();
        assert_eq!(spec.eigenvalues(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn log_of_identity_and_diagonal() {
        let zero = spd_log(&SymmetricTensor::identity(3)).unwrap();
        assert_eq!(*zero.matrix(), SquareMatrix::zeros(3));

        let l = spd_log(&SymmetricTensor::diag(&[E.powi(16), E.powi(4)]).unwrap()).unwrap();
        assert_relative_eq!(l[(0, 0)], 16.0, max_relative = 1e-15);
        assert_relative_eq!(l[(1, 1)], 4.0, max_relative = 1e-15);

        let l = spd_log(&SymmetricTensor::diag(&[E, E, E.powi(-2)]).unwrap()).unwrap();
        assert_relative_eq!(l[(0, 0)], 1.0, max_relative = 1e-15);
        assert_relative_eq!(l[(1, 1)], 1.0, max_relative = 1e-15);
        assert_relative_eq!(l[(2, 2)], -2.0, max_relative = 1e-15);
    }

    #[test]
    fn log_rejects_indefinite() {
        let s = SymmetricTensor::diag(&[1.0, -1.0]).unwrap();
        assert!(matches!(spd_log(&s), Err(Error::NotSpd { .. })));
        let r = primary_matrix_function(&s, f64::ln);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn deviatoric_examples() {
        assert_eq!(*deviatoric(&SymmetricTensor::identity(3)).matrix(), SquareMatrix::zeros(3));
        let d = SymmetricTensor::diag(&[1.0, 1.0, -2.0]).unwrap();
        assert_eq!(deviatoric(&d), d);
        let r3 = 3f64.sqrt();
        let d = SymmetricTensor::diag(&[r3, 0.0, -r3]).unwrap();
        assert_eq!(deviatoric(&d), d);
        assert_relative_eq!(d.norm().powi(2), 6.0, max_relative = 1e-15);
    }

    #[test]
    fn cofactor_examples() {
        assert_eq!(cofactor(&SquareMatrix::identity(3)), SquareMatrix::identity(3));
        let xi = Vector::new(&[1.0, -2.0, 0.5]).unwrap();
        let eta = Vector::new(&[3.0, 0.25, -1.0]).unwrap();
        assert_eq!(cofactor(&xi.outer(&eta)).norm(), 0.0);
        let a = SquareMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(cofactor(&a), SquareMatrix::from_rows(&[[4.0, -3.0], [-2.0, 1.0]]).unwrap());
    }

    #[test]
    fn rotation_examples() {
        let axis = Vector::new(&[0.0, 5.0, 2.0]).unwrap().normalized().unwrap();
        let q = rotation_about_axis(&axis, PI / 2.0).unwrap();
        let s = 29f64.sqrt();
        let expected = SquareMatrix::from_rows(&[
            [0.0, -2.0, 5.0],
            [2.0, 25.0 / s, 10.0 / s],
            [-5.0, 10.0 / s, 4.0 / s],
        ])
        .unwrap()
            * (1.0 / s);
        assert!(max_abs_diff(&q, &expected) < 1e-15, "{q:?}");

        let q = rotation_about_axis(&axis, 0.0).unwrap();
        assert_eq!(q, SquareMatrix::identity(3));

        let e3 = UnitVector::new(Vector::basis(3, 2)).unwrap();
        let q = rotation_about_axis(&e3, PI / 2.0).unwrap();
        let expected =
            SquareMatrix::from_rows(&[[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(max_abs_diff(&q, &expected) < 1e-16);
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        let v = Vector::new(&[0.0, 1.0, 1.0]).unwrap();
        assert!(UnitVector::new(v).is_err());
        let v2 = Vector::new(&[1.0, 0.0]).unwrap().normalized().unwrap();
        assert!(rotation_about_axis(&v2, 1.0).is_err());
    }

    #[test]
    fn stretch_tensors_of_diagonal_gradient() {
        let f = SquareMatrix::diag(&[E.powi(8), E.powi(2)]).unwrap();
        let u = right_stretch(&f).unwrap();
        assert_relative_eq!(u[(0, 0)], E.powi(8), max_relative = 1e-15);
        assert_relative_eq!(u[(1, 1)], E.powi(2), max_relative = 1e-15);
        assert_eq!(u[(0, 1)], 0.0);
        assert_eq!(*left_stretch(&SquareMatrix::identity(3)).unwrap().matrix(), SquareMatrix::identity(3));
    }

    #[test]
    fn reflection_is_rejected() {
        let f = SquareMatrix::diag(&[1.0, -1.0]).unwrap();
        assert!(matches!(right_stretch(&f), Err(Error::Orientation { .. })));
        assert!(matches!(left_stretch(&f), Err(Error::Orientation { .. })));
    }

    #[test]
    fn graded_svd_keeps_relative_accuracy() {
        // diag(1, e^20, e^15) perturbed by a rank-one term of the form ξ cᵀ F.
        let f = SquareMatrix::diag(&[1.0, E.powi(20), E.powi(15)]).unwrap();
        let xi = Vector::new(&[0.3, -0.2, 0.7]).unwrap();
        let c = Vector::new(&[0.5, 0.1, -0.4]).unwrap();
        let g = f + xi.outer(&(f.transpose().mul_vec(&c)));
        let svd = singular_system(&g).unwrap();
        let product: f64 = svd.values().iter().product();
        // g = (Id + ξ⊗c) F, so det g = (1 + c·ξ) e^35
        assert_relative_eq!(product, (1.0 + c.dot(&xi)) * E.powi(35), max_relative = 1e-12);
    }
}
