//! Small dense complex linear algebra.
//!
//! Matrices are square and tiny (`n ≤ 16`). The singular value decomposition
//! follows the convention `A = V · diag(σ) · U` with `U` itself unitary (not
//! `U*`), and singular values sorted nonincreasing.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Relative tolerance used for "singular value equals one".
pub const DEFAULT_TOL: f64 = 1e-9;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

/// Complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector(DVector<C64>);

impl CVector {
    pub fn from_vec(v: Vec<C64>) -> Self {
        CVector(DVector::from_vec(v))
    }

    pub fn from_real(v: &[f64]) -> Self {
        Self::from_vec(v.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        CVector(DVector::zeros(n))
    }

    /// `i`-th standard basis vector.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = c(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn from_vector(v: DVector<C64>) -> Self {
        CVector(v)
    }

    pub fn get(&self, i: usize) -> C64 {
        self.0[i]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self, other⟩ = Σ self_i · conj(other_i)`.
    pub fn inner(&self, other: &CVector) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn add(&self, other: &CVector) -> CVector {
        CVector(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &CVector) -> CVector {
        CVector(&self.0 - &other.0)
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> CVector {
        self.scale(c(s, 0.0))
    }

    /// `z_{[s]}`: the first `s` coordinates.
    pub fn head(&self, s: usize) -> CVector {
        CVector::from_vec(self.0.iter().take(s).copied().collect())
    }

    /// `z'_{[s]}`: the coordinates after the first `s`.
    pub fn tail(&self, s: usize) -> CVector {
        CVector::from_vec(self.0.iter().skip(s).copied().collect())
    }

    /// `z'_i`: every coordinate except the `i`-th.
    pub fn without(&self, i: usize) -> CVector {
        CVector::from_vec(
            self.0
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, z)| *z)
                .collect(),
        )
    }

    pub fn concat(&self, other: &CVector) -> CVector {
        CVector::from_vec(self.0.iter().chain(other.0.iter()).copied().collect())
    }
}

impl CMatrix {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Input(format!(
                "matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(CMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("matrix rows must all have length n".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        CMatrix(DMatrix::zeros(n, n))
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let n = d.len();
        CMatrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(d[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix(DMatrix::from_fn(n, n, f))
    }

    /// Block diagonal `top ⊕ bottom`.
    pub fn block_diag(top: &CMatrix, bottom: &CMatrix) -> Self {
        let (j, k) = (top.dim(), bottom.dim());
        CMatrix::from_fn(j + k, |r, s| {
            if r < j && s < j {
                top.get(r, s)
            } else if r >= j && s >= j {
                bottom.get(r - j, s - j)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    /// Lower-right `(n-j)×(n-j)` block.
    pub fn trailing_block(&self, j: usize) -> CMatrix {
        let n = self.dim();
        CMatrix(self.0.view((j, j), (n - j, n - j)).into_owned())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix(self.0.adjoint())
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &other.0)
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        CVector(&self.0 * &v.0)
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix(&self.0 * c(s, 0.0))
    }

    /// Convex combination `(1-t)·self + t·other`.
    pub fn lerp(&self, other: &CMatrix, t: f64) -> CMatrix {
        CMatrix(&self.0 * c(1.0 - t, 0.0) + &other.0 * c(t, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector(self.0.column(j).into_owned())
    }

    pub fn singular_values(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut s: Vec<f64> = self.0.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

/// Factors of `A = V · diag(sigma) · U`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub v: CMatrix,
    pub sigma: Vec<f64>,
    pub u: CMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> CMatrix {
        self.v
            .mul(&CMatrix::diag_real(&self.sigma))
            .mul(&self.u)
    }
}

fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::Input("matrix has non-finite entries".into()))
    }
}

/// Singular value decomposition `A = V Σ U`, `σ` nonincreasing.
///
/// The bidiagonal solver occasionally returns inaccurate factors for complex
/// matrices with repeated singular values; every result is checked and, when
/// the check fails, recomputed from the Hermitian eigendecomposition of `A*A`.
pub fn svd(a: &CMatrix) -> Result<SvdFactors> {
    ensure_finite(a)?;
    let direct = svd_bidiagonal(a);
    if factors_accurate(a, &direct) {
        return Ok(direct);
    }
    let gram = svd_from_gram(a);
    if factors_accurate(a, &gram) {
        Ok(gram)
    } else {
        Err(Error::Domain("singular value decomposition did not converge".into()))
    }
}

const SVD_CHECK: f64 = 1e-11;

fn factors_accurate(a: &CMatrix, f: &SvdFactors) -> bool {
    let n = a.dim();
    let id = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);
    f.reconstruct().max_abs_diff(a) <= SVD_CHECK * scale
        && f.v.adjoint().mul(&f.v).max_abs_diff(&id) <= SVD_CHECK
        && f.u.mul(&f.u.adjoint()).max_abs_diff(&id) <= SVD_CHECK
}

fn svd_bidiagonal(a: &CMatrix) -> SvdFactors {
    let n = a.dim();
    let dec = a.0.clone().svd(true, true);
    let left = dec.u.expect("left singular vectors requested");
    let right = dec.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let sigma = order.iter().map(|&i| dec.singular_values[i].max(0.0)).collect();
    let v = DMatrix::from_fn(n, n, |r, k| left[(r, order[k])]);
    let u = DMatrix::from_fn(n, n, |k, col| right[(order[k], col)]);
    SvdFactors {
        v: CMatrix(v),
        sigma,
        u: CMatrix(u),
    }
}

/// Right singular vectors from `A*A = W Λ W*`; `σ_i = |A w_i|` and
/// `v_i = A w_i / σ_i`, completed to a unitary.
fn svd_from_gram(a: &CMatrix) -> SvdFactors {
    let n = a.dim();
    let eig = SymmetricEigen::new(a.0.adjoint() * &a.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let w: Vec<CVector> = order
        .iter()
        .map(|&k| CVector(eig.eigenvectors.column(k).into_owned()))
        .collect();
    let w = orthonormalize(&w, 0.0);
    let images: Vec<CVector> = w.iter().map(|x| a.mul_vec(x)).collect();
    let sigma: Vec<f64> = images.iter().map(CVector::norm).collect();
    let floor = 1e-10 * sigma.first().copied().unwrap_or(0.0).max(1e-300);
    let mut left: Vec<CVector> = Vec::with_capacity(n);
    for (img, &s) in images.iter().zip(&sigma) {
        if s > floor {
            left.push(img.scale_real(1.0 / s));
        }
    }
    let mut candidates = left;
    candidates.extend((0..n).map(|i| CVector::basis(n, i)));
    let left = orthonormalize(&candidates, 1e-8);
    let v = DMatrix::from_fn(n, n, |r, k| left[k].get(r));
    let u = DMatrix::from_fn(n, n, |k, col| w[k].get(col).conj());
    SvdFactors {
        v: CMatrix(v),
        sigma,
        u: CMatrix(u),
    }
}

/// Spectral norm `‖A‖ = max σ`.
pub fn operator_norm(a: &CMatrix) -> f64 {
    a.singular_values().first().copied().unwrap_or(0.0)
}

/// Number of singular values strictly above `tol`.
pub fn rank_with_tol(a: &CMatrix, tol: f64) -> usize {
    a.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of `{ζ : |Aζ| = |ζ|} = ker(I − A*A)`.
///
/// Computed from the Hermitian eigendecomposition of `A*A`; eigenvectors whose
/// singular value `√λ` lies within `tol` of one are kept.
pub fn fixed_subspace(a: &CMatrix, tol: f64) -> Result<Vec<CVector>> {
    ensure_finite(a)?;
    let norm = operator_norm(a);
    if norm > 1.0 + tol {
        return Err(Error::Domain(format!(
            "symbol cannot induce a bounded operator: ‖A‖ = {norm} > 1"
        )));
    }
    let gram = a.0.adjoint() * &a.0;
    let eig = SymmetricEigen::new(gram);
    let mut basis = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let sigma = lambda.max(0.0).sqrt();
        if sigma >= 1.0 - tol {
            basis.push(CVector(eig.eigenvectors.column(k).into_owned()));
        }
    }
    Ok(orthonormalize(&basis, 1e-12))
}

/// Modified Gram–Schmidt with one reorthogonalization pass; drops vectors whose
/// residual norm falls below `tol`.
pub fn orthonormalize(vectors: &[CVector], tol: f64) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let proj = w.inner(q);
                w = w.sub(&q.scale(proj));
            }
        }
        let nrm = w.norm();
        if nrm > tol {
            out.push(w.scale_real(1.0 / nrm));
        }
    }
    out
}

/// Orthogonal projector `Σ q q*` onto the span of an orthonormal family.
pub fn projector(n: usize, basis: &[CVector]) -> CMatrix {
    let mut p = DMatrix::<C64>::zeros(n, n);
    for q in basis {
        p += &q.0 * q.0.adjoint();
    }
    CMatrix(p)
}

/// All singular values within `tol` of one.
pub fn is_unitary(a: &CMatrix, tol: f64) -> bool {
    a.singular_values().iter().all(|s| (s - 1.0).abs() <= tol)
}

// JSON: matrices are arrays of rows of [re, im] pairs; vectors arrays of pairs.

impl Serialize for CVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.0.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVector::from_vec(pairs.iter().map(|p| c(p[0], p[1])).collect()))
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let rows: Vec<Vec<[f64; 2]>> = (0..n)
            .map(|i| (0..n).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| c(p[0], p[1])).collect())
            .collect();
        CMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod random {
    //! Seeded random matrices and vectors for tests, examples and the self-test.

    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / 2f64.sqrt()
    }

    pub fn vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
        CVector::from_vec((0..n).map(|_| gaussian(rng)).collect())
    }

    /// Uniform direction scaled to length `radius`.
    pub fn vector_with_norm<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> CVector {
        let v = vector(n, rng);
        v.scale_real(radius / v.norm().max(1e-300))
    }

    pub fn matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        CMatrix::from_fn(n, |_, _| gaussian(rng))
    }

    /// Haar-distributed unitary via QR with phase correction.
    pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let g = matrix(n, rng);
        let qr = g.0.qr();
        let q = qr.q();
        let r = qr.r();
        let phases = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let d = r[(i, i)];
                if d.norm() > 0.0 {
                    d / d.norm()
                } else {
                    c(1.0, 0.0)
                }
            } else {
                c(0.0, 0.0)
            }
        });
        CMatrix(q * phases)
    }

    /// Random matrix rescaled to operator norm exactly `norm`.
    pub fn with_norm<R: Rng + ?Sized>(n: usize, norm: f64, rng: &mut R) -> CMatrix {
        let m = matrix(n, rng);
        let current = operator_norm(&m);
        m.scale(norm / current)
    }

    /// Diagonal singular values in `[0, max)`, sorted nonincreasing.
    pub fn contraction_values<R: Rng + ?Sized>(k: usize, max: f64, rng: &mut R) -> Vec<f64> {
        let mut g: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * max).collect();
        g.sort_by(|a, b| b.total_cmp(a));
        g
    }
}
