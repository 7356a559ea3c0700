//! Pseudo-Euclidean inner-product spaces, dense tensors with index
//! gymnastics, orthonormal frames and anisotropic sampling.

use crate::error::{Error, Result};
use crate::linalg::{expm, max_abs, random_vector, seeded_rng, uniform_pm1, Matrix, Vector};
use serde::Serialize;

/// A real vector space with a nondegenerate symmetric bilinear form.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    dim: usize,
    metric: Matrix,
    inverse: Matrix,
    signature: (usize, usize),
}

impl MetricSpace {
    /// Validates symmetry and invertibility; the signature is read off the
    /// eigenvalue signs.
    pub fn new(metric: Matrix) -> Result<Self> {
        let dim = metric.nrows();
        if dim == 0 || metric.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "metric must be a nonempty square matrix, got {}x{}",
                metric.nrows(),
                metric.ncols()
            )));
        }
        let asym = max_abs(&(&metric - metric.transpose()));
        if asym > 1e-12 * max_abs(&metric).max(1.0) {
            return Err(Error::Signature(format!("metric not symmetric (residual {asym:e})")));
        }
        let eig = metric.clone().symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if eig.eigenvalues.iter().any(|v| v.abs() <= 1e-12 * scale.max(1e-300)) {
            return Err(Error::Signature("metric is degenerate".into()));
        }
        let p = eig.eigenvalues.iter().filter(|v| **v > 0.0).count();
        let inverse = metric
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Signature("metric is not invertible".into()))?;
        Ok(Self { dim, metric, inverse, signature: (p, dim - p) })
    }

    /// Diagonal metric with the given diagonal entries.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Matrix {
        &self.metric
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn inner(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.metric * v))
    }

    pub fn norm2(&self, v: &Vector) -> f64 {
        self.inner(v, v)
    }

    /// Musical isomorphism v ↦ g(v, ·).
    pub fn flat(&self, v: &Vector) -> Vector {
        &self.metric * v
    }

    pub fn sharp(&self, w: &Vector) -> Vector {
        &self.inverse * w
    }

    /// Diagonal entries when the metric is diagonal with entries ±1.
    pub fn standard_signs(&self) -> Option<Vec<f64>> {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let v = self.metric[(i, j)];
                if i == j && (v.abs() - 1.0).abs() > 1e-14 || i != j && v != 0.0 {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.metric[(i, i)]).collect())
    }

    /// g-adjoint of an endomorphism: g(Ax, y) = g(x, A* y).
    pub fn adjoint(&self, a: &Matrix) -> Matrix {
        &self.inverse * a.transpose() * &self.metric
    }
}

/// Diagonal metric with `p` entries +1 followed by `q` entries −1.
pub fn make_standard_metric(p: usize, q: usize) -> Result<MetricSpace> {
    if p + q == 0 {
        return Err(Error::InvalidDimension("p + q must be at least 1".into()));
    }
    let diag: Vec<f64> = (0..p + q).map(|i| if i < p { 1.0 } else { -1.0 }).collect();
    MetricSpace::from_diagonal(&diag)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variance {
    Covariant,
    Contravariant,
}

impl Variance {
    fn name(self) -> &'static str {
        match self {
            Variance::Covariant => "covariant",
            Variance::Contravariant => "contravariant",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexMove {
    Lower,
    Raise,
}

/// Row-major dense multi-index array; slot 0 is the slowest index.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dim: usize,
    variance: Vec<Variance>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(dim: usize, variance: Vec<Variance>) -> Self {
        let len = dim.pow(variance.len() as u32);
        Self { dim, variance, data: vec![0.0; len] }
    }

    pub fn covariant(dim: usize, rank: usize) -> Self {
        Self::zeros(dim, vec![Variance::Covariant; rank])
    }

    pub fn from_data(dim: usize, variance: Vec<Variance>, data: Vec<f64>) -> Result<Self> {
        let expected = dim.pow(variance.len() as u32);
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: data.len() });
        }
        Ok(Self { dim, variance, data })
    }

    /// Fills a covariant tensor from a function of the multi-index.
    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::covariant(dim, rank);
        let mut idx = vec![0usize; rank];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            for s in (0..rank).rev() {
                idx[s] += 1;
                if idx[s] < dim {
                    break;
                }
                idx[s] = 0;
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs_slice(&self.data)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|v| *v *= c);
        t
    }

    /// Componentwise `self - other`; variances and dims must agree.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut t = self.clone();
        t.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a -= b);
        Ok(t)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut t = self.clone();
        t.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(t)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.variance.len() != other.variance.len() {
            return Err(Error::DimensionMismatch { expected: self.data.len(), got: other.data.len() });
        }
        Ok(())
    }

    /// Replaces slot `slot` by `m` applied on that index:
    /// out[.., i, ..] = Σ_j m[(i, j)] t[.., j, ..].
    pub fn apply_on_slot(&self, slot: usize, m: &Matrix) -> Self {
        let d = self.dim;
        let stride = d.pow((self.rank() - slot - 1) as u32);
        let block = stride * d;
        let mut out = self.clone();
        for base in (0..self.data.len()).step_by(block) {
            for inner in 0..stride {
                for i in 0..d {
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += m[(i, j)] * self.data[base + j * stride + inner];
                    }
                    out.data[base + i * stride + inner] = acc;
                }
            }
        }
        out
    }

    /// Evaluates a fully covariant tensor on the given vectors.
    pub fn eval(&self, args: &[&Vector]) -> f64 {
        assert_eq!(args.len(), self.rank());
        let mut acc = self.data.clone();
        let d = self.dim;
        // contract from the last slot inward
        for v in args.iter().rev() {
            let n = acc.len() / d;
            acc = (0..n).map(|k| (0..d).map(|j| acc[k * d + j] * v[j]).sum()).collect();
        }
        acc[0]
    }

    /// Contracts all slots but the last with the given vectors, returning
    /// the remaining covector components.
    pub fn partial_eval(&self, args: &[&Vector]) -> Vector {
        assert_eq!(args.len() + 1, self.rank());
        let d = self.dim;
        let mut out = Vector::zeros(d);
        let mut idx = vec![0usize; self.rank()];
        for k in 0..self.data.len() {
            let w: f64 = args.iter().enumerate().map(|(s, v)| v[idx[s]]).product();
            out[idx[self.rank() - 1]] += w * self.data[k];
            for s in (0..self.rank()).rev() {
                idx[s] += 1;
                if idx[s] < d {
                    break;
                }
                idx[s] = 0;
            }
        }
        out
    }
}

/// Lowers (metric) or raises (inverse metric) one slot.
pub fn lower_raise(
    t: &DenseTensor,
    slot: usize,
    direction: IndexMove,
    space: &MetricSpace,
) -> Result<DenseTensor> {
    if slot >= t.rank() {
        return Err(Error::InvalidDimension(format!("slot {slot} out of range for rank {}", t.rank())));
    }
    if t.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: t.dim() });
    }
    let found = t.variance[slot];
    let (needed, result, m, action) = match direction {
        IndexMove::Lower => (Variance::Contravariant, Variance::Covariant, space.metric(), "lower"),
        IndexMove::Raise => (Variance::Covariant, Variance::Contravariant, space.inverse(), "raise"),
    };
    if found != needed {
        return Err(Error::SlotVariance { slot, found: found.name(), action });
    }
    let mut out = t.apply_on_slot(slot, m);
    out.variance[slot] = result;
    Ok(out)
}

/// Orthonormal frame: ⟨e_r, e_t⟩ = δ_rt ε^r.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub vectors: Vec<Vector>,
    pub signs: Vec<f64>,
}

impl Frame {
    /// Coordinate frame of a standard diagonal metric.
    pub fn standard(space: &MetricSpace) -> Result<Self> {
        let signs = space
            .standard_signs()
            .ok_or_else(|| Error::Precondition("frames require a diagonal ±1 metric".into()))?;
        let d = space.dim();
        let vectors = (0..d).map(|i| Vector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
        Ok(Self { vectors, signs })
    }

    /// Max deviation of the Gram matrix from diag(signs).
    pub fn orthonormality_residual(&self, space: &MetricSpace) -> f64 {
        let mut res: f64 = 0.0;
        for (r, u) in self.vectors.iter().enumerate() {
            for (t, v) in self.vectors.iter().enumerate() {
                let want = if r == t { self.signs[r] } else { 0.0 };
                res = res.max((space.inner(u, v) - want).abs());
            }
        }
        res
    }

    pub fn check(&self, space: &MetricSpace, tol: f64) -> Result<()> {
        if self.vectors.len() != space.dim() || self.signs.len() != space.dim() {
            return Err(Error::Frame(f64::INFINITY));
        }
        let r = self.orthonormality_residual(space);
        if r > tol {
            return Err(Error::Frame(r));
        }
        Ok(())
    }
}

/// Pseudo-orthonormal frame obtained by applying exp(G⁻¹K), K skew, to the
/// coordinate frame of a standard diagonal metric.
pub fn random_frame(space: &MetricSpace, seed: u64) -> Result<Frame> {
    let base = Frame::standard(space)?;
    let d = space.dim();
    let mut rng = seeded_rng(seed);
    let mut k = Matrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.6 * uniform_pm1(&mut rng);
            k[(i, j)] = v;
            k[(j, i)] = -v;
        }
    }
    let l = expm(&(space.inverse() * k));
    let vectors = (0..d).map(|i| l.column(i).into_owned()).collect();
    Ok(Frame { vectors, signs: base.signs })
}

/// c₁₂(S)(Z) = Σ_r ε^r S(e_r, e_r, Z) for a covariant rank-3 tensor.
pub fn contract12(s: &DenseTensor, frame: &Frame, space: &MetricSpace) -> Result<Vector> {
    if s.rank() != 3 || s.variance().iter().any(|v| *v != Variance::Covariant) {
        return Err(Error::InvalidDimension("contract12 needs a (0,3) tensor".into()));
    }
    if s.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: s.dim() });
    }
    frame.check(space, 1e-10)?;
    let mut out = Vector::zeros(space.dim());
    for (e, eps) in frame.vectors.iter().zip(&frame.signs) {
        out += s.partial_eval(&[e, e]) * *eps;
    }
    Ok(out)
}

/// Seeded vector with |⟨v,v⟩| ≥ 0.1 at unit coordinate norm.
pub fn random_anisotropic_vector(space: &MetricSpace, seed: u64) -> Vector {
    let d = space.dim();
    let mut rng = seeded_rng(seed);
    for _ in 0..1000 {
        let v = random_vector(&mut rng, d);
        let n = v.norm();
        if n < 1e-3 {
            continue;
        }
        let v = v / n;
        if space.norm2(&v).abs() >= 0.1 {
            return v;
        }
    }
    // fallback: coordinate vector with the largest |g_ii|, else an eigenvector
    let (i, gii) = (0..d)
        .map(|i| (i, space.metric()[(i, i)]))
        .fold((0, 0.0_f64), |a, b| if b.1.abs() > a.1.abs() { b } else { a });
    if gii.abs() >= 0.1 {
        return Vector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
    }
    let eig = space.metric().clone().symmetric_eigen();
    let k = eig.eigenvalues.iamax();
    eig.eigenvectors.column(k).into_owned()
}

/// g-orthonormal basis (vector, sign) of the orthogonal complement of the
/// span of `vecs`. The complement must be nondegenerate.
pub fn orthogonal_complement(space: &MetricSpace, vecs: &[Vector]) -> Result<Vec<(Vector, f64)>> {
    let d = space.dim();
    let mut c = Matrix::zeros(vecs.len().max(1), d);
    for (i, v) in vecs.iter().enumerate() {
        c.set_row(i, &(space.metric() * v).transpose());
    }
    let basis = crate::linalg::nullspace(&c, 1e-10);
    let b = Matrix::from_columns(&basis);
    let gram = b.transpose() * space.metric() * &b;
    let eig = gram.symmetric_eigen();
    let mut out = Vec::with_capacity(basis.len());
    for k in 0..eig.eigenvalues.len() {
        let lam = eig.eigenvalues[k];
        if lam.abs() < 1e-10 {
            return Err(Error::Precondition("orthogonal complement is degenerate".into()));
        }
        let v = &b * eig.eigenvectors.column(k) / lam.abs().sqrt();
        out.push((v, lam.signum()));
    }
    Ok(out)
}
