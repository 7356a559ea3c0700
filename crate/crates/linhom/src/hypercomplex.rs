//! ε-complex numbers, (para-)quaternions, matrices over them and their real
//! left-multiplication expansions, plus signed Hermitian products.
//!
//! Conventions: i² = −1, j² = k² = ε₂, ij = k. Scalars act on column vectors
//! by left multiplication.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use std::fmt::Debug;

fn check_unit_sign(eps: f64) -> Result<()> {
    if eps == 1.0 || eps == -1.0 {
        Ok(())
    } else {
        Err(Error::AlgebraMismatch(format!("unit square must be ±1, got {eps}")))
    }
}

/// a + u b with u² = eps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsComplex {
    pub re: f64,
    pub im: f64,
    pub eps: f64,
}

impl EpsComplex {
    pub fn new(re: f64, im: f64, eps: f64) -> Result<Self> {
        check_unit_sign(eps)?;
        Ok(Self { re, im, eps })
    }
}

/// w + x i + y j + z k with signs (ε₁, ε₂, ε₃) = (−1, e2, e2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub e2: f64,
}

impl EpsQuaternion {
    pub fn new(w: f64, x: f64, y: f64, z: f64, e2: f64) -> Result<Self> {
        check_unit_sign(e2)?;
        Ok(Self { w, x, y, z, e2 })
    }

    pub fn from_eps(coeffs: [f64; 4], eps: [f64; 3]) -> Result<Self> {
        if eps[0] != -1.0 || eps[1] != eps[2] {
            return Err(Error::AlgebraMismatch(format!(
                "eps triple must be (-1, e, e), got {eps:?}"
            )));
        }
        Self::new(coeffs[0], coeffs[1], coeffs[2], coeffs[3], eps[1])
    }

    pub fn from_coeffs(c: [f64; 4], e2: f64) -> Self {
        Self { w: c[0], x: c[1], y: c[2], z: c[3], e2 }
    }

    pub fn coeffs(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn eps(&self) -> [f64; 3] {
        [-1.0, self.e2, self.e2]
    }

    /// Basis element 1, i, j or k (index 0..4).
    pub fn unit(index: usize, e2: f64) -> Self {
        let mut c = [0.0; 4];
        c[index] = 1.0;
        Self::from_coeffs(c, e2)
    }

    /// Norm form q q̄ = w² + x² − e2 (y² + z²).
    pub fn norm_form(&self) -> f64 {
        self.w * self.w + self.x * self.x - self.e2 * (self.y * self.y + self.z * self.z)
    }
}

/// Common interface of the scalar algebras.
pub trait HyperScalar: Copy + Debug + PartialEq {
    /// Real dimension of the algebra.
    const REAL_DIM: usize;
    fn zero_like(&self) -> Self;
    fn try_mul(&self, other: &Self) -> Result<Self>;
    fn try_add(&self, other: &Self) -> Result<Self>;
    fn conj(&self) -> Self;
    fn scale(&self, c: f64) -> Self;
    /// Matrix of q ↦ self·q on the real coordinates.
    fn left_matrix(&self) -> Matrix;
    /// Gram matrix of the norm form in real coordinates.
    fn norm_gram(&self) -> Matrix;
}

impl HyperScalar for EpsComplex {
    const REAL_DIM: usize = 2;

    fn zero_like(&self) -> Self {
        Self { re: 0.0, im: 0.0, eps: self.eps }
    }

    fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.eps != o.eps {
            return Err(Error::AlgebraMismatch("ε-complex factors with different ε".into()));
        }
        Ok(Self {
            re: self.re * o.re + self.eps * self.im * o.im,
            im: self.re * o.im + self.im * o.re,
            eps: self.eps,
        })
    }

    fn try_add(&self, o: &Self) -> Result<Self> {
        if self.eps != o.eps {
            return Err(Error::AlgebraMismatch("ε-complex summands with different ε".into()));
        }
        Ok(Self { re: self.re + o.re, im: self.im + o.im, eps: self.eps })
    }

    fn conj(&self) -> Self {
        Self { re: self.re, im: -self.im, eps: self.eps }
    }

    fn scale(&self, c: f64) -> Self {
        Self { re: c * self.re, im: c * self.im, eps: self.eps }
    }

    fn left_matrix(&self) -> Matrix {
        Matrix::from_row_slice(2, 2, &[self.re, self.eps * self.im, self.im, self.re])
    }

    fn norm_gram(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -self.eps]))
    }
}

/// Product with the unit table i² = −1, j² = k² = e2, ij = k.
fn qmul(a: [f64; 4], b: [f64; 4], e2: f64) -> [f64; 4] {
    let [w1, x1, y1, z1] = a;
    let [w2, x2, y2, z2] = b;
    [
        w1 * w2 - x1 * x2 + e2 * y1 * y2 + e2 * z1 * z2,
        w1 * x2 + x1 * w2 - e2 * y1 * z2 + e2 * z1 * y2,
        w1 * y2 + y1 * w2 - x1 * z2 + z1 * x2,
        w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2,
    ]
}

impl HyperScalar for EpsQuaternion {
    const REAL_DIM: usize = 4;

    fn zero_like(&self) -> Self {
        Self::from_coeffs([0.0; 4], self.e2)
    }

    fn try_mul(&self, o: &Self) -> Result<Self> {
        quat_mul(self, o)
    }

    fn try_add(&self, o: &Self) -> Result<Self> {
        if self.e2 != o.e2 {
            return Err(Error::AlgebraMismatch("quaternion summands from different algebras".into()));
        }
        Ok(Self::from_coeffs(
            [self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z],
            self.e2,
        ))
    }

    fn conj(&self) -> Self {
        quat_conj(self)
    }

    fn scale(&self, c: f64) -> Self {
        Self::from_coeffs([c * self.w, c * self.x, c * self.y, c * self.z], self.e2)
    }

    fn left_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(4, 4);
        for c in 0..4 {
            let col = qmul(self.coeffs(), Self::unit(c, self.e2).coeffs(), self.e2);
            for r in 0..4 {
                m[(r, c)] = col[r];
            }
        }
        m
    }

    fn norm_gram(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -self.e2, -self.e2]))
    }
}

pub fn quat_mul(a: &EpsQuaternion, b: &EpsQuaternion) -> Result<EpsQuaternion> {
    if a.e2 != b.e2 {
        return Err(Error::AlgebraMismatch("quaternion factors from different algebras".into()));
    }
    Ok(EpsQuaternion::from_coeffs(qmul(a.coeffs(), b.coeffs(), a.e2), a.e2))
}

pub fn quat_conj(a: &EpsQuaternion) -> EpsQuaternion {
    EpsQuaternion::from_coeffs([a.w, -a.x, -a.y, -a.z], a.e2)
}

/// Square matrix over a scalar algebra, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HMatrix<T: HyperScalar> {
    n: usize,
    entries: Vec<T>,
}

impl<T: HyperScalar> HMatrix<T> {
    pub fn zeros(n: usize, like: T) -> Self {
        Self { n, entries: vec![like.zero_like(); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                entries.push(f(r, c));
            }
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.entries[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.entries[r * self.n + c] = v;
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: o.n });
        }
        let n = self.n;
        let mut out = Self::zeros(n, self.entries[0]);
        for r in 0..n {
            for c in 0..n {
                let mut acc = self.get(r, 0).zero_like();
                for k in 0..n {
                    acc = acc.try_add(&self.get(r, k).try_mul(&o.get(k, c))?)?;
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.n, |r, c| self.get(c, r).conj())
    }
}

/// Block expansion replacing each scalar by its left-multiplication matrix.
pub fn real_matrix_expansion<T: HyperScalar>(m: &HMatrix<T>) -> Matrix {
    let b = T::REAL_DIM;
    let n = m.n();
    let mut out = Matrix::zeros(b * n, b * n);
    for r in 0..n {
        for c in 0..n {
            out.view_mut((b * r, b * c), (b, b)).copy_from(&m.get(r, c).left_matrix());
        }
    }
    out
}

/// Real quaternion-matrix expansion from a sparse list of entries.
pub fn quat_block_matrix(n: usize, e2: f64, entries: &[((usize, usize), EpsQuaternion)]) -> Matrix {
    let mut out = Matrix::zeros(4 * n, 4 * n);
    for ((r, c), q) in entries {
        let mut v = out.view_mut((4 * r, 4 * c), (4, 4));
        v += q.left_matrix();
        debug_assert_eq!(q.e2, e2);
    }
    out
}

/// ⟨q, q′⟩ = −Σ_{i≤r} q_i q̄′_i + Σ_{j>r} q_j q̄′_j (quaternions), or
/// Σ q_i q̄′_i (para-quaternions).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedHermitianForm {
    pub n: usize,
    pub r: usize,
    pub e2: f64,
}

impl SignedHermitianForm {
    pub fn new(n: usize, r: usize, e2: f64) -> Result<Self> {
        check_unit_sign(e2)?;
        if r > n {
            return Err(Error::Signature(format!("negativity index {r} exceeds n = {n}")));
        }
        let r = if e2 > 0.0 { 0 } else { r };
        Ok(Self { n, r, e2 })
    }

    pub fn slot_sign(&self, i: usize) -> f64 {
        if i < self.r {
            -1.0
        } else {
            1.0
        }
    }

    pub fn eval(&self, q: &[EpsQuaternion], p: &[EpsQuaternion]) -> Result<EpsQuaternion> {
        if q.len() != self.n || p.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: q.len().min(p.len()) });
        }
        let mut acc = EpsQuaternion::from_coeffs([0.0; 4], self.e2);
        for i in 0..self.n {
            acc = acc.try_add(&quat_mul(&q[i], &p[i].conj())?.scale(self.slot_sign(i)))?;
        }
        Ok(acc)
    }
}

/// Σ_{ij} q_i Σ_ij q̄′_j for a real symmetric Σ.
pub fn sigma_form<T: HyperScalar>(sigma: &Matrix, q: &[T], p: &[T]) -> Result<T> {
    let n = sigma.nrows();
    if q.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.len().min(p.len()) });
    }
    let mut acc = q[0].zero_like();
    for i in 0..n {
        for j in 0..n {
            if sigma[(i, j)] != 0.0 {
                acc = acc.try_add(&q[i].try_mul(&p[j].conj())?.scale(sigma[(i, j)]))?;
            }
        }
    }
    Ok(acc)
}

/// Real basis (f_k) with f_kᵀ Σ f_l = ±δ_kl for a Σ made of ±1 diagonal slots
/// and anti-diagonal 2×2 blocks. Each block contributes (e_a ± e_b)/√2.
/// Positive vectors come first, each group in index order.
pub fn sigma_orthonormal_basis(sigma: &Matrix) -> Result<Vec<(Vector, f64)>> {
    let n = sigma.nrows();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let unit = |i: usize| Vector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
    let mut seen = vec![false; n];
    for a in 0..n {
        if seen[a] {
            continue;
        }
        let partners: Vec<usize> = (0..n).filter(|&b| b != a && sigma[(a, b)] != 0.0).collect();
        match (sigma[(a, a)], partners.as_slice()) {
            (v, []) if v.abs() == 1.0 => {
                seen[a] = true;
                if v > 0.0 { pos.push((unit(a), 1.0)) } else { neg.push((unit(a), -1.0)) }
            }
            (v, [b]) if v == 0.0 && sigma[(*b, *b)] == 0.0 && sigma[(a, *b)] == 1.0 && sigma[(*b, a)] == 1.0 => {
                seen[a] = true;
                seen[*b] = true;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                pos.push(((unit(a) + unit(*b)) * h, 1.0));
                neg.push(((unit(a) - unit(*b)) * h, -1.0));
            }
            _ => {
                return Err(Error::Signature(format!(
                    "unsupported Hermitian matrix layout at slot {a}"
                )))
            }
        }
    }
    pos.extend(neg);
    Ok(pos)
}

/// P with columns from `sigma_orthonormal_basis` and the diagonal of PᵀΣP.
pub fn sigma_congruence(sigma: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let basis = sigma_orthonormal_basis(sigma)?;
    let n = sigma.nrows();
    let mut p = Matrix::zeros(n, n);
    for (k, (v, _)) in basis.iter().enumerate() {
        p.set_column(k, v);
    }
    Ok((p, basis.iter().map(|(_, s)| *s).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, seeded_rng, uniform_pm1};
    use proptest::prelude::*;

    fn q(c: [f64; 4], e2: f64) -> EpsQuaternion {
        EpsQuaternion::from_coeffs(c, e2)
    }

    fn random_q(rng: &mut rand_chacha::ChaCha8Rng, e2: f64) -> EpsQuaternion {
        q([uniform_pm1(rng), uniform_pm1(rng), uniform_pm1(rng), uniform_pm1(rng)], e2)
    }

    /// Products of units derived by hand from ij = k, i² = −1, j² = k² = e2.
    fn unit_table(e2: f64) -> [[(f64, usize); 4]; 4] {
        [
            [(1.0, 0), (1.0, 1), (1.0, 2), (1.0, 3)],
            [(1.0, 1), (-1.0, 0), (1.0, 3), (-1.0, 2)],
            [(1.0, 2), (-1.0, 3), (e2, 0), (-e2, 1)],
            [(1.0, 3), (1.0, 2), (e2, 1), (e2, 0)],
        ]
    }

    #[test]
    fn unit_table_reproduced() {
        for e2 in [-1.0, 1.0] {
            let t = unit_table(e2);
            for a in 0..4 {
                for b in 0..4 {
                    let got = quat_mul(&EpsQuaternion::unit(a, e2), &EpsQuaternion::unit(b, e2)).unwrap();
                    let (c, k) = t[a][b];
                    assert_eq!(got, EpsQuaternion::unit(k, e2).scale(c), "{a}{b} e2={e2}");
                }
            }
        }
    }

    #[test]
    fn named_products() {
        for e2 in [-1.0, 1.0] {
            let ij = quat_mul(&EpsQuaternion::unit(1, e2), &EpsQuaternion::unit(2, e2)).unwrap();
            assert_eq!(ij, EpsQuaternion::unit(3, e2));
        }
        let jj = quat_mul(&EpsQuaternion::unit(2, 1.0), &EpsQuaternion::unit(2, 1.0)).unwrap();
        assert_eq!(jj, EpsQuaternion::unit(0, 1.0));
        assert_eq!(quat_conj(&EpsQuaternion::unit(0, -1.0)), EpsQuaternion::unit(0, -1.0));
        assert_eq!(quat_conj(&q([0.0, 1.0, 1.0, 0.0], -1.0)), q([0.0, -1.0, -1.0, 0.0], -1.0));
    }

    #[test]
    fn mismatched_algebras_error() {
        let a = EpsQuaternion::unit(1, -1.0);
        let b = EpsQuaternion::unit(1, 1.0);
        assert!(matches!(quat_mul(&a, &b), Err(Error::AlgebraMismatch(_))));
        assert!(EpsQuaternion::from_eps([0.0; 4], [-1.0, 1.0, -1.0]).is_err());
        let c = EpsComplex::new(1.0, 0.0, 1.0).unwrap();
        let d = EpsComplex::new(1.0, 0.0, -1.0).unwrap();
        assert!(c.try_mul(&d).is_err());
    }

    #[test]
    fn associativity_sweep() {
        let mut rng = seeded_rng(11);
        for e2 in [-1.0, 1.0] {
            for _ in 0..100 {
                let (a, b, c) = (random_q(&mut rng, e2), random_q(&mut rng, e2), random_q(&mut rng, e2));
                let l = quat_mul(&quat_mul(&a, &b).unwrap(), &c).unwrap();
                let r = quat_mul(&a, &quat_mul(&b, &c).unwrap()).unwrap();
                for (x, y) in l.coeffs().iter().zip(r.coeffs()) {
                    assert!((x - y).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn complex_unit_expansion() {
        let i = EpsComplex::new(0.0, 1.0, -1.0).unwrap();
        let m = real_matrix_expansion(&HMatrix::from_fn(1, |_, _| i));
        assert_eq!(m, Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let one = EpsQuaternion::unit(0, -1.0);
        let id = HMatrix::from_fn(3, |r, c| if r == c { one } else { one.zero_like() });
        assert_eq!(real_matrix_expansion(&id), Matrix::identity(12, 12));
    }

    #[test]
    fn expansion_is_homomorphism() {
        let mut rng = seeded_rng(5);
        for e2 in [-1.0, 1.0] {
            for _ in 0..20 {
                let a = HMatrix::from_fn(2, |_, _| random_q(&mut rng, e2));
                let b = HMatrix::from_fn(2, |_, _| random_q(&mut rng, e2));
                let lhs = real_matrix_expansion(&a.try_mul(&b).unwrap());
                let rhs = real_matrix_expansion(&a) * real_matrix_expansion(&b);
                assert!(max_abs(&(lhs - rhs)) < 1e-13);
            }
        }
    }

    #[test]
    fn conjugate_transpose_under_expansion() {
        let mut rng = seeded_rng(6);
        // definite algebras: conjugate transpose maps to transpose
        let a = HMatrix::from_fn(3, |_, _| random_q(&mut rng, -1.0));
        let lhs = real_matrix_expansion(&a.conj_transpose());
        assert!(max_abs(&(lhs - real_matrix_expansion(&a).transpose())) < 1e-14);
        let c = HMatrix::from_fn(3, |_, _| EpsComplex::new(uniform_pm1(&mut rng), uniform_pm1(&mut rng), -1.0).unwrap());
        let lhs = real_matrix_expansion(&c.conj_transpose());
        assert!(max_abs(&(lhs - real_matrix_expansion(&c).transpose())) < 1e-14);
        // split algebras: twisted by the norm-form Gram matrix
        for s in 0..20 {
            let p = random_q(&mut seeded_rng(100 + s), 1.0);
            let k = p.norm_gram();
            let want = &k * p.left_matrix().transpose() * &k;
            assert!(max_abs(&(p.conj().left_matrix() - want)) < 1e-14);
            let e = EpsComplex::new(0.3, -0.7 + s as f64, 1.0).unwrap();
            let k = e.norm_gram();
            let want = &k * e.left_matrix().transpose() * &k;
            assert!(max_abs(&(e.conj().left_matrix() - want)) < 1e-14);
        }
        // and the naive rule genuinely fails there
        let e = EpsComplex::new(0.0, 1.0, 1.0).unwrap();
        assert!(max_abs(&(e.conj().left_matrix() - e.left_matrix().transpose())) > 1.0);
    }

    #[test]
    fn definite_norm_is_multiplicative() {
        let mut rng = seeded_rng(8);
        for _ in 0..50 {
            let (a, b) = (random_q(&mut rng, -1.0), random_q(&mut rng, -1.0));
            let ab = quat_mul(&a, &b).unwrap();
            assert!((ab.norm_form() - a.norm_form() * b.norm_form()).abs() < 1e-13);
        }
    }

    #[test]
    fn signed_form_matches_anti_diagonal_sigma() {
        // Σ = diag(1, ε-block) has one negative direction after congruence
        let sigma = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let (p, signs) = sigma_congruence(&sigma).unwrap();
        assert_eq!(signs, vec![1.0, 1.0, -1.0]);
        assert!(max_abs(&(p.transpose() * &sigma * &p - Matrix::from_diagonal(&Vector::from_vec(signs.clone())))) < 1e-15);
        let form = SignedHermitianForm::new(3, 1, -1.0).unwrap();
        let mut rng = seeded_rng(2);
        for _ in 0..10 {
            let u: Vec<EpsQuaternion> = (0..3).map(|_| random_q(&mut rng, -1.0)).collect();
            let v: Vec<EpsQuaternion> = (0..3).map(|_| random_q(&mut rng, -1.0)).collect();
            // coordinates in the adapted basis, negatives moved to the front
            let apply = |w: &[EpsQuaternion]| -> Vec<EpsQuaternion> {
                (0..3)
                    .map(|r| {
                        let mut acc = w[0].zero_like();
                        for k in 0..3 {
                            acc = acc.try_add(&w[k].scale(p[(r, k)])).unwrap();
                        }
                        acc
                    })
                    .collect()
            };
            let lhs = sigma_form(&sigma, &apply(&u), &apply(&v)).unwrap();
            let perm = |w: &[EpsQuaternion]| vec![w[2], w[0], w[1]];
            let rhs = form.eval(&perm(&u), &perm(&v)).unwrap();
            for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn conj_involutive_and_antiautomorphic(a in proptest::array::uniform4(-5.0..5.0f64),
                                              b in proptest::array::uniform4(-5.0..5.0f64),
                                              para in any::<bool>()) {
            let e2 = if para { 1.0 } else { -1.0 };
            let (a, b) = (q(a, e2), q(b, e2));
            prop_assert_eq!(quat_conj(&quat_conj(&a)), a);
            let l = quat_conj(&quat_mul(&a, &b).unwrap());
            let r = quat_mul(&quat_conj(&b), &quat_conj(&a)).unwrap();
            for (x, y) in l.coeffs().iter().zip(r.coeffs()) {
                prop_assert!((x - y).abs() < 1e-11);
            }
        }

        #[test]
        fn expansion_additive_and_multiplicative(seed in any::<u64>(), para in any::<bool>()) {
            let e2 = if para { 1.0 } else { -1.0 };
            let mut rng = seeded_rng(seed);
            let a = HMatrix::from_fn(2, |_, _| EpsComplex::new(uniform_pm1(&mut rng), uniform_pm1(&mut rng), e2).unwrap());
            let b = HMatrix::from_fn(2, |_, _| EpsComplex::new(uniform_pm1(&mut rng), uniform_pm1(&mut rng), e2).unwrap());
            let sum = HMatrix::from_fn(2, |r, c| a.get(r, c).try_add(&b.get(r, c)).unwrap());
            prop_assert!(max_abs(&(real_matrix_expansion(&sum) - real_matrix_expansion(&a) - real_matrix_expansion(&b))) < 1e-14);
            let prod = real_matrix_expansion(&a.try_mul(&b).unwrap());
            prop_assert!(max_abs(&(prod - real_matrix_expansion(&a) * real_matrix_expansion(&b))) < 1e-13);
        }
    }
}
