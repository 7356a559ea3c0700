//! ε-Hermitian structures J and ε-quaternion Hermitian triples on standard
//! model spaces, their Kähler forms and the canonical 4-form.
//!
//! Frozen layouts:
//! * ε = −1: n blocks with metric diag(σ, σ) and J = [[0, −1], [1, 0]]; the
//!   last `s` blocks carry σ = −1.
//! * ε = +1: n blocks with metric diag(1, −1) and J = [[0, 1], [1, 0]].
//! * quaternionic: n blocks of (ℍ^ε) with metric σ·diag(1, 1, −ε₂, −ε₂) and
//!   J_a acting as right multiplication by −q_a (q = i, j, k); the last `s`
//!   blocks carry σ = −1 in the definite algebra.
//!
//! Downstream code only relies on the invariants, never on the layout.

use crate::error::{Error, Result};
use crate::hypercomplex::{quat_mul, EpsQuaternion, HyperScalar};
use crate::linalg::{expm, lstsq, max_abs, seeded_rng, uniform_pm1, Matrix, Vector};
use crate::pseudolinear::{DenseTensor, MetricSpace};
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct EpsHermitian {
    pub j: Matrix,
    pub eps: f64,
    pub space: MetricSpace,
}

#[derive(Clone, Debug)]
pub struct EpsQuatTriple {
    pub j: [Matrix; 3],
    pub eps: [f64; 3],
    pub space: MetricSpace,
}

impl EpsQuatTriple {
    /// ε₂ = ε₃, which selects the algebra.
    pub fn e2(&self) -> f64 {
        self.eps[1]
    }

    /// Quaternionic dimension n = dim/4.
    pub fn n(&self) -> usize {
        self.space.dim() / 4
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps == 1.0 || eps == -1.0 {
        Ok(())
    } else {
        Err(Error::Signature(format!("eps must be ±1, got {eps}")))
    }
}

pub fn make_standard_eps_complex(n: usize, s: usize, eps: f64) -> Result<(MetricSpace, EpsHermitian)> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::InvalidDimension("n must be positive".into()));
    }
    if eps < 0.0 && s > n {
        return Err(Error::Signature(format!("split s = {s} exceeds n = {n}")));
    }
    let d = 2 * n;
    let mut diag = vec![0.0; d];
    let mut j = Matrix::zeros(d, d);
    for b in 0..n {
        let (p, q) = (2 * b, 2 * b + 1);
        if eps < 0.0 {
            let sg = if b >= n - s { -1.0 } else { 1.0 };
            diag[p] = sg;
            diag[q] = sg;
            j[(q, p)] = 1.0;
            j[(p, q)] = -1.0;
        } else {
            diag[p] = 1.0;
            diag[q] = -1.0;
            j[(p, q)] = 1.0;
            j[(q, p)] = 1.0;
        }
    }
    let space = MetricSpace::from_diagonal(&diag)?;
    Ok((space.clone(), EpsHermitian { j, eps, space }))
}

/// Triple for `eps` = (−1, ε₂, ε₂); `s` is ignored in the para case.
pub fn make_standard_eps_quat(n: usize, s: usize, eps: [f64; 3]) -> Result<(MetricSpace, EpsQuatTriple)> {
    if eps[0] != -1.0 || eps[1] != eps[2] || !(eps[1] == 1.0 || eps[1] == -1.0) {
        return Err(Error::Signature(format!("invalid eps triple {eps:?}")));
    }
    if n == 0 {
        return Err(Error::InvalidDimension("n must be positive".into()));
    }
    let e2 = eps[1];
    let s = if e2 > 0.0 { 0 } else { s };
    if s > n {
        return Err(Error::Signature(format!("split s = {s} exceeds n = {n}")));
    }
    let d = 4 * n;
    let mut diag = vec![0.0; d];
    let mut js = [Matrix::zeros(d, d), Matrix::zeros(d, d), Matrix::zeros(d, d)];
    for b in 0..n {
        let sg = if b >= n - s { -1.0 } else { 1.0 };
        for (c, v) in [1.0, 1.0, -e2, -e2].iter().enumerate() {
            diag[4 * b + c] = sg * v;
        }
        for (a, ja) in js.iter_mut().enumerate() {
            let minus_q = EpsQuaternion::unit(a + 1, e2).scale(-1.0);
            for c in 0..4 {
                let col = quat_mul(&EpsQuaternion::unit(c, e2), &minus_q)?.coeffs();
                for r in 0..4 {
                    ja[(4 * b + r, 4 * b + c)] = col[r];
                }
            }
        }
    }
    let space = MetricSpace::from_diagonal(&diag)?;
    Ok((space.clone(), EpsQuatTriple { j: js, eps, space }))
}

/// ω(X, Y) = g(X, JY) as a matrix.
pub fn kahler_form(space: &MetricSpace, j: &Matrix) -> Matrix {
    space.metric() * j
}

/// (α∧β)(1,2,3,4) for 2-forms given as matrices.
fn wedge22(a: &Matrix, b: &Matrix, i: [usize; 4]) -> f64 {
    let [p, q, r, s] = i;
    a[(p, q)] * b[(r, s)] - a[(p, r)] * b[(q, s)] + a[(p, s)] * b[(q, r)] + a[(q, r)] * b[(p, s)]
        - a[(q, s)] * b[(p, r)]
        + a[(r, s)] * b[(p, q)]
}

/// Ω = Σ_a −ε_a ω_a∧ω_a.
pub fn canonical_four_form(t: &EpsQuatTriple) -> DenseTensor {
    let omegas: Vec<Matrix> = t.j.iter().map(|j| kahler_form(&t.space, j)).collect();
    DenseTensor::from_fn(t.space.dim(), 4, |i| {
        let idx = [i[0], i[1], i[2], i[3]];
        (0..3).map(|a| -t.eps[a] * wedge22(&omegas[a], &omegas[a], idx)).sum()
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub residuals: Vec<(String, f64)>,
    pub pass: bool,
}

impl StructureReport {
    fn new(residuals: Vec<(String, f64)>) -> Self {
        let pass = residuals.iter().all(|(_, r)| *r < 1e-10);
        Self { residuals, pass }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

pub trait VerifyStructure {
    fn verify(&self) -> StructureReport;
}

/// g(JX, Y) + g(X, JY) as a max-norm residual.
fn skew_residual(space: &MetricSpace, j: &Matrix) -> f64 {
    max_abs(&(j.transpose() * space.metric() + space.metric() * j))
}

impl VerifyStructure for EpsHermitian {
    fn verify(&self) -> StructureReport {
        let d = self.space.dim();
        let (p, q) = self.space.signature();
        let sig_ok = if self.eps < 0.0 { p % 2 == 0 && q % 2 == 0 } else { p == q };
        StructureReport::new(vec![
            ("square".into(), max_abs(&(&self.j * &self.j - Matrix::identity(d, d) * self.eps))),
            ("skew".into(), skew_residual(&self.space, &self.j)),
            ("signature".into(), if sig_ok { 0.0 } else { 1.0 }),
        ])
    }
}

impl VerifyStructure for EpsQuatTriple {
    fn verify(&self) -> StructureReport {
        let d = self.space.dim();
        let mut r = Vec::new();
        for a in 0..3 {
            r.push((
                format!("square{}", a + 1),
                max_abs(&(&self.j[a] * &self.j[a] - Matrix::identity(d, d) * self.eps[a])),
            ));
            r.push((format!("skew{}", a + 1), skew_residual(&self.space, &self.j[a])));
        }
        r.push(("product".into(), max_abs(&(&self.j[0] * &self.j[1] - &self.j[2]))));
        r.push(("dim4".into(), if d % 4 == 0 { 0.0 } else { 1.0 }));
        StructureReport::new(r)
    }
}

pub fn verify_structure<T: VerifyStructure>(x: &T) -> StructureReport {
    x.verify()
}

/// Coefficients of J_aJ_b (a ≠ b) in the triple: J_aJ_b = c·J_k.
/// J_a is right multiplication by −q_a, so J_aJ_b is right multiplication
/// by q_b q_a.
pub fn triple_product(a: usize, b: usize, e2: f64) -> (f64, usize) {
    let qa = EpsQuaternion::unit(a + 1, e2);
    let qb = EpsQuaternion::unit(b + 1, e2);
    let p = quat_mul(&qb, &qa).expect("same algebra").coeffs();
    let k = (1..4).find(|&k| p[k] != 0.0).expect("imaginary product");
    (-p[k], k - 1)
}

/// T[c][i][j] = coefficient of J_j in [J_i, J_c]. These three matrices
/// span the sp^ε(1) pattern of (b_ij) and (c_ij).
pub fn sp1_pattern(e2: f64) -> [[[f64; 3]; 3]; 3] {
    let mut t = [[[0.0; 3]; 3]; 3];
    for (c, tc) in t.iter_mut().enumerate() {
        for (i, row) in tc.iter_mut().enumerate() {
            if i != c {
                let (k1, j1) = triple_product(i, c, e2);
                let (k2, j2) = triple_product(c, i, e2);
                row[j1] += k1;
                row[j2] -= k2;
            }
        }
    }
    t
}

/// One-form valued 3×3 matrix b_ij(X), stored as covectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Sp1Coefficients {
    pub b: [[Vector; 3]; 3],
}

impl Sp1Coefficients {
    /// Distance of each b(e_x) from the sp^ε(1) pattern, maximised over x.
    pub fn pattern_residual(&self, e2: f64) -> f64 {
        let t = sp1_pattern(e2);
        let d = self.b[0][0].len();
        let mut basis = Matrix::zeros(9, 3);
        for c in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    basis[(3 * i + j, c)] = t[c][i][j];
                }
            }
        }
        let mut res: f64 = 0.0;
        for x in 0..d {
            let y = Vector::from_fn(9, |k, _| self.b[k / 3][k % 3][x]);
            let fit = lstsq(&basis, &y);
            res = res.max((&basis * fit - y).amax());
        }
        res
    }
}

/// Conjugates the triple by exp(M) with M a random element of the span of
/// the commutators [J_b, J_c]. The result spans the same subbundle.
pub fn rotate_triple(t: &EpsQuatTriple, seed: u64) -> EpsQuatTriple {
    let mut rng = seeded_rng(seed);
    let mut m = Matrix::zeros(t.space.dim(), t.space.dim());
    for (b, c) in [(0, 1), (1, 2), (2, 0)] {
        m += (&t.j[b] * &t.j[c] - &t.j[c] * &t.j[b]) * (0.4 * uniform_pm1(&mut rng));
    }
    let r = expm(&m);
    let rinv = expm(&(-m));
    EpsQuatTriple {
        j: [&r * &t.j[0] * &rinv, &r * &t.j[1] * &rinv, &r * &t.j[2] * &rinv],
        eps: t.eps,
        space: t.space.clone(),
    }
}
