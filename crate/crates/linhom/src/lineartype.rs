//! Homogeneous structure tensors of linear type, their algebraic symmetry
//! conditions, degeneracy classes and quaternionic class membership.

use crate::error::{Error, Result};
use crate::linalg::{lstsq, nullspace, seeded_rng, uniform_pm1, Matrix, Vector};
use crate::pseudolinear::{contract12, DenseTensor, Frame, MetricSpace};
use crate::structures::{sp1_pattern, EpsHermitian, EpsQuatTriple, Sp1Coefficients};
use serde::Serialize;

/// Data ξ, ζ defining a linear-type ε-Kähler structure.
#[derive(Clone, Debug)]
pub struct KahlerLinearData {
    pub xi: Vector,
    pub zeta: Vector,
    pub structure: EpsHermitian,
}

/// Data ξ, ζ¹, ζ², ζ³ defining a linear-type ε-quaternion Kähler structure.
#[derive(Clone, Debug)]
pub struct QuatLinearData {
    pub xi: Vector,
    pub zeta: [Vector; 3],
    pub structure: EpsQuatTriple,
}

/// The (0,3) tensor S_{XYZ} = g(S_X Y, Z). The endomorphisms S_{e_x} are
/// cached alongside the components.
#[derive(Clone, Debug)]
pub struct STensor {
    space: MetricSpace,
    tensor: DenseTensor,
    endos: Vec<Matrix>,
}

impl STensor {
    /// From endomorphisms with `endos[x] * e_y = S_{e_x} e_y`.
    pub fn from_endos(space: &MetricSpace, endos: Vec<Matrix>) -> Result<Self> {
        let d = space.dim();
        if endos.len() != d || endos.iter().any(|m| m.shape() != (d, d)) {
            return Err(Error::DimensionMismatch { expected: d, got: endos.len() });
        }
        let lowered: Vec<Matrix> = endos.iter().map(|m| m.transpose() * space.metric()).collect();
        let tensor = DenseTensor::from_fn(d, 3, |i| lowered[i[0]][(i[1], i[2])]);
        Ok(Self { space: space.clone(), tensor, endos })
    }

    pub fn from_tensor(space: &MetricSpace, tensor: DenseTensor) -> Result<Self> {
        let d = space.dim();
        if tensor.dim() != d || tensor.rank() != 3 {
            return Err(Error::DimensionMismatch { expected: d, got: tensor.dim() });
        }
        let endos = (0..d)
            .map(|x| {
                let low = Matrix::from_fn(d, d, |y, z| tensor.get(&[x, y, z]));
                space.inverse() * low.transpose()
            })
            .collect();
        Ok(Self { space: space.clone(), tensor, endos })
    }

    pub fn zero(space: &MetricSpace) -> Self {
        let d = space.dim();
        Self::from_endos(space, vec![Matrix::zeros(d, d); d]).expect("shapes agree")
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.tensor.get(&[x, y, z])
    }

    pub fn endo(&self, x: usize) -> &Matrix {
        &self.endos[x]
    }

    /// S_X as an endomorphism for arbitrary X.
    pub fn endo_along(&self, v: &Vector) -> Matrix {
        let d = self.dim();
        let mut m = Matrix::zeros(d, d);
        for (x, e) in self.endos.iter().enumerate() {
            if v[x] != 0.0 {
                m += e * v[x];
            }
        }
        m
    }

    pub fn apply(&self, x: &Vector, y: &Vector) -> Vector {
        self.endo_along(x) * y
    }

    pub fn eval(&self, x: &Vector, y: &Vector, z: &Vector) -> f64 {
        self.tensor.eval(&[x, y, z])
    }

    pub fn max_abs(&self) -> f64 {
        self.tensor.max_abs()
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        Self::from_tensor(&self.space, self.tensor.add(&o.tensor)?)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_tensor(&self.space, self.tensor.scaled(c)).expect("same shape")
    }

    /// max |S_{XYZ} + S_{XZY}| over basis triples.
    pub fn compat_residual(&self) -> f64 {
        let d = self.dim();
        let mut r: f64 = 0.0;
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    r = r.max((self.get(x, y, z) + self.get(x, z, y)).abs());
                }
            }
        }
        r
    }

    /// Tensor (X,Y,Z) ↦ S(X, AY, AZ).
    pub fn twisted(&self, a: &Matrix) -> DenseTensor {
        self.tensor.apply_on_slot(1, &a.transpose()).apply_on_slot(2, &a.transpose())
    }
}

/// Cyclic sum over the three slots of a rank-3 tensor.
pub fn cyclic_sum(t: &DenseTensor) -> DenseTensor {
    let d = t.dim();
    DenseTensor::from_fn(d, 3, |i| t.get(&[i[0], i[1], i[2]]) + t.get(&[i[1], i[2], i[0]]) + t.get(&[i[2], i[0], i[1]]))
}

fn unit(d: usize, i: usize) -> Vector {
    Vector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })
}

pub fn build_s_kahler(d: &KahlerLinearData) -> Result<STensor> {
    let sp = &d.structure.space;
    let n = sp.dim();
    for v in [&d.xi, &d.zeta] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let j = &d.structure.j;
    let eps = d.structure.eps;
    let jxi = j * &d.xi;
    let endos = (0..n)
        .map(|x| {
            let ex = unit(n, x);
            let jx = j * &ex;
            let mut m = Matrix::zeros(n, n);
            for y in 0..n {
                let ey = unit(n, y);
                let jy = j * &ey;
                let v = &d.xi * sp.inner(&ex, &ey) - &ex * sp.inner(&d.xi, &ey)
                    + &jxi * (eps * sp.inner(&ex, &jy))
                    - &jx * (eps * sp.inner(&d.xi, &jy))
                    - &jy * (2.0 * sp.inner(&d.zeta, &jx));
                m.set_column(y, &v);
            }
            m
        })
        .collect();
    STensor::from_endos(sp, endos)
}

pub fn build_s_quat(d: &QuatLinearData) -> Result<STensor> {
    let t = &d.structure;
    let sp = &t.space;
    let n = sp.dim();
    for v in std::iter::once(&d.xi).chain(d.zeta.iter()) {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let jxi: Vec<Vector> = t.j.iter().map(|j| j * &d.xi).collect();
    let endos = (0..n)
        .map(|x| {
            let ex = unit(n, x);
            let mut m = Matrix::zeros(n, n);
            for y in 0..n {
                let ey = unit(n, y);
                let mut v = &d.xi * sp.inner(&ex, &ey) - &ex * sp.inner(&ey, &d.xi);
                for a in 0..3 {
                    let jay = &t.j[a] * &ey;
                    v -= (&t.j[a] * &ex * sp.inner(&jay, &d.xi) - &jxi[a] * sp.inner(&ex, &jay)) * t.eps[a];
                    v += jay * sp.inner(&ex, &d.zeta[a]);
                }
                m.set_column(y, &v);
            }
            m
        })
        .collect();
    STensor::from_endos(sp, endos)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    Nondegenerate,
    Degenerate,
    StronglyDegenerate,
}

/// Cutoff on |g(ξ,ξ)| and on the ζ norms.
pub const TOL_DEG: f64 = 1e-8;

/// Common view of the two kinds of linear data.
pub trait LinearData {
    fn xi(&self) -> &Vector;
    fn zetas(&self) -> Vec<&Vector>;
    fn space(&self) -> &MetricSpace;
    /// Only the ε-Kähler trichotomy has a strongly degenerate class.
    fn has_strong_class(&self) -> bool;
}

impl LinearData for KahlerLinearData {
    fn xi(&self) -> &Vector {
        &self.xi
    }
    fn zetas(&self) -> Vec<&Vector> {
        vec![&self.zeta]
    }
    fn space(&self) -> &MetricSpace {
        &self.structure.space
    }
    fn has_strong_class(&self) -> bool {
        true
    }
}

impl LinearData for QuatLinearData {
    fn xi(&self) -> &Vector {
        &self.xi
    }
    fn zetas(&self) -> Vec<&Vector> {
        self.zeta.iter().collect()
    }
    fn space(&self) -> &MetricSpace {
        &self.structure.space
    }
    fn has_strong_class(&self) -> bool {
        false
    }
}

pub fn classify_degeneracy<D: LinearData>(d: &D) -> Degeneracy {
    if d.space().norm2(d.xi()).abs() > TOL_DEG {
        Degeneracy::Nondegenerate
    } else if !d.has_strong_class() || d.zetas().iter().any(|z| z.norm() > TOL_DEG) {
        Degeneracy::Degenerate
    } else {
        Degeneracy::StronglyDegenerate
    }
}

/// max |S(X, JY, JZ) + ε S(X, Y, Z)|: membership in 𝒦^ε(V) beyond
/// metric compatibility.
pub fn kahler_class_residual(s: &STensor, j: &EpsHermitian) -> f64 {
    let tw = s.twisted(&j.j);
    tw.data()
        .iter()
        .zip(s.tensor().data())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a + j.eps * b).abs()))
}

/// g(J_b Y, J_a Z) as a matrix in (Y, Z).
fn gjj(t: &EpsQuatTriple, b: usize, a: usize) -> Matrix {
    t.j[b].transpose() * t.space.metric() * &t.j[a]
}

/// Best-fit one-forms π^a for the second symmetry condition.
#[derive(Clone, Debug)]
pub struct Symmetry2Fit {
    pub pi: [Vector; 3],
    pub residual: f64,
}

const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Fits S(X,J_aY,J_aZ) + ε_a S(X,Y,Z) = ε_b π^c(X) g(J_bY,J_aZ) − ε_c π^b(X) g(J_cY,J_aZ)
/// by least squares, separately for each basis X.
pub fn symmetry2_fit(s: &STensor, t: &EpsQuatTriple) -> Symmetry2Fit {
    let d = s.dim();
    let lhs: Vec<DenseTensor> = CYCLIC
        .iter()
        .map(|&(a, _, _)| {
            let mut tw = s.twisted(&t.j[a]);
            tw.data_mut().iter_mut().zip(s.tensor().data()).for_each(|(v, w)| *v += t.eps[a] * w);
            tw
        })
        .collect();
    let grams: Vec<(Matrix, Matrix)> = CYCLIC.iter().map(|&(a, b, c)| (gjj(t, b, a), gjj(t, c, a))).collect();
    let mut pi = [Vector::zeros(d), Vector::zeros(d), Vector::zeros(d)];
    let mut residual: f64 = 0.0;
    for x in 0..d {
        let mut a_mat = Matrix::zeros(3 * d * d, 3);
        let mut rhs = Vector::zeros(3 * d * d);
        for (k, &(a, b, c)) in CYCLIC.iter().enumerate() {
            let _ = a;
            for y in 0..d {
                for z in 0..d {
                    let row = k * d * d + y * d + z;
                    a_mat[(row, c)] += t.eps[b] * grams[k].0[(y, z)];
                    a_mat[(row, b)] -= t.eps[c] * grams[k].1[(y, z)];
                    rhs[row] = lhs[k].get(&[x, y, z]);
                }
            }
        }
        let sol = lstsq(&a_mat, &rhs);
        residual = residual.max((&a_mat * &sol - &rhs).amax());
        for a in 0..3 {
            pi[a][x] = sol[a];
        }
    }
    Symmetry2Fit { pi, residual }
}

/// The sp^ε(1) part of each S_X together with the induced (c_ij).
#[derive(Clone, Debug)]
pub struct Sp1Projection {
    /// S_X = A_X + Σ_a p_a(X) J_a with A_X commuting with the triple.
    pub p: [Vector; 3],
    pub c: Sp1Coefficients,
    /// max over X, i of |[J_i, S_X] − Σ_j c_ij(X) J_j|.
    pub residual: f64,
}

pub fn sp1_projection(s: &STensor, t: &EpsQuatTriple) -> Sp1Projection {
    let d = s.dim();
    let pattern = sp1_pattern(t.e2());
    let mut p = [Vector::zeros(d), Vector::zeros(d), Vector::zeros(d)];
    let zero = || Vector::zeros(d);
    let mut c = Sp1Coefficients { b: [[zero(), zero(), zero()], [zero(), zero(), zero()], [zero(), zero(), zero()]] };
    let mut residual: f64 = 0.0;
    for x in 0..d {
        let sx = s.endo(x);
        for a in 0..3 {
            p[a][x] = (sx * &t.j[a]).trace() / (t.eps[a] * d as f64);
        }
        for i in 0..3 {
            let mut fit = Matrix::zeros(d, d);
            for j in 0..3 {
                let cij: f64 = (0..3).map(|k| p[k][x] * pattern[k][i][j]).sum();
                c.b[i][j][x] = cij;
                fit += &t.j[j] * cij;
            }
            let comm = &t.j[i] * sx - sx * &t.j[i];
            residual = residual.max((comm - fit).amax());
        }
    }
    Sp1Projection { p, c, residual }
}

/// Result of fitting one class formula.
#[derive(Clone, Debug, Serialize)]
pub struct ClassFit {
    pub residual: f64,
    pub member: bool,
    /// Recovered defining one-forms (θ, or θ¹, θ², θ³).
    #[serde(skip)]
    pub forms: Vec<Vector>,
    /// Auxiliary residual: Σθ^a∘J_a for the second class, |c₁₂| for the fourth.
    pub side_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QkMembership {
    pub qk1: ClassFit,
    pub qk2: ClassFit,
    pub qk3: ClassFit,
    pub qk4: ClassFit,
    pub qk5: ClassFit,
}

impl QkMembership {
    pub fn flags(&self) -> [bool; 5] {
        [self.qk1.member, self.qk2.member, self.qk3.member, self.qk4.member, self.qk5.member]
    }
}

/// Column-major design matrix over the d³ basis evaluations.
fn fit_linear(s: &STensor, cols: usize, mut entry: impl FnMut(usize, usize, usize, usize) -> f64) -> (Vector, f64) {
    let d = s.dim();
    let mut a = Matrix::zeros(d * d * d, cols);
    let mut rhs = Vector::zeros(d * d * d);
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let row = (x * d + y) * d + z;
                rhs[row] = s.get(x, y, z);
                for k in 0..cols {
                    a[(row, k)] = entry(x, y, z, k);
                }
            }
        }
    }
    let sol = lstsq(&a, &rhs);
    let res = (&a * &sol - rhs).amax();
    (sol, res)
}

/// Largest value of |S| counted as 1 for the relative tolerance scale.
fn scale_of(s: &STensor) -> f64 {
    s.max_abs().max(1.0)
}

/// Fits each of the five class formulas. Requires S ∈ 𝒱.
pub fn qk_class_membership(s: &STensor, t: &EpsQuatTriple, frame: &Frame, tol: f64) -> Result<QkMembership> {
    let d = s.dim();
    let scale = scale_of(s);
    let sym1 = s.compat_residual();
    if sym1 > 1e-8 * scale {
        return Err(Error::Precondition(format!("first symmetry S_XYZ = -S_XZY violated (residual {sym1:e})")));
    }
    let sym2 = symmetry2_fit(s, t).residual;
    if sym2 > 1e-8 * scale {
        return Err(Error::Precondition(format!("second symmetry (pi-equation) violated (residual {sym2:e})")));
    }
    let g = t.space.metric();
    let jtg: Vec<Matrix> = t.j.iter().map(|j| j.transpose() * g).collect();
    let gj: Vec<Matrix> = t.j.iter().map(|j| g * j).collect();
    let member = |r: f64| r <= tol * scale;

    // θ(J_aX)⟨J_aY,Z⟩
    let (th, r1) = fit_linear(s, d, |x, y, z, k| (0..3).map(|a| t.j[a][(k, x)] * jtg[a][(y, z)]).sum());
    let qk1 = ClassFit { residual: r1, member: member(r1), forms: vec![th], side_residual: 0.0 };

    // Σ θ^a(X)⟨J_aY,Z⟩, constraint Σ θ^a∘J_a = 0 checked afterwards
    let (th, r2) = fit_linear(s, 3 * d, |x, y, z, k| {
        let (a, kk) = (k / d, k % d);
        if kk == x { jtg[a][(y, z)] } else { 0.0 }
    });
    let thetas: Vec<Vector> = (0..3).map(|a| th.rows(a * d, d).into_owned()).collect();
    let constraint = (0..3).fold(Vector::zeros(d), |acc, a| acc + t.j[a].transpose() * &thetas[a]);
    let c2 = constraint.amax();
    let qk2 = ClassFit { residual: r2, member: member(r2) && member(c2), forms: thetas, side_residual: c2 };

    // ⟨X,Y⟩θ(Z) − ⟨X,Z⟩θ(Y) − Σε_a(⟨X,J_aY⟩θ(J_aZ) − ⟨X,J_aZ⟩θ(J_aY))
    let (th, r3) = fit_linear(s, d, |x, y, z, k| {
        let mut v = 0.0;
        if k == z {
            v += g[(x, y)];
        }
        if k == y {
            v -= g[(x, z)];
        }
        for a in 0..3 {
            v -= t.eps[a] * (gj[a][(x, y)] * t.j[a][(k, z)] - gj[a][(x, z)] * t.j[a][(k, y)]);
        }
        v
    });
    let qk3 = ClassFit { residual: r3, member: member(r3), forms: vec![th], side_residual: 0.0 };

    let (r4, c12) = qk4_residuals(s, t, frame)?;
    let qk4 = ClassFit { residual: r4, member: member(r4) && member(c12), forms: vec![], side_residual: c12 };

    let r5 = cyclic_sum(s.tensor()).max_abs();
    let qk5 = ClassFit { residual: r5, member: member(r5), forms: vec![], side_residual: 0.0 };
    Ok(QkMembership { qk1, qk2, qk3, qk4, qk5 })
}

/// 6S − Cyc S + Σ ε_a Cyc S(X,J_aY,J_aZ), and the c₁₂ norm.
fn qk4_residuals(s: &STensor, t: &EpsQuatTriple, frame: &Frame) -> Result<(f64, f64)> {
    let mut acc = cyclic_sum(s.tensor()).scaled(-1.0).add(&s.tensor().scaled(6.0))?;
    for a in 0..3 {
        acc = acc.add(&cyclic_sum(&s.twisted(&t.j[a])).scaled(t.eps[a]))?;
    }
    let c12 = contract12(s.tensor(), frame, &t.space)?;
    Ok((acc.max_abs(), c12.amax()))
}

/// S(X,Y,Z) = Σ_a θ(J_aX)⟨J_aY,Z⟩.
pub fn synth_qk1(t: &EpsQuatTriple, theta: &Vector) -> STensor {
    let g = t.space.metric();
    let d = t.space.dim();
    let jtg: Vec<Matrix> = t.j.iter().map(|j| j.transpose() * g).collect();
    let tj: Vec<Vector> = t.j.iter().map(|j| j.transpose() * theta).collect();
    let tensor = DenseTensor::from_fn(d, 3, |i| (0..3).map(|a| tj[a][i[0]] * jtg[a][(i[1], i[2])]).sum());
    STensor::from_tensor(&t.space, tensor).expect("shape")
}

/// S(X,Y,Z) = Σ_a θ^a(X)⟨J_aY,Z⟩.
pub fn synth_qk2(t: &EpsQuatTriple, thetas: &[Vector; 3]) -> STensor {
    let g = t.space.metric();
    let d = t.space.dim();
    let jtg: Vec<Matrix> = t.j.iter().map(|j| j.transpose() * g).collect();
    let tensor = DenseTensor::from_fn(d, 3, |i| (0..3).map(|a| thetas[a][i[0]] * jtg[a][(i[1], i[2])]).sum());
    STensor::from_tensor(&t.space, tensor).expect("shape")
}

/// Random one-forms θ^a with Σ θ^a∘J_a = 0.
pub fn random_qk2_forms(t: &EpsQuatTriple, seed: u64) -> [Vector; 3] {
    let d = t.space.dim();
    let mut c = Matrix::zeros(d, 3 * d);
    for a in 0..3 {
        c.view_mut((0, a * d), (d, d)).copy_from(&t.j[a].transpose());
    }
    let kernel = nullspace(&c, 1e-10);
    let mut rng = seeded_rng(seed);
    let v = kernel.iter().fold(Vector::zeros(3 * d), |acc, k| acc + k * uniform_pm1(&mut rng));
    [v.rows(0, d).into_owned(), v.rows(d, d).into_owned(), v.rows(2 * d, d).into_owned()]
}

/// The third class formula; equals build_s_quat with ζ = 0 and θ = ξ♭.
pub fn synth_qk3(t: &EpsQuatTriple, theta: &Vector) -> STensor {
    let g = t.space.metric();
    let d = t.space.dim();
    let gj: Vec<Matrix> = t.j.iter().map(|j| g * j).collect();
    let tj: Vec<Vector> = t.j.iter().map(|j| j.transpose() * theta).collect();
    let tensor = DenseTensor::from_fn(d, 3, |i| {
        let (x, y, z) = (i[0], i[1], i[2]);
        let mut v = g[(x, y)] * theta[z] - g[(x, z)] * theta[y];
        for a in 0..3 {
            v -= t.eps[a] * (gj[a][(x, y)] * tj[a][z] - gj[a][(x, z)] * tj[a][y]);
        }
        v
    });
    STensor::from_tensor(&t.space, tensor).expect("shape")
}

/// Which nullspace-defined class to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicitClass {
    Qk4,
    Qk5,
}

/// Basis of QK₄ or QK₅ as tensors, computed as the kernel of the linear
/// conditions defining 𝒱 together with the class equations.
pub fn implicit_class_basis(t: &EpsQuatTriple, frame: &Frame, class: ImplicitClass) -> Result<Vec<STensor>> {
    let d = t.space.dim();
    frame.check(&t.space, 1e-10)?;
    // unknowns: S[x,y,z] for y<z, then π^a(e_x)
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|y| ((y + 1)..d).map(move |z| (y, z))).collect();
    let np = pairs.len();
    let ns = d * np;
    let nunk = ns + 3 * d;
    let var = |x: usize, y: usize, z: usize| -> Option<(usize, f64)> {
        if y == z {
            None
        } else if y < z {
            Some((x * np + pairs.iter().position(|&p| p == (y, z)).unwrap(), 1.0))
        } else {
            Some((x * np + pairs.iter().position(|&p| p == (z, y)).unwrap(), -1.0))
        }
    };
    // linear functional of S along (X=e_x, AY, AZ) for coordinate Y, Z
    let twisted_row = |row: &mut [f64], coef: f64, x: usize, a: &Matrix, y: usize, z: usize| {
        for p in 0..d {
            if a[(p, y)] == 0.0 {
                continue;
            }
            for q in 0..d {
                if a[(q, z)] == 0.0 {
                    continue;
                }
                if let Some((k, s)) = var(x, p, q) {
                    row[k] += coef * s * a[(p, y)] * a[(q, z)];
                }
            }
        }
    };
    let id = Matrix::identity(d, d);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (a, b, c) in CYCLIC {
        let gb = gjj(t, b, a);
        let gc = gjj(t, c, a);
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    let mut row = vec![0.0; nunk];
                    twisted_row(&mut row, 1.0, x, &t.j[a], y, z);
                    twisted_row(&mut row, t.eps[a], x, &id, y, z);
                    row[ns + c * d + x] -= t.eps[b] * gb[(y, z)];
                    row[ns + b * d + x] += t.eps[c] * gc[(y, z)];
                    rows.push(row);
                }
            }
        }
    }
    let cyc_row = |row: &mut [f64], coef: f64, a: &Matrix, x: usize, y: usize, z: usize| {
        // Cyc over (X,Y,Z) of S(X, AY, AZ) with X, Y, Z coordinate vectors
        twisted_row(row, coef, x, a, y, z);
        twisted_row(row, coef, y, a, z, x);
        twisted_row(row, coef, z, a, x, y);
    };
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let mut row = vec![0.0; nunk];
                match class {
                    ImplicitClass::Qk5 => cyc_row(&mut row, 1.0, &id, x, y, z),
                    ImplicitClass::Qk4 => {
                        twisted_row(&mut row, 6.0, x, &id, y, z);
                        cyc_row(&mut row, -1.0, &id, x, y, z);
                        for a in 0..3 {
                            cyc_row(&mut row, t.eps[a], &t.j[a], x, y, z);
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    if class == ImplicitClass::Qk4 {
        for z in 0..d {
            let mut row = vec![0.0; nunk];
            for (e, eps) in frame.vectors.iter().zip(&frame.signs) {
                for x in 0..d {
                    for y in 0..d {
                        if let Some((k, s)) = var(x, y, z) {
                            row[k] += eps * e[x] * e[y] * s;
                        }
                    }
                }
            }
            rows.push(row);
        }
    }
    let a = Matrix::from_fn(rows.len(), nunk, |r, c| rows[r][c]);
    let kernel = nullspace(&a, 1e-9);
    let tensors = kernel
        .iter()
        .map(|v| {
            let tensor = DenseTensor::from_fn(d, 3, |i| match var(i[0], i[1], i[2]) {
                Some((k, s)) => s * v[k],
                None => 0.0,
            });
            STensor::from_tensor(&t.space, tensor).expect("shape")
        })
        .filter(|s| s.max_abs() > 1e-12)
        .collect();
    Ok(tensors)
}

/// Random element of an implicit class (zero if the class is trivial).
pub fn synth_implicit(t: &EpsQuatTriple, frame: &Frame, class: ImplicitClass, seed: u64) -> Result<STensor> {
    let basis = implicit_class_basis(t, frame, class)?;
    let mut rng = seeded_rng(seed);
    let mut s = STensor::zero(&t.space);
    for b in &basis {
        s = s.add(&b.scaled(uniform_pm1(&mut rng)))?;
    }
    Ok(s)
}



#[cfg(test)]
mod props {
    use super::*;
    use crate::linalg::random_vector;
    use crate::structures::{make_standard_eps_complex, make_standard_eps_quat};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn kahler_structures_are_compatible(seed in any::<u64>(), para in any::<bool>(), n in 2usize..4, s in 0usize..3) {
            let eps = if para { 1.0 } else { -1.0 };
            let (sp, j) = make_standard_eps_complex(n, s.min(n), eps).unwrap();
            let mut rng = seeded_rng(seed);
            let xi = random_vector(&mut rng, sp.dim());
            let zeta = random_vector(&mut rng, sp.dim());
            let st = build_s_kahler(&KahlerLinearData { xi: xi.clone(), zeta, structure: j.clone() }).unwrap();
            prop_assert!(st.compat_residual() < 1e-12);
            let st0 = build_s_kahler(&KahlerLinearData { xi, zeta: Vector::zeros(sp.dim()), structure: j.clone() }).unwrap();
            prop_assert!(kahler_class_residual(&st0, &j) < 1e-12);
        }

        #[test]
        fn quat_structures_satisfy_both_symmetries(seed in any::<u64>(), para in any::<bool>(), s in 0usize..3) {
            let e2 = if para { 1.0 } else { -1.0 };
            let (sp, t) = make_standard_eps_quat(2, s, [-1.0, e2, e2]).unwrap();
            let mut rng = seeded_rng(seed);
            let mut v = || random_vector(&mut rng, sp.dim());
            let d = QuatLinearData { xi: v(), zeta: [v(), v(), v()], structure: t.clone() };
            let st = build_s_quat(&d).unwrap();
            prop_assert!(st.compat_residual() < 1e-12);
            let fit = symmetry2_fit(&st, &t);
            prop_assert!(fit.residual < 1e-10);
            let proj = sp1_projection(&st, &t);
            for a in 0..3 {
                prop_assert!((&fit.pi[a] - &proj.p[a] * (2.0 * e2)).amax() < 1e-10);
            }
        }

        #[test]
        fn scaling_xi_keeps_nondegenerate(seed in any::<u64>(), para in any::<bool>()) {
            let eps = if para { 1.0 } else { -1.0 };
            let (_, j) = make_standard_eps_complex(2, 1, eps).unwrap();
            let mut rng = seeded_rng(seed);
            let xi = random_vector(&mut rng, 4);
            let d = KahlerLinearData { xi: xi.clone(), zeta: Vector::zeros(4), structure: j.clone() };
            if classify_degeneracy(&d) == Degeneracy::Nondegenerate {
                let d2 = KahlerLinearData { xi: xi * 2.0, zeta: Vector::zeros(4), structure: j };
                prop_assert_eq!(classify_degeneracy(&d2), Degeneracy::Nondegenerate);
            }
        }
    }
}
