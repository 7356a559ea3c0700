//! Nomizu construction 𝔤 = T_pM ⊕ hol, its reference bracket tables, the
//! classical matrix realizations and the involution chains ending in the
//! two-dimensional group K.
//!
//! Basis conventions. `nomizu_build` uses the coordinate vectors e_i followed
//! by an orthonormal (Frobenius) basis of the holonomy algebra. The realized
//! models use an adapted basis: ξ, Jξ (or J_aξ), the coordinate vectors of
//! the complement U and the holonomy generators 𝒥 (or 𝒥_a). Tangent labels
//! always precede holonomy labels.

use crate::checks::{Check, VerificationReport};
use crate::curvature::{constant_hol_model, r0_quat, rs_from_s, rtilde, Curvature4};
use crate::error::{Error, Result};
use crate::hypercomplex::{
    real_matrix_expansion, sigma_orthonormal_basis, EpsComplex, EpsQuaternion, HMatrix, HyperScalar,
};
use crate::linalg::{column_basis, commutator, lstsq, max_abs, nullspace, vec_of, Matrix, Vector};
use crate::lineartype::{build_s_kahler, build_s_quat, KahlerLinearData, QuatLinearData, STensor, TOL_DEG};
use crate::pseudolinear::{orthogonal_complement, MetricSpace};
use crate::structures::{make_standard_eps_complex, make_standard_eps_quat, EpsHermitian, EpsQuatTriple};
use serde::Serialize;

/// Relative singular-value cutoff for the holonomy span.
pub const RANK_TOL: f64 = 1e-9;
/// Maximal number of commutator rounds when closing the holonomy span.
pub const CLOSURE_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Tangent,
    Holonomy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisLabel {
    pub label: String,
    pub part: Part,
}

impl BasisLabel {
    pub fn tangent(label: impl Into<String>) -> Self {
        Self { label: label.into(), part: Part::Tangent }
    }

    pub fn holonomy(label: impl Into<String>) -> Self {
        Self { label: label.into(), part: Part::Holonomy }
    }
}

/// Real Lie algebra given by structure constants c^k_{ij}, [b_i, b_j] = Σ_k c^k_{ij} b_k.
#[derive(Clone, Debug)]
pub struct LieAlgebraSC {
    labels: Vec<BasisLabel>,
    constants: Vec<f64>,
    tangent_metric: Option<Matrix>,
    holonomy: Vec<Matrix>,
}

impl LieAlgebraSC {
    /// `constants[(i * dim + j) * dim + k]` = c^k_{ij}. The optional metric
    /// lives on the tangent labels, which must come first.
    pub fn new(labels: Vec<BasisLabel>, constants: Vec<f64>, tangent_metric: Option<Matrix>) -> Result<Self> {
        let d = labels.len();
        if constants.len() != d * d * d {
            return Err(Error::DimensionMismatch { expected: d * d * d, got: constants.len() });
        }
        if labels.windows(2).any(|w| w[0].part == Part::Holonomy && w[1].part == Part::Tangent) {
            return Err(Error::Precondition("tangent labels must precede holonomy labels".into()));
        }
        let t = labels.iter().filter(|l| l.part == Part::Tangent).count();
        if let Some(m) = &tangent_metric {
            if m.shape() != (t, t) {
                return Err(Error::DimensionMismatch { expected: t, got: m.nrows() });
            }
        }
        Ok(Self { labels, constants, tangent_metric, holonomy: Vec::new() })
    }

    /// Attaches the endomorphisms represented by the holonomy labels.
    pub fn with_holonomy(mut self, hol: Vec<Matrix>) -> Result<Self> {
        if hol.len() != self.holonomy_dim() {
            return Err(Error::DimensionMismatch { expected: self.holonomy_dim(), got: hol.len() });
        }
        self.holonomy = hol;
        Ok(self)
    }

    pub fn abelian(labels: Vec<BasisLabel>, tangent_metric: Option<Matrix>) -> Result<Self> {
        let d = labels.len();
        Self::new(labels, vec![0.0; d * d * d], tangent_metric)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn tangent_dim(&self) -> usize {
        self.labels.iter().filter(|l| l.part == Part::Tangent).count()
    }

    pub fn holonomy_dim(&self) -> usize {
        self.dim() - self.tangent_dim()
    }

    pub fn tangent_metric(&self) -> Option<&Matrix> {
        self.tangent_metric.as_ref()
    }

    pub fn holonomy(&self) -> &[Matrix] {
        &self.holonomy
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim();
        self.constants[(i * d + j) * d + k]
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    /// Copy with c^k_{ij} replaced by `v` (c^k_{ji} untouched).
    pub fn with_constant(&self, i: usize, j: usize, k: usize, v: f64) -> Self {
        let d = self.dim();
        let mut out = self.clone();
        out.constants[(i * d + j) * d + k] = v;
        out
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.label == label)
    }

    pub fn unit(&self, i: usize) -> Vector {
        Vector::from_fn(self.dim(), |k, _| if k == i { 1.0 } else { 0.0 })
    }

    /// [b_i, b_j] in coordinates.
    pub fn structure(&self, i: usize, j: usize) -> Vector {
        let d = self.dim();
        Vector::from_column_slice(&self.constants[(i * d + j) * d..(i * d + j + 1) * d])
    }

    pub fn bracket(&self, x: &Vector, y: &Vector) -> Vector {
        let d = self.dim();
        let mut out = Vector::zeros(d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if y[j] == 0.0 {
                    continue;
                }
                out += self.structure(i, j) * (x[i] * y[j]);
            }
        }
        out
    }

    pub fn max_constant(&self) -> f64 {
        self.constants.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim();
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    r = r.max((self.c(i, j, k) + self.c(j, i, k)).abs());
                }
            }
        }
        r
    }

    /// Largest constant violating [h, m] ⊂ m or [h, h] ⊂ h.
    pub fn grading_residual(&self) -> f64 {
        let d = self.dim();
        let t = self.tangent_dim();
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let hi = i >= t;
                let hj = j >= t;
                if !(hi || hj) {
                    continue;
                }
                for k in 0..d {
                    let wrong = if hi && hj { k < t } else { k >= t };
                    if wrong {
                        r = r.max(self.c(i, j, k).abs());
                    }
                }
            }
        }
        r
    }

    /// Tangent-metric value g(x, y) for coordinate vectors whose holonomy
    /// part is ignored.
    pub fn metric_value(&self, x: &Vector, y: &Vector) -> Option<f64> {
        let t = self.tangent_dim();
        self.tangent_metric.as_ref().map(|g| (x.rows(0, t).transpose() * g * y.rows(0, t))[(0, 0)])
    }

    /// Same algebra in the basis given by the columns of `b` (old
    /// coordinates). Columns must respect the grading: the first `t` are
    /// tangent, the rest holonomy.
    pub fn in_basis(&self, b: &Matrix, labels: Vec<BasisLabel>) -> Result<Self> {
        let d = self.dim();
        if b.shape() != (d, d) || labels.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: b.ncols() });
        }
        let inv = b
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Identification("adapted basis is singular".into()))?;
        let mut c = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                let v = &inv * self.bracket(&b.column(i).into_owned(), &b.column(j).into_owned());
                c[(i * d + j) * d..(i * d + j + 1) * d].copy_from_slice(v.as_slice());
            }
        }
        let t = labels.iter().filter(|l| l.part == Part::Tangent).count();
        let metric = self.tangent_metric.as_ref().map(|g| {
            let bt = b.view((0, 0), (self.tangent_dim(), t)).into_owned();
            bt.transpose() * g * bt
        });
        let hol = self.holonomy_of(b, t);
        let out = Self::new(labels, c, metric)?;
        match hol {
            Some(h) => out.with_holonomy(h),
            None => Ok(out),
        }
    }

    fn holonomy_of(&self, b: &Matrix, t: usize) -> Option<Vec<Matrix>> {
        if self.holonomy.is_empty() {
            return None;
        }
        let t0 = self.tangent_dim();
        Some(
            (t..b.ncols())
                .map(|col| {
                    self.holonomy
                        .iter()
                        .enumerate()
                        .fold(Matrix::zeros(self.holonomy[0].nrows(), self.holonomy[0].ncols()), |acc, (k, h)| {
                            acc + h * b[(t0 + k, col)]
                        })
                })
                .collect(),
        )
    }

    /// Nonzero constants c^k_{ij} with i < j, as (i, j, k, value).
    pub fn bracket_entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                for k in 0..d {
                    let v = self.c(i, j, k);
                    if v.abs() > 1e-13 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }
}

/// max ‖[[x,y],z] + [[y,z],x] + [[z,x],y]‖ over basis triples, divided by
/// max(1, max |c|).
pub fn jacobi_residual(l: &LieAlgebraSC) -> f64 {
    let d = l.dim();
    let br: Vec<Vector> = (0..d * d).map(|ij| l.structure(ij / d, ij % d)).collect();
    let ad = |v: &Vector, z: usize| -> Vector {
        let mut out = Vector::zeros(d);
        for k in 0..d {
            if v[k] != 0.0 {
                out += &br[k * d + z] * v[k];
            }
        }
        out
    };
    let mut r: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let s = ad(&br[i * d + j], k) + ad(&br[j * d + k], i) + ad(&br[k * d + i], j);
                r = r.max(s.amax());
            }
        }
    }
    r / l.max_constant().max(1.0)
}

/// Basis of a Lie algebra of endomorphisms.
#[derive(Clone, Debug, Default)]
pub struct EndomorphismSpan {
    pub basis: Vec<Matrix>,
}

impl EndomorphismSpan {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Least-squares coordinates of `m` and the fit residual.
    pub fn coords(&self, m: &Matrix) -> (Vector, f64) {
        if self.basis.is_empty() {
            return (Vector::zeros(0), max_abs(m));
        }
        let a = Matrix::from_columns(&self.basis.iter().map(vec_of).collect::<Vec<_>>());
        let x = lstsq(&a, &vec_of(m));
        let res = (&a * &x - vec_of(m)).amax();
        (x, res)
    }

    pub fn closure_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in &self.basis {
            for b in &self.basis {
                r = r.max(self.coords(&commutator(a, b)).1);
            }
        }
        r
    }

    /// max |g A + Aᵀ g| over the basis.
    pub fn skew_residual(&self, space: &MetricSpace) -> f64 {
        let g = space.metric();
        self.basis.iter().map(|a| max_abs(&(g * a + a.transpose() * g))).fold(0.0, f64::max)
    }

    /// Residual of [h, J] ∈ span(structure) for every basis element.
    pub fn normalizer_residual(&self, structure: &[Matrix]) -> f64 {
        let span = EndomorphismSpan { basis: structure.to_vec() };
        let mut r: f64 = 0.0;
        for h in &self.basis {
            for j in structure {
                r = r.max(span.coords(&commutator(h, j)).1);
            }
        }
        r
    }
}

fn extract_basis(mats: &[Matrix], d: usize) -> Vec<Matrix> {
    if mats.is_empty() {
        return Vec::new();
    }
    let a = Matrix::from_columns(&mats.iter().map(vec_of).collect::<Vec<_>>());
    if a.amax() == 0.0 {
        return Vec::new();
    }
    column_basis(&a, RANK_TOL).iter().map(|v| Matrix::from_column_slice(d, d, v.as_slice())).collect()
}

/// Span of the endomorphisms R̃_{e_x e_y}, closed under commutators.
pub fn holonomy_span(rt: &Curvature4) -> Result<EndomorphismSpan> {
    let d = rt.space().dim();
    let units: Vec<Vector> = (0..d).map(|i| Vector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    let mut gens = Vec::new();
    for x in 0..d {
        for y in x + 1..d {
            gens.push(rt.endo(&units[x], &units[y]));
        }
    }
    let mut basis = extract_basis(&gens, d);
    for _ in 0..CLOSURE_CAP {
        let mut all = basis.clone();
        for a in &basis {
            for b in &basis {
                all.push(commutator(a, b));
            }
        }
        let next = extract_basis(&all, d);
        if next.len() == basis.len() {
            return Ok(EndomorphismSpan { basis });
        }
        basis = next;
    }
    Err(Error::Closure(CLOSURE_CAP))
}

/// 𝔤 = T_pM ⊕ hol with [X,Y] = S_XY − S_YX + R̃_{XY}, [A,X] = AX and
/// [A,B] = AB − BA.
pub fn nomizu_build(s: &STensor, r: &Curvature4) -> Result<LieAlgebraSC> {
    if s.space() != r.space() {
        return Err(Error::Precondition("S and R live on different spaces".into()));
    }
    let rt = rtilde(r, &rs_from_s(s))?;
    let hol = holonomy_span(&rt)?;
    let d = s.dim();
    let h = hol.dim();
    let dd = d + h;
    let units: Vec<Vector> = (0..d).map(|i| Vector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    let mut c = vec![0.0; dd * dd * dd];
    let mut put = |i: usize, j: usize, v: &Vector| {
        c[(i * dd + j) * dd..(i * dd + j + 1) * dd].copy_from_slice(v.as_slice());
    };
    for i in 0..dd {
        for j in 0..dd {
            let mut v = Vector::zeros(dd);
            match (i < d, j < d) {
                (true, true) => {
                    let t = s.endo(i).column(j) - s.endo(j).column(i);
                    v.rows_mut(0, d).copy_from(&t);
                    let (x, _) = hol.coords(&rt.endo(&units[i], &units[j]));
                    v.rows_mut(d, h).copy_from(&x);
                }
                (false, true) => v.rows_mut(0, d).copy_from(&hol.basis[i - d].column(j)),
                (true, false) => v.rows_mut(0, d).copy_from(&(-hol.basis[j - d].column(i))),
                (false, false) => {
                    let (x, _) = hol.coords(&commutator(&hol.basis[i - d], &hol.basis[j - d]));
                    v.rows_mut(d, h).copy_from(&x);
                }
            }
            put(i, j, &v);
        }
    }
    let labels = (0..d)
        .map(|i| BasisLabel::tangent(format!("e{i}")))
        .chain((0..h).map(|k| BasisLabel::holonomy(format!("h{k}"))))
        .collect();
    LieAlgebraSC::new(labels, c, Some(s.space().metric().clone()))?.with_holonomy(hol.basis)
}

/// S (ζ = 0 parts as given) and the model curvature R = −g(ξ,ξ)R⁰ of an
/// ε-Kähler datum.
pub fn kahler_pair(data: &KahlerLinearData) -> Result<(STensor, Curvature4)> {
    let g = data.structure.space.norm2(&data.xi);
    Ok((build_s_kahler(data)?, constant_hol_model(-4.0 * g, &data.structure)))
}

pub fn quat_pair(data: &QuatLinearData) -> Result<(STensor, Curvature4)> {
    let g = data.structure.space.norm2(&data.xi);
    Ok((build_s_quat(data)?, r0_quat(&data.structure).scaled(-g)))
}

#[derive(Clone, Copy, Debug)]
pub enum ReferenceCase<'a> {
    Kahler(&'a KahlerLinearData),
    Quat(&'a QuatLinearData),
}

fn embed_tangent(l: &LieAlgebraSC, v: &Vector) -> Vector {
    let mut out = Vector::zeros(l.dim());
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// Element of the holonomy part of `l` acting on each `u` as `target(u)`.
fn hol_element_acting(l: &LieAlgebraSC, us: &[Vector], target: &dyn Fn(&Vector) -> Vector) -> Result<Vector> {
    let hol = l.holonomy();
    if hol.is_empty() {
        return Err(Error::Identification("holonomy algebra is empty".into()));
    }
    let d = hol[0].nrows();
    let mut a = Matrix::zeros(d * us.len(), hol.len());
    let mut b = Vector::zeros(d * us.len());
    for (m, u) in us.iter().enumerate() {
        for (k, h) in hol.iter().enumerate() {
            a.view_mut((m * d, k), (d, 1)).copy_from(&(h * u));
        }
        b.rows_mut(m * d, d).copy_from(&target(u));
    }
    let x = lstsq(&a, &b);
    let res = (&a * &x - &b).amax();
    if res > 1e-8 * b.amax().max(1.0) {
        return Err(Error::Identification(format!("no holonomy element with the required action (residual {res:e})")));
    }
    let mut out = Vector::zeros(l.dim());
    out.rows_mut(l.tangent_dim(), hol.len()).copy_from(&x);
    Ok(out)
}

fn hol_matrix(l: &LieAlgebraSC, v: &Vector) -> Matrix {
    let t = l.tangent_dim();
    let hol = l.holonomy();
    hol.iter().enumerate().fold(Matrix::zeros(hol[0].nrows(), hol[0].ncols()), |acc, (k, h)| acc + h * v[t + k])
}

fn require_matching(l: &LieAlgebraSC, space: &MetricSpace, xi: &Vector) -> Result<f64> {
    if l.tangent_dim() != space.dim() || xi.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: l.tangent_dim() });
    }
    let g = space.norm2(xi);
    if g.abs() <= TOL_DEG {
        return Err(Error::Identification(format!("g(xi,xi) = {g:e} is degenerate")));
    }
    Ok(g)
}

/// Identifies 𝒥, acting as −J on U.
pub fn kahler_generator(l: &LieAlgebraSC, j: &EpsHermitian, xi: &Vector) -> Result<Vector> {
    require_matching(l, &j.space, xi)?;
    let us: Vec<Vector> = orthogonal_complement(&j.space, &[xi.clone(), &j.j * xi])?.into_iter().map(|(v, _)| v).collect();
    let jm = j.j.clone();
    hol_element_acting(l, &us, &move |u| -(&jm * u))
}

/// Identifies 𝒥₁, 𝒥₂, 𝒥₃, acting as J_a on (ℍξ)^⊥.
pub fn quat_generators(l: &LieAlgebraSC, t: &EpsQuatTriple, xi: &Vector) -> Result<[Vector; 3]> {
    require_matching(l, &t.space, xi)?;
    let mut span = vec![xi.clone()];
    span.extend(t.j.iter().map(|ja| ja * xi));
    let us: Vec<Vector> = orthogonal_complement(&t.space, &span)?.into_iter().map(|(v, _)| v).collect();
    let mut out = [Vector::zeros(0), Vector::zeros(0), Vector::zeros(0)];
    for a in 0..3 {
        let ja = t.j[a].clone();
        out[a] = hol_element_acting(l, &us, &move |u| &ja * u)?;
    }
    Ok(out)
}

/// Checks the bracket tables of the Nomizu algebra against the closed
/// forms. The ε-Kähler table is the Jacobi-consistent one: [ξ,Jξ] = 2gL₀,
/// [ξ,Z] = gZ, [Jξ,Z] = gJZ, [Z₁,Z₂] = ±2g(Z₁,JZ₂)L₀ with L₀ = Jξ + g𝒥.
pub fn verify_reference_brackets(l: &LieAlgebraSC, case: ReferenceCase, tol: f64) -> Result<VerificationReport> {
    match case {
        ReferenceCase::Kahler(data) => verify_kahler_brackets(l, data, tol),
        ReferenceCase::Quat(data) => verify_quat_brackets(l, data, tol),
    }
}

fn verify_kahler_brackets(l: &LieAlgebraSC, data: &KahlerLinearData, tol: f64) -> Result<VerificationReport> {
    let j = &data.structure;
    let sp = &j.space;
    let xi = &data.xi;
    let g = require_matching(l, sp, xi)?;
    let cj = kahler_generator(l, j, xi)?;
    let jxi = &j.j * xi;
    let us: Vec<Vector> = orthogonal_complement(sp, &[xi.clone(), jxi.clone()])?.into_iter().map(|(v, _)| v).collect();
    let e = |v: &Vector| embed_tangent(l, v);
    let br = |a: &Vector, b: &Vector| l.bracket(a, b);
    let l0 = e(&jxi) + &cj * g;
    let kappa = j.eps;

    let mut rep = VerificationReport::default();
    let r1 = (br(&e(xi), &e(&jxi)) - &l0 * (2.0 * g)).amax();
    rep.push(Check::at_most("bracket_xi_jxi", "kahler-brackets", r1, tol));
    let mut r2: f64 = 0.0;
    let mut r3: f64 = 0.0;
    let mut r4: f64 = 0.0;
    let mut r5: f64 = 0.0;
    for z in &us {
        r2 = r2.max((br(&e(xi), &e(z)) - e(z) * g).amax());
        r3 = r3.max((br(&e(&jxi), &e(z)) - e(&(&j.j * z)) * g).amax());
        r5 = r5.max((br(&cj, &e(z)) + e(&(&j.j * z))).amax());
        for w in &us {
            let want = &l0 * (kappa * 2.0 * sp.inner(z, &(&j.j * w)));
            r4 = r4.max((br(&e(z), &e(w)) - want).amax());
        }
    }
    r5 = r5.max(br(&cj, &e(xi)).amax()).max(br(&cj, &e(&jxi)).amax());
    rep.push(Check::at_most("bracket_xi_z", "kahler-brackets", r2, tol));
    rep.push(Check::at_most("bracket_jxi_z", "kahler-brackets", r3, tol));
    rep.push(Check::at_most("bracket_z_z", "kahler-brackets", r4, tol));
    rep.push(Check::at_most("holonomy_action", "holonomy-generator", r5, tol));

    let (s, r) = kahler_pair(&KahlerLinearData { xi: xi.clone(), zeta: Vector::zeros(sp.dim()), structure: j.clone() })?;
    let rt = rtilde(&r, &rs_from_s(&s))?;
    let gen = rt.endo(xi, &jxi) / (2.0 * g * g);
    rep.push(Check::at_most("holonomy_generator", "holonomy-generator", max_abs(&(gen - hol_matrix(l, &cj))), tol));
    Ok(rep)
}

fn verify_quat_brackets(l: &LieAlgebraSC, data: &QuatLinearData, tol: f64) -> Result<VerificationReport> {
    let t = &data.structure;
    let sp = &t.space;
    let xi = &data.xi;
    let g = require_matching(l, sp, xi)?;
    let cj = quat_generators(l, t, xi)?;
    let jx: Vec<Vector> = t.j.iter().map(|ja| ja * xi).collect();
    let mut span = vec![xi.clone()];
    span.extend(jx.iter().cloned());
    let us: Vec<Vector> = orthogonal_complement(sp, &span)?.into_iter().map(|(v, _)| v).collect();
    let e = |v: &Vector| embed_tangent(l, v);
    let br = |a: &Vector, b: &Vector| l.bracket(a, b);
    let eps = t.eps;
    let para = t.e2() > 0.0;
    // J_aξ − g𝒥_a
    let p: Vec<Vector> = (0..3).map(|a| e(&jx[a]) - &cj[a] * g).collect();

    let mut rep = VerificationReport::default();
    let (mut rzz, mut rxz, mut rjz, mut rh): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for z in &us {
        rxz = rxz.max((br(&e(xi), &e(z)) - e(z) * g).amax());
        for a in 0..3 {
            rjz = rjz.max((br(&e(&jx[a]), &e(z)) - e(&(&t.j[a] * z)) * g).amax());
            rh = rh.max((br(&cj[a], &e(z)) - e(&(&t.j[a] * z))).amax());
        }
        for w in &us {
            let mut want = Vector::zeros(l.dim());
            for a in 0..3 {
                want += &p[a] * (2.0 * eps[a] * sp.inner(z, &(&t.j[a] * w)));
            }
            rzz = rzz.max((br(&e(z), &e(w)) - want).amax());
        }
    }
    let mut rxj: f64 = 0.0;
    let mut rjj: f64 = 0.0;
    for a in 0..3 {
        let want = e(&jx[a]) * (2.0 * g) - &cj[a] * (2.0 * g * g);
        rxj = rxj.max((br(&e(xi), &e(&jx[a])) - want).amax());
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let f = if para { eps[c] } else { 1.0 };
        let want = (e(&jx[c]) * (4.0 * g) - &cj[c] * (2.0 * g * g)) * f;
        rjj = rjj.max((br(&e(&jx[a]), &e(&jx[b])) - want).amax());
    }
    rep.push(Check::at_most("bracket_z_z", "quaternion-brackets", rzz, tol));
    rep.push(Check::at_most("bracket_xi_z", "quaternion-brackets", rxz, tol));
    rep.push(Check::at_most("bracket_xi_jxi", "quaternion-brackets", rxj, tol));
    rep.push(Check::at_most("bracket_jxi_z", "quaternion-brackets", rjz, tol));
    rep.push(Check::at_most("bracket_jxi_jxi", "quaternion-brackets", rjj, tol));
    rep.push(Check::at_most("holonomy_action", "holonomy-generator", rh, tol));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Matrix realizations

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelCase {
    ParaKahler,
    PseudoKahler,
    ParaQuat,
    PseudoQuat,
}

impl ModelCase {
    pub fn is_quat(self) -> bool {
        matches!(self, Self::ParaQuat | Self::PseudoQuat)
    }

    pub fn is_para(self) -> bool {
        matches!(self, Self::ParaKahler | Self::ParaQuat)
    }
}

/// Σ = diag((±1)^{n+1−2m}, ε^m) with m = min(n−s, s+1) anti-diagonal blocks
/// ε = [[0,1],[1,0]] and diagonal sign +1 iff n−s > s+1. The signature is
/// (n−s, s+1) in all cases; for 2s < n−1 this is the standard layout.
pub fn sigma_layout(n: usize, s: usize) -> Matrix {
    let nn = n + 1;
    let m = (n - s).min(s + 1);
    let diag = nn - 2 * m;
    let sgn = if n - s > s + 1 { 1.0 } else { -1.0 };
    let mut out = Matrix::zeros(nn, nn);
    for i in 0..diag {
        out[(i, i)] = sgn;
    }
    for b in 0..m {
        let i = diag + 2 * b;
        out[(i, i + 1)] = 1.0;
        out[(i + 1, i)] = 1.0;
    }
    out
}

trait Entry: HyperScalar {
    fn real(&self, x: f64) -> Self;
    fn parts(&self) -> Vec<f64>;
    fn basis_unit(&self, c: usize) -> Self;
}

impl Entry for EpsComplex {
    fn real(&self, x: f64) -> Self {
        Self { re: x, im: 0.0, eps: self.eps }
    }
    fn parts(&self) -> Vec<f64> {
        vec![self.re, self.im]
    }
    fn basis_unit(&self, c: usize) -> Self {
        if c == 0 {
            self.real(1.0)
        } else {
            Self { re: 0.0, im: 1.0, eps: self.eps }
        }
    }
}

impl Entry for EpsQuaternion {
    fn real(&self, x: f64) -> Self {
        Self::from_coeffs([x, 0.0, 0.0, 0.0], self.e2)
    }
    fn parts(&self) -> Vec<f64> {
        self.coeffs().to_vec()
    }
    fn basis_unit(&self, c: usize) -> Self {
        Self::unit(c, self.e2)
    }
}

fn hmat<T: Entry>(nn: usize, like: T, entries: &[((usize, usize), T)]) -> Result<HMatrix<T>> {
    let mut m = HMatrix::zeros(nn, like);
    for ((r, c), v) in entries {
        m.set(*r, *c, m.get(*r, *c).try_add(v)?);
    }
    Ok(m)
}

fn hlin<T: Entry>(terms: &[(f64, &HMatrix<T>)]) -> Result<HMatrix<T>> {
    let n = terms[0].1.n();
    let mut out = HMatrix::zeros(n, terms[0].1.get(0, 0));
    for (c, m) in terms {
        for r in 0..n {
            for k in 0..n {
                out.set(r, k, out.get(r, k).try_add(&m.get(r, k).scale(*c))?);
            }
        }
    }
    Ok(out)
}

fn hmax<T: Entry>(m: &HMatrix<T>) -> f64 {
    let n = m.n();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            r = r.max(m.get(i, k).parts().iter().fold(0.0, |a, v| a.max(v.abs())));
        }
    }
    r
}

/// max |A*Σ + ΣA|.
fn sigma_membership<T: Entry>(a: &HMatrix<T>, sigma: &Matrix) -> Result<f64> {
    let like = a.get(0, 0);
    let sh = HMatrix::from_fn(sigma.nrows(), |r, c| like.real(sigma[(r, c)]));
    let lhs = a.conj_transpose().try_mul(&sh)?;
    let rhs = sh.try_mul(a)?;
    Ok(hmax(&hlin(&[(1.0, &lhs), (1.0, &rhs)])?))
}

fn trace_residual<T: Entry>(a: &HMatrix<T>) -> Result<f64> {
    let mut acc = a.get(0, 0).zero_like();
    for i in 0..a.n() {
        acc = acc.try_add(&a.get(i, i))?;
    }
    Ok(acc.parts().iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Generators over the scalar algebra, before real expansion.
struct RawModel<T: Entry> {
    a0: HMatrix<T>,
    /// X, L₀, or the three matrices J_aξ − g𝒥_a.
    l: Vec<HMatrix<T>>,
    hol: Vec<HMatrix<T>>,
    n2: Vec<HMatrix<T>>,
    /// n₁ elements for the real coordinates (slot r, component c), index r·b + c.
    n1: Vec<HMatrix<T>>,
    sigma: Matrix,
    sigma_prime: Matrix,
}

fn n1_coords<T: Entry>(n: usize, like: T, f: &dyn Fn(usize, T) -> Result<HMatrix<T>>) -> Result<Vec<HMatrix<T>>> {
    let b = T::REAL_DIM;
    let mut out = Vec::with_capacity((n - 1) * b);
    for r in 0..n - 1 {
        for c in 0..b {
            out.push(f(r, like.basis_unit(c))?);
        }
    }
    Ok(out)
}

fn raw_para_kahler(n: usize) -> Result<RawModel<EpsComplex>> {
    let nn = n + 1;
    let (p, q) = (nn - 2, nn - 1);
    let one = EpsComplex::new(1.0, 0.0, 1.0)?;
    let e = EpsComplex::new(0.0, 1.0, 1.0)?;
    let a0 = hmat(nn, one, &[((p, q), e), ((q, p), e)])?;
    let x = hmat(nn, one, &[((p, p), e.scale(-1.0)), ((p, q), one), ((q, p), one.scale(-1.0)), ((q, q), e)])?;
    let cj = HMatrix::from_fn(nn, |r, c| {
        if r != c {
            one.zero_like()
        } else if r < n - 1 {
            e.scale(-2.0 / (n as f64 + 1.0))
        } else {
            e.scale((n as f64 - 1.0) / (n as f64 + 1.0))
        }
    });
    let n1 = n1_coords(n, one, &|r, v| {
        let vs = v.conj();
        hmat(
            nn,
            one,
            &[
                ((r, p), e.try_mul(&v)?.scale(-1.0)),
                ((r, q), v),
                ((p, r), e.try_mul(&vs)?.scale(-1.0)),
                ((q, r), vs.scale(-1.0)),
            ],
        )
    })?;
    let id = Matrix::identity(nn, nn);
    Ok(RawModel { a0, l: vec![x.clone()], hol: vec![cj], n2: vec![x], n1, sigma: id, sigma_prime: Matrix::identity(n - 1, n - 1) })
}

fn raw_pseudo_kahler(n: usize, s: usize) -> Result<RawModel<EpsComplex>> {
    let nn = n + 1;
    let (p, q) = (nn - 2, nn - 1);
    let one = EpsComplex::new(1.0, 0.0, -1.0)?;
    let i = EpsComplex::new(0.0, 1.0, -1.0)?;
    let a0 = hmat(nn, one, &[((p, p), one), ((q, q), one.scale(-1.0))])?;
    let l0 = hmat(nn, one, &[((p, q), i)])?;
    let cj = HMatrix::from_fn(nn, |r, c| {
        if r != c {
            one.zero_like()
        } else if r < n - 1 {
            i.scale(-2.0 / (n as f64 + 1.0))
        } else {
            i.scale((n as f64 - 1.0) / (n as f64 + 1.0))
        }
    });
    let sigma = sigma_layout(n, s);
    let sp = sigma.view((0, 0), (n - 1, n - 1)).into_owned();
    let spc = sp.clone();
    let n1 = n1_coords(n, one, &move |r, v| {
        let mut ent = vec![((r, q), v)];
        for c in 0..n - 1 {
            if spc[(c, r)] != 0.0 {
                ent.push(((p, c), v.conj().scale(-spc[(c, r)])));
            }
        }
        hmat(nn, one, &ent)
    })?;
    Ok(RawModel { a0, l: vec![l0.clone()], hol: vec![cj], n2: vec![l0], n1, sigma, sigma_prime: sp })
}

fn raw_para_quat(n: usize) -> Result<RawModel<EpsQuaternion>> {
    let nn = n + 1;
    let (p, q) = (nn - 2, nn - 1);
    let u = |c: usize| EpsQuaternion::unit(c, 1.0);
    let one = u(0);
    let a0 = hmat(nn, one, &[((p, q), u(2)), ((q, p), u(2))])?;
    let neg = |x: EpsQuaternion| x.scale(-1.0);
    let d1 = hmat(nn, one, &[((p, p), u(1)), ((p, q), neg(u(3))), ((q, p), neg(u(3))), ((q, q), u(1))])?;
    let d2 = hmat(nn, one, &[((p, p), neg(u(2))), ((p, q), one), ((q, p), neg(one)), ((q, q), u(2))])?;
    let d3 = hmat(nn, one, &[((p, p), u(3)), ((p, q), neg(u(1))), ((q, p), neg(u(1))), ((q, q), u(3))])?;
    let hol = vec![
        hmat(nn, one, &[((p, p), neg(u(1))), ((q, q), u(1))])?,
        hmat(nn, one, &[((p, p), u(2)), ((q, q), u(2))])?,
        hmat(nn, one, &[((p, p), neg(u(3))), ((q, q), u(3))])?,
    ];
    let j = u(2);
    let n2 = (1..4)
        .map(|c| {
            let b = u(c);
            hmat(
                nn,
                one,
                &[
                    ((p, p), j.try_mul(&b)?.try_mul(&j)?.scale(-1.0)),
                    ((p, q), j.try_mul(&b)?),
                    ((q, p), b.conj().try_mul(&j)?),
                    ((q, q), b),
                ],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let n1 = n1_coords(n, one, &|r, v| {
        let vb = v.conj();
        hmat(
            nn,
            one,
            &[
                ((r, p), v.try_mul(&j)?.scale(-1.0)),
                ((r, q), v),
                ((p, r), j.try_mul(&vb)?.scale(-1.0)),
                ((q, r), vb.scale(-1.0)),
            ],
        )
    })?;
    Ok(RawModel {
        a0,
        l: vec![d1, d2, d3],
        hol,
        n2,
        n1,
        sigma: Matrix::identity(nn, nn),
        sigma_prime: Matrix::identity(n - 1, n - 1),
    })
}

fn raw_pseudo_quat(n: usize, s: usize) -> Result<RawModel<EpsQuaternion>> {
    let nn = n + 1;
    let (p, q) = (nn - 2, nn - 1);
    let u = |c: usize| EpsQuaternion::unit(c, -1.0);
    let one = u(0);
    let a0 = hmat(nn, one, &[((p, p), one), ((q, q), one.scale(-1.0))])?;
    let l = (1..4).map(|c| hmat(nn, one, &[((p, q), u(c))])).collect::<Result<Vec<_>>>()?;
    let hol = (1..4).map(|c| hmat(nn, one, &[((p, p), u(c)), ((q, q), u(c))])).collect::<Result<Vec<_>>>()?;
    let sigma = sigma_layout(n, s);
    let sp = sigma.view((0, 0), (n - 1, n - 1)).into_owned();
    let spc = sp.clone();
    let n1 = n1_coords(n, one, &move |r, v| {
        let mut ent = vec![((r, q), v)];
        for c in 0..n - 1 {
            if spc[(c, r)] != 0.0 {
                ent.push(((p, c), v.conj().scale(-spc[(c, r)])));
            }
        }
        hmat(nn, one, &ent)
    })?;
    Ok(RawModel { a0, l: l.clone(), hol, n2: l, n1, sigma, sigma_prime: sp })
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixModel {
    pub case: ModelCase,
    pub n: usize,
    pub s: usize,
    pub xi_norm: f64,
    pub ambient: String,
    /// Real Hermitian matrix Σ of the ambient algebra.
    #[serde(skip)]
    pub sigma: Matrix,
    /// Σ′, the form on n₁ ≅ 𝔸^{n−1}.
    #[serde(skip)]
    pub sigma_prime: Matrix,
    #[serde(skip)]
    pub a0: Matrix,
    /// X (para-Kähler), L₀ (pseudo-Kähler) or J_aξ − g𝒥_a (quaternionic).
    #[serde(skip)]
    pub l0: Vec<Matrix>,
    #[serde(skip)]
    pub n1_basis: Vec<Matrix>,
    #[serde(skip)]
    pub n2_basis: Vec<Matrix>,
    #[serde(skip)]
    pub hol: Vec<Matrix>,
    /// Nomizu algebra in the adapted basis.
    #[serde(skip)]
    pub algebra: LieAlgebraSC,
    /// Images of the adapted basis.
    #[serde(skip)]
    pub phi: Vec<Matrix>,
    /// Abstract U coefficients ↦ real coordinates of 𝔸^{n−1} (slot·b + component).
    #[serde(skip)]
    pub u_identification: Matrix,
    pub membership_residual: f64,
    /// |Tr 𝒥| for the ε-Kähler cases.
    pub trace_residual: Option<f64>,
    pub generator_trace_residual: f64,
}

fn check_range(case: ModelCase, n: usize, s: usize, xi_norm: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::Range(format!("n = {n} < 2")));
    }
    if !(xi_norm.is_finite() && xi_norm > 0.0) {
        return Err(Error::Range(format!("g(xi,xi) = {xi_norm} must be positive")));
    }
    if case.is_para() {
        return Ok(0);
    }
    if s == 0 || s >= n {
        return Err(Error::Range(format!("split s = {s} outside 1..={}", n - 1)));
    }
    Ok(s)
}

/// The standard datum of a case: model space, ξ = √g e₀, ζ = 0.
pub enum CaseDatum {
    Kahler(KahlerLinearData),
    Quat(QuatLinearData),
}

impl CaseDatum {
    pub fn new(case: ModelCase, n: usize, s: usize, xi_norm: f64) -> Result<Self> {
        let r = xi_norm.abs().sqrt();
        Ok(match case {
            ModelCase::ParaKahler | ModelCase::PseudoKahler => {
                let eps = if case.is_para() { 1.0 } else { -1.0 };
                let (sp, j) = make_standard_eps_complex(n, s, eps)?;
                let d = sp.dim();
                let mut xi = Vector::zeros(d);
                xi[0] = r;
                Self::Kahler(KahlerLinearData { xi, zeta: Vector::zeros(d), structure: j })
            }
            ModelCase::ParaQuat | ModelCase::PseudoQuat => {
                let e2 = if case.is_para() { 1.0 } else { -1.0 };
                let (sp, t) = make_standard_eps_quat(n, s, [-1.0, e2, e2])?;
                let d = sp.dim();
                let mut xi = Vector::zeros(d);
                xi[0] = r;
                let z = Vector::zeros(d);
                Self::Quat(QuatLinearData { xi, zeta: [z.clone(), z.clone(), z], structure: t })
            }
        })
    }

    pub fn nomizu(&self) -> Result<LieAlgebraSC> {
        let (s, r) = match self {
            Self::Kahler(k) => kahler_pair(k)?,
            Self::Quat(q) => quat_pair(q)?,
        };
        nomizu_build(&s, &r)
    }

    pub fn reference(&self) -> ReferenceCase<'_> {
        match self {
            Self::Kahler(k) => ReferenceCase::Kahler(k),
            Self::Quat(q) => ReferenceCase::Quat(q),
        }
    }
}

/// Nomizu algebra of the standard datum in the adapted basis
/// ξ, Jξ | J₁ξ, J₂ξ, J₃ξ, then e_k spanning U, then 𝒥 | 𝒥₁, 𝒥₂, 𝒥₃.
pub fn adapted_algebra(datum: &CaseDatum) -> Result<LieAlgebraSC> {
    let l = datum.nomizu()?;
    let dd = l.dim();
    let (xi, lead, gens, u0): (Vector, Vec<(String, Vector)>, Vec<(String, Vector)>, usize) = match datum {
        CaseDatum::Kahler(k) => {
            let cj = kahler_generator(&l, &k.structure, &k.xi)?;
            (k.xi.clone(), vec![("Jxi".into(), &k.structure.j * &k.xi)], vec![("cJ".into(), cj)], 2)
        }
        CaseDatum::Quat(q) => {
            let cj = quat_generators(&l, &q.structure, &q.xi)?;
            let lead = (0..3).map(|a| (format!("J{}xi", a + 1), &q.structure.j[a] * &q.xi)).collect();
            let gens = cj.into_iter().enumerate().map(|(a, v)| (format!("cJ{}", a + 1), v)).collect();
            (q.xi.clone(), lead, gens, 4)
        }
    };
    let d = l.tangent_dim();
    if dd != d + gens.len() {
        return Err(Error::Identification(format!("holonomy dimension {} ≠ {}", l.holonomy_dim(), gens.len())));
    }
    let mut b = Matrix::zeros(dd, dd);
    let mut labels = Vec::with_capacity(dd);
    b.set_column(0, &embed_tangent(&l, &xi));
    labels.push(BasisLabel::tangent("xi"));
    for (m, (name, v)) in lead.iter().enumerate() {
        b.set_column(1 + m, &embed_tangent(&l, v));
        labels.push(BasisLabel::tangent(name.clone()));
    }
    for k in u0..d {
        b.set_column(k, &l.unit(k));
        labels.push(BasisLabel::tangent(format!("u{k}")));
    }
    for (m, (name, v)) in gens.iter().enumerate() {
        b.set_column(d + m, v);
        labels.push(BasisLabel::holonomy(name.clone()));
    }
    l.in_basis(&b, labels)
}

fn finish<T: Entry>(case: ModelCase, n: usize, s: usize, g: f64, raw: RawModel<T>, ambient: &str) -> Result<MatrixModel> {
    let datum = CaseDatum::new(case, n, s, g)?;
    let algebra = adapted_algebra(&datum)?;
    let b = T::REAL_DIM;
    let quat = case.is_quat();
    let kahler = !quat;

    // U basis of the model: blocks 1..n of the coordinate basis, identified
    // with a Σ′-orthonormal basis (positives first) times the units.
    let onb: Vec<Vector> = if case.is_para() {
        (0..n - 1).map(|k| Vector::from_fn(n - 1, |i, _| if i == k { 1.0 } else { 0.0 })).collect()
    } else {
        sigma_orthonormal_basis(&raw.sigma_prime)?.into_iter().map(|(v, _)| v).collect()
    };
    let du = (n - 1) * b;
    let mut p = Matrix::zeros(du, du);
    for blk in 0..n - 1 {
        for c in 0..b {
            for r in 0..n - 1 {
                p[(r * b + c, blk * b + c)] = onb[blk][r];
            }
        }
    }
    let expand = |m: &HMatrix<T>| real_matrix_expansion(m);
    let n1r: Vec<Matrix> = raw.n1.iter().map(expand).collect();
    let a0 = expand(&raw.a0);
    let lr: Vec<Matrix> = raw.l.iter().map(expand).collect();
    let holr: Vec<Matrix> = raw.hol.iter().map(expand).collect();

    let mut phi = Vec::with_capacity(algebra.dim());
    phi.push(&a0 * g);
    if kahler {
        // Jξ ↦ −L − g𝒥
        phi.push(-&lr[0] - &holr[0] * g);
    } else {
        // J_aξ ↦ (J_aξ − g𝒥_a) + g𝒥_a
        for a in 0..3 {
            phi.push(&lr[a] + &holr[a] * g);
        }
    }
    for k in 0..du {
        let mut m = Matrix::zeros(a0.nrows(), a0.ncols());
        for row in 0..du {
            if p[(row, k)] != 0.0 {
                m += &n1r[row] * p[(row, k)];
            }
        }
        phi.push(m);
    }
    phi.extend(holr.iter().cloned());
    if phi.len() != algebra.dim() {
        return Err(Error::Identification(format!("{} images for an algebra of dimension {}", phi.len(), algebra.dim())));
    }

    let mut gens: Vec<&HMatrix<T>> = vec![&raw.a0];
    gens.extend(raw.l.iter());
    gens.extend(raw.hol.iter());
    gens.extend(raw.n1.iter());
    gens.extend(raw.n2.iter());
    let mut membership: f64 = 0.0;
    let mut gtrace: f64 = 0.0;
    for m in &gens {
        membership = membership.max(sigma_membership(m, &raw.sigma)?);
        if kahler {
            gtrace = gtrace.max(trace_residual(m)?);
        }
    }
    let trace = if kahler { Some(trace_residual(&raw.hol[0])?) } else { None };
    Ok(MatrixModel {
        case,
        n,
        s,
        xi_norm: g,
        ambient: ambient.into(),
        sigma: raw.sigma,
        sigma_prime: raw.sigma_prime,
        a0,
        l0: lr,
        n1_basis: n1r,
        n2_basis: raw.n2.iter().map(expand).collect(),
        hol: holr,
        algebra,
        phi,
        u_identification: p,
        membership_residual: membership,
        trace_residual: trace,
        generator_trace_residual: gtrace,
    })
}

/// Builds the classical matrix model of a case and the embedding φ of the
/// adapted Nomizu algebra of the standard datum with g(ξ,ξ) = `xi_norm`.
pub fn matrix_realization(case: ModelCase, n: usize, s: usize, xi_norm: f64) -> Result<MatrixModel> {
    let s = check_range(case, n, s, xi_norm)?;
    match case {
        ModelCase::ParaKahler => finish(case, n, s, xi_norm, raw_para_kahler(n)?, &format!("sl({},R) as para-complex skew-Hermitian, trace free", n + 1)),
        ModelCase::PseudoKahler => finish(case, n, s, xi_norm, raw_pseudo_kahler(n, s)?, &format!("su({},{})", n - s, s + 1)),
        ModelCase::ParaQuat => finish(case, n, s, xi_norm, raw_para_quat(n)?, &format!("sp({},R)", n + 1)),
        ModelCase::PseudoQuat => finish(case, n, s, xi_norm, raw_pseudo_quat(n, s)?, &format!("sp({},{})", n - s, s + 1)),
    }
}

/// max over basis pairs of ‖φ([x,y]) − [φ(x),φ(y)]‖, divided by
/// max(1, max‖φ‖)².
pub fn homomorphism_residual(phi: &[Matrix], l: &LieAlgebraSC) -> f64 {
    let d = l.dim();
    if phi.len() != d {
        return f64::INFINITY;
    }
    let scale = phi.iter().map(max_abs).fold(1.0, f64::max);
    let mut r: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut lhs = Matrix::zeros(phi[0].nrows(), phi[0].ncols());
            for k in 0..d {
                let c = l.c(i, j, k);
                if c != 0.0 {
                    lhs += &phi[k] * c;
                }
            }
            r = r.max(max_abs(&(lhs - commutator(&phi[i], &phi[j]))));
        }
    }
    r / (scale * scale)
}

// ---------------------------------------------------------------------------
// Involutions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InvolutionName {
    Sigma,
    Tau,
    Lambda,
    Other,
}

impl InvolutionName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sigma => "sigma",
            Self::Tau => "tau",
            Self::Lambda => "lambda",
            Self::Other => "other",
        }
    }
}

/// Linear map on 𝔤 in its basis (column k = image of b_k).
#[derive(Clone, Debug)]
pub struct InvolutionSpec {
    pub name: InvolutionName,
    pub map: Matrix,
}

pub const INVOLUTIVE_TOL: f64 = 1e-12;
pub const AUTOMORPHISM_TOL: f64 = 1e-10;

impl InvolutionSpec {
    pub fn identity(l: &LieAlgebraSC) -> Self {
        Self { name: InvolutionName::Other, map: Matrix::identity(l.dim(), l.dim()) }
    }

    pub fn involutive_residual(&self) -> f64 {
        let d = self.map.nrows();
        max_abs(&(&self.map * &self.map - Matrix::identity(d, d)))
    }

    /// max ‖T[b_i, b_j] − [T b_i, T b_j]‖.
    pub fn automorphism_residual(&self, l: &LieAlgebraSC) -> f64 {
        let d = l.dim();
        let cols: Vec<Vector> = (0..d).map(|i| self.map.column(i).into_owned()).collect();
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let lhs = &self.map * l.structure(i, j);
                r = r.max((lhs - l.bracket(&cols[i], &cols[j])).amax());
            }
        }
        r
    }

    /// Mixing between tangent and holonomy parts.
    pub fn grading_leak(&self, l: &LieAlgebraSC) -> f64 {
        let d = l.dim();
        let t = l.tangent_dim();
        let mut r: f64 = 0.0;
        for i in 0..d {
            for k in 0..d {
                if (i < t) != (k < t) {
                    r = r.max(self.map[(k, i)].abs());
                }
            }
        }
        r
    }

    pub fn isometry_residual(&self, l: &LieAlgebraSC) -> f64 {
        match l.tangent_metric() {
            None => 0.0,
            Some(g) => {
                let t = l.tangent_dim();
                let m = self.map.view((0, 0), (t, t)).into_owned();
                max_abs(&(m.transpose() * g * &m - g))
            }
        }
    }

    fn validate(&self, l: &LieAlgebraSC, step: usize) -> Result<()> {
        let d = l.dim();
        if self.map.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, got: self.map.nrows() });
        }
        let fail = |check: &str, residual: f64| Error::InvariantViolation {
            step,
            name: self.name.as_str().into(),
            check: check.into(),
            residual,
        };
        let r = self.involutive_residual();
        if !(r < INVOLUTIVE_TOL) {
            return Err(fail("involutive", r));
        }
        let r = self.grading_leak(l);
        if !(r < INVOLUTIVE_TOL) {
            return Err(fail("preserves_holonomy", r));
        }
        let r = self.automorphism_residual(l);
        if !(r < AUTOMORPHISM_TOL * l.max_constant().max(1.0)) {
            return Err(fail("automorphism", r));
        }
        let r = self.isometry_residual(l);
        if !(r < AUTOMORPHISM_TOL) {
            return Err(fail("isometry", r));
        }
        Ok(())
    }
}

/// Subalgebra with its inclusion (columns = new basis in old coordinates).
#[derive(Clone, Debug)]
pub struct FixedSubalgebra {
    pub algebra: LieAlgebraSC,
    pub inclusion: Matrix,
}

fn fixed_vectors(map: &Matrix, range: std::ops::Range<usize>) -> Vec<Vector> {
    let d = map.nrows();
    let block = map.view((range.start, range.start), (range.len(), range.len())).into_owned();
    let offdiag = (0..range.len())
        .flat_map(|i| (0..range.len()).map(move |k| (i, k)))
        .filter(|(i, k)| i != k)
        .fold(0.0f64, |m, (i, k)| m.max(block[(i, k)].abs()));
    let lift = |v: Vector| {
        let mut out = Vector::zeros(d);
        out.rows_mut(range.start, range.len()).copy_from(&v);
        out
    };
    if offdiag < 1e-14 {
        (0..range.len())
            .filter(|&i| (block[(i, i)] - 1.0).abs() < 1e-9)
            .map(|i| lift(Vector::from_fn(range.len(), |k, _| if k == i { 1.0 } else { 0.0 })))
            .collect()
    } else {
        let m = block - Matrix::identity(range.len(), range.len());
        nullspace(&m, 1e-9).into_iter().map(lift).collect()
    }
}

fn label_for(l: &LieAlgebraSC, v: &Vector, fallback: String) -> String {
    let big: Vec<usize> = (0..v.len()).filter(|&k| v[k].abs() > 1e-12).collect();
    if big.len() == 1 && (v[big[0]].abs() - 1.0).abs() < 1e-12 {
        let name = &l.labels()[big[0]].label;
        if v[big[0]] > 0.0 {
            name.clone()
        } else {
            format!("-{name}")
        }
    } else {
        fallback
    }
}

fn fixed_with_inclusion(l: &LieAlgebraSC, inv: &InvolutionSpec, step: usize) -> Result<FixedSubalgebra> {
    inv.validate(l, step)?;
    let t = l.tangent_dim();
    let tv = fixed_vectors(&inv.map, 0..t);
    let hv = fixed_vectors(&inv.map, t..l.dim());
    let mut labels = Vec::new();
    for (k, v) in tv.iter().enumerate() {
        labels.push(BasisLabel::tangent(label_for(l, v, format!("{}{k}", inv.name.as_str()))));
    }
    for (k, v) in hv.iter().enumerate() {
        labels.push(BasisLabel::holonomy(label_for(l, v, format!("{}h{k}", inv.name.as_str()))));
    }
    let mut cols = tv;
    cols.extend(hv);
    let m = cols.len();
    if m == 0 {
        return Ok(FixedSubalgebra { algebra: LieAlgebraSC::abelian(Vec::new(), None)?, inclusion: Matrix::zeros(l.dim(), 0) });
    }
    let e = Matrix::from_columns(&cols);
    let mut c = vec![0.0; m * m * m];
    let mut leak: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let br = l.bracket(&cols[i], &cols[j]);
            let x = lstsq(&e, &br);
            leak = leak.max((&e * &x - br).amax());
            c[(i * m + j) * m..(i * m + j + 1) * m].copy_from_slice(x.as_slice());
        }
    }
    if leak > AUTOMORPHISM_TOL * l.max_constant().max(1.0) {
        return Err(Error::InvariantViolation { step, name: inv.name.as_str().into(), check: "closure".into(), residual: leak });
    }
    let nt = labels.iter().filter(|x| x.part == Part::Tangent).count();
    let metric = l.tangent_metric().map(|g| {
        let et = e.view((0, 0), (t, nt)).into_owned();
        et.transpose() * g * et
    });
    let mut sub = LieAlgebraSC::new(labels, c, metric)?;
    if let Some(h) = l.holonomy_of(&e, nt) {
        sub = sub.with_holonomy(h)?;
    }
    Ok(FixedSubalgebra { algebra: sub, inclusion: e })
}

/// The +1 eigenspace of a verified involutive automorphism.
pub fn fixed_subalgebra(l: &LieAlgebraSC, inv: &InvolutionSpec) -> Result<LieAlgebraSC> {
    Ok(fixed_with_inclusion(l, inv, 0)?.algebra)
}

/// Sign/coordinate description of one of the documented involutions on the
/// adapted algebra. `lead` acts on ξ followed by the Jξ / J_aξ, `hol` on 𝒥
/// / 𝒥_a, `u` on the real coordinates of 𝔸^{n−1} ≅ n₁.
struct InvolutionPlan {
    name: InvolutionName,
    lead: Vec<f64>,
    hol: Vec<f64>,
    u: Matrix,
}

fn plan_matrix(model: &MatrixModel, plan: &InvolutionPlan) -> Result<Matrix> {
    let l = &model.algebra;
    let d = l.dim();
    let nl = plan.lead.len();
    let du = model.u_identification.nrows();
    let p = &model.u_identification;
    let pinv = p.clone().try_inverse().ok_or_else(|| Error::Identification("U identification is singular".into()))?;
    let mut m = Matrix::zeros(d, d);
    for (k, s) in plan.lead.iter().enumerate() {
        m[(k, k)] = *s;
    }
    m.view_mut((nl, nl), (du, du)).copy_from(&(pinv * &plan.u * p));
    let t = l.tangent_dim();
    for (k, s) in plan.hol.iter().enumerate() {
        m[(t + k, t + k)] = *s;
    }
    Ok(m)
}

/// Diagonal map on the real coordinates from per-(slot, component) signs.
fn coord_signs(n: usize, b: usize, f: impl Fn(usize, usize) -> f64) -> Matrix {
    let du = (n - 1) * b;
    Matrix::from_fn(du, du, |i, k| if i == k { f(i / b, i % b) } else { 0.0 })
}

/// Reflection on real vectors of n₁ (one component `comp`) fixing the last
/// negative Σ′-orthonormal vector: in the standard layout the coordinate
/// map (…, v_a, v_b) ↦ (−…, −v_b, −v_a) on the last ε-pair. Other
/// components are negated.
fn negative_reflection(model: &MatrixModel, b: usize, comp: usize) -> Result<Matrix> {
    let n = model.n;
    let basis = sigma_orthonormal_basis(&model.sigma_prime)?;
    let f = basis
        .iter()
        .rev()
        .find(|(_, s)| *s < 0.0)
        .map(|(v, _)| v.clone())
        .ok_or_else(|| Error::Range("Σ′ has no negative direction".into()))?;
    let refl = Matrix::identity(n - 1, n - 1) * -1.0 + (&f * f.transpose()) * (2.0 / f.norm_squared());
    let du = (n - 1) * b;
    let mut out = Matrix::identity(du, du) * -1.0;
    for r in 0..n - 1 {
        for c in 0..n - 1 {
            out[(r * b + comp, c * b + comp)] = refl[(r, c)];
        }
    }
    Ok(out)
}

fn chain_plans(model: &MatrixModel) -> Result<Vec<InvolutionPlan>> {
    let n = model.n;
    let last = n - 2;
    Ok(match model.case {
        ModelCase::ParaKahler => vec![
            // 𝒥 ↦ −𝒥, ξ ↦ ξ, Jξ ↦ −Jξ, v ↦ −v̄
            InvolutionPlan { name: InvolutionName::Sigma, lead: vec![1.0, -1.0], hol: vec![-1.0], u: coord_signs(n, 2, |_, c| if c == 0 { -1.0 } else { 1.0 }) },
            // (v₁,…,v_{n−1}) ↦ (−v₁,…,−v_{n−2}, v_{n−1})
            InvolutionPlan { name: InvolutionName::Tau, lead: vec![1.0, 1.0], hol: vec![1.0], u: coord_signs(n, 2, |r, _| if r == last { 1.0 } else { -1.0 }) },
        ],
        ModelCase::PseudoKahler => vec![
            // v ↦ v̄
            InvolutionPlan { name: InvolutionName::Sigma, lead: vec![1.0, -1.0], hol: vec![-1.0], u: coord_signs(n, 2, |_, c| if c == 0 { 1.0 } else { -1.0 }) },
            InvolutionPlan { name: InvolutionName::Tau, lead: vec![1.0, 1.0], hol: vec![1.0], u: negative_reflection(model, 2, 0)? },
        ],
        ModelCase::ParaQuat => vec![
            // v₁ + iv₂ + jv₃ + kv₄ ↦ v₁ − iv₂ + jv₃ − kv₄
            InvolutionPlan {
                name: InvolutionName::Sigma,
                lead: vec![1.0, -1.0, 1.0, -1.0],
                hol: vec![-1.0, 1.0, -1.0],
                u: coord_signs(n, 4, |_, c| if c % 2 == 0 { 1.0 } else { -1.0 }),
            },
            // v₁ + jv₃ ↦ −v₁ + jv₃
            InvolutionPlan {
                name: InvolutionName::Tau,
                lead: vec![1.0, 1.0, -1.0, 1.0],
                hol: vec![1.0, -1.0, 1.0],
                u: coord_signs(n, 4, |_, c| if c == 2 { 1.0 } else { -1.0 }),
            },
            // (v₁j,…,v_{n−1}j) ↦ (−v₁j,…,−v_{n−2}j, v_{n−1}j)
            InvolutionPlan {
                name: InvolutionName::Lambda,
                lead: vec![1.0, 1.0, 1.0, 1.0],
                hol: vec![1.0, 1.0, 1.0],
                u: coord_signs(n, 4, |r, c| if c == 2 && r == last { 1.0 } else { -1.0 }),
            },
        ],
        ModelCase::PseudoQuat => vec![
            // v₁ + iv₂ + jv₃ + kv₄ ↦ v₁ + iv₂ − jv₃ − kv₄
            InvolutionPlan {
                name: InvolutionName::Sigma,
                lead: vec![1.0, 1.0, -1.0, -1.0],
                hol: vec![1.0, -1.0, -1.0],
                u: coord_signs(n, 4, |_, c| if c < 2 { 1.0 } else { -1.0 }),
            },
            // v₁ + iv₂ ↦ v₁ − iv₂
            InvolutionPlan {
                name: InvolutionName::Tau,
                lead: vec![1.0, -1.0, 1.0, 1.0],
                hol: vec![-1.0, 1.0, 1.0],
                u: coord_signs(n, 4, |_, c| if c == 0 { 1.0 } else { -1.0 }),
            },
            InvolutionPlan { name: InvolutionName::Lambda, lead: vec![1.0; 4], hol: vec![1.0; 3], u: negative_reflection(model, 4, 0)? },
        ],
    })
}

/// The documented involution of step `k` as a map on the full adapted algebra.
pub fn documented_involution(model: &MatrixModel, k: usize) -> Result<InvolutionSpec> {
    let plans = chain_plans(model)?;
    let plan = plans.get(k).ok_or_else(|| Error::Range(format!("no involution step {k}")))?;
    Ok(InvolutionSpec { name: plan.name, map: plan_matrix(model, plan)? })
}

/// Terminal data (A, V) with [A, V] = V and g(A, V) = 0.
#[derive(Clone, Debug, Serialize)]
pub struct KData {
    pub a_norm: f64,
    pub v_norm: f64,
    pub av: f64,
    pub bracket_residual: f64,
    pub metric_signs: (i8, i8),
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainStep {
    pub name: InvolutionName,
    pub dim_before: usize,
    pub dim_after: usize,
    pub involutive_residual: f64,
    pub automorphism_residual: f64,
    pub isometry_residual: f64,
    pub fixed_labels: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub case: ModelCase,
    pub n: usize,
    pub s: usize,
    pub steps: Vec<ChainStep>,
    pub terminal: KData,
}

impl ChainReport {
    /// Terminal algebra is K: [A,V] = V, g(A,V) = 0 and signs (+,−).
    pub fn pass(&self, tol: f64) -> bool {
        self.terminal.bracket_residual <= tol && self.terminal.metric_signs == (1, -1) && self.terminal.av.abs() <= tol
    }
}

fn k_data(l: &LieAlgebraSC) -> Result<KData> {
    let fail = |msg: String| Error::InvariantViolation { step: usize::MAX, name: "terminal".into(), check: msg, residual: f64::NAN };
    if l.dim() != 2 || l.tangent_dim() != 2 {
        return Err(fail(format!("terminal algebra has dimension {} ({} tangent)", l.dim(), l.tangent_dim())));
    }
    let w = l.bracket(&l.unit(0), &l.unit(1));
    let gv = |x: &Vector, y: &Vector| l.metric_value(x, y).unwrap_or(f64::NAN);
    let ww = gv(&w, &w);
    if !(w.amax() > 1e-12 && ww.abs() > 1e-12) {
        return Err(fail("terminal algebra is abelian or its derived algebra is null".into()));
    }
    let v = &w / ww.abs().sqrt();
    // u ⟂ V
    let mut u = l.unit(0);
    if gv(&u, &v).abs() > 0.5 * gv(&u, &u).abs() {
        u = l.unit(1);
    }
    let u = &u - &v * (gv(&u, &v) / gv(&v, &v));
    let bu = l.bracket(&u, &v);
    let lam = bu.dot(&v) / v.dot(&v);
    if lam.abs() < 1e-12 {
        return Err(fail("ad(A) does not act on V".into()));
    }
    let a = &u / lam;
    let res = (l.bracket(&a, &v) - &v).amax();
    let sg = |x: f64| if x > 0.0 { 1 } else { -1 };
    let (aa, vv) = (gv(&a, &a), gv(&v, &v));
    Ok(KData {
        a_norm: aa,
        v_norm: vv,
        av: gv(&a, &v),
        bracket_residual: res,
        metric_signs: (sg(aa), sg(vv)),
        labels: l.labels().iter().map(|x| x.label.clone()).collect(),
    })
}

/// Runs σ, τ (and λ for the quaternionic cases) from the adapted algebra of
/// the realization with g(ξ,ξ) = 1 and returns the terminal K-data.
pub fn involution_chain(case: ModelCase, n: usize, s: usize) -> Result<ChainReport> {
    let model = matrix_realization(case, n, s, 1.0)?;
    run_chain(&model)
}

pub fn run_chain(model: &MatrixModel) -> Result<ChainReport> {
    let plans = chain_plans(model)?;
    let mut current = model.algebra.clone();
    let mut inclusion = Matrix::identity(current.dim(), current.dim());
    let mut steps = Vec::new();
    for (k, plan) in plans.iter().enumerate() {
        let full = plan_matrix(model, plan)?;
        // restrict to the current subalgebra
        let image = &full * &inclusion;
        let pinv = inclusion.clone().pseudo_inverse(1e-12).map_err(|e| Error::Identification(e.into()))?;
        let restricted = &pinv * &image;
        let leak = max_abs(&(&inclusion * &restricted - image));
        if leak > INVOLUTIVE_TOL {
            return Err(Error::InvariantViolation { step: k, name: plan.name.as_str().into(), check: "preserves_subalgebra".into(), residual: leak });
        }
        let inv = InvolutionSpec { name: plan.name, map: restricted };
        let fixed = fixed_with_inclusion(&current, &inv, k)?;
        steps.push(ChainStep {
            name: plan.name,
            dim_before: current.dim(),
            dim_after: fixed.algebra.dim(),
            involutive_residual: inv.involutive_residual(),
            automorphism_residual: inv.automorphism_residual(&current),
            isometry_residual: inv.isometry_residual(&current),
            fixed_labels: fixed.algebra.labels().iter().map(|x| x.label.clone()).collect(),
        });
        inclusion = &inclusion * &fixed.inclusion;
        current = fixed.algebra;
    }
    let terminal = k_data(&current)?;
    Ok(ChainReport { case: model.case, n: model.n, s: model.s, steps, terminal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::seeded_rng;
    use crate::pseudolinear::random_anisotropic_vector;
    use crate::structures::rotate_triple;

    fn kahler_datum(n: usize, s: usize, eps: f64, seed: u64) -> KahlerLinearData {
        let (sp, j) = make_standard_eps_complex(n, s, eps).unwrap();
        let xi = random_anisotropic_vector(&sp, seed);
        KahlerLinearData { xi, zeta: Vector::zeros(sp.dim()), structure: j }
    }

    fn quat_datum(n: usize, s: usize, e2: f64, seed: u64) -> QuatLinearData {
        let (sp, t) = make_standard_eps_quat(n, s, [-1.0, e2, e2]).unwrap();
        let t = rotate_triple(&t, seed);
        let xi = random_anisotropic_vector(&sp, seed + 100);
        let z = Vector::zeros(sp.dim());
        QuatLinearData { xi, zeta: [z.clone(), z.clone(), z], structure: t }
    }

    fn build_k(d: &KahlerLinearData) -> LieAlgebraSC {
        let (s, r) = kahler_pair(d).unwrap();
        nomizu_build(&s, &r).unwrap()
    }

    fn build_q(d: &QuatLinearData) -> LieAlgebraSC {
        let (s, r) = quat_pair(d).unwrap();
        nomizu_build(&s, &r).unwrap()
    }

    #[test]
    fn flat_symmetric_case_is_abelian() {
        let sp = MetricSpace::from_diagonal(&[1.0, -1.0, 1.0]).unwrap();
        let l = nomizu_build(&STensor::zero(&sp), &Curvature4::zero(&sp, crate::curvature::Convention::Direct)).unwrap();
        assert_eq!(l.dim(), 3);
        assert_eq!(l.holonomy_dim(), 0);
        assert_eq!(l.max_constant(), 0.0);
        assert_eq!(jacobi_residual(&l), 0.0);
        assert!(holonomy_span(&Curvature4::zero(&sp, crate::curvature::Convention::Direct)).unwrap().basis.is_empty());
    }

    #[test]
    fn kahler_algebras() {
        for (n, s, eps) in [(2, 0, 1.0), (2, 1, -1.0), (3, 0, 1.0), (3, 1, -1.0), (2, 0, -1.0)] {
            for seed in 0..3 {
                let d = kahler_datum(n, s, eps, seed);
                let l = build_k(&d);
                assert_eq!(l.dim(), 2 * n + 1);
                assert_eq!(l.holonomy_dim(), 1);
                assert!(jacobi_residual(&l) < 1e-10, "{n} {s} {eps}: {}", jacobi_residual(&l));
                assert!(l.antisymmetry_residual() < 1e-12);
                assert!(l.grading_residual() == 0.0);
                let rep = verify_reference_brackets(&l, ReferenceCase::Kahler(&d), 1e-10).unwrap();
                assert!(rep.pass(), "{n} {s} {eps} {:?}", rep.failing().collect::<Vec<_>>());
                let span = EndomorphismSpan { basis: l.holonomy().to_vec() };
                assert!(span.skew_residual(&d.structure.space) < 1e-12);
                assert!(span.normalizer_residual(&[d.structure.j.clone()]) < 1e-12);
            }
        }
    }

    #[test]
    fn quaternion_algebras() {
        for (n, s, e2) in [(2, 0, 1.0), (2, 1, -1.0), (2, 0, -1.0)] {
            for seed in 0..2 {
                let d = quat_datum(n, s, e2, seed);
                let l = build_q(&d);
                assert_eq!(l.dim(), 4 * n + 3);
                assert_eq!(l.holonomy_dim(), 3);
                assert!(jacobi_residual(&l) < 1e-10);
                let rep = verify_reference_brackets(&l, ReferenceCase::Quat(&d), 1e-10).unwrap();
                assert!(rep.pass(), "{n} {s} {e2} {:?}", rep.failing().collect::<Vec<_>>());
                let span = EndomorphismSpan { basis: l.holonomy().to_vec() };
                assert!(span.closure_residual() < 1e-12);
                assert!(span.normalizer_residual(&d.structure.j) < 1e-12);
            }
        }
    }

    #[test]
    fn quaternion_holonomy_is_sp1() {
        // commutators of 𝒥_a follow the ε-quaternion pattern of the J_a
        let d = quat_datum(2, 0, 1.0, 3);
        let l = build_q(&d);
        let cj = quat_generators(&l, &d.structure, &d.xi).unwrap();
        let m: Vec<Matrix> = cj.iter().map(|v| hol_matrix(&l, v)).collect();
        let jspan = EndomorphismSpan { basis: m.clone() };
        for a in 0..3 {
            for b in 0..3 {
                let (x, res) = jspan.coords(&commutator(&m[a], &m[b]));
                assert!(res < 1e-10);
                let (y, _) = EndomorphismSpan { basis: d.structure.j.to_vec() }.coords(&commutator(&d.structure.j[a], &d.structure.j[b]));
                assert!((x - y).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn grading_matches_componentwise_rederivation() {
        let d = kahler_datum(2, 1, -1.0, 5);
        let (s, r) = kahler_pair(&d).unwrap();
        let l = nomizu_build(&s, &r).unwrap();
        let rt = rtilde(&r, &rs_from_s(&s)).unwrap();
        let dim = s.dim();
        let e = |i: usize| Vector::from_fn(dim, |k, _| if k == i { 1.0 } else { 0.0 });
        for i in 0..dim {
            for j in 0..dim {
                let v = l.structure(i, j);
                let tang = s.apply(&e(i), &e(j)) - s.apply(&e(j), &e(i));
                assert!((v.rows(0, dim) - tang).amax() < 1e-12);
                assert!(max_abs(&(hol_matrix(&l, &v) - rt.endo(&e(i), &e(j)))) < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_detects_perturbation() {
        let d = kahler_datum(2, 0, 1.0, 1);
        let l = build_k(&d);
        let mut worst: f64 = 0.0;
        for (i, j, k) in [(0, 2, 2), (0, 1, 4), (2, 3, 0)] {
            let p = l.with_constant(i, j, k, l.c(i, j, k) + 0.1);
            worst = worst.max(jacobi_residual(&p));
        }
        assert!(worst >= 1e-2, "{worst}");
    }

    #[test]
    fn degenerate_reference_is_identification_error() {
        let d = kahler_datum(2, 0, 1.0, 2);
        let l = build_k(&d);
        let mut bad = d.clone();
        bad.xi = Vector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(verify_reference_brackets(&l, ReferenceCase::Kahler(&bad), 1e-10), Err(Error::Identification(_))));
    }

    #[test]
    fn realizations_are_homomorphisms() {
        for (case, n, s) in [
            (ModelCase::ParaKahler, 2, 0),
            (ModelCase::ParaKahler, 3, 0),
            (ModelCase::PseudoKahler, 2, 1),
            (ModelCase::PseudoKahler, 4, 1),
            (ModelCase::PseudoKahler, 3, 2),
            (ModelCase::ParaQuat, 2, 0),
            (ModelCase::PseudoQuat, 2, 1),
            (ModelCase::PseudoQuat, 3, 1),
            (ModelCase::PseudoQuat, 4, 1),
        ] {
            for g in [1.0, 0.5, 2.0] {
                let m = matrix_realization(case, n, s, g).unwrap();
                let r = homomorphism_residual(&m.phi, &m.algebra);
                assert!(r < 1e-9, "{case:?} {n} {s} {g}: {r}");
                assert!(m.membership_residual < 1e-12, "{case:?} membership {}", m.membership_residual);
                if let Some(t) = m.trace_residual {
                    assert!(t < 1e-13);
                    assert!(m.generator_trace_residual < 1e-13);
                }
            }
        }
    }

    #[test]
    fn realization_sensitivity_and_identity() {
        let m = matrix_realization(ModelCase::ParaKahler, 2, 0, 1.0).unwrap();
        let mut phi = m.phi.clone();
        phi[0] = &m.a0 * 2.0;
        assert!(homomorphism_residual(&phi, &m.algebra) > 0.1);
        // matrix algebra spanned by the images, mapped to itself
        let l = &m.algebra;
        assert!(homomorphism_residual(&m.phi, l) < 1e-12);
    }

    #[test]
    fn restricted_roots() {
        for case in [ModelCase::ParaKahler, ModelCase::PseudoKahler, ModelCase::ParaQuat, ModelCase::PseudoQuat] {
            let (n, s) = if case.is_para() { (2, 0) } else { (3, 1) };
            let m = matrix_realization(case, n, s, 1.0).unwrap();
            for v in &m.n1_basis {
                assert!(max_abs(&(commutator(&m.a0, v) - v)) < 1e-13, "{case:?}");
            }
            for q in &m.n2_basis {
                assert!(max_abs(&(commutator(&m.a0, q) - q * 2.0)) < 1e-13, "{case:?}");
            }
        }
    }

    #[test]
    fn trace_of_generator() {
        // −2(n−1) + 2(n−1) = 0
        for n in 2..6 {
            let m = matrix_realization(ModelCase::ParaKahler, n, 0, 1.0).unwrap();
            assert!(m.trace_residual.unwrap() < 1e-13);
        }
        let m = matrix_realization(ModelCase::PseudoKahler, 4, 1, 1.0).unwrap();
        let expect_a0 = {
            let mut e = Matrix::zeros(10, 10);
            e[(6, 6)] = 1.0;
            e[(7, 7)] = 1.0;
            e[(8, 8)] = -1.0;
            e[(9, 9)] = -1.0;
            e
        };
        assert_eq!(m.a0, expect_a0);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(matrix_realization(ModelCase::PseudoKahler, 3, 0, 1.0), Err(Error::Range(_))));
        assert!(matches!(matrix_realization(ModelCase::PseudoQuat, 3, 3, 1.0), Err(Error::Range(_))));
        assert!(matches!(matrix_realization(ModelCase::ParaKahler, 1, 0, 1.0), Err(Error::Range(_))));
        assert!(matches!(matrix_realization(ModelCase::ParaQuat, 2, 0, -1.0), Err(Error::Range(_))));
    }

    #[test]
    fn sigma_layout_signature() {
        for n in 2..7 {
            for s in 0..n {
                let sg = sigma_layout(n, s);
                let eig = sg.symmetric_eigen();
                let pos = eig.eigenvalues.iter().filter(|v| **v > 0.0).count();
                assert_eq!((pos, n + 1 - pos), (n - s, s + 1));
            }
        }
    }

    #[test]
    fn identity_involution_fixes_everything() {
        let d = kahler_datum(2, 0, 1.0, 4);
        let l = build_k(&d);
        let f = fixed_subalgebra(&l, &InvolutionSpec::identity(&l)).unwrap();
        assert_eq!(f.dim(), l.dim());
        assert_eq!(f.constants(), l.constants());
    }

    #[test]
    fn sigma_excludes_generator_and_bare_negation_is_rejected() {
        let m = matrix_realization(ModelCase::PseudoKahler, 3, 1, 1.0).unwrap();
        let sigma = documented_involution(&m, 0).unwrap();
        let f = fixed_subalgebra(&m.algebra, &sigma).unwrap();
        assert!(f.labels().iter().all(|x| x.part == Part::Tangent));
        let mut bare = Matrix::identity(m.algebra.dim(), m.algebra.dim());
        let last = m.algebra.dim() - 1;
        bare[(last, last)] = -1.0;
        let err = fixed_subalgebra(&m.algebra, &InvolutionSpec { name: InvolutionName::Other, map: bare }).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { ref check, .. } if check == "automorphism"), "{err}");
        let mut half = Matrix::identity(m.algebra.dim(), m.algebra.dim());
        half[(0, 0)] = 0.5;
        let err = fixed_subalgebra(&m.algebra, &InvolutionSpec { name: InvolutionName::Other, map: half }).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { ref check, .. } if check == "involutive"));
    }

    #[test]
    fn para_kahler_chain_gives_two_dimensional_k() {
        for n in [2, 3, 4] {
            let c = involution_chain(ModelCase::ParaKahler, n, 0).unwrap();
            assert_eq!(c.steps.len(), 2);
            assert_eq!(c.steps.last().unwrap().dim_after, 2);
            assert!(c.pass(1e-10), "{c:?}");
            assert!((c.terminal.a_norm - 1.0).abs() < 1e-12);
            assert!((c.terminal.v_norm + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chains_for_all_cases() {
        for (case, n, s, steps) in [
            (ModelCase::PseudoKahler, 4, 1, 2),
            (ModelCase::PseudoKahler, 3, 2, 2),
            (ModelCase::PseudoKahler, 2, 1, 2),
            (ModelCase::ParaQuat, 2, 0, 3),
            (ModelCase::ParaQuat, 3, 0, 3),
            (ModelCase::PseudoQuat, 3, 1, 3),
            (ModelCase::PseudoQuat, 4, 1, 3),
        ] {
            let c = involution_chain(case, n, s).unwrap();
            assert_eq!(c.steps.len(), steps);
            for st in &c.steps {
                assert!(st.involutive_residual < 1e-12 && st.automorphism_residual < 1e-10 && st.isometry_residual < 1e-10);
            }
            assert!(c.pass(1e-10), "{case:?} {n} {s}: {c:?}");
        }
    }

    #[test]
    fn reflection_matches_coordinate_form() {
        // standard layout: the last ε-pair (a, b) ↦ (−b, −a), others negated
        let m = matrix_realization(ModelCase::PseudoKahler, 4, 1, 1.0).unwrap();
        let r = negative_reflection(&m, 2, 0).unwrap();
        let mut want = Matrix::identity(6, 6) * -1.0;
        // real components sit at indices 0, 2, 4; the ε-pair is slots 1, 2
        want[(2, 2)] = 0.0;
        want[(4, 4)] = 0.0;
        want[(2, 4)] = -1.0;
        want[(4, 2)] = -1.0;
        assert!(max_abs(&(r - want)) < 1e-15);
    }

    #[test]
    fn jacobi_sweep_random_seeds() {
        let mut rng = seeded_rng(11);
        let _ = &mut rng;
        for seed in 10..15 {
            let l = build_k(&kahler_datum(3, 2, -1.0, seed));
            assert!(jacobi_residual(&l) < 1e-10);
        }
    }
}
