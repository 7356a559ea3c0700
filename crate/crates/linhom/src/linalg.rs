//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector, Dyn, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Deterministic generator used everywhere a seed is accepted.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in [-1, 1].
pub fn uniform_pm1(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..=1.0)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| uniform_pm1(rng))
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}

const SVD_SWEEPS: usize = 2000;
const JACOBI_SWEEPS: usize = 100;

/// Thin SVD whose factorization is verified by recomposition. nalgebra's
/// Golub–Kahan iteration occasionally returns wrong factors for
/// rank-deficient inputs with many zero entries; the transpose is tried
/// next and a one-sided Jacobi SVD is the last resort.
pub fn checked_svd(a: &Matrix) -> SVD<f64, Dyn, Dyn> {
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let ok = |s: &SVD<f64, Dyn, Dyn>| s.clone().recompose().map(|r| max_abs(&(r - a)) <= 1e-10 * scale).unwrap_or(false);
    // `svd` iterates without bound and can spin forever; cap the sweeps.
    let bounded = |m: Matrix| m.try_svd(true, true, f64::EPSILON, SVD_SWEEPS);
    if let Some(direct) = bounded(a.clone()).filter(&ok) {
        return direct;
    }
    if let Some(t) = bounded(a.transpose()) {
        let swapped = transposed(t);
        if ok(&swapped) {
            return swapped;
        }
    }
    if a.nrows() >= a.ncols() {
        jacobi_svd(a)
    } else {
        transposed(jacobi_svd(&a.transpose()))
    }
}

fn transposed(t: SVD<f64, Dyn, Dyn>) -> SVD<f64, Dyn, Dyn> {
    SVD {
        u: t.v_t.map(|v| v.transpose()),
        v_t: t.u.map(|u| u.transpose()),
        singular_values: t.singular_values,
    }
}

/// One-sided (Hestenes) Jacobi SVD for `nrows >= ncols`. Columns of `u`
/// belonging to zero singular values are left zero.
fn jacobi_svd(a: &Matrix) -> SVD<f64, Dyn, Dyn> {
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = Matrix::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, i)], m[(r, j)]);
                        m[(r, i)] = c * x - s * y;
                        m[(r, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let u = Matrix::from_fn(a.nrows(), n, |r, c| {
        let k = order[c];
        if norms[k] > 0.0 { w[(r, k)] / norms[k] } else { 0.0 }
    });
    let v_t = Matrix::from_fn(n, n, |r, c| v[(c, order[r])]);
    SVD { u: Some(u), v_t: Some(v_t), singular_values: DVector::from_fn(n, |c, _| norms[order[c]]) }
}

/// Orthonormal (Euclidean) basis of the null space of `a`, with singular
/// values below `rel_tol * sigma_max` counted as zero.
pub fn nullspace(a: &Matrix, rel_tol: f64) -> Vec<Vector> {
    let (m, n) = a.shape();
    if n == 0 {
        return Vec::new();
    }
    let padded = if m < n {
        let mut p = Matrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else if m > n {
        // Same kernel, and the SVD only sees an n×n factor.
        a.clone().qr().r()
    } else {
        a.clone()
    };
    let svd = checked_svd(&padded);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = if smax > 0.0 { rel_tol * smax } else { 0.0 };
    (0..n)
        .filter(|&k| svd.singular_values[k] <= cutoff)
        .map(|k| v_t.row(k).transpose())
        .collect()
}

/// Orthonormal basis for the column span of `a`.
pub fn column_basis(a: &Matrix, rel_tol: f64) -> Vec<Vector> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Vec::new();
    }
    let svd = checked_svd(a);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Vec::new();
    }
    (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rel_tol * smax)
        .map(|k| u.column(k).into_owned())
        .collect()
}

/// Least-squares solution of `a x = b`.
pub fn lstsq(a: &Matrix, b: &Vector) -> Vector {
    let svd = checked_svd(a);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, 1e-12 * smax.max(1e-300))
        .expect("svd factors computed")
}

/// Column-stacked flattening of a square matrix.
pub fn vec_of(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &Vector, n: usize) -> Matrix {
    Matrix::from_column_slice(n, n, v.as_slice())
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * scale;
    let mut term = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for k in 1..=18 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_one() {
        let a = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = nullspace(&a, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&a * v).norm() < 1e-12);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = expm(&(a * std::f64::consts::FRAC_PI_2));
        let want = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(max_abs(&(e - want)) < 1e-13);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = Vector::from_vec(vec![2.0, -3.0]);
        let b = &a * &x;
        assert!((lstsq(&a, &b) - x).norm() < 1e-12);
    }

    fn sparse_low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> Matrix {
        let mut rng = seeded_rng(seed);
        let mut l = Matrix::from_fn(rows, rank, |_, _| uniform_pm1(&mut rng));
        let r = Matrix::from_fn(rank, cols, |_, _| uniform_pm1(&mut rng));
        for v in l.iter_mut() {
            if uniform_pm1(&mut rng) > 0.0 {
                *v = 0.0;
            }
        }
        l * r
    }

    #[test]
    fn jacobi_svd_factors_tall_matrix() {
        let a = sparse_low_rank(9, 5, 3, 11);
        let svd = jacobi_svd(&a);
        let sv = &svd.singular_values;
        assert!(sv.iter().zip(sv.iter().skip(1)).all(|(x, y)| x >= y));
        assert!(sv[3] < 1e-12 * sv[0]);
        let v_t = svd.v_t.clone().unwrap();
        assert!(max_abs(&(&v_t * v_t.transpose() - Matrix::identity(5, 5))) < 1e-13);
        assert!(max_abs(&(svd.recompose().unwrap() - a)) < 1e-13);
    }

    proptest::proptest! {
        #[test]
        fn checked_svd_recomposes(rows in 1usize..40, cols in 1usize..40, rank in 0usize..6, seed in 0u64..1000) {
            let a = sparse_low_rank(rows, cols, rank, seed);
            let scale = max_abs(&a).max(1.0);
            let svd = checked_svd(&a);
            proptest::prop_assert!(max_abs(&(svd.recompose().unwrap() - &a)) <= 1e-10 * scale);
            let basis = column_basis(&a, 1e-9);
            proptest::prop_assert!(basis.len() <= rank.min(rows).min(cols));
        }
    }
}
