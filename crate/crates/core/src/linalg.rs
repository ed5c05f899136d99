//! Dense helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector, Dyn, SVD};

use crate::exterior::Endo;

/// Column-major 49-vector of an endomorphism.
pub fn endo_vec(a: &Endo) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn vec_endo(v: &[f64]) -> Endo {
    Endo::from_column_slice(v)
}

const SVD_MAX_ITER: usize = 10_000;

/// Deterministic orthogonal matrix, the Q factor of a fixed dense matrix.
fn rotation(n: usize, salt: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| ((i * 31 + j * 17 + salt * 7 + 1) as f64).sin());
    a.qr().q()
}

/// SVD with an iteration cap. The implicit QR sweep occasionally stalls on
/// highly structured inputs; the same problem rotated on the right converges,
/// and `V^T` is rotated back so callers see an SVD of `m` itself.
pub fn svd(m: &DMatrix<f64>, compute_u: bool, compute_v: bool) -> SVD<f64, Dyn, Dyn> {
    let attempt = |a: DMatrix<f64>| a.try_svd(compute_u, compute_v, f64::EPSILON, SVD_MAX_ITER).filter(is_finite);
    if let Some(s) = attempt(m.clone()) {
        return s;
    }
    for salt in 1..=8 {
        let r = rotation(m.ncols(), salt);
        if let Some(mut s) = attempt(m * &r) {
            if let Some(vt) = s.v_t.as_mut() {
                *vt = &*vt * r.transpose();
            }
            return s;
        }
    }
    panic!("SVD failed to converge on a {}x{} matrix", m.nrows(), m.ncols());
}

fn is_finite(s: &SVD<f64, Dyn, Dyn>) -> bool {
    let ok = |m: &Option<DMatrix<f64>>| m.as_ref().is_none_or(|m| m.iter().all(|x| x.is_finite()));
    s.singular_values.iter().all(|x| x.is_finite()) && ok(&s.u) && ok(&s.v_t)
}

/// Orthonormal basis of the kernel, with cutoff `rel_tol * sigma_max`.
pub fn nullspace(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = svd(&padded, false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return (0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    }
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= rel_tol * smax)
        .map(|(i, _)| vt.row(i).transpose())
        .collect()
}

/// Orthonormal basis of the column span, with cutoff `rel_tol * sigma_max`.
pub fn column_span(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let svd = svd(m, true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| smax > 0.0 && **s > rel_tol * smax)
        .map(|(i, _)| u.column(i).into_owned())
        .collect()
}

/// Moore-Penrose pseudo-inverse, truncating below `rel_tol * sigma_max`.
pub fn pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = svd(m, true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    svd.pseudo_inverse(rel_tol * smax).expect("non-negative epsilon")
}

/// Ratio of smallest to largest singular value.
pub fn inverse_condition(m: &DMatrix<f64>) -> f64 {
    let s = svd(m, false, false).singular_values;
    let smax = s.max();
    if smax == 0.0 { 0.0 } else { s.min() / smax }
}

/// Minimum-norm least-squares solution and the residual norm `|m x - b|`.
pub fn lstsq(m: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, f64) {
    let x = pinv(m, rel_tol) * b;
    let r = (m * &x - b).norm();
    (x, r)
}
