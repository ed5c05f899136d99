//! Lie brackets on R^7 and the left-invariant geometry they induce.
//!
//! `c[i][j][k] = c_ij^k` with `mu(e_i, e_j) = sum_k c_ij^k e_k`; indices are 0-based.

use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{indices, masks, position, wedge_sign, Endo, KForm, Metric, Vec7, DIM};
use crate::linalg::{nullspace, vec_endo};

const N3: usize = DIM * DIM * DIM;
/// Number of independent structure constants (i < j).
pub const NPAIRS: usize = 147;
const JACOBI_TOL: f64 = 1e-9;

#[inline]
fn at(i: usize, j: usize, k: usize) -> usize {
    (i * DIM + j) * DIM + k
}

/// Skew-symmetric bilinear map on R^7; not necessarily a Lie bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    c: Vec<f64>,
}

impl Default for Bracket {
    fn default() -> Self {
        Self::zero()
    }
}

impl Bracket {
    pub fn zero() -> Self {
        Self { c: vec![0.0; N3] }
    }

    /// From 1-based triples `(i, j, k, c_ij^k)`; later triples add to earlier ones.
    pub fn from_triples(t: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut b = Self::zero();
        for &(i, j, k, v) in t {
            if !(1..=DIM).contains(&i) || !(1..=DIM).contains(&j) || !(1..=DIM).contains(&k) || i == j {
                return Err(Error::Parse(format!("bad structure constant index ({i},{j},{k})")));
            }
            let cur = b.get(i - 1, j - 1, k - 1);
            b.set(i - 1, j - 1, k - 1, cur + v);
        }
        Ok(b)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[at(i, j, k)]
    }

    /// Sets `c_ij^k = v` and `c_ji^k = -v`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        assert_ne!(i, j, "c_ii^k is always zero");
        self.c[at(i, j, k)] = v;
        self.c[at(j, i, k)] = -v;
    }

    /// Independent constants `c_ij^k`, i < j, in lexicographic (i, j, k) order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(NPAIRS);
        for i in 0..DIM {
            for j in i + 1..DIM {
                v.extend_from_slice(&self.c[at(i, j, 0)..at(i, j, 0) + DIM]);
            }
        }
        v
    }

    pub fn from_vec(v: &[f64]) -> Self {
        assert_eq!(v.len(), NPAIRS);
        let mut b = Self::zero();
        let mut p = 0;
        for i in 0..DIM {
            for j in i + 1..DIM {
                for k in 0..DIM {
                    b.set(i, j, k, v[p]);
                    p += 1;
                }
            }
        }
        b
    }

    /// Nonzero constants as 1-based `(i, j, k, v)` with i < j.
    pub fn triples(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..DIM {
            for j in i + 1..DIM {
                for k in 0..DIM {
                    let v = self.get(i, j, k);
                    if v != 0.0 {
                        out.push((i + 1, j + 1, k + 1, v));
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &Vec7, y: &Vec7) -> Vec7 {
        let mut out = Vec7::zeros();
        for i in 0..DIM {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..DIM {
                let w = x[i] * y[j];
                if w != 0.0 {
                    for k in 0..DIM {
                        out[k] += w * self.get(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// Norm summing over all ordered pairs: `|mu|^2 = sum_{i,j,k} (c_ij^k)^2`.
    pub fn norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.c.iter().zip(&other.c).map(|(a, b)| a * b).sum()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.c.iter().zip(&other.c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.c.iter_mut().for_each(|x| *x *= s);
        self
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.c.iter_mut().zip(&x.c).for_each(|(c, d)| *c += a * d);
    }

    /// `ad_x` as a matrix: column j is `mu(x, e_j)`.
    pub fn ad(&self, x: &Vec7) -> Endo {
        let mut m = Endo::zeros();
        for j in 0..DIM {
            m.set_column(j, &self.apply(x, &Vec7::ith(j, 1.0)));
        }
        m
    }

    /// `tr ad_{e_i} = 0` for every i.
    pub fn is_unimodular(&self, tol: f64) -> bool {
        (0..DIM).all(|i| (0..DIM).map(|j| self.get(i, j, j)).sum::<f64>().abs() <= tol)
    }

    /// The 2-forms `d e^k = -sum_{i<j} c_ij^k e^{ij}`.
    pub fn d_coframe(&self) -> [KForm; DIM] {
        std::array::from_fn(|k| {
            let mut w = KForm::zero(2);
            for &m in masks(2) {
                let mut it = indices(m);
                let (i, j) = (it.next().unwrap(), it.next().unwrap());
                w.coeffs_mut()[position(m)] = -self.get(i, j, k);
            }
            w
        })
    }
}

/// `max |J(e_i, e_j, e_k)^l|` over i < j < k.
pub fn jacobi_residual(b: &Bracket) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..DIM {
        for j in i + 1..DIM {
            for k in j + 1..DIM {
                for l in 0..DIM {
                    let mut s = 0.0;
                    for m in 0..DIM {
                        s += b.get(i, j, m) * b.get(m, k, l)
                            + b.get(j, k, m) * b.get(m, i, l)
                            + b.get(k, i, m) * b.get(m, j, l);
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// A bracket satisfying the Jacobi identity to tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct LieBracket(Bracket);

impl LieBracket {
    pub fn new(b: Bracket) -> Result<Self> {
        let r = jacobi_residual(&b);
        let scale = b.norm().powi(2).max(1.0);
        if r > JACOBI_TOL * scale {
            return Err(Error::Jacobi(r));
        }
        Ok(Self(b))
    }

    pub fn from_triples(t: &[(usize, usize, usize, f64)]) -> Result<Self> {
        Self::new(Bracket::from_triples(t)?)
    }

    /// Skips the Jacobi check; for states along a flow that preserves it.
    pub fn new_unchecked(b: Bracket) -> Self {
        Self(b)
    }

    pub fn into_inner(self) -> Bracket {
        self.0
    }
}

impl Deref for LieBracket {
    type Target = Bracket;
    fn deref(&self) -> &Bracket {
        &self.0
    }
}

/// Chevalley-Eilenberg differential of a left-invariant form.
pub fn ce_differential(mu: &Bracket, a: &KForm) -> Result<KForm> {
    if a.degree() == DIM {
        return Err(Error::DegreeOverflow(DIM, 1));
    }
    Ok(differential_with(&mu.d_coframe(), a))
}

fn differential_with(de: &[KForm; DIM], a: &KForm) -> KForm {
    let mut out = KForm::zero(a.degree() + 1);
    for (mask, c) in a.terms() {
        for (slot, i) in indices(mask).enumerate() {
            let rest = mask & !(1 << i);
            let sign = if slot % 2 == 0 { c } else { -c };
            for (m2, w) in de[i].terms() {
                if m2 & rest == 0 {
                    out.add_mask(m2 | rest, sign * w * wedge_sign(m2, rest));
                }
            }
        }
    }
    out
}

/// Hodge Laplacian `d d^* + d^* d` of the left-invariant metric `g`.
///
/// `d^*` is the formal adjoint `(-1)^p * d *` on p-forms; it is the
/// L^2-adjoint of `d` only when `mu` is unimodular.
pub fn hodge_laplacian(mu: &Bracket, g: &Metric, a: &KForm) -> KForm {
    let de = mu.d_coframe();
    let d = |x: &KForm| differential_with(&de, x);
    let codiff = |x: &KForm| {
        let p = x.degree();
        let s = if p % 2 == 0 { 1.0 } else { -1.0 };
        g.star(&d(&g.star(x))).scale(s)
    };
    let k = a.degree();
    let mut out = if k < DIM { codiff(&d(a)) } else { KForm::zero(k) };
    if k > 0 {
        out += &d(&codiff(a));
    }
    out
}

/// `delta_mu(E) = mu(E., .) + mu(., E.) - E mu(., .)`.
pub fn delta_mu(mu: &Bracket, e: &Endo) -> Bracket {
    let mut out = Bracket::zero();
    for i in 0..DIM {
        for j in i + 1..DIM {
            for k in 0..DIM {
                let mut s = 0.0;
                for m in 0..DIM {
                    s += e[(m, i)] * mu.get(m, j, k) + e[(m, j)] * mu.get(i, m, k) - e[(k, m)] * mu.get(i, j, m);
                }
                out.set(i, j, k, s);
            }
        }
    }
    out
}

/// Matrix of `E -> delta_mu(E)` from column-major `gl(7)` to [`Bracket::to_vec`] coordinates.
pub fn delta_matrix(mu: &Bracket) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(NPAIRS, 49);
    for b in 0..DIM {
        for a in 0..DIM {
            let mut e = Endo::zeros();
            e[(a, b)] = 1.0;
            m.column_mut(a + DIM * b).copy_from_slice(&delta_mu(mu, &e).to_vec());
        }
    }
    m
}

/// Orthonormal (Frobenius) basis of the derivation algebra `ker delta_mu`.
pub fn derivations(mu: &Bracket) -> Vec<Endo> {
    nullspace(&delta_matrix(mu), 1e-8).iter().map(|v| vec_endo(v.as_slice())).collect()
}

/// `h.mu = h mu(h^{-1}., h^{-1}.)`.
pub fn act(h: &Endo, mu: &Bracket) -> Result<Bracket> {
    let hi = h.try_inverse().ok_or_else(|| Error::SingularSystem("group element not invertible".into()))?;
    // t[a][b][m] = sum_ij hi_ia hi_jb c_ij^m, contracted one index at a time.
    let mut t1 = vec![0.0; N3];
    for a in 0..DIM {
        for j in 0..DIM {
            for m in 0..DIM {
                t1[at(a, j, m)] = (0..DIM).map(|i| hi[(i, a)] * mu.get(i, j, m)).sum();
            }
        }
    }
    let mut t2 = vec![0.0; N3];
    for a in 0..DIM {
        for b in 0..DIM {
            for m in 0..DIM {
                t2[at(a, b, m)] = (0..DIM).map(|j| hi[(j, b)] * t1[at(a, j, m)]).sum();
            }
        }
    }
    let mut out = Bracket::zero();
    for a in 0..DIM {
        for b in a + 1..DIM {
            for k in 0..DIM {
                out.set(a, b, k, (0..DIM).map(|m| h[(k, m)] * t2[at(a, b, m)]).sum());
            }
        }
    }
    Ok(out)
}

/// Ricci operator and scalar curvature of the left-invariant metric `g` on `(R^7, mu)`.
pub fn ricci(mu: &Bracket, g: &Metric) -> (Endo, f64) {
    let p = g.frame();
    let on = if g.is_euclidean() {
        mu.clone()
    } else {
        act(&p.try_inverse().expect("frame is invertible"), mu).expect("invertible")
    };
    // Levi-Civita in an orthonormal basis: (L_i)_{kj} = Gamma_ij^k.
    let l: Vec<Endo> = (0..DIM)
        .map(|i| {
            Endo::from_fn(|k, j| 0.5 * (on.get(i, j, k) - on.get(j, k, i) + on.get(k, i, j)))
        })
        .collect();
    let mut ric = Endo::zeros();
    for i in 0..DIM {
        for j in 0..DIM {
            if i == j {
                continue;
            }
            let mut r = l[i] * l[j] - l[j] * l[i];
            for (k, lk) in l.iter().enumerate() {
                let c = on.get(i, j, k);
                if c != 0.0 {
                    r -= lk * c;
                }
            }
            for m in 0..DIM {
                ric[(j, m)] += r[(i, m)];
            }
        }
    }
    let ric = (ric + ric.transpose()) * 0.5;
    let scal = ric.trace();
    let back = if g.is_euclidean() { ric } else { g.endo_from_frame(&ric) };
    (back, scal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi41() -> KForm {
        "e147 + e267 + e357 + e123 + e156 + e245 - e346".parse().unwrap()
    }

    // mu_{a,b,c,d}: de^5 = a e^12, de^6 = b e^12 + c e^13? see `mu_abcd`.
    fn mu_abcd(a: f64, b: f64, c: f64, d: f64) -> Bracket {
        // [e1,e2] = -a e5 - b e6, [e1,e3] = -c e5 - d e6
        Bracket::from_triples(&[(1, 2, 5, -a), (1, 2, 6, -b), (1, 3, 5, -c), (1, 3, 6, -d)]).unwrap()
    }

    #[test]
    fn differential_of_coframe() {
        let mu = mu_abcd(2.0, 0.0, 0.0, 0.0);
        let d5 = ce_differential(&mu, &"e5".parse().unwrap()).unwrap();
        assert_eq!(d5, "2*e12".parse().unwrap());
        assert!(matches!(ce_differential(&mu, &KForm::volume()), Err(Error::DegreeOverflow(..))));
    }

    #[test]
    fn d_squared_vanishes_for_lie_brackets() {
        let mu = mu_abcd(1.0, 2.0, -0.5, 3.0);
        for s in ["e5", "e56 + e17", "e127 - e356 + e246", "e1567"] {
            let a: KForm = s.parse().unwrap();
            let dd = ce_differential(&mu, &ce_differential(&mu, &a).unwrap()).unwrap();
            assert!(dd.max_abs() < 1e-14, "{s}");
        }
    }

    #[test]
    fn exterior_derivative_of_phi() {
        let (a, b, c, d) = (1.0, 2.0, 3.0, 5.0);
        let dphi = ce_differential(&mu_abcd(a, b, c, d), &phi41()).unwrap();
        let want: KForm = format!("{}*e1237 - {}*e1234", d - a, b + c).parse().unwrap();
        assert!(dphi.dist(&want) < 1e-14, "{dphi}");
    }

    #[test]
    fn laplacian_of_closed_example() {
        let (a, b) = (1.0, 0.5);
        let mu = mu_abcd(a, b, -b, a);
        let lap = hodge_laplacian(&mu, &Metric::euclidean(), &phi41());
        let want = KForm::basis(&[0, 1, 2], 2.0 * (a * a + b * b)).unwrap();
        assert!(lap.dist(&want) < 1e-14, "{lap}");
    }

    #[test]
    fn bracket_norm_counts_ordered_pairs() {
        let (a, b) = (1.5, -0.5);
        let mu = mu_abcd(a, b, -b, a);
        assert!((mu.norm().powi(2) - 4.0 * (a * a + b * b)).abs() < 1e-14);
    }

    #[test]
    fn jacobi_check() {
        assert!(LieBracket::new(mu_abcd(1.0, 2.0, 3.0, 4.0)).is_ok());
        // [e1,e2]=e3, [e2,e3]=e1, [e1,e3]=e1: not a Lie algebra.
        let bad = Bracket::from_triples(&[(1, 2, 3, 1.0), (2, 3, 1, 1.0), (1, 3, 1, 1.0)]).unwrap();
        assert!(matches!(LieBracket::new(bad), Err(Error::Jacobi(_))));
    }

    #[test]
    fn delta_of_identity_is_mu() {
        let mu = mu_abcd(1.0, 2.0, -1.0, 0.5);
        assert!(delta_mu(&mu, &Endo::identity()).dist(&mu) < 1e-15);
    }

    #[test]
    fn derivations_of_heisenberg_like_bracket() {
        let mu = mu_abcd(1.0, 0.0, 0.0, 0.0);
        let der = derivations(&mu);
        for d in &der {
            assert!(delta_mu(&mu, d).norm() < 1e-12);
        }
        // dimension of Der(h3 + R^4): checked against the rank of delta on gl(7)
        assert_eq!(der.len(), 49 - crate::linalg::column_span(&delta_matrix(&mu), 1e-8).len());
        assert!(derivations(&Bracket::zero()).len() == 49);
    }

    #[test]
    fn action_matches_definition() {
        let mu = mu_abcd(1.0, 2.0, -1.0, 0.5);
        let mut h = Endo::identity() * 1.2;
        h[(0, 3)] = 0.3;
        h[(5, 1)] = -0.4;
        let hm = act(&h, &mu).unwrap();
        let hi = h.try_inverse().unwrap();
        let x = Vec7::from_fn(|i, _| (i as f64) - 2.5);
        let y = Vec7::from_fn(|i, _| 1.0 / (1.0 + i as f64));
        let want = h * mu.apply(&(hi * x), &(hi * y));
        assert!((hm.apply(&x, &y) - want).norm() < 1e-13);
    }

    #[test]
    fn ricci_of_closed_example() {
        let (a, b) = (1.0, 0.5);
        let (ric, scal) = ricci(&mu_abcd(a, b, -b, a), &Metric::euclidean());
        let s = a * a + b * b;
        let want = Endo::from_diagonal(&Vec7::from_column_slice(&[-1.0, -0.5, -0.5, 0.0, 0.5, 0.5, 0.0])) * s;
        assert!((ric - want).amax() < 1e-14);
        assert!((scal + s).abs() < 1e-14);
    }

    #[test]
    fn ricci_is_isometry_invariant() {
        let mu = mu_abcd(1.0, 2.0, -1.0, 0.5);
        let mut h = Endo::identity();
        h[(0, 3)] = 0.3;
        h[(2, 2)] = 2.0;
        // (h.mu, g) is isometric to (mu, h^T g h) via h.
        let g = Metric::new(h.transpose() * h, 1.0).unwrap();
        let (r1, s1) = ricci(&mu, &g);
        let (r2, s2) = ricci(&act(&h, &mu).unwrap(), &Metric::euclidean());
        assert!((s1 - s2).abs() < 1e-12);
        assert!((h * r1 * h.try_inverse().unwrap() - r2).amax() < 1e-12);
    }
}
