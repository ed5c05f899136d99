//! Linear algebra attached to a positive 3-form on R^7.
//!
//! All orthogonality statements refer to the metric induced by the 3-form; on
//! endomorphisms the inner product is `tr(A B^t)` with the metric adjoint.
//! Internally the splitting is computed in an orthonormal frame, where the
//! metric is the identity and the adjoint is the transpose.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exterior::{interior, theta, wedge, Endo, KForm, Metric, Vec7, DIM};
use crate::linalg::{column_span, endo_vec, inverse_condition, nullspace, pinv, vec_endo};

const KERNEL_TOL: f64 = 1e-8;
const TORSION_TOL: f64 = 1e-6;
const COMPONENT_TOL: f64 = 1e-8;

/// Metric and orientation determined by a 3-form, or `Positivity` when the
/// bilinear form `(u, v) -> i_u phi ^ i_v phi ^ phi` is not definite.
pub fn metric_from_3form(phi: &KForm) -> Result<Metric> {
    if phi.degree() != 3 {
        return Err(Error::DegreeMismatch { expected: 3, found: phi.degree() });
    }
    let contractions: Vec<KForm> = (0..DIM)
        .map(|i| interior(&Vec7::ith(i, 1.0), phi).expect("degree 3"))
        .collect();
    let mut b = Endo::zeros();
    for i in 0..DIM {
        let wi = wedge(&contractions[i], phi).expect("degree 5");
        for j in i..DIM {
            let top = wedge(&contractions[j], &wi).expect("degree 7");
            b[(i, j)] = top.coeffs()[0] / 6.0;
            b[(j, i)] = b[(i, j)];
        }
    }
    let det = b.determinant();
    if !det.is_finite() || det == 0.0 {
        return Err(Error::Positivity(format!("det B = {det:e}")));
    }
    let orientation = det.signum();
    let eig = (b * orientation).symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 1e-12 * hi {
        return Err(Error::Positivity(format!("B has eigenvalues in [{lo:e}, {hi:e}]")));
    }
    let gram = b / (orientation * det.abs().powf(1.0 / 9.0));
    Metric::new(gram, orientation).map_err(|e| Error::Positivity(e.to_string()))
}

/// The four torsion forms of a G2-structure.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionForms {
    pub tau0: f64,
    pub tau1: KForm,
    pub tau2: KForm,
    pub tau3: KForm,
    /// Reconstruction residual of the fitted decomposition.
    pub residual: f64,
}

impl TorsionForms {
    /// `sqrt(tau0^2 + |tau1|^2 + |tau2|^2 + |tau3|^2)` in the given metric.
    pub fn norm(&self, g: &Metric) -> f64 {
        (self.tau0 * self.tau0 + g.inner(&self.tau1, &self.tau1) + g.inner(&self.tau2, &self.tau2)
            + g.inner(&self.tau3, &self.tau3))
        .max(0.0)
        .sqrt()
    }
}

/// Orthogonal projections of an element of `q` onto `q1`, `q7` and `q27`.
#[derive(Clone, Debug, PartialEq)]
pub struct QParts {
    pub q1: Endo,
    pub q7: Endo,
    pub q27: Endo,
}

/// A positive 3-form with its metric, dual 4-form and the `g2 + q` splitting.
#[derive(Clone, Debug)]
pub struct G2Structure {
    phi: KForm,
    psi: KForm,
    metric: Metric,
    g2: Vec<Endo>,
    q1: Endo,
    q7: Vec<Endo>,
    q27: Vec<Endo>,
    // psi coefficients -> column-major Q_psi
    q_map: DMatrix<f64>,
    lambda2_14: Vec<KForm>,
    lambda3_27: Vec<KForm>,
    torsion_sys: DMatrix<f64>,
    torsion_pinv: DMatrix<f64>,
}

fn theta_matrix(phi: &KForm) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(35, 49);
    for b in 0..DIM {
        for a in 0..DIM {
            let mut e = Endo::zeros();
            e[(a, b)] = 1.0;
            m.column_mut(a + DIM * b).copy_from_slice(theta(&e, phi).coeffs());
        }
    }
    m
}

impl G2Structure {
    pub fn new(phi: &KForm) -> Result<Self> {
        let metric = metric_from_3form(phi)?;
        let psi = metric.star(phi);
        let phi_f = metric.to_frame(phi);

        let g2_f = nullspace(&theta_matrix(&phi_f), KERNEL_TOL);
        if g2_f.len() != 14 {
            return Err(Error::Positivity(format!("stabilizer has dimension {}", g2_f.len())));
        }

        let mut skew = DMatrix::zeros(49, 21);
        let mut sym = DMatrix::zeros(49, 27);
        let (mut ns, mut nq) = (0, 0);
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..DIM {
            for j in i + 1..DIM {
                let mut e = Endo::zeros();
                e[(i, j)] = s2;
                e[(j, i)] = -s2;
                let mut v = endo_vec(&e);
                for k in &g2_f {
                    let c = v.dot(k);
                    v.axpy(-c, k, 1.0);
                }
                skew.set_column(ns, &v);
                ns += 1;
                e[(j, i)] = s2;
                sym.set_column(nq, &endo_vec(&e));
                nq += 1;
            }
        }
        let mut diag = DMatrix::zeros(49, 7);
        for i in 0..DIM {
            let mut e = Endo::from_diagonal_element(-1.0 / 7.0);
            e[(i, i)] += 1.0;
            diag.set_column(i, &endo_vec(&e));
        }
        for v in column_span(&diag, 1e-10) {
            sym.set_column(nq, &v);
            nq += 1;
        }
        let q7_f = column_span(&skew, 1e-8);
        if q7_f.len() != 7 || nq != 27 {
            return Err(Error::Positivity("degenerate q splitting".into()));
        }

        let back = |v: &DVector<f64>| metric.endo_from_frame(&vec_endo(v.as_slice()));
        let g2: Vec<Endo> = g2_f.iter().map(back).collect();
        let q7: Vec<Endo> = q7_f.iter().map(back).collect();
        let q27: Vec<Endo> = (0..27).map(|c| back(&sym.column(c).into_owned())).collect();
        let q1 = Endo::identity() / (DIM as f64).sqrt();

        let q_basis: Vec<&Endo> = std::iter::once(&q1).chain(&q7).chain(&q27).collect();
        let mut mq = DMatrix::zeros(35, 35);
        let mut qb = DMatrix::zeros(49, 35);
        for (c, q) in q_basis.iter().enumerate() {
            mq.column_mut(c).copy_from_slice(theta(q, phi).coeffs());
            qb.set_column(c, &endo_vec(q));
        }
        let cond = inverse_condition(&mq);
        if cond < 1e-12 {
            return Err(Error::SingularSystem(format!("theta(q)phi has inverse condition {cond:e}")));
        }
        let mq_inv = mq.try_inverse().ok_or_else(|| Error::SingularSystem("theta(q)phi".into()))?;
        let q_map = qb * mq_inv;

        let lambda2_14: Vec<KForm> = g2.iter().map(|x| metric.two_form_of(x)).collect();
        let lambda3_27: Vec<KForm> = q27.iter().map(|x| theta(x, phi)).collect();

        let mut sys = DMatrix::zeros(56, 49);
        sys.view_mut((0, 0), (35, 1)).copy_from_slice(psi.coeffs());
        for i in 0..DIM {
            let e = KForm::from_covector(&Vec7::ith(i, 1.0));
            let a = wedge(&e, phi)?.scale(3.0);
            let b = wedge(&e, &psi)?.scale(4.0);
            sys.view_mut((0, 1 + i), (35, 1)).copy_from_slice(a.coeffs());
            sys.view_mut((35, 1 + i), (21, 1)).copy_from_slice(b.coeffs());
        }
        for (k, w) in lambda2_14.iter().enumerate() {
            sys.view_mut((35, 8 + k), (21, 1)).copy_from_slice(wedge(w, phi)?.coeffs());
        }
        for (k, t) in lambda3_27.iter().enumerate() {
            sys.view_mut((0, 22 + k), (35, 1)).copy_from_slice(metric.star(t).coeffs());
        }
        let torsion_pinv = pinv(&sys, 1e-12);

        Ok(Self {
            phi: phi.clone(),
            psi,
            metric,
            g2,
            q1,
            q7,
            q27,
            q_map,
            lambda2_14,
            lambda3_27,
            torsion_sys: sys,
            torsion_pinv,
        })
    }

    pub fn phi(&self) -> &KForm {
        &self.phi
    }

    /// `psi = *phi`.
    pub fn psi(&self) -> &KForm {
        &self.psi
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn volume(&self) -> KForm {
        self.metric.volume()
    }

    /// Orthonormal basis of the stabilizer algebra (dimension 14).
    pub fn g2_basis(&self) -> &[Endo] {
        &self.g2
    }

    /// Orthonormal basis of `q = q1 + q7 + q27`, in that order (dimension 35).
    pub fn q_basis(&self) -> Vec<Endo> {
        std::iter::once(self.q1).chain(self.q7.iter().copied()).chain(self.q27.iter().copied()).collect()
    }

    pub fn q7_basis(&self) -> &[Endo] {
        &self.q7
    }

    pub fn q27_basis(&self) -> &[Endo] {
        &self.q27
    }

    /// Basis of the 2-forms corresponding to the stabilizer algebra.
    pub fn lambda2_14_basis(&self) -> &[KForm] {
        &self.lambda2_14
    }

    /// Basis of `theta(q27) phi`.
    pub fn lambda3_27_basis(&self) -> &[KForm] {
        &self.lambda3_27
    }

    /// The unique `Q` in `q` with `theta(Q) phi = psi`.
    pub fn solve_q(&self, psi: &KForm) -> Result<Endo> {
        if psi.degree() != 3 {
            return Err(Error::DegreeMismatch { expected: 3, found: psi.degree() });
        }
        let v = &self.q_map * DVector::from_column_slice(psi.coeffs());
        Ok(vec_endo(v.as_slice()))
    }

    pub fn q_parts(&self, q: &Endo) -> QParts {
        let g = &self.metric;
        let q1 = self.q1 * g.endo_inner(q, &self.q1);
        let proj = |basis: &[Endo]| basis.iter().fold(Endo::zeros(), |acc, b| acc + b * g.endo_inner(q, b));
        QParts { q1, q7: proj(&self.q7), q27: proj(&self.q27) }
    }

    /// `i(A) = -2 theta(A) phi`.
    pub fn iop(&self, a: &Endo) -> KForm {
        theta(a, &self.phi).scale(-2.0)
    }

    /// `j(psi) = -2 tr(Q) I - 4 Q`, with `Q` the `q1 + q27` part of `Q_psi`.
    ///
    /// With `strict`, a `Lambda^3_7` component above tolerance is an error; otherwise it is dropped.
    pub fn jop(&self, psi: &KForm, strict: bool) -> Result<Endo> {
        let parts = self.q_parts(&self.solve_q(psi)?);
        if strict {
            let c7 = self.metric.norm(&theta(&parts.q7, &self.phi));
            if c7 > COMPONENT_TOL * self.metric.norm(psi).max(1.0) {
                return Err(Error::Component(c7));
            }
        }
        let q = parts.q1 + parts.q27;
        Ok(Endo::identity() * (-2.0 * q.trace()) - q * 4.0)
    }

    /// Torsion forms from `dphi` and `dpsi`.
    pub fn torsion_forms(&self, dphi: &KForm, dpsi: &KForm) -> Result<TorsionForms> {
        if dphi.degree() != 4 {
            return Err(Error::DegreeMismatch { expected: 4, found: dphi.degree() });
        }
        if dpsi.degree() != 5 {
            return Err(Error::DegreeMismatch { expected: 5, found: dpsi.degree() });
        }
        let mut rhs = DVector::zeros(56);
        rhs.rows_mut(0, 35).copy_from_slice(dphi.coeffs());
        rhs.rows_mut(35, 21).copy_from_slice(dpsi.coeffs());
        let x = &self.torsion_pinv * &rhs;
        let residual = (&self.torsion_sys * &x - &rhs).norm();
        if residual > TORSION_TOL * rhs.norm().max(1.0) {
            return Err(Error::InconsistentTorsion(residual));
        }
        let combo = |basis: &[KForm], off: usize, deg: usize| {
            basis.iter().enumerate().fold(KForm::zero(deg), |mut acc, (k, b)| {
                acc.axpy(x[off + k], b);
                acc
            })
        };
        Ok(TorsionForms {
            tau0: x[0],
            tau1: KForm::from_coeffs(1, x.rows(1, 7).iter().copied().collect()),
            tau2: combo(&self.lambda2_14, 8, 2),
            tau3: combo(&self.lambda3_27, 22, 3),
            residual,
        })
    }
}

/// `Q_psi` computed as the minimum-norm solution of `theta(Q) phi = psi`.
///
/// Independent of [`G2Structure::solve_q`]: the kernel of `A -> theta(A) phi` is the
/// stabilizer algebra, so the minimum-norm solution lies in its orthogonal complement.
pub fn q_min_norm(phi: &KForm, psi: &KForm) -> Result<Endo> {
    let metric = metric_from_3form(phi)?;
    q_min_norm_with(phi, &metric, psi)
}

pub(crate) fn q_min_norm_with(phi: &KForm, metric: &Metric, psi: &KForm) -> Result<Endo> {
    let m = theta_matrix(&metric.to_frame(phi));
    let rhs = DVector::from_column_slice(metric.to_frame(psi).coeffs());
    let v = pinv(&m, 1e-10) * rhs;
    Ok(metric.endo_from_frame(&vec_endo(v.as_slice())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{pullback, act};

    fn phi_std() -> KForm {
        "e127 + e347 + e567 + e135 - e146 - e236 - e245".parse().unwrap()
    }

    fn skewed_phi() -> KForm {
        let mut h = Endo::identity();
        h[(0, 1)] = 0.4;
        h[(3, 6)] = -0.7;
        h[(2, 2)] = 1.5;
        h[(5, 4)] = 0.2;
        act(&h, &phi_std()).unwrap()
    }

    #[test]
    fn standard_form_gives_identity_metric() {
        let g = metric_from_3form(&phi_std()).unwrap();
        assert!((g.gram() - Endo::identity()).amax() < 1e-14);
        assert_eq!(g.orientation(), 1.0);
        let neg = metric_from_3form(&phi_std().scale(-1.0)).unwrap();
        assert_eq!(neg.orientation(), -1.0);
    }

    #[test]
    fn non_positive_forms_rejected() {
        for s in ["e123", "e123 + e456", "e127 + e347 + e567"] {
            let phi: KForm = s.parse().unwrap();
            assert!(matches!(G2Structure::new(&phi), Err(Error::Positivity(_))), "{s}");
        }
    }

    #[test]
    fn transformed_form_metric_is_pullback() {
        let mut h = Endo::identity();
        h[(0, 1)] = 0.4;
        h[(3, 6)] = -0.7;
        h[(2, 2)] = 1.5;
        let phi = pullback(&h, &phi_std());
        let g = metric_from_3form(&phi).unwrap();
        assert!((g.gram() - h.transpose() * h).amax() < 1e-12);
    }

    #[test]
    fn splitting_dimensions_and_orthogonality() {
        let s = G2Structure::new(&skewed_phi()).unwrap();
        let g = s.metric();
        assert_eq!(s.g2_basis().len(), 14);
        let q = s.q_basis();
        assert_eq!(q.len(), 35);
        for x in s.g2_basis() {
            assert!(theta(x, s.phi()).max_abs() < 1e-12);
            for y in &q {
                assert!(g.endo_inner(x, y).abs() < 1e-10);
            }
        }
        for (i, x) in q.iter().enumerate() {
            for (j, y) in q.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.endo_inner(x, y) - want).abs() < 1e-10);
            }
        }
        for x in s.q7_basis() {
            assert!((x + g.adjoint(x)).amax() < 1e-10);
        }
        for x in s.q27_basis() {
            assert!((x - g.adjoint(x)).amax() < 1e-10);
            assert!(x.trace().abs() < 1e-10);
        }
    }

    #[test]
    fn solve_q_agrees_with_min_norm_route() {
        let phi = skewed_phi();
        let s = G2Structure::new(&phi).unwrap();
        let psi: KForm = "e123 - 0.5*e145 + 2*e367 + e256".parse().unwrap();
        let q = s.solve_q(&psi).unwrap();
        assert!(theta(&q, &phi).dist(&psi) < 1e-10);
        let q2 = q_min_norm(&phi, &psi).unwrap();
        assert!((q - q2).amax() < 1e-9);
        assert!(matches!(s.solve_q(&KForm::zero(2)), Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn phi_and_psi_reproduce_volume() {
        let s = G2Structure::new(&skewed_phi()).unwrap();
        let top = wedge(s.phi(), s.psi()).unwrap();
        assert!(top.dist(&s.volume().scale(7.0)) < 1e-10);
    }

    #[test]
    fn j_vanishes_on_lambda37() {
        let s = G2Structure::new(&skewed_phi()).unwrap();
        for x in s.q7_basis() {
            let gamma = theta(x, s.phi());
            assert!(s.jop(&gamma, false).unwrap().amax() < 1e-10);
            assert!(matches!(s.jop(&gamma, true), Err(Error::Component(_))));
        }
    }

    #[test]
    fn torsion_of_standard_form_vanishes() {
        let s = G2Structure::new(&phi_std()).unwrap();
        let t = s.torsion_forms(&KForm::zero(4), &KForm::zero(5)).unwrap();
        assert_eq!(t.norm(s.metric()), 0.0);
    }

    #[test]
    fn torsion_rejects_inconsistent_input() {
        let s = G2Structure::new(&phi_std()).unwrap();
        // A 5-form in Lambda^5_7 that is not 4 tau1 ^ psi for the tau1 forced by dphi = 0.
        let dpsi = wedge(&"e1".parse().unwrap(), s.psi()).unwrap();
        assert!(matches!(s.torsion_forms(&KForm::zero(4), &dpsi), Err(Error::InconsistentTorsion(_))));
    }
}
