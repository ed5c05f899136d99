//! Closed G2-structures on almost-abelian Lie algebras `g = h + R e7`, `h = R^6` abelian.
//!
//! The 6x6 matrix `A = ad e7|_h` is stored in the basis order
//! `{e1, e3, e5, e2, e4, e6}` (the adapted order, "paper" in JSON), in which the complex structure is
//! `J = [[0, -I], [I, 0]]` and `sl(3, C)` matrices read `[[B, -C], [C, B]]`.
//! 7x7 endomorphisms returned here use the natural order `e1..e7`.

use nalgebra::{Complex, DMatrix, DVector, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{theta, wedge, Endo, KForm, Metric};
use crate::flow::{FlowStatus, IntegratorOptions, Normalization};
use crate::g2core::G2Structure;
use crate::liealg::{self, Bracket, LieBracket};
use crate::linalg::lstsq;

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat3 = SMatrix<f64, 3, 3>;
pub type CMat3 = SMatrix<Complex<f64>, 3, 3>;

/// Natural index of each adapted-order basis vector.
pub const ADAPTED_TO_NATURAL: [usize; 6] = [0, 2, 4, 1, 3, 5];

const FLAG_TOL: f64 = 1e-10;
const NILPOTENT_TOL: f64 = 1e-9;
const NORMAL_TOL: f64 = 1e-9;
const ALGEBRAIC_TOL: f64 = 1e-8;
const SEMI_TOL: f64 = 1e-7;
const GROUP_TOL: f64 = 1e-9;

pub fn j_matrix() -> Mat6 {
    let mut j = Mat6::zeros();
    for i in 0..3 {
        j[(i, i + 3)] = -1.0;
        j[(i + 3, i)] = 1.0;
    }
    j
}

pub fn adapted_to_natural(a: &Mat6) -> Mat6 {
    let p = ADAPTED_TO_NATURAL;
    let mut out = Mat6::zeros();
    for r in 0..6 {
        for c in 0..6 {
            out[(p[r], p[c])] = a[(r, c)];
        }
    }
    out
}

pub fn natural_to_adapted(a: &Mat6) -> Mat6 {
    let p = ADAPTED_TO_NATURAL;
    Mat6::from_fn(|r, c| a[(p[r], p[c])])
}

/// `a (adapted order) + corner e7 (x) e^7` as a natural-order 7x7 matrix.
pub fn embed(a: &Mat6, corner: f64) -> Endo {
    let n = adapted_to_natural(a);
    let mut e = Endo::zeros();
    e.view_mut((0, 0), (6, 6)).copy_from(&n);
    e[(6, 6)] = corner;
    e
}

/// Inverse of [`embed`], ignoring the off-diagonal blocks.
pub fn split(e: &Endo) -> (Mat6, f64) {
    (natural_to_adapted(&e.fixed_view::<6, 6>(0, 0).into_owned()), e[(6, 6)])
}

/// `[[B, -C], [C, B]]`, the real form of `B + iC`.
pub fn realify(z: &CMat3) -> Mat6 {
    let mut a = Mat6::zeros();
    for r in 0..3 {
        for c in 0..3 {
            a[(r, c)] = z[(r, c)].re;
            a[(r + 3, c + 3)] = z[(r, c)].re;
            a[(r + 3, c)] = z[(r, c)].im;
            a[(r, c + 3)] = -z[(r, c)].im;
        }
    }
    a
}

pub fn complexify(b: &Mat3, c: &Mat3) -> CMat3 {
    CMat3::from_fn(|r, k| Complex::new(b[(r, k)], c[(r, k)]))
}

/// `tr((A + A^t)^2)` for a real matrix.
pub fn sym_trace(a: &Mat6) -> f64 {
    let s = a + a.transpose();
    (s * s).trace()
}

/// `2 Re tr((Z + Z^*)^2)`: equals [`sym_trace`] of the real form of `Z`.
pub fn sym_trace_complex(z: &CMat3) -> f64 {
    let s = z + z.adjoint();
    2.0 * (s * s).trace().re
}

fn comm(a: &Mat6, b: &Mat6) -> Mat6 {
    a * b - b * a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AAFlags {
    pub in_sl3c: bool,
    pub in_sp3r: bool,
    pub in_su3: bool,
    pub is_nilpotent: bool,
    pub is_normal: bool,
}

/// The matrix `A = ad e7|_h` in adapted order, with membership flags.
#[derive(Clone, Debug, PartialEq)]
pub struct AAMatrix {
    a: Mat6,
    flags: AAFlags,
}

/// `|AJ - JA| + |tr A| + |tr AJ|`.
pub fn sl3c_residual(a: &Mat6) -> f64 {
    let j = j_matrix();
    (a * j - j * a).norm() + a.trace().abs() + (a * j).trace().abs()
}

impl AAMatrix {
    pub fn from_adapted(a: Mat6) -> Self {
        let j = j_matrix();
        let scale = a.norm().max(1.0);
        let in_sl3c = sl3c_residual(&a) <= FLAG_TOL * scale;
        let in_sp3r = (a.transpose() * j + j * a).norm() <= FLAG_TOL * scale;
        let n = a.norm();
        let a6 = a.pow(6);
        let is_nilpotent = a6.norm() <= NILPOTENT_TOL * n.powi(6);
        let is_normal = comm(&a, &a.transpose()).norm() <= NORMAL_TOL * n * n;
        let flags = AAFlags { in_sl3c, in_sp3r, in_su3: in_sl3c && in_sp3r, is_nilpotent, is_normal };
        Self { a, flags }
    }

    pub fn from_natural(a: Mat6) -> Self {
        Self::from_adapted(natural_to_adapted(&a))
    }

    /// Real form of `B + iC`.
    pub fn from_complex(b: &Mat3, c: &Mat3) -> Self {
        Self::from_adapted(realify(&complexify(b, c)))
    }

    pub fn adapted(&self) -> &Mat6 {
        &self.a
    }

    pub fn natural(&self) -> Mat6 {
        adapted_to_natural(&self.a)
    }

    pub fn flags(&self) -> AAFlags {
        self.flags
    }

    /// `B + iC` read off the left blocks; meaningful when `in_sl3c`.
    pub fn complex_view(&self) -> CMat3 {
        let b = self.a.fixed_view::<3, 3>(0, 0).into_owned();
        let c = self.a.fixed_view::<3, 3>(3, 0).into_owned();
        complexify(&b, &c)
    }

    pub fn norm(&self) -> f64 {
        self.a.norm()
    }

    /// The bracket `mu_A`: `[e7, x] = A x` on `h`, `h` abelian.
    pub fn bracket(&self) -> LieBracket {
        let n = self.natural();
        let mut b = Bracket::zero();
        for i in 0..6 {
            for j in 0..6 {
                if n[(i, j)] != 0.0 {
                    b.set(6, j, i, n[(i, j)]);
                }
            }
        }
        LieBracket::new_unchecked(b)
    }

    /// Spectrum of the complex view (sl(3,C) inputs) or of the real 6x6 matrix.
    pub fn spectrum(&self) -> Vec<Complex<f64>> {
        if self.flags.in_sl3c {
            eigenvalues3(&self.complex_view())
        } else {
            self.a.complex_eigenvalues().iter().copied().collect()
        }
    }
}

pub fn eigenvalues3(z: &CMat3) -> Vec<Complex<f64>> {
    z.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

/// `omega = e^12 + e^34 + e^56`.
pub fn omega() -> KForm {
    "e12 + e34 + e56".parse().expect("static form")
}

/// `rho+ = e^135 - e^146 - e^236 - e^245`.
pub fn rho_plus() -> KForm {
    "e135 - e146 - e236 - e245".parse().expect("static form")
}

/// `phi = omega ^ e^7 + rho+`.
pub fn phi() -> KForm {
    "e127 + e347 + e567 + e135 - e146 - e236 - e245".parse().expect("static form")
}

pub fn build(a: &Mat6) -> Result<(AAMatrix, LieBracket, G2Structure)> {
    let m = AAMatrix::from_adapted(*a);
    let mu = m.bracket();
    let s = G2Structure::new(&phi())?;
    Ok((m, mu, s))
}

fn require_trace_free(a: &AAMatrix) -> Result<()> {
    let tr = a.a.trace();
    if tr.abs() > FLAG_TOL * a.norm().max(1.0) {
        return Err(Error::NotTraceFree(tr));
    }
    Ok(())
}

fn require_sl3c(a: &AAMatrix) -> Result<()> {
    if !a.flags.in_sl3c {
        return Err(Error::NotClosed(format!("A is not in sl(3,C) (residual {:e})", sl3c_residual(&a.a))));
    }
    Ok(())
}

/// `Delta phi = theta(A) theta(A^t) omega ^ e^7 - theta(A^t) theta(A) rho+`.
pub fn laplacian_closed_form(a: &AAMatrix) -> Result<KForm> {
    require_trace_free(a)?;
    let x = embed(&a.a, 0.0);
    let xt = x.transpose();
    let e7: KForm = "e7".parse().expect("static form");
    let first = wedge(&theta(&x, &theta(&xt, &omega())), &e7)?;
    Ok(first - theta(&xt, &theta(&x, &rho_plus())))
}

/// `Q_A = Q1 + q` with `Q1 = [A,A^t]/2 + T/12 I - S^2/2`, `q = -T/6`, `S = A + A^t`, `T = tr S^2`.
pub fn q_closed_form(a: &AAMatrix) -> Result<Endo> {
    require_sl3c(a)?;
    let m = &a.a;
    let s = m + m.transpose();
    let t = (s * s).trace();
    let q1 = comm(m, &m.transpose()) * 0.5 + Mat6::identity() * (t / 12.0) - s * s * 0.5;
    Ok(embed(&q1, -t / 6.0))
}

/// `tau = theta(A^t) omega`.
pub fn torsion_closed_form(a: &AAMatrix) -> Result<KForm> {
    require_sl3c(a)?;
    Ok(theta(&embed(&a.a, 0.0).transpose(), &omega()))
}

/// `Ric = [A,A^t]/2 + (-T/4)` and `R = -T/4`.
pub fn ricci_closed_form(a: &AAMatrix) -> Result<(Endo, f64)> {
    require_trace_free(a)?;
    let m = &a.a;
    let t = sym_trace(m);
    Ok((embed(&(comm(m, &m.transpose()) * 0.5), -t / 4.0), -t / 4.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedForms {
    pub laplacian: KForm,
    pub q: Endo,
    pub tau: KForm,
    pub ricci: Endo,
    pub scalar_curvature: f64,
}

pub fn closed_forms(a: &AAMatrix) -> Result<ClosedForms> {
    require_sl3c(a)?;
    let (ricci, scalar_curvature) = ricci_closed_form(a)?;
    Ok(ClosedForms {
        laplacian: laplacian_closed_form(a)?,
        q: q_closed_form(a)?,
        tau: torsion_closed_form(a)?,
        ricci,
        scalar_curvature,
    })
}

/// `M_A = [A,A^t]/2 + (-|A|^2/2)`.
pub fn moment_map(a: &AAMatrix) -> Endo {
    let m = &a.a;
    embed(&(comm(m, &m.transpose()) * 0.5), -0.5 * m.norm_squared())
}

/// `dA/dt = -(T/6) A + [A,[A,A^t]]/2 - [A, S^2]/2`.
pub fn matrix_flow_rhs(a: &Mat6) -> Mat6 {
    let s = a + a.transpose();
    let s2 = s * s;
    let t = s2.trace();
    a * (-t / 6.0) + comm(a, &comm(a, &a.transpose())) * 0.5 - comm(a, &s2) * 0.5
}

#[derive(Clone, Debug)]
pub struct AASample {
    pub t: f64,
    pub a: Mat6,
    pub norm_sq: f64,
    pub scalar_curvature: f64,
    pub q: Endo,
    pub spectrum: Vec<Complex<f64>>,
    pub membership_residual: f64,
}

#[derive(Clone, Debug)]
pub struct AATrajectory {
    pub samples: Vec<AASample>,
    pub status: FlowStatus,
    pub options: IntegratorOptions,
}

fn aa_sample(t: f64, a: &Mat6) -> AASample {
    let m = AAMatrix::from_adapted(*a);
    let q = q_closed_form(&m).unwrap_or_else(|_| {
        // Off sl(3,C) only through round-off; the formula is still the natural extension.
        let mm = AAMatrix { a: *a, flags: AAFlags { in_sl3c: true, ..m.flags } };
        q_closed_form(&mm).expect("flag forced")
    });
    let complex = AAMatrix { a: *a, flags: AAFlags { in_sl3c: true, ..m.flags } };
    AASample {
        t,
        a: *a,
        norm_sq: a.norm_squared(),
        scalar_curvature: -sym_trace(a) / 4.0,
        q,
        spectrum: complex.spectrum(),
        membership_residual: sl3c_residual(a),
    }
}

/// Integrates the matrix form of the bracket flow on `sl(3, C)`.
pub fn matrix_bracket_flow(a0: &AAMatrix, opts: &IntegratorOptions) -> Result<AATrajectory> {
    require_sl3c(a0)?;
    let normalize = opts.normalize == Normalization::UnitBracketNorm;
    let mut samples = Vec::new();
    let status = crate::flow::integrate_plain(
        a0.a.as_slice().to_vec(),
        opts,
        |y, dy| {
            let a = Mat6::from_column_slice(y);
            let mut v = matrix_flow_rhs(&a);
            if normalize {
                let nn = a.norm_squared();
                if nn > 0.0 {
                    v -= a * (v.dot(&a) / nn);
                }
            }
            dy.copy_from_slice(v.as_slice());
        },
        |t, y, is_sample| {
            let a = Mat6::from_column_slice(y);
            let blown = !(a.norm() <= opts.blowup_norm);
            if is_sample || blown {
                samples.push(aa_sample(t, &a));
            }
            !blown
        },
    )?;
    Ok(AATrajectory { samples, status, options: opts.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AAKind {
    TorsionFree,
    Algebraic,
    SemiAlgebraic,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum NormalForm {
    /// Semisimple: conjugate to `diag(x, y, z)` over C.
    DiagonalComplex { re: [f64; 3], im: [f64; 3] },
    NilpotentN2,
    NilpotentN6,
    Other,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AAClassification {
    pub kind: AAKind,
    pub c: f64,
    pub d: f64,
    /// `D|_h` in adapted order; `None` for kind `None`.
    pub d1: Option<Mat6>,
    pub normal_form: NormalForm,
    /// Residual of the decisive condition, computed at `|A| = 1`.
    pub residual: f64,
}

/// `|[A, [A,A^t] - S^2] + (|[A,A^t]|^2 / |A|^2) A|`.
pub fn algebraic_equation_residual(a: &Mat6) -> f64 {
    let n2 = a.norm_squared();
    if n2 == 0.0 {
        return 0.0;
    }
    let k = comm(a, &a.transpose());
    let s = a + a.transpose();
    (comm(a, &(k - s * s)) + a * (k.norm_squared() / n2)).norm()
}

/// Least-squares `D1` with `[D1, A] = dA` and `D1 + D1^t = [A,A^t] - S^2 + (2d + T/2) I`.
pub fn semi_algebraic_d1(a: &Mat6, d: f64) -> (Mat6, f64) {
    let s = a + a.transpose();
    let t = (s * s).trace();
    let rhs_sym = comm(a, &a.transpose()) - s * s + Mat6::identity() * (2.0 * d + 0.5 * t);
    let mut m = DMatrix::zeros(72, 36);
    let mut rhs = DVector::zeros(72);
    for col in 0..36 {
        let mut e = Mat6::zeros();
        e[col] = 1.0;
        let c1 = comm(&e, a);
        let c2 = e + e.transpose();
        m.view_mut((0, col), (36, 1)).copy_from_slice(c1.as_slice());
        m.view_mut((36, col), (36, 1)).copy_from_slice(c2.as_slice());
    }
    rhs.rows_mut(0, 36).copy_from_slice((a * d).as_slice());
    rhs.rows_mut(36, 36).copy_from_slice(rhs_sym.as_slice());
    let (x, r) = lstsq(&m, &rhs, 1e-12);
    (Mat6::from_column_slice(x.as_slice()), r)
}

fn normal_form(a: &AAMatrix) -> NormalForm {
    let z = a.complex_view();
    let n = z.norm().max(f64::MIN_POSITIVE);
    let z2 = z * z;
    if a.flags.is_nilpotent {
        if z2.norm() <= 1e-9 * n * n {
            return NormalForm::NilpotentN2;
        }
        if (z2 * z).norm() <= 1e-9 * n * n * n {
            return NormalForm::NilpotentN6;
        }
    }
    let ev = eigenvalues3(&z);
    if ev.len() != 3 {
        return NormalForm::Other;
    }
    let mut distinct: Vec<Complex<f64>> = Vec::new();
    for l in &ev {
        if distinct.iter().all(|m| (m - l).norm() > 1e-6 * n) {
            distinct.push(*l);
        }
    }
    let p = distinct.iter().fold(CMat3::identity(), |acc, l| acc * (z - CMat3::identity() * *l));
    if p.norm() <= 1e-8 * n.powi(distinct.len() as i32) {
        NormalForm::DiagonalComplex { re: [ev[0].re, ev[1].re, ev[2].re], im: [ev[0].im, ev[1].im, ev[2].im] }
    } else {
        NormalForm::Other
    }
}

/// Decides torsion-free / algebraic / semi-algebraic for a closed structure `(G_A, phi)`.
pub fn classify_soliton(a: &AAMatrix) -> Result<AAClassification> {
    require_sl3c(a)?;
    let form = normal_form(a);
    let n2 = a.a.norm_squared();
    if n2 == 0.0 {
        return Ok(AAClassification { kind: AAKind::TorsionFree, c: 0.0, d: 0.0, d1: Some(Mat6::zeros()), normal_form: form, residual: 0.0 });
    }
    // Work at unit norm; c, d and D1 scale by |A|^2.
    let u = a.a / n2.sqrt();
    let s = u + u.transpose();
    let t = (s * s).trace();
    let k = comm(&u, &u.transpose());
    let d = 0.5 * k.norm_squared();
    let c = -t / 6.0 - d;
    let q1 = k * 0.5 + Mat6::identity() * (t / 12.0) - s * s * 0.5;
    let out = |kind, c: f64, d: f64, d1: Option<Mat6>, residual| AAClassification {
        kind,
        c: c * n2,
        d: d * n2,
        d1: d1.map(|m| m * n2),
        normal_form: form.clone(),
        residual,
    };
    if s.norm() <= FLAG_TOL {
        return Ok(out(AAKind::TorsionFree, 0.0, 0.0, Some(Mat6::zeros()), s.norm()));
    }
    if a.flags.is_normal {
        return Ok(out(AAKind::Algebraic, c, d, Some(q1 - Mat6::identity() * c), k.norm()));
    }
    if !a.flags.is_nilpotent {
        let r = algebraic_equation_residual(&u);
        return Ok(out(AAKind::None, c, d, None, r));
    }
    let r_alg = algebraic_equation_residual(&u);
    if r_alg <= ALGEBRAIC_TOL {
        return Ok(out(AAKind::Algebraic, c, d, Some(q1 - Mat6::identity() * c), r_alg));
    }
    let (d1, r_semi) = semi_algebraic_d1(&u, d);
    if r_semi <= SEMI_TOL {
        Ok(out(AAKind::SemiAlgebraic, c, d, Some(d1), r_semi))
    } else {
        Ok(out(AAKind::None, c, d, None, r_semi))
    }
}

/// Greedy multiset distance between two spectra; infinite when sizes differ.
pub fn spectrum_distance(x: &[Complex<f64>], y: &[Complex<f64>]) -> f64 {
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    let mut left: Vec<Complex<f64>> = y.to_vec();
    let mut worst: f64 = 0.0;
    for a in x {
        let (i, dist) = left
            .iter()
            .enumerate()
            .map(|(i, b)| (i, (a - b).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("same length");
        worst = worst.max(dist);
        left.swap_remove(i);
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConjugacyVariant {
    /// `B = h A h^{-1}`, `h` in SU(3).
    SpecialUnitary,
    /// `B = -h A h^{-1}`, `h` orthogonal, `det h = -1`, `h J h^{-1} = -J`.
    AntiUnitary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    /// Necessary condition: `Spec B` is `Spec A` or `-conj(Spec A)`.
    pub spectrum_matches: bool,
    pub spectrum_residual: f64,
    pub variant: Option<ConjugacyVariant>,
    /// Membership plus conjugation residual for each variant, when `h` is given.
    pub su3_residual: Option<f64>,
    pub anti_residual: Option<f64>,
    /// `|h~.phi - phi|` and `|h~.mu_A - mu_B|` for the better variant.
    pub phi_residual: Option<f64>,
    pub bracket_residual: Option<f64>,
    pub equivalent: Option<bool>,
}

fn complex_det(h: &Mat6) -> Complex<f64> {
    let b = h.fixed_view::<3, 3>(0, 0).into_owned();
    let c = h.fixed_view::<3, 3>(3, 0).into_owned();
    complexify(&b, &c).determinant()
}

/// Checks whether `(G_A, phi)` and `(G_B, phi)` are equivalent via `h` (adapted order).
pub fn conjugacy_report(a: &AAMatrix, b: &AAMatrix, h: Option<&Mat6>) -> Result<ConjugacyReport> {
    let (sa, sb) = (a.spectrum(), b.spectrum());
    let neg: Vec<Complex<f64>> = if a.flags.in_sl3c && b.flags.in_sl3c {
        sa.iter().map(|l| -l.conj()).collect()
    } else {
        sa.iter().map(|l| -l).collect()
    };
    let scale = a.norm().max(b.norm()).max(1.0);
    let spectrum_residual = spectrum_distance(&sb, &sa).min(spectrum_distance(&sb, &neg));
    let spectrum_matches = spectrum_residual <= 1e-6 * scale;
    let mut report = ConjugacyReport {
        spectrum_matches,
        spectrum_residual,
        variant: None,
        su3_residual: None,
        anti_residual: None,
        phi_residual: None,
        bracket_residual: None,
        equivalent: None,
    };
    let Some(h) = h else { return Ok(report) };
    let Some(hi) = h.try_inverse() else {
        report.equivalent = Some(false);
        return Ok(report);
    };
    let j = j_matrix();
    let orth = (h.transpose() * h - Mat6::identity()).norm();
    let conj = h * a.adapted() * hi;
    let su3 = orth + (h * j - j * h).norm() + (complex_det(h) - Complex::new(1.0, 0.0)).norm() + (b.adapted() - conj).norm();
    let anti = orth + (h.determinant() + 1.0).abs() + (h * j * hi + j).norm() + (b.adapted() + conj).norm();
    report.su3_residual = Some(su3);
    report.anti_residual = Some(anti);
    let (variant, corner, best) =
        if su3 <= anti { (ConjugacyVariant::SpecialUnitary, 1.0, su3) } else { (ConjugacyVariant::AntiUnitary, -1.0, anti) };
    let ht = embed(h, corner);
    let phi0 = phi();
    let phi_res = crate::exterior::act(&ht, &phi0)?.dist(&phi0);
    let br_res = liealg::act(&ht, &a.bracket())?.dist(&b.bracket());
    report.phi_residual = Some(phi_res);
    report.bracket_residual = Some(br_res);
    let ok = best <= GROUP_TOL * scale && phi_res <= GROUP_TOL * scale && br_res <= GROUP_TOL * scale;
    report.equivalent = Some(ok);
    if ok {
        report.variant = Some(variant);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeberReport {
    pub sum_residual: f64,
    /// Distance of `A2` from `su(3)`: `sl(3,C)` defect plus `|A2 + A2^t|`.
    pub su3_residual: f64,
    pub commutator_residual: f64,
    /// `(G_A, phi)` is equivalent to `(G_{A1}, phi)`.
    pub verified: bool,
}

/// Certifies `A = A1 + A2` with `A2` in `su(3)` and `[A1, A2] = 0`.
pub fn heber_split(a: &Mat6, a1: &Mat6, a2: &Mat6) -> HeberReport {
    let scale = a.norm().max(1.0);
    let sum_residual = (a - a1 - a2).norm();
    let su3_residual = sl3c_residual(a2) + (a2 + a2.transpose()).norm();
    let commutator_residual = comm(a1, a2).norm();
    let verified = sum_residual <= GROUP_TOL * scale
        && su3_residual <= GROUP_TOL * scale
        && commutator_residual <= GROUP_TOL * scale * scale;
    HeberReport { sum_residual, su3_residual, commutator_residual, verified }
}

/// The generic pipeline's `Q` for `mu_A`, for cross-checks against [`q_closed_form`].
pub fn q_generic(a: &AAMatrix) -> Result<Endo> {
    let (_, mu, s) = build(a.adapted())?;
    s.solve_q(&liealg::hodge_laplacian(&mu, s.metric(), s.phi()))
}

/// `Metric` induced by the fixed form; the identity.
pub fn metric() -> Metric {
    Metric::euclidean()
}

/// `B = [[0, a, 0], [b, 0, 0], [0, 0, 0]]`, `C = 0`.
pub fn family_2d(a: f64, b: f64) -> AAMatrix {
    AAMatrix::from_complex(&Mat3::new(0., a, 0., b, 0., 0., 0., 0., 0.), &Mat3::zeros())
}

/// `B = [[0, a, 0], [c, 0, b], [0, d, 0]]`, `C = 0`.
pub fn family_4d(a: f64, b: f64, c: f64, d: f64) -> AAMatrix {
    AAMatrix::from_complex(&Mat3::new(0., a, 0., c, 0., b, 0., d, 0.), &Mat3::zeros())
}

/// `(a', b')` for [`family_2d`], read off [`matrix_flow_rhs`].
pub fn family_2d_rhs(a: f64, b: f64) -> [f64; 2] {
    let v = matrix_flow_rhs(family_2d(a, b).adapted());
    [v[(0, 1)], v[(1, 0)]]
}

/// `(a', b', c', d')` for [`family_4d`], read off [`matrix_flow_rhs`].
pub fn family_4d_rhs(p: [f64; 4]) -> [f64; 4] {
    let v = matrix_flow_rhs(family_4d(p[0], p[1], p[2], p[3]).adapted());
    [v[(0, 1)], v[(1, 2)], v[(1, 0)], v[(2, 1)]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{ce_differential, derivations, delta_mu, ricci};

    fn n6_soliton() -> AAMatrix {
        let s2 = 2f64.sqrt();
        AAMatrix::from_complex(&Mat3::new(0., 1., 0., 0., 0., s2, 0., 0., 0.), &Mat3::zeros())
    }

    #[test]
    fn basis_conversion_roundtrip() {
        let a = Mat6::from_fn(|r, c| (r * 6 + c) as f64);
        assert_eq!(natural_to_adapted(&adapted_to_natural(&a)), a);
        let j = adapted_to_natural(&j_matrix());
        // J e1 = e2 in natural order, matching omega = e^12 + ...
        assert_eq!(j[(1, 0)], 1.0);
        assert_eq!(j[(0, 1)], -1.0);
    }

    #[test]
    fn fixed_form_decomposes() {
        let e7: KForm = "e7".parse().unwrap();
        assert_eq!(wedge(&omega(), &e7).unwrap() + rho_plus(), phi());
        let s = G2Structure::new(&phi()).unwrap();
        assert!((s.metric().gram() - Endo::identity()).amax() < 1e-14);
    }

    #[test]
    fn zero_matrix_is_flat() {
        let (m, mu, s) = build(&Mat6::zeros()).unwrap();
        assert!(m.flags().in_su3 && m.flags().is_normal && m.flags().is_nilpotent);
        assert_eq!(mu.norm(), 0.0);
        assert_eq!(ce_differential(&mu, s.phi()).unwrap().norm(), 0.0);
    }

    #[test]
    fn bracket_has_a_as_ad_e7() {
        let a = n6_soliton();
        let mu = a.bracket();
        let e7 = crate::exterior::Vec7::ith(6, 1.0);
        let ad = mu.ad(&e7);
        assert!((ad.fixed_view::<6, 6>(0, 0) - a.natural()).norm() < 1e-15);
        assert!(liealg::jacobi_residual(&mu) == 0.0);
        assert!(delta_mu(&mu, &embed(a.adapted(), 0.0)).norm() < 1e-14);
        assert!((mu.norm().powi(2) - 2.0 * a.norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn n6_soliton_flags_and_classification() {
        let a = n6_soliton();
        assert!(a.flags().in_sl3c && a.flags().is_nilpotent && !a.flags().is_normal);
        let cl = classify_soliton(&a).unwrap();
        assert_eq!(cl.kind, AAKind::SemiAlgebraic);
        assert!((cl.c + 3.0).abs() < 1e-10);
        assert!((cl.d - 1.0).abs() < 1e-10);
        assert_eq!(cl.normal_form, NormalForm::NilpotentN6);
        // The reference D2 satisfies the same linear constraints.
        let s2 = 2f64.sqrt();
        let d2 = Mat3::new(4., 0., -s2, 0., 3., 0., 0., 0., 2.);
        let d1 = realify(&complexify(&d2, &Mat3::zeros()));
        let m = a.adapted();
        assert!((comm(&d1, m) - m * cl.d).norm() < 1e-12);
        let sm = m + m.transpose();
        let want = comm(m, &m.transpose()) - sm * sm + Mat6::identity() * (2.0 * cl.d + 0.5 * (sm * sm).trace());
        assert!((d1 + d1.transpose() - want).norm() < 1e-12);
    }

    #[test]
    fn n6_at_t_one_is_not_a_soliton() {
        let a = AAMatrix::from_complex(&Mat3::new(0., 1., 0., 0., 0., 1., 0., 0., 0.), &Mat3::zeros());
        assert_eq!(classify_soliton(&a).unwrap().kind, AAKind::None);
    }

    #[test]
    fn diagonal_complex_is_algebraic() {
        let b = Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, -0.3, -0.7));
        let c = Mat3::from_diagonal(&nalgebra::Vector3::new(0.2, 0.5, -0.7));
        let a = AAMatrix::from_complex(&b, &c);
        let cl = classify_soliton(&a).unwrap();
        assert_eq!(cl.kind, AAKind::Algebraic);
        assert!(matches!(cl.normal_form, NormalForm::DiagonalComplex { .. }));
        // D = D1 + d is a derivation of mu_A.
        let d = embed(&cl.d1.unwrap(), cl.d);
        assert!(delta_mu(&a.bracket(), &d).norm() < 1e-10);
    }

    #[test]
    fn ricci_closed_form_matches_koszul() {
        let b = Mat3::new(0.3, -0.2, 0.5, 0.1, -0.4, 0.7, -0.6, 0.2, 0.1);
        let c = Mat3::new(0.2, 0.1, -0.3, 0.0, 0.4, -0.5, 0.3, 0.3, -0.6);
        let a = AAMatrix::from_complex(&b, &c);
        assert!(a.flags().in_sl3c);
        let (ric, scal) = ricci_closed_form(&a).unwrap();
        let (r2, s2) = ricci(&a.bracket(), &Metric::euclidean());
        assert!((ric - r2).amax() < 1e-12);
        assert!((scal - s2).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_generic_pipeline() {
        let b = Mat3::new(0.3, -0.2, 0.5, 0.1, -0.4, 0.7, -0.6, 0.2, 0.1);
        let c = Mat3::new(0.2, 0.1, -0.3, 0.0, 0.4, -0.5, 0.3, 0.3, -0.6);
        let a = AAMatrix::from_complex(&b, &c);
        let (_, mu, s) = build(a.adapted()).unwrap();
        let cf = closed_forms(&a).unwrap();
        assert!(ce_differential(&mu, s.phi()).unwrap().norm() < 1e-13);
        let delta = liealg::hodge_laplacian(&mu, s.metric(), s.phi());
        assert!(cf.laplacian.dist(&delta) < 1e-12, "{}", cf.laplacian.dist(&delta));
        assert!((cf.q - q_generic(&a).unwrap()).amax() < 1e-10);
        let dpsi = ce_differential(&mu, s.psi()).unwrap();
        let tf = s.torsion_forms(&ce_differential(&mu, s.phi()).unwrap(), &dpsi).unwrap();
        assert!(cf.tau.dist(&tf.tau2) < 1e-10, "{}", cf.tau.dist(&tf.tau2));
    }

    #[test]
    fn matrix_flow_is_the_bracket_flow() {
        let b = Mat3::new(0.3, -0.2, 0.5, 0.1, -0.4, 0.7, -0.6, 0.2, 0.1);
        let c = Mat3::new(0.2, 0.1, -0.3, 0.0, 0.4, -0.5, 0.3, 0.3, -0.6);
        let a = AAMatrix::from_complex(&b, &c);
        let (_, mu, s) = build(a.adapted()).unwrap();
        let generic = crate::flow::bracket_flow_rhs(&mu, &s).unwrap();
        let want = AAMatrix::from_adapted(matrix_flow_rhs(a.adapted())).bracket();
        assert!(generic.dist(&want) < 1e-10, "{}", generic.dist(&want));
    }

    #[test]
    fn n6_soliton_trajectory() {
        let a = n6_soliton();
        let opts = IntegratorOptions { t_end: 5.0, sample_every: Some(1.0), atol: 1e-12, rtol: 1e-12, ..Default::default() };
        let tr = matrix_bracket_flow(&a, &opts).unwrap();
        assert_eq!(tr.status, FlowStatus::Completed);
        let s2 = 2f64.sqrt();
        let perp = realify(&complexify(&Mat3::new(0., 0., 0., -s2, 0., 0., 0., 1., 0.), &Mat3::zeros()));
        for smp in &tr.samples {
            let s = (6.0 * smp.t + 1.0).ln() / 6.0;
            let want = (a.adapted() * (s / s2).cos() + perp * (s / s2).sin()) / (6.0 * smp.t + 1.0).sqrt();
            assert!((smp.a - want).norm() < 1e-8, "t={} {}", smp.t, (smp.a - want).norm());
        }
    }

    #[test]
    fn families_are_invariant() {
        let v = matrix_flow_rhs(family_2d(0.7, -1.3).adapted());
        let back = family_2d(v[(0, 1)], v[(1, 0)]);
        assert!((back.adapted() - v).norm() < 1e-14);
        let v = matrix_flow_rhs(family_4d(0.7, -1.3, 0.4, 2.0).adapted());
        let r = family_4d_rhs([0.7, -1.3, 0.4, 2.0]);
        assert!((family_4d(r[0], r[1], r[2], r[3]).adapted() - v).norm() < 1e-14);
        // Skew matrices are torsion-free fixed points.
        assert_eq!(family_2d_rhs(1.5, -1.5), [0.0, 0.0]);
    }

    #[test]
    fn norm_decay_matches_moment_map() {
        let b = Mat3::new(0.3, -0.2, 0.5, 0.1, -0.4, 0.7, -0.6, 0.2, 0.1);
        let c = Mat3::new(0.2, 0.1, -0.3, 0.0, 0.4, -0.5, 0.3, 0.3, -0.6);
        let a = AAMatrix::from_complex(&b, &c);
        let m = a.adapted();
        let rate = 2.0 * m.dot(&matrix_flow_rhs(m));
        let s = m + m.transpose();
        let want = -m.norm_squared() * s.norm_squared() / 3.0 - comm(m, &m.transpose()).norm_squared();
        assert!((rate - want).abs() < 1e-12);
        // |mu_A|^2 = 2|A|^2 evolves by -8 tr(Q M).
        let qm = (q_closed_form(&a).unwrap() * moment_map(&a)).trace();
        assert!((2.0 * rate + 8.0 * qm).abs() < 1e-12);
        assert!((sym_trace(m) - sym_trace_complex(&a.complex_view())).abs() < 1e-12);
    }

    #[test]
    fn normal_moment_map_is_diagonal() {
        let a = family_2d(1.0, 1.0);
        let m = moment_map(&a);
        let mut want = Endo::zeros();
        want[(6, 6)] = -0.5 * a.norm().powi(2);
        assert!((m - want).amax() < 1e-15);
    }

    #[test]
    fn classifier_agrees_with_generic_detector() {
        // diag(1, -1, 0) has a degenerate derivation algebra that once stalled the SVD.
        let a = AAMatrix::from_complex(&Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 0.0)), &Mat3::zeros());
        let (_, mu, s) = build(a.adapted()).unwrap();
        let cert = crate::flow::detect_algebraic(&mu, &s).unwrap();
        let cl = classify_soliton(&a).unwrap();
        assert_eq!(cert.kind, crate::flow::SolitonKind::Algebraic);
        assert_eq!(cl.kind, AAKind::Algebraic);
        assert!((cert.c - cl.c).abs() < 1e-9 && (cl.c + 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_family_ricci() {
        for t in [0.0, 0.5, 1.3] {
            let a = AAMatrix::from_complex(&Mat3::new(0., t, 0., 0., 0., 1., 0., 0., 0.), &Mat3::zeros());
            let (ric, _) = ricci_closed_form(&a).unwrap();
            let (blk, corner) = split(&ric);
            let want = [t * t, 1.0 - t * t, -1.0, t * t, 1.0 - t * t, -1.0];
            for i in 0..6 {
                assert!((blk[(i, i)] - 0.5 * want[i]).abs() < 1e-14);
            }
            assert!((corner + (1.0 + t * t)).abs() < 1e-14);
        }
    }

    #[test]
    fn derivations_contain_a() {
        let b = Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, -3.0));
        let a = AAMatrix::from_complex(&b, &Mat3::zeros());
        let der = derivations(&a.bracket());
        let x = embed(a.adapted(), 0.0);
        let proj: Endo = der.iter().fold(Endo::zeros(), |acc, d| acc + d * d.dot(&x));
        assert!((proj - x).norm() < 1e-10);
    }

    #[test]
    fn heber_split_of_mixed_example() {
        let a1 = realify(&complexify(&Mat3::new(0., 0., 1., 0., 0., 0., 0., 0., 0.), &Mat3::zeros()));
        let a2 = realify(&complexify(&Mat3::zeros(), &Mat3::from_diagonal(&nalgebra::Vector3::new(1.0, -2.0, 1.0))));
        let rep = heber_split(&(a1 + a2), &a1, &a2);
        assert!(rep.verified, "{rep:?}");
        let bad = heber_split(&(a1 + a2), &a2, &a1);
        assert!(!bad.verified);
    }

    #[test]
    fn identity_conjugacy() {
        let a = n6_soliton();
        let rep = conjugacy_report(&a, &a, Some(&Mat6::identity())).unwrap();
        assert_eq!(rep.equivalent, Some(true));
        assert_eq!(rep.variant, Some(ConjugacyVariant::SpecialUnitary));
        assert!(rep.spectrum_matches);
    }
}
