//! Certificates for algebraic and semi-algebraic Laplacian solitons.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::FlowTrajectory;
use crate::error::{Error, Result};
use crate::exterior::{Endo, Metric};
use crate::g2core::G2Structure;
use crate::liealg::{ce_differential, derivations, hodge_laplacian, Bracket};
use crate::linalg::{endo_vec, lstsq};

const FIT_TOL: f64 = 1e-7;
const TORSION_FREE_TOL: f64 = 1e-9;
const CLOSED_TOL: f64 = 1e-8;
const DIAGONAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonKind {
    TorsionFree,
    Algebraic,
    SemiAlgebraic,
    None,
}

/// Sign convention: `Delta phi = -3c phi + ...`, so `c < 0` expands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonLabel {
    Expanding,
    Steady,
    Shrinking,
}

impl SolitonLabel {
    pub fn from_c(c: f64, scale: f64) -> Self {
        if c.abs() <= 1e-10 * scale.max(1.0) {
            Self::Steady
        } else if c < 0.0 {
            Self::Expanding
        } else {
            Self::Shrinking
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolitonCertificate {
    pub kind: SolitonKind,
    pub c: f64,
    /// The derivation `D` of the fit.
    pub d: Endo,
    /// `|Q - cI - X|` with `X = D` or its symmetric part.
    pub residual: f64,
    /// `residual / |Q|` (zero when `Q = 0`).
    pub relative_residual: f64,
    pub label: Option<SolitonLabel>,
    /// Skew part `(D - D^t)/2`, for semi-algebraic fits.
    pub skew: Option<Endo>,
    /// Residual of the competing fit, when one was computed.
    pub next_residual: Option<f64>,
}

struct Fit {
    c: f64,
    d: Endo,
    residual: f64,
    qnorm: f64,
}

/// Least-squares fit of `Q` by `c I + sum_k x_k T(D_k)` in the metric norm.
fn fit(g: &Metric, q: &Endo, der: &[Endo], transform: impl Fn(&Endo) -> Endo) -> Fit {
    let to = |x: &Endo| endo_vec(&g.endo_to_frame(x));
    let mut m = DMatrix::zeros(49, der.len() + 1);
    m.set_column(0, &to(&Endo::identity()));
    for (k, d) in der.iter().enumerate() {
        m.set_column(k + 1, &to(&transform(d)));
    }
    let rhs: DVector<f64> = to(q);
    let (x, residual) = lstsq(&m, &rhs, 1e-10);
    let d = der.iter().enumerate().fold(Endo::zeros(), |acc, (k, e)| acc + e * x[k + 1]);
    Fit { c: x[0], d, residual, qnorm: rhs.norm() }
}

fn q_of(mu: &Bracket, s: &G2Structure) -> Result<Endo> {
    s.solve_q(&hodge_laplacian(mu, s.metric(), s.phi()))
}

fn is_torsion_free(mu: &Bracket, s: &G2Structure) -> Result<bool> {
    let g = s.metric();
    let tol = TORSION_FREE_TOL * mu.norm().max(1.0);
    Ok(g.norm(&ce_differential(mu, s.phi())?) <= tol && g.norm(&ce_differential(mu, s.psi())?) <= tol)
}

fn torsion_free_certificate() -> SolitonCertificate {
    SolitonCertificate {
        kind: SolitonKind::TorsionFree,
        c: 0.0,
        d: Endo::zeros(),
        residual: 0.0,
        relative_residual: 0.0,
        label: Some(SolitonLabel::Steady),
        skew: None,
        next_residual: None,
    }
}

fn certificate(f: Fit, kind: SolitonKind, skew: Option<Endo>) -> SolitonCertificate {
    let accepted = f.residual < FIT_TOL * f.qnorm.max(1.0);
    SolitonCertificate {
        kind: if accepted { kind } else { SolitonKind::None },
        c: f.c,
        d: f.d,
        residual: f.residual,
        relative_residual: if f.qnorm > 0.0 { f.residual / f.qnorm } else { 0.0 },
        label: accepted.then(|| SolitonLabel::from_c(f.c, f.qnorm)),
        skew: if accepted { skew } else { None },
        next_residual: None,
    }
}

/// Fits `Q = cI + D` with `D` a derivation.
pub fn detect_algebraic(mu: &Bracket, s: &G2Structure) -> Result<SolitonCertificate> {
    if is_torsion_free(mu, s)? {
        return Ok(torsion_free_certificate());
    }
    let q = q_of(mu, s)?;
    let f = fit(s.metric(), &q, &derivations(mu), |d| *d);
    Ok(certificate(f, SolitonKind::Algebraic, None))
}

/// Fits `Q = cI + (D + D^t)/2` with `D` a derivation; requires a closed structure.
pub fn detect_semialgebraic(mu: &Bracket, s: &G2Structure) -> Result<SolitonCertificate> {
    let g = s.metric();
    let dphi = g.norm(&ce_differential(mu, s.phi())?);
    if dphi > CLOSED_TOL * mu.norm().max(1.0) {
        return Err(Error::NotClosed(format!("|d phi| = {dphi:e}")));
    }
    if is_torsion_free(mu, s)? {
        return Ok(torsion_free_certificate());
    }
    let q = q_of(mu, s)?;
    let asym = g.endo_norm(&(q - g.adjoint(&q)));
    if asym > CLOSED_TOL * g.endo_norm(&q).max(1.0) {
        return Err(Error::NotClosed(format!("Q is not symmetric (defect {asym:e})")));
    }
    let f = fit(g, &q, &derivations(mu), |d| (d + g.adjoint(d)) * 0.5);
    let skew = (f.d - g.adjoint(&f.d)) * 0.5;
    Ok(certificate(f, SolitonKind::SemiAlgebraic, Some(skew)))
}

/// Most specific accepted kind; `next_residual` holds the other fit's residual.
pub fn classify_bracket(mu: &Bracket, s: &G2Structure) -> Result<SolitonCertificate> {
    let alg = detect_algebraic(mu, s)?;
    let semi = match detect_semialgebraic(mu, s) {
        Ok(c) => Some(c),
        Err(Error::NotClosed(_)) => None,
        Err(e) => return Err(e),
    };
    let semi_residual = semi.as_ref().map(|c| c.residual);
    Ok(match (alg.kind, semi) {
        (SolitonKind::TorsionFree | SolitonKind::Algebraic, _) => SolitonCertificate { next_residual: semi_residual, ..alg },
        (_, Some(sc)) if sc.kind == SolitonKind::SemiAlgebraic => {
            SolitonCertificate { next_residual: Some(alg.residual), ..sc }
        }
        _ => SolitonCertificate { next_residual: semi_residual, ..alg },
    })
}

/// `max_{i<j} |[Q_i, Q_j]| / (|Q_i| |Q_j|)` over the trajectory's samples.
pub fn lf_diagonal_defect(traj: &FlowTrajectory) -> f64 {
    let qs: Vec<(&Endo, f64)> = traj.samples.iter().map(|s| (&s.q, s.q.norm())).filter(|(_, n)| *n > 1e-300).collect();
    let mut worst: f64 = 0.0;
    for i in 0..qs.len() {
        for j in i + 1..qs.len() {
            let (a, na) = qs[i];
            let (b, nb) = qs[j];
            worst = worst.max((a * b - b * a).norm() / (na * nb));
        }
    }
    worst
}

/// Whether the `Q` samples pairwise commute (are simultaneously diagonalizable).
pub fn lf_diagonal_test(traj: &FlowTrajectory) -> bool {
    lf_diagonal_defect(traj) < DIAGONAL_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{KForm, Vec7};
    use crate::liealg::LieBracket;

    fn phi41() -> KForm {
        "e147 + e267 + e357 + e123 + e156 + e245 - e346".parse().unwrap()
    }

    #[test]
    fn nilpotent_example_is_expanding_algebraic() {
        let mu = LieBracket::from_triples(&[(1, 2, 5, -1.0), (1, 3, 6, -1.0)]).unwrap();
        let s = G2Structure::new(&phi41()).unwrap();
        let cert = detect_algebraic(&mu, &s).unwrap();
        assert_eq!(cert.kind, SolitonKind::Algebraic);
        assert!((cert.c + 5.0 / 3.0).abs() < 1e-10);
        let want = Endo::from_diagonal(&Vec7::from_column_slice(&[1., 1., 1., 2., 2., 2., 2.]));
        assert!((cert.d - want).amax() < 1e-9);
        assert_eq!(cert.label, Some(SolitonLabel::Expanding));
        let semi = detect_semialgebraic(&mu, &s).unwrap();
        assert_eq!(semi.kind, SolitonKind::SemiAlgebraic);
        assert!((semi.c - cert.c).abs() < 1e-8);
        let best = classify_bracket(&mu, &s).unwrap();
        assert_eq!(best.kind, SolitonKind::Algebraic);
        assert!(best.next_residual.unwrap() < 1e-9);
    }

    #[test]
    fn torsion_free_and_not_closed_inputs() {
        let s = G2Structure::new(&phi41()).unwrap();
        let ab = LieBracket::new(Bracket::zero()).unwrap();
        assert_eq!(detect_algebraic(&ab, &s).unwrap().kind, SolitonKind::TorsionFree);
        // d != a: not closed.
        let mu = LieBracket::from_triples(&[(1, 2, 5, -1.0), (1, 3, 6, -2.0)]).unwrap();
        assert!(matches!(detect_semialgebraic(&mu, &s), Err(Error::NotClosed(_))));
    }
}
