//! Seeded generators and property checks shared by the integration targets.
#![allow(dead_code)]

use g2flow::almostabelian::{AAMatrix, Mat3, Mat6};
use g2flow::exterior::{act, masks, theta, Endo, KForm};
use g2flow::io::default_phi;
use g2flow::liealg::{ce_differential, hodge_laplacian, jacobi_residual, Bracket};
use g2flow::G2Structure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5eed_2f10;

/// Base seed, overridable with `G2FLOW_SEED`.
pub fn seed() -> u64 {
    std::env::var("G2FLOW_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

/// Independent stream per check so adding a check never shifts the others.
pub fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed());
    r.set_stream(stream);
    r
}

pub fn unit(r: &mut impl Rng) -> f64 {
    r.random_range(-1.0..=1.0)
}

pub fn random_mat3(r: &mut impl Rng) -> Mat3 {
    Mat3::from_fn(|_, _| unit(r))
}

/// `B + iC` with entries in [-1, 1], then made trace-free over C.
pub fn random_sl3c(r: &mut impl Rng) -> AAMatrix {
    let mut b = random_mat3(r);
    let mut c = random_mat3(r);
    let (tb, tc) = (b.trace() / 3.0, c.trace() / 3.0);
    for i in 0..3 {
        b[(i, i)] -= tb;
        c[(i, i)] -= tc;
    }
    AAMatrix::from_complex(&b, &c)
}

/// A random element of su(3): `W - W^*` made trace-free.
pub fn random_su3(r: &mut impl Rng) -> AAMatrix {
    let (b0, c0) = (random_mat3(r), random_mat3(r));
    let mut b = b0 - b0.transpose();
    let mut c = c0 + c0.transpose();
    let tc = c.trace() / 3.0;
    for i in 0..3 {
        c[(i, i)] -= tc;
    }
    b.fill_diagonal(0.0);
    AAMatrix::from_complex(&b, &c)
}

pub fn random_endo(r: &mut impl Rng) -> Endo {
    Endo::from_fn(|_, _| unit(r))
}

/// `I + eps U`, invertible for small `eps`.
pub fn random_gl(r: &mut impl Rng, eps: f64) -> Endo {
    Endo::identity() + random_endo(r) * eps
}

pub fn random_kform(r: &mut impl Rng, k: usize) -> KForm {
    KForm::from_coeffs(k, (0..masks(k).len()).map(|_| unit(r)).collect())
}

/// A positive 3-form in the GL(7)-orbit of the default one, away from the identity metric.
pub fn random_positive_phi(r: &mut impl Rng) -> KForm {
    act(&random_gl(r, 0.3), &default_phi()).expect("invertible")
}

/// A unimodular Lie bracket: `mu_A` for trace-free real `A`, moved by a random `h`.
pub fn random_unimodular_lie(r: &mut impl Rng) -> Bracket {
    let mut a = Mat6::from_fn(|_, _| unit(r));
    let t = a.trace() / 6.0;
    for i in 0..6 {
        a[(i, i)] -= t;
    }
    let mu = AAMatrix::from_adapted(a).bracket();
    g2flow::liealg::act(&random_gl(r, 0.3), &mu).expect("invertible")
}

/// Antisymmetric constants with no further structure; Jacobi fails generically.
pub fn random_bracket(r: &mut impl Rng) -> Bracket {
    let mut b = Bracket::zero();
    for i in 0..7 {
        for j in i + 1..7 {
            for k in 0..7 {
                b.set(i, j, k, unit(r));
            }
        }
    }
    b
}

pub fn check_star_involution(phi: &KForm, a: &KForm) -> Result<(), String> {
    let s = G2Structure::new(phi).map_err(|e| e.to_string())?;
    let g = s.metric();
    let back = g.star(&g.star(a));
    let err = back.dist(a);
    if err <= 1e-9 * a.norm().max(1.0) {
        Ok(())
    } else {
        Err(format!("|**a - a| = {err:e} (degree {})", a.degree()))
    }
}

/// `d^2 = 0` on every 1-form exactly when Jacobi holds; on a Lie bracket also on higher forms.
pub fn check_d2_iff_jacobi(mu: &Bracket, extra: &[KForm]) -> Result<(), String> {
    let scale = mu.norm().max(1.0);
    let jac = jacobi_residual(mu);
    let mut d2 = 0.0f64;
    for k in 0..7 {
        let e = KForm::basis(&[k], 1.0).expect("basis 1-form");
        let dd = ce_differential(mu, &ce_differential(mu, &e).expect("degree 2")).expect("degree 3");
        d2 = d2.max(dd.norm());
    }
    let tol = 1e-9 * scale * scale;
    if (jac > tol) != (d2 > tol) {
        return Err(format!("Jacobi residual {jac:e} but |d^2 e^k| = {d2:e}"));
    }
    if jac <= tol {
        for a in extra.iter().filter(|a| a.degree() <= 5) {
            let dd = ce_differential(mu, &ce_differential(mu, a).expect("degree")).expect("degree");
            if dd.norm() > tol * a.norm().max(1.0) {
                return Err(format!("d^2 = {:e} on a {}-form", dd.norm(), a.degree()));
            }
        }
    }
    Ok(())
}

pub fn check_laplacian_selfadjoint(mu: &Bracket, phi: &KForm, a: &KForm, b: &KForm) -> Result<(), String> {
    let g = G2Structure::new(phi).map_err(|e| e.to_string())?.metric().clone();
    let la = hodge_laplacian(mu, &g, a);
    let lb = hodge_laplacian(mu, &g, b);
    let scale = (mu.norm().powi(2) * a.norm() * b.norm()).max(1.0) * g.gram().norm().powi(4).max(1.0);
    let asym = (g.inner(&la, b) - g.inner(a, &lb)).abs();
    let qa = g.inner(&la, a);
    if asym > 1e-9 * scale {
        return Err(format!("<La,b> - <a,Lb> = {asym:e}"));
    }
    if qa < -1e-9 * scale {
        return Err(format!("<La,a> = {qa:e} < 0"));
    }
    Ok(())
}

pub fn check_theta_homomorphism(x: &Endo, y: &Endo, a: &KForm) -> Result<(), String> {
    let lhs = theta(&(x * y - y * x), a);
    let rhs = theta(x, &theta(y, a)) - theta(y, &theta(x, a));
    let err = lhs.dist(&rhs);
    if err <= 1e-10 * (x.norm() * y.norm() * a.norm()).max(1.0) {
        Ok(())
    } else {
        Err(format!("theta([X,Y]) defect {err:e}"))
    }
}

/// `Q = solve_q(theta(X) phi)` reproduces `theta(X) phi`, is orthogonal to g2, and is a fixed point.
pub fn check_solve_q_roundtrip(phi: &KForm, x: &Endo) -> Result<(), String> {
    let s = G2Structure::new(phi).map_err(|e| e.to_string())?;
    let psi = theta(x, s.phi());
    let q = s.solve_q(&psi).map_err(|e| e.to_string())?;
    let scale = x.norm().max(1.0);
    let e1 = theta(&q, s.phi()).dist(&psi);
    let g = s.metric();
    let e2 = s.g2_basis().iter().map(|b| g.endo_inner(b, &q).abs()).fold(0.0, f64::max);
    let q2 = s.solve_q(&theta(&q, s.phi())).map_err(|e| e.to_string())?;
    let e3 = (q2 - q).norm();
    if e1 <= 1e-9 * scale && e2 <= 1e-9 * scale && e3 <= 1e-9 * scale {
        Ok(())
    } else {
        Err(format!("theta(Q)phi defect {e1:e}, g2 overlap {e2:e}, refit {e3:e}"))
    }
}
