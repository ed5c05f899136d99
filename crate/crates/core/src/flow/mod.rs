//! Bracket flow, direct Laplacian flow and the maps relating them.

mod integrator;
mod soliton;

pub use integrator::{IntegratorOptions, Method, Normalization};
pub use soliton::{
    classify_bracket, detect_algebraic, detect_semialgebraic, lf_diagonal_defect, lf_diagonal_test, SolitonCertificate,
    SolitonKind, SolitonLabel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{pullback, Endo, KForm, Metric};
use crate::g2core::{metric_from_3form, q_min_norm_with, G2Structure};
use crate::liealg::{self, ce_differential, delta_mu, hodge_laplacian, jacobi_residual, ricci, Bracket, LieBracket};
use crate::linalg::vec_endo;
use integrator::{integrate, Control, Grid, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowStatus {
    Completed,
    BlowupDetected,
    StepUnderflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    /// `mu(t)` evolves, `phi` is fixed.
    Bracket,
    /// `phi(t)` evolves, `mu` is fixed.
    Laplacian,
}

/// One recorded point of a flow; `mu` is constant for the Laplacian flow and `phi` for the bracket flow.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: f64,
    pub mu: Bracket,
    pub phi: KForm,
    /// `Q` with `theta(Q) phi = Delta phi`.
    pub q: Endo,
    pub norm_mu: f64,
    pub scalar_curvature: f64,
    /// NaN when `dphi, dpsi` admit no torsion decomposition to tolerance.
    pub torsion_norm: f64,
    /// `|Delta phi|` in the metric of `phi`.
    pub velocity_norm: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub kind: FlowKind,
    pub samples: Vec<FlowSample>,
    pub status: FlowStatus,
    pub options: IntegratorOptions,
    pub mu0: Bracket,
    pub phi0: KForm,
}

impl FlowTrajectory {
    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("a trajectory holds at least its initial sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

fn sample(t: f64, mu: &Bracket, s: &G2Structure) -> Result<FlowSample> {
    let g = s.metric();
    let delta = hodge_laplacian(mu, g, s.phi());
    let q = s.solve_q(&delta)?;
    let (_, scal) = ricci(mu, g);
    let dphi = ce_differential(mu, s.phi())?;
    let dpsi = ce_differential(mu, s.psi())?;
    let torsion_norm = s.torsion_forms(&dphi, &dpsi).map(|tf| tf.norm(g)).unwrap_or(f64::NAN);
    Ok(FlowSample {
        t,
        mu: mu.clone(),
        phi: s.phi().clone(),
        q,
        norm_mu: mu.norm(),
        scalar_curvature: scal,
        torsion_norm,
        velocity_norm: g.norm(&delta),
    })
}

/// Velocity of the bracket flow, `delta_mu(Q_mu)`, in [`Bracket::to_vec`] coordinates.
pub fn bracket_flow_rhs(mu: &Bracket, s: &G2Structure) -> Result<Bracket> {
    let q = s.solve_q(&hodge_laplacian(mu, s.metric(), s.phi()))?;
    Ok(delta_mu(mu, &q))
}

fn radial_projection(v: &mut [f64], y: &[f64]) {
    let yy: f64 = y.iter().map(|x| x * x).sum();
    if yy > 0.0 {
        let c = v.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / yy;
        v.iter_mut().zip(y).for_each(|(a, b)| *a -= c * b);
    }
}

fn status_of(outcome: Outcome) -> FlowStatus {
    match outcome {
        Outcome::Completed => FlowStatus::Completed,
        Outcome::Stopped | Outcome::RhsFailure => FlowStatus::BlowupDetected,
    }
}

/// Driver for autonomous flows with an infallible right-hand side; `observe` returns false to stop.
pub(crate) fn integrate_plain(
    y0: Vec<f64>,
    opts: &IntegratorOptions,
    mut rhs: impl FnMut(&[f64], &mut [f64]),
    mut observe: impl FnMut(f64, &[f64], bool) -> bool,
) -> Result<FlowStatus> {
    let outcome = integrate(
        y0,
        opts,
        None,
        |_, y, dy| {
            rhs(y, dy);
            Ok(())
        },
        |t, y, is_sample| Ok(if observe(t, y, is_sample) { Control::Continue } else { Control::Stop }),
    );
    match outcome {
        Ok(o) => Ok(status_of(o)),
        Err(Error::StepUnderflow { .. }) => Ok(FlowStatus::StepUnderflow),
        Err(e) => Err(e),
    }
}

/// Integrates `d mu/dt = delta_mu(Q_mu)` with `phi` fixed.
pub fn bracket_flow(mu0: &LieBracket, s: &G2Structure, opts: &IntegratorOptions) -> Result<FlowTrajectory> {
    let mut samples = Vec::new();
    let normalize = opts.normalize == Normalization::UnitBracketNorm;
    let outcome = integrate(
        mu0.to_vec(),
        opts,
        None,
        |_, y, dy| {
            let v = bracket_flow_rhs(&Bracket::from_vec(y), s)?.to_vec();
            dy.copy_from_slice(&v);
            if normalize {
                radial_projection(dy, y);
            }
            Ok(())
        },
        |t, y, is_sample| {
            let mu = Bracket::from_vec(y);
            let blown = !(mu.norm() <= opts.blowup_norm);
            if is_sample || blown {
                samples.push(sample(t, &mu, s)?);
            }
            Ok(if blown { Control::Stop } else { Control::Continue })
        },
    );
    let status = match outcome {
        Ok(o) => status_of(o),
        Err(Error::StepUnderflow { .. }) => FlowStatus::StepUnderflow,
        Err(e) => return Err(e),
    };
    Ok(FlowTrajectory {
        kind: FlowKind::Bracket,
        samples,
        status,
        options: opts.clone(),
        mu0: (**mu0).clone(),
        phi0: s.phi().clone(),
    })
}

/// Velocity `Delta_phi phi` of the Laplacian flow for the fixed bracket `mu`.
pub fn laplacian_flow_rhs(phi: &KForm, mu: &Bracket) -> Result<KForm> {
    let g = metric_from_3form(phi)?;
    Ok(hodge_laplacian(mu, &g, phi))
}

/// Integrates `d phi/dt = Delta_phi phi`, recomputing the metric from `phi(t)`.
pub fn laplacian_flow(phi0: &KForm, mu: &LieBracket, opts: &IntegratorOptions) -> Result<FlowTrajectory> {
    if opts.normalize != Normalization::None {
        return Err(Error::InvalidOptions("normalization applies to the bracket flow only".into()));
    }
    let s0 = G2Structure::new(phi0)?;
    let mut samples = vec![];
    let mut broke = false;
    let outcome = integrate(
        phi0.coeffs().to_vec(),
        opts,
        None,
        |_, y, dy| {
            let v = laplacian_flow_rhs(&KForm::from_coeffs(3, y.to_vec()), mu)?;
            dy.copy_from_slice(v.coeffs());
            Ok(())
        },
        |t, y, is_sample| {
            let phi = KForm::from_coeffs(3, y.to_vec());
            let blown = !(phi.norm() <= opts.blowup_norm);
            if t == 0.0 {
                samples.push(sample(t, mu, &s0)?);
            } else if is_sample || blown {
                match G2Structure::new(&phi) {
                    Ok(s) => samples.push(sample(t, mu, &s)?),
                    Err(Error::Positivity(_)) | Err(Error::SingularSystem(_)) => {
                        broke = true;
                        return Ok(Control::Stop);
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(if blown { Control::Stop } else { Control::Continue })
        },
    );
    let status = match outcome {
        Ok(_) if broke => FlowStatus::BlowupDetected,
        Ok(o) => status_of(o),
        Err(Error::StepUnderflow { .. }) => FlowStatus::StepUnderflow,
        Err(e) => return Err(e),
    };
    Ok(FlowTrajectory {
        kind: FlowKind::Laplacian,
        samples,
        status,
        options: opts.clone(),
        mu0: (**mu).clone(),
        phi0: phi0.clone(),
    })
}

/// Which ODE produces the equivalence `h(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HSide {
    /// `dh/dt = -h Q_{phi(t)}` along the direct Laplacian flow.
    #[serde(rename = "i")]
    Laplacian,
    /// `dh/dt = -Q_{mu(t)} h` along the bracket flow.
    #[serde(rename = "ii")]
    Bracket,
}

#[derive(Clone, Debug)]
pub struct HSample {
    pub t: f64,
    pub h: Endo,
    /// `|h^{-1}.phi0 - phi(t)|` for Laplacian trajectories, `|h.mu0 - mu(t)|` for bracket ones.
    pub residual: f64,
}

/// Re-integrates the flow together with `h(t)` and compares against the trajectory's samples.
pub fn reconstruct_h(traj: &FlowTrajectory, side: HSide) -> Result<Vec<HSample>> {
    if traj.options.normalize != Normalization::None {
        return Err(Error::InvalidOptions("h(t) is defined for the unnormalized flow".into()));
    }
    let times = traj.times();
    let t_end = *times.last().expect("non-empty trajectory");
    if t_end <= 0.0 {
        return Ok(vec![HSample { t: 0.0, h: Endo::identity(), residual: 0.0 }]);
    }
    let opts = IntegratorOptions { t_end, ..traj.options.clone() };
    let ident: Vec<f64> = Endo::identity().as_slice().to_vec();
    let mu0 = &traj.mu0;
    let phi0 = &traj.phi0;
    let s0 = G2Structure::new(phi0)?;
    let mut out = Vec::with_capacity(times.len());

    let mut record = |t: f64, h: Endo| -> Result<()> {
        let k = out.len();
        let Some(smp) = traj.samples.get(k) else { return Ok(()) };
        debug_assert!((smp.t - t).abs() <= 1e-9 * t.max(1.0));
        let residual = match traj.kind {
            FlowKind::Laplacian => pullback(&h, phi0).dist(&smp.phi),
            FlowKind::Bracket => liealg::act(&h, mu0)?.dist(&smp.mu),
        };
        out.push(HSample { t, h, residual });
        Ok(())
    };

    let grid = Some(Grid::Times(&times));
    match side {
        HSide::Laplacian => {
            let mut y0 = phi0.coeffs().to_vec();
            y0.extend_from_slice(&ident);
            integrate(
                y0,
                &opts,
                grid,
                |_, y, dy| {
                    let phi = KForm::from_coeffs(3, y[..35].to_vec());
                    let g: Metric = metric_from_3form(&phi)?;
                    let delta = hodge_laplacian(mu0, &g, &phi);
                    let q = q_min_norm_with(&phi, &g, &delta)?;
                    let h = vec_endo(&y[35..]);
                    dy[..35].copy_from_slice(delta.coeffs());
                    dy[35..].copy_from_slice((-(h * q)).as_slice());
                    Ok(())
                },
                |t, y, is_sample| {
                    if is_sample {
                        record(t, vec_endo(&y[35..]))?;
                    }
                    Ok(Control::Continue)
                },
            )?;
        }
        HSide::Bracket => {
            let mut y0 = mu0.to_vec();
            let n = y0.len();
            y0.extend_from_slice(&ident);
            integrate(
                y0,
                &opts,
                grid,
                |_, y, dy| {
                    let mu = Bracket::from_vec(&y[..n]);
                    let q = s0.solve_q(&hodge_laplacian(&mu, s0.metric(), s0.phi()))?;
                    let h = vec_endo(&y[n..]);
                    dy[..n].copy_from_slice(&delta_mu(&mu, &q).to_vec());
                    dy[n..].copy_from_slice((-(q * h)).as_slice());
                    Ok(())
                },
                |t, y, is_sample| {
                    if is_sample {
                        record(t, vec_endo(&y[n..]))?;
                    }
                    Ok(Control::Continue)
                },
            )?;
        }
    }
    Ok(out)
}

/// Largest Jacobi defect along a bracket trajectory.
pub fn max_jacobi_residual(traj: &FlowTrajectory) -> f64 {
    traj.samples.iter().map(|s| jacobi_residual(&s.mu)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::theta;

    fn phi41() -> KForm {
        "e147 + e267 + e357 + e123 + e156 + e245 - e346".parse().unwrap()
    }

    fn mu_ab(a: f64, b: f64) -> LieBracket {
        LieBracket::from_triples(&[(1, 2, 5, -a), (1, 2, 6, -b), (1, 3, 5, b), (1, 3, 6, -a)]).unwrap()
    }

    #[test]
    fn abelian_bracket_is_a_fixed_point() {
        let s = G2Structure::new(&phi41()).unwrap();
        let mu = LieBracket::new(Bracket::zero()).unwrap();
        let tr = bracket_flow(&mu, &s, &IntegratorOptions::default()).unwrap();
        assert_eq!(tr.status, FlowStatus::Completed);
        assert_eq!(tr.samples.len(), 11);
        assert!(tr.samples.iter().all(|x| x.mu.norm() == 0.0));
        let lf = laplacian_flow(&phi41(), &mu, &IntegratorOptions::default()).unwrap();
        assert!(lf.samples.iter().all(|x| x.phi == phi41()));
    }

    #[test]
    fn samples_carry_consistent_q() {
        let s = G2Structure::new(&phi41()).unwrap();
        let opts = IntegratorOptions { t_end: 0.5, ..Default::default() };
        let tr = bracket_flow(&mu_ab(1.0, 0.3), &s, &opts).unwrap();
        for smp in &tr.samples {
            let delta = hodge_laplacian(&smp.mu, s.metric(), s.phi());
            assert!(theta(&smp.q, s.phi()).dist(&delta) < 1e-8);
        }
        assert!(tr.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert!(max_jacobi_residual(&tr) < 1e-7);
    }

    #[test]
    fn normalized_flow_keeps_norm() {
        let s = G2Structure::new(&phi41()).unwrap();
        let opts = IntegratorOptions { t_end: 2.0, normalize: Normalization::UnitBracketNorm, ..Default::default() };
        let mu = mu_ab(1.0, 0.3);
        let tr = bracket_flow(&mu, &s, &opts).unwrap();
        for smp in &tr.samples {
            assert!((smp.norm_mu - mu.norm()).abs() < 1e-7);
        }
    }

    #[test]
    fn constant_q_trajectory_gives_exponential_h() {
        // For the abelian bracket Q = 0, so h stays the identity.
        let mu = LieBracket::new(Bracket::zero()).unwrap();
        let tr = laplacian_flow(&phi41(), &mu, &IntegratorOptions::default()).unwrap();
        for side in [HSide::Laplacian, HSide::Bracket] {
            let hs = reconstruct_h(&tr, side).unwrap();
            assert_eq!(hs.len(), tr.samples.len());
            assert!(hs.iter().all(|x| (x.h - Endo::identity()).amax() < 1e-14 && x.residual < 1e-14));
        }
    }
}
