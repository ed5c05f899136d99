//! Fixed-step RK4 and adaptive Dormand-Prince 5(4) on flat `Vec<f64>` states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Rk45,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    None,
    /// Keep the bracket norm constant by removing the radial part of the velocity.
    UnitBracketNorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Initial step; the fixed step for RK4.
    pub h0: f64,
    pub hmin: f64,
    pub hmax: f64,
    pub atol: f64,
    pub rtol: f64,
    pub t_end: f64,
    pub normalize: Normalization,
    /// Time between recorded samples; `None` records every accepted step.
    pub sample_every: Option<f64>,
    /// Bracket (or form) norm treated as a finite-time blow-up.
    pub blowup_norm: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            h0: 1e-3,
            hmin: 1e-12,
            hmax: 1.0,
            atol: 1e-9,
            rtol: 1e-9,
            t_end: 1.0,
            normalize: Normalization::None,
            sample_every: Some(0.1),
            blowup_norm: 1e8,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidOptions(m));
        if !(self.hmin > 0.0 && self.hmin <= self.h0 && self.h0 <= self.hmax) {
            return bad(format!("need 0 < hmin <= h0 <= hmax, got {} {} {}", self.hmin, self.h0, self.hmax));
        }
        if !(self.atol > 0.0 && self.rtol > 0.0) {
            return bad("atol and rtol must be positive".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive and finite, got {}", self.t_end));
        }
        if let Some(dt) = self.sample_every {
            if !(dt > 0.0) {
                return bad(format!("sample_every must be positive, got {dt}"));
            }
        }
        Ok(())
    }
}

/// Where samples are taken.
pub(crate) enum Grid<'a> {
    Stride(f64),
    Times(&'a [f64]),
    Steps,
}

impl Grid<'_> {
    fn from_options(o: &IntegratorOptions) -> Grid<'static> {
        match o.sample_every {
            Some(dt) => Grid::Stride(dt),
            None => Grid::Steps,
        }
    }

    /// First grid time strictly after `t`, capped at `t_end`.
    fn next_after(&self, t: f64, t_end: f64) -> f64 {
        let next = match self {
            Grid::Stride(dt) => {
                let k = (t / dt + 1e-9).floor() + 1.0;
                k * dt
            }
            Grid::Times(ts) => ts.iter().copied().find(|&s| s > t * (1.0 + 1e-14) + 1e-300).unwrap_or(t_end),
            Grid::Steps => t_end,
        };
        next.min(t_end)
    }
}

pub(crate) enum Control {
    Continue,
    Stop,
}

#[derive(Debug, PartialEq)]
pub(crate) enum Outcome {
    Completed,
    Stopped,
    /// The right-hand side kept failing with steps below `hmin`.
    RhsFailure,
}

/// Integrates from `t = 0`. `observe(t, y, is_sample)` runs at t = 0 and after every accepted step.
pub(crate) fn integrate<F, O>(
    y0: Vec<f64>,
    opts: &IntegratorOptions,
    grid: Option<Grid<'_>>,
    mut rhs: F,
    mut observe: O,
) -> Result<Outcome>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64], bool) -> Result<Control>,
{
    opts.validate()?;
    let grid = grid.unwrap_or_else(|| Grid::from_options(opts));
    let n = y0.len();
    let mut y = y0;
    let mut t = 0.0;
    if let Control::Stop = observe(t, &y, true)? {
        return Ok(Outcome::Stopped);
    }
    let mut h = opts.h0;
    let mut stepper = Stepper::new(n);
    let mut fsal: Option<Vec<f64>> = None;
    while t < opts.t_end {
        let target = grid.next_after(t, opts.t_end);
        let clipped = h >= target - t;
        let step = if clipped { target - t } else { h };
        match opts.method {
            Method::Rk4 => {
                if stepper.rk4(&mut rhs, t, &y, step).is_err() {
                    return Ok(Outcome::RhsFailure);
                }
            }
            Method::Rk45 => match stepper.dopri(&mut rhs, t, &y, step, fsal.as_deref()) {
                Ok(()) => {
                    let err = stepper.error_norm(&y, opts.atol, opts.rtol);
                    if !err.is_finite() || err > 1.0 {
                        let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
                        h = step * factor;
                        if h < opts.hmin {
                            return Err(Error::StepUnderflow { t, h });
                        }
                        continue;
                    }
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !clipped || step * factor < h {
                        h = (step * factor).min(opts.hmax);
                    }
                }
                Err(_) => {
                    fsal = None;
                    h = step * 0.25;
                    if h < opts.hmin {
                        return Ok(Outcome::RhsFailure);
                    }
                    continue;
                }
            },
        }
        std::mem::swap(&mut y, &mut stepper.y_new);
        if opts.method == Method::Rk45 {
            fsal = Some(stepper.k[6].clone());
        }
        t = if clipped { target } else { t + step };
        let is_sample = clipped || matches!(grid, Grid::Steps);
        if let Control::Stop = observe(t, &y, is_sample)? {
            return Ok(Outcome::Stopped);
        }
    }
    Ok(Outcome::Completed)
}

// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self { k: vec![vec![0.0; n]; 7], tmp: vec![0.0; n], y_new: vec![0.0; n], err: vec![0.0; n] }
    }

    fn stage<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], h: f64, s: usize, a: &[f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        for (i, v) in self.tmp.iter_mut().enumerate() {
            *v = y[i] + h * a.iter().enumerate().map(|(j, aj)| aj * self.k[j][i]).sum::<f64>();
        }
        let (tmp, k) = (&self.tmp, &mut self.k[s]);
        rhs(t, tmp, k)
    }

    fn rk4<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], h: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        rhs(t, y, &mut self.k[0])?;
        self.stage(rhs, t + 0.5 * h, y, h, 1, &[0.5])?;
        self.stage(rhs, t + 0.5 * h, y, h, 2, &[0.0, 0.5])?;
        self.stage(rhs, t + h, y, h, 3, &[0.0, 0.0, 1.0])?;
        for i in 0..y.len() {
            self.y_new[i] =
                y[i] + h / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
        Ok(())
    }

    fn dopri<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], h: f64, first: Option<&[f64]>) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        match first {
            Some(k1) => self.k[0].copy_from_slice(k1),
            None => rhs(t, y, &mut self.k[0])?,
        }
        for s in 1..7 {
            self.stage(rhs, t + C[s] * h, y, h, s, &A[s][..s])?;
        }
        // Stage 7 is evaluated at the fifth-order solution, so y_new = tmp.
        self.y_new.copy_from_slice(&self.tmp);
        for i in 0..y.len() {
            self.err[i] = h * (0..7).map(|s| E[s] * self.k[s][i]).sum::<f64>();
        }
        Ok(())
    }

    fn error_norm(&self, y: &[f64], atol: f64, rtol: f64) -> f64 {
        let n = y.len().max(1) as f64;
        let s: f64 = y
            .iter()
            .zip(&self.y_new)
            .zip(&self.err)
            .map(|((a, b), e)| {
                let sc = atol + rtol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(opts: &IntegratorOptions) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        integrate(
            vec![1.0],
            opts,
            None,
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            |t, y, s| {
                if s {
                    out.push((t, y[0]));
                }
                Ok(Control::Continue)
            },
        )
        .unwrap();
        out
    }

    #[test]
    fn adaptive_hits_sample_times() {
        let opts = IntegratorOptions { t_end: 2.0, sample_every: Some(0.25), ..Default::default() };
        let s = decay(&opts);
        assert_eq!(s.len(), 9);
        for (k, (t, y)) in s.iter().enumerate() {
            assert!((t - 0.25 * k as f64).abs() < 1e-14);
            assert!((y - (-t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |h: f64| {
            let o = IntegratorOptions { method: Method::Rk4, h0: h, hmin: h, hmax: h, sample_every: None, ..Default::default() };
            let s = decay(&o);
            (s.last().unwrap().1 - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.5, "{ratio}");
    }

    #[test]
    fn invalid_options_rejected() {
        let o = IntegratorOptions { hmin: 1.0, h0: 0.1, ..Default::default() };
        assert!(matches!(o.validate(), Err(Error::InvalidOptions(_))));
        let o = IntegratorOptions { rtol: 0.0, ..Default::default() };
        assert!(o.validate().is_err());
    }

    #[test]
    fn stiff_blowup_underflows() {
        // y' = y^2 blows up at t = 1.
        let opts = IntegratorOptions { t_end: 2.0, hmin: 1e-6, ..Default::default() };
        let r = integrate(
            vec![1.0],
            &opts,
            None,
            |_, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            |_, _, _| Ok(Control::Continue),
        );
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }
}
