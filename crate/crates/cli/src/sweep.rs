//! Parallel classification over a list or grid of almost-abelian matrices.

use std::io::Write;

use g2flow::almostabelian::{classify_soliton, closed_forms, family_2d, family_4d, AAKind, AAMatrix};
use g2flow::io::{AAMatrixJson, CSV_VERSION_LINE};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum Family {
    #[serde(rename = "2d")]
    TwoParam,
    #[serde(rename = "4d")]
    FourParam,
}

/// `n` evenly spaced values from `from` to `to` inclusive.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Axis {
    pub from: f64,
    pub to: f64,
    pub n: usize,
}

impl Axis {
    fn values(&self) -> Vec<f64> {
        match self.n {
            1 => vec![self.from],
            n => (0..n).map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SweepInput {
    List { matrices: Vec<AAMatrixJson> },
    Grid { family: Family, axes: Vec<Axis> },
}

pub struct Point {
    pub params: Vec<f64>,
    pub matrix: AAMatrix,
}

impl SweepInput {
    pub fn points(&self) -> CliResult<Vec<Point>> {
        match self {
            Self::List { matrices } => matrices
                .iter()
                .enumerate()
                .map(|(i, j)| {
                    AAMatrix::try_from(j)
                        .map(|matrix| Point { params: Vec::new(), matrix })
                        .map_err(|e| CliError::new("parse", format!("matrix {i}: {e}")))
                })
                .collect(),
            Self::Grid { family, axes } => {
                let dim = match family {
                    Family::TwoParam => 2,
                    Family::FourParam => 4,
                };
                if axes.len() != dim {
                    return Err(CliError::new("parse", format!("family needs {dim} axes, got {}", axes.len())));
                }
                if let Some(a) = axes.iter().find(|a| a.n == 0 || !a.from.is_finite() || !a.to.is_finite()) {
                    return Err(CliError::new("parse", format!("bad axis {a:?}")));
                }
                // Row-major: the last axis varies fastest.
                let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
                for ax in axes {
                    let vals = ax.values();
                    grid = grid.into_iter().flat_map(|p| vals.iter().map(move |v| [p.as_slice(), &[*v]].concat())).collect();
                }
                Ok(grid
                    .into_iter()
                    .map(|p| {
                        let matrix = match family {
                            Family::TwoParam => family_2d(p[0], p[1]),
                            Family::FourParam => family_4d(p[0], p[1], p[2], p[3]),
                        };
                        Point { params: p, matrix }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub params: Vec<f64>,
    pub kind: AAKind,
    pub c: f64,
    pub d: f64,
    pub scalar_curvature: f64,
    pub torsion_norm: f64,
    pub residual: f64,
}

fn evaluate(index: usize, p: &Point) -> CliResult<SweepRow> {
    let at = |e: g2flow::Error| CliError::new("precondition", format!("point {index}: {e}"));
    let cl = classify_soliton(&p.matrix).map_err(at)?;
    let cf = closed_forms(&p.matrix).map_err(at)?;
    Ok(SweepRow {
        index,
        params: p.params.clone(),
        kind: cl.kind,
        c: cl.c,
        d: cl.d,
        scalar_curvature: cf.scalar_curvature,
        torsion_norm: cf.tau.norm(),
        residual: cl.residual,
    })
}

/// Evaluates every point on a pool of `jobs` threads (0: all cores); rows keep input order.
pub fn run(points: &[Point], jobs: usize) -> CliResult<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::new("io", format!("thread pool: {e}")))?;
    pool.install(|| points.par_iter().enumerate().map(|(i, p)| evaluate(i, p)).collect())
}

fn kind_name(k: AAKind) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn write_csv(w: &mut dyn Write, rows: &[SweepRow]) -> std::io::Result<()> {
    let np = rows.first().map_or(0, |r| r.params.len());
    writeln!(w, "{CSV_VERSION_LINE}")?;
    let mut head = vec!["index".to_string()];
    head.extend((1..=np).map(|i| format!("p{i}")));
    head.extend(["kind", "c", "d", "R", "|tau|", "residual"].map(String::from));
    writeln!(w, "{}", head.join(","))?;
    for r in rows {
        let mut cols = vec![r.index.to_string()];
        cols.extend(r.params.iter().map(f64::to_string));
        cols.push(kind_name(r.kind));
        cols.extend([r.c, r.d, r.scalar_curvature, r.torsion_norm, r.residual].map(|x| x.to_string()));
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}
