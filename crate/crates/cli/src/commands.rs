use std::path::Path;

use g2flow::almostabelian::{classify_soliton, closed_forms, matrix_bracket_flow};
use g2flow::flow::{bracket_flow, classify_bracket, detect_algebraic, detect_semialgebraic, laplacian_flow};
use g2flow::io::{
    aa_records, flow_records, parse_aamatrix, parse_bracket_input, write_csv, CertificateJson, ClassificationJson, Sidecar,
    TrajectoryRecord,
};
use g2flow::G2Structure;
use serde::Serialize;

use crate::args::{Common, FlowChoice, Format};
use crate::corpus;
use crate::output::{read_input, sidecar_path, with_output, write_json, CliError, CliResult};
use crate::sweep::{self, SweepInput};

#[derive(Serialize)]
struct TrajectoryDoc<'a> {
    meta: &'a Sidecar,
    samples: &'a [TrajectoryRecord],
}

/// CSV with a JSON sidecar next to it, or one JSON document.
fn emit_trajectory(common: &Common, meta: &Sidecar, records: &[TrajectoryRecord]) -> CliResult<()> {
    let out = common.out.as_deref();
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            with_output(out, |w| write_csv(w, records))?;
            if let Some(path) = out {
                write_json(Some(&sidecar_path(path)), meta)?;
            }
            Ok(())
        }
        Format::Json => write_json(out, &TrajectoryDoc { meta, samples: records }),
    }
}

fn json_only<'a>(common: &'a Common, command: &str) -> CliResult<Option<&'a Path>> {
    match common.format {
        Some(Format::Csv) => Err(CliError::new("usage", format!("{command} writes JSON only"))),
        _ => Ok(common.out.as_deref()),
    }
}

pub fn flow(common: &Common, kind: FlowChoice) -> CliResult<i32> {
    let (mu, phi) = parse_bracket_input(&read_input(common.input.as_deref())?)?;
    let opts = common.integrator_options();
    opts.validate()?;
    let s = G2Structure::new(&phi)?;
    let traj = match kind {
        FlowChoice::Bracket => bracket_flow(&mu, &s, &opts)?,
        FlowChoice::Laplacian => laplacian_flow(&phi, &mu, &opts)?,
    };
    // The certificate describes the initial data; it is optional metadata.
    let cert = classify_bracket(&mu, &s).ok();
    emit_trajectory(common, &Sidecar::for_flow(&traj, cert.as_ref()), &flow_records(&traj))?;
    Ok(0)
}

pub fn aa_flow(common: &Common) -> CliResult<i32> {
    let a = parse_aamatrix(&read_input(common.input.as_deref())?)?;
    let opts = common.integrator_options();
    opts.validate()?;
    let traj = matrix_bracket_flow(&a, &opts)?;
    let cls = classify_soliton(&a).ok().map(|cl| ClassificationJson::new(&a, &cl));
    emit_trajectory(common, &Sidecar::for_aa(&traj, cls), &aa_records(&traj))?;
    Ok(0)
}

#[derive(Serialize)]
struct SolitonDoc {
    certificate: CertificateJson,
    algebraic: CertificateJson,
    /// Absent when the structure is not closed.
    semi_algebraic: Option<CertificateJson>,
}

pub fn soliton(common: &Common) -> CliResult<i32> {
    let out = json_only(common, "soliton")?;
    let (mu, phi) = parse_bracket_input(&read_input(common.input.as_deref())?)?;
    let s = G2Structure::new(&phi)?;
    let doc = SolitonDoc {
        certificate: (&classify_bracket(&mu, &s)?).into(),
        algebraic: (&detect_algebraic(&mu, &s)?).into(),
        semi_algebraic: detect_semialgebraic(&mu, &s).ok().as_ref().map(CertificateJson::from),
    };
    write_json(out, &doc)?;
    Ok(0)
}

#[derive(Serialize)]
struct ClassifyDoc {
    #[serde(flatten)]
    classification: ClassificationJson,
    scalar_curvature: f64,
    torsion_norm: f64,
}

pub fn aa_classify(common: &Common) -> CliResult<i32> {
    let out = json_only(common, "aa-classify")?;
    let a = parse_aamatrix(&read_input(common.input.as_deref())?)?;
    let cl = classify_soliton(&a)?;
    let cf = closed_forms(&a)?;
    let doc = ClassifyDoc {
        classification: ClassificationJson::new(&a, &cl),
        scalar_curvature: cf.scalar_curvature,
        torsion_norm: cf.tau.norm(),
    };
    write_json(out, &doc)?;
    Ok(0)
}

pub fn verify(common: &Common) -> CliResult<i32> {
    let rows = corpus::run_corpus();
    match common.format {
        Some(Format::Json) => write_json(common.out.as_deref(), &rows)?,
        _ => {
            let text = corpus::table(&rows);
            with_output(common.out.as_deref(), |w| w.write_all(text.as_bytes()))?;
        }
    }
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { 2 })
}

pub fn sweep(common: &Common) -> CliResult<i32> {
    let input: SweepInput = serde_json::from_str(&read_input(common.input.as_deref())?)?;
    let rows = sweep::run(&input.points()?, common.jobs)?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => with_output(common.out.as_deref(), |w| sweep::write_csv(w, &rows))?,
        Format::Json => write_json(common.out.as_deref(), &rows)?,
    }
    Ok(0)
}
