//! JSON wire formats and the versioned trajectory CSV.
//!
//! All indices on the wire are 1-based; matrices are arrays of rows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::almostabelian::{AAClassification, AAMatrix, AATrajectory, Mat3, Mat6};
use crate::error::{Error, Result};
use crate::exterior::{indices, mask_of, Endo, KForm};
use crate::flow::{FlowKind, FlowStatus, FlowTrajectory, IntegratorOptions, SolitonCertificate};
use crate::liealg::{Bracket, LieBracket};

pub const CSV_VERSION_LINE: &str = "# g2flow-csv v1";

/// The form used when an input omits `phi`: `e147 + e267 + e357 + e123 + e156 + e245 - e346`.
pub fn default_phi() -> KForm {
    "e147 + e267 + e357 + e123 + e156 + e245 - e346".parse().expect("static form")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub idx: Vec<usize>,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFormJson {
    pub degree: usize,
    pub terms: Vec<TermJson>,
}

impl From<&KForm> for KFormJson {
    fn from(a: &KForm) -> Self {
        let terms = a
            .terms()
            .filter(|(_, c)| *c != 0.0)
            .map(|(m, c)| TermJson { idx: indices(m).map(|i| i + 1).collect(), c })
            .collect();
        Self { degree: a.degree(), terms }
    }
}

impl TryFrom<&KFormJson> for KForm {
    type Error = Error;

    fn try_from(j: &KFormJson) -> Result<Self> {
        if j.degree > 7 {
            return Err(Error::Parse(format!("degree {} exceeds 7", j.degree)));
        }
        let mut a = KForm::zero(j.degree);
        for t in &j.terms {
            if t.idx.len() != j.degree {
                return Err(Error::DegreeMismatch { expected: j.degree, found: t.idx.len() });
            }
            if t.idx.iter().any(|&i| i == 0 || i > 7) {
                return Err(Error::Parse(format!("index out of range 1..=7 in {:?}", t.idx)));
            }
            if !t.c.is_finite() {
                return Err(Error::Parse(format!("non-finite coefficient at {:?}", t.idx)));
            }
            let idx: Vec<usize> = t.idx.iter().map(|i| i - 1).collect();
            if mask_of(&idx).is_none() {
                return Err(Error::Parse(format!("repeated index in {:?}", t.idx)));
            }
            a.add_term(&idx, t.c)?;
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleJson {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketJson {
    pub c: Vec<TripleJson>,
}

impl From<&Bracket> for BracketJson {
    fn from(mu: &Bracket) -> Self {
        let c = mu
            .triples()
            .into_iter()
            .filter(|t| t.3 != 0.0)
            .map(|(i, j, k, v)| TripleJson { i, j, k, v })
            .collect();
        Self { c }
    }
}

impl TryFrom<&BracketJson> for LieBracket {
    type Error = Error;

    fn try_from(j: &BracketJson) -> Result<Self> {
        if let Some(t) = j.c.iter().find(|t| t.i >= t.j) {
            return Err(Error::Parse(format!("triple ({}, {}, {}) needs i < j", t.i, t.j, t.k)));
        }
        let triples: Vec<(usize, usize, usize, f64)> = j.c.iter().map(|t| (t.i, t.j, t.k, t.v)).collect();
        LieBracket::from_triples(&triples)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixBasis {
    #[default]
    /// `{e1, e3, e5, e2, e4, e6}`, spelled "paper" in JSON.
    #[serde(rename = "paper")]
    Adapted,
    Natural,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AAMatrixJson {
    Real {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(default)]
        basis: MatrixBasis,
    },
    Complex {
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        #[serde(rename = "C", default)]
        c: Option<Vec<Vec<f64>>>,
    },
}

fn rows_to<const N: usize>(rows: &[Vec<f64>], what: &str) -> Result<nalgebra::SMatrix<f64, N, N>> {
    if rows.len() != N || rows.iter().any(|r| r.len() != N) {
        return Err(Error::Parse(format!("{what} must be {N}x{N}")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Parse(format!("{what} has non-finite entries")));
    }
    Ok(nalgebra::SMatrix::from_fn(|r, c| rows[r][c]))
}

pub fn matrix_rows<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> Vec<Vec<f64>> {
    (0..R).map(|r| (0..C).map(|c| m[(r, c)]).collect()).collect()
}

impl From<&AAMatrix> for AAMatrixJson {
    fn from(a: &AAMatrix) -> Self {
        Self::Real { a: matrix_rows(a.adapted()), basis: MatrixBasis::Adapted }
    }
}

impl TryFrom<&AAMatrixJson> for AAMatrix {
    type Error = Error;

    fn try_from(j: &AAMatrixJson) -> Result<Self> {
        Ok(match j {
            AAMatrixJson::Real { a, basis } => {
                let m: Mat6 = rows_to(a, "A")?;
                match basis {
                    MatrixBasis::Adapted => AAMatrix::from_adapted(m),
                    MatrixBasis::Natural => AAMatrix::from_natural(m),
                }
            }
            AAMatrixJson::Complex { b, c } => {
                let b: Mat3 = rows_to(b, "B")?;
                let c: Mat3 = match c {
                    Some(c) => rows_to(c, "C")?,
                    None => Mat3::zeros(),
                };
                AAMatrix::from_complex(&b, &c)
            }
        })
    }
}

/// Input of the generic commands: a bracket and an optional 3-form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketInput {
    pub mu: BracketJson,
    #[serde(default)]
    pub phi: Option<KFormJson>,
}

impl BracketInput {
    pub fn resolve(&self) -> Result<(LieBracket, KForm)> {
        let mu = LieBracket::try_from(&self.mu)?;
        let phi = match &self.phi {
            Some(p) => KForm::try_from(p)?,
            None => default_phi(),
        };
        if phi.degree() != 3 {
            return Err(Error::DegreeMismatch { expected: 3, found: phi.degree() });
        }
        Ok((mu, phi))
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_kform(text: &str) -> Result<KForm> {
    KForm::try_from(&parse::<KFormJson>(text)?)
}

pub fn parse_bracket(text: &str) -> Result<LieBracket> {
    LieBracket::try_from(&parse::<BracketJson>(text)?)
}

pub fn parse_aamatrix(text: &str) -> Result<AAMatrix> {
    AAMatrix::try_from(&parse::<AAMatrixJson>(text)?)
}

pub fn parse_bracket_input(text: &str) -> Result<(LieBracket, KForm)> {
    parse::<BracketInput>(text)?.resolve()
}

/// One trajectory row; `q` is row-major in the natural basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub norm_mu: f64,
    pub scalar_curvature: f64,
    pub torsion_norm: f64,
    pub q: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub norm_a_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub membership_residual: Option<f64>,
}

pub fn flow_records(traj: &FlowTrajectory) -> Vec<TrajectoryRecord> {
    traj.samples
        .iter()
        .map(|s| TrajectoryRecord {
            t: s.t,
            norm_mu: s.norm_mu,
            scalar_curvature: s.scalar_curvature,
            torsion_norm: s.torsion_norm,
            q: matrix_rows(&s.q),
            norm_a_sq: None,
            membership_residual: None,
        })
        .collect()
}

/// Rows for the matrix flow; `|tau| = |theta(A^t) omega|` and `|mu_A| = sqrt(2) |A|`.
pub fn aa_records(traj: &AATrajectory) -> Vec<TrajectoryRecord> {
    traj.samples
        .iter()
        .map(|s| {
            let x = crate::almostabelian::embed(&s.a, 0.0).transpose();
            let tau = crate::exterior::theta(&x, &crate::almostabelian::omega());
            TrajectoryRecord {
                t: s.t,
                norm_mu: (2.0 * s.norm_sq).sqrt(),
                scalar_curvature: s.scalar_curvature,
                torsion_norm: tau.norm(),
                q: matrix_rows(&s.q),
                norm_a_sq: Some(s.norm_sq),
                membership_residual: Some(s.membership_residual),
            }
        })
        .collect()
}

pub fn csv_header() -> String {
    let mut cols = vec!["t".to_string(), "|mu|".into(), "R".into(), "|tau|".into()];
    for r in 1..=7 {
        for c in 1..=7 {
            cols.push(format!("Q_{r}{c}"));
        }
    }
    cols.join(",")
}

/// Writes the versioned CSV; floats use the shortest round-trip representation.
pub fn write_csv<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_VERSION_LINE}")?;
    writeln!(w, "{}", csv_header())?;
    for r in records {
        let mut line = format!("{},{},{},{}", r.t, r.norm_mu, r.scalar_curvature, r.torsion_norm);
        for x in r.q.iter().flatten() {
            line.push(',');
            line.push_str(&x.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub kind: crate::flow::SolitonKind,
    pub c: f64,
    pub d: Vec<Vec<f64>>,
    pub residual: f64,
    pub relative_residual: f64,
    pub label: Option<crate::flow::SolitonLabel>,
    pub next_residual: Option<f64>,
}

impl From<&SolitonCertificate> for CertificateJson {
    fn from(c: &SolitonCertificate) -> Self {
        Self {
            kind: c.kind,
            c: c.c,
            d: matrix_rows(&c.d),
            residual: c.residual,
            relative_residual: c.relative_residual,
            label: c.label,
            next_residual: c.next_residual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationJson {
    pub kind: crate::almostabelian::AAKind,
    pub c: f64,
    pub d: f64,
    /// Adapted basis order.
    pub d1: Option<Vec<Vec<f64>>>,
    pub normal_form: crate::almostabelian::NormalForm,
    pub residual: f64,
    pub flags: crate::almostabelian::AAFlags,
}

impl ClassificationJson {
    pub fn new(a: &AAMatrix, cl: &AAClassification) -> Self {
        Self {
            kind: cl.kind,
            c: cl.c,
            d: cl.d,
            d1: cl.d1.as_ref().map(matrix_rows),
            normal_form: cl.normal_form.clone(),
            residual: cl.residual,
            flags: a.flags(),
        }
    }
}

/// Metadata written next to a CSV, or wrapped around the records in JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub flow: String,
    pub status: FlowStatus,
    pub options: IntegratorOptions,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classification: Option<ClassificationJson>,
}

impl Sidecar {
    pub fn for_flow(traj: &FlowTrajectory, certificate: Option<&SolitonCertificate>) -> Self {
        Self {
            format: CSV_VERSION_LINE.trim_start_matches("# ").into(),
            flow: match traj.kind {
                FlowKind::Bracket => "bracket".into(),
                FlowKind::Laplacian => "laplacian".into(),
            },
            status: traj.status,
            options: traj.options.clone(),
            samples: traj.samples.len(),
            certificate: certificate.map(CertificateJson::from),
            classification: None,
        }
    }

    pub fn for_aa(traj: &AATrajectory, classification: Option<ClassificationJson>) -> Self {
        Self {
            format: CSV_VERSION_LINE.trim_start_matches("# ").into(),
            flow: "almost-abelian".into(),
            status: traj.status,
            options: traj.options.clone(),
            samples: traj.samples.len(),
            certificate: None,
            classification,
        }
    }
}

/// Endo as row-major nested arrays.
pub fn endo_rows(e: &Endo) -> Vec<Vec<f64>> {
    matrix_rows(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kform_roundtrip() {
        let a: KForm = "2e135 - e247".parse().unwrap();
        let j = serde_json::to_string(&KFormJson::from(&a)).unwrap();
        assert_eq!(parse_kform(&j).unwrap(), a);
        let swapped = r#"{"degree":2,"terms":[{"idx":[2,1],"c":1.5}]}"#;
        assert_eq!(parse_kform(swapped).unwrap().get(&[0, 1]), -1.5);
        assert!(parse_kform(r#"{"degree":2,"terms":[{"idx":[1,8],"c":1}]}"#).is_err());
        assert!(parse_kform(r#"{"degree":2,"terms":[{"idx":[3,3],"c":1}]}"#).is_err());
    }

    #[test]
    fn bracket_roundtrip_and_validation() {
        let text = r#"{"c":[{"i":1,"j":2,"k":5,"v":-1.0},{"i":1,"j":3,"k":6,"v":-1.0}]}"#;
        let mu = parse_bracket(text).unwrap();
        let back = serde_json::to_string(&BracketJson::from(&*mu)).unwrap();
        assert_eq!(parse_bracket(&back).unwrap(), mu);
        assert!(parse_bracket(r#"{"c":[{"i":2,"j":1,"k":5,"v":1.0}]}"#).is_err());
        // [e1,e2] = e3, [e1,e3] = e1 violates Jacobi on (e1, e2, e3).
        let bad = r#"{"c":[{"i":1,"j":2,"k":3,"v":1},{"i":1,"j":3,"k":1,"v":1}]}"#;
        assert!(matches!(parse_bracket(bad), Err(Error::Jacobi(_))));
    }

    #[test]
    fn aamatrix_formats_agree() {
        let s = r#"{"B":[[0,1,0],[0,0,1.5],[0,0,0]]}"#;
        let a = parse_aamatrix(s).unwrap();
        let full = serde_json::to_string(&AAMatrixJson::from(&a)).unwrap();
        assert_eq!(parse_aamatrix(&full).unwrap(), a);
        let nat = AAMatrixJson::Real { a: matrix_rows(&a.natural()), basis: MatrixBasis::Natural };
        assert_eq!(AAMatrix::try_from(&nat).unwrap(), a);
        assert!(parse_aamatrix(r#"{"A":[[1,2],[3,4]]}"#).is_err());
    }

    #[test]
    fn csv_layout() {
        let rec = TrajectoryRecord {
            t: 0.5,
            norm_mu: 1.0,
            scalar_curvature: -0.25,
            torsion_norm: 2.0,
            q: matrix_rows(&Endo::identity()),
            norm_a_sq: None,
            membership_residual: None,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_VERSION_LINE);
        assert!(lines[1].starts_with("t,|mu|,R,|tau|,Q_11,Q_12"));
        assert!(lines[1].ends_with("Q_77"));
        assert_eq!(lines[2].split(',').count(), 53);
        assert!(lines[2].starts_with("0.5,1,-0.25,2,1,0,"));
    }
}
