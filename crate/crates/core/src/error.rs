use thiserror::Error;

/// Errors produced by the exterior-algebra, G2 and flow routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interior product of a degree-0 form")]
    DegreeUnderflow,
    #[error("wedge of degrees {0} and {1} exceeds 7")]
    DegreeOverflow(usize, usize),
    #[error("expected a form of degree {expected}, got {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("metric is not positive definite: {0}")]
    BadMetric(String),
    #[error("3-form is not positive: {0}")]
    Positivity(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("form has a Lambda^3_7 component of norm {0:e}")]
    Component(f64),
    #[error("dphi/dpsi do not come from a common G2-structure (residual {0:e})")]
    InconsistentTorsion(f64),
    #[error("Jacobi identity violated (residual {0:e})")]
    Jacobi(f64),
    #[error("adaptive step fell below hmin at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("structure is not closed: {0}")]
    NotClosed(String),
    #[error("matrix is not trace-free (trace {0:e})")]
    NotTraceFree(f64),
    #[error("invalid integrator options: {0}")]
    InvalidOptions(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
