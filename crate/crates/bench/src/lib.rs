//! Fixed inputs shared by the benchmarks.

use g2flow::almostabelian::{AAMatrix, Mat3};
use g2flow::io::default_phi;
use g2flow::{G2Structure, IntegratorOptions, LieBracket};

/// The 2-step nilpotent bracket `[e1, e2] = -e5`, `[e1, e3] = -e6`.
pub fn nilpotent_bracket() -> LieBracket {
    LieBracket::from_triples(&[(1, 2, 5, -1.0), (1, 3, 6, -1.0)]).expect("Lie bracket")
}

pub fn standard_structure() -> G2Structure {
    G2Structure::new(&default_phi()).expect("positive 3-form")
}

/// A generic element of sl(3, C), neither normal nor nilpotent.
pub fn generic_matrix() -> AAMatrix {
    let b = Mat3::new(0.3, -0.2, 0.5, 0.1, -0.4, 0.7, -0.6, 0.2, 0.1);
    let c = Mat3::new(0.2, 0.1, -0.3, 0.0, 0.4, -0.5, 0.3, 0.3, -0.6);
    AAMatrix::from_complex(&b, &c)
}

pub fn short_run() -> IntegratorOptions {
    IntegratorOptions { t_end: 0.5, sample_every: Some(0.25), ..Default::default() }
}
