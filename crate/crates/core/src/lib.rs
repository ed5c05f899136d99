pub mod almostabelian;
pub mod error;
pub mod exterior;
pub mod flow;
pub mod g2core;
pub mod io;
pub mod liealg;
pub mod linalg;

pub use error::{Error, Result};
pub use exterior::{Endo, KForm, Metric, Vec7};
pub use flow::{FlowTrajectory, IntegratorOptions, SolitonCertificate};
pub use g2core::{G2Structure, TorsionForms};
pub use liealg::{Bracket, LieBracket};
