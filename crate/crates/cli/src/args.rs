use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use g2flow::flow::{Method, Normalization};
use g2flow::IntegratorOptions;

#[derive(Parser, Debug)]
#[command(name = "g2flow", version, about = "Laplacian and bracket flows of left-invariant closed G2-structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Integrate the bracket or Laplacian flow of a bracket and 3-form.
    Flow {
        #[arg(long, value_enum, default_value_t = FlowChoice::Bracket)]
        kind: FlowChoice,
    },
    /// Integrate the matrix bracket flow of an almost-abelian structure.
    AaFlow,
    /// Certify a bracket and 3-form as an algebraic or semi-algebraic soliton.
    Soliton,
    /// Classify an almost-abelian matrix as a soliton.
    AaClassify,
    /// Run the built-in example corpus and print a pass/fail table.
    Verify,
    /// Classify a grid of almost-abelian matrices in parallel.
    Sweep,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowChoice {
    Bracket,
    Laplacian,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Rk4,
    Rk45,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Input file, `-` for stdin, or an inline JSON document.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub atol: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Rk45)]
    pub method: MethodArg,
    /// Initial step, and the fixed step of rk4.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub step: f64,
    /// Time between output rows; 0 records every step.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub sample_every: f64,
    /// Keep |mu| constant along the flow.
    #[arg(long, global = true)]
    pub normalize: bool,
    /// Worker threads for sweep; 0 uses all available cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

impl Common {
    pub fn integrator_options(&self) -> IntegratorOptions {
        let base = IntegratorOptions::default();
        IntegratorOptions {
            method: match self.method {
                MethodArg::Rk4 => Method::Rk4,
                MethodArg::Rk45 => Method::Rk45,
            },
            h0: self.step,
            hmin: base.hmin.min(self.step),
            hmax: base.hmax.max(self.step),
            atol: self.atol,
            rtol: self.rtol,
            t_end: self.t_end,
            normalize: if self.normalize { Normalization::UnitBracketNorm } else { Normalization::None },
            sample_every: (self.sample_every > 0.0).then_some(self.sample_every),
            ..base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["g2flow", "aa-flow", "--method", "rk4", "--t-end", "2", "--normalize"]).unwrap();
        assert_eq!(cli.command, Command::AaFlow);
        let o = cli.common.integrator_options();
        assert_eq!(o.method, Method::Rk4);
        assert_eq!(o.t_end, 2.0);
        assert_eq!(o.normalize, Normalization::UnitBracketNorm);
        assert!(o.validate().is_ok());
    }

    #[test]
    fn zero_stride_records_every_step() {
        let cli = Cli::try_parse_from(["g2flow", "flow", "--kind", "laplacian", "--sample-every", "0"]).unwrap();
        assert_eq!(cli.command, Command::Flow { kind: FlowChoice::Laplacian });
        assert_eq!(cli.common.integrator_options().sample_every, None);
    }

    #[test]
    fn large_steps_widen_hmax() {
        let cli = Cli::try_parse_from(["g2flow", "aa-flow", "--step", "5"]).unwrap();
        assert!(cli.common.integrator_options().validate().is_ok());
    }
}
