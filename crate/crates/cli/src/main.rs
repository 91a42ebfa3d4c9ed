mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exact verification of truncated vertex operator algebras, their
/// modules and intertwining operators.
#[derive(Parser, Debug)]
#[command(name = "voa", version, args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Re-run the single check named by a report instance string, e.g.
    /// `v=1;w=1;u=0;p=0;q=1;n=-1`.
    #[arg(long, value_name = "DESCRIPTOR")]
    pub replay: Option<String>,

    #[command(flatten)]
    pub source: Source,

    #[command(flatten)]
    pub out: Output,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a model and write its structure constants.
    Build {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        out: Output,
    },
    /// Check the vacuum, derivative, Virasoro and Borcherds axioms.
    Check {
        #[command(flatten)]
        source: Source,
        /// Module description to check instead of the adjoint module.
        #[arg(long)]
        module: Option<PathBuf>,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        out: Output,
    },
    /// Dimensions of V / C_m(V) over several cutoffs.
    C2dim {
        #[arg(long)]
        model: String,
        #[arg(long = "central-charge")]
        central_charge: Option<String>,
        #[arg(long)]
        p: Option<i64>,
        #[arg(long)]
        q: Option<i64>,
        #[arg(long, default_value_t = 2)]
        m: i64,
        #[arg(long, value_delimiter = ',', required = true)]
        cutoffs: Vec<i64>,
        /// Fail unless the quotient has this dimension at every cutoff.
        #[arg(long)]
        expect: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// The truncated Zhu algebra A_n and the zero-mode action on modules.
    Zhu {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        n: i64,
        /// Lowest weights of Virasoro modules (default: the Kac table of a
        /// minimal model).
        #[arg(long = "top-weights", value_delimiter = ',')]
        top_weights: Vec<String>,
        /// Fock momenta for the Heisenberg model.
        #[arg(long, value_delimiter = ',')]
        momenta: Vec<String>,
        #[arg(long = "module-level", default_value_t = 2)]
        module_level: i64,
        #[command(flatten)]
        out: Output,
    },
    /// Axioms, log-component round trip and the semisimple log-degree test.
    Intertwiner {
        #[arg(long, conflicts_with = "example")]
        input: Option<PathBuf>,
        #[arg(long)]
        example: Option<IntertwinerExample>,
        #[arg(long, default_value_t = 3)]
        budget: i64,
        #[arg(long, default_value_t = 5)]
        nilpotency_bound: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Verify the module built from donor data.
    Ext {
        #[arg(long, conflicts_with = "example")]
        input: Option<PathBuf>,
        #[arg(long)]
        example: Option<ExtExample>,
        #[arg(long, default_value_t = 4)]
        budget: i64,
        #[arg(long = "locality-bound", default_value_t = 6)]
        locality_bound: usize,
        /// Also run this many seeded single-mode mutations of the donor.
        #[arg(long, default_value_t = 0)]
        mutations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Radical, projective indecomposables, covers and composition factors.
    Algebra {
        #[arg(long, conflicts_with = "example")]
        input: Option<PathBuf>,
        #[arg(long)]
        example: Option<AlgebraExample>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Commutativity of squares and exactness of chains.
    Diagram {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct Model {
    /// heisenberg, ising, virasoro or minimal.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub cutoff: Option<i64>,
    #[arg(long = "central-charge")]
    pub central_charge: Option<String>,
    #[arg(long)]
    pub p: Option<i64>,
    #[arg(long)]
    pub q: Option<i64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Source {
    #[command(flatten)]
    pub model: Model,
    /// Algebra file with structure constants.
    #[arg(long, conflicts_with = "model")]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Budget {
    /// Every Borcherds instance of total weight up to this is checked.
    #[arg(long, default_value_t = 6)]
    pub budget: i64,
    /// Sampled instances above the budget.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum IntertwinerExample {
    /// Log-degree one operator into the Jordan-block Fock module.
    Jordan,
    /// Vertex operator of a Fock module.
    Fock,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ExtExample {
    Toy,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum AlgebraExample {
    Dual,
    Cubic,
    Product,
    Upper,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(commands::run(cli))
}
