mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l1o_core::regularizers::{OrthoNorm, RegularizerSpec};

#[derive(Parser)]
#[command(
    name = "l1o",
    version,
    about = "Train MLPs with L1-orthogonal regularization and extract decision trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the noisy 2D parabola dataset as CSV.
    GenToy {
        #[arg(long, default_value_t = l1o_core::data::PARABOLA_POINTS)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one network and save it with its data manifest.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        reg: RegArgs,
    },
    /// Extract a decision tree from a saved network, or from a freshly trained one.
    Extract {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        reg: RegArgs,
        /// Saved `model.json`; when absent a network is trained first.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run a regularization grid and write one CSV row per cell.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        /// Replace the grid's norms with this single norm.
        #[arg(long)]
        ortho_norm: Option<OrthoNorm>,
    },
    /// Repeat train-and-extract over seeded resplits and report fidelity.
    Fidelity {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        reg: RegArgs,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Train with several initialization seeds and report tree consistency.
    Consistency {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        reg: RegArgs,
        #[arg(long, default_value_t = 10)]
        sessions: usize,
    },
    /// Fit trees on the true labels for every depth limit.
    BaselineDt {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Render a saved tree as Graphviz DOT or if-then rules.
    Export {
        /// Saved `tree.json`.
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Rules)]
        format: ExportFormat,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Rules,
}

/// Dataset, experiment settings and output location.
#[derive(Args, Clone)]
struct DataArgs {
    /// TOML experiment or sweep configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in dataset name or a CSV path.
    #[arg(long, required_unless_present = "config")]
    dataset: Option<String>,
    /// Label column of a CSV dataset.
    #[arg(long)]
    label: Option<String>,
    /// Categorical columns of a CSV dataset, one-hot encoded.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Preset whose network and tree settings a CSV dataset borrows.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Seed for the split, the network initialization and the parabola generator.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    no_prune: bool,
}

#[derive(Args, Clone)]
struct RegArgs {
    #[arg(long, default_value_t = 0.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda_orth: f64,
    #[arg(long, default_value = "l1_norm")]
    ortho_norm: OrthoNorm,
}

impl RegArgs {
    fn spec(&self) -> RegularizerSpec {
        RegularizerSpec::with_norm(self.lambda1, self.lambda_orth, self.ortho_norm)
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenToy { n, seed, out } => commands::gen_toy(n, seed, &out),
        Command::Train { data, reg } => commands::train(&data, &reg.spec()),
        Command::Extract { data, reg, model } => commands::extract(&data, &reg.spec(), model.as_deref()),
        Command::Sweep { data, ortho_norm } => commands::sweep(&data, ortho_norm),
        Command::Fidelity { data, reg, runs } => commands::fidelity(&data, &reg.spec(), runs),
        Command::Consistency { data, reg, sessions } => commands::consistency(&data, &reg.spec(), sessions),
        Command::BaselineDt { data } => commands::baseline_dt(&data),
        Command::Export { tree, format, out } => commands::export(&tree, format, out.as_deref()),
    }
}
