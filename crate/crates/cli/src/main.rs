mod cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bipk", version, about = "Component models: check, simulate, verify, generate")]
struct Cli {
    /// Verdict and summary format on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    /// Uniform choice among maximal interactions, seeded.
    Seeded,
    /// Always the first maximal interaction in canonical order.
    First,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Check { file: PathBuf },
    /// Execute a model.
    Run {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check deadlock freedom, or a state property with --property.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        verify: VerifyArgs,
    },
    /// Generate a model from a module/constraint spec file.
    Gen {
        spec: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Build a reference scenario and run or verify it.
    Demo {
        variant: String,
        #[command(subcommand)]
        action: DemoAction,
    },
}

#[derive(Subcommand)]
enum DemoAction {
    /// Simulate the scenario
    Run(RunArgs),
    /// Verify the scenario's default property
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
pub struct RunArgs {
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, env = "BIPK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// JSON Lines trace output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Policy::Seeded)]
    pub policy: Policy,
    /// Pause between steps, for watching a run.
    #[arg(long, default_value_t = 0)]
    pub tick_sleep_ms: u64,
}

#[derive(Args, Clone)]
pub struct VerifyArgs {
    /// Maximum number of explored states.
    #[arg(long, default_value_t = bipk::verifier::DEFAULT_BOUND)]
    pub bound: usize,
    /// Bad-state predicate over qualified names, e.g. `a.x > 3` or `a@s`.
    #[arg(long)]
    pub property: Option<String>,
    /// Directory receiving one JSON Lines trace per witness.
    #[arg(long)]
    pub witness_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Check { file } => cmd::check(&file, cli.format),
        Command::Run { file, run } => cmd::load(&file).and_then(|m| cmd::run(&m, &run, cli.format)),
        Command::Verify { file, verify } => {
            cmd::load(&file).and_then(|m| cmd::verify(&m, &verify, None, 8, cli.format))
        }
        Command::Gen { spec, output } => cmd::gen(&spec, output.as_deref()),
        Command::Demo { variant, action } => cmd::demo(&variant, action, cli.format),
    };
    ExitCode::from(status.unwrap_or_else(|e| e.report()) as u8)
}
