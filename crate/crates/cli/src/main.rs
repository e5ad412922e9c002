use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod dot;
mod failure;

use failure::Failure;

const DEFAULT_SEED: &str = "7";

#[derive(Parser)]
#[command(name = "qcat", version, about = "Qudit circuit diagrams: evaluate, rewrite, certify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a diagram and print its nonzero amplitudes.
    Eval {
        file: PathBuf,
        /// Also write the amplitudes as JSON to this file.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Rewrite a diagram to normal form under the given rules.
    Rewrite {
        file: PathBuf,
        /// Comma-separated rule names, tried in this order.
        #[arg(long, value_delimiter = ',', required = true)]
        rules: Vec<String>,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        /// Certify every step by evaluation.
        #[arg(long)]
        verify: bool,
        /// Where to write the rewritten document (default stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check every builtin rule on random host diagrams.
    VerifyRules {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, env = "QCAT_SEED", default_value = DEFAULT_SEED)]
        seed: u64,
        /// Restrict to these rules.
        #[arg(long, value_delimiter = ',')]
        rules: Vec<String>,
        /// Directory for reproducer documents of failing hosts.
        #[arg(long, default_value = "qcat-reproducers")]
        reproducers: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
    /// Run and certify a protocol.
    Protocol {
        name: ProtocolName,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, env = "QCAT_SEED", default_value = DEFAULT_SEED)]
        seed: u64,
        /// Superdense message.
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// Random density operators for channel checks.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// GHZ width.
        #[arg(long, default_value_t = 4)]
        wires: usize,
        #[arg(long)]
        json: bool,
    },
    /// Export a diagram for visualization.
    Export {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProtocolName {
    Ghz,
    Superdense,
    Teleport,
    GateTeleport,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Dot,
}

fn run(cli: Cli, argv: Vec<String>) -> Result<bool, Failure> {
    match cli.command {
        Command::Eval { file, output, json } => commands::eval(&file, output.as_deref(), json),
        Command::Rewrite {
            file,
            rules,
            max_steps,
            verify,
            output,
            report,
        } => commands::rewrite(&commands::RewriteArgs {
            argv,
            file,
            rules,
            max_steps,
            verify,
            output,
            report,
        }),
        Command::VerifyRules {
            dims,
            trials,
            seed,
            rules,
            reproducers,
            json,
            corrupt,
        } => commands::verify_rules(&commands::VerifyArgs {
            argv,
            dims,
            trials,
            seed,
            rules,
            reproducers,
            json,
            corrupt,
        }),
        Command::Protocol {
            name,
            dim,
            seed,
            p,
            q,
            trials,
            wires,
            json,
        } => commands::protocol(&commands::ProtocolArgs {
            argv,
            name,
            dim,
            seed,
            p,
            q,
            trials,
            wires,
            json,
        }),
        Command::Export { file, format } => match format {
            Format::Dot => commands::export_dot(&file),
        },
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(cli, argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(failure::SOUNDNESS),
        Err(f) => {
            eprintln!("qcat: {f}");
            ExitCode::from(f.code())
        }
    }
}
