use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sigmak_cli::{cmd_identities, cmd_intersect, cmd_probe, cmd_solve, flush_stdout};

#[derive(Parser)]
#[command(
    name = "sigmak",
    about = "sigma_k-Yamabe laboratory on radially symmetric conformally compact backgrounds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the model-constant table (beta_k^0, both c_{k,n} values,
    /// indicial roots) with disagreement flags.
    Identities {
        /// Largest boundary dimension n to tabulate (2..=12).
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        /// Output directory; SIGMAK_OUTPUT_DIR overrides.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Newton deformation solve described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Probe the linearization at one or more weights gamma.
    Probe {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated weight list, e.g. --gamma -1,2.5,4.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma: Vec<f64>,
    },
    /// Test whether the configured background passes the
    /// Poincare-Einstein intersection check.
    Intersect {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (e.g. `sigmak probe ... | head`)
    // instead of panicking on the next print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    // clap's own error exit code is 2, which this tool reserves for
    // non-convergence; usage problems must exit 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Identities { nmax, out } => cmd_identities(nmax, out),
        Command::Solve { config } => cmd_solve(&config),
        Command::Probe { config, gamma } => cmd_probe(&config, &gamma),
        Command::Intersect { config } => cmd_intersect(&config),
    };
    flush_stdout();
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
