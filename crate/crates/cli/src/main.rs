//! `pairent`: pairwise entanglement measures from the command line.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 numeric failure,
//! 4 a checked claim was violated.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pairent::convexroof::{DEFAULT_RESTARTS, DEFAULT_TOLERANCE};
use pairent::Error;

use commands::{LoccArgs, MeasureArgs, ProbeChoice, RandcheckArgs, RoofArgs, StateSource, Suite};
use report::{Format, Verdict};

const DEFAULT_SEED: u64 = 0;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "pairent",
    version,
    about = "Pairwise entanglement measures for multipartite states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Seed for every random choice; echoed in the output.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct StateArg {
    /// Library name (ghz:5, w:3, psi4, chi4, cluster4, epr, mems:x,
    /// puremems:x, zero:n, basis:n:k) or a ket like "sqrt(2)/2|00> + sqrt(2)/2|11>".
    #[arg(long)]
    state: Option<String>,

    /// JSON state file with {n, d, amplitudes} or {n, d, matrix}.
    #[arg(long)]
    state_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pair profile, M, M^T and classification of a state.
    Measure {
        #[command(flatten)]
        state: StateArg,
        /// Local dimension for ket input (default: inferred from the digits).
        #[arg(long)]
        local_dim: Option<usize>,
        #[arg(long, value_enum, default_value_t = ProbeChoice::Both)]
        probe: ProbeChoice,
        /// Pair values at or below this count as zero when classifying.
        #[arg(long, default_value_t = pairent::probes::ZERO_TOL)]
        tolerance: f64,
        /// Convex-roof restarts for mixed states.
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
    },
    /// Probe values on every pair; --direct evaluates mixed pair states as they are.
    Profile {
        #[command(flatten)]
        state: StateArg,
        #[arg(long)]
        local_dim: Option<usize>,
        #[arg(long, value_enum, default_value_t = ProbeChoice::Both)]
        probe: ProbeChoice,
        /// Evaluate probes directly on mixed states instead of refusing.
        #[arg(long)]
        direct: bool,
        #[arg(long, default_value_t = pairent::probes::ZERO_TOL)]
        tolerance: f64,
    },
    /// Reference table for psi4, chi4 and cluster4 with pass/fail.
    Table {
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// MEMS family sweep against GHZ.
    SweepMems {
        /// Grid a:b:steps over x in [0, 1].
        #[arg(long, default_value = "0:1:11")]
        grid: String,
    },
    /// Random local-instrument campaign checking that M never increases on average.
    Locc {
        /// Register sizes, cycled over trials.
        #[arg(long = "n", value_delimiter = ',', default_values_t = [2usize, 3, 4, 5])]
        site_counts: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Measurement rounds per trial.
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        #[arg(long, value_enum, default_value_t = ProbeChoice::Both)]
        probe: ProbeChoice,
    },
    /// Convex-roof search over ensemble decompositions (values are upper bounds).
    Roof {
        #[command(flatten)]
        state: StateArg,
        #[arg(long)]
        local_dim: Option<usize>,
        #[arg(long, value_enum, default_value_t = ProbeChoice::Qc)]
        probe: ProbeChoice,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Largest ensemble size (default: rank + 2).
        #[arg(long)]
        member_cap: Option<usize>,
        /// Stop a local search when a sweep gains less than this.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Random-state suites with pass counts and worst margins.
    Randcheck {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Register size (default 4; fixed at 2 for qc-ge-c; total is 4 or 5 for additivity).
        #[arg(long = "n")]
        num_sites: Option<usize>,
        #[arg(long, default_value_t = 2)]
        local_dim: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// A trial fails when its margin is below minus this.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

fn source(state: StateArg, local_dim: Option<usize>) -> StateSource {
    match (state.state, state.state_file) {
        (Some(text), _) => StateSource::Spec { text, local_dim },
        (None, Some(path)) => StateSource::File(path),
        (None, None) => unreachable!("clap requires one state argument"),
    }
}

fn run(cli: Cli) -> (pairent::Result<report::Report>, Option<String>) {
    let seed = cli.seed;
    match cli.command {
        Command::Measure {
            state,
            local_dim,
            probe,
            tolerance,
            restarts,
        } => {
            let args = MeasureArgs {
                source: source(state, local_dim),
                probe,
                tolerance,
                restarts,
                seed,
            };
            let ket = args.source.ket_text().map(str::to_owned);
            (commands::measure(&args), ket)
        }
        Command::Profile {
            state,
            local_dim,
            probe,
            direct,
            tolerance,
        } => {
            let args = MeasureArgs {
                source: source(state, local_dim),
                probe,
                tolerance,
                restarts: DEFAULT_RESTARTS,
                seed,
            };
            let ket = args.source.ket_text().map(str::to_owned);
            (commands::profile(&args, direct), ket)
        }
        Command::Table { tolerance } => (commands::table(seed, tolerance), None),
        Command::SweepMems { grid } => (commands::sweep_mems(seed, &grid), None),
        Command::Locc {
            site_counts,
            trials,
            rounds,
            probe,
        } => (
            commands::locc(&LoccArgs {
                site_counts,
                trials,
                rounds,
                probe,
                seed,
            }),
            None,
        ),
        Command::Roof {
            state,
            local_dim,
            probe,
            restarts,
            member_cap,
            tolerance,
        } => {
            let args = RoofArgs {
                source: source(state, local_dim),
                probe,
                restarts,
                member_cap,
                tolerance,
                seed,
            };
            let ket = args.source.ket_text().map(str::to_owned);
            (commands::roof(&args), ket)
        }
        Command::Randcheck {
            suite,
            num_sites,
            local_dim,
            trials,
            tolerance,
        } => (
            commands::randcheck(&RandcheckArgs {
                suite,
                num_sites,
                local_dim,
                trials,
                tolerance,
                seed,
            }),
            None,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    let format = cli.format;
    match run(cli) {
        (Ok(report), _) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(report.render(format).as_bytes());
            match report.verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Violation => ExitCode::from(EXIT_VIOLATION),
            }
        }
        (Err(e), ket) => {
            eprintln!("error: {e}");
            if let (Error::Parse { position, .. }, Some(text)) = (&e, ket) {
                eprintln!("  {text}");
                eprintln!("  {}^", " ".repeat(*position));
            }
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_USAGE })
        }
    }
}
