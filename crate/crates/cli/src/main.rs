use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use polybell_cli::commands::{self, DiscoverArgs, DiscoverSource};
use polybell_cli::report::{Format, RunReport};
use polybell_cli::statespec::{parse_angles, parse_family, parse_state, parse_support};
use polybell_cli::CliError;

#[derive(Parser)]
#[command(
    name = "polybell",
    version,
    about = "Permutationally invariant Bell inequalities on symmetric states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Replace every nonzero row tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for randomized checks
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,

    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    FourParty,
    TwoBody,
    SixQubit,
}

#[derive(Subcommand)]
enum Command {
    /// CHSH values of the AB and AC pairs around the monogamy circle
    ChshCircle {
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// Also sample this many random states and settings
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Mermin values on the optimal symmetric states
    MerminScan {
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
    /// Check bounds and quantum values of a built-in inequality
    Verify {
        case: Case,
        /// Party count (two-body only); omit to sweep up to --max-n
        n: Option<usize>,
        #[arg(long, default_value_t = 200)]
        max_n: usize,
    },
    /// Find the PI inequality with the best quantum-to-local ratio
    Discover {
        /// dicke:N:e or a weighted sum like 0.99*dicke:4:1+0.14*dicke:4:4
        #[arg(long, conflicts_with = "family")]
        state: Option<String>,
        /// pair:N:e1:e2, searched over the mixing angle (needs --optimize)
        #[arg(long)]
        family: Option<String>,
        /// Parties in the inequality; the state may hold more
        #[arg(long)]
        parties: usize,
        /// phi1,phi2 in radians
        #[arg(long, conflicts_with = "optimize")]
        angles: Option<String>,
        /// Also search angles (and the family angle) instead of fixing them
        #[arg(long)]
        optimize: bool,
        #[arg(long, default_value_t = 0.1)]
        grid: f64,
        /// all, max-order:K, or a list like 11,22,1111
        #[arg(long, default_value = "all")]
        support: String,
        /// Where to write the inequality JSON
        #[arg(long)]
        inequality: Option<PathBuf>,
    },
}

fn run(cli: &Cli) -> Result<RunReport, CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut report = match &cli.command {
        Command::ChshCircle { steps, samples } => {
            commands::chsh_circle(*steps, *samples, cli.seed)?
        }
        Command::MerminScan { n_min, n_max } => commands::mermin_scan(*n_min, *n_max)?,
        Command::Verify { case, n, max_n } => match case {
            Case::FourParty => commands::verify_four_party()?,
            Case::TwoBody => commands::verify_two_body(*n, *max_n)?,
            Case::SixQubit => commands::verify_six_qubit()?,
        },
        Command::Discover {
            state,
            family,
            parties,
            angles,
            optimize,
            grid,
            support,
            inequality,
        } => {
            let source = match (state, family) {
                (Some(s), None) => DiscoverSource::State(parse_state(s).map_err(CliError::Usage)?),
                (None, Some(f)) => {
                    DiscoverSource::Family(parse_family(f).map_err(CliError::Usage)?)
                }
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of --state or --family".into(),
                    ))
                }
            };
            let angles = match (angles, optimize) {
                (Some(a), false) => Some(parse_angles(a).map_err(CliError::Usage)?),
                (None, true) => None,
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of --angles or --optimize".into(),
                    ))
                }
            };
            let args = DiscoverArgs {
                source,
                parties: *parties,
                angles,
                grid_step: *grid,
                support: parse_support(support, *parties).map_err(CliError::Usage)?,
            };
            let (report, result) = commands::discover(&args)?;
            if let Some(path) = inequality {
                let mut text =
                    serde_json::to_string_pretty(&result.to_json()).expect("serializable");
                text.push('\n');
                std::fs::write(path, text)?;
            }
            report
        }
    };
    if let Some(t) = cli.tol {
        report.override_tolerance(t);
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("polybell: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = report.render(cli.format);
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("polybell: i/o: {e}");
        return ExitCode::from(1);
    }
    let inputs: String = report
        .inputs
        .iter()
        .map(|(k, v)| format!(" {k}={v}"))
        .collect();
    eprintln!(
        "{}{}: {} in {:.2}s",
        report.command,
        inputs,
        if report.passed() { "pass" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
