use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use bipoint_cli::report::{Format, Report};
use bipoint_cli::source::{effective_seed, SourceArgs};
use bipoint_cli::{alg, bound, gap, suite};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bipoint", version, about = "Bi-point rounding for k-median: algorithms, bounds and gap instances")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Base seed; BIPOINT_SEED overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Golden integrality-gap instances.
    #[command(subcommand)]
    Gap(GapCmd),
    /// Star forest, partition and client classes of an instance.
    Partition {
        #[arg(long)]
        m: usize,
        /// Interior thresholds g_1..g_{m-1} (decimals or p/q).
        #[arg(long, value_delimiter = ',')]
        g: Vec<String>,
        #[command(flatten)]
        src: SourceArgs,
    },
    /// The algorithm family.
    #[command(subcommand)]
    Alg(AlgCmd),
    /// Rounding algorithms.
    #[command(subcommand)]
    Round(RoundCmd),
    /// Upper bounds on the factor-revealing program.
    Bound(BoundCmd),
    /// Monte Carlo suite over random instances.
    Suite {
        #[arg(long, default_value_t = 100)]
        instances: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Also compare against the brute-force optimum of B(k).
        #[arg(long)]
        golden_k: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GapCmd {
    /// Write the explicit instance B(k).
    Build {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validity, unit cost and the vertex table.
    Verify {
        #[arg(long, default_value_t = 10_000)]
        k: usize,
        /// Extra facilities allowed beyond k.
        #[arg(long)]
        surplus: Option<usize>,
    },
    /// Exhaustive optimum of B(k).
    Brute {
        #[arg(long)]
        k: usize,
        /// Facilities to open (default k).
        #[arg(long)]
        kprime: Option<usize>,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u128,
        #[arg(long)]
        no_prune: bool,
        /// Re-run without pruning and compare.
        #[arg(long)]
        cross_check: bool,
    },
}

#[derive(Subcommand)]
enum AlgCmd {
    /// Every member of ALG_m at a point.
    Enumerate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        b: String,
        /// gamma_A1..gamma_Am.
        #[arg(long, value_delimiter = ',')]
        gamma: Vec<String>,
    },
    /// Generate chains, optionally pruned.
    Chains {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        greedy: bool,
        #[arg(long)]
        iterative: bool,
        #[arg(long, default_value_t = 20)]
        per_axis: i128,
    },
    /// Execute a shipped table on instances.
    Run {
        #[arg(long, default_value = "alg3")]
        table: String,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[command(flatten)]
        src: SourceArgs,
    },
}

#[derive(Subcommand)]
enum RoundCmd {
    /// Star rounding.
    Sr {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[command(flatten)]
        src: SourceArgs,
    },
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct BoundCmd {
    #[command(subcommand)]
    sub: Option<BoundSub>,
    /// Preset run; explicit flags override its values.
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    /// Hierarchy level.
    #[arg(long)]
    m: Option<usize>,
    /// Interior thresholds (default: the table's).
    #[arg(long, value_delimiter = ',')]
    g: Vec<f64>,
    /// Chain table (default alg<m>).
    #[arg(long)]
    table: Option<String>,
    /// Value to certify as an upper bound.
    #[arg(long)]
    target: Option<f64>,
    /// Boxes to process before giving up [default: 200000].
    #[arg(long)]
    budget_boxes: Option<usize>,
    /// Worklist snapshot, rewritten periodically.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Continue from the checkpoint.
    #[arg(long, requires = "checkpoint")]
    resume: bool,
    /// Certificate output (NDJSON).
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Profile {
    /// m=2 at 1.35: minutes on a laptop.
    Desk,
    /// m=2 at 1.32: up to a couple of hours.
    Medium,
    /// m=2 at 1.3103: days.
    LongM2,
    /// m=3 at 1.3064: weeks.
    LongM3,
}

impl Profile {
    /// `(m, g, target, budget)`.
    fn values(self) -> (usize, Vec<f64>, f64, usize) {
        match self {
            Profile::Desk => (2, vec![0.6586], 1.35, 200_000),
            Profile::Medium => (2, vec![0.6586], 1.32, 5_000_000),
            Profile::LongM2 => (2, vec![0.6586], 1.3103, 50_000_000),
            Profile::LongM3 => (3, vec![0.642, 0.833], 1.3064, 500_000_000),
        }
    }
}

#[derive(Subcommand)]
enum BoundSub {
    /// Evaluate the program at a fixed point.
    Point {
        #[arg(long, conflicts_with = "file")]
        preset: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Re-check a certificate.
    Audit {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        table: Option<String>,
    },
}

fn dispatch(cli: &Cli) -> Result<Report> {
    let seed = effective_seed(cli.seed)?;
    match &cli.cmd {
        Cmd::Gap(GapCmd::Build { k, out }) => gap::build(*k, out),
        Cmd::Gap(GapCmd::Verify { k, surplus }) => gap::verify(*k, *surplus),
        Cmd::Gap(GapCmd::Brute { k, kprime, budget, no_prune, cross_check }) => gap::brute(*k, *kprime, *budget, !no_prune, *cross_check),
        Cmd::Partition { m, g, src } => alg::partition(*m, g, src, seed),
        Cmd::Alg(AlgCmd::Enumerate { m, b, gamma }) => alg::enumerate(*m, b, gamma),
        Cmd::Alg(AlgCmd::Chains { m, greedy, iterative, per_axis }) => alg::chains(*m, *greedy, *iterative, *per_axis),
        Cmd::Alg(AlgCmd::Run { table, trials, src }) => alg::run(table, *trials, src, seed),
        Cmd::Round(RoundCmd::Sr { eps, trials, src }) => alg::round_sr(*eps, *trials, src, seed),
        Cmd::Bound(b) => match &b.sub {
            Some(BoundSub::Point { preset, file }) => bound::point(preset.as_deref(), file.as_deref()),
            Some(BoundSub::Audit { cert, table }) => bound::audit(cert, table.as_deref()),
            None => {
                let p = b.profile.map(Profile::values);
                let m = b.m.or(p.as_ref().map(|p| p.0));
                let target = b.target.or(p.as_ref().map(|p| p.2));
                let (Some(m), Some(target)) = (m, target) else {
                    return Err(Usage("bound needs --m and --target, a --profile, or a subcommand (point, audit)".into()).into());
                };
                let g = if !b.g.is_empty() {
                    Some(b.g.clone())
                } else {
                    p.as_ref().filter(|p| p.0 == m).map(|p| p.1.clone())
                };
                bound::run(bound::RunArgs {
                    m,
                    g: g.as_deref(),
                    table: b.table.as_deref(),
                    target,
                    budget_boxes: b.budget_boxes.or(p.as_ref().map(|p| p.3)).unwrap_or(200_000),
                    checkpoint: b.checkpoint.clone(),
                    resume: b.resume,
                    cert: b.cert.clone(),
                })
            }
        },
        Cmd::Suite { instances, eps, golden_k } => suite::run(&suite::SuiteArgs { instances: *instances, eps: *eps, golden_k: *golden_k }, seed),
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn is_usage(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<Usage>() || matches!(c.downcast_ref::<bipoint_core::Error>(), Some(bipoint_core::Error::Arg(_) | bipoint_core::Error::Thresholds(_)))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let t = Instant::now();
    match dispatch(&cli) {
        Ok(mut r) => {
            r.elapsed_s = t.elapsed().as_secs_f64();
            if let Err(e) = r.emit(cli.format, std::io::stdout().lock()) {
                eprintln!("error: writing report: {e}");
                return ExitCode::from(1);
            }
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
