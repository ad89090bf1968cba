use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dsom::dissim::{bundled_words, parse_points, parse_words, points_to_text};
use dsom::experiment::{parse_report, render_report, times_table, DEFAULT_TIMED_RUNS};
use dsom::som::{write_stats, write_trace, DEFAULT_ITERATIONS};
use dsom::topology::DEFAULT_FINAL_TEMPERATURE;
use dsom::{
    gen_uniform, levenshtein_matrix, parse_strategy_list, run_experiment, sq_euclidean_matrix,
    verify_equivalence, DatasetSpec, ExperimentConfig, Layout, Strategy,
};

/// Dissimilarity self-organizing maps with exact accelerated representation.
#[derive(Parser)]
#[command(name = "dsom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw points uniformly from the unit square.
    GenUniform {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a dissimilarity matrix file.
    Matrix(MatrixArgs),
    /// Train maps with the given strategies and write a timing report.
    Run(RunArgs),
    /// Check that strategies produce identical traces.
    Verify(MapArgs),
    /// Lay out the median times of report files by map size and data size.
    Table {
        /// Strategy to tabulate.
        #[arg(long, default_value = "partial-sums")]
        strategy: Strategy,
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MatrixSource {
    /// Squared Euclidean distances between the points of a file (`x y` per line).
    #[arg(long, value_name = "FILE")]
    from_points: Option<PathBuf>,
    /// Normalized Levenshtein distances between the words of a file.
    #[arg(long, value_name = "FILE")]
    from_words: Option<PathBuf>,
    /// Normalized Levenshtein distances between the bundled English words.
    #[arg(long)]
    bundled_words: bool,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    source: MatrixSource,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MapArgs {
    /// Dissimilarity matrix file.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// `hex` or `rect`.
    #[arg(long, default_value_t = Layout::Hexagonal)]
    layout: Layout,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iters: usize,
    /// Initial temperature [default: half the map diameter].
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_FINAL_TEMPERATURE)]
    tf: f64,
    /// Seed for the initial prototypes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated strategy ids, or `all`.
    #[arg(long, default_value = "all")]
    strategies: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TIMED_RUNS)]
    timed_runs: usize,
    /// Skip the untimed first run.
    #[arg(long)]
    no_warmup: bool,
    /// Directory receiving one `<strategy>.trace.csv` per strategy.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Per-iteration counters of every strategy, in one file.
    #[arg(long)]
    stats: Option<PathBuf>,
}

impl MapArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::new(
            DatasetSpec::MatrixFile(self.matrix.clone()),
            self.rows,
            self.cols,
        );
        config.layout = self.layout;
        config.iterations = self.iters;
        config.t0 = self.t0;
        config.tf = self.tf;
        config.seed = self.seed;
        config.strategies = parse_strategy_list(&self.strategies)?;
        Ok(config)
    }
}

fn matrix(args: MatrixArgs) -> Result<()> {
    let src = &args.source;
    let matrix = if let Some(path) = &src.from_points {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        sq_euclidean_matrix(&parse_points(&text)?)?
    } else if let Some(path) = &src.from_words {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        levenshtein_matrix(&parse_words(&text))?
    } else {
        levenshtein_matrix(&bundled_words())?
    };
    matrix.save(&args.out)?;
    eprintln!(
        "wrote {}x{} matrix to {}",
        matrix.len(),
        matrix.len(),
        args.out.display()
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = args.map.config()?;
    config.timed_runs = args.timed_runs;
    config.warmup = !args.no_warmup;
    config.output = args.report.clone();
    let report = run_experiment(&config)?;

    if let Some(dir) = &args.trace_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for s in &report.strategies {
            let path = dir.join(format!("{}.trace.csv", s.strategy));
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trace(&s.trace, BufWriter::new(file))?;
        }
    }
    if let Some(path) = &args.stats {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        for (idx, s) in report.strategies.iter().enumerate() {
            write_stats(s.strategy, &s.trace, &mut out, idx == 0)?;
        }
    }

    match &args.report {
        None => print!("{}", render_report(&report)?),
        Some(path) => {
            for s in &report.strategies {
                let speedup = s.speedup.map_or("-".into(), |x| format!("{x:.2}"));
                println!(
                    "{:<18} median {:.3}s  speedup {speedup:>6}  evaluations/iter {:.0}",
                    s.strategy.to_string(),
                    s.median_seconds,
                    s.mean.score_evaluations
                );
            }
            eprintln!("wrote report to {}", path.display());
        }
    }
    Ok(())
}

fn verify(args: MapArgs) -> Result<bool> {
    let verdict = verify_equivalence(&args.config()?)?;
    println!("{verdict}");
    Ok(verdict.identical())
}

fn table(strategy: Strategy, reports: &[PathBuf]) -> Result<()> {
    let mut rows = Vec::new();
    for path in reports {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        rows.extend(parse_report(&text).with_context(|| format!("parsing {}", path.display()))?);
    }
    if !rows.iter().any(|r| r.strategy == strategy) {
        bail!("no rows for strategy {strategy}");
    }
    print!("{}", times_table(&rows, strategy));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenUniform { n, seed, out } => {
            gen_uniform(n, seed).map_err(Into::into).and_then(|points| {
                fs::write(&out, points_to_text(&points))
                    .with_context(|| format!("writing {}", out.display()))
            })
        }
        Command::Matrix(args) => matrix(args),
        Command::Run(args) => run(args),
        Command::Verify(args) => match verify(args) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Command::Table { strategy, reports } => table(strategy, &reports),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
