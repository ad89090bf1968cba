//! Experiment protocol: datasets, timed runs, cross-strategy verification and
//! report tables.
//!
//! Each strategy runs once untimed, then a fixed number of timed runs whose
//! median process CPU time is reported. Every run must reproduce the first
//! one exactly, and speedups are only computed against the partial-sums
//! reference once its trace has been shown identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dissim::{
    bundled_words, levenshtein_matrix, parse_points, parse_words, sq_euclidean_matrix,
    DissimilarityMatrix,
};
use crate::error::{Error, Result};
use crate::representation::{RepresentationPhase, RepresentationStats, Representer, Strategy};
use crate::som::{
    compare_traces, init_prototypes, run_dsom_with, IterationRecord, TraceDivergence,
    DEFAULT_ITERATIONS,
};
use crate::topology::{
    default_initial_temperature, Layout, MapGraph, NeighborhoodSchedule, DEFAULT_FINAL_TEMPERATURE,
};

/// Timed runs per strategy.
pub const DEFAULT_TIMED_RUNS: usize = 5;

/// The strategy speedups are measured against.
pub const REFERENCE: Strategy = Strategy::PartialSums { memoize: false };

/// `n` points drawn uniformly from the unit square.
pub fn gen_uniform(n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::invalid("at least one point is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// Squared Euclidean distances between uniform points.
    Uniform {
        n: usize,
        seed: u64,
    },
    MatrixFile(PathBuf),
    /// Squared Euclidean distances between the points of a point-list file.
    PointFile(PathBuf),
    /// Normalized Levenshtein distances between the words of a word-list file.
    WordFile(PathBuf),
    /// Normalized Levenshtein distances on the bundled word list.
    BundledWords,
}

impl DatasetSpec {
    pub fn label(&self) -> String {
        match self {
            DatasetSpec::Uniform { n, seed } => format!("uniform-n{n}-s{seed}"),
            DatasetSpec::MatrixFile(p) => format!("matrix:{}", p.display()),
            DatasetSpec::PointFile(p) => format!("points:{}", p.display()),
            DatasetSpec::WordFile(p) => format!("words:{}", p.display()),
            DatasetSpec::BundledWords => "bundled-words".into(),
        }
    }

    pub fn load(&self) -> Result<DissimilarityMatrix> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::file(p, e));
        match self {
            DatasetSpec::Uniform { n, seed } => sq_euclidean_matrix(&gen_uniform(*n, *seed)?),
            DatasetSpec::MatrixFile(p) => DissimilarityMatrix::load(p),
            DatasetSpec::PointFile(p) => sq_euclidean_matrix(&parse_points(&read(p)?)?),
            DatasetSpec::WordFile(p) => levenshtein_matrix(&parse_words(&read(p)?)),
            DatasetSpec::BundledWords => levenshtein_matrix(&bundled_words()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub rows: usize,
    pub cols: usize,
    pub layout: Layout,
    /// Initial temperature; [`default_initial_temperature`] when unset.
    pub t0: Option<f64>,
    pub tf: f64,
    pub iterations: usize,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    pub timed_runs: usize,
    pub warmup: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A hexagonal map with the default schedule, 100 iterations, and the
    /// reference strategy.
    pub fn new(dataset: DatasetSpec, rows: usize, cols: usize) -> Self {
        ExperimentConfig {
            dataset,
            rows,
            cols,
            layout: Layout::Hexagonal,
            t0: None,
            tf: DEFAULT_FINAL_TEMPERATURE,
            iterations: DEFAULT_ITERATIONS,
            strategies: vec![REFERENCE],
            seed: 0,
            timed_runs: DEFAULT_TIMED_RUNS,
            warmup: true,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::invalid("at least one strategy is required"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        if self.timed_runs == 0 {
            return Err(Error::invalid("at least one timed run is required"));
        }
        Ok(())
    }

    pub fn graph(&self) -> Result<MapGraph> {
        MapGraph::grid(self.rows, self.cols, self.layout)
    }

    pub fn schedule(&self, graph: &MapGraph) -> Result<NeighborhoodSchedule> {
        match self.t0 {
            Some(t0) => NeighborhoodSchedule::new(t0, self.tf, self.iterations),
            None => NeighborhoodSchedule::new(
                default_initial_temperature(graph, self.tf),
                self.tf,
                self.iterations,
            ),
        }
    }
}

/// CPU time consumed by this process so far.
pub fn process_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime(CLOCK_PROCESS_CPUTIME_ID) failed");
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Per-iteration means of the representation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanCounters {
    pub score_evaluations: f64,
    pub home_searches: f64,
    pub exhaustive_searches: f64,
    pub pruned_classes: f64,
    pub bound_terms_summed: f64,
    pub d_columns_recomputed: f64,
    pub lambda_entries_recomputed: f64,
    pub matrix_reads: f64,
}

impl MeanCounters {
    pub fn over(trace: &[IterationRecord]) -> Self {
        let mut total = RepresentationStats::default();
        for r in trace {
            total += r.representation;
        }
        let l = trace.len().max(1) as f64;
        MeanCounters {
            score_evaluations: total.score_evaluations as f64 / l,
            home_searches: total.home_searches as f64 / l,
            exhaustive_searches: total.exhaustive_searches as f64 / l,
            pruned_classes: total.pruned_classes as f64 / l,
            bound_terms_summed: total.bound_terms_summed as f64 / l,
            d_columns_recomputed: total.d_columns_recomputed as f64 / l,
            lambda_entries_recomputed: total.lambda_entries_recomputed as f64 / l,
            matrix_reads: total.matrix_reads as f64 / l,
        }
    }

    fn values(&self) -> [f64; 8] {
        [
            self.score_evaluations,
            self.home_searches,
            self.exhaustive_searches,
            self.pruned_classes,
            self.bound_terms_summed,
            self.d_columns_recomputed,
            self.lambda_entries_recomputed,
            self.matrix_reads,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct StrategyReport {
    pub strategy: Strategy,
    /// CPU seconds of each timed run, in execution order.
    pub run_seconds: Vec<f64>,
    pub median_seconds: f64,
    /// Reference time over this strategy's time; absent without a reference.
    pub speedup: Option<f64>,
    pub final_energy: f64,
    pub mean: MeanCounters,
    pub mean_neighbors_considered: f64,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dataset: String,
    pub n: usize,
    pub m: usize,
    pub rows: usize,
    pub cols: usize,
    pub layout: Layout,
    pub t0: f64,
    pub tf: f64,
    pub iterations: usize,
    pub seed: u64,
    pub timed_runs: usize,
    pub workers: usize,
    pub strategies: Vec<StrategyReport>,
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Traces and CPU times of repeated runs of one representation phase.
#[derive(Debug, Clone)]
pub struct TimedRuns {
    pub trace: Vec<IterationRecord>,
    pub run_seconds: Vec<f64>,
}

/// Runs the map from `initial` with a fresh phase from `make_phase`, once
/// untimed when `warmup` is set, then `runs` times under the CPU clock.
/// Fails with [`Error::Nondeterministic`] unless every trace is identical.
#[allow(clippy::too_many_arguments)]
pub fn time_phase(
    matrix: &DissimilarityMatrix,
    graph: &MapGraph,
    schedule: &NeighborhoodSchedule,
    initial: &[usize],
    label: &str,
    warmup: bool,
    runs: usize,
    make_phase: &mut dyn FnMut() -> Box<dyn RepresentationPhase>,
) -> Result<TimedRuns> {
    let mut once = || -> Result<(Vec<IterationRecord>, f64)> {
        let mut phase = make_phase();
        let start = process_cpu_time();
        let out = run_dsom_with(
            matrix,
            graph,
            schedule,
            initial.to_vec(),
            schedule.iterations(),
            &mut *phase,
        )?;
        let elapsed = process_cpu_time().saturating_sub(start);
        Ok((out.trace, elapsed.as_secs_f64()))
    };
    let mut first = if warmup { Some(once()?.0) } else { None };
    let mut run_seconds = Vec::with_capacity(runs);
    for _ in 0..runs {
        let (trace, seconds) = once()?;
        run_seconds.push(seconds);
        match &first {
            None => first = Some(trace),
            Some(expected) if *expected != trace => {
                let detail = compare_traces(expected, &trace)
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "energies or counters differ between runs".into());
                return Err(Error::Nondeterministic {
                    strategy: label.to_string(),
                    detail,
                });
            }
            Some(_) => {}
        }
    }
    match first {
        Some(trace) => Ok(TimedRuns { trace, run_seconds }),
        None => Err(Error::invalid("nothing was run")),
    }
}

/// Loads the dataset and runs [`run_experiment_on`]; writes the report when
/// `config.output` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let matrix = config.dataset.load()?;
    let report = run_experiment_on(&config.dataset.label(), &matrix, config)?;
    if let Some(path) = &config.output {
        write_report(&report, path)?;
    }
    Ok(report)
}

pub fn run_experiment_on(
    label: &str,
    matrix: &DissimilarityMatrix,
    config: &ExperimentConfig,
) -> Result<RunReport> {
    config.validate()?;
    let graph = config.graph()?;
    let schedule = config.schedule(&graph)?;
    let initial = init_prototypes(matrix.len(), graph.len(), config.seed)?;

    let mut strategies = Vec::with_capacity(config.strategies.len());
    for &strategy in &config.strategies {
        let (n, m) = (matrix.len(), graph.len());
        let TimedRuns { trace, run_seconds } = time_phase(
            matrix,
            &graph,
            &schedule,
            &initial,
            &strategy.to_string(),
            config.warmup,
            config.timed_runs,
            &mut || Box::new(Representer::new(strategy, n, m)),
        )?;
        strategies.push(StrategyReport {
            strategy,
            median_seconds: median(&run_seconds),
            run_seconds,
            speedup: None,
            final_energy: trace.last().map_or(0.0, |r| r.energy),
            mean: MeanCounters::over(&trace),
            mean_neighbors_considered: trace
                .iter()
                .map(|r| r.affectation.mean_neighbors_considered)
                .sum::<f64>()
                / trace.len() as f64,
            trace,
        });
    }

    if let Some(idx) = strategies.iter().position(|s| s.strategy == REFERENCE) {
        let reference_trace = strategies[idx].trace.clone();
        let reference_time = strategies[idx].median_seconds;
        for s in &mut strategies {
            if let Some(d) = compare_traces(&reference_trace, &s.trace) {
                return Err(Error::Divergence {
                    reference: REFERENCE.to_string(),
                    strategy: s.strategy.to_string(),
                    detail: d.to_string(),
                });
            }
            if s.median_seconds > 0.0 {
                s.speedup = Some(reference_time / s.median_seconds);
            }
        }
    }

    Ok(RunReport {
        dataset: label.to_string(),
        n: matrix.len(),
        m: graph.len(),
        rows: config.rows,
        cols: config.cols,
        layout: config.layout,
        t0: schedule.t0(),
        tf: schedule.tf(),
        iterations: config.iterations,
        seed: config.seed,
        timed_runs: config.timed_runs,
        workers: 1,
        strategies,
    })
}

/// Outcome of running several strategies from the same start.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub labels: Vec<String>,
    pub iterations: usize,
    /// `(reference label, diverging label, first difference)`.
    pub divergence: Option<(String, String, TraceDivergence)>,
}

impl Verdict {
    pub fn identical(&self) -> bool {
        self.divergence.is_none()
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.divergence {
            None => write!(
                f,
                "identical: {} over {} iterations",
                self.labels.join(", "),
                self.iterations
            ),
            Some((reference, other, d)) => write!(f, "{other} diverges from {reference}: {d}"),
        }
    }
}

/// Runs each phase from the prototypes drawn with `seed` and compares every
/// trace against the first.
pub fn verify_phases(
    matrix: &DissimilarityMatrix,
    graph: &MapGraph,
    schedule: &NeighborhoodSchedule,
    seed: u64,
    phases: Vec<(String, Box<dyn RepresentationPhase>)>,
) -> Result<Verdict> {
    let initial = init_prototypes(matrix.len(), graph.len(), seed)?;
    verify_phases_from(matrix, graph, schedule, &initial, phases)
}

/// As [`verify_phases`], from explicit initial prototypes.
pub fn verify_phases_from(
    matrix: &DissimilarityMatrix,
    graph: &MapGraph,
    schedule: &NeighborhoodSchedule,
    initial: &[usize],
    phases: Vec<(String, Box<dyn RepresentationPhase>)>,
) -> Result<Verdict> {
    if phases.len() < 2 {
        return Err(Error::invalid("verification needs at least two strategies"));
    }
    let iterations = schedule.iterations();
    let mut labels = Vec::with_capacity(phases.len());
    let mut reference: Option<Vec<IterationRecord>> = None;
    for (label, mut phase) in phases {
        let out = run_dsom_with(
            matrix,
            graph,
            schedule,
            initial.to_vec(),
            iterations,
            &mut *phase,
        )?;
        labels.push(label.clone());
        match &reference {
            None => reference = Some(out.trace),
            Some(expected) => {
                if let Some(d) = compare_traces(expected, &out.trace) {
                    return Ok(Verdict {
                        divergence: Some((labels[0].clone(), label, d)),
                        labels,
                        iterations,
                    });
                }
            }
        }
    }
    Ok(Verdict {
        labels,
        iterations,
        divergence: None,
    })
}

pub fn verify_strategies(
    matrix: &DissimilarityMatrix,
    graph: &MapGraph,
    schedule: &NeighborhoodSchedule,
    seed: u64,
    strategies: &[Strategy],
) -> Result<Verdict> {
    let phases = strategies
        .iter()
        .map(|&s| {
            let phase: Box<dyn RepresentationPhase> =
                Box::new(Representer::new(s, matrix.len(), graph.len()));
            (s.to_string(), phase)
        })
        .collect();
    verify_phases(matrix, graph, schedule, seed, phases)
}

/// Loads the configured dataset and verifies all configured strategies.
pub fn verify_equivalence(config: &ExperimentConfig) -> Result<Verdict> {
    config.validate()?;
    let matrix = config.dataset.load()?;
    let graph = config.graph()?;
    let schedule = config.schedule(&graph)?;
    verify_strategies(&matrix, &graph, &schedule, config.seed, &config.strategies)
}

/// Column order of the report table.
pub const REPORT_COLUMNS: [&str; 16] = [
    "dataset",
    "n",
    "m",
    "strategy",
    "median_cpu_seconds",
    "speedup",
    "score_evaluations",
    "home_searches",
    "exhaustive_searches",
    "pruned_classes",
    "bound_terms_summed",
    "d_columns_recomputed",
    "lambda_entries_recomputed",
    "matrix_reads",
    "mean_neighbors_considered",
    "final_energy",
];

/// One line of a report table. Counters are per-iteration means.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub n: usize,
    pub m: usize,
    pub strategy: Strategy,
    pub median_cpu_seconds: f64,
    pub speedup: Option<f64>,
    pub counters: MeanCounters,
    pub mean_neighbors_considered: f64,
    pub final_energy: f64,
}

impl RunReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.strategies
            .iter()
            .map(|s| ReportRow {
                dataset: self.dataset.clone(),
                n: self.n,
                m: self.m,
                strategy: s.strategy,
                median_cpu_seconds: s.median_seconds,
                speedup: s.speedup,
                counters: s.mean,
                mean_neighbors_considered: s.mean_neighbors_considered,
                final_energy: s.final_energy,
            })
            .collect()
    }

    pub fn strategy(&self, strategy: Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

/// Renders the report: `#`-prefixed run parameters, then a CSV table with
/// [`REPORT_COLUMNS`].
pub fn render_report(report: &RunReport) -> Result<String> {
    let mut out = String::new();
    writeln!(
        out,
        "# dataset={} n={} m={} rows={} cols={} layout={}",
        report.dataset, report.n, report.m, report.rows, report.cols, report.layout
    )
    .unwrap();
    writeln!(
        out,
        "# t0={} tf={} iterations={} seed={} timed_runs={} warmup_runs=1 workers={} clock=process-cpu",
        report.t0, report.tf, report.iterations, report.seed, report.timed_runs, report.workers
    )
    .unwrap();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS)?;
    for row in report.rows() {
        let mut record = vec![
            row.dataset.clone(),
            row.n.to_string(),
            row.m.to_string(),
            row.strategy.to_string(),
            row.median_cpu_seconds.to_string(),
            row.speedup.map(|s| s.to_string()).unwrap_or_default(),
        ];
        record.extend(row.counters.values().iter().map(f64::to_string));
        record.push(row.mean_neighbors_considered.to_string());
        record.push(row.final_energy.to_string());
        w.write_record(&record)?;
    }
    let table = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(table).expect("csv output is utf-8"));
    Ok(out)
}

pub fn write_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_report(report)?).map_err(|e| Error::file(path, e))
}

/// Parses a table written by [`render_report`].
pub fn parse_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(REPORT_COLUMNS) {
        return Err(Error::invalid("report columns do not match"));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx + 2;
        let num = |col: usize| -> Result<f64> {
            record[col].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {} value {:?}", REPORT_COLUMNS[col], &record[col]),
            })
        };
        let int = |col: usize| -> Result<usize> {
            record[col].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {} value {:?}", REPORT_COLUMNS[col], &record[col]),
            })
        };
        rows.push(ReportRow {
            dataset: record[0].to_string(),
            n: int(1)?,
            m: int(2)?,
            strategy: record[3].parse()?,
            median_cpu_seconds: num(4)?,
            speedup: if record[5].is_empty() {
                None
            } else {
                Some(num(5)?)
            },
            counters: MeanCounters {
                score_evaluations: num(6)?,
                home_searches: num(7)?,
                exhaustive_searches: num(8)?,
                pruned_classes: num(9)?,
                bound_terms_summed: num(10)?,
                d_columns_recomputed: num(11)?,
                lambda_entries_recomputed: num(12)?,
                matrix_reads: num(13)?,
            },
            mean_neighbors_considered: num(14)?,
            final_energy: num(15)?,
        });
    }
    Ok(rows)
}

/// Lays out one strategy's median times as a grid: one line per map size
/// `m`, one column per dataset size `n`. Missing cells are left blank.
pub fn times_table(rows: &[ReportRow], strategy: Strategy) -> String {
    let selected: Vec<&ReportRow> = rows.iter().filter(|r| r.strategy == strategy).collect();
    let mut ns: Vec<usize> = selected.iter().map(|r| r.n).collect();
    let mut ms: Vec<usize> = selected.iter().map(|r| r.m).collect();
    ns.sort_unstable();
    ns.dedup();
    ms.sort_unstable();
    ms.dedup();
    let mut out = format!("{strategy} (CPU seconds)\nM \\ N");
    for n in &ns {
        write!(out, "\t{n}").unwrap();
    }
    out.push('\n');
    for m in &ms {
        write!(out, "{m}").unwrap();
        for n in &ns {
            out.push('\t');
            if let Some(r) = selected.iter().find(|r| r.n == *n && r.m == *m) {
                write!(out, "{:.3}", r.median_cpu_seconds).unwrap();
            }
        }
        out.push('\n');
    }
    out
}
