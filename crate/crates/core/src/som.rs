//! The batch DSOM loop: affectation, representation, energy, repeated for a
//! fixed number of iterations.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dissim::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::representation::{RepresentationPhase, RepresentationStats, Representer, Strategy};
use crate::topology::{MapGraph, NeighborhoodSchedule, NeighborhoodTable};

/// Iteration count used by the experiment protocol.
pub const DEFAULT_ITERATIONS: usize = 100;

/// Prototypes, assignment and classes after one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapState {
    /// One data index per node.
    pub prototypes: Vec<usize>,
    /// One node per individual.
    pub assignment: Vec<usize>,
    /// Members of each node's class, ascending.
    pub classes: Vec<Vec<usize>>,
    pub iteration: usize,
}

impl MapState {
    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }
}

/// Groups individuals by node. Members come out in ascending order.
pub fn classes_from_assignment(assignment: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); m];
    for (i, &j) in assignment.iter().enumerate() {
        classes[j].push(i);
    }
    classes
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AffectationStats {
    /// Individuals whose nearest prototype was not unique.
    pub collisions_encountered: u64,
    /// Neighbor nodes summed into the winning node's score, over all
    /// individuals (zero for individuals without a collision).
    pub neighbors_considered: u64,
    /// `neighbors_considered` divided by the number of individuals.
    pub mean_neighbors_considered: f64,
}

/// Draws `m` distinct data indices uniformly at random.
pub fn init_prototypes(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m > n {
        return Err(Error::invalid(format!(
            "cannot pick {m} distinct prototypes among {n} individuals"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, m).into_vec())
}

/// Assigns every individual to the node with the closest prototype.
///
/// When several nodes tie, the candidates are compared on the sum of
/// dissimilarities to the prototypes within graph radius `r`, for
/// `r = 1, 2, ...` until one candidate is left or `r` passes the diameter.
/// Remaining ties go to the smallest node index.
pub fn affect_all(
    matrix: &DissimilarityMatrix,
    graph: &MapGraph,
    prototypes: &[usize],
) -> (Vec<usize>, AffectationStats) {
    let n = matrix.len();
    let m = graph.len();
    assert_eq!(prototypes.len(), m, "one prototype per node expected");

    let mut stats = AffectationStats::default();
    let mut assignment = Vec::with_capacity(n);
    let mut dist = vec![0.0; m];
    let mut tied = Vec::with_capacity(m);
    for i in 0..n {
        let row = matrix.row(i);
        let mut best = f64::INFINITY;
        tied.clear();
        for (j, &p) in prototypes.iter().enumerate() {
            let d = row[p];
            dist[j] = d;
            if d < best {
                best = d;
                tied.clear();
                tied.push(j);
            } else if d == best {
                tied.push(j);
            }
        }
        if tied.len() == 1 {
            assignment.push(tied[0]);
            continue;
        }
        stats.collisions_encountered += 1;
        let (winner, radius) = resolve_collision(graph, &dist, &mut tied);
        // The winner's ball at the final radius, minus the winner itself.
        let ball = graph
            .delta_row(winner)
            .iter()
            .filter(|&&d| d <= radius)
            .count();
        stats.neighbors_considered += (ball - 1) as u64;
        assignment.push(winner);
    }
    stats.mean_neighbors_considered = stats.neighbors_considered as f64 / n as f64;
    (assignment, stats)
}

/// Narrows `tied` by neighborhood sums of growing radius; returns the winner
/// and the last radius examined.
fn resolve_collision(graph: &MapGraph, dist: &[f64], tied: &mut Vec<usize>) -> (usize, u32) {
    let mut radius = 0;
    let mut sums = vec![0.0; tied.len()];
    while tied.len() > 1 && radius < graph.diameter() {
        radius += 1;
        for (sum, &j) in sums.iter_mut().zip(tied.iter()) {
            *sum = 0.0;
            for (v, &d) in graph.delta_row(j).iter().enumerate() {
                if d <= radius {
                    *sum += dist[v];
                }
            }
        }
        let best = sums.iter().copied().fold(f64::INFINITY, f64::min);
        let mut keep = 0;
        for idx in 0..tied.len() {
            if sums[idx] == best {
                tied[keep] = tied[idx];
                sums[keep] = sums[idx];
                keep += 1;
            }
        }
        tied.truncate(keep);
        sums.truncate(keep);
    }
    // tied is ascending, so the first survivor is the smallest index
    (tied[0], radius)
}

/// `Σ_i Σ_j h(c(i), j) d(x_i, m_j)`, outer sum over ascending `i`, inner over ascending `j`.
pub fn energy(
    matrix: &DissimilarityMatrix,
    h: &NeighborhoodTable,
    assignment: &[usize],
    prototypes: &[usize],
) -> f64 {
    let mut total = 0.0;
    for (i, &c) in assignment.iter().enumerate() {
        let row = matrix.row(i);
        let weights = h.row(c);
        let mut inner = 0.0;
        for (w, &p) in weights.iter().zip(prototypes) {
            inner += w * row[p];
        }
        total += inner;
    }
    total
}

/// Everything recorded about one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub temperature: f64,
    pub energy: f64,
    pub prototypes: Vec<usize>,
    pub assignment: Vec<usize>,
    pub class_sizes: Vec<usize>,
    pub affectation: AffectationStats,
    pub representation: RepresentationStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub initial_prototypes: Vec<usize>,
    pub final_state: MapState,
    pub trace: Vec<IterationRecord>,
}

/// Runs `iterations` DSOM iterations from random prototypes drawn with `seed`.
pub fn run_dsom(
    matrix: &DissimilarityMatrix,
    graph: &MapGraph,
    schedule: &NeighborhoodSchedule,
    strategy: Strategy,
    seed: u64,
    iterations: usize,
) -> Result<RunOutput> {
    let initial = init_prototypes(matrix.len(), graph.len(), seed)?;
    let mut phase = Representer::new(strategy, matrix.len(), graph.len());
    run_dsom_with(matrix, graph, schedule, initial, iterations, &mut phase)
}

/// Runs the loop from explicit initial prototypes with any representation phase.
///
/// Iteration `l` assigns individuals using the prototypes produced by
/// iteration `l - 1` (or `initial`), then computes new prototypes under the
/// neighborhood at temperature `T^l`.
pub fn run_dsom_with(
    matrix: &DissimilarityMatrix,
    graph: &MapGraph,
    schedule: &NeighborhoodSchedule,
    initial: Vec<usize>,
    iterations: usize,
    phase: &mut dyn RepresentationPhase,
) -> Result<RunOutput> {
    let (n, m) = (matrix.len(), graph.len());
    if iterations == 0 {
        return Err(Error::invalid("at least one iteration is required"));
    }
    if iterations != schedule.iterations() {
        return Err(Error::invalid(format!(
            "schedule covers {} iterations, run asks for {iterations}",
            schedule.iterations()
        )));
    }
    if initial.len() != m || initial.iter().any(|&p| p >= n) {
        return Err(Error::invalid(format!(
            "initial prototypes must be {m} indices below {n}"
        )));
    }

    let mut prototypes = initial.clone();
    let mut trace = Vec::with_capacity(iterations);
    let mut classes = Vec::new();
    let mut assignment = Vec::new();
    for l in 0..iterations {
        let affected = affect_all(matrix, graph, &prototypes);
        assignment = affected.0;
        classes = classes_from_assignment(&assignment, m);
        let h = NeighborhoodTable::for_iteration(graph, schedule, l);
        let (next, representation) = phase.represent(matrix, graph, &h, &classes);
        prototypes = next;
        trace.push(IterationRecord {
            iteration: l,
            temperature: h.temperature(),
            energy: energy(matrix, &h, &assignment, &prototypes),
            prototypes: prototypes.clone(),
            assignment: assignment.clone(),
            class_sizes: classes.iter().map(Vec::len).collect(),
            affectation: affected.1,
            representation,
        });
    }
    Ok(RunOutput {
        initial_prototypes: initial,
        final_state: MapState {
            prototypes,
            assignment,
            classes,
            iteration: iterations - 1,
        },
        trace,
    })
}

/// First place two traces disagree on prototypes or assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceDivergence {
    Length {
        expected: usize,
        found: usize,
    },
    Prototype {
        iteration: usize,
        node: usize,
        expected: usize,
        found: usize,
    },
    Assignment {
        iteration: usize,
        individual: usize,
        expected: usize,
        found: usize,
    },
}

impl std::fmt::Display for TraceDivergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceDivergence::Length { expected, found } => {
                write!(f, "trace length {found}, expected {expected}")
            }
            TraceDivergence::Prototype { iteration, node, expected, found } => write!(
                f,
                "iteration {iteration}: node {node} has prototype {found}, expected {expected}"
            ),
            TraceDivergence::Assignment { iteration, individual, expected, found } => write!(
                f,
                "iteration {iteration}: individual {individual} assigned to node {found}, expected {expected}"
            ),
        }
    }
}

/// Compares prototypes and assignments iteration by iteration. Assignments
/// are checked before prototypes since they come first within an iteration.
pub fn compare_traces(
    expected: &[IterationRecord],
    found: &[IterationRecord],
) -> Option<TraceDivergence> {
    for (a, b) in expected.iter().zip(found) {
        let l = a.iteration;
        if let Some(i) = (0..a.assignment.len()).find(|&i| a.assignment[i] != b.assignment[i]) {
            return Some(TraceDivergence::Assignment {
                iteration: l,
                individual: i,
                expected: a.assignment[i],
                found: b.assignment[i],
            });
        }
        if let Some(j) = (0..a.prototypes.len()).find(|&j| a.prototypes[j] != b.prototypes[j]) {
            return Some(TraceDivergence::Prototype {
                iteration: l,
                node: j,
                expected: a.prototypes[j],
                found: b.prototypes[j],
            });
        }
    }
    (expected.len() != found.len()).then_some(TraceDivergence::Length {
        expected: expected.len(),
        found: found.len(),
    })
}

/// Writes one CSV record per iteration.
///
/// Columns: `iteration, temperature, energy, prototypes, class_sizes,
/// collisions, mean_neighbors, score_evaluations, home_searches,
/// exhaustive_searches, pruned_classes, bound_terms_summed,
/// d_columns_recomputed, lambda_entries_recomputed, matrix_reads`.
/// Array columns are space-separated.
pub fn write_trace<W: Write>(trace: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "temperature",
        "energy",
        "prototypes",
        "class_sizes",
        "collisions",
        "mean_neighbors",
        "score_evaluations",
        "home_searches",
        "exhaustive_searches",
        "pruned_classes",
        "bound_terms_summed",
        "d_columns_recomputed",
        "lambda_entries_recomputed",
        "matrix_reads",
    ])?;
    let join = |xs: &[usize]| {
        xs.iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    for r in trace {
        let s = &r.representation;
        w.write_record([
            r.iteration.to_string(),
            r.temperature.to_string(),
            r.energy.to_string(),
            join(&r.prototypes),
            join(&r.class_sizes),
            r.affectation.collisions_encountered.to_string(),
            r.affectation.mean_neighbors_considered.to_string(),
            s.score_evaluations.to_string(),
            s.home_searches.to_string(),
            s.exhaustive_searches.to_string(),
            s.pruned_classes.to_string(),
            s.bound_terms_summed.to_string(),
            s.d_columns_recomputed.to_string(),
            s.lambda_entries_recomputed.to_string(),
            s.matrix_reads.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-iteration counter records of one strategy.
///
/// Columns: `strategy, iteration, score_evaluations, pruned_classes,
/// bound_terms_summed, d_columns_recomputed, lambda_entries_recomputed`.
pub fn write_stats<W: Write>(
    strategy: Strategy,
    trace: &[IterationRecord],
    out: W,
    header: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record([
            "strategy",
            "iteration",
            "score_evaluations",
            "pruned_classes",
            "bound_terms_summed",
            "d_columns_recomputed",
            "lambda_entries_recomputed",
        ])?;
    }
    for r in trace {
        let s = &r.representation;
        w.write_record([
            strategy.to_string(),
            r.iteration.to_string(),
            s.score_evaluations.to_string(),
            s.pruned_classes.to_string(),
            s.bound_terms_summed.to_string(),
            s.d_columns_recomputed.to_string(),
            s.lambda_entries_recomputed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
