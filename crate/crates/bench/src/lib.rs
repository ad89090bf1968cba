//! Fixtures shared by the benchmarks.

use dsom::som::{affect_all, classes_from_assignment};
use dsom::topology::NeighborhoodTable;
use dsom::{
    gen_uniform, run_dsom, sq_euclidean_matrix, DissimilarityMatrix, Layout, MapGraph,
    NeighborhoodSchedule, Strategy,
};

/// A representation phase input taken from the middle of a training run.
pub struct PhaseInput {
    pub matrix: DissimilarityMatrix,
    pub graph: MapGraph,
    pub h: NeighborhoodTable,
    pub classes: Vec<Vec<usize>>,
}

pub fn uniform_matrix(n: usize, seed: u64) -> DissimilarityMatrix {
    sq_euclidean_matrix(&gen_uniform(n, seed).expect("n > 0")).expect("finite points")
}

/// Trains `iterations` steps of the default schedule on uniform data, then
/// returns the partition and neighborhood of the next step.
pub fn phase_input(n: usize, side: usize, iterations: usize, total: usize) -> PhaseInput {
    let matrix = uniform_matrix(n, 1);
    let graph = MapGraph::grid(side, side, Layout::Hexagonal).expect("non-empty grid");
    let schedule = NeighborhoodSchedule::default_for(&graph, total).expect("valid schedule");
    let out = run_dsom(
        &matrix,
        &graph,
        &schedule,
        Strategy::PartialSums { memoize: true },
        1,
        total,
    )
    .expect("valid run");
    let prototypes = &out.trace[iterations - 1].prototypes;
    let (assignment, _) = affect_all(&matrix, &graph, prototypes);
    let classes = classes_from_assignment(&assignment, graph.len());
    let h = NeighborhoodTable::for_iteration(&graph, &schedule, iterations);
    PhaseInput {
        matrix,
        graph,
        h,
        classes,
    }
}
