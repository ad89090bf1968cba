use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use dsom::representation::RepresentationPhase;
use dsom::{NeighborhoodSchedule, Representer, Strategy};
use dsom_bench::{phase_input, uniform_matrix};

// One representation phase from a cold cache, early and late in training.
fn phase(c: &mut Criterion) {
    for (label, at) in [("early", 10), ("late", 80)] {
        let input = phase_input(500, 7, at, 100);
        let (n, m) = (input.matrix.len(), input.graph.len());
        let mut group = c.benchmark_group(format!("phase/{label}"));
        group.sample_size(20);
        for s in Strategy::all().into_iter().filter(|s| !s.memoize()) {
            group.bench_function(BenchmarkId::from_parameter(s), |b| {
                b.iter_batched(
                    || Representer::new(s, n, m),
                    |mut r| {
                        black_box(r.represent(
                            &input.matrix,
                            &input.graph,
                            &input.h,
                            &input.classes,
                        ))
                    },
                    BatchSize::SmallInput,
                )
            });
        }
        group.finish();
    }
}

fn full_run(c: &mut Criterion) {
    let matrix = uniform_matrix(400, 2);
    let graph = dsom::MapGraph::grid(6, 6, dsom::Layout::Hexagonal).unwrap();
    let schedule = NeighborhoodSchedule::default_for(&graph, 30).unwrap();
    let mut group = c.benchmark_group("run/n400-m36-l30");
    group.sample_size(10);
    for s in Strategy::all()
        .into_iter()
        .filter(|s| *s != Strategy::Naive)
    {
        group.bench_function(BenchmarkId::from_parameter(s), |b| {
            b.iter(|| black_box(dsom::run_dsom(&matrix, &graph, &schedule, s, 3, 30).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, phase, full_run);
criterion_main!(benches);
