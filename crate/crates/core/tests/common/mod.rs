#![allow(dead_code)]

use dsom::dissim::DissimilarityMatrix;
use dsom::representation::{
    bound, score, BoundKind, Incumbent, PartialSumCache, RepresentationPhase, RepresentationStats,
};
use dsom::topology::NeighborhoodTable;
use dsom::{Layout, MapGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub matrix: DissimilarityMatrix,
    pub graph: MapGraph,
    pub temperature: f64,
    pub h: NeighborhoodTable,
    pub classes: Vec<Vec<usize>>,
}

/// Symmetric matrix with small integer entries; ties are common.
pub fn integer_matrix(n: usize, levels: u32, rng: &mut impl Rng) -> DissimilarityMatrix {
    let upper: Vec<f64> = (0..n * n)
        .map(|_| rng.gen_range(1..=levels) as f64)
        .collect();
    DissimilarityMatrix::from_fn(n, |i, j| upper[i.max(j) * n + i.min(j)]).unwrap()
}

pub fn point_matrix(n: usize, rng: &mut impl Rng) -> DissimilarityMatrix {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    dsom::sq_euclidean_matrix(&points).unwrap()
}

/// `N <= 50`, a 2x2 or 3x3 map, a random partition (empty classes allowed)
/// and a random temperature.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = if rng.gen_bool(0.5) { 2 } else { 3 };
    let layout = if rng.gen_bool(0.5) {
        Layout::Hexagonal
    } else {
        Layout::Rectangular
    };
    let graph = MapGraph::grid(side, side, layout).unwrap();
    let m = graph.len();
    let n = rng.gen_range(2..=50);
    let matrix = if rng.gen_bool(0.3) {
        integer_matrix(n, 3, &mut rng)
    } else {
        point_matrix(n, &mut rng)
    };
    let temperature = rng.gen_range(0.2..4.0);
    let mut classes = vec![Vec::new(); m];
    for i in 0..n {
        classes[rng.gen_range(0..m)].push(i);
    }
    Instance {
        h: NeighborhoodTable::new(&graph, temperature),
        matrix,
        graph,
        temperature,
        classes,
    }
}

impl Instance {
    pub fn cache(&self) -> PartialSumCache {
        let mut cache = PartialSumCache::new(self.matrix.len(), self.graph.len(), true);
        cache.update(&self.matrix, &self.classes, false);
        cache
    }

    /// Neighborhood weight rebuilt from the graph distance.
    pub fn weight(&self, u: usize, j: usize) -> f64 {
        let x = self.graph.delta(u, j) as f64 / self.temperature;
        (-(x * x)).exp()
    }

    pub fn class_sum(&self, members: &[usize], k: usize) -> f64 {
        members
            .iter()
            .fold(0.0, |acc, &i| acc + self.matrix.get(i, k))
    }

    /// Score grouped by class: `Σ_u h(u, j) Σ_{i in C_u} d(i, k)`, read
    /// straight from the matrix.
    pub fn grouped_score(&self, j: usize, k: usize) -> f64 {
        self.classes
            .iter()
            .enumerate()
            .fold(0.0, |acc, (u, members)| {
                acc + self.weight(u, j) * self.class_sum(members, k)
            })
    }

    /// Score as a flat sum over individuals, `Σ_i h(c(i), j) d(i, k)`.
    pub fn flat_score(&self, j: usize, k: usize) -> f64 {
        let mut s = 0.0;
        for (u, members) in self.classes.iter().enumerate() {
            for &i in members {
                s += self.weight(u, j) * self.matrix.get(i, k);
            }
        }
        s
    }

    pub fn min_score(&self, j: usize, u: usize) -> f64 {
        self.classes[u]
            .iter()
            .map(|&k| self.grouped_score(j, k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum of the class sums of `v` over candidates in class `u`.
    pub fn class_minimum(&self, v: usize, u: usize) -> f64 {
        self.classes[u]
            .iter()
            .map(|&k| self.class_sum(&self.classes[v], k))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn full_bound(&self, j: usize, u: usize) -> f64 {
        (0..self.graph.len()).fold(0.0, |acc, v| {
            acc + self.weight(v, j) * self.class_minimum(v, u)
        })
    }

    /// Prototype of every node by exhaustive search, smallest index on ties.
    pub fn brute_force_prototypes(&self) -> Vec<usize> {
        (0..self.graph.len())
            .map(|j| {
                let mut best = (f64::INFINITY, usize::MAX);
                for k in 0..self.matrix.len() {
                    let s = self.grouped_score(j, k);
                    if s < best.0 {
                        best = (s, k);
                    }
                }
                best.1
            })
            .collect()
    }
}

/// A divergent prune/search decision between a short-circuit bound and the
/// full bound.
#[derive(Debug, Clone)]
pub struct DecisionMismatch {
    pub node: usize,
    pub class: usize,
    pub qual: f64,
    pub kind: BoundKind,
    pub full: bool,
    pub found: bool,
}

/// Branch and bound with the full bound that, at every class it considers,
/// also asks both short-circuit bounds for their decision at the same
/// incumbent.
#[derive(Default)]
pub struct DecisionProbe {
    cache: Option<PartialSumCache>,
    pub triples: u64,
    pub mismatches: Vec<DecisionMismatch>,
}

impl RepresentationPhase for DecisionProbe {
    fn represent(
        &mut self,
        matrix: &DissimilarityMatrix,
        graph: &MapGraph,
        h: &NeighborhoodTable,
        classes: &[Vec<usize>],
    ) -> (Vec<usize>, RepresentationStats) {
        let cache = self
            .cache
            .get_or_insert_with(|| PartialSumCache::new(matrix.len(), graph.len(), true));
        cache.update(matrix, classes, false);
        let mut prototypes = Vec::new();
        for j in 0..graph.len() {
            let mut best = Incumbent::default();
            for &k in &classes[j] {
                best.offer(k, score(j, k, cache, h));
            }
            for &u in &graph.order_from(j)[1..] {
                let Some(&first) = classes[u].first() else {
                    continue;
                };
                let qual = best.score;
                let full = best.admits(
                    bound(j, u, cache, h, graph, BoundKind::Full, qual).value,
                    first,
                );
                for kind in [BoundKind::ShortCircuit, BoundKind::ShortCircuitOrdered] {
                    let found = best.admits(bound(j, u, cache, h, graph, kind, qual).value, first);
                    if found != full {
                        self.mismatches.push(DecisionMismatch {
                            node: j,
                            class: u,
                            qual,
                            kind,
                            full,
                            found,
                        });
                    }
                }
                self.triples += 1;
                if full {
                    for &k in &classes[u] {
                        best.offer(k, score(j, k, cache, h));
                    }
                }
            }
            prototypes.push(best.index.unwrap());
        }
        (prototypes, RepresentationStats::default())
    }
}
