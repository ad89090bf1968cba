use super::{BoundKind, PartialSumCache, RepresentationStats};
use crate::dissim::DissimilarityMatrix;
use crate::topology::{MapGraph, NeighborhoodTable};

/// Relative slack, per summed term, applied to the early-exit test of
/// [`BoundKind::ShortCircuitOrdered`]. The reordered partial sum and the
/// canonical ascending sum add the same rounded products; any floating-point
/// sum of `M` nonnegative terms lies within `(M - 1) * EPSILON / 2` of the
/// exact value, so a partial sum above `qual * (1 + 4 * M * EPSILON)`
/// certifies that the canonical sum is above `qual`.
const REORDER_SLACK: f64 = 4.0 * f64::EPSILON;

#[inline]
fn weighted_sum(weights: &[f64], sums: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (w, d) in weights.iter().zip(sums) {
        acc += w * d;
    }
    acc
}

/// Four independent [`weighted_sum`]s, interleaved. Each lane performs the
/// exact same operation sequence as the scalar version.
#[inline]
fn weighted_sum4(weights: &[f64], rows: [&[f64]; 4]) -> [f64; 4] {
    let mut acc = [0.0; 4];
    let m = weights.len();
    let (r0, r1, r2, r3) = (&rows[0][..m], &rows[1][..m], &rows[2][..m], &rows[3][..m]);
    for u in 0..m {
        let w = weights[u];
        acc[0] += w * r0[u];
        acc[1] += w * r1[u];
        acc[2] += w * r2[u];
        acc[3] += w * r3[u];
    }
    acc
}

/// `S(j, k) = Σ_u h(u, j) D(u, k)`, summed over ascending `u`.
#[inline]
pub fn score(j: usize, k: usize, cache: &PartialSumCache, h: &NeighborhoodTable) -> f64 {
    weighted_sum(h.row(j), cache.candidate_row(k))
}

/// Scores every candidate in `candidates`, in order, feeding them to `visit`.
#[inline]
fn score_each(
    weights: &[f64],
    cache: &PartialSumCache,
    candidates: &[usize],
    mut visit: impl FnMut(usize, f64),
) {
    let mut blocks = candidates.chunks_exact(4);
    for b in blocks.by_ref() {
        let s = weighted_sum4(
            weights,
            [
                cache.candidate_row(b[0]),
                cache.candidate_row(b[1]),
                cache.candidate_row(b[2]),
                cache.candidate_row(b[3]),
            ],
        );
        for q in 0..4 {
            visit(b[q], s[q]);
        }
    }
    for &k in blocks.remainder() {
        visit(k, weighted_sum(weights, cache.candidate_row(k)));
    }
}

/// The best `(score, index)` pair seen so far, ordered lexicographically so
/// that equal scores resolve to the smaller data index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent {
    pub score: f64,
    pub index: Option<usize>,
}

impl Default for Incumbent {
    fn default() -> Self {
        Incumbent {
            score: f64::INFINITY,
            index: None,
        }
    }
}

impl Incumbent {
    #[inline]
    pub fn offer(&mut self, k: usize, s: f64) {
        if s < self.score || (s == self.score && self.index.is_none_or(|b| k < b)) {
            self.score = s;
            self.index = Some(k);
        }
    }

    /// Whether a class whose scores are all at least `lower` and whose
    /// smallest member is `first` could still hold a better candidate.
    #[inline]
    pub fn admits(&self, lower: f64, first: usize) -> bool {
        lower < self.score || (lower == self.score && self.index.is_none_or(|b| first < b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    /// A lower bound on `S(j, k)` over the class (`+inf` for an empty class).
    pub value: f64,
    /// Terms added to produce `value`.
    pub terms: u64,
    /// False when the summation was abandoned early.
    pub complete: bool,
}

/// Lower bound `ζ(j, u)` on the scores of the members of class `u` for node `j`.
///
/// `qual` is the current incumbent score; only the short-circuit kinds read
/// it. When a short-circuit summation runs to completion the returned value
/// is the canonical full bound.
pub fn bound(
    j: usize,
    u: usize,
    cache: &PartialSumCache,
    h: &NeighborhoodTable,
    graph: &MapGraph,
    kind: BoundKind,
    qual: f64,
) -> BoundValue {
    let minima = cache.class_minima(u);
    if minima[j] == f64::INFINITY {
        return BoundValue {
            value: f64::INFINITY,
            terms: 0,
            complete: true,
        };
    }
    let weights = h.row(j);
    let m = weights.len();
    match kind {
        BoundKind::SingleTerm => BoundValue {
            value: weights[j] * minima[j],
            terms: 1,
            complete: true,
        },
        BoundKind::Full => BoundValue {
            value: weighted_sum(weights, minima),
            terms: m as u64,
            complete: true,
        },
        BoundKind::ShortCircuit => {
            let mut acc = 0.0;
            for v in 0..m {
                acc += weights[v] * minima[v];
                if acc > qual {
                    return BoundValue {
                        value: acc,
                        terms: v as u64 + 1,
                        complete: false,
                    };
                }
            }
            BoundValue {
                value: acc,
                terms: m as u64,
                complete: true,
            }
        }
        BoundKind::ShortCircuitOrdered => {
            let threshold = qual * (1.0 + REORDER_SLACK * m as f64);
            let mut acc = 0.0;
            for (t, &v) in graph.order_from(j).iter().enumerate() {
                acc += weights[v] * minima[v];
                if acc > threshold {
                    return BoundValue {
                        value: acc,
                        terms: t as u64 + 1,
                        complete: false,
                    };
                }
            }
            BoundValue {
                value: weighted_sum(weights, minima),
                terms: 2 * m as u64,
                complete: true,
            }
        }
    }
}

/// Exhaustive search recomputing every class sum from the matrix.
pub fn represent_naive(
    matrix: &DissimilarityMatrix,
    h: &NeighborhoodTable,
    classes: &[Vec<usize>],
    stats: &mut RepresentationStats,
) -> Vec<usize> {
    let n = matrix.len();
    let m = classes.len();
    let mut prototypes = Vec::with_capacity(m);
    for j in 0..m {
        let weights = h.row(j);
        let mut best = Incumbent::default();
        let mut k = 0;
        while k + 4 <= n {
            let rows = [
                matrix.row(k),
                matrix.row(k + 1),
                matrix.row(k + 2),
                matrix.row(k + 3),
            ];
            let mut acc = [0.0; 4];
            for (members, &w) in classes.iter().zip(weights) {
                let mut sums = [0.0; 4];
                for &i in members {
                    sums[0] += rows[0][i];
                    sums[1] += rows[1][i];
                    sums[2] += rows[2][i];
                    sums[3] += rows[3][i];
                }
                for q in 0..4 {
                    acc[q] += w * sums[q];
                }
            }
            for (q, &s) in acc.iter().enumerate() {
                best.offer(k + q, s);
            }
            k += 4;
        }
        for k in k..n {
            let row = matrix.row(k);
            let mut acc = 0.0;
            for (members, &w) in classes.iter().zip(weights) {
                let mut sum = 0.0;
                for &i in members {
                    sum += row[i];
                }
                acc += w * sum;
            }
            best.offer(k, acc);
        }
        prototypes.push(best.index.expect("at least one individual"));
    }
    stats.score_evaluations += (n * m) as u64;
    stats.matrix_reads += (n * n * m) as u64;
    prototypes
}

/// Exhaustive search over the cached partial sums.
pub fn represent_partial_sums(
    cache: &PartialSumCache,
    h: &NeighborhoodTable,
    stats: &mut RepresentationStats,
) -> Vec<usize> {
    let n = cache.individuals();
    let m = cache.nodes();
    let all: Vec<usize> = (0..n).collect();
    let prototypes = (0..m)
        .map(|j| {
            let mut best = Incumbent::default();
            score_each(h.row(j), cache, &all, |k, s| best.offer(k, s));
            best.index.expect("at least one individual")
        })
        .collect();
    stats.score_evaluations += (n * m) as u64;
    prototypes
}

/// Branch and bound over classes: the home class first, then the others by
/// increasing graph distance from the node, each searched only if its bound
/// does not rule it out.
pub fn represent_bnb(
    cache: &PartialSumCache,
    h: &NeighborhoodTable,
    graph: &MapGraph,
    classes: &[Vec<usize>],
    kind: BoundKind,
    stats: &mut RepresentationStats,
) -> Vec<usize> {
    assert!(cache.tracks_minima(), "branch and bound needs class minima");
    let m = classes.len();
    let mut prototypes = Vec::with_capacity(m);
    for j in 0..m {
        let weights = h.row(j);
        let mut best = Incumbent::default();
        score_each(weights, cache, &classes[j], |k, s| best.offer(k, s));
        stats.score_evaluations += classes[j].len() as u64;
        stats.home_searches += 1;

        for &u in &graph.order_from(j)[1..] {
            let members = &classes[u];
            let Some(&first) = members.first() else {
                stats.pruned_classes += 1;
                continue;
            };
            let b = bound(j, u, cache, h, graph, kind, best.score);
            stats.bound_terms_summed += b.terms;
            if best.admits(b.value, first) {
                score_each(weights, cache, members, |k, s| best.offer(k, s));
                stats.score_evaluations += members.len() as u64;
                stats.exhaustive_searches += 1;
            } else {
                stats.pruned_classes += 1;
            }
        }
        prototypes.push(best.index.expect("at least one individual"));
    }
    prototypes
}
