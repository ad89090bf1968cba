//! The representation phase: each node picks the data point minimizing its
//! neighborhood-weighted sum of dissimilarities.
//!
//! Six strategies share one scoring semantics. Every score is the sum over
//! classes `u = 0..M` (ascending) of `h(u, j) * D(u, k)`, and every class sum
//! `D(u, k)` adds members in ascending index order, so all strategies produce
//! bit-identical prototypes. Ties between candidates always resolve to the
//! smaller data index.

mod cache;
mod search;

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

pub use cache::{CacheUpdate, PartialSumCache};
pub use search::{
    bound, represent_bnb, represent_naive, represent_partial_sums, score, BoundValue, Incumbent,
};

use crate::dissim::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::topology::{MapGraph, NeighborhoodTable};

/// How the lower bound of a class is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Only the `v = j` term: `λ(j, u)`.
    SingleTerm,
    /// All `M` terms in ascending node order.
    Full,
    /// All terms in ascending node order, abandoned as soon as the running
    /// sum exceeds the incumbent.
    ShortCircuit,
    /// As [`BoundKind::ShortCircuit`], visiting nodes by increasing graph
    /// distance from `j`.
    ShortCircuitOrdered,
}

impl BoundKind {
    pub const ALL: [BoundKind; 4] = [
        BoundKind::SingleTerm,
        BoundKind::Full,
        BoundKind::ShortCircuit,
        BoundKind::ShortCircuitOrdered,
    ];

    fn id(self) -> &'static str {
        match self {
            BoundKind::SingleTerm => "single",
            BoundKind::Full => "full",
            BoundKind::ShortCircuit => "sc",
            BoundKind::ShortCircuitOrdered => "sco",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Re-sums class members for every `(node, candidate)` pair.
    Naive,
    /// Exhaustive search over precomputed partial sums.
    PartialSums { memoize: bool },
    /// Branch and bound over the classes of the current partition.
    BranchAndBound { bound: BoundKind, memoize: bool },
}

impl Strategy {
    /// Naive, partial sums with and without memoization, and every bound kind
    /// with and without memoization.
    pub fn all() -> Vec<Strategy> {
        let mut out = vec![Strategy::Naive];
        for memoize in [false, true] {
            out.push(Strategy::PartialSums { memoize });
        }
        for bound in BoundKind::ALL {
            for memoize in [false, true] {
                out.push(Strategy::BranchAndBound { bound, memoize });
            }
        }
        out
    }

    pub fn memoize(self) -> bool {
        match self {
            Strategy::Naive => false,
            Strategy::PartialSums { memoize } | Strategy::BranchAndBound { memoize, .. } => memoize,
        }
    }
}

/// Identifiers: `naive`, `partial-sums`, `bnb-single`, `bnb-full`, `bnb-sc`,
/// `bnb-sco`, each cache-backed one optionally suffixed with `+memo`.
impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Naive => f.write_str("naive")?,
            Strategy::PartialSums { .. } => f.write_str("partial-sums")?,
            Strategy::BranchAndBound { bound, .. } => write!(f, "bnb-{}", bound.id())?,
        }
        if self.memoize() {
            f.write_str("+memo")?;
        }
        Ok(())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, memoize) = match s.strip_suffix("+memo") {
            Some(base) => (base, true),
            None => (s, false),
        };
        let strategy = match base {
            "naive" if !memoize => Strategy::Naive,
            "partial-sums" => Strategy::PartialSums { memoize },
            _ => {
                let bound = base
                    .strip_prefix("bnb-")
                    .and_then(|b| BoundKind::ALL.into_iter().find(|k| k.id() == b))
                    .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?}")))?;
                Strategy::BranchAndBound { bound, memoize }
            }
        };
        Ok(strategy)
    }
}

/// Parses a comma-separated strategy list; `all` expands to [`Strategy::all`].
pub fn parse_strategy_list(s: &str) -> Result<Vec<Strategy>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        if item == "all" {
            out.extend(Strategy::all());
        } else {
            out.push(item.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("strategy list is empty"));
    }
    Ok(out)
}

/// Operation counters for one representation phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RepresentationStats {
    /// Scores `S(j, k)` evaluated.
    pub score_evaluations: u64,
    /// Home classes scanned (one per node for branch and bound).
    pub home_searches: u64,
    /// Foreign classes scanned exhaustively.
    pub exhaustive_searches: u64,
    /// Foreign classes skipped, including empty ones.
    pub pruned_classes: u64,
    /// `h * λ` terms added while evaluating bounds.
    pub bound_terms_summed: u64,
    /// Partial-sum rows `D(u, .)` recomputed.
    pub d_columns_recomputed: u64,
    /// Class minima `λ(v, u)` recomputed.
    pub lambda_entries_recomputed: u64,
    /// Dissimilarity matrix entries read.
    pub matrix_reads: u64,
}

impl AddAssign for RepresentationStats {
    fn add_assign(&mut self, o: Self) {
        self.score_evaluations += o.score_evaluations;
        self.home_searches += o.home_searches;
        self.exhaustive_searches += o.exhaustive_searches;
        self.pruned_classes += o.pruned_classes;
        self.bound_terms_summed += o.bound_terms_summed;
        self.d_columns_recomputed += o.d_columns_recomputed;
        self.lambda_entries_recomputed += o.lambda_entries_recomputed;
        self.matrix_reads += o.matrix_reads;
    }
}

impl AddAssign<CacheUpdate> for RepresentationStats {
    fn add_assign(&mut self, o: CacheUpdate) {
        self.d_columns_recomputed += o.d_columns_recomputed;
        self.lambda_entries_recomputed += o.lambda_entries_recomputed;
        self.matrix_reads += o.matrix_reads;
    }
}

/// Anything that can run a representation phase for the map driver.
pub trait RepresentationPhase {
    /// Returns one prototype (data index) per node.
    fn represent(
        &mut self,
        matrix: &DissimilarityMatrix,
        graph: &MapGraph,
        h: &NeighborhoodTable,
        classes: &[Vec<usize>],
    ) -> (Vec<usize>, RepresentationStats);
}

/// A [`Strategy`] together with the cache it keeps between iterations.
#[derive(Debug, Clone)]
pub struct Representer {
    strategy: Strategy,
    cache: Option<PartialSumCache>,
}

impl Representer {
    pub fn new(strategy: Strategy, n: usize, m: usize) -> Self {
        let cache = match strategy {
            Strategy::Naive => None,
            Strategy::PartialSums { .. } => Some(PartialSumCache::new(n, m, false)),
            Strategy::BranchAndBound { .. } => Some(PartialSumCache::new(n, m, true)),
        };
        Representer { strategy, cache }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn cache(&self) -> Option<&PartialSumCache> {
        self.cache.as_ref()
    }
}

impl RepresentationPhase for Representer {
    fn represent(
        &mut self,
        matrix: &DissimilarityMatrix,
        graph: &MapGraph,
        h: &NeighborhoodTable,
        classes: &[Vec<usize>],
    ) -> (Vec<usize>, RepresentationStats) {
        let mut stats = RepresentationStats::default();
        let memoize = self.strategy.memoize();
        let prototypes = match (self.strategy, self.cache.as_mut()) {
            (Strategy::Naive, _) => represent_naive(matrix, h, classes, &mut stats),
            (Strategy::PartialSums { .. }, Some(cache)) => {
                stats += cache.update(matrix, classes, memoize);
                represent_partial_sums(cache, h, &mut stats)
            }
            (Strategy::BranchAndBound { bound, .. }, Some(cache)) => {
                stats += cache.update(matrix, classes, memoize);
                represent_bnb(cache, h, graph, classes, bound, &mut stats)
            }
            _ => unreachable!("cache-backed strategy without a cache"),
        };
        (prototypes, stats)
    }
}
