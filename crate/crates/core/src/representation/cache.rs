use crate::dissim::DissimilarityMatrix;

/// Recomputation counts from one [`PartialSumCache::update`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheUpdate {
    pub d_columns_recomputed: u64,
    pub lambda_entries_recomputed: u64,
    pub matrix_reads: u64,
}

/// Partial sums `D(u, k)` and class minima `λ(v, u)` for the current partition.
///
/// `D(u, k)` is stored candidate-major so that a score reads one contiguous
/// row; `λ(v, u)` is stored class-major so that a bound reads one contiguous
/// row. With memoization on, only classes whose membership changed since the
/// previous update are recomputed; the resulting tables are bit-identical to
/// a full recomputation because each entry is always produced by the same
/// sequence of operations.
#[derive(Debug, Clone)]
pub struct PartialSumCache {
    n: usize,
    m: usize,
    track_minima: bool,
    by_candidate: Vec<f64>,
    minima_by_class: Vec<f64>,
    class_dirty: Vec<bool>,
    snapshot: Option<Vec<Vec<usize>>>,
    row: Vec<f64>,
}

impl PartialSumCache {
    /// `track_minima` enables the `λ` table (needed only by branch and bound).
    pub fn new(n: usize, m: usize, track_minima: bool) -> Self {
        PartialSumCache {
            n,
            m,
            track_minima,
            by_candidate: vec![0.0; n * m],
            minima_by_class: if track_minima {
                vec![f64::INFINITY; m * m]
            } else {
                Vec::new()
            },
            class_dirty: vec![true; m],
            snapshot: None,
            row: vec![0.0; n],
        }
    }

    pub fn individuals(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.m
    }

    pub fn tracks_minima(&self) -> bool {
        self.track_minima
    }

    /// `D(u, k)`: sum of `d(i, k)` over members `i` of class `u`.
    #[inline]
    pub fn d(&self, u: usize, k: usize) -> f64 {
        self.by_candidate[k * self.m + u]
    }

    /// `D(., k)` for every class.
    #[inline]
    pub fn candidate_row(&self, k: usize) -> &[f64] {
        &self.by_candidate[k * self.m..(k + 1) * self.m]
    }

    /// `λ(v, u)`: minimum of `D(v, k)` over `k` in class `u`; `+inf` for an
    /// empty class.
    #[inline]
    pub fn lambda(&self, v: usize, u: usize) -> f64 {
        self.minima_by_class[u * self.m + v]
    }

    /// `λ(., u)` for every node `v`.
    #[inline]
    pub fn class_minima(&self, u: usize) -> &[f64] {
        &self.minima_by_class[u * self.m..(u + 1) * self.m]
    }

    /// Whether class `u` was recomputed by the last update.
    pub fn is_dirty(&self, u: usize) -> bool {
        self.class_dirty[u]
    }

    /// Brings the tables in line with `classes`.
    pub fn update(
        &mut self,
        matrix: &DissimilarityMatrix,
        classes: &[Vec<usize>],
        memoize: bool,
    ) -> CacheUpdate {
        let (n, m) = (self.n, self.m);
        assert_eq!(classes.len(), m, "one class per node expected");
        assert_eq!(matrix.len(), n, "matrix size changed");

        match (&self.snapshot, memoize) {
            (Some(previous), true) => {
                for (dirty, (now, before)) in self
                    .class_dirty
                    .iter_mut()
                    .zip(classes.iter().zip(previous))
                {
                    *dirty = now != before;
                }
            }
            _ => self.class_dirty.fill(true),
        }

        let mut counts = CacheUpdate::default();
        for (u, members) in classes.iter().enumerate() {
            if !self.class_dirty[u] {
                continue;
            }
            self.row.fill(0.0);
            for &i in members {
                for (acc, &d) in self.row.iter_mut().zip(matrix.row(i)) {
                    *acc += d;
                }
            }
            for (k, &sum) in self.row.iter().enumerate() {
                self.by_candidate[k * m + u] = sum;
            }
            counts.d_columns_recomputed += 1;
            counts.matrix_reads += (members.len() * n) as u64;
        }

        if self.track_minima {
            let dirty_nodes: Vec<usize> = (0..m).filter(|&v| self.class_dirty[v]).collect();
            let all_nodes: Vec<usize> = (0..m).collect();
            for (u, members) in classes.iter().enumerate() {
                let targets = if self.class_dirty[u] {
                    &all_nodes
                } else {
                    &dirty_nodes
                };
                if targets.is_empty() {
                    continue;
                }
                let minima = &mut self.minima_by_class[u * m..(u + 1) * m];
                for &v in targets {
                    minima[v] = f64::INFINITY;
                }
                for &k in members {
                    let sums = &self.by_candidate[k * m..(k + 1) * m];
                    for &v in targets {
                        if sums[v] < minima[v] {
                            minima[v] = sums[v];
                        }
                    }
                }
                counts.lambda_entries_recomputed += targets.len() as u64;
            }
        }

        match &mut self.snapshot {
            Some(previous) => previous.clone_from_slice(classes),
            None => self.snapshot = Some(classes.to_vec()),
        }
        counts
    }
}
