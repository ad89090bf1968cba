//! Prototype graphs, graph distances and the neighborhood kernel.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Final temperature used when none is configured. At this value a node one
/// edge away weighs `exp(-(1/0.3)^2) ≈ 1.5e-5`.
pub const DEFAULT_FINAL_TEMPERATURE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Odd-row offset hexagonal tiling.
    Hexagonal,
    /// Four-neighbor rectangular grid.
    Rectangular,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Hexagonal => "hex",
            Layout::Rectangular => "rect",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hex" | "hexagonal" => Ok(Layout::Hexagonal),
            "rect" | "rectangular" => Ok(Layout::Rectangular),
            _ => Err(Error::invalid(format!("unknown layout {s:?}"))),
        }
    }
}

/// The prototype graph with its all-pairs edge-count distances.
#[derive(Debug, Clone)]
pub struct MapGraph {
    rows: usize,
    cols: usize,
    layout: Layout,
    adjacency: Vec<Vec<usize>>,
    delta: Vec<u32>,
    // Row j lists all nodes by ascending delta[j][.], ties by index.
    order: Vec<usize>,
    diameter: u32,
}

impl MapGraph {
    pub fn grid(rows: usize, cols: usize, layout: Layout) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let m = rows * cols;
        let adjacency: Vec<Vec<usize>> = (0..m)
            .map(|node| grid_neighbors(rows, cols, layout, node))
            .collect();

        let mut delta = vec![u32::MAX; m * m];
        let mut queue = VecDeque::new();
        for source in 0..m {
            let dist = &mut delta[source * m..(source + 1) * m];
            dist[source] = 0;
            queue.push_back(source);
            while let Some(v) = queue.pop_front() {
                for &w in &adjacency[v] {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        // grids are connected; every entry is finite
        debug_assert!(delta.iter().all(|&d| d != u32::MAX));
        let diameter = delta.iter().copied().max().unwrap_or(0);

        let mut order = Vec::with_capacity(m * m);
        for j in 0..m {
            let mut nodes: Vec<usize> = (0..m).collect();
            nodes.sort_by_key(|&v| (delta[j * m + v], v));
            order.extend(nodes);
        }

        Ok(MapGraph {
            rows,
            cols,
            layout,
            adjacency,
            delta,
            order,
            diameter,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    #[inline]
    pub fn delta(&self, j: usize, k: usize) -> u32 {
        self.delta[j * self.len() + k]
    }

    pub fn delta_row(&self, j: usize) -> &[u32] {
        let m = self.len();
        &self.delta[j * m..(j + 1) * m]
    }

    /// All nodes ordered by ascending graph distance from `j`, ties by index.
    /// The first entry is always `j`.
    #[inline]
    pub fn order_from(&self, j: usize) -> &[usize] {
        let m = self.len();
        &self.order[j * m..(j + 1) * m]
    }

    pub fn diameter(&self) -> u32 {
        self.diameter
    }
}

fn grid_neighbors(rows: usize, cols: usize, layout: Layout, node: usize) -> Vec<usize> {
    let (r, c) = ((node / cols) as isize, (node % cols) as isize);
    let mut offsets: Vec<(isize, isize)> = vec![(0, -1), (0, 1), (-1, 0), (1, 0)];
    if layout == Layout::Hexagonal {
        let dc = if r % 2 == 0 { -1 } else { 1 };
        offsets.extend([(-1, dc), (1, dc)]);
    }
    let mut out: Vec<usize> = offsets
        .into_iter()
        .map(|(dr, dc)| (r + dr, c + dc))
        .filter(|&(rr, cc)| rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols)
        .map(|(rr, cc)| rr as usize * cols + cc as usize)
        .collect();
    out.sort_unstable();
    out
}

/// Half the graph diameter, and never below `tf`.
///
/// At this temperature the far corners of the map still weigh `exp(-4)`. With
/// a flatter kernel every node tends to pick the same overall medoid after the
/// first iteration; all individuals then fall into one class, and the map
/// stays collapsed until the far weights underflow.
pub fn default_initial_temperature(graph: &MapGraph, tf: f64) -> f64 {
    (graph.diameter() as f64 / 2.0).max(tf)
}

/// Exponentially decaying temperature from `t0` at the first iteration to `tf`
/// at the last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodSchedule {
    t0: f64,
    tf: f64,
    iterations: usize,
}

impl NeighborhoodSchedule {
    pub fn new(t0: f64, tf: f64, iterations: usize) -> Result<Self> {
        if !(tf > 0.0 && t0 >= tf && t0.is_finite()) {
            return Err(Error::invalid(format!(
                "temperatures must satisfy t0 >= tf > 0, got t0={t0} tf={tf}"
            )));
        }
        if iterations == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        Ok(NeighborhoodSchedule { t0, tf, iterations })
    }

    /// Starts at [`default_initial_temperature`] and ends at
    /// [`DEFAULT_FINAL_TEMPERATURE`].
    pub fn default_for(graph: &MapGraph, iterations: usize) -> Result<Self> {
        let tf = DEFAULT_FINAL_TEMPERATURE;
        NeighborhoodSchedule::new(default_initial_temperature(graph, tf), tf, iterations)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `T^l = t0 * (tf/t0)^(l/(L-1))`; exactly `t0` at `l = 0` and `tf` at `l = L-1`.
    pub fn temperature(&self, l: usize) -> f64 {
        assert!(l < self.iterations, "iteration {l} out of range");
        if l + 1 == self.iterations {
            return self.tf;
        }
        let progress = l as f64 / (self.iterations - 1) as f64;
        self.t0 * (self.tf / self.t0).powf(progress)
    }

    pub fn neighborhood(&self, graph: &MapGraph, l: usize, j: usize, k: usize) -> f64 {
        kernel(graph.delta(j, k), self.temperature(l))
    }
}

/// Gaussian kernel `exp(-(delta/T)^2)`.
#[inline]
pub fn kernel(delta: u32, temperature: f64) -> f64 {
    let x = delta as f64 / temperature;
    (-(x * x)).exp()
}

/// All `h(j, u)` values for one temperature, row-major. The kernel is
/// symmetric, so row `j` doubles as column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodTable {
    m: usize,
    temperature: f64,
    values: Vec<f64>,
}

impl NeighborhoodTable {
    pub fn new(graph: &MapGraph, temperature: f64) -> Self {
        let m = graph.len();
        let values = (0..m * m)
            .map(|idx| kernel(graph.delta(idx / m, idx % m), temperature))
            .collect();
        NeighborhoodTable {
            m,
            temperature,
            values,
        }
    }

    pub fn for_iteration(graph: &MapGraph, schedule: &NeighborhoodSchedule, l: usize) -> Self {
        NeighborhoodTable::new(graph, schedule.temperature(l))
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    #[inline]
    pub fn get(&self, j: usize, u: usize) -> f64 {
        self.values[j * self.m + u]
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }
}
