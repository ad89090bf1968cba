//! Dissimilarity matrices: construction, validation and the text format.
//!
//! Individuals are anonymous indices `0..n`; everything the map knows about
//! them lives in the matrix. The whole matrix is held in memory, row-major.
//!
//! Text format: the first line holds `n`, followed by `n` lines of `n`
//! whitespace-separated decimals. Values are written with the shortest
//! representation that parses back to the same `f64`, so a save/load round
//! trip is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result, Violation};

/// Absolute tolerance applied to invariant checks when loading a matrix.
pub const LOAD_TOLERANCE: f64 = 1e-12;

/// A dense, symmetric, nonnegative matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Builds a matrix from row-major values, checking every invariant exactly.
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("matrix must hold at least one individual"));
        }
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} values for a {n}x{n} matrix, found {}",
                n * n,
                values.len()
            )));
        }
        let matrix = DissimilarityMatrix { n, values };
        matrix.check(0.0)?;
        Ok(matrix)
    }

    /// Builds a matrix by evaluating `f(i, j)` on the strict lower triangle and mirroring.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("matrix must hold at least one individual"));
        }
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        DissimilarityMatrix::from_row_major(n, values)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row `i`, i.e. the dissimilarities from individual `i` to everyone.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Checks the three invariants with absolute tolerance `tol`, reporting the
    /// first violation in row-major order. Symmetry is reported at the lower
    /// triangle position.
    fn check(&self, tol: f64) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.values[i * n + j];
                let fail = |violation, detail: String| Error::Invariant {
                    violation,
                    row: i,
                    col: j,
                    detail,
                };
                if !v.is_finite() {
                    return Err(fail(Violation::NonFinite, format!("value {v}")));
                }
                if i == j && v.abs() > tol {
                    return Err(fail(Violation::Diagonal, format!("value {v}")));
                }
                if v < -tol {
                    return Err(fail(Violation::Negative, format!("value {v}")));
                }
                if j < i {
                    let w = self.values[j * n + i];
                    if (v - w).abs() > tol {
                        return Err(fail(
                            Violation::Symmetry,
                            format!("value {v} but ({j}, {i}) holds {w}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses the text format, validates within [`LOAD_TOLERANCE`], then
    /// symmetrizes from the lower triangle and clears the diagonal.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing matrix size".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected matrix size, found {header:?}"),
        })?;
        if n == 0 {
            return Err(Error::Parse {
                line,
                message: "matrix size must be positive".into(),
            });
        }

        let mut values = Vec::with_capacity(n * n);
        for row in 0..n {
            let Some((line, text)) = lines.next() else {
                return Err(Error::Dimension {
                    row,
                    expected: n,
                    found: 0,
                });
            };
            let before = values.len();
            for (col, token) in text.split_whitespace().enumerate() {
                let v: f64 = token.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("cannot parse {token:?} at ({row}, {col})"),
                })?;
                values.push(v);
            }
            let found = values.len() - before;
            if found != n {
                return Err(Error::Dimension {
                    row,
                    expected: n,
                    found,
                });
            }
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse {
                line,
                message: format!("trailing data after {n} rows"),
            });
        }

        let mut matrix = DissimilarityMatrix { n, values };
        matrix.check(LOAD_TOLERANCE)?;
        for i in 0..n {
            matrix.values[i * n + i] = 0.0;
            for j in 0..i {
                let v = matrix.values[i * n + j].max(0.0);
                matrix.values[i * n + j] = v;
                matrix.values[j * n + i] = v;
            }
        }
        Ok(matrix)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n * self.n * 8);
        writeln!(out, "{}", self.n).unwrap();
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        DissimilarityMatrix::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(self.to_text().as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::file(path, e))
    }
}

/// Squared Euclidean distances between planar points.
pub fn sq_euclidean_matrix(points: &[(f64, f64)]) -> Result<DissimilarityMatrix> {
    if points.is_empty() {
        return Err(Error::invalid("point list is empty"));
    }
    DissimilarityMatrix::from_fn(points.len(), |i, j| {
        let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
        dx * dx + dy * dy
    })
}

/// Levenshtein distance over Unicode scalar values, unit cost for each
/// substitution, insertion and deletion.
///
/// With `normalized` set the distance is divided by the length of the longer
/// string; two empty strings are at distance 0. No case folding is applied.
pub fn levenshtein(a: &str, b: &str, normalized: bool) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let raw = edit_distance(&a, &b);
    if !normalized {
        return raw as f64;
    }
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        raw as f64 / longest as f64
    }
}

fn edit_distance(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Normalized Levenshtein distances between words.
pub fn levenshtein_matrix<S: AsRef<str>>(words: &[S]) -> Result<DissimilarityMatrix> {
    if words.is_empty() {
        return Err(Error::invalid("word list is empty"));
    }
    DissimilarityMatrix::from_fn(words.len(), |i, j| {
        levenshtein(words[i].as_ref(), words[j].as_ref(), true)
    })
}

/// Parses a word list: one word per line, surrounding whitespace trimmed,
/// blank lines ignored.
pub fn parse_words(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

/// Parses a point list: one `x y` pair per line, blank lines ignored.
pub fn parse_points(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: no + 1,
                    message: format!("cannot parse coordinate {s:?}"),
                })
        };
        match fields.as_slice() {
            [x, y] => points.push((parse(x)?, parse(y)?)),
            _ => {
                return Err(Error::Parse {
                    line: no + 1,
                    message: format!("expected two coordinates, found {}", fields.len()),
                })
            }
        }
    }
    Ok(points)
}

pub fn points_to_text(points: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(points.len() * 40);
    for (x, y) in points {
        writeln!(out, "{x} {y}").unwrap();
    }
    out
}

/// A small list of common English words bundled with the crate.
pub const BUNDLED_WORDS: &str = include_str!("../data/words.txt");

pub fn bundled_words() -> Vec<String> {
    parse_words(BUNDLED_WORDS)
}
