//! Cluster detection and upper bounds on the number of clusters.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dynamics::similarity_matrix;
use crate::error::{Error, Result};
use crate::kernel::KernelConfig;
use crate::opinion::OpinionMatrix;

/// Connected components of the similarity graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    /// Cluster id of every user. Ids are numbered in order of each cluster's
    /// smallest member.
    pub assignments: Vec<usize>,
    pub count: usize,
}

impl ClusterPartition {
    /// Members of every cluster, in id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.count];
        for (user, &id) in self.assignments.iter().enumerate() {
            groups[id].push(user);
        }
        groups
    }
}

/// Connected components of the graph with an edge wherever
/// `connectivity(x_i, x_j) > 0`.
pub fn clusters(x: &OpinionMatrix, cfg: &KernelConfig) -> ClusterPartition {
    let n = x.n();
    let s = similarity_matrix(x, cfg);
    let mut assignments = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for root in 0..n {
        if assignments[root] != usize::MAX {
            continue;
        }
        assignments[root] = count;
        stack.push(root);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if assignments[j] == usize::MAX && s[i * n + j] > 0.0 {
                    assignments[j] = count;
                    stack.push(j);
                }
            }
        }
        count += 1;
    }
    ClusterPartition { assignments, count }
}

/// Which form of the distance-kernel bound to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceBound {
    /// `min(ī^m, n)`: number of grid cells of side `1/ī` covering `[0,1]^m`.
    #[default]
    GridCells,
    /// `min(ī, n)`, the per-axis count alone.
    PerAxis,
}

/// Upper bound on the number of clusters under the distance kernel.
///
/// With `τ = 1 − ε` and `ī = ⌊1/τ + 1⌋`, cells of side `1/ī < τ` have
/// diameter below the connection radius `√m·τ`, so two clusters never share a
/// cell.
pub fn distance_cluster_bound(epsilon: f64, m: usize, n: usize, mode: DistanceBound) -> usize {
    let tau = 1.0 - epsilon;
    if tau <= 0.0 {
        return n;
    }
    let per_axis = libm::floor(1.0 / tau + 1.0);
    let cells = match mode {
        DistanceBound::GridCells => libm::pow(per_axis, m as f64),
        DistanceBound::PerAxis => per_axis,
    };
    if cells >= n as f64 {
        n
    } else {
        cells as usize
    }
}

/// Tóth's upper bound on the smallest pairwise chord among `count` points on
/// the unit sphere in three dimensions: `sqrt(4 − csc²(Nπ / (6(N − 2))))`.
pub fn toth_min_distance(count: usize) -> Result<f64> {
    if count < 3 {
        return Err(Error::OutOfRange {
            what: "point count for the Tóth bound",
            value: count as f64,
        });
    }
    let n = count as f64;
    let sin = libm::sin(n * PI / (6.0 * (n - 2.0)));
    Ok(libm::sqrt((4.0 - 1.0 / (sin * sin)).max(0.0)))
}

/// Best known minimal angles of spherical codes in one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCodeTable {
    pub dimension: usize,
    /// `(N, θ)` pairs, `θ` in radians, `N` strictly increasing and `θ`
    /// strictly decreasing.
    entries: Vec<(usize, f64)>,
}

impl SphericalCodeTable {
    pub fn new(dimension: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid("spherical-code table is empty"));
        }
        for pair in entries.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Invalid("spherical-code point counts must increase"));
            }
            if pair[1].1 >= pair[0].1 {
                return Err(Error::Invalid("spherical-code angles must decrease"));
            }
        }
        Ok(Self { dimension, entries })
    }

    /// Parses the text format: one `N<TAB>theta_degrees` entry per line,
    /// ascending `N`, `#` starts a comment, blank lines ignored.
    pub fn parse(dimension: usize, text: &str) -> core::result::Result<Self, TableParseError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || TableParseError { line: idx + 1 };
            let mut fields = line.split('\t');
            let count = fields
                .next()
                .ok_or_else(bad)?
                .trim()
                .parse::<usize>()
                .map_err(|_| bad())?;
            let degrees = fields
                .next()
                .ok_or_else(bad)?
                .trim()
                .parse::<f64>()
                .map_err(|_| bad())?;
            if fields.next().is_some() || !degrees.is_finite() || degrees <= 0.0 {
                return Err(bad());
            }
            entries.push((count, degrees.to_radians()));
        }
        Self::new(dimension, entries).map_err(|_| TableParseError { line: 0 })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Largest `N` the table admits for points with pairwise angles strictly
    /// above `theta`: one below the first listed `N` whose best angle is at
    /// most `theta`. `None` when every listed angle exceeds `theta`.
    pub fn max_points(&self, theta: f64) -> Option<usize> {
        self.entries
            .iter()
            .find(|&&(_, best)| best <= theta)
            .map(|&(count, _)| count.saturating_sub(1).max(1))
    }
}

/// Line of a spherical-code table that failed to parse (0 for an invalid
/// table as a whole).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableParseError {
    pub line: usize,
}

impl core::fmt::Display for TableParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.line == 0 {
            f.write_str("spherical-code table entries are not strictly ordered")
        } else {
            write!(f, "malformed spherical-code table entry on line {}", self.line)
        }
    }
}

/// Chords compare with this relative slack so that configurations meeting
/// the threshold exactly (the octahedron at `ε = 0`) are not lost to
/// rounding. The slack only loosens the bound.
const CHORD_SLACK: f64 = 1e-12;

fn toth_max_points(theta: f64, n: usize) -> usize {
    let chord = 2.0 * libm::sin(theta / 2.0);
    let feasible = |count: usize| toth_min_distance(count).is_ok_and(|d| d >= chord * (1.0 - CHORD_SLACK));
    if !feasible(3) {
        return 2;
    }
    let mut count = 3;
    while count < n && feasible(count + 1) {
        count += 1;
    }
    count
}

/// Upper bound on the number of clusters under the angle kernel.
///
/// Distinct clusters have pairwise angles above `θ* = arccos(ε)`, so their
/// number is limited by how many such directions fit on the sphere. `m = 2`
/// uses the circle (`⌊2π/θ*⌋`); `m = 3` inverts the Tóth bound unless a table
/// is given; higher dimensions need a table.
pub fn angle_cluster_bound(epsilon: f64, m: usize, n: usize, table: Option<&SphericalCodeTable>) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon,
        });
    }
    if m < 2 {
        return Err(Error::NoBound { dimension: m });
    }
    let theta = libm::acos(epsilon);
    if theta <= 0.0 {
        return Ok(n);
    }
    if let Some(table) = table {
        if table.dimension != m {
            return Err(Error::DimensionMismatch {
                what: "spherical-code table",
                expected: m,
                found: table.dimension,
            });
        }
        if let Some(count) = table.max_points(theta) {
            return Ok(count.min(n));
        }
    }
    match m {
        2 => {
            let count = libm::floor(2.0 * PI / theta);
            Ok(if count >= n as f64 { n } else { count as usize })
        }
        3 => Ok(toth_max_points(theta, n).min(n)),
        _ if table.is_some() => Ok(n),
        _ => Err(Error::NoBound { dimension: m }),
    }
}
