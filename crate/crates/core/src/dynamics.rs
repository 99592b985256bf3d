//! The autonomous update law and its run-to-termination driver.

use alloc::vec;
use alloc::vec::Vec;

use crate::cluster;
use crate::error::{Error, Result};
use crate::kernel::{norm, Kernel, KernelConfig};
use crate::opinion::OpinionMatrix;

/// Default tolerance on the entry-wise opinion change used to detect
/// termination.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default step budget for [`simulate`].
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Row-stochastic `n × n` influence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Unnormalized connectivity matrix `S_ij = s(x_i, x_j)` with the self-loop
/// `S_ii = 1`.
pub fn similarity_matrix(x: &OpinionMatrix, cfg: &KernelConfig) -> Vec<f64> {
    let n = x.n();
    let norms: Vec<f64> = x.rows().map(norm).collect();
    let kernel = Kernel::new(cfg, x.m());
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        s[i * n + i] = kernel.self_loop();
        for j in (i + 1)..n {
            let v = kernel.pair(x.row(i), norms[i], x.row(j), norms[j]);
            s[i * n + j] = v;
            s[j * n + i] = v;
        }
    }
    s
}

/// Normalized weights `w_ij = s(x_i, x_j) / Σ_j s(x_i, x_j)`, sums over all
/// users including `i` itself.
pub fn weight_matrix(x: &OpinionMatrix, cfg: &KernelConfig) -> WeightMatrix {
    let n = x.n();
    let mut values = similarity_matrix(x, cfg);
    for row in values.chunks_exact_mut(n) {
        let total: f64 = row.iter().sum();
        assert!(total > 0.0, "self-loop guarantees a positive row sum");
        row.iter_mut().for_each(|w| *w /= total);
    }
    WeightMatrix { n, values }
}

/// One synchronous update `X(k+1) = diag(S·1)⁻¹ S X(k)`.
///
/// Each output row is `(Σ_j s_ij x_j) / (Σ_j s_ij)` accumulated left to right,
/// which keeps every entry inside `[0, 1]` in floating point as well and
/// leaves rows that only link to identical rows bit-identical.
pub fn step(x: &OpinionMatrix, cfg: &KernelConfig) -> OpinionMatrix {
    let s = similarity_matrix(x, cfg);
    apply_similarity(x, &s)
}

fn apply_similarity(x: &OpinionMatrix, s: &[f64]) -> OpinionMatrix {
    let (n, m) = (x.n(), x.m());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let weights = &s[i * n..(i + 1) * n];
        let acc = &mut out[i * m..(i + 1) * m];
        let mut total = 0.0;
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            total += w;
            for (a, &v) in acc.iter_mut().zip(x.row(j)) {
                *a += w * v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= total);
    }
    OpinionMatrix::from_convex(n, m, out)
}

/// Angle between `a` and `b` in `[0, π]`, or `None` when either is zero.
///
/// Uses `2·atan2(‖â − b̂‖, ‖â + b̂‖)` on the normalized vectors, which equals
/// `arccos(sim(a, b))` but stays accurate for nearly parallel vectors where
/// `arccos` amplifies rounding in the cosine.
pub fn angle_between(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Some(2.0 * libm::atan2(libm::sqrt(diff), libm::sqrt(sum)))
}

/// Largest pairwise angle among the nonzero opinions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diameter {
    pub radians: f64,
    /// Set when every row is zero and no angle is defined.
    pub degenerate: bool,
}

pub fn diameter(x: &OpinionMatrix) -> Diameter {
    let nonzero: Vec<&[f64]> = x.rows().filter(|r| norm(r) > 0.0).collect();
    let mut radians = 0.0_f64;
    for (i, a) in nonzero.iter().enumerate() {
        for b in &nonzero[i + 1..] {
            if let Some(theta) = angle_between(a, b) {
                radians = radians.max(theta);
            }
        }
    }
    Diameter {
        radians,
        degenerate: nonzero.is_empty(),
    }
}

/// Zero/nonzero pattern of the strict upper triangle of `S`.
pub fn link_pattern(x: &OpinionMatrix, cfg: &KernelConfig) -> Vec<bool> {
    let n = x.n();
    let s = similarity_matrix(x, cfg);
    let mut pattern = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pattern.push(s[i * n + j] > 0.0);
        }
    }
    pattern
}

/// Recorded evolution of the opinions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<OpinionMatrix>,
    /// Diameter of every snapshot, radians.
    pub diameters: Vec<f64>,
    /// Number of connected components of every snapshot.
    pub cluster_counts: Vec<usize>,
    pub terminated: bool,
    /// Index of the snapshot from which one more update changes neither the
    /// link pattern nor any entry by `tol` or more.
    pub termination_step: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> &OpinionMatrix {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub(crate) fn from_snapshots(snapshots: Vec<OpinionMatrix>, cfg: &KernelConfig) -> Self {
        let diameters = snapshots.iter().map(|x| diameter(x).radians).collect();
        let cluster_counts = snapshots.iter().map(|x| cluster::clusters(x, cfg).count).collect();
        Self {
            snapshots,
            diameters,
            cluster_counts,
            terminated: false,
            termination_step: None,
        }
    }
}

fn check_run_args(max_steps: usize, tol: f64) -> Result<()> {
    if max_steps == 0 {
        return Err(Error::Invalid("max_steps must be positive"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::OutOfRange {
            what: "tolerance",
            value: tol,
        });
    }
    Ok(())
}

fn settled(
    cur: &OpinionMatrix,
    next: &OpinionMatrix,
    cur_pattern: &mut Option<Vec<bool>>,
    cfg: &KernelConfig,
    tol: f64,
) -> bool {
    if next.max_abs_diff(cur) >= tol {
        *cur_pattern = None;
        return false;
    }
    let before = cur_pattern.take().unwrap_or_else(|| link_pattern(cur, cfg));
    let after = link_pattern(next, cfg);
    let same = before == after;
    *cur_pattern = Some(after);
    same
}

/// Iterates [`step`] until the link pattern is stable and the largest entry
/// change drops below `tol`, or `max_steps` updates have been applied.
///
/// Running out of steps is not an error; the trajectory is returned with
/// `terminated == false`.
pub fn simulate(x0: &OpinionMatrix, cfg: &KernelConfig, max_steps: usize, tol: f64) -> Result<Trajectory> {
    check_run_args(max_steps, tol)?;
    let mut snapshots = vec![x0.clone()];
    let mut pattern = None;
    let mut termination_step = None;
    for k in 0..max_steps {
        let cur = &snapshots[k];
        let next = step(cur, cfg);
        if settled(cur, &next, &mut pattern, cfg, tol) {
            termination_step = Some(k);
            break;
        }
        snapshots.push(next);
    }
    let mut trajectory = Trajectory::from_snapshots(snapshots, cfg);
    trajectory.terminated = termination_step.is_some();
    trajectory.termination_step = termination_step;
    Ok(trajectory)
}

/// Outcome of [`settle`].
#[derive(Debug, Clone, PartialEq)]
pub struct Settled {
    pub state: OpinionMatrix,
    /// Updates applied before termination (or the budget).
    pub steps: usize,
    pub terminated: bool,
}

/// Same stopping rule as [`simulate`] without recording the path.
pub fn settle(x0: &OpinionMatrix, cfg: &KernelConfig, max_steps: usize, tol: f64) -> Result<Settled> {
    check_run_args(max_steps, tol)?;
    let mut cur = x0.clone();
    let mut pattern = None;
    for k in 0..max_steps {
        let next = step(&cur, cfg);
        if settled(&cur, &next, &mut pattern, cfg, tol) {
            return Ok(Settled {
                state: cur,
                steps: k,
                terminated: true,
            });
        }
        cur = next;
    }
    Ok(Settled {
        state: cur,
        steps: max_steps,
        terminated: false,
    })
}
