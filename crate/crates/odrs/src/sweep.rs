//! Observed cluster counts against the theoretical bounds over an ε grid.

use std::path::Path;

use anyhow::{Context, Result};
use odrs_core::cluster::{angle_cluster_bound, clusters, distance_cluster_bound, DistanceBound, SphericalCodeTable};
use odrs_core::dynamics::{settle, DEFAULT_MAX_STEPS, DEFAULT_TOL};
use odrs_core::{KernelConfig, Method, OpinionMatrix, Rng};
use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub method: Method,
    pub epsilons: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub max_steps: usize,
    pub tol: f64,
    pub distance_bound: DistanceBound,
}

impl SweepConfig {
    pub fn new(method: Method, epsilons: Vec<f64>, n: usize, m: usize, trials: usize, seed: u64) -> Self {
        Self {
            method,
            epsilons,
            n,
            m,
            trials,
            seed,
            max_steps: DEFAULT_MAX_STEPS,
            tol: DEFAULT_TOL,
            distance_bound: DistanceBound::default(),
        }
    }
}

/// One grid point. `counts` holds every trial's final cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub counts: Vec<usize>,
    pub bound: usize,
    /// Trials that hit `max_steps` without settling.
    pub unsettled: usize,
}

impl SweepRow {
    pub fn observed(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.counts.len().max(1) as f64
    }
}

#[derive(Serialize)]
struct CsvRow {
    epsilon: f64,
    observed: usize,
    bound: usize,
}

/// `k/points` for `k = 1..=points`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|k| k as f64 / points as f64).collect()
}

/// Trial `t` draws the same initial opinions at every ε.
pub fn initial_opinions(seed: u64, trial: usize, n: usize, m: usize) -> OpinionMatrix {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let values = (0..n * m).map(|_| rng.random::<f64>()).collect();
    OpinionMatrix::new(n, m, values).expect("uniform draws lie in [0,1)")
}

pub fn bound_for(cfg: &SweepConfig, epsilon: f64, table: Option<&SphericalCodeTable>) -> Result<usize> {
    Ok(match cfg.method {
        Method::Distance => distance_cluster_bound(epsilon, cfg.m, cfg.n, cfg.distance_bound),
        Method::Angle => angle_cluster_bound(epsilon, cfg.m, cfg.n, table)?,
    })
}

pub fn run_sweep(cfg: &SweepConfig, table: Option<&SphericalCodeTable>) -> Result<Vec<SweepRow>> {
    let starts: Vec<OpinionMatrix> = (0..cfg.trials)
        .map(|t| initial_opinions(cfg.seed, t, cfg.n, cfg.m))
        .collect();
    cfg.epsilons
        .iter()
        .map(|&epsilon| {
            let kernel = KernelConfig::new(cfg.method, epsilon)?;
            let bound = bound_for(cfg, epsilon, table)?;
            let outcomes: Vec<(usize, bool)> = starts
                .par_iter()
                .map(|x0| {
                    let s = settle(x0, &kernel, cfg.max_steps, cfg.tol)?;
                    Ok((clusters(&s.state, &kernel).count, s.terminated))
                })
                .collect::<odrs_core::Result<_>>()?;
            Ok(SweepRow {
                epsilon,
                counts: outcomes.iter().map(|o| o.0).collect(),
                bound,
                unsettled: outcomes.iter().filter(|o| !o.1).count(),
            })
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    crate::export::write_csv(
        path,
        &["epsilon", "observed", "bound"],
        rows.iter().map(|r| CsvRow {
            epsilon: r.epsilon,
            observed: r.observed(),
            bound: r.bound,
        }),
    )
}

/// Reads a `N<TAB>degrees` spherical-code table for `dimension`.
pub fn load_spherical_table(path: &Path, dimension: usize) -> Result<SphericalCodeTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SphericalCodeTable::parse(dimension, &text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}
