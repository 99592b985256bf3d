//! Evolutionary baseline: the whole open-loop control sequence is one
//! genome, scored by the negated horizon cost.

use alloc::vec::Vec;

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::control::{rollout, ControlConfig, ControlInput, Rollout};
use crate::error::{check_dim, Error, Result};
use crate::opinion::OpinionMatrix;
use crate::Rng;

/// Smallest gain in best fitness that counts as progress.
pub const IMPROVEMENT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EaConfig {
    pub population: usize,
    pub tournament: usize,
    /// Best individuals copied unchanged into the next generation.
    pub elites: usize,
    /// Probability that a gene is taken from the second parent.
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_std: f64,
    /// Generations without progress before stopping.
    pub patience: usize,
    pub max_generations: usize,
    pub seed: u64,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            tournament: 4,
            elites: 8,
            crossover_prob: 0.5,
            mutation_prob: 0.1,
            mutation_std: 0.1,
            patience: 50,
            max_generations: 1000,
            seed: 0,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Invalid("population needs at least two individuals"));
        }
        if self.tournament == 0 || self.tournament > self.population {
            return Err(Error::Invalid("tournament size must be in 1..=population"));
        }
        if self.elites >= self.population {
            return Err(Error::Invalid("elites must leave room for offspring"));
        }
        if self.patience == 0 {
            return Err(Error::Invalid("patience must be at least one generation"));
        }
        if self.max_generations == 0 {
            return Err(Error::Invalid("max_generations must be positive"));
        }
        for (what, p) in [
            ("crossover probability", self.crossover_prob),
            ("mutation probability", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange { what, value: p });
            }
        }
        if !(self.mutation_std >= 0.0 && self.mutation_std.is_finite()) {
            return Err(Error::OutOfRange {
                what: "mutation deviation",
                value: self.mutation_std,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// `U(0), …, U(N−1)` flattened row-major, entries in `[0, 1]`.
    pub genome: Vec<f64>,
    pub fitness: f64,
}

/// Genome length for a control problem.
pub fn genome_len(cfg: &ControlConfig) -> usize {
    cfg.horizon * cfg.n_e * cfg.m()
}

/// Splits a genome into the per-step controls.
pub fn decode(genome: &[f64], cfg: &ControlConfig) -> Result<Vec<ControlInput>> {
    check_dim("genome", genome_len(cfg), genome.len())?;
    genome
        .chunks_exact(cfg.n_e * cfg.m())
        .map(|chunk| ControlInput::new(cfg.n_e, cfg.m(), chunk.to_vec()))
        .collect()
}

/// Rollout of the open-loop sequence encoded by `genome`.
pub fn rollout_genome(genome: &[f64], x0: &OpinionMatrix, cfg: &ControlConfig) -> Result<Rollout> {
    let controls = decode(genome, cfg)?;
    rollout(x0, cfg, |k, _| Ok(controls[k].clone()))
}

/// `−J` of the rollout; higher is better.
pub fn fitness(genome: &[f64], x0: &OpinionMatrix, cfg: &ControlConfig) -> Result<f64> {
    Ok(-rollout_genome(genome, x0, cfg)?.cost)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EaOutcome {
    pub best: Individual,
    /// Best fitness after initialization and after every generation.
    pub history: Vec<f64>,
    /// Generations evolved.
    pub generations: usize,
    /// Stopped for lack of progress rather than by the generation cap.
    pub stagnated: bool,
}

fn tournament<'a>(pop: &'a [Individual], size: usize, rng: &mut Rng) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let other = &pop[rng.random_range(0..pop.len())];
        if other.fitness > best.fitness {
            best = other;
        }
    }
    best
}

/// Sorts best first; ties keep their previous order.
fn rank(pop: &mut [Individual]) {
    pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

/// Generational loop with elitism, tournament selection over the current
/// population, uniform crossover and clamped Gaussian mutation.
pub fn ea_optimize(x0: &OpinionMatrix, cfg: &ControlConfig, ea: &EaConfig) -> Result<EaOutcome> {
    ea.validate()?;
    let len = genome_len(cfg);
    let mut rng = Rng::seed_from_u64(ea.seed);
    let noise = Normal::new(0.0, ea.mutation_std).map_err(|_| Error::Invalid("invalid mutation deviation"))?;

    let mut pop = Vec::with_capacity(ea.population);
    for _ in 0..ea.population {
        let genome: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let fitness = fitness(&genome, x0, cfg)?;
        pop.push(Individual { genome, fitness });
    }
    rank(&mut pop);
    let mut history = alloc::vec![pop[0].fitness];
    let mut best_so_far = pop[0].fitness;
    let mut idle = 0;
    let mut generations = 0;
    let mut stagnated = false;

    while generations < ea.max_generations {
        let mut next: Vec<Individual> = pop[..ea.elites.max(1)].to_vec();
        while next.len() < ea.population {
            let first = tournament(&pop, ea.tournament, &mut rng);
            let second = tournament(&pop, ea.tournament, &mut rng);
            let genome: Vec<f64> = first
                .genome
                .iter()
                .zip(&second.genome)
                .map(|(&a, &b)| {
                    let mut gene = if rng.random::<f64>() < ea.crossover_prob { b } else { a };
                    if rng.random::<f64>() < ea.mutation_prob {
                        gene = (gene + noise.sample(&mut rng)).clamp(0.0, 1.0);
                    }
                    gene
                })
                .collect();
            let fitness = fitness(&genome, x0, cfg)?;
            next.push(Individual { genome, fitness });
        }
        rank(&mut next);
        pop = next;
        generations += 1;
        let best = pop[0].fitness;
        history.push(best);
        if best > best_so_far + IMPROVEMENT_THRESHOLD {
            idle = 0;
        } else {
            idle += 1;
        }
        best_so_far = best_so_far.max(best);
        if idle >= ea.patience {
            stagnated = true;
            break;
        }
    }
    Ok(EaOutcome {
        best: pop.swap_remove(0),
        history,
        generations,
        stagnated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Weighting;
    use crate::kernel::KernelConfig;
    use alloc::vec;

    fn one_user(kernel: KernelConfig, p_u: f64, horizon: usize) -> ControlConfig {
        ControlConfig::new(
            1,
            horizon,
            vec![0.7, 0.2],
            Weighting::scaled_identity(2, 1.0).unwrap(),
            Weighting::scaled_identity(2, p_u).unwrap(),
            kernel,
        )
        .unwrap()
    }

    #[test]
    fn disconnected_genome_at_target_scores_zero() {
        // radius 0: only identical opinions link
        let cfg = one_user(KernelConfig::distance(1.0).unwrap(), 0.0, 4);
        let x0 = OpinionMatrix::from_rows(&[[0.7, 0.2]]).unwrap();
        let genome = vec![0.1; genome_len(&cfg)];
        assert_eq!(fitness(&genome, &x0, &cfg).unwrap(), 0.0);
        assert!(fitness(&genome[1..], &x0, &cfg).is_err());
    }

    #[test]
    fn target_genome_beats_zero_genome() {
        let cfg = one_user(KernelConfig::distance(0.0).unwrap(), 0.01, 5);
        let x0 = OpinionMatrix::from_rows(&[[0.1, 0.9]]).unwrap();
        let zeros = vec![0.0; genome_len(&cfg)];
        let at_target: Vec<f64> = cfg.target().iter().copied().cycle().take(genome_len(&cfg)).collect();
        assert!(fitness(&at_target, &x0, &cfg).unwrap() > fitness(&zeros, &x0, &cfg).unwrap());
    }

    #[test]
    fn zero_cost_instance_stops_at_patience() {
        let cfg = one_user(KernelConfig::distance(1.0).unwrap(), 0.0, 3);
        let x0 = OpinionMatrix::from_rows(&[[0.7, 0.2]]).unwrap();
        let ea = EaConfig {
            population: 8,
            tournament: 2,
            elites: 2,
            patience: 5,
            ..Default::default()
        };
        let out = ea_optimize(&x0, &cfg, &ea).unwrap();
        assert!(out.stagnated);
        assert_eq!(out.generations, 5);
        assert_eq!(out.history, vec![0.0; 6]);
    }

    #[test]
    fn config_validation() {
        assert!(EaConfig::default().validate().is_ok());
        let bad = [
            EaConfig {
                population: 1,
                ..Default::default()
            },
            EaConfig {
                tournament: 65,
                ..Default::default()
            },
            EaConfig {
                patience: 0,
                ..Default::default()
            },
            EaConfig {
                mutation_prob: 1.5,
                ..Default::default()
            },
            EaConfig {
                elites: 64,
                ..Default::default()
            },
        ];
        assert!(bad.iter().all(|c| c.validate().is_err()));
    }
}
