//! Command-line front end. Every command writes its outputs and a
//! `run.json` record under `--out`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use odrs_core::cluster::clusters;
use odrs_core::control::{uncontrolled_rollout, ControlConfig, Rollout, EXEMPLAR_TARGET};
use odrs_core::dynamics::{diameter, simulate, DEFAULT_MAX_STEPS, DEFAULT_TOL};
use odrs_core::ea::{ea_optimize, rollout_genome, EaConfig};
use odrs_core::ppo::{evaluate_policy, ppo_train, FixedEpisode, PolicyParams, PpoConfig, UniformEpisodes};
use odrs_core::{KernelConfig, Method, OpinionMatrix, Rng};
use rand::SeedableRng;
use serde::Serialize;
use serde_json::json;

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::data::{densify, fixture, load_ratings_csv};
use crate::export::{export_run_json, export_trajectory_csv, output_path, write_csv, RunRecord};
use crate::sweep::{load_spherical_table, run_sweep, uniform_grid, write_sweep_csv, SweepConfig};

#[derive(Debug, Parser)]
#[command(
    name = "odrs",
    version,
    about = "Opinion dynamics under similarity-based recommendation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the autonomous dynamics from a ratings block until it settles.
    Simulate(SimulateArgs),
    /// Compare observed cluster counts with the theoretical bounds over an ε grid.
    Bounds(BoundsArgs),
    /// Train a PPO propagator policy.
    Train(TrainArgs),
    /// Roll a trained policy out on a ratings block.
    Evaluate(EvaluateArgs),
    /// Optimize an open-loop control sequence with the evolutionary baseline.
    Ea(EaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Distance,
    Angle,
}

impl From<KernelArg> for Method {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Distance => Method::Distance,
            KernelArg::Angle => Method::Angle,
        }
    }
}

fn kernel_name(k: KernelArg) -> &'static str {
    match k {
        KernelArg::Distance => "distance",
        KernelArg::Angle => "angle",
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// Ratings CSV with header `user_id,item_id,stars`.
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    /// Use the bundled synthetic ratings table.
    #[arg(long)]
    pub fixture: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BlockArgs {
    #[command(flatten)]
    pub source: InputArgs,
    /// Users in the dense block.
    #[arg(long)]
    pub users: Option<usize>,
    /// Items (opinion dimensions) in the dense block.
    #[arg(long, default_value_t = 3)]
    pub items: usize,
}

impl BlockArgs {
    fn describe(&self) -> String {
        match &self.source.input {
            Some(p) => p.display().to_string(),
            None => "fixture".into(),
        }
    }

    fn load(&self, default_users: usize) -> Result<OpinionMatrix> {
        let table = match &self.source.input {
            Some(p) => load_ratings_csv(p)?,
            None => fixture(),
        };
        Ok(densify(&table, self.users.unwrap_or(default_users), self.items)?.opinions)
    }
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Distance)]
    pub kernel: KernelArg,
    /// Similarity threshold ε in [0, 1].
    #[arg(long, conflicts_with = "radius")]
    pub epsilon: Option<f64>,
    /// Connection radius √m(1−ε); distance kernel only.
    #[arg(long)]
    pub radius: Option<f64>,
}

impl KernelArgs {
    fn resolve(&self, m: usize, default_epsilon: Option<f64>) -> Result<KernelConfig> {
        match (self.epsilon, self.radius, default_epsilon) {
            (_, Some(r), _) => {
                if self.kernel != KernelArg::Distance {
                    bail!("--radius applies to the distance kernel only");
                }
                Ok(KernelConfig::from_radius(r, m)?)
            }
            (Some(e), None, _) | (None, None, Some(e)) => Ok(KernelConfig::new(self.kernel.into(), e)?),
            (None, None, None) => bail!("one of --epsilon or --radius is required"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "ODRS_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Distance)]
    pub kernel: KernelArg,
    /// Grid of `k/points` for `k = 1..=points`.
    #[arg(long, default_value_t = 20, conflicts_with = "epsilons")]
    pub points: usize,
    /// Explicit comma-separated ε values.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, default_value_t = 50)]
    pub users: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Spherical-code table (`N<TAB>degrees` lines) for the angle bound.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ControlArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    /// Desired opinion, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = EXEMPLAR_TARGET)]
    pub target: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub propagators: usize,
}

impl ControlArgs {
    fn config(&self) -> Result<ControlConfig> {
        let m = self.target.len();
        let kernel = self.kernel.resolve(m, Some(0.2))?;
        Ok(ControlConfig::with_default_weights(
            self.propagators,
            self.horizon,
            self.target.clone(),
            kernel,
        )?)
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct TrainSource {
    /// Train on the dense block of this ratings CSV.
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    /// Train on the bundled synthetic ratings table.
    #[arg(long)]
    pub fixture: bool,
    /// Draw opinions and target uniformly from the unit cube every episode.
    #[arg(long)]
    pub uniform: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: TrainSource,
    #[command(flatten)]
    pub control: ControlArgs,
    /// Users the policy is trained for.
    #[arg(long, default_value_t = 8)]
    pub users: usize,
    /// Defaults to 10000 for the distance kernel and 3000 for the angle kernel.
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub actor_lr: Option<f64>,
    #[arg(long)]
    pub critic_lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub entropy: Option<f64>,
    #[arg(long)]
    pub reward_scale: Option<f64>,
    /// Observe only opinions and target, without the remaining-horizon fraction.
    #[arg(long)]
    pub no_time_feature: bool,
    /// Checkpoint file name inside `--out`.
    #[arg(long, default_value = "checkpoint.json")]
    pub checkpoint: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub control: ControlArgs,
    /// Sample actions instead of applying the mean.
    #[arg(long)]
    pub stochastic: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EaArgs {
    #[command(flatten)]
    pub block: BlockArgs,
    #[command(flatten)]
    pub control: ControlArgs,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub tournament: Option<usize>,
    #[arg(long)]
    pub elites: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_generations: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Ea(a) => cmd_ea(&a),
    }
}

fn record(
    command: &str,
    input: String,
    kernel: KernelArg,
    cfg: &KernelConfig,
    x: (usize, usize),
    seed: u64,
) -> RunRecord {
    RunRecord {
        command: command.into(),
        input,
        kernel: kernel_name(kernel).into(),
        epsilon: Some(cfg.epsilon()),
        n: x.0,
        m: x.1,
        seed: Some(seed),
        ..Default::default()
    }
}

fn finish(mut rec: RunRecord, started: Instant, out: &Path) -> Result<()> {
    rec.duration_secs = started.elapsed().as_secs_f64();
    rec.outputs.insert("record".into(), "run.json".into());
    export_run_json(&rec, &output_path(out, "run.json")?)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let x0 = a.block.load(14)?;
    let cfg = a.kernel.resolve(x0.m(), None)?;
    let traj = simulate(&x0, &cfg, a.max_steps, a.tol)?;
    let last = traj.last();
    let parts = clusters(last, &cfg);
    let d = diameter(last);

    export_trajectory_csv(&traj.snapshots, &output_path(&a.run.out, "trajectory.csv")?)?;
    let mut rec = record(
        "simulate",
        a.block.describe(),
        a.kernel.kernel,
        &cfg,
        (x0.n(), x0.m()),
        a.run.seed,
    );
    rec.parameters.insert("max_steps".into(), json!(a.max_steps));
    rec.parameters.insert("tol".into(), json!(a.tol));
    rec.outputs.insert("trajectory".into(), "trajectory.csv".into());
    rec.cluster_counts = traj.cluster_counts.clone();
    rec.metrics.insert("final_clusters".into(), parts.count as f64);
    rec.metrics.insert("final_diameter".into(), d.radians);
    rec.metrics.insert("steps".into(), (traj.len() - 1) as f64);
    rec.metrics
        .insert("terminated".into(), f64::from(u8::from(traj.terminated)));
    finish(rec, started, &a.run.out)?;

    println!("clusters: {}", parts.count);
    println!("diameter: {:.6} rad", d.radians);
    match traj.termination_step {
        Some(k) => println!("settled at step {k}"),
        None => println!("not settled after {} steps", a.max_steps),
    }
    Ok(())
}

pub fn cmd_bounds(a: &BoundsArgs) -> Result<()> {
    let started = Instant::now();
    let epsilons = a.epsilons.clone().unwrap_or_else(|| uniform_grid(a.points));
    let table = a.table.as_deref().map(|p| load_spherical_table(p, a.dim)).transpose()?;
    let mut cfg = SweepConfig::new(a.kernel.into(), epsilons, a.users, a.dim, a.trials, a.run.seed);
    cfg.max_steps = a.max_steps;
    cfg.tol = a.tol;
    let rows = run_sweep(&cfg, table.as_ref())?;
    write_sweep_csv(&rows, &output_path(&a.run.out, "bounds.csv")?)?;

    let mut rec = RunRecord {
        command: "bounds".into(),
        input: "uniform".into(),
        kernel: kernel_name(a.kernel).into(),
        epsilon: None,
        n: a.users,
        m: a.dim,
        seed: Some(a.run.seed),
        ..Default::default()
    };
    rec.parameters.insert("epsilons".into(), json!(cfg.epsilons));
    rec.parameters.insert("trials".into(), json!(a.trials));
    rec.parameters.insert("max_steps".into(), json!(a.max_steps));
    rec.parameters.insert("tol".into(), json!(a.tol));
    if let Some(t) = &a.table {
        rec.parameters.insert("table".into(), json!(t.display().to_string()));
    }
    rec.outputs.insert("bounds".into(), "bounds.csv".into());
    let violations = rows.iter().filter(|r| r.observed() > r.bound).count();
    rec.metrics.insert("violations".into(), violations as f64);
    rec.metrics.insert(
        "unsettled".into(),
        rows.iter().map(|r| r.unsettled).sum::<usize>() as f64,
    );
    finish(rec, started, &a.run.out)?;

    println!("epsilon,observed,bound");
    for r in &rows {
        println!("{},{},{}", r.epsilon, r.observed(), r.bound);
    }
    if violations > 0 {
        bail!("{violations} grid points exceed their bound");
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    episode: usize,
    reward: f64,
    running_average: f64,
    initial_value: f64,
}

pub fn default_episodes(kernel: KernelArg) -> usize {
    match kernel {
        KernelArg::Distance => 10_000,
        KernelArg::Angle => 3_000,
    }
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let started = Instant::now();
    let control = a.control.config()?;
    let d = PpoConfig::default();
    let ppo = PpoConfig {
        episodes: a.episodes.unwrap_or_else(|| default_episodes(a.control.kernel.kernel)),
        gamma: a.gamma.unwrap_or(d.gamma),
        gae_lambda: a.lambda.unwrap_or(d.gae_lambda),
        clip_ratio: a.clip.unwrap_or(d.clip_ratio),
        actor_lr: a.actor_lr.unwrap_or(d.actor_lr),
        critic_lr: a.critic_lr.unwrap_or(d.critic_lr),
        epochs: a.epochs.unwrap_or(d.epochs),
        entropy_coef: a.entropy.unwrap_or(d.entropy_coef),
        reward_scale: a.reward_scale.unwrap_or(d.reward_scale),
        time_feature: !a.no_time_feature,
        seed: a.run.seed,
        ..d
    };
    let (input, result) = if a.source.uniform {
        let mut source = UniformEpisodes {
            n: a.users,
            m: control.m(),
        };
        ("uniform".to_owned(), ppo_train(&mut source, &ppo, &control))
    } else {
        let block = BlockArgs {
            source: InputArgs {
                input: a.source.input.clone(),
                fixture: a.source.fixture,
            },
            users: Some(a.users),
            items: control.m(),
        };
        let x0 = block.load(a.users)?;
        let mut source = FixedEpisode {
            x0,
            target: control.target().to_vec(),
        };
        (block.describe(), ppo_train(&mut source, &ppo, &control))
    };
    let (policy, curve) = result?;

    let ckpt_path = output_path(&a.run.out, &a.checkpoint)?;
    save_checkpoint(&Checkpoint::new(&policy, a.users, control.m(), control.n_e), &ckpt_path)?;
    write_csv(
        &output_path(&a.run.out, "training_curve.csv")?,
        &["episode", "reward", "running_average", "initial_value"],
        (0..curve.len()).map(|k| CurveRow {
            episode: k,
            reward: curve.episode_reward[k],
            running_average: curve.running_average[k],
            initial_value: curve.initial_value[k],
        }),
    )?;

    let mut rec = record(
        "train",
        input,
        a.control.kernel.kernel,
        &control.kernel,
        (a.users, control.m()),
        a.run.seed,
    );
    control_parameters(&mut rec, &control);
    rec.parameters.insert("ppo".into(), ppo_json(&ppo));
    rec.outputs.insert("checkpoint".into(), a.checkpoint.clone());
    rec.outputs.insert("training_curve".into(), "training_curve.csv".into());
    let last = curve.running_average.last().copied().unwrap_or(f64::NAN);
    rec.metrics.insert("final_running_average".into(), last);
    finish(rec, started, &a.run.out)?;

    println!("episodes: {}", curve.len());
    println!("final running average reward: {last:.4}");
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let started = Instant::now();
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let users = ckpt.users;
    let policy: PolicyParams = ckpt
        .into_policy()
        .with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let x0 = a.block.load(users)?;
    let control = a.control.config()?;
    let mut rng = Rng::seed_from_u64(a.run.seed);
    let r = evaluate_policy(&policy, &x0, &control, !a.stochastic, &mut rng)?;

    let mut rec = record(
        "evaluate",
        a.block.describe(),
        a.control.kernel.kernel,
        &control.kernel,
        (x0.n(), x0.m()),
        a.run.seed,
    );
    control_parameters(&mut rec, &control);
    rec.parameters
        .insert("checkpoint".into(), json!(a.checkpoint.display().to_string()));
    rec.parameters.insert("stochastic".into(), json!(a.stochastic));
    write_rollout(&mut rec, &r, &x0, &control, &a.run.out)?;
    finish(rec, started, &a.run.out)?;
    print_rollout(&r);
    Ok(())
}

#[derive(Serialize)]
struct FitnessRow {
    generation: usize,
    best_fitness: f64,
}

#[derive(Serialize)]
struct ControlRow {
    k: usize,
    propagator: usize,
    dim: usize,
    value: f64,
}

pub fn cmd_ea(a: &EaArgs) -> Result<()> {
    let started = Instant::now();
    let x0 = a.block.load(8)?;
    let control = a.control.config()?;
    let d = EaConfig::default();
    let ea = EaConfig {
        population: a.population.unwrap_or(d.population),
        tournament: a.tournament.unwrap_or(d.tournament),
        elites: a.elites.unwrap_or(d.elites),
        patience: a.patience.unwrap_or(d.patience),
        max_generations: a.max_generations.unwrap_or(d.max_generations),
        seed: a.run.seed,
        ..d
    };
    let outcome = ea_optimize(&x0, &control, &ea)?;
    let r = rollout_genome(&outcome.best.genome, &x0, &control)?;

    write_csv(
        &output_path(&a.run.out, "fitness_history.csv")?,
        &["generation", "best_fitness"],
        outcome
            .history
            .iter()
            .enumerate()
            .map(|(generation, &best_fitness)| FitnessRow {
                generation,
                best_fitness,
            }),
    )?;
    let mut rec = record(
        "ea",
        a.block.describe(),
        a.control.kernel.kernel,
        &control.kernel,
        (x0.n(), x0.m()),
        a.run.seed,
    );
    control_parameters(&mut rec, &control);
    rec.parameters.insert(
        "ea".into(),
        json!({
            "population": ea.population,
            "tournament": ea.tournament,
            "elites": ea.elites,
            "crossover_prob": ea.crossover_prob,
            "mutation_prob": ea.mutation_prob,
            "mutation_std": ea.mutation_std,
            "patience": ea.patience,
            "max_generations": ea.max_generations,
        }),
    );
    rec.outputs.insert("best_genome".into(), "best_genome.csv".into());
    rec.outputs
        .insert("fitness_history".into(), "fitness_history.csv".into());
    rec.metrics.insert("generations".into(), outcome.generations as f64);
    rec.metrics
        .insert("stagnated".into(), f64::from(u8::from(outcome.stagnated)));
    rec.metrics.insert("best_fitness".into(), outcome.best.fitness);
    write_controls(&r, &output_path(&a.run.out, "best_genome.csv")?)?;
    write_rollout(&mut rec, &r, &x0, &control, &a.run.out)?;
    finish(rec, started, &a.run.out)?;

    println!(
        "generations: {} ({})",
        outcome.generations,
        if outcome.stagnated {
            "stagnated"
        } else {
            "budget exhausted"
        }
    );
    print_rollout(&r);
    Ok(())
}

fn control_parameters(rec: &mut RunRecord, c: &ControlConfig) {
    rec.parameters.insert("horizon".into(), json!(c.horizon));
    rec.parameters.insert("propagators".into(), json!(c.n_e));
    rec.parameters.insert("target".into(), json!(c.target()));
    rec.parameters.insert("p_x".into(), json!(c.p_x.as_slice()));
    rec.parameters.insert("p_u".into(), json!(c.p_u.as_slice()));
}

fn ppo_json(p: &PpoConfig) -> serde_json::Value {
    json!({
        "episodes": p.episodes,
        "gamma": p.gamma,
        "gae_lambda": p.gae_lambda,
        "clip_ratio": p.clip_ratio,
        "actor_lr": p.actor_lr,
        "critic_lr": p.critic_lr,
        "epochs": p.epochs,
        "entropy_coef": p.entropy_coef,
        "max_grad_norm": p.max_grad_norm,
        "normalize_advantages": p.normalize_advantages,
        "episodes_per_update": p.episodes_per_update,
        "reward_scale": p.reward_scale,
        "time_feature": p.time_feature,
        "initial_std": p.initial_std,
        "hidden": p.hidden,
    })
}

fn write_controls(r: &Rollout, path: &Path) -> Result<()> {
    let rows = r.controls.iter().enumerate().flat_map(|(k, u)| {
        (0..u.n_e()).flat_map(move |e| {
            u.row(e).iter().enumerate().map(move |(dim, &value)| ControlRow {
                k,
                propagator: e,
                dim,
                value,
            })
        })
    });
    write_csv(path, &["k", "propagator", "dim", "value"], rows)
}

/// Trajectory, controls and the uncontrolled comparison.
fn write_rollout(
    rec: &mut RunRecord,
    r: &Rollout,
    x0: &OpinionMatrix,
    control: &ControlConfig,
    out: &Path,
) -> Result<()> {
    export_trajectory_csv(&r.trajectory.snapshots, &output_path(out, "trajectory.csv")?)?;
    write_controls(r, &output_path(out, "controls.csv")?)?;
    let base = uncontrolled_rollout(x0, control)?;
    rec.outputs.insert("trajectory".into(), "trajectory.csv".into());
    rec.outputs.insert("controls".into(), "controls.csv".into());
    rec.cluster_counts = r.trajectory.cluster_counts.clone();
    rec.cost = Some(r.cost);
    rec.avg_deviation = Some(r.avg_deviation);
    rec.metrics.insert("uncontrolled_cost".into(), base.cost);
    rec.metrics
        .insert("uncontrolled_avg_deviation".into(), base.avg_deviation);
    Ok(())
}

fn print_rollout(r: &Rollout) {
    println!("cost: {:.6}", r.cost);
    println!("average deviation: {:.6}", r.avg_deviation);
}

/// Parses arguments and runs; usage errors exit 2, runtime errors 1.
pub fn main_with_args<I, T>(args: I) -> std::process::ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return std::process::ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::from(1)
        }
    }
}
