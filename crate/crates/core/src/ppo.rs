//! Proximal policy optimization of the propagator opinions.
//!
//! The agent observes the flattened user opinions followed by the target,
//! emits a Gaussian over the `n_e·m` propagator entries and is trained with
//! the clipped surrogate objective on one episode (one horizon) per update,
//! using generalized advantage estimation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::control::{rollout, ControlConfig, ControlInput, ManipulationEnv, Rollout};
use crate::error::{check_dim, Error, Result};
use crate::nn::{clip_grad, Actor, ActorCache, Adam, Critic, Layers, HIDDEN};
use crate::opinion::OpinionMatrix;
use crate::Rng;

/// Row-major flattening of `X` followed by the target.
pub fn observe(x: &OpinionMatrix, target: &[f64]) -> Result<Vec<f64>> {
    check_dim("target dimension", x.m(), target.len())?;
    let mut obs = Vec::with_capacity(x.n() * x.m() + target.len());
    obs.extend_from_slice(x.as_slice());
    obs.extend_from_slice(target);
    Ok(obs)
}

/// [`observe`] plus the fraction of the horizon still ahead, `1 − k/N`.
pub fn observe_step(x: &OpinionMatrix, target: &[f64], k: usize, horizon: usize) -> Result<Vec<f64>> {
    let mut obs = observe(x, target)?;
    obs.push(1.0 - k as f64 / horizon as f64);
    Ok(obs)
}

/// Observation length for `n` users in `m` dimensions.
pub fn observation_dim(n: usize, m: usize) -> usize {
    n * m + m
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_ratio: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Gradient passes over each episode's batch.
    pub epochs: usize,
    pub entropy_coef: f64,
    /// Gradient norm cap applied before every optimizer step.
    pub max_grad_norm: Option<f64>,
    /// Standardize advantages within each batch.
    pub normalize_advantages: bool,
    /// Append the remaining-horizon fraction to every observation.
    pub time_feature: bool,
    /// Episodes collected into one batch before the update.
    pub episodes_per_update: usize,
    /// Multiplier on rewards before advantages and critic targets are
    /// formed; the training curve keeps the raw rewards.
    pub reward_scale: f64,
    /// Episodes averaged by the running reward in the training curve.
    pub average_window: usize,
    /// Exploration deviation of a freshly initialized actor; `None` keeps
    /// the plain layer initialization.
    pub initial_std: Option<f64>,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            gamma: 1.0,
            gae_lambda: 0.95,
            clip_ratio: 0.2,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            epochs: 4,
            entropy_coef: 0.0,
            max_grad_norm: Some(0.5),
            normalize_advantages: true,
            time_feature: true,
            episodes_per_update: 1,
            reward_scale: 0.05,
            average_window: 100,
            initial_std: Some(0.1),
            hidden: HIDDEN,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let range = |what, ok: bool, value: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::OutOfRange { what, value })
            }
        };
        range("episodes", self.episodes > 0, self.episodes as f64)?;
        range("gamma", self.gamma > 0.0 && self.gamma <= 1.0, self.gamma)?;
        range("GAE lambda", (0.0..=1.0).contains(&self.gae_lambda), self.gae_lambda)?;
        range("clip ratio", self.clip_ratio > 0.0, self.clip_ratio)?;
        range("actor learning rate", self.actor_lr > 0.0, self.actor_lr)?;
        range("critic learning rate", self.critic_lr > 0.0, self.critic_lr)?;
        range("epochs", self.epochs > 0, self.epochs as f64)?;
        range("entropy coefficient", self.entropy_coef >= 0.0, self.entropy_coef)?;
        range(
            "episodes per update",
            self.episodes_per_update > 0,
            self.episodes_per_update as f64,
        )?;
        range(
            "reward scale",
            self.reward_scale > 0.0 && self.reward_scale.is_finite(),
            self.reward_scale,
        )?;
        range("average window", self.average_window > 0, self.average_window as f64)?;
        range("hidden width", self.hidden > 0, self.hidden as f64)?;
        if let Some(g) = self.max_grad_norm {
            range("max gradient norm", g > 0.0, g)?;
        }
        if let Some(s) = self.initial_std {
            range("initial deviation", s > 0.0 && s.is_finite(), s)?;
        }
        Ok(())
    }
}

/// Trained actor and critic.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub actor: Actor,
    pub critic: Critic,
    /// Observations carry the remaining-horizon fraction (see
    /// [`observe_step`]).
    pub time_feature: bool,
}

impl PolicyParams {
    /// Freshly initialized networks for `n` users, `n_e` propagators and
    /// `m`-dimensional opinions.
    pub fn init(n: usize, m: usize, n_e: usize, hidden: usize, time_feature: bool, rng: &mut Rng) -> Self {
        let obs = observation_dim(n, m) + usize::from(time_feature);
        Self {
            actor: Actor::new(obs, hidden, n_e * m, rng),
            critic: Critic::new(obs, hidden, rng),
            time_feature,
        }
    }

    pub fn from_networks(actor: Actor, critic: Critic, time_feature: bool) -> Result<Self> {
        check_dim("critic observation", actor.obs_dim(), critic.obs_dim())?;
        Ok(Self {
            actor,
            critic,
            time_feature,
        })
    }

    /// Observation of `x` at step `k` of a `horizon`-step episode.
    pub fn observe(&self, x: &OpinionMatrix, target: &[f64], k: usize, horizon: usize) -> Result<Vec<f64>> {
        if self.time_feature {
            observe_step(x, target, k, horizon)
        } else {
            observe(x, target)
        }
    }

    /// Users this policy was built for in `m` dimensions.
    pub fn obs_len(&self, n: usize, m: usize) -> usize {
        observation_dim(n, m) + usize::from(self.time_feature)
    }
}

/// Per-episode training statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingCurve {
    pub episode_reward: Vec<f64>,
    pub running_average: Vec<f64>,
    /// Critic's estimate for the episode's initial state before the update, in
    /// reward units.
    pub initial_value: Vec<f64>,
}

impl TrainingCurve {
    pub fn len(&self) -> usize {
        self.episode_reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episode_reward.is_empty()
    }
}

/// A Gaussian draw and its feasible control.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    /// Pre-clamp sample; the log-probability refers to this.
    pub raw: Vec<f64>,
    pub log_prob: f64,
    pub control: ControlInput,
}

/// `log N(raw; mean, diag(std²))`.
pub fn log_prob(raw: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    let half_ln_2pi = 0.5 * libm::log(2.0 * PI);
    raw.iter()
        .zip(mean.iter().zip(std))
        .map(|(&a, (&mu, &s))| {
            let z = (a - mu) / s;
            -0.5 * z * z - libm::log(s) - half_ln_2pi
        })
        .sum()
}

/// Draws every component from `N(mean, std²)` and clamps into `[0, 1]`,
/// reshaped to `n_e × m`.
pub fn sample_action(mean: &[f64], std: &[f64], n_e: usize, m: usize, rng: &mut Rng) -> Result<SampledAction> {
    check_dim("action mean", n_e * m, mean.len())?;
    check_dim("action deviation", n_e * m, std.len())?;
    let raw: Vec<f64> = mean
        .iter()
        .zip(std)
        .map(|(&mu, &s)| {
            let z: f64 = StandardNormal.sample(rng);
            mu + s * z
        })
        .collect();
    let log_prob = log_prob(&raw, mean, std);
    let control = ControlInput::clamped(n_e, m, &raw)?;
    Ok(SampledAction { raw, log_prob, control })
}

/// One stored transition of the on-policy batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub obs: Vec<f64>,
    pub raw_action: Vec<f64>,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Generalized advantage estimates and the matching returns
/// `A_t + V(s_t)`; the state after the last reward has value 0.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let len = rewards.len();
    let mut adv = vec![0.0; len];
    let mut running = 0.0;
    for t in (0..len).rev() {
        let next = if t + 1 < len { values[t + 1] } else { 0.0 };
        let delta = rewards[t] + gamma * next - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

fn normalize(values: &mut [f64]) {
    let n = values.len() as f64;
    if values.len() < 2 {
        return;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if std > 1e-8 {
        values.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
}

/// Clipped surrogate loss (negated, averaged) minus the entropy bonus
/// `β · mean Σ ln σ`.
pub fn actor_loss(actor: &Actor, batch: &[Sample], clip: f64, entropy_coef: f64) -> Result<f64> {
    let mut total = 0.0;
    for s in batch {
        let c = actor.forward_cached(&s.obs)?;
        total += sample_actor_loss(&c, s, clip, entropy_coef).0;
    }
    Ok(total / batch.len() as f64)
}

/// Loss of one sample and its derivative with respect to the log-probability
/// (zero once the ratio is clipped).
fn sample_actor_loss(c: &ActorCache, s: &Sample, clip: f64, entropy_coef: f64) -> (f64, f64) {
    let lp = log_prob(&s.raw_action, &c.mean, &c.std);
    let ratio = libm::exp(lp - s.old_log_prob);
    let unclipped = ratio * s.advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * s.advantage;
    let entropy: f64 = c.std.iter().map(|&v| libm::log(v)).sum();
    let (surrogate, dlp) = if unclipped <= clipped {
        (unclipped, -unclipped)
    } else {
        (clipped, 0.0)
    };
    (-surrogate - entropy_coef * entropy, dlp)
}

/// Loss and gradient of [`actor_loss`].
pub fn actor_loss_grad(actor: &Actor, batch: &[Sample], clip: f64, entropy_coef: f64) -> Result<(f64, Actor)> {
    let mut grad = actor.zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let a = actor.action_dim();
    let mut total = 0.0;
    let mut dmean = vec![0.0; a];
    let mut dstd = vec![0.0; a];
    for s in batch {
        let c = actor.forward_cached(&s.obs)?;
        let (loss, dlp) = sample_actor_loss(&c, s, clip, entropy_coef);
        total += loss;
        for k in 0..a {
            let sd = c.std[k];
            let diff = s.raw_action[k] - c.mean[k];
            dmean[k] = scale * dlp * diff / (sd * sd);
            dstd[k] = scale * (dlp * (diff * diff / (sd * sd * sd) - 1.0 / sd) - entropy_coef / sd);
        }
        actor.backward(&c, &dmean, &dstd, &mut grad);
    }
    Ok((total * scale, grad))
}

/// Mean squared error between predicted values and returns.
pub fn critic_loss(critic: &Critic, batch: &[Sample]) -> Result<f64> {
    let mut total = 0.0;
    for s in batch {
        let e = critic.forward(&s.obs)? - s.ret;
        total += e * e;
    }
    Ok(total / batch.len() as f64)
}

pub fn critic_loss_grad(critic: &Critic, batch: &[Sample]) -> Result<(f64, Critic)> {
    let mut grad = critic.zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for s in batch {
        let c = critic.forward_cached(&s.obs)?;
        let e = c.value - s.ret;
        total += e * e;
        critic.backward(&c, 2.0 * scale * e, &mut grad);
    }
    Ok((total * scale, grad))
}

/// Supplies the initial opinions and target of every training episode.
pub trait EpisodeSource {
    fn users(&self) -> usize;
    fn dimension(&self) -> usize;
    fn sample(&mut self, rng: &mut Rng) -> (OpinionMatrix, Vec<f64>);
}

/// Opinions and target drawn uniformly from the unit cube every episode.
#[derive(Debug, Clone, Copy)]
pub struct UniformEpisodes {
    pub n: usize,
    pub m: usize,
}

impl EpisodeSource for UniformEpisodes {
    fn users(&self) -> usize {
        self.n
    }

    fn dimension(&self) -> usize {
        self.m
    }

    fn sample(&mut self, rng: &mut Rng) -> (OpinionMatrix, Vec<f64>) {
        let values = (0..self.n * self.m).map(|_| rng.random::<f64>()).collect();
        let target = (0..self.m).map(|_| rng.random::<f64>()).collect();
        let x0 = OpinionMatrix::new(self.n, self.m, values).expect("uniform draws lie in [0,1)");
        (x0, target)
    }
}

/// The same initial state and target every episode.
#[derive(Debug, Clone)]
pub struct FixedEpisode {
    pub x0: OpinionMatrix,
    pub target: Vec<f64>,
}

impl EpisodeSource for FixedEpisode {
    fn users(&self) -> usize {
        self.x0.n()
    }

    fn dimension(&self) -> usize {
        self.x0.m()
    }

    fn sample(&mut self, _rng: &mut Rng) -> (OpinionMatrix, Vec<f64>) {
        (self.x0.clone(), self.target.clone())
    }
}

/// Collects one episode with the current policy. Returns the batch (with
/// advantages filled in), the episode reward and the initial value estimate.
fn collect_episode(
    policy: &PolicyParams,
    x0: OpinionMatrix,
    cfg: &ControlConfig,
    ppo: &PpoConfig,
    rng: &mut Rng,
    episode: usize,
) -> Result<(Vec<Sample>, f64, f64)> {
    let target = cfg.target().to_vec();
    let mut env = ManipulationEnv::new(cfg.clone(), x0)?;
    let mut batch = Vec::with_capacity(cfg.horizon);
    let mut rewards = Vec::with_capacity(cfg.horizon);
    let mut values = Vec::with_capacity(cfg.horizon);
    while !env.is_done() {
        let obs = policy.observe(env.state(), &target, env.step_index(), cfg.horizon)?;
        let (mean, std) = policy.actor.forward(&obs)?;
        values.push(policy.critic.forward(&obs)?);
        let action = sample_action(&mean, &std, cfg.n_e, cfg.m(), rng)?;
        let t = env.step(action.control)?;
        if !t.reward.is_finite() {
            return Err(Error::Diverged { episode });
        }
        rewards.push(t.reward);
        batch.push(Sample {
            obs,
            raw_action: action.raw,
            old_log_prob: action.log_prob,
            advantage: 0.0,
            ret: 0.0,
        });
    }
    let total = rewards.iter().sum();
    rewards.iter_mut().for_each(|r| *r *= ppo.reward_scale);
    let (adv, returns) = gae(&rewards, &values, ppo.gamma, ppo.gae_lambda);
    for ((s, a), r) in batch.iter_mut().zip(adv).zip(returns) {
        s.advantage = a;
        s.ret = r;
    }
    Ok((batch, total, values[0] / ppo.reward_scale))
}

/// Trains a fresh policy for `ppo.episodes` episodes. The target in
/// `control` is replaced by the one each episode draws.
pub fn ppo_train<S: EpisodeSource>(
    source: &mut S,
    ppo: &PpoConfig,
    control: &ControlConfig,
) -> Result<(PolicyParams, TrainingCurve)> {
    ppo.validate()?;
    check_dim("episode dimension", control.m(), source.dimension())?;
    let mut rng = Rng::seed_from_u64(ppo.seed);
    let mut policy = PolicyParams::init(
        source.users(),
        control.m(),
        control.n_e,
        ppo.hidden,
        ppo.time_feature,
        &mut rng,
    );
    if let Some(s) = ppo.initial_std {
        policy.actor.set_initial_std(s);
    }
    let mut actor_opt = Adam::new(ppo.actor_lr, policy.actor.param_count());
    let mut critic_opt = Adam::new(ppo.critic_lr, policy.critic.param_count());
    let mut curve = TrainingCurve::default();
    let mut window_sum = 0.0;

    let mut episode = 0;
    while episode < ppo.episodes {
        let count = ppo.episodes_per_update.min(ppo.episodes - episode);
        let mut batch = Vec::with_capacity(count * control.horizon);
        for _ in 0..count {
            let (x0, target) = source.sample(&mut rng);
            let cfg = control.retarget(&target)?;
            let (samples, total, v0) = collect_episode(&policy, x0, &cfg, ppo, &mut rng, episode)?;
            batch.extend(samples);

            curve.episode_reward.push(total);
            window_sum += total;
            if episode >= ppo.average_window {
                window_sum -= curve.episode_reward[episode - ppo.average_window];
            }
            let len = (episode + 1).min(ppo.average_window);
            curve.running_average.push(window_sum / len as f64);
            curve.initial_value.push(v0);
            episode += 1;
        }
        if ppo.normalize_advantages {
            let mut adv: Vec<f64> = batch.iter().map(|s| s.advantage).collect();
            normalize(&mut adv);
            batch.iter_mut().zip(adv).for_each(|(s, a)| s.advantage = a);
        }

        for _ in 0..ppo.epochs {
            let (_, mut g) = actor_loss_grad(&policy.actor, &batch, ppo.clip_ratio, ppo.entropy_coef)?;
            if let Some(max) = ppo.max_grad_norm {
                clip_grad(&mut g, max);
            }
            actor_opt.step(&mut policy.actor, &g);
            let (_, mut g) = critic_loss_grad(&policy.critic, &batch)?;
            if let Some(max) = ppo.max_grad_norm {
                clip_grad(&mut g, max);
            }
            critic_opt.step(&mut policy.critic, &g);
        }
        if !policy.actor.all_finite() || !policy.critic.all_finite() {
            return Err(Error::Diverged { episode: episode - 1 });
        }
    }
    Ok((policy, curve))
}

/// Rolls the policy through one horizon from `x0`. With `deterministic` the
/// mean action is applied; otherwise actions are sampled from `rng`.
pub fn evaluate_policy(
    policy: &PolicyParams,
    x0: &OpinionMatrix,
    control: &ControlConfig,
    deterministic: bool,
    rng: &mut Rng,
) -> Result<Rollout> {
    check_dim(
        "policy observation",
        policy.actor.obs_dim(),
        policy.obs_len(x0.n(), x0.m()),
    )?;
    check_dim("policy action", policy.actor.action_dim(), control.n_e * control.m())?;
    let target = control.target().to_vec();
    rollout(x0, control, |k, x| {
        let obs = policy.observe(x, &target, k, control.horizon)?;
        let (mean, std) = policy.actor.forward(&obs)?;
        if deterministic {
            ControlInput::clamped(control.n_e, control.m(), &mean)
        } else {
            Ok(sample_action(&mean, &std, control.n_e, control.m(), rng)?.control)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::EXEMPLAR_TARGET;
    use crate::kernel::KernelConfig;

    #[test]
    fn observation_layout() {
        let x = OpinionMatrix::new(8, 3, (0..24).map(|i| i as f64 / 24.0).collect()).unwrap();
        let obs = observe(&x, &EXEMPLAR_TARGET).unwrap();
        assert_eq!(obs.len(), 27);
        assert_eq!(observation_dim(8, 3), 27);
        assert_eq!(&obs[..24], x.as_slice());
        assert_eq!(OpinionMatrix::new(8, 3, obs[..24].to_vec()).unwrap(), x);
        assert_eq!(&obs[24..], &EXEMPLAR_TARGET);

        let zero = OpinionMatrix::zeros(8, 3).unwrap();
        assert!(observe(&zero, &[0.0; 3]).unwrap().iter().all(|&v| v == 0.0));
        assert!(observe(&zero, &[0.0; 2]).is_err());
    }

    #[test]
    fn vanishing_deviation_returns_the_mean() {
        let mut rng = Rng::seed_from_u64(5);
        let mean = [0.1, 0.5, 0.9, 0.3];
        let a = sample_action(&mean, &[1e-300; 4], 2, 2, &mut rng).unwrap();
        assert_eq!(a.control.as_slice(), &mean);
    }

    #[test]
    fn sampling_is_seeded() {
        let draw = |seed| {
            let mut rng = Rng::seed_from_u64(seed);
            sample_action(&[0.5; 6], &[0.3; 6], 2, 3, &mut rng).unwrap()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
        let a = draw(13);
        assert!(a.control.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn gae_with_unit_lambda_gives_reward_to_go() {
        let rewards = [-1.0, -2.0, -3.0];
        let values = [0.5, -0.5, 1.0];
        let (adv, ret) = gae(&rewards, &values, 1.0, 1.0);
        assert_eq!(ret, vec![-6.0, -5.0, -3.0]);
        assert_eq!(adv, vec![-6.5, -4.5, -4.0]);
        let (adv0, _) = gae(&rewards, &values, 1.0, 0.0);
        // one-step residuals
        assert_eq!(adv0, vec![-1.0 - 0.5 - 0.5, -2.0 + 1.0 + 0.5, -3.0 - 1.0]);
    }

    #[test]
    fn log_prob_of_standard_normal_at_zero() {
        let lp = log_prob(&[0.0], &[0.0], &[1.0]);
        assert!((lp + 0.5 * libm::log(2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(PpoConfig::default().validate().is_ok());
        let bad = PpoConfig {
            gamma: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PpoConfig {
            clip_ratio: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_episode_training_yields_one_curve_point() {
        let control =
            ControlConfig::with_default_weights(2, 5, EXEMPLAR_TARGET.to_vec(), KernelConfig::distance(0.2).unwrap())
                .unwrap();
        let ppo = PpoConfig {
            episodes: 1,
            hidden: 16,
            ..Default::default()
        };
        let (policy, curve) = ppo_train(&mut UniformEpisodes { n: 4, m: 3 }, &ppo, &control).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve.running_average, curve.episode_reward);
        assert_eq!(policy.actor.obs_dim(), policy.obs_len(4, 3));
        assert_eq!(policy.obs_len(4, 3), 16);
        assert_eq!(policy.actor.action_dim(), 6);
    }
}
