//! Propagator-controlled dynamics and the receding-horizon tracking cost.
//!
//! Propagators are exogenous agents whose opinions `U` are the control input.
//! The recommender treats them exactly like users when computing similarity,
//! but they are never influenced back.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{diameter, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::kernel::{norm, Kernel, KernelConfig};
use crate::opinion::OpinionMatrix;

/// Target used in the reference manipulation experiment.
pub const EXEMPLAR_TARGET: [f64; 3] = [0.8147, 0.9058, 0.1270];

/// Opinions of the `n_e` propagators, one row each, entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlInput {
    n_e: usize,
    m: usize,
    values: Vec<f64>,
}

impl ControlInput {
    pub fn new(n_e: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        check_dim("control values", n_e * m, values.len())?;
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "control entry",
                value: bad,
            });
        }
        Ok(Self { n_e, m, values })
    }

    pub fn zeros(n_e: usize, m: usize) -> Self {
        Self {
            n_e,
            m,
            values: vec![0.0; n_e * m],
        }
    }

    /// Every propagator holds `row`.
    pub fn repeated(n_e: usize, row: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(n_e * row.len());
        for _ in 0..n_e {
            values.extend_from_slice(row);
        }
        Self::new(n_e, row.len(), values)
    }

    /// Clamps arbitrary reals into `[0, 1]`; non-finite values map to 0.5.
    pub fn clamped(n_e: usize, m: usize, raw: &[f64]) -> Result<Self> {
        check_dim("control values", n_e * m, raw.len())?;
        let values = raw
            .iter()
            .map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.5 })
            .collect();
        Ok(Self { n_e, m, values })
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Square weighting matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Weighting {
    m: usize,
    values: Vec<f64>,
}

impl Weighting {
    /// Validates symmetry and positive semidefiniteness.
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        check_dim("weighting matrix", m * m, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("weighting matrix has non-finite entries"));
        }
        for i in 0..m {
            for j in 0..i {
                let (a, b) = (values[i * m + j], values[j * m + i]);
                if libm::fabs(a - b) > 1e-12 * (1.0 + libm::fabs(a).max(libm::fabs(b))) {
                    return Err(Error::Invalid("weighting matrix is not symmetric"));
                }
            }
        }
        if !is_psd(m, &values) {
            return Err(Error::Invalid("weighting matrix is not positive semidefinite"));
        }
        Ok(Self { m, values })
    }

    pub fn scaled_identity(m: usize, scale: f64) -> Result<Self> {
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            values[i * m + i] = scale;
        }
        Self::new(m, values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `vᵀ P v`.
    #[inline]
    pub fn quadratic(&self, v: &[f64]) -> f64 {
        let m = self.m;
        let mut total = 0.0;
        for i in 0..m {
            let row = &self.values[i * m..(i + 1) * m];
            let pv: f64 = row.iter().zip(v).map(|(p, x)| p * x).sum();
            total += v[i] * pv;
        }
        total
    }
}

/// Diagonal dominance settles most cases; otherwise a Cholesky factorization
/// of `P + δI` with a scale-relative `δ` decides.
fn is_psd(m: usize, p: &[f64]) -> bool {
    let dominant = (0..m).all(|i| {
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| libm::fabs(p[i * m + j])).sum();
        p[i * m + i] >= off
    });
    if dominant {
        return true;
    }
    let scale = p.iter().fold(0.0_f64, |a, v| a.max(libm::fabs(*v)));
    let delta = 1e-12 * scale.max(1.0);
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut sum = p[i * m + j] + if i == j { delta } else { 0.0 };
            for k in 0..j {
                sum -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                l[i * m + i] = libm::sqrt(sum);
            } else {
                l[i * m + j] = sum / l[j * m + j];
            }
        }
    }
    true
}

/// Everything that defines one manipulation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlConfig {
    pub n_e: usize,
    pub horizon: usize,
    target: Vec<f64>,
    pub p_x: Weighting,
    pub p_u: Weighting,
    pub kernel: KernelConfig,
}

impl ControlConfig {
    pub fn new(
        n_e: usize,
        horizon: usize,
        target: Vec<f64>,
        p_x: Weighting,
        p_u: Weighting,
        kernel: KernelConfig,
    ) -> Result<Self> {
        if n_e == 0 {
            return Err(Error::Invalid("at least one propagator is required"));
        }
        if horizon == 0 {
            return Err(Error::Invalid("horizon must be positive"));
        }
        if target.is_empty() {
            return Err(Error::Invalid("target opinion is empty"));
        }
        if let Some(&bad) = target.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "target entry",
                value: bad,
            });
        }
        check_dim("tracking weight", target.len(), p_x.m())?;
        check_dim("control weight", target.len(), p_u.m())?;
        Ok(Self {
            n_e,
            horizon,
            target,
            p_x,
            p_u,
            kernel,
        })
    }

    /// Identity tracking weight and `0.1·I` control weight.
    pub fn with_default_weights(n_e: usize, horizon: usize, target: Vec<f64>, kernel: KernelConfig) -> Result<Self> {
        let m = target.len();
        Self::new(
            n_e,
            horizon,
            target,
            Weighting::scaled_identity(m, 1.0)?,
            Weighting::scaled_identity(m, 0.1)?,
            kernel,
        )
    }

    pub fn m(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Same problem aimed at another target.
    pub fn retarget(&self, target: &[f64]) -> Result<Self> {
        Self::new(
            self.n_e,
            self.horizon,
            target.to_vec(),
            self.p_x.clone(),
            self.p_u.clone(),
            self.kernel,
        )
    }

    fn check_state(&self, x: &OpinionMatrix) -> Result<()> {
        check_dim("opinion dimension", self.m(), x.m())
    }

    fn check_control(&self, u: &ControlInput) -> Result<()> {
        check_dim("propagator count", self.n_e, u.n_e())?;
        check_dim("control dimension", self.m(), u.m())
    }
}

/// Weights of users (`n × n`) and propagators (`n × n_e`), each row of
/// `[W_x | W_u]` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedWeights {
    pub n: usize,
    pub n_e: usize,
    pub users: Vec<f64>,
    pub propagators: Vec<f64>,
}

/// Row `i` holds `s(x_i, ·)` over users then propagators; the shared
/// denominator is accumulated in that order.
fn extended_similarity(x: &OpinionMatrix, u: &ControlInput, kernel: &KernelConfig) -> (Vec<f64>, Vec<f64>) {
    let (n, n_e) = (x.n(), u.n_e());
    let user_norms: Vec<f64> = x.rows().map(norm).collect();
    let prop_norms: Vec<f64> = (0..n_e).map(|j| norm(u.row(j))).collect();
    let k = Kernel::new(kernel, x.m());
    let mut su = vec![0.0; n * n];
    let mut sp = vec![0.0; n * n_e];
    for i in 0..n {
        su[i * n + i] = k.self_loop();
        for j in (i + 1)..n {
            let v = k.pair(x.row(i), user_norms[i], x.row(j), user_norms[j]);
            su[i * n + j] = v;
            su[j * n + i] = v;
        }
        for j in 0..n_e {
            sp[i * n_e + j] = k.pair(x.row(i), user_norms[i], u.row(j), prop_norms[j]);
        }
    }
    (su, sp)
}

pub fn extended_weights(x: &OpinionMatrix, u: &ControlInput, kernel: &KernelConfig) -> Result<ExtendedWeights> {
    check_dim("control dimension", x.m(), u.m())?;
    let (n, n_e) = (x.n(), u.n_e());
    let (mut users, mut propagators) = extended_similarity(x, u, kernel);
    for i in 0..n {
        let urow = &mut users[i * n..(i + 1) * n];
        let prow = &mut propagators[i * n_e..(i + 1) * n_e];
        let total: f64 = urow.iter().sum::<f64>() + prow.iter().sum::<f64>();
        urow.iter_mut().for_each(|w| *w /= total);
        prow.iter_mut().for_each(|w| *w /= total);
    }
    Ok(ExtendedWeights {
        n,
        n_e,
        users,
        propagators,
    })
}

/// `X' = W_x X + W_u U`, evaluated as one normalized weighted sum per user.
pub fn controlled_step(x: &OpinionMatrix, u: &ControlInput, kernel: &KernelConfig) -> Result<OpinionMatrix> {
    check_dim("control dimension", x.m(), u.m())?;
    let (n, m, n_e) = (x.n(), x.m(), u.n_e());
    let (su, sp) = extended_similarity(x, u, kernel);
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let acc = &mut out[i * m..(i + 1) * m];
        let mut total = 0.0;
        let sources = (0..n)
            .map(|j| (su[i * n + j], x.row(j)))
            .chain((0..n_e).map(|j| (sp[i * n_e + j], u.row(j))));
        for (w, row) in sources {
            if w == 0.0 {
                continue;
            }
            total += w;
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += w * v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= total);
    }
    Ok(OpinionMatrix::from_convex(n, m, out))
}

/// `tr(E P_x Eᵀ) + tr(U P_u Uᵀ)` with `E = X − 1·x_cᵀ`: the cost incurred at
/// one step. Both the trajectory cost and the reward go through here.
fn stage_cost(x: &OpinionMatrix, u_prev: &ControlInput, cfg: &ControlConfig) -> f64 {
    let target = cfg.target();
    let mut err = vec![0.0; cfg.m()];
    let mut tracking = 0.0;
    for row in x.rows() {
        for (e, (v, c)) in err.iter_mut().zip(row.iter().zip(target)) {
            *e = v - c;
        }
        tracking += cfg.p_x.quadratic(&err);
    }
    let mut effort = 0.0;
    for j in 0..u_prev.n_e() {
        effort += cfg.p_u.quadratic(u_prev.row(j));
    }
    tracking + effort
}

/// Reward `r(k) = −tr(E(k) P_x E(k)ᵀ) − tr(U(k−1) P_u U(k−1)ᵀ)`, so that the
/// horizon cost is exactly the negated sum of rewards.
pub fn reward(x: &OpinionMatrix, u_prev: &ControlInput, cfg: &ControlConfig) -> Result<f64> {
    cfg.check_state(x)?;
    cfg.check_control(u_prev)?;
    Ok(-stage_cost(x, u_prev, cfg))
}

/// `J = Σ_k Σ_i (x_i(k) − x_c)ᵀ P_x (x_i(k) − x_c) + Σ_k Σ_j u_j(k)ᵀ P_u u_j(k)`
/// over `X(1..=N)` and `U(0..N)`.
pub fn trajectory_cost(snapshots: &[OpinionMatrix], controls: &[ControlInput], cfg: &ControlConfig) -> Result<f64> {
    check_dim("snapshot count", cfg.horizon, snapshots.len())?;
    check_dim("control count", cfg.horizon, controls.len())?;
    let mut total = 0.0;
    for (x, u) in snapshots.iter().zip(controls) {
        cfg.check_state(x)?;
        cfg.check_control(u)?;
        total += stage_cost(x, u, cfg);
    }
    Ok(total)
}

/// Mean over users and steps `k = 1..=N` of `‖x_i(k) − x_c‖`.
pub fn average_deviation(snapshots: &[OpinionMatrix], target: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for x in snapshots {
        for row in x.rows() {
            let d2: f64 = row.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
            total += libm::sqrt(d2);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Stepwise environment over one horizon.
#[derive(Debug, Clone)]
pub struct ManipulationEnv {
    cfg: ControlConfig,
    state: OpinionMatrix,
    step_index: usize,
    last_control: ControlInput,
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: OpinionMatrix,
    pub reward: f64,
    pub done: bool,
}

impl ManipulationEnv {
    pub fn new(cfg: ControlConfig, x0: OpinionMatrix) -> Result<Self> {
        cfg.check_state(&x0)?;
        let last_control = ControlInput::zeros(cfg.n_e, cfg.m());
        Ok(Self {
            cfg,
            state: x0,
            step_index: 0,
            last_control,
        })
    }

    pub fn config(&self) -> &ControlConfig {
        &self.cfg
    }

    pub fn state(&self) -> &OpinionMatrix {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn last_control(&self) -> &ControlInput {
        &self.last_control
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.cfg.horizon
    }

    /// Applies `U(k)`, yielding `X(k+1)` and `r(k+1)`.
    pub fn step(&mut self, u: ControlInput) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::Invalid("episode already reached its horizon"));
        }
        self.cfg.check_control(&u)?;
        let next = controlled_step(&self.state, &u, &self.cfg.kernel)?;
        let r = -stage_cost(&next, &u, &self.cfg);
        self.state = next;
        self.last_control = u;
        self.step_index += 1;
        Ok(Transition {
            state: self.state.clone(),
            reward: r,
            done: self.is_done(),
        })
    }
}

/// A full horizon rolled out under some control sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// `X(0..=N)`, with diameters and cluster counts for plotting.
    pub trajectory: Trajectory,
    /// `U(0..N)`.
    pub controls: Vec<ControlInput>,
    /// `r(1..=N)`.
    pub rewards: Vec<f64>,
    pub cost: f64,
    pub avg_deviation: f64,
}

/// Rolls out `policy(k, X(k)) -> U(k)` for the configured horizon.
pub fn rollout<F>(x0: &OpinionMatrix, cfg: &ControlConfig, mut policy: F) -> Result<Rollout>
where
    F: FnMut(usize, &OpinionMatrix) -> Result<ControlInput>,
{
    let mut env = ManipulationEnv::new(cfg.clone(), x0.clone())?;
    let mut snapshots = Vec::with_capacity(cfg.horizon + 1);
    snapshots.push(x0.clone());
    let mut controls = Vec::with_capacity(cfg.horizon);
    let mut rewards = Vec::with_capacity(cfg.horizon);
    let mut cost = 0.0;
    while !env.is_done() {
        let u = policy(env.step_index(), env.state())?;
        let t = env.step(u.clone())?;
        cost += -t.reward;
        rewards.push(t.reward);
        controls.push(u);
        snapshots.push(t.state);
    }
    let avg_deviation = average_deviation(&snapshots[1..], cfg.target());
    Ok(Rollout {
        trajectory: Trajectory::from_snapshots(snapshots, &cfg.kernel),
        controls,
        rewards,
        cost,
        avg_deviation,
    })
}

/// The same horizon without propagators: users follow the autonomous law.
pub fn uncontrolled_rollout(x0: &OpinionMatrix, cfg: &ControlConfig) -> Result<Rollout> {
    cfg.check_state(x0)?;
    let mut snapshots = Vec::with_capacity(cfg.horizon + 1);
    snapshots.push(x0.clone());
    let zero = ControlInput::zeros(cfg.n_e, cfg.m());
    let mut rewards = Vec::with_capacity(cfg.horizon);
    let mut cost = 0.0;
    for k in 0..cfg.horizon {
        let next = crate::dynamics::step(&snapshots[k], &cfg.kernel);
        let c = stage_cost(&next, &zero, cfg);
        cost += c;
        rewards.push(-c);
        snapshots.push(next);
    }
    let avg_deviation = average_deviation(&snapshots[1..], cfg.target());
    Ok(Rollout {
        trajectory: Trajectory::from_snapshots(snapshots, &cfg.kernel),
        controls: vec![zero; cfg.horizon],
        rewards,
        cost,
        avg_deviation,
    })
}

/// Diameter of the final state of a rollout, for reporting.
pub fn final_diameter(r: &Rollout) -> f64 {
    diameter(r.trajectory.last()).radians
}
