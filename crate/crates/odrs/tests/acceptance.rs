//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints its verdict; exits non-zero if any fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use odrs::data::{densify, fixture};
use odrs::sweep::{run_sweep, uniform_grid, SweepConfig};
use odrs_core::cluster::clusters;
use odrs_core::control::{
    controlled_step, extended_weights, rollout, trajectory_cost, uncontrolled_rollout, ControlConfig, ControlInput,
    EXEMPLAR_TARGET,
};
use odrs_core::dynamics::{diameter, simulate, step};
use odrs_core::ea::{ea_optimize, EaConfig};
use odrs_core::ppo::{
    actor_loss, actor_loss_grad, critic_loss, critic_loss_grad, evaluate_policy, ppo_train, sample_action,
    FixedEpisode, PolicyParams, PpoConfig, Sample,
};
use odrs_core::{KernelConfig, Method, OpinionMatrix, Rng};
use rand::{Rng as _, SeedableRng};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_matrix(rng: &mut Rng, n: usize, m: usize) -> OpinionMatrix {
    OpinionMatrix::new(n, m, (0..n * m).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn random_kernel(rng: &mut Rng) -> KernelConfig {
    let method = if rng.random::<bool>() {
        Method::Angle
    } else {
        Method::Distance
    };
    KernelConfig::new(method, rng.random::<f64>()).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn forward_invariance() -> Verdict {
    let t = Instant::now();
    let mut rng = Rng::seed_from_u64(101);
    let mut bad = 0;
    for _ in 0..1000 {
        let (n, m) = (rng.random_range(1..=20), rng.random_range(1..=5));
        let cfg = random_kernel(&mut rng);
        let mut x = random_matrix(&mut rng, n, m);
        for _ in 0..100 {
            x = step(&x, &cfg);
            if !x.as_slice().iter().all(|v| (0.0..=1.0).contains(v)) {
                bad += 1;
                break;
            }
        }
    }
    let el = t.elapsed();
    verdict(
        bad == 0 && el < Duration::from_secs(10),
        format!("{bad} violating runs, {}", secs(el)),
    )
}

fn diameter_monotone() -> Verdict {
    let t = Instant::now();
    let mut rng = Rng::seed_from_u64(102);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..500 {
        let (n, m) = (rng.random_range(2..=20), rng.random_range(2..=5));
        let mut x = random_matrix(&mut rng, n, m);
        while (0..n).any(|i| x.row(i).iter().all(|&v| v == 0.0)) {
            x = random_matrix(&mut rng, n, m);
        }
        let cfg = KernelConfig::angle(rng.random()).unwrap();
        let mut d = diameter(&x).radians;
        for _ in 0..50 {
            x = step(&x, &cfg);
            let next = diameter(&x).radians;
            worst = worst.max(next - d);
            d = next;
        }
    }
    let el = t.elapsed();
    verdict(
        worst <= 1e-12 && el < Duration::from_secs(10),
        format!("largest increase {worst:.3e}, {}", secs(el)),
    )
}

fn termination() -> Verdict {
    let mut rng = Rng::seed_from_u64(103);
    let mut failed = 0;
    let mut longest = 0;
    for eps in [0.3, 0.6, 0.9] {
        let cfg = KernelConfig::distance(eps).unwrap();
        for _ in 0..100 {
            let x = random_matrix(&mut rng, 50, 3);
            let t = simulate(&x, &cfg, 10_000, 1e-9).unwrap();
            match t.termination_step {
                Some(k) if t.terminated => longest = longest.max(k),
                _ => failed += 1,
            }
        }
    }
    verdict(
        failed == 0,
        format!("{failed} runs unterminated, slowest settled at step {longest}"),
    )
}

fn frozen_network() -> Verdict {
    let x0 = densify(&fixture(), 14, 3).unwrap().opinions;
    let on_grid = x0.as_slice().iter().all(|v| (v * 4.0).fract() == 0.0);
    let cfg = KernelConfig::from_radius(0.1, 3).unwrap();
    let mut x = x0.clone();
    let mut changed = 0;
    for _ in 0..100 {
        x = step(&x, &cfg);
        changed += usize::from(x != x0);
    }
    let count = clusters(&x0, &cfg).count;
    verdict(
        on_grid && changed == 0,
        format!(
            "{changed} of 100 steps differ from X(0), {count} clusters among {} users",
            x0.n()
        ),
    )
}

fn consensus() -> Verdict {
    let x0 = densify(&fixture(), 14, 3).unwrap().opinions;
    let rows = oracle::rows(&x0);
    let widest = rows
        .iter()
        .flat_map(|a| {
            rows.iter()
                .map(move |b| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
        })
        .fold(0.0, f64::max);
    let cfg = KernelConfig::from_radius(0.9, 3).unwrap();
    let t = simulate(&x0, &cfg, 10_000, 1e-12).unwrap();
    let last = t.last();
    let count = clusters(last, &cfg).count;
    let spread = (0..last.n())
        .flat_map(|i| (0..last.n()).map(move |j| (i, j)))
        .map(|(i, j)| {
            last.row(i)
                .iter()
                .zip(last.row(j))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    verdict(
        widest <= 0.9 && count == 1 && spread < 1e-8,
        format!("initial width {widest:.3}, {count} cluster(s), spread {spread:.2e}"),
    )
}

/// Spearman correlation with average ranks for ties.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut s = 0;
        while s < idx.len() {
            let mut e = s;
            while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[s]] {
                e += 1;
            }
            for &k in &idx[s..=e] {
                r[k] = (s + e) as f64 / 2.0;
            }
            s = e + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn bound_dominance() -> Verdict {
    let t = Instant::now();
    let grid = uniform_grid(20);
    let mut pass = true;
    let mut notes = Vec::new();
    for method in [Method::Distance, Method::Angle] {
        let rows = run_sweep(&SweepConfig::new(method, grid.clone(), 50, 3, 100, 106), None).unwrap();
        let violations: usize = rows
            .iter()
            .map(|r| r.counts.iter().filter(|&&c| c > r.bound).count())
            .sum();
        let unsettled: usize = rows.iter().map(|r| r.unsettled).sum();
        let monotone = rows.windows(2).all(|w| w[0].bound <= w[1].bound);
        let means: Vec<f64> = rows.iter().map(|r| r.mean()).collect();
        let rho = spearman(&grid, &means);
        pass &= violations == 0 && monotone && rho > 0.0;
        notes.push(format!(
            "{method:?}: {violations} violations, {unsettled} unsettled, bound monotone {monotone}, rho {rho:.3}"
        ));
    }
    let el = t.elapsed();
    notes.push(secs(el));
    verdict(pass && el < Duration::from_secs(300), notes.join("; "))
}

/// Random samples kept at least `KINK_MARGIN` away from every ReLU corner
/// and clip boundary, where the losses are not differentiable.
fn batch(policy: &PolicyParams, clip: f64, rng: &mut Rng, len: usize) -> Vec<Sample> {
    const KINK_MARGIN: f64 = 1e-3;
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let obs: Vec<f64> = (0..policy.actor.obs_dim()).map(|_| rng.random()).collect();
        let corners = oracle::actor_preactivations(&policy.actor, &obs)
            .into_iter()
            .chain(oracle::critic_preactivations(&policy.critic, &obs));
        if corners.map(f64::abs).fold(f64::INFINITY, f64::min) < KINK_MARGIN {
            continue;
        }
        let (mean, std) = policy.actor.forward(&obs).unwrap();
        let a = sample_action(&mean, &std, 2, 3, rng).unwrap();
        let shift: f64 = rng.random_range(-0.5..0.5);
        let ratio = (-shift).exp();
        if (ratio - (1.0 - clip)).abs() < KINK_MARGIN || (ratio - (1.0 + clip)).abs() < KINK_MARGIN {
            continue;
        }
        out.push(Sample {
            obs,
            raw_action: a.raw,
            old_log_prob: a.log_prob + shift,
            advantage: rng.random_range(-2.0..2.0),
            ret: rng.random_range(-3.0..3.0),
        });
    }
    out
}

fn gradients() -> Verdict {
    let mut worst: f64 = 0.0;
    for b in 0..10u64 {
        let mut rng = Rng::seed_from_u64(700 + b);
        let policy = PolicyParams::init(8, 3, 2, 256, true, &mut rng);
        let samples = batch(&policy, 0.2, &mut rng, 8);
        let (_, g) = actor_loss_grad(&policy.actor, &samples, 0.2, 0.01).unwrap();
        let e = oracle::fd_max_rel_error(
            &policy.actor,
            &g,
            |a| actor_loss(a, &samples, 0.2, 0.01).unwrap(),
            1e-4,
            1e-6,
        );
        worst = worst.max(e);
        let (_, g) = critic_loss_grad(&policy.critic, &samples).unwrap();
        let e = oracle::fd_max_rel_error(&policy.critic, &g, |c| critic_loss(c, &samples).unwrap(), 1e-4, 1e-6);
        worst = worst.max(e);
    }
    verdict(worst <= 1e-4, format!("max relative error {worst:.2e}"))
}

fn duality() -> Verdict {
    let mut rng = Rng::seed_from_u64(108);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (n, horizon, n_e) = (
            rng.random_range(1..=12),
            rng.random_range(1..=25),
            rng.random_range(1..=3),
        );
        let target: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let cfg = ControlConfig::with_default_weights(n_e, horizon, target, random_kernel(&mut rng)).unwrap();
        let x0 = random_matrix(&mut rng, n, 3);
        let mut draw = rng.clone();
        let r = rollout(&x0, &cfg, |_, _| {
            ControlInput::new(n_e, 3, (0..n_e * 3).map(|_| draw.random()).collect())
        })
        .unwrap();
        rng = draw;
        let j = trajectory_cost(&r.trajectory.snapshots[1..], &r.controls, &cfg).unwrap();
        worst = worst.max((j + r.rewards.iter().sum::<f64>()).abs());
    }
    verdict(worst <= 1e-10, format!("largest gap {worst:.2e}"))
}

fn manipulation_config(method: Method) -> ControlConfig {
    let kernel = KernelConfig::new(method, 0.2).unwrap();
    ControlConfig::with_default_weights(2, 20, EXEMPLAR_TARGET.to_vec(), kernel).unwrap()
}

fn manipulation() -> Verdict {
    let x0 = densify(&fixture(), 8, 3).unwrap().opinions;
    let mut pass = true;
    let mut notes = Vec::new();
    for (method, episodes) in [(Method::Distance, 10_000), (Method::Angle, 3_000)] {
        let cfg = manipulation_config(method);
        let baseline = uncontrolled_rollout(&x0, &cfg).unwrap().avg_deviation;

        let t = Instant::now();
        let ea = ea_optimize(&x0, &cfg, &EaConfig::default()).unwrap();
        let ea_time = t.elapsed();
        let ea_dev = odrs_core::ea::rollout_genome(&ea.best.genome, &x0, &cfg)
            .unwrap()
            .avg_deviation;

        let t = Instant::now();
        let ppo = PpoConfig {
            episodes,
            ..Default::default()
        };
        let mut source = FixedEpisode {
            x0: x0.clone(),
            target: EXEMPLAR_TARGET.to_vec(),
        };
        let (policy, _) = ppo_train(&mut source, &ppo, &cfg).unwrap();
        let ppo_time = t.elapsed();
        let mut rng = Rng::seed_from_u64(0);
        let ppo_dev = evaluate_policy(&policy, &x0, &cfg, true, &mut rng)
            .unwrap()
            .avg_deviation;

        let limit = 0.7 * baseline;
        pass &= ppo_dev <= 0.20 && ea_dev <= 0.20;
        pass &= ppo_dev <= limit && ea_dev <= limit;
        pass &= ea.stagnated && ea.generations <= 1000;
        pass &= ea_time < Duration::from_secs(120) && ppo_time < Duration::from_secs(1800);
        notes.push(format!(
            "{method:?}: baseline {baseline:.4}, ppo {ppo_dev:.4} ({episodes} episodes, {}), ea {ea_dev:.4} ({} generations, stagnated {}, {})",
            secs(ppo_time),
            ea.generations,
            ea.stagnated,
            secs(ea_time),
        ));
    }

    let cfg = manipulation_config(Method::Distance);
    let ppo = PpoConfig {
        episodes: 500,
        ..Default::default()
    };
    let mut source = FixedEpisode {
        x0,
        target: EXEMPLAR_TARGET.to_vec(),
    };
    let (_, curve) = ppo_train(&mut source, &ppo, &cfg).unwrap();
    let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first = avg(&curve.episode_reward[..100]);
    let last = avg(&curve.episode_reward[400..]);
    pass &= last > first;
    notes.push(format!("smoke: first 100 mean {first:.2}, last 100 mean {last:.2}"));
    verdict(pass, notes.join("; "))
}

fn elitism() -> Verdict {
    let x0 = densify(&fixture(), 8, 3).unwrap().opinions;
    let mut drops = 0;
    for seed in 0..20u64 {
        let method = if seed % 2 == 0 { Method::Distance } else { Method::Angle };
        let ea = EaConfig {
            seed,
            ..Default::default()
        };
        let out = ea_optimize(&x0, &manipulation_config(method), &ea).unwrap();
        drops += out.history.windows(2).filter(|w| w[1] < w[0]).count();
    }
    verdict(drops == 0, format!("{drops} decreases over 20 runs"))
}

fn oracle_equivalence() -> Verdict {
    let mut rng = Rng::seed_from_u64(111);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (n, m, n_e) = (
            rng.random_range(1..=4),
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        );
        let cfg = random_kernel(&mut rng);
        let x = random_matrix(&mut rng, n, m);
        let u = ControlInput::new(n_e, m, (0..n_e * m).map(|_| rng.random()).collect()).unwrap();
        let rows = oracle::rows(&x);

        let got = step(&x, &cfg);
        for (i, want) in oracle::step(&rows, cfg.method, cfg.epsilon()).iter().enumerate() {
            for (a, b) in got.row(i).iter().zip(want) {
                worst = worst.max((a - b).abs());
            }
        }
        let w = extended_weights(&x, &u, &cfg).unwrap();
        let (wx, wu) = oracle::extended(&rows, &oracle::control_rows(&u), cfg.method, cfg.epsilon());
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((w.users[i * n + j] - wx[i][j]).abs());
            }
            for j in 0..n_e {
                worst = worst.max((w.propagators[i * n_e + j] - wu[i][j]).abs());
            }
        }
        let got = controlled_step(&x, &u, &cfg).unwrap();
        let want = oracle::controlled_step(&rows, &oracle::control_rows(&u), cfg.method, cfg.epsilon());
        for (i, want) in want.iter().enumerate() {
            for (a, b) in got.row(i).iter().zip(want) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    verdict(worst <= 1e-14, format!("largest entry difference {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("forward invariance", forward_invariance),
        ("angle diameter non-increasing", diameter_monotone),
        ("distance dynamics terminate", termination),
        ("small radius freezes the network", frozen_network),
        ("large radius reaches consensus", consensus),
        ("cluster counts within bounds", bound_dominance),
        ("loss gradients match finite differences", gradients),
        ("cost equals negated reward sum", duality),
        ("manipulation beats the baseline", manipulation),
        ("evolutionary search is elitist", elitism),
        ("updates match brute-force oracles", oracle_equivalence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let v = check();
        println!(
            "criterion {id:>2} {}: {name} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
