//! Straightforward reference implementations used as test oracles. Nothing
//! here shares code with the library beyond its public data types.

#![allow(dead_code)]

use odrs_core::control::ControlInput;
use odrs_core::nn::{Actor, Critic, Dense, Layers};
use odrs_core::{Method, OpinionMatrix};

pub fn rows(x: &OpinionMatrix) -> Vec<Vec<f64>> {
    (0..x.n()).map(|i| x.row(i).to_vec()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn kernel(a: &[f64], b: &[f64], method: Method, eps: f64) -> f64 {
    let m = a.len() as f64;
    match method {
        Method::Distance => {
            let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if d <= m.sqrt() * (1.0 - eps) {
                1.0
            } else {
                0.0
            }
        }
        Method::Angle => {
            let na = dot(a, a).sqrt();
            let nb = dot(b, b).sqrt();
            if na == 0.0 || nb == 0.0 {
                return 0.0;
            }
            let c = (dot(a, b) / (na * nb)).clamp(0.0, 1.0);
            if c >= eps {
                c
            } else {
                0.0
            }
        }
    }
}

/// Full similarity matrix with unit diagonal.
pub fn similarity(x: &[Vec<f64>], method: Method, eps: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            s[i][j] = if i == j { 1.0 } else { kernel(&x[i], &x[j], method, eps) };
        }
    }
    s
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| row.iter().zip(b).map(|(w, br)| w * br[c]).sum())
                .collect()
        })
        .collect()
}

fn normalize_rows(s: &mut [Vec<f64>]) {
    for row in s {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
}

/// `D⁻¹ S X` built as explicit matrices.
pub fn step(x: &[Vec<f64>], method: Method, eps: f64) -> Vec<Vec<f64>> {
    let mut w = similarity(x, method, eps);
    normalize_rows(&mut w);
    matmul(&w, x)
}

/// `[W_x | W_u]` from the stacked similarity of users against users and
/// propagators.
pub fn extended(x: &[Vec<f64>], u: &[Vec<f64>], method: Method, eps: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = x.len();
    let mut full: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|j| if i == j { 1.0 } else { kernel(&x[i], &x[j], method, eps) })
                .collect();
            row.extend(u.iter().map(|p| kernel(&x[i], p, method, eps)));
            row
        })
        .collect();
    normalize_rows(&mut full);
    let wx = full.iter().map(|r| r[..n].to_vec()).collect();
    let wu = full.iter().map(|r| r[n..].to_vec()).collect();
    (wx, wu)
}

pub fn controlled_step(x: &[Vec<f64>], u: &[Vec<f64>], method: Method, eps: f64) -> Vec<Vec<f64>> {
    let (wx, wu) = extended(x, u, method, eps);
    let a = matmul(&wx, x);
    let b = matmul(&wu, u);
    a.iter()
        .zip(&b)
        .map(|(r, s)| r.iter().zip(s).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn control_rows(u: &ControlInput) -> Vec<Vec<f64>> {
    (0..u.n_e()).map(|j| u.row(j).to_vec()).collect()
}

/// Component labels by union-find over positive similarities, relabelled
/// in order of each component's smallest member.
pub fn components(x: &[Vec<f64>], method: Method, eps: f64) -> Vec<usize> {
    let n = x.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if kernel(&x[i], &x[j], method, eps) > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = vec![0; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[i] = label[r];
    }
    out
}

fn dense(d: &Dense, x: &[f64]) -> Vec<f64> {
    (0..d.outputs)
        .map(|o| d.bias[o] + (0..d.inputs).map(|i| d.weights[o * d.inputs + i] * x[i]).sum::<f64>())
        .collect()
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|a| a.max(0.0)).collect()
}

pub fn actor_forward(a: &Actor, obs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = relu(dense(&a.common, obs));
    let t = relu(dense(&a.trunk, &h));
    let mean = dense(&a.mean_head, &t)
        .into_iter()
        .map(|z| 1.0 / (1.0 + (-z).exp()))
        .collect();
    let std = dense(&a.std_head, &t)
        .into_iter()
        .map(|z| (1.0 + z.exp()).ln())
        .collect();
    (mean, std)
}

/// Inputs of every ReLU in the actor, hidden layer then trunk.
pub fn actor_preactivations(a: &Actor, obs: &[f64]) -> Vec<f64> {
    let h = dense(&a.common, obs);
    let t = dense(&a.trunk, &relu(h.clone()));
    h.into_iter().chain(t).collect()
}

pub fn critic_preactivations(c: &Critic, obs: &[f64]) -> Vec<f64> {
    dense(&c.hidden, obs)
}

pub fn critic_forward(c: &Critic, obs: &[f64]) -> f64 {
    let h = relu(dense(&c.hidden, obs));
    dense(&c.output, &h)[0]
}

/// Largest `|analytic − numeric| / max(|analytic|, |numeric|, floor)` over
/// every parameter. The numeric derivative uses the five-point stencil,
/// whose O(h⁴) truncation error permits a step large enough to keep
/// cancellation noise well below the tolerance.
pub fn fd_max_rel_error<N, F>(net: &N, analytic: &N, loss: F, h: f64, floor: f64) -> f64
where
    N: Layers + Clone,
    F: Fn(&N) -> f64,
{
    let base = net.flat_params();
    let grad = analytic.flat_params();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        let mut at = |offset: f64| {
            p[i] = base[i] + offset;
            probe.set_flat_params(&p);
            loss(&probe)
        };
        let numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        let err = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}
