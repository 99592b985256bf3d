//! Policy checkpoints as JSON: layer shapes plus row-major weights.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use odrs_core::nn::{Actor, Critic, Dense, Layers};
use odrs_core::ppo::PolicyParams;
use serde::{Deserialize, Serialize};

use crate::export::{read_json, write_json};

pub const FORMAT: &str = "odrs-policy";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub users: usize,
    pub dimension: usize,
    pub propagators: usize,
    /// Observations end with the remaining-horizon fraction.
    pub time_feature: bool,
    pub actor: Vec<LayerRecord>,
    pub critic: Vec<LayerRecord>,
}

const ACTOR_LAYERS: [&str; 4] = ["common", "trunk", "mean_head", "std_head"];
const CRITIC_LAYERS: [&str; 2] = ["hidden", "output"];

fn record(name: &str, d: &Dense) -> LayerRecord {
    LayerRecord {
        name: name.to_owned(),
        inputs: d.inputs,
        outputs: d.outputs,
        weights: d.weights.clone(),
        bias: d.bias.clone(),
    }
}

fn layers(records: Vec<LayerRecord>, names: &[&str]) -> Result<Vec<Dense>> {
    ensure!(
        records.len() == names.len(),
        "expected {} layers, found {}",
        names.len(),
        records.len()
    );
    records
        .into_iter()
        .zip(names)
        .map(|(r, &name)| {
            ensure!(r.name == name, "expected layer `{name}`, found `{}`", r.name);
            Dense::from_parts(r.inputs, r.outputs, r.weights, r.bias).with_context(|| format!("layer `{name}`"))
        })
        .collect()
}

impl Checkpoint {
    pub fn new(policy: &PolicyParams, users: usize, dimension: usize, propagators: usize) -> Self {
        let a = &policy.actor;
        let c = &policy.critic;
        Self {
            format: FORMAT.to_owned(),
            version: VERSION,
            users,
            dimension,
            propagators,
            time_feature: policy.time_feature,
            actor: a
                .layers()
                .into_iter()
                .zip(ACTOR_LAYERS)
                .map(|(d, n)| record(n, d))
                .collect(),
            critic: c
                .layers()
                .into_iter()
                .zip(CRITIC_LAYERS)
                .map(|(d, n)| record(n, d))
                .collect(),
        }
    }

    pub fn into_policy(self) -> Result<PolicyParams> {
        if self.format != FORMAT {
            bail!("not a policy checkpoint (format `{}`)", self.format);
        }
        ensure!(
            self.version == VERSION,
            "unsupported checkpoint version {}",
            self.version
        );
        let mut a = layers(self.actor, &ACTOR_LAYERS)?.into_iter();
        let mut next = || a.next().expect("length checked");
        let actor = Actor::from_layers(next(), next(), next(), next())?;
        let mut c = layers(self.critic, &CRITIC_LAYERS)?.into_iter();
        let critic = Critic::from_layers(c.next().expect("length checked"), c.next().expect("length checked"))?;
        let obs = odrs_core::ppo::observation_dim(self.users, self.dimension) + usize::from(self.time_feature);
        ensure!(
            actor.obs_dim() == obs,
            "actor expects {} inputs, shape implies {obs}",
            actor.obs_dim()
        );
        ensure!(
            actor.action_dim() == self.propagators * self.dimension,
            "actor emits {} values for {} propagators in {} dimensions",
            actor.action_dim(),
            self.propagators,
            self.dimension
        );
        Ok(PolicyParams::from_networks(actor, critic, self.time_feature)?)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    write_json(ckpt, path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_json(path)
}
