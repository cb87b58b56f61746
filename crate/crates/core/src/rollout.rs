//! Vectorized trajectory collection and advantage estimation.
//!
//! `collect` steps N independent environments in lockstep for T steps.
//! Both the actor and the disturber observe the same state; the
//! environment is stepped with the pair (action, disturbance) jointly.
//! Episodes that end are reset in place with the done flag recorded.
//!
//! All per-step randomness is keyed by `(episode seed, purpose, time
//! index)`, so buffers are bit-exact for a fixed seed no matter how the
//! work is scheduled.

use crate::approx::{self, MlpParams, PolicyOutput};
use crate::envkit::{Disturbance, EnvModel, EnvState};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rewards;
use crate::rng::{self, tag};
use rand::Rng;
use std::io::Write;

/// N environments with independent episode streams.
#[derive(Debug, Clone)]
pub struct VecEnvs {
    pub model: EnvModel,
    pub states: Vec<EnvState>,
    pub episode_counters: Vec<u64>,
    seed: u64,
    randomize: bool,
}

impl VecEnvs {
    pub fn new(model: EnvModel, n: usize, seed: u64, randomize: bool) -> Result<Self> {
        let mut envs = VecEnvs { model, states: Vec::with_capacity(n), episode_counters: vec![0; n], seed, randomize };
        for i in 0..n {
            let key = envs.episode_seed(i, 0);
            envs.states.push(envs.model.reset(key, randomize)?);
        }
        Ok(envs)
    }

    /// Reassemble from snapshot parts (checkpoint resume).
    pub fn from_parts(
        model: EnvModel,
        states: Vec<EnvState>,
        episode_counters: Vec<u64>,
        seed: u64,
        randomize: bool,
    ) -> Self {
        VecEnvs { model, states, episode_counters, seed, randomize }
    }

    fn episode_seed(&self, env_index: usize, episode: u64) -> u64 {
        rng::mix(&[self.seed, tag::RESET, env_index as u64, episode])
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn randomize(&self) -> bool {
        self.randomize
    }

    /// Begin the next episode for environment `i`.
    pub fn reset_env(&mut self, i: usize) -> Result<()> {
        self.episode_counters[i] += 1;
        let key = self.episode_seed(i, self.episode_counters[i]);
        self.states[i] = self.model.reset(key, self.randomize)?;
        Ok(())
    }

    fn features_matrix(&self) -> Mat {
        let rows: Vec<Vec<f64>> = self.states.iter().map(|s| self.model.features(s)).collect();
        Mat::from_rows(&rows)
    }
}

/// Where disturbances come from during collection.
#[derive(Debug, Clone, Copy)]
pub enum DisturbanceSource<'a> {
    /// Learned Gaussian head; raw samples are scaled by `force_scale` and
    /// radially clipped to the model's intensity limit.
    Learned { net: &'a MlpParams, force_scale: f64 },
    /// No disturbance at all.
    Zero,
    /// Magnitude uniform in [0, max_force], direction uniform.
    CurriculumUniform { max_force: f64 },
}

/// Per-step records over N environments × T steps, env-major
/// (`idx = env·T + t`).
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub t_steps: usize,
    pub features: Mat,
    /// Raw (pre-clip) actor samples.
    pub actions_raw: Mat,
    pub action_logps: Vec<f64>,
    /// Raw (pre-scale, pre-clip) disturber samples.
    pub dist_raw: Mat,
    /// Applied forces in Newtons (tabular: the quantized index).
    pub dist_applied: Mat,
    pub dist_norms: Vec<f64>,
    pub dist_logps: Vec<f64>,
    pub rewards: Vec<f64>,
    pub task_rewards: Vec<f64>,
    pub costs: Vec<f64>,
    pub v_overall: Vec<f64>,
    pub v_cost: Vec<f64>,
    /// Critic values at the next state (pre-reset).
    pub v_next: Vec<f64>,
    /// Cost value at the next state: 0 at terminal states, the bootstrap
    /// value at truncation.
    pub v_cost_next: Vec<f64>,
    pub dones: Vec<bool>,
    pub truncateds: Vec<bool>,
    pub falls: Vec<bool>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.n_envs * self.t_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, env: usize, t: usize) -> usize {
        env * self.t_steps + t
    }

    pub fn sum_costs(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn sum_dist_norms(&self) -> f64 {
        self.dist_norms.iter().sum()
    }

    /// One row per transition for offline inspection.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "env,t,reward,task_reward,cost,dist_norm,action_logp,dist_logp,v_overall,v_cost,v_cost_next,done,truncated,fall"
        )?;
        for env in 0..self.n_envs {
            for t in 0..self.t_steps {
                let i = self.index(env, t);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    env,
                    t,
                    self.rewards[i],
                    self.task_rewards[i],
                    self.costs[i],
                    self.dist_norms[i],
                    self.action_logps[i],
                    self.dist_logps[i],
                    self.v_overall[i],
                    self.v_cost[i],
                    self.v_cost_next[i],
                    self.dones[i] as u8,
                    self.truncateds[i] as u8,
                    self.falls[i] as u8
                )?;
            }
        }
        Ok(())
    }
}

/// Run the joint system for `t_steps` and record everything the updates
/// need. `r_max_task` fixes the cost map.
pub fn collect(
    envs: &mut VecEnvs,
    actor: &MlpParams,
    disturber: &DisturbanceSource,
    critic: &MlpParams,
    t_steps: usize,
    r_max_task: f64,
) -> Result<RolloutBuffer> {
    let n = envs.n();
    let model = envs.model.clone();
    let feat_dim = model.feature_dim();
    let act_dim = model.action_dim();
    let dist_dim = model.disturbance_dim();
    let rows = n * t_steps;

    let mut buf = RolloutBuffer {
        n_envs: n,
        t_steps,
        features: Mat::zeros(rows, feat_dim),
        actions_raw: Mat::zeros(rows, act_dim),
        action_logps: vec![0.0; rows],
        dist_raw: Mat::zeros(rows, dist_dim),
        dist_applied: Mat::zeros(rows, dist_dim),
        dist_norms: vec![0.0; rows],
        dist_logps: vec![0.0; rows],
        rewards: vec![0.0; rows],
        task_rewards: vec![0.0; rows],
        costs: vec![0.0; rows],
        v_overall: vec![0.0; rows],
        v_cost: vec![0.0; rows],
        v_next: vec![0.0; rows],
        v_cost_next: vec![0.0; rows],
        dones: vec![false; rows],
        truncateds: vec![false; rows],
        falls: vec![false; rows],
    };

    let actor_log_std = actor.log_std.clone().ok_or_else(|| Error::InvalidArgument("actor needs log_std".into()))?;

    for t in 0..t_steps {
        let feats = envs.features_matrix();
        let actor_mean = actor.forward(&feats)?;
        let critic_raw = critic.forward(&feats)?;
        let (v_now, vc_now) = approx::critic_heads(&critic_raw);

        // Disturber forward only when learned.
        let dist_mean = match disturber {
            DisturbanceSource::Learned { net, .. } => Some(net.forward(&feats)?),
            _ => None,
        };
        let dist_log_std = match disturber {
            DisturbanceSource::Learned { net, .. } => {
                Some(net.log_std.clone().ok_or_else(|| Error::InvalidArgument("disturber needs log_std".into()))?)
            }
            _ => None,
        };

        let mut step_results = Vec::with_capacity(n);
        for i in 0..n {
            let state = &envs.states[i];
            let idx = buf.index(i, t);
            buf.features.row_mut(idx).copy_from_slice(feats.row(i));

            let out = PolicyOutput { mean: actor_mean.row(i).to_vec(), log_std: actor_log_std.clone() };
            let mut arng = rng::stream(&[state.stream_seed, tag::ACTION_NOISE, state.time_index as u64]);
            let (action, logp) = approx::sample_and_logprob(&out, &mut arng);
            buf.actions_raw.row_mut(idx).copy_from_slice(&action);
            buf.action_logps[idx] = logp;

            let mut drng = rng::stream(&[state.stream_seed, tag::DISTURB_NOISE, state.time_index as u64]);
            let disturbance = match disturber {
                DisturbanceSource::Learned { force_scale, .. } => {
                    let dout = PolicyOutput {
                        mean: dist_mean.as_ref().unwrap().row(i).to_vec(),
                        log_std: dist_log_std.clone().unwrap(),
                    };
                    let f = approx::sample_force_clipped(&dout, &mut drng, *force_scale, model.f_max());
                    buf.dist_raw.row_mut(idx).copy_from_slice(&f.raw);
                    buf.dist_logps[idx] = f.logp;
                    let d = model.make_disturbance(&f.applied);
                    match &d {
                        Disturbance::Force(fv) => buf.dist_applied.row_mut(idx).copy_from_slice(fv),
                        Disturbance::Index(di) => buf.dist_applied.set(idx, 0, *di as f64),
                    }
                    d
                }
                DisturbanceSource::Zero => model.make_disturbance(&vec![0.0; dist_dim]),
                DisturbanceSource::CurriculumUniform { max_force } => {
                    let magnitude = drng.random_range(0.0..=*max_force);
                    let mut dir: Vec<f64> = (0..dist_dim)
                        .map(|_| {
                            let v: f64 = drng.sample(rand_distr::StandardNormal);
                            v
                        })
                        .collect();
                    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                    for v in &mut dir {
                        *v *= magnitude / norm;
                    }
                    let d = model.make_disturbance(&dir);
                    match &d {
                        Disturbance::Force(fv) => buf.dist_applied.row_mut(idx).copy_from_slice(fv),
                        Disturbance::Index(di) => buf.dist_applied.set(idx, 0, *di as f64),
                    }
                    d
                }
            };
            buf.dist_norms[idx] = model.disturbance_norm(&disturbance);

            let result = model.step(state, &action, &disturbance)?;
            buf.rewards[idx] = result.reward();
            buf.task_rewards[idx] = result.task_reward;
            buf.costs[idx] = rewards::cost(result.task_reward, r_max_task)?;
            buf.v_overall[idx] = v_now[i];
            buf.v_cost[idx] = vc_now[i];
            buf.dones[idx] = result.terminated;
            buf.truncateds[idx] = result.truncated;
            buf.falls[idx] = result.fall;
            step_results.push(result);
        }

        // Critic at the post-step states (pre-reset) for bootstraps.
        let next_rows: Vec<Vec<f64>> = step_results.iter().map(|r| model.features(&r.next_state)).collect();
        let next_raw = critic.forward(&Mat::from_rows(&next_rows))?;
        let (vn, vcn) = approx::critic_heads(&next_raw);
        for i in 0..n {
            let idx = buf.index(i, t);
            buf.v_next[idx] = vn[i];
            // Terminal states carry no future cost; truncation bootstraps.
            buf.v_cost_next[idx] = if buf.dones[idx] && !buf.truncateds[idx] { 0.0 } else { vcn[i] };
        }

        for (i, result) in step_results.into_iter().enumerate() {
            if result.terminated {
                envs.reset_env(i)?;
            } else {
                envs.states[i] = result.next_state;
            }
        }
    }

    Ok(buf)
}

/// Which baseline the disturber advantages subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturberBaseline {
    /// The literal per-step payoff C − η‖d‖₂.
    Raw,
    /// One-step cost-value baseline:
    /// C − η‖d‖₂ + γ₂·V_cost(s′) − V_cost(s).
    OneStep,
}

/// Advantages and regression targets derived from one buffer.
#[derive(Debug, Clone)]
pub struct AdvantageSet {
    pub actor_advantages: Vec<f64>,
    pub overall_returns: Vec<f64>,
    /// γ₂-discounted cost-to-go targets for the cost head.
    pub cost_returns: Vec<f64>,
    pub disturber_advantages: Vec<f64>,
}

/// n-step (λ = 1) advantages with episode-boundary truncation, overall
/// returns under γ, cost returns under γ₂, and the disturber payoff
/// advantages at the given η.
pub fn compute_advantages(
    buf: &RolloutBuffer,
    gamma: f64,
    gamma2: f64,
    eta: f64,
    baseline: DisturberBaseline,
    normalize_actor: bool,
) -> Result<AdvantageSet> {
    if !(0.0..1.0).contains(&gamma) || !(0.0..1.0).contains(&gamma2) {
        return Err(Error::InvalidArgument(format!("discounts must be in [0, 1): gamma={gamma}, gamma2={gamma2}")));
    }
    let rows = buf.len();
    let mut actor_advantages = vec![0.0; rows];
    let mut overall_returns = vec![0.0; rows];
    let mut cost_returns = vec![0.0; rows];
    let mut disturber_advantages = vec![0.0; rows];

    for env in 0..buf.n_envs {
        let mut g_next = 0.0;
        let mut gc_next = 0.0;
        for t in (0..buf.t_steps).rev() {
            let i = buf.index(env, t);
            if t == buf.t_steps - 1 || buf.dones[i] {
                // Episode boundary (or buffer end): terminal states carry
                // nothing, truncated / mid-episode cuts bootstrap on the
                // critic at the next state.
                if buf.dones[i] && !buf.truncateds[i] {
                    g_next = 0.0;
                    gc_next = 0.0;
                } else {
                    g_next = buf.v_next[i];
                    gc_next = buf.v_cost_next[i];
                }
            }
            let g = buf.rewards[i] + gamma * g_next;
            let gc = buf.costs[i] + gamma2 * gc_next;
            overall_returns[i] = g;
            cost_returns[i] = gc;
            actor_advantages[i] = g - buf.v_overall[i];
            g_next = g;
            gc_next = gc;

            let payoff = buf.costs[i] - eta * buf.dist_norms[i];
            disturber_advantages[i] = match baseline {
                DisturberBaseline::Raw => payoff,
                DisturberBaseline::OneStep => payoff + gamma2 * buf.v_cost_next[i] - buf.v_cost[i],
            };
        }
    }

    if normalize_actor {
        normalize_in_place(&mut actor_advantages);
    }

    Ok(AdvantageSet { actor_advantages, overall_returns, cost_returns, disturber_advantages })
}

fn normalize_in_place(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in v.iter_mut() {
        *x = (*x - mean) / (std + 1e-8);
    }
}
