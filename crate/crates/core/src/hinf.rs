//! Constrained adversarial trainer.
//!
//! One iteration runs, in order: collect a rollout with the old networks,
//! compute values/costs/advantages, optimize the actor on the clipped
//! surrogate plus λ times the ratio-bound constraint, optimize the
//! disturber on its own clipped surrogate, take a dual gradient step on λ,
//! and refresh η as an exponential moving average of the batch cost-to-
//! intensity ratio.
//!
//! The constraint term for a batch is
//!
//! `L = mean_t( η·‖d_t‖₂ − C(s_t) + V_cost(s_t) − V_cost(s_{t+1}) )`
//!
//! with the cost-value terms read from the buffer (no gradient flows into
//! the critic through them) and the cost differentiated through the
//! action's effect by the likelihood-ratio surrogate `ratio_t · C_t`.

use crate::approx::{self, Adam, MlpGrads, MlpParams, PolicyOutput};
use crate::config::RunConfig;
use crate::envkit::EnvModel;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::{self, tag};
use crate::rollout::{self, AdvantageSet, DisturbanceSource, RolloutBuffer, VecEnvs};
use rand::seq::SliceRandom;

/// Constraint bookkeeping and fixed hyperparameters of the update rule.
#[derive(Debug, Clone, PartialEq)]
pub struct HinfState {
    /// Cost-per-Newton ratio bound (EMA).
    pub eta: f64,
    /// Lagrangian multiplier, kept in [0, lambda_max].
    pub lambda: f64,
    /// Dual step size.
    pub alpha: f64,
    pub lambda_max: f64,
    pub r_max_task: f64,
    pub gamma: f64,
    pub gamma2: f64,
    pub clip_eps: f64,
    /// Entropy coefficient (actor).
    pub entropy_coeff: f64,
    /// Value-loss coefficient.
    pub value_coeff: f64,
}

impl HinfState {
    pub fn from_config(cfg: &RunConfig) -> Self {
        HinfState {
            eta: cfg.hinf_eta0,
            lambda: if cfg.hinf_enabled { cfg.hinf_lambda0 } else { 0.0 },
            alpha: cfg.hinf_alpha,
            lambda_max: cfg.hinf_lambda_max,
            r_max_task: cfg.rewards_r_max_task,
            gamma: cfg.hinf_gamma,
            gamma2: cfg.hinf_gamma2,
            clip_eps: cfg.hinf_clip_eps,
            entropy_coeff: cfg.hinf_entropy_coeff,
            value_coeff: cfg.hinf_value_coeff,
        }
    }
}

/// Per-iteration training telemetry.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub iter: u64,
    pub eta_before: f64,
    pub eta_after: f64,
    pub lambda_before: f64,
    pub lambda_after: f64,
    pub l_hinf_mean: f64,
    /// Fraction of steps with a positive per-step constraint slack.
    pub sat_frac: f64,
    pub actor_loss: f64,
    pub entropy: f64,
    pub value_loss_overall: f64,
    pub value_loss_cost: f64,
    pub disturber_loss: f64,
    pub mean_reward: f64,
    pub mean_task_reward: f64,
    pub mean_cost: f64,
    pub mean_force_norm: f64,
    pub sum_cost: f64,
    pub sum_dnorm: f64,
    pub falls: u64,
    pub eta_update_skipped: bool,
}

/// Per-step constraint slack η‖d‖₂ − C + V_cost(s) − V_cost(s′).
pub fn l_hinf_terms(buf: &RolloutBuffer, eta: f64) -> Vec<f64> {
    (0..buf.len())
        .map(|i| eta * buf.dist_norms[i] - buf.costs[i] + buf.v_cost[i] - buf.v_cost_next[i])
        .collect()
}

/// Batch mean of the constraint slack and the satisfied fraction.
pub fn l_hinf_stats(buf: &RolloutBuffer, eta: f64) -> (f64, f64) {
    let terms = l_hinf_terms(buf, eta);
    let mean = terms.iter().sum::<f64>() / terms.len().max(1) as f64;
    let sat = terms.iter().filter(|t| **t > 0.0).count() as f64 / terms.len().max(1) as f64;
    (mean, sat)
}

/// Dual gradient step: λ′ = clamp(λ − α·L, 0, λ_max).
pub fn dual_update(h: &HinfState, l_hinf_mean: f64) -> f64 {
    (h.lambda - h.alpha * l_hinf_mean).clamp(0.0, h.lambda_max)
}

/// Ratio-bound EMA: η′ = 0.9·η + 0.1·(ΣC / Σ‖d‖). Near-zero total
/// intensity skips the update (the raw rule divides by it).
pub fn eta_update(h: &HinfState, sum_cost: f64, sum_intensity: f64) -> (f64, bool) {
    if sum_intensity < 1e-6 {
        (h.eta, true)
    } else {
        (0.9 * h.eta + 0.1 * (sum_cost / sum_intensity), false)
    }
}

/// Deterministic shuffled minibatch index sets for one epoch.
pub fn minibatch_indices(seed: u64, iter: u64, epoch: u64, n: usize, n_minibatches: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng::stream(&[seed, tag::SHUFFLE, iter, epoch]);
    order.shuffle(&mut r);
    let k = n_minibatches.max(1);
    (0..k)
        .map(|i| {
            let lo = i * n / k;
            let hi = (i + 1) * n / k;
            order[lo..hi].to_vec()
        })
        .collect()
}

const LOG_RATIO_LIMIT: f64 = 20.0;

/// Actor surrogate on one minibatch with exact gradients.
pub struct ActorLossOutput {
    /// Minimization objective −(L_clip + c₁·entropy + λ·L_hinf).
    pub loss: f64,
    pub clip_surrogate: f64,
    pub entropy: f64,
    /// Ratio-weighted constraint surrogate (value at the current params).
    pub l_hinf_surrogate: f64,
    pub grads: MlpGrads,
}

pub fn actor_loss(
    actor: &MlpParams,
    buf: &RolloutBuffer,
    adv: &AdvantageSet,
    indices: &[usize],
    h: &HinfState,
    lambda: f64,
) -> Result<ActorLossOutput> {
    let log_std = actor.log_std.as_ref().ok_or_else(|| Error::InvalidArgument("actor needs log_std".into()))?.clone();
    let b = indices.len();
    let feat = gather_rows(&buf.features, indices);
    let trace = actor.forward_trace(&feat)?;
    let means = trace.output();
    let m = actor.output_dim();

    let mut clip_sum = 0.0;
    let mut hinf_sum = 0.0;
    let mut d_mean = Mat::zeros(b, m);
    let mut d_log_std = vec![0.0; m];

    for (row, &i) in indices.iter().enumerate() {
        let out = PolicyOutput { mean: means.row(row).to_vec(), log_std: log_std.clone() };
        let action = buf.actions_raw.row(i);
        let logp_new = approx::log_prob(&out, action);
        let log_ratio = logp_new - buf.action_logps[i];
        if !log_ratio.is_finite() || log_ratio.abs() > LOG_RATIO_LIMIT {
            return Err(Error::Diverged(format!("actor log ratio {log_ratio}")));
        }
        let ratio = log_ratio.exp();
        let a = adv.actor_advantages[i];

        let unclipped = ratio * a;
        let clipped = ratio.clamp(1.0 - h.clip_eps, 1.0 + h.clip_eps) * a;
        let (term, active) = if unclipped <= clipped { (unclipped, true) } else { (clipped, false) };
        clip_sum += term;

        hinf_sum += h.eta * buf.dist_norms[i] - ratio * buf.costs[i] + buf.v_cost[i] - buf.v_cost_next[i];

        // d(maximization objective)/d logp for this row.
        let mut d_logp = 0.0;
        if active {
            d_logp += ratio * a / b as f64;
        }
        d_logp += lambda * (-ratio * buf.costs[i]) / b as f64;

        let (dm, ds) = approx::log_prob_grad(&out, action);
        // Minimization gradient: negate the ascent direction.
        for j in 0..m {
            d_mean.set(row, j, -d_logp * dm[j]);
            d_log_std[j] -= d_logp * ds[j];
        }
    }

    let clip_surrogate = clip_sum / b as f64;
    let l_hinf_surrogate = hinf_sum / b as f64;
    let entropy = approx::entropy(&log_std);
    // Entropy bonus: state independent, gradient c₁ per log-σ entry.
    for g in d_log_std.iter_mut() {
        *g -= h.entropy_coeff;
    }

    let mut grads = actor.backward(&trace, &d_mean);
    if let Some(s) = grads.log_std.as_mut() {
        for (g, add) in s.iter_mut().zip(&d_log_std) {
            *g += add;
        }
    }

    let loss = -(clip_surrogate + h.entropy_coeff * entropy + lambda * l_hinf_surrogate);
    if !loss.is_finite() {
        return Err(Error::NonFinite("actor loss".into()));
    }
    Ok(ActorLossOutput { loss, clip_surrogate, entropy, l_hinf_surrogate, grads })
}

/// Disturber surrogate: clipped ratio on the disturber's pre-clip samples
/// against the payoff advantages, plus its own entropy bonus.
pub struct DisturberLossOutput {
    pub loss: f64,
    pub clip_surrogate: f64,
    pub entropy: f64,
    pub grads: MlpGrads,
}

pub fn disturber_loss(
    disturber: &MlpParams,
    buf: &RolloutBuffer,
    adv: &AdvantageSet,
    indices: &[usize],
    clip_eps: f64,
    entropy_coeff: f64,
) -> Result<DisturberLossOutput> {
    let log_std =
        disturber.log_std.as_ref().ok_or_else(|| Error::InvalidArgument("disturber needs log_std".into()))?.clone();
    let b = indices.len();
    let feat = gather_rows(&buf.features, indices);
    let trace = disturber.forward_trace(&feat)?;
    let means = trace.output();
    let m = disturber.output_dim();

    let mut clip_sum = 0.0;
    let mut d_mean = Mat::zeros(b, m);
    let mut d_log_std = vec![0.0; m];

    for (row, &i) in indices.iter().enumerate() {
        let out = PolicyOutput { mean: means.row(row).to_vec(), log_std: log_std.clone() };
        let sample = buf.dist_raw.row(i);
        let logp_new = approx::log_prob(&out, sample);
        let log_ratio = logp_new - buf.dist_logps[i];
        if !log_ratio.is_finite() || log_ratio.abs() > LOG_RATIO_LIMIT {
            return Err(Error::Diverged(format!("disturber log ratio {log_ratio}")));
        }
        let ratio = log_ratio.exp();
        let a = adv.disturber_advantages[i];

        let unclipped = ratio * a;
        let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * a;
        let (term, active) = if unclipped <= clipped { (unclipped, true) } else { (clipped, false) };
        clip_sum += term;

        let mut d_logp = 0.0;
        if active {
            d_logp += ratio * a / b as f64;
        }
        let (dm, ds) = approx::log_prob_grad(&out, sample);
        for j in 0..m {
            d_mean.set(row, j, -d_logp * dm[j]);
            d_log_std[j] -= d_logp * ds[j];
        }
    }

    let clip_surrogate = clip_sum / b as f64;
    let entropy = approx::entropy(&log_std);
    for g in d_log_std.iter_mut() {
        *g -= entropy_coeff;
    }

    let mut grads = disturber.backward(&trace, &d_mean);
    if let Some(s) = grads.log_std.as_mut() {
        for (g, add) in s.iter_mut().zip(&d_log_std) {
            *g += add;
        }
    }

    let loss = -(clip_surrogate + entropy_coeff * entropy);
    if !loss.is_finite() {
        return Err(Error::NonFinite("disturber loss".into()));
    }
    Ok(DisturberLossOutput { loss, clip_surrogate, entropy, grads })
}

/// Double-head value regression: overall head on the γ-returns, cost head
/// (softplus) on the γ₂ cost-to-go.
pub struct CriticLossOutput {
    pub value_loss_overall: f64,
    pub value_loss_cost: f64,
    pub grads: MlpGrads,
}

pub fn critic_loss(
    critic: &MlpParams,
    buf: &RolloutBuffer,
    adv: &AdvantageSet,
    indices: &[usize],
    value_coeff: f64,
) -> Result<CriticLossOutput> {
    let b = indices.len();
    let feat = gather_rows(&buf.features, indices);
    let trace = critic.forward_trace(&feat)?;
    let raw = trace.output();
    let mut d_raw = Mat::zeros(b, 2);
    let mut loss_overall = 0.0;
    let mut loss_cost = 0.0;

    for (row, &i) in indices.iter().enumerate() {
        let v = raw.get(row, 0);
        let z = raw.get(row, 1);
        let vc = approx::softplus(z);
        let ev = v - adv.overall_returns[i];
        let ec = vc - adv.cost_returns[i];
        loss_overall += ev * ev;
        loss_cost += ec * ec;
        d_raw.set(row, 0, value_coeff * 2.0 * ev / b as f64);
        d_raw.set(row, 1, value_coeff * 2.0 * ec * approx::sigmoid(z) / b as f64);
    }
    loss_overall /= b as f64;
    loss_cost /= b as f64;
    if !(loss_overall + loss_cost).is_finite() {
        return Err(Error::NonFinite("critic loss".into()));
    }
    let grads = critic.backward(&trace, &d_raw);
    Ok(CriticLossOutput { value_loss_overall: loss_overall, value_loss_cost: loss_cost, grads })
}

fn gather_rows(src: &Mat, indices: &[usize]) -> Mat {
    let mut out = Mat::zeros(indices.len(), src.cols());
    for (row, &i) in indices.iter().enumerate() {
        out.row_mut(row).copy_from_slice(src.row(i));
    }
    out
}

/// The full training loop state.
pub struct Trainer {
    pub cfg: RunConfig,
    pub h: HinfState,
    pub actor: MlpParams,
    pub disturber: MlpParams,
    pub critic: MlpParams,
    pub adam_actor: Adam,
    pub adam_disturber: Adam,
    pub adam_critic: Adam,
    pub envs: VecEnvs,
    pub iter: u64,
}

impl Trainer {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.build_model()?;
        let feat = model.feature_dim();
        let act = model.action_dim();
        let dist = model.disturbance_dim();
        let activation = cfg.activation();

        let mut actor_widths = vec![feat];
        actor_widths.extend(&cfg.net_actor_hidden);
        actor_widths.push(act);
        let mut disturber_widths = vec![feat];
        disturber_widths.extend(&cfg.net_actor_hidden);
        disturber_widths.push(dist);
        let mut critic_widths = vec![feat];
        critic_widths.extend(&cfg.net_critic_hidden);
        critic_widths.push(2);

        let actor = MlpParams::init(
            &actor_widths,
            activation,
            Some(cfg.net_actor_log_std_init),
            0.01,
            &mut rng::stream(&[cfg.train_seed, tag::INIT, 1]),
        );
        let disturber = MlpParams::init(
            &disturber_widths,
            activation,
            Some(cfg.net_disturber_log_std_init),
            0.01,
            &mut rng::stream(&[cfg.train_seed, tag::INIT, 2]),
        );
        let critic =
            MlpParams::init(&critic_widths, activation, None, 1.0, &mut rng::stream(&[cfg.train_seed, tag::INIT, 3]));

        let adam_actor = Adam::new(cfg.hinf_lr, actor.param_count());
        let adam_disturber = Adam::new(cfg.hinf_lr, disturber.param_count());
        let adam_critic = Adam::new(cfg.hinf_lr, critic.param_count());
        let envs = VecEnvs::new(model, cfg.train_n_envs, cfg.train_seed, cfg.env_randomize)?;

        Ok(Trainer {
            h: HinfState::from_config(cfg),
            cfg: cfg.clone(),
            actor,
            disturber,
            critic,
            adam_actor,
            adam_disturber,
            adam_critic,
            envs,
            iter: 0,
        })
    }

    pub fn model(&self) -> &EnvModel {
        &self.envs.model
    }

    /// Curriculum intensity cap at the given iteration.
    pub fn curriculum_max_force(&self, iter: u64) -> f64 {
        let total = (self.cfg.train_iterations as f64 * self.cfg.train_curriculum_end_frac).max(1.0);
        self.cfg.train_curriculum_max * ((iter as f64) / total).min(1.0)
    }

    /// One full iteration: collect, then update.
    pub fn train_iteration(&mut self) -> Result<LossReport> {
        let source = match self.cfg.train_disturber.as_str() {
            "learned" => {
                DisturbanceSource::Learned { net: &self.disturber, force_scale: self.cfg.net_disturber_force_scale }
            }
            "zero" => DisturbanceSource::Zero,
            _ => DisturbanceSource::CurriculumUniform { max_force: self.curriculum_max_force(self.iter) },
        };
        let buf = rollout::collect(
            &mut self.envs,
            &self.actor,
            &source,
            &self.critic,
            self.cfg.train_t_steps,
            self.cfg.rewards_r_max_task,
        )?;
        self.update_from_buffer(&buf)
    }

    /// The optimize/update half of an iteration, on an already collected
    /// buffer.
    pub fn update_from_buffer(&mut self, buf: &RolloutBuffer) -> Result<LossReport> {
        let adv = rollout::compute_advantages(
            buf,
            self.h.gamma,
            self.h.gamma2,
            self.h.eta,
            self.cfg.disturber_baseline(),
            self.cfg.hinf_normalize_adv,
        )?;
        let (l_hinf_mean, sat_frac) = l_hinf_stats(buf, self.h.eta);
        let lambda = if self.cfg.hinf_enabled { self.h.lambda } else { 0.0 };

        let mut actor_loss_acc = 0.0;
        let mut entropy_acc = 0.0;
        let mut v_loss_acc = 0.0;
        let mut vc_loss_acc = 0.0;
        let mut n_mb = 0usize;
        for epoch in 0..self.cfg.hinf_epochs {
            for mb in minibatch_indices(
                self.cfg.train_seed,
                self.iter,
                epoch as u64,
                buf.len(),
                self.cfg.hinf_minibatches,
            ) {
                if mb.is_empty() {
                    continue;
                }
                let out = actor_loss(&self.actor, buf, &adv, &mb, &self.h, lambda)?;
                let update = self.adam_actor.step(&out.grads.flatten());
                self.actor.apply_update(&update);
                actor_loss_acc += out.loss;
                entropy_acc += out.entropy;

                let cout = critic_loss(&self.critic, buf, &adv, &mb, self.h.value_coeff)?;
                let update = self.adam_critic.step(&cout.grads.flatten());
                self.critic.apply_update(&update);
                v_loss_acc += cout.value_loss_overall;
                vc_loss_acc += cout.value_loss_cost;
                n_mb += 1;
            }
        }

        let mut disturber_loss_acc = 0.0;
        let mut n_dmb = 0usize;
        if self.cfg.train_disturber == "learned" {
            for epoch in 0..self.cfg.hinf_epochs {
                for mb in minibatch_indices(
                    self.cfg.train_seed,
                    self.iter,
                    0x1000 + epoch as u64,
                    buf.len(),
                    self.cfg.hinf_minibatches,
                ) {
                    if mb.is_empty() {
                        continue;
                    }
                    let out = disturber_loss(
                        &self.disturber,
                        buf,
                        &adv,
                        &mb,
                        self.h.clip_eps,
                        self.cfg.hinf_disturber_entropy_coeff,
                    )?;
                    let update = self.adam_disturber.step(&out.grads.flatten());
                    self.disturber.apply_update(&update);
                    disturber_loss_acc += out.loss;
                    n_dmb += 1;
                }
            }
        }

        let lambda_before = self.h.lambda;
        if self.cfg.hinf_enabled {
            self.h.lambda = dual_update(&self.h, l_hinf_mean);
        }
        let eta_before = self.h.eta;
        let sum_cost = buf.sum_costs();
        let sum_dnorm = buf.sum_dist_norms();
        let (eta_after, eta_update_skipped) = eta_update(&self.h, sum_cost, sum_dnorm);
        self.h.eta = eta_after;

        let n = buf.len() as f64;
        let report = LossReport {
            iter: self.iter,
            eta_before,
            eta_after,
            lambda_before,
            lambda_after: self.h.lambda,
            l_hinf_mean,
            sat_frac,
            actor_loss: actor_loss_acc / (n_mb.max(1)) as f64,
            entropy: entropy_acc / (n_mb.max(1)) as f64,
            value_loss_overall: v_loss_acc / (n_mb.max(1)) as f64,
            value_loss_cost: vc_loss_acc / (n_mb.max(1)) as f64,
            disturber_loss: disturber_loss_acc / (n_dmb.max(1)) as f64,
            mean_reward: buf.rewards.iter().sum::<f64>() / n,
            mean_task_reward: buf.task_rewards.iter().sum::<f64>() / n,
            mean_cost: sum_cost / n,
            mean_force_norm: sum_dnorm / n,
            sum_cost,
            sum_dnorm,
            falls: buf.falls.iter().filter(|f| **f).count() as u64,
            eta_update_skipped,
        };
        self.iter += 1;
        Ok(report)
    }
}
