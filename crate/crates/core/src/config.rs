//! Run configuration: flat dotted keys in a plain text file.
//!
//! ```text
//! # comment
//! hinf.alpha = 0.01
//! train.n_envs = 256
//! ```
//!
//! Unknown keys are rejected, values are validated against documented
//! ranges before any run, and every run echoes the fully resolved
//! configuration next to its outputs so it can be re-run identically.

use crate::approx::Activation;
use crate::envkit::{CommandSpec, EnvModel, LqModel, PointMassModel, TabularGame};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rollout::DisturberBaseline;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // env
    pub env_kind: String,
    pub env_mass: f64,
    pub env_dt: f64,
    pub env_horizon: u32,
    pub env_friction: f64,
    pub env_actuator_force: f64,
    pub env_actuator_torque: f64,
    pub env_inertia: f64,
    pub env_f_max: f64,
    pub env_randomize: bool,
    pub env_terminate_on_fall: bool,
    pub env_command_mode: String,
    pub env_command: [f64; 3],
    pub env_command_v_max: f64,
    pub env_command_w_max: f64,
    pub env_fall_speed_err: f64,
    pub env_fall_heading_err: f64,
    pub env_fall_window: f64,
    // lq
    pub lq_a: String,
    pub lq_b: String,
    pub lq_e: String,
    pub lq_q: String,
    pub lq_r: String,
    // tabular
    pub tabular_states: usize,
    pub tabular_actions: usize,
    pub tabular_disturbances: usize,
    pub tabular_seed: u64,
    // rewards
    pub rewards_sigma_track: f64,
    pub rewards_r_max_task: f64,
    // net
    pub net_actor_hidden: Vec<usize>,
    pub net_critic_hidden: Vec<usize>,
    pub net_activation: String,
    pub net_disturber_force_scale: f64,
    pub net_actor_log_std_init: f64,
    pub net_disturber_log_std_init: f64,
    // hinf
    pub hinf_enabled: bool,
    pub hinf_eta0: f64,
    pub hinf_lambda0: f64,
    pub hinf_alpha: f64,
    pub hinf_lambda_max: f64,
    pub hinf_clip_eps: f64,
    pub hinf_entropy_coeff: f64,
    pub hinf_value_coeff: f64,
    pub hinf_disturber_entropy_coeff: f64,
    pub hinf_gamma: f64,
    pub hinf_gamma2: f64,
    pub hinf_lr: f64,
    pub hinf_epochs: usize,
    pub hinf_minibatches: usize,
    pub hinf_normalize_adv: bool,
    pub hinf_disturber_baseline: String,
    // train
    pub train_n_envs: usize,
    pub train_t_steps: usize,
    pub train_iterations: u64,
    pub train_seed: u64,
    pub train_checkpoint_every: u64,
    pub train_disturber: String,
    pub train_curriculum_max: f64,
    pub train_curriculum_end_frac: f64,
    // eval
    pub eval_episodes: usize,
    pub eval_regime: String,
    pub eval_max_force: f64,
    pub eval_pulse_force: f64,
    pub eval_pulse_period: f64,
    pub eval_pulse_duration: f64,
    pub eval_resample_direction: String,
    // attack
    pub attack_epochs: u64,
    pub attack_n_envs: usize,
    pub attack_t_steps: usize,
    pub attack_budget_factor: f64,
    // out
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env_kind: "point_mass".into(),
            env_mass: 12.0,
            env_dt: 0.02,
            env_horizon: 1000,
            env_friction: 1.0,
            env_actuator_force: 150.0,
            env_actuator_torque: 30.0,
            env_inertia: 0.5,
            env_f_max: 100.0,
            env_randomize: true,
            env_terminate_on_fall: true,
            env_command_mode: "sampled".into(),
            env_command: [1.0, 0.0, 0.0],
            env_command_v_max: 1.0,
            env_command_w_max: 0.5,
            env_fall_speed_err: 3.0,
            env_fall_heading_err: std::f64::consts::FRAC_PI_2,
            env_fall_window: 0.5,
            lq_a: "0.9".into(),
            lq_b: "1".into(),
            lq_e: "1".into(),
            lq_q: "1".into(),
            lq_r: "1".into(),
            tabular_states: 8,
            tabular_actions: 3,
            tabular_disturbances: 3,
            tabular_seed: 0,
            rewards_sigma_track: 0.25,
            rewards_r_max_task: 1.5,
            net_actor_hidden: vec![64, 64],
            net_critic_hidden: vec![128, 128],
            net_activation: "tanh".into(),
            net_disturber_force_scale: 50.0,
            net_actor_log_std_init: -0.7,
            net_disturber_log_std_init: -0.7,
            hinf_enabled: true,
            hinf_eta0: 1.0,
            hinf_lambda0: 1.0,
            hinf_alpha: 0.01,
            hinf_lambda_max: 100.0,
            hinf_clip_eps: 0.2,
            hinf_entropy_coeff: 0.01,
            hinf_value_coeff: 1.0,
            hinf_disturber_entropy_coeff: 0.003,
            hinf_gamma: 0.99,
            hinf_gamma2: 0.8,
            hinf_lr: 3e-4,
            hinf_epochs: 5,
            hinf_minibatches: 4,
            hinf_normalize_adv: true,
            hinf_disturber_baseline: "onestep".into(),
            train_n_envs: 256,
            train_t_steps: 100,
            train_iterations: 1000,
            train_seed: 1,
            train_checkpoint_every: 100,
            train_disturber: "learned".into(),
            train_curriculum_max: 100.0,
            train_curriculum_end_frac: 1.0,
            eval_episodes: 32,
            eval_regime: "pulse".into(),
            eval_max_force: 100.0,
            eval_pulse_force: 150.0,
            eval_pulse_period: 4.0,
            eval_pulse_duration: 0.5,
            eval_resample_direction: "per_pulse".into(),
            attack_epochs: 500,
            attack_n_envs: 64,
            attack_t_steps: 100,
            attack_budget_factor: 1.0,
            out_dir: "run".into(),
        }
    }
}

macro_rules! config_keys {
    ($self:ident, $apply:ident) => {
        $apply!("env.kind", env_kind, string);
        $apply!("env.mass", env_mass, f64);
        $apply!("env.dt", env_dt, f64);
        $apply!("env.horizon", env_horizon, u32);
        $apply!("env.friction", env_friction, f64);
        $apply!("env.actuator_force", env_actuator_force, f64);
        $apply!("env.actuator_torque", env_actuator_torque, f64);
        $apply!("env.inertia", env_inertia, f64);
        $apply!("env.f_max", env_f_max, f64);
        $apply!("env.randomize", env_randomize, bool);
        $apply!("env.terminate_on_fall", env_terminate_on_fall, bool);
        $apply!("env.command_mode", env_command_mode, string);
        $apply!("env.command", env_command, vec3);
        $apply!("env.command_v_max", env_command_v_max, f64);
        $apply!("env.command_w_max", env_command_w_max, f64);
        $apply!("env.fall_speed_err", env_fall_speed_err, f64);
        $apply!("env.fall_heading_err", env_fall_heading_err, f64);
        $apply!("env.fall_window", env_fall_window, f64);
        $apply!("lq.a", lq_a, string);
        $apply!("lq.b", lq_b, string);
        $apply!("lq.e", lq_e, string);
        $apply!("lq.q", lq_q, string);
        $apply!("lq.r", lq_r, string);
        $apply!("tabular.states", tabular_states, usize);
        $apply!("tabular.actions", tabular_actions, usize);
        $apply!("tabular.disturbances", tabular_disturbances, usize);
        $apply!("tabular.seed", tabular_seed, u64);
        $apply!("rewards.sigma_track", rewards_sigma_track, f64);
        $apply!("rewards.r_max_task", rewards_r_max_task, f64);
        $apply!("net.actor_hidden", net_actor_hidden, usize_list);
        $apply!("net.critic_hidden", net_critic_hidden, usize_list);
        $apply!("net.activation", net_activation, string);
        $apply!("net.disturber_force_scale", net_disturber_force_scale, f64);
        $apply!("net.actor_log_std_init", net_actor_log_std_init, f64);
        $apply!("net.disturber_log_std_init", net_disturber_log_std_init, f64);
        $apply!("hinf.enabled", hinf_enabled, bool);
        $apply!("hinf.eta0", hinf_eta0, f64);
        $apply!("hinf.lambda0", hinf_lambda0, f64);
        $apply!("hinf.alpha", hinf_alpha, f64);
        $apply!("hinf.lambda_max", hinf_lambda_max, f64);
        $apply!("hinf.clip_eps", hinf_clip_eps, f64);
        $apply!("hinf.entropy_coeff", hinf_entropy_coeff, f64);
        $apply!("hinf.value_coeff", hinf_value_coeff, f64);
        $apply!("hinf.disturber_entropy_coeff", hinf_disturber_entropy_coeff, f64);
        $apply!("hinf.gamma", hinf_gamma, f64);
        $apply!("hinf.gamma2", hinf_gamma2, f64);
        $apply!("hinf.lr", hinf_lr, f64);
        $apply!("hinf.epochs", hinf_epochs, usize);
        $apply!("hinf.minibatches", hinf_minibatches, usize);
        $apply!("hinf.normalize_adv", hinf_normalize_adv, bool);
        $apply!("hinf.disturber_baseline", hinf_disturber_baseline, string);
        $apply!("train.n_envs", train_n_envs, usize);
        $apply!("train.t_steps", train_t_steps, usize);
        $apply!("train.iterations", train_iterations, u64);
        $apply!("train.seed", train_seed, u64);
        $apply!("train.checkpoint_every", train_checkpoint_every, u64);
        $apply!("train.disturber", train_disturber, string);
        $apply!("train.curriculum_max", train_curriculum_max, f64);
        $apply!("train.curriculum_end_frac", train_curriculum_end_frac, f64);
        $apply!("eval.episodes", eval_episodes, usize);
        $apply!("eval.regime", eval_regime, string);
        $apply!("eval.max_force", eval_max_force, f64);
        $apply!("eval.pulse_force", eval_pulse_force, f64);
        $apply!("eval.pulse_period", eval_pulse_period, f64);
        $apply!("eval.pulse_duration", eval_pulse_duration, f64);
        $apply!("eval.resample_direction", eval_resample_direction, string);
        $apply!("attack.epochs", attack_epochs, u64);
        $apply!("attack.n_envs", attack_n_envs, usize);
        $apply!("attack.t_steps", attack_t_steps, usize);
        $apply!("attack.budget_factor", attack_budget_factor, f64);
        $apply!("out.dir", out_dir, string);
    };
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Set a single key from its text representation.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        macro_rules! apply {
            ($name:literal, $field:ident, string) => {
                if key == $name {
                    self.$field = value.to_string();
                    return Ok(());
                }
            };
            ($name:literal, $field:ident, f64) => {
                if key == $name {
                    self.$field = parse_scalar(key, value)?;
                    return Ok(());
                }
            };
            ($name:literal, $field:ident, u32) => {
                if key == $name {
                    self.$field = parse_int(key, value)? as u32;
                    return Ok(());
                }
            };
            ($name:literal, $field:ident, u64) => {
                if key == $name {
                    self.$field = parse_int(key, value)?;
                    return Ok(());
                }
            };
            ($name:literal, $field:ident, usize) => {
                if key == $name {
                    self.$field = parse_int(key, value)? as usize;
                    return Ok(());
                }
            };
            ($name:literal, $field:ident, bool) => {
                if key == $name {
                    self.$field = parse_bool(key, value)?;
                    return Ok(());
                }
            };
            ($name:literal, $field:ident, vec3) => {
                if key == $name {
                    self.$field = parse_vec3(key, value)?;
                    return Ok(());
                }
            };
            ($name:literal, $field:ident, usize_list) => {
                if key == $name {
                    self.$field = parse_usize_list(key, value)?;
                    return Ok(());
                }
            };
        }
        config_keys!(self, apply);
        Err(Error::Config(format!("unknown key `{key}`")))
    }

    /// Canonical text form (defaults included); parsing it back yields an
    /// identical configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        macro_rules! apply {
            ($name:literal, $field:ident, string) => {
                let _ = writeln!(out, "{} = {}", $name, self.$field);
            };
            ($name:literal, $field:ident, vec3) => {
                let _ = writeln!(out, "{} = {},{},{}", $name, self.$field[0], self.$field[1], self.$field[2]);
            };
            ($name:literal, $field:ident, usize_list) => {
                let _ = writeln!(
                    out,
                    "{} = {}",
                    $name,
                    self.$field.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
                );
            };
            ($name:literal, $field:ident, $_ty:ident) => {
                let _ = writeln!(out, "{} = {}", $name, self.$field);
            };
        }
        config_keys!(self, apply);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };
        check(
            matches!(self.env_kind.as_str(), "point_mass" | "lq" | "tabular"),
            "env.kind must be point_mass | lq | tabular",
        )?;
        check(self.env_mass > 0.0, "env.mass must be positive")?;
        check(self.env_dt > 0.0 && self.env_dt < 1.0, "env.dt must be in (0, 1)")?;
        check(self.env_horizon >= 1, "env.horizon must be at least 1")?;
        check(self.env_friction >= 0.0, "env.friction must be nonnegative")?;
        check(self.env_actuator_force > 0.0, "env.actuator_force must be positive")?;
        check(self.env_actuator_torque > 0.0, "env.actuator_torque must be positive")?;
        check(self.env_inertia > 0.0, "env.inertia must be positive")?;
        check(self.env_f_max >= 0.0, "env.f_max must be nonnegative")?;
        check(
            matches!(self.env_command_mode.as_str(), "fixed" | "sampled"),
            "env.command_mode must be fixed | sampled",
        )?;
        check(self.rewards_sigma_track > 0.0, "rewards.sigma_track must be positive")?;
        check(self.rewards_r_max_task > 0.0, "rewards.r_max_task must be positive")?;
        check(!self.net_actor_hidden.is_empty(), "net.actor_hidden must have at least one layer")?;
        check(!self.net_critic_hidden.is_empty(), "net.critic_hidden must have at least one layer")?;
        check(matches!(self.net_activation.as_str(), "tanh" | "elu"), "net.activation must be tanh | elu")?;
        check(self.net_disturber_force_scale > 0.0, "net.disturber_force_scale must be positive")?;
        check(self.hinf_eta0 >= 0.0, "hinf.eta0 must be nonnegative")?;
        check(self.hinf_lambda0 >= 0.0, "hinf.lambda0 must be nonnegative")?;
        check(self.hinf_alpha > 0.0, "hinf.alpha must be positive")?;
        check(self.hinf_lambda_max > 0.0, "hinf.lambda_max must be positive")?;
        check(self.hinf_clip_eps > 0.0 && self.hinf_clip_eps < 1.0, "hinf.clip_eps must be in (0, 1)")?;
        check((0.0..1.0).contains(&self.hinf_gamma), "hinf.gamma must be in [0, 1)")?;
        check((0.0..1.0).contains(&self.hinf_gamma2), "hinf.gamma2 must be in [0, 1)")?;
        check(self.hinf_lr > 0.0, "hinf.lr must be positive")?;
        check(self.hinf_epochs >= 1, "hinf.epochs must be at least 1")?;
        check(self.hinf_minibatches >= 1, "hinf.minibatches must be at least 1")?;
        check(
            matches!(self.hinf_disturber_baseline.as_str(), "raw" | "onestep"),
            "hinf.disturber_baseline must be raw | onestep",
        )?;
        check(self.train_n_envs >= 1, "train.n_envs must be at least 1")?;
        check(self.train_t_steps >= 1, "train.t_steps must be at least 1")?;
        check(
            matches!(self.train_disturber.as_str(), "learned" | "zero" | "curriculum"),
            "train.disturber must be learned | zero | curriculum",
        )?;
        check(self.train_curriculum_max >= 0.0, "train.curriculum_max must be nonnegative")?;
        check(
            self.train_curriculum_end_frac > 0.0 && self.train_curriculum_end_frac <= 1.0,
            "train.curriculum_end_frac must be in (0, 1]",
        )?;
        check(self.eval_episodes >= 1, "eval.episodes must be at least 1")?;
        check(
            matches!(self.eval_regime.as_str(), "none" | "continuous" | "pulse" | "adversary"),
            "eval.regime must be none | continuous | pulse | adversary",
        )?;
        check(self.eval_max_force >= 0.0, "eval.max_force must be nonnegative")?;
        check(self.eval_pulse_force >= 0.0, "eval.pulse_force must be nonnegative")?;
        check(
            self.eval_pulse_duration > 0.0 && self.eval_pulse_duration < self.eval_pulse_period,
            "eval.pulse_duration must be positive and shorter than eval.pulse_period",
        )?;
        check(
            matches!(self.eval_resample_direction.as_str(), "per_pulse" | "per_episode"),
            "eval.resample_direction must be per_pulse | per_episode",
        )?;
        check(self.attack_n_envs >= 1, "attack.n_envs must be at least 1")?;
        check(self.attack_t_steps >= 1, "attack.t_steps must be at least 1")?;
        check(self.attack_budget_factor > 0.0, "attack.budget_factor must be positive")?;
        check(self.tabular_states >= 1 && self.tabular_states <= 16, "tabular.states must be 1..=16")?;
        check(self.tabular_actions >= 1 && self.tabular_actions <= 4, "tabular.actions must be 1..=4")?;
        check(
            self.tabular_disturbances >= 1 && self.tabular_disturbances <= 4,
            "tabular.disturbances must be 1..=4",
        )?;
        Ok(())
    }

    pub fn activation(&self) -> Activation {
        match self.net_activation.as_str() {
            "elu" => Activation::Elu,
            _ => Activation::Tanh,
        }
    }

    pub fn disturber_baseline(&self) -> DisturberBaseline {
        match self.hinf_disturber_baseline.as_str() {
            "raw" => DisturberBaseline::Raw,
            _ => DisturberBaseline::OneStep,
        }
    }

    /// Construct the environment model this configuration describes.
    pub fn build_model(&self) -> Result<EnvModel> {
        match self.env_kind.as_str() {
            "point_mass" => Ok(EnvModel::PointMass(PointMassModel {
                mass: self.env_mass,
                dt: self.env_dt,
                horizon: self.env_horizon,
                actuator_force: self.env_actuator_force,
                actuator_torque: self.env_actuator_torque,
                inertia: self.env_inertia,
                friction: self.env_friction,
                f_max: self.env_f_max,
                command: if self.env_command_mode == "fixed" {
                    CommandSpec::Fixed(self.env_command)
                } else {
                    CommandSpec::Sampled { v_max: self.env_command_v_max, w_max: self.env_command_w_max }
                },
                terminate_on_fall: self.env_terminate_on_fall,
                fall_speed_err: self.env_fall_speed_err,
                fall_heading_err: self.env_fall_heading_err,
                fall_window: self.env_fall_window,
                sigma_track: self.rewards_sigma_track,
                r_max_task: self.rewards_r_max_task,
                reward_scales: Default::default(),
            })),
            "lq" => {
                let mut model = LqModel::new(
                    parse_matrix("lq.a", &self.lq_a)?,
                    parse_matrix("lq.b", &self.lq_b)?,
                    parse_matrix("lq.e", &self.lq_e)?,
                    parse_matrix("lq.q", &self.lq_q)?,
                    parse_matrix("lq.r", &self.lq_r)?,
                )?;
                model.horizon = self.env_horizon;
                model.f_max = self.env_f_max;
                model.task_reward_max = self.rewards_r_max_task;
                Ok(EnvModel::Lq(model))
            }
            "tabular" => {
                let mut game = TabularGame::random(
                    self.tabular_states,
                    self.tabular_actions,
                    self.tabular_disturbances,
                    self.tabular_seed,
                )?;
                game.horizon = self.env_horizon;
                Ok(EnvModel::Tabular(game))
            }
            other => Err(Error::Config(format!("unknown env.kind `{other}`"))),
        }
    }
}

fn parse_scalar(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::Config(format!("{key}: expected a number, got `{value}`")))
}

fn parse_int(key: &str, value: &str) -> Result<u64> {
    value.parse::<u64>().map_err(|_| Error::Config(format!("{key}: expected an integer, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got `{value}`"))),
    }
}

fn parse_vec3(key: &str, value: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| parse_scalar(key, p.trim()))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        return Err(Error::Config(format!("{key}: expected three comma-separated numbers")));
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|p| parse_int(key, p.trim()).map(|v| v as usize))
        .collect()
}

/// Matrix literal: rows separated by `;`, entries by `,`, e.g. `1,0;0,1`.
pub fn parse_matrix(key: &str, value: &str) -> Result<Mat> {
    let rows: Vec<Vec<f64>> = value
        .split(';')
        .map(|row| row.split(',').map(|p| parse_scalar(key, p.trim())).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Config(format!("{key}: ragged or empty matrix literal")));
    }
    Ok(Mat::from_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn roundtrip_through_text() {
        let mut cfg = RunConfig::default();
        cfg.hinf_alpha = 0.123;
        cfg.train_seed = 99;
        cfg.net_actor_hidden = vec![32, 16];
        let text = cfg.to_text();
        let parsed = RunConfig::parse(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.apply_text("nope.key = 1"), Err(Error::Config(_))));
    }

    #[test]
    fn out_of_range_rejected() {
        let text = "hinf.clip_eps = 1.5";
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# full line comment\n\nhinf.alpha = 0.05 # trailing\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.hinf_alpha, 0.05);
    }

    #[test]
    fn matrix_literals() {
        let m = parse_matrix("lq.a", "1,0;0,1").unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.get(1, 1), 1.0);
        assert!(parse_matrix("lq.a", "1,0;1").is_err());
    }

    #[test]
    fn build_models() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.build_model().unwrap(), EnvModel::PointMass(_)));
        cfg.env_kind = "lq".into();
        assert!(matches!(cfg.build_model().unwrap(), EnvModel::Lq(_)));
        cfg.env_kind = "tabular".into();
        assert!(matches!(cfg.build_model().unwrap(), EnvModel::Tabular(_)));
    }
}
