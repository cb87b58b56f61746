//! Planar point-mass tracker.
//!
//! A 12 kg mass on a plane is driven by per-axis actuator forces plus a
//! yaw torque, tracks a velocity/yaw-rate command, and is pushed around by
//! an external force applied at its center. Viscous friction damps both
//! the translational and rotational motion:
//!
//! `a = (F_action + F_disturb)/m − friction·v`
//!
//! The mass is chosen near a small quadruped's so force magnitudes keep
//! their meaning. A sustained failure ("fall") fires when the speed error
//! or heading error stays above its threshold for a configured window.

use super::{wrap_angle, Disturbance, EnvState, RandomizationDraw, StepResult};
use crate::error::Result;
use crate::rewards::{locomotion_reward, LocomotionScales, RewardInputs};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// [v_x, v_y, ω_z, sin θ, cos θ, heading error, cmd(3), last_action(3)].
pub const FEATURE_DIM: usize = 12;
/// [f_x, f_y, torque] in [−1, 1], scaled by the actuator limits.
pub const ACTION_DIM: usize = 3;

/// How episode commands are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum CommandSpec {
    Fixed([f64; 3]),
    /// v_x, v_y ~ U[−v_max, v_max], ω_z ~ U[−w_max, w_max] per episode.
    Sampled { v_max: f64, w_max: f64 },
}

#[derive(Debug, Clone)]
pub struct PointMassModel {
    pub mass: f64,
    pub dt: f64,
    pub horizon: u32,
    /// Actuator force limit per axis (N).
    pub actuator_force: f64,
    /// Actuator yaw torque limit (N·m).
    pub actuator_torque: f64,
    pub inertia: f64,
    /// Nominal viscous friction coefficient (1/s).
    pub friction: f64,
    /// Disturbance-intensity clip (N).
    pub f_max: f64,
    pub command: CommandSpec,
    pub terminate_on_fall: bool,
    /// Speed-error failure threshold (m/s).
    pub fall_speed_err: f64,
    /// Heading-error failure threshold (rad).
    pub fall_heading_err: f64,
    /// Sustain window before a failure fires (s).
    pub fall_window: f64,
    pub sigma_track: f64,
    pub r_max_task: f64,
    pub reward_scales: LocomotionScales,
}

impl Default for PointMassModel {
    fn default() -> Self {
        PointMassModel {
            mass: 12.0,
            dt: 0.02,
            horizon: 1000,
            actuator_force: 150.0,
            actuator_torque: 30.0,
            inertia: 0.5,
            friction: 1.0,
            f_max: 100.0,
            command: CommandSpec::Fixed([1.0, 0.0, 0.0]),
            terminate_on_fall: true,
            fall_speed_err: 3.0,
            fall_heading_err: std::f64::consts::FRAC_PI_2,
            fall_window: 0.5,
            sigma_track: 0.25,
            r_max_task: 1.5,
            reward_scales: LocomotionScales::default(),
        }
    }
}

impl PointMassModel {
    fn fall_window_steps(&self) -> u32 {
        (self.fall_window / self.dt).round().max(1.0) as u32
    }

    pub(super) fn reset(&self, seed: u64, randomize: bool, rng: &mut ChaCha8Rng) -> Result<EnvState> {
        let draw = if randomize { RandomizationDraw::sample(rng) } else { RandomizationDraw::nominal(self.friction) };
        let command = match &self.command {
            CommandSpec::Fixed(c) => *c,
            CommandSpec::Sampled { v_max, w_max } => [
                rng.random_range(-v_max..=*v_max),
                rng.random_range(-v_max..=*v_max),
                rng.random_range(-w_max..=*w_max),
            ],
        };
        // Nominal initial state is the origin at rest; the init-state scale
        // multiplies it and is kept for models with nonzero nominals.
        let s = draw.init_state_scale;
        Ok(EnvState {
            position: [0.0 * s, 0.0 * s],
            velocity: [0.0 * s, 0.0 * s],
            heading: 0.0,
            angular_velocity: 0.0,
            command,
            last_action: vec![0.0; ACTION_DIM],
            prev_action: vec![0.0; ACTION_DIM],
            time_index: 0,
            discrete_index: 0,
            heading_ref: 0.0,
            speed_err_steps: 0,
            heading_err_steps: 0,
            terminated: false,
            draw,
            stream_seed: seed,
        })
    }

    pub(super) fn step(&self, state: &EnvState, action: &[f64], disturbance: &Disturbance) -> Result<StepResult> {
        let draw = &state.draw;
        let applied: Vec<f64> = action.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        let force = [
            draw.kp_scale * self.actuator_force * applied[0],
            draw.kp_scale * self.actuator_force * applied[1],
        ];
        let torque = draw.kp_scale * self.actuator_torque * applied[2];
        let dist = disturbance.force();
        let (dx, dy) = (dist.first().copied().unwrap_or(0.0), dist.get(1).copied().unwrap_or(0.0));
        let damping = draw.friction * draw.kd_scale;

        let accel = [
            (force[0] + dx) / self.mass - damping * state.velocity[0],
            (force[1] + dy) / self.mass - damping * state.velocity[1],
        ];
        let ang_accel = torque / self.inertia - damping * state.angular_velocity;

        let velocity = [state.velocity[0] + self.dt * accel[0], state.velocity[1] + self.dt * accel[1]];
        let angular_velocity = state.angular_velocity + self.dt * ang_accel;
        let position = [state.position[0] + self.dt * velocity[0], state.position[1] + self.dt * velocity[1]];
        let heading = wrap_angle(state.heading + self.dt * angular_velocity);
        let heading_ref = wrap_angle(state.heading_ref + self.dt * state.command[2]);

        // Sustained-failure bookkeeping on the post-step state.
        let speed_err = ((velocity[0] - state.command[0]).powi(2) + (velocity[1] - state.command[1]).powi(2)).sqrt();
        let heading_err = wrap_angle(heading - heading_ref).abs();
        let mut speed_err_steps = if speed_err > self.fall_speed_err { state.speed_err_steps + 1 } else { 0 };
        let mut heading_err_steps = if heading_err > self.fall_heading_err { state.heading_err_steps + 1 } else { 0 };
        let window = self.fall_window_steps();
        let fall = speed_err_steps >= window || heading_err_steps >= window;
        if fall {
            // Re-arm so later falls in the same episode are counted again.
            speed_err_steps = 0;
            heading_err_steps = 0;
        }

        let time_index = state.time_index + 1;
        let truncated = time_index >= self.horizon;
        let terminated = truncated || (fall && self.terminate_on_fall);

        let inputs = RewardInputs {
            v_xy: velocity,
            v_cmd_xy: [state.command[0], state.command[1]],
            omega_z: angular_velocity,
            omega_z_cmd: state.command[2],
            action: applied.clone(),
            action_prev: state.last_action.clone(),
            action_prev2: state.prev_action.clone(),
            ..Default::default()
        };
        let breakdown = locomotion_reward(&inputs, self.sigma_track, &self.reward_scales)?;

        let next_state = EnvState {
            position,
            velocity,
            heading,
            angular_velocity,
            command: state.command,
            prev_action: state.last_action.clone(),
            last_action: applied,
            time_index,
            discrete_index: 0,
            heading_ref,
            speed_err_steps,
            heading_err_steps,
            terminated,
            draw: state.draw.clone(),
            stream_seed: state.stream_seed,
        };

        Ok(StepResult {
            next_state,
            task_reward: breakdown.task,
            aux_reward: breakdown.aux,
            terminated,
            truncated,
            fall,
        })
    }

    pub(super) fn features(&self, state: &EnvState) -> Vec<f64> {
        vec![
            state.velocity[0],
            state.velocity[1],
            state.angular_velocity,
            state.heading.sin(),
            state.heading.cos(),
            wrap_angle(state.heading - state.heading_ref),
            state.command[0],
            state.command[1],
            state.command[2],
            state.last_action[0],
            state.last_action[1],
            state.last_action[2],
        ]
    }
}
