//! Disturbance environments: a planar point mass tracking velocity/yaw
//! commands, a linear-quadratic plant, and small tabular min-max games.
//!
//! All three expose the same joint transition: the next state depends on
//! the current state, the actor's action, and an external disturbance.
//! Episode-level domain randomization draws physical parameters from fixed
//! ranges (ground friction, restitution, actuator gain/damping scales, and
//! an initial-state scale).
//!
//! Environments are value-like: stepping takes a state and returns the
//! next one, and all randomness is derived from counter-based streams keyed
//! by `(episode seed, purpose, time index)`, so trajectories are bit-exact
//! regardless of scheduling.

mod lq;
mod point_mass;
mod tabular;

pub use lq::LqModel;
pub use point_mass::{CommandSpec, PointMassModel};
pub use tabular::TabularGame;

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use rand::Rng;

/// Domain-randomization ranges, fixed by the published table.
pub mod ranges {
    pub const FRICTION: (f64, f64) = (0.2, 2.75);
    pub const RESTITUTION: (f64, f64) = (0.0, 1.0);
    pub const KP_SCALE: (f64, f64) = (0.8, 1.2);
    pub const KD_SCALE: (f64, f64) = (0.8, 1.2);
    pub const INIT_STATE_SCALE: (f64, f64) = (0.5, 1.5);
}

/// Episode-level physical-parameter draw.
///
/// `restitution` is sampled and carried for range coverage even though the
/// point mass has no contacts to bounce.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationDraw {
    pub friction: f64,
    pub restitution: f64,
    pub kp_scale: f64,
    pub kd_scale: f64,
    pub init_state_scale: f64,
}

impl RandomizationDraw {
    /// Nominal draw used when randomization is off.
    pub fn nominal(friction: f64) -> Self {
        RandomizationDraw {
            friction,
            restitution: 0.0,
            kp_scale: 1.0,
            kd_scale: 1.0,
            init_state_scale: 1.0,
        }
    }

    pub fn sample<R: Rng>(rng: &mut R) -> Self {
        let u = |rng: &mut R, (lo, hi): (f64, f64)| rng.random_range(lo..=hi);
        RandomizationDraw {
            friction: u(rng, ranges::FRICTION),
            restitution: u(rng, ranges::RESTITUTION),
            kp_scale: u(rng, ranges::KP_SCALE),
            kd_scale: u(rng, ranges::KD_SCALE),
            init_state_scale: u(rng, ranges::INIT_STATE_SCALE),
        }
    }
}

/// Environment state. The planar fields are used directly by the point
/// mass; the LQ plant embeds its state vector into the same slots and the
/// tabular games use `discrete_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    /// Wrapped to (−π, π].
    pub heading: f64,
    pub angular_velocity: f64,
    /// (v_x^cmd, v_y^cmd, ω_z^cmd).
    pub command: [f64; 3],
    /// Applied (clipped) action of the previous step.
    pub last_action: Vec<f64>,
    /// Applied action two steps back, for the smoothness term.
    pub prev_action: Vec<f64>,
    pub time_index: u32,
    /// Discrete state for tabular games.
    pub discrete_index: usize,
    /// Commanded-heading reference, integrated from ω_z^cmd.
    pub heading_ref: f64,
    /// Consecutive steps with speed error above the failure threshold.
    pub speed_err_steps: u32,
    /// Consecutive steps with heading error above the failure threshold.
    pub heading_err_steps: u32,
    pub terminated: bool,
    /// Episode randomization, fixed at reset.
    pub draw: RandomizationDraw,
    /// Stream seed of this episode; per-step draws are keyed off it.
    pub stream_seed: u64,
}

impl EnvState {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.position[0],
            self.position[1],
            self.velocity[0],
            self.velocity[1],
            self.heading,
            self.angular_velocity,
            self.command[0],
            self.command[1],
            self.command[2],
            self.heading_ref,
        ];
        if !scalars.iter().all(|v| v.is_finite())
            || !self.last_action.iter().all(|v| v.is_finite())
            || !self.prev_action.iter().all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("environment state".into()));
        }
        if self.heading <= -std::f64::consts::PI || self.heading > std::f64::consts::PI {
            return Err(Error::InvalidArgument(format!("heading {} not wrapped", self.heading)));
        }
        Ok(())
    }
}

/// Wrap an angle to (−π, π].
pub fn wrap_angle(h: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = h.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// External disturbance: a force vector for the continuous models, a
/// discrete index for tabular games.
#[derive(Debug, Clone, PartialEq)]
pub enum Disturbance {
    Force(Vec<f64>),
    Index(usize),
}

impl Disturbance {
    pub fn zero(dim: usize) -> Self {
        Disturbance::Force(vec![0.0; dim])
    }

    pub fn force(&self) -> &[f64] {
        match self {
            Disturbance::Force(f) => f,
            Disturbance::Index(_) => &[],
        }
    }
}

/// Result of one joint transition.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub next_state: EnvState,
    pub task_reward: f64,
    pub aux_reward: f64,
    /// Episode over (failure or horizon).
    pub terminated: bool,
    /// Episode over because the horizon ran out; values may bootstrap.
    pub truncated: bool,
    /// Sustained-failure event this step.
    pub fall: bool,
}

impl StepResult {
    pub fn reward(&self) -> f64 {
        self.task_reward + self.aux_reward
    }
}

/// One of the three environment models.
#[derive(Debug, Clone)]
pub enum EnvModel {
    PointMass(PointMassModel),
    Lq(LqModel),
    Tabular(TabularGame),
}

impl EnvModel {
    pub fn feature_dim(&self) -> usize {
        match self {
            EnvModel::PointMass(_) => point_mass::FEATURE_DIM,
            EnvModel::Lq(m) => m.state_dim(),
            EnvModel::Tabular(g) => g.n_states,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            EnvModel::PointMass(_) => point_mass::ACTION_DIM,
            EnvModel::Lq(m) => m.input_dim(),
            EnvModel::Tabular(_) => 1,
        }
    }

    /// Dimension of the continuous disturbance head driving this model.
    pub fn disturbance_dim(&self) -> usize {
        match self {
            EnvModel::PointMass(_) => 2,
            EnvModel::Lq(m) => m.disturbance_dim(),
            EnvModel::Tabular(_) => 1,
        }
    }

    /// Disturbance-intensity clip.
    pub fn f_max(&self) -> f64 {
        match self {
            EnvModel::PointMass(m) => m.f_max,
            EnvModel::Lq(m) => m.f_max,
            EnvModel::Tabular(g) => g.max_norm(),
        }
    }

    pub fn horizon(&self) -> u32 {
        match self {
            EnvModel::PointMass(m) => m.horizon,
            EnvModel::Lq(m) => m.horizon,
            EnvModel::Tabular(g) => g.horizon,
        }
    }

    /// Upper bound of the task reward for this model.
    pub fn r_max_task(&self) -> f64 {
        match self {
            EnvModel::PointMass(m) => m.r_max_task,
            EnvModel::Lq(m) => m.task_reward_max,
            EnvModel::Tabular(g) => g.r_max_task(),
        }
    }

    /// Start a fresh episode. `seed` is the full episode stream key;
    /// identical `(model, seed, randomize)` yields bit-identical states.
    pub fn reset(&self, seed: u64, randomize: bool) -> Result<EnvState> {
        let mut rng = rng::stream(&[seed, tag::RESET]);
        match self {
            EnvModel::PointMass(m) => m.reset(seed, randomize, &mut rng),
            EnvModel::Lq(m) => m.reset(seed, randomize, &mut rng),
            EnvModel::Tabular(g) => g.reset(seed, randomize, &mut rng),
        }
    }

    /// Joint transition under `(action, disturbance)`.
    pub fn step(&self, state: &EnvState, action: &[f64], disturbance: &Disturbance) -> Result<StepResult> {
        if state.terminated {
            return Err(Error::EpisodeTerminated(state.time_index));
        }
        state.validate()?;
        if !action.iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite("action".into()));
        }
        if action.len() != self.action_dim() {
            return Err(Error::InvalidArgument(format!(
                "action dim {} (expected {})",
                action.len(),
                self.action_dim()
            )));
        }
        if let Disturbance::Force(f) = disturbance {
            if !f.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("disturbance".into()));
            }
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > self.f_max() + 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "disturbance intensity {norm} exceeds clip {}",
                    self.f_max()
                )));
            }
        }
        match self {
            EnvModel::PointMass(m) => m.step(state, action, disturbance),
            EnvModel::Lq(m) => m.step(state, action, disturbance),
            EnvModel::Tabular(g) => g.step(state, action, disturbance),
        }
    }

    /// Observation features fed to the actor, disturber, and critic.
    pub fn features(&self, state: &EnvState) -> Vec<f64> {
        match self {
            EnvModel::PointMass(m) => m.features(state),
            EnvModel::Lq(m) => m.features(state),
            EnvModel::Tabular(g) => g.features(state),
        }
    }

    /// Map a raw disturber sample to a model disturbance. Continuous
    /// models expect an already clipped force; tabular games quantize the
    /// first component into an index.
    pub fn make_disturbance(&self, clipped_force: &[f64]) -> Disturbance {
        match self {
            EnvModel::PointMass(_) | EnvModel::Lq(_) => Disturbance::Force(clipped_force.to_vec()),
            EnvModel::Tabular(g) => Disturbance::Index(tabular::quantize(clipped_force[0], g.n_disturbances)),
        }
    }

    /// Intensity ‖d‖₂ of an applied disturbance.
    pub fn disturbance_norm(&self, d: &Disturbance) -> f64 {
        match (self, d) {
            (EnvModel::Tabular(g), Disturbance::Index(i)) => g.disturbance_norms[*i],
            (_, Disturbance::Force(f)) => f.iter().map(|v| v * v).sum::<f64>().sqrt(),
            (_, Disturbance::Index(_)) => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> EnvModel {
        EnvModel::PointMass(PointMassModel::default())
    }

    #[test]
    fn reset_nominal_state() {
        let st = model().reset(7, false).unwrap();
        assert_eq!(st.position, [0.0, 0.0]);
        assert_eq!(st.velocity, [0.0, 0.0]);
        assert_eq!(st.heading, 0.0);
        assert_eq!(st.time_index, 0);
        assert_eq!(st.draw, RandomizationDraw::nominal(PointMassModel::default().friction));
    }

    #[test]
    fn reset_is_deterministic() {
        let a = model().reset(7, true).unwrap();
        let b = model().reset(7, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn randomization_ranges_covered() {
        // Empirical min/max of every parameter within 1% of its interval.
        let m = model();
        let mut mins = [f64::INFINITY; 5];
        let mut maxs = [f64::NEG_INFINITY; 5];
        for seed in 0..10_000u64 {
            let st = m.reset(seed, true).unwrap();
            let d = &st.draw;
            let vals = [d.friction, d.restitution, d.kp_scale, d.kd_scale, d.init_state_scale];
            for (i, v) in vals.iter().enumerate() {
                mins[i] = mins[i].min(*v);
                maxs[i] = maxs[i].max(*v);
            }
        }
        let intervals = [
            ranges::FRICTION,
            ranges::RESTITUTION,
            ranges::KP_SCALE,
            ranges::KD_SCALE,
            ranges::INIT_STATE_SCALE,
        ];
        for (i, (lo, hi)) in intervals.iter().enumerate() {
            let width = hi - lo;
            assert!(mins[i] >= *lo && mins[i] <= lo + 0.01 * width, "param {i} min {}", mins[i]);
            assert!(maxs[i] <= *hi && maxs[i] >= hi - 0.01 * width, "param {i} max {}", maxs[i]);
        }
    }

    #[test]
    fn step_rejects_terminated_and_nonfinite() {
        let m = model();
        let mut st = m.reset(0, false).unwrap();
        let err = m.step(&st, &[f64::NAN, 0.0, 0.0], &Disturbance::zero(2));
        assert!(err.is_err());
        st.terminated = true;
        let err = m.step(&st, &[0.0, 0.0, 0.0], &Disturbance::zero(2));
        assert!(matches!(err, Err(Error::EpisodeTerminated(_))));
    }

    #[test]
    fn step_rejects_overlimit_disturbance() {
        let m = model();
        let st = m.reset(0, false).unwrap();
        let d = Disturbance::Force(vec![90.0, 90.0]); // ‖d‖ ≈ 127 > 100
        assert!(m.step(&st, &[0.0, 0.0, 0.0], &d).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        let w = wrap_angle(7.5);
        assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
    }
}
