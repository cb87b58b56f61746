//! Reward terms for the locomotion and standing tasks, the task/auxiliary
//! split, and the cost map `C = R_max_task − R_task`.
//!
//! Every term is a pure function of [`RewardInputs`]. Terms marked as task
//! terms (the tracking rewards) feed the `task` aggregate; everything else
//! is auxiliary regularization. Scales default to the published tables and
//! can be overridden through the run configuration.
//!
//! The point-mass environment only produces meaningful inputs for the
//! tracking, action-rate and smoothness terms; joint-space terms evaluate
//! on empty vectors and contribute zero, but all of them remain exercised
//! as pure functions by the unit tests.

use crate::error::{Error, Result};

/// Everything the reward tables can read. Vectors may be empty when the
/// underlying system has no such quantity (e.g. no joints).
#[derive(Debug, Clone, Default)]
pub struct RewardInputs {
    pub v_xy: [f64; 2],
    pub v_cmd_xy: [f64; 2],
    pub omega_z: f64,
    pub omega_z_cmd: f64,
    pub v_z: f64,
    pub omega_xy: [f64; 2],
    pub joint_pos: Vec<f64>,
    pub joint_vel: Vec<f64>,
    pub joint_acc: Vec<f64>,
    pub joint_torque: Vec<f64>,
    pub joint_pos_limits: Option<(Vec<f64>, Vec<f64>)>,
    pub joint_vel_limits: Option<(Vec<f64>, Vec<f64>)>,
    pub joint_torque_limits: Option<(Vec<f64>, Vec<f64>)>,
    pub action: Vec<f64>,
    pub action_prev: Vec<f64>,
    pub action_prev2: Vec<f64>,
    pub gravity_xy: [f64; 2],
    pub base_height: f64,
    pub base_height_target: f64,
    /// Contact flags for the penalized joint set P.
    pub contacts_penalized: Vec<bool>,
    /// Contact flags for the extra-penalized joint set E_p.
    pub contacts_extra: Vec<bool>,
    /// Contact flags for the two front feet.
    pub front_feet_contact: [bool; 2],
    /// Body forward axis (standing task orientation).
    pub v_forward: [f64; 3],
}

impl RewardInputs {
    fn check_finite(&self) -> Result<()> {
        let scalars = [
            self.v_xy[0],
            self.v_xy[1],
            self.v_cmd_xy[0],
            self.v_cmd_xy[1],
            self.omega_z,
            self.omega_z_cmd,
            self.v_z,
            self.omega_xy[0],
            self.omega_xy[1],
            self.gravity_xy[0],
            self.gravity_xy[1],
            self.base_height,
            self.base_height_target,
            self.v_forward[0],
            self.v_forward[1],
            self.v_forward[2],
        ];
        let vecs = [
            &self.joint_pos,
            &self.joint_vel,
            &self.joint_acc,
            &self.joint_torque,
            &self.action,
            &self.action_prev,
            &self.action_prev2,
        ];
        if scalars.iter().all(|v| v.is_finite()) && vecs.iter().all(|v| v.iter().all(|x| x.is_finite())) {
            Ok(())
        } else {
            Err(Error::NonFinite("reward inputs".into()))
        }
    }
}

/// One evaluated reward term: scaled value plus whether it belongs to the
/// task aggregate.
#[derive(Debug, Clone)]
pub struct RewardTerm {
    pub name: &'static str,
    pub value: f64,
    pub task: bool,
}

/// Per-term values and the task/auxiliary aggregates.
#[derive(Debug, Clone)]
pub struct RewardBreakdown {
    pub terms: Vec<RewardTerm>,
    pub task: f64,
    pub aux: f64,
}

impl RewardBreakdown {
    fn from_terms(terms: Vec<RewardTerm>) -> Self {
        let task = terms.iter().filter(|t| t.task).map(|t| t.value).sum();
        let aux = terms.iter().filter(|t| !t.task).map(|t| t.value).sum();
        RewardBreakdown { terms, task, aux }
    }

    pub fn total(&self) -> f64 {
        self.task + self.aux
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

/// Locomotion-task term scales.
#[derive(Debug, Clone)]
pub struct LocomotionScales {
    pub lin_tracking: f64,
    pub ang_tracking: f64,
    pub z_velocity: f64,
    pub roll_pitch: f64,
    pub joint_power: f64,
    pub joint_power_dist: f64,
    pub joint_acc: f64,
    pub action_rate: f64,
    pub smoothness: f64,
    pub joint_pos_limits: f64,
    pub joint_vel_limits: f64,
    pub torque_limits: f64,
    pub orientation: f64,
    pub base_height: f64,
}

impl Default for LocomotionScales {
    fn default() -> Self {
        LocomotionScales {
            lin_tracking: 1.0,
            ang_tracking: 0.5,
            z_velocity: -2.0,
            roll_pitch: -0.05,
            joint_power: -2e-5,
            joint_power_dist: -1e-5,
            joint_acc: -2.5e-7,
            action_rate: -0.01,
            smoothness: -0.01,
            joint_pos_limits: -5.0,
            joint_vel_limits: -5.0,
            torque_limits: -5.0,
            orientation: -0.2,
            base_height: -1.0,
        }
    }
}

/// Standing-task term scales.
#[derive(Debug, Clone)]
pub struct StandingScales {
    pub lin_tracking: f64,
    pub ang_tracking: f64,
    pub joint_vel: f64,
    pub joint_acc: f64,
    pub action_rate: f64,
    pub joint_pos_limits: f64,
    pub joint_vel_limits: f64,
    pub torque_limits: f64,
    pub collision: f64,
    pub extra_collision: f64,
    pub front_feet_contact: f64,
    pub orientation: f64,
    pub root_height: f64,
}

impl Default for StandingScales {
    fn default() -> Self {
        StandingScales {
            lin_tracking: 1.0,
            ang_tracking: 0.5,
            joint_vel: -2e-4,
            joint_acc: -2.5e-7,
            action_rate: -0.01,
            joint_pos_limits: -10.0,
            joint_vel_limits: -10.0,
            torque_limits: -10.0,
            collision: -1.0,
            extra_collision: -1.0,
            front_feet_contact: 1.0,
            orientation: 1.0,
            root_height: 1.0,
        }
    }
}

/// Ideal forward axis for the standing task, before normalization.
pub const STANDING_IDEAL_AXIS: [f64; 3] = [0.2, 0.0, 1.0];

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn diff_sq_norm(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fraction of limit violations: mean of 1[v ∉ (lo, hi)] over components.
/// Empty vectors or absent limits contribute 0.
fn limit_violation(values: &[f64], limits: &Option<(Vec<f64>, Vec<f64>)>) -> f64 {
    match limits {
        Some((lo, hi)) if !values.is_empty() => {
            let n = values.len() as f64;
            let violations = values
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .filter(|(v, (l, h))| **v <= **l || **v >= **h)
                .count();
            violations as f64 / n
        }
        _ => 0.0,
    }
}

/// Population variance; 0 for empty input.
fn population_variance(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

fn contact_fraction(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|c| **c).count() as f64 / flags.len() as f64
}

/// Locomotion rewards. Tracking terms are the task aggregate; everything
/// else is auxiliary.
pub fn locomotion_reward(inputs: &RewardInputs, sigma_track: f64, scales: &LocomotionScales) -> Result<RewardBreakdown> {
    if sigma_track <= 0.0 || !sigma_track.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma_track must be positive, got {sigma_track}")));
    }
    inputs.check_finite()?;

    let lin_err = diff_sq_norm(&inputs.v_xy, &inputs.v_cmd_xy);
    let ang_err = (inputs.omega_z - inputs.omega_z_cmd).powi(2);
    let power: Vec<f64> = inputs
        .joint_torque
        .iter()
        .zip(&inputs.joint_vel)
        .map(|(t, q)| t.abs() * q.abs())
        .collect();

    let terms = vec![
        RewardTerm {
            name: "lin_tracking",
            value: scales.lin_tracking * (-lin_err / sigma_track).exp(),
            task: true,
        },
        RewardTerm {
            name: "ang_tracking",
            value: scales.ang_tracking * (-ang_err / sigma_track).exp(),
            task: true,
        },
        RewardTerm { name: "z_velocity", value: scales.z_velocity * inputs.v_z * inputs.v_z, task: false },
        RewardTerm { name: "roll_pitch", value: scales.roll_pitch * sq_norm(&inputs.omega_xy), task: false },
        RewardTerm { name: "joint_power", value: scales.joint_power * power.iter().sum::<f64>(), task: false },
        RewardTerm {
            name: "joint_power_dist",
            value: scales.joint_power_dist * population_variance(&power),
            task: false,
        },
        RewardTerm { name: "joint_acc", value: scales.joint_acc * sq_norm(&inputs.joint_acc), task: false },
        RewardTerm {
            name: "action_rate",
            value: scales.action_rate * diff_sq_norm(&inputs.action, &inputs.action_prev),
            task: false,
        },
        RewardTerm {
            name: "smoothness",
            value: scales.smoothness
                * inputs
                    .action
                    .iter()
                    .zip(inputs.action_prev.iter().zip(&inputs.action_prev2))
                    .map(|(a, (b, c))| {
                        let d = a - 2.0 * b + c;
                        d * d
                    })
                    .sum::<f64>(),
            task: false,
        },
        RewardTerm {
            name: "joint_pos_limits",
            value: scales.joint_pos_limits * limit_violation(&inputs.joint_pos, &inputs.joint_pos_limits),
            task: false,
        },
        RewardTerm {
            name: "joint_vel_limits",
            value: scales.joint_vel_limits * limit_violation(&inputs.joint_vel, &inputs.joint_vel_limits),
            task: false,
        },
        RewardTerm {
            name: "torque_limits",
            value: scales.torque_limits * limit_violation(&inputs.joint_torque, &inputs.joint_torque_limits),
            task: false,
        },
        RewardTerm { name: "orientation", value: scales.orientation * sq_norm(&inputs.gravity_xy), task: false },
        RewardTerm {
            name: "base_height",
            value: scales.base_height * (inputs.base_height - inputs.base_height_target).powi(2),
            task: false,
        },
    ];
    Ok(RewardBreakdown::from_terms(terms))
}

/// Orientation factor for the standing task:
/// `(0.5·cossim(v_f, v̂*) + 0.5)²`.
pub fn standing_orientation(v_forward: &[f64; 3]) -> Result<f64> {
    let norm = sq_norm(v_forward).sqrt();
    if norm < 1e-12 {
        return Err(Error::InvalidArgument("zero-length forward axis".into()));
    }
    let ideal_norm = sq_norm(&STANDING_IDEAL_AXIS).sqrt();
    let dot: f64 = v_forward.iter().zip(&STANDING_IDEAL_AXIS).map(|(a, b)| a * b).sum();
    let cos_sim = dot / (norm * ideal_norm);
    Ok((0.5 * cos_sim + 0.5).powi(2))
}

/// Standing rewards. Tracking terms are multiplied by the orientation
/// factor so the system must stabilize its pose before chasing commands.
pub fn standing_reward(inputs: &RewardInputs, sigma_track: f64, scales: &StandingScales) -> Result<RewardBreakdown> {
    if sigma_track <= 0.0 || !sigma_track.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma_track must be positive, got {sigma_track}")));
    }
    inputs.check_finite()?;
    let r_ori = standing_orientation(&inputs.v_forward)?;

    let lin_err = diff_sq_norm(&inputs.v_xy, &inputs.v_cmd_xy);
    let ang_err = (inputs.omega_z - inputs.omega_z_cmd).powi(2);
    let front_free = !inputs.front_feet_contact[0] && !inputs.front_feet_contact[1];

    let terms = vec![
        RewardTerm {
            name: "lin_tracking",
            value: scales.lin_tracking * (-lin_err / sigma_track).exp() * r_ori,
            task: true,
        },
        RewardTerm {
            name: "ang_tracking",
            value: scales.ang_tracking * (-ang_err / sigma_track).exp() * r_ori,
            task: true,
        },
        RewardTerm { name: "joint_vel", value: scales.joint_vel * sq_norm(&inputs.joint_vel), task: false },
        RewardTerm { name: "joint_acc", value: scales.joint_acc * sq_norm(&inputs.joint_acc), task: false },
        RewardTerm {
            name: "action_rate",
            value: scales.action_rate * diff_sq_norm(&inputs.action, &inputs.action_prev),
            task: false,
        },
        RewardTerm {
            name: "joint_pos_limits",
            value: scales.joint_pos_limits * limit_violation(&inputs.joint_pos, &inputs.joint_pos_limits),
            task: false,
        },
        RewardTerm {
            name: "joint_vel_limits",
            value: scales.joint_vel_limits * limit_violation(&inputs.joint_vel, &inputs.joint_vel_limits),
            task: false,
        },
        RewardTerm {
            name: "torque_limits",
            value: scales.torque_limits * limit_violation(&inputs.joint_torque, &inputs.joint_torque_limits),
            task: false,
        },
        RewardTerm {
            name: "collision",
            value: scales.collision * contact_fraction(&inputs.contacts_penalized),
            task: false,
        },
        RewardTerm {
            name: "extra_collision",
            value: scales.extra_collision * contact_fraction(&inputs.contacts_extra),
            task: false,
        },
        RewardTerm {
            name: "front_feet_contact",
            value: scales.front_feet_contact * if front_free { 1.0 } else { 0.0 },
            task: false,
        },
        RewardTerm { name: "orientation", value: scales.orientation * r_ori, task: false },
        RewardTerm {
            name: "root_height",
            value: scales.root_height * inputs.base_height.exp().min(0.55),
            task: false,
        },
    ];
    Ok(RewardBreakdown::from_terms(terms))
}

/// `C = R_max_task − R_task`, clamped at zero from below. A task reward
/// exceeding the bound beyond tolerance signals a mis-set bound and is a
/// hard error.
pub fn cost(task_reward: f64, r_max_task: f64) -> Result<f64> {
    if !task_reward.is_finite() || !r_max_task.is_finite() {
        return Err(Error::NonFinite("cost inputs".into()));
    }
    if task_reward > r_max_task + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "task reward {task_reward} exceeds configured bound {r_max_task}"
        )));
    }
    Ok((r_max_task - task_reward).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perfect_locomotion_inputs() -> RewardInputs {
        RewardInputs {
            v_xy: [1.0, 0.0],
            v_cmd_xy: [1.0, 0.0],
            omega_z: 0.2,
            omega_z_cmd: 0.2,
            base_height: 0.0,
            base_height_target: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn perfect_tracking_hits_task_bound() {
        let b = locomotion_reward(&perfect_locomotion_inputs(), 0.25, &LocomotionScales::default()).unwrap();
        assert!((b.task - 1.5).abs() < 1e-12);
        assert!(b.aux.abs() < 1e-12);
    }

    #[test]
    fn tracking_error_of_sigma_gives_e_inverse() {
        let mut inputs = perfect_locomotion_inputs();
        // ‖v − v_cmd‖² = σ_track
        inputs.v_xy = [1.0 + 0.25f64.sqrt(), 0.0];
        let b = locomotion_reward(&inputs, 0.25, &LocomotionScales::default()).unwrap();
        let expected = 1.0 * (-1.0f64).exp() + 0.5;
        assert!((b.task - expected).abs() < 1e-12);
        assert!((expected - 0.8679).abs() < 1e-4);
    }

    #[test]
    fn identical_actions_zero_rate_and_smoothness() {
        let mut inputs = perfect_locomotion_inputs();
        inputs.action = vec![0.3, -0.2, 0.1];
        inputs.action_prev = inputs.action.clone();
        inputs.action_prev2 = inputs.action.clone();
        let b = locomotion_reward(&inputs, 0.25, &LocomotionScales::default()).unwrap();
        assert_eq!(b.term("action_rate").unwrap(), 0.0);
        assert_eq!(b.term("smoothness").unwrap(), 0.0);
    }

    #[test]
    fn locomotion_terms_match_closed_forms() {
        let inputs = RewardInputs {
            v_xy: [0.5, 0.5],
            v_cmd_xy: [1.0, 0.0],
            omega_z: 0.4,
            omega_z_cmd: 0.0,
            v_z: 0.3,
            omega_xy: [0.1, -0.2],
            joint_vel: vec![1.0, -2.0],
            joint_acc: vec![10.0, 20.0],
            joint_torque: vec![3.0, 1.0],
            action: vec![0.5, 0.0],
            action_prev: vec![0.0, 0.0],
            action_prev2: vec![-0.5, 0.0],
            gravity_xy: [0.1, 0.0],
            base_height: 0.4,
            base_height_target: 0.5,
            joint_pos: vec![0.0],
            joint_pos_limits: Some((vec![-1.0], vec![1.0])),
            ..Default::default()
        };
        let b = locomotion_reward(&inputs, 0.25, &LocomotionScales::default()).unwrap();
        assert!((b.term("z_velocity").unwrap() - (-2.0 * 0.09)).abs() < 1e-12);
        assert!((b.term("roll_pitch").unwrap() - (-0.05 * 0.05)).abs() < 1e-12);
        // power = (3, 2), sum 5, population variance 0.25
        assert!((b.term("joint_power").unwrap() - (-2e-5 * 5.0)).abs() < 1e-15);
        assert!((b.term("joint_power_dist").unwrap() - (-1e-5 * 0.25)).abs() < 1e-15);
        assert!((b.term("joint_acc").unwrap() - (-2.5e-7 * 500.0)).abs() < 1e-12);
        assert!((b.term("action_rate").unwrap() - (-0.01 * 0.25)).abs() < 1e-12);
        // a − 2b + c = 0.5 − 0 − 0.5 = 0 in dim 0, 0 in dim 1
        assert_eq!(b.term("smoothness").unwrap(), 0.0);
        assert!((b.term("orientation").unwrap() - (-0.2 * 0.01)).abs() < 1e-12);
        assert!((b.term("base_height").unwrap() - (-1.0 * 0.01)).abs() < 1e-12);
        assert_eq!(b.term("joint_pos_limits").unwrap(), 0.0);
    }

    #[test]
    fn limit_indicator_fires_outside_interval() {
        let mut inputs = perfect_locomotion_inputs();
        inputs.joint_pos = vec![2.0, 0.0];
        inputs.joint_pos_limits = Some((vec![-1.0, -1.0], vec![1.0, 1.0]));
        let b = locomotion_reward(&inputs, 0.25, &LocomotionScales::default()).unwrap();
        assert!((b.term("joint_pos_limits").unwrap() - (-5.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn standing_orientation_parallel_and_perpendicular() {
        let ideal = STANDING_IDEAL_AXIS;
        assert!((standing_orientation(&ideal).unwrap() - 1.0).abs() < 1e-12);
        // Perpendicular to (0.2, 0, 1).
        let perp = [1.0, 0.0, -0.2];
        assert!((standing_orientation(&perp).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn standing_tracking_scaled_by_orientation() {
        let mut inputs = RewardInputs {
            v_xy: [0.0, 0.0],
            v_cmd_xy: [0.0, 0.0],
            v_forward: STANDING_IDEAL_AXIS,
            front_feet_contact: [true, true],
            ..Default::default()
        };
        let b = standing_reward(&inputs, 0.25, &StandingScales::default()).unwrap();
        assert!((b.task - 1.5).abs() < 1e-12);

        inputs.v_forward = [1.0, 0.0, -0.2];
        let b = standing_reward(&inputs, 0.25, &StandingScales::default()).unwrap();
        assert!((b.task - 1.5 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn standing_height_and_contact_terms() {
        let inputs = RewardInputs {
            v_forward: [0.0, 0.0, 1.0],
            base_height: 0.0,
            front_feet_contact: [true, false],
            ..Default::default()
        };
        let b = standing_reward(&inputs, 0.25, &StandingScales::default()).unwrap();
        // e^0 = 1 clipped at 0.55; one front foot touching => no bonus.
        assert!((b.term("root_height").unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(b.term("front_feet_contact").unwrap(), 0.0);
    }

    #[test]
    fn standing_rejects_zero_forward_axis() {
        let inputs = RewardInputs::default();
        assert!(standing_reward(&inputs, 0.25, &StandingScales::default()).is_err());
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost(1.5, 1.5).unwrap(), 0.0);
        assert_eq!(cost(0.0, 1.5).unwrap(), 1.5);
        assert!((cost(0.8679, 1.5).unwrap() - 0.6321).abs() < 1e-12);
        assert!(cost(2.0, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn cost_bounded(task in -10.0f64..1.5) {
            let c = cost(task.min(1.5), 1.5).unwrap();
            prop_assert!((0.0..=11.5).contains(&c));
            prop_assert!(c <= 1.5 - task.min(1.5) + 1e-12);
        }

        /// Perturbing unstarred inputs never moves the task aggregate.
        #[test]
        fn task_aggregate_ignores_aux_inputs(
            vz in -5.0f64..5.0,
            wxy in -3.0f64..3.0,
            h in -1.0f64..1.0,
            act in -1.0f64..1.0,
        ) {
            let base = perfect_locomotion_inputs();
            let mut perturbed = base.clone();
            perturbed.v_z = vz;
            perturbed.omega_xy = [wxy, -wxy];
            perturbed.base_height = h;
            perturbed.action = vec![act, -act];
            perturbed.action_prev = vec![0.0, 0.0];
            perturbed.action_prev2 = vec![act, act];
            let a = locomotion_reward(&base, 0.25, &LocomotionScales::default()).unwrap();
            let b = locomotion_reward(&perturbed, 0.25, &LocomotionScales::default()).unwrap();
            prop_assert_eq!(a.task, b.task);
        }

        /// Tracking peaks at command equality and strictly decreases with
        /// the squared error.
        #[test]
        fn tracking_monotone_in_error(e1 in 0.0f64..2.0, e2 in 0.0f64..2.0) {
            prop_assume!(e1 < e2);
            let mk = |e: f64| {
                let mut i = perfect_locomotion_inputs();
                i.v_xy = [1.0 + e, 0.0];
                locomotion_reward(&i, 0.25, &LocomotionScales::default()).unwrap().task
            };
            let perfect = mk(0.0);
            prop_assert!(mk(e1) <= perfect);
            prop_assert!(mk(e2) < mk(e1));
        }

        /// Standing tracking vanishes when the orientation factor is zero.
        #[test]
        fn standing_tracking_vanishes_at_zero_orientation(v in -2.0f64..2.0) {
            // Anti-parallel axis gives cossim = −1 so r_ori = 0.
            let inputs = RewardInputs {
                v_xy: [v, 0.0],
                v_cmd_xy: [v, 0.0],
                v_forward: [-STANDING_IDEAL_AXIS[0], -STANDING_IDEAL_AXIS[1], -STANDING_IDEAL_AXIS[2]],
                front_feet_contact: [true, true],
                ..Default::default()
            };
            let b = standing_reward(&inputs, 0.25, &StandingScales::default()).unwrap();
            prop_assert!(b.task.abs() < 1e-24);
        }
    }
}
