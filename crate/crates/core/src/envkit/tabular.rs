//! Small tabular min-max games: finite states, actions, and disturbances
//! with an explicit joint transition tensor and nonnegative cost tensor.

use super::{Disturbance, EnvState, RandomizationDraw, StepResult};
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const MAX_STATES: usize = 16;
pub const MAX_ACTIONS: usize = 4;
pub const MAX_DISTURBANCES: usize = 4;

#[derive(Debug, Clone)]
pub struct TabularGame {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_disturbances: usize,
    /// P(s′ | s, a, d), flattened as [s][a][d][s′].
    transition: Vec<f64>,
    /// C(s, a, d) ≥ 0, flattened as [s][a][d].
    cost: Vec<f64>,
    /// Intensity ‖d‖₂ assigned to each disturbance index.
    pub disturbance_norms: Vec<f64>,
    pub horizon: u32,
    pub initial_state: usize,
    r_max_task: f64,
}

impl TabularGame {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        n_disturbances: usize,
        transition: Vec<f64>,
        cost: Vec<f64>,
        disturbance_norms: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_states > MAX_STATES {
            return Err(Error::InvalidModel(format!("n_states must be 1..={MAX_STATES}")));
        }
        if n_actions == 0 || n_actions > MAX_ACTIONS {
            return Err(Error::InvalidModel(format!("n_actions must be 1..={MAX_ACTIONS}")));
        }
        if n_disturbances == 0 || n_disturbances > MAX_DISTURBANCES {
            return Err(Error::InvalidModel(format!("n_disturbances must be 1..={MAX_DISTURBANCES}")));
        }
        if transition.len() != n_states * n_actions * n_disturbances * n_states {
            return Err(Error::InvalidModel("transition tensor size mismatch".into()));
        }
        if cost.len() != n_states * n_actions * n_disturbances {
            return Err(Error::InvalidModel("cost tensor size mismatch".into()));
        }
        if disturbance_norms.len() != n_disturbances {
            return Err(Error::InvalidModel("disturbance_norms length mismatch".into()));
        }
        if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidModel("costs must be finite and nonnegative".into()));
        }
        if disturbance_norms.iter().any(|n| !n.is_finite() || *n < 0.0) {
            return Err(Error::InvalidModel("disturbance norms must be finite and nonnegative".into()));
        }
        for row in transition.chunks(n_states) {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| *p < -1e-15) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!("transition row sums to {sum}, expected 1")));
            }
        }
        let r_max: f64 = cost.iter().copied().fold(0.0, f64::max);
        Ok(TabularGame {
            n_states,
            n_actions,
            n_disturbances,
            transition,
            cost,
            disturbance_norms,
            horizon: 1000,
            initial_state: 0,
            r_max_task: r_max,
        })
    }

    /// Seeded random game. Disturbance norms grow with the index so index
    /// 0 is the quiet option.
    pub fn random(n_states: usize, n_actions: usize, n_disturbances: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(&[seed, tag::INIT]);
        let rows = n_states * n_actions * n_disturbances;
        let mut transition = Vec::with_capacity(rows * n_states);
        for _ in 0..rows {
            let raw: Vec<f64> = (0..n_states).map(|_| rng.random_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            // Push the row sum to exactly 1 within validation tolerance.
            let s: f64 = row.iter().sum();
            let last = row.len() - 1;
            row[last] += 1.0 - s;
            transition.extend(row);
        }
        let cost: Vec<f64> = (0..rows).map(|_| rng.random_range(0.0..1.0)).collect();
        let disturbance_norms: Vec<f64> = (0..n_disturbances)
            .map(|i| if n_disturbances == 1 { 0.0 } else { i as f64 / (n_disturbances - 1) as f64 })
            .collect();
        TabularGame::new(n_states, n_actions, n_disturbances, transition, cost, disturbance_norms)
    }

    #[inline]
    fn row_index(&self, s: usize, a: usize, d: usize) -> usize {
        ((s * self.n_actions + a) * self.n_disturbances + d) * self.n_states
    }

    pub fn cost_at(&self, s: usize, a: usize, d: usize) -> f64 {
        self.cost[(s * self.n_actions + a) * self.n_disturbances + d]
    }

    pub fn r_max_task(&self) -> f64 {
        self.r_max_task
    }

    pub fn max_norm(&self) -> f64 {
        self.disturbance_norms.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the smallest-intensity disturbance.
    pub fn quietest_disturbance(&self) -> usize {
        let mut best = 0;
        for (i, n) in self.disturbance_norms.iter().enumerate() {
            if *n < self.disturbance_norms[best] {
                best = i;
            }
        }
        best
    }

    /// Exact transition row P(·|s, a, d).
    pub fn transition_distribution(&self, s: usize, a: usize, d: usize) -> Result<Vec<f64>> {
        if s >= self.n_states || a >= self.n_actions || d >= self.n_disturbances {
            return Err(Error::IndexOutOfRange(format!(
                "(s={s}, a={a}, d={d}) outside ({}, {}, {})",
                self.n_states, self.n_actions, self.n_disturbances
            )));
        }
        let base = self.row_index(s, a, d);
        Ok(self.transition[base..base + self.n_states].to_vec())
    }

    /// Sample the next state from P(·|s, a, d).
    pub fn sample_transition<R: Rng>(&self, s: usize, a: usize, d: usize, rng: &mut R) -> usize {
        let base = self.row_index(s, a, d);
        let u: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        for (i, p) in self.transition[base..base + self.n_states].iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.n_states - 1
    }

    pub(super) fn reset(&self, seed: u64, randomize: bool, rng: &mut ChaCha8Rng) -> Result<EnvState> {
        let draw = if randomize { RandomizationDraw::sample(rng) } else { RandomizationDraw::nominal(1.0) };
        Ok(EnvState {
            position: [0.0; 2],
            velocity: [0.0; 2],
            heading: 0.0,
            angular_velocity: 0.0,
            command: [0.0; 3],
            last_action: vec![0.0],
            prev_action: vec![0.0],
            time_index: 0,
            discrete_index: self.initial_state,
            heading_ref: 0.0,
            speed_err_steps: 0,
            heading_err_steps: 0,
            terminated: false,
            draw,
            stream_seed: seed,
        })
    }

    pub(super) fn step(&self, state: &EnvState, action: &[f64], disturbance: &Disturbance) -> Result<StepResult> {
        let s = state.discrete_index;
        if s >= self.n_states {
            return Err(Error::IndexOutOfRange(format!("state index {s}")));
        }
        let a = quantize(action[0], self.n_actions);
        let d = match disturbance {
            Disturbance::Index(i) => {
                if *i >= self.n_disturbances {
                    return Err(Error::IndexOutOfRange(format!("disturbance index {i}")));
                }
                *i
            }
            Disturbance::Force(f) => quantize(f.first().copied().unwrap_or(0.0), self.n_disturbances),
        };
        let mut rng = rng::stream(&[state.stream_seed, tag::TRANSITION, state.time_index as u64]);
        let next = self.sample_transition(s, a, d, &mut rng);
        let cost = self.cost_at(s, a, d);
        let task_reward = self.r_max_task - cost;

        let time_index = state.time_index + 1;
        let truncated = time_index >= self.horizon;
        let next_state = EnvState {
            discrete_index: next,
            time_index,
            terminated: truncated,
            prev_action: state.last_action.clone(),
            last_action: vec![action[0].clamp(-1.0, 1.0)],
            draw: state.draw.clone(),
            stream_seed: state.stream_seed,
            ..state.clone()
        };
        Ok(StepResult {
            next_state,
            task_reward,
            aux_reward: 0.0,
            terminated: truncated,
            truncated,
            fall: false,
        })
    }

    pub(super) fn features(&self, state: &EnvState) -> Vec<f64> {
        let mut f = vec![0.0; self.n_states];
        if state.discrete_index < self.n_states {
            f[state.discrete_index] = 1.0;
        }
        f
    }
}

/// Map a continuous value in [−1, 1] to an index in 0..n.
pub fn quantize(x: f64, n: usize) -> usize {
    let u = ((x + 1.0) / 2.0).clamp(0.0, 1.0);
    ((u * n as f64) as usize).min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deterministic_game() -> TabularGame {
        // Two states; action/disturbance ignored; always moves to state 1.
        let n_s = 2;
        let rows = n_s * 1 * 1;
        let mut transition = vec![0.0; rows * n_s];
        transition[1] = 1.0; // from s=0 → s=1
        transition[3] = 1.0; // from s=1 → s=1
        TabularGame::new(n_s, 1, 1, transition, vec![0.3, 0.0], vec![0.0]).unwrap()
    }

    #[test]
    fn deterministic_row_is_one_hot() {
        let g = deterministic_game();
        assert_eq!(g.transition_distribution(0, 0, 0).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn uniform_rows() {
        let n = 4;
        let row = vec![0.25; n];
        let mut transition = Vec::new();
        for _ in 0..n {
            transition.extend(&row);
        }
        let g = TabularGame::new(n, 1, 1, transition, vec![0.0; n], vec![0.0]).unwrap();
        for s in 0..n {
            assert_eq!(g.transition_distribution(s, 0, 0).unwrap(), vec![0.25; 4]);
        }
    }

    #[test]
    fn random_rows_sum_to_one() {
        let g = TabularGame::random(8, 3, 2, 42).unwrap();
        for s in 0..8 {
            for a in 0..3 {
                for d in 0..2 {
                    let sum: f64 = g.transition_distribution(s, a, d).unwrap().iter().sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let g = deterministic_game();
        assert!(g.transition_distribution(2, 0, 0).is_err());
        assert!(g.transition_distribution(0, 1, 0).is_err());
    }

    #[test]
    fn quantize_covers_all_indices() {
        assert_eq!(quantize(-1.0, 4), 0);
        assert_eq!(quantize(-0.4, 4), 1);
        assert_eq!(quantize(0.2, 4), 2);
        assert_eq!(quantize(1.0, 4), 3);
        assert_eq!(quantize(5.0, 4), 3);
    }

    #[test]
    fn cost_maps_to_task_reward() {
        let g = deterministic_game();
        let st = crate::envkit::EnvModel::Tabular(g.clone()).reset(0, false).unwrap();
        let r = crate::envkit::EnvModel::Tabular(g.clone())
            .step(&st, &[-1.0], &Disturbance::Index(0))
            .unwrap();
        assert_eq!(r.task_reward, g.r_max_task() - 0.3);
        assert_eq!(r.next_state.discrete_index, 1);
    }
}
