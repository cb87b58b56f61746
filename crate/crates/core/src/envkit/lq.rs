//! Discrete-time linear plant `x′ = A·x + B·u + E·w` with quadratic state
//! cost, used as the analytically solvable disturbance environment.
//!
//! The state vector (at most four entries) is embedded into the planar
//! state slots so the common [`EnvState`] carries it. Domain randomization
//! draws are sampled and stored for range coverage; only the init-state
//! scale affects this model.

use super::{Disturbance, EnvState, RandomizationDraw, StepResult};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct LqModel {
    a: Mat,
    b: Mat,
    e: Mat,
    q: Mat,
    r_u: Mat,
    pub horizon: u32,
    pub f_max: f64,
    /// Per-axis control clamp.
    pub u_max: f64,
    /// Nominal initial state.
    pub x0: Vec<f64>,
    pub task_reward_max: f64,
}

impl LqModel {
    pub fn new(a: Mat, b: Mat, e: Mat, q: Mat, r_u: Mat) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n || n == 0 || n > 4 {
            return Err(Error::InvalidModel(format!("A must be square with 1..=4 rows, got {}x{}", a.rows(), a.cols())));
        }
        if b.rows() != n || e.rows() != n {
            return Err(Error::InvalidModel("B and E must have as many rows as A".into()));
        }
        if q.rows() != n || q.cols() != n {
            return Err(Error::InvalidModel("Q must be n×n".into()));
        }
        let m = b.cols();
        if r_u.rows() != m || r_u.cols() != m {
            return Err(Error::InvalidModel("R must be m×m".into()));
        }
        check_symmetric(&q, "Q")?;
        check_symmetric(&r_u, "R")?;
        if min_symmetric_eigenvalue(&q) < -1e-10 {
            return Err(Error::InvalidModel("Q must be positive semidefinite".into()));
        }
        if min_symmetric_eigenvalue(&r_u) <= 1e-12 {
            return Err(Error::InvalidModel("R must be positive definite".into()));
        }
        let model = LqModel {
            a,
            b,
            e,
            q,
            r_u,
            horizon: 1000,
            f_max: 100.0,
            u_max: 1e3,
            x0: vec![1.0; n],
            task_reward_max: 1.5,
        };
        if !model.stabilizable() {
            return Err(Error::InvalidModel("(A, B) failed the numeric stabilizability check".into()));
        }
        Ok(model)
    }

    pub fn scalar(a: f64, b: f64, e: f64, q: f64, r: f64) -> Result<Self> {
        LqModel::new(
            Mat::from_vec(1, 1, vec![a]),
            Mat::from_vec(1, 1, vec![b]),
            Mat::from_vec(1, 1, vec![e]),
            Mat::from_vec(1, 1, vec![q]),
            Mat::from_vec(1, 1, vec![r]),
        )
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.e.cols()
    }

    pub fn matrices(&self) -> (&Mat, &Mat, &Mat, &Mat, &Mat) {
        (&self.a, &self.b, &self.e, &self.q, &self.r_u)
    }

    /// Numeric stabilizability check: the disturbance-free Riccati
    /// iteration from P = Q must settle.
    fn stabilizable(&self) -> bool {
        let n = self.state_dim();
        let mut p = self.q.clone();
        for _ in 0..5000 {
            let next = match riccati_step(&self.a, &self.b, &self.q, &self.r_u, &p) {
                Some(m) => m,
                None => return false,
            };
            let mut diff = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    diff = diff.max((next.get(i, j) - p.get(i, j)).abs());
                }
            }
            if next.max_abs() > 1e12 {
                return false;
            }
            p = next;
            if diff < 1e-9 {
                return true;
            }
        }
        false
    }

    fn embed(&self, x: &[f64]) -> ([f64; 2], [f64; 2]) {
        let mut slots = [0.0; 4];
        slots[..x.len()].copy_from_slice(x);
        ([slots[0], slots[1]], [slots[2], slots[3]])
    }

    fn extract(&self, state: &EnvState) -> Vec<f64> {
        let slots = [state.position[0], state.position[1], state.velocity[0], state.velocity[1]];
        slots[..self.state_dim()].to_vec()
    }

    pub(super) fn reset(&self, seed: u64, randomize: bool, rng: &mut ChaCha8Rng) -> Result<EnvState> {
        let draw = if randomize { RandomizationDraw::sample(rng) } else { RandomizationDraw::nominal(1.0) };
        let x: Vec<f64> = self.x0.iter().map(|v| v * draw.init_state_scale).collect();
        let (position, velocity) = self.embed(&x);
        Ok(EnvState {
            position,
            velocity,
            heading: 0.0,
            angular_velocity: 0.0,
            command: [0.0; 3],
            last_action: vec![0.0; self.input_dim()],
            prev_action: vec![0.0; self.input_dim()],
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
        let n = self.state_dim();
        let x = self.extract(state);
        let u: Vec<f64> = action.iter().map(|a| a.clamp(-self.u_max, self.u_max)).collect();
        let w = disturbance.force();

        let mut next = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for (j, xv) in x.iter().enumerate() {
                acc += self.a.get(i, j) * xv;
            }
            for (j, uv) in u.iter().enumerate() {
                acc += self.b.get(i, j) * uv;
            }
            for (j, wv) in w.iter().enumerate().take(self.disturbance_dim()) {
                acc += self.e.get(i, j) * wv;
            }
            next[i] = acc;
        }

        // Quadratic state cost mapped into a bounded task reward.
        let mut xqx = 0.0;
        for i in 0..n {
            for j in 0..n {
                xqx += next[i] * self.q.get(i, j) * next[j];
            }
        }
        let task_reward = self.task_reward_max * (-xqx).exp();

        let time_index = state.time_index + 1;
        let truncated = time_index >= self.horizon;
        let (position, velocity) = self.embed(&next);

        let next_state = EnvState {
            position,
            velocity,
            heading: 0.0,
            angular_velocity: 0.0,
            command: state.command,
            prev_action: state.last_action.clone(),
            last_action: u,
            time_index,
            discrete_index: 0,
            heading_ref: 0.0,
            speed_err_steps: 0,
            heading_err_steps: 0,
            terminated: truncated,
            draw: state.draw.clone(),
            stream_seed: state.stream_seed,
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
        self.extract(state)
    }
}

fn check_symmetric(m: &Mat, name: &str) -> Result<()> {
    for i in 0..m.rows() {
        for j in 0..i {
            if (m.get(i, j) - m.get(j, i)).abs() > 1e-10 {
                return Err(Error::InvalidModel(format!("{name} must be symmetric")));
            }
        }
    }
    Ok(())
}

fn min_symmetric_eigenvalue(m: &Mat) -> f64 {
    let n = m.rows();
    let dm = nalgebra::DMatrix::from_row_slice(n, n, m.data());
    dm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// One sweep of the disturbance-free Riccati recursion
/// `P⁺ = Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA`.
fn riccati_step(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Option<Mat> {
    let n = a.rows();
    let m = b.cols();
    let pa = p.matmul(a);
    let pb = p.matmul(b);
    let at_pa = a.t_matmul(&pa);
    let at_pb = a.t_matmul(&pb);
    let bt_pb = b.t_matmul(&pb);
    let mut inner = nalgebra::DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            inner[(i, j)] = r.get(i, j) + bt_pb.get(i, j);
        }
    }
    let inv = inner.try_inverse()?;
    // A^T P B · inv · B^T P A
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut corr = 0.0;
            for k in 0..m {
                for l in 0..m {
                    corr += at_pb.get(i, k) * inv[(k, l)] * at_pb.get(j, l);
                }
            }
            out.set(i, j, q.get(i, j) + at_pa.get(i, j) - corr);
        }
    }
    Some(out)
}
