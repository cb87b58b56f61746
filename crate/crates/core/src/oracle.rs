//! Independent ground-truth solvers.
//!
//! - [`solve_lq_hinf`]: discrete-time game Riccati recursion for the
//!   linear-quadratic min-max problem with stage cost
//!   `xᵀQx + uᵀRu − γ²wᵀw`. Reports feasibility (the attenuation level is
//!   achievable) and the stationary gains of both players.
//! - [`minmax_value_iteration`]: exact min-max value iteration on a finite
//!   game with per-step payoff `C(s,a,d) − η·‖d‖₂`, disturbance
//!   maximizing, action minimizing.
//! - [`empirical_hinf_ratio`]: the plug-in estimator ΣC / Σ‖d‖₂ over a set
//!   of trajectories.
//!
//! A note on conventions: the Riccati solver penalizes the *squared*
//! disturbance norm (the classic attenuation form), while the value
//! iteration and everything trained against it use the unsquared intensity
//! ‖d‖₂. The two are not numerically interchangeable; cross-checks set
//! η = 0 and put the quadratic penalty inside the cost tensor instead.

use crate::envkit::{LqModel, TabularGame};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::{self, tag};
use nalgebra::DMatrix;
use rand::Rng;

/// Outcome of the game Riccati recursion.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Stationary quadratic value `V(x) = xᵀPx` (last iterate when
    /// infeasible).
    pub p: Mat,
    pub feasible: bool,
    /// Controller gain, `u = K_u·x`.
    pub gain_u: Mat,
    /// Worst-case disturbance gain, `w = K_w·x`.
    pub gain_w: Mat,
    pub gamma_att: f64,
    pub iterations: usize,
    pub residual: f64,
}

const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_ITER: usize = 200_000;
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Iterate the discrete-time game Riccati recursion for attenuation level
/// `gamma_att`. Infeasibility (the disturber's subproblem loses concavity
/// or the iteration diverges) is reported in the result, not an error.
pub fn solve_lq_hinf(model: &LqModel, gamma_att: f64) -> Result<RiccatiSolution> {
    if !(gamma_att > 0.0) || !gamma_att.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma_att must be positive, got {gamma_att}")));
    }
    let (a, b, e, q, r) = model.matrices();
    let n = a.rows();
    let m = b.cols();
    let l = e.cols();
    let a = DMatrix::from_row_slice(n, n, a.data());
    let b = DMatrix::from_row_slice(n, m, b.data());
    let e = DMatrix::from_row_slice(n, l, e.data());
    let q = DMatrix::from_row_slice(n, n, q.data());
    let r = DMatrix::from_row_slice(m, m, r.data());
    let g2 = gamma_att * gamma_att;

    let mut p = q.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut feasible = true;
    let mut gain_u = DMatrix::zeros(m, n);
    let mut gain_w = DMatrix::zeros(l, n);

    while iterations < RICCATI_MAX_ITER {
        iterations += 1;
        // Concavity of the disturber subproblem: γ²I − EᵀPE ≻ 0.
        let concavity = DMatrix::identity(l, l) * g2 - e.transpose() * &p * &e;
        if concavity.symmetric_eigenvalues().iter().any(|ev| *ev <= 1e-12) {
            feasible = false;
            break;
        }

        // Joint stationary system over (u, w).
        let bt_p = b.transpose() * &p;
        let et_p = e.transpose() * &p;
        let mut inner = DMatrix::zeros(m + l, m + l);
        inner.view_mut((0, 0), (m, m)).copy_from(&(&r + &bt_p * &b));
        inner.view_mut((0, m), (m, l)).copy_from(&(&bt_p * &e));
        inner.view_mut((m, 0), (l, m)).copy_from(&(&et_p * &b));
        inner.view_mut((m, m), (l, l)).copy_from(&(&et_p * &e - DMatrix::identity(l, l) * g2));

        let inv = match inner.clone().try_inverse() {
            Some(inv) => inv,
            None => {
                feasible = false;
                break;
            }
        };
        let mut rhs = DMatrix::zeros(m + l, n);
        rhs.view_mut((0, 0), (m, n)).copy_from(&(&bt_p * &a));
        rhs.view_mut((m, 0), (l, n)).copy_from(&(&et_p * &a));
        let gains = -&inv * &rhs; // [K_u; K_w]
        gain_u = gains.view((0, 0), (m, n)).into();
        gain_w = gains.view((m, 0), (l, n)).into();

        // P⁺ = Q + AᵀPA − [AᵀPB AᵀPE] M⁻¹ [BᵀPA; EᵀPA]
        let next = &q + a.transpose() * &p * &a - rhs.transpose() * &inv * &rhs;
        // Symmetrize against drift.
        let next = (&next + next.transpose()) * 0.5;

        residual = (&next - &p).amax();
        p = next;
        if p.amax() > DIVERGENCE_LIMIT {
            feasible = false;
            break;
        }
        if residual < RICCATI_TOL {
            break;
        }
    }
    if residual >= RICCATI_TOL && feasible {
        feasible = false;
    }
    if feasible && p.symmetric_eigenvalues().iter().any(|ev| *ev < -1e-8) {
        feasible = false;
    }

    Ok(RiccatiSolution {
        p: Mat::from_vec(n, n, p.transpose().as_slice().to_vec()),
        feasible,
        gain_u: Mat::from_vec(m, n, gain_u.transpose().as_slice().to_vec()),
        gain_w: Mat::from_vec(l, n, gain_w.transpose().as_slice().to_vec()),
        gamma_att,
        iterations,
        residual,
    })
}

/// Bisection over the attenuation level: the smallest feasible γ within
/// `tol`, between `lo` (infeasible) and `hi` (feasible).
pub fn riccati_feasibility_threshold(model: &LqModel, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let mut lo = lo;
    let mut hi = hi;
    if solve_lq_hinf(model, lo)?.feasible {
        return Ok(lo);
    }
    if !solve_lq_hinf(model, hi)?.feasible {
        return Err(Error::InvalidArgument(format!("gamma_att = {hi} still infeasible")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if solve_lq_hinf(model, mid)?.feasible {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A finite min-max game in raw tensor form. [`TabularGame`] converts into
/// this; discretized models may exceed the training-environment size cap.
#[derive(Debug, Clone)]
pub struct MinMaxGame {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_disturbances: usize,
    /// [s][a][d][s′]
    pub transition: Vec<f64>,
    /// [s][a][d]
    pub cost: Vec<f64>,
    pub disturbance_norms: Vec<f64>,
}

impl MinMaxGame {
    #[inline]
    fn row(&self, s: usize, a: usize, d: usize) -> &[f64] {
        let base = ((s * self.n_actions + a) * self.n_disturbances + d) * self.n_states;
        &self.transition[base..base + self.n_states]
    }

    #[inline]
    fn cost_at(&self, s: usize, a: usize, d: usize) -> f64 {
        self.cost[(s * self.n_actions + a) * self.n_disturbances + d]
    }
}

impl From<&TabularGame> for MinMaxGame {
    fn from(g: &TabularGame) -> Self {
        let mut transition = Vec::new();
        let mut cost = Vec::new();
        for s in 0..g.n_states {
            for a in 0..g.n_actions {
                for d in 0..g.n_disturbances {
                    transition.extend(g.transition_distribution(s, a, d).expect("valid game"));
                    cost.push(g.cost_at(s, a, d));
                }
            }
        }
        MinMaxGame {
            n_states: g.n_states,
            n_actions: g.n_actions,
            n_disturbances: g.n_disturbances,
            transition,
            cost,
            disturbance_norms: g.disturbance_norms.clone(),
        }
    }
}

/// Converged min-max values with both players' stationary choices.
#[derive(Debug, Clone)]
pub struct GameValue {
    pub values: Vec<f64>,
    /// Minimizing action per state (lowest index on ties).
    pub policy: Vec<usize>,
    /// Maximizing disturbance per state (lowest index on ties).
    pub disturbance: Vec<usize>,
    pub residual: f64,
    pub sweeps: usize,
}

/// Min-max value iteration with per-step payoff `C(s,a,d) − η‖d‖₂` and
/// discount γ₂.
pub fn minmax_value_iteration(game: &TabularGame, eta: f64, gamma2: f64) -> Result<GameValue> {
    minmax_value_iteration_game(&MinMaxGame::from(game), eta, gamma2)
}

pub fn minmax_value_iteration_game(game: &MinMaxGame, eta: f64, gamma2: f64) -> Result<GameValue> {
    if !(0.0..1.0).contains(&gamma2) {
        return Err(Error::InvalidArgument(format!("gamma2 must be in [0, 1), got {gamma2}")));
    }
    let n = game.n_states;
    let mut values = vec![0.0; n];
    let mut policy = vec![0usize; n];
    let mut disturbance = vec![0usize; n];
    let mut sweeps = 0;
    let target = 1e-12;

    loop {
        sweeps += 1;
        let (next, pol, dis) = sweep(game, &values, eta, gamma2);
        let change = values.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        values = next;
        policy = pol;
        disturbance = dis;
        if change < target || sweeps > 2_000_000 {
            break;
        }
    }
    let (check, _, _) = sweep(game, &values, eta, gamma2);
    let residual = values.iter().zip(&check).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
    if residual >= 1e-9 {
        return Err(Error::Diverged(format!("value iteration residual {residual}")));
    }
    Ok(GameValue { values, policy, disturbance, residual, sweeps })
}

fn sweep(game: &MinMaxGame, values: &[f64], eta: f64, gamma2: f64) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
    let n = game.n_states;
    let mut next = vec![0.0; n];
    let mut policy = vec![0usize; n];
    let mut disturbance = vec![0usize; n];
    for s in 0..n {
        let mut best_a = 0;
        let mut best_a_val = f64::INFINITY;
        let mut best_a_d = 0;
        for a in 0..game.n_actions {
            let mut worst_d = 0;
            let mut worst_val = f64::NEG_INFINITY;
            for d in 0..game.n_disturbances {
                let mut v = game.cost_at(s, a, d) - eta * game.disturbance_norms[d];
                let row = game.row(s, a, d);
                let mut exp = 0.0;
                for (sp, pr) in row.iter().enumerate() {
                    exp += pr * values[sp];
                }
                v += gamma2 * exp;
                if v > worst_val {
                    worst_val = v;
                    worst_d = d;
                }
            }
            if worst_val < best_a_val {
                best_a_val = worst_val;
                best_a = a;
                best_a_d = worst_d;
            }
        }
        next[s] = best_a_val;
        policy[s] = best_a;
        disturbance[s] = best_a_d;
    }
    (next, policy, disturbance)
}

/// Per-trajectory sums feeding the ratio estimator.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub costs: Vec<f64>,
    pub dist_norms: Vec<f64>,
}

/// Plug-in estimate of the worst-case ratio: (Σ C) / (Σ ‖d‖₂) over every
/// step of every trajectory. All-zero disturbance is undefined.
pub fn empirical_hinf_ratio(trajectories: &[Trajectory]) -> Result<f64> {
    let mut sum_c = 0.0;
    let mut sum_d = 0.0;
    for t in trajectories {
        sum_c += t.costs.iter().sum::<f64>();
        sum_d += t.dist_norms.iter().sum::<f64>();
    }
    if sum_d <= 1e-12 {
        return Err(Error::InvalidArgument("ratio undefined: total disturbance intensity is zero".into()));
    }
    Ok(sum_c / sum_d)
}

// ---------------------------------------------------------------------------
// Long-run negativity construction (used by the property tests)
// ---------------------------------------------------------------------------

/// A stochastic stationary policy with a deterministic disturber.
#[derive(Debug, Clone)]
pub struct StationaryPair {
    /// π(a|s), rows summing to 1.
    pub policy: Vec<Vec<f64>>,
    /// d(s).
    pub disturbance: Vec<usize>,
}

impl StationaryPair {
    pub fn random(game: &TabularGame, seed: u64) -> Self {
        let mut r = rng::stream(&[seed, tag::INIT, 0x50]);
        let policy = (0..game.n_states)
            .map(|_| {
                let raw: Vec<f64> = (0..game.n_actions).map(|_| r.random_range(0.05..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|v| v / sum).collect()
            })
            .collect();
        let disturbance = (0..game.n_states).map(|_| r.random_range(0..game.n_disturbances)).collect();
        StationaryPair { policy, disturbance }
    }
}

/// Expected cost under the pair at state `s`.
pub fn expected_cost(game: &TabularGame, pair: &StationaryPair, s: usize) -> f64 {
    let d = pair.disturbance[s];
    (0..game.n_actions).map(|a| pair.policy[s][a] * game.cost_at(s, a, d)).sum()
}

/// Expected one-step drop of a state function under the pair:
/// `E[v(s) − v(s′)]`.
pub fn expected_drift(game: &TabularGame, pair: &StationaryPair, v: &[f64], s: usize) -> f64 {
    let d = pair.disturbance[s];
    let mut exp_next = 0.0;
    for a in 0..game.n_actions {
        let row = game.transition_distribution(s, a, d).expect("valid indices");
        let p_a = pair.policy[s][a];
        for (sp, pr) in row.iter().enumerate() {
            exp_next += p_a * pr * v[sp];
        }
    }
    v[s] - exp_next
}

/// Smallest η (plus `margin`) for which the per-state strict inequality
/// `C(s) − η‖d(s)‖₂ < E[v(s) − v(s′)]` holds everywhere. `None` when some
/// state's disturbance has zero intensity and violates the inequality on
/// its own.
pub fn feasible_eta(game: &TabularGame, pair: &StationaryPair, v_cost: &[f64], margin: f64) -> Option<f64> {
    let mut eta: f64 = 0.0;
    for s in 0..game.n_states {
        let norm = game.disturbance_norms[pair.disturbance[s]];
        let gap = expected_cost(game, pair, s) - expected_drift(game, pair, v_cost, s);
        if norm <= 1e-12 {
            if gap >= 0.0 {
                return None;
            }
        } else {
            eta = eta.max(gap / norm);
        }
    }
    Some(eta.max(0.0) + margin)
}

/// Empirical time average of `C − η‖d‖₂` over a simulated chain.
pub fn simulate_time_average(game: &TabularGame, pair: &StationaryPair, eta: f64, steps: usize, seed: u64) -> f64 {
    let mut r = rng::stream(&[seed, tag::TRANSITION, 0x51]);
    let mut s = game.initial_state;
    let mut acc = 0.0;
    for _ in 0..steps {
        let u: f64 = r.random_range(0.0..1.0);
        let mut a = game.n_actions - 1;
        let mut cum = 0.0;
        for (ai, p) in pair.policy[s].iter().enumerate() {
            cum += p;
            if u < cum {
                a = ai;
                break;
            }
        }
        let d = pair.disturbance[s];
        acc += game.cost_at(s, a, d) - eta * game.disturbance_norms[d];
        s = game.sample_transition(s, a, d, &mut r);
    }
    acc / steps as f64
}

// ---------------------------------------------------------------------------
// Scalar LQ discretization (cross-oracle checks)
// ---------------------------------------------------------------------------

/// Discretize a scalar LQ game onto grids. The quadratic stage cost
/// `q·x² + r·u² − γ²w² + γ²w_max²` is embedded in the cost tensor (the
/// offset keeps it nonnegative), transitions snap to the nearest grid
/// point, and the value iteration runs with η = 0.
pub struct DiscretizedLq {
    pub game: MinMaxGame,
    pub grid: Vec<f64>,
    /// Constant each VI value carries: offset / (1 − γ₂).
    pub value_offset: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn discretize_scalar_lq(
    a: f64,
    b: f64,
    e: f64,
    q: f64,
    r: f64,
    gamma_att: f64,
    gamma2: f64,
    x_max: f64,
    n_states: usize,
    n_actions: usize,
    n_dist: usize,
    u_max: f64,
    w_max: f64,
) -> DiscretizedLq {
    let lin = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    };
    let grid = lin(n_states, -x_max, x_max);
    let u_grid = lin(n_actions, -u_max, u_max);
    let w_grid = lin(n_dist, -w_max, w_max);
    let offset = gamma_att * gamma_att * w_max * w_max;

    let snap = |x: f64| -> usize {
        let clamped = x.clamp(-x_max, x_max);
        let pos = (clamped + x_max) / (2.0 * x_max) * (n_states - 1) as f64;
        pos.round() as usize
    };

    let mut transition = vec![0.0; n_states * n_actions * n_dist * n_states];
    let mut cost = vec![0.0; n_states * n_actions * n_dist];
    for (si, &x) in grid.iter().enumerate() {
        for (ai, &u) in u_grid.iter().enumerate() {
            for (di, &w) in w_grid.iter().enumerate() {
                let next = snap(a * x + b * u + e * w);
                let flat = (si * n_actions + ai) * n_dist + di;
                transition[flat * n_states + next] = 1.0;
                cost[flat] = q * x * x + r * u * u - gamma_att * gamma_att * w * w + offset;
            }
        }
    }
    DiscretizedLq {
        game: MinMaxGame {
            n_states,
            n_actions,
            n_disturbances: n_dist,
            transition,
            cost,
            disturbance_norms: w_grid.iter().map(|w| w.abs()).collect(),
        },
        grid,
        value_offset: offset / (1.0 - gamma2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_lqr_fixed_point() {
        // E = 0 reduces to the standard recursion
        // p = q + a²p − a²p²b²/(r + b²p); its positive root for
        // a = 0.5, b = q = r = 1 solves p² − 0.25p − 1 = 0.
        let oracle_p = {
            let mut p = 1.0f64;
            for _ in 0..10_000 {
                let next = 1.0 + 0.25 * p - 0.25 * p * p / (1.0 + p);
                if (next - p).abs() < 1e-14 {
                    break;
                }
                p = next;
            }
            p
        };
        let root = (0.25 + (0.0625f64 + 4.0).sqrt()) / 2.0;
        assert!((oracle_p - root).abs() < 1e-10);

        let model = LqModel::scalar(0.5, 1.0, 0.0, 1.0, 1.0).unwrap();
        let sol = solve_lq_hinf(&model, 1.0).unwrap();
        assert!(sol.feasible);
        assert!((sol.p.get(0, 0) - oracle_p).abs() < 1e-9, "{} vs {oracle_p}", sol.p.get(0, 0));
    }

    #[test]
    fn e_zero_independent_of_gamma() {
        let model = LqModel::scalar(0.5, 1.0, 0.0, 1.0, 1.0).unwrap();
        let a = solve_lq_hinf(&model, 0.05).unwrap();
        let b = solve_lq_hinf(&model, 50.0).unwrap();
        assert!(a.feasible && b.feasible);
        assert!((a.p.get(0, 0) - b.p.get(0, 0)).abs() < 1e-9);
    }

    #[test]
    fn feasibility_threshold_brackets() {
        let model = LqModel::scalar(0.9, 1.0, 1.0, 1.0, 1.0).unwrap();
        let star = riccati_feasibility_threshold(&model, 0.1, 100.0, 1e-6).unwrap();
        assert!(!solve_lq_hinf(&model, 0.99 * star).unwrap().feasible);
        assert!(solve_lq_hinf(&model, 1.01 * star).unwrap().feasible);
    }

    #[test]
    fn riccati_monotone_in_gamma() {
        let model = LqModel::scalar(0.9, 1.0, 1.0, 1.0, 1.0).unwrap();
        let mut last = false;
        for i in 0..50 {
            let gamma = 0.2 + 3.0 * i as f64 / 49.0;
            let feasible = solve_lq_hinf(&model, gamma).unwrap().feasible;
            assert!(feasible || !last, "feasibility lost when gamma grew to {gamma}");
            last = feasible;
        }
        assert!(last, "largest gamma in the sweep should be feasible");
    }

    #[test]
    fn vi_zero_costs_zero_value() {
        let g = TabularGame::new(3, 2, 2, uniform_transition(3, 2, 2), vec![0.0; 12], vec![0.0, 1.0]).unwrap();
        let v = minmax_value_iteration(&g, 0.0, 0.8).unwrap();
        assert!(v.values.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn vi_single_action_matches_worst_case_evaluation() {
        // η = 0, one action: V is the value of the worst disturbance,
        // checked against exhaustive policy evaluation per disturbance map.
        let g = TabularGame::random(4, 1, 3, 9).unwrap();
        let v = minmax_value_iteration(&g, 0.0, 0.8).unwrap();

        let mut best = vec![f64::NEG_INFINITY; 4];
        // 3^4 stationary disturbance maps
        for assignment in 0..81usize {
            let d_map: Vec<usize> = (0..4).map(|s| (assignment / 3usize.pow(s as u32)) % 3).collect();
            // policy evaluation by iteration
            let mut val = vec![0.0f64; 4];
            for _ in 0..20_000 {
                let mut next = vec![0.0f64; 4];
                for s in 0..4 {
                    let row = g.transition_distribution(s, 0, d_map[s]).unwrap();
                    let exp: f64 = row.iter().enumerate().map(|(sp, p)| p * val[sp]).sum();
                    next[s] = g.cost_at(s, 0, d_map[s]) + 0.8 * exp;
                }
                val = next;
            }
            for s in 0..4 {
                best[s] = best[s].max(val[s]);
            }
        }
        for s in 0..4 {
            assert!((v.values[s] - best[s]).abs() < 1e-6, "state {s}: {} vs {}", v.values[s], best[s]);
        }
    }

    #[test]
    fn vi_large_eta_prefers_quietest_disturbance() {
        let g = TabularGame::random(5, 2, 3, 11).unwrap();
        // Payoff gain from any disturbance is ≤ max cost (1.0); η far above
        // that makes any nonzero intensity a loss.
        let v = minmax_value_iteration(&g, 1e4, 0.8).unwrap();
        for s in 0..5 {
            assert_eq!(v.disturbance[s], g.quietest_disturbance());
        }
    }

    #[test]
    fn vi_contraction() {
        let g = TabularGame::random(6, 2, 2, 13).unwrap();
        let mg = MinMaxGame::from(&g);
        let mut v = vec![0.0; 6];
        let mut prev_change = f64::INFINITY;
        for _ in 0..50 {
            let (next, _, _) = sweep(&mg, &v, 0.1, 0.8);
            let change = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            if prev_change.is_finite() && prev_change > 1e-14 {
                assert!(change <= 0.8 * prev_change + 1e-12, "change {change} prev {prev_change}");
            }
            prev_change = change;
            v = next;
        }
    }

    #[test]
    fn ratio_estimator() {
        assert_eq!(
            empirical_hinf_ratio(&[Trajectory { costs: vec![0.0, 0.0], dist_norms: vec![1.0, 1.0] }]).unwrap(),
            0.0
        );
        assert_eq!(
            empirical_hinf_ratio(&[Trajectory { costs: vec![1.0], dist_norms: vec![2.0] }]).unwrap(),
            0.5
        );
        let batch = [
            Trajectory { costs: vec![0.25, 0.5], dist_norms: vec![1.0, 0.5] },
            Trajectory { costs: vec![0.75], dist_norms: vec![2.0] },
        ];
        assert!((empirical_hinf_ratio(&batch).unwrap() - 1.5 / 3.5).abs() < 1e-12);
        assert!(empirical_hinf_ratio(&[Trajectory { costs: vec![1.0], dist_norms: vec![0.0] }]).is_err());
    }

    #[test]
    fn long_run_negativity_on_constructed_triples() {
        // For triples satisfying the per-state strict inequality, the
        // simulated time average of C − η‖d‖₂ is negative.
        use rand::Rng;
        for seed in 0..5 {
            let game = {
                let mut g = TabularGame::random(6, 3, 3, 100 + seed).unwrap();
                // All-positive intensities so a feasible η always exists.
                g.disturbance_norms = vec![0.4, 0.7, 1.0];
                g
            };
            let pair = StationaryPair::random(&game, seed);
            let v_cost: Vec<f64> =
                (0..game.n_states).map(|i| rng::stream(&[seed, i as u64]).random_range(0.0..1.0)).collect();
            let eta = feasible_eta(&game, &pair, &v_cost, 0.05).expect("positive norms");
            for s in 0..game.n_states {
                let lhs = expected_cost(&game, &pair, s) - eta * game.disturbance_norms[pair.disturbance[s]];
                let rhs = expected_drift(&game, &pair, &v_cost, s);
                assert!(lhs < rhs, "state {s} violates the construction");
            }
            let avg = simulate_time_average(&game, &pair, eta, 30_000, seed);
            assert!(avg < 0.0, "seed {seed}: time average {avg}");
        }
    }

    fn uniform_transition(s: usize, a: usize, d: usize) -> Vec<f64> {
        let row = vec![1.0 / s as f64; s];
        let mut out = Vec::new();
        for _ in 0..s * a * d {
            out.extend(&row);
        }
        out
    }
}
