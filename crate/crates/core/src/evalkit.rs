//! Evaluation protocols at desk scale: continuous random forces, sudden
//! large pulses, a trained adversary, and pulse-recovery (fall) counting,
//! plus the four-way training ablation.
//!
//! Evaluation always runs the point mass with a fixed 1.0 m/s forward
//! command, nominal physics, the policy's mean action, and
//! `terminate_on_fall` off so falls can be counted per episode. Force
//! schedules are derived from counter-based streams, so a report is a
//! pure function of (policy, regime, seed).

use crate::approx::{self, MlpParams, PolicyOutput};
use crate::config::RunConfig;
use crate::envkit::{CommandSpec, Disturbance, EnvModel, PointMassModel};
use crate::error::{Error, Result};
use crate::hinf::{self, Trainer};
use crate::linalg::Mat;
use crate::metrics::MetricsWriter;
use crate::rng::{self, tag};
use crate::rollout::{self, DisturbanceSource, VecEnvs};
use rand::Rng;
use std::io::Write;
use std::path::Path;

/// How pulse directions are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseDirection {
    /// Resampled uniformly for every pulse.
    UniformPerPulse,
    /// One uniform draw per episode, shared by all pulses.
    UniformPerEpisode,
    /// A fixed axis (unit vector).
    Fixed([f64; 2]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegimeKind {
    None,
    /// Magnitude uniform in [0, max_force], direction uniform, redrawn
    /// every control step.
    ContinuousUniform,
    /// Constant-force windows of `pulse_duration` every `pulse_period`.
    Pulse,
    /// Forces from a trained adversary network (mean output).
    TrainedAdversary,
}

#[derive(Debug, Clone)]
pub struct DisturbanceRegime {
    pub kind: RegimeKind,
    pub max_force: f64,
    pub pulse_force: f64,
    pub pulse_period: f64,
    pub pulse_duration: f64,
    pub direction: PulseDirection,
}

impl DisturbanceRegime {
    pub fn none() -> Self {
        DisturbanceRegime {
            kind: RegimeKind::None,
            max_force: 0.0,
            pulse_force: 0.0,
            pulse_period: 4.0,
            pulse_duration: 0.5,
            direction: PulseDirection::UniformPerPulse,
        }
    }

    pub fn continuous(max_force: f64) -> Self {
        DisturbanceRegime { kind: RegimeKind::ContinuousUniform, max_force, ..Self::none() }
    }

    pub fn pulse(pulse_force: f64, period: f64, duration: f64, direction: PulseDirection) -> Self {
        DisturbanceRegime {
            kind: RegimeKind::Pulse,
            pulse_force,
            pulse_period: period,
            pulse_duration: duration,
            direction,
            ..Self::none()
        }
    }

    pub fn adversary() -> Self {
        DisturbanceRegime { kind: RegimeKind::TrainedAdversary, ..Self::none() }
    }

    pub fn tag(&self) -> &'static str {
        match self.kind {
            RegimeKind::None => "none",
            RegimeKind::ContinuousUniform => "continuous",
            RegimeKind::Pulse => "pulse",
            RegimeKind::TrainedAdversary => "adversary",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_force < 0.0 || self.pulse_force < 0.0 {
            return Err(Error::InvalidArgument("regime forces must be nonnegative".into()));
        }
        if matches!(self.kind, RegimeKind::Pulse) && self.pulse_duration >= self.pulse_period {
            return Err(Error::InvalidArgument("pulse_duration must be shorter than pulse_period".into()));
        }
        Ok(())
    }
}

/// Pulse windows in step indices for an episode of `horizon` steps.
pub fn pulse_windows(horizon: u32, dt: f64, period: f64, duration: f64) -> Vec<(u32, u32)> {
    let mut windows = Vec::new();
    let mut k = 0u32;
    loop {
        let start_time = k as f64 * period;
        let start = (start_time / dt).round() as u32;
        if start >= horizon {
            break;
        }
        let end = (((start_time + duration) / dt).round() as u32).min(horizon);
        windows.push((start, end));
        k += 1;
    }
    windows
}

/// Evaluation outcome for one (policy, regime) pair.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub policy_tag: String,
    pub regime_tag: String,
    pub episodes: usize,
    /// Per-step ‖v − v_cmd‖, averaged over episodes.
    pub tracking_curve: Vec<f64>,
    /// Per-step v_x and applied force, averaged over episodes.
    pub v_x_curve: Vec<f64>,
    pub force_x_curve: Vec<f64>,
    pub force_y_curve: Vec<f64>,
    pub mean_tracking_error: f64,
    pub falls: u64,
    /// ΣC/Σ‖d‖ when the regime applied any force.
    pub hinf_ratio: Option<f64>,
    pub command: [f64; 3],
    pub dt: f64,
    /// Peak applied intensity over all logged steps.
    pub max_applied_force: f64,
    pub mean_cost: f64,
}

impl EvalReport {
    /// `step,time_s,v_x,v_cmd_x,tracking_error,force_x,force_y`
    pub fn write_curve_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,time_s,v_x,v_cmd_x,tracking_error,force_x,force_y")?;
        for (i, err) in self.tracking_curve.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                i,
                i as f64 * self.dt,
                self.v_x_curve[i],
                self.command[0],
                err,
                self.force_x_curve[i],
                self.force_y_curve[i]
            )?;
        }
        Ok(())
    }

    pub fn summary_header() -> &'static str {
        "policy,regime,episodes,mean_tracking_error,falls,mean_cost,hinf_ratio"
    }

    pub fn summary_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.policy_tag,
            self.regime_tag,
            self.episodes,
            self.mean_tracking_error,
            self.falls,
            self.mean_cost,
            match self.hinf_ratio {
                Some(r) => r.to_string(),
                None => String::new(),
            }
        )
    }
}

fn eval_model(base: &PointMassModel) -> EnvModel {
    EnvModel::PointMass(PointMassModel {
        command: CommandSpec::Fixed([1.0, 0.0, 0.0]),
        terminate_on_fall: false,
        ..base.clone()
    })
}

fn uniform_direction<R: Rng>(rng: &mut R) -> [f64; 2] {
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    [angle.cos(), angle.sin()]
}

/// Run `episodes` evaluation episodes of a frozen policy under a force
/// regime. `adversary` supplies the force for
/// [`RegimeKind::TrainedAdversary`] (its mean output, scaled and clipped).
pub fn evaluate(
    policy: &MlpParams,
    adversary: Option<(&MlpParams, f64)>,
    base: &PointMassModel,
    regime: &DisturbanceRegime,
    episodes: usize,
    seed: u64,
    policy_tag: &str,
) -> Result<EvalReport> {
    regime.validate()?;
    if episodes == 0 {
        return Err(Error::InvalidArgument("episodes must be at least 1".into()));
    }
    if matches!(regime.kind, RegimeKind::TrainedAdversary) && adversary.is_none() {
        return Err(Error::InvalidArgument("trained-adversary regime needs an adversary network".into()));
    }
    let model = eval_model(base);
    let horizon = model.horizon() as usize;
    let dt = base.dt;
    let f_max = model.f_max();
    let r_max = model.r_max_task();

    let mut tracking_curve = vec![0.0; horizon];
    let mut v_x_curve = vec![0.0; horizon];
    let mut force_x_curve = vec![0.0; horizon];
    let mut force_y_curve = vec![0.0; horizon];
    let mut falls = 0u64;
    let mut sum_cost = 0.0;
    let mut sum_norm = 0.0;
    let mut max_applied = 0.0f64;

    for episode in 0..episodes {
        let episode_seed = rng::mix(&[seed, tag::REGIME, episode as u64]);
        let mut state = model.reset(episode_seed, false)?;
        let windows = pulse_windows(model.horizon(), dt, regime.pulse_period, regime.pulse_duration);
        let episode_dir = uniform_direction(&mut rng::stream(&[episode_seed, tag::REGIME, u64::MAX]));

        for t in 0..horizon {
            let feats = Mat::from_rows(&[model.features(&state)]);
            let action = policy.forward(&feats)?.row(0).to_vec();

            let force: Vec<f64> = match regime.kind {
                RegimeKind::None => vec![0.0, 0.0],
                RegimeKind::ContinuousUniform => {
                    let mut r = rng::stream(&[episode_seed, tag::REGIME, t as u64]);
                    let magnitude = r.random_range(0.0..=regime.max_force);
                    let dir = uniform_direction(&mut r);
                    vec![magnitude * dir[0], magnitude * dir[1]]
                }
                RegimeKind::Pulse => {
                    let active = windows.iter().enumerate().find(|(_, (s, e))| (t as u32) >= *s && (t as u32) < *e);
                    match active {
                        Some((k, _)) => {
                            let dir = match &regime.direction {
                                PulseDirection::Fixed(d) => *d,
                                PulseDirection::UniformPerEpisode => episode_dir,
                                PulseDirection::UniformPerPulse => {
                                    uniform_direction(&mut rng::stream(&[episode_seed, tag::REGIME, k as u64]))
                                }
                            };
                            vec![regime.pulse_force * dir[0], regime.pulse_force * dir[1]]
                        }
                        None => vec![0.0, 0.0],
                    }
                }
                RegimeKind::TrainedAdversary => {
                    let (net, scale) = adversary.unwrap();
                    let mean = net.forward(&feats)?.row(0).to_vec();
                    let scaled: Vec<f64> = mean.iter().map(|v| v * scale).collect();
                    approx::clip_force_l2(&scaled, f_max)
                }
            };
            let applied = approx::clip_force_l2(&force, f_max);
            let norm = (applied[0] * applied[0] + applied[1] * applied[1]).sqrt();
            max_applied = max_applied.max(norm);

            let result = model.step(&state, &action, &Disturbance::Force(applied.clone()))?;
            let next = &result.next_state;
            let err = ((next.velocity[0] - 1.0).powi(2) + next.velocity[1].powi(2)).sqrt();
            tracking_curve[t] += err;
            v_x_curve[t] += next.velocity[0];
            force_x_curve[t] += applied[0];
            force_y_curve[t] += applied[1];
            if result.fall {
                falls += 1;
            }
            sum_cost += crate::rewards::cost(result.task_reward, r_max)?;
            sum_norm += norm;
            state = result.next_state;
            if state.terminated {
                break;
            }
        }
    }

    let n = episodes as f64;
    for c in [&mut tracking_curve, &mut v_x_curve, &mut force_x_curve, &mut force_y_curve] {
        for v in c.iter_mut() {
            *v /= n;
        }
    }
    let steps = (horizon * episodes) as f64;
    Ok(EvalReport {
        policy_tag: policy_tag.to_string(),
        regime_tag: regime.tag().to_string(),
        episodes,
        mean_tracking_error: tracking_curve.iter().sum::<f64>() / horizon as f64,
        tracking_curve,
        v_x_curve,
        force_x_curve,
        force_y_curve,
        falls,
        hinf_ratio: if sum_norm > 1e-12 { Some(sum_cost / sum_norm) } else { None },
        command: [1.0, 0.0, 0.0],
        dt,
        max_applied_force: max_applied,
        mean_cost: sum_cost / steps,
    })
}

/// Train a disturber from scratch against a frozen policy, maximizing the
/// discounted payoff Σ γ₂^t (C − η‖d‖₂) with η held fixed. Returns the
/// adversary and the per-epoch mean inflicted cost.
pub struct AttackResult {
    pub disturber: MlpParams,
    pub cost_history: Vec<f64>,
    pub max_applied_force: f64,
}

pub fn train_attack_disturber(
    policy: &MlpParams,
    critic: &MlpParams,
    cfg: &RunConfig,
    eta: f64,
    epochs: u64,
    seed: u64,
) -> Result<AttackResult> {
    let model = cfg.build_model()?;
    let feat = model.feature_dim();
    let mut widths = vec![feat];
    widths.extend(&cfg.net_actor_hidden);
    widths.push(model.disturbance_dim());
    let mut disturber = MlpParams::init(
        &widths,
        cfg.activation(),
        Some(cfg.net_disturber_log_std_init),
        0.01,
        &mut rng::stream(&[seed, tag::INIT, 0xA7]),
    );
    let mut adam = approx::Adam::new(cfg.hinf_lr, disturber.param_count());
    let mut envs = VecEnvs::new(model, cfg.attack_n_envs, rng::mix(&[seed, 0xA77]), cfg.env_randomize)?;
    let mut cost_history = Vec::with_capacity(epochs as usize);
    let mut max_applied = 0.0f64;

    for epoch in 0..epochs {
        let source = DisturbanceSource::Learned { net: &disturber, force_scale: cfg.net_disturber_force_scale };
        let buf = rollout::collect(&mut envs, policy, &source, critic, cfg.attack_t_steps, cfg.rewards_r_max_task)?;
        let adv = rollout::compute_advantages(
            &buf,
            cfg.hinf_gamma,
            cfg.hinf_gamma2,
            eta,
            cfg.disturber_baseline(),
            false,
        )?;
        for inner in 0..cfg.hinf_epochs {
            for mb in hinf::minibatch_indices(seed, epoch, inner as u64, buf.len(), cfg.hinf_minibatches) {
                if mb.is_empty() {
                    continue;
                }
                let out = hinf::disturber_loss(
                    &disturber,
                    &buf,
                    &adv,
                    &mb,
                    cfg.hinf_clip_eps,
                    cfg.hinf_disturber_entropy_coeff,
                )?;
                let update = adam.step(&out.grads.flatten());
                disturber.apply_update(&update);
            }
        }
        cost_history.push(buf.sum_costs() / buf.len() as f64);
        max_applied = max_applied.max(buf.dist_norms.iter().copied().fold(0.0, f64::max));
    }
    Ok(AttackResult { disturber, cost_history, max_applied_force: max_applied })
}

/// The four training settings compared by the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationVariant {
    pub name: &'static str,
    pub hinf_enabled: bool,
    pub disturber: &'static str,
}

pub const VARIANTS: [AblationVariant; 4] = [
    AblationVariant { name: "full", hinf_enabled: true, disturber: "learned" },
    AblationVariant { name: "no_hinf", hinf_enabled: false, disturber: "learned" },
    AblationVariant { name: "no_learnable_disturber", hinf_enabled: true, disturber: "curriculum" },
    AblationVariant { name: "baseline", hinf_enabled: false, disturber: "curriculum" },
];

pub fn variant(name: &str) -> Option<&'static AblationVariant> {
    VARIANTS.iter().find(|v| v.name == name)
}

/// Specialize a configuration for one ablation variant and seed.
pub fn variant_config(cfg: &RunConfig, v: &AblationVariant, seed: u64) -> RunConfig {
    let mut out = cfg.clone();
    out.hinf_enabled = v.hinf_enabled;
    out.train_disturber = v.disturber.to_string();
    out.train_seed = seed;
    out
}

/// Train one variant to completion, optionally logging metrics rows.
pub fn train_variant(
    cfg: &RunConfig,
    v: &AblationVariant,
    seed: u64,
    mut metrics: Option<&mut MetricsWriter>,
) -> Result<Trainer> {
    let vcfg = variant_config(cfg, v, seed);
    let mut trainer = Trainer::new(&vcfg)?;
    for _ in 0..vcfg.train_iterations {
        let report = trainer.train_iteration()?;
        if let Some(w) = metrics.as_deref_mut() {
            w.write_row(&report)?;
        }
    }
    Ok(trainer)
}

/// One row of the ablation table.
#[derive(Debug, Clone)]
pub struct AblationCell {
    pub variant: &'static str,
    pub regime: String,
    pub seed: u64,
    pub mean_tracking_error: f64,
    pub falls: u64,
    pub mean_cost: f64,
}

/// Train all four variants on identical seeds, evaluate each under the
/// three disturbance regimes, and write `ablation.csv` plus per-cell
/// tracking curves under `out_dir`.
pub fn ablation_suite(cfg: &RunConfig, seeds: &[u64], out_dir: &Path) -> Result<Vec<AblationCell>> {
    std::fs::create_dir_all(out_dir)?;
    let base = match cfg.build_model()? {
        EnvModel::PointMass(m) => m,
        _ => return Err(Error::InvalidArgument("the ablation suite runs on the point-mass model".into())),
    };
    let mut cells = Vec::new();
    let mut table = std::io::BufWriter::new(std::fs::File::create(out_dir.join("ablation.csv"))?);
    writeln!(table, "variant,regime,seed,mean_tracking_error,falls,mean_cost")?;

    for v in &VARIANTS {
        for &seed in seeds {
            let trainer = train_variant(cfg, v, seed, None)?;
            let attack = train_attack_disturber(
                &trainer.actor,
                &trainer.critic,
                &variant_config(cfg, v, seed),
                trainer.h.eta,
                scaled_attack_epochs(cfg),
                rng::mix(&[seed, 0xA77ac]),
            )?;
            let regimes = [
                DisturbanceRegime::continuous(cfg.eval_max_force),
                DisturbanceRegime::pulse(
                    cfg.eval_pulse_force,
                    cfg.eval_pulse_period,
                    cfg.eval_pulse_duration,
                    if cfg.eval_resample_direction == "per_episode" {
                        PulseDirection::UniformPerEpisode
                    } else {
                        PulseDirection::UniformPerPulse
                    },
                ),
                DisturbanceRegime::adversary(),
            ];
            for regime in &regimes {
                let tag = format!("{}_s{}", v.name, seed);
                let report = evaluate(
                    &trainer.actor,
                    Some((&attack.disturber, cfg.net_disturber_force_scale)),
                    &base,
                    regime,
                    cfg.eval_episodes,
                    rng::mix(&[seed, 0xE7a1]),
                    &tag,
                )?;
                let curve_path = out_dir.join(format!("tracking_curve_{}_{}.csv", tag, regime.tag()));
                report.write_curve_csv(std::fs::File::create(curve_path)?)?;
                writeln!(
                    table,
                    "{},{},{},{},{},{}",
                    v.name, report.regime_tag, seed, report.mean_tracking_error, report.falls, report.mean_cost
                )?;
                cells.push(AblationCell {
                    variant: v.name,
                    regime: report.regime_tag.clone(),
                    seed,
                    mean_tracking_error: report.mean_tracking_error,
                    falls: report.falls,
                    mean_cost: report.mean_cost,
                });
            }
        }
    }
    Ok(cells)
}

/// Attack epochs after the CI budget factor.
pub fn scaled_attack_epochs(cfg: &RunConfig) -> u64 {
    ((cfg.attack_epochs as f64 * cfg.attack_budget_factor).round() as u64).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::Activation;

    fn base_model() -> PointMassModel {
        PointMassModel::default()
    }

    fn tracking_policy() -> MlpParams {
        // Hand-built proportional tracker: action = clamp(k·(v_cmd − v)).
        // Features: [v_x, v_y, ω, sinθ, cosθ, headerr, cmd_vx, cmd_vy, cmd_ω, a...]
        let mut net = MlpParams::init(&[12, 3], Activation::Tanh, Some(-6.0), 0.0, &mut rng::stream(&[1]));
        let mut flat = vec![0.0; net.param_count()];
        // weight layout: 12×3 row-major, then bias 3, then log_std 3.
        let k = 4.0;
        flat[0] = -k; // v_x → a_x (row 0, col 0)
        flat[3 + 1] = -k; // v_y → a_y (row 1, col 1)
        flat[2 * 3 + 2] = -k; // ω → a_yaw
        flat[6 * 3] = k; // cmd_vx → a_x
        flat[7 * 3 + 1] = k; // cmd_vy → a_y
        flat[8 * 3 + 2] = k; // cmd_ω → a_yaw
        for v in flat.iter_mut().skip(12 * 3 + 3) {
            *v = -6.0; // σ at the floor
        }
        net.assign_from_flat(&flat);
        net
    }

    #[test]
    fn flat_index_arithmetic_matches_layout() {
        // Guard for the hand-built tracker above.
        let net = tracking_policy();
        assert_eq!(net.weights[0].get(0, 0), -4.0);
        assert_eq!(net.weights[0].get(1, 1), -4.0);
        assert_eq!(net.weights[0].get(0, 1), 0.0);
        assert_eq!(net.weights[0].get(6, 0), 4.0);
        assert_eq!(net.log_std.as_ref().unwrap()[0], -6.0);
    }

    #[test]
    fn perfect_policy_none_regime_zero_falls() {
        let policy = tracking_policy();
        let report =
            evaluate(&policy, None, &base_model(), &DisturbanceRegime::none(), 2, 3, "tracker").unwrap();
        assert_eq!(report.falls, 0);
        // Tracker converges to the command; the average error is small and
        // the tail of the curve is near zero.
        assert!(report.mean_tracking_error < 0.2, "{}", report.mean_tracking_error);
        assert!(report.tracking_curve.last().unwrap() < &0.02);
        assert!(report.hinf_ratio.is_none());
    }

    #[test]
    fn pulse_window_count_matches_schedule() {
        // 4 s period, 0.5 s pulses, 20 s episode at 50 Hz → 5 windows.
        let windows = pulse_windows(1000, 0.02, 4.0, 0.5);
        assert_eq!(windows.len(), 5);
        assert_eq!(windows[0], (0, 25));
        assert_eq!(windows[4], (800, 825));
    }

    #[test]
    fn continuous_intensities_uniform_by_ks() {
        // 1e5 sampled intensities against U[0, 100]: KS at the 1% level.
        let regime = DisturbanceRegime::continuous(100.0);
        let mut intensities = Vec::with_capacity(100_000);
        let episode_seed = rng::mix(&[7, tag::REGIME, 0]);
        for t in 0..100_000u64 {
            let mut r = rng::stream(&[episode_seed, tag::REGIME, t]);
            let magnitude = r.random_range(0.0..=regime.max_force);
            intensities.push(magnitude);
        }
        intensities.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = intensities.len() as f64;
        let mut d = 0.0f64;
        for (i, x) in intensities.iter().enumerate() {
            let f = x / 100.0;
            let hi = (i + 1) as f64 / n - f;
            let lo = f - i as f64 / n;
            d = d.max(hi).max(lo);
        }
        let critical = 1.628 / n.sqrt();
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn evaluation_does_not_mutate_policy() {
        let policy = tracking_policy();
        let before = policy.flatten();
        let _ = evaluate(&policy, None, &base_model(), &DisturbanceRegime::continuous(50.0), 1, 5, "t").unwrap();
        assert_eq!(before, policy.flatten());
    }

    #[test]
    fn eval_reports_reproducible() {
        let policy = tracking_policy();
        let regime = DisturbanceRegime::pulse(150.0, 4.0, 0.5, PulseDirection::UniformPerPulse);
        let a = evaluate(&policy, None, &base_model(), &regime, 2, 11, "t").unwrap();
        let b = evaluate(&policy, None, &base_model(), &regime, 2, 11, "t").unwrap();
        assert_eq!(a.mean_tracking_error.to_bits(), b.mean_tracking_error.to_bits());
        for (x, y) in a.force_x_curve.iter().zip(&b.force_x_curve) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    fn attack_test_config() -> RunConfig {
        RunConfig {
            env_friction: 0.0,
            env_randomize: false,
            env_command_mode: "fixed".into(),
            env_terminate_on_fall: false,
            net_actor_hidden: vec![16, 16],
            net_critic_hidden: vec![16, 16],
            attack_n_envs: 16,
            attack_t_steps: 50,
            hinf_epochs: 3,
            hinf_minibatches: 2,
            hinf_lr: 1e-3,
            ..RunConfig::default()
        }
    }

    #[test]
    fn attack_epochs_zero_returns_fresh_disturber() {
        let cfg = attack_test_config();
        let policy = tracking_policy();
        let critic = MlpParams::init(&[12, 16, 16, 2], Activation::Tanh, None, 1.0, &mut rng::stream(&[2]));
        let result = train_attack_disturber(&policy, &critic, &cfg, 0.01, 0, 5).unwrap();
        let mut widths = vec![12usize];
        widths.extend(&cfg.net_actor_hidden);
        widths.push(2);
        let fresh = MlpParams::init(
            &widths,
            cfg.activation(),
            Some(cfg.net_disturber_log_std_init),
            0.01,
            &mut rng::stream(&[5, tag::INIT, 0xA7]),
        );
        assert_eq!(result.disturber.flatten(), fresh.flatten());
        assert!(result.cost_history.is_empty());
    }

    #[test]
    fn attack_learns_to_oppose_command_and_improves() {
        // A zero policy ignores disturbances on the frictionless point
        // mass; the learned attack force should oppose the +x command.
        let cfg = attack_test_config();
        let mut policy = tracking_policy();
        let mut zeros = vec![0.0; policy.param_count()];
        for v in zeros.iter_mut().skip(12 * 3 + 3) {
            *v = -6.0; // zero mean, σ at the floor: effectively inert
        }
        policy.assign_from_flat(&zeros);
        let critic = MlpParams::init(&[12, 16, 16, 2], Activation::Tanh, None, 1.0, &mut rng::stream(&[3]));

        let result = train_attack_disturber(&policy, &critic, &cfg, 0.002, 60, 7).unwrap();

        // Mean force direction over a spread of states.
        let model = cfg.build_model().unwrap();
        let mut cos_sum = 0.0;
        let mut count = 0.0;
        for s in 0..20u64 {
            let st = model.reset(rng::mix(&[99, s]), false).unwrap();
            let feats = Mat::from_rows(&[model.features(&st)]);
            let mean = result.disturber.forward(&feats).unwrap().row(0).to_vec();
            let norm = (mean[0] * mean[0] + mean[1] * mean[1]).sqrt();
            if norm > 1e-9 {
                cos_sum += mean[0] / norm;
                count += 1.0;
            }
        }
        let mean_cos = cos_sum / count;
        assert!(mean_cos < -0.5, "attack direction cosine vs command = {mean_cos}");

        // Smoothed attack value is non-decreasing in ≥ 80% of consecutive
        // window pairs.
        let window = 10;
        let smoothed: Vec<f64> = result
            .cost_history
            .windows(window)
            .map(|w| w.iter().sum::<f64>() / window as f64)
            .collect();
        let pairs = smoothed.windows(2).count();
        let ok = smoothed.windows(2).filter(|w| w[1] >= w[0] - 1e-9).count();
        assert!(
            ok as f64 >= 0.8 * pairs as f64,
            "only {ok}/{pairs} smoothed pairs non-decreasing: {smoothed:?}"
        );

        // The attack exceeds enumerated fixed-direction constant pushers.
        let base = base_model();
        let eval_cfg_model = PointMassModel { friction: 0.0, ..base };
        let attack_report = evaluate(
            &policy,
            Some((&result.disturber, cfg.net_disturber_force_scale)),
            &eval_cfg_model,
            &DisturbanceRegime::adversary(),
            4,
            21,
            "zero",
        )
        .unwrap();
        let mut best_fixed = 0.0f64;
        for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let report = evaluate(
                &policy,
                None,
                &eval_cfg_model,
                // Constant force via a pulse that spans almost the whole period.
                &DisturbanceRegime::pulse(30.0, 1e9, 1e9 - 1.0, PulseDirection::Fixed(dir)),
                4,
                21,
                "zero",
            )
            .unwrap();
            best_fixed = best_fixed.max(report.mean_cost);
        }
        assert!(
            attack_report.mean_cost > 0.5 * best_fixed,
            "attack cost {} vs best fixed {best_fixed}",
            attack_report.mean_cost
        );
    }

    #[test]
    fn variant_table_covers_all() {
        assert_eq!(VARIANTS.len(), 4);
        assert!(variant("full").is_some());
        assert!(variant("baseline").is_some());
        assert!(variant("nope").is_none());
    }
}
