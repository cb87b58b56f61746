//! Command-line entry point.
//!
//! Subcommands: `train`, `eval`, `attack`, `oracle riccati`, `oracle vi`,
//! `ablate`. Every run writes its fully resolved configuration next to its
//! outputs; rerunning a subcommand with the same configuration and seed
//! produces byte-identical CSV files. The `HINF_OUT_DIR` environment
//! variable re-roots relative output directories.

use crate::checkpoint::{self, CheckpointBundle};
use crate::config::{parse_matrix, RunConfig};
use crate::envkit::{EnvModel, LqModel, PointMassModel, TabularGame};
use crate::error::{Error, Result};
use crate::evalkit::{self, DisturbanceRegime, PulseDirection};
use crate::hinf::Trainer;
use crate::metrics::MetricsWriter;
use crate::oracle;
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "hinf", about = "Adversarial actor/disturber training with a ratio-bound constraint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train actor, disturber, and critic.
    Train(TrainArgs),
    /// Evaluate a checkpoint under a disturbance regime.
    Eval(EvalArgs),
    /// Train a fresh adversary against a frozen checkpoint.
    Attack(AttackArgs),
    /// Ground-truth solvers, printed as CSV fixtures.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Train and evaluate the four ablation variants.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Configuration file (flat dotted keys); defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override train.iterations.
    #[arg(long)]
    iters: Option<u64>,
    /// Override train.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override out.dir.
    #[arg(long)]
    out: Option<String>,
    /// Resume from a checkpoint and continue to train.iterations.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint to evaluate.
    #[arg(long)]
    ckpt: PathBuf,
    /// none | continuous | pulse | adversary.
    #[arg(long)]
    regime: String,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Override attack.epochs (before the budget factor).
    #[arg(long)]
    epochs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Game Riccati recursion on a linear model.
    Riccati(RiccatiArgs),
    /// Min-max value iteration on a seeded random game.
    Vi(ViArgs),
}

#[derive(Args)]
struct RiccatiArgs {
    /// Matrix literals: rows `;`, entries `,` (e.g. `0.9` or `1,0;0,1`).
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    e: String,
    #[arg(long)]
    q: String,
    #[arg(long)]
    r: String,
    #[arg(long)]
    gamma_att: f64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ViArgs {
    #[arg(long, default_value_t = 8)]
    states: usize,
    #[arg(long, default_value_t = 3)]
    actions: usize,
    #[arg(long, default_value_t = 3)]
    disturbances: usize,
    #[arg(long, default_value_t = 0)]
    game_seed: u64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.8)]
    gamma2: f64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, one run per variant per seed.
    #[arg(long, default_value = "1,2,3")]
    seeds: String,
    /// Override train.iterations.
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

/// Parse and execute; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (also for --help/--version).
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Oracle(OracleCommand::Riccati(a)) => cmd_riccati(a),
        Command::Oracle(OracleCommand::Vi(a)) => cmd_vi(a),
        Command::Ablate(a) => cmd_ablate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidModel(_) => 2,
                Error::Io(_)
                | Error::CheckpointCorrupt(_)
                | Error::CheckpointVersion { .. }
                | Error::CheckpointMismatch(_) => 3,
                _ => 4,
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            RunConfig::parse(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

/// Resolve the output directory: explicit flag beats config, and
/// `HINF_OUT_DIR` re-roots relative paths.
fn resolve_out_dir(cfg_dir: &str, flag: &Option<String>) -> PathBuf {
    let dir = flag.as_deref().unwrap_or(cfg_dir);
    let path = PathBuf::from(dir);
    match std::env::var_os("HINF_OUT_DIR") {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path,
    }
}

fn prepare_out_dir(cfg: &RunConfig, flag: &Option<String>) -> Result<PathBuf> {
    let dir = resolve_out_dir(&cfg.out_dir, flag);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config_resolved.cfg"), cfg.to_text())?;
    Ok(dir)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(iters) = args.iters {
        cfg.train_iterations = iters;
    }
    if let Some(seed) = args.seed {
        cfg.train_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;

    let mut trainer = match &args.resume {
        Some(path) => {
            let bundle = checkpoint::load(path)?;
            let mut t = Trainer::from_bundle(bundle)?;
            // The resumed run keeps its embedded config except the horizon
            // of the outer loop.
            t.cfg.train_iterations = cfg.train_iterations;
            t.cfg.out_dir = cfg.out_dir.clone();
            t
        }
        None => Trainer::new(&cfg)?,
    };
    let cfg = trainer.cfg.clone();
    let out_dir = prepare_out_dir(&cfg, &args.out)?;

    let mut metrics = MetricsWriter::create(out_dir.join("metrics.csv"))?;
    let start = trainer.iter;
    let report_every = (cfg.train_iterations / 20).max(1);
    while trainer.iter < cfg.train_iterations {
        let report = trainer.train_iteration()?;
        metrics.write_row(&report)?;
        if cfg.train_checkpoint_every > 0 && trainer.iter % cfg.train_checkpoint_every == 0 {
            checkpoint::save(&trainer.to_bundle(), out_dir.join(format!("checkpoint_{}.ckpt", trainer.iter)))?;
        }
        if (report.iter + 1 - start) % report_every == 0 || trainer.iter == cfg.train_iterations {
            println!(
                "iter {:>6}  task_reward {:>8.4}  cost {:>7.4}  eta {:>9.5}  lambda {:>8.4}  force {:>7.2} N  falls {}",
                report.iter,
                report.mean_task_reward,
                report.mean_cost,
                report.eta_after,
                report.lambda_after,
                report.mean_force_norm,
                report.falls
            );
        }
    }
    checkpoint::save(&trainer.to_bundle(), out_dir.join("final.ckpt"))?;
    println!("wrote {}", out_dir.join("final.ckpt").display());
    Ok(())
}

fn point_mass_of(cfg: &RunConfig) -> Result<PointMassModel> {
    match cfg.build_model()? {
        EnvModel::PointMass(m) => Ok(m),
        _ => Err(Error::InvalidArgument("evaluation protocols run on the point-mass model".into())),
    }
}

fn regime_from_config(cfg: &RunConfig, name: &str) -> Result<DisturbanceRegime> {
    let direction = if cfg.eval_resample_direction == "per_episode" {
        PulseDirection::UniformPerEpisode
    } else {
        PulseDirection::UniformPerPulse
    };
    match name {
        "none" => Ok(DisturbanceRegime::none()),
        "continuous" => Ok(DisturbanceRegime::continuous(cfg.eval_max_force)),
        "pulse" => Ok(DisturbanceRegime::pulse(
            cfg.eval_pulse_force,
            cfg.eval_pulse_period,
            cfg.eval_pulse_duration,
            direction,
        )),
        "adversary" => Ok(DisturbanceRegime::adversary()),
        other => Err(Error::InvalidArgument(format!(
            "unknown regime `{other}` (expected none | continuous | pulse | adversary)"
        ))),
    }
}

fn load_bundle_config(bundle: &CheckpointBundle) -> Result<RunConfig> {
    RunConfig::parse(&bundle.config_text)
        .map_err(|e| Error::CheckpointMismatch(format!("embedded config does not parse: {e}")))
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let bundle = checkpoint::load(&args.ckpt)?;
    let cfg = load_bundle_config(&bundle)?;
    let base = point_mass_of(&cfg)?;
    let regime = regime_from_config(&cfg, &args.regime)?;
    let episodes = args.episodes.unwrap_or(cfg.eval_episodes);
    let seed = args.seed.unwrap_or(cfg.train_seed);
    let out_dir = prepare_out_dir(&cfg, &args.out)?;

    let tag = args
        .ckpt
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "policy".to_string());
    let adversary = Some((&bundle.disturber, cfg.net_disturber_force_scale));
    let report = evalkit::evaluate(&bundle.actor, adversary, &base, &regime, episodes, seed, &tag)?;

    let mut summary = std::fs::File::create(out_dir.join("report.csv"))?;
    writeln!(summary, "{}", evalkit::EvalReport::summary_header())?;
    writeln!(summary, "{}", report.summary_row())?;
    let curve = out_dir.join(format!("tracking_curve_{}_{}.csv", tag, report.regime_tag));
    report.write_curve_csv(std::fs::File::create(&curve)?)?;
    println!(
        "regime {}: mean tracking error {:.4} m/s, falls {}, episodes {}",
        report.regime_tag, report.mean_tracking_error, report.falls, report.episodes
    );
    println!("wrote {}", curve.display());
    Ok(())
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let bundle = checkpoint::load(&args.ckpt)?;
    let cfg = load_bundle_config(&bundle)?;
    let out_dir = prepare_out_dir(&cfg, &args.out)?;
    let seed = args.seed.unwrap_or(cfg.train_seed);
    let epochs = match args.epochs {
        Some(e) => ((e as f64 * cfg.attack_budget_factor).round() as u64).max(1),
        None => evalkit::scaled_attack_epochs(&cfg),
    };

    let result = evalkit::train_attack_disturber(&bundle.actor, &bundle.critic, &cfg, bundle.eta, epochs, seed)?;
    let mut history = std::fs::File::create(out_dir.join("attack_history.csv"))?;
    writeln!(history, "epoch,mean_cost")?;
    for (i, c) in result.cost_history.iter().enumerate() {
        writeln!(history, "{i},{c}")?;
    }
    let mut attacked = bundle.clone();
    attacked.disturber = result.disturber;
    checkpoint::save(&attacked, out_dir.join("attacked.ckpt"))?;
    println!(
        "attack trained for {epochs} epochs; peak force {:.2} N; wrote {}",
        result.max_applied_force,
        out_dir.join("attacked.ckpt").display()
    );
    Ok(())
}

fn cmd_riccati(args: RiccatiArgs) -> Result<()> {
    let model = LqModel::new(
        parse_matrix("a", &args.a)?,
        parse_matrix("b", &args.b)?,
        parse_matrix("e", &args.e)?,
        parse_matrix("q", &args.q)?,
        parse_matrix("r", &args.r)?,
    )?;
    let sol = oracle::solve_lq_hinf(&model, args.gamma_att)?;
    let mut csv = String::new();
    csv.push_str("quantity,row,col,value\n");
    csv.push_str(&format!("feasible,0,0,{}\n", sol.feasible as u8));
    csv.push_str(&format!("gamma_att,0,0,{}\n", sol.gamma_att));
    csv.push_str(&format!("iterations,0,0,{}\n", sol.iterations));
    csv.push_str(&format!("residual,0,0,{}\n", sol.residual));
    for (name, m) in [("p", &sol.p), ("gain_u", &sol.gain_u), ("gain_w", &sol.gain_w)] {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                csv.push_str(&format!("{name},{i},{j},{}\n", m.get(i, j)));
            }
        }
    }
    print!("{csv}");
    if args.out.is_some() {
        let cfg = RunConfig::default();
        let out_dir = resolve_out_dir(&cfg.out_dir, &args.out);
        std::fs::create_dir_all(&out_dir)?;
        std::fs::write(out_dir.join("riccati.csv"), &csv)?;
    }
    Ok(())
}

fn cmd_vi(args: ViArgs) -> Result<()> {
    let game = TabularGame::random(args.states, args.actions, args.disturbances, args.game_seed)?;
    let value = oracle::minmax_value_iteration(&game, args.eta, args.gamma2)?;
    let mut csv = String::from("state,value,policy,disturbance\n");
    for s in 0..game.n_states {
        csv.push_str(&format!("{s},{},{},{}\n", value.values[s], value.policy[s], value.disturbance[s]));
    }
    print!("{csv}");
    if args.out.is_some() {
        let cfg = RunConfig::default();
        let out_dir = resolve_out_dir(&cfg.out_dir, &args.out);
        std::fs::create_dir_all(&out_dir)?;
        std::fs::write(out_dir.join("vi.csv"), &csv)?;
    }
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(iters) = args.iters {
        cfg.train_iterations = iters;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    let seeds: Vec<u64> = args
        .seeds
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| Error::Config(format!("bad seed `{s}`"))))
        .collect::<Result<_>>()?;
    let out_dir = prepare_out_dir(&cfg, &args.out)?;
    let cells = evalkit::ablation_suite(&cfg, &seeds, &out_dir)?;
    println!("{} table rows -> {}", cells.len(), out_dir.join("ablation.csv").display());
    Ok(())
}

/// Convenience wrapper used by tests: run with string arguments.
pub fn run_args(args: &[&str]) -> i32 {
    run(args.iter().map(|s| s.to_string()))
}

#[allow(dead_code)]
fn unused(_: &Path) {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_fails_usage() {
        assert_ne!(run_args(&["hinf", "frobnicate"]), 0);
    }

    #[test]
    fn unknown_flag_fails_usage() {
        assert_ne!(run_args(&["hinf", "train", "--frobnicate", "1"]), 0);
    }

    #[test]
    fn missing_checkpoint_distinct_error() {
        let code = run_args(&["hinf", "eval", "--ckpt", "/nonexistent/x.ckpt", "--regime", "pulse"]);
        assert_eq!(code, 3);
    }

    #[test]
    fn oracle_vi_runs() {
        assert_eq!(run_args(&["hinf", "oracle", "vi", "--states", "4", "--actions", "2", "--disturbances", "2"]), 0);
    }

    #[test]
    fn oracle_riccati_runs() {
        assert_eq!(
            run_args(&[
                "hinf", "oracle", "riccati", "--a", "0.5", "--b", "1", "--e", "0", "--q", "1", "--r", "1",
                "--gamma-att", "1.0",
            ]),
            0
        );
    }
}
