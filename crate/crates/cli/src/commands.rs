//! The five subcommands as library functions, so integration tests can call
//! them directly and the binary stays a thin argument parser.

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use seads_core::baseline::{eval_baseline, BaselineTrainer, FlatAgentPolicy};
use seads_core::checkpoint::{self, SavedPayload};
use seads_core::eval::{count_skills, eval_success, EvalReport, SkillCountReport};
use seads_core::planner::{CachedSuccessors, PlanLimits};
use seads_core::sac::{ActMode, AgentPolicy};
use seads_core::skill_model::SkillModel;
use seads_core::trainer::Trainer;
use seads_core::{BoardCatalog, GameSpec};

use crate::config::{self, RunConfig};
use crate::metrics::{
    self, baseline_row, train_row, CsvFile, BASELINE_HEADER, TRAIN_HEADER,
};

const LOG_EVERY: u64 = 25;

#[derive(Debug)]
pub struct TrainSummary {
    pub epochs_run: u64,
    pub env_steps: u64,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
}

fn load_skill_checkpoint(path: &Path) -> Result<Trainer> {
    let saved = checkpoint::load(path)
        .with_context(|| format!("cannot load checkpoint {}", path.display()))?;
    match saved.payload {
        SavedPayload::Skill(t) => Ok(*t),
        SavedPayload::Baseline(_) => {
            bail!("checkpoint holds a flat baseline agent; this command needs a skill agent")
        }
    }
}

fn load_baseline_checkpoint(path: &Path) -> Result<BaselineTrainer> {
    let saved = checkpoint::load(path)
        .with_context(|| format!("cannot load checkpoint {}", path.display()))?;
    match saved.payload {
        SavedPayload::Baseline(t) => Ok(*t),
        SavedPayload::Skill(_) => {
            bail!("checkpoint holds a skill agent; this command trains the flat baseline")
        }
    }
}

/// Train the skill agent and forward model. With `resume`, continue from a
/// checkpoint: every configured field except `total_env_steps` must match the
/// saved run, and metric rows append to the existing CSV.
pub fn cmd_train(run: &RunConfig, resume: Option<&Path>) -> Result<TrainSummary> {
    let blob = config::echo_toml(run);
    let mut trainer = match resume {
        None => Trainer::new(run.train.clone())?,
        Some(path) => {
            let mut t = load_skill_checkpoint(path)?;
            let mut want = run.train.clone();
            want.total_env_steps = t.config().total_env_steps;
            if want != *t.config() {
                bail!(
                    "config does not match the checkpoint; only `total_env_steps` may change \
                     on resume"
                );
            }
            t.set_total_env_steps(run.train.total_env_steps);
            t
        }
    };
    fs::create_dir_all(&run.out_dir)
        .with_context(|| format!("cannot create {}", run.out_dir.display()))?;
    let metrics_path = run.out_dir.join("metrics.csv");
    let ckpt_path = run.out_dir.join("checkpoint.ckpt");
    let mut csv = CsvFile::append_or_create(&metrics_path, TRAIN_HEADER)?;

    let started = Instant::now();
    let mut epochs_run = 0;
    while !trainer.done() {
        let m = trainer.run_epoch()?;
        csv.row(&train_row(&m))?;
        epochs_run += 1;
        if run.checkpoint_interval > 0 && m.epoch % run.checkpoint_interval == 0 {
            checkpoint::save_trainer(&ckpt_path, &trainer, blob.as_bytes())?;
        }
        if m.epoch % LOG_EVERY == 0 {
            eprintln!(
                "epoch {} steps {} reward {:.3} model_loss {:.3} ({:.0}s)",
                m.epoch,
                m.env_steps,
                m.mean_final_reward,
                m.model_loss,
                started.elapsed().as_secs_f64()
            );
        }
    }
    csv.finish()?;
    checkpoint::save_trainer(&ckpt_path, &trainer, blob.as_bytes())?;
    eprintln!(
        "trained to {} env steps in {} epochs ({:.0}s)",
        trainer.env_steps,
        trainer.epoch,
        started.elapsed().as_secs_f64()
    );
    Ok(TrainSummary {
        epochs_run,
        env_steps: trainer.env_steps,
        checkpoint: ckpt_path,
        metrics: metrics_path,
    })
}

/// Train the flat soft actor-critic baseline on the sparse task reward, then
/// evaluate it the same way as the skill agent minus planning.
pub fn cmd_baseline(run: &RunConfig, resume: Option<&Path>) -> Result<TrainSummary> {
    let cfg = config::baseline_config(run)?;
    let blob = config::echo_toml(run);
    let mut trainer = match resume {
        None => BaselineTrainer::new(cfg.clone())?,
        Some(path) => {
            let mut t = load_baseline_checkpoint(path)?;
            let mut want = cfg.clone();
            want.total_env_steps = t.config().total_env_steps;
            if want != *t.config() {
                bail!(
                    "config does not match the checkpoint; only `total_env_steps` may change \
                     on resume"
                );
            }
            t.set_total_env_steps(cfg.total_env_steps);
            t
        }
    };
    fs::create_dir_all(&run.out_dir)
        .with_context(|| format!("cannot create {}", run.out_dir.display()))?;
    let metrics_path = run.out_dir.join("metrics.csv");
    let ckpt_path = run.out_dir.join("checkpoint.ckpt");
    let mut csv = CsvFile::append_or_create(&metrics_path, BASELINE_HEADER)?;

    let started = Instant::now();
    let mut epochs_run = 0;
    while !trainer.done() {
        let m = trainer.run_epoch()?;
        csv.row(&baseline_row(&m))?;
        epochs_run += 1;
        if run.checkpoint_interval > 0 && m.epoch % run.checkpoint_interval == 0 {
            checkpoint::save_baseline(&ckpt_path, &trainer, blob.as_bytes())?;
        }
        if m.epoch % (LOG_EVERY * 100) == 0 {
            eprintln!(
                "epoch {} steps {} recent_success {:.3} ({:.0}s)",
                m.epoch,
                m.env_steps,
                m.recent_success,
                started.elapsed().as_secs_f64()
            );
        }
    }
    csv.finish()?;
    checkpoint::save_baseline(&ckpt_path, &trainer, blob.as_bytes())?;

    let policy = FlatAgentPolicy {
        agent: &trainer.agent,
        mode: ActMode::Deterministic,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(trainer.config().seed);
    let report = eval_baseline(
        &trainer.config().env,
        &policy,
        trainer.catalog(),
        run.eval_tasks_per_depth,
        &mut rng,
    )?;
    metrics::write_eval_report(&run.out_dir, &report)?;
    eprintln!(
        "baseline trained to {} env steps; task success {:.3} ({:.0}s)",
        trainer.env_steps,
        report.overall_rate(),
        started.elapsed().as_secs_f64()
    );
    Ok(TrainSummary {
        epochs_run,
        env_steps: trainer.env_steps,
        checkpoint: ckpt_path,
        metrics: metrics_path,
    })
}

/// For each sampled initial state, run every skill and count distinct
/// triggered game moves; report the mean over states.
pub fn cmd_count_skills(
    ckpt: &Path,
    num_states: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<SkillCountReport> {
    let trainer = load_skill_checkpoint(ckpt)?;
    let cfg = trainer.config();
    let policy = AgentPolicy {
        agent: &trainer.agent,
        mode: ActMode::Deterministic,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = count_skills(
        &cfg.env,
        &policy,
        trainer.catalog(),
        cfg.num_skills,
        num_states,
        &mut rng,
    )?;
    fs::create_dir_all(out_dir)?;
    metrics::write_skill_counts(out_dir, &report)?;
    println!(
        "mean unique game moves over {} states: {}",
        num_states,
        metrics::num(report.mean_unique_moves)
    );
    Ok(report)
}

/// Plan with the learned forward model and execute skills on goal-reaching
/// tasks from the held-out test split.
pub fn cmd_eval_success(
    ckpt: &Path,
    replan: bool,
    seed: u64,
    tasks_per_depth: usize,
    out_dir: &Path,
) -> Result<EvalReport> {
    let trainer = load_skill_checkpoint(ckpt)?;
    let cfg = trainer.config();
    let SkillModel::Forward(fm) = &trainer.model else {
        bail!(
            "this checkpoint was trained with the discriminator ablation, which cannot \
             predict successor states; success evaluation needs the forward model"
        );
    };
    let succ = CachedSuccessors::new(fm, cfg.game.symbolic_dim());
    let policy = AgentPolicy {
        agent: &trainer.agent,
        mode: ActMode::Deterministic,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = PlanLimits::default();
    let started = Instant::now();
    let report = eval_success(
        &cfg.env,
        &policy,
        &succ,
        trainer.catalog(),
        tasks_per_depth,
        &limits,
        replan,
        &mut rng,
    )?;
    fs::create_dir_all(out_dir)?;
    metrics::write_eval_report(out_dir, &report)?;
    let mut lines = String::new();
    for d in &report.per_depth {
        let _ = writeln!(
            lines,
            "depth {} ({}): {}/{}",
            d.depth,
            metrics::split_token(d.split),
            d.successes,
            d.attempts
        );
    }
    print!("{lines}");
    println!(
        "overall success rate: {} (replan {}, {:.0}s)",
        metrics::num(report.overall_rate()),
        if replan { "on" } else { "off" },
        started.elapsed().as_secs_f64()
    );
    Ok(report)
}

/// Export every board up to `max_depth` as one line:
/// `<game>,<depth>,<split>,<cells...>`.
pub fn cmd_gen_boards(game: GameSpec, max_depth: u32, out: &Path) -> Result<usize> {
    let catalog = BoardCatalog::build(game, max_depth);
    let token = config::game_token(game);
    let mut text = String::new();
    let mut lines = 0;
    for depth in 1..=max_depth {
        for board in catalog.boards(depth)? {
            let split = metrics::split_token(game.split_of(board));
            let _ = writeln!(
                text,
                "{token},{depth},{split},{}",
                game.serialize_board(board)
            );
            lines += 1;
        }
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, &text).with_context(|| format!("cannot write {}", out.display()))?;
    println!("wrote {lines} boards to {}", out.display());
    Ok(lines)
}
