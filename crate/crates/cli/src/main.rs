use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use seads_cli::commands;
use seads_cli::config::{self, FileConfig, Overrides, Profile, RunConfig};

/// Skill discovery and symbolic planning on cursor-manipulated board games.
#[derive(Parser)]
#[command(name = "seads", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the skill agent and forward model.
    Train(TrainArgs),
    /// Train the flat soft actor-critic baseline on the task reward.
    BaselineSac(TrainArgs),
    /// Count distinct game moves triggered by the skills of a checkpoint.
    CountSkills(CountArgs),
    /// Solve held-out tasks by planning with the learned forward model.
    EvalSuccess(EvalArgs),
    /// Export the enumerated boards with depth and split labels.
    GenBoards(GenArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// TOML run configuration; optional when --profile is given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset: paper-lightsout, paper-tileswap, or fast.
    #[arg(long)]
    profile: Option<String>,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (flag beats SEADS_OUT_DIR, which beats the file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Resume from this checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Number of fresh initial states to evaluate.
    #[arg(long, default_value_t = 100)]
    num_states: usize,
    /// Evaluation sampling seed, independent of training.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Replan after a skill misses its predicted symbolic state.
    #[arg(long)]
    replan: bool,
    /// Tasks per solution depth.
    #[arg(long, default_value_t = 20)]
    tasks_per_depth: usize,
    /// Evaluation sampling seed, independent of training.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// lights_out or tile_swap.
    #[arg(long)]
    game: String,
    #[arg(long, default_value_t = 5)]
    board_size: usize,
    #[arg(long, default_value_t = 5)]
    max_depth: u32,
    /// Output file for the board lines.
    #[arg(long)]
    out: PathBuf,
}

fn out_env() -> Option<PathBuf> {
    std::env::var_os("SEADS_OUT_DIR").map(PathBuf::from)
}

fn resolve_run(args: &TrainArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => config::load_file(path)?,
        None => {
            if args.profile.is_none() {
                bail!("either --config or --profile is required");
            }
            FileConfig::default()
        }
    };
    let ov = Overrides {
        profile: args.profile.as_deref().map(Profile::parse).transpose()?,
        seed: args.seed,
        out_flag: args.out.clone(),
        out_env: out_env(),
    };
    config::resolve(&file, &ov)
}

fn eval_out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(out_env)
        .unwrap_or_else(|| PathBuf::from("seads-out"))
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Train(args) => {
            let run = resolve_run(&args)?;
            commands::cmd_train(&run, args.checkpoint.as_deref())?;
        }
        Cmd::BaselineSac(args) => {
            let run = resolve_run(&args)?;
            commands::cmd_baseline(&run, args.checkpoint.as_deref())?;
        }
        Cmd::CountSkills(args) => {
            let out = eval_out_dir(&args.out);
            commands::cmd_count_skills(&args.checkpoint, args.num_states, args.seed, &out)?;
        }
        Cmd::EvalSuccess(args) => {
            let out = eval_out_dir(&args.out);
            commands::cmd_eval_success(
                &args.checkpoint,
                args.replan,
                args.seed,
                args.tasks_per_depth,
                &out,
            )?;
        }
        Cmd::GenBoards(args) => {
            let game = match args.game.as_str() {
                "lights_out" => seads_core::GameSpec::lights_out(args.board_size)?,
                "tile_swap" => seads_core::GameSpec::TileSwap,
                other => bail!("unknown game {other:?}; expected lights_out or tile_swap"),
            };
            commands::cmd_gen_boards(game, args.max_depth, &args.out)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
