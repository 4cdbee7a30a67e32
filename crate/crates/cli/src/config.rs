//! Run configuration: a TOML file plus named profile presets, resolved into
//! the core training configuration with ablation switches applied.
//!
//! Schema (all keys optional unless noted; a profile supplies defaults):
//!
//! ```toml
//! profile = "paper-lightsout"     # or "paper-tileswap", "fast"
//! game = "lights_out"            # or "tile_swap"
//! manipulator = "cursor"
//! board_size = 5                  # lights_out only
//! num_skills = 25
//! seed = 7                        # required (here or via --seed)
//! out_dir = "runs/lightsout"
//! total_env_steps = 500000
//! max_depth = 5
//! episodes_per_epoch = 32
//! buffer_capacity = 2048
//! recent_capacity = 256
//! buffer_sample = 256
//! model_updates_per_epoch = 4
//! model_batch = 32
//! model_hidden = [256, 256]
//! model_lr = 1e-3
//! policy_updates_per_epoch = 16
//! policy_batch = 128
//! second_best_norm = true
//! novelty_bonus = true
//! checkpoint_interval = 50        # epochs between checkpoint writes; 0 = final only
//! eval_tasks_per_depth = 20
//! count_states = 100
//!
//! [sac]
//! hidden = [512, 512]
//! lr = 3e-4
//! gamma = 0.99
//! tau = 0.005
//! alpha = 0.1
//!
//! [ablation]
//! no_relabel = false
//! no_sac_relabel = false
//! no_fm_relabel = false
//! no_second_best = false
//! no_novelty = false
//! vic_discriminator = false       # requires no_novelty
//! more_skills = false             # K = 30 (lights_out) / 15 (tile_swap)
//! ```

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use seads_core::{BaselineConfig, GameSpec, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    PaperLightsOut,
    PaperTileSwap,
    Fast,
}

impl Profile {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "paper-lightsout" => Ok(Profile::PaperLightsOut),
            "paper-tileswap" => Ok(Profile::PaperTileSwap),
            "fast" => Ok(Profile::Fast),
            other => bail!(
                "unknown profile {other:?}; expected paper-lightsout, paper-tileswap, or fast"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub profile: Option<String>,
    pub game: Option<String>,
    pub manipulator: Option<String>,
    pub board_size: Option<usize>,
    pub num_skills: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub total_env_steps: Option<u64>,
    pub max_depth: Option<u32>,
    pub episodes_per_epoch: Option<usize>,
    pub buffer_capacity: Option<usize>,
    pub recent_capacity: Option<usize>,
    pub buffer_sample: Option<usize>,
    pub model_updates_per_epoch: Option<usize>,
    pub model_batch: Option<usize>,
    pub model_hidden: Option<Vec<usize>>,
    pub model_lr: Option<f64>,
    pub policy_updates_per_epoch: Option<usize>,
    pub policy_batch: Option<usize>,
    pub second_best_norm: Option<bool>,
    pub novelty_bonus: Option<bool>,
    pub checkpoint_interval: Option<u64>,
    pub eval_tasks_per_depth: Option<usize>,
    pub count_states: Option<usize>,
    #[serde(default)]
    pub sac: SacOverrides,
    #[serde(default)]
    pub ablation: AblationFlags,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SacOverrides {
    pub hidden: Option<Vec<usize>>,
    pub lr: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationFlags {
    pub no_relabel: bool,
    pub no_sac_relabel: bool,
    pub no_fm_relabel: bool,
    pub no_second_best: bool,
    pub no_novelty: bool,
    pub vic_discriminator: bool,
    pub more_skills: bool,
}

impl AblationFlags {
    pub fn any(&self) -> bool {
        *self != AblationFlags::default()
    }
}

/// Settings from outside the config file: CLI flags and the `SEADS_OUT_DIR`
/// environment variable. Flags beat the environment, which beats the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    pub out_flag: Option<PathBuf>,
    pub out_env: Option<PathBuf>,
}

/// A fully resolved run: the core configuration plus harness settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub ablation: AblationFlags,
    pub out_dir: PathBuf,
    pub checkpoint_interval: u64,
    pub eval_tasks_per_depth: usize,
    pub count_states: usize,
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("config error in {}", path.display()))
}

fn parse_game(name: &str, board_size: Option<usize>) -> Result<GameSpec> {
    match name {
        "lights_out" => {
            let n = board_size.unwrap_or(5);
            GameSpec::lights_out(n)
                .map_err(|e| anyhow::anyhow!("config error at `board_size`: {e}"))
        }
        "tile_swap" => {
            if board_size.is_some() {
                bail!("config error at `board_size`: not configurable for tile_swap");
            }
            Ok(GameSpec::TileSwap)
        }
        other => bail!("config error at `game`: unknown game {other:?}"),
    }
}

pub fn resolve(file: &FileConfig, ov: &Overrides) -> Result<RunConfig> {
    let profile = match (&ov.profile, &file.profile) {
        (Some(p), _) => Some(*p),
        (None, Some(name)) => Some(Profile::parse(name)?),
        (None, None) => None,
    };

    if let Some(m) = &file.manipulator {
        if m != "cursor" {
            bail!("config error at `manipulator`: only \"cursor\" is supported, got {m:?}");
        }
    }

    let (default_game, default_board, default_skills, default_steps) = match profile {
        Some(Profile::PaperLightsOut) => (Some("lights_out"), 5, 25, 500_000),
        Some(Profile::PaperTileSwap) => (Some("tile_swap"), 0, 12, 500_000),
        Some(Profile::Fast) => (Some("lights_out"), 3, 9, 50_000),
        None => (None, 5, 0, 500_000),
    };

    let game_name = file
        .game
        .as_deref()
        .or(default_game)
        .context("config error at `game`: required when no profile is chosen")?;
    let board_size = match game_name {
        "lights_out" => Some(file.board_size.unwrap_or(default_board.max(1))),
        _ => file.board_size,
    };
    let game = parse_game(game_name, board_size)?;

    let ab = file.ablation;
    let num_skills = if ab.more_skills {
        if file.num_skills.is_some() {
            bail!("config error at `ablation.more_skills`: conflicts with explicit `num_skills`");
        }
        match game {
            GameSpec::LightsOut { .. } => 30,
            GameSpec::TileSwap => 15,
        }
    } else {
        file.num_skills.unwrap_or_else(|| {
            if default_skills > 0 {
                default_skills
            } else {
                game.num_moves()
            }
        })
    };

    let seed = ov
        .seed
        .or(file.seed)
        .context("config error at `seed`: a seed is required")?;

    let mut train = TrainConfig::new(game, num_skills);
    train.seed = seed;
    train.total_env_steps = file.total_env_steps.unwrap_or(default_steps);
    if profile == Some(Profile::Fast) {
        // Desk-scale preset: small networks keep the property checks at
        // minutes rather than hours.
        train.sac.hidden = vec![128, 128];
        train.model_hidden = vec![128, 128];
    }
    if let Some(v) = file.max_depth {
        train.max_depth = v;
    }
    if let Some(v) = file.episodes_per_epoch {
        train.episodes_per_epoch = v;
    }
    if let Some(v) = file.buffer_capacity {
        train.buffer_capacity = v;
    }
    if let Some(v) = file.recent_capacity {
        train.recent_capacity = v;
    }
    if let Some(v) = file.buffer_sample {
        train.buffer_sample = v;
    }
    if let Some(v) = file.model_updates_per_epoch {
        train.model_updates_per_epoch = v;
    }
    if let Some(v) = file.model_batch {
        train.model_batch = v;
    }
    if let Some(v) = &file.model_hidden {
        train.model_hidden = v.clone();
    }
    if let Some(v) = file.model_lr {
        train.model_lr = v;
    }
    if let Some(v) = file.policy_updates_per_epoch {
        train.policy_updates_per_epoch = v;
    }
    if let Some(v) = file.policy_batch {
        train.policy_batch = v;
    }
    if let Some(v) = &file.sac.hidden {
        train.sac.hidden = v.clone();
    }
    if let Some(v) = file.sac.lr {
        train.sac.lr = v;
    }
    if let Some(v) = file.sac.gamma {
        train.sac.gamma = v;
    }
    if let Some(v) = file.sac.tau {
        train.sac.tau = v;
    }
    if let Some(v) = file.sac.alpha {
        train.sac.alpha = v;
    }
    if let Some(v) = file.second_best_norm {
        train.second_best_norm = v;
    }
    if let Some(v) = file.novelty_bonus {
        train.novelty_bonus = v;
    }

    if ab.no_second_best {
        if file.second_best_norm == Some(true) {
            bail!(
                "config error at `ablation.no_second_best`: contradicts `second_best_norm = true`"
            );
        }
        train.second_best_norm = false;
    }
    if ab.no_novelty {
        if file.novelty_bonus == Some(true) {
            bail!("config error at `ablation.no_novelty`: contradicts `novelty_bonus = true`");
        }
        train.novelty_bonus = false;
    }
    if ab.vic_discriminator {
        if train.novelty_bonus {
            bail!(
                "config error at `ablation.vic_discriminator`: the discriminator cannot score \
                 successor likelihoods; set `ablation.no_novelty = true`"
            );
        }
        train.use_discriminator = true;
    }
    if ab.no_relabel || ab.no_fm_relabel {
        train.model_relabel_fraction = 0.0;
    }
    if ab.no_relabel || ab.no_sac_relabel {
        train.policy_relabel_fraction = 0.0;
    }

    train
        .validate()
        .map_err(|e| anyhow::anyhow!("config error: {e}"))?;

    let out_dir = ov
        .out_flag
        .clone()
        .or_else(|| ov.out_env.clone())
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("seads-out"));

    Ok(RunConfig {
        train,
        ablation: ab,
        out_dir,
        checkpoint_interval: file.checkpoint_interval.unwrap_or(50),
        eval_tasks_per_depth: file.eval_tasks_per_depth.unwrap_or(20),
        count_states: file.count_states.unwrap_or(100),
    })
}

/// Derive the flat-baseline configuration from a resolved run. Ablation
/// switches are skill-learning concepts and are rejected here.
pub fn baseline_config(run: &RunConfig) -> Result<BaselineConfig> {
    if run.ablation.any() {
        bail!("config error at `ablation`: not applicable to baseline-sac");
    }
    let mut cfg = BaselineConfig::new(run.train.env);
    cfg.seed = run.train.seed;
    cfg.total_env_steps = run.train.total_env_steps;
    cfg.max_depth = run.train.max_depth;
    Ok(cfg)
}

pub fn game_token(game: GameSpec) -> String {
    match game {
        GameSpec::LightsOut { n } => format!("lights_out:{n}"),
        GameSpec::TileSwap => "tile_swap".to_string(),
    }
}

pub fn parse_game_token(token: &str) -> Result<GameSpec> {
    if let Some(n) = token.strip_prefix("lights_out:") {
        let n: usize = n.parse().context("bad board size in game token")?;
        return GameSpec::lights_out(n).map_err(|e| anyhow::anyhow!("{e}"));
    }
    match token {
        "tile_swap" => Ok(GameSpec::TileSwap),
        other => bail!("unknown game token {other:?}"),
    }
}

/// Human-readable echo of the resolved configuration, embedded in
/// checkpoints so a file records what produced it.
pub fn echo_toml(run: &RunConfig) -> String {
    let t = &run.train;
    let mut s = String::new();
    let _ = writeln!(s, "game = {:?}", game_token(t.game));
    let _ = writeln!(s, "num_skills = {}", t.num_skills);
    let _ = writeln!(s, "seed = {}", t.seed);
    let _ = writeln!(s, "total_env_steps = {}", t.total_env_steps);
    let _ = writeln!(s, "max_depth = {}", t.max_depth);
    let _ = writeln!(s, "second_best_norm = {}", t.second_best_norm);
    let _ = writeln!(s, "novelty_bonus = {}", t.novelty_bonus);
    let _ = writeln!(s, "vic_discriminator = {}", t.use_discriminator);
    let _ = writeln!(s, "model_relabel_fraction = {}", t.model_relabel_fraction);
    let _ = writeln!(s, "policy_relabel_fraction = {}", t.policy_relabel_fraction);
    s
}
