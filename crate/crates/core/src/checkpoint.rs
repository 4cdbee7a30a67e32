//! Versioned binary checkpoints for both trainers.
//!
//! Layout (all integers little-endian): an 8-byte magic, a format version,
//! a kind byte, an opaque caller blob (the CLI stores its config echo there),
//! then the kind-specific payload: full training configuration, counters, rng
//! word positions, every network and optimizer tensor, and for the skill
//! trainer the episode buffer, so a resumed run continues the interrupted one
//! exactly. The baseline's million-transition replay is deliberately not
//! stored; a resumed baseline starts with an empty replay.
//!
//! Saving the same state twice produces identical bytes, and a load followed
//! by a save reproduces the file.

use ndarray::{Array1, Array2};
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

use crate::baseline::{BaselineConfig, BaselineTrainer};
use crate::boards::{Board, GameMove, GameSpec, LightsBoard, TileBoard};
use crate::cursor_env::{
    Action, CursorState, EnvConfig, EnvState, EpisodeRecord, TerminationCause,
};
use crate::nn::{AdamState, Linear, Mlp, OutputHead};
use crate::sac::{SacAgent, SacConfig};
use crate::skill_model::{ForwardModel, SkillDiscriminator, SkillModel};
use crate::trainer::{EpisodeBuffers, TrainConfig, TrainError, Trainer};

const MAGIC: [u8; 8] = *b"SEADSCKP";
const VERSION: u32 = 1;
const KIND_SKILL: u8 = 0;
const KIND_BASELINE: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint format version {found}, expected {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("checkpoint truncated at byte {offset} while reading {context}")]
    Truncated { offset: usize, context: &'static str },
    #[error("checkpoint corrupt: {0}")]
    Corrupt(String),
    #[error("checkpoint state rejected: {0}")]
    Invalid(#[from] TrainError),
}

type Result<T> = std::result::Result<T, CheckpointError>;

fn corrupt<T>(msg: impl Into<String>) -> Result<T> {
    Err(CheckpointError::Corrupt(msg.into()))
}

// ---------------------------------------------------------------- writing

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn bool(&mut self, v: bool) {
        self.buf.push(u8::from(v));
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes(&mut self, v: &[u8]) {
        self.usize(v.len());
        self.buf.extend_from_slice(v);
    }

    fn arr2(&mut self, a: &Array2<f64>) {
        self.usize(a.nrows());
        self.usize(a.ncols());
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                self.f64(a[[r, c]]);
            }
        }
    }

    fn arr1(&mut self, a: &Array1<f64>) {
        self.usize(a.len());
        for &v in a.iter() {
            self.f64(v);
        }
    }

    fn game(&mut self, game: GameSpec) {
        match game {
            GameSpec::LightsOut { n } => {
                self.u8(0);
                self.u8(n as u8);
            }
            GameSpec::TileSwap => self.u8(1),
        }
    }

    fn env(&mut self, env: &EnvConfig) {
        self.f64(env.max_displacement);
        self.u32(env.step_limit);
        self.f64(env.trigger_threshold);
        self.f64(env.swap_radius);
    }

    fn sac_config(&mut self, cfg: &SacConfig) {
        self.usize(cfg.obs_dim);
        self.usize(cfg.num_skills);
        self.usize(cfg.action_dim);
        self.usize(cfg.hidden.len());
        for &h in &cfg.hidden {
            self.usize(h);
        }
        self.f64(cfg.lr);
        self.f64(cfg.gamma);
        self.f64(cfg.tau);
        self.f64(cfg.alpha);
        self.f64(cfg.log_std_min);
        self.f64(cfg.log_std_max);
    }

    fn mlp(&mut self, mlp: &Mlp) {
        match mlp.head() {
            OutputHead::Linear => self.u8(0),
            OutputHead::Sigmoid => self.u8(1),
            OutputHead::Gaussian {
                log_std_min,
                log_std_max,
            } => {
                self.u8(2);
                self.f64(log_std_min);
                self.f64(log_std_max);
            }
        }
        self.usize(mlp.layers().len());
        for layer in mlp.layers() {
            self.arr2(&layer.w);
            self.arr1(&layer.b);
        }
    }

    fn adam(&mut self, opt: &AdamState) {
        self.f64(opt.lr);
        self.f64(opt.beta1);
        self.f64(opt.beta2);
        self.f64(opt.eps);
        self.u64(opt.t);
        self.usize(opt.m_w.len());
        for i in 0..opt.m_w.len() {
            self.arr2(&opt.m_w[i]);
            self.arr2(&opt.v_w[i]);
            self.arr1(&opt.m_b[i]);
            self.arr1(&opt.v_b[i]);
        }
    }

    fn board(&mut self, board: &Board) {
        match board {
            Board::Lights(b) => self.u32(b.mask()),
            Board::Tiles(b) => self.buf.extend_from_slice(b.chips()),
        }
    }

    fn env_state(&mut self, state: &EnvState) {
        self.f64(state.cursor.x);
        self.f64(state.cursor.y);
        self.board(&state.board);
    }

    fn game_move(&mut self, mv: Option<GameMove>) {
        match mv {
            None => self.u8(0),
            Some(GameMove::Push { row, col }) => {
                self.u8(1);
                self.u8(row);
                self.u8(col);
            }
            Some(GameMove::Swap { a, b }) => {
                self.u8(2);
                self.u8(a);
                self.u8(b);
            }
        }
    }

    fn episode(&mut self, ep: &EpisodeRecord) {
        self.u64(ep.id);
        self.usize(ep.skill);
        self.u8(match ep.cause {
            TerminationCause::SymbolicChange => 0,
            TerminationCause::StepLimit => 1,
        });
        self.game_move(ep.final_move);
        self.usize(ep.states.len());
        for state in &ep.states {
            self.env_state(state);
        }
        self.usize(ep.actions.len());
        for a in &ep.actions {
            self.f64(a.dx);
            self.f64(a.dy);
            self.f64(a.trigger);
        }
    }

    fn train_config(&mut self, cfg: &TrainConfig) {
        self.game(cfg.game);
        self.env(&cfg.env);
        self.usize(cfg.num_skills);
        self.u64(cfg.seed);
        self.u64(cfg.total_env_steps);
        self.u32(cfg.max_depth);
        self.usize(cfg.episodes_per_epoch);
        self.usize(cfg.buffer_capacity);
        self.usize(cfg.recent_capacity);
        self.usize(cfg.buffer_sample);
        self.f64(cfg.model_relabel_fraction);
        self.f64(cfg.policy_relabel_fraction);
        self.usize(cfg.model_updates_per_epoch);
        self.usize(cfg.model_batch);
        self.usize(cfg.model_hidden.len());
        for &h in &cfg.model_hidden {
            self.usize(h);
        }
        self.f64(cfg.model_lr);
        self.usize(cfg.policy_updates_per_epoch);
        self.usize(cfg.policy_batch);
        self.sac_config(&cfg.sac);
        self.bool(cfg.second_best_norm);
        self.bool(cfg.novelty_bonus);
        self.bool(cfg.use_discriminator);
    }

    fn baseline_config(&mut self, cfg: &BaselineConfig) {
        self.game(cfg.env.game);
        self.env(&cfg.env);
        self.u64(cfg.seed);
        self.u64(cfg.total_env_steps);
        self.u32(cfg.max_depth);
        self.usize(cfg.steps_per_epoch);
        self.usize(cfg.updates_per_epoch);
        self.usize(cfg.batch);
        self.usize(cfg.replay_capacity);
        self.usize(cfg.min_replay);
        self.sac_config(&cfg.sac);
    }

    fn agent(&mut self, agent: &SacAgent) {
        self.mlp(&agent.actor);
        self.mlp(&agent.critic1);
        self.mlp(&agent.critic2);
        self.mlp(&agent.target1);
        self.mlp(&agent.target2);
        self.adam(&agent.actor_opt);
        self.adam(&agent.critic1_opt);
        self.adam(&agent.critic2_opt);
    }
}

// ---------------------------------------------------------------- reading

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(CheckpointError::Truncated {
                offset: self.pos,
                context,
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, context: &'static str) -> Result<u8> {
        Ok(self.take(1, context)?[0])
    }

    fn bool(&mut self, context: &'static str) -> Result<bool> {
        match self.u8(context)? {
            0 => Ok(false),
            1 => Ok(true),
            v => corrupt(format!("invalid boolean byte {v} in {context}")),
        }
    }

    fn u32(&mut self, context: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, context)?.try_into().unwrap()))
    }

    fn u64(&mut self, context: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, context)?.try_into().unwrap()))
    }

    fn u128(&mut self, context: &'static str) -> Result<u128> {
        Ok(u128::from_le_bytes(
            self.take(16, context)?.try_into().unwrap(),
        ))
    }

    fn usize(&mut self, context: &'static str) -> Result<usize> {
        let v = self.u64(context)?;
        usize::try_from(v).or_else(|_| corrupt(format!("length {v} overflows in {context}")))
    }

    fn f64(&mut self, context: &'static str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, context)?.try_into().unwrap()))
    }

    fn bytes(&mut self, context: &'static str) -> Result<Vec<u8>> {
        let n = self.usize(context)?;
        Ok(self.take(n, context)?.to_vec())
    }

    fn arr2(&mut self, context: &'static str) -> Result<Array2<f64>> {
        let rows = self.usize(context)?;
        let cols = self.usize(context)?;
        let mut a = Array2::zeros((rows, cols));
        for r in 0..rows {
            for c in 0..cols {
                a[[r, c]] = self.f64(context)?;
            }
        }
        Ok(a)
    }

    fn arr1(&mut self, context: &'static str) -> Result<Array1<f64>> {
        let n = self.usize(context)?;
        let mut a = Array1::zeros(n);
        for i in 0..n {
            a[i] = self.f64(context)?;
        }
        Ok(a)
    }

    fn game(&mut self) -> Result<GameSpec> {
        match self.u8("game tag")? {
            0 => {
                let n = self.u8("board size")? as usize;
                GameSpec::lights_out(n)
                    .or_else(|_| corrupt(format!("invalid board size {n}")))
            }
            1 => Ok(GameSpec::TileSwap),
            t => corrupt(format!("unknown game tag {t}")),
        }
    }

    fn env(&mut self, game: GameSpec) -> Result<EnvConfig> {
        Ok(EnvConfig {
            game,
            max_displacement: self.f64("env.max_displacement")?,
            step_limit: self.u32("env.step_limit")?,
            trigger_threshold: self.f64("env.trigger_threshold")?,
            swap_radius: self.f64("env.swap_radius")?,
        })
    }

    fn sac_config(&mut self) -> Result<SacConfig> {
        let obs_dim = self.usize("sac.obs_dim")?;
        let num_skills = self.usize("sac.num_skills")?;
        let action_dim = self.usize("sac.action_dim")?;
        let n = self.usize("sac.hidden count")?;
        let mut hidden = Vec::with_capacity(n);
        for _ in 0..n {
            hidden.push(self.usize("sac.hidden")?);
        }
        Ok(SacConfig {
            obs_dim,
            num_skills,
            action_dim,
            hidden,
            lr: self.f64("sac.lr")?,
            gamma: self.f64("sac.gamma")?,
            tau: self.f64("sac.tau")?,
            alpha: self.f64("sac.alpha")?,
            log_std_min: self.f64("sac.log_std_min")?,
            log_std_max: self.f64("sac.log_std_max")?,
        })
    }

    fn mlp(&mut self) -> Result<Mlp> {
        let head = match self.u8("head tag")? {
            0 => OutputHead::Linear,
            1 => OutputHead::Sigmoid,
            2 => OutputHead::Gaussian {
                log_std_min: self.f64("head.log_std_min")?,
                log_std_max: self.f64("head.log_std_max")?,
            },
            t => return corrupt(format!("unknown output head tag {t}")),
        };
        let n = self.usize("layer count")?;
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let w = self.arr2("layer weights")?;
            let b = self.arr1("layer bias")?;
            if b.len() != w.nrows() {
                return corrupt("bias length does not match weight rows");
            }
            layers.push(Linear { w, b });
        }
        if layers.is_empty() {
            return corrupt("network has no layers");
        }
        for pair in layers.windows(2) {
            if pair[1].w.ncols() != pair[0].w.nrows() {
                return corrupt("adjacent layer shapes do not chain");
            }
        }
        Ok(Mlp::from_parts(layers, head))
    }

    fn adam(&mut self, mlp: &Mlp) -> Result<AdamState> {
        let lr = self.f64("adam.lr")?;
        let beta1 = self.f64("adam.beta1")?;
        let beta2 = self.f64("adam.beta2")?;
        let eps = self.f64("adam.eps")?;
        let t = self.u64("adam.t")?;
        let n = self.usize("adam layer count")?;
        if n != mlp.layers().len() {
            return corrupt("optimizer layer count does not match network");
        }
        let mut m_w = Vec::with_capacity(n);
        let mut v_w = Vec::with_capacity(n);
        let mut m_b = Vec::with_capacity(n);
        let mut v_b = Vec::with_capacity(n);
        for i in 0..n {
            let mw = self.arr2("adam.m_w")?;
            let vw = self.arr2("adam.v_w")?;
            let mb = self.arr1("adam.m_b")?;
            let vb = self.arr1("adam.v_b")?;
            let layer = &mlp.layers()[i];
            if mw.dim() != layer.w.dim()
                || vw.dim() != layer.w.dim()
                || mb.len() != layer.b.len()
                || vb.len() != layer.b.len()
            {
                return corrupt("optimizer moment shapes do not match network");
            }
            m_w.push(mw);
            v_w.push(vw);
            m_b.push(mb);
            v_b.push(vb);
        }
        Ok(AdamState {
            lr,
            beta1,
            beta2,
            eps,
            t,
            m_w,
            v_w,
            m_b,
            v_b,
        })
    }

    fn board(&mut self, game: GameSpec) -> Result<Board> {
        match game {
            GameSpec::LightsOut { n } => {
                let mask = self.u32("board mask")?;
                if n * n < 32 && mask >= 1u32 << (n * n) {
                    return corrupt(format!("mask {mask:#x} outside {n}x{n} board"));
                }
                Ok(Board::Lights(LightsBoard::new(n, mask).unwrap()))
            }
            GameSpec::TileSwap => {
                let raw = self.take(9, "board chips")?;
                let chips: [u8; 9] = raw.try_into().unwrap();
                match TileBoard::new(chips) {
                    Ok(b) => Ok(Board::Tiles(b)),
                    Err(_) => corrupt("chips are not a permutation"),
                }
            }
        }
    }

    fn env_state(&mut self, game: GameSpec) -> Result<EnvState> {
        Ok(EnvState {
            cursor: CursorState {
                x: self.f64("cursor.x")?,
                y: self.f64("cursor.y")?,
            },
            board: self.board(game)?,
        })
    }

    fn game_move(&mut self) -> Result<Option<GameMove>> {
        match self.u8("move tag")? {
            0 => Ok(None),
            1 => Ok(Some(GameMove::Push {
                row: self.u8("move row")?,
                col: self.u8("move col")?,
            })),
            2 => Ok(Some(GameMove::Swap {
                a: self.u8("move field a")?,
                b: self.u8("move field b")?,
            })),
            t => corrupt(format!("unknown move tag {t}")),
        }
    }

    fn episode(&mut self, game: GameSpec) -> Result<EpisodeRecord> {
        let id = self.u64("episode id")?;
        let skill = self.usize("episode skill")?;
        let cause = match self.u8("episode cause")? {
            0 => TerminationCause::SymbolicChange,
            1 => TerminationCause::StepLimit,
            t => return corrupt(format!("unknown termination cause {t}")),
        };
        let final_move = self.game_move()?;
        let n_states = self.usize("episode state count")?;
        if n_states == 0 {
            return corrupt("episode without states");
        }
        let mut states = Vec::with_capacity(n_states);
        for _ in 0..n_states {
            states.push(self.env_state(game)?);
        }
        let n_actions = self.usize("episode action count")?;
        if n_actions + 1 != n_states {
            return corrupt("episode action count does not match states");
        }
        let mut actions = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            actions.push(Action {
                dx: self.f64("action dx")?,
                dy: self.f64("action dy")?,
                trigger: self.f64("action trigger")?,
            });
        }
        let z0 = game.to_symbolic(&states[0].board);
        let z_end = game.to_symbolic(&states[n_states - 1].board);
        Ok(EpisodeRecord {
            id,
            skill,
            states,
            actions,
            z0,
            z_end,
            cause,
            final_move,
        })
    }

    fn train_config(&mut self) -> Result<TrainConfig> {
        let game = self.game()?;
        let env = self.env(game)?;
        let num_skills = self.usize("num_skills")?;
        let seed = self.u64("seed")?;
        let total_env_steps = self.u64("total_env_steps")?;
        let max_depth = self.u32("max_depth")?;
        let episodes_per_epoch = self.usize("episodes_per_epoch")?;
        let buffer_capacity = self.usize("buffer_capacity")?;
        let recent_capacity = self.usize("recent_capacity")?;
        let buffer_sample = self.usize("buffer_sample")?;
        let model_relabel_fraction = self.f64("model_relabel_fraction")?;
        let policy_relabel_fraction = self.f64("policy_relabel_fraction")?;
        let model_updates_per_epoch = self.usize("model_updates_per_epoch")?;
        let model_batch = self.usize("model_batch")?;
        let n = self.usize("model_hidden count")?;
        let mut model_hidden = Vec::with_capacity(n);
        for _ in 0..n {
            model_hidden.push(self.usize("model_hidden")?);
        }
        let model_lr = self.f64("model_lr")?;
        let policy_updates_per_epoch = self.usize("policy_updates_per_epoch")?;
        let policy_batch = self.usize("policy_batch")?;
        let sac = self.sac_config()?;
        Ok(TrainConfig {
            game,
            num_skills,
            env,
            seed,
            total_env_steps,
            max_depth,
            episodes_per_epoch,
            buffer_capacity,
            recent_capacity,
            buffer_sample,
            model_relabel_fraction,
            policy_relabel_fraction,
            model_updates_per_epoch,
            model_batch,
            model_hidden,
            model_lr,
            policy_updates_per_epoch,
            policy_batch,
            sac,
            second_best_norm: self.bool("second_best_norm")?,
            novelty_bonus: self.bool("novelty_bonus")?,
            use_discriminator: self.bool("use_discriminator")?,
        })
    }

    fn baseline_config(&mut self) -> Result<BaselineConfig> {
        let game = self.game()?;
        let env = self.env(game)?;
        Ok(BaselineConfig {
            env,
            seed: self.u64("seed")?,
            total_env_steps: self.u64("total_env_steps")?,
            max_depth: self.u32("max_depth")?,
            steps_per_epoch: self.usize("steps_per_epoch")?,
            updates_per_epoch: self.usize("updates_per_epoch")?,
            batch: self.usize("batch")?,
            replay_capacity: self.usize("replay_capacity")?,
            min_replay: self.usize("min_replay")?,
            sac: self.sac_config()?,
        })
    }

    fn agent(&mut self, cfg: SacConfig) -> Result<SacAgent> {
        let actor = self.mlp()?;
        let critic1 = self.mlp()?;
        let critic2 = self.mlp()?;
        let target1 = self.mlp()?;
        let target2 = self.mlp()?;
        let actor_opt = self.adam(&actor)?;
        let critic1_opt = self.adam(&critic1)?;
        let critic2_opt = self.adam(&critic2)?;
        Ok(SacAgent {
            cfg,
            actor,
            critic1,
            critic2,
            target1,
            target2,
            actor_opt,
            critic1_opt,
            critic2_opt,
        })
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return corrupt(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            ));
        }
        Ok(())
    }
}

// ------------------------------------------------------------------- API

/// A loaded checkpoint: the caller's opaque blob plus the restored trainer.
pub struct SavedRun {
    pub config_blob: Vec<u8>,
    pub payload: SavedPayload,
}

pub enum SavedPayload {
    Skill(Box<Trainer>),
    Baseline(Box<BaselineTrainer>),
}

fn header(kind: u8, config_blob: &[u8]) -> Writer {
    let mut w = Writer::new();
    w.buf.extend_from_slice(&MAGIC);
    w.u32(VERSION);
    w.u8(kind);
    w.bytes(config_blob);
    w
}

pub fn serialize_trainer(trainer: &Trainer, config_blob: &[u8]) -> Vec<u8> {
    let mut w = header(KIND_SKILL, config_blob);
    w.train_config(trainer.config());
    w.u64(trainer.env_steps);
    w.u64(trainer.epoch);
    w.u64(trainer.episodes_collected);
    w.u128(trainer.learn_rng.get_word_pos());
    w.agent(&trainer.agent);
    match &trainer.model {
        SkillModel::Forward(fm) => {
            w.u8(0);
            w.mlp(fm.mlp());
            w.adam(fm.optimizer());
        }
        SkillModel::Discriminator(d) => {
            w.u8(1);
            w.mlp(d.mlp());
            w.adam(d.optimizer());
        }
    }
    w.usize(trainer.buffers.len());
    for episode in trainer.buffers.iter() {
        w.episode(episode);
    }
    w.buf
}

pub fn serialize_baseline(trainer: &BaselineTrainer, config_blob: &[u8]) -> Vec<u8> {
    let mut w = header(KIND_BASELINE, config_blob);
    w.baseline_config(trainer.config());
    w.u64(trainer.env_steps);
    w.u64(trainer.epoch);
    w.u64(trainer.episodes_finished);
    w.u64(trainer.episodes_solved);
    let (collect_pos, learn_pos) = trainer.rng_word_positions();
    w.u128(collect_pos);
    w.u128(learn_pos);
    match trainer.current_parts() {
        None => w.u8(0),
        Some((state, steps, limit)) => {
            w.u8(1);
            w.env_state(&state);
            w.u32(steps);
            w.u32(limit);
        }
    }
    let recent = trainer.recent_outcome_list();
    w.usize(recent.len());
    for solved in recent {
        w.bool(solved);
    }
    w.agent(&trainer.agent);
    w.buf
}

pub fn deserialize(bytes: &[u8]) -> Result<SavedRun> {
    let mut r = Reader::new(bytes);
    if r.take(8, "magic")? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion {
            found: version,
            expected: VERSION,
        });
    }
    let kind = r.u8("kind")?;
    let config_blob = r.bytes("config blob")?;
    let payload = match kind {
        KIND_SKILL => {
            let cfg = r.train_config()?;
            let env_steps = r.u64("env_steps")?;
            let epoch = r.u64("epoch")?;
            let episodes_collected = r.u64("episodes_collected")?;
            let learn_pos = r.u128("learn rng position")?;
            let agent = r.agent(cfg.sac.clone())?;
            let d = cfg.game.symbolic_dim();
            let model = match r.u8("model tag")? {
                0 => {
                    let mlp = r.mlp()?;
                    let opt = r.adam(&mlp)?;
                    if mlp.input_dim() != d + cfg.num_skills {
                        return corrupt("forward model input does not match game");
                    }
                    SkillModel::Forward(ForwardModel::from_parts(d, cfg.num_skills, mlp, opt))
                }
                1 => {
                    let mlp = r.mlp()?;
                    let opt = r.adam(&mlp)?;
                    if mlp.input_dim() != 3 * d {
                        return corrupt("discriminator input does not match game");
                    }
                    SkillModel::Discriminator(SkillDiscriminator::from_parts(
                        d,
                        cfg.num_skills,
                        mlp,
                        opt,
                    ))
                }
                t => return corrupt(format!("unknown model tag {t}")),
            };
            let n = r.usize("episode count")?;
            let mut buffers = EpisodeBuffers::new(cfg.buffer_capacity, cfg.recent_capacity);
            for _ in 0..n {
                buffers.push(std::sync::Arc::new(r.episode(cfg.game)?));
            }
            r.finish()?;
            let trainer = Trainer::from_parts(
                cfg,
                agent,
                model,
                buffers,
                env_steps,
                epoch,
                episodes_collected,
                learn_pos,
            )?;
            SavedPayload::Skill(Box::new(trainer))
        }
        KIND_BASELINE => {
            let cfg = r.baseline_config()?;
            let env_steps = r.u64("env_steps")?;
            let epoch = r.u64("epoch")?;
            let episodes_finished = r.u64("episodes_finished")?;
            let episodes_solved = r.u64("episodes_solved")?;
            let collect_pos = r.u128("collect rng position")?;
            let learn_pos = r.u128("learn rng position")?;
            let current = match r.u8("running episode tag")? {
                0 => None,
                1 => {
                    let state = r.env_state(cfg.env.game)?;
                    let steps = r.u32("episode steps")?;
                    let limit = r.u32("episode limit")?;
                    Some((state, steps, limit))
                }
                t => return corrupt(format!("unknown running episode tag {t}")),
            };
            let n = r.usize("recent outcome count")?;
            let mut recent = Vec::with_capacity(n);
            for _ in 0..n {
                recent.push(r.bool("recent outcome")?);
            }
            let agent = r.agent(cfg.sac.clone())?;
            r.finish()?;
            let trainer = BaselineTrainer::from_parts(
                cfg,
                agent,
                env_steps,
                epoch,
                episodes_finished,
                episodes_solved,
                current,
                recent,
                collect_pos,
                learn_pos,
            )?;
            SavedPayload::Baseline(Box::new(trainer))
        }
        t => return corrupt(format!("unknown checkpoint kind {t}")),
    };
    Ok(SavedRun {
        config_blob,
        payload,
    })
}

/// Write atomically: a temporary file in the same directory, then a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_trainer(path: &Path, trainer: &Trainer, config_blob: &[u8]) -> Result<()> {
    write_atomic(path, &serialize_trainer(trainer, config_blob))
}

pub fn save_baseline(path: &Path, trainer: &BaselineTrainer, config_blob: &[u8]) -> Result<()> {
    write_atomic(path, &serialize_baseline(trainer, config_blob))
}

pub fn load(path: &Path) -> Result<SavedRun> {
    deserialize(&fs::read(path)?)
}
