//! Flat SAC baseline: one policy on the full observation with a sparse task
//! reward, no skills, no model, no planner.
//!
//! Each episode draws a board depth uniformly, runs under a step limit of ten
//! times the depth, and pays reward 1 only on the step that restores the goal
//! board. Transitions accumulate in a persistent ring replay; a few
//! environment steps and one gradient update alternate each epoch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::time::Instant;

use ndarray::{Array1, Array2};

use crate::boards::{Board, BoardCatalog, BoardError, SplitLabel};
use crate::cursor_env::{reset, step, Action, EnvConfig, EnvState};
use crate::eval::{DepthStats, EvalReport, TaskTrace, WallTimeStats};
use crate::planner::TaskOutcome;
use crate::sac::{ActMode, SacAgent, SacConfig, TransitionBatch};
use crate::trainer::TrainError;

/// Action from a full observation, no skill argument.
pub trait FlatPolicy {
    fn act(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> Action;
}

/// Borrowing adapter over a skill-free SAC agent.
pub struct FlatAgentPolicy<'a> {
    pub agent: &'a SacAgent,
    pub mode: ActMode,
}

impl FlatPolicy for FlatAgentPolicy<'_> {
    fn act(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> Action {
        let a = self.agent.act(obs, self.mode, rng);
        Action {
            dx: a[0],
            dy: a[1],
            trigger: a[2],
        }
    }
}

const FLAG_TERMINAL: u8 = 1;
const FLAG_TIMEOUT: u8 = 2;
const FLAG_REWARD: u8 = 4;

/// Fixed-capacity ring of transitions in struct-of-arrays layout; board bits
/// are stored as bytes to keep a million-transition buffer in memory.
pub struct FlatReplay {
    obs_dim: usize,
    capacity: usize,
    len: usize,
    head: usize,
    pose: Vec<f64>,
    next_pose: Vec<f64>,
    bits: Vec<u8>,
    next_bits: Vec<u8>,
    actions: Vec<f64>,
    flags: Vec<u8>,
}

impl FlatReplay {
    pub fn new(obs_dim: usize, capacity: usize) -> Self {
        assert!(obs_dim > 2);
        let d = obs_dim - 2;
        FlatReplay {
            obs_dim,
            capacity,
            len: 0,
            head: 0,
            pose: vec![0.0; 2 * capacity],
            next_pose: vec![0.0; 2 * capacity],
            bits: vec![0; d * capacity],
            next_bits: vec![0; d * capacity],
            actions: vec![0.0; 3 * capacity],
            flags: vec![0; capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        obs: &[f64],
        action: &Action,
        reward: f64,
        next_obs: &[f64],
        terminal: bool,
        timeout: bool,
    ) {
        assert_eq!(obs.len(), self.obs_dim);
        assert_eq!(next_obs.len(), self.obs_dim);
        let d = self.obs_dim - 2;
        let i = self.head;
        self.pose[2 * i..2 * i + 2].copy_from_slice(&obs[..2]);
        self.next_pose[2 * i..2 * i + 2].copy_from_slice(&next_obs[..2]);
        for (j, &b) in obs[2..].iter().enumerate() {
            self.bits[d * i + j] = b as u8;
        }
        for (j, &b) in next_obs[2..].iter().enumerate() {
            self.next_bits[d * i + j] = b as u8;
        }
        self.actions[3 * i] = action.dx;
        self.actions[3 * i + 1] = action.dy;
        self.actions[3 * i + 2] = action.trigger;
        self.flags[i] = u8::from(terminal) * FLAG_TERMINAL
            | u8::from(timeout) * FLAG_TIMEOUT
            | u8::from(reward != 0.0) * FLAG_REWARD;
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Assemble a batch for the given slot indices.
    pub fn gather(&self, idx: &[usize]) -> TransitionBatch {
        let b = idx.len();
        let d = self.obs_dim - 2;
        let mut obs = Array2::zeros((b, self.obs_dim));
        let mut next_obs = Array2::zeros((b, self.obs_dim));
        let mut actions = Array2::zeros((b, 3));
        let mut rewards = Array1::zeros(b);
        let mut bootstrap = Array1::zeros(b);
        for (row, &i) in idx.iter().enumerate() {
            assert!(i < self.len);
            obs[[row, 0]] = self.pose[2 * i];
            obs[[row, 1]] = self.pose[2 * i + 1];
            next_obs[[row, 0]] = self.next_pose[2 * i];
            next_obs[[row, 1]] = self.next_pose[2 * i + 1];
            for j in 0..d {
                obs[[row, 2 + j]] = self.bits[d * i + j] as f64;
                next_obs[[row, 2 + j]] = self.next_bits[d * i + j] as f64;
            }
            for j in 0..3 {
                actions[[row, j]] = self.actions[3 * i + j];
            }
            rewards[row] = f64::from(self.flags[i] & FLAG_REWARD != 0);
            bootstrap[row] = f64::from(self.flags[i] & FLAG_TERMINAL == 0);
        }
        TransitionBatch {
            obs,
            actions,
            rewards,
            next_obs,
            bootstrap,
        }
    }

    pub fn flags(&self, i: usize) -> (f64, bool, bool) {
        (
            f64::from(self.flags[i] & FLAG_REWARD != 0),
            self.flags[i] & FLAG_TERMINAL != 0,
            self.flags[i] & FLAG_TIMEOUT != 0,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub env: EnvConfig,
    pub seed: u64,
    pub total_env_steps: u64,
    pub max_depth: u32,
    /// Environment steps collected per epoch.
    pub steps_per_epoch: usize,
    pub updates_per_epoch: usize,
    pub batch: usize,
    pub replay_capacity: usize,
    /// Updates start once the replay holds this many transitions.
    pub min_replay: usize,
    pub sac: SacConfig,
}

impl BaselineConfig {
    pub fn new(env: EnvConfig) -> Self {
        let mut sac = SacConfig::new(env.obs_dim(), 0, 3);
        sac.hidden = vec![512, 512, 512];
        BaselineConfig {
            env,
            seed: 0,
            total_env_steps: 500_000,
            max_depth: 5,
            steps_per_epoch: 8,
            updates_per_epoch: 1,
            batch: 256,
            replay_capacity: 1_000_000,
            min_replay: 256,
            sac,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::Config(m));
        if self.sac.num_skills != 0 {
            return fail("the flat baseline is unconditioned; sac.num_skills must be 0".into());
        }
        if self.sac.obs_dim != self.env.obs_dim() {
            return fail(format!(
                "sac.obs_dim {} does not match the environment's {}",
                self.sac.obs_dim,
                self.env.obs_dim()
            ));
        }
        if self.batch == 0 || self.steps_per_epoch == 0 {
            return fail("batch and steps_per_epoch must be positive".into());
        }
        if self.min_replay < self.batch {
            return fail("min_replay must be at least one batch".into());
        }
        if self.replay_capacity < self.min_replay {
            return fail("replay_capacity must hold at least min_replay".into());
        }
        if self.max_depth == 0 || self.total_env_steps == 0 {
            return fail("max_depth and total_env_steps must be positive".into());
        }
        Ok(())
    }
}

struct RunningEpisode {
    state: EnvState,
    steps: u32,
    limit: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct BaselineEpochMetrics {
    pub epoch: u64,
    pub env_steps: u64,
    pub episodes_finished: u64,
    pub replay_len: usize,
    /// Success rate over the last hundred finished episodes.
    pub recent_success: f64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub mean_q: f64,
    pub updates_run: usize,
}

pub struct BaselineTrainer {
    cfg: BaselineConfig,
    pub agent: SacAgent,
    pub replay: FlatReplay,
    catalog: BoardCatalog,
    train_depths: Vec<u32>,
    goal: Board,
    current: Option<RunningEpisode>,
    recent_outcomes: VecDeque<bool>,
    pub env_steps: u64,
    pub epoch: u64,
    pub episodes_finished: u64,
    pub episodes_solved: u64,
    collect_rng: ChaCha8Rng,
    learn_rng: ChaCha8Rng,
}

const STREAM_COLLECT: u64 = u64::MAX - 2;
const STREAM_BASELINE_LEARN: u64 = u64::MAX - 3;
const STREAM_BASELINE_INIT: u64 = u64::MAX - 4;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl BaselineTrainer {
    pub fn new(cfg: BaselineConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let catalog = BoardCatalog::build(cfg.env.game, cfg.max_depth);
        let train_depths = catalog.depths_with_boards(Some(SplitLabel::Train));
        if train_depths.is_empty() {
            return Err(TrainError::Config("no training boards at any depth".into()));
        }
        let mut init_rng = stream_rng(cfg.seed, STREAM_BASELINE_INIT);
        let agent = SacAgent::new(cfg.sac.clone(), &mut init_rng);
        let replay = FlatReplay::new(cfg.env.obs_dim(), cfg.replay_capacity);
        let goal = cfg.env.game.goal_board();
        let collect_rng = stream_rng(cfg.seed, STREAM_COLLECT);
        let learn_rng = stream_rng(cfg.seed, STREAM_BASELINE_LEARN);
        Ok(BaselineTrainer {
            cfg,
            agent,
            replay,
            catalog,
            train_depths,
            goal,
            current: None,
            recent_outcomes: VecDeque::new(),
            env_steps: 0,
            epoch: 0,
            episodes_finished: 0,
            episodes_solved: 0,
            collect_rng,
            learn_rng,
        })
    }

    /// Rebuild from checkpointed parts. The replay buffer is not part of a
    /// checkpoint, so it restarts empty.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        cfg: BaselineConfig,
        agent: SacAgent,
        env_steps: u64,
        epoch: u64,
        episodes_finished: u64,
        episodes_solved: u64,
        current: Option<(EnvState, u32, u32)>,
        recent_outcomes: Vec<bool>,
        collect_word_pos: u128,
        learn_word_pos: u128,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let catalog = BoardCatalog::build(cfg.env.game, cfg.max_depth);
        let train_depths = catalog.depths_with_boards(Some(SplitLabel::Train));
        let replay = FlatReplay::new(cfg.env.obs_dim(), cfg.replay_capacity);
        let goal = cfg.env.game.goal_board();
        let mut collect_rng = stream_rng(cfg.seed, STREAM_COLLECT);
        collect_rng.set_word_pos(collect_word_pos);
        let mut learn_rng = stream_rng(cfg.seed, STREAM_BASELINE_LEARN);
        learn_rng.set_word_pos(learn_word_pos);
        Ok(BaselineTrainer {
            cfg,
            agent,
            replay,
            catalog,
            train_depths,
            goal,
            current: current.map(|(state, steps, limit)| RunningEpisode {
                state,
                steps,
                limit,
            }),
            recent_outcomes: recent_outcomes.into_iter().collect(),
            env_steps,
            epoch,
            episodes_finished,
            episodes_solved,
            collect_rng,
            learn_rng,
        })
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.cfg
    }

    /// Raise or lower the step budget, e.g. to extend a resumed run.
    pub fn set_total_env_steps(&mut self, total: u64) {
        self.cfg.total_env_steps = total;
    }

    pub fn catalog(&self) -> &BoardCatalog {
        &self.catalog
    }

    pub(crate) fn current_parts(&self) -> Option<(EnvState, u32, u32)> {
        self.current.as_ref().map(|e| (e.state, e.steps, e.limit))
    }

    pub(crate) fn recent_outcome_list(&self) -> Vec<bool> {
        self.recent_outcomes.iter().copied().collect()
    }

    pub(crate) fn rng_word_positions(&self) -> (u128, u128) {
        (
            self.collect_rng.get_word_pos(),
            self.learn_rng.get_word_pos(),
        )
    }

    pub fn done(&self) -> bool {
        self.env_steps >= self.cfg.total_env_steps
    }

    fn finish_episode(&mut self, solved: bool) {
        self.episodes_finished += 1;
        self.episodes_solved += u64::from(solved);
        if self.recent_outcomes.len() == 100 {
            self.recent_outcomes.pop_front();
        }
        self.recent_outcomes.push_back(solved);
        self.current = None;
    }

    fn begin_episode(&mut self) {
        let depth = self.train_depths[self.collect_rng.random_range(0..self.train_depths.len())];
        let board = self
            .catalog
            .sample(depth, Some(SplitLabel::Train), &mut self.collect_rng)
            .expect("train_depths only lists non-empty pools");
        let state = reset(board, &mut self.collect_rng);
        self.current = Some(RunningEpisode {
            state,
            steps: 0,
            limit: 10 * depth,
        });
    }

    /// One environment step within the current (or a fresh) episode.
    fn collect_step(&mut self) {
        if self.current.is_none() {
            self.begin_episode();
        }
        let episode = self.current.as_ref().unwrap();
        let state = episode.state;
        let obs = state.observation(&self.cfg.env.game);
        let policy = FlatAgentPolicy {
            agent: &self.agent,
            mode: ActMode::Sample,
        };
        let action = policy.act(&obs, &mut self.collect_rng);
        let result = step(&self.cfg.env, &state, &action);
        let next_obs = result.next_state.observation(&self.cfg.env.game);
        let solved = result.next_state.board == self.goal;
        let episode = self.current.as_mut().unwrap();
        episode.steps += 1;
        let timed_out = !solved && episode.steps >= episode.limit;
        self.replay.push(
            &obs,
            &action,
            f64::from(solved),
            &next_obs,
            solved,
            timed_out,
        );
        self.env_steps += 1;
        if solved || timed_out {
            self.finish_episode(solved);
        } else {
            self.current.as_mut().unwrap().state = result.next_state;
        }
    }

    pub fn run_epoch(&mut self) -> Result<BaselineEpochMetrics, TrainError> {
        for _ in 0..self.cfg.steps_per_epoch {
            self.collect_step();
        }
        let mut c1 = 0.0;
        let mut c2 = 0.0;
        let mut actor = 0.0;
        let mut mean_q = 0.0;
        let mut updates_run = 0;
        if self.replay.len() >= self.cfg.min_replay {
            for _ in 0..self.cfg.updates_per_epoch {
                let idx: Vec<usize> = (0..self.cfg.batch)
                    .map(|_| self.learn_rng.random_range(0..self.replay.len()))
                    .collect();
                let batch = self.replay.gather(&idx);
                let losses = self.agent.update(&batch, &mut self.learn_rng)?;
                c1 += losses.critic1;
                c2 += losses.critic2;
                actor += losses.actor;
                mean_q += losses.mean_q;
                updates_run += 1;
            }
        }
        self.epoch += 1;
        let n = updates_run.max(1) as f64;
        let recent = if self.recent_outcomes.is_empty() {
            0.0
        } else {
            self.recent_outcomes.iter().filter(|&&s| s).count() as f64
                / self.recent_outcomes.len() as f64
        };
        Ok(BaselineEpochMetrics {
            epoch: self.epoch,
            env_steps: self.env_steps,
            episodes_finished: self.episodes_finished,
            replay_len: self.replay.len(),
            recent_success: recent,
            critic1_loss: c1 / n,
            critic2_loss: c2 / n,
            actor_loss: actor / n,
            mean_q: mean_q / n,
            updates_run,
        })
    }
}

/// Roll the policy on one board for at most `limit` steps; success as soon
/// as the board matches the goal. A board already at the goal succeeds in
/// zero steps.
pub fn run_flat_task<P: FlatPolicy + ?Sized>(
    env: &EnvConfig,
    policy: &P,
    state: EnvState,
    limit: u32,
    rng: &mut ChaCha8Rng,
) -> (bool, u32) {
    let goal = env.game.goal_board();
    if state.board == goal {
        return (true, 0);
    }
    let mut state = state;
    for used in 1..=limit {
        let obs = state.observation(&env.game);
        let action = policy.act(&obs, rng);
        let result = step(env, &state, &action);
        state = result.next_state;
        if state.board == goal {
            return (true, used);
        }
    }
    (false, limit)
}

/// The planner evaluation's task set, solved by direct policy rollouts with
/// a step limit of ten times the task depth.
pub fn eval_baseline<P: FlatPolicy + ?Sized>(
    env: &EnvConfig,
    policy: &P,
    catalog: &BoardCatalog,
    tasks_per_depth: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalReport, BoardError> {
    let game = catalog.game();
    let mut per_depth = Vec::new();
    let mut traces = Vec::new();
    let mut wall = WallTimeStats::default();
    for depth in 1..=catalog.max_depth() {
        let split = if catalog.split_boards(depth, SplitLabel::Test)?.is_empty() {
            SplitLabel::Val
        } else {
            SplitLabel::Test
        };
        let mut stats = DepthStats {
            depth,
            split,
            attempts: 0,
            successes: 0,
        };
        for _ in 0..tasks_per_depth {
            let board = catalog.sample(depth, Some(split), rng)?;
            let state = reset(board, rng);
            let started = Instant::now();
            let (solved, used) = run_flat_task(env, policy, state, 10 * depth, rng);
            let wall_secs = started.elapsed().as_secs_f64();
            wall.total_secs += wall_secs;
            wall.max_secs = wall.max_secs.max(wall_secs);
            stats.attempts += 1;
            stats.successes += usize::from(solved);
            traces.push(TaskTrace {
                depth,
                board: game.serialize_board(&board),
                outcome: if solved {
                    TaskOutcome::Success
                } else {
                    TaskOutcome::ExecutionFailed
                },
                first_plan_len: None,
                replans: 0,
                skills_executed: 0,
                env_steps: used,
                wall_secs,
            });
        }
        per_depth.push(stats);
    }
    Ok(EvalReport {
        per_depth,
        traces,
        wall,
        mean_unique_moves: None,
    })
}
