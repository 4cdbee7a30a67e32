//! Joint training loop: skill episodes into a replay of recent episodes,
//! relabelled batches into the skill model, then freshly relabelled and
//! reward-annotated transitions into the skill policy.
//!
//! Each epoch collects a fixed number of episodes, then runs the updates in a
//! fixed order: relabel for the skill model, skill-model gradient steps,
//! re-sample and relabel for the policy, and policy gradient steps whose final
//! transition carries the intrinsic reward computed from the just-updated
//! model. Every episode is generated from its own deterministic rng stream
//! keyed by the episode id, so runs are reproducible and resumable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::sync::Arc;
use thiserror::Error;

use crate::boards::{BoardCatalog, BoardError, GameSpec, SplitLabel};
use crate::cursor_env::{apply_skill, reset, EnvConfig, EpisodeRecord, TerminationCause};
use crate::nn::NnError;
use crate::relabel::{relabel_episodes, RelabelResult};
use crate::reward::{compute_reward, RewardConfig};
use crate::sac::{ActMode, AgentPolicy, SacAgent, SacConfig, Transition, TransitionBatch};
use crate::skill_model::{ForwardModel, SkillDiscriminator, SkillModel, SymbolicTransition};

/// Rng stream for buffer sampling and gradient noise.
const STREAM_LEARN: u64 = u64::MAX;
/// Rng stream for network initialization.
const STREAM_INIT: u64 = u64::MAX - 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rng driving episode `id`: the skill draw, board draw, cursor reset, and
/// policy noise, in that order.
pub fn episode_rng(seed: u64, id: u64) -> ChaCha8Rng {
    stream_rng(seed, 1 + id)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub game: GameSpec,
    pub num_skills: usize,
    pub env: EnvConfig,
    pub seed: u64,
    pub total_env_steps: u64,
    /// Training boards are drawn uniformly over depths `1..=max_depth`.
    pub max_depth: u32,
    pub episodes_per_epoch: usize,
    pub buffer_capacity: usize,
    pub recent_capacity: usize,
    /// Episodes drawn from the whole buffer before the recent episodes are
    /// unioned in.
    pub buffer_sample: usize,
    pub model_relabel_fraction: f64,
    pub policy_relabel_fraction: f64,
    pub model_updates_per_epoch: usize,
    pub model_batch: usize,
    pub model_hidden: Vec<usize>,
    pub model_lr: f64,
    pub policy_updates_per_epoch: usize,
    pub policy_batch: usize,
    pub sac: SacConfig,
    pub second_best_norm: bool,
    pub novelty_bonus: bool,
    /// Replace the forward model with a direct skill discriminator; no
    /// transition likelihoods, so no novelty bonus and no planning.
    pub use_discriminator: bool,
}

impl TrainConfig {
    pub fn new(game: GameSpec, num_skills: usize) -> Self {
        let env = EnvConfig::new(game);
        let sac = SacConfig::new(env.obs_dim(), num_skills, 3);
        TrainConfig {
            game,
            num_skills,
            env,
            seed: 0,
            total_env_steps: 500_000,
            max_depth: 5,
            episodes_per_epoch: 32,
            buffer_capacity: 2048,
            recent_capacity: 256,
            buffer_sample: 256,
            model_relabel_fraction: 1.0,
            policy_relabel_fraction: 0.5,
            model_updates_per_epoch: 4,
            model_batch: 32,
            model_hidden: vec![256, 256],
            model_lr: 1e-3,
            policy_updates_per_epoch: 16,
            policy_batch: 128,
            sac,
            second_best_norm: true,
            novelty_bonus: true,
            use_discriminator: false,
        }
    }

    pub fn reward_config(&self) -> RewardConfig {
        RewardConfig {
            num_skills: self.num_skills,
            second_best_norm: self.second_best_norm,
            novelty_bonus: self.novelty_bonus,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::Config(msg));
        if self.num_skills == 0 {
            return fail("num_skills must be positive".into());
        }
        if self.episodes_per_epoch == 0 {
            return fail("episodes_per_epoch must be positive".into());
        }
        if self.total_env_steps == 0 {
            return fail("total_env_steps must be positive".into());
        }
        if self.max_depth == 0 {
            return fail("max_depth must be positive".into());
        }
        if self.env.game != self.game {
            return fail("env.game must match game".into());
        }
        if self.recent_capacity > self.buffer_capacity {
            return fail("recent_capacity exceeds buffer_capacity".into());
        }
        for (name, f) in [
            ("model_relabel_fraction", self.model_relabel_fraction),
            ("policy_relabel_fraction", self.policy_relabel_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return fail(format!("{name} must lie in [0, 1], got {f}"));
            }
        }
        if self.model_updates_per_epoch > 0 && self.model_batch == 0 {
            return fail("model_batch must be positive".into());
        }
        if self.policy_updates_per_epoch > 0 && self.policy_batch == 0 {
            return fail("policy_batch must be positive".into());
        }
        if self.use_discriminator && self.novelty_bonus {
            return fail(
                "the discriminator has no transition likelihoods; disable the novelty bonus"
                    .into(),
            );
        }
        if self.sac.obs_dim != self.env.obs_dim() {
            return fail(format!(
                "sac.obs_dim {} does not match the environment's {}",
                self.sac.obs_dim,
                self.env.obs_dim()
            ));
        }
        if self.sac.num_skills != self.num_skills {
            return fail("sac.num_skills must equal num_skills".into());
        }
        if self.sac.action_dim != 3 {
            return fail("the cursor environment takes 3-dimensional actions".into());
        }
        Ok(())
    }
}

/// FIFO episode store; the most recent `recent_capacity` entries double as
/// the short-horizon buffer, so one deque backs both.
pub struct EpisodeBuffers {
    episodes: std::collections::VecDeque<Arc<EpisodeRecord>>,
    capacity: usize,
    recent_capacity: usize,
}

impl EpisodeBuffers {
    pub fn new(capacity: usize, recent_capacity: usize) -> Self {
        assert!(recent_capacity <= capacity);
        EpisodeBuffers {
            episodes: std::collections::VecDeque::with_capacity(capacity),
            capacity,
            recent_capacity,
        }
    }

    pub fn push(&mut self, episode: Arc<EpisodeRecord>) {
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<EpisodeRecord>> {
        self.episodes.iter()
    }

    /// The newest episodes, oldest first.
    pub fn recent(&self) -> Vec<Arc<EpisodeRecord>> {
        let start = self.episodes.len().saturating_sub(self.recent_capacity);
        self.episodes.iter().skip(start).cloned().collect()
    }

    /// Uniform draw of `n` episodes without replacement (all of them when the
    /// buffer is smaller), unioned with the recent suffix: sampled episodes
    /// outside the suffix first in draw order, then the suffix in age order.
    pub fn combined_sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Arc<EpisodeRecord>> {
        let len = self.episodes.len();
        let drawn = rand::seq::index::sample(rng, len, n.min(len));
        let recent = self.recent();
        let recent_ids: HashSet<u64> = recent.iter().map(|e| e.id).collect();
        let mut out: Vec<Arc<EpisodeRecord>> = drawn
            .iter()
            .map(|i| self.episodes[i].clone())
            .filter(|e| !recent_ids.contains(&e.id))
            .collect();
        out.extend(recent);
        out
    }
}

/// Per-epoch aggregates for logging.
#[derive(Clone, Copy, Debug)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub env_steps: u64,
    pub episodes_collected: u64,
    pub buffer_len: usize,
    pub mean_episode_len: f64,
    pub frac_symbolic_change: f64,
    pub mean_final_reward: f64,
    pub model_loss: f64,
    pub model_relabelled: usize,
    pub policy_relabelled: usize,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub mean_q: f64,
    pub mean_log_prob: f64,
}

pub struct Trainer {
    cfg: TrainConfig,
    pub agent: SacAgent,
    pub model: SkillModel,
    pub buffers: EpisodeBuffers,
    catalog: BoardCatalog,
    train_depths: Vec<u32>,
    pub env_steps: u64,
    pub epoch: u64,
    pub episodes_collected: u64,
    pub(crate) learn_rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let catalog = BoardCatalog::build(cfg.game, cfg.max_depth);
        let train_depths = catalog.depths_with_boards(Some(SplitLabel::Train));
        if train_depths.is_empty() {
            return Err(TrainError::Config(
                "no training boards at any depth".into(),
            ));
        }
        let mut init_rng = stream_rng(cfg.seed, STREAM_INIT);
        let agent = SacAgent::new(cfg.sac.clone(), &mut init_rng);
        let d = cfg.game.symbolic_dim();
        let model = if cfg.use_discriminator {
            SkillModel::Discriminator(SkillDiscriminator::new(
                d,
                cfg.num_skills,
                &cfg.model_hidden,
                cfg.model_lr,
                &mut init_rng,
            ))
        } else {
            SkillModel::Forward(ForwardModel::new(
                d,
                cfg.num_skills,
                &cfg.model_hidden,
                cfg.model_lr,
                &mut init_rng,
            ))
        };
        let buffers = EpisodeBuffers::new(cfg.buffer_capacity, cfg.recent_capacity);
        let learn_rng = stream_rng(cfg.seed, STREAM_LEARN);
        Ok(Trainer {
            cfg,
            agent,
            model,
            buffers,
            catalog,
            train_depths,
            env_steps: 0,
            epoch: 0,
            episodes_collected: 0,
            learn_rng,
        })
    }

    /// Rebuild a trainer from checkpointed parts. The learn rng resumes at
    /// `learn_word_pos` within its stream.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        cfg: TrainConfig,
        agent: SacAgent,
        model: SkillModel,
        buffers: EpisodeBuffers,
        env_steps: u64,
        epoch: u64,
        episodes_collected: u64,
        learn_word_pos: u128,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let catalog = BoardCatalog::build(cfg.game, cfg.max_depth);
        let train_depths = catalog.depths_with_boards(Some(SplitLabel::Train));
        let mut learn_rng = stream_rng(cfg.seed, STREAM_LEARN);
        learn_rng.set_word_pos(learn_word_pos);
        Ok(Trainer {
            cfg,
            agent,
            model,
            buffers,
            catalog,
            train_depths,
            env_steps,
            epoch,
            episodes_collected,
            learn_rng,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Raise or lower the step budget, e.g. to extend a resumed run.
    pub fn set_total_env_steps(&mut self, total: u64) {
        self.cfg.total_env_steps = total;
    }

    pub fn catalog(&self) -> &BoardCatalog {
        &self.catalog
    }

    pub fn done(&self) -> bool {
        self.env_steps >= self.cfg.total_env_steps
    }

    /// Collect one episode from its id-keyed rng stream and push it into the
    /// buffer.
    fn collect_episode(&mut self) -> Arc<EpisodeRecord> {
        let id = self.episodes_collected;
        let mut rng = episode_rng(self.cfg.seed, id);
        let skill = rng.random_range(0..self.cfg.num_skills);
        let depth = self.train_depths[rng.random_range(0..self.train_depths.len())];
        let board = self
            .catalog
            .sample(depth, Some(SplitLabel::Train), &mut rng)
            .expect("train_depths only lists non-empty pools");
        let state = reset(board, &mut rng);
        let policy = AgentPolicy {
            agent: &self.agent,
            mode: ActMode::Sample,
        };
        let mut episode = apply_skill(&self.cfg.env, &policy, state, skill, &mut rng);
        episode.id = id;
        let episode = Arc::new(episode);
        self.env_steps += episode.len() as u64;
        self.episodes_collected += 1;
        self.buffers.push(episode.clone());
        episode
    }

    /// Policy transitions for one relabelled episode set. Only each episode's
    /// final transition carries reward; it is terminal when the board changed
    /// and times out otherwise.
    fn build_transitions(
        &self,
        episodes: &[Arc<EpisodeRecord>],
        relabel: &RelabelResult,
    ) -> (Vec<Transition>, f64) {
        let reward_cfg = self.cfg.reward_config();
        let mut transitions = Vec::new();
        let mut reward_sum = 0.0;
        for (i, episode) in episodes.iter().enumerate() {
            let skill = relabel.skills[i];
            let posterior = relabel.posterior_log.row(i);
            let lik_row = relabel.log_lik.as_ref().map(|m| m.row(i));
            let final_reward = compute_reward(
                posterior.as_slice().expect("contiguous row"),
                lik_row.as_ref().map(|r| r.as_slice().expect("contiguous row")),
                skill,
                &reward_cfg,
            );
            reward_sum += final_reward;
            let steps = episode.len();
            for t in 0..steps {
                let last = t + 1 == steps;
                let obs = episode.states[t].observation(&self.cfg.game);
                let next_obs = episode.states[t + 1].observation(&self.cfg.game);
                let a = episode.actions[t];
                transitions.push(Transition {
                    obs: self.agent.augment_obs(&obs, skill),
                    action: vec![a.dx, a.dy, a.trigger],
                    reward: if last { final_reward } else { 0.0 },
                    next_obs: self.agent.augment_obs(&next_obs, skill),
                    terminal: last && episode.cause == TerminationCause::SymbolicChange,
                    timeout: last && episode.cause == TerminationCause::StepLimit,
                });
            }
        }
        let mean = reward_sum / episodes.len().max(1) as f64;
        (transitions, mean)
    }

    /// One full epoch: collect episodes, update the skill model on a
    /// relabelled sample, then update the policy on a freshly relabelled
    /// sample whose rewards come from the updated model.
    pub fn run_epoch(&mut self) -> Result<EpochMetrics, TrainError> {
        let mut len_sum = 0usize;
        let mut changed = 0usize;
        for _ in 0..self.cfg.episodes_per_epoch {
            let episode = self.collect_episode();
            len_sum += episode.len();
            changed += usize::from(episode.symbolic_changed());
        }

        let model_set = self
            .buffers
            .combined_sample(self.cfg.buffer_sample, &mut self.learn_rng);
        let model_relabel = relabel_episodes(
            &model_set,
            &self.model,
            self.cfg.model_relabel_fraction,
            &mut self.learn_rng,
        );
        let mut model_loss_sum = 0.0;
        for _ in 0..self.cfg.model_updates_per_epoch {
            let batch: Vec<SymbolicTransition> = (0..self.cfg.model_batch)
                .map(|_| {
                    let i = self.learn_rng.random_range(0..model_set.len());
                    SymbolicTransition {
                        z0: model_set[i].z0.clone(),
                        skill: model_relabel.skills[i],
                        zt: model_set[i].z_end.clone(),
                    }
                })
                .collect();
            model_loss_sum += self.model.update(&batch)?;
        }

        let policy_set = self
            .buffers
            .combined_sample(self.cfg.buffer_sample, &mut self.learn_rng);
        let policy_relabel = relabel_episodes(
            &policy_set,
            &self.model,
            self.cfg.policy_relabel_fraction,
            &mut self.learn_rng,
        );
        let (transitions, mean_final_reward) =
            self.build_transitions(&policy_set, &policy_relabel);
        let mut c1 = 0.0;
        let mut c2 = 0.0;
        let mut actor = 0.0;
        let mut mean_q = 0.0;
        let mut mean_lp = 0.0;
        for _ in 0..self.cfg.policy_updates_per_epoch {
            let idx: Vec<usize> = (0..self.cfg.policy_batch)
                .map(|_| self.learn_rng.random_range(0..transitions.len()))
                .collect();
            let batch = TransitionBatch::gather(&transitions, &idx);
            let losses = self.agent.update(&batch, &mut self.learn_rng)?;
            c1 += losses.critic1;
            c2 += losses.critic2;
            actor += losses.actor;
            mean_q += losses.mean_q;
            mean_lp += losses.mean_log_prob;
        }

        self.epoch += 1;
        let n_eps = self.cfg.episodes_per_epoch as f64;
        let n_model = self.cfg.model_updates_per_epoch.max(1) as f64;
        let n_policy = self.cfg.policy_updates_per_epoch.max(1) as f64;
        Ok(EpochMetrics {
            epoch: self.epoch,
            env_steps: self.env_steps,
            episodes_collected: self.episodes_collected,
            buffer_len: self.buffers.len(),
            mean_episode_len: len_sum as f64 / n_eps,
            frac_symbolic_change: changed as f64 / n_eps,
            mean_final_reward,
            model_loss: model_loss_sum / n_model,
            model_relabelled: model_relabel.num_changed,
            policy_relabelled: policy_relabel.num_changed,
            critic1_loss: c1 / n_policy,
            critic2_loss: c2 / n_policy,
            actor_loss: actor / n_policy,
            mean_q: mean_q / n_policy,
            mean_log_prob: mean_lp / n_policy,
        })
    }
}
