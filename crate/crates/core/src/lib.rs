//! Unsupervised skill discovery on physically-embedded board games, with a
//! learned symbolic forward model and breadth-first planning on top of it.

pub mod assignment;
pub mod baseline;
pub mod boards;
pub mod checkpoint;
pub mod cursor_env;
pub mod eval;
pub mod nn;
pub mod planner;
pub mod relabel;
pub mod reward;
pub mod sac;
pub mod skill_model;
pub mod trainer;

pub use assignment::{assignment_cost, solve_assignment};
pub use baseline::{
    eval_baseline, run_flat_task, BaselineConfig, BaselineEpochMetrics, BaselineTrainer,
    FlatAgentPolicy, FlatPolicy, FlatReplay,
};
pub use boards::{
    Board, BoardCatalog, BoardError, GameMove, GameSpec, LightsBoard, SplitLabel, SymbolicObs,
    TileBoard,
};
pub use checkpoint::{
    load, save_baseline, save_trainer, CheckpointError, SavedPayload, SavedRun,
};
pub use cursor_env::{
    apply_skill, Action, CursorState, EnvConfig, EnvState, EpisodeRecord, ScriptedMovePolicy,
    SkillPolicy, StepResult, TerminationCause,
};
pub use eval::{count_skills, eval_success, DepthStats, EvalReport, SkillCountReport, TaskTrace};
pub use planner::{
    bfs_plan, solve_task, CachedSuccessors, OracleSuccessors, PlanLimits, PlanResult,
    SuccessorFn, TaskOutcome, TaskReport,
};
pub use reward::{compute_reward, RewardConfig};
pub use sac::{ActMode, AgentPolicy, SacAgent, SacConfig, TransitionBatch};
pub use skill_model::{ForwardModel, SkillDiscriminator, SkillModel};
pub use trainer::{EpochMetrics, TrainConfig, TrainError, Trainer};
