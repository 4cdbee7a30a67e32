//! Evaluation harnesses: distinct-move counting per initial state, and
//! planned task execution over held-out boards.

use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::time::Instant;

use crate::boards::{BoardCatalog, BoardError, SplitLabel};
use crate::cursor_env::{apply_skill, reset, EnvConfig, SkillPolicy};
use crate::planner::{solve_task, PlanLimits, SuccessorFn, TaskOutcome};

/// How many distinct game moves the skill set can express.
#[derive(Clone, Debug)]
pub struct SkillCountReport {
    /// Distinct triggered moves per initial state.
    pub per_state: Vec<usize>,
    pub mean_unique_moves: f64,
}

/// Run every skill from each of `num_states` fresh initial states and count
/// the distinct game moves triggered. Rollouts that trigger no move add
/// nothing. The same initial state (board and cursor) is restored before each
/// skill.
pub fn count_skills<P: SkillPolicy + ?Sized>(
    env: &EnvConfig,
    policy: &P,
    catalog: &BoardCatalog,
    num_skills: usize,
    num_states: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SkillCountReport, BoardError> {
    use rand::Rng;
    let depths = catalog.depths_with_boards(None);
    if depths.is_empty() {
        return Err(BoardError::EmptySplit { depth: 1 });
    }
    let mut per_state = Vec::with_capacity(num_states);
    for _ in 0..num_states {
        let depth = depths[rng.random_range(0..depths.len())];
        let board = catalog.sample(depth, None, rng)?;
        let state = reset(board, rng);
        let mut moves = HashSet::new();
        for skill in 0..num_skills {
            let episode = apply_skill(env, policy, state, skill, rng);
            if let Some(mv) = episode.final_move {
                moves.insert(mv);
            }
        }
        per_state.push(moves.len());
    }
    let mean = per_state.iter().sum::<usize>() as f64 / num_states.max(1) as f64;
    Ok(SkillCountReport {
        per_state,
        mean_unique_moves: mean,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DepthStats {
    pub depth: u32,
    /// Split the task boards were drawn from.
    pub split: SplitLabel,
    pub attempts: usize,
    pub successes: usize,
}

impl DepthStats {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.attempts.max(1) as f64
    }
}

#[derive(Clone, Debug)]
pub struct TaskTrace {
    pub depth: u32,
    pub board: String,
    pub outcome: TaskOutcome,
    pub first_plan_len: Option<usize>,
    pub replans: u32,
    pub skills_executed: u32,
    pub env_steps: u32,
    pub wall_secs: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WallTimeStats {
    pub total_secs: f64,
    pub max_secs: f64,
}

/// Planned-execution evaluation over held-out tasks.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub per_depth: Vec<DepthStats>,
    pub traces: Vec<TaskTrace>,
    pub wall: WallTimeStats,
    /// Filled in when a skill count runs alongside the task evaluation.
    pub mean_unique_moves: Option<f64>,
}

impl EvalReport {
    pub fn overall_rate(&self) -> f64 {
        let attempts: usize = self.per_depth.iter().map(|d| d.attempts).sum();
        let successes: usize = self.per_depth.iter().map(|d| d.successes).sum();
        successes as f64 / attempts.max(1) as f64
    }
}

/// Sample `tasks_per_depth` boards per depth from the test split (falling
/// back to validation where a depth's test pool is empty), then plan and
/// execute each task. Success means the goal symbolic state was reached;
/// planner timeouts count as failures.
#[allow(clippy::too_many_arguments)]
pub fn eval_success<P: SkillPolicy + ?Sized>(
    env: &EnvConfig,
    policy: &P,
    succ: &impl SuccessorFn,
    catalog: &BoardCatalog,
    tasks_per_depth: usize,
    limits: &PlanLimits,
    replan: bool,
    rng: &mut ChaCha8Rng,
) -> Result<EvalReport, BoardError> {
    let game = catalog.game();
    let goal = game.goal_symbolic();
    let replan_budget = if replan { 10 } else { 0 };
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
            let report = solve_task(
                env,
                policy,
                succ,
                state,
                &goal,
                limits,
                replan_budget,
                rng,
            );
            let wall_secs = started.elapsed().as_secs_f64();
            wall.total_secs += wall_secs;
            wall.max_secs = wall.max_secs.max(wall_secs);
            stats.attempts += 1;
            stats.successes += usize::from(report.outcome == TaskOutcome::Success);
            traces.push(TaskTrace {
                depth,
                board: game.serialize_board(&board),
                outcome: report.outcome,
                first_plan_len: report.first_plan_len,
                replans: report.replans,
                skills_executed: report.skills_executed,
                env_steps: report.env_steps,
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
