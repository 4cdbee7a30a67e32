//! Breadth-first planning in symbolic space, and closed-loop skill execution
//! with replanning.
//!
//! The learned forward model is determinized by taking each skill's most
//! likely successor, so a board state plus a skill yields exactly one
//! predicted next state. Plans are shortest skill sequences under that
//! determinization; execution runs each planned skill in the environment and
//! replans from the actual state whenever it disagrees with the prediction.

use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::boards::{GameSpec, SymbolicObs};
use crate::cursor_env::{apply_skill, EnvConfig, EnvState, SkillPolicy, TerminationCause};
use crate::skill_model::ForwardModel;

/// Deterministic symbolic transition function: one successor per skill.
pub trait SuccessorFn {
    fn num_skills(&self) -> usize;
    /// Successors for all skills, indexed by skill.
    fn successors(&self, z: &SymbolicObs) -> Vec<SymbolicObs>;
}

impl SuccessorFn for ForwardModel {
    fn num_skills(&self) -> usize {
        ForwardModel::num_skills(self)
    }

    fn successors(&self, z: &SymbolicObs) -> Vec<SymbolicObs> {
        self.successors_all(z)
    }
}

/// Ground-truth transitions: skill `k` performs the game's `k`-th canonical
/// move. Illegal moves leave the state unchanged.
pub struct OracleSuccessors {
    game: GameSpec,
}

impl OracleSuccessors {
    pub fn new(game: GameSpec) -> Self {
        OracleSuccessors { game }
    }
}

impl SuccessorFn for OracleSuccessors {
    fn num_skills(&self) -> usize {
        self.game.num_moves()
    }

    fn successors(&self, z: &SymbolicObs) -> Vec<SymbolicObs> {
        let board = self
            .game
            .board_from_symbolic(z)
            .expect("planner states stay decodable");
        self.game
            .enumerate_moves()
            .into_iter()
            .map(|mv| match self.game.apply_move(&board, mv) {
                Ok(next) => self.game.to_symbolic(&next),
                Err(_) => z.clone(),
            })
            .collect()
    }
}

/// Memoizes successor expansions; planning revisits states heavily across
/// tasks on the same model.
pub struct CachedSuccessors<'a, S: SuccessorFn> {
    inner: &'a S,
    dim: usize,
    cache: RefCell<HashMap<u128, Vec<u128>>>,
}

impl<'a, S: SuccessorFn> CachedSuccessors<'a, S> {
    pub fn new(inner: &'a S, dim: usize) -> Self {
        CachedSuccessors {
            inner,
            dim,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.borrow().len()
    }
}

impl<S: SuccessorFn> SuccessorFn for CachedSuccessors<'_, S> {
    fn num_skills(&self) -> usize {
        self.inner.num_skills()
    }

    fn successors(&self, z: &SymbolicObs) -> Vec<SymbolicObs> {
        let key = z.key();
        if let Some(keys) = self.cache.borrow().get(&key) {
            return keys
                .iter()
                .map(|&k| SymbolicObs::from_key(k, self.dim))
                .collect();
        }
        let succ = self.inner.successors(z);
        self.cache
            .borrow_mut()
            .insert(key, succ.iter().map(|s| s.key()).collect());
        succ
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PlanLimits {
    pub wall_time: Duration,
    pub max_depth: u32,
}

impl Default for PlanLimits {
    fn default() -> Self {
        PlanLimits {
            wall_time: Duration::from_secs(60),
            max_depth: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanResult {
    /// Skill sequence reaching the goal under the determinized model.
    Found(Vec<usize>),
    /// Search space exhausted within the depth limit.
    NoPlanFound,
    WallTimeExceeded,
}

/// Shortest skill sequence from `z0` to `goal` by breadth-first search over
/// determinized successors, expanding skills in ascending order.
pub fn bfs_plan(
    succ: &impl SuccessorFn,
    z0: &SymbolicObs,
    goal: &SymbolicObs,
    limits: &PlanLimits,
) -> PlanResult {
    if z0 == goal {
        return PlanResult::Found(Vec::new());
    }
    let start = Instant::now();
    let goal_key = goal.key();
    // parent state and the skill that reached the key
    let mut visited: HashMap<u128, (u128, usize)> = HashMap::new();
    visited.insert(z0.key(), (z0.key(), usize::MAX));
    let mut frontier = vec![z0.clone()];
    for _ in 0..limits.max_depth {
        let mut next_frontier = Vec::new();
        for state in &frontier {
            if start.elapsed() > limits.wall_time {
                return PlanResult::WallTimeExceeded;
            }
            let state_key = state.key();
            for (skill, child) in succ.successors(state).into_iter().enumerate() {
                let child_key = child.key();
                if visited.contains_key(&child_key) {
                    continue;
                }
                visited.insert(child_key, (state_key, skill));
                if child_key == goal_key {
                    let mut plan = Vec::new();
                    let mut cursor = child_key;
                    while cursor != z0.key() {
                        let (parent, skill) = visited[&cursor];
                        plan.push(skill);
                        cursor = parent;
                    }
                    plan.reverse();
                    return PlanResult::Found(plan);
                }
                next_frontier.push(child);
            }
        }
        if next_frontier.is_empty() {
            return PlanResult::NoPlanFound;
        }
        frontier = next_frontier;
    }
    PlanResult::NoPlanFound
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskOutcome {
    Success,
    NoPlanFound,
    WallTimeExceeded,
    /// Plans kept failing in the environment until the replan budget ran out.
    ExecutionFailed,
}

#[derive(Clone, Debug)]
pub struct TaskReport {
    pub outcome: TaskOutcome,
    /// Length of the first plan, when one was found.
    pub first_plan_len: Option<usize>,
    pub replans: u32,
    pub skills_executed: u32,
    pub env_steps: u32,
}

/// Plan and execute until the board's symbolic state matches `goal`.
///
/// Each planned skill runs in the environment; if its outcome differs from
/// the model's prediction, the remaining plan is dropped and a new plan is
/// made from the actual state. `replan_budget` counts plans after the first;
/// 0 means open-loop execution of the initial plan.
#[allow(clippy::too_many_arguments)]
pub fn solve_task<P: SkillPolicy + ?Sized>(
    env: &EnvConfig,
    policy: &P,
    succ: &impl SuccessorFn,
    state: EnvState,
    goal: &SymbolicObs,
    limits: &PlanLimits,
    replan_budget: u32,
    rng: &mut ChaCha8Rng,
) -> TaskReport {
    let mut report = TaskReport {
        outcome: TaskOutcome::ExecutionFailed,
        first_plan_len: None,
        replans: 0,
        skills_executed: 0,
        env_steps: 0,
    };
    let mut state = state;
    let mut plans_left = replan_budget + 1;
    'replan: while plans_left > 0 {
        plans_left -= 1;
        let z = env.game.to_symbolic(&state.board);
        let plan = match bfs_plan(succ, &z, goal, limits) {
            PlanResult::Found(plan) => plan,
            PlanResult::NoPlanFound => {
                report.outcome = TaskOutcome::NoPlanFound;
                return report;
            }
            PlanResult::WallTimeExceeded => {
                report.outcome = TaskOutcome::WallTimeExceeded;
                return report;
            }
        };
        if report.first_plan_len.is_none() {
            report.first_plan_len = Some(plan.len());
        } else {
            report.replans += 1;
        }
        let mut z = z;
        for skill in plan {
            let predicted = succ.successors(&z)[skill].clone();
            let episode = apply_skill(env, policy, state, skill, rng);
            report.skills_executed += 1;
            report.env_steps += episode.len() as u32;
            state = *episode.states.last().unwrap();
            // The cursor stays where the skill left it; only the board resets
            // the planning state.
            let reached = episode.z_end.clone();
            if reached == *goal {
                report.outcome = TaskOutcome::Success;
                return report;
            }
            if episode.cause == TerminationCause::StepLimit || reached != predicted {
                continue 'replan;
            }
            z = reached;
        }
        // Plan exhausted without reaching the goal under a model that
        // predicted it would; replan from wherever we are.
    }
    report
}
