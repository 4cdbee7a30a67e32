//! Cursor manipulator embedding a board game in continuous space.
//!
//! The agent controls a point in the unit square with bounded displacements
//! and a trigger channel. When the trigger fires, the board move addressed by
//! the cursor position executes: for LightsOut the push of the grid cell
//! under the cursor, for TileSwap the swap whose region contains the cursor.
//! Swap regions are open L1 balls (rhombi) centred on the midpoint of each
//! adjacent field pair's shared edge; at the default radius of half a field
//! edge their vertices sit on the two field centres, so neighbouring regions
//! touch only at those single points and regions stay pairwise disjoint.
//!
//! Skill episodes run until the board changes or a step limit is reached.

use crate::boards::{Board, GameMove, GameSpec, SymbolicObs};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvConfig {
    pub game: GameSpec,
    /// Scale of one displacement step; action deltas are clamped to [-1, 1]
    /// before scaling.
    pub max_displacement: f64,
    /// Maximum environment steps per skill episode.
    pub step_limit: u32,
    /// The trigger fires when the third action component exceeds this.
    pub trigger_threshold: f64,
    /// Half-diagonal of the rhombic swap regions (TileSwap only).
    pub swap_radius: f64,
}

impl EnvConfig {
    pub fn new(game: GameSpec) -> Self {
        EnvConfig {
            game,
            max_displacement: 0.2,
            step_limit: 10,
            trigger_threshold: 0.0,
            swap_radius: 1.0 / 6.0,
        }
    }

    /// Dimension of the flat observation: cursor position plus board bits.
    pub fn obs_dim(&self) -> usize {
        2 + self.game.symbolic_dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CursorState {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvState {
    pub cursor: CursorState,
    pub board: Board,
}

impl EnvState {
    /// Flat observation `[x, y, board bits...]`.
    pub fn observation(&self, game: &GameSpec) -> Vec<f64> {
        let mut obs = Vec::with_capacity(2 + game.symbolic_dim());
        obs.push(self.cursor.x);
        obs.push(self.cursor.y);
        obs.extend(game.to_symbolic(&self.board).as_f64());
        obs
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Action {
    pub dx: f64,
    pub dy: f64,
    pub trigger: f64,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub next_state: EnvState,
    pub symbolic_changed: bool,
    pub triggered_move: Option<GameMove>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationCause {
    SymbolicChange,
    StepLimit,
}

/// One skill episode: states `s_0..s_T`, actions `a_0..a_{T-1}`, and the
/// symbolic endpoints used for skill-model training.
#[derive(Clone, Debug)]
pub struct EpisodeRecord {
    pub id: u64,
    pub skill: usize,
    pub states: Vec<EnvState>,
    pub actions: Vec<Action>,
    pub z0: SymbolicObs,
    pub z_end: SymbolicObs,
    pub cause: TerminationCause,
    /// Move executed on the terminating step, if the board changed.
    pub final_move: Option<GameMove>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn symbolic_changed(&self) -> bool {
        self.cause == TerminationCause::SymbolicChange
    }
}

/// Anything that maps (observation, skill) to an action.
pub trait SkillPolicy {
    fn act(&self, obs: &[f64], skill: usize, rng: &mut ChaCha8Rng) -> Action;
}

/// Cursor placed uniformly in the unit square over the given board.
pub fn reset(board: Board, rng: &mut ChaCha8Rng) -> EnvState {
    let x = rng.random::<f64>();
    let y = rng.random::<f64>();
    EnvState {
        cursor: CursorState { x, y },
        board,
    }
}

/// Midpoint of the shared edge between the two fields of a swap, in cursor
/// coordinates (x right, y down).
pub fn swap_midpoint(mv: GameMove) -> (f64, f64) {
    let GameMove::Swap { a, b } = mv else {
        panic!("not a swap move");
    };
    let center = |f: u8| {
        let (row, col) = (f / 3, f % 3);
        ((col as f64 + 0.5) / 3.0, (row as f64 + 0.5) / 3.0)
    };
    let (ax, ay) = center(a);
    let (bx, by) = center(b);
    ((ax + bx) / 2.0, (ay + by) / 2.0)
}

/// Cursor target whose trigger region performs `mv`: the cell center for a
/// push, the shared-edge midpoint for a swap.
pub fn move_target(game: GameSpec, mv: GameMove) -> (f64, f64) {
    match (game, mv) {
        (GameSpec::LightsOut { n }, GameMove::Push { row, col }) => {
            let n = n as f64;
            ((col as f64 + 0.5) / n, (row as f64 + 0.5) / n)
        }
        (GameSpec::TileSwap, mv) => swap_midpoint(mv),
        _ => panic!("move does not belong to this game"),
    }
}

/// Scripted expert: skill `k` steers to the trigger region of the game's
/// `k`-th canonical move (modulo the move count) and fires on arrival.
pub struct ScriptedMovePolicy {
    pub game: GameSpec,
}

impl SkillPolicy for ScriptedMovePolicy {
    fn act(&self, obs: &[f64], skill: usize, _rng: &mut ChaCha8Rng) -> Action {
        let moves = self.game.enumerate_moves();
        let mv = moves[skill % moves.len()];
        let (tx, ty) = move_target(self.game, mv);
        let (dx, dy) = (tx - obs[0], ty - obs[1]);
        if dx.abs() <= 0.2 && dy.abs() <= 0.2 {
            Action {
                dx: dx / 0.2,
                dy: dy / 0.2,
                trigger: 1.0,
            }
        } else {
            Action {
                dx: (dx / 0.2).clamp(-1.0, 1.0),
                dy: (dy / 0.2).clamp(-1.0, 1.0),
                trigger: -1.0,
            }
        }
    }
}

fn move_at_cursor(cfg: &EnvConfig, cursor: CursorState) -> Option<GameMove> {
    match cfg.game {
        GameSpec::LightsOut { n } => {
            let cell = |v: f64| ((v * n as f64) as usize).min(n - 1);
            Some(GameMove::Push {
                row: cell(cursor.y) as u8,
                col: cell(cursor.x) as u8,
            })
        }
        GameSpec::TileSwap => cfg.game.enumerate_moves().into_iter().find(|&mv| {
            let (mx, my) = swap_midpoint(mv);
            (cursor.x - mx).abs() + (cursor.y - my).abs() < cfg.swap_radius
        }),
    }
}

/// Applies one action: clamped displacement, then the trigger evaluated at
/// the new cursor position.
pub fn step(cfg: &EnvConfig, state: &EnvState, action: &Action) -> StepResult {
    let clamp01 = |v: f64| v.clamp(0.0, 1.0);
    let cursor = CursorState {
        x: clamp01(state.cursor.x + cfg.max_displacement * action.dx.clamp(-1.0, 1.0)),
        y: clamp01(state.cursor.y + cfg.max_displacement * action.dy.clamp(-1.0, 1.0)),
    };
    let mut board = state.board;
    let mut triggered_move = None;
    if action.trigger > cfg.trigger_threshold {
        if let Some(mv) = move_at_cursor(cfg, cursor) {
            board = cfg
                .game
                .apply_move(&board, mv)
                .expect("cursor addresses a legal move");
            triggered_move = Some(mv);
        }
    }
    StepResult {
        next_state: EnvState { cursor, board },
        symbolic_changed: triggered_move.is_some(),
        triggered_move,
    }
}

/// Rolls out one skill episode from `state`, ending on the first symbolic
/// change or after `step_limit` steps.
pub fn apply_skill<P: SkillPolicy + ?Sized>(
    cfg: &EnvConfig,
    policy: &P,
    state: EnvState,
    skill: usize,
    rng: &mut ChaCha8Rng,
) -> EpisodeRecord {
    let z0 = cfg.game.to_symbolic(&state.board);
    let mut states = vec![state];
    let mut actions = Vec::new();
    let mut cause = TerminationCause::StepLimit;
    let mut final_move = None;
    for _ in 0..cfg.step_limit {
        let current = *states.last().unwrap();
        let obs = current.observation(&cfg.game);
        let action = policy.act(&obs, skill, rng);
        let result = step(cfg, &current, &action);
        states.push(result.next_state);
        actions.push(action);
        if result.symbolic_changed {
            cause = TerminationCause::SymbolicChange;
            final_move = result.triggered_move;
            break;
        }
    }
    let z_end = cfg.game.to_symbolic(&states.last().unwrap().board);
    EpisodeRecord {
        id: 0,
        skill,
        states,
        actions,
        z0,
        z_end,
        cause,
        final_move,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boards::SplitLabel;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn lights(n: usize) -> EnvConfig {
        EnvConfig::new(GameSpec::lights_out(n).unwrap())
    }

    fn tiles() -> EnvConfig {
        EnvConfig::new(GameSpec::TileSwap)
    }

    fn at(cfg: &EnvConfig, x: f64, y: f64) -> EnvState {
        EnvState {
            cursor: CursorState { x, y },
            board: cfg.game.goal_board(),
        }
    }

    struct Constant(Action);
    impl SkillPolicy for Constant {
        fn act(&self, _obs: &[f64], _skill: usize, _rng: &mut ChaCha8Rng) -> Action {
            self.0
        }
    }

    #[test]
    fn displacement_is_scaled_and_clamped() {
        let cfg = lights(3);
        let state = at(&cfg, 0.5, 0.5);
        let r = step(&cfg, &state, &Action { dx: 10.0, dy: -10.0, trigger: -1.0 });
        assert_relative_eq!(r.next_state.cursor.x, 0.7);
        assert_relative_eq!(r.next_state.cursor.y, 0.3);

        let state = at(&cfg, 0.05, 0.95);
        let r = step(&cfg, &state, &Action { dx: -1.0, dy: 1.0, trigger: -1.0 });
        assert_relative_eq!(r.next_state.cursor.x, 0.0);
        assert_relative_eq!(r.next_state.cursor.y, 1.0);
    }

    #[test]
    fn trigger_uses_post_move_position() {
        let cfg = lights(3);
        // Start in cell (0,0); the move carries the cursor into column 1.
        let state = at(&cfg, 0.25, 0.1);
        let r = step(&cfg, &state, &Action { dx: 1.0, dy: 0.0, trigger: 1.0 });
        assert_eq!(r.triggered_move, Some(GameMove::Push { row: 0, col: 1 }));
        assert!(r.symbolic_changed);
    }

    #[test]
    fn boundary_cursor_maps_to_last_cell() {
        let cfg = lights(3);
        let state = at(&cfg, 1.0, 1.0);
        let r = step(&cfg, &state, &Action { dx: 0.0, dy: 0.0, trigger: 1.0 });
        assert_eq!(r.triggered_move, Some(GameMove::Push { row: 2, col: 2 }));
    }

    #[test]
    fn trigger_threshold_is_strict() {
        let cfg = lights(3);
        let state = at(&cfg, 0.5, 0.5);
        let r = step(&cfg, &state, &Action { dx: 0.0, dy: 0.0, trigger: 0.0 });
        assert_eq!(r.triggered_move, None);
        assert!(!r.symbolic_changed);
        let r = step(&cfg, &state, &Action { dx: 0.0, dy: 0.0, trigger: 1e-9 });
        assert!(r.symbolic_changed);
    }

    #[test]
    fn swap_regions_address_the_right_move() {
        let cfg = tiles();
        // Midpoint of the edge between fields 0 and 1.
        let state = at(&cfg, 1.0 / 3.0, 1.0 / 6.0);
        let r = step(&cfg, &state, &Action { dx: 0.0, dy: 0.0, trigger: 1.0 });
        assert_eq!(r.triggered_move, Some(GameMove::Swap { a: 0, b: 1 }));

        // Just inside the rhombus boundary.
        let state = at(&cfg, 1.0 / 3.0 + cfg.swap_radius - 1e-9, 1.0 / 6.0);
        let r = step(&cfg, &state, &Action { dx: 0.0, dy: 0.0, trigger: 1.0 });
        assert_eq!(r.triggered_move, Some(GameMove::Swap { a: 0, b: 1 }));

        // The boundary itself is outside (regions are open).
        let state = at(&cfg, 1.0 / 3.0 + cfg.swap_radius, 1.0 / 6.0);
        let r = step(&cfg, &state, &Action { dx: 0.0, dy: 0.0, trigger: 1.0 });
        assert_eq!(r.triggered_move, None);

        // A field centre belongs to no region even at the default radius,
        // where region vertices land exactly on field centres.
        let state = at(&cfg, 0.5, 0.5);
        let r = step(&cfg, &state, &Action { dx: 0.0, dy: 0.0, trigger: 1.0 });
        assert_eq!(r.triggered_move, None);
    }

    #[test]
    fn swap_regions_are_disjoint() {
        let cfg = tiles();
        let moves = cfg.game.enumerate_moves();
        // Every pair of region centres is at least one full L1 diameter apart,
        // so the open regions cannot overlap.
        for (i, &a) in moves.iter().enumerate() {
            for &b in &moves[i + 1..] {
                let (ax, ay) = swap_midpoint(a);
                let (bx, by) = swap_midpoint(b);
                let d = (ax - bx).abs() + (ay - by).abs();
                assert!(d >= 2.0 * cfg.swap_radius - 1e-12, "{a:?} vs {b:?}: {d}");
            }
        }
        // Dense grid scan: away from region boundaries (where neighbouring
        // rhombi touch and float rounding may tip a point either way) no
        // cursor position addresses two moves.
        for ix in 0..200 {
            for iy in 0..200 {
                let (x, y) = (ix as f64 / 199.0, iy as f64 / 199.0);
                let hits = moves
                    .iter()
                    .filter(|&&mv| {
                        let (mx, my) = swap_midpoint(mv);
                        (x - mx).abs() + (y - my).abs() < cfg.swap_radius - 1e-9
                    })
                    .count();
                assert!(hits <= 1, "cursor ({x}, {y}) hits {hits} regions");
            }
        }
    }

    #[test]
    fn episode_ends_on_symbolic_change() {
        let cfg = lights(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let state = at(&cfg, 0.5, 0.5);
        let ep = apply_skill(
            &cfg,
            &Constant(Action { dx: 0.0, dy: 0.0, trigger: 1.0 }),
            state,
            0,
            &mut rng,
        );
        assert_eq!(ep.len(), 1);
        assert_eq!(ep.cause, TerminationCause::SymbolicChange);
        assert_eq!(ep.final_move, Some(GameMove::Push { row: 1, col: 1 }));
        assert_ne!(ep.z0, ep.z_end);
        assert!(ep.symbolic_changed());
    }

    #[test]
    fn episode_hits_step_limit_without_trigger() {
        let cfg = lights(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let state = at(&cfg, 0.5, 0.5);
        let ep = apply_skill(
            &cfg,
            &Constant(Action { dx: 0.3, dy: -0.2, trigger: -1.0 }),
            state,
            4,
            &mut rng,
        );
        assert_eq!(ep.len(), 10);
        assert_eq!(ep.states.len(), 11);
        assert_eq!(ep.cause, TerminationCause::StepLimit);
        assert_eq!(ep.final_move, None);
        assert_eq!(ep.z0, ep.z_end);
        assert_eq!(ep.skill, 4);
    }

    #[test]
    fn reset_is_uniform_over_the_square() {
        let cfg = tiles();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let board = cfg.game.goal_board();
        let n = 10_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let s = reset(board, &mut rng);
            assert!((0.0..1.0).contains(&s.cursor.x));
            assert!((0.0..1.0).contains(&s.cursor.y));
            sx += s.cursor.x;
            sy += s.cursor.y;
        }
        assert!((sx / n as f64 - 0.5).abs() < 0.02);
        assert!((sy / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn observation_layout_is_cursor_then_bits() {
        let cfg = lights(3);
        let g = cfg.game;
        let board = g
            .apply_move(&g.goal_board(), GameMove::Push { row: 0, col: 0 })
            .unwrap();
        let state = EnvState {
            cursor: CursorState { x: 0.25, y: 0.75 },
            board,
        };
        let obs = state.observation(&g);
        assert_eq!(obs.len(), cfg.obs_dim());
        assert_eq!(&obs[..2], &[0.25, 0.75]);
        assert_eq!(&obs[2..], g.to_symbolic(&board).as_f64().as_slice());
    }

    #[test]
    fn skill_episodes_from_catalog_boards_terminate() {
        let cfg = tiles();
        let catalog = crate::boards::BoardCatalog::build(cfg.game, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let board = catalog.sample(2, Some(SplitLabel::Train), &mut rng).unwrap();
            let state = reset(board, &mut rng);
            let ep = apply_skill(
                &cfg,
                &Constant(Action { dx: 0.05, dy: 0.05, trigger: 0.5 }),
                state,
                1,
                &mut rng,
            );
            assert!(ep.len() <= cfg.step_limit as usize);
            assert_eq!(ep.states.len(), ep.actions.len() + 1);
        }
    }
}
