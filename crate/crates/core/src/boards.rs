//! Board games used as the symbolic layer: LightsOut on an n x n grid and
//! TileSwap on a fixed 3 x 3 grid of fields.
//!
//! Encodings:
//! - `LightsBoard` packs cell states row-major into a `u32` mask
//!   (bit `row * n + col`, 1 = on). The goal board is all-off.
//! - `TileBoard` stores `chips[field] = chip` for the 9 fields row-major.
//!   The goal board is `chips[f] = f` for every field.
//!
//! A board's symbolic observation is a flat 0/1 vector: the cell states for
//! LightsOut (D = n^2), the field-chip incidence matrix row-major for
//! TileSwap (D = 81, bit `field * 9 + chip`).
//!
//! Dataset splits hash the comma-separated board serialization with CRC-32
//! and assign train/val/test by the remainder mod 3.

use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BoardError {
    #[error("board size {0} unsupported, expected 1..=5")]
    UnsupportedSize(usize),
    #[error("move does not apply to this game")]
    WrongGame,
    #[error("push ({row}, {col}) outside the {n}x{n} grid")]
    PushOutOfBounds { row: u8, col: u8, n: u8 },
    #[error("fields {a} and {b} do not share an edge")]
    NotAdjacent { a: u8, b: u8 },
    #[error("board cannot reach the goal configuration")]
    Unsolvable,
    #[error("no depth-{depth} boards in the requested split")]
    EmptySplit { depth: u32 },
    #[error("depth {depth} outside the enumerated range 1..={max}")]
    DepthOutOfRange { depth: u32, max: u32 },
    #[error("symbolic observation does not describe a valid board")]
    InvalidSymbolic,
    #[error("cannot parse board from {0:?}")]
    Parse(String),
}

/// Which game is being played. LightsOut carries its grid size n (1..=5);
/// TileSwap is fixed at 3 x 3 fields with 9 chips.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameSpec {
    LightsOut { n: usize },
    TileSwap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LightsBoard {
    n: u8,
    mask: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TileBoard {
    chips: [u8; 9],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Board {
    Lights(LightsBoard),
    Tiles(TileBoard),
}

/// A game move: toggle a cross of cells, or swap the chips of two
/// edge-adjacent fields (`a < b`, field indices row-major).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameMove {
    Push { row: u8, col: u8 },
    Swap { a: u8, b: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitLabel {
    Train,
    Val,
    Test,
}

impl SplitLabel {
    pub const ALL: [SplitLabel; 3] = [SplitLabel::Train, SplitLabel::Val, SplitLabel::Test];

    pub fn name(self) -> &'static str {
        match self {
            SplitLabel::Train => "train",
            SplitLabel::Val => "val",
            SplitLabel::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<SplitLabel> {
        match s {
            "train" => Some(SplitLabel::Train),
            "val" => Some(SplitLabel::Val),
            "test" => Some(SplitLabel::Test),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            SplitLabel::Train => 0,
            SplitLabel::Val => 1,
            SplitLabel::Test => 2,
        }
    }
}

/// Binary observation of a board, at most 128 bits so states pack into a
/// `u128` key for hashing and visited sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicObs {
    bits: Vec<u8>,
}

impl SymbolicObs {
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(bits.len() <= 128, "symbolic observation too wide");
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        SymbolicObs { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Packs the bits little-endian (bit i of the key = bits[i]).
    pub fn key(&self) -> u128 {
        let mut k = 0u128;
        for (i, &b) in self.bits.iter().enumerate() {
            k |= (b as u128) << i;
        }
        k
    }

    pub fn from_key(key: u128, len: usize) -> Self {
        let bits = (0..len).map(|i| ((key >> i) & 1) as u8).collect();
        SymbolicObs { bits }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| b as f64).collect()
    }

    pub fn hamming(&self, other: &SymbolicObs) -> usize {
        (self.key() ^ other.key()).count_ones() as usize
    }
}

impl LightsBoard {
    pub fn new(n: usize, mask: u32) -> Result<Self, BoardError> {
        if n == 0 || n > 5 {
            return Err(BoardError::UnsupportedSize(n));
        }
        debug_assert!(mask < (1u32 << (n * n)) || n * n == 32);
        Ok(LightsBoard { n: n as u8, mask })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn cell(&self, row: usize, col: usize) -> u8 {
        ((self.mask >> (row * self.n as usize + col)) & 1) as u8
    }
}

impl TileBoard {
    pub fn new(chips: [u8; 9]) -> Result<Self, BoardError> {
        let mut seen = [false; 9];
        for &c in &chips {
            if c >= 9 || seen[c as usize] {
                return Err(BoardError::InvalidSymbolic);
            }
            seen[c as usize] = true;
        }
        Ok(TileBoard { chips })
    }

    pub fn chips(&self) -> &[u8; 9] {
        &self.chips
    }

    /// Lehmer rank of the permutation, a bijection onto 0..9!.
    pub fn rank(&self) -> usize {
        const FACT: [usize; 9] = [40320, 5040, 720, 120, 24, 6, 2, 1, 1];
        let mut rank = 0;
        for i in 0..9 {
            let smaller_later = (i + 1..9)
                .filter(|&j| self.chips[j] < self.chips[i])
                .count();
            rank += smaller_later * FACT[i];
        }
        rank
    }
}

/// Toggle masks for every push on an n x n grid, row-major.
fn push_masks(n: usize) -> Vec<u32> {
    let mut masks = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let mut m = 1u32 << (r * n + c);
            if r > 0 {
                m |= 1 << ((r - 1) * n + c);
            }
            if r + 1 < n {
                m |= 1 << ((r + 1) * n + c);
            }
            if c > 0 {
                m |= 1 << (r * n + c - 1);
            }
            if c + 1 < n {
                m |= 1 << (r * n + c + 1);
            }
            masks.push(m);
        }
    }
    masks
}

const TILE_GOAL: TileBoard = TileBoard {
    chips: [0, 1, 2, 3, 4, 5, 6, 7, 8],
};

impl GameSpec {
    pub fn lights_out(n: usize) -> Result<Self, BoardError> {
        if n == 0 || n > 5 {
            return Err(BoardError::UnsupportedSize(n));
        }
        Ok(GameSpec::LightsOut { n })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GameSpec::LightsOut { .. } => "lightsout",
            GameSpec::TileSwap => "tileswap",
        }
    }

    /// Width of the symbolic observation.
    pub fn symbolic_dim(&self) -> usize {
        match self {
            GameSpec::LightsOut { n } => n * n,
            GameSpec::TileSwap => 81,
        }
    }

    pub fn num_moves(&self) -> usize {
        match self {
            GameSpec::LightsOut { n } => n * n,
            GameSpec::TileSwap => 12,
        }
    }

    pub fn goal_board(&self) -> Board {
        match self {
            GameSpec::LightsOut { n } => Board::Lights(LightsBoard {
                n: *n as u8,
                mask: 0,
            }),
            GameSpec::TileSwap => Board::Tiles(TILE_GOAL),
        }
    }

    pub fn goal_symbolic(&self) -> SymbolicObs {
        self.to_symbolic(&self.goal_board())
    }

    /// All legal moves in canonical order. This order also defines the
    /// move index used by oracle successor models.
    pub fn enumerate_moves(&self) -> Vec<GameMove> {
        match self {
            GameSpec::LightsOut { n } => {
                let n = *n as u8;
                let mut moves = Vec::with_capacity((n * n) as usize);
                for row in 0..n {
                    for col in 0..n {
                        moves.push(GameMove::Push { row, col });
                    }
                }
                moves
            }
            GameSpec::TileSwap => {
                let mut moves = Vec::with_capacity(12);
                for f in 0..9u8 {
                    if f % 3 < 2 {
                        moves.push(GameMove::Swap { a: f, b: f + 1 });
                    }
                    if f / 3 < 2 {
                        moves.push(GameMove::Swap { a: f, b: f + 3 });
                    }
                }
                moves
            }
        }
    }

    pub fn apply_move(&self, board: &Board, mv: GameMove) -> Result<Board, BoardError> {
        match (self, board, mv) {
            (GameSpec::LightsOut { n }, Board::Lights(b), GameMove::Push { row, col }) => {
                let n = *n;
                debug_assert_eq!(b.n as usize, n);
                if row as usize >= n || col as usize >= n {
                    return Err(BoardError::PushOutOfBounds {
                        row,
                        col,
                        n: n as u8,
                    });
                }
                let idx = row as usize * n + col as usize;
                let mask = b.mask ^ push_masks(n)[idx];
                Ok(Board::Lights(LightsBoard { n: b.n, mask }))
            }
            (GameSpec::TileSwap, Board::Tiles(b), GameMove::Swap { a, b: bb }) => {
                if !swap_adjacent(a, bb) {
                    return Err(BoardError::NotAdjacent { a, b: bb });
                }
                let mut chips = b.chips;
                chips.swap(a as usize, bb as usize);
                Ok(Board::Tiles(TileBoard { chips }))
            }
            _ => Err(BoardError::WrongGame),
        }
    }

    pub fn to_symbolic(&self, board: &Board) -> SymbolicObs {
        match (self, board) {
            (GameSpec::LightsOut { n }, Board::Lights(b)) => {
                let d = n * n;
                let bits = (0..d).map(|i| ((b.mask >> i) & 1) as u8).collect();
                SymbolicObs { bits }
            }
            (GameSpec::TileSwap, Board::Tiles(b)) => {
                let mut bits = vec![0u8; 81];
                for (field, &chip) in b.chips.iter().enumerate() {
                    bits[field * 9 + chip as usize] = 1;
                }
                SymbolicObs { bits }
            }
            _ => panic!("board does not belong to this game"),
        }
    }

    pub fn board_from_symbolic(&self, obs: &SymbolicObs) -> Result<Board, BoardError> {
        if obs.len() != self.symbolic_dim() {
            return Err(BoardError::InvalidSymbolic);
        }
        match self {
            GameSpec::LightsOut { n } => {
                let mut mask = 0u32;
                for (i, &b) in obs.bits.iter().enumerate() {
                    mask |= (b as u32) << i;
                }
                Ok(Board::Lights(LightsBoard {
                    n: *n as u8,
                    mask,
                }))
            }
            GameSpec::TileSwap => {
                let mut chips = [u8::MAX; 9];
                for field in 0..9 {
                    for chip in 0..9 {
                        if obs.bits[field * 9 + chip] == 1 {
                            if chips[field] != u8::MAX {
                                return Err(BoardError::InvalidSymbolic);
                            }
                            chips[field] = chip as u8;
                        }
                    }
                    if chips[field] == u8::MAX {
                        return Err(BoardError::InvalidSymbolic);
                    }
                }
                Board::Tiles(TileBoard::new(chips)?).pipe_ok()
            }
        }
    }

    /// Comma-separated integer serialization, also the split hash input.
    pub fn serialize_board(&self, board: &Board) -> String {
        match (self, board) {
            (GameSpec::LightsOut { n }, Board::Lights(b)) => {
                let d = n * n;
                let cells: Vec<String> =
                    (0..d).map(|i| ((b.mask >> i) & 1).to_string()).collect();
                cells.join(",")
            }
            (GameSpec::TileSwap, Board::Tiles(b)) => {
                let chips: Vec<String> = b.chips.iter().map(|c| c.to_string()).collect();
                chips.join(",")
            }
            _ => panic!("board does not belong to this game"),
        }
    }

    pub fn parse_board(&self, s: &str) -> Result<Board, BoardError> {
        let parse_err = || BoardError::Parse(s.to_string());
        let values: Result<Vec<u8>, BoardError> = s
            .split(',')
            .map(|t| t.trim().parse::<u8>().map_err(|_| parse_err()))
            .collect();
        let values = values?;
        match self {
            GameSpec::LightsOut { n } => {
                let d = n * n;
                if values.len() != d || values.iter().any(|&v| v > 1) {
                    return Err(parse_err());
                }
                let mut mask = 0u32;
                for (i, &v) in values.iter().enumerate() {
                    mask |= (v as u32) << i;
                }
                Ok(Board::Lights(LightsBoard {
                    n: *n as u8,
                    mask,
                }))
            }
            GameSpec::TileSwap => {
                if values.len() != 9 {
                    return Err(parse_err());
                }
                let mut chips = [0u8; 9];
                chips.copy_from_slice(&values);
                TileBoard::new(chips)
                    .map(Board::Tiles)
                    .map_err(|_| parse_err())
            }
        }
    }

    /// Deterministic dataset split: CRC-32 of the serialized board mod 3
    /// (0 train, 1 val, 2 test).
    pub fn split_of(&self, board: &Board) -> SplitLabel {
        let s = self.serialize_board(board);
        match crc32fast::hash(s.as_bytes()) % 3 {
            0 => SplitLabel::Train,
            1 => SplitLabel::Val,
            _ => SplitLabel::Test,
        }
    }

    /// Minimum number of moves to reach the goal, by breadth-first search
    /// from the goal board. `Err(Unsolvable)` when no move sequence exists.
    pub fn solution_depth(&self, board: &Board) -> Result<u32, BoardError> {
        match (self, board) {
            (GameSpec::LightsOut { n }, Board::Lights(b)) => {
                let n = *n;
                debug_assert_eq!(b.n as usize, n);
                let target = b.mask;
                if target == 0 {
                    return Ok(0);
                }
                let masks = push_masks(n);
                let bits = n * n;
                let mut visited = vec![0u64; ((1usize << bits) + 63) / 64];
                let mut frontier = vec![0u32];
                visited[0] |= 1;
                let mut depth = 0u32;
                while !frontier.is_empty() {
                    depth += 1;
                    let mut next = Vec::with_capacity(frontier.len() * bits);
                    for &state in &frontier {
                        for &pm in &masks {
                            let succ = state ^ pm;
                            if succ == target {
                                return Ok(depth);
                            }
                            let (word, bit) = (succ as usize / 64, succ as usize % 64);
                            if visited[word] >> bit & 1 == 0 {
                                visited[word] |= 1 << bit;
                                next.push(succ);
                            }
                        }
                    }
                    frontier = next;
                }
                Err(BoardError::Unsolvable)
            }
            (GameSpec::TileSwap, Board::Tiles(b)) => {
                let target = b.rank();
                if target == TILE_GOAL.rank() {
                    return Ok(0);
                }
                let moves = self.enumerate_moves();
                let mut visited = vec![false; 362880];
                visited[TILE_GOAL.rank()] = true;
                let mut frontier = vec![TILE_GOAL];
                let mut depth = 0u32;
                while !frontier.is_empty() {
                    depth += 1;
                    let mut next = Vec::with_capacity(frontier.len() * moves.len());
                    for state in &frontier {
                        for &mv in &moves {
                            let Board::Tiles(succ) =
                                self.apply_move(&Board::Tiles(*state), mv)?
                            else {
                                unreachable!()
                            };
                            let r = succ.rank();
                            if r == target {
                                return Ok(depth);
                            }
                            if !visited[r] {
                                visited[r] = true;
                                next.push(succ);
                            }
                        }
                    }
                    frontier = next;
                }
                Err(BoardError::Unsolvable)
            }
            _ => Err(BoardError::WrongGame),
        }
    }
}

fn swap_adjacent(a: u8, b: u8) -> bool {
    if a >= 9 || b >= 9 || a >= b {
        return false;
    }
    let (ra, ca) = (a / 3, a % 3);
    let (rb, cb) = (b / 3, b % 3);
    (ra == rb && cb == ca + 1) || (ca == cb && rb == ra + 1)
}

// Small helper so `board_from_symbolic` reads top-down.
trait PipeOk: Sized {
    fn pipe_ok<E>(self) -> Result<Self, E> {
        Ok(self)
    }
}
impl PipeOk for Board {}

/// Exhaustive enumeration of all boards at solution depths `1..=max_depth`,
/// partitioned by dataset split. Built once per run by breadth-first
/// expansion from the goal board; levels are sorted by board key so sampling
/// is reproducible.
pub struct BoardCatalog {
    game: GameSpec,
    max_depth: u32,
    by_depth: Vec<Vec<Board>>,
    by_depth_split: Vec<[Vec<Board>; 3]>,
}

impl BoardCatalog {
    pub fn build(game: GameSpec, max_depth: u32) -> Self {
        let levels = match game {
            GameSpec::LightsOut { n } => lights_levels(n, max_depth),
            GameSpec::TileSwap => tiles_levels(&game, max_depth),
        };
        let by_depth_split = levels
            .iter()
            .map(|level| {
                let mut parts: [Vec<Board>; 3] = [Vec::new(), Vec::new(), Vec::new()];
                for b in level {
                    parts[game.split_of(b).index()].push(*b);
                }
                parts
            })
            .collect();
        BoardCatalog {
            game,
            max_depth,
            by_depth: levels,
            by_depth_split,
        }
    }

    pub fn game(&self) -> GameSpec {
        self.game
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn count(&self, depth: u32) -> Result<usize, BoardError> {
        self.level(depth).map(|l| l.len())
    }

    pub fn boards(&self, depth: u32) -> Result<&[Board], BoardError> {
        self.level(depth).map(|l| l.as_slice())
    }

    pub fn split_boards(&self, depth: u32, split: SplitLabel) -> Result<&[Board], BoardError> {
        self.check_depth(depth)?;
        Ok(&self.by_depth_split[depth as usize - 1][split.index()])
    }

    /// Uniform draw from one (depth, split) pool; `split = None` draws from
    /// the whole depth level.
    pub fn sample(
        &self,
        depth: u32,
        split: Option<SplitLabel>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Board, BoardError> {
        use rand::Rng;
        let pool = match split {
            Some(s) => self.split_boards(depth, s)?,
            None => self.boards(depth)?,
        };
        if pool.is_empty() {
            return Err(BoardError::EmptySplit { depth });
        }
        Ok(pool[rng.random_range(0..pool.len())])
    }

    /// Depths in `1..=max_depth` whose pool for `split` is non-empty.
    pub fn depths_with_boards(&self, split: Option<SplitLabel>) -> Vec<u32> {
        (1..=self.max_depth)
            .filter(|&d| match split {
                Some(s) => !self.by_depth_split[d as usize - 1][s.index()].is_empty(),
                None => !self.by_depth[d as usize - 1].is_empty(),
            })
            .collect()
    }

    fn level(&self, depth: u32) -> Result<&Vec<Board>, BoardError> {
        self.check_depth(depth)?;
        Ok(&self.by_depth[depth as usize - 1])
    }

    fn check_depth(&self, depth: u32) -> Result<(), BoardError> {
        if depth == 0 || depth > self.max_depth {
            return Err(BoardError::DepthOutOfRange {
                depth,
                max: self.max_depth,
            });
        }
        Ok(())
    }
}

fn lights_levels(n: usize, max_depth: u32) -> Vec<Vec<Board>> {
    let masks = push_masks(n);
    let bits = n * n;
    let mut visited = vec![0u64; ((1usize << bits) + 63) / 64];
    visited[0] |= 1;
    let mut frontier = vec![0u32];
    let mut levels = Vec::with_capacity(max_depth as usize);
    for _ in 0..max_depth {
        let mut next = Vec::new();
        for &state in &frontier {
            for &pm in &masks {
                let succ = state ^ pm;
                let (word, bit) = (succ as usize / 64, succ as usize % 64);
                if visited[word] >> bit & 1 == 0 {
                    visited[word] |= 1 << bit;
                    next.push(succ);
                }
            }
        }
        next.sort_unstable();
        levels.push(
            next.iter()
                .map(|&m| Board::Lights(LightsBoard { n: n as u8, mask: m }))
                .collect(),
        );
        frontier = next;
    }
    levels
}

fn tiles_levels(game: &GameSpec, max_depth: u32) -> Vec<Vec<Board>> {
    let moves = game.enumerate_moves();
    let mut visited = vec![false; 362880];
    visited[TILE_GOAL.rank()] = true;
    let mut frontier = vec![TILE_GOAL];
    let mut levels = Vec::with_capacity(max_depth as usize);
    for _ in 0..max_depth {
        let mut next: Vec<TileBoard> = Vec::new();
        for state in &frontier {
            for &mv in &moves {
                let Board::Tiles(succ) = game
                    .apply_move(&Board::Tiles(*state), mv)
                    .expect("canonical moves are legal")
                else {
                    unreachable!()
                };
                let r = succ.rank();
                if !visited[r] {
                    visited[r] = true;
                    next.push(succ);
                }
            }
        }
        next.sort_unstable_by_key(|b| b.rank());
        levels.push(next.iter().map(|&b| Board::Tiles(b)).collect());
        frontier = next;
    }
    levels
}

/// Depth-`s` TileSwap boards found by expanding all swap sequences of length
/// `s`, dropping any sequence that revisits a chip assignment it has already
/// produced. Cross-checks the breadth-first enumeration.
pub fn tiles_boards_via_sequences(depth: u32) -> Vec<TileBoard> {
    let game = GameSpec::TileSwap;
    let moves = game.enumerate_moves();
    let mut found: Vec<TileBoard> = Vec::new();
    let mut seen_path: Vec<usize> = vec![TILE_GOAL.rank()];
    fn recurse(
        game: &GameSpec,
        moves: &[GameMove],
        board: TileBoard,
        remaining: u32,
        seen_path: &mut Vec<usize>,
        found: &mut Vec<TileBoard>,
    ) {
        if remaining == 0 {
            found.push(board);
            return;
        }
        for &mv in moves {
            let Board::Tiles(succ) = game
                .apply_move(&Board::Tiles(board), mv)
                .expect("canonical moves are legal")
            else {
                unreachable!()
            };
            if seen_path.contains(&succ.rank()) {
                continue;
            }
            seen_path.push(succ.rank());
            recurse(game, moves, succ, remaining - 1, seen_path, found);
            seen_path.pop();
        }
    }
    recurse(&game, &moves, TILE_GOAL, depth, &mut seen_path, &mut found);
    found.sort_unstable_by_key(|b| b.rank());
    found.dedup();
    // Sequence expansion can end on a board that a shorter sequence also
    // reaches; keep only boards whose true depth matches.
    found
        .into_iter()
        .filter(|b| game.solution_depth(&Board::Tiles(*b)) == Ok(depth))
        .collect()
}
