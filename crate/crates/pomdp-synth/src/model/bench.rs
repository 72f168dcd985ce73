//! Generators for the benchmark families.
//!
//! All generators are deterministic: the same [`GridConfig`] always yields a
//! structurally identical model (same indices, same rows).
//!
//! State counts per family (documented here because only some appear in the
//! problem-metrics table the maze/grid/rocksample counts follow):
//!
//! * `Maze(c)`: `3c + 8` states (a top row of five cells and three corridors
//!   of depth `c + 1`), 4 actions, 7 observations.
//! * `Grid(c)`: `c^2` states, 4 actions, 2 observations.
//! * `RockSample[n, b]`: `n^2 * 2^b + 1` states, `5 + b` actions,
//!   2 observations.
//! * `Navigation(c)`: `c^4 + 1` states (agent position x obstacle position,
//!   plus one absorbing crash state).
//! * `Delivery(c)`: `c^2` states.
//! * `Slippery(c)`: `c^2 + 1` states (positions plus crash).
//!
//! Navigation, Delivery and Slippery observe the 8 cells around the agent as
//! an 8-bit code (bit order N, NE, E, SE, S, SW, W, NW; a bit is set when the
//! cell is off-grid, a static obstacle, or holds the moving obstacle). Codes
//! 255, 254 and 253 are reserved for "crashed", "at landmark A" and "at
//! landmark B". The observation alphabet lists the codes that actually occur
//! in the model.

use std::collections::{BTreeMap, BTreeSet};

use super::{ModelError, Pomdp, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Navigation,
    Delivery,
    Slippery,
    Maze,
    Grid,
    RockSample,
}

impl std::str::FromStr for Family {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s.to_ascii_lowercase().as_str() {
            "navigation" => Ok(Family::Navigation),
            "delivery" => Ok(Family::Delivery),
            "slippery" => Ok(Family::Slippery),
            "maze" => Ok(Family::Maze),
            "grid" => Ok(Family::Grid),
            "rocksample" => Ok(Family::RockSample),
            other => Err(ModelError::Config(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub family: Family,
    /// Grid edge length `c` (for RockSample, the board size `n`).
    pub size: usize,
    /// Static obstacle cells; `None` picks the family default.
    pub static_obstacles: Option<Vec<(usize, usize)>>,
    /// Landmark A; `None` picks the family default.
    pub landmark_a: Option<(usize, usize)>,
    /// Landmark B; `None` picks the family default.
    pub landmark_b: Option<(usize, usize)>,
    /// Probability of slipping to each perpendicular direction (Slippery).
    pub slip_prob: f64,
    /// Number of rocks `b` (RockSample); `None` means `b = n`.
    pub rocks: Option<usize>,
    /// Viewing range of the agent (the 8-cell code assumes 1).
    pub view_range: usize,
}

impl GridConfig {
    pub fn new(family: Family, size: usize) -> Self {
        GridConfig {
            family,
            size,
            static_obstacles: None,
            landmark_a: None,
            landmark_b: None,
            slip_prob: 0.1,
            rocks: None,
            view_range: 1,
        }
    }

    fn min_size(family: Family) -> usize {
        match family {
            Family::Maze => 1,
            Family::Grid | Family::Navigation | Family::Delivery => 2,
            // Below 4 the slip zones of any interior obstacle cover every
            // route between the landmarks, forcing the patrol value to zero.
            Family::Slippery => 4,
            Family::RockSample => 2,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let min = Self::min_size(self.family);
        if self.size < min {
            return Err(ModelError::Config(format!(
                "{:?} requires size >= {min}, got {}",
                self.family, self.size
            )));
        }
        if !(0.0..0.5).contains(&self.slip_prob) {
            return Err(ModelError::Config(format!(
                "slip probability {} outside [0, 0.5)",
                self.slip_prob
            )));
        }
        let c = self.size;
        for &(x, y) in self.static_obstacles.iter().flatten() {
            if x >= c || y >= c {
                return Err(ModelError::Config(format!(
                    "static obstacle ({x}, {y}) outside the {c}x{c} grid"
                )));
            }
        }
        for cell in [self.landmark_a, self.landmark_b].into_iter().flatten() {
            if cell.0 >= c || cell.1 >= c {
                return Err(ModelError::Config(format!(
                    "landmark ({}, {}) outside the {c}x{c} grid",
                    cell.0, cell.1
                )));
            }
        }
        if let Some(b) = self.rocks {
            if b == 0 || b > 20 {
                return Err(ModelError::Config(format!("rock count {b} outside 1..=20")));
            }
            if b > c * c - 1 {
                return Err(ModelError::Config(format!(
                    "rock count {b} does not fit a {c}x{c} board"
                )));
            }
        }
        Ok(())
    }
}

pub fn generate_benchmark(cfg: &GridConfig) -> Result<Pomdp, ModelError> {
    cfg.validate()?;
    let m = match cfg.family {
        Family::Maze => maze(cfg.size),
        Family::Grid => grid(cfg.size),
        Family::RockSample => rocksample(cfg.size, cfg.rocks.unwrap_or(cfg.size)),
        Family::Navigation => navigation(cfg),
        Family::Delivery => delivery(cfg),
        Family::Slippery => slippery(cfg),
    };
    debug_assert!(m.validate().is_empty(), "generated model failed validation");
    Ok(m)
}

const MOVE_NAMES: [&str; 4] = ["north", "south", "east", "west"];
const MOVE_DELTAS: [(isize, isize); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];

/// Neighbor order for the 8-bit observation code.
const CODE_DELTAS: [(isize, isize); 8] =
    [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

const CODE_CRASH: usize = 255;
const CODE_AT_A: usize = 254;
const CODE_AT_B: usize = 253;

fn step(c: usize, x: usize, y: usize, d: (isize, isize)) -> Option<(usize, usize)> {
    let nx = x as isize + d.0;
    let ny = y as isize + d.1;
    if nx < 0 || ny < 0 || nx >= c as isize || ny >= c as isize {
        None
    } else {
        Some((nx as usize, ny as usize))
    }
}

/// Interns 8-bit observation codes into a dense alphabet as they occur.
struct CodeAlphabet {
    names: Vec<String>,
    by_code: BTreeMap<usize, usize>,
}

impl CodeAlphabet {
    fn new() -> Self {
        CodeAlphabet { names: Vec::new(), by_code: BTreeMap::new() }
    }

    fn intern(&mut self, code: usize) -> usize {
        if let Some(&z) = self.by_code.get(&code) {
            return z;
        }
        let name = match code {
            CODE_CRASH => "crash".to_string(),
            CODE_AT_A => "atA".to_string(),
            CODE_AT_B => "atB".to_string(),
            other => format!("o{other}"),
        };
        let z = self.names.len();
        self.names.push(name);
        self.by_code.insert(code, z);
        z
    }
}

fn neighbor_code(
    c: usize,
    x: usize,
    y: usize,
    blocked: &BTreeSet<(usize, usize)>,
    mover: Option<(usize, usize)>,
) -> usize {
    let mut code = 0usize;
    for (bit, &d) in CODE_DELTAS.iter().enumerate() {
        let occupied = match step(c, x, y, d) {
            None => true,
            Some(cell) => blocked.contains(&cell) || mover == Some(cell),
        };
        if occupied {
            code |= 1 << bit;
        }
    }
    code
}

fn merge_into(row: &mut Row, target: usize, p: f64) {
    match row.iter_mut().find(|(t, _)| *t == target) {
        Some((_, q)) => *q += p,
        None => row.push((target, p)),
    }
}

fn finish_rows(mut rows: Vec<Vec<Option<Row>>>) -> Vec<Vec<Option<Row>>> {
    for row in rows.iter_mut().flatten().flatten() {
        row.sort_by_key(|&(t, _)| t);
    }
    rows
}

// ---------------------------------------------------------------------------
// Maze: a top row of five cells with corridors hanging below columns 0, 2, 4.
// The target sits at the bottom of the middle corridor; observations are the
// wall configurations, which distinguish 7 cell classes.
// ---------------------------------------------------------------------------

fn maze(c: usize) -> Pomdp {
    let depth = c + 1; // corridor rows 1..=depth
    let num_states = 3 * c + 8;
    let goal = 5 + 3 * c + 1; // middle column, bottom row

    // Cell coordinates: top row is (col, 0) for col 0..5; corridor cells are
    // (col, row) with col in {0, 2, 4}, row in 1..=depth.
    let id_of = |col: usize, row: usize| -> usize {
        if row == 0 {
            col
        } else {
            5 + 3 * (row - 1) + col / 2
        }
    };

    let observations =
        vec!["nw".to_string(), "ns".to_string(), "n".to_string(), "ne".to_string(),
             "ew".to_string(), "ews".to_string(), "goal".to_string()];
    let mut obs_of = vec![0usize; num_states];
    let mut coords = vec![(0usize, 0usize); num_states];
    for col in 0..5 {
        coords[id_of(col, 0)] = (col, 0);
        obs_of[id_of(col, 0)] = match col {
            0 => 0, // nw
            1 | 3 => 1, // ns
            2 => 2, // n
            _ => 3, // ne
        };
    }
    for row in 1..=depth {
        for col in [0usize, 2, 4] {
            let id = id_of(col, row);
            coords[id] = (col, row);
            obs_of[id] = if id == goal {
                6
            } else if row == depth {
                5 // ews: dead end
            } else {
                4 // ew
            };
        }
    }

    let actions: Vec<String> = MOVE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut trans = vec![vec![None; 4]; num_states];
    let mut rewards = vec![vec![None; 4]; num_states];
    for s in 0..num_states {
        let (col, row) = coords[s];
        for (a, &(dx, dy)) in MOVE_DELTAS.iter().enumerate() {
            if s == goal {
                trans[s][a] = Some(vec![(s, 1.0)]);
                continue;
            }
            // dy = 1 is "north" (toward the top row).
            let target = if row == 0 {
                match (dx, dy) {
                    (1, 0) if col < 4 => id_of(col + 1, 0),
                    (-1, 0) if col > 0 => id_of(col - 1, 0),
                    (0, -1) if col % 2 == 0 => id_of(col, 1),
                    _ => s,
                }
            } else {
                match (dx, dy) {
                    (0, 1) => id_of(col, row - 1),
                    (0, -1) if row < depth => id_of(col, row + 1),
                    _ => s,
                }
            };
            trans[s][a] = Some(vec![(target, 1.0)]);
            rewards[s][a] = Some(1.0);
        }
    }

    let mut labels = BTreeMap::new();
    labels.insert("goal".to_string(), BTreeSet::from([goal]));
    // The top-middle cell is the maze's distinguished entrance (and initial
    // state); labeling it lets spec-driven memory track the entrance-to-goal
    // leg of a run.
    labels.insert("entry".to_string(), BTreeSet::from([id_of(2, 0)]));
    Pomdp {
        name: format!("maze{c}"),
        num_states,
        actions,
        observations,
        obs_of,
        trans: finish_rows(trans),
        rewards,
        labels,
        initial: id_of(2, 0),
    }
}

// ---------------------------------------------------------------------------
// Grid: a square of identical-looking cells with one observable target in the
// far corner. Movement is deterministic; walls bounce back.
// ---------------------------------------------------------------------------

fn grid(c: usize) -> Pomdp {
    let num_states = c * c;
    let goal = num_states - 1;
    let pos = |x: usize, y: usize| y * c + x;

    let observations = vec!["blank".to_string(), "target".to_string()];
    let mut obs_of = vec![0usize; num_states];
    obs_of[goal] = 1;

    let actions: Vec<String> = MOVE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut trans = vec![vec![None; 4]; num_states];
    let mut rewards = vec![vec![None; 4]; num_states];
    for y in 0..c {
        for x in 0..c {
            let s = pos(x, y);
            for (a, &d) in MOVE_DELTAS.iter().enumerate() {
                if s == goal {
                    trans[s][a] = Some(vec![(s, 1.0)]);
                    continue;
                }
                let t = step(c, x, y, d).map_or(s, |(nx, ny)| pos(nx, ny));
                trans[s][a] = Some(vec![(t, 1.0)]);
                rewards[s][a] = Some(1.0);
            }
        }
    }

    let mut labels = BTreeMap::new();
    labels.insert("goal".to_string(), BTreeSet::from([goal]));
    Pomdp {
        name: format!("grid{c}"),
        num_states,
        actions,
        observations,
        obs_of,
        trans: finish_rows(trans),
        rewards,
        labels,
        initial: 0,
    }
}

// ---------------------------------------------------------------------------
// RockSample[n, b]: a rover on an n x n board with b rocks of hidden quality.
// Sampling a good rock pays off and exhausts it; exiting east ends the run.
// The rover observes only whether it stands on a rock that is still good.
// ---------------------------------------------------------------------------

fn rock_cells(n: usize, b: usize, start: usize) -> Vec<usize> {
    let mut cells = Vec::with_capacity(b);
    for i in 0..b {
        let mut cell = (i * 7 + 3) % (n * n);
        while cell == start || cells.contains(&cell) {
            cell = (cell + 1) % (n * n);
        }
        cells.push(cell);
    }
    cells
}

fn rocksample(n: usize, b: usize) -> Pomdp {
    let cells = n * n;
    let masks = 1usize << b;
    let terminal = cells * masks;
    let num_states = terminal + 1;
    let start_pos = (n / 2) * n;
    let rocks = rock_cells(n, b, start_pos);
    let state = |pos: usize, mask: usize| pos * masks + mask;

    let mut actions: Vec<String> = MOVE_NAMES.iter().map(|s| s.to_string()).collect();
    actions.push("sample".to_string());
    for i in 0..b {
        actions.push(format!("check{i}"));
    }
    let na = actions.len();

    let observations = vec!["none".to_string(), "good".to_string()];
    let mut obs_of = vec![0usize; num_states];
    let mut trans = vec![vec![None; na]; num_states];
    let mut rewards = vec![vec![None; na]; num_states];

    for pos in 0..cells {
        let (x, y) = (pos % n, pos / n);
        let on_rock = rocks.iter().position(|&r| r == pos);
        for mask in 0..masks {
            let s = state(pos, mask);
            if let Some(i) = on_rock {
                if mask & (1 << i) != 0 {
                    obs_of[s] = 1;
                }
            }
            for (a, &d) in MOVE_DELTAS.iter().enumerate() {
                if a == 2 && x == n - 1 {
                    // Exiting east ends the run with a terminal bonus.
                    trans[s][a] = Some(vec![(terminal, 1.0)]);
                    rewards[s][a] = Some(10.0);
                    continue;
                }
                let t = step(n, x, y, d).map_or(pos, |(nx, ny)| ny * n + nx);
                trans[s][a] = Some(vec![(state(t, mask), 1.0)]);
            }
            // sample
            match on_rock {
                Some(i) if mask & (1 << i) != 0 => {
                    trans[s][4] = Some(vec![(state(pos, mask & !(1 << i)), 1.0)]);
                    rewards[s][4] = Some(10.0);
                }
                _ => {
                    trans[s][4] = Some(vec![(s, 1.0)]);
                    rewards[s][4] = Some(-10.0);
                }
            }
            // check actions do not change the state; the quality of the rock
            // under the rover is visible through the observation map instead.
            for i in 0..b {
                trans[s][5 + i] = Some(vec![(s, 1.0)]);
            }
        }
    }
    for a in 0..na {
        trans[terminal][a] = Some(vec![(terminal, 1.0)]);
    }

    // Alternating initial qualities: even-indexed rocks start good.
    let mut init_mask = 0usize;
    for i in (0..b).step_by(2) {
        init_mask |= 1 << i;
    }

    let mut labels = BTreeMap::new();
    labels.insert("done".to_string(), BTreeSet::from([terminal]));
    Pomdp {
        name: format!("rocksample{n}_{b}"),
        num_states,
        actions,
        observations,
        obs_of,
        trans: finish_rows(trans),
        rewards,
        labels,
        initial: state(start_pos, init_mask),
    }
}

// ---------------------------------------------------------------------------
// Navigation: an agent and one randomly moving obstacle. Colliding with the
// obstacle, or entering a static obstacle cell, falls into an absorbing crash
// state; reaching the target cell absorbs successfully.
// ---------------------------------------------------------------------------

fn default_static_obstacles(c: usize, family: Family) -> Vec<(usize, usize)> {
    match family {
        // Mirrors the two-block layout of the 5x5 reference environment;
        // smaller navigation grids stay open so the task remains solvable.
        Family::Navigation if c >= 5 => vec![(1, 0), (1, 2)],
        // One interior block, kept off the border lanes so a slip-free
        // patrol loop between the landmarks survives.
        Family::Slippery => vec![(1, 2)],
        _ => Vec::new(),
    }
}

fn navigation(cfg: &GridConfig) -> Pomdp {
    let c = cfg.size;
    let cells = c * c;
    let goal_cell = cfg.landmark_a.unwrap_or((c - 1, c - 1));
    let statics: BTreeSet<(usize, usize)> = cfg
        .static_obstacles
        .clone()
        .unwrap_or_else(|| default_static_obstacles(c, Family::Navigation))
        .into_iter()
        .collect();
    let pos = |x: usize, y: usize| y * c + x;
    let coord = |p: usize| (p % c, p / c);
    let goal = pos(goal_cell.0, goal_cell.1);
    let crash = cells * cells;
    let num_states = crash + 1;
    let state = |agent: usize, obst: usize| agent * cells + obst;

    let mut alphabet = CodeAlphabet::new();
    let mut obs_of = vec![0usize; num_states];
    for agent in 0..cells {
        let (ax, ay) = coord(agent);
        for obst in 0..cells {
            let code = if agent == goal {
                CODE_AT_A
            } else {
                neighbor_code(c, ax, ay, &statics, Some(coord(obst)))
            };
            obs_of[state(agent, obst)] = alphabet.intern(code);
        }
    }
    obs_of[crash] = alphabet.intern(CODE_CRASH);

    let actions: Vec<String> = MOVE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut trans = vec![vec![None; 4]; num_states];
    let rewards = vec![vec![None; 4]; num_states];

    for agent in 0..cells {
        let (ax, ay) = coord(agent);
        let agent_invalid = statics.contains(&(ax, ay));
        for obst in 0..cells {
            let s = state(agent, obst);
            if agent == goal {
                for a in 0..4 {
                    trans[s][a] = Some(vec![(s, 1.0)]);
                }
                continue;
            }
            if agent_invalid || agent == obst {
                // Only reachable when constructed directly; treated as crashed.
                for a in 0..4 {
                    trans[s][a] = Some(vec![(crash, 1.0)]);
                }
                continue;
            }
            let (ox, oy) = coord(obst);
            for (a, &d) in MOVE_DELTAS.iter().enumerate() {
                let next = step(c, ax, ay, d).unwrap_or((ax, ay));
                if statics.contains(&next) {
                    trans[s][a] = Some(vec![(crash, 1.0)]);
                    continue;
                }
                let agent_new = pos(next.0, next.1);
                let mut row: Row = Vec::new();
                for &od in &MOVE_DELTAS {
                    let ocell = match step(c, ox, oy, od) {
                        Some(cell) if !statics.contains(&cell) => cell,
                        _ => (ox, oy),
                    };
                    let obst_new = pos(ocell.0, ocell.1);
                    let target = if agent_new == goal {
                        state(agent_new, obst_new)
                    } else if agent_new == obst_new {
                        crash
                    } else {
                        state(agent_new, obst_new)
                    };
                    merge_into(&mut row, target, 0.25);
                }
                trans[s][a] = Some(row);
            }
        }
    }
    for a in 0..4 {
        trans[crash][a] = Some(vec![(crash, 1.0)]);
    }

    let mut labels = BTreeMap::new();
    labels.insert(
        "A".to_string(),
        (0..cells).map(|o| state(goal, o)).collect::<BTreeSet<usize>>(),
    );
    labels.insert("X".to_string(), BTreeSet::from([crash]));
    Pomdp {
        name: format!("navigation{c}"),
        num_states,
        actions,
        observations: alphabet.names,
        obs_of,
        trans: finish_rows(trans),
        rewards,
        labels,
        initial: state(0, c - 1),
    }
}

// ---------------------------------------------------------------------------
// Delivery: plain deterministic grid walking between two landmarks. The
// sequencing (first A, then B) lives in the specification, not in the model.
// ---------------------------------------------------------------------------

fn delivery(cfg: &GridConfig) -> Pomdp {
    let c = cfg.size;
    let cells = c * c;
    let a_cell = cfg.landmark_a.unwrap_or((0, 0));
    let b_cell = cfg.landmark_b.unwrap_or((c - 1, c - 1));
    let pos = |x: usize, y: usize| y * c + x;
    let empty = BTreeSet::new();

    let mut alphabet = CodeAlphabet::new();
    let mut obs_of = vec![0usize; cells];
    for y in 0..c {
        for x in 0..c {
            let code = if (x, y) == a_cell {
                CODE_AT_A
            } else if (x, y) == b_cell {
                CODE_AT_B
            } else {
                neighbor_code(c, x, y, &empty, None)
            };
            obs_of[pos(x, y)] = alphabet.intern(code);
        }
    }

    let actions: Vec<String> = MOVE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut trans = vec![vec![None; 4]; cells];
    let mut rewards = vec![vec![None; 4]; cells];
    for y in 0..c {
        for x in 0..c {
            let s = pos(x, y);
            for (a, &d) in MOVE_DELTAS.iter().enumerate() {
                let t = step(c, x, y, d).map_or(s, |(nx, ny)| pos(nx, ny));
                trans[s][a] = Some(vec![(t, 1.0)]);
                rewards[s][a] = Some(1.0);
            }
        }
    }

    let mut labels = BTreeMap::new();
    labels.insert("A".to_string(), BTreeSet::from([pos(a_cell.0, a_cell.1)]));
    labels.insert("B".to_string(), BTreeSet::from([pos(b_cell.0, b_cell.1)]));
    Pomdp {
        name: format!("delivery{c}"),
        num_states: cells,
        actions,
        observations: alphabet.names,
        obs_of,
        trans: finish_rows(trans),
        rewards,
        labels,
        initial: pos(a_cell.0, a_cell.1),
    }
}

// ---------------------------------------------------------------------------
// Slippery: grid walking where movement slips perpendicular with probability
// 0.1 per side. Entering a static obstacle cell crashes; the task cycles
// between landmarks A and B forever.
// ---------------------------------------------------------------------------

fn slippery(cfg: &GridConfig) -> Pomdp {
    let c = cfg.size;
    let cells = c * c;
    let a_cell = cfg.landmark_a.unwrap_or((0, 0));
    let b_cell = cfg.landmark_b.unwrap_or((c - 1, c - 1));
    let statics: BTreeSet<(usize, usize)> = cfg
        .static_obstacles
        .clone()
        .unwrap_or_else(|| default_static_obstacles(c, Family::Slippery))
        .into_iter()
        .filter(|&cell| cell != a_cell && cell != b_cell)
        .collect();
    let pos = |x: usize, y: usize| y * c + x;
    let crash = cells;
    let num_states = cells + 1;
    let slip = cfg.slip_prob;

    let mut alphabet = CodeAlphabet::new();
    let mut obs_of = vec![0usize; num_states];
    for y in 0..c {
        for x in 0..c {
            let code = if (x, y) == a_cell {
                CODE_AT_A
            } else if (x, y) == b_cell {
                CODE_AT_B
            } else {
                neighbor_code(c, x, y, &statics, None)
            };
            obs_of[pos(x, y)] = alphabet.intern(code);
        }
    }
    obs_of[crash] = alphabet.intern(CODE_CRASH);

    // Perpendicular directions for each move (north/south slip east/west).
    const PERP: [[usize; 2]; 4] = [[2, 3], [2, 3], [0, 1], [0, 1]];

    let actions: Vec<String> = MOVE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut trans = vec![vec![None; 4]; num_states];
    let rewards = vec![vec![None; 4]; num_states];
    for y in 0..c {
        for x in 0..c {
            let s = pos(x, y);
            if statics.contains(&(x, y)) {
                for a in 0..4 {
                    trans[s][a] = Some(vec![(crash, 1.0)]);
                }
                continue;
            }
            for (a, &d) in MOVE_DELTAS.iter().enumerate() {
                let mut row: Row = Vec::new();
                let outcomes =
                    [(d, 1.0 - 2.0 * slip), (MOVE_DELTAS[PERP[a][0]], slip), (MOVE_DELTAS[PERP[a][1]], slip)];
                for (dir, p) in outcomes {
                    let target = match step(c, x, y, dir) {
                        None => s,
                        Some(cell) if statics.contains(&cell) => crash,
                        Some((nx, ny)) => pos(nx, ny),
                    };
                    merge_into(&mut row, target, p);
                }
                trans[s][a] = Some(row);
            }
        }
    }
    for a in 0..4 {
        trans[crash][a] = Some(vec![(crash, 1.0)]);
    }

    let mut labels = BTreeMap::new();
    labels.insert("A".to_string(), BTreeSet::from([pos(a_cell.0, a_cell.1)]));
    labels.insert("B".to_string(), BTreeSet::from([pos(b_cell.0, b_cell.1)]));
    labels.insert("X".to_string(), BTreeSet::from([crash]));
    Pomdp {
        name: format!("slippery{c}"),
        num_states,
        actions,
        observations: alphabet.names,
        obs_of,
        trans: finish_rows(trans),
        rewards,
        labels,
        initial: pos(a_cell.0, a_cell.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maze_metrics_match_closed_form() {
        for c in 1..=10 {
            let m = generate_benchmark(&GridConfig::new(Family::Maze, c)).unwrap();
            assert_eq!(m.num_states, 3 * c + 8, "maze({c}) state count");
            assert_eq!(m.num_actions(), 4);
            assert_eq!(m.num_observations(), 7);
            assert!(m.validate().is_empty());
        }
    }

    #[test]
    fn grid_metrics_match_closed_form() {
        for c in 2..=10 {
            let m = generate_benchmark(&GridConfig::new(Family::Grid, c)).unwrap();
            assert_eq!(m.num_states, c * c);
            assert_eq!(m.num_observations(), 2);
        }
    }

    #[test]
    fn rocksample_metrics() {
        let m = generate_benchmark(&GridConfig::new(Family::RockSample, 4)).unwrap();
        assert_eq!(m.num_states, 257);
        assert_eq!(m.num_actions(), 9);
        assert_eq!(m.num_observations(), 2);
        let m = generate_benchmark(&GridConfig::new(Family::RockSample, 5)).unwrap();
        assert_eq!(m.num_states, 801);
        assert_eq!(m.num_actions(), 10);
        assert_eq!(m.num_observations(), 2);
    }

    #[test]
    fn navigation_state_count_documented() {
        for c in [2, 3, 4] {
            let m = generate_benchmark(&GridConfig::new(Family::Navigation, c)).unwrap();
            assert_eq!(m.num_states, c * c * c * c + 1);
            assert!(m.validate().is_empty());
            assert!(m.labels["A"].len() == c * c);
        }
    }

    #[test]
    fn slippery_rows_encode_slip() {
        let m = generate_benchmark(&GridConfig::new(Family::Slippery, 4)).unwrap();
        assert_eq!(m.num_states, 17);
        // Interior free cell: intended 0.8 plus two 0.1 slips.
        let s = 10; // (2, 2)
        let row = m.row(s, 0).unwrap();
        let total: f64 = row.iter().map(|&(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(row.iter().any(|&(_, p)| (p - 0.8).abs() < 1e-12));
    }

    #[test]
    fn generator_is_deterministic() {
        for family in [Family::Maze, Family::Navigation, Family::RockSample, Family::Slippery] {
            let cfg = GridConfig::new(family, 4);
            assert_eq!(generate_benchmark(&cfg).unwrap(), generate_benchmark(&cfg).unwrap());
        }
    }

    #[test]
    fn size_below_minimum_is_rejected() {
        assert!(generate_benchmark(&GridConfig::new(Family::Grid, 1)).is_err());
        assert!(generate_benchmark(&GridConfig::new(Family::Maze, 0)).is_err());
        assert!(generate_benchmark(&GridConfig::new(Family::Slippery, 3)).is_err());
    }

    #[test]
    fn delivery_landmarks_have_dedicated_observations() {
        let m = generate_benchmark(&GridConfig::new(Family::Delivery, 4)).unwrap();
        let a_state = *m.labels["A"].iter().next().unwrap();
        let b_state = *m.labels["B"].iter().next().unwrap();
        assert_eq!(m.observations[m.obs_of[a_state]], "atA");
        assert_eq!(m.observations[m.obs_of[b_state]], "atB");
        assert_ne!(m.obs_of[a_state], m.obs_of[b_state]);
    }
}
