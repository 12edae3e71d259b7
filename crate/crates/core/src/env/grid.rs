//! A fully observed DoorKey gridworld: walled border, one inner wall
//! column with a locked door, a key on the agent's side and a goal beyond
//! the wall. Actions and object rules follow MiniGrid.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{Env, Transition};
use crate::dsl::{Token, Vocabulary};
use crate::kv::{parse_cell, KvError, KvFile};
use crate::policy::Policy;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Action {
    Left = 0,
    Right = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    Done = 6,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::Left,
        Action::Right,
        Action::Forward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Done,
    ];

    pub fn from_index(i: u32) -> Option<Action> {
        Self::ALL.get(i as usize).copied()
    }
}

/// Facing direction, clockwise from east (y grows downwards).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    East = 0,
    South = 1,
    West = 2,
    North = 3,
}

impl Dir {
    fn from_index(i: usize) -> Dir {
        [Dir::East, Dir::South, Dir::West, Dir::North][i % 4]
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
            Dir::North => (0, -1),
        }
    }

    fn parse(s: &str) -> Result<Dir, String> {
        match s {
            "east" => Ok(Dir::East),
            "south" => Ok(Dir::South),
            "west" => Ok(Dir::West),
            "north" => Ok(Dir::North),
            _ => Err("expected east, south, west or north".into()),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum DoorState {
    Locked = 0,
    Closed = 1,
    Open = 2,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridState {
    pub pos: (usize, usize),
    pub dir: Dir,
    /// `None` while the agent carries the key.
    pub key: Option<(usize, usize)>,
    pub door: DoorState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    /// The door cell; its column is the inner wall.
    pub door: (usize, usize),
    pub key: (usize, usize),
    pub goal: (usize, usize),
    pub start: (usize, usize),
    pub start_dir: Dir,
    pub max_steps: usize,
    /// Draw the start pose uniformly over free cells left of the wall
    /// instead of using `start`/`start_dir`.
    pub random_start: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid must be at least 5x3, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("{0} cell {1:?} is not a valid position")]
    BadCell(&'static str, (usize, usize)),
    #[error("{0} and {1} share a cell")]
    Overlap(&'static str, &'static str),
    #[error("the goal cannot be reached from the start")]
    Unsolvable,
    #[error("max_steps must be positive")]
    ZeroSteps,
    #[error(transparent)]
    Config(#[from] KvError),
}

impl GridConfig {
    /// The fixed 6x6 layout used throughout the tests and examples.
    pub fn doorkey_6x6() -> Self {
        Self {
            width: 6,
            height: 6,
            door: (3, 2),
            key: (1, 3),
            goal: (4, 4),
            start: (1, 1),
            start_dir: Dir::East,
            max_steps: 100,
            random_start: false,
            seed: 0,
        }
    }

    /// Reads `key = value` settings on top of the 6x6 defaults.
    pub fn parse(src: &str) -> Result<Self, GridError> {
        let mut kv = KvFile::parse(src)?;
        let mut c = Self::doorkey_6x6();
        if let Some(v) = kv.take("width")? {
            c.width = v;
        }
        if let Some(v) = kv.take("height")? {
            c.height = v;
        }
        if let Some(v) = kv.take_with("door", parse_cell)? {
            c.door = v;
        }
        if let Some(v) = kv.take_with("key", parse_cell)? {
            c.key = v;
        }
        if let Some(v) = kv.take_with("goal", parse_cell)? {
            c.goal = v;
        }
        if let Some(v) = kv.take_with("start", parse_cell)? {
            c.start = v;
        }
        if let Some(v) = kv.take_with("start_dir", Dir::parse)? {
            c.start_dir = v;
        }
        if let Some(v) = kv.take("max_steps")? {
            c.max_steps = v;
        }
        if let Some(v) = kv.take("random_start")? {
            c.random_start = v;
        }
        if let Some(v) = kv.take("seed")? {
            c.seed = v;
        }
        kv.finish()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> String {
        let d = match self.start_dir {
            Dir::East => "east",
            Dir::South => "south",
            Dir::West => "west",
            Dir::North => "north",
        };
        format!(
            "width = {}\nheight = {}\ndoor = {},{}\nkey = {},{}\ngoal = {},{}\nstart = {},{}\nstart_dir = {d}\nmax_steps = {}\nrandom_start = {}\nseed = {}\n",
            self.width,
            self.height,
            self.door.0,
            self.door.1,
            self.key.0,
            self.key.1,
            self.goal.0,
            self.goal.1,
            self.start.0,
            self.start.1,
            self.max_steps,
            self.random_start,
            self.seed
        )
    }

    fn interior(&self, (x, y): (usize, usize)) -> bool {
        x >= 1 && y >= 1 && x + 1 < self.width && y + 1 < self.height
    }

    fn validate(&self) -> Result<(), GridError> {
        if self.width < 5 || self.height < 3 {
            return Err(GridError::TooSmall(self.width, self.height));
        }
        if self.max_steps == 0 {
            return Err(GridError::ZeroSteps);
        }
        let wall = self.door.0;
        if !self.interior(self.door) || wall < 2 || wall + 2 >= self.width {
            return Err(GridError::BadCell("door", self.door));
        }
        let left = |c: (usize, usize)| self.interior(c) && c.0 < wall;
        if !left(self.key) {
            return Err(GridError::BadCell("key", self.key));
        }
        if !left(self.start) {
            return Err(GridError::BadCell("start", self.start));
        }
        if !(self.interior(self.goal) && self.goal.0 > wall) {
            return Err(GridError::BadCell("goal", self.goal));
        }
        if self.key == self.start {
            return Err(GridError::Overlap("key", "start"));
        }
        Ok(())
    }
}

/// Token indices in [`Vocabulary::doorkey`] order.
#[derive(Copy, Clone, Debug)]
struct Tokens {
    other: Token,
    reach_goal: Token,
    pickup_key: Token,
    drop_key: Token,
    unlock_door: Token,
    open_door: Token,
    close_door: Token,
}

#[derive(Clone, Debug)]
pub struct GridEnv {
    cfg: GridConfig,
    vocab: Arc<Vocabulary>,
    tok: Tokens,
    n_cells: usize,
    /// Left-of-wall free cells used for random starts.
    start_cells: Vec<(usize, usize)>,
    /// Expert action for every state (shortest path to the goal).
    expert: Vec<u32>,
    /// Steps to the goal under the expert; `u32::MAX` if unreachable.
    dist: Vec<u32>,
}

impl GridEnv {
    pub fn new(cfg: GridConfig) -> Result<Self, GridError> {
        cfg.validate()?;
        let vocab = Arc::new(Vocabulary::doorkey());
        let t = |n: &str| vocab.lookup(n).expect("doorkey token");
        let tok = Tokens {
            other: t("other"),
            reach_goal: t("reach_goal"),
            pickup_key: t("pickup_key"),
            drop_key: t("drop_key"),
            unlock_door: t("unlock_door"),
            open_door: t("open_door"),
            close_door: t("close_door"),
        };
        let start_cells = (1..cfg.height - 1)
            .flat_map(|y| (1..cfg.door.0).map(move |x| (x, y)))
            .filter(|c| *c != cfg.key)
            .collect();
        let mut env = Self {
            n_cells: cfg.width * cfg.height,
            cfg,
            vocab,
            tok,
            start_cells,
            expert: Vec::new(),
            dist: Vec::new(),
        };
        env.plan();
        let starts: Vec<u32> = if env.cfg.random_start {
            env.start_states()
        } else {
            vec![env.encode(&env.start_state())]
        };
        if starts.iter().any(|s| env.dist[*s as usize] == u32::MAX) {
            return Err(GridError::Unsolvable);
        }
        Ok(env)
    }

    pub fn config(&self) -> &GridConfig {
        &self.cfg
    }

    pub fn start_state(&self) -> GridState {
        GridState {
            pos: self.cfg.start,
            dir: self.cfg.start_dir,
            key: Some(self.cfg.key),
            door: DoorState::Locked,
        }
    }

    /// Every pose a random start may produce.
    pub fn start_states(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for &pos in &self.start_cells {
            for d in 0..4 {
                out.push(self.encode(&GridState {
                    pos,
                    dir: Dir::from_index(d),
                    key: Some(self.cfg.key),
                    door: DoorState::Locked,
                }));
            }
        }
        out
    }

    pub fn encode(&self, s: &GridState) -> u32 {
        let pos = s.pos.1 * self.cfg.width + s.pos.0;
        let key = s.key.map_or(self.n_cells, |(x, y)| y * self.cfg.width + x);
        (((pos * 4 + s.dir as usize) * (self.n_cells + 1) + key) * 3 + s.door as usize) as u32
    }

    pub fn decode(&self, id: u32) -> GridState {
        let mut i = id as usize;
        let door = [DoorState::Locked, DoorState::Closed, DoorState::Open][i % 3];
        i /= 3;
        let key = i % (self.n_cells + 1);
        i /= self.n_cells + 1;
        let dir = Dir::from_index(i % 4);
        let pos = i / 4;
        let cell = |c: usize| (c % self.cfg.width, c / self.cfg.width);
        GridState {
            pos: cell(pos),
            dir,
            key: (key < self.n_cells).then(|| cell(key)),
            door,
        }
    }

    fn is_wall(&self, (x, y): (usize, usize)) -> bool {
        !self.cfg.interior((x, y)) || (x == self.cfg.door.0 && (x, y) != self.cfg.door)
    }

    fn front(&self, s: &GridState) -> (usize, usize) {
        let (dx, dy) = s.dir.delta();
        // the border is walled, so an interior agent never steps off the grid
        (
            (s.pos.0 as isize + dx) as usize,
            (s.pos.1 as isize + dy) as usize,
        )
    }

    /// Deterministic successor and event token.
    pub fn transition(&self, s: &GridState, a: Action) -> (GridState, Token, bool) {
        let mut n = *s;
        let front = self.front(s);
        let t = &self.tok;
        match a {
            Action::Left => n.dir = Dir::from_index(s.dir as usize + 3),
            Action::Right => n.dir = Dir::from_index(s.dir as usize + 1),
            Action::Forward => {
                let blocked = self.is_wall(front)
                    || (front == self.cfg.door && s.door != DoorState::Open)
                    || s.key == Some(front);
                if !blocked {
                    n.pos = front;
                    if front == self.cfg.goal {
                        return (n, t.reach_goal, true);
                    }
                }
            }
            Action::Pickup => {
                if s.key == Some(front) {
                    n.key = None;
                    return (n, t.pickup_key, false);
                }
            }
            Action::Drop => {
                let free = !self.is_wall(front) && front != self.cfg.door && front != self.cfg.goal;
                if s.key.is_none() && free {
                    n.key = Some(front);
                    return (n, t.drop_key, false);
                }
            }
            Action::Toggle => {
                if front == self.cfg.door {
                    match s.door {
                        DoorState::Locked if s.key.is_none() => {
                            n.door = DoorState::Open;
                            return (n, t.unlock_door, false);
                        }
                        DoorState::Locked => {}
                        DoorState::Closed => {
                            n.door = DoorState::Open;
                            return (n, t.open_door, false);
                        }
                        DoorState::Open => {
                            n.door = DoorState::Closed;
                            return (n, t.close_door, false);
                        }
                    }
                }
            }
            Action::Done => {}
        }
        (n, t.other, false)
    }

    /// The token of the last step of `prefix`. Grid states carry the door
    /// and key status, so the last step determines the event.
    pub fn pred(&self, prefix: &[crate::trajectory::Step]) -> Token {
        let last = prefix.last().expect("pred needs a non-empty prefix");
        let a = Action::from_index(last.action).unwrap_or(Action::Done);
        self.transition(&self.decode(last.state), a).1
    }

    fn valid_state(&self, s: &GridState) -> bool {
        let floor = |c: (usize, usize)| !self.is_wall(c) && c != self.cfg.goal;
        let pos_ok = floor(s.pos) && (s.pos != self.cfg.door || s.door == DoorState::Open);
        let key_ok = s
            .key
            .is_none_or(|k| floor(k) && k != self.cfg.door && k != s.pos);
        pos_ok && key_ok
    }

    /// Backward breadth-first search from the goal over the state graph.
    fn plan(&mut self) {
        let n = self.n_states();
        let mut preds: Vec<Vec<(u32, u8)>> = vec![Vec::new(); n];
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for id in 0..n as u32 {
            let s = self.decode(id);
            if !self.valid_state(&s) {
                continue;
            }
            for a in Action::ALL {
                let (next, _, done) = self.transition(&s, a);
                if done {
                    if dist[id as usize] == u32::MAX {
                        dist[id as usize] = 1;
                        queue.push_back(id);
                    }
                } else {
                    let nid = self.encode(&next);
                    if nid != id {
                        preds[nid as usize].push((id, a as u8));
                    }
                }
            }
        }
        while let Some(id) = queue.pop_front() {
            let d = dist[id as usize];
            for &(p, _) in &preds[id as usize] {
                if dist[p as usize] == u32::MAX {
                    dist[p as usize] = d + 1;
                    queue.push_back(p);
                }
            }
        }
        // lowest-index action achieving the shortest distance
        let mut expert = vec![Action::Done as u32; n];
        for id in 0..n as u32 {
            if dist[id as usize] == u32::MAX {
                continue;
            }
            let s = self.decode(id);
            for a in Action::ALL {
                let (next, _, done) = self.transition(&s, a);
                let d = if done {
                    1
                } else {
                    dist[self.encode(&next) as usize].saturating_add(1)
                };
                if d == dist[id as usize] {
                    expert[id as usize] = a as u32;
                    break;
                }
            }
        }
        self.expert = expert;
        self.dist = dist;
    }

    /// Shortest number of steps from `state` to the goal.
    pub fn distance_to_goal(&self, state: u32) -> Option<u32> {
        let d = self.dist[state as usize];
        (d != u32::MAX).then_some(d)
    }

    pub fn expert(&self) -> ExpertPolicy<'_> {
        ExpertPolicy(self)
    }
}

/// Deterministic shortest-path planner: fetch the key, unlock the door,
/// walk to the goal.
pub struct ExpertPolicy<'a>(&'a GridEnv);

impl Policy for ExpertPolicy<'_> {
    fn act(&self, state: u32, _rng: &mut dyn RngCore) -> (u32, f64) {
        (self.0.expert[state as usize], 0.0)
    }
}

impl Env for GridEnv {
    fn n_states(&self) -> usize {
        self.n_cells * 4 * (self.n_cells + 1) * 3
    }

    fn n_actions(&self) -> usize {
        Action::ALL.len()
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn horizon(&self) -> usize {
        self.cfg.max_steps
    }

    fn reset(&self, rng: &mut dyn RngCore) -> u32 {
        if !self.cfg.random_start {
            return self.encode(&self.start_state());
        }
        let pos = self.start_cells[rng.gen_range(0..self.start_cells.len())];
        let dir = Dir::from_index(rng.gen_range(0..4));
        self.encode(&GridState {
            pos,
            dir,
            key: Some(self.cfg.key),
            door: DoorState::Locked,
        })
    }

    fn step(&self, state: u32, action: u32, _rng: &mut dyn RngCore) -> Transition {
        let a = Action::from_index(action).unwrap_or(Action::Done);
        let (next, token, done) = self.transition(&self.decode(state), a);
        Transition {
            next: self.encode(&next),
            token,
            done,
        }
    }
}
