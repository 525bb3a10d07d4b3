//! Labeled slippery gridworld, one copy per agent.
//!
//! The `.grid` text format:
//!
//! ```text
//! # comment
//! [grid]
//! slip = 0.8          # probability of moving in the commanded direction
//! [legend]
//! a = a               # glyph = space-separated proposition names
//! G = g1
//! [layout]
//! a...G               # one row per line, top row first; '.' is unlabeled
//! [walls]
//! 2,0 2,1             # blocked adjacency between two cells (x,y)
//! [starts]
//! 0,0                 # one start cell per agent, in agent order
//! ```
//!
//! Cells whose label set contains a proposition starting with `g` are goal
//! cells: an agent that enters one is absorbed for the rest of the episode.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use rand::Rng;
use thiserror::Error;

use crate::hoa::LabelSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: glyph '{glyph}' is not in the legend")]
    UnknownGlyph { line: usize, glyph: char },
    #[error("start cell {0} is outside the grid")]
    StartOutOfBounds(Cell),
    #[error("wall {0}-{1} does not join two adjacent in-bounds cells")]
    BadWall(Cell, Cell),
    #[error("slip probability {0} not in [0, 1]")]
    BadSlip(f64),
    #[error("label '{0}' is not in the automaton alphabet")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// Environment actions. Their discriminants are the action indices used by
/// the learner; ε-actions are numbered after them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvAction {
    North = 0,
    South = 1,
    East = 2,
    West = 3,
    Stay = 4,
}

impl EnvAction {
    pub const ALL: [EnvAction; 5] = [
        EnvAction::North,
        EnvAction::South,
        EnvAction::East,
        EnvAction::West,
        EnvAction::Stay,
    ];
    pub const MOVES: [EnvAction; 4] =
        [EnvAction::North, EnvAction::South, EnvAction::East, EnvAction::West];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Outcomes a slip can produce instead of `self`, in a fixed order.
    pub fn slip_alternatives(self) -> impl Iterator<Item = EnvAction> {
        EnvAction::MOVES.into_iter().filter(move |&m| m != self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub cell: Cell,
    pub absorbed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    width: usize,
    height: usize,
    slip: f64,
    labels: Vec<BTreeSet<String>>,
    /// Blocked adjacencies, stored with the smaller cell first.
    walls: BTreeSet<(Cell, Cell)>,
    starts: Vec<Cell>,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, slip: f64) -> Result<Self, GridError> {
        if !(0.0..=1.0).contains(&slip) {
            return Err(GridError::BadSlip(slip));
        }
        Ok(GridSpec {
            width,
            height,
            slip,
            labels: vec![BTreeSet::new(); width * height],
            walls: BTreeSet::new(),
            starts: Vec::new(),
        })
    }

    pub fn with_label(mut self, cell: Cell, ap: &str) -> Self {
        let i = self.index(cell);
        self.labels[i].insert(ap.to_string());
        self
    }

    pub fn with_wall(mut self, a: Cell, b: Cell) -> Result<Self, GridError> {
        self.add_wall(a, b)?;
        Ok(self)
    }

    pub fn with_start(mut self, cell: Cell) -> Result<Self, GridError> {
        if !self.in_bounds(cell) {
            return Err(GridError::StartOutOfBounds(cell));
        }
        self.starts.push(cell);
        Ok(self)
    }

    fn add_wall(&mut self, a: Cell, b: Cell) -> Result<(), GridError> {
        let adjacent = a.x.abs_diff(b.x) + a.y.abs_diff(b.y) == 1;
        if !adjacent || !self.in_bounds(a) || !self.in_bounds(b) {
            return Err(GridError::BadWall(a, b));
        }
        self.walls.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn slip(&self) -> f64 {
        self.slip
    }

    pub fn starts(&self) -> &[Cell] {
        &self.starts
    }

    pub fn walls(&self) -> impl Iterator<Item = &(Cell, Cell)> {
        self.walls.iter()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn cell_labels(&self, c: Cell) -> &BTreeSet<String> {
        &self.labels[self.index(c)]
    }

    /// Every proposition used anywhere on the grid, sorted.
    pub fn alphabet(&self) -> Vec<String> {
        let all: BTreeSet<&String> = self.labels.iter().flatten().collect();
        all.into_iter().cloned().collect()
    }

    pub fn is_goal(&self, c: Cell) -> bool {
        self.cell_labels(c).iter().any(|l| l.starts_with('g'))
    }

    pub fn is_blocked(&self, a: Cell, b: Cell) -> bool {
        self.walls.contains(&(a.min(b), a.max(b)))
    }

    /// Per-cell label sets encoded against `alphabet`.
    pub fn label_masks(&self, alphabet: &[String]) -> Result<Vec<LabelSet>, GridError> {
        self.labels
            .iter()
            .map(|set| {
                let mut mask = LabelSet::EMPTY;
                for l in set {
                    let i = alphabet
                        .iter()
                        .position(|a| a == l)
                        .ok_or_else(|| GridError::UnknownLabel(l.clone()))?;
                    mask.insert(i);
                }
                Ok(mask)
            })
            .collect()
    }

    /// Cell reached by moving from `c` in direction `dir`; walls and the
    /// boundary leave the agent in place.
    pub fn neighbor(&self, c: Cell, dir: EnvAction) -> Cell {
        let next = match dir {
            EnvAction::North if c.y > 0 => Cell::new(c.x, c.y - 1),
            EnvAction::South if c.y + 1 < self.height => Cell::new(c.x, c.y + 1),
            EnvAction::East if c.x + 1 < self.width => Cell::new(c.x + 1, c.y),
            EnvAction::West if c.x > 0 => Cell::new(c.x - 1, c.y),
            _ => c,
        };
        if next != c && self.is_blocked(c, next) {
            c
        } else {
            next
        }
    }

    /// Maps one uniform draw in `[0, 1)` to the direction actually taken.
    ///
    /// `[0, p)` keeps the command; the rest is split evenly over the slip
    /// alternatives in [`EnvAction::slip_alternatives`] order.
    pub fn resolve_slip(&self, cmd: EnvAction, u: f64) -> EnvAction {
        if u < self.slip {
            return cmd;
        }
        let alts: Vec<EnvAction> = cmd.slip_alternatives().collect();
        let share = (1.0 - self.slip) / alts.len() as f64;
        let mut acc = self.slip;
        for &alt in &alts {
            acc += share;
            if u < acc {
                return alt;
            }
        }
        *alts.last().unwrap()
    }

    pub fn initial_state(&self, agent: usize) -> AgentState {
        let cell = self.starts[agent];
        AgentState { cell, absorbed: self.is_goal(cell) }
    }

    /// One environment transition. Absorbed agents do not move and consume no
    /// randomness; otherwise exactly one uniform is drawn from `rng`.
    pub fn env_step<R: Rng + ?Sized>(&self, s: AgentState, a: EnvAction, rng: &mut R) -> AgentState {
        if s.absorbed {
            return s;
        }
        let u: f64 = rng.random();
        let dir = self.resolve_slip(a, u);
        let cell = self.neighbor(s.cell, dir);
        AgentState { cell, absorbed: self.is_goal(cell) }
    }

    pub fn labels_of(&self, s: AgentState) -> &BTreeSet<String> {
        self.cell_labels(s.cell)
    }
}

fn parse_cell(tok: &str, line: usize) -> Result<Cell, GridError> {
    let bad = || GridError::Syntax { line, msg: format!("expected 'x,y', got '{tok}'") };
    let (x, y) = tok.split_once(',').ok_or_else(bad)?;
    Ok(Cell::new(
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

/// Parses the `.grid` format described in the module docs.
pub fn parse_grid(text: &str) -> Result<GridSpec, GridError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Grid,
        Legend,
        Layout,
        Walls,
        Starts,
    }
    let mut section = Section::None;
    let mut slip = None;
    let mut legend: BTreeMap<char, BTreeSet<String>> = BTreeMap::new();
    let mut rows: Vec<(usize, Vec<char>)> = Vec::new();
    let mut walls = Vec::new();
    let mut starts = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |msg: String| GridError::Syntax { line, msg };
        if content.starts_with('[') && content.ends_with(']') {
            section = match &content[1..content.len() - 1] {
                "grid" => Section::Grid,
                "legend" => Section::Legend,
                "layout" => Section::Layout,
                "walls" => Section::Walls,
                "starts" => Section::Starts,
                other => return Err(syntax(format!("unknown section [{other}]"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(syntax("content before the first section".into())),
            Section::Grid => {
                let (k, v) = content
                    .split_once('=')
                    .ok_or_else(|| syntax(format!("expected key = value, got '{content}'")))?;
                match k.trim() {
                    "slip" => {
                        slip = Some(
                            v.trim()
                                .parse::<f64>()
                                .map_err(|_| syntax(format!("bad slip value '{}'", v.trim())))?,
                        )
                    }
                    other => return Err(syntax(format!("unknown grid key '{other}'"))),
                }
            }
            Section::Legend => {
                let (k, v) = content
                    .split_once('=')
                    .ok_or_else(|| syntax(format!("malformed legend entry '{content}'")))?;
                let mut glyph = k.trim().chars();
                let g = match (glyph.next(), glyph.next()) {
                    (Some(g), None) => g,
                    _ => return Err(syntax(format!("legend glyph must be one character: '{}'", k.trim()))),
                };
                if legend.contains_key(&g) {
                    return Err(syntax(format!("glyph '{g}' defined twice")));
                }
                let aps: BTreeSet<String> = v.split_whitespace().map(str::to_string).collect();
                if let Some(bad) = aps.iter().find(|a| !a.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')) {
                    return Err(syntax(format!("invalid proposition name '{bad}'")));
                }
                legend.insert(g, aps);
            }
            Section::Layout => rows.push((line, content.chars().collect())),
            Section::Walls => {
                let toks: Vec<&str> = content.split_whitespace().collect();
                let [a, b] = toks.as_slice() else {
                    return Err(syntax(format!("wall needs two cells, got '{content}'")));
                };
                walls.push((parse_cell(a, line)?, parse_cell(b, line)?));
            }
            Section::Starts => starts.push(parse_cell(content, line)?),
        }
    }

    let slip = slip.ok_or(GridError::Syntax { line: 0, msg: "missing slip in [grid]".into() })?;
    if rows.is_empty() {
        return Err(GridError::Syntax { line: 0, msg: "empty [layout]".into() });
    }
    let width = rows[0].1.len();
    let mut spec = GridSpec::new(width, rows.len(), slip)?;
    for (y, (line, row)) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(GridError::Syntax {
                line: *line,
                msg: format!("row has {} cells, expected {width}", row.len()),
            });
        }
        for (x, &g) in row.iter().enumerate() {
            let aps = match legend.get(&g) {
                Some(aps) => aps.clone(),
                None if g == '.' => BTreeSet::new(),
                None => return Err(GridError::UnknownGlyph { line: *line, glyph: g }),
            };
            let i = spec.index(Cell::new(x, y));
            spec.labels[i] = aps;
        }
    }
    for (a, b) in walls {
        spec.add_wall(a, b)?;
    }
    for s in starts {
        spec = spec.with_start(s)?;
    }
    Ok(spec)
}

const GLYPHS: &str = "abcdefhijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// Inverse of [`parse_grid`] up to glyph choice.
pub fn serialize_grid(spec: &GridSpec) -> String {
    let mut glyph_of: BTreeMap<&BTreeSet<String>, char> = BTreeMap::new();
    let mut pool = GLYPHS.chars();
    for set in &spec.labels {
        if !set.is_empty() && !glyph_of.contains_key(set) {
            glyph_of.insert(set, pool.next().expect("too many distinct label sets"));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "[grid]\nslip = {}", spec.slip);
    out.push_str("[legend]\n");
    let mut entries: Vec<(char, &BTreeSet<String>)> = glyph_of.iter().map(|(s, g)| (*g, *s)).collect();
    entries.sort();
    for (g, set) in entries {
        let names: Vec<&str> = set.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{g} = {}", names.join(" "));
    }
    out.push_str("[layout]\n");
    for y in 0..spec.height {
        for x in 0..spec.width {
            let set = spec.cell_labels(Cell::new(x, y));
            out.push(glyph_of.get(set).copied().unwrap_or('.'));
        }
        out.push('\n');
    }
    if !spec.walls.is_empty() {
        out.push_str("[walls]\n");
        for (a, b) in &spec.walls {
            let _ = writeln!(out, "{a} {b}");
        }
    }
    out.push_str("[starts]\n");
    for s in &spec.starts {
        let _ = writeln!(out, "{s}");
    }
    out
}
