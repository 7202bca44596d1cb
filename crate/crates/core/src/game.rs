//! The Stop-Go game: design points, the eight match outcomes and payoffs.
//!
//! Nature draws world `a` with probability `pi` (world `b` otherwise) and
//! tells Player 1. Player 1 either stops, paying `(1, 1)`, or goes, in which
//! case Player 2 picks Left or Right without seeing the world:
//!
//! | world | Left     | Right    |
//! |-------|----------|----------|
//! | a     | (0, 2)   | (A, 0)   |
//! | b     | (2, 0)   | (0, A)   |
//!
//! Player 2's choice is recorded in every match, so a match has eight
//! possible outcomes even though the choice only matters after Go.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const A_MIN: f64 = 2.0;
pub const A_MAX: f64 = 6.0;
pub const PI_MIN: f64 = 0.1;
pub const PI_MAX: f64 = 0.9;

/// Dollars paid per payoff unit when showing payoffs to participants.
pub const DOLLARS_PER_UNIT: f64 = 3.0;

/// An experimental design: the maximum payoff `a` and the probability `pi`
/// of world `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameDesign {
    #[serde(rename = "A")]
    pub a: f64,
    pub pi: f64,
}

impl GameDesign {
    pub fn new(a: f64, pi: f64) -> Result<Self> {
        // small slack so lattice points computed in floating point validate
        const SLACK: f64 = 1e-9;
        if !(A_MIN - SLACK..=A_MAX + SLACK).contains(&a) {
            return Err(Error::InvalidDesign(format!(
                "A = {a} outside [{A_MIN}, {A_MAX}]"
            )));
        }
        if !(PI_MIN - SLACK..=PI_MAX + SLACK).contains(&pi) {
            return Err(Error::InvalidDesign(format!(
                "pi = {pi} outside [{PI_MIN}, {PI_MAX}]"
            )));
        }
        Ok(Self { a, pi })
    }

    /// The original laboratory design, `A = 3.33`, `pi = 0.5`.
    pub fn classic() -> Self {
        Self { a: 3.33, pi: 0.5 }
    }

    /// Probability that nature draws `world`.
    pub fn world_prob(&self, world: World) -> f64 {
        match world {
            World::A => self.pi,
            World::B => 1.0 - self.pi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum World {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum P1Action {
    Go,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum P2Action {
    Left,
    Right,
}

/// The result of one match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Outcome {
    pub world: World,
    pub p1: P1Action,
    pub p2: P2Action,
}

pub const NUM_OUTCOMES: usize = 8;

impl Outcome {
    pub const fn new(world: World, p1: P1Action, p2: P2Action) -> Self {
        Self { world, p1, p2 }
    }

    /// Position in the canonical ordering returned by [`enumerate_outcomes`]:
    /// world, then Player 1's action (Go first), then Player 2's (Left first).
    pub fn code(self) -> u8 {
        let w = match self.world {
            World::A => 0,
            World::B => 4,
        };
        let p1 = match self.p1 {
            P1Action::Go => 0,
            P1Action::Stop => 2,
        };
        let p2 = match self.p2 {
            P2Action::Left => 0,
            P2Action::Right => 1,
        };
        w | p1 | p2
    }

    pub fn from_code(code: u8) -> Self {
        debug_assert!((code as usize) < NUM_OUTCOMES);
        let world = if code & 4 == 0 { World::A } else { World::B };
        let p1 = if code & 2 == 0 { P1Action::Go } else { P1Action::Stop };
        let p2 = if code & 1 == 0 { P2Action::Left } else { P2Action::Right };
        Self { world, p1, p2 }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.world, self.p1, self.p2)
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            World::A => "a",
            World::B => "b",
        })
    }
}

impl fmt::Display for P1Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            P1Action::Go => "go",
            P1Action::Stop => "stop",
        })
    }
}

impl fmt::Display for P2Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            P2Action::Left => "left",
            P2Action::Right => "right",
        })
    }
}

impl FromStr for World {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(World::A),
            "b" => Ok(World::B),
            other => Err(format!("unknown world `{other}` (expected a|b)")),
        }
    }
}

impl FromStr for P1Action {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "go" => Ok(P1Action::Go),
            "stop" => Ok(P1Action::Stop),
            other => Err(format!("unknown player 1 action `{other}` (expected stop|go)")),
        }
    }
}

impl FromStr for P2Action {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(P2Action::Left),
            "right" => Ok(P2Action::Right),
            other => Err(format!("unknown player 2 action `{other}` (expected left|right)")),
        }
    }
}

/// Payoffs `(u1, u2)` in game units.
pub fn payoff(design: &GameDesign, outcome: Outcome) -> (f64, f64) {
    match (outcome.p1, outcome.world, outcome.p2) {
        (P1Action::Stop, _, _) => (1.0, 1.0),
        (P1Action::Go, World::A, P2Action::Left) => (0.0, 2.0),
        (P1Action::Go, World::A, P2Action::Right) => (design.a, 0.0),
        (P1Action::Go, World::B, P2Action::Left) => (2.0, 0.0),
        (P1Action::Go, World::B, P2Action::Right) => (0.0, design.a),
    }
}

/// Payoffs converted to the dollar amounts shown to participants.
pub fn payoff_dollars(design: &GameDesign, outcome: Outcome) -> (f64, f64) {
    let (u1, u2) = payoff(design, outcome);
    (u1 * DOLLARS_PER_UNIT, u2 * DOLLARS_PER_UNIT)
}

/// All eight outcomes, starting with a-go-left.
pub fn enumerate_outcomes() -> [Outcome; NUM_OUTCOMES] {
    std::array::from_fn(|i| Outcome::from_code(i as u8))
}

/// Number of distinct datasets for `n_pairs` pairs over `n_rounds` rounds:
/// `8^(n_pairs * n_rounds)`.
pub fn count_datasets(n_pairs: u32, n_rounds: u32) -> Result<BigUint> {
    if n_pairs == 0 || n_rounds == 0 {
        return Err(Error::InvalidArgument(
            "n_pairs and n_rounds must be at least 1".into(),
        ));
    }
    let matches = n_pairs
        .checked_mul(n_rounds)
        .ok_or_else(|| Error::InvalidArgument("n_pairs * n_rounds overflows".into()))?;
    Ok(BigUint::from(NUM_OUTCOMES as u32).pow(matches))
}
