//! Who meets whom in each round.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type PlayerId = u32;

/// One pairing: a role-1 player and a role-2 player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pub p1: PlayerId,
    pub p2: PlayerId,
}

/// Pairings for every round. `rounds[t]` holds the pairings of round `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingSchedule {
    rounds: Vec<Vec<Pairing>>,
}

impl MatchingSchedule {
    pub fn from_rounds(rounds: Vec<Vec<Pairing>>) -> Result<Self> {
        if rounds.is_empty() || rounds.iter().any(|r| r.is_empty()) {
            return Err(Error::InvalidArgument("schedule has an empty round".into()));
        }
        for (t, round) in rounds.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for p in round {
                if p.p1 == p.p2 || !seen.insert(p.p1) || !seen.insert(p.p2) {
                    return Err(Error::InvalidArgument(format!(
                        "round {} uses a player more than once",
                        t + 1
                    )));
                }
            }
        }
        Ok(Self { rounds })
    }

    /// The same `n_pairs` partners meet in every round. Player `i` has
    /// role 1 and player `n_pairs + i` role 2.
    pub fn fixed_partners(n_pairs: usize, n_rounds: usize) -> Result<Self> {
        if n_pairs == 0 || n_rounds == 0 {
            return Err(Error::InvalidArgument(
                "need at least one pair and one round".into(),
            ));
        }
        let round: Vec<Pairing> = (0..n_pairs)
            .map(|i| Pairing {
                p1: i as PlayerId,
                p2: (n_pairs + i) as PlayerId,
            })
            .collect();
        Ok(Self {
            rounds: vec![round; n_rounds],
        })
    }

    /// Cyclic schedule without shuffling: in round `t` (from 0) role-1 player
    /// `i` meets role-2 player `n_pairs + (i + t) mod n_pairs`.
    pub fn rotation(n_pairs: usize, n_rounds: usize) -> Result<Self> {
        let role1: Vec<PlayerId> = (0..n_pairs as PlayerId).collect();
        let role2: Vec<PlayerId> = (n_pairs as PlayerId..2 * n_pairs as PlayerId).collect();
        rotate(&role1, &role2, n_rounds)
    }

    pub fn rounds(&self) -> &[Vec<Pairing>] {
        &self.rounds
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Pairs in the largest round.
    pub fn n_pairs(&self) -> usize {
        self.rounds.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn n_matches(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    /// Every player id appearing in the schedule, sorted.
    pub fn players(&self) -> Vec<PlayerId> {
        let mut ids: Vec<PlayerId> = self
            .rounds
            .iter()
            .flatten()
            .flat_map(|p| [p.p1, p.p2])
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// True when no role-1/role-2 pair meets twice.
    pub fn is_perfect_stranger(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.rounds.iter().flatten().all(|p| seen.insert((p.p1, p.p2)))
    }
}

fn rotate(role1: &[PlayerId], role2: &[PlayerId], n_rounds: usize) -> Result<MatchingSchedule> {
    let half = role1.len();
    if half == 0 || n_rounds == 0 {
        return Err(Error::InvalidArgument(
            "need at least one pair and one round".into(),
        ));
    }
    if n_rounds > half {
        return Err(Error::InfeasibleSchedule {
            n_rounds,
            per_role: half,
            needed: n_rounds,
        });
    }
    let rounds = (0..n_rounds)
        .map(|t| {
            (0..half)
                .map(|i| Pairing {
                    p1: role1[i],
                    p2: role2[(i + t) % half],
                })
                .collect()
        })
        .collect();
    Ok(MatchingSchedule { rounds })
}

/// A perfect-stranger schedule for `n_players` (half in each role).
///
/// Players `0..n/2` take role 1 and `n/2..n` role 2. The seed shuffles the
/// order within each role; pairings then follow a cyclic rotation, which
/// never repeats a pair as long as `n_rounds <= n_players / 2`.
pub fn perfect_stranger_schedule(
    n_players: usize,
    n_rounds: usize,
    seed: u64,
) -> Result<MatchingSchedule> {
    if n_players < 2 || n_players % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "n_players must be even and at least 2, got {n_players}"
        )));
    }
    let half = n_players / 2;
    if n_rounds > half {
        return Err(Error::InfeasibleSchedule {
            n_rounds,
            per_role: half,
            needed: n_rounds,
        });
    }
    let mut r = rng::stream(seed, "schedule");
    let mut role1: Vec<PlayerId> = (0..half as PlayerId).collect();
    let mut role2: Vec<PlayerId> = (half as PlayerId..n_players as PlayerId).collect();
    role1.shuffle(&mut r);
    role2.shuffle(&mut r);
    rotate(&role1, &role2, n_rounds)
}
