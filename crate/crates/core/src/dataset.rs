//! Session datasets and their CSV form.
//!
//! One row per match:
//!
//! ```text
//! round,pair,p1_id,p2_id,world,p1_action,p2_action,bot_lineage
//! 1,0,3,7,a,go,left,0
//! ```

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameDesign, Outcome, P1Action, P2Action, World};
use crate::schedule::{MatchingSchedule, Pairing, PlayerId};

pub const CSV_HEADER: [&str; 8] = [
    "round",
    "pair",
    "p1_id",
    "p2_id",
    "world",
    "p1_action",
    "p2_action",
    "bot_lineage",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatchRecord {
    /// Round number, starting at 1.
    pub round: u32,
    /// Position of the pair within its round.
    pub pair: u32,
    pub p1: PlayerId,
    pub p2: PlayerId,
    pub outcome: Outcome,
    /// Set when a bot took part in this match.
    pub bot_lineage: bool,
}

/// The matches of one session, ordered by round.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionDataset {
    design: GameDesign,
    n_pairs: usize,
    n_rounds: usize,
    records: Vec<MatchRecord>,
}

impl SessionDataset {
    /// Builds a dataset, sorting records by round (stable) and checking that
    /// nobody plays twice in a round and nobody switches roles.
    pub fn new(design: GameDesign, records: Vec<MatchRecord>) -> Result<Self> {
        let mut records = records;
        records.sort_by_key(|r| r.round);
        let mut roles: HashMap<PlayerId, u8> = HashMap::new();
        let mut per_round: HashMap<u32, HashSet<PlayerId>> = HashMap::new();
        let mut pairs_per_round: HashMap<u32, usize> = HashMap::new();
        for r in &records {
            if r.round == 0 {
                return Err(Error::InvalidDataset("rounds are numbered from 1".into()));
            }
            if r.p1 == r.p2 {
                return Err(Error::InvalidDataset(format!(
                    "player {} matched with itself in round {}",
                    r.p1, r.round
                )));
            }
            for (id, role) in [(r.p1, 1u8), (r.p2, 2u8)] {
                if *roles.entry(id).or_insert(role) != role {
                    return Err(Error::InvalidDataset(format!(
                        "player {id} appears in both roles"
                    )));
                }
                if !per_round.entry(r.round).or_default().insert(id) {
                    return Err(Error::InvalidDataset(format!(
                        "player {id} plays twice in round {}",
                        r.round
                    )));
                }
            }
            *pairs_per_round.entry(r.round).or_default() += 1;
        }
        let n_rounds = records.iter().map(|r| r.round as usize).max().unwrap_or(0);
        let n_pairs = pairs_per_round.values().copied().max().unwrap_or(0);
        Ok(Self {
            design,
            n_pairs,
            n_rounds,
            records,
        })
    }

    /// Pairs each scheduled match with its outcome, in schedule order.
    pub fn from_schedule(
        design: GameDesign,
        schedule: &MatchingSchedule,
        outcomes: &[Outcome],
    ) -> Result<Self> {
        if outcomes.len() != schedule.n_matches() {
            return Err(Error::InvalidArgument(format!(
                "{} outcomes for {} scheduled matches",
                outcomes.len(),
                schedule.n_matches()
            )));
        }
        let mut it = outcomes.iter();
        let mut records = Vec::with_capacity(outcomes.len());
        for (t, round) in schedule.rounds().iter().enumerate() {
            for (k, &Pairing { p1, p2 }) in round.iter().enumerate() {
                records.push(MatchRecord {
                    round: t as u32 + 1,
                    pair: k as u32,
                    p1,
                    p2,
                    outcome: *it.next().expect("length checked"),
                    bot_lineage: false,
                });
            }
        }
        Self::new(design, records)
    }

    pub fn empty(design: GameDesign) -> Self {
        Self {
            design,
            n_pairs: 0,
            n_rounds: 0,
            records: Vec::new(),
        }
    }

    pub fn design(&self) -> &GameDesign {
        &self.design
    }

    pub fn with_design(mut self, design: GameDesign) -> Self {
        self.design = design;
        self
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn records(&self) -> &[MatchRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when every round has the same number of pairs, i.e.
    /// `len() == n_pairs * n_rounds`.
    pub fn is_complete(&self) -> bool {
        self.records.len() == self.n_pairs * self.n_rounds
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.records.iter().map(|r| r.outcome)
    }

    /// Keeps the records for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(&MatchRecord) -> bool) -> Self {
        let records: Vec<MatchRecord> = self.records.iter().copied().filter(|r| keep(r)).collect();
        Self::new(self.design, records).expect("a subset of a valid dataset is valid")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.serialize(CsvRow::from(r))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parses the session CSV. Errors carry the 1-based line number of the
    /// offending row.
    pub fn read_csv<R: Read>(design: GameDesign, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let names: Vec<&str> = header.iter().collect();
        if names != CSV_HEADER {
            return Err(Error::Parse {
                row: 1,
                message: format!(
                    "expected header `{}`, found `{}`",
                    CSV_HEADER.join(","),
                    names.join(",")
                ),
            });
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
            let err = |message: String| Error::Parse { row: line, message };
            let field = |i: usize| row.get(i).unwrap_or("");
            let int = |i: usize| -> Result<u32> {
                field(i)
                    .parse::<u32>()
                    .map_err(|_| err(format!("{} `{}` is not a non-negative integer", CSV_HEADER[i], field(i))))
            };
            let world: World = field(4).parse().map_err(err)?;
            let p1: P1Action = field(5).parse().map_err(err)?;
            let p2: P2Action = field(6).parse().map_err(err)?;
            let bot_lineage = match field(7) {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("bot_lineage `{other}` must be 0 or 1"))),
            };
            records.push(MatchRecord {
                round: int(0)?,
                pair: int(1)?,
                p1: int(2)?,
                p2: int(3)?,
                outcome: Outcome::new(world, p1, p2),
                bot_lineage,
            });
        }
        Self::new(design, records)
    }
}

#[derive(Serialize)]
struct CsvRow {
    round: u32,
    pair: u32,
    p1_id: PlayerId,
    p2_id: PlayerId,
    world: String,
    p1_action: String,
    p2_action: String,
    bot_lineage: u8,
}

impl From<&MatchRecord> for CsvRow {
    fn from(r: &MatchRecord) -> Self {
        Self {
            round: r.round,
            pair: r.pair,
            p1_id: r.p1,
            p2_id: r.p2,
            world: r.outcome.world.to_string(),
            p1_action: r.outcome.p1.to_string(),
            p2_action: r.outcome.p2.to_string(),
            bot_lineage: r.bot_lineage as u8,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::enumerate_outcomes;
    use crate::schedule::perfect_stranger_schedule;

    fn sample() -> SessionDataset {
        let s = perfect_stranger_schedule(10, 3, 5).unwrap();
        let outs = enumerate_outcomes();
        let outcomes: Vec<Outcome> = (0..15).map(|i| outs[(i * 3) % 8]).collect();
        SessionDataset::from_schedule(GameDesign::classic(), &s, &outcomes).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let ds = sample();
        assert!(ds.is_complete());
        assert_eq!(ds.len(), 15);
        let text = ds.to_csv_string();
        assert!(text.starts_with("round,pair,p1_id,p2_id,world,p1_action,p2_action,bot_lineage\n"));
        let back = SessionDataset::read_csv(GameDesign::classic(), text.as_bytes()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn bad_action_names_the_row() {
        let text = "round,pair,p1_id,p2_id,world,p1_action,p2_action,bot_lineage\n\
                    1,0,0,5,a,go,left,0\n\
                    1,1,1,6,b,jump,left,0\n";
        let err = SessionDataset::read_csv(GameDesign::classic(), text.as_bytes()).unwrap_err();
        match err {
            Error::Parse { row, message } => {
                assert_eq!(row, 3);
                assert!(message.contains("jump"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_role_switch_and_double_play() {
        let o = enumerate_outcomes()[0];
        let rec = |round, p1, p2| MatchRecord {
            round,
            pair: 0,
            p1,
            p2,
            outcome: o,
            bot_lineage: false,
        };
        assert!(SessionDataset::new(GameDesign::classic(), vec![rec(1, 0, 1), rec(2, 1, 2)]).is_err());
        assert!(SessionDataset::new(GameDesign::classic(), vec![rec(1, 0, 1), rec(1, 0, 2)]).is_err());
        assert!(SessionDataset::new(GameDesign::classic(), vec![rec(1, 0, 1), rec(2, 0, 1)]).is_ok());
    }

    #[test]
    fn wrong_header_is_rejected() {
        let text = "round,pair,p1,p2,world,p1_action,p2_action,bot_lineage\n";
        assert!(matches!(
            SessionDataset::read_csv(GameDesign::classic(), text.as_bytes()),
            Err(Error::Parse { row: 1, .. })
        ));
    }
}
