//! Game records.

use std::path::Path;

use ggp_core::CompiledGame;
use ggp_knowledge::xml::{self, elements, name, text, XmlWriter};
use ggp_player::MatchResult;

use crate::error::{LearnError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RecordState {
    pub number: usize,
    /// Fact texts kept verbatim.
    pub facts: Vec<String>,
    /// (role, move text) pairs; empty for the terminal state.
    pub moves: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameRecord {
    pub id: String,
    /// (role, final score)
    pub players: Vec<(String, u32)>,
    pub states: Vec<RecordState>,
}

impl GameRecord {
    pub fn from_match(g: &CompiledGame, id: &str, m: &MatchResult) -> GameRecord {
        let roles = g.role_names();
        let states = m
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| RecordState {
                number: i,
                facts: g.state_terms(s).iter().map(|t| t.to_string()).collect(),
                moves: m
                    .moves
                    .get(i)
                    .map(|jm| {
                        jm.iter()
                            .enumerate()
                            .map(|(r, mv)| (roles[r].to_string(), g.move_term(r, mv).to_string()))
                            .collect()
                    })
                    .unwrap_or_default(),
            })
            .collect();
        GameRecord {
            id: id.to_string(),
            players: roles.iter().zip(&m.goals).map(|(r, &s)| (r.to_string(), s)).collect(),
            states,
        }
    }

    pub fn score(&self, role: &str) -> Option<u32> {
        self.players.iter().find(|p| p.0 == role).map(|p| p.1)
    }

    pub fn to_xml(&self) -> String {
        let mut w = XmlWriter::new();
        w.open("Match", &[("Id", self.id.clone())]);
        for (role, score) in &self.players {
            w.open("Player", &[]);
            w.leaf("Role", role);
            w.leaf("Score", &score.to_string());
            w.close("Player");
        }
        for s in &self.states {
            w.open("State", &[("Number", s.number.to_string())]);
            for f in &s.facts {
                w.leaf("Fact", f);
            }
            for (role, mv) in &s.moves {
                w.open("Move", &[]);
                w.leaf("Role", role);
                w.leaf("MoveFact", mv);
                w.close("Move");
            }
            w.close("State");
        }
        w.close("Match");
        w.finish()
    }

    pub fn from_xml(src: &str) -> Result<GameRecord> {
        let bad = |m: String| LearnError::Record(m);
        let doc = xml::parse(src)?;
        let root = doc.root_element();
        if name(root) != "Match" {
            return Err(bad(format!("root element <{}>", name(root))));
        }
        let id = root.attribute("Id").ok_or_else(|| bad("Match without Id".into()))?.to_string();
        let mut players = Vec::new();
        let mut states = Vec::new();
        let leaf = |n: xml::Node<'_, '_>, tag: &str| -> Result<String> {
            Ok(text(xml::child(n, tag)?).to_string())
        };
        for n in elements(root) {
            match name(n) {
                "Player" => {
                    let role = leaf(n, "Role")?;
                    let score = leaf(n, "Score")?;
                    let score = score.parse().map_err(|_| bad(format!("score {score:?}")))?;
                    players.push((role, score));
                }
                "State" => {
                    let number = n
                        .attribute("Number")
                        .and_then(|x| x.parse().ok())
                        .ok_or_else(|| bad("State without Number".into()))?;
                    let mut st = RecordState { number, facts: Vec::new(), moves: Vec::new() };
                    for c in elements(n) {
                        match name(c) {
                            "Fact" => st.facts.push(text(c).to_string()),
                            "Move" => st.moves.push((leaf(c, "Role")?, leaf(c, "MoveFact")?)),
                            other => return Err(bad(format!("unexpected <{other}> in State"))),
                        }
                    }
                    states.push(st);
                }
                other => return Err(bad(format!("unexpected <{other}> in Match"))),
            }
        }
        if states.is_empty() {
            return Err(bad(format!("match {id} has no states")));
        }
        Ok(GameRecord { id, players, states })
    }

    pub fn load(path: &Path) -> Result<GameRecord> {
        GameRecord::from_xml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_xml())?;
        Ok(())
    }
}

/// All records in a directory, ordered by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<GameRecord>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "xml"))
        .collect();
    paths.sort();
    paths.iter().map(|p| GameRecord::load(p)).collect()
}
