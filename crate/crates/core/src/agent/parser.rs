//! Deterministic instruction parsing over a closed scene vocabulary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Scene;

const DEFAULT_SYNONYMS: &str = include_str!("../../scenes/synonyms.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    On,
    NextTo,
    Above,
    Below,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::On, Direction::NextTo, Direction::Above, Direction::Below];

    /// Unit offset from the landmark centre, in grid units.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Direction::On => (0, 0),
            Direction::NextTo => (10, 0),
            Direction::Above => (0, -10),
            Direction::Below => (0, 10),
        }
    }

    /// The phrase used in chat, e.g. `next to`.
    pub fn phrase(self) -> &'static str {
        match self {
            Direction::On => "on",
            Direction::NextTo => "next to",
            Direction::Above => "above",
            Direction::Below => "below",
        }
    }

    pub fn from_phrase(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.phrase() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParsedInstruction {
    pub target: String,
    pub landmark: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no movable object mentioned")]
    NoTarget,
    #[error("no landmark mentioned")]
    NoLandmark,
    #[error("no spatial relation mentioned")]
    NoDirection,
    #[error("answer outside the allowed vocabulary: {0:?}")]
    OutOfVocabulary(String),
    #[error("parser unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Error)]
pub enum SynonymError {
    #[error("cannot read synonym table {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("cannot parse synonym table: {0}")]
    Parse(String),
}

/// Surface phrase → canonical term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynonymTable(BTreeMap<String, String>);

impl Default for SynonymTable {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_SYNONYMS).expect("builtin synonym table parses")
    }
}

impl SynonymTable {
    pub fn empty() -> Self {
        Self(BTreeMap::new())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SynonymError> {
        toml::from_str(text).map_err(|e| SynonymError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SynonymError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynonymError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn insert(&mut self, phrase: &str, canonical: &str) {
        self.0.insert(phrase.to_lowercase(), canonical.to_string());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Phrases that map onto `canonical`.
    pub fn paraphrases<'a>(&'a self, canonical: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.iter().filter(move |(_, c)| *c == canonical).map(|(p, _)| p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cue {
    Target,
    Landmark,
    Direction(Direction),
}

#[derive(Debug, Clone)]
struct Phrase {
    tokens: Vec<String>,
    cue: Cue,
    canonical: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Mention {
    cue: Cue,
    canonical: String,
}

const DIRECTION_PHRASES: &[(&str, Direction)] = &[
    ("on top of", Direction::Above),
    ("on top", Direction::Above),
    ("above", Direction::Above),
    ("over", Direction::Above),
    ("atop", Direction::Above),
    ("below", Direction::Below),
    ("under", Direction::Below),
    ("underneath", Direction::Below),
    ("beneath", Direction::Below),
    ("next to", Direction::NextTo),
    ("beside", Direction::NextTo),
    ("near", Direction::NextTo),
    ("by", Direction::NextTo),
    ("alongside", Direction::NextTo),
    ("to the right", Direction::NextTo),
    ("to the left", Direction::NextTo),
    ("on the right", Direction::NextTo),
    ("on the left", Direction::NextTo),
    ("right of", Direction::NextTo),
    ("left of", Direction::NextTo),
    ("to the side of", Direction::NextTo),
    ("on", Direction::On),
    ("onto", Direction::On),
    ("upon", Direction::On),
    ("in", Direction::On),
    ("into", Direction::On),
    ("inside", Direction::On),
];

const PLACEMENT_VERBS: &[&str] = &["put", "place", "move", "drag", "drop", "set", "position", "stick"];

const QUESTION_CUES: &[&str] = &[
    "do you have",
    "what objects",
    "which objects",
    "what do you have",
    "what do you see",
    "how many",
    "where is",
    "where are",
];

const COMPLETION_CUES: &[&str] = &[
    "done",
    "ready",
    "finished",
    "next round",
    "that s all",
    "thats all",
    "all set",
];

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn contains_seq(tokens: &[String], phrase: &str) -> bool {
    let needle: Vec<&str> = phrase.split(' ').collect();
    tokens
        .windows(needle.len())
        .any(|w| w.iter().zip(&needle).all(|(a, b)| a == b))
}

/// Closed vocabulary of one scene: its objects, its landmarks, and the
/// synonyms that map onto them.
#[derive(Debug, Clone)]
pub struct Lexicon {
    targets: Vec<String>,
    landmarks: Vec<String>,
    phrases: Vec<Phrase>,
}

impl Lexicon {
    pub fn for_scene(scene: &Scene, synonyms: &SynonymTable) -> Self {
        let targets: Vec<String> = scene.objects().to_vec();
        let landmarks: Vec<String> = scene.landmarks().keys().cloned().collect();
        let mut phrases = Vec::new();
        let mut push = |surface: &str, cue: Cue, canonical: &str| {
            phrases.push(Phrase {
                tokens: tokenize(surface),
                cue,
                canonical: canonical.to_string(),
            })
        };
        for t in &targets {
            push(t, Cue::Target, t);
        }
        for l in &landmarks {
            push(l, Cue::Landmark, l);
        }
        for (surface, canonical) in synonyms.iter() {
            if targets.iter().any(|t| t == canonical) {
                push(surface, Cue::Target, canonical);
            } else if landmarks.iter().any(|l| l == canonical) {
                push(surface, Cue::Landmark, canonical);
            }
        }
        for (surface, d) in DIRECTION_PHRASES {
            push(surface, Cue::Direction(*d), d.phrase());
        }
        // Longest phrases first so "cowboy hat" beats "cowboy" and "on top of" beats "on".
        phrases.sort_by_key(|p| std::cmp::Reverse(p.tokens.len()));
        Self {
            targets,
            landmarks,
            phrases,
        }
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn landmarks(&self) -> &[String] {
        &self.landmarks
    }

    pub fn is_target(&self, s: &str) -> bool {
        self.targets.iter().any(|t| t == s)
    }

    pub fn is_landmark(&self, s: &str) -> bool {
        self.landmarks.iter().any(|l| l == s)
    }

    /// Left-to-right scan, longest phrase at each position.
    fn mentions(&self, tokens: &[String]) -> Vec<Mention> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.phrases.iter().find(|p| {
                !p.tokens.is_empty()
                    && tokens.len() - i >= p.tokens.len()
                    && tokens[i..i + p.tokens.len()] == p.tokens[..]
            });
            match hit {
                Some(p) => {
                    out.push(Mention {
                        cue: p.cue,
                        canonical: p.canonical.clone(),
                    });
                    i += p.tokens.len();
                }
                None => i += 1,
            }
        }
        out
    }
}

/// The three parsing capabilities the agent needs. Implementations return
/// only terms from the lexicon, or a typed failure.
pub trait ParserAdapter: Send {
    fn name(&self) -> &'static str;

    fn is_instruction(&self, lexicon: &Lexicon, text: &str) -> Result<bool, ParseError>;

    fn extract_target_landmark(&self, lexicon: &Lexicon, text: &str) -> Result<(String, String), ParseError>;

    fn extract_direction(&self, lexicon: &Lexicon, text: &str) -> Result<Direction, ParseError>;

    /// `Ok(None)` when the message is not an instruction.
    fn parse(&self, lexicon: &Lexicon, text: &str) -> Result<Option<ParsedInstruction>, ParseError> {
        if !self.is_instruction(lexicon, text)? {
            return Ok(None);
        }
        let (target, landmark) = self.extract_target_landmark(lexicon, text)?;
        let direction = self.extract_direction(lexicon, text)?;
        Ok(Some(ParsedInstruction {
            target,
            landmark,
            direction,
        }))
    }
}

/// Keyword and synonym matching; no external calls.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleParser;

impl RuleParser {
    pub fn is_question(text: &str) -> bool {
        let tokens = tokenize(text);
        QUESTION_CUES.iter().any(|q| contains_seq(&tokens, q))
    }

    pub fn signals_completion(text: &str) -> bool {
        let tokens = tokenize(text);
        COMPLETION_CUES.iter().any(|q| contains_seq(&tokens, q))
    }
}

impl ParserAdapter for RuleParser {
    fn name(&self) -> &'static str {
        "rule"
    }

    fn is_instruction(&self, lexicon: &Lexicon, text: &str) -> Result<bool, ParseError> {
        if Self::is_question(text) {
            return Ok(false);
        }
        let tokens = tokenize(text);
        let mentions = lexicon.mentions(&tokens);
        let has = |f: fn(&Cue) -> bool| mentions.iter().any(|m| f(&m.cue));
        let target = has(|c| *c == Cue::Target);
        let landmark = has(|c| *c == Cue::Landmark);
        let spatial = has(|c| matches!(c, Cue::Direction(_)));
        let verb = tokens.iter().any(|t| PLACEMENT_VERBS.contains(&t.as_str()));
        Ok((target && landmark) || (verb && (landmark || spatial)) || ((target || landmark) && spatial))
    }

    fn extract_target_landmark(&self, lexicon: &Lexicon, text: &str) -> Result<(String, String), ParseError> {
        let mentions = lexicon.mentions(&tokenize(text));
        let target = mentions
            .iter()
            .find(|m| m.cue == Cue::Target)
            .ok_or(ParseError::NoTarget)?;
        let landmark = mentions
            .iter()
            .rev()
            .find(|m| m.cue == Cue::Landmark)
            .ok_or(ParseError::NoLandmark)?;
        Ok((target.canonical.clone(), landmark.canonical.clone()))
    }

    fn extract_direction(&self, lexicon: &Lexicon, text: &str) -> Result<Direction, ParseError> {
        lexicon
            .mentions(&tokenize(text))
            .into_iter()
            .find_map(|m| match m.cue {
                Cue::Direction(d) => Some(d),
                _ => None,
            })
            .ok_or(ParseError::NoDirection)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kitchen() -> Lexicon {
        Lexicon::for_scene(&Scene::kitchen(), &SynonymTable::default())
    }

    #[test]
    fn tokenizer_lowercases_and_splits_punctuation() {
        assert_eq!(tokenize("Let's PUT the cap, ok?"), ["let", "s", "put", "the", "cap", "ok"]);
    }

    #[test]
    fn longest_phrase_wins() {
        let lex = kitchen();
        let p = RuleParser;
        assert_eq!(
            p.extract_target_landmark(&lex, "cowboy hat above the stove").unwrap(),
            ("cowboy".to_string(), "stove".to_string())
        );
        assert_eq!(p.extract_direction(&lex, "cap on top of the oven").unwrap(), Direction::Above);
        assert_eq!(p.extract_direction(&lex, "cap on the left of the oven").unwrap(), Direction::NextTo);
        assert_eq!(p.extract_direction(&lex, "cap on the oven").unwrap(), Direction::On);
    }

    #[test]
    fn missing_parts_are_typed_failures() {
        let lex = kitchen();
        let p = RuleParser;
        assert_eq!(p.extract_target_landmark(&lex, "put it on the fridge"), Err(ParseError::NoTarget));
        assert_eq!(p.extract_target_landmark(&lex, "put the pillow somewhere"), Err(ParseError::NoLandmark));
        assert_eq!(p.extract_direction(&lex, "pillow fridge"), Err(ParseError::NoDirection));
        assert_eq!(p.parse(&lex, "hello there"), Ok(None));
    }

    #[test]
    fn canonical_instructions_parse() {
        let lex = kitchen();
        for d in Direction::ALL {
            let text = format!("put the garbage {} the sink", d.phrase());
            assert_eq!(
                RuleParser.parse(&lex, &text).unwrap(),
                Some(ParsedInstruction {
                    target: "garbage".into(),
                    landmark: "sink".into(),
                    direction: d
                })
            );
        }
    }

    #[test]
    fn scene_lexicon_limits_vocabulary() {
        let living = Lexicon::for_scene(&Scene::livingroom(), &SynonymTable::default());
        assert!(living.is_landmark("sofa"));
        assert!(!living.is_landmark("fridge"));
        assert_eq!(
            RuleParser.extract_target_landmark(&living, "put the jeans next to the couch").unwrap(),
            ("pants".to_string(), "sofa".to_string())
        );
        assert_eq!(
            RuleParser.extract_target_landmark(&living, "put the jeans next to the fridge"),
            Err(ParseError::NoLandmark)
        );
    }

    #[test]
    fn questions_and_completion_cues() {
        assert!(RuleParser::is_question("Do you have a toaster?"));
        assert!(!RuleParser::is_question("put the cap on the sink"));
        assert!(RuleParser::signals_completion("All objects placed, I'm ready."));
        assert!(RuleParser::signals_completion("that's all"));
        assert!(!RuleParser::signals_completion("put the cap on the sink"));
    }

    #[test]
    fn synonym_table_loads_and_extends() {
        let mut table = SynonymTable::empty();
        table.insert("Bin", "garbage");
        let lex = Lexicon::for_scene(&Scene::kitchen(), &table);
        assert_eq!(
            RuleParser.extract_target_landmark(&lex, "bin below the oven").unwrap(),
            ("garbage".to_string(), "oven".to_string())
        );
        let default = SynonymTable::default();
        let mut cap: Vec<_> = default.paraphrases("cap").collect();
        cap.sort();
        assert_eq!(cap, ["blue hat", "flat cap", "peaky blinders hat"]);
    }

    #[test]
    fn parsing_is_deterministic() {
        let lex = kitchen();
        let text = "let's place the cushion on the ceiling light";
        let first = RuleParser.parse(&lex, text);
        for _ in 0..10 {
            assert_eq!(RuleParser.parse(&lex, text), first);
        }
    }
}
