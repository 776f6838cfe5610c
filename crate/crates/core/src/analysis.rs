//! Dominance scores over round transcripts, strategy labels, and the
//! score-by-strategy report.
//!
//! Per player and round: `volume` is the share of messages (out of 100) and
//! `verbosity` the mean message length. With A the higher-volume player,
//! `RD = (vol_A - vol_B) / (vol_A + vol_B)` and
//! `d_A = verbosity_A * L(RD)`, `d_B = verbosity_B * (1 - L(RD))`, where `L`
//! is the logistic function.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::{load_transcripts, LogRecord, RecordKind};
use crate::game::Rational;
use crate::session::ChatMessage;

pub const DEFAULT_THETA: f64 = 1.3;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("transcript has no messages")]
    EmptyTranscript,
    #[error("no games to report on")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    #[default]
    Tokens,
    Chars,
}

impl LengthUnit {
    pub fn measure(self, text: &str) -> i64 {
        match self {
            LengthUnit::Tokens => text.split_whitespace().count() as i64,
            LengthUnit::Chars => text.chars().count() as i64,
        }
    }
}

impl std::str::FromStr for LengthUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tokens" => Ok(LengthUnit::Tokens),
            "chars" => Ok(LengthUnit::Chars),
            other => Err(format!("unknown length unit {other}; expected tokens or chars")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub round: u8,
    pub player_ids: Vec<String>,
    pub messages: Vec<ChatMessage>,
}

impl Transcript {
    pub fn new(round: u8, player_ids: Vec<String>, messages: Vec<ChatMessage>) -> Self {
        Self {
            round,
            player_ids,
            messages,
        }
    }

    /// Convenience constructor from `(sender, text)` pairs.
    pub fn from_lines<'a>(round: u8, players: [&str; 2], lines: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let messages = lines
            .into_iter()
            .enumerate()
            .map(|(i, (sender, text))| ChatMessage {
                sender: sender.to_string(),
                text: text.to_string(),
                timestamp_ms: i as i64,
                round,
            })
            .collect();
        Self::new(round, players.iter().map(|p| p.to_string()).collect(), messages)
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    fn by(&self, player: &str) -> impl Iterator<Item = &ChatMessage> + '_ {
        let player = player.to_string();
        self.messages.iter().filter(move |m| m.sender == player)
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn volume(t: &Transcript, player: &str) -> Result<Rational, AnalysisError> {
    if t.is_empty() {
        return Err(AnalysisError::EmptyTranscript);
    }
    Ok(Rational::new(100 * t.by(player).count() as i64, t.messages.len() as i64))
}

pub fn verbosity(t: &Transcript, player: &str, unit: LengthUnit) -> Rational {
    let (count, total) = t.by(player).fold((0i64, 0i64), |(n, sum), m| (n + 1, sum + unit.measure(&m.text)));
    if count == 0 {
        Rational::zero()
    } else {
        Rational::new(total, count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceResult {
    pub d: BTreeMap<String, f64>,
    pub volume: BTreeMap<String, Rational>,
    pub verbosity: BTreeMap<String, Rational>,
    pub rd: Rational,
}

impl DominanceResult {
    /// `|d_A - d_B|`.
    pub fn diff(&self) -> f64 {
        let mut it = self.d.values();
        match (it.next(), it.next()) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        }
    }
}

pub fn dominance(t: &Transcript, unit: LengthUnit) -> Result<DominanceResult, AnalysisError> {
    if t.is_empty() {
        return Err(AnalysisError::EmptyTranscript);
    }
    let mut players = t.player_ids.clone();
    for m in &t.messages {
        if !players.contains(&m.sender) {
            players.push(m.sender.clone());
        }
    }
    let vols: Vec<Rational> = players.iter().map(|p| volume(t, p)).collect::<Result<_, _>>()?;
    let verbs: Vec<Rational> = players.iter().map(|p| verbosity(t, p, unit)).collect();

    // Index of the higher-volume player; ties are symmetric so the choice is moot.
    let a = (0..players.len()).max_by(|&i, &j| vols[i].cmp(&vols[j]).then(j.cmp(&i))).unwrap_or(0);
    let b = (0..players.len()).find(|&i| i != a);
    let vol_b = b.map_or(Rational::zero(), |b| vols[b]);
    let rd = (vols[a] - vol_b) / (vols[a] + vol_b);
    let weight = logistic(to_f64(rd));

    let mut d = BTreeMap::new();
    d.insert(players[a].clone(), to_f64(verbs[a]) * weight);
    if let Some(b) = b {
        d.insert(players[b].clone(), to_f64(verbs[b]) * (1.0 - weight));
    }
    Ok(DominanceResult {
        d,
        volume: players.iter().cloned().zip(vols).collect(),
        verbosity: players.into_iter().zip(verbs).collect(),
        rd,
    })
}

pub fn dominance_diff(t: &Transcript, unit: LengthUnit) -> Result<f64, AnalysisError> {
    Ok(dominance(t, unit)?.diff())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyLabel {
    Leader,
    BackAndForth,
    GripTightening,
    GripLoosening,
}

impl StrategyLabel {
    pub const ALL: [StrategyLabel; 4] = [
        StrategyLabel::Leader,
        StrategyLabel::BackAndForth,
        StrategyLabel::GripTightening,
        StrategyLabel::GripLoosening,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyLabel::Leader => "leader",
            StrategyLabel::BackAndForth => "back_and_forth",
            StrategyLabel::GripTightening => "grip_tightening",
            StrategyLabel::GripLoosening => "grip_loosening",
        }
    }
}

/// Threshold rule over the per-round dominance differences.
pub fn classify_strategy(diff_r1: f64, diff_r2: f64, theta: f64) -> StrategyLabel {
    match (diff_r1 >= theta, diff_r2 >= theta) {
        (true, true) => StrategyLabel::Leader,
        (false, false) => StrategyLabel::BackAndForth,
        (false, true) => StrategyLabel::GripTightening,
        (true, false) => StrategyLabel::GripLoosening,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundScore {
    pub score: f64,
    pub bonus: bool,
}

/// One finished game as far as reporting is concerned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub game_id: String,
    pub transcripts: Vec<Transcript>,
    pub scores: Vec<RoundScore>,
}

impl GameOutcome {
    /// Collects transcripts and `round_end` scores from a room log.
    pub fn from_log(game_id: impl Into<String>, records: &[LogRecord]) -> Self {
        let scores = records
            .iter()
            .filter(|r| r.kind == RecordKind::RoundEnd)
            .filter_map(|r| {
                Some(RoundScore {
                    score: r.payload.get("score")?.as_f64()?,
                    bonus: r.payload.get("bonus")?.as_bool()?,
                })
            })
            .collect();
        Self {
            game_id: game_id.into(),
            transcripts: load_transcripts(records),
            scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameClassification {
    pub game_id: String,
    pub diff_round1: f64,
    pub diff_round2: f64,
    pub label: StrategyLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: StrategyLabel,
    pub games: usize,
    pub mean_diff_round1: f64,
    pub mean_diff_round2: f64,
    pub mean_score_round1: f64,
    pub mean_score_round2: f64,
    pub bonus_pct_round1: f64,
    pub bonus_pct_round2: f64,
}

/// Parallel arrays ready for a grouped bar chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub strategies: Vec<StrategyLabel>,
    pub mean_score_round1: Vec<f64>,
    pub mean_score_round2: Vec<f64>,
    pub bonus_pct_round1: Vec<f64>,
    pub bonus_pct_round2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub theta: f64,
    pub length_unit: LengthUnit,
    pub rows: Vec<StrategyRow>,
    pub games: Vec<GameClassification>,
    pub excluded: Vec<String>,
    pub series: PlotSeries,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Groups games by strategy label. Games without two scored rounds or with
/// a silent round are listed in `excluded`.
pub fn report(games: &[GameOutcome], theta: f64, unit: LengthUnit) -> Result<ReportTable, AnalysisError> {
    if games.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut classified: Vec<(GameClassification, &GameOutcome)> = Vec::new();
    let mut excluded = Vec::new();
    for game in games {
        let usable = game.scores.len() >= 2 && game.transcripts.len() >= 2;
        let diffs = usable
            .then(|| {
                let d1 = dominance_diff(&game.transcripts[0], unit).ok()?;
                let d2 = dominance_diff(&game.transcripts[1], unit).ok()?;
                Some((d1, d2))
            })
            .flatten();
        match diffs {
            Some((d1, d2)) => classified.push((
                GameClassification {
                    game_id: game.game_id.clone(),
                    diff_round1: d1,
                    diff_round2: d2,
                    label: classify_strategy(d1, d2, theta),
                },
                game,
            )),
            None => excluded.push(game.game_id.clone()),
        }
    }

    let mut rows = Vec::new();
    for label in StrategyLabel::ALL {
        let members: Vec<_> = classified.iter().filter(|(c, _)| c.label == label).collect();
        if members.is_empty() {
            continue;
        }
        let pct = |round: usize| {
            100.0 * members.iter().filter(|(_, g)| g.scores[round].bonus).count() as f64 / members.len() as f64
        };
        rows.push(StrategyRow {
            strategy: label,
            games: members.len(),
            mean_diff_round1: mean(members.iter().map(|(c, _)| c.diff_round1)),
            mean_diff_round2: mean(members.iter().map(|(c, _)| c.diff_round2)),
            mean_score_round1: mean(members.iter().map(|(_, g)| g.scores[0].score)),
            mean_score_round2: mean(members.iter().map(|(_, g)| g.scores[1].score)),
            bonus_pct_round1: pct(0),
            bonus_pct_round2: pct(1),
        });
    }
    let series = PlotSeries {
        strategies: rows.iter().map(|r| r.strategy).collect(),
        mean_score_round1: rows.iter().map(|r| r.mean_score_round1).collect(),
        mean_score_round2: rows.iter().map(|r| r.mean_score_round2).collect(),
        bonus_pct_round1: rows.iter().map(|r| r.bonus_pct_round1).collect(),
        bonus_pct_round2: rows.iter().map(|r| r.bonus_pct_round2).collect(),
    };
    Ok(ReportTable {
        theta,
        length_unit: unit,
        rows,
        games: classified.into_iter().map(|(c, _)| c).collect(),
        excluded,
        series,
    })
}

impl ReportTable {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>5} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9}",
            "strategy", "games", "diff r1", "diff r2", "score r1", "score r2", "bonus r1", "bonus r2"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<16} {:>5} {:>8.3} {:>8.3} {:>9.2} {:>9.2} {:>8.1}% {:>8.1}%",
                r.strategy.as_str(),
                r.games,
                r.mean_diff_round1,
                r.mean_diff_round2,
                r.mean_score_round1,
                r.mean_score_round2,
                r.bonus_pct_round1,
                r.bonus_pct_round2
            );
        }
        let _ = writeln!(
            out,
            "theta {} ({:?}); {} games classified, {} excluded",
            self.theta,
            self.length_unit,
            self.games.len(),
            self.excluded.len()
        );
        out
    }
}
