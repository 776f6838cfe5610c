//! In-process games between scripted policies and/or the baseline agent.
//!
//! Every frame crosses a JSON encode/decode on its way between a policy and
//! the room, so games exercise the same wire format as networked clients.
//! Scripts talk in a controlled language:
//! `put the <object> <on|next to|above|below> the <landmark>`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{resolve_position, BaselineAgent, Direction, SynonymTable};
use crate::analysis::{dominance_diff, report, AnalysisError, GameOutcome, LengthUnit, ReportTable};
use crate::eventlog::LogRecord;
use crate::game::{validate_placement, Board, Point, Scene, SceneCatalog, Score, Verdict};
use crate::protocol::{placements_from_wire, ClientMessage, ServerMessage};
use crate::session::{Command, GameState, Phase, Room, SessionError};

/// Consecutive idle steps after which a game is aborted.
pub const DEADLOCK_STEPS: usize = 50;
/// Hard cap on delivered frames per game.
pub const MAX_STEPS: usize = 20_000;
/// Slots a proposer tries per object before giving up on it.
pub const MAX_SLOT_ATTEMPTS: usize = 12;
/// Logical clock tick per command.
pub const TICK_MS: i64 = 250;

pub const END_MESSAGE: &str = "All objects placed, I'm ready.";
pub const FOLLOW_OK: &str = "Done.";
pub const FOLLOW_BLOCKED: &str = "That spot is taken, can you pick another one?";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown policy {0}")]
    UnknownPolicy(String),
    #[error("bad matchup {0:?}; expected <policy>:<policy>")]
    BadMatchup(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// A participant that reacts to server frames with client frames.
pub trait Policy {
    fn policy_id(&self) -> &str;

    fn observe(&mut self, frame: &ServerMessage) -> Vec<ClientMessage>;

    /// Called when no frames are pending for either player.
    fn idle(&mut self) -> Vec<ClientMessage> {
        Vec::new()
    }
}

pub fn instruction_text(object: &str, direction: Direction, landmark: &str) -> String {
    format!("put the {object} {} the {landmark}", direction.phrase())
}

/// Exact inverse of [`instruction_text`] over the scene's own terms.
pub fn parse_instruction_text(scene: &Scene, text: &str) -> Option<(String, Direction, String)> {
    let text = text.trim();
    for object in scene.objects() {
        for landmark in scene.landmarks().keys() {
            for d in Direction::ALL {
                if text == instruction_text(object, d, landmark) {
                    return Some((object.clone(), d, landmark.clone()));
                }
            }
        }
    }
    None
}

fn skip_text(object: &str) -> String {
    format!("Skipping the {object}.")
}

fn parse_skip(scene: &Scene, text: &str) -> Option<String> {
    scene.objects().iter().find(|o| text.trim() == skip_text(o)).cloned()
}

fn is_failure_reply(text: &str) -> bool {
    text.contains("taken") || text.trim_end().ends_with('?')
}

fn announces_ready(text: &str) -> bool {
    crate::agent::parser::tokenize(text).iter().any(|t| t == "ready")
}

/// Moves needed so `object` can go to `p`: each blocker that is not yet
/// agreed gets parked on the first free cell, scanning from the far corner.
/// `None` if the spot is out of bounds or held by an agreed object.
fn clear_spot(
    scene: &Scene,
    board: &Board,
    agreed: &BTreeSet<String>,
    object: &str,
    p: Point,
) -> Option<Vec<(String, Point)>> {
    if !scene.inside(p) || !scene.has_object(object) {
        return None;
    }
    let blockers: Vec<String> = board
        .iter()
        .filter(|(o, q)| *o != object && scene.overlaps(p, *q))
        .map(|(o, _)| o.to_string())
        .collect();
    if blockers.iter().any(|o| agreed.contains(o)) {
        return None;
    }
    // Parking moves land before `object` moves, so they must clear both its
    // current spot and `p`.
    let mut board = board.clone();
    let step = scene.object_extent().max(1) as usize;
    let mut moves = Vec::new();
    for other in blockers {
        let spot = (0..=scene.height()).rev().step_by(step).flat_map(|y| {
            (0..=scene.width()).rev().step_by(step).map(move |x| Point::new(x, y))
        })
        .find(|&q| !scene.overlaps(q, p) && validate_placement(scene, &board, &other, q) == Ok(Verdict::Ok))?;
        board.set(&other, spot);
        moves.push((other, spot));
    }
    Some(moves)
}

fn chat(text: impl Into<String>) -> ClientMessage {
    ClientMessage::Chat { text: text.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Proposes every placement.
    Lead,
    /// Carries out the partner's proposals.
    Follow,
    /// Proposes every other object, carries out the rest.
    Alternate,
}

/// Paraphrase noise applied to proposals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    /// Chance of swapping a canonical term for a synonym.
    pub synonym_rate: f64,
    /// Chance of swapping a term for a word outside every vocabulary.
    pub oov_rate: f64,
}

const OOV_WORDS: &[&str] = &["thingamajig", "whatchamacallit", "doohickey", "gizmo"];

#[derive(Debug, Clone, PartialEq, Eq)]
struct Slot {
    landmark: String,
    direction: Direction,
}

#[derive(Debug, Clone)]
struct Pending {
    index: usize,
    slot: Slot,
}

#[derive(Debug, Clone)]
struct ScriptRound {
    scene: Scene,
    board: Board,
    mode: Mode,
    slots: Vec<Slot>,
    pending: Option<Pending>,
    /// Slots the partner reported as taken this round.
    blocked: Vec<Slot>,
    attempts: BTreeMap<usize, usize>,
    /// Objects both players have placed on the same spot.
    agreed: BTreeSet<String>,
    done: bool,
}

/// Rule-driven player used for the leader, follower, back-and-forth and
/// grip-change strategies.
pub struct ScriptedPolicy {
    id: String,
    seat: usize,
    modes: [Mode; 2],
    seed: u64,
    catalog: Arc<SceneCatalog>,
    noise: Option<(Noise, SynonymTable)>,
    rng: ChaCha8Rng,
    me: Option<String>,
    round: Option<ScriptRound>,
}

impl ScriptedPolicy {
    pub fn new(id: &str, seat: usize, modes: [Mode; 2], seed: u64, catalog: Arc<SceneCatalog>) -> Self {
        Self {
            id: id.to_string(),
            seat,
            modes,
            seed,
            catalog,
            noise: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            me: None,
            round: None,
        }
    }

    pub fn leader(seat: usize, seed: u64, catalog: Arc<SceneCatalog>) -> Self {
        Self::new("leader", seat, [Mode::Lead; 2], seed, catalog)
    }

    pub fn follower(seat: usize, seed: u64, catalog: Arc<SceneCatalog>) -> Self {
        Self::new("follower", seat, [Mode::Follow; 2], seed, catalog)
    }

    pub fn alternating(seat: usize, seed: u64, catalog: Arc<SceneCatalog>) -> Self {
        Self::new("alternating", seat, [Mode::Alternate; 2], seed, catalog)
    }

    pub fn with_noise(mut self, noise: Noise, synonyms: SynonymTable) -> Self {
        self.noise = Some((noise, synonyms));
        self
    }

    fn owns(&self, mode: Mode, index: usize) -> bool {
        match mode {
            Mode::Lead => true,
            Mode::Follow => false,
            Mode::Alternate => index % 2 == self.seat,
        }
    }

    fn start_round(&mut self, round: u8, scene: &str, board: Board) -> Vec<ClientMessage> {
        let Ok(scene) = self.catalog.get(scene).cloned() else {
            self.round = None;
            return Vec::new();
        };
        let mut slots: Vec<Slot> = scene
            .landmarks()
            .keys()
            .flat_map(|l| {
                [Direction::NextTo, Direction::Above, Direction::Below, Direction::On].map(|direction| Slot {
                    landmark: l.clone(),
                    direction,
                })
            })
            .collect();
        let shift = (self.seed as usize).wrapping_add(usize::from(round)) % slots.len();
        slots.rotate_left(shift);
        let mode = self.modes[usize::from(round.clamp(1, 2) - 1)];
        self.round = Some(ScriptRound {
            scene,
            board,
            mode,
            slots,
            pending: None,
            blocked: Vec::new(),
            attempts: BTreeMap::new(),
            agreed: BTreeSet::new(),
            done: false,
        });
        if self.owns(mode, 0) {
            self.propose(0)
        } else {
            Vec::new()
        }
    }

    /// Places `index` on the own board at a fresh slot and tells the partner.
    fn propose(&mut self, index: usize) -> Vec<ClientMessage> {
        let r = self.round.as_mut().expect("round active");
        let object = r.scene.objects()[index].clone();
        let attempts = r.attempts.entry(index).or_default();
        *attempts += 1;
        let choice = (*attempts <= MAX_SLOT_ATTEMPTS)
            .then(|| {
                r.slots.iter().find(|s| {
                    !r.blocked.contains(s)
                        && r.scene.landmark(&s.landmark).is_some_and(|c| {
                            validate_placement(&r.scene, &r.board, &object, resolve_position(c, s.direction))
                                == Ok(Verdict::Ok)
                        })
                })
            })
            .flatten()
            .cloned();
        let Some(slot) = choice else {
            r.pending = None;
            let mut out = vec![chat(skip_text(&object))];
            out.extend(self.resolved(index, true));
            return out;
        };
        let p = resolve_position(r.scene.landmark(&slot.landmark).expect("slot landmark exists"), slot.direction);
        r.board.set(&object, p);
        r.pending = Some(Pending {
            index,
            slot: slot.clone(),
        });
        let text = self.render(&object, slot.direction, &slot.landmark);
        vec![ClientMessage::Move { object, x: p.x, y: p.y }, chat(text)]
    }

    fn render(&mut self, object: &str, direction: Direction, landmark: &str) -> String {
        let Some((noise, synonyms)) = &self.noise else {
            return instruction_text(object, direction, landmark);
        };
        let term = |canonical: &str, rng: &mut ChaCha8Rng| {
            let mut word = canonical.to_string();
            let options: Vec<&str> = synonyms.paraphrases(canonical).collect();
            if rng.gen_bool(noise.synonym_rate) {
                if let Some(p) = options.choose(rng) {
                    word = p.to_string();
                }
            }
            if rng.gen_bool(noise.oov_rate) {
                word = OOV_WORDS.choose(rng).expect("non-empty").to_string();
            }
            word
        };
        let object = term(object, &mut self.rng);
        let landmark = term(landmark, &mut self.rng);
        instruction_text(&object, direction, &landmark)
    }

    /// Object `index` is settled. `by_me` says whether this player sent the
    /// settling message (a "done" reply or a skip).
    fn resolved(&mut self, index: usize, by_me: bool) -> Vec<ClientMessage> {
        let r = self.round.as_mut().expect("round active");
        r.pending = None;
        let next = index + 1;
        let mode = r.mode;
        if next >= r.scene.objects().len() {
            let announce = match mode {
                Mode::Lead => true,
                Mode::Follow => false,
                Mode::Alternate => by_me,
            };
            if announce && !r.done {
                r.done = true;
                return vec![chat(END_MESSAGE), ClientMessage::Ready];
            }
            return Vec::new();
        }
        if self.owns(mode, next) {
            self.propose(next)
        } else {
            Vec::new()
        }
    }

    /// Carry out a partner proposal on the own board, first parking any
    /// not-yet-agreed objects that sit on the target spot.
    fn follow(&mut self, object: &str, direction: Direction, landmark: &str) -> Vec<ClientMessage> {
        let r = self.round.as_mut().expect("round active");
        let Some(center) = r.scene.landmark(landmark) else {
            return vec![chat(FOLLOW_BLOCKED)];
        };
        let p = resolve_position(center, direction);
        let Some(parked) = clear_spot(&r.scene, &r.board, &r.agreed, object, p) else {
            return vec![chat(FOLLOW_BLOCKED)];
        };
        let mut out = Vec::new();
        for (other, q) in parked {
            r.board.set(&other, q);
            out.push(ClientMessage::Move { object: other, x: q.x, y: q.y });
        }
        r.board.set(object, p);
        r.agreed.insert(object.to_string());
        out.push(ClientMessage::Move { object: object.to_string(), x: p.x, y: p.y });
        out.push(chat(FOLLOW_OK));
        if r.mode == Mode::Alternate {
            let index = r.scene.objects().iter().position(|o| o == object).expect("parsed from scene");
            out.extend(self.resolved(index, true));
        }
        out
    }

    fn on_partner_chat(&mut self, text: &str) -> Vec<ClientMessage> {
        let Some(r) = &self.round else { return Vec::new() };
        if r.done {
            return Vec::new();
        }
        let mode = r.mode;
        if let Some(pending) = r.pending.clone() {
            if text.trim_start().starts_with("Done") {
                let r = self.round.as_mut().expect("round active");
                let object = r.scene.objects()[pending.index].clone();
                r.agreed.insert(object);
                return self.resolved(pending.index, false);
            }
            if is_failure_reply(text) {
                let r = self.round.as_mut().expect("round active");
                r.blocked.push(pending.slot);
                return self.propose(pending.index);
            }
        }
        if mode != Mode::Lead {
            if let Some((object, d, landmark)) = parse_instruction_text(&r.scene, text) {
                return self.follow(&object, d, &landmark);
            }
            if let Some(object) = parse_skip(&r.scene, text) {
                let index = r.scene.objects().iter().position(|o| *o == object).expect("parsed from scene");
                if mode == Mode::Alternate {
                    return self.resolved(index, false);
                }
                return Vec::new();
            }
            if announces_ready(text) {
                let r = self.round.as_mut().expect("round active");
                r.done = true;
                return vec![ClientMessage::Ready];
            }
        }
        Vec::new()
    }
}

impl Policy for ScriptedPolicy {
    fn policy_id(&self) -> &str {
        &self.id
    }

    fn observe(&mut self, frame: &ServerMessage) -> Vec<ClientMessage> {
        match frame {
            ServerMessage::Joined { player_id } => {
                self.me = Some(player_id.clone());
                Vec::new()
            }
            ServerMessage::RoundStart { round, scene, placements } => {
                self.start_round(*round, scene, placements_from_wire(placements))
            }
            ServerMessage::Chat { from, text, .. } if self.me.as_deref() != Some(from.as_str()) => {
                self.on_partner_chat(text)
            }
            ServerMessage::MoveRejected { .. } => {
                // Own board tracking assumed the move would land; a rejection means
                // the script's view is stale, so stop proposing this round.
                if let Some(r) = &mut self.round {
                    r.done = true;
                }
                Vec::new()
            }
            _ => Vec::new(),
        }
    }
}

/// Leader script whose proposals are paraphrased through the synonym table
/// and, at `oov_rate`, garbled with unknown words.
pub fn noisy_leader(
    synonym_rate: f64,
    oov_rate: f64,
    seat: usize,
    seed: u64,
    catalog: Arc<SceneCatalog>,
) -> ScriptedPolicy {
    let mut p = ScriptedPolicy::leader(seat, seed, catalog).with_noise(
        Noise {
            synonym_rate: synonym_rate.clamp(0.0, 1.0),
            oov_rate: oov_rate.clamp(0.0, 1.0),
        },
        SynonymTable::default(),
    );
    p.id = "noisy-leader".to_string();
    p
}

/// The baseline agent as a harness policy.
pub struct BaselineAgentPolicy {
    agent: BaselineAgent,
}

impl BaselineAgentPolicy {
    pub fn new(agent: BaselineAgent) -> Self {
        Self { agent }
    }
}

impl Policy for BaselineAgentPolicy {
    fn policy_id(&self) -> &str {
        "agent"
    }

    fn observe(&mut self, frame: &ServerMessage) -> Vec<ClientMessage> {
        self.agent.step(frame)
    }
}

pub const POLICY_NAMES: &[&str] = &[
    "leader",
    "follower",
    "alternating",
    "agent",
    "noisy-leader",
    "tighten-lead",
    "tighten-follow",
    "loosen-lead",
    "loosen-follow",
];

/// Builds a shipped policy by name.
pub fn policy_by_name(
    name: &str,
    seat: usize,
    seed: u64,
    catalog: Arc<SceneCatalog>,
) -> Result<Box<dyn Policy>, HarnessError> {
    use Mode::*;
    let scripted = |id: &str, modes| Box::new(ScriptedPolicy::new(id, seat, modes, seed, catalog.clone()));
    Ok(match name {
        "leader" => scripted(name, [Lead, Lead]),
        "follower" => scripted(name, [Follow, Follow]),
        "alternating" => scripted(name, [Alternate, Alternate]),
        "tighten-lead" => scripted(name, [Alternate, Lead]),
        "tighten-follow" => scripted(name, [Alternate, Follow]),
        "loosen-lead" => scripted(name, [Lead, Alternate]),
        "loosen-follow" => scripted(name, [Follow, Alternate]),
        "noisy-leader" => Box::new(noisy_leader(1.0, 0.0, seat, seed, catalog)),
        "agent" => Box::new(BaselineAgentPolicy::new(BaselineAgent::with_rule_parser(catalog))),
        other => return Err(HarnessError::UnknownPolicy(other.to_string())),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matchup {
    pub a: String,
    pub b: String,
}

impl Matchup {
    pub fn new(a: &str, b: &str) -> Self {
        Self {
            a: a.to_string(),
            b: b.to_string(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}:{}", self.a, self.b)
    }
}

impl std::str::FromStr for Matchup {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(Self::new(a, b)),
            _ => Err(HarnessError::BadMatchup(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    pub room_id: String,
    pub seed: u64,
    pub policy_ids: [String; 2],
    pub player_ids: [String; 2],
    pub scores: Vec<Score>,
    pub log: Vec<LogRecord>,
    pub final_state: GameState,
    /// Every frame delivered to each player, in delivery order.
    pub frames: [Vec<ServerMessage>; 2],
    /// Provenance violations found while routing frames.
    pub privacy_violations: Vec<String>,
    pub aborted: bool,
    pub steps: usize,
}

impl GameRecord {
    pub fn log_text(&self) -> String {
        self.log.iter().map(|r| r.to_line() + "\n").collect()
    }

    pub fn transcripts(&self) -> Vec<crate::analysis::Transcript> {
        crate::eventlog::load_transcripts(&self.log)
    }

    pub fn outcome(&self) -> GameOutcome {
        GameOutcome::from_log(self.room_id.clone(), &self.log)
    }

    pub fn score_values(&self) -> Vec<f64> {
        self.scores.iter().map(Score::as_f64).collect()
    }
}

struct Table<'p> {
    room: Room,
    policies: [&'p mut dyn Policy; 2],
    ids: [String; 2],
    queues: [VecDeque<String>; 2],
    frames: [Vec<ServerMessage>; 2],
    log: Vec<LogRecord>,
    violations: Vec<String>,
    clock: i64,
}

impl Table<'_> {
    fn side_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|p| p == id)
    }

    fn tick(&mut self) -> i64 {
        self.clock += TICK_MS;
        self.clock
    }

    fn deliver(&mut self, step: crate::session::Step, origin: Option<usize>) {
        for out in &step.outbound {
            let Some(side) = self.side_of(&out.to) else { continue };
            match &out.msg {
                ServerMessage::RoundStart { placements, .. } => {
                    if self.room.state().boards.get(&out.to) != Some(&placements_from_wire(placements)) {
                        self.violations.push(format!("round_start to {} is not its own board", out.to));
                    }
                }
                ServerMessage::MoveOk { .. } | ServerMessage::MoveRejected { .. } if origin != Some(side) => {
                    self.violations.push(format!("move result for another player delivered to {}", out.to));
                }
                _ => {}
            }
            self.queues[side].push_back(serde_json::to_string(&out.msg).expect("frames serialize"));
        }
        self.log.extend(step.records);
    }

    fn submit(&mut self, side: usize, msg: ClientMessage) {
        let wire = serde_json::to_string(&msg).expect("frames serialize");
        let msg: ClientMessage = serde_json::from_str(&wire).expect("own frames parse");
        let Some(command) = Command::from_client(&self.ids[side], msg) else { return };
        let now = self.tick();
        match self.room.handle(command, now) {
            Ok(step) => self.deliver(step, Some(side)),
            Err(e) => {
                let frame = serde_json::to_string(&e.to_frame()).expect("frames serialize");
                self.queues[side].push_back(frame);
            }
        }
    }
}

/// Plays one full game. Deterministic for fixed policies and seed.
pub fn run_game(
    a: &mut dyn Policy,
    b: &mut dyn Policy,
    seed: u64,
    catalog: Arc<SceneCatalog>,
) -> Result<GameRecord, HarnessError> {
    let room_id = format!("{}-vs-{}-s{seed}", a.policy_id(), b.policy_id());
    let policy_ids = [a.policy_id().to_string(), b.policy_id().to_string()];
    let mut table = Table {
        room: Room::new(room_id.clone(), seed, catalog)?,
        policies: [a, b],
        ids: [String::new(), String::new()],
        queues: [VecDeque::new(), VecDeque::new()],
        frames: [Vec::new(), Vec::new()],
        log: Vec::new(),
        violations: Vec::new(),
        clock: 0,
    };
    for side in 0..2 {
        let now = table.tick();
        let name = table.policies[side].policy_id().to_string();
        let (id, step) = table.room.join(&name, now)?;
        table.ids[side] = id;
        table.deliver(step, Some(side));
    }

    let mut idle = 0;
    let mut steps = 0;
    let mut aborted = false;
    loop {
        let mut progressed = false;
        for side in 0..2 {
            let Some(wire) = table.queues[side].pop_front() else { continue };
            progressed = true;
            steps += 1;
            let frame: ServerMessage = serde_json::from_str(&wire).expect("server frames parse");
            let actions = table.policies[side].observe(&frame);
            table.frames[side].push(frame);
            for action in actions {
                table.submit(side, action);
            }
        }
        if table.room.state().phase == Phase::Finished && table.queues.iter().all(VecDeque::is_empty) {
            break;
        }
        if !progressed {
            for side in 0..2 {
                for action in table.policies[side].idle() {
                    progressed = true;
                    table.submit(side, action);
                }
            }
        }
        idle = if progressed { 0 } else { idle + 1 };
        if idle >= DEADLOCK_STEPS || steps >= MAX_STEPS {
            aborted = true;
            if table.room.state().phase != Phase::Finished {
                let now = table.tick();
                let leaver = table.ids[0].clone();
                let step = table.room.handle(Command::Leave { player: leaver }, now)?;
                table.deliver(step, None);
            }
            break;
        }
    }

    for side in 0..2 {
        while let Some(wire) = table.queues[side].pop_front() {
            table.frames[side].push(serde_json::from_str(&wire).expect("server frames parse"));
        }
    }
    let state = table.room.state().clone();
    Ok(GameRecord {
        room_id,
        seed,
        policy_ids,
        player_ids: table.ids,
        scores: state.scores.clone(),
        log: table.log,
        final_state: state,
        frames: table.frames,
        privacy_violations: table.violations,
        aborted,
        steps,
    })
}

/// Plays a named matchup; seat 0 is the first policy.
pub fn run_matchup(matchup: &Matchup, seed: u64, catalog: Arc<SceneCatalog>) -> Result<GameRecord, HarnessError> {
    let mut a = policy_by_name(&matchup.a, 0, seed, catalog.clone())?;
    let mut b = policy_by_name(&matchup.b, 1, seed, catalog.clone())?;
    run_game(a.as_mut(), b.as_mut(), seed, catalog)
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub matchups: Vec<Matchup>,
    pub seeds: Vec<u64>,
    pub theta: f64,
    pub length_unit: LengthUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupSummary {
    pub matchup: String,
    pub games: usize,
    pub aborted: usize,
    pub mean_diff_round1: f64,
    pub mean_diff_round2: f64,
    pub mean_score_round1: f64,
    pub mean_score_round2: f64,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub records: Vec<(Matchup, GameRecord)>,
    pub summary: Vec<MatchupSummary>,
    pub report: ReportTable,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Runs every matchup over every seed and reports on the results.
pub fn batch_run(config: &BatchConfig, catalog: Arc<SceneCatalog>) -> Result<BatchResult, HarnessError> {
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for matchup in &config.matchups {
        let mut diffs = [Vec::new(), Vec::new()];
        let mut scores = [Vec::new(), Vec::new()];
        let mut aborted = 0;
        for &seed in &config.seeds {
            let record = run_matchup(matchup, seed, catalog.clone())?;
            aborted += usize::from(record.aborted);
            for (round, t) in record.transcripts().iter().take(2).enumerate() {
                if let Ok(d) = dominance_diff(t, config.length_unit) {
                    diffs[round].push(d);
                }
            }
            for (round, s) in record.scores.iter().take(2).enumerate() {
                scores[round].push(s.as_f64());
            }
            records.push((matchup.clone(), record));
        }
        summary.push(MatchupSummary {
            matchup: matchup.label(),
            games: config.seeds.len(),
            aborted,
            mean_diff_round1: mean(&diffs[0]),
            mean_diff_round2: mean(&diffs[1]),
            mean_score_round1: mean(&scores[0]),
            mean_score_round2: mean(&scores[1]),
        });
    }
    let outcomes: Vec<GameOutcome> = records.iter().map(|(_, r)| r.outcome()).collect();
    let report = report(&outcomes, config.theta, config.length_unit)?;
    Ok(BatchResult {
        records,
        summary,
        report,
    })
}

/// Board positions a policy could have seen; used by tests.
pub fn own_placements(record: &GameRecord, side: usize) -> Vec<(String, Point)> {
    record.frames[side]
        .iter()
        .flat_map(|f| match f {
            ServerMessage::RoundStart { placements, .. } => {
                placements.iter().map(|e| (e.object.clone(), Point::new(e.x, e.y))).collect()
            }
            ServerMessage::MoveOk { object, x, y } => vec![(object.clone(), Point::new(*x, *y))],
            _ => Vec::new(),
        })
        .collect()
}
