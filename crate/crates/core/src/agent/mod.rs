//! Follower agent: asks its partner for instructions once per round, then
//! only reacts. Each partner message is checked for an instruction, parsed
//! into a (target, landmark, direction) triple, and resolved to a position
//! with fixed offsets from the landmark's centre.

pub mod llm;
pub mod parser;

use std::sync::Arc;

use crate::game::{validate_placement, Board, Point, Scene, SceneCatalog, Verdict};
use crate::protocol::{placements_from_wire, ClientMessage, ServerMessage};

pub use llm::{CompletionBackend, LlmConfig, RemoteLlmParser, ENV_ENDPOINT, ENV_KEY, ENV_MODEL, REQUEST_TIMEOUT};
pub use parser::{
    Direction, Lexicon, ParseError, ParsedInstruction, ParserAdapter, RuleParser, SynonymTable,
};

/// Offset multipliers tried when the resolved slot is occupied.
pub const OFFSET_MULTIPLIERS: [i64; 3] = [1, 2, 4];

pub const OPENING_MESSAGE: &str =
    "Hi! I'll follow your lead. Tell me where to put each object, for example: put the pillow next to the fridge.";

pub fn resolve_position(landmark_center: Point, direction: Direction) -> Point {
    resolve_scaled(landmark_center, direction, 1)
}

/// Position with the directional offset multiplied by `k`.
pub fn resolve_scaled(landmark_center: Point, direction: Direction, k: i64) -> Point {
    let (dx, dy) = direction.offset();
    Point::new(landmark_center.x + k * dx, landmark_center.y + k * dy)
}

struct RoundView {
    scene: Scene,
    lexicon: Lexicon,
    board: Board,
    confirmed: Board,
}

pub struct BaselineAgent {
    parser: Box<dyn ParserAdapter>,
    fallback: RuleParser,
    catalog: Arc<SceneCatalog>,
    synonyms: SynonymTable,
    me: Option<String>,
    round: Option<RoundView>,
}

impl BaselineAgent {
    pub fn new(parser: Box<dyn ParserAdapter>, catalog: Arc<SceneCatalog>, synonyms: SynonymTable) -> Self {
        Self {
            parser,
            fallback: RuleParser,
            catalog,
            synonyms,
            me: None,
            round: None,
        }
    }

    pub fn with_rule_parser(catalog: Arc<SceneCatalog>) -> Self {
        Self::new(Box::new(RuleParser), catalog, SynonymTable::default())
    }

    pub fn parser_name(&self) -> &'static str {
        self.parser.name()
    }

    pub fn player_id(&self) -> Option<&str> {
        self.me.as_deref()
    }

    /// The agent's current view of its own board.
    pub fn board(&self) -> Option<&Board> {
        self.round.as_ref().map(|r| &r.board)
    }

    /// Reacts to one inbound frame.
    pub fn step(&mut self, frame: &ServerMessage) -> Vec<ClientMessage> {
        match frame {
            ServerMessage::Joined { player_id } => {
                self.me = Some(player_id.clone());
                Vec::new()
            }
            ServerMessage::RoundStart { scene, placements, .. } => {
                let Ok(scene) = self.catalog.get(scene).cloned() else {
                    self.round = None;
                    return vec![chat("I don't know this room, sorry.")];
                };
                let board = placements_from_wire(placements);
                self.round = Some(RoundView {
                    lexicon: Lexicon::for_scene(&scene, &self.synonyms),
                    scene,
                    confirmed: board.clone(),
                    board,
                });
                vec![chat(OPENING_MESSAGE)]
            }
            ServerMessage::Chat { from, text, .. } => {
                if self.me.as_deref() == Some(from.as_str()) {
                    return Vec::new();
                }
                self.on_partner_message(text)
            }
            ServerMessage::MoveOk { object, x, y } => {
                if let Some(r) = &mut self.round {
                    r.confirmed.set(object, Point::new(*x, *y));
                    r.board.set(object, Point::new(*x, *y));
                }
                Vec::new()
            }
            ServerMessage::MoveRejected { object, .. } => {
                if let Some(r) = &mut self.round {
                    if let Some(p) = r.confirmed.get(object) {
                        r.board.set(object, p);
                    }
                }
                Vec::new()
            }
            ServerMessage::RoundEnd { .. } | ServerMessage::GameEnd { .. } | ServerMessage::Error { .. } => Vec::new(),
        }
    }

    fn parse(&self, lexicon: &Lexicon, text: &str) -> Result<Option<ParsedInstruction>, ParseError> {
        match self.parser.parse(lexicon, text) {
            Err(ParseError::Unavailable(_)) => self.fallback.parse(lexicon, text),
            other => other,
        }
    }

    fn on_partner_message(&mut self, text: &str) -> Vec<ClientMessage> {
        let Some(view) = &self.round else {
            return Vec::new();
        };
        let parsed = self.parse(&view.lexicon, text);
        let view = self.round.as_mut().expect("checked above");
        match parsed {
            Ok(Some(instr)) => place(view, &instr),
            Ok(None) if RuleParser::signals_completion(text) => {
                vec![chat("Great, I'm ready too."), ClientMessage::Ready]
            }
            Ok(None) if RuleParser::is_question(text) => {
                vec![chat(&format!("I have these objects: {}.", view.scene.objects().join(", ")))]
            }
            Ok(None) => vec![chat(
                "Tell me where to put an object, for example: put the pillow next to the fridge.",
            )],
            Err(ParseError::NoTarget) => vec![chat("Sorry, which object should I move?")],
            Err(ParseError::NoLandmark) => {
                let names = view.lexicon.landmarks().join(", ");
                vec![chat(&format!("Sorry, where should it go? Which landmark do you mean: {names}?"))]
            }
            Err(ParseError::NoDirection) => {
                vec![chat("Should I put it on, next to, above or below that landmark?")]
            }
            Err(_) => vec![chat("Sorry, I didn't understand. Could you rephrase?")],
        }
    }
}

fn chat(text: &str) -> ClientMessage {
    ClientMessage::Chat { text: text.to_string() }
}

/// Resolves the instruction on the agent's own board, widening the offset
/// on overlap, and either moves or asks for another spot.
fn place(view: &mut RoundView, instr: &ParsedInstruction) -> Vec<ClientMessage> {
    let ParsedInstruction {
        target,
        landmark,
        direction,
    } = instr;
    let Some(center) = view.scene.landmark(landmark) else {
        return vec![chat("Sorry, I can't find that landmark. Could you pick another one?")];
    };
    let tries = if *direction == Direction::On { &OFFSET_MULTIPLIERS[..1] } else { &OFFSET_MULTIPLIERS[..] };
    let spot = format!("{} the {landmark}", direction.phrase());
    for &k in tries {
        let p = resolve_scaled(center, *direction, k);
        match validate_placement(&view.scene, &view.board, target, p) {
            Ok(Verdict::Ok) => {
                view.board.set(target, p);
                let confirm = if k == 1 {
                    format!("Done: the {target} is {spot}.")
                } else {
                    format!("The spot {spot} was taken, so I put the {target} {} units further out.", 10 * k)
                };
                return vec![
                    ClientMessage::Move {
                        object: target.clone(),
                        x: p.x,
                        y: p.y,
                    },
                    chat(&confirm),
                ];
            }
            Ok(Verdict::Overlap) => continue,
            Ok(Verdict::OutOfBounds) | Err(_) => break,
        }
    }
    vec![chat(&format!(
        "I can't put the {target} {spot}, that spot is taken. Could you give me another spot?"
    ))]
}
