//! Parser adapter backed by a remote text-completion model.
//!
//! Each capability sends a fixed few-shot prompt followed by the user's
//! message; the model's answer is accepted only if it exactly names terms
//! from the closed vocabulary.

use std::time::Duration;

use super::parser::{Direction, Lexicon, ParseError, ParserAdapter};

pub const ENV_ENDPOINT: &str = "AGENT_LLM_ENDPOINT";
pub const ENV_KEY: &str = "AGENT_LLM_KEY";
pub const ENV_MODEL: &str = "AGENT_LLM_MODEL";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-instruct";
pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(10);

pub const INSTRUCTION_PROMPT: &str = "you are playing a game with another player in which you have to follow their instructions about where to put certain objects. i will give you a message and i want you to tell me if it contains a set of instructions. don't provide explanation, just give me the output (True or False).
examples:
[user 1]: place the lamp on the fridge
[you]: True

[user 1]: can you put the knife in the drawer?
[you]: True

[user 1]: do you have a toaster?
[you]: False

[user 1]: what objects do you have?
[you]: False

[user 1']: let's place the pan on top of the lamp
[you]: True

[user 1]: put hat on sink
[you]: True

[user 1]: lamp on toilet
[you]: True";

pub const TARGET_LANDMARK_PROMPT: &str = "i will give you a set of instructions and i want you to extract two things: one, the object that should be moved. then, i want you to compare it to the following four words and return the one it is most close to. the objects are: garbage, cowboy, cap, pants, pillow. next, i want you to extract the location where the object should be placed. then, match the output place with one of the possible places: fridge, counter, toaster, lamp, stove, oven, sink. don't provide explanation, just give me the output. for example:
user 1: put the pillow to the right of the fridge
you: pillow, fridge

user 1: put the jeans on the stove
you: pants, stove

user 1: let's place the cushion on the ceiling light
you: pillow, lamp

user 1: place the garbagebag in the upper right corner of the counter
you: garbage, counter

user 1: cowboy hat to the left of the water faucet
you: cowboy, sink

user 1: the other hat on the right behind the pants
you: cap, toaster

user 1: garbage bag on top of lamp stand
you: garbage, lamp

user 1: let's place the blue hat on the toaster
you: cap, toaster

user 1: put peaky blinders hat in the oven
you: cap, oven";

pub const DIRECTION_PROMPT: &str = "i will give you a set of instructions and i want you to extract the key spatial word or phrase. then, i want you to compare it to the following four words and return the one it is most close to. the words are: above, below, next to, on. don't provide explanation, just give me the output. for example:
[user 1]: put the knife to the right of the fridge
[you]: next to

[user 1]: put the pan above the oven
[you]: above

[user 1]: place the toilet paper in the upper right corner of the cupboard
[you]: on

[user 1]: cowboy hat to the left of the water faucet
[you]: next to

[user 1]: the cowboy hat on the right behind the pants
[you]: next to

[user 1]: pillow under the sink
[you]: below

[user 1]: garbage bag on top of lamp stand
[you]: above";

/// Where and how to reach the completion endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmConfig {
    pub endpoint: String,
    pub key: Option<String>,
    pub model: String,
}

impl LlmConfig {
    /// `None` unless an endpoint is configured.
    pub fn from_env() -> Option<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Option<Self> {
        let endpoint = get(ENV_ENDPOINT).filter(|s| !s.trim().is_empty())?;
        Some(Self {
            endpoint,
            key: get(ENV_KEY).filter(|s| !s.is_empty()),
            model: get(ENV_MODEL).unwrap_or_else(|| DEFAULT_MODEL.to_string()),
        })
    }
}

/// Text completion transport. Errors mean the model could not be reached.
pub trait CompletionBackend: Send {
    fn complete(&self, prompt: &str) -> Result<String, String>;
}

impl<F> CompletionBackend for F
where
    F: Fn(&str) -> Result<String, String> + Send,
{
    fn complete(&self, prompt: &str) -> Result<String, String> {
        self(prompt)
    }
}

pub fn instruction_request(text: &str) -> String {
    format!("{INSTRUCTION_PROMPT}\n\n[user 1]: {}\n[you]:", text.trim())
}

pub fn target_landmark_request(text: &str) -> String {
    format!("{TARGET_LANDMARK_PROMPT}\n\nuser 1: {}\nyou:", text.trim())
}

pub fn direction_request(text: &str) -> String {
    format!("{DIRECTION_PROMPT}\n\n[user 1]: {}\n[you]:", text.trim())
}

/// First answer line, lowercased, without a leading speaker tag or trailing punctuation.
fn clean(answer: &str) -> String {
    let line = answer.trim().lines().next().unwrap_or("").trim().to_lowercase();
    let line = line
        .strip_prefix("[you]:")
        .or_else(|| line.strip_prefix("you:"))
        .unwrap_or(&line)
        .trim();
    line.trim_end_matches(['.', '!']).trim().to_string()
}

pub struct RemoteLlmParser<B> {
    backend: B,
}

impl<B: CompletionBackend> RemoteLlmParser<B> {
    pub fn new(backend: B) -> Self {
        Self { backend }
    }

    fn ask(&self, prompt: String) -> Result<String, ParseError> {
        self.backend.complete(&prompt).map(|a| clean(&a)).map_err(ParseError::Unavailable)
    }
}

impl<B: CompletionBackend> ParserAdapter for RemoteLlmParser<B> {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn is_instruction(&self, _lexicon: &Lexicon, text: &str) -> Result<bool, ParseError> {
        match self.ask(instruction_request(text))?.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(ParseError::OutOfVocabulary(other.to_string())),
        }
    }

    fn extract_target_landmark(&self, lexicon: &Lexicon, text: &str) -> Result<(String, String), ParseError> {
        let answer = self.ask(target_landmark_request(text))?;
        let parts: Vec<&str> = answer.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [t, l] if lexicon.is_target(t) && lexicon.is_landmark(l) => Ok((t.to_string(), l.to_string())),
            _ => Err(ParseError::OutOfVocabulary(answer)),
        }
    }

    fn extract_direction(&self, _lexicon: &Lexicon, text: &str) -> Result<Direction, ParseError> {
        let answer = self.ask(direction_request(text))?;
        Direction::from_phrase(&answer).ok_or(ParseError::OutOfVocabulary(answer))
    }
}
