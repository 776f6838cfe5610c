//! Game rules: scenes, boards, placement validation and scoring.
//!
//! Coordinates are integer grid units with the origin in the top-left corner
//! and `y` growing downward. Every movable object occupies a square of side
//! `object_extent` centred on its placement point.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational used for distances and scores.
pub type Rational = Ratio<i64>;

/// Upper bound on rejection-sampling draws per layout.
pub const MAX_LAYOUT_ATTEMPTS: usize = 10_000;

/// Scene id used for the first round.
pub const KITCHEN: &str = "kitchen";
/// Scene id used for the second round.
pub const LIVINGROOM: &str = "livingroom";

const KITCHEN_TOML: &str = include_str!("../scenes/kitchen.toml");
const LIVINGROOM_TOML: &str = include_str!("../scenes/livingroom.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SceneError {
    #[error("scene {0}: width and height must be positive")]
    EmptyArea(String),
    #[error("scene {0}: object extent must be positive")]
    BadExtent(String),
    #[error("scene {scene}: landmark {landmark} at {point} lies outside the board")]
    LandmarkOutside {
        scene: String,
        landmark: String,
        point: Point,
    },
    #[error("scene {scene}: duplicate object {object}")]
    DuplicateObject { scene: String, object: String },
    #[error("scene {scene}: name {name} is used by both an object and a landmark")]
    NameClash { scene: String, name: String },
    #[error("scene {0}: no movable objects")]
    NoObjects(String),
    #[error("cannot read scene config {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("cannot parse scene config {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("duplicate scene id {0}")]
    DuplicateScene(String),
    #[error("unknown scene {0}")]
    UnknownScene(String),
}

/// On-disk shape of a scene document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneDoc {
    scene_id: String,
    width: i64,
    height: i64,
    object_extent: i64,
    objects: Vec<String>,
    landmarks: BTreeMap<String, Point>,
}

/// Immutable round definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SceneDoc", into = "SceneDoc")]
pub struct Scene {
    scene_id: String,
    width: i64,
    height: i64,
    object_extent: i64,
    objects: Vec<String>,
    landmarks: BTreeMap<String, Point>,
}

impl TryFrom<SceneDoc> for Scene {
    type Error = SceneError;

    fn try_from(doc: SceneDoc) -> Result<Self, Self::Error> {
        Scene::new(
            doc.scene_id,
            doc.width,
            doc.height,
            doc.object_extent,
            doc.objects,
            doc.landmarks,
        )
    }
}

impl From<Scene> for SceneDoc {
    fn from(s: Scene) -> Self {
        SceneDoc {
            scene_id: s.scene_id,
            width: s.width,
            height: s.height,
            object_extent: s.object_extent,
            objects: s.objects,
            landmarks: s.landmarks,
        }
    }
}

impl Scene {
    pub fn new(
        scene_id: impl Into<String>,
        width: i64,
        height: i64,
        object_extent: i64,
        objects: Vec<String>,
        landmarks: BTreeMap<String, Point>,
    ) -> Result<Self, SceneError> {
        let scene_id = scene_id.into();
        if width <= 0 || height <= 0 {
            return Err(SceneError::EmptyArea(scene_id));
        }
        if object_extent <= 0 {
            return Err(SceneError::BadExtent(scene_id));
        }
        if objects.is_empty() {
            return Err(SceneError::NoObjects(scene_id));
        }
        let mut seen = BTreeSet::new();
        for object in &objects {
            if !seen.insert(object.as_str()) {
                return Err(SceneError::DuplicateObject {
                    scene: scene_id,
                    object: object.clone(),
                });
            }
            if landmarks.contains_key(object) {
                return Err(SceneError::NameClash {
                    scene: scene_id,
                    name: object.clone(),
                });
            }
        }
        for (name, p) in &landmarks {
            if p.x < 0 || p.y < 0 || p.x >= width || p.y >= height {
                return Err(SceneError::LandmarkOutside {
                    scene: scene_id,
                    landmark: name.clone(),
                    point: *p,
                });
            }
        }
        Ok(Self {
            scene_id,
            width,
            height,
            object_extent,
            objects,
            landmarks,
        })
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, SceneError> {
        toml::from_str(text).map_err(|e| SceneError::Parse {
            path: origin.to_string(),
            reason: e.to_string(),
        })
    }

    pub fn kitchen() -> Self {
        Self::from_toml_str(KITCHEN_TOML, "builtin kitchen").expect("builtin kitchen scene is valid")
    }

    pub fn livingroom() -> Self {
        Self::from_toml_str(LIVINGROOM_TOML, "builtin livingroom")
            .expect("builtin livingroom scene is valid")
    }

    pub fn id(&self) -> &str {
        &self.scene_id
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    pub fn object_extent(&self) -> i64 {
        self.object_extent
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn has_object(&self, name: &str) -> bool {
        self.objects.iter().any(|o| o == name)
    }

    pub fn landmarks(&self) -> &BTreeMap<String, Point> {
        &self.landmarks
    }

    pub fn landmark(&self, name: &str) -> Option<Point> {
        self.landmarks.get(name).copied()
    }

    /// Largest Manhattan distance between two points of the board.
    pub fn max_distance(&self) -> i64 {
        self.width + self.height
    }

    pub fn inside(&self, p: Point) -> bool {
        // Compare doubled coordinates so odd extents stay exact.
        let e = self.object_extent;
        2 * p.x - e >= 0 && 2 * p.x + e <= 2 * self.width && 2 * p.y - e >= 0 && 2 * p.y + e <= 2 * self.height
    }

    pub fn overlaps(&self, a: Point, b: Point) -> bool {
        (a.x - b.x).abs() < self.object_extent && (a.y - b.y).abs() < self.object_extent
    }
}

/// The two scenes a game is played on, plus any extra scenes loaded from config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneCatalog {
    scenes: BTreeMap<String, Scene>,
}

impl Default for SceneCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl SceneCatalog {
    pub fn builtin() -> Self {
        Self::from_scenes([Scene::kitchen(), Scene::livingroom()]).expect("builtin scenes are distinct")
    }

    pub fn from_scenes(scenes: impl IntoIterator<Item = Scene>) -> Result<Self, SceneError> {
        let mut map = BTreeMap::new();
        for scene in scenes {
            let id = scene.id().to_string();
            if map.insert(id.clone(), scene).is_some() {
                return Err(SceneError::DuplicateScene(id));
            }
        }
        Ok(Self { scenes: map })
    }

    /// Loads every `*.toml` document in a directory, or a single document.
    /// Both round scenes must be present afterwards.
    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let io = |e: std::io::Error| SceneError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        };
        let mut files = Vec::new();
        if path.is_dir() {
            for entry in std::fs::read_dir(path).map_err(io)? {
                let p = entry.map_err(io)?.path();
                if p.extension().is_some_and(|e| e == "toml") {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut scenes = Vec::new();
        for file in files {
            let text = std::fs::read_to_string(&file).map_err(|e| SceneError::Io {
                path: file.display().to_string(),
                reason: e.to_string(),
            })?;
            scenes.push(Scene::from_toml_str(&text, &file.display().to_string())?);
        }
        let catalog = Self::from_scenes(scenes)?;
        for id in [KITCHEN, LIVINGROOM] {
            catalog.get(id)?;
        }
        Ok(catalog)
    }

    pub fn get(&self, id: &str) -> Result<&Scene, SceneError> {
        self.scenes.get(id).ok_or_else(|| SceneError::UnknownScene(id.to_string()))
    }

    /// Scene for a 1-based round index: kitchen first, living room second.
    pub fn for_round(&self, round: u8) -> Result<&Scene, SceneError> {
        self.get(if round <= 1 { KITCHEN } else { LIVINGROOM })
    }
}

/// One player's placement of every movable object.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Board {
    placements: BTreeMap<String, Point>,
}

impl Board {
    pub fn new(placements: BTreeMap<String, Point>) -> Self {
        Self { placements }
    }

    pub fn get(&self, object: &str) -> Option<Point> {
        self.placements.get(object).copied()
    }

    pub fn placements(&self) -> &BTreeMap<String, Point> {
        &self.placements
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Point)> {
        self.placements.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Sets a placement without validation; callers validate first.
    pub fn set(&mut self, object: &str, p: Point) {
        self.placements.insert(object.to_string(), p);
    }

    pub fn with(mut self, object: &str, p: Point) -> Self {
        self.set(object, p);
        self
    }

    /// Checks all board invariants against a scene.
    pub fn check(&self, scene: &Scene) -> Result<(), BoardError> {
        if self.placements.len() != scene.objects().len() {
            return Err(BoardError::WrongObjects);
        }
        for object in scene.objects() {
            let p = self.get(object).ok_or(BoardError::WrongObjects)?;
            match validate_placement(scene, self, object, p).map_err(|_| BoardError::WrongObjects)? {
                Verdict::Ok => {}
                Verdict::Overlap => return Err(BoardError::Overlap(object.clone())),
                Verdict::OutOfBounds => return Err(BoardError::OutOfBounds(object.clone())),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoardError {
    #[error("board does not place exactly the scene's objects")]
    WrongObjects,
    #[error("{0} overlaps another object")]
    Overlap(String),
    #[error("{0} is outside the board")]
    OutOfBounds(String),
}

/// Outcome of checking a single move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Overlap,
    OutOfBounds,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("boards place different object sets")]
    ObjectSetMismatch,
    #[error("no collision-free layout for scene {scene} within {attempts} draws")]
    LayoutNotFound { scene: String, attempts: usize },
}

/// Joint round score on a 0..=100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    value: Rational,
    bonus: bool,
}

impl Score {
    /// Builds a score from its value; the bonus flag follows from it.
    pub fn from_value(value: Rational) -> Self {
        Self {
            value,
            bonus: value > Rational::from_integer(99),
        }
    }

    pub fn value(&self) -> Rational {
        self.value
    }

    pub fn bonus(&self) -> bool {
        self.bonus
    }

    pub fn as_f64(&self) -> f64 {
        *self.value.numer() as f64 / *self.value.denom() as f64
    }
}

pub fn manhattan(p: Point, q: Point) -> i64 {
    (p.x - q.x).abs() + (p.y - q.y).abs()
}

/// Mean Manhattan distance between identically named objects on two boards.
pub fn mean_pair_distance(a: &Board, b: &Board) -> Result<Rational, GameError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(GameError::ObjectSetMismatch);
    }
    let mut total = 0i64;
    for (object, p) in a.iter() {
        let q = b.get(object).ok_or(GameError::ObjectSetMismatch)?;
        total += manhattan(p, q);
    }
    Ok(Rational::new(total, a.len() as i64))
}

/// Linear map from mean distance to a 0..=100 score, clamped.
pub fn normalize_score(mean_dist: Rational, scene: &Scene) -> Score {
    let d_max = Rational::from_integer(scene.max_distance());
    let hundred = Rational::from_integer(100);
    let mut value = hundred * (Rational::from_integer(1) - mean_dist.abs() / d_max);
    if value < Rational::zero() {
        value = Rational::zero();
    } else if value > hundred {
        value = hundred;
    }
    Score::from_value(value)
}

pub fn score_boards(a: &Board, b: &Board, scene: &Scene) -> Result<Score, GameError> {
    Ok(normalize_score(mean_pair_distance(a, b)?, scene))
}

/// Would moving `object` to `p` keep the board valid?
pub fn validate_placement(scene: &Scene, board: &Board, object: &str, p: Point) -> Result<Verdict, GameError> {
    if !scene.has_object(object) {
        return Err(GameError::UnknownObject(object.to_string()));
    }
    if !scene.inside(p) {
        return Ok(Verdict::OutOfBounds);
    }
    let blocked = board.iter().any(|(other, q)| other != object && scene.overlaps(p, q));
    Ok(if blocked { Verdict::Overlap } else { Verdict::Ok })
}

/// Rejection-samples a collision-free layout. Deterministic per `(scene, seed)`.
pub fn random_initial_placements(scene: &Scene, seed: u64) -> Result<Board, GameError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (scene.object_extent() + 1) / 2;
    let (x_lo, x_hi) = (half, scene.width() - half);
    let (y_lo, y_hi) = (half, scene.height() - half);
    let not_found = || GameError::LayoutNotFound {
        scene: scene.id().to_string(),
        attempts: MAX_LAYOUT_ATTEMPTS,
    };
    if x_lo > x_hi || y_lo > y_hi {
        return Err(not_found());
    }
    let mut board = Board::default();
    let mut attempts = 0;
    for object in scene.objects() {
        loop {
            attempts += 1;
            if attempts > MAX_LAYOUT_ATTEMPTS {
                return Err(not_found());
            }
            let p = Point::new(rng.gen_range(x_lo..=x_hi), rng.gen_range(y_lo..=y_hi));
            if validate_placement(scene, &board, object, p)? == Verdict::Ok {
                board.set(object, p);
                break;
            }
        }
    }
    Ok(board)
}
