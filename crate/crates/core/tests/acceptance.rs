//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p placegame-core --test acceptance -- --nocapture`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use placegame_core::agent::{resolve_position, Direction, Lexicon, ParserAdapter, RuleParser, SynonymTable};
use placegame_core::analysis::{dominance, dominance_diff, LengthUnit, Transcript};
use placegame_core::eventlog::{replay, RecordKind};
use placegame_core::game::{random_initial_placements, score_boards, Rational};
use placegame_core::protocol::ServerMessage;
use placegame_core::selfplay::{run_matchup, GameRecord, Matchup};
use placegame_core::session::Command;
use placegame_core::{Board, Point, Room, Scene, SceneCatalog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn catalog() -> Arc<SceneCatalog> {
    Arc::new(SceneCatalog::builtin())
}

// Scoring

fn oracle_score(a: &Board, b: &Board, scene: &Scene) -> Rational {
    let n = a.len() as i64;
    let sum: i64 = a
        .iter()
        .map(|(o, p)| {
            let q = b.get(o).unwrap();
            (p.x - q.x).abs() + (p.y - q.y).abs()
        })
        .sum();
    let span = n * (scene.width() + scene.height());
    let v = Rational::new(100 * (span - sum), span);
    v.max(Rational::from_integer(0)).min(Rational::from_integer(100))
}

fn scoring_oracle() -> Outcome {
    let started = Instant::now();
    let scene = Scene::kitchen();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5C0E);
    let hundred = Rational::from_integer(100);
    let steps = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    for i in 0..1000 {
        let a = random_initial_placements(&scene, rng.gen()).map_err(|e| e.to_string())?;
        let b = random_initial_placements(&scene, rng.gen()).map_err(|e| e.to_string())?;
        let ab = score_boards(&a, &b, &scene).map_err(|e| e.to_string())?;
        let ba = score_boards(&b, &a, &scene).map_err(|e| e.to_string())?;
        let aa = score_boards(&a, &a, &scene).map_err(|e| e.to_string())?;
        check(aa.value() == hundred && aa.bonus(), || format!("pair {i}: self score {}", aa.value()))?;
        check(ab == ba, || format!("pair {i}: asymmetric"))?;
        check(ab.value() == oracle_score(&a, &b, &scene), || format!("pair {i}: {} vs oracle", ab.value()))?;
        check(ab.bonus() == (ab.value() > Rational::from_integer(99)), || format!("pair {i}: bonus flag"))?;

        // Move one object a unit farther from its partner position.
        let object = &scene.objects()[i % scene.objects().len()];
        let (p, q) = (a.get(object).unwrap(), b.get(object).unwrap());
        let d0 = (p.x - q.x).abs() + (p.y - q.y).abs();
        for (dx, dy) in steps {
            let moved = Point::new(p.x + dx, p.y + dy);
            if (moved.x - q.x).abs() + (moved.y - q.y).abs() != d0 + 1 {
                continue;
            }
            let farther = a.clone().with(object, moved);
            let s = score_boards(&farther, &b, &scene).map_err(|e| e.to_string())?;
            check(s.value() <= ab.value(), || format!("pair {i}: moving {object} away raised the score"))?;
        }
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))
}

// Dominance

/// exp via its power series, summed until terms vanish.
fn series_exp(x: f64) -> f64 {
    let (mut sum, mut term, mut k) = (1.0f64, 1.0f64, 1.0f64);
    while term.abs() > 1e-18 {
        term *= x / k;
        sum += term;
        k += 1.0;
    }
    sum
}

fn oracle_l(x: f64) -> f64 {
    1.0 / (1.0 + series_exp(-x))
}

fn transcript(a_msgs: usize, a_len: usize, b_msgs: usize, b_len: usize) -> Transcript {
    let words = |n: usize| vec!["w"; n].join(" ");
    let (wa, wb) = (words(a_len), words(b_len));
    let mut lines = Vec::new();
    for i in 0..a_msgs.max(b_msgs) {
        if i < a_msgs {
            lines.push(("A", wa.as_str()));
        }
        if i < b_msgs {
            lines.push(("B", wb.as_str()));
        }
    }
    Transcript::from_lines(1, ["A", "B"], lines)
}

fn dominance_formula() -> Outcome {
    // 40-digit reference values of 10·L(0.8), 10·(1−L(0.8)), 8·L(0.5), 4·(1−L(0.5)).
    let frozen = [6.899744811276124, 3.100255188723876, 4.979674649614837, 1.510162675192582];
    let cases = [
        ("equal 50/50", transcript(5, 6, 5, 6), 0.5 * 6.0, 0.5 * 6.0),
        ("90/10", transcript(9, 10, 1, 10), 10.0 * oracle_l(0.8), 10.0 * (1.0 - oracle_l(0.8))),
        ("75/25", transcript(3, 8, 1, 4), 8.0 * oracle_l(0.5), 4.0 * (1.0 - oracle_l(0.5))),
    ];
    for (i, (label, t, da, db)) in cases.iter().enumerate() {
        let r = dominance(t, LengthUnit::Tokens).map_err(|e| e.to_string())?;
        let (got_a, got_b) = (r.d["A"], r.d["B"]);
        check((got_a - da).abs() < 1e-6 && (got_b - db).abs() < 1e-6, || {
            format!("{label}: got ({got_a}, {got_b}), oracle ({da}, {db})")
        })?;
        if i > 0 {
            let (fa, fb) = (frozen[2 * (i - 1)], frozen[2 * (i - 1) + 1]);
            check((got_a - fa).abs() < 1e-6 && (got_b - fb).abs() < 1e-6, || {
                format!("{label}: got ({got_a}, {got_b}), reference ({fa}, {fb})")
            })?;
        }
    }
    let sym = dominance_diff(&cases[0].1, LengthUnit::Tokens).map_err(|e| e.to_string())?;
    check(sym == 0.0, || format!("symmetric diff {sym}"))
}

// Gold parses

fn gold_parses() -> Outcome {
    let lex = Lexicon::for_scene(&Scene::kitchen(), &SynonymTable::default());
    let p = RuleParser;
    let instruction = [
        ("place the lamp on the fridge", true),
        ("can you put the knife in the drawer?", true),
        ("do you have a toaster?", false),
        ("what objects do you have?", false),
        ("let's place the pan on top of the lamp", true),
        ("put hat on sink", true),
        ("lamp on toilet", true),
    ];
    for (text, want) in instruction {
        let got = p.is_instruction(&lex, text).map_err(|e| e.to_string())?;
        check(got == want, || format!("is_instruction({text:?}) = {got}"))?;
    }
    let target_landmark = [
        ("put the pillow to the right of the fridge", "pillow", "fridge"),
        ("put the jeans on the stove", "pants", "stove"),
        ("let's place the cushion on the ceiling light", "pillow", "lamp"),
        ("place the garbagebag in the upper right corner of the counter", "garbage", "counter"),
        ("cowboy hat to the left of the water faucet", "cowboy", "sink"),
        ("garbage bag on top of lamp stand", "garbage", "lamp"),
        ("let's place the blue hat on the toaster", "cap", "toaster"),
        ("put peaky blinders hat in the oven", "cap", "oven"),
    ];
    for (text, t, l) in target_landmark {
        let got = p.extract_target_landmark(&lex, text).map_err(|e| format!("{text:?}: {e}"))?;
        check(got == (t.to_string(), l.to_string()), || format!("{text:?} -> {got:?}"))?;
    }
    let directions = [
        ("put the knife to the right of the fridge", Direction::NextTo),
        ("put the pan above the oven", Direction::Above),
        ("place the toilet paper in the upper right corner of the cupboard", Direction::On),
        ("cowboy hat to the left of the water faucet", Direction::NextTo),
        ("the cowboy hat on the right behind the pants", Direction::NextTo),
        ("pillow under the sink", Direction::Below),
        ("garbage bag on top of lamp stand", Direction::Above),
    ];
    for (text, want) in directions {
        let got = p.extract_direction(&lex, text).map_err(|e| format!("{text:?}: {e}"))?;
        check(got == want, || format!("{text:?} -> {got:?}"))?;
    }
    let moves = [
        (Point::new(40, 30), Direction::Above, Point::new(40, 20)),
        (Point::new(80, 60), Direction::On, Point::new(80, 60)),
        (Point::new(20, 20), Direction::NextTo, Point::new(30, 20)),
        (Point::new(50, 50), Direction::Below, Point::new(50, 60)),
    ];
    for (c, d, want) in moves {
        let got = resolve_position(c, d);
        check(got == want, || format!("{d:?} of {c:?} -> {got:?}"))?;
    }
    Ok(())
}

// Self-play

fn full_marks(record: &GameRecord) -> Outcome {
    check(!record.aborted, || format!("{} aborted", record.room_id))?;
    check(record.scores.len() == 2, || format!("{}: {} rounds scored", record.room_id, record.scores.len()))?;
    for s in &record.scores {
        check(s.value() == Rational::from_integer(100), || format!("{}: score {}", record.room_id, s.value()))?;
    }
    Ok(())
}

fn end_to_end() -> Outcome {
    let m = Matchup::new("leader", "agent");
    for seed in 0..10 {
        let started = Instant::now();
        let first = run_matchup(&m, seed, catalog()).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        check(elapsed < Duration::from_secs(1), || format!("seed {seed}: {elapsed:?}"))?;
        full_marks(&first)?;
        let again = run_matchup(&m, seed, catalog()).map_err(|e| e.to_string())?;
        check(first.log_text() == again.log_text(), || format!("seed {seed}: logs differ on rerun"))?;
    }
    Ok(())
}

fn mean_diffs(matchup: &str, seeds: std::ops::Range<u64>) -> Result<[f64; 2], String> {
    let m: Matchup = matchup.parse().map_err(|e: placegame_core::selfplay::HarnessError| e.to_string())?;
    let mut sums = [0.0; 2];
    let n = seeds.end - seeds.start;
    for seed in seeds {
        let record = run_matchup(&m, seed, catalog()).map_err(|e| e.to_string())?;
        let ts = record.transcripts();
        check(ts.len() == 2, || format!("{}: {} transcripts", record.room_id, ts.len()))?;
        for (round, t) in ts.iter().enumerate() {
            sums[round] += dominance_diff(t, LengthUnit::Tokens).map_err(|e| e.to_string())?;
        }
    }
    Ok(sums.map(|s| s / n as f64))
}

fn strategy_ordering() -> Outcome {
    let seeds = 0..20;
    let lead = mean_diffs("leader:follower", seeds.clone())?;
    let alt = mean_diffs("alternating:alternating", seeds.clone())?;
    let tighten = mean_diffs("tighten-lead:tighten-follow", seeds.clone())?;
    let loosen = mean_diffs("loosen-lead:loosen-follow", seeds)?;
    println!("    leader {lead:.3?} alternating {alt:.3?} tightening {tighten:.3?} loosening {loosen:.3?}");
    check(lead[0] > alt[0] && lead[1] > alt[1], || format!("leader {lead:?} vs alternating {alt:?}"))?;
    check(tighten[1] > tighten[0], || format!("tightening {tighten:?}"))?;
    check(loosen[0] > loosen[1], || format!("loosening {loosen:?}"))
}

fn harness_games() -> Result<Vec<GameRecord>, String> {
    let matchups = [
        "leader:follower",
        "alternating:alternating",
        "leader:agent",
        "noisy-leader:agent",
        "tighten-lead:tighten-follow",
        "loosen-lead:loosen-follow",
    ];
    let mut out = Vec::new();
    for m in matchups {
        let m: Matchup = m.parse().map_err(|e: placegame_core::selfplay::HarnessError| e.to_string())?;
        for seed in 0..5 {
            out.push(run_matchup(&m, seed, catalog()).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

fn replay_determinism(games: &[GameRecord]) -> Outcome {
    for g in games {
        let state = replay(&g.room_id, &g.log, catalog()).map_err(|e| format!("{}: {e}", g.room_id))?;
        check(state == g.final_state, || format!("{}: replayed state differs", g.room_id))?;
    }
    Ok(())
}

// Privacy

fn privacy_scan(games: &[GameRecord]) -> Outcome {
    for g in games {
        check(g.privacy_violations.is_empty(), || format!("{}: {:?}", g.room_id, g.privacy_violations))?;
        for side in 0..2 {
            let me = &g.player_ids[side];
            // Board-bearing log records produced by this player's own actions.
            let own: Vec<_> = g
                .log
                .iter()
                .filter(|r| matches!(r.kind, RecordKind::RoundStart | RecordKind::MoveOk | RecordKind::MoveRejected))
                .filter(|r| &r.actor == me)
                .map(|r| r.payload.clone())
                .collect();
            let seen: Vec<_> = g.frames[side]
                .iter()
                .filter(|f| {
                    matches!(f, ServerMessage::RoundStart { .. } | ServerMessage::MoveOk { .. } | ServerMessage::MoveRejected { .. })
                })
                .map(|f| serde_json::to_value(f).unwrap())
                .collect();
            check(seen == own, || format!("{} {me}: board frames do not match own actions", g.room_id))?;
            for f in &g.frames[side] {
                if let ServerMessage::Chat { .. } | ServerMessage::RoundEnd { .. } | ServerMessage::GameEnd { .. } = f {
                    let v = serde_json::to_value(f).unwrap();
                    check(v.get("placements").is_none() && v.get("x").is_none(), || {
                        format!("{} {me}: shared frame carries coordinates", g.room_id)
                    })?;
                }
            }
        }
    }
    rejection_codes()
}

fn rejection_codes() -> Outcome {
    let mut room = Room::new("privacy", 3, catalog()).map_err(|e| e.to_string())?;
    let (p1, _) = room.join("a", 1).map_err(|e| e.to_string())?;
    room.join("b", 2).map_err(|e| e.to_string())?;
    let board: Board = room.state().boards[&p1].clone();
    let mut it = board.iter();
    let (first, _) = it.next().unwrap();
    let (_, blocker) = it.next().unwrap();
    let first = first.to_string();

    let attempt = |room: &mut Room, to: Point| -> Result<serde_json::Value, String> {
        let step = room
            .handle(Command::Move { player: p1.clone(), object: first.clone(), to }, 10)
            .map_err(|e| e.to_string())?;
        check(step.outbound.len() == 1 && step.outbound[0].to == p1, || "rejection not private".into())?;
        Ok(serde_json::to_value(&step.outbound[0].msg).unwrap())
    };
    let overlap = attempt(&mut room, blocker)?;
    check(overlap["type"] == "move_rejected" && overlap["reason"] == "overlap", || format!("{overlap}"))?;
    let outside = attempt(&mut room, Point::new(-5, 50))?;
    check(outside["type"] == "move_rejected" && outside["reason"] == "out_of_bounds", || format!("{outside}"))?;
    check(room.state().boards[&p1] == board, || "rejected move changed the board".into())?;
    Ok(())
}

#[test]
fn acceptance() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("scoring oracle over 1000 board pairs", scoring_oracle()),
        ("dominance worked examples within 1e-6", dominance_formula()),
        ("rule parser gold examples and position table", gold_parses()),
        ("leader vs agent end-to-end over 10 seeds", end_to_end()),
        ("strategy ordering across 20 seeded games", strategy_ordering()),
    ];
    match harness_games() {
        Ok(games) => {
            results.push(("replay reproduces live state", replay_determinism(&games)));
            results.push(("protocol privacy and rejection codes", privacy_scan(&games)));
        }
        Err(e) => {
            results.push(("replay reproduces live state", Err(e.clone())));
            results.push(("protocol privacy and rejection codes", Err(e)));
        }
    }
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
