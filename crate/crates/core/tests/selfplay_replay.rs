use std::sync::Arc;

use placegame_core::eventlog::{read_log, replay, LogWriter};
use placegame_core::selfplay::{run_matchup, Matchup, POLICY_NAMES};
use placegame_core::SceneCatalog;
use proptest::prelude::*;

fn catalog() -> Arc<SceneCatalog> {
    Arc::new(SceneCatalog::builtin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Any pairing of shipped policies leaves a log that replays to the live state,
    /// including after a trip through the on-disk writer.
    #[test]
    fn logs_replay_to_live_state(a in 0..POLICY_NAMES.len(), b in 0..POLICY_NAMES.len(), seed in any::<u64>()) {
        let m = Matchup::new(POLICY_NAMES[a], POLICY_NAMES[b]);
        let record = run_matchup(&m, seed, catalog()).unwrap();
        prop_assert!(record.privacy_violations.is_empty());

        let dir = tempfile::tempdir().unwrap();
        let mut writer = LogWriter::open(dir.path(), &record.room_id).unwrap();
        writer.append_all(&record.log).unwrap();
        writer.sync().unwrap();
        let path = placegame_core::eventlog::log_path(dir.path(), &record.room_id);
        let records = read_log(&path).unwrap();
        prop_assert_eq!(&records, &record.log);
        let state = replay(&record.room_id, &records, catalog()).unwrap();
        prop_assert_eq!(state, record.final_state);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn leader_dominance_exceeds_alternating_for_every_seed(seed in any::<u64>()) {
        use placegame_core::analysis::{dominance_diff, LengthUnit};
        let diffs = |a: &str, b: &str| -> Vec<f64> {
            let record = run_matchup(&Matchup::new(a, b), seed, catalog()).unwrap();
            record.transcripts().iter().map(|t| dominance_diff(t, LengthUnit::Tokens).unwrap()).collect()
        };
        let lead = diffs("leader", "follower");
        let alt = diffs("alternating", "alternating");
        prop_assert_eq!(lead.len(), 2);
        prop_assert_eq!(alt.len(), 2);
        for round in 0..2 {
            prop_assert!(lead[round] > alt[round], "round {}: {:?} vs {:?}", round + 1, lead, alt);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn scripted_pairs_always_agree(seed in any::<u64>(), pair in 0usize..4) {
        let (a, b) = [
            ("leader", "follower"),
            ("alternating", "alternating"),
            ("tighten-lead", "tighten-follow"),
            ("leader", "agent"),
        ][pair];
        let record = run_matchup(&Matchup::new(a, b), seed, catalog()).unwrap();
        prop_assert!(!record.aborted);
        prop_assert_eq!(record.score_values(), vec![100.0, 100.0]);
    }
}
