use archery_core::haptics::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TABLE1_LOG: &str = include_str!("fixtures/table1_responses.csv");

fn table1_pairs() -> Vec<(TactilePattern, TactilePattern)> {
    read_responses_csv(TABLE1_LOG.as_bytes())
        .unwrap()
        .into_iter()
        .map(|r| (r.presented, r.answered))
        .collect()
}

#[test]
fn published_pattern_log_reproduces_reported_rates() {
    let pairs = table1_pairs();
    assert_eq!(pairs.len(), 360);
    let report = confusion_stats(&pairs).unwrap();
    assert!((report.pattern_rate() - 68.9).abs() <= 0.1, "{}", report.pattern_rate());
    assert!((report.force_rate() - 94.2).abs() <= 0.05, "{}", report.force_rate());

    let forces = report.forces.percentages();
    let expect = [[95.0, 5.0, 0.0], [0.0, 90.0, 10.0], [0.0, 2.5, 97.5]];
    for (row, want) in forces.iter().zip(expect) {
        for (got, want) in row.iter().zip(want) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    let distances = report.distances.percentages();
    let expect = [
        [68.9, 23.4, 7.7, 0.0],
        [3.3, 65.6, 28.9, 2.2],
        [0.0, 8.9, 73.4, 17.8],
        [0.0, 2.2, 14.4, 83.4],
    ];
    for (row, want) in distances.iter().zip(expect) {
        for (got, want) in row.iter().zip(want) {
            assert!((got - want).abs() <= 0.15, "{got} vs {want}");
        }
    }
}

#[test]
fn force_rows_from_synthetic_log() {
    // 40 presentations per force level with the published diagonal.
    let mut pairs = Vec::new();
    let p = |s: &str| s.parse::<TactilePattern>().unwrap();
    for (real, answers) in [
        ("2S", vec![("2S", 38), ("2M", 2)]),
        ("2M", vec![("2M", 36), ("2L", 4)]),
        ("2L", vec![("2M", 1), ("2L", 39)]),
    ] {
        for (ans, n) in answers {
            pairs.extend(std::iter::repeat_n((p(real), p(ans)), n));
        }
    }
    let report = confusion_stats(&pairs).unwrap();
    assert!((report.force_rate() - 94.2).abs() <= 0.05);
    let diag: Vec<f64> = (0..3).map(|i| report.forces.percentages()[i][i]).collect();
    assert_eq!(diag, vec![95.0, 90.0, 97.5]);
}

#[test]
fn uniform_guessing_recognizes_one_in_twelve() {
    let all = TactilePattern::all();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pairs: Vec<_> = (0..100_000)
        .map(|_| (all[rng.random_range(0..12)], all[rng.random_range(0..12)]))
        .collect();
    let rate = confusion_stats(&pairs).unwrap().pattern_rate();
    assert!((rate - 100.0 / 12.0).abs() <= 0.5, "{rate}");
}

#[test]
fn exported_matrix_rows_match_the_printed_table() {
    let report = confusion_stats(&table1_pairs()).unwrap();
    let mut buf = Vec::new();
    report.patterns.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "real,1S,2S,3S,4S,1M,2M,3M,4M,1L,2L,3L,4L,n");
    assert_eq!(
        lines.next().unwrap(),
        "1S,66.7,13.3,13.3,0.0,6.7,0.0,0.0,0.0,0.0,0.0,0.0,0.0,30"
    );
    assert_eq!(lines.count(), 11);
}

#[test]
fn study_schedule_csv_lists_commands() {
    let s = make_schedule(3);
    let mut buf = Vec::new();
    s.write_csv(&mut buf, &ForceTable::default()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 37);
    assert!(text.lines().next().unwrap().starts_with("trial,"));
}

fn arb_pattern() -> impl Strategy<Value = TactilePattern> {
    (0usize..12).prop_map(|i| TactilePattern::all()[i])
}

proptest! {
    #[test]
    fn confusion_rows_sum_to_100(pairs in prop::collection::vec((arb_pattern(), arb_pattern()), 1..400)) {
        let report = confusion_stats(&pairs).unwrap();
        for m in [&report.patterns, &report.forces, &report.distances] {
            for (i, row) in m.percentages().iter().enumerate() {
                if m.row_total(i) > 0 {
                    prop_assert!((row.iter().sum::<f64>() - 100.0).abs() <= 0.1);
                }
            }
            prop_assert_eq!(m.total(), pairs.len() as u64);
        }
    }

    #[test]
    fn every_schedule_is_balanced(seed in any::<u64>()) {
        let s = make_schedule(seed);
        let mut hist = [0usize; 12];
        for t in &s.trials {
            hist[t.pattern.index()] += 1;
        }
        prop_assert_eq!(hist, [3; 12]);
        for w in s.trials.windows(2) {
            prop_assert_eq!(w[1].onset_s - w[0].onset_s, ONSET_SPACING_S);
        }
        prop_assert_eq!(make_schedule(seed), s);
    }

    #[test]
    fn slide_is_lipschitz_and_saturates(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (sa, sb) = (contact_from_stretch(a), contact_from_stretch(b));
        prop_assert!((sa - sb).abs() <= SLIDE_RANGE_MM * (a - b).abs() + 1e-12);
        prop_assert!((0.0..=SLIDE_RANGE_MM).contains(&sa));
        if a >= FULL_STRETCH_M {
            prop_assert_eq!(sa, SLIDE_RANGE_MM);
        }
        if a <= b {
            prop_assert!(sa <= sb);
        }
        let c = gameplay_contact(a);
        prop_assert!(c.normal_force_n >= 0.0 && c.normal_force_n <= MAX_FORCE_N);
        let back = ContactCommand::parse_record(&c.to_record()).unwrap();
        prop_assert!((back.slide_mm - c.slide_mm).abs() <= 5e-10);
        prop_assert!((back.normal_force_n - c.normal_force_n).abs() <= 5e-10);
    }
}
