use proptest::prelude::*;

use super::*;

fn t(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn corpus(rows: &[(u64, &str, &str)]) -> ParsedCorpus {
    ParsedCorpus::new(
        rows.iter()
            .map(|&(id, p, g)| ParsedMessage {
                line_id: id,
                predicted: t(p),
                gold: t(g),
            })
            .collect(),
    )
    .unwrap()
}

/// Pairwise definition: i is correct iff for every j, "same predicted
/// template" agrees with "same gold template".
fn brute_ga(c: &ParsedCorpus) -> f64 {
    let norm = |x: &[String]| -> Vec<String> {
        x.iter()
            .map(|s| {
                let var = s == "<*>"
                    || (s.len() > 2
                        && s.starts_with('[')
                        && s.ends_with(']')
                        && s[1..s.len() - 1]
                            .chars()
                            .all(|ch| ch.is_ascii_uppercase() || ch.is_ascii_digit() || ch == '_')
                        && s.chars().any(|ch| ch.is_ascii_uppercase()));
                if var {
                    "<*>".to_string()
                } else {
                    s.clone()
                }
            })
            .collect()
    };
    let ms = c.messages();
    let correct = (0..ms.len())
        .filter(|&i| {
            (0..ms.len()).all(|j| {
                (norm(&ms[i].predicted) == norm(&ms[j].predicted))
                    == (norm(&ms[i].gold) == norm(&ms[j].gold))
            })
        })
        .count();
    correct as f64 / ms.len() as f64
}

fn brute_pa(c: &ParsedCorpus, mode: Mode) -> f64 {
    let ms = c.messages();
    let mut correct = 0;
    for m in ms {
        let same = m.predicted.len() == m.gold.len()
            && m.predicted.iter().zip(&m.gold).all(|(p, g)| {
                let var = |x: &String| x == "<*>" || is_label_shaped(x);
                p == g || (mode == Mode::General && var(p) && var(g))
            });
        if same {
            correct += 1;
        }
    }
    correct as f64 / ms.len() as f64
}

#[test]
fn ga_examples() {
    let identical = corpus(&[(1, "a [VAR]", "a [VAR]"), (2, "b", "b")]);
    assert_eq!(group_accuracy(&identical).unwrap(), 1.0);

    let merged = corpus(&[(1, "x", "a"), (2, "x", "a"), (3, "x", "b"), (4, "x", "b")]);
    assert_eq!(group_accuracy(&merged).unwrap(), 0.0);

    let split = corpus(&[(1, "a", "a"), (2, "a", "a"), (3, "b", "b"), (4, "c", "b")]);
    assert_eq!(group_accuracy(&split).unwrap(), 0.5);

    // labels compare equal to the wildcard and to each other
    let cats = corpus(&[
        (1, "open [OID]", "open <*>"),
        (2, "open [LOI]", "open [VAR]"),
    ]);
    assert_eq!(group_accuracy(&cats).unwrap(), 1.0);

    assert_eq!(
        group_accuracy(&ParsedCorpus::default()),
        Err(MetricsError::EmptyCorpus)
    );
}

#[test]
fn pa_examples() {
    let exact = corpus(&[(1, "a [VAR]", "a [VAR]")]);
    assert_eq!(parsing_accuracy(&exact, Mode::General).unwrap(), 1.0);

    let half = corpus(&[(1, "a b", "a b"), (2, "a c", "a b")]);
    assert_eq!(parsing_accuracy(&half, Mode::General).unwrap(), 0.5);

    let cat = corpus(&[(1, "took [OID] ms", "took [TDA] ms")]);
    assert_eq!(parsing_accuracy(&cat, Mode::VariableAware).unwrap(), 0.0);
    assert_eq!(parsing_accuracy(&cat, Mode::General).unwrap(), 1.0);

    let length = corpus(&[(1, "a [VAR] [VAR]", "a [VAR]")]);
    assert_eq!(parsing_accuracy(&length, Mode::General).unwrap(), 0.0);
    assert_eq!(
        parsing_accuracy(&ParsedCorpus::default(), Mode::General),
        Err(MetricsError::EmptyCorpus)
    );
}

#[test]
fn corpus_construction_checks_ids() {
    let dup = ParsedCorpus::new(vec![
        ParsedMessage {
            line_id: 3,
            predicted: t("a"),
            gold: t("a"),
        },
        ParsedMessage {
            line_id: 3,
            predicted: t("b"),
            gold: t("b"),
        },
    ]);
    assert_eq!(dup, Err(MetricsError::DuplicateLineId(3)));

    let ok = ParsedCorpus::from_sides(
        vec![(2, t("b")), (1, t("a"))],
        vec![(1, t("a")), (2, t("c"))],
    )
    .unwrap();
    assert_eq!(ok.messages()[0].line_id, 1);
    assert_eq!(ok.messages()[1].predicted, t("b"));

    let missing = ParsedCorpus::from_sides(vec![(1, t("a"))], vec![(1, t("a")), (2, t("b"))]);
    assert_eq!(missing, Err(MetricsError::LineIdMismatch(2)));
    let extra = ParsedCorpus::from_sides(vec![(1, t("a")), (9, t("b"))], vec![(1, t("a"))]);
    assert_eq!(extra, Err(MetricsError::LineIdMismatch(9)));
}

#[test]
fn robustness_examples() {
    let r = robustness_report(&[1.0, 1.0]).unwrap();
    assert_eq!((r.mean, r.std, r.population_std), (1.0, 0.0, 0.0));

    let r = robustness_report(&[0.9, 1.1]).unwrap();
    assert!((r.mean - 1.0).abs() < 1e-12);
    assert!((r.population_std - 0.1).abs() < 1e-12);
    assert!((r.std - 0.02f64.sqrt()).abs() < 1e-12);

    assert_eq!(
        robustness_report(&[0.5]),
        Err(MetricsError::TooFewDatasets { n: 1 })
    );
}

#[test]
fn category_confusion_counts_wrong_labels_only() {
    let c = corpus(&[
        (1, "took [OID] ms", "took [TDA] ms"),
        (2, "x [OID] [LOI]", "x [OID] [OBN]"),
        (3, "exact [OID]", "exact [OID]"),
        (4, "wrong words", "other words"),
    ]);
    let conf = category_confusion(&c);
    assert_eq!(conf.messages, 2);
    assert_eq!(conf.positions, 2);
    assert_eq!(conf.pairs["[TDA] -> [OID]"], 1);
    assert_eq!(conf.pairs["[OBN] -> [LOI]"], 1);
}

#[test]
fn report_round_trip_and_aggregate() {
    let a = corpus(&[(1, "a", "a"), (2, "b", "c")]);
    let b = corpus(&[(1, "x [OID]", "x [TDA]")]);
    let mut scores = BTreeMap::new();
    scores.insert(
        "A".to_string(),
        DatasetScores::compute(&a, Mode::General).unwrap(),
    );
    scores.insert(
        "B".to_string(),
        DatasetScores::compute(&b, Mode::VariableAware).unwrap(),
    );
    let report = MetricsReport::from_scores(scores);
    let agg = report.aggregate.clone().unwrap();
    assert_eq!(agg.mean_pa, (0.5 + 0.0) / 2.0);
    assert_eq!(agg.mean_ga, 1.0);
    assert_eq!(report.datasets["B"].pa_general, Some(1.0));
    assert!(report.datasets["A"].category_confusion.is_none());

    let json = report.to_json();
    assert_eq!(MetricsReport::from_json(&json).unwrap(), report);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["datasets"]["A"]["pa"], 0.5);
    assert!(value["aggregate"]["std_pa"].is_number());

    let single = MetricsReport::from_scores(report.datasets.into_iter().take(1).collect());
    assert_eq!(single.aggregate.unwrap().std_pa, None);
}

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("a".to_string()),
        Just("b".to_string()),
        Just("c".to_string()),
        Just("[VAR]".to_string()),
        Just("[OID]".to_string()),
        Just("<*>".to_string()),
    ]
}

fn random_corpus() -> impl Strategy<Value = ParsedCorpus> {
    proptest::collection::vec(
        (
            proptest::collection::vec(token(), 1..4),
            proptest::collection::vec(token(), 1..4),
        ),
        1..=20,
    )
    .prop_map(|rows| {
        ParsedCorpus::new(
            rows.into_iter()
                .enumerate()
                .map(|(i, (predicted, gold))| ParsedMessage {
                    line_id: i as u64,
                    predicted,
                    gold,
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn metrics_match_brute_force(c in random_corpus()) {
        prop_assert_eq!(group_accuracy(&c).unwrap(), brute_ga(&c));
        for mode in [Mode::General, Mode::VariableAware] {
            prop_assert_eq!(parsing_accuracy(&c, mode).unwrap(), brute_pa(&c, mode));
        }
    }

    #[test]
    fn metrics_are_permutation_invariant(c in random_corpus(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut ms = c.messages().to_vec();
        ms.shuffle(&mut rand_xoshiro::SplitMix64::seed_from_u64(seed));
        let shuffled = ParsedCorpus::new(ms).unwrap();
        prop_assert_eq!(group_accuracy(&c).unwrap(), group_accuracy(&shuffled).unwrap());
        prop_assert_eq!(
            parsing_accuracy(&c, Mode::VariableAware).unwrap(),
            parsing_accuracy(&shuffled, Mode::VariableAware).unwrap()
        );
    }

    #[test]
    fn perfect_parsing_implies_perfect_grouping(golds in proptest::collection::vec(proptest::collection::vec(token(), 1..4), 1..20)) {
        let c = ParsedCorpus::new(
            golds.iter().enumerate().map(|(i, g)| ParsedMessage { line_id: i as u64, predicted: g.clone(), gold: g.clone() }).collect(),
        ).unwrap();
        prop_assert_eq!(parsing_accuracy(&c, Mode::VariableAware).unwrap(), 1.0);
        prop_assert_eq!(group_accuracy(&c).unwrap(), 1.0);
    }
}
