use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use curate::augment::{
    apply_augmentation, index_corpus, relevance, search_augmentations, AugmentError, Corpus, CorpusEntry,
    CorpusMeta, JoinKind, Operation,
};
use curate::data::{Column, ColumnData, Dataset, Granularity, Provenance};
use curate::demo;
use curate::problem::Metric;
use curate::search::run_search;
use proptest::prelude::*;

fn entry(ds: Dataset, description: &str, keywords: &[&str]) -> CorpusEntry {
    CorpusEntry {
        path: format!("{}.csv", ds.name()).into(),
        meta: CorpusMeta::of(&ds, description, keywords),
        dataset: Arc::new(ds),
    }
}

fn ts(day: u32, hour: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 3, day).unwrap().and_hms_opt(hour, 0, 0).unwrap()
}

fn best_mae(ds: &Dataset, features: &[&str]) -> f64 {
    let spec = demo::problem(features).validate(ds).unwrap();
    let run = run_search(ds, &spec, 3, "r", &AtomicBool::new(false), &mut |_| {}).unwrap();
    run.scored()
        .filter_map(|s| s.score(Metric::Mae))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn weather_join_improves_demo_model() {
    let data = demo::generate(11);
    let corpus = Corpus::from_entries(
        data.corpus
            .into_iter()
            .map(|c| entry(c.dataset, c.description, c.keywords))
            .collect(),
    );
    let query = &data.collisions;
    let found = search_augmentations(&corpus, query, "weather");
    let weather = &found[0];
    assert_eq!(weather.entry.name, demo::WEATHER);
    let Operation::Join { plan } = &weather.operation else {
        panic!("expected a join")
    };
    let joined = corpus.apply(query, weather).unwrap();
    let non_key = weather.entry.columns.len() - plan.keys.len();
    assert_eq!(joined.columns().len(), query.columns().len() + non_key);
    assert_eq!(joined.row_count(), query.row_count());

    let before = best_mae(query, &["date", "trips"]);
    let after = best_mae(&joined, &["date", "trips", "temperature", "precipitation", "wind_speed"]);
    eprintln!("mae before {before} after {after}");
    assert!(after <= 0.9 * before, "before {before}, after {after}");
}

fn hourly(name: &str, days: &[u32], value: impl Fn(u32, u32) -> Option<f64>) -> Dataset {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for &d in days {
        for h in 0..24 {
            times.push(Some(ts(d, h)));
            values.push(value(d, h));
        }
    }
    Dataset::new(
        name,
        vec![Column::temporal("time", times), Column::numeric("temp", values)],
        Provenance::Corpus,
    )
    .unwrap()
}

fn daily_query(days: &[u32]) -> Dataset {
    Dataset::new(
        "q",
        vec![
            Column::temporal("date", days.iter().map(|&d| Some(ts(d, 0))).collect()),
            Column::numeric("y", days.iter().map(|&d| Some(d as f64)).collect()),
        ],
        Provenance::Uploaded,
    )
    .unwrap()
}

#[test]
fn hourly_join_matches_hand_means() {
    // 48 hourly readings over two days, some with fractional parts
    let value = |d: u32, h: u32| Some(d as f64 * 10.0 + h as f64 * 0.25 - if h.is_multiple_of(5) { 1.5 } else { 0.0 });
    let weather = hourly("weather", &[1, 2], value);
    let query = daily_query(&[1, 2]);
    let corpus = Corpus::from_entries(vec![entry(weather, "", &["weather"])]);
    let found = search_augmentations(&corpus, &query, "weather");
    assert_eq!(found.len(), 1);
    let Operation::Join { plan } = &found[0].operation else { panic!() };
    assert!(matches!(plan.kind, JoinKind::Temporal { granularity: Granularity::Day, .. }));
    let joined = corpus.apply(&query, &found[0]).unwrap();
    let got = joined.column("temp").unwrap().data.as_numeric().unwrap().to_vec();
    let hand: Vec<Option<f64>> = [1, 2]
        .iter()
        .map(|&d| {
            let vals: Vec<f64> = (0..24).map(|h| value(d, h).unwrap()).collect();
            Some(vals.iter().sum::<f64>() / 24.0)
        })
        .collect();
    assert_eq!(got, hand);
    assert_eq!(got[0], Some(10.0 + 0.25 * 11.5 - 1.5 * 5.0 / 24.0));
}

#[test]
fn search_examples() {
    let weather_daily = Dataset::new(
        "weather-daily",
        vec![
            Column::temporal("date", (1..=3).map(|d| Some(ts(d, 0))).collect()),
            Column::numeric("temp", vec![Some(1.0), Some(2.0), Some(3.0)]),
        ],
        Provenance::Corpus,
    )
    .unwrap();
    let census = Dataset::new(
        "census-by-state",
        vec![
            Column::categorical("state", vec![Some("NY".into())]),
            Column::numeric("population", vec![Some(1.0)]),
        ],
        Provenance::Corpus,
    )
    .unwrap();
    let corpus = Corpus::from_entries(vec![
        entry(weather_daily, "daily weather", &["weather"]),
        entry(census, "weather unrelated census", &["weather"]),
    ]);
    let query = daily_query(&[1, 2]);
    let found = search_augmentations(&corpus, &query, "weather");
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].entry.name, "weather-daily");
    assert_eq!(found[0].operation.label(), "temporal_join");

    let same = query.clone().with_name("copy");
    let corpus = Corpus::from_entries(vec![entry(same, "", &[])]);
    let found = search_augmentations(&corpus, &query, "");
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].operation.label(), "union");
    let stacked = corpus.apply(&query, &found[0]).unwrap();
    assert_eq!(stacked.row_count(), 4);
}

#[test]
fn name_match_outranks_description_match() {
    let mk = |name: &str| {
        Dataset::new(
            name,
            vec![
                Column::temporal("date", vec![Some(ts(1, 0))]),
                Column::numeric("v", vec![Some(1.0)]),
            ],
            Provenance::Corpus,
        )
        .unwrap()
    };
    let by_name = entry(mk("rain-gauge"), "sensor readings", &[]);
    let by_description = entry(mk("aaa-sensors"), "rain totals", &[]);
    // name weight 3 against description weight 1
    assert_eq!(relevance(&by_name.meta, "rain"), 3.0);
    assert_eq!(relevance(&by_description.meta, "rain"), 1.0);
    let corpus = Corpus::from_entries(vec![by_name, by_description]);
    let found = search_augmentations(&corpus, &daily_query(&[1]), "rain");
    let names: Vec<&str> = found.iter().map(|c| c.entry.name.as_str()).collect();
    assert_eq!(names, vec!["rain-gauge", "aaa-sensors"]);
}

#[test]
fn stale_candidates_are_rejected() {
    let weather = hourly("weather", &[1], |_, h| Some(h as f64));
    let query = daily_query(&[1]);
    let corpus = Corpus::from_entries(vec![entry(weather.clone(), "", &[])]);
    let found = search_augmentations(&corpus, &query, "");
    let changed = hourly("weather", &[1], |_, h| Some(h as f64 + 1.0));
    assert!(matches!(
        apply_augmentation(&query, &changed, &found[0]),
        Err(AugmentError::StaleCandidate { .. })
    ));
    assert!(apply_augmentation(&query, &weather, &found[0]).is_ok());
    assert_eq!(query, daily_query(&[1]));
}

#[test]
fn empty_corpus_directory() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = index_corpus(dir.path()).unwrap();
    assert!(search_augmentations(&corpus, &daily_query(&[1]), "weather").is_empty());
}

fn key(i: Option<u8>) -> Option<String> {
    i.map(|i| format!("k{i}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // join then group-wise aggregation, computed by brute force
    #[test]
    fn left_join_law(
        q_keys in prop::collection::vec(prop::option::weighted(0.9, 0u8..6), 0..30),
        c_rows in prop::collection::vec(
            (prop::option::weighted(0.9, 0u8..8), prop::option::weighted(0.8, -100i32..100)),
            0..40,
        ),
    ) {
        let query = Dataset::new(
            "q",
            vec![
                Column::categorical("k", q_keys.iter().map(|&k| key(k)).collect()),
                Column::numeric("row", (0..q_keys.len()).map(|i| Some(i as f64)).collect()),
            ],
            Provenance::Uploaded,
        ).unwrap();
        let cand = Dataset::new(
            "c",
            vec![
                Column::categorical("k", c_rows.iter().map(|r| key(r.0)).collect()),
                Column::numeric("v", c_rows.iter().map(|r| r.1.map(f64::from)).collect()),
            ],
            Provenance::Corpus,
        ).unwrap();
        let corpus = Corpus::from_entries(vec![entry(cand, "", &[])]);
        let found = search_augmentations(&corpus, &query, "");
        let join = found.iter().find(|c| c.operation.label() == "join").unwrap();
        let joined = corpus.apply(&query, join).unwrap();
        prop_assert_eq!(joined.row_count(), query.row_count());
        prop_assert_eq!(&joined.columns()[..2], query.columns());
        let ColumnData::Numeric(v) = &joined.column("v").unwrap().data else { panic!() };
        for (i, qk) in q_keys.iter().enumerate() {
            let matches: Vec<f64> = match qk {
                None => vec![],
                Some(k) => c_rows
                    .iter()
                    .filter(|r| r.0 == Some(*k))
                    .filter_map(|r| r.1.map(f64::from))
                    .collect(),
            };
            let expected = (!matches.is_empty()).then(|| matches.iter().sum::<f64>() / matches.len() as f64);
            prop_assert_eq!(v[i], expected);
        }
    }
}
