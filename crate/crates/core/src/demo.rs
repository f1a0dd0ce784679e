//! Synthetic demo data: a daily traffic-collisions table whose target
//! depends on weather that only the corpus carries.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::augment::{save_corpus_entry, AugmentError};
use crate::data::{write_csv, Column, Dataset, Provenance};
use crate::problem::{Budget, EvalMethod, Metric, ProblemSpec, TaskType};

pub const DEMO_DAYS: usize = 365;
pub const TARGET: &str = "collisions";
pub const WEATHER: &str = "weather-hourly";

/// Corpus dataset with its description and keywords.
pub struct CorpusDataset {
    pub dataset: Dataset,
    pub description: &'static str,
    pub keywords: &'static [&'static str],
}

pub struct DemoData {
    pub collisions: Dataset,
    pub corpus: Vec<CorpusDataset>,
}

struct Day {
    date: NaiveDateTime,
    temperature: f64,
    precipitation: f64,
    wind_speed: f64,
    trips: f64,
}

fn round(x: f64, digits: i32) -> f64 {
    let p = 10f64.powi(digits);
    (x * p).round() / p
}

fn days(rng: &mut ChaCha8Rng) -> Vec<Day> {
    let start = NaiveDate::from_ymd_opt(2023, 1, 1).expect("date").and_hms_opt(0, 0, 0).expect("time");
    let noise = Normal::new(0.0, 3.0).expect("sd");
    let rain = Exp::new(0.25).expect("rate");
    (0..DEMO_DAYS)
        .map(|d| {
            let season = (2.0 * PI * (d as f64 - 105.0) / 365.0).sin();
            let precipitation = if rng.random::<f64>() < 0.3 { rain.sample(rng) } else { 0.0 };
            Day {
                date: start + Duration::days(d as i64),
                temperature: 12.0 + 10.0 * season + noise.sample(rng),
                precipitation,
                wind_speed: (10.0 + noise.sample(rng)).abs(),
                trips: rng.random_range(1000.0..3000.0),
            }
        })
        .collect()
}

/// Deterministic demo dataset and corpus for `seed`.
///
/// `collisions = 20 + 0.04 trips - 0.8 temperature + 15 precipitation + e`
/// with daily weather means and `e ~ N(0, 2)`.
pub fn generate(seed: u64) -> DemoData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = days(&mut rng);
    let eps = Normal::new(0.0, 2.0).expect("sd");
    let collisions: Vec<Option<f64>> = days
        .iter()
        .map(|d| {
            let y = 20.0 + 0.04 * d.trips - 0.8 * d.temperature + 15.0 * d.precipitation + eps.sample(&mut rng);
            Some(round(y, 2))
        })
        .collect();
    let collisions = Dataset::new(
        "collisions",
        vec![
            Column::temporal("date", days.iter().map(|d| Some(d.date)).collect()),
            Column::numeric("trips", days.iter().map(|d| Some(round(d.trips, 0))).collect()),
            Column::numeric(TARGET, collisions),
        ],
        Provenance::Uploaded,
    )
    .expect("demo columns align");

    // hourly shapes sum to zero over a day
    let shape = |h: usize, phase: f64| (2.0 * PI * (h as f64 - phase) / 24.0).sin();
    let hours: Vec<(&Day, usize)> = days.iter().flat_map(|d| (0..24).map(move |h| (d, h))).collect();
    let weather = Dataset::new(
        WEATHER,
        vec![
            Column::temporal("time", hours.iter().map(|(d, h)| Some(d.date + Duration::hours(*h as i64))).collect()),
            Column::numeric(
                "temperature",
                hours.iter().map(|(d, h)| Some(d.temperature + 4.0 * shape(*h, 9.0))).collect(),
            ),
            Column::numeric(
                "precipitation",
                hours
                    .iter()
                    .map(|(d, h)| Some(d.precipitation * (1.0 + 0.5 * shape(*h, 0.0))))
                    .collect(),
            ),
            Column::numeric(
                "wind_speed",
                hours.iter().map(|(d, h)| Some(d.wind_speed + 2.0 * shape(*h, 15.0))).collect(),
            ),
        ],
        Provenance::Corpus,
    )
    .expect("weather columns align");

    let bike_noise = Normal::new(0.0, 1000.0).expect("sd");
    let bikes = Dataset::new(
        "citibike-daily",
        vec![
            Column::temporal("date", days.iter().map(|d| Some(d.date)).collect()),
            Column::numeric(
                "bike_trips",
                days.iter()
                    .map(|d| {
                        let b = 20000.0 + 800.0 * d.temperature - 1500.0 * d.precipitation + bike_noise.sample(&mut rng);
                        Some(round(b.max(0.0), 0))
                    })
                    .collect(),
            ),
        ],
        Provenance::Corpus,
    )
    .expect("bike columns align");

    let states = ["CA", "FL", "IL", "MA", "NJ", "NY", "OH", "PA", "TX", "WA"];
    let census = Dataset::new(
        "census-by-state",
        vec![
            Column::categorical("state", states.iter().map(|s| Some(s.to_string())).collect()),
            Column::numeric(
                "population",
                states.iter().map(|_| Some(round(rng.random_range(5e6..4e7), 0))).collect(),
            ),
            Column::numeric(
                "median_income",
                states.iter().map(|_| Some(round(rng.random_range(5e4..9e4), 0))).collect(),
            ),
        ],
        Provenance::Corpus,
    )
    .expect("census columns align");

    DemoData {
        collisions,
        corpus: vec![
            CorpusDataset {
                dataset: weather,
                description: "Hourly weather observations: temperature, precipitation and wind speed",
                keywords: &["weather", "climate", "rain", "temperature"],
            },
            CorpusDataset {
                dataset: bikes,
                description: "Daily bike share trip counts",
                keywords: &["bike", "citibike", "transportation", "trips"],
            },
            CorpusDataset {
                dataset: census,
                description: "Population and income by state",
                keywords: &["census", "population", "demographics"],
            },
        ],
    }
}

/// Regression problem on the demo dataset over `features`.
pub fn problem(features: &[&str]) -> ProblemSpec {
    ProblemSpec {
        task_type: TaskType::Regression,
        target: TARGET.into(),
        features: features.iter().map(|f| f.to_string()).collect(),
        primary_metric: Metric::Mae,
        report_metrics: Metric::for_task(TaskType::Regression),
        eval_method: EvalMethod::Kfold { k: 5 },
        budget: Budget {
            max_pipelines: 30,
            time_limit_seconds: 120,
        },
    }
}

/// Writes `collisions.csv`, `problem.json` and `corpus/` into `dir`.
pub fn write_demo(dir: &Path, seed: u64) -> Result<(), AugmentError> {
    let io = |e: std::io::Error| AugmentError::Io(e.to_string());
    let data = generate(seed);
    std::fs::create_dir_all(dir).map_err(io)?;
    let file = std::fs::File::create(dir.join("collisions.csv")).map_err(io)?;
    write_csv(&data.collisions, std::io::BufWriter::new(file))?;
    std::fs::write(dir.join("problem.json"), problem(&["date", "trips"]).to_json() + "\n").map_err(io)?;
    for c in &data.corpus {
        save_corpus_entry(&dir.join("corpus"), &c.dataset, c.description, c.keywords)?;
    }
    Ok(())
}
