//! Corpus directory indexing.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::data::{read_dataset, write_csv, ColumnSchema, Dataset, Provenance, Sidecar};

/// Contents of `<name>.meta.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub columns: Vec<ColumnSchema>,
}

impl CorpusMeta {
    pub fn of(dataset: &Dataset, description: &str, keywords: &[&str]) -> Self {
        CorpusMeta {
            name: dataset.name().to_string(),
            description: description.to_string(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
            columns: dataset.columns().iter().map(ColumnSchema::of).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub meta: CorpusMeta,
    pub dataset: Arc<Dataset>,
}

/// Immutable index of a corpus directory, entries sorted by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
    warnings: Vec<String>,
}

impl Corpus {
    pub fn from_entries(mut entries: Vec<CorpusEntry>) -> Self {
        entries.sort_by(|a, b| a.meta.name.cmp(&b.meta.name));
        entries.dedup_by(|a, b| a.meta.name == b.meta.name);
        Corpus {
            entries,
            warnings: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.meta.name == name)
    }

    /// Entries skipped while indexing, one message each.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

fn load_entry(meta_path: &Path) -> Result<CorpusEntry, String> {
    let text = fs::read_to_string(meta_path).map_err(|e| e.to_string())?;
    let meta: CorpusMeta = serde_json::from_str(&text).map_err(|e| format!("bad metadata: {e}"))?;
    let file_name = meta_path.file_name().and_then(|f| f.to_str()).unwrap_or_default();
    let stem = file_name.trim_end_matches(".meta.json");
    if stem != meta.name {
        return Err(format!("metadata name {:?} does not match file name {stem:?}", meta.name));
    }
    let csv_path = meta_path.with_file_name(format!("{stem}.csv"));
    let file = fs::File::open(&csv_path).map_err(|e| format!("{}: {e}", csv_path.display()))?;
    let sidecar = Sidecar {
        name: meta.name.clone(),
        dtypes: meta.columns.iter().map(|c| (c.name.clone(), c.dtype)).collect(),
        granularities: Default::default(),
        provenance: Provenance::Corpus,
    };
    if sidecar.dtypes.len() != meta.columns.len() {
        return Err("metadata lists a column twice".into());
    }
    let dataset = read_dataset(file, &sidecar).map_err(|e| e.to_string())?;
    let actual: Vec<ColumnSchema> = dataset.columns().iter().map(ColumnSchema::of).collect();
    for (declared, found) in meta.columns.iter().zip(&actual) {
        let granularity_ok = declared.granularity.is_none() || declared.granularity == found.granularity;
        if declared.name != found.name || declared.dtype != found.dtype || !granularity_ok {
            return Err(format!("declared column {declared:?} does not match data {found:?}"));
        }
    }
    Ok(CorpusEntry {
        path: csv_path,
        meta,
        dataset: Arc::new(dataset),
    })
}

/// Indexes every `<name>.meta.json` + `<name>.csv` pair in `dir`. Entries
/// whose metadata disagrees with their data are skipped with a warning.
pub fn index_corpus(dir: &Path) -> Result<Corpus, AugmentError> {
    let io = |e: std::io::Error| AugmentError::Io(format!("{}: {e}", dir.display()));
    let mut metas: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    metas.retain(|p| p.file_name().and_then(|f| f.to_str()).is_some_and(|f| f.ends_with(".meta.json")));
    metas.sort();
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    let mut names = BTreeSet::new();
    for path in metas {
        match load_entry(&path) {
            Ok(entry) if !names.insert(entry.meta.name.clone()) => {
                warnings.push(format!("{}: duplicate entry name", path.display()));
            }
            Ok(entry) => entries.push(entry),
            Err(msg) => warnings.push(format!("{}: {msg}", path.display())),
        }
    }
    for w in &warnings {
        log::warn!("skipping corpus entry {w}");
    }
    let mut corpus = Corpus::from_entries(entries);
    corpus.warnings = warnings;
    Ok(corpus)
}

/// Writes `dataset` into `dir` in corpus layout.
pub fn save_corpus_entry(
    dir: &Path,
    dataset: &Dataset,
    description: &str,
    keywords: &[&str],
) -> Result<(), AugmentError> {
    let io = |e: std::io::Error| AugmentError::Io(e.to_string());
    fs::create_dir_all(dir).map_err(io)?;
    let meta = CorpusMeta::of(dataset, description, keywords);
    let file = fs::File::create(dir.join(format!("{}.csv", meta.name))).map_err(io)?;
    write_csv(dataset, std::io::BufWriter::new(file))?;
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(dir.join(format!("{}.meta.json", meta.name)), json + "\n").map_err(io)
}
