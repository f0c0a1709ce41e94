//! On-disk scenario store.
//!
//! ```text
//! <root>/manifest.json            {property, ladder, horizon, dates}
//! <root>/scenarios/YYYY-MM-DD.json
//! ```
//!
//! Scenario documents are immutable once written. Putting an identical
//! document again is a no-op; putting a different one for the same date is
//! an error.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rmcurve_core::domain::{BookingHorizon, DemandScenario, RateLadder};
use rmcurve_core::pipeline::History;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("no scenario for {0}")]
    NotFound(NaiveDate),
    #[error("scenario for {0} already stored with different contents")]
    Conflict(NaiveDate),
    #[error("scenario for {0} does not match the store's ladder or horizon")]
    Mismatch(NaiveDate),
    #[error("scenario for {0} is cumulated; the store keeps raw counts")]
    Cumulated(NaiveDate),
    #[error("manifest lists {0} but its document is missing")]
    MissingDocument(NaiveDate),
    #[error("document for {0} is not listed in the manifest")]
    Unlisted(NaiveDate),
    #[error("store already exists at {0}")]
    Exists(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub property: String,
    pub ladder: RateLadder,
    pub horizon: u32,
    pub dates: Vec<NaiveDate>,
}

#[derive(Debug)]
pub struct ScenarioStore {
    root: PathBuf,
    manifest: Manifest,
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T, StoreError> {
    r.map_err(|source| StoreError::Io { path: path.to_path_buf(), source })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    let bytes = io(path, fs::read(path))?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Json { path: path.to_path_buf(), source })
}

/// Writes through a temporary file so a crash never leaves half a document.
fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let bytes = serde_json::to_vec_pretty(value).map_err(|source| StoreError::Json { path: path.to_path_buf(), source })?;
    let tmp = path.with_extension("json.tmp");
    io(&tmp, fs::write(&tmp, bytes))?;
    io(path, fs::rename(&tmp, path))
}

impl ScenarioStore {
    pub fn create(root: &Path, property: &str, ladder: RateLadder, horizon: BookingHorizon) -> Result<Self, StoreError> {
        let manifest_path = root.join("manifest.json");
        if manifest_path.exists() {
            return Err(StoreError::Exists(root.to_path_buf()));
        }
        let dir = root.join("scenarios");
        io(&dir, fs::create_dir_all(&dir))?;
        let manifest = Manifest { property: property.into(), ladder, horizon: horizon.length(), dates: Vec::new() };
        write_json(&manifest_path, &manifest)?;
        Ok(ScenarioStore { root: root.to_path_buf(), manifest })
    }

    /// Opens a store and checks that the manifest and the documents agree.
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        let manifest: Manifest = read_json(&root.join("manifest.json"))?;
        let store = ScenarioStore { root: root.to_path_buf(), manifest };
        let dir = store.root.join("scenarios");
        let mut on_disk = Vec::new();
        for entry in io(&dir, fs::read_dir(&dir))? {
            let name = io(&dir, entry)?.file_name();
            let name = name.to_string_lossy();
            if let Some(date) = name.strip_suffix(".json").and_then(|s| s.parse::<NaiveDate>().ok()) {
                on_disk.push(date);
            }
        }
        on_disk.sort();
        for d in &store.manifest.dates {
            if on_disk.binary_search(d).is_err() {
                return Err(StoreError::MissingDocument(*d));
            }
        }
        for d in &on_disk {
            if store.manifest.dates.binary_search(d).is_err() {
                return Err(StoreError::Unlisted(*d));
            }
        }
        Ok(store)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.manifest.dates
    }

    fn doc_path(&self, date: NaiveDate) -> PathBuf {
        self.root.join("scenarios").join(format!("{date}.json"))
    }

    pub fn put(&mut self, scenario: &DemandScenario) -> Result<(), StoreError> {
        let date = scenario.checkin_date;
        if scenario.is_cumulated() {
            return Err(StoreError::Cumulated(date));
        }
        if scenario.rates != self.manifest.ladder.rates() || scenario.horizon() != self.manifest.horizon {
            return Err(StoreError::Mismatch(date));
        }
        match self.manifest.dates.binary_search(&date) {
            Ok(_) => {
                if &self.get(date)? == scenario {
                    Ok(())
                } else {
                    Err(StoreError::Conflict(date))
                }
            }
            Err(pos) => {
                write_json(&self.doc_path(date), scenario)?;
                self.manifest.dates.insert(pos, date);
                write_json(&self.root.join("manifest.json"), &self.manifest)
            }
        }
    }

    pub fn get(&self, date: NaiveDate) -> Result<DemandScenario, StoreError> {
        if self.manifest.dates.binary_search(&date).is_err() {
            return Err(StoreError::NotFound(date));
        }
        let s: DemandScenario = read_json(&self.doc_path(date))?;
        if s.checkin_date != date {
            return Err(StoreError::Mismatch(date));
        }
        Ok(s)
    }

    pub fn load_all(&self) -> Result<Vec<DemandScenario>, StoreError> {
        self.manifest.dates.iter().map(|&d| self.get(d)).collect()
    }

    pub fn history(&self) -> Result<History, StoreError> {
        // Dates are unique and every document matches the ladder, so this cannot fail.
        Ok(History::new(self.load_all()?).expect("store documents form a valid history"))
    }
}
