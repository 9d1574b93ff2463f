//! Persistence: JSON documents for drafts, sessions and cached pipeline
//! output, plus the per-assignment event files. Without a data directory
//! everything stays in memory.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::ServiceError;
use crate::events::{EventFiles, GradingEvent};

/// A filesystem-safe name for an id. Ids of other shapes are hashed.
pub fn file_stem(id: &str) -> String {
    if !id.is_empty() && id.len() <= 100 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        id.to_string()
    } else {
        crate::digest_hex(id.as_bytes())[..32].to_string()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    root: Option<PathBuf>,
    events: Option<EventFiles>,
}

fn storage<E: std::fmt::Display>(e: E) -> ServiceError {
    ServiceError::Storage(e.to_string())
}

impl Store {
    pub fn in_memory() -> Self {
        Store::default()
    }

    pub fn on_disk(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        for sub in ["drafts", "sessions", "cache"] {
            std::fs::create_dir_all(root.join(sub)).map_err(storage)?;
        }
        let events = EventFiles::new(root.join("events")).map_err(storage)?;
        Ok(Store { root: Some(root), events: Some(events) })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn put<T: Serialize>(&self, kind: &str, id: &str, value: &T) -> Result<(), ServiceError> {
        let Some(root) = &self.root else { return Ok(()) };
        let path = root.join(kind).join(format!("{}.json", file_stem(id)));
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(value).map_err(storage)?).map_err(storage)?;
        std::fs::rename(&tmp, &path).map_err(storage)
    }

    pub fn get<T: DeserializeOwned>(&self, kind: &str, id: &str) -> Result<Option<T>, ServiceError> {
        let Some(root) = &self.root else { return Ok(None) };
        let path = root.join(kind).join(format!("{}.json", file_stem(id)));
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(storage),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(storage(e)),
        }
    }

    pub fn all<T: DeserializeOwned>(&self, kind: &str) -> Result<Vec<T>, ServiceError> {
        let Some(root) = &self.root else { return Ok(Vec::new()) };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(root.join(kind))
            .map_err(storage)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| serde_json::from_slice(&std::fs::read(p).map_err(storage)?).map_err(storage))
            .collect()
    }

    pub fn append_event(&self, event: &GradingEvent) -> Result<(), ServiceError> {
        match &self.events {
            Some(files) => files.append(event).map_err(storage),
            None => Ok(()),
        }
    }

    pub fn load_events(&self) -> Result<Vec<GradingEvent>, ServiceError> {
        match &self.events {
            Some(files) => files.read_all().map_err(storage),
            None => Ok(Vec::new()),
        }
    }
}
