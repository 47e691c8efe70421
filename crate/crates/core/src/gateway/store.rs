//! Session snapshots and the file-backed store that holds them.
//!
//! A snapshot carries the spec source and the transition log, never the
//! state itself: loading replays the log and refuses anything that does not
//! replay to the recorded keys.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::MonitorError;
use crate::lang::{check_source, pretty_print};
use crate::monitor::{Rejection, Session, TransitionRecord};
use crate::norm::{ContractSpec, Time};

pub const SNAPSHOT_FORMAT: &str = "pact-session";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error("unsupported snapshot {format} v{version}")]
    Version { format: String, version: u32 },
    #[error("snapshot does not replay: {0}")]
    Replay(#[from] MonitorError),
    #[error("no such id `{0}`")]
    NotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredSession {
    pub format: String,
    pub version: u32,
    pub id: String,
    pub contract_id: String,
    pub epoch: Time,
    pub clock: Time,
    pub spec_source: String,
    pub log: Vec<TransitionRecord>,
    #[serde(default)]
    pub rejected: Vec<Rejection>,
}

/// Content hash of the normalised spec, so reformatting does not change it.
pub fn contract_id(spec: &ContractSpec) -> String {
    hex::encode(Sha256::digest(pretty_print(spec).as_bytes()))
}

/// A fresh unguessable session id.
pub fn new_session_id() -> String {
    let mut bytes = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

pub fn save_session(id: &str, session: &Session) -> StoredSession {
    StoredSession {
        format: SNAPSHOT_FORMAT.into(),
        version: SNAPSHOT_VERSION,
        id: id.into(),
        contract_id: contract_id(session.spec()),
        epoch: session.epoch(),
        clock: session.clock(),
        spec_source: pretty_print(session.spec()),
        log: session.history().to_vec(),
        rejected: session.rejected().to_vec(),
    }
}

pub fn load_session(stored: &StoredSession) -> Result<Session, StoreError> {
    if stored.format != SNAPSHOT_FORMAT || stored.version != SNAPSHOT_VERSION {
        return Err(StoreError::Version {
            format: stored.format.clone(),
            version: stored.version,
        });
    }
    let report = check_source(&stored.spec_source);
    let Some(spec) = report.valid_spec() else {
        let first = report.diagnostics.iter().find(|d| d.is_error());
        return Err(StoreError::Corrupt(format!(
            "embedded spec does not check: {}",
            first.map_or_else(String::new, ToString::to_string)
        )));
    };
    if contract_id(spec) != stored.contract_id {
        return Err(StoreError::Corrupt("contract id does not match the embedded spec".into()));
    }
    Ok(Session::from_log(
        spec.clone(),
        stored.epoch,
        stored.clock,
        stored.log.clone(),
        stored.rejected.clone(),
    )?)
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric())
}

/// One directory, one file per contract and per session.
#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("contracts"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(FileStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, kind: &str, id: &str, ext: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound(id.into()));
        }
        Ok(self.root.join(kind).join(format!("{id}.{ext}")))
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    fn read(path: &Path, id: &str) -> Result<String, StoreError> {
        fs::read_to_string(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound(id.into()),
            _ => StoreError::Io(e),
        })
    }

    /// Store normalised source under its content hash.
    pub fn put_contract(&self, spec: &ContractSpec) -> Result<String, StoreError> {
        let id = contract_id(spec);
        let path = self.path("contracts", &id, "pact")?;
        if !path.exists() {
            Self::write_atomic(&path, pretty_print(spec).as_bytes())?;
        }
        Ok(id)
    }

    pub fn get_contract_source(&self, id: &str) -> Result<String, StoreError> {
        Self::read(&self.path("contracts", id, "pact")?, id)
    }

    pub fn put_session(&self, stored: &StoredSession) -> Result<(), StoreError> {
        let path = self.path("sessions", &stored.id, "json")?;
        let json = serde_json::to_vec_pretty(stored).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        Self::write_atomic(&path, &json)
    }

    pub fn get_session(&self, id: &str) -> Result<StoredSession, StoreError> {
        let text = Self::read(&self.path("sessions", id, "json")?, id)?;
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt(e.to_string()))
    }
}
