//! Attack log: the JSON record of every DoS burst, used to cross-check
//! window labels.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CaptureError;
use crate::scenario::AttackEvent;

pub const ATTACK_LOG_SCHEMA_VERSION: u32 = 1;

/// On-disk shape: `{"schema_version":1,"events":[...]}` with events
/// sorted by start time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackLogFile {
    pub schema_version: u32,
    pub events: Vec<AttackEvent>,
}

impl AttackLogFile {
    pub fn new(events: Vec<AttackEvent>) -> Result<Self, CaptureError> {
        if !events.windows(2).all(|w| w[0].start_us <= w[1].start_us) {
            return Err(CaptureError::UnsortedEvents);
        }
        Ok(Self { schema_version: ATTACK_LOG_SCHEMA_VERSION, events })
    }
}

pub fn write_attack_log(events: &[AttackEvent], path: &Path) -> Result<(), CaptureError> {
    let log = AttackLogFile::new(events.to_vec())?;
    fs::write(path, serde_json::to_string(&log)?)?;
    Ok(())
}

pub fn read_attack_log(path: &Path) -> Result<AttackLogFile, CaptureError> {
    let log: AttackLogFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if log.schema_version != ATTACK_LOG_SCHEMA_VERSION {
        return Err(CaptureError::UnknownSchemaVersion(log.schema_version));
    }
    if !log.events.windows(2).all(|w| w[0].start_us <= w[1].start_us) {
        return Err(CaptureError::UnsortedEvents);
    }
    Ok(log)
}
