//! Cassettes: ordered request/response recordings as JSON Lines, one entry
//! per line. Digests are recomputed on load so tampering or drift is caught
//! before replay starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LlmError, RequestBody};
use crate::util;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub index: usize,
    pub digest: String,
    pub request: RequestBody,
    pub response: String,
}

#[derive(Debug, Clone, Default)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn empty() -> Self {
        Cassette { entries: Vec::new() }
    }

    pub fn append(&mut self, entry: CassetteEntry) {
        debug_assert_eq!(entry.index, self.entries.len());
        self.entries.push(entry);
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|source| LlmError::CassetteIo {
            path: path.display().to_string(),
            source,
        })?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CassetteEntry =
                serde_json::from_str(line).map_err(|e| LlmError::CorruptCassette {
                    path: path.display().to_string(),
                    detail: format!("line {}: {e}", lineno + 1),
                })?;
            if entry.index != entries.len() {
                return Err(LlmError::CorruptCassette {
                    path: path.display().to_string(),
                    detail: format!(
                        "entry indices must be contiguous from 0: line {} has index {}",
                        lineno + 1,
                        entry.index
                    ),
                });
            }
            let recomputed = entry.request.digest();
            if recomputed != entry.digest {
                return Err(LlmError::CorruptCassette {
                    path: path.display().to_string(),
                    detail: format!(
                        "entry {} digest does not match its request (stored {}, recomputed {})",
                        entry.index, entry.digest, recomputed
                    ),
                });
            }
            entries.push(entry);
        }
        Ok(Cassette { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        util::write_atomic(path, out.as_bytes()).map_err(|source| LlmError::CassetteIo {
            path: path.display().to_string(),
            source,
        })
    }
}
