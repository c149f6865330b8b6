use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::TrialError;
use crate::store::{Session, TrialResponse};

/// One line of the response log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Session(Session),
    Response(TrialResponse),
}

/// Single appender; every event is flushed and synced before it is
/// acknowledged.
#[derive(Debug)]
pub(crate) struct Appender {
    path: PathBuf,
    file: File,
}

impl Appender {
    pub(crate) fn open(path: &Path) -> Result<Self, TrialError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| TrialError::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| TrialError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub(crate) fn append(&mut self, event: &LogEvent) -> Result<(), TrialError> {
        let mut line = serde_json::to_vec(event).expect("log events serialize");
        line.push(b'\n');
        self.file
            .write_all(&line)
            .and_then(|()| self.file.sync_data())
            .map_err(|e| TrialError::io(&self.path, e))
    }
}

/// Reads every event in order. A missing file is an empty log. A truncated
/// final line (crash mid-write) is dropped with a warning; corruption
/// elsewhere is an error.
pub(crate) fn replay(path: &Path) -> Result<Vec<LogEvent>, TrialError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(TrialError::io(path, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| TrialError::io(path, e))?;
    let mut events = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(ev) => events.push(ev),
            Err(e) if i + 1 == lines.len() => {
                log::warn!("{}: dropping truncated last entry: {e}", path.display());
            }
            Err(e) => {
                return Err(TrialError::Log {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(events)
}

/// Cuts off a partial last line so the next append starts on a fresh line.
pub(crate) fn repair_tail(path: &Path) -> Result<(), TrialError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(TrialError::io(path, e)),
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let file = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| TrialError::io(path, e))?;
    file.set_len(keep as u64).map_err(|e| TrialError::io(path, e))
}
