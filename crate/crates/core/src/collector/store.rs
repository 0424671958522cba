//! Append-only JSON-lines persistence for sessions and responses.
//!
//! Every append is written as one complete line, flushed and `fsync`ed
//! before returning. On open, a trailing partial line left by a crash is
//! truncated away so later appends start on a line boundary.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const SESSIONS_FILE: &str = "sessions.jsonl";

#[derive(Debug)]
pub struct AppendLog {
    path: PathBuf,
    file: File,
}

impl AppendLog {
    /// Open (creating if needed) and return the complete lines already present.
    pub fn open(path: &Path) -> io::Result<(Self, Vec<String>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        // Bytes, not a String: a torn tail may end inside a UTF-8 sequence.
        let mut content = Vec::new();
        file.read_to_end(&mut content)?;
        let complete = content
            .iter()
            .rposition(|&b| b == b'\n')
            .map_or(0, |pos| pos + 1);
        if complete != content.len() {
            file.set_len(complete as u64)?;
            file.seek(SeekFrom::End(0))?;
            file.sync_all()?;
        }
        let text = std::str::from_utf8(&content[..complete])
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let lines = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect();
        Ok((
            Self {
                path: path.to_path_buf(),
                file,
            },
            lines,
        ))
    }

    pub fn append<T: Serialize>(&mut self, value: &T) -> io::Result<String> {
        let mut line = serde_json::to_string(value).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.file.sync_data()?;
        line.pop();
        Ok(line)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Session and response logs under one directory.
#[derive(Debug)]
pub struct Store {
    pub sessions: AppendLog,
    pub responses: AppendLog,
}

pub struct Recovered {
    pub sessions: Vec<String>,
    pub responses: Vec<String>,
}

impl Store {
    pub fn open(dir: &Path) -> io::Result<(Self, Recovered)> {
        fs::create_dir_all(dir)?;
        let (sessions, session_lines) = AppendLog::open(&dir.join(SESSIONS_FILE))?;
        let (responses, response_lines) = AppendLog::open(&dir.join(RESPONSES_FILE))?;
        Ok((
            Self {
                sessions,
                responses,
            },
            Recovered {
                sessions: session_lines,
                responses: response_lines,
            },
        ))
    }

    /// Read the response log as currently persisted.
    pub fn read_responses(&self) -> io::Result<String> {
        fs::read_to_string(self.responses.path())
    }
}

/// Parse JSON lines, reporting the 1-based line number of the first failure.
pub fn parse_lines<T: DeserializeOwned>(
    content: &str,
) -> Result<Vec<T>, (usize, serde_json::Error)> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e)))
        .collect()
}
