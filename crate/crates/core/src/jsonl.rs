//! Line-delimited JSON helpers with path-carrying I/O errors.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::model::{self, Entity, ValidationError};

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

impl IoError {
    pub fn new(path: impl AsRef<Path>, source: io::Error) -> Self {
        IoError {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }
}

/// A record that failed to parse, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Reads non-blank lines of a file, keeping their 1-based line numbers.
pub fn read_lines(path: impl AsRef<Path>) -> Result<Vec<(usize, String)>, IoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IoError::new(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::new(path, e))?;
        if !line.trim().is_empty() {
            out.push((idx + 1, line));
        }
    }
    Ok(out)
}

/// Reads validated entities; bad lines are returned separately.
pub fn read_entities<E: Entity>(
    path: impl AsRef<Path>,
) -> Result<(Vec<E>, Vec<LineError>), IoError> {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (line, text) in read_lines(path)? {
        match model::deserialize::<E>(&text) {
            Ok(e) => ok.push(e),
            Err(err) => bad.push(LineError {
                line,
                message: err.to_string(),
            }),
        }
    }
    Ok((ok, bad))
}

/// Reads entities and fails on the first invalid line.
pub fn read_entities_strict<E: Entity>(path: impl AsRef<Path>) -> Result<Vec<E>, ReadError> {
    let path = path.as_ref();
    let (ok, bad) = read_entities(path)?;
    match bad.into_iter().next() {
        Some(first) => Err(ReadError::Invalid {
            path: path.to_path_buf(),
            line: first.line,
            message: first.message,
        }),
        None => Ok(ok),
    }
}

/// Reads plain serde records (no entity validation).
pub fn read_records<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, ReadError> {
    let path = path.as_ref();
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| ReadError::Invalid {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{}:{line}: {message}", path.display())]
    Invalid {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl From<(PathBuf, usize, ValidationError)> for ReadError {
    fn from((path, line, err): (PathBuf, usize, ValidationError)) -> Self {
        ReadError::Invalid {
            path,
            line,
            message: err.to_string(),
        }
    }
}

fn create_parent(path: &Path) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| IoError::new(parent, e))?;
        }
    }
    Ok(())
}

/// Writes canonical entity lines, replacing the file.
pub fn write_entities<'a, E: Entity + Clone + 'a>(
    path: impl AsRef<Path>,
    entities: impl IntoIterator<Item = &'a E>,
) -> Result<usize, IoError> {
    write_lines(path, entities.into_iter().map(model::serialize))
}

/// Writes plain serde records as compact JSON lines, replacing the file.
pub fn write_records<'a, T: Serialize + 'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<usize, IoError> {
    write_lines(
        path,
        records
            .into_iter()
            .map(|r| serde_json::to_string(r).expect("records serialize")),
    )
}

pub fn write_lines(
    path: impl AsRef<Path>,
    lines: impl IntoIterator<Item = String>,
) -> Result<usize, IoError> {
    let path = path.as_ref();
    create_parent(path)?;
    let file = File::create(path).map_err(|e| IoError::new(path, e))?;
    let mut writer = BufWriter::new(file);
    let mut count = 0;
    for line in lines {
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| IoError::new(path, e))?;
        count += 1;
    }
    writer.flush().map_err(|e| IoError::new(path, e))?;
    Ok(count)
}

/// Appends one line and syncs it to disk before returning.
pub fn append_line_durable(path: impl AsRef<Path>, line: &str) -> Result<(), IoError> {
    let path = path.as_ref();
    create_parent(path)?;
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| IoError::new(path, e))?;
    file.write_all(format!("{line}\n").as_bytes())
        .and_then(|_| file.sync_data())
        .map_err(|e| IoError::new(path, e))
}

/// Prepares an append-only log after a possible crash mid-write. If the
/// file does not end with a newline, its unterminated last line is either
/// cut off (when `is_complete` rejects it) or terminated. Returns whether
/// a fragment was cut off. Earlier bytes are never touched.
pub fn repair_tail(
    path: impl AsRef<Path>,
    is_complete: impl Fn(&str) -> bool,
) -> Result<bool, IoError> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(false),
        Err(e) => return Err(IoError::new(path, e)),
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(false);
    }
    let start = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let tail = String::from_utf8_lossy(&bytes[start..]);
    let file = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| IoError::new(path, e))?;
    if tail.trim().is_empty() || !is_complete(&tail) {
        file.set_len(start as u64)
            .and_then(|_| file.sync_data())
            .map_err(|e| IoError::new(path, e))?;
        Ok(true)
    } else {
        let mut file = file;
        use std::io::Seek;
        file.seek(io::SeekFrom::End(0))
            .and_then(|_| file.write_all(b"\n"))
            .and_then(|_| file.sync_data())
            .map_err(|e| IoError::new(path, e))?;
        Ok(false)
    }
}

/// Pretty JSON file with trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), IoError> {
    let path = path.as_ref();
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::new(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, ReadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::new(path, e))?;
    serde_json::from_str(&text).map_err(|e| ReadError::Invalid {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}
