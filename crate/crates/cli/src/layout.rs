//! File layout of a run directory and small I/O helpers.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_snapshot(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn log(&self, stage: &str) -> PathBuf {
        self.root.join("logs").join(format!("{stage}.log"))
    }

    pub fn train_data(&self) -> PathBuf {
        self.root.join("data").join("train.trs")
    }

    pub fn test_data(&self) -> PathBuf {
        self.root.join("data").join("test.trs")
    }

    pub fn ground_truth(&self) -> PathBuf {
        self.root.join("data").join("ground_truth.json")
    }

    pub fn oracle_model(&self) -> PathBuf {
        self.root.join("model").join("classifier.json")
    }

    pub fn linear_model(&self) -> PathBuf {
        self.root.join("model").join("linear.trs")
    }

    pub fn train_report(&self) -> PathBuf {
        self.root.join("model").join("train_report.json")
    }

    pub fn subset(&self) -> PathBuf {
        self.root.join("subset.json")
    }

    pub fn maskset(&self) -> PathBuf {
        self.root.join("masks").join("maskset.trs")
    }

    pub fn map_dir(&self, method: &str) -> PathBuf {
        self.root.join("maps").join(method)
    }

    pub fn map(&self, method: &str, sample_id: usize) -> PathBuf {
        self.map_dir(method).join(format!("{sample_id:05}.trs"))
    }

    pub fn eval(&self, file: &str) -> PathBuf {
        self.root.join("eval").join(file)
    }

    pub fn curve(&self, file: &str) -> PathBuf {
        self.root.join("eval").join("curves").join(file)
    }

    pub fn bench(&self, file: &str) -> PathBuf {
        self.root.join("bench").join(file)
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.md")
    }

    pub fn ranks(&self) -> PathBuf {
        self.root.join("ranks.tsv")
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Creates the parent directory of `path`.
pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn remove_if_exists(path: &Path) -> CliResult<()> {
    let result = if path.is_dir() {
        fs::remove_dir_all(path)
    } else {
        fs::remove_file(path)
    };
    match result {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(io_err(path, e)),
        _ => Ok(()),
    }
}

/// Collects log lines for one stage and writes them without timestamps,
/// so that repeated runs produce identical log files.
#[derive(Debug, Default)]
pub struct StageLog {
    lines: Vec<String>,
}

impl StageLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn info(&mut self, line: impl Into<String>) {
        let line = line.into();
        log::info!("{line}");
        self.lines.push(line);
    }

    pub fn warn(&mut self, line: impl Into<String>) {
        let line = line.into();
        log::warn!("{line}");
        self.lines.push(format!("warning: {line}"));
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        write_text(path, &text)
    }
}
