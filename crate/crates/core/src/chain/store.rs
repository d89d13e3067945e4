//! Append-only block file: one JSON record per line, genesis first.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Block, Chain, ChainConfig, ChainError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("chain file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("chain file {path} line {line}: {source}")]
    Corrupt { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("chain file {path} does not replay: {source}")]
    Invalid { path: PathBuf, source: ChainError },
}

#[derive(Debug)]
pub struct ChainStore {
    path: PathBuf,
    file: File,
}

impl ChainStore {
    /// Opens or creates the file and replays it. A new file gets the genesis
    /// record.
    pub fn open(path: impl Into<PathBuf>, config: ChainConfig) -> Result<(Self, Chain), StoreError> {
        let path = path.into();
        let io = |source| StoreError::Io { path: path.clone(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let blocks = if path.exists() { Self::read_blocks(&path)? } else { Vec::new() };
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        let mut store = Self { path: path.clone(), file };
        let chain = if blocks.is_empty() {
            let chain = Chain::new(config);
            store.append(chain.head())?;
            chain
        } else {
            Chain::from_blocks(config, blocks).map_err(|source| StoreError::Invalid { path, source })?
        };
        Ok((store, chain))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, block: &Block) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(block).expect("blocks always serialize");
        line.push('\n');
        let io = |source| StoreError::Io { path: self.path.clone(), source };
        self.file.write_all(line.as_bytes()).map_err(io)?;
        self.file.sync_data().map_err(io)
    }

    pub fn read_blocks(path: &Path) -> Result<Vec<Block>, StoreError> {
        let io = |source| StoreError::Io { path: path.to_path_buf(), source };
        let reader = BufReader::new(File::open(path).map_err(io)?);
        let mut blocks = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let block = serde_json::from_str(&line)
                .map_err(|source| StoreError::Corrupt { path: path.to_path_buf(), line: i + 1, source })?;
            blocks.push(block);
        }
        Ok(blocks)
    }
}
