//! Training run settings merged from a `key = value` file and flags.

use std::fs;
use std::path::{Path, PathBuf};

use udssm::model::{ModelDims, ModelKind};
use udssm::train::TrainConfig;
use udssm::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub model: Option<ModelKind>,
    pub pairs: Option<PathBuf>,
    pub val_pairs: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub glove: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub min_count: Option<usize>,
    pub embedding_dim: Option<usize>,
    pub hidden: Option<usize>,
}

impl RunConfig {
    /// Reads `key = value` lines; `#` starts a comment. Paths are taken as
    /// written, relative to the working directory.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg: format!("expected key = value, found {line:?}"),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<usize> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
        }
        match key {
            "model" => self.model = Some(value.parse()?),
            "pairs" => self.pairs = Some(value.into()),
            "val_pairs" => self.val_pairs = Some(value.into()),
            "vocab" => self.vocab = Some(value.into()),
            "glove" => self.glove = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "min_count" => self.min_count = Some(num(key, value)?),
            "embedding_dim" => self.embedding_dim = Some(num(key, value)?),
            "hidden" => self.hidden = Some(num(key, value)?),
            _ => self.train.set(key, value)?,
        }
        Ok(())
    }

    pub fn dims(&self) -> ModelDims {
        let d = ModelDims::default();
        ModelDims {
            embedding_dim: self.embedding_dim.unwrap_or(d.embedding_dim),
            hidden: self.hidden.unwrap_or(d.hidden),
        }
    }
}
