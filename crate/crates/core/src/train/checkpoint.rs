//! Binary checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "UDSSMCKP"  version:u32  kind:u8
//! header_len:u32  header:UTF-8 "key=value\n" lines
//! repeated { name_len:u32 name rank:u32 extents:u32×rank values:f64×Π extents }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::model::{AnyModel, ModelKind, Udssm1Params, Udssm2Params};
use crate::nn::Vocab;
use crate::tensor::{ParamStore, Tensor};

pub const MAGIC: &[u8; 8] = b"UDSSMCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A model plus its textual header.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: AnyModel,
    pub header: BTreeMap<String, String>,
}

impl Checkpoint {
    /// Header records the dimensions, the vocabulary and, when given, the
    /// training configuration under `train.` keys.
    pub fn new(model: AnyModel, cfg: Option<&TrainConfig>) -> Self {
        let (vocab, dims) = match &model {
            AnyModel::Udssm1(p) => (&p.emb.vocab, p.dims()),
            AnyModel::Udssm2(p) => (&p.emb.vocab, p.dims()),
        };
        let mut header = BTreeMap::new();
        header.insert("model".to_string(), model_name(&model).to_string());
        header.insert("embedding_dim".to_string(), dims.embedding_dim.to_string());
        header.insert("hidden".to_string(), dims.hidden.to_string());
        header.insert("vocab".to_string(), vocab.tokens().join(" "));
        if let Some(cfg) = cfg {
            for (k, v) in cfg.entries() {
                header.insert(format!("train.{k}"), v);
            }
        }
        Checkpoint { model, header }
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            AnyModel::Udssm1(_) => ModelKind::Udssm1,
            AnyModel::Udssm2(_) => ModelKind::Udssm2,
        }
    }

    fn store(&self) -> &ParamStore {
        match &self.model {
            AnyModel::Udssm1(p) => &p.store,
            AnyModel::Udssm2(p) => &p.store,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(self.kind().code());

        let mut header = String::new();
        for (k, v) in &self.header {
            if k.is_empty() || k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::Format(format!(
                    "header entry {k:?} cannot be stored"
                )));
            }
            header.push_str(k);
            header.push('=');
            header.push_str(v);
            header.push('\n');
        }
        put_len(&mut out, header.len())?;
        out.extend_from_slice(header.as_bytes());

        for (_, name, t) in self.store().iter() {
            put_len(&mut out, name.len())?;
            out.extend_from_slice(name.as_bytes());
            put_len(&mut out, t.rank())?;
            for &e in t.shape() {
                put_len(&mut out, e)?;
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        take(&mut r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file (bad magic)".into()));
        }
        let version = take_u32(&mut r, "version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let mut kind = [0u8; 1];
        take(&mut r, &mut kind, "model kind")?;
        let kind = ModelKind::from_code(kind[0])
            .ok_or_else(|| Error::Format(format!("unknown model kind byte {}", kind[0])))?;

        let header_len = take_u32(&mut r, "header length")? as usize;
        let text = String::from_utf8(take_vec(&mut r, header_len, "header")?)
            .map_err(|_| Error::Format("header is not UTF-8".into()))?;
        let mut header = BTreeMap::new();
        for line in text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("header line {line:?} lacks '='")))?;
            header.insert(k.to_string(), v.to_string());
        }

        let mut store = ParamStore::new();
        while !r.is_empty() {
            let name_len = take_u32(&mut r, "name length")? as usize;
            let name = String::from_utf8(take_vec(&mut r, name_len, "name")?)
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
            let rank = take_u32(&mut r, "rank")? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(take_u32(&mut r, "extent")? as usize);
            }
            let count: usize = shape.iter().product();
            if count.checked_mul(8).is_none_or(|b| b > r.len()) {
                return Err(Error::Format(format!("truncated values for {name}")));
            }
            let mut data = Vec::with_capacity(count);
            for _ in 0..count {
                let mut b = [0u8; 8];
                take(&mut r, &mut b, "value")?;
                data.push(f64::from_le_bytes(b));
            }
            let t = Tensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))?;
            store
                .add(name, t)
                .map_err(|e| Error::Format(e.to_string()))?;
        }

        let vocab_line = header
            .get("vocab")
            .ok_or_else(|| Error::Format("header has no vocab entry".into()))?;
        let tokens = if vocab_line.is_empty() {
            Vec::new()
        } else {
            vocab_line.split(' ').map(String::from).collect()
        };
        let vocab = Vocab::from_saved(tokens).map_err(|e| Error::Format(e.to_string()))?;
        let model = match kind {
            ModelKind::Udssm1 => AnyModel::Udssm1(Udssm1Params::from_store(store, vocab)?),
            ModelKind::Udssm2 => AnyModel::Udssm2(Udssm2Params::from_store(store, vocab)?),
        };
        Ok(Checkpoint { model, header })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Loads and checks the model kind.
    pub fn load_expecting(path: &Path, expected: ModelKind) -> Result<Self> {
        let ck = Self::load(path)?;
        if ck.kind() != expected {
            return Err(Error::KindMismatch {
                expected: expected.to_string(),
                found: ck.kind().to_string(),
            });
        }
        Ok(ck)
    }
}

fn model_name(m: &AnyModel) -> &'static str {
    match m {
        AnyModel::Udssm1(_) => "udssm1",
        AnyModel::Udssm2(_) => "udssm2",
    }
}

fn put_len(out: &mut Vec<u8>, n: usize) -> Result<()> {
    let n = u32::try_from(n).map_err(|_| Error::Format(format!("length {n} exceeds u32")))?;
    out.extend_from_slice(&n.to_le_bytes());
    Ok(())
}

fn take(r: &mut &[u8], buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => {
            Error::Format(format!("truncated file while reading {what}"))
        }
        _ => Error::Io(e),
    })
}

fn take_u32(r: &mut &[u8], what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    take(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn take_vec(r: &mut &[u8], n: usize, what: &str) -> Result<Vec<u8>> {
    if n > r.len() {
        return Err(Error::Format(format!(
            "truncated file while reading {what}"
        )));
    }
    let mut v = vec![0u8; n];
    take(r, &mut v, what)?;
    Ok(v)
}
