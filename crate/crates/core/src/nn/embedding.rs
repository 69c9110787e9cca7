use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{Graph, ParamId, ParamStore, Tensor, Var};

/// Shared out-of-vocabulary row.
pub const OOV_TOKEN: &str = "<unk>";
/// Placeholder substituted for a masked pronoun, spelled as in the
/// original training data.
pub const PLACEHOLDER: &str = "@Ponoun";

pub const OOV_INDEX: usize = 0;
pub const PLACEHOLDER_INDEX: usize = 1;

/// Token → row index. Ordinary entries are stored lowercased; the two
/// reserved tokens always occupy rows 0 and 1 and match case-sensitively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub fn new() -> Self {
        let mut v = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        v.push(OOV_TOKEN.to_string());
        v.push(PLACEHOLDER.to_string());
        v
    }

    /// Builds a vocabulary from tokens in first-seen order. Reserved tokens
    /// and repeats are skipped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocab::new();
        for t in tokens {
            v.insert(t.as_ref());
        }
        v
    }

    /// Restores a vocabulary from its full token list, reserved rows included.
    pub fn from_saved(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2
            || tokens[OOV_INDEX] != OOV_TOKEN
            || tokens[PLACEHOLDER_INDEX] != PLACEHOLDER
        {
            return Err(Error::Format(
                "vocabulary must start with the reserved tokens".into(),
            ));
        }
        let mut v = Vocab {
            tokens: Vec::with_capacity(tokens.len()),
            index: HashMap::with_capacity(tokens.len()),
        };
        for t in tokens {
            if v.index.contains_key(&t) {
                return Err(Error::Format(format!("duplicate vocabulary entry {t}")));
            }
            v.push(t);
        }
        Ok(v)
    }

    fn push(&mut self, token: String) {
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
    }

    pub fn insert(&mut self, token: &str) -> usize {
        if is_reserved(token) {
            return self.index[token];
        }
        let key = token.to_lowercase();
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        self.push(key);
        self.tokens.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    /// Exact-key lookup against stored (already normalized) entries.
    pub fn get(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Row for a surface token: reserved tokens as-is, everything else
    /// lowercased, unknown tokens to the OOV row.
    pub fn lookup(&self, token: &str) -> usize {
        if is_reserved(token) {
            return self.index[token];
        }
        self.index
            .get(&token.to_lowercase())
            .copied()
            .unwrap_or(OOV_INDEX)
    }
}

fn is_reserved(token: &str) -> bool {
    token == OOV_TOKEN || token == PLACEHOLDER
}

/// Trainable word embeddings, one row of width `dim` per vocabulary entry.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    pub weights: ParamId,
    dim: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GloveStats {
    pub lines: usize,
    /// Vocabulary rows overwritten from the file.
    pub matched: usize,
    /// Lines whose token had already been seen; the later line wins.
    pub duplicates: usize,
}

impl EmbeddingTable {
    /// Every row drawn uniformly from `[-0.1, 0.1]`, row-major.
    pub fn random<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        vocab: Vocab,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let dist = Uniform::new_inclusive(-0.1, 0.1);
        let data = (0..vocab.len() * dim).map(|_| dist.sample(rng)).collect();
        let weights = store.add(name, Tensor::new(vec![vocab.len(), dim], data)?)?;
        Ok(EmbeddingTable {
            vocab,
            weights,
            dim,
        })
    }

    /// Wraps an already registered `[|V|, dim]` parameter.
    pub fn from_store(store: &ParamStore, name: &str, vocab: Vocab) -> Result<Self> {
        let weights = store
            .id(name)
            .ok_or_else(|| Error::Format(format!("missing parameter {name}")))?;
        let shape = store.get(weights).shape();
        if shape.len() != 2 || shape[0] != vocab.len() {
            return Err(Error::dim("embedding", shape, &[vocab.len()]));
        }
        let dim = shape[1];
        Ok(EmbeddingTable {
            vocab,
            weights,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `d × T` matrix whose column `t` is the row of `tokens[t]`.
    pub fn embed_sequence<S: AsRef<str>>(&self, g: &mut Graph, tokens: &[S]) -> Result<Var> {
        if tokens.is_empty() {
            return Err(Error::dim("embed_sequence", &[self.dim], &[0]));
        }
        let rows: Vec<usize> = tokens
            .iter()
            .map(|t| self.vocab.lookup(t.as_ref()))
            .collect();
        g.gather_columns(self.weights, &rows)
    }
}

/// Loads GloVe text vectors for the entries of `vocab`.
///
/// All rows are first drawn from the seeded uniform initializer; rows whose
/// token appears in the file are then overwritten verbatim. Every line must
/// carry exactly `dim` values.
pub fn load_glove<R: Rng>(
    path: &Path,
    dim: usize,
    vocab: Vocab,
    store: &mut ParamStore,
    name: &str,
    rng: &mut R,
) -> Result<(EmbeddingTable, GloveStats)> {
    let reader = BufReader::new(File::open(path)?);
    load_glove_from(reader, path, dim, vocab, store, name, rng)
}

pub fn load_glove_from<B: BufRead, R: Rng>(
    reader: B,
    path: &Path,
    dim: usize,
    vocab: Vocab,
    store: &mut ParamStore,
    name: &str,
    rng: &mut R,
) -> Result<(EmbeddingTable, GloveStats)> {
    let table = EmbeddingTable::random(store, name, vocab, dim, rng)?;
    let mut stats = GloveStats::default();
    let mut seen = std::collections::HashSet::new();
    let mut matched = std::collections::HashSet::new();
    let weights = store.get_mut(table.weights);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let token = fields.next().expect("non-empty line");
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "expected {dim} values for {token:?}, found {}",
                    values.len()
                ),
            ));
        }
        if !seen.insert(token.to_string()) {
            stats.duplicates += 1;
            log::warn!(
                "{}:{lineno}: duplicate token {token:?}, keeping the later vector",
                path.display()
            );
        }
        let Some(row) = table.vocab.get(token) else {
            continue;
        };
        let dst = &mut weights.data_mut()[row * dim..(row + 1) * dim];
        for (slot, raw) in dst.iter_mut().zip(&values) {
            *slot = raw
                .parse::<f64>()
                .map_err(|e| Error::parse(path, lineno, format!("bad value {raw:?}: {e}")))?;
        }
        matched.insert(row);
    }
    stats.matched = matched.len();
    Ok((table, stats))
}

/// First whitespace-separated field of every non-empty line.
pub fn glove_tokens(path: &Path) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(tok) = line.split(' ').find(|f| !f.is_empty()) {
            out.push(tok.to_string());
        }
    }
    Ok(out)
}

/// Vocabulary of the tokens seen at least `min_count` times, plus rarer
/// tokens listed in `keep` (already lowercased). Entries are ordered by
/// descending count, ties alphabetically.
pub fn build_vocab<I, S>(tokens: I, min_count: usize, keep: &HashSet<String>) -> Vocab
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, usize> = HashMap::new();
    for t in tokens {
        let t = t.as_ref();
        if !is_reserved(t) {
            *counts.entry(t.to_lowercase()).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_count || keep.contains(t))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_tokens(kept.into_iter().map(|(t, _)| t))
}

/// One token per line, reserved rows first.
pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in vocab.tokens() {
        writeln!(out, "{t}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    let reader = BufReader::new(File::open(path)?);
    let mut tokens = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim_end_matches('\r');
        if t.is_empty() || t.contains(char::is_whitespace) {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("bad vocabulary entry {t:?}"),
            ));
        }
        tokens.push(t.to_string());
    }
    Vocab::from_saved(tokens).map_err(|e| Error::parse(path, 1, e.to_string()))
}
