//! Whole-sentence model.
//!
//! One forward and one backward LSTM read the full sentence. A position is
//! described by the forward state just before it and the backward state
//! just after it, so the token itself never leaks into its own
//! representation. A pair of positions is classified as co-referent or not
//! by two linear logits over the concatenated contexts.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ModelDims, ModelKind, Prediction, Predictor};
use crate::corpus::PairExampleII;
use crate::error::{Error, Result};
use crate::eval::Question;
use crate::nn::{
    dropout, lstm_forward, Direction, EmbeddingTable, LstmParams, Mode, Vocab, PLACEHOLDER,
};
use crate::tensor::{Graph, ParamId, ParamStore, Tensor, Var};

#[derive(Clone, Debug)]
pub struct Udssm2Params {
    pub store: ParamStore,
    pub emb: EmbeddingTable,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    /// `4h`, positive-class weights.
    pub w_p: ParamId,
    /// `4h`, negative-class weights.
    pub w_n: ParamId,
}

/// States of both directions, aligned to token positions.
#[derive(Clone, Copy, Debug)]
pub struct Encoded2 {
    /// `h × T`
    pub f: Var,
    /// `h × T`
    pub bk: Var,
    pub len: usize,
    pub hidden: usize,
}

impl Udssm2Params {
    pub fn init(vocab: Vocab, dims: ModelDims, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut store = ParamStore::new();
        let emb = EmbeddingTable::random(&mut store, "emb", vocab, dims.embedding_dim, rng)?;
        Self::with_embeddings(store, emb, dims.hidden, rng)
    }

    pub fn with_embeddings<R: Rng>(
        mut store: ParamStore,
        emb: EmbeddingTable,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let d = emb.dim();
        let fwd = LstmParams::init(&mut store, "fwd", d, hidden, rng)?;
        let bwd = LstmParams::init(&mut store, "bwd", d, hidden, rng)?;
        let bound = (6.0 / (4 * hidden + 2) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        let mut draw = || {
            Tensor::vector(
                &(0..4 * hidden)
                    .map(|_| dist.sample(rng))
                    .collect::<Vec<_>>(),
            )
        };
        let w_p = store.add("w_p", draw())?;
        let w_n = store.add("w_n", draw())?;
        Ok(Udssm2Params {
            store,
            emb,
            fwd,
            bwd,
            w_p,
            w_n,
        })
    }

    pub fn from_store(store: ParamStore, vocab: Vocab) -> Result<Self> {
        let emb = EmbeddingTable::from_store(&store, "emb", vocab)?;
        let fwd = LstmParams::from_store(&store, "fwd")?;
        let bwd = LstmParams::from_store(&store, "bwd")?;
        if fwd.hidden != bwd.hidden || fwd.input_dim != emb.dim() || bwd.input_dim != emb.dim() {
            return Err(Error::Format(
                "LSTM shapes disagree with each other or the embeddings".into(),
            ));
        }
        let get = |name: &str| {
            let id = store
                .id(name)
                .ok_or_else(|| Error::Format(format!("missing parameter {name}")))?;
            if store.get(id).shape() != [4 * fwd.hidden] {
                return Err(Error::Format(format!(
                    "{name} must have length {}",
                    4 * fwd.hidden
                )));
            }
            Ok(id)
        };
        let (w_p, w_n) = (get("w_p")?, get("w_n")?);
        Ok(Udssm2Params {
            store,
            emb,
            fwd,
            bwd,
            w_p,
            w_n,
        })
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            embedding_dim: self.emb.dim(),
            hidden: self.fwd.hidden,
        }
    }

    pub fn graph(&self) -> Graph<'_> {
        Graph::new(&self.store)
    }

    pub fn encode_sentence<S: AsRef<str>>(
        &self,
        g: &mut Graph,
        tokens: &[S],
        mode: &mut Mode,
        id: &str,
    ) -> Result<Encoded2> {
        if tokens.len() < 3 {
            return Err(Error::data(
                id,
                format!("sentence of {} tokens is shorter than 3", tokens.len()),
            ));
        }
        let e = self.emb.embed_sequence(g, tokens)?;
        let e = dropout(g, e, mode)?;
        let f = lstm_forward(g, &self.fwd, e, Direction::Forward)?;
        let bk = lstm_forward(g, &self.bwd, e, Direction::Backward)?;
        Ok(Encoded2 {
            f,
            bk,
            len: tokens.len(),
            hidden: self.fwd.hidden,
        })
    }

    /// `[F_{s−1}; Bk_{e+1}]` for the 1-based span `[s, e]`. Columns outside
    /// the sentence read as zero states.
    pub fn context_rep(&self, g: &mut Graph, enc: &Encoded2, s: usize, e: usize) -> Result<Var> {
        if s == 0 || s > e || e > enc.len {
            return Err(Error::Bounds {
                op: "context_rep",
                detail: format!("span [{s}, {e}] in a sentence of {}", enc.len),
            });
        }
        let left = if s >= 2 {
            g.column(enc.f, s - 2)?
        } else {
            g.constant(Tensor::zeros(&[enc.hidden]))
        };
        let right = if e < enc.len {
            g.column(enc.bk, e)?
        } else {
            g.constant(Tensor::zeros(&[enc.hidden]))
        };
        g.concat(&[left, right], 0)
    }

    /// `[context(s..e); context(j)]`, length `4h`.
    pub fn pair_rep(
        &self,
        g: &mut Graph,
        enc: &Encoded2,
        span: (usize, usize),
        j: usize,
    ) -> Result<Var> {
        let hx = self.context_rep(g, enc, span.0, span.1)?;
        let hy = self.context_rep(g, enc, j, j)?;
        g.concat(&[hx, hy], 0)
    }

    /// `(w_p·h_c, w_n·h_c)` as a length-2 vector.
    pub fn pair_logits(&self, g: &mut Graph, hc: Var) -> Result<Var> {
        let width = g.shape(hc)[0];
        let wp = g.param(self.w_p);
        let wn = g.param(self.w_n);
        let wp = g.reshape(wp, vec![1, width])?;
        let wn = g.reshape(wn, vec![1, width])?;
        let w = g.concat(&[wp, wn], 0)?;
        let col = g.reshape(hc, vec![width, 1])?;
        let out = g.matmul(w, col)?;
        g.reshape(out, vec![2])
    }

    fn example_logits(&self, g: &mut Graph, ex: &PairExampleII, mode: &mut Mode) -> Result<Var> {
        let enc = self.encode_sentence(g, &ex.tokens, mode, &ex.source_id)?;
        let hc = self
            .pair_rep(g, &enc, (ex.i, ex.i), ex.j)
            .map_err(|e| match e {
                Error::Bounds { detail, .. } => Error::data(ex.source_id.clone(), detail),
                other => other,
            })?;
        let hc = dropout(g, hc, mode)?;
        self.pair_logits(g, hc)
    }

    /// Mean two-class cross-entropy; label 1 targets the positive logit.
    pub fn pair_loss(
        &self,
        g: &mut Graph,
        batch: &[PairExampleII],
        mode: &mut Mode,
    ) -> Result<Var> {
        if batch.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        let mut losses = Vec::with_capacity(batch.len());
        for ex in batch {
            let logits = self.example_logits(g, ex, mode)?;
            let logp = g.log_softmax(logits)?;
            let target = if ex.label == 1 { 0 } else { 1 };
            let picked = g.slice(logp, 0, target, target + 1)?;
            losses.push(g.scale(picked, -1.0));
        }
        g.mean_scalars(&losses)
    }

    pub fn pair_loss_value(&self, batch: &[PairExampleII]) -> Result<f64> {
        let mut g = self.graph();
        let loss = self.pair_loss(&mut g, batch, &mut Mode::Infer)?;
        Ok(g.value(loss).item())
    }

    /// `(p_pos, p_neg)` for one example at inference.
    pub fn pair_probs(&self, ex: &PairExampleII) -> Result<[f64; 2]> {
        let mut g = self.graph();
        let logits = self.example_logits(&mut g, ex, &mut Mode::Infer)?;
        let p = g.softmax(logits)?;
        let d = g.value(p).data();
        Ok([d[0], d[1]])
    }

    /// Fraction of examples whose larger logit matches the label.
    pub fn classification_accuracy(&self, data: &[PairExampleII]) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for ex in data {
            let [pos, neg] = self.pair_probs(ex)?;
            if u8::from(pos > neg) == ex.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }

    /// `w_p · [context(span); context(j)]`.
    pub fn score_candidate(
        &self,
        g: &mut Graph,
        enc: &Encoded2,
        span: (usize, usize),
        j: usize,
    ) -> Result<f64> {
        if (span.0..=span.1).contains(&j) {
            return Err(Error::data(
                "",
                format!("span [{}, {}] contains the pronoun at {j}", span.0, span.1),
            ));
        }
        let hc = self.pair_rep(g, enc, span, j)?;
        let wp = g.param(self.w_p);
        let s = g.dot(wp, hc)?;
        Ok(g.value(s).item())
    }

    /// Sentence with `span` collapsed to the placeholder, and the pronoun's
    /// new position.
    pub fn mask_candidate(
        tokens: &[String],
        span: (usize, usize),
        j: usize,
    ) -> (Vec<String>, usize) {
        let (s, e) = span;
        let mut out = Vec::with_capacity(tokens.len() + s - e);
        out.extend_from_slice(&tokens[..s - 1]);
        out.push(PLACEHOLDER.to_string());
        out.extend_from_slice(&tokens[e..]);
        let j = if j > e { j - (e - s) } else { j };
        (out, j)
    }
}

impl Predictor for Udssm2Params {
    fn kind(&self) -> ModelKind {
        ModelKind::Udssm2
    }

    fn predict_question(&self, q: &Question) -> Result<Prediction> {
        let j = q.pronoun_index;
        let mut scores = Vec::with_capacity(q.candidates.len());
        for c in &q.candidates {
            let (tokens, j2) = Self::mask_candidate(&q.tokens, (c.start, c.end), j);
            if tokens.len() < 3 {
                return Err(Error::Unsupported {
                    id: q.id.clone(),
                    msg: format!(
                        "masked sentence for candidate {} has {} tokens",
                        c.label,
                        tokens.len()
                    ),
                });
            }
            let mut g = self.graph();
            let enc = self.encode_sentence(&mut g, &tokens, &mut Mode::Infer, &q.id)?;
            let score = self
                .score_candidate(&mut g, &enc, (c.start, c.start), j2)
                .map_err(|e| Error::Unsupported {
                    id: q.id.clone(),
                    msg: e.to_string(),
                })?;
            scores.push(score);
        }
        Ok(Prediction::from_scores(scores))
    }
}
