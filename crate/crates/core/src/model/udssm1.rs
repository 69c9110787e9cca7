//! Split-sentence model.
//!
//! The sentence is cut just before the word preceding a pronoun. Two
//! separate Bi-LSTMs encode the halves `x` and `y`. The pronoun is
//! represented by the second state of `y`. The candidate nouns of `x` are
//! pooled with attention whose logits are the co-reference scores
//! `(W·h_i + b)ᵀ·h_y`. Training contrasts the pooled vector against the
//! pronoun states of every other pair in the batch.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ModelDims, ModelKind, Prediction, Predictor};
use crate::corpus::PairExampleI;
use crate::error::{Error, Result};
use crate::eval::Question;
use crate::nn::{
    affine_map, bilstm_forward, dropout, AffineParams, BiLstm, EmbeddingTable, Mode, Vocab,
};
use crate::tensor::{Graph, ParamStore, Var};

#[derive(Clone, Debug)]
pub struct Udssm1Params {
    pub store: ParamStore,
    pub emb: EmbeddingTable,
    pub enc_x: BiLstm,
    pub enc_y: BiLstm,
    /// `W^g`, `b^g`, shared by attention and scoring.
    pub gate: AffineParams,
}

/// Encoder outputs for one pair.
#[derive(Clone, Copy, Debug)]
pub struct Encoded1 {
    /// `l × X`
    pub h_x: Var,
    /// `l × N`, the columns of `h_x` at the noun positions.
    pub h_n: Var,
    /// `l`, the pronoun state.
    pub h_y: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct Attention {
    /// `N` pre-softmax co-reference scores.
    pub logits: Var,
    pub alpha: Var,
    /// `l`, attention-pooled noun state.
    pub pooled: Var,
}

impl Udssm1Params {
    /// Random embeddings and encoders.
    pub fn init(vocab: Vocab, dims: ModelDims, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut store = ParamStore::new();
        let emb = EmbeddingTable::random(&mut store, "emb", vocab, dims.embedding_dim, rng)?;
        Self::with_embeddings(store, emb, dims.hidden, rng)
    }

    /// Adds encoders and the gate to a store that already holds `emb`.
    pub fn with_embeddings<R: Rng>(
        mut store: ParamStore,
        emb: EmbeddingTable,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let d = emb.dim();
        let enc_x = BiLstm::init(&mut store, "enc_x", d, hidden, rng)?;
        let enc_y = BiLstm::init(&mut store, "enc_y", d, hidden, rng)?;
        let gate = AffineParams::init(&mut store, "gate", 2 * hidden, rng)?;
        Ok(Udssm1Params {
            store,
            emb,
            enc_x,
            enc_y,
            gate,
        })
    }

    pub fn from_store(store: ParamStore, vocab: Vocab) -> Result<Self> {
        let emb = EmbeddingTable::from_store(&store, "emb", vocab)?;
        let enc_x = BiLstm::from_store(&store, "enc_x")?;
        let enc_y = BiLstm::from_store(&store, "enc_y")?;
        let gate = AffineParams::from_store(&store, "gate")?;
        if gate.dim != enc_x.output_dim() || enc_x.output_dim() != enc_y.output_dim() {
            return Err(Error::Format(
                "gate width does not match encoder width".into(),
            ));
        }
        Ok(Udssm1Params {
            store,
            emb,
            enc_x,
            enc_y,
            gate,
        })
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            embedding_dim: self.emb.dim(),
            hidden: self.enc_x.fwd.hidden,
        }
    }

    /// Bi-LSTM output width `l = 2h`.
    pub fn width(&self) -> usize {
        self.enc_x.output_dim()
    }

    pub fn graph(&self) -> Graph<'_> {
        Graph::new(&self.store)
    }

    /// Encodes raw halves. `nouns` are 1-based positions in `x`.
    pub fn encode(
        &self,
        g: &mut Graph,
        x: &[String],
        nouns: &[usize],
        y: &[String],
        mode: &mut Mode,
        id: &str,
    ) -> Result<Encoded1> {
        if nouns.is_empty() {
            return Err(Error::data(id, "no noun positions"));
        }
        if let Some(p) = nouns.iter().find(|&&p| p == 0 || p > x.len()) {
            return Err(Error::data(
                id,
                format!("noun position {p} outside 1..={}", x.len()),
            ));
        }
        if y.len() < 2 {
            return Err(Error::data(id, "y sequence shorter than 2 tokens"));
        }
        let ex = self.emb.embed_sequence(g, x)?;
        let ex = dropout(g, ex, mode)?;
        let ey = self.emb.embed_sequence(g, y)?;
        let ey = dropout(g, ey, mode)?;
        let h_x = bilstm_forward(g, &self.enc_x, ex)?;
        let h_yall = bilstm_forward(g, &self.enc_y, ey)?;

        let cols = nouns
            .iter()
            .map(|&p| g.slice(h_x, 1, p - 1, p))
            .collect::<Result<Vec<_>>>()?;
        let h_n = g.concat(&cols, 1)?;
        let h_n = dropout(g, h_n, mode)?;
        let h_y = g.column(h_yall, 1)?;
        let h_y = dropout(g, h_y, mode)?;
        Ok(Encoded1 { h_x, h_n, h_y })
    }

    pub fn encode_pair(
        &self,
        g: &mut Graph,
        ex: &PairExampleI,
        mode: &mut Mode,
    ) -> Result<Encoded1> {
        self.encode(g, &ex.x, &ex.nouns, &ex.y, mode, &ex.source_id)
    }

    /// `(W·H_n + b ⊗ 1ᵀ)ᵀ · h_y`, one score per noun.
    pub fn noun_logits(&self, g: &mut Graph, enc: &Encoded1) -> Result<Var> {
        let gated = affine_map(g, &self.gate, enc.h_n)?;
        let gt = g.transpose(gated)?;
        let l = g.shape(enc.h_y)[0];
        let hy = g.reshape(enc.h_y, vec![l, 1])?;
        let logits = g.matmul(gt, hy)?;
        let n = g.shape(logits)[0];
        g.reshape(logits, vec![n])
    }

    pub fn attend_nouns(&self, g: &mut Graph, enc: &Encoded1) -> Result<Attention> {
        let logits = self.noun_logits(g, enc)?;
        let alpha = g.softmax(logits)?;
        let n = g.shape(alpha)[0];
        let alpha_col = g.reshape(alpha, vec![n, 1])?;
        let pooled = g.matmul(enc.h_n, alpha_col)?;
        let l = g.shape(pooled)[0];
        let pooled = g.reshape(pooled, vec![l])?;
        Ok(Attention {
            logits,
            alpha,
            pooled,
        })
    }

    /// Co-reference score of noun column `i` (0-based) against the pronoun.
    pub fn score_candidate(&self, g: &mut Graph, enc: &Encoded1, i: usize) -> Result<f64> {
        let logits = self.noun_logits(g, enc)?;
        let v = g.value(logits);
        v.data().get(i).copied().ok_or_else(|| Error::Bounds {
            op: "score_candidate",
            detail: format!("noun column {i} of {}", v.len()),
        })
    }

    /// `B × B` matrix of pooled-noun · pronoun dot products; the diagonal
    /// holds the positive pairs.
    pub fn similarity_matrix(
        &self,
        g: &mut Graph,
        batch: &[PairExampleI],
        mode: &mut Mode,
    ) -> Result<Var> {
        let mut rows = Vec::with_capacity(batch.len());
        let mut cols = Vec::with_capacity(batch.len());
        for ex in batch {
            let enc = self.encode_pair(g, ex, mode)?;
            let att = self.attend_nouns(g, &enc)?;
            let l = g.shape(att.pooled)[0];
            rows.push(g.reshape(att.pooled, vec![1, l])?);
            cols.push(g.reshape(enc.h_y, vec![l, 1])?);
        }
        let pooled = g.concat(&rows, 0)?;
        let pronouns = g.concat(&cols, 1)?;
        g.matmul(pooled, pronouns)
    }

    /// Mean over the batch of `−log softmax` of the positive logit among
    /// the `B` logits of each row (`K = B − 1` in-batch negatives).
    pub fn batch_nce_loss(
        &self,
        g: &mut Graph,
        batch: &[PairExampleI],
        mode: &mut Mode,
    ) -> Result<Var> {
        if batch.len() < 2 {
            return Err(Error::Config(format!(
                "in-batch negatives need a batch of at least 2, got {}",
                batch.len()
            )));
        }
        let sims = self.similarity_matrix(g, batch, mode)?;
        let b = batch.len();
        let mut losses = Vec::with_capacity(b);
        for k in 0..b {
            let row = g.slice(sims, 0, k, k + 1)?;
            let row = g.reshape(row, vec![b])?;
            let logp = g.log_softmax(row)?;
            let pos = g.slice(logp, 0, k, k + 1)?;
            losses.push(g.scale(pos, -1.0));
        }
        g.mean_scalars(&losses)
    }

    pub fn batch_nce_loss_value(&self, batch: &[PairExampleI]) -> Result<f64> {
        let mut g = self.graph();
        let loss = self.batch_nce_loss(&mut g, batch, &mut Mode::Infer)?;
        Ok(g.value(loss).item())
    }

    /// Number of rows whose positive logit strictly beats every in-batch
    /// negative.
    pub fn ranking_hits(&self, batch: &[PairExampleI]) -> Result<usize> {
        let mut g = self.graph();
        let sims = self.similarity_matrix(&mut g, batch, &mut Mode::Infer)?;
        let m = g.value(sims);
        let b = batch.len();
        Ok((0..b)
            .filter(|&r| (0..b).all(|c| c == r || m.at(r, r) > m.at(r, c)))
            .count())
    }
}

impl Predictor for Udssm1Params {
    fn kind(&self) -> ModelKind {
        ModelKind::Udssm1
    }

    /// Scores every candidate with the head (last) token of its span.
    fn predict_question(&self, q: &Question) -> Result<Prediction> {
        let p = q.pronoun_index;
        if p < 3 {
            return Err(Error::Unsupported {
                id: q.id.clone(),
                msg: format!("pronoun at position {p} leaves no antecedent context"),
            });
        }
        let split = p - 2; // x = tokens[1..=split]
        let mut heads = Vec::with_capacity(q.candidates.len());
        for c in &q.candidates {
            if c.end > split {
                return Err(Error::Unsupported {
                    id: q.id.clone(),
                    msg: format!(
                        "candidate {} ends at {} after position {split}",
                        c.label, c.end
                    ),
                });
            }
            heads.push(c.end);
        }
        let mut g = self.graph();
        let enc = self.encode(
            &mut g,
            &q.tokens[..split],
            &heads,
            &q.tokens[split..],
            &mut Mode::Infer,
            &q.id,
        )?;
        let logits = self.noun_logits(&mut g, &enc)?;
        Ok(Prediction::from_scores(g.value(logits).data().to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{softmax, Tensor};
    use rand::SeedableRng;

    fn tiny(seed: u64, hidden: usize) -> Udssm1Params {
        let vocab = Vocab::from_tokens(["a", "b", "c", "d", "e", "he", "she", "it", "they"]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Udssm1Params::init(
            vocab,
            ModelDims {
                embedding_dim: 4,
                hidden,
            },
            &mut rng,
        )
        .unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    fn pair(x: &str, nouns: &[usize], y: &str) -> PairExampleI {
        PairExampleI {
            x: toks(x),
            nouns: nouns.to_vec(),
            y: toks(y),
            source_id: "t".into(),
        }
    }

    fn zero_all(p: &mut Udssm1Params) {
        let ids: Vec<_> = p.store.ids().collect();
        for id in ids {
            if p.store.name(id) != "emb" {
                p.store.get_mut(id).data_mut().fill(0.0);
            }
        }
    }

    #[test]
    fn shapes() {
        let p = tiny(1, 8);
        let ex = pair("a b c d e a b c d e", &[2, 5, 9], "c he d e");
        let mut g = p.graph();
        let enc = p.encode_pair(&mut g, &ex, &mut Mode::Infer).unwrap();
        assert_eq!(g.shape(enc.h_x), &[16, 10]);
        assert_eq!(g.shape(enc.h_n), &[16, 3]);
        assert_eq!(g.shape(enc.h_y), &[16]);
    }

    #[test]
    fn zero_encoders_give_zero_states_and_uniform_attention() {
        let mut p = tiny(2, 3);
        zero_all(&mut p);
        let ex = pair("a b c d", &[1, 3, 4], "c it d");
        let mut g = p.graph();
        let enc = p.encode_pair(&mut g, &ex, &mut Mode::Infer).unwrap();
        assert!(g.value(enc.h_n).data().iter().all(|v| *v == 0.0));
        assert!(g.value(enc.h_y).data().iter().all(|v| *v == 0.0));
        let att = p.attend_nouns(&mut g, &enc).unwrap();
        for a in g.value(att.alpha).data() {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(p.score_candidate(&mut g, &enc, 1).unwrap(), 0.0);
    }

    #[test]
    fn permuting_nouns_permutes_columns() {
        let p = tiny(3, 4);
        let mut g = p.graph();
        let a = p
            .encode_pair(
                &mut g,
                &pair("a b c d e", &[1, 3, 5], "c he"),
                &mut Mode::Infer,
            )
            .unwrap();
        let b = p
            .encode_pair(
                &mut g,
                &pair("a b c d e", &[5, 1, 3], "c he"),
                &mut Mode::Infer,
            )
            .unwrap();
        let (ta, tb) = (g.value(a.h_n).clone(), g.value(b.h_n).clone());
        assert_eq!(ta.column(0), tb.column(1));
        assert_eq!(ta.column(1), tb.column(2));
        assert_eq!(ta.column(2), tb.column(0));
    }

    #[test]
    fn single_noun_attention_is_degenerate() {
        let p = tiny(4, 4);
        let mut g = p.graph();
        let enc = p
            .encode(
                &mut g,
                &toks("a b c"),
                &[2],
                &toks("d she"),
                &mut Mode::Infer,
                "t",
            )
            .unwrap();
        let att = p.attend_nouns(&mut g, &enc).unwrap();
        assert_eq!(g.value(att.alpha).data(), &[1.0]);
        assert_eq!(g.value(att.pooled).data(), g.value(enc.h_n).data());
    }

    /// Two nouns, hand-set gate: softmax of the two scores done by hand.
    #[test]
    fn attention_matches_hand_softmax() {
        let mut p = tiny(5, 1);
        p.store
            .set("gate.W", Tensor::matrix(&[&[2.0, 0.0], &[1.0, -1.0]]))
            .unwrap();
        p.store.set("gate.b", Tensor::vector(&[0.0, 0.0])).unwrap();
        let mut g = p.graph();
        let enc = p
            .encode_pair(&mut g, &pair("a b c", &[1, 3], "d he e"), &mut Mode::Infer)
            .unwrap();
        let hn = g.value(enc.h_n).clone();
        let hy = g.value(enc.h_y).data().to_vec();
        let score = |c: usize| {
            let (h0, h1) = (hn.at(0, c), hn.at(1, c));
            (2.0 * h0) * hy[0] + (h0 - h1) * hy[1]
        };
        let (s0, s1) = (score(0), score(1));
        let e0 = 1.0 / (1.0 + (s1 - s0).exp());
        let att = p.attend_nouns(&mut g, &enc).unwrap();
        let alpha = g.value(att.alpha).data().to_vec();
        assert!((alpha[0] - e0).abs() < 1e-14);
        assert!((alpha[1] - (1.0 - e0)).abs() < 1e-14);
        let pooled = g.value(att.pooled).data().to_vec();
        for (r, v) in pooled.iter().enumerate() {
            assert!((v - (alpha[0] * hn.at(r, 0) + alpha[1] * hn.at(r, 1))).abs() < 1e-15);
        }
    }

    #[test]
    fn scores_softmax_to_alpha_bitwise() {
        let p = tiny(6, 4);
        let mut g = p.graph();
        let enc = p
            .encode_pair(
                &mut g,
                &pair("a b c d e", &[1, 2, 4], "e they a"),
                &mut Mode::Infer,
            )
            .unwrap();
        let scores: Vec<f64> = (0..3)
            .map(|i| p.score_candidate(&mut g, &enc, i).unwrap())
            .collect();
        let att = p.attend_nouns(&mut g, &enc).unwrap();
        assert_eq!(g.value(att.logits).data(), scores.as_slice());
        assert_eq!(g.value(att.alpha).data(), softmax(&scores).as_slice());
        assert!(matches!(
            p.score_candidate(&mut g, &enc, 3),
            Err(Error::Bounds { .. })
        ));
    }

    #[test]
    fn zero_gate_scores_zero() {
        let mut p = tiny(7, 2);
        p.store.set("gate.W", Tensor::zeros(&[4, 4])).unwrap();
        let mut g = p.graph();
        let enc = p
            .encode_pair(&mut g, &pair("a b c", &[1, 2], "d it"), &mut Mode::Infer)
            .unwrap();
        for i in 0..2 {
            assert_eq!(p.score_candidate(&mut g, &enc, i).unwrap(), 0.0);
        }
    }

    #[test]
    fn equal_representations_give_ln_batch() {
        let mut p = tiny(8, 3);
        zero_all(&mut p);
        let batch: Vec<_> = (0..4).map(|_| pair("a b c", &[1, 3], "d he")).collect();
        let loss = p.batch_nce_loss_value(&batch).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12, "{loss}");
        assert!(matches!(
            p.batch_nce_loss_value(&batch[..1]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn batch_order_does_not_change_mean_loss() {
        let p = tiny(9, 4);
        let batch = vec![
            pair("a b c", &[1, 3], "d he"),
            pair("b c d e", &[2, 4], "a she c"),
            pair("e a", &[1, 2], "b it"),
        ];
        let l1 = p.batch_nce_loss_value(&batch).unwrap();
        let rev: Vec<_> = batch.iter().rev().cloned().collect();
        let l2 = p.batch_nce_loss_value(&rev).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        assert!(l1 > 0.0);
    }

    fn question(tokens: &str, pronoun: usize, spans: &[(usize, usize)]) -> Question {
        Question::new("q", toks(tokens), pronoun, spans, 0).unwrap()
    }

    #[test]
    fn predict_picks_argmax_and_rejects_late_candidates() {
        let p = tiny(10, 4);
        let q = question("a b c d e he c", 6, &[(1, 1), (2, 3)]);
        let pred = p.predict_question(&q).unwrap();
        assert_eq!(pred.scores.len(), 2);
        assert_eq!(
            pred.choice,
            if pred.scores[1] > pred.scores[0] {
                1
            } else {
                0
            }
        );

        let late = question("a b c d e he c", 6, &[(1, 1), (5, 5)]);
        assert!(matches!(
            p.predict_question(&late),
            Err(Error::Unsupported { .. })
        ));
        let after = question("a b c d e he c", 6, &[(1, 1), (7, 7)]);
        assert!(matches!(
            p.predict_question(&after),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn tie_goes_to_earlier_candidate() {
        let mut p = tiny(11, 2);
        zero_all(&mut p);
        let q = question("a b c d e he c", 6, &[(1, 1), (2, 3)]);
        let pred = p.predict_question(&q).unwrap();
        assert_eq!(pred.scores, vec![0.0, 0.0]);
        assert_eq!(pred.choice, 0);
    }
}
