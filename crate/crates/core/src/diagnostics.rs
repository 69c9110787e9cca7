//! Gradient checks on tiny randomly built models and batches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PairExampleI, PairExampleII};
use crate::error::Result;
use crate::model::{ModelDims, ModelKind, Udssm1Params, Udssm2Params};
use crate::nn::{Mode, Vocab, PLACEHOLDER};
use crate::tensor::{
    finite_diff_check, GradCheckConfig, GradCheckReport, Gradients, Graph, ParamStore, Var,
};

/// Dimensions and batch shape for a gradient check.
#[derive(Clone, Copy, Debug)]
pub struct TinySetup {
    pub embedding_dim: usize,
    pub hidden: usize,
    pub batch: usize,
    /// Longest sentence, counting both halves for the split model.
    pub max_len: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TinySetup {
    fn default() -> Self {
        TinySetup {
            embedding_dim: 8,
            hidden: 8,
            batch: 4,
            max_len: 12,
            dropout: 0.2,
            seed: 0,
        }
    }
}

const WORDS: [&str; 10] = [
    "man", "dog", "city", "car", "saw", "took", "the", "a", "because", "was",
];
const PRONOUNS: [&str; 4] = ["he", "she", "it", "they"];

fn vocab() -> Vocab {
    Vocab::from_tokens(WORDS.iter().chain(&PRONOUNS))
}

fn word<R: Rng>(rng: &mut R) -> String {
    WORDS.choose(rng).unwrap().to_string()
}

fn pronoun<R: Rng>(rng: &mut R) -> String {
    PRONOUNS.choose(rng).unwrap().to_string()
}

/// Random split-sentence pairs with `len(x) + len(y) ≤ max_len`.
pub fn random_pairs_i<R: Rng>(rng: &mut R, n: usize, max_len: usize) -> Vec<PairExampleI> {
    let max_len = max_len.max(6);
    (0..n)
        .map(|k| {
            let ylen = rng.gen_range(2..=3);
            let xlen = rng.gen_range(3..=max_len - ylen);
            let x: Vec<String> = (0..xlen).map(|_| word(rng)).collect();
            let mut y: Vec<String> = (0..ylen).map(|_| word(rng)).collect();
            y[1] = pronoun(rng);
            let mut nouns = rand::seq::index::sample(rng, xlen, 2).into_vec();
            nouns.sort_unstable();
            PairExampleI {
                x,
                nouns: nouns.into_iter().map(|p| p + 1).collect(),
                y,
                source_id: format!("r{k}"),
            }
        })
        .collect()
}

/// Random masked sentences with `len ≤ max_len`.
pub fn random_pairs_ii<R: Rng>(rng: &mut R, n: usize, max_len: usize) -> Vec<PairExampleII> {
    let max_len = max_len.max(4);
    (0..n)
        .map(|k| {
            let len = rng.gen_range(4..=max_len);
            let mut tokens: Vec<String> = (0..len).map(|_| word(rng)).collect();
            let i = rng.gen_range(1..len);
            let j = rng.gen_range(i + 1..=len);
            tokens[i - 1] = PLACEHOLDER.to_string();
            tokens[j - 1] = pronoun(rng);
            PairExampleII {
                tokens,
                i,
                j,
                label: rng.gen_range(0..=1),
                source_id: format!("r{k}"),
            }
        })
        .collect()
}

/// Dropout masks are redrawn from the same seed on every evaluation, so the
/// loss is a fixed function of the parameters.
fn loss_with_fixed_mask<F>(store: &ParamStore, setup: &TinySetup, f: &F) -> Result<(f64, Gradients)>
where
    F: Fn(&mut Graph, &mut Mode) -> Result<Var>,
{
    let mut g = Graph::new(store);
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed ^ 0x5eed);
    let mut mode = Mode::Train {
        rate: setup.dropout,
        rng: &mut rng,
    };
    let loss = f(&mut g, &mut mode)?;
    let value = g.value(loss).item();
    Ok((value, g.backward(loss)?))
}

/// Central-difference check of every parameter coordinate of a freshly
/// initialized model on a random batch.
pub fn tiny_gradcheck(
    kind: ModelKind,
    setup: &TinySetup,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let dims = ModelDims {
        embedding_dim: setup.embedding_dim,
        hidden: setup.hidden,
    };
    match kind {
        ModelKind::Udssm1 => {
            let model = Udssm1Params::init(vocab(), dims, &mut rng)?;
            let batch = random_pairs_i(&mut rng, setup.batch, setup.max_len);
            let f = |g: &mut Graph, m: &mut Mode| model.batch_nce_loss(g, &batch, m);
            run(model.store.clone(), setup, cfg, &f)
        }
        ModelKind::Udssm2 => {
            let model = Udssm2Params::init(vocab(), dims, &mut rng)?;
            let batch = random_pairs_ii(&mut rng, setup.batch, setup.max_len);
            let f = |g: &mut Graph, m: &mut Mode| model.pair_loss(g, &batch, m);
            run(model.store.clone(), setup, cfg, &f)
        }
    }
}

fn run<F>(
    mut store: ParamStore,
    setup: &TinySetup,
    cfg: &GradCheckConfig,
    f: &F,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &mut Mode) -> Result<Var>,
{
    let (_, grads) = loss_with_fixed_mask(&store, setup, f)?;
    let mut failure = None;
    let report = finite_diff_check(
        &mut store,
        &grads,
        |s| match loss_with_fixed_mask(s, setup, f) {
            Ok((v, _)) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        cfg,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fixtures_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in random_pairs_i(&mut rng, 50, 12) {
            p.validate().unwrap();
            assert!(p.x.len() + p.y.len() <= 12);
        }
        for p in random_pairs_ii(&mut rng, 50, 12) {
            p.validate().unwrap();
            assert!(p.tokens.len() <= 12);
        }
    }

    #[test]
    fn sampled_check_passes_for_both_models() {
        let setup = TinySetup {
            hidden: 4,
            embedding_dim: 4,
            ..TinySetup::default()
        };
        let cfg = GradCheckConfig {
            max_coords_per_param: Some(6),
            ..GradCheckConfig::default()
        };
        for kind in [ModelKind::Udssm1, ModelKind::Udssm2] {
            let r = tiny_gradcheck(kind, &setup, &cfg).unwrap();
            assert!(r.passed, "{kind}: {r:?}");
        }
    }
}
