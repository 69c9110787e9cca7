//! Planted-pattern corpora shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use udssm::corpus::{PairExampleI, PairExampleII};
use udssm::nn::{Vocab, PLACEHOLDER};

pub const FILLERS: [&str; 8] = ["the", "a", "then", "and", "very", "so", "there", "again"];
pub const DISTRACTORS: [&str; 4] = ["table", "window", "river", "stone"];
pub const PRONOUNS: [&str; 4] = ["he", "she", "it", "they"];

pub fn noun(k: usize) -> String {
    format!("noun{k}")
}

pub fn cue(k: usize) -> String {
    format!("cue{k}")
}

/// Every token the fixtures can produce.
pub fn fixture_vocab(classes: usize) -> Vocab {
    let mut v = Vocab::from_tokens(
        FILLERS
            .iter()
            .chain(&DISTRACTORS)
            .chain(&PRONOUNS)
            .chain(&["."]),
    );
    for k in 0..classes {
        v.insert(&noun(k));
        v.insert(&cue(k));
    }
    v
}

fn pick<R: Rng>(rng: &mut R, from: &[&str]) -> String {
    from.choose(rng).unwrap().to_string()
}

/// Class `k` with distractor `d`: `noun{k}` and a distractor noun are the
/// two candidates, their order set by `k + d`; the pronoun agrees with the
/// class and `cue{k}` follows it.
pub fn planted_pair_i(k: usize, d: usize) -> PairExampleI {
    let mut x: Vec<String> = ["the", "", "saw", "the", ""]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let (a, b) = if (k + d).is_multiple_of(2) {
        (1, 4)
    } else {
        (4, 1)
    };
    x[a] = noun(k);
    x[b] = DISTRACTORS[d % DISTRACTORS.len()].to_string();
    let y = ["then", PRONOUNS[k % PRONOUNS.len()], &cue(k), "again", "."]
        .iter()
        .map(|s| s.to_string())
        .collect();
    PairExampleI {
        x,
        nouns: vec![2, 5],
        y,
        source_id: format!("c{k}.d{d}"),
    }
}

/// Every class crossed with every distractor for training; one pair per
/// class, in class order, for validation.
pub fn udssm1_fixture(classes: usize, seed: u64) -> (Vec<PairExampleI>, Vec<PairExampleI>) {
    let train = (0..classes)
        .flat_map(|k| (0..DISTRACTORS.len()).map(move |d| planted_pair_i(k, d)))
        .collect();
    let val = (0..classes)
        .map(|k| planted_pair_i(k, k + seed as usize))
        .collect();
    (train, val)
}

/// Rescales embeddings to `[-1, 1]`, the magnitude of pretrained vectors.
pub fn pretrained_scale(store: &mut udssm::tensor::ParamStore) {
    let id = store.id("emb").unwrap();
    for v in store.get_mut(id).data_mut() {
        *v *= 10.0;
    }
}

/// The cue after the placeholder names a pronoun class; the label says
/// whether the later pronoun belongs to it.
pub fn udssm2_fixture(n: usize, seed: u64) -> Vec<PairExampleII> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|r| {
            let c1 = rng.gen_range(0..PRONOUNS.len());
            let c2 = if r % 2 == 0 {
                c1
            } else {
                (c1 + rng.gen_range(1..PRONOUNS.len())) % PRONOUNS.len()
            };
            let tokens = vec![
                pick(&mut rng, &FILLERS),
                PLACEHOLDER.to_string(),
                cue(c1),
                pick(&mut rng, &FILLERS),
                pick(&mut rng, &FILLERS),
                PRONOUNS[c2].to_string(),
                pick(&mut rng, &FILLERS),
                pick(&mut rng, &FILLERS),
                ".".to_string(),
            ];
            PairExampleII {
                tokens,
                i: 2,
                j: 6,
                label: u8::from(c1 == c2),
                source_id: format!("p{r}"),
            }
        })
        .collect()
}
