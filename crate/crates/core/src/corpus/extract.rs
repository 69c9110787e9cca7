//! Pseudo-labelled pair mining.
//!
//! Two heuristics turn raw sentences into training records:
//!
//! * a pronoun usually refers to one of the nouns before it in the same
//!   sentence, giving [`PairExampleI`] records;
//! * two pronouns of the same gender and number in one sentence probably
//!   co-refer, two of different classes probably do not, giving labelled
//!   [`PairExampleII`] records.

use serde::{Deserialize, Serialize};

use super::tagging::{is_pronoun, TaggedToken};
use crate::nn::PLACEHOLDER;

/// Inclusive sentence-length window for mining.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LengthFilter {
    pub min: usize,
    pub max: usize,
}

impl Default for LengthFilter {
    fn default() -> Self {
        LengthFilter { min: 10, max: 50 }
    }
}

impl LengthFilter {
    pub fn accepts(&self, len: usize) -> bool {
        (self.min..=self.max).contains(&len)
    }
}

/// A sentence split just before the word preceding a pronoun.
///
/// `x` holds the candidate antecedents; `y` starts with the word before the
/// pronoun, so the pronoun is always `y[2]` (1-based). `nouns` are 1-based
/// positions in `x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairExampleI {
    pub x: Vec<String>,
    pub nouns: Vec<usize>,
    pub y: Vec<String>,
    pub source_id: String,
}

impl PairExampleI {
    pub fn validate(&self) -> Result<(), String> {
        if self.x.is_empty() {
            return Err("empty x sequence".into());
        }
        if self.nouns.len() < 2 {
            return Err(format!(
                "needs at least 2 nouns, found {}",
                self.nouns.len()
            ));
        }
        if let Some(p) = self.nouns.iter().find(|&&p| p == 0 || p > self.x.len()) {
            return Err(format!("noun position {p} outside 1..={}", self.x.len()));
        }
        if self.y.len() < 2 || !is_pronoun(&self.y[1]) {
            return Err("y must carry a pronoun at position 2".into());
        }
        Ok(())
    }
}

/// A whole sentence with the earlier pronoun of a pair masked.
///
/// `tokens[i]` is the placeholder, `tokens[j]` the kept pronoun (1-based,
/// `i < j`); `label` is 1 when the two original pronouns share a class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairExampleII {
    pub tokens: Vec<String>,
    pub i: usize,
    pub j: usize,
    pub label: u8,
    pub source_id: String,
}

impl PairExampleII {
    pub fn validate(&self) -> Result<(), String> {
        let n = self.tokens.len();
        if self.i == 0 || self.i >= self.j || self.j > n {
            return Err(format!(
                "positions i={} j={} invalid for length {n}",
                self.i, self.j
            ));
        }
        if self.tokens[self.i - 1] != PLACEHOLDER {
            return Err(format!("token {} is not {PLACEHOLDER}", self.i));
        }
        if !is_pronoun(&self.tokens[self.j - 1]) {
            return Err(format!("token {} is not a pronoun", self.j));
        }
        if self.label > 1 {
            return Err(format!("label {} is not 0 or 1", self.label));
        }
        Ok(())
    }
}

/// 1-based positions that end a maximal run of nouns inside `tokens[..end]`.
fn noun_heads(sentence: &[TaggedToken], end: usize) -> Vec<usize> {
    (0..end)
        .filter(|&k| sentence[k].is_noun() && (k + 1 == end || !sentence[k + 1].is_noun()))
        .map(|k| k + 1)
        .collect()
}

/// Splits at the first pronoun preceded by at least two noun phrases.
pub fn extract_assumption1(
    sentence: &[TaggedToken],
    filter: LengthFilter,
    source_id: &str,
) -> Option<PairExampleI> {
    if !filter.accepts(sentence.len()) {
        return None;
    }
    // 0-based pronoun index p; x = tokens[..p-1], y = tokens[p-1..]
    for p in 2..sentence.len() {
        if !sentence[p].is_pronoun() {
            continue;
        }
        let heads = noun_heads(sentence, p - 1);
        if heads.len() >= 2 {
            let surface = |ts: &[TaggedToken]| ts.iter().map(|t| t.surface().to_string()).collect();
            return Some(PairExampleI {
                x: surface(&sentence[..p - 1]),
                nouns: heads,
                y: surface(&sentence[p - 1..]),
                source_id: source_id.to_string(),
            });
        }
    }
    None
}

/// One record per unordered pronoun pair, in `(i, j)` order.
pub fn extract_assumption2(
    sentence: &[TaggedToken],
    filter: LengthFilter,
    source_id: &str,
) -> Vec<PairExampleII> {
    if !filter.accepts(sentence.len()) {
        return Vec::new();
    }
    let pronouns: Vec<usize> = (0..sentence.len())
        .filter(|&k| sentence[k].is_pronoun())
        .collect();
    let mut out = Vec::new();
    for (a, &i) in pronouns.iter().enumerate() {
        for &j in &pronouns[a + 1..] {
            let mut tokens: Vec<String> =
                sentence.iter().map(|t| t.surface().to_string()).collect();
            tokens[i] = PLACEHOLDER.to_string();
            let label = u8::from(sentence[i].pron_class() == sentence[j].pron_class());
            out.push(PairExampleII {
                tokens,
                i: i + 1,
                j: j + 1,
                label,
                source_id: source_id.to_string(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tag_tokens, tokenize, NounLexicon};

    fn tagged(s: &str) -> Vec<TaggedToken> {
        tag_tokens(&tokenize(s), &NounLexicon::new())
    }

    #[test]
    fn three_pronoun_sentence_gives_three_pairs() {
        let s = tagged("He tried twice to call her but she did not answer the phone .");
        let pairs = extract_assumption2(&s, LengthFilter::default(), "s1");
        assert_eq!(pairs.len(), 3);
        let find = |i, j| pairs.iter().find(|p| p.i == i && p.j == j).unwrap();
        // He=1, her=6, she=8
        assert_eq!(find(6, 8).label, 1);
        assert_eq!(find(1, 8).label, 0);
        assert_eq!(find(1, 6).label, 0);
        for p in &pairs {
            assert_eq!(p.tokens[p.i - 1], PLACEHOLDER);
            assert!(p.validate().is_ok());
        }
        assert_eq!(find(6, 8).tokens[0], "He");
        assert_eq!(find(1, 6).tokens[5], "her");
    }

    #[test]
    fn same_class_pair_and_single_pronoun() {
        let s = tagged("yesterday he asked the old farmer to lend him a horse for the trip");
        let pairs = extract_assumption2(&s, LengthFilter::default(), "s");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].label, 1);
        let s = tagged("yesterday he asked the old farmer to lend a horse for the trip");
        assert!(extract_assumption2(&s, LengthFilter::default(), "s").is_empty());
    }

    #[test]
    fn length_filter() {
        let s = tagged("the cat and the dog saw it");
        assert!(extract_assumption1(&s, LengthFilter::default(), "s").is_none());
        assert!(
            extract_assumption2(&tagged("he saw him"), LengthFilter::default(), "s").is_empty()
        );
    }

    #[test]
    fn needs_two_preceding_nouns() {
        let s = tagged(
            "yesterday the farmer walked slowly and happily because he was very tired today",
        );
        assert!(extract_assumption1(&s, LengthFilter::default(), "s").is_none());
        let s = tagged(
            "yesterday the farmer fed the horse slowly and happily because he was very tired",
        );
        let p = extract_assumption1(&s, LengthFilter::default(), "s").unwrap();
        assert_eq!(p.y[1], "he");
        assert_eq!(p.nouns, vec![3, 6]);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn noun_runs_contribute_their_last_token() {
        let s = tagged("the old Northwest Airlines pilots met the ground controllers and then they left quickly");
        let p = extract_assumption1(&s, LengthFilter::default(), "s").unwrap();
        // Northwest Airlines → head "Airlines" (4); ground controllers after "the" → "ground" is NOUN,
        // "controllers" is not tagged without a lexicon.
        assert_eq!(p.x[p.nouns[0] - 1], "Airlines");
        assert!(p.nouns.iter().all(|&k| p.x[k - 1] != "Northwest"));
    }
}
