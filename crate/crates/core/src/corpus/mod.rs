//! Tokenization, tagging and pseudo-label extraction.

mod extract;
mod pairs;
mod tagging;
mod tokenize;

pub use extract::{
    extract_assumption1, extract_assumption2, LengthFilter, PairExampleI, PairExampleII,
};
pub use pairs::{read_pairs, read_pairs_from, write_pairs, write_pairs_to, PairRecord};
pub use tagging::{
    is_pronoun, load_noun_lexicon, parse_tagged, parse_tagged_file, pronoun_class, tag_tokens,
    NounLexicon, PronClass, Tag, TaggedCorpus, TaggedToken,
};
pub use tokenize::tokenize;
