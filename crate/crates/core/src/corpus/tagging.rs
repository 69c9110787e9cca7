use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gender/number class of a personal pronoun.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PronClass {
    MascSing,
    FemSing,
    NeutSing,
    ThirdPlur,
    FirstSing,
    FirstPlur,
    Second,
}

const PRONOUNS: &[(&str, PronClass)] = &[
    ("he", PronClass::MascSing),
    ("him", PronClass::MascSing),
    ("his", PronClass::MascSing),
    ("himself", PronClass::MascSing),
    ("she", PronClass::FemSing),
    ("her", PronClass::FemSing),
    ("hers", PronClass::FemSing),
    ("herself", PronClass::FemSing),
    ("it", PronClass::NeutSing),
    ("its", PronClass::NeutSing),
    ("itself", PronClass::NeutSing),
    ("they", PronClass::ThirdPlur),
    ("them", PronClass::ThirdPlur),
    ("their", PronClass::ThirdPlur),
    ("theirs", PronClass::ThirdPlur),
    ("themselves", PronClass::ThirdPlur),
    ("i", PronClass::FirstSing),
    ("me", PronClass::FirstSing),
    ("my", PronClass::FirstSing),
    ("mine", PronClass::FirstSing),
    ("myself", PronClass::FirstSing),
    ("we", PronClass::FirstPlur),
    ("us", PronClass::FirstPlur),
    ("our", PronClass::FirstPlur),
    ("ours", PronClass::FirstPlur),
    ("ourselves", PronClass::FirstPlur),
    ("you", PronClass::Second),
    ("your", PronClass::Second),
    ("yours", PronClass::Second),
    ("yourself", PronClass::Second),
    ("yourselves", PronClass::Second),
];

const DETERMINERS: &[&str] = &["the", "a", "an", "this", "that", "these", "those"];

/// Case-insensitive pronoun lookup; `None` for anything outside the lexicon.
pub fn pronoun_class(surface: &str) -> Option<PronClass> {
    let lower = surface.to_lowercase();
    PRONOUNS.iter().find(|(p, _)| *p == lower).map(|(_, c)| *c)
}

pub fn is_pronoun(surface: &str) -> bool {
    pronoun_class(surface).is_some()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    Noun,
    Pron,
    Other,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Noun => "NOUN",
            Tag::Pron => "PRON",
            Tag::Other => "OTHER",
        })
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "NOUN" => Ok(Tag::Noun),
            "PRON" => Ok(Tag::Pron),
            "OTHER" => Ok(Tag::Other),
            _ => Err(format!("unknown tag {s:?}")),
        }
    }
}

/// A token with its coarse tag. `pron_class` is set exactly for `Pron`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedToken {
    surface: String,
    tag: Tag,
    pron_class: Option<PronClass>,
}

impl TaggedToken {
    pub fn noun(surface: impl Into<String>) -> Self {
        TaggedToken {
            surface: surface.into(),
            tag: Tag::Noun,
            pron_class: None,
        }
    }

    pub fn other(surface: impl Into<String>) -> Self {
        TaggedToken {
            surface: surface.into(),
            tag: Tag::Other,
            pron_class: None,
        }
    }

    /// `None` when the surface is not in the pronoun lexicon.
    pub fn pronoun(surface: impl Into<String>) -> Option<Self> {
        let surface = surface.into();
        let class = pronoun_class(&surface)?;
        Some(TaggedToken {
            surface,
            tag: Tag::Pron,
            pron_class: Some(class),
        })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn pron_class(&self) -> Option<PronClass> {
        self.pron_class
    }

    pub fn is_noun(&self) -> bool {
        self.tag == Tag::Noun
    }

    pub fn is_pronoun(&self) -> bool {
        self.tag == Tag::Pron
    }
}

/// Lowercased nouns the heuristic tagger always accepts.
pub type NounLexicon = HashSet<String>;

pub fn load_noun_lexicon(path: &Path) -> Result<NounLexicon> {
    let reader = BufReader::new(File::open(path)?);
    let mut lex = NounLexicon::new();
    for line in reader.lines() {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() && !w.starts_with('#') {
            lex.insert(w.to_lowercase());
        }
    }
    Ok(lex)
}

/// Rule-based tagging.
///
/// A token is `Pron` if it is in the pronoun lexicon; otherwise `Noun` if
/// it is in `nouns`, is capitalized away from the sentence start, or
/// directly follows a determiner; otherwise `Other`.
pub fn tag_tokens<S: AsRef<str>>(tokens: &[S], nouns: &NounLexicon) -> Vec<TaggedToken> {
    let mut out = Vec::with_capacity(tokens.len());
    for (k, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        if let Some(p) = TaggedToken::pronoun(tok) {
            out.push(p);
            continue;
        }
        let lower = tok.to_lowercase();
        let wordlike = tok.chars().any(char::is_alphabetic);
        let capitalized = tok.chars().next().is_some_and(char::is_uppercase);
        let after_det =
            k > 0 && DETERMINERS.contains(&tokens[k - 1].as_ref().to_lowercase().as_str());
        let noun = nouns.contains(&lower)
            || (wordlike && capitalized && k > 0)
            || (wordlike && after_det && !DETERMINERS.contains(&lower.as_str()));
        out.push(if noun {
            TaggedToken::noun(tok)
        } else {
            TaggedToken::other(tok)
        });
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TaggedCorpus {
    pub sentences: Vec<Vec<TaggedToken>>,
    /// `PRON` lines whose surface is not a known pronoun (kept as `OTHER`).
    pub warnings: usize,
}

/// Reads `surface<TAB>TAG` lines with blank lines between sentences.
pub fn parse_tagged_file(path: &Path) -> Result<TaggedCorpus> {
    let reader = BufReader::new(File::open(path)?);
    parse_tagged(reader, path)
}

pub fn parse_tagged<B: BufRead>(reader: B, path: &Path) -> Result<TaggedCorpus> {
    let mut corpus = TaggedCorpus::default();
    let mut current = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            if !current.is_empty() {
                corpus.sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (surface, tag) = trimmed
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected surface<TAB>tag"))?;
        if surface.is_empty() || surface.contains(char::is_whitespace) {
            return Err(Error::parse(
                path,
                lineno,
                format!("bad surface {surface:?}"),
            ));
        }
        let tag: Tag = tag
            .parse()
            .map_err(|e: String| Error::parse(path, lineno, e))?;
        current.push(match tag {
            Tag::Noun => TaggedToken::noun(surface),
            Tag::Other => TaggedToken::other(surface),
            Tag::Pron => TaggedToken::pronoun(surface).unwrap_or_else(|| {
                log::warn!(
                    "{}:{lineno}: {surface:?} is not a known pronoun, tagging OTHER",
                    path.display()
                );
                corpus.warnings += 1;
                TaggedToken::other(surface)
            }),
        });
    }
    if !current.is_empty() {
        corpus.sentences.push(current);
    }
    Ok(corpus)
}
