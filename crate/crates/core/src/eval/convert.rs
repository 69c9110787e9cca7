//! Conversion of the public pronoun-challenge XML collections.
//!
//! Items are located structurally: any element with a `text` child holding
//! `txt1`, `pron` and `txt2`, plus an `answers` list and a `correctAnswer`
//! letter. Both the schema collection and the pronoun-problem collection
//! share this shape.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use roxmltree::{Document, Node};

use super::Question;
use crate::corpus::tokenize;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollectionKind {
    Wsc,
    Pdp,
}

impl CollectionKind {
    fn prefix(self) -> &'static str {
        match self {
            CollectionKind::Wsc => "wsc",
            CollectionKind::Pdp => "pdp",
        }
    }
}

impl fmt::Display for CollectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

impl FromStr for CollectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wsc" => Ok(CollectionKind::Wsc),
            "pdp" => Ok(CollectionKind::Pdp),
            _ => Err(Error::Config(format!("unknown collection kind {s:?}"))),
        }
    }
}

/// Items dropped during conversion, with the reason.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConversionLog {
    pub skipped: Vec<(String, String)>,
    /// Candidates found only through a relaxed match.
    pub relaxed: Vec<(String, String)>,
}

pub fn convert_collection_xml(
    path: &Path,
    kind: CollectionKind,
) -> Result<(Vec<Question>, ConversionLog)> {
    let text = std::fs::read_to_string(path)?;
    convert_collection_str(&text, path, kind)
}

pub fn convert_collection_str(
    xml: &str,
    path: &Path,
    kind: CollectionKind,
) -> Result<(Vec<Question>, ConversionLog)> {
    let doc = Document::parse(xml)
        .map_err(|e| Error::parse(path, e.pos().row as usize, e.to_string()))?;
    let mut out = Vec::new();
    let mut log = ConversionLog::default();
    let items = doc.descendants().filter(|n| {
        n.is_element() && child(*n, "text").is_some() && child(*n, "answers").is_some()
    });
    for (k, item) in items.enumerate() {
        let id = format!("{}{}", kind.prefix(), k + 1);
        match convert_item(item, &id, &mut log) {
            Ok(q) => out.push(q),
            Err(reason) => {
                warn!("skipping {id}: {reason}");
                log.skipped.push((id, reason));
            }
        }
    }
    Ok((out, log))
}

fn child<'a, 'i>(n: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    n.children()
        .find(|c| c.is_element() && c.tag_name().name().eq_ignore_ascii_case(name))
}

fn text_of(n: Node) -> String {
    n.descendants()
        .filter(|d| d.is_text())
        .filter_map(|d| d.text())
        .collect::<Vec<_>>()
        .join(" ")
}

fn convert_item(
    item: Node,
    id: &str,
    log: &mut ConversionLog,
) -> std::result::Result<Question, String> {
    let text = child(item, "text").ok_or("no text element")?;
    let part = |name: &str| {
        child(text, name)
            .map(text_of)
            .ok_or(format!("no {name} element"))
    };
    let before = tokenize(&part("txt1")?);
    let pron = tokenize(&part("pron")?);
    let after = tokenize(&part("txt2")?);
    if pron.is_empty() {
        return Err("empty pronoun".into());
    }
    let p = before.len() + 1;
    let mut tokens = before;
    tokens.extend(pron);
    tokens.extend(after);

    let answers: Vec<String> = child(item, "answers")
        .ok_or("no answers element")?
        .children()
        .filter(|c| c.is_element())
        .map(|c| text_of(c).trim().to_string())
        .collect();
    if answers.len() < 2 {
        return Err(format!("{} answers", answers.len()));
    }
    let letter = child(item, "correctAnswer")
        .map(text_of)
        .and_then(|s| s.trim().chars().next())
        .ok_or("no correct answer")?
        .to_ascii_uppercase();
    let gold = (letter as usize)
        .checked_sub('A' as usize)
        .filter(|g| *g < answers.len())
        .ok_or(format!(
            "correct answer {letter:?} does not name a candidate"
        ))?;

    let mut spans = Vec::with_capacity(answers.len());
    for a in &answers {
        let (span, relaxed) = locate(&tokens, p, a).ok_or(format!("candidate {a:?} not found"))?;
        if relaxed {
            log.relaxed.push((id.to_string(), a.clone()));
        }
        spans.push(span);
    }
    Question::new(id, tokens, p, &spans, gold).map_err(|e| e.to_string())
}

/// Last match before the pronoun, then anywhere not covering it; exact
/// first, then case-insensitive, then without a leading article.
fn locate(tokens: &[String], p: usize, answer: &str) -> Option<((usize, usize), bool)> {
    let needle = tokenize(answer);
    if needle.is_empty() {
        return None;
    }
    let stripped: Option<Vec<String>> = match needle[0].to_lowercase().as_str() {
        "the" | "a" | "an" if needle.len() > 1 => Some(needle[1..].to_vec()),
        _ => None,
    };
    let eq_exact = |a: &String, b: &String| a == b;
    let eq_fold = |a: &String, b: &String| a.to_lowercase() == b.to_lowercase();
    let before = &tokens[..p - 1];

    if let Some(s) = find_last(before, &needle, eq_exact) {
        return Some(((s + 1, s + needle.len()), false));
    }
    let mut attempts: Vec<&[String]> = vec![&needle];
    if let Some(s) = &stripped {
        attempts.push(s);
    }
    for n in &attempts {
        if let Some(s) = find_last(before, n, eq_fold) {
            return Some(((s + 1, s + n.len()), true));
        }
    }
    for n in &attempts {
        let hit = (0..=tokens.len().saturating_sub(n.len()))
            .rev()
            .filter(|&s| !(s + 1..=s + n.len()).contains(&p))
            .find(|&s| {
                tokens[s..s + n.len()]
                    .iter()
                    .zip(n.iter())
                    .all(|(a, b)| eq_fold(a, b))
            });
        if let Some(s) = hit {
            return Some(((s + 1, s + n.len()), true));
        }
    }
    None
}

fn find_last<F: Fn(&String, &String) -> bool>(
    hay: &[String],
    needle: &[String],
    eq: F,
) -> Option<usize> {
    if needle.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - needle.len()).rev().find(|&s| {
        hay[s..s + needle.len()]
            .iter()
            .zip(needle)
            .all(|(a, b)| eq(a, b))
    })
}
