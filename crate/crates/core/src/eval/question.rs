use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidate antecedent: inclusive 1-based token span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub start: usize,
    pub end: usize,
    pub label: char,
}

/// A multiple-choice pronoun resolution item.
///
/// Token positions are 1-based as stored on disk; `gold` is a 0-based index
/// into `candidates`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub tokens: Vec<String>,
    pub pronoun_index: usize,
    pub candidates: Vec<Candidate>,
    pub gold: usize,
}

/// On-disk shape: one JSON object per line with a 1-based `gold`.
#[derive(Serialize, Deserialize)]
struct QuestionRecord {
    id: String,
    tokens: Vec<String>,
    pronoun: usize,
    candidates: Vec<[usize; 2]>,
    gold: usize,
}

impl Question {
    pub fn new(
        id: &str,
        tokens: Vec<String>,
        pronoun_index: usize,
        spans: &[(usize, usize)],
        gold: usize,
    ) -> Result<Self> {
        let candidates = spans
            .iter()
            .enumerate()
            .map(|(k, &(start, end))| Candidate {
                start,
                end,
                label: letter(k),
            })
            .collect();
        let q = Question {
            id: id.to_string(),
            tokens,
            pronoun_index,
            candidates,
            gold,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        let fail = |msg: String| Err(Error::data(self.id.clone(), msg));
        if self.pronoun_index == 0 || self.pronoun_index > n {
            return fail(format!(
                "pronoun index {} outside 1..={n}",
                self.pronoun_index
            ));
        }
        if self.candidates.is_empty() {
            return fail("no candidates".into());
        }
        for c in &self.candidates {
            if c.start == 0 || c.start > c.end || c.end > n {
                return fail(format!(
                    "candidate span [{}, {}] outside 1..={n}",
                    c.start, c.end
                ));
            }
            if (c.start..=c.end).contains(&self.pronoun_index) {
                return fail(format!(
                    "candidate span [{}, {}] overlaps the pronoun",
                    c.start, c.end
                ));
            }
        }
        if self.gold >= self.candidates.len() {
            return fail(format!(
                "gold {} outside {} candidates",
                self.gold + 1,
                self.candidates.len()
            ));
        }
        Ok(())
    }

    pub fn pronoun(&self) -> &str {
        &self.tokens[self.pronoun_index - 1]
    }

    pub fn candidate_text(&self, k: usize) -> String {
        let c = &self.candidates[k];
        self.tokens[c.start - 1..c.end].join(" ")
    }

    fn to_record(&self) -> QuestionRecord {
        QuestionRecord {
            id: self.id.clone(),
            tokens: self.tokens.clone(),
            pronoun: self.pronoun_index,
            candidates: self.candidates.iter().map(|c| [c.start, c.end]).collect(),
            gold: self.gold + 1,
        }
    }

    fn from_record(r: QuestionRecord) -> Result<Self> {
        if r.gold == 0 {
            return Err(Error::data(r.id, "gold is 1-based"));
        }
        let spans: Vec<(usize, usize)> = r.candidates.iter().map(|[s, e]| (*s, *e)).collect();
        Question::new(&r.id, r.tokens, r.pronoun, &spans, r.gold - 1)
    }
}

fn letter(k: usize) -> char {
    (b'A' + (k % 26) as u8) as char
}

pub fn parse_questions_from<B: BufRead>(reader: B, path: &Path) -> Result<Vec<Question>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: QuestionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?;
        out.push(Question::from_record(rec)?);
    }
    Ok(out)
}

pub fn parse_questions(path: &Path) -> Result<Vec<Question>> {
    parse_questions_from(BufReader::new(File::open(path)?), path)
}

pub fn write_questions_to<W: Write>(mut out: W, questions: &[Question]) -> Result<()> {
    for q in questions {
        let line =
            serde_json::to_string(&q.to_record()).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_questions(path: &Path, questions: &[Question]) -> Result<()> {
    write_questions_to(BufWriter::new(File::create(path)?), questions)
}
