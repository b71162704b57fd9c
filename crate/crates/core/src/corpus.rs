//! Corpus data model and the newline-delimited JSON ingestion format.
//!
//! Each line of a corpus file is one record:
//!
//! ```text
//! {"id":"BWV269","mode":"major","chords":["I","I","IV6",...],"cadence":["vi","vi42","ii65","V","V7","I"]}
//! ```
//!
//! Chord tokens are opaque strings. The vocabulary is the sorted set of all
//! tokens in all records, so indices do not depend on record order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default intro segment length.
pub const DEFAULT_INTRO_LEN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    /// Binary class label: minor = 0, major = 1.
    pub fn label(self) -> u8 {
        match self {
            Mode::Major => 1,
            Mode::Minor => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "major" => Ok(Mode::Major),
            "minor" => Ok(Mode::Minor),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

/// One composition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoraleRecord {
    pub id: String,
    pub mode: Mode,
    pub chords: Vec<String>,
    pub cadence: Vec<String>,
}

impl ChoraleRecord {
    fn validate(&self) -> Result<()> {
        for (field, seq) in [("chords", &self.chords), ("cadence", &self.cadence)] {
            if seq.is_empty() {
                return Err(Error::EmptySequence {
                    id: self.id.clone(),
                    field,
                });
            }
            if let Some(bad) = seq
                .iter()
                .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
            {
                return Err(Error::InvalidToken {
                    id: self.id.clone(),
                    token: bad.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Bijection between chord tokens and dense indices `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from any token set; indices follow lexicographic order.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = sorted.into_iter().collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Maps a token sequence to indices, failing on the first unknown token.
    pub fn encode<S: AsRef<str>>(&self, seq: &[S]) -> Result<Vec<usize>> {
        seq.iter()
            .map(|t| {
                self.index_of(t.as_ref())
                    .ok_or_else(|| Error::UnknownToken(t.as_ref().to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<ChoraleRecord>,
    vocab: Vocab,
}

impl Corpus {
    /// Validates records and builds the vocabulary.
    pub fn from_records(records: Vec<ChoraleRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId {
                    line: i + 1,
                    id: r.id.clone(),
                });
            }
        }
        let vocab = Vocab::from_tokens(
            records
                .iter()
                .flat_map(|r| r.chords.iter().chain(&r.cadence))
                .map(String::as_str),
        );
        Ok(Corpus { records, vocab })
    }

    pub fn records(&self) -> &[ChoraleRecord] {
        &self.records
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ChoraleRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Index lookup by record id.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect()
    }

    /// (major, minor) record counts.
    pub fn mode_counts(&self) -> (usize, usize) {
        let major = self
            .records
            .iter()
            .filter(|r| r.mode == Mode::Major)
            .count();
        (major, self.records.len() - major)
    }

    /// Serializes to the ingestion format, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            // Serializing a plain struct of strings cannot fail.
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Parses corpus text in the ingestion format. Blank lines are skipped.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChoraleRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        record.validate().map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if seen.insert(record.id.clone(), line_no).is_some() {
            return Err(Error::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::from_records(records)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, corpus.to_jsonl()).map_err(|e| Error::io(path, e))
}

/// Which part of a record a similarity comparison looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// The first `n` chords.
    Intro(usize),
    /// The cadence field.
    Cadence,
    /// Both, compared separately and summed.
    IntroAndCadence(usize),
}

impl Default for Selector {
    fn default() -> Self {
        Selector::Intro(DEFAULT_INTRO_LEN)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Intro(n) => write!(f, "intro:{n}"),
            Selector::Cadence => f.write_str("cadence"),
            Selector::IntroAndCadence(n) => write!(f, "intro+cadence:{n}"),
        }
    }
}

impl FromStr for Selector {
    type Err = Error;

    /// Accepts `intro`, `intro:N`, `cadence`, `intro+cadence` and `intro+cadence:N`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, n) = match s.split_once(':') {
            Some((k, n)) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad segment length in {s:?}")))?;
                (k, Some(n))
            }
            None => (s, None),
        };
        let n = n.unwrap_or(DEFAULT_INTRO_LEN);
        if n == 0 {
            return Err(Error::InvalidParameter("segment length must be positive".into()));
        }
        match kind {
            "intro" => Ok(Selector::Intro(n)),
            "cadence" => Ok(Selector::Cadence),
            "intro+cadence" | "intro_and_cadence" => Ok(Selector::IntroAndCadence(n)),
            _ => Err(Error::InvalidParameter(format!("unknown selector {s:?}"))),
        }
    }
}

/// Extracts the segment(s) a selector names from a record.
pub fn segment(record: &ChoraleRecord, selector: Selector) -> Result<Vec<&[String]>> {
    let intro = |n: usize| -> Result<&[String]> {
        if record.chords.len() < n {
            return Err(Error::SegmentTooShort {
                id: record.id.clone(),
                len: record.chords.len(),
                needed: n,
            });
        }
        Ok(&record.chords[..n])
    };
    match selector {
        Selector::Intro(n) => Ok(vec![intro(n)?]),
        Selector::Cadence => Ok(vec![&record.cadence[..]]),
        Selector::IntroAndCadence(n) => Ok(vec![intro(n)?, &record.cadence[..]]),
    }
}
