use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse part-of-speech tag. Only nouns and adjectives matter downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Adj,
    Verb,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Adj => "ADJ",
            Pos::Verb => "VERB",
            Pos::Other => "OTHER",
        }
    }

    /// Collapses a Universal Dependencies or Penn Treebank tag onto the
    /// coarse set. Anything unrecognised becomes `Other`.
    pub fn coarsen(tag: &str) -> Pos {
        let t = tag.trim().to_ascii_uppercase();
        match t.as_str() {
            "NOUN" | "PROPN" => Pos::Noun,
            "ADJ" => Pos::Adj,
            "VERB" | "AUX" => Pos::Verb,
            _ if t.starts_with("NN") => Pos::Noun,
            _ if t.starts_with("JJ") => Pos::Adj,
            _ if t.starts_with("VB") || t == "MD" => Pos::Verb,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    pub pos: Option<Pos>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        let norm = surface.to_lowercase();
        Self { surface, norm, pos: None }
    }

    pub fn is_noun(&self) -> bool {
        self.pos == Some(Pos::Noun)
    }

    pub fn is_adj(&self) -> bool {
        self.pos == Some(Pos::Adj)
    }
}

/// Gold aspect categories used for evaluation, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GoldCategory {
    Food,
    Staff,
    Ambience,
    Price,
    Miscellaneous,
}

impl GoldCategory {
    pub const ALL: [GoldCategory; 5] = [
        GoldCategory::Food,
        GoldCategory::Staff,
        GoldCategory::Ambience,
        GoldCategory::Price,
        GoldCategory::Miscellaneous,
    ];

    /// Categories the contrastive-attention prior can predict.
    pub const PRIOR: [GoldCategory; 3] = [GoldCategory::Food, GoldCategory::Staff, GoldCategory::Ambience];

    pub fn name(self) -> &'static str {
        match self {
            GoldCategory::Food => "Food",
            GoldCategory::Staff => "Staff",
            GoldCategory::Ambience => "Ambience",
            GoldCategory::Price => "Price",
            GoldCategory::Miscellaneous => "Miscellaneous",
        }
    }

    /// Maps a SemEval-2014 restaurant `aspectCategory/@category` value.
    pub fn from_semeval(category: &str) -> Result<Self> {
        match category {
            "food" => Ok(GoldCategory::Food),
            "service" => Ok(GoldCategory::Staff),
            "ambience" => Ok(GoldCategory::Ambience),
            "price" => Ok(GoldCategory::Price),
            "anecdotes/miscellaneous" | "anecdotes" | "miscellaneous" => Ok(GoldCategory::Miscellaneous),
            other => Err(Error::UnknownCategory(other.to_string())),
        }
    }
}

impl fmt::Display for GoldCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GoldCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GoldCategory::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Lowercase stopword set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn none() -> Self {
        Self::default()
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '\''
}

/// Splits on anything that is not alphanumeric, a hyphen, or an apostrophe;
/// trims hyphens/apostrophes from token edges; lowercases; drops stopwords.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> Vec<Token> {
    text.split(|c: char| !is_word_char(c))
        .map(|piece| piece.trim_matches(|c| c == '-' || c == '\''))
        .filter(|piece| !piece.is_empty())
        .map(Token::new)
        .filter(|t| !stopwords.contains(&t.norm))
        .collect()
}

/// Hook for attaching POS tags to already tokenized text.
pub trait PosTagger {
    fn tag(&self, tokens: &[Token]) -> Vec<Pos>;
}

/// Word → tag lookup. Unlisted words are tagged `Other`.
#[derive(Debug, Clone, Default)]
pub struct LexiconTagger {
    entries: std::collections::HashMap<String, Pos>,
}

impl LexiconTagger {
    /// Parses `word<TAB>TAG` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse { line: i + 1, message: "expected `word<TAB>TAG`".into() })?;
            entries.insert(word.trim().to_lowercase(), Pos::coarsen(tag));
        }
        Ok(Self { entries })
    }

    pub fn insert(&mut self, word: &str, pos: Pos) {
        self.entries.insert(word.to_lowercase(), pos);
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, tokens: &[Token]) -> Vec<Pos> {
        tokens.iter().map(|t| self.entries.get(&t.norm).copied().unwrap_or(Pos::Other)).collect()
    }
}

impl FromStr for Pos {
    type Err = Error;

    /// Strict parse of the four coarse names.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NOUN" => Ok(Pos::Noun),
            "ADJ" => Ok(Pos::Adj),
            "VERB" => Ok(Pos::Verb),
            "OTHER" => Ok(Pos::Other),
            other => Err(Error::InvalidArgument(format!("unknown POS tag `{other}`"))),
        }
    }
}
