use std::collections::HashMap;

use super::Sentence;
use crate::error::{Error, Result};

/// Word ↔ id bijection with corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    words: Vec<String>,
    counts: Vec<u64>,
    min_count: u64,
}

impl Vocabulary {
    /// Counts token norms and keeps words seen at least `min_count` times.
    /// Ids follow descending frequency; ties break lexicographically.
    pub fn build(sentences: &[Sentence], min_count: u64) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be at least 1".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in sentences {
            for t in &s.tokens {
                *freq.entry(t.norm.as_str()).or_default() += 1;
            }
        }
        if freq.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let mut entries: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut vocab = Self { min_count, ..Self::default() };
        for (w, c) in entries {
            vocab.push(w.to_string(), c);
        }
        Ok(vocab)
    }

    /// Vocabulary over an externally supplied word list (e.g. a pretrained
    /// embedding file). Frequencies are unknown and recorded as zero.
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Result<Self> {
        let mut vocab = Self::default();
        for w in words {
            if vocab.index.contains_key(&w) {
                return Err(Error::InvalidArgument(format!("duplicate word `{w}`")));
            }
            vocab.push(w, 0);
        }
        Ok(vocab)
    }

    fn push(&mut self, word: String, count: u64) {
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.counts.push(count);
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn require(&self, word: &str) -> Result<usize> {
        self.id(word).ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `word<TAB>count` lines in id order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (w, c) in self.words.iter().zip(&self.counts) {
            out.push_str(w);
            out.push('\t');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut vocab = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (w, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse { line: i + 1, message: "expected `word<TAB>count`".into() })?;
            let c: u64 =
                c.parse().map_err(|_| Error::Parse { line: i + 1, message: format!("bad count `{c}`") })?;
            if vocab.index.contains_key(w) {
                return Err(Error::Parse { line: i + 1, message: format!("duplicate word `{w}`") });
            }
            vocab.push(w.to_string(), c);
        }
        vocab.min_count = vocab.counts.iter().copied().min().unwrap_or(0);
        Ok(vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Stopwords};

    fn corpus(text: &str) -> Vec<Sentence> {
        vec![Sentence::from_text("s", text, &Stopwords::none())]
    }

    #[test]
    fn frequency_order() {
        let v = Vocabulary::build(&corpus("a a b"), 1).unwrap();
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), Some(1));
        assert_eq!(v.count(0), 2);
    }

    #[test]
    fn threshold() {
        let v = Vocabulary::build(&corpus("a a b"), 2).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.id("b"), None);
    }

    #[test]
    fn lexicographic_tiebreak() {
        let v = Vocabulary::build(&corpus("b a"), 1).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(Vocabulary::build(&[], 1), Err(Error::Empty(_))));
        assert!(Vocabulary::build(&corpus("a"), 0).is_err());
        assert!(Vocabulary::from_words(["x".to_string(), "x".to_string()]).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let v = Vocabulary::build(&corpus("a a a b b c"), 1).unwrap();
        let back = Vocabulary::from_tsv(&v.to_tsv()).unwrap();
        assert_eq!(back.words(), v.words());
        assert_eq!(back.counts(), v.counts());
    }
}
