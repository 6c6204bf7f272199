//! Review-corpus ingestion: tokenization, SemEval-2014 XML and JSONL
//! readers, vocabulary construction, and single-aspect filtering.

mod jsonl;
mod semeval;
mod token;
mod vocab;

pub use jsonl::{parse_jsonl, to_jsonl};
pub use semeval::parse_semeval_xml;
pub use token::{tokenize, GoldCategory, LexiconTagger, Pos, PosTagger, Stopwords, Token};
pub use vocab::Vocabulary;

/// One review sentence.
///
/// `annotations` is `None` for unlabeled sources, where the number of
/// aspects is unknown, and the distinct annotated categories otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    /// Vocabulary ids of the tokens that survived indexing.
    pub token_ids: Vec<usize>,
    pub annotations: Option<Vec<GoldCategory>>,
}

impl Sentence {
    pub fn from_text(id: impl Into<String>, text: &str, stopwords: &Stopwords) -> Self {
        Self { id: id.into(), tokens: tokenize(text, stopwords), token_ids: Vec::new(), annotations: None }
    }

    pub fn with_gold(mut self, gold: GoldCategory) -> Self {
        self.annotations = Some(vec![gold]);
        self
    }

    /// The gold category, present only for single-aspect labeled sentences.
    pub fn gold(&self) -> Option<GoldCategory> {
        match self.annotations.as_deref() {
            Some([only]) => Some(*only),
            _ => None,
        }
    }

    /// Resolves tokens against `vocab`; unknown words are dropped.
    pub fn index(&mut self, vocab: &Vocabulary) {
        self.token_ids = self.tokens.iter().filter_map(|t| vocab.id(&t.norm)).collect();
    }

    pub fn apply_tagger(&mut self, tagger: &dyn PosTagger) {
        let tags = tagger.tag(&self.tokens);
        for (t, p) in self.tokens.iter_mut().zip(tags) {
            t.pos = Some(p);
        }
    }

    pub fn has_pos(&self) -> bool {
        !self.tokens.is_empty() && self.tokens.iter().all(|t| t.pos.is_some())
    }

    /// Surface text reconstructed from the kept tokens.
    pub fn text(&self) -> String {
        let words: Vec<&str> = self.tokens.iter().map(|t| t.surface.as_str()).collect();
        words.join(" ")
    }
}

/// Resolves every sentence against `vocab`.
pub fn index_all(sentences: &mut [Sentence], vocab: &Vocabulary) {
    sentences.iter_mut().for_each(|s| s.index(vocab));
}

/// Keeps labeled sentences with exactly one annotated category, plus every
/// unlabeled sentence.
pub fn filter_single_aspect(sentences: Vec<Sentence>) -> Vec<Sentence> {
    sentences.into_iter().filter(|s| s.annotations.as_ref().is_none_or(|a| a.len() == 1)).collect()
}
