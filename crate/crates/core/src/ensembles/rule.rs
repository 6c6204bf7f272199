use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cat::PriorLabel;
use crate::corpus::{GoldCategory, Pos, Sentence};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numerics::{cosine, Scalar};

/// Which POS tags make a token a disambiguation candidate.
/// Serialized with the same names the command line accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateMode {
    #[serde(rename = "nn-adj", alias = "nouns-and-adjectives")]
    NounsAndAdjectives,
    #[serde(rename = "nn", alias = "nouns-only")]
    NounsOnly,
}

impl CandidateMode {
    fn accepts(self, pos: Option<Pos>) -> bool {
        matches!((self, pos), (_, Some(Pos::Noun)) | (CandidateMode::NounsAndAdjectives, Some(Pos::Adj)))
    }
}

impl FromStr for CandidateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn-adj" => Ok(Self::NounsAndAdjectives),
            "nn" => Ok(Self::NounsOnly),
            other => Err(Error::InvalidArgument(format!(
                "unknown candidate mode `{other}`; expected nn or nn-adj"
            ))),
        }
    }
}

/// What unresolved conflicts fall back to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fallback {
    /// ABAE's label, or Miscellaneous when ABAE has none.
    #[serde(rename = "abae-misc", alias = "abae-then-misc")]
    AbaeThenMisc,
    #[serde(rename = "misc", alias = "misc-only")]
    MiscOnly,
}

impl FromStr for Fallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abae-misc" => Ok(Self::AbaeThenMisc),
            "misc" => Ok(Self::MiscOnly),
            other => {
                Err(Error::InvalidArgument(format!("unknown fallback `{other}`; expected abae-misc or misc")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    pub candidate_mode: CandidateMode,
    /// Categories for which conflicts are settled by word similarity; empty
    /// disables disambiguation.
    pub disambiguation_scope: BTreeSet<GoldCategory>,
    pub fallback: Fallback,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::nn_adj()
    }
}

impl RuleConfig {
    /// Nouns and adjectives, disambiguating Food, Staff, and Ambience.
    pub fn nn_adj() -> Self {
        Self {
            candidate_mode: CandidateMode::NounsAndAdjectives,
            disambiguation_scope: GoldCategory::PRIOR.into_iter().collect(),
            fallback: Fallback::AbaeThenMisc,
        }
    }

    pub fn only_nn() -> Self {
        Self { candidate_mode: CandidateMode::NounsOnly, ..Self::nn_adj() }
    }

    /// No disambiguation: agreements, then ABAE, then Miscellaneous.
    pub fn abae_misc() -> Self {
        Self { disambiguation_scope: BTreeSet::new(), ..Self::nn_adj() }
    }

    /// Disambiguation restricted to Food and Staff.
    pub fn nn_adj_fost() -> Self {
        Self {
            disambiguation_scope: [GoldCategory::Food, GoldCategory::Staff].into_iter().collect(),
            ..Self::nn_adj()
        }
    }

    /// Looks up a named preset: `nn-adj`, `only-nn`, `abae-misc`, `nn-adj-fost`.
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nn-adj" => Ok(Self::nn_adj()),
            "only-nn" => Ok(Self::only_nn()),
            "abae-misc" => Ok(Self::abae_misc()),
            "nn-adj-fost" => Ok(Self::nn_adj_fost()),
            other => Err(Error::InvalidArgument(format!("unknown rule preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.disambiguation_scope {
            if !GoldCategory::PRIOR.contains(c) {
                return Err(Error::InvalidArgument(format!(
                    "{c} cannot be disambiguated; scope must be within Food, Staff, Ambience"
                )));
            }
        }
        Ok(())
    }
}

/// Which branch of the rules produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Agreement,
    Disambiguated,
    AbaeFallback,
    Miscellaneous,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Agreement => "Agreement",
            Provenance::Disambiguated => "Disambiguated",
            Provenance::AbaeFallback => "AbaeFallback",
            Provenance::Miscellaneous => "Miscellaneous",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub id: String,
    pub category: GoldCategory,
    pub provenance: Provenance,
}

fn index_by_id<'a, T: Copy>(what: &str, preds: &'a [(String, T)]) -> Result<HashMap<&'a str, T>> {
    let mut map = HashMap::with_capacity(preds.len());
    for (id, p) in preds {
        if map.insert(id.as_str(), *p).is_some() {
            return Err(Error::IdMismatch(format!("duplicate {what} prediction for `{id}`")));
        }
    }
    Ok(map)
}

/// Merges CAt and ABAE predictions sentence by sentence.
///
/// Agreements are kept. A conflict where either side names an in-scope
/// category is settled by the (category, candidate word) pair of highest
/// cosine, ties going to Food, Staff, Ambience in that order and then to the
/// earlier word; with no embeddable candidate it becomes Miscellaneous. Other
/// conflicts take the configured fallback. A CAt "none" never agrees with
/// anything, and `None` for ABAE marks a sentence it could not score.
///
/// `labels` must hold an embedding for every category in scope. Output
/// follows the order of `sentences`.
pub fn rule_ensemble<S: Scalar>(
    cat_preds: &[(String, PriorLabel)],
    abae_preds: &[(String, Option<GoldCategory>)],
    sentences: &[Sentence],
    emb: &EmbeddingMatrix<S>,
    labels: &BTreeMap<GoldCategory, Vec<S>>,
    config: &RuleConfig,
) -> Result<Vec<EnsemblePrediction>> {
    config.validate()?;
    let cat = index_by_id("CAt", cat_preds)?;
    let abae = index_by_id("ABAE", abae_preds)?;
    if cat.len() != sentences.len() || abae.len() != sentences.len() {
        return Err(Error::IdMismatch(format!(
            "{} sentences, {} CAt predictions, {} ABAE predictions",
            sentences.len(),
            cat.len(),
            abae.len()
        )));
    }
    let scope: Vec<(GoldCategory, &[S])> = config
        .disambiguation_scope
        .iter()
        .map(|&c| {
            labels
                .get(&c)
                .map(|v| (c, v.as_slice()))
                .ok_or_else(|| Error::InvalidArgument(format!("no label embedding for {c}")))
        })
        .collect::<Result<_>>()?;

    sentences
        .iter()
        .map(|s| {
            let missing = |what: &str| Error::IdMismatch(format!("no {what} prediction for `{}`", s.id));
            let c = cat.get(s.id.as_str()).ok_or_else(|| missing("CAt"))?.category();
            let a = *abae.get(s.id.as_str()).ok_or_else(|| missing("ABAE"))?;
            let (category, provenance) = decide(s, c, a, &scope, emb, config)?;
            Ok(EnsemblePrediction { id: s.id.clone(), category, provenance })
        })
        .collect()
}

fn decide<S: Scalar>(
    sentence: &Sentence,
    cat: Option<GoldCategory>,
    abae: Option<GoldCategory>,
    scope: &[(GoldCategory, &[S])],
    emb: &EmbeddingMatrix<S>,
    config: &RuleConfig,
) -> Result<(GoldCategory, Provenance)> {
    if let Some(c) = cat.filter(|&c| Some(c) == abae) {
        return Ok((c, Provenance::Agreement));
    }
    let in_scope = |x: Option<GoldCategory>| x.is_some_and(|x| scope.iter().any(|(c, _)| *c == x));
    if in_scope(cat) || in_scope(abae) {
        let mut best: Option<(GoldCategory, S)> = None;
        // scope is ordered Food, Staff, Ambience
        for &(category, label) in scope {
            for t in &sentence.tokens {
                if !config.candidate_mode.accepts(t.pos) {
                    continue;
                }
                let Some(id) = emb.vocab().id(&t.norm) else {
                    continue;
                };
                let sim = match cosine(emb.vector(id), label) {
                    Ok(sim) => sim,
                    Err(Error::ZeroNorm) => continue,
                    Err(e) => return Err(e),
                };
                if best.is_none_or(|(_, b)| sim > b) {
                    best = Some((category, sim));
                }
            }
        }
        return Ok(match best {
            Some((category, _)) => (category, Provenance::Disambiguated),
            None => (GoldCategory::Miscellaneous, Provenance::Miscellaneous),
        });
    }
    Ok(match (config.fallback, abae) {
        (Fallback::AbaeThenMisc, Some(a)) => (a, Provenance::AbaeFallback),
        _ => (GoldCategory::Miscellaneous, Provenance::Miscellaneous),
    })
}

/// `{"id", "category", "provenance"}` per line.
pub fn ensemble_to_jsonl(preds: &[EnsemblePrediction]) -> String {
    let mut out = String::new();
    for p in preds {
        out.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        out.push('\n');
    }
    out
}
