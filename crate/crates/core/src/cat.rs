//! Contrastive-attention prior.
//!
//! Frequent nouns act as aspect candidates. Each word of a sentence is
//! weighted by its summed RBF similarity to the candidates, and the
//! resulting attended vector is labeled with the closest of the Food, Staff,
//! and Ambience label embeddings, or with a "none" placeholder built from
//! the negated mean of those three.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{GoldCategory, Pos, Sentence, Vocabulary};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numerics::{axpy, cosine, l2_normalize, rbf, Scalar};

/// Label produced by the prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorLabel {
    Category(GoldCategory),
    /// Sentence belongs to none of the prior's categories.
    None,
}

impl PriorLabel {
    pub fn category(self) -> Option<GoldCategory> {
        match self {
            PriorLabel::Category(c) => Some(c),
            PriorLabel::None => None,
        }
    }
}

impl fmt::Display for PriorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorLabel::Category(c) => f.write_str(c.name()),
            PriorLabel::None => f.write_str("None"),
        }
    }
}

impl FromStr for PriorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(PriorLabel::None);
        }
        let c: GoldCategory = s.parse()?;
        if !GoldCategory::PRIOR.contains(&c) {
            return Err(Error::InvalidArgument(format!(
                "the prior cannot predict `{c}`; expected Food, Staff, Ambience, or None"
            )));
        }
        Ok(PriorLabel::Category(c))
    }
}

/// Seed words per category; a category's label embedding is the mean of its
/// seed-word vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedWords(pub BTreeMap<GoldCategory, Vec<String>>);

impl Default for SeedWords {
    fn default() -> Self {
        Self(BTreeMap::from([
            (GoldCategory::Food, vec!["food".to_string()]),
            (GoldCategory::Staff, vec!["staff".to_string()]),
            (GoldCategory::Ambience, vec!["ambience".to_string()]),
            (GoldCategory::Price, vec!["price".to_string()]),
            (GoldCategory::Miscellaneous, vec!["place".to_string()]),
        ]))
    }
}

impl SeedWords {
    pub fn get(&self, c: GoldCategory) -> Option<&[String]> {
        self.0.get(&c).map(Vec::as_slice)
    }

    /// Mean seed-word vector for each requested category.
    pub fn embeddings<S: Scalar>(
        &self,
        categories: &[GoldCategory],
        emb: &EmbeddingMatrix<S>,
    ) -> Result<BTreeMap<GoldCategory, Vec<S>>> {
        let mut out = BTreeMap::new();
        for &c in categories {
            let words = self
                .get(c)
                .filter(|w| !w.is_empty())
                .ok_or_else(|| Error::InvalidArgument(format!("no seed words for {c}")))?;
            let mut v = vec![S::zero(); emb.dim()];
            for w in words {
                axpy(S::one(), emb.lookup(w)?, &mut v);
            }
            let n = S::lit(words.len() as f64);
            v.iter_mut().for_each(|x| *x /= n);
            out.insert(c, v);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatConfig {
    pub seeds: SeedWords,
    /// RBF width; `None` means `1/d`.
    pub gamma: Option<f64>,
    /// Number of frequent nouns kept as candidates.
    pub top_n: usize,
}

impl Default for CatConfig {
    fn default() -> Self {
        Self { seeds: SeedWords::default(), gamma: None, top_n: 200 }
    }
}

/// The `top_n` most frequent noun-tagged vocabulary words, by descending
/// noun-tag count with lexicographic tiebreak.
pub fn candidate_aspects(sentences: &[Sentence], vocab: &Vocabulary, top_n: usize) -> Result<Vec<usize>> {
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for s in sentences {
        for t in &s.tokens {
            if t.pos == Some(Pos::Noun) {
                if let Some(id) = vocab.id(&t.norm) {
                    *counts.entry(id).or_default() += 1;
                }
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::Empty("noun-tagged vocabulary words"));
    }
    let mut ranked: Vec<(usize, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| vocab.word(a.0).cmp(vocab.word(b.0))));
    Ok(ranked.into_iter().take(top_n).map(|(id, _)| id).collect())
}

/// Per-word weights `∝ Σ_c rbf(e_w, e_c, γ)`, falling back to uniform when
/// the kernel mass underflows to zero.
pub fn cat_attention_weights<S: Scalar>(
    ids: &[usize],
    candidates: &[usize],
    emb: &EmbeddingMatrix<S>,
    gamma: S,
) -> Result<Vec<S>> {
    if ids.is_empty() {
        return Err(Error::EmptySentence(None));
    }
    let mut weights = Vec::with_capacity(ids.len());
    for &w in ids {
        let mut mass = S::zero();
        for &c in candidates {
            mass += rbf(emb.vector(w), emb.vector(c), gamma)?;
        }
        weights.push(mass);
    }
    let total: S = weights.iter().copied().sum();
    if total > S::zero() {
        weights.iter_mut().for_each(|x| *x /= total);
    } else {
        let u = S::one() / S::lit(ids.len() as f64);
        weights.iter_mut().for_each(|x| *x = u);
    }
    Ok(weights)
}

/// Attended sentence vector `Σ weight_i · e_{w_i}`.
pub fn cat_attention<S: Scalar>(
    ids: &[usize],
    candidates: &[usize],
    emb: &EmbeddingMatrix<S>,
    gamma: S,
) -> Result<Vec<S>> {
    let weights = cat_attention_weights(ids, candidates, emb, gamma)?;
    let mut out = vec![S::zero(); emb.dim()];
    for (&id, &w) in ids.iter().zip(&weights) {
        axpy(w, emb.vector(id), &mut out);
    }
    Ok(out)
}

/// Placeholder for "none of the three": the vocabulary word closest (by
/// cosine) to the negated mean of the three label embeddings. Returns the
/// word id and its vector.
pub fn make_none_label<S: Scalar>(labels: [&[S]; 3], emb: &EmbeddingMatrix<S>) -> Result<(usize, Vec<S>)> {
    if emb.is_empty() {
        return Err(Error::Empty("vocabulary"));
    }
    let mut target = vec![S::zero(); emb.dim()];
    for l in labels {
        axpy(-S::one() / S::lit(3.0), l, &mut target);
    }
    l2_normalize(&target)?;
    let (id, _) = emb.nearest(&target, 1)?[0];
    Ok((id, emb.vector(id).to_vec()))
}

/// One prior prediction; `label_emb` is unit-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorPrediction<S> {
    pub id: String,
    pub label: PriorLabel,
    pub label_emb: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatModel<S> {
    /// Food, Staff, Ambience, None, in tiebreak order.
    labels: Vec<(PriorLabel, Vec<S>)>,
    none_word: String,
    candidates: Vec<usize>,
    gamma: S,
}

impl<S: Scalar> CatModel<S> {
    /// Builds the prior from POS-tagged sentences and embeddings.
    pub fn build(sentences: &[Sentence], emb: &EmbeddingMatrix<S>, config: &CatConfig) -> Result<Self> {
        let candidates = candidate_aspects(sentences, emb.vocab(), config.top_n)?;
        let label_map = config.seeds.embeddings(&GoldCategory::PRIOR, emb)?;
        let gamma = S::lit(config.gamma.unwrap_or(1.0 / emb.dim() as f64));
        let three = GoldCategory::PRIOR.map(|c| label_map[&c].as_slice());
        let (none_id, none_vec) = make_none_label(three, emb)?;
        let mut labels: Vec<(PriorLabel, Vec<S>)> =
            GoldCategory::PRIOR.iter().map(|&c| (PriorLabel::Category(c), label_map[&c].clone())).collect();
        labels.push((PriorLabel::None, none_vec));
        Self::from_parts(labels, emb.vocab().word(none_id).to_string(), candidates, gamma)
    }

    pub fn from_parts(
        labels: Vec<(PriorLabel, Vec<S>)>,
        none_word: String,
        candidates: Vec<usize>,
        gamma: S,
    ) -> Result<Self> {
        if !(gamma > S::zero()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        for (label, v) in &labels {
            if l2_normalize(v).is_err() {
                return Err(Error::InvalidArgument(format!("label embedding of {label} is zero")));
            }
        }
        Ok(Self { labels, none_word, candidates, gamma })
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    /// The vocabulary word standing in for the "none" label.
    pub fn none_word(&self) -> &str {
        &self.none_word
    }

    pub fn label_embedding(&self, label: PriorLabel) -> Option<&[S]> {
        self.labels.iter().find(|(l, _)| *l == label).map(|(_, v)| v.as_slice())
    }

    /// Labels the sentence by the highest cosine between its attended vector
    /// and each label embedding. Empty sentences get the none label.
    pub fn assign_label(
        &self,
        id: &str,
        ids: &[usize],
        emb: &EmbeddingMatrix<S>,
    ) -> Result<PriorPrediction<S>> {
        let none = || -> Result<PriorPrediction<S>> {
            let v = self
                .label_embedding(PriorLabel::None)
                .ok_or_else(|| Error::InvalidArgument("model has no none label".into()))?;
            Ok(PriorPrediction { id: id.to_string(), label: PriorLabel::None, label_emb: l2_normalize(v)? })
        };
        if ids.is_empty() {
            return none();
        }
        let attended = cat_attention(ids, &self.candidates, emb, self.gamma)?;
        if l2_normalize(&attended).is_err() {
            return none();
        }
        let mut best: Option<(usize, S)> = None;
        for (i, (_, v)) in self.labels.iter().enumerate() {
            let c = cosine(&attended, v)?;
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        let (i, _) = best.ok_or(Error::Empty("label set"))?;
        let (label, v) = &self.labels[i];
        Ok(PriorPrediction { id: id.to_string(), label: *label, label_emb: l2_normalize(v)? })
    }
}

#[derive(Serialize, Deserialize)]
struct PriorRecord {
    id: String,
    label: String,
}

/// `{"id", "label"}` per line.
pub fn priors_to_jsonl<'a, I>(preds: I) -> String
where
    I: IntoIterator<Item = (&'a str, PriorLabel)>,
{
    let mut out = String::new();
    for (id, label) in preds {
        let rec = PriorRecord { id: id.to_string(), label: label.to_string() };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_priors_jsonl(text: &str) -> Result<Vec<(String, PriorLabel)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse { line: i + 1, message };
        let rec: PriorRecord = serde_json::from_str(line).map_err(|e| perr(e.to_string()))?;
        let label = rec.label.parse().map_err(|e: Error| perr(e.to_string()))?;
        out.push((rec.id, label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use crate::numerics::{dot, l2_norm, Matrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn emb(words: &[&str], rows: &[Vec<f64>]) -> EmbeddingMatrix<f64> {
        EmbeddingMatrix::new(
            Vocabulary::from_words(words.iter().map(|w| w.to_string())).unwrap(),
            Matrix::from_rows(rows).unwrap(),
        )
        .unwrap()
    }

    fn tagged(id: &str, words: &[(&str, Pos)]) -> Sentence {
        Sentence {
            id: id.into(),
            tokens: words.iter().map(|&(w, p)| Token { pos: Some(p), ..Token::new(w) }).collect(),
            token_ids: Vec::new(),
            annotations: None,
        }
    }

    #[test]
    fn candidates_by_noun_frequency() {
        let vocab = Vocabulary::from_words(["food", "pasta", "menu", "good"].map(String::from)).unwrap();
        let s = vec![
            tagged("1", &[("food", Pos::Noun), ("good", Pos::Adj), ("menu", Pos::Noun)]),
            tagged("2", &[("food", Pos::Noun), ("pasta", Pos::Noun), ("good", Pos::Adj)]),
            tagged("3", &[("good", Pos::Adj), ("good", Pos::Adj)]),
        ];
        let c = candidate_aspects(&s, &vocab, 10).unwrap();
        assert_eq!(c[0], vocab.id("food").unwrap());
        assert!(!c.contains(&vocab.id("good").unwrap()));
        assert_eq!(candidate_aspects(&s, &vocab, 1).unwrap(), vec![vocab.id("food").unwrap()]);
        // menu and pasta tie at one; lexicographically smaller survives
        assert_eq!(candidate_aspects(&s, &vocab, 2).unwrap()[1], vocab.id("menu").unwrap());
        let no_nouns = vec![tagged("1", &[("good", Pos::Adj)])];
        assert!(candidate_aspects(&no_nouns, &vocab, 5).is_err());
    }

    #[test]
    fn attention_examples() {
        let e =
            emb(&["a", "b", "c", "cand"], &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![5.0, 5.0], vec![0.0, 1.0]]);
        assert_eq!(cat_attention(&[2], &[3], &e, 0.5).unwrap(), vec![5.0, 5.0]);
        // a and b are equidistant from the candidate
        let w = cat_attention_weights(&[0, 1], &[3], &e, 0.5).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-15);
        // the candidate itself vs a far word
        let w = cat_attention_weights(&[3, 2], &[3], &e, 0.5).unwrap();
        let near = 1.0;
        let far = (-0.5f64 * (25.0 + 16.0)).exp();
        assert_abs_diff_eq!(w[0], near / (near + far), epsilon = 1e-15);
        assert!(w[0] > w[1]);
        assert!(cat_attention(&[], &[3], &e, 0.5).is_err());
    }

    #[test]
    fn zero_mass_falls_back_to_uniform() {
        let e = emb(&["a", "b", "far"], &[vec![0.0, 0.0], vec![1.0, 0.0], vec![1e3, 1e3]]);
        let w = cat_attention_weights(&[0, 1], &[2], &e, 10.0).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn none_label_toy() {
        let words = ["w0", "w1", "w2", "w3"];
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.2], vec![0.5, -0.5]];
        let e = emb(&words, &rows);
        let (id, v) = make_none_label([&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]], &e).unwrap();
        // brute force over the toy vocabulary against v = [-2/3, -2/3]
        let target = [-2.0 / 3.0, -2.0 / 3.0];
        let best = (0..4)
            .max_by(|&a, &b| {
                let ca = cosine(&target, &rows[a]).unwrap();
                let cb = cosine(&target, &rows[b]).unwrap();
                ca.partial_cmp(&cb).unwrap()
            })
            .unwrap();
        assert_eq!(id, best);
        assert_eq!(id, 2);
        assert_eq!(v, rows[2]);
        let zero = make_none_label([&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 0.0]], &e);
        assert!(matches!(zero, Err(Error::ZeroNorm)));
    }

    fn toy_model() -> (CatModel<f64>, EmbeddingMatrix<f64>) {
        let e = emb(
            &["food", "staff", "ambience", "baby", "pizza", "odd"],
            &[
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![-1.0, -1.0, -1.0, 0.2],
                vec![0.9, 0.1, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
        );
        let labels = vec![
            (PriorLabel::Category(GoldCategory::Food), e.lookup("food").unwrap().to_vec()),
            (PriorLabel::Category(GoldCategory::Staff), e.lookup("staff").unwrap().to_vec()),
            (PriorLabel::Category(GoldCategory::Ambience), e.lookup("ambience").unwrap().to_vec()),
            (PriorLabel::None, e.lookup("baby").unwrap().to_vec()),
        ];
        (CatModel::from_parts(labels, "baby".into(), vec![0, 1, 2], 0.25).unwrap(), e)
    }

    #[test]
    fn assign_label_examples() {
        let (m, e) = toy_model();
        let p = m.assign_label("s", &[0], &e).unwrap();
        assert_eq!(p.label, PriorLabel::Category(GoldCategory::Food));
        assert_abs_diff_eq!(l2_norm(&p.label_emb), 1.0, epsilon = 1e-12);
        assert_eq!(m.assign_label("s", &[4], &e).unwrap().label, PriorLabel::Category(GoldCategory::Food));
        assert_eq!(m.assign_label("s", &[], &e).unwrap().label, PriorLabel::None);
        // [-1,-1,-1,0]: orthogonal-or-opposed to the three labels, aligned with the placeholder
        let e2 = emb(
            &["food", "staff", "ambience", "baby", "pizza", "anti"],
            &[
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![-1.0, -1.0, -1.0, 0.2],
                vec![0.9, 0.1, 0.0, 0.0],
                vec![-1.0, -1.0, -1.0, 0.0],
            ],
        );
        assert_eq!(m.assign_label("s", &[5], &e2).unwrap().label, PriorLabel::None);
    }

    #[test]
    fn ties_go_to_food() {
        let (m, _) = toy_model();
        let tie = emb(
            &["food", "staff", "ambience", "baby", "pizza", "mid"],
            &[
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![-1.0, -1.0, -1.0, 0.2],
                vec![0.9, 0.1, 0.0, 0.0],
                vec![1.0, 1.0, 1.0, 0.0],
            ],
        );
        assert_eq!(m.assign_label("s", &[5], &tie).unwrap().label, PriorLabel::Category(GoldCategory::Food));
    }

    #[test]
    fn build_from_corpus() {
        let e = emb(
            &["food", "staff", "ambience", "baby", "pizza", "waiter"],
            &[
                vec![1.0, 0.0, 0.0, 0.1],
                vec![0.0, 1.0, 0.0, 0.1],
                vec![0.0, 0.0, 1.0, 0.1],
                vec![-1.0, -1.0, -1.0, 0.0],
                vec![0.9, 0.1, 0.0, 0.0],
                vec![0.1, 0.9, 0.0, 0.0],
            ],
        );
        let mut s = vec![tagged("1", &[("pizza", Pos::Noun)]), tagged("2", &[("waiter", Pos::Noun)])];
        for x in &mut s {
            x.index(e.vocab());
        }
        let m = CatModel::build(&s, &e, &CatConfig::default()).unwrap();
        assert_eq!(m.none_word(), "baby");
        assert_abs_diff_eq!(m.gamma(), 0.25);
        assert_eq!(
            m.assign_label("1", &s[0].token_ids, &e).unwrap().label,
            PriorLabel::Category(GoldCategory::Food)
        );
        assert_eq!(
            m.assign_label("2", &s[1].token_ids, &e).unwrap().label,
            PriorLabel::Category(GoldCategory::Staff)
        );
    }

    #[test]
    fn priors_round_trip() {
        let preds = [("a", PriorLabel::Category(GoldCategory::Food)), ("b", PriorLabel::None)];
        let text = priors_to_jsonl(preds.iter().map(|&(i, l)| (i, l)));
        assert_eq!(text, "{\"id\":\"a\",\"label\":\"Food\"}\n{\"id\":\"b\",\"label\":\"None\"}\n");
        let back = parse_priors_jsonl(&text).unwrap();
        assert_eq!(back[0], ("a".to_string(), preds[0].1));
        assert!(parse_priors_jsonl("{\"id\":\"x\",\"label\":\"Price\"}").is_err());
    }

    proptest! {
        #[test]
        fn weights_are_probabilities(
            rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 4..8),
            gamma in 0.01f64..10.0,
        ) {
            let words: Vec<String> = (0..rows.len()).map(|i| format!("w{i}")).collect();
            let e = EmbeddingMatrix::new(
                Vocabulary::from_words(words).unwrap(),
                Matrix::from_rows(&rows).unwrap(),
            ).unwrap();
            let ids: Vec<usize> = (0..rows.len()).collect();
            let w = cat_attention_weights(&ids, &[0, 1], &e, gamma).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            // a single word's output does not depend on gamma
            prop_assert_eq!(cat_attention(&[2], &[0], &e, gamma).unwrap(), rows[2].clone());
        }

        #[test]
        fn none_label_opposes_mean(
            labels in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 3),
            others in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 0..5),
        ) {
            let mean: Vec<f64> = (0..3).map(|j| labels.iter().map(|l| l[j]).sum::<f64>() / 3.0).collect();
            prop_assume!(l2_norm(&mean) > 1e-3);
            let mut rows = others.clone();
            rows.retain(|r| l2_norm(r) > 1e-9);
            rows.push(mean.iter().map(|x| -x).collect());
            let words: Vec<String> = (0..rows.len()).map(|i| format!("w{i}")).collect();
            let e = EmbeddingMatrix::new(
                Vocabulary::from_words(words).unwrap(),
                Matrix::from_rows(&rows).unwrap(),
            ).unwrap();
            let (_, v) = make_none_label([&labels[0], &labels[1], &labels[2]], &e).unwrap();
            prop_assert!(dot(&v, &mean) <= 1e-12);
        }
    }
}
