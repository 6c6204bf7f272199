//! Mapping inferred aspects onto gold categories and scoring the result.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::abae::{infer, AbaeParams};
use crate::cat::SeedWords;
use crate::corpus::{GoldCategory, Sentence};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numerics::{cosine, Matrix, Scalar};

/// Target category of each of the `k` inferred aspects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectMapping {
    targets: Vec<GoldCategory>,
}

impl AspectMapping {
    pub fn new(targets: Vec<GoldCategory>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Empty("aspect mapping"));
        }
        Ok(Self { targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn get(&self, aspect: usize) -> Option<GoldCategory> {
        self.targets.get(aspect).copied()
    }

    pub fn targets(&self) -> &[GoldCategory] {
        &self.targets
    }

    /// Parses `aspect_id<TAB>Category` lines; every id in `0..k` must appear
    /// exactly once.
    pub fn parse(text: &str, k: usize) -> Result<Self> {
        let mut targets = vec![None; k];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse { line: i + 1, message };
            let (id, cat) =
                line.split_once('\t').ok_or_else(|| perr("expected `aspect_id<TAB>Category`".into()))?;
            let id: usize = id.trim().parse().map_err(|e| perr(format!("bad aspect id: {e}")))?;
            let cat: GoldCategory = cat.parse().map_err(|e: Error| perr(e.to_string()))?;
            let slot = targets.get_mut(id).ok_or_else(|| perr(format!("aspect id {id} outside 0..{k}")))?;
            if slot.replace(cat).is_some() {
                return Err(perr(format!("aspect id {id} mapped twice")));
            }
        }
        let targets = targets
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::InvalidArgument(format!("aspect {i} has no mapping"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(targets)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.targets.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{c}");
        }
        out
    }

    /// Maps each aspect row to the category whose seed-word embedding is
    /// nearest by cosine; ties go to the earlier entry of `categories`.
    pub fn nearest_seed<S: Scalar>(
        aspects: &Matrix<S>,
        emb: &EmbeddingMatrix<S>,
        seeds: &SeedWords,
        categories: &[GoldCategory],
    ) -> Result<Self> {
        let labels = seeds.embeddings(categories, emb)?;
        let mut targets = Vec::with_capacity(aspects.rows());
        for row in aspects.iter_rows() {
            let mut best: Option<(GoldCategory, S)> = None;
            for &c in categories {
                let sim = cosine(row, &labels[&c])?;
                if best.is_none_or(|(_, b)| sim > b) {
                    best = Some((c, sim));
                }
            }
            targets.push(best.ok_or(Error::Empty("category list"))?.0);
        }
        Self::new(targets)
    }
}

/// Category for each predicted aspect id.
pub fn apply_mapping(aspect_preds: &[usize], mapping: &AspectMapping) -> Result<Vec<GoldCategory>> {
    aspect_preds
        .iter()
        .map(|&a| {
            mapping.get(a).ok_or_else(|| {
                Error::InvalidArgument(format!("aspect {a} outside mapping of size {}", mapping.len()))
            })
        })
        .collect()
}

/// Aspect purity and mapped scores of a model on gold-labeled sentences.
/// Sentences without tokens or without a single gold label are skipped.
pub fn evaluate_abae<S: Scalar>(
    params: &AbaeParams<S>,
    emb: &EmbeddingMatrix<S>,
    sentences: &[Sentence],
    mapping: &AspectMapping,
    labels: &[GoldCategory],
) -> Result<(f64, EvalReport)> {
    let mut aspects = Vec::new();
    let mut golds = Vec::new();
    for s in sentences {
        if let (Some(g), false) = (s.gold(), s.token_ids.is_empty()) {
            aspects.push(infer(&s.token_ids, params, emb)?.0);
            golds.push(g);
        }
    }
    let p = purity(&aspects, &golds)?;
    let report = score_with_labels(&apply_mapping(&aspects, mapping)?, &golds, labels)?;
    Ok((p, report))
}

/// Fraction of items whose cluster's majority label matches their own.
pub fn purity<L: Ord + Copy>(clusters: &[usize], labels: &[L]) -> Result<f64> {
    check_lengths(clusters.len(), labels.len())?;
    let mut counts: BTreeMap<usize, BTreeMap<L, usize>> = BTreeMap::new();
    for (&c, &l) in clusters.iter().zip(labels) {
        *counts.entry(c).or_default().entry(l).or_default() += 1;
    }
    let hits: usize = counts.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / clusters.len() as f64)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{a} predictions for {b} gold labels")));
    }
    if a == 0 {
        return Err(Error::Empty("evaluation set"));
    }
    Ok(())
}

/// Precision, recall, and F1 in percent, kept at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: GoldCategory,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub categories: Vec<CategoryScore>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub support: usize,
}

/// One-vs-rest scores over every category present in either stream.
pub fn score(preds: &[GoldCategory], golds: &[GoldCategory]) -> Result<EvalReport> {
    let present: BTreeSet<GoldCategory> = preds.iter().chain(golds).copied().collect();
    let labels: Vec<GoldCategory> = present.into_iter().collect();
    score_with_labels(preds, golds, &labels)
}

/// Scores over an explicit category list. Listed categories absent from
/// both streams score 0 and still count towards the macro average.
pub fn score_with_labels(
    preds: &[GoldCategory],
    golds: &[GoldCategory],
    labels: &[GoldCategory],
) -> Result<EvalReport> {
    check_lengths(preds.len(), golds.len())?;
    let mut labels = labels.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        return Err(Error::Empty("category list"));
    }
    for c in preds.iter().chain(golds) {
        if !labels.contains(c) {
            return Err(Error::InvalidArgument(format!("{c} is not among the scored categories")));
        }
    }
    let mut rows = Vec::with_capacity(labels.len());
    for &c in &labels {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (&p, &g) in preds.iter().zip(golds) {
            match (p == c, g == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        rows.push(CategoryScore {
            category: c,
            precision: 100.0 * p,
            recall: 100.0 * r,
            f1: 100.0 * f1,
            support: tp + fn_,
        });
    }
    Ok(EvalReport::from_rows(rows))
}

impl EvalReport {
    /// Builds the averages from per-category rows.
    pub fn from_rows(categories: Vec<CategoryScore>) -> Self {
        let support: usize = categories.iter().map(|r| r.support).sum();
        let macro_f1 = if categories.is_empty() {
            0.0
        } else {
            categories.iter().map(|r| r.f1).sum::<f64>() / categories.len() as f64
        };
        let weighted_f1 = if support == 0 {
            0.0
        } else {
            categories.iter().map(|r| r.f1 * r.support as f64).sum::<f64>() / support as f64
        };
        Self { categories, macro_f1, weighted_f1, support }
    }

    pub fn get(&self, category: GoldCategory) -> Option<&CategoryScore> {
        self.categories.iter().find(|r| r.category == category)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Aligned table with two-decimal percentages.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18}{:>10}{:>10}{:>10}{:>10}",
            "Category", "Precision", "Recall", "F1", "Support"
        );
        for r in &self.categories {
            let _ = writeln!(
                out,
                "{:<18}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                r.category.name(),
                r.precision,
                r.recall,
                r.f1,
                r.support
            );
        }
        let _ = writeln!(
            out,
            "{:<18}{:>10}{:>10}{:>10.2}{:>10}",
            "Macro Average", "", "", self.macro_f1, self.support
        );
        let _ = writeln!(
            out,
            "{:<18}{:>10}{:>10}{:>10.2}{:>10}",
            "Weighted Average", "", "", self.weighted_f1, self.support
        );
        out
    }
}

/// Per-metric differences `b − a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    pub categories: Vec<CategoryDelta>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDelta {
    pub category: GoldCategory,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<ReportDelta> {
    let cats = |r: &EvalReport| r.categories.iter().map(|c| c.category).collect::<Vec<_>>();
    if cats(a) != cats(b) {
        return Err(Error::InvalidArgument(format!(
            "reports cover different categories: {:?} vs {:?}",
            cats(a),
            cats(b)
        )));
    }
    let categories = a
        .categories
        .iter()
        .zip(&b.categories)
        .map(|(x, y)| CategoryDelta {
            category: x.category,
            precision: y.precision - x.precision,
            recall: y.recall - x.recall,
            f1: y.f1 - x.f1,
        })
        .collect();
    Ok(ReportDelta {
        categories,
        macro_f1: b.macro_f1 - a.macro_f1,
        weighted_f1: b.weighted_f1 - a.weighted_f1,
    })
}
