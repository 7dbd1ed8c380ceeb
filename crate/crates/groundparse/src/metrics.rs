//! Bracketing metrics: unlabeled span F1, per-category recall, cross-model
//! agreement, and a plain Pearson correlation.
//!
//! Single-token spans and the whole-sentence span are trivially right for
//! any binary bracketing, so they are excluded by default everywhere; pass
//! `include_trivial` to count them anyway.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LabeledTree, Span, SpanTree};

/// Precision, recall, F1, and the raw counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Result {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub overlap: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl F1Result {
    fn from_counts(overlap: usize, predicted: usize, gold: usize) -> F1Result {
        let precision = if predicted == 0 {
            1.0
        } else {
            overlap as f64 / predicted as f64
        };
        let recall = if gold == 0 {
            1.0
        } else {
            overlap as f64 / gold as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        F1Result {
            precision,
            recall,
            f1,
            overlap,
            predicted,
            gold,
        }
    }
}

/// F1 between two span sets. Empty against empty scores 1.0: there was
/// nothing to get wrong.
pub fn f1_spans(predicted: &BTreeSet<Span>, gold: &BTreeSet<Span>) -> F1Result {
    let overlap = predicted.intersection(gold).count();
    F1Result::from_counts(overlap, predicted.len(), gold.len())
}

/// F1 of a predicted tree against a gold tree over the same tokens.
pub fn f1_trees(predicted: &SpanTree, gold: &LabeledTree, include_trivial: bool) -> Result<F1Result> {
    if predicted.n() != gold.n {
        return Err(Error::LengthMismatch {
            what: "tree token count",
            expected: gold.n,
            got: predicted.n(),
        });
    }
    Ok(f1_spans(
        &predicted.spans_filtered(include_trivial),
        &gold.span_set(include_trivial),
    ))
}

/// How per-sentence results are pooled into a corpus number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum F1Average {
    /// Sum counts over sentences, then compute one P/R/F1.
    #[default]
    Micro,
    /// Average per-sentence precision, recall, and F1.
    Macro,
}

/// Corpus-level F1 of predictions against gold trees.
pub fn corpus_f1(
    predicted: &[SpanTree],
    gold: &[LabeledTree],
    include_trivial: bool,
    average: F1Average,
) -> Result<F1Result> {
    if predicted.len() != gold.len() {
        return Err(Error::LengthMismatch {
            what: "trees",
            expected: gold.len(),
            got: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let per: Vec<F1Result> = predicted
        .iter()
        .zip(gold)
        .map(|(p, g)| f1_trees(p, g, include_trivial))
        .collect::<Result<_>>()?;
    Ok(pool(&per, average))
}

fn pool(per: &[F1Result], average: F1Average) -> F1Result {
    match average {
        F1Average::Micro => {
            let overlap = per.iter().map(|r| r.overlap).sum();
            let predicted = per.iter().map(|r| r.predicted).sum();
            let gold = per.iter().map(|r| r.gold).sum();
            F1Result::from_counts(overlap, predicted, gold)
        }
        F1Average::Macro => {
            let k = per.len() as f64;
            F1Result {
                precision: per.iter().map(|r| r.precision).sum::<f64>() / k,
                recall: per.iter().map(|r| r.recall).sum::<f64>() / k,
                f1: per.iter().map(|r| r.f1).sum::<f64>() / k,
                overlap: per.iter().map(|r| r.overlap).sum(),
                predicted: per.iter().map(|r| r.predicted).sum(),
                gold: per.iter().map(|r| r.gold).sum(),
            }
        }
    }
}

/// Recall of gold constituents, split by their category label.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryRecall {
    /// label -> (recovered, total gold occurrences).
    pub counts: BTreeMap<String, (usize, usize)>,
}

impl CategoryRecall {
    pub fn recall(&self, label: &str) -> Option<f64> {
        self.counts
            .get(label)
            .map(|&(hit, total)| hit as f64 / total as f64)
    }
}

/// Count, per gold category, how many of its constituents each predicted
/// tree recovers. Trivial gold spans are skipped unless requested, same as
/// in F1.
pub fn category_recall(
    predicted: &[SpanTree],
    gold: &[LabeledTree],
    include_trivial: bool,
) -> Result<CategoryRecall> {
    if predicted.len() != gold.len() {
        return Err(Error::LengthMismatch {
            what: "trees",
            expected: gold.len(),
            got: predicted.len(),
        });
    }
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (p, g) in predicted.iter().zip(gold) {
        if p.n() != g.n {
            return Err(Error::LengthMismatch {
                what: "tree token count",
                expected: g.n,
                got: p.n(),
            });
        }
        let pred_spans = p.spans_filtered(include_trivial);
        for c in &g.constituents {
            let trivial = c.span.is_single() || (c.span.start == 1 && c.span.end == g.n);
            if trivial && !include_trivial {
                continue;
            }
            let entry = counts.entry(c.label.clone()).or_insert((0, 0));
            entry.1 += 1;
            if pred_spans.contains(&c.span) {
                entry.0 += 1;
            }
        }
    }
    Ok(CategoryRecall { counts })
}

/// Pairwise agreement between parse sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub mean: f64,
    /// `(index in first group, index in second group, micro F1)`.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// Micro F1 between two parses of the same captions, non-trivial spans only.
pub fn parse_set_f1(a: &[SpanTree], b: &[SpanTree]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "parse lists",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (mut overlap, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        if x.n() != y.n() {
            return Err(Error::LengthMismatch {
                what: "tree token count",
                expected: y.n(),
                got: x.n(),
            });
        }
        let sa = x.spans_filtered(false);
        let sb = y.spans_filtered(false);
        overlap += sa.intersection(&sb).count();
        na += sa.len();
        nb += sb.len();
    }
    Ok(F1Result::from_counts(overlap, na, nb).f1)
}

/// Mean agreement across all pairs drawn from two groups of parse sets
/// (for example, the same five seeds under two model variants).
pub fn self_f1_cross(
    a: &[Vec<SpanTree>],
    b: &[Vec<SpanTree>],
) -> Result<AgreementResult> {
    if a.is_empty() {
        return Err(Error::ModelSetTooSmall { got: 0, need: 1 });
    }
    if b.is_empty() {
        return Err(Error::ModelSetTooSmall { got: 0, need: 1 });
    }
    let mut pairs = Vec::with_capacity(a.len() * b.len());
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            pairs.push((i, j, parse_set_f1(pa, pb)?));
        }
    }
    let mean = pairs.iter().map(|&(_, _, f)| f).sum::<f64>() / pairs.len() as f64;
    Ok(AgreementResult { mean, pairs })
}

/// Mean agreement across unordered distinct pairs within one group.
pub fn self_f1_within(sets: &[Vec<SpanTree>]) -> Result<AgreementResult> {
    if sets.len() < 2 {
        return Err(Error::ModelSetTooSmall {
            got: sets.len(),
            need: 2,
        });
    }
    let mut pairs = Vec::new();
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            pairs.push((i, j, parse_set_f1(&sets[i], &sets[j])?));
        }
    }
    let mean = pairs.iter().map(|&(_, _, f)| f).sum::<f64>() / pairs.len() as f64;
    Ok(AgreementResult { mean, pairs })
}

/// Pearson correlation coefficient. Needs at least two points and nonzero
/// variance on both sides.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "correlation inputs",
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::ConstantInput);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok(cov / (vx * vy).sqrt())
}
