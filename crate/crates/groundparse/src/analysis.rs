//! Post-training probes over learned token values: orientation and
//! ranking of scalar embeddings, correlation against concreteness norms,
//! the noun-replacement experiment, and tabular embedding exports.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::{corpus_f1, pearson, F1Average};
use crate::model::EmbeddingModel;
use crate::par::{try_map_ordered, Parallelism};
use crate::parser::parse_corpus;
use crate::types::{Caption, Corpus, Token};

/// Universal tags treated as nouns.
pub const NOUN_TAGS: [&str; 2] = ["NOUN", "PROPN"];

/// Whether a universal POS tag counts as a noun.
pub fn is_noun_tag(tag: &str) -> bool {
    NOUN_TAGS.contains(&tag)
}

/// Token-to-concreteness lookup. Built from generated lexicons or from a
/// norms file (`token<TAB>score`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConcretenessTable {
    map: HashMap<String, f64>,
}

impl ConcretenessTable {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Self {
        ConcretenessTable {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.map.get(token).copied()
    }

    /// Lookup with unknown tokens scored as zero, the convention rewards use.
    pub fn value_or_zero(&self, token: &str) -> f64 {
        self.get(token).unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Reject empty tables and non-finite scores (user-supplied norms).
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.map.is_empty() {
            problems.push("concreteness table is empty".to_string());
        }
        let mut bad: Vec<&String> = self
            .map
            .iter()
            .filter(|(_, v)| !v.is_finite())
            .map(|(k, _)| k)
            .collect();
        bad.sort();
        for token in bad {
            problems.push(format!("non-finite score for token '{token}'"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid { problems })
        }
    }
}

/// Scalar value of every vocabulary token, aligned with `model.vocab`.
/// Requires a model whose decisions run at dimension one.
pub fn token_values(model: &EmbeddingModel) -> Result<Vec<f64>> {
    let dim = model.config.effective_dim();
    if dim != 1 {
        return Err(Error::NotScalarModel { dim });
    }
    Ok((0..model.vocab.len())
        .map(|row| model.reduced_embedding(row)[0])
        .collect())
}

/// Reduced embedding of every vocabulary token, one row per token, for
/// models running at dimension one or two.
pub fn token_values_low(model: &EmbeddingModel) -> Result<Vec<Vec<f64>>> {
    let dim = model.config.effective_dim();
    if dim > 2 {
        return Err(Error::NotLowDim { dim });
    }
    Ok((0..model.vocab.len())
        .map(|row| model.reduced_embedding(row))
        .collect())
}

/// Fractional ranks of `values`, ascending and 1-based; tied values share
/// the mean of the positions they occupy.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Sign fixing the arbitrary direction of a learned scalar axis. Prefers
/// the sign giving a non-negative Pearson correlation with the norms;
/// without usable norms, the sign making the mean value of noun-tagged
/// tokens non-negative; failing both, +1.
pub fn orientation(
    tokens: &[String],
    values: &[f64],
    norms: Option<&ConcretenessTable>,
    pos: Option<&BTreeMap<String, String>>,
) -> f64 {
    if let Some(table) = norms {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (tok, &v) in tokens.iter().zip(values) {
            if let Some(score) = table.get(tok) {
                xs.push(v);
                ys.push(score);
            }
        }
        if xs.len() >= 2 {
            if let Ok(r) = pearson(&xs, &ys) {
                if r != 0.0 {
                    return r.signum();
                }
            }
        }
    }
    if let Some(tags) = pos {
        let nouns: Vec<f64> = tokens
            .iter()
            .zip(values)
            .filter(|(tok, _)| {
                tags.get(tok.as_str()).is_some_and(|t| is_noun_tag(t))
            })
            .map(|(_, &v)| v)
            .collect();
        if !nouns.is_empty() {
            let mean = nouns.iter().sum::<f64>() / nouns.len() as f64;
            if mean < 0.0 {
                return -1.0;
            }
        }
    }
    1.0
}

/// Token ranking along the oriented scalar axis, averaged across models.
/// Rank 1 is the least concrete end, `|V|` the most concrete.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcretenessRanking {
    /// Shared vocabulary, in model order.
    pub tokens: Vec<String>,
    /// Per-model sign applied to raw values before ranking.
    pub orientations: Vec<f64>,
    /// Per-model fractional ranks of the oriented values.
    pub per_model_ranks: Vec<Vec<f64>>,
    /// Mean rank per token across models.
    pub mean_ranks: Vec<f64>,
}

impl ConcretenessRanking {
    /// Token with the highest mean rank; ties break lexicographically so
    /// the choice is reproducible.
    pub fn most_concrete(&self) -> &str {
        self.argmax(|_| true).expect("ranking is never empty")
    }

    /// Highest-ranked token whose majority tag is a noun tag.
    pub fn most_concrete_noun(&self, pos: &BTreeMap<String, String>) -> Result<&str> {
        self.argmax(|tok| pos.get(tok).is_some_and(|t| is_noun_tag(t)))
            .ok_or(Error::NoNouns)
    }

    fn argmax(&self, keep: impl Fn(&str) -> bool) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (tok, &rank) in self.tokens.iter().zip(&self.mean_ranks) {
            if !keep(tok) {
                continue;
            }
            let better = match best {
                None => true,
                Some((btok, brank)) => {
                    rank > brank || (rank == brank && tok.as_str() < btok)
                }
            };
            if better {
                best = Some((tok, rank));
            }
        }
        best.map(|(tok, _)| tok)
    }
}

/// Rank every vocabulary token by its oriented scalar value in each model
/// and average the ranks. All models must run at dimension one and share
/// a vocabulary.
pub fn rank_concreteness(
    models: &[&EmbeddingModel],
    norms: Option<&ConcretenessTable>,
    pos: Option<&BTreeMap<String, String>>,
) -> Result<ConcretenessRanking> {
    if models.is_empty() {
        return Err(Error::ModelSetTooSmall { got: 0, need: 1 });
    }
    let tokens = models[0].vocab.clone();
    for m in &models[1..] {
        if m.vocab != tokens {
            return Err(Error::ConfigInvalid {
                problems: vec![
                    "models must share a vocabulary to be ranked together".to_string(),
                ],
            });
        }
    }
    let mut orientations = Vec::with_capacity(models.len());
    let mut per_model_ranks = Vec::with_capacity(models.len());
    for m in models {
        let values = token_values(m)?;
        let sign = orientation(&tokens, &values, norms, pos);
        let oriented: Vec<f64> = values.iter().map(|v| sign * v).collect();
        per_model_ranks.push(fractional_ranks(&oriented));
        orientations.push(sign);
    }
    let mut mean_ranks = vec![0.0; tokens.len()];
    for ranks in &per_model_ranks {
        for (acc, r) in mean_ranks.iter_mut().zip(ranks) {
            *acc += r;
        }
    }
    for acc in mean_ranks.iter_mut() {
        *acc /= models.len() as f64;
    }
    Ok(ConcretenessRanking {
        tokens,
        orientations,
        per_model_ranks,
        mean_ranks,
    })
}

/// Pearson correlation restricted to the tokens both sides know.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub r: f64,
    pub overlap: usize,
}

/// Correlate per-token values (as given, already oriented or not) with
/// the norms over their overlapping tokens.
pub fn correlate_concreteness(
    tokens: &[String],
    values: &[f64],
    norms: &ConcretenessTable,
) -> Result<CorrelationReport> {
    if tokens.len() != values.len() {
        return Err(Error::LengthMismatch {
            what: "token values",
            expected: tokens.len(),
            got: values.len(),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (tok, &v) in tokens.iter().zip(values) {
        if let Some(score) = norms.get(tok) {
            xs.push(v);
            ys.push(score);
        }
    }
    let overlap = xs.len();
    if overlap < 2 {
        return Err(Error::InsufficientOverlap { overlap });
    }
    let r = pearson(&xs, &ys)?;
    Ok(CorrelationReport { r, overlap })
}

/// Most frequent tag per surface across the corpus; count ties break to
/// the lexicographically smallest tag. Errors when nothing is tagged.
pub fn majority_pos(corpus: &Corpus) -> Result<BTreeMap<String, String>> {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for cap in &corpus.captions {
        for tok in cap.tokens() {
            if let Some(tag) = &tok.pos {
                *counts
                    .entry(tok.surface.clone())
                    .or_default()
                    .entry(tag.clone())
                    .or_default() += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::MissingPos);
    }
    Ok(counts
        .into_iter()
        .map(|(surface, tags)| {
            let mut best: Option<(&String, usize)> = None;
            for (tag, &c) in &tags {
                if best.is_none_or(|(_, bc)| c > bc) {
                    best = Some((tag, c));
                }
            }
            (surface, best.expect("tag map is non-empty").0.clone())
        })
        .collect())
}

/// Copy of the corpus with every noun-tagged token's surface swapped for
/// `replacement`. Tags, token counts, gold trees, and scenes carry over
/// unchanged, so evaluation still runs against the original structures.
pub fn replace_nouns(corpus: &Corpus, replacement: &str) -> Result<Corpus> {
    let mut captions = Vec::with_capacity(corpus.len());
    for cap in &corpus.captions {
        if !cap.has_pos() {
            return Err(Error::MissingPos);
        }
        let tokens: Vec<Token> = cap
            .tokens()
            .iter()
            .map(|t| {
                let tag = t.pos.as_deref().expect("checked has_pos");
                if is_noun_tag(tag) {
                    Token::with_pos(replacement, tag)
                } else {
                    Ok(t.clone())
                }
            })
            .collect::<Result<_>>()?;
        captions.push(Caption::new(tokens)?);
    }
    let mut out = Corpus::new(captions);
    out.gold = corpus.gold.clone();
    out.scenes = corpus.scenes.clone();
    Ok(out)
}

/// One model's bracketing F1 before and after noun replacement, both
/// against the original gold trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplacementDelta {
    pub before: f64,
    pub after: f64,
}

/// Replacement-experiment results across a model set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementReport {
    /// The token substituted for every noun.
    pub replacement: String,
    pub per_model: Vec<ReplacementDelta>,
    pub mean_before: f64,
    pub mean_after: f64,
}

/// Parse the corpus and its noun-replaced copy with each model, scoring
/// both against the original gold trees. The replacement token is the
/// ranking's most concrete noun. The "before" score is exactly the
/// standard evaluation F1 (micro, trivial spans excluded).
pub fn replacement_experiment(
    models: &[&EmbeddingModel],
    corpus: &Corpus,
    ranking: &ConcretenessRanking,
    par: Parallelism,
) -> Result<ReplacementReport> {
    if models.is_empty() {
        return Err(Error::ModelSetTooSmall { got: 0, need: 1 });
    }
    let gold = corpus.gold.as_ref().ok_or(Error::MissingGold)?;
    let pos = majority_pos(corpus)?;
    let replacement = ranking.most_concrete_noun(&pos)?.to_string();
    let replaced = replace_nouns(corpus, &replacement)?;

    let per_model = try_map_ordered(par, models, |_, model| {
        let before_trees = parse_corpus(model, &corpus.captions, Parallelism::Sequential)?;
        let after_trees = parse_corpus(model, &replaced.captions, Parallelism::Sequential)?;
        let before = corpus_f1(&before_trees, gold, false, F1Average::Micro)?.f1;
        let after = corpus_f1(&after_trees, gold, false, F1Average::Micro)?.f1;
        Ok(ReplacementDelta { before, after })
    })?;
    let k = per_model.len() as f64;
    Ok(ReplacementReport {
        replacement,
        mean_before: per_model.iter().map(|d| d.before).sum::<f64>() / k,
        mean_after: per_model.iter().map(|d| d.after).sum::<f64>() / k,
        per_model,
    })
}

/// Centered projection of 2-d points onto their first principal axis.
fn principal_projection(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r[0]).sum::<f64>() / n;
    let my = rows.iter().map(|r| r[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for r in rows {
        let dx = r[0] - mx;
        let dy = r[1] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Major-axis angle of the covariance [[sxx, sxy], [sxy, syy]].
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (ax, ay) = (theta.cos(), theta.sin());
    rows.iter()
        .map(|r| (r[0] - mx) * ax + (r[1] - my) * ay)
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV export of reduced token embeddings, one row per model and token:
/// `model_id,token,pos,v1[,v2],oriented,mean_rank`. All models must share
/// a vocabulary and a reduced width of 1 or 2. For two-dimensional models
/// the oriented column projects each token onto the model's first
/// principal axis before sign fixing; mean_rank averages each token's
/// oriented-value rank across the exported models. Tokens without a tag
/// are exported as `X`.
pub fn export_embeddings(
    ids: &[String],
    models: &[&EmbeddingModel],
    pos: Option<&BTreeMap<String, String>>,
    norms: Option<&ConcretenessTable>,
) -> Result<String> {
    if models.is_empty() {
        return Err(Error::ModelSetTooSmall { got: 0, need: 1 });
    }
    if ids.len() != models.len() {
        return Err(Error::LengthMismatch {
            what: "model ids",
            expected: models.len(),
            got: ids.len(),
        });
    }
    let dim = models[0].config.effective_dim();
    let tokens = &models[0].vocab;
    let mut problems = Vec::new();
    for (id, m) in ids.iter().zip(models).skip(1) {
        if m.config.effective_dim() != dim {
            problems.push(format!(
                "model {id} runs at d={}, expected d={dim}",
                m.config.effective_dim()
            ));
        }
        if &m.vocab != tokens {
            problems.push(format!("model {id} has a different vocabulary"));
        }
    }
    if !problems.is_empty() {
        return Err(Error::ConfigInvalid { problems });
    }

    let mut values_all = Vec::with_capacity(models.len());
    let mut oriented_all = Vec::with_capacity(models.len());
    let mut ranks_all = Vec::with_capacity(models.len());
    for m in models {
        let rows = token_values_low(m)?;
        let scalar: Vec<f64> = if dim == 1 {
            rows.iter().map(|r| r[0]).collect()
        } else {
            principal_projection(&rows)
        };
        let sign = orientation(tokens, &scalar, norms, pos);
        let oriented: Vec<f64> = scalar.iter().map(|v| sign * v).collect();
        ranks_all.push(fractional_ranks(&oriented));
        oriented_all.push(oriented);
        values_all.push(rows);
    }
    let mut mean_ranks = vec![0.0; tokens.len()];
    for ranks in &ranks_all {
        for (acc, r) in mean_ranks.iter_mut().zip(ranks) {
            *acc += r;
        }
    }
    for acc in mean_ranks.iter_mut() {
        *acc /= models.len() as f64;
    }

    let mut out = String::new();
    let value_cols = if dim == 1 { "v1" } else { "v1,v2" };
    writeln!(out, "model_id,token,pos,{value_cols},oriented,mean_rank").unwrap();
    for (mi, id) in ids.iter().enumerate() {
        for (ti, tok) in tokens.iter().enumerate() {
            let tag = pos
                .and_then(|p| p.get(tok))
                .map(String::as_str)
                .unwrap_or("X");
            let vals = values_all[mi][ti]
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(id),
                csv_field(tok),
                csv_field(tag),
                vals,
                oriented_all[mi][ti],
                mean_ranks[ti]
            )
            .unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, OovPolicy};
    use crate::score::{CombineKind, ScoreKind, ScoreParams};
    use crate::synth::{self, SynthConfig};
    use crate::embed::EmbeddingTable;
    use approx::assert_relative_eq;

    #[test]
    fn lookup_and_zero_default() {
        let t = ConcretenessTable::from_pairs([("dog".to_string(), 0.96)]);
        assert_eq!(t.get("dog"), Some(0.96));
        assert_eq!(t.get("zzz"), None);
        assert_eq!(t.value_or_zero("zzz"), 0.0);
        assert_eq!(t.len(), 1);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn table_validation_rejects_empty_and_non_finite() {
        assert!(ConcretenessTable::default().validate().is_err());
        let t = ConcretenessTable::from_pairs([("dog".to_string(), f64::NAN)]);
        assert!(t.validate().is_err());
    }

    /// Scalar model whose token values are exactly `values`, in the order
    /// of the (pre-sorted) vocabulary.
    fn scalar_model(vocab: &[&str], values: &[f64]) -> EmbeddingModel {
        let config = ModelConfig {
            d_full: 1,
            d_reduced: None,
            score: ScoreKind::Mean,
            combine: CombineKind::Mean,
            oov: OovPolicy::Strict,
            ..ModelConfig::default()
        };
        let embeddings = EmbeddingTable {
            rows: values.len(),
            dim: 1,
            data: values.to_vec(),
        };
        EmbeddingModel::from_parts(
            config,
            vocab.iter().map(|s| s.to_string()).collect(),
            embeddings,
            None,
            ScoreParams::Mean,
        )
        .unwrap()
    }

    fn planar_model(vocab: &[&str], rows: &[[f64; 2]]) -> EmbeddingModel {
        let config = ModelConfig {
            d_full: 2,
            d_reduced: None,
            score: ScoreKind::Mlp,
            score_hidden: 4,
            combine: CombineKind::Mean,
            oov: OovPolicy::Strict,
            ..ModelConfig::default()
        };
        let embeddings = EmbeddingTable {
            rows: rows.len(),
            dim: 2,
            data: rows.iter().flatten().copied().collect(),
        };
        let mut seeded =
            EmbeddingModel::init(config.clone(), vocab.iter().map(|s| s.to_string()), 0)
                .unwrap();
        seeded.embeddings = embeddings;
        EmbeddingModel::from_parts(config, seeded.vocab, seeded.embeddings, None, seeded.score)
            .unwrap()
    }

    #[test]
    fn token_values_requires_scalar_width() {
        let m = planar_model(&["a", "b"], &[[0.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            token_values(&m).unwrap_err(),
            Error::NotScalarModel { dim: 2 }
        ));
        let s = scalar_model(&["a", "b"], &[0.5, -0.5]);
        assert_eq!(token_values(&s).unwrap(), vec![0.5, -0.5]);
    }

    #[test]
    fn fractional_ranks_handle_ties() {
        assert_eq!(fractional_ranks(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(fractional_ranks(&[30.0, 10.0, 20.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(
            fractional_ranks(&[1.0, 2.0, 2.0, 5.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(fractional_ranks(&[7.0, 7.0]), vec![1.5, 1.5]);
    }

    #[test]
    fn orientation_follows_norms_then_nouns() {
        let tokens: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let values = [0.1, 0.5, 0.9];
        let norms = ConcretenessTable::from_pairs([
            ("a".to_string(), 0.2),
            ("c".to_string(), 0.8),
        ]);
        assert_eq!(orientation(&tokens, &values, Some(&norms), None), 1.0);
        let anti = ConcretenessTable::from_pairs([
            ("a".to_string(), 0.8),
            ("c".to_string(), 0.2),
        ]);
        assert_eq!(orientation(&tokens, &values, Some(&anti), None), -1.0);

        // No norms: nouns' mean sign decides.
        let mut pos = BTreeMap::new();
        pos.insert("a".to_string(), "NOUN".to_string());
        let neg_values = [-0.4, 0.5, 0.9];
        assert_eq!(orientation(&tokens, &neg_values, None, Some(&pos)), -1.0);
        assert_eq!(orientation(&tokens, &values, None, Some(&pos)), 1.0);

        // Nothing to go on: identity.
        assert_eq!(orientation(&tokens, &values, None, None), 1.0);
    }

    #[test]
    fn single_model_ranking_orders_by_value() {
        let m = scalar_model(&["a", "b", "c"], &[0.2, 0.9, 0.5]);
        let ranking = rank_concreteness(&[&m], None, None).unwrap();
        assert_eq!(ranking.mean_ranks, vec![1.0, 3.0, 2.0]);
        assert_eq!(ranking.orientations, vec![1.0]);
        assert_eq!(ranking.most_concrete(), "b");
    }

    #[test]
    fn identical_orderings_share_common_ranks() {
        let m1 = scalar_model(&["a", "b", "c"], &[0.2, 0.9, 0.5]);
        let m2 = scalar_model(&["a", "b", "c"], &[0.1, 0.8, 0.3]);
        let ranking = rank_concreteness(&[&m1, &m2], None, None).unwrap();
        assert_eq!(ranking.mean_ranks, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn reversed_orderings_average_to_middle() {
        // Anchor both orientations with a neutral norms overlap, so the
        // reversal survives sign fixing: orientation needs r != 0, and
        // these norms correlate positively with both value sets.
        let m1 = scalar_model(&["a", "b", "c", "d"], &[1.0, 2.0, 3.0, 0.0]);
        let m2 = scalar_model(&["a", "b", "c", "d"], &[3.0, 2.0, 1.0, 0.0]);
        let norms = ConcretenessTable::from_pairs([
            ("a".to_string(), 0.5),
            ("d".to_string(), 0.1),
        ]);
        let ranking = rank_concreteness(&[&m1, &m2], Some(&norms), None).unwrap();
        assert_eq!(ranking.orientations, vec![1.0, 1.0]);
        // a, b, c occupy ranks {2,3,4} in one order and its reverse.
        assert_eq!(ranking.mean_ranks, vec![3.0, 3.0, 3.0, 1.0]);
    }

    #[test]
    fn ranking_is_invariant_under_increasing_transforms() {
        let values = [0.3, -0.2, 0.8, 0.1];
        let transformed: Vec<f64> = values.iter().map(|v| 2.0 * v + 1.0).collect();
        let m1 = scalar_model(&["a", "b", "c", "d"], &values);
        let m2 = scalar_model(&["a", "b", "c", "d"], &transformed);
        let r1 = rank_concreteness(&[&m1], None, None).unwrap();
        let r2 = rank_concreteness(&[&m2], None, None).unwrap();
        assert_eq!(r1.mean_ranks, r2.mean_ranks);
    }

    #[test]
    fn ranking_rejects_mismatched_vocabularies() {
        let m1 = scalar_model(&["a", "b"], &[0.1, 0.2]);
        let m2 = scalar_model(&["a", "c"], &[0.1, 0.2]);
        assert!(matches!(
            rank_concreteness(&[&m1, &m2], None, None).unwrap_err(),
            Error::ConfigInvalid { .. }
        ));
        assert!(matches!(
            rank_concreteness(&[], None, None).unwrap_err(),
            Error::ModelSetTooSmall { .. }
        ));
    }

    #[test]
    fn most_concrete_noun_respects_tags() {
        let m = scalar_model(&["ball", "runs", "sky"], &[0.9, 1.5, 0.1]);
        let ranking = rank_concreteness(&[&m], None, None).unwrap();
        assert_eq!(ranking.most_concrete(), "runs");
        let mut pos = BTreeMap::new();
        pos.insert("ball".to_string(), "NOUN".to_string());
        pos.insert("runs".to_string(), "VERB".to_string());
        pos.insert("sky".to_string(), "NOUN".to_string());
        assert_eq!(ranking.most_concrete_noun(&pos).unwrap(), "ball");
        let verbs_only: BTreeMap<String, String> =
            [("runs".to_string(), "VERB".to_string())].into();
        assert!(matches!(
            ranking.most_concrete_noun(&verbs_only).unwrap_err(),
            Error::NoNouns
        ));
    }

    #[test]
    fn correlation_matches_norms_exactly() {
        let tokens: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let values = [0.2, 0.5, 0.8];
        let norms = ConcretenessTable::from_pairs(
            tokens.iter().cloned().zip(values.iter().copied()),
        );
        let report = correlate_concreteness(&tokens, &values, &norms).unwrap();
        assert_relative_eq!(report.r, 1.0);
        assert_eq!(report.overlap, 3);

        let negated: Vec<f64> = values.iter().map(|v| -v).collect();
        let flipped = correlate_concreteness(&tokens, &negated, &norms).unwrap();
        assert_relative_eq!(flipped.r, -1.0);
    }

    #[test]
    fn correlation_needs_overlap_and_variance() {
        let tokens: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let norms = ConcretenessTable::from_pairs([("a".to_string(), 0.5)]);
        assert!(matches!(
            correlate_concreteness(&tokens, &[0.1, 0.2], &norms).unwrap_err(),
            Error::InsufficientOverlap { overlap: 1 }
        ));
        let both = ConcretenessTable::from_pairs([
            ("a".to_string(), 0.5),
            ("b".to_string(), 0.7),
        ]);
        assert!(matches!(
            correlate_concreteness(&tokens, &[0.3, 0.3], &both).unwrap_err(),
            Error::ConstantInput
        ));
    }

    fn tagged_corpus(lines: &[(&str, &str)]) -> Corpus {
        let captions = lines
            .iter()
            .map(|(words, tags)| {
                let tokens = words
                    .split_whitespace()
                    .zip(tags.split_whitespace())
                    .map(|(w, t)| Token::with_pos(w, t).unwrap())
                    .collect();
                Caption::new(tokens).unwrap()
            })
            .collect();
        Corpus::new(captions)
    }

    #[test]
    fn majority_pos_counts_and_breaks_ties() {
        let corpus = tagged_corpus(&[
            ("duck runs", "NOUN VERB"),
            ("they duck", "PRON VERB"),
            ("a duck", "DET NOUN"),
        ]);
        let pos = majority_pos(&corpus).unwrap();
        assert_eq!(pos["duck"], "NOUN");
        assert_eq!(pos["runs"], "VERB");

        // 1 NOUN vs 1 VERB: lexicographically smaller tag wins.
        let tied = tagged_corpus(&[("duck", "NOUN"), ("duck", "VERB")]);
        assert_eq!(majority_pos(&tied).unwrap()["duck"], "NOUN");

        let untagged = Corpus::new(vec![Caption::from_line("no tags here").unwrap()]);
        assert!(matches!(majority_pos(&untagged).unwrap_err(), Error::MissingPos));
    }

    #[test]
    fn replace_nouns_swaps_only_noun_surfaces() {
        let corpus = tagged_corpus(&[("girl holding a picture", "NOUN VERB DET NOUN")]);
        let replaced = replace_nouns(&corpus, "elephant").unwrap();
        assert_eq!(replaced.captions[0].text(), "elephant holding a elephant");
        let tags: Vec<&str> = replaced.captions[0]
            .tokens()
            .iter()
            .map(|t| t.pos.as_deref().unwrap())
            .collect();
        assert_eq!(tags, vec!["NOUN", "VERB", "DET", "NOUN"]);
    }

    #[test]
    fn replace_nouns_edge_cases() {
        let no_nouns = tagged_corpus(&[("very quickly", "ADV ADV")]);
        let replaced = replace_nouns(&no_nouns, "elephant").unwrap();
        assert_eq!(replaced.captions[0].text(), "very quickly");

        let all_nouns = tagged_corpus(&[("cat dog rex", "NOUN NOUN PROPN")]);
        let swapped = replace_nouns(&all_nouns, "elephant").unwrap();
        assert_eq!(swapped.captions[0].text(), "elephant elephant elephant");

        // Idempotent when the replacement keeps its noun tag.
        let twice = replace_nouns(&swapped, "elephant").unwrap();
        assert_eq!(twice.captions, swapped.captions);

        let untagged = Corpus::new(vec![Caption::from_line("a dog").unwrap()]);
        assert!(matches!(
            replace_nouns(&untagged, "elephant").unwrap_err(),
            Error::MissingPos
        ));
    }

    #[test]
    fn replace_nouns_preserves_gold_and_scenes() {
        let bundle = synth::generate(&SynthConfig {
            size: 10,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let replaced = replace_nouns(&bundle.corpus, "elephant").unwrap();
        assert_eq!(replaced.gold, bundle.corpus.gold);
        assert_eq!(replaced.scenes, bundle.corpus.scenes);
        for (orig, repl) in bundle.corpus.captions.iter().zip(&replaced.captions) {
            assert_eq!(orig.n(), repl.n());
        }
    }

    #[test]
    fn experiment_before_equals_standard_eval() {
        let bundle = synth::generate(&SynthConfig {
            size: 20,
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        let corpus = &bundle.corpus;
        let probe = EmbeddingModel::init(
            ModelConfig {
                d_full: 4,
                ..ModelConfig::default()
            },
            corpus.vocab(),
            11,
        )
        .unwrap();
        let ranker = EmbeddingModel::init(
            ModelConfig {
                d_full: 4,
                d_reduced: Some(1),
                bottleneck_hidden: 4,
                score: ScoreKind::WeightedSum,
                combine: CombineKind::Mean,
                ..ModelConfig::default()
            },
            corpus.vocab(),
            11,
        )
        .unwrap();
        let table = ConcretenessTable::from_pairs(synth::concreteness_table());
        let ranking = rank_concreteness(&[&ranker], Some(&table), None).unwrap();

        let report =
            replacement_experiment(&[&probe], corpus, &ranking, Parallelism::Sequential)
                .unwrap();
        let parsed = parse_corpus(&probe, &corpus.captions, Parallelism::Sequential).unwrap();
        let eval = corpus_f1(&parsed, corpus.gold.as_ref().unwrap(), false, F1Average::Micro)
            .unwrap();
        assert_eq!(report.per_model[0].before, eval.f1);
        assert_eq!(report.mean_before, report.per_model[0].before);
        // Replacement comes from the noun inventory.
        let pos = majority_pos(corpus).unwrap();
        assert!(is_noun_tag(&pos[&report.replacement]));
    }

    #[test]
    fn token_blind_model_is_unmoved_by_replacement() {
        let bundle = synth::generate(&SynthConfig {
            size: 15,
            seed: 4,
            ..SynthConfig::default()
        })
        .unwrap();
        let corpus = &bundle.corpus;
        let mut vocab = corpus.vocab();
        vocab.sort();
        let n = vocab.len();
        let blind = scalar_model(
            &vocab.iter().map(String::as_str).collect::<Vec<_>>(),
            &vec![0.25; n],
        );
        let ranking = rank_concreteness(&[&blind], None, None).unwrap();
        let report =
            replacement_experiment(&[&blind], corpus, &ranking, Parallelism::Sequential)
                .unwrap();
        assert_eq!(report.per_model[0].before, report.per_model[0].after);
    }

    #[test]
    fn experiment_requires_gold() {
        let corpus = tagged_corpus(&[("a dog", "DET NOUN")]);
        let m = scalar_model(&["a", "dog"], &[0.1, 0.9]);
        let ranking = rank_concreteness(&[&m], None, None).unwrap();
        assert!(matches!(
            replacement_experiment(&[&m], &corpus, &ranking, Parallelism::Sequential)
                .unwrap_err(),
            Error::MissingGold
        ));
    }

    #[test]
    fn principal_axis_recovers_dominant_direction() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.1],
            vec![2.0, -0.1],
            vec![3.0, 0.0],
        ];
        let proj = principal_projection(&rows);
        // Projections preserve the x ordering and center to zero mean.
        assert!(proj[0] < proj[1] && proj[1] < proj[2] && proj[2] < proj[3]);
        assert_relative_eq!(proj.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn export_is_stable_and_shaped_by_width() {
        let m1 = scalar_model(&["a", "b", "c"], &[0.2, 0.9, 0.5]);
        let m2 = scalar_model(&["a", "b", "c"], &[0.1, 0.8, 0.3]);
        let csv = export_embeddings(
            &["s0".to_string(), "s1".to_string()],
            &[&m1, &m2],
            None,
            None,
        )
        .unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "model_id,token,pos,v1,oriented,mean_rank");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1], "s0,a,X,0.2,0.2,1");
        assert_eq!(lines[2], "s0,b,X,0.9,0.9,3");

        let p = planar_model(
            &["a", "b", "c"],
            &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        );
        let csv2 =
            export_embeddings(&["p".to_string()], &[&p], None, None).unwrap();
        let lines2: Vec<&str> = csv2.lines().collect();
        assert_eq!(lines2[0], "model_id,token,pos,v1,v2,oriented,mean_rank");
        // x-axis dominates: oriented column is the centered x value.
        assert_eq!(lines2[1], "p,a,X,0,0,-1,1");
        assert_eq!(lines2[2], "p,b,X,1,0,0,2");
        assert_eq!(lines2[3], "p,c,X,2,0,1,3");
    }

    #[test]
    fn export_tags_and_escapes() {
        let m = scalar_model(&["a,b", "c"], &[0.5, 0.2]);
        let mut pos = BTreeMap::new();
        pos.insert("a,b".to_string(), "NOUN".to_string());
        let csv =
            export_embeddings(&["m".to_string()], &[&m], Some(&pos), None).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "m,\"a,b\",NOUN,0.5,0.5,2");
        assert_eq!(lines[2], "m,c,X,0.2,0.2,1");
    }

    #[test]
    fn export_rejects_mixed_models() {
        let s = scalar_model(&["a", "b"], &[0.1, 0.2]);
        let p = planar_model(&["a", "b"], &[[0.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            export_embeddings(
                &["s".to_string(), "p".to_string()],
                &[&s, &p],
                None,
                None
            )
            .unwrap_err(),
            Error::ConfigInvalid { .. }
        ));
        let wide = EmbeddingModel::init(
            ModelConfig {
                d_full: 3,
                ..ModelConfig::default()
            },
            ["a".to_string(), "b".to_string()],
            0,
        )
        .unwrap();
        assert!(matches!(
            export_embeddings(&["w".to_string()], &[&wide], None, None).unwrap_err(),
            Error::NotLowDim { dim: 3 }
        ));
    }
}
