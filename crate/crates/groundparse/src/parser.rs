//! Greedy bottom-up span merging.
//!
//! Parsing starts from one node per token and repeatedly merges the
//! adjacent pair with the highest score until a single node covers the
//! sentence, which takes exactly `n - 1` merges and yields a binary tree.
//! Ties go to the leftmost pair. The stochastic variant samples each merge
//! from a softmax over pair scores instead, for exploration during
//! training, and records enough of the forward computation that the
//! trainer can replay it backwards.
//!
//! Pair scores are cached between merges: only the at most two pairs
//! touching the freshly merged node are rescored.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::model::EmbeddingModel;
use crate::par::{try_map_ordered, Parallelism};
use crate::score::combine_l2sum;
use crate::types::{Caption, Span, SpanTree};

/// Where a trace node's embedding came from.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSource {
    /// A caption token, resolved to this vocabulary row.
    Leaf { token_row: usize },
    /// A merge of two earlier trace nodes.
    Merge { left: usize, right: usize },
}

/// One span node built during parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceNode {
    pub span: Span,
    pub source: NodeSource,
    /// Decision-pathway embedding (reduced width when configured).
    pub emb: Vec<f64>,
    /// Full-width embedding, kept when the reward needs it: leaves hold
    /// their embedding row, merges the L2-normalized sum of their children.
    pub full_emb: Option<Vec<f64>>,
}

/// One merge decision with everything needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Adjacent candidate pairs, as trace node ids, left to right.
    pub candidates: Vec<(usize, usize)>,
    /// Raw scores, parallel to `candidates`.
    pub scores: Vec<f64>,
    /// Choice distribution, parallel to `candidates`. Greedy decisions
    /// record a one-hot distribution.
    pub probs: Vec<f64>,
    /// Index into `candidates` of the pair that was merged.
    pub chosen: usize,
    /// Trace node id of the merge result.
    pub merged: usize,
}

/// Complete record of one parse.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseTrace {
    pub n: usize,
    pub nodes: Vec<TraceNode>,
    pub decisions: Vec<Decision>,
    /// Probability of this decision sequence under the sampling policy;
    /// `1.0` for greedy parses. Distinct trees reachable through several
    /// merge orders are more probable than any single sequence.
    pub probability: f64,
}

impl ParseTrace {
    pub fn tree(&self) -> SpanTree {
        let spans = self.decisions.iter().map(|d| self.nodes[d.merged].span);
        SpanTree::new(self.n, spans).expect("trace spans form a valid tree")
    }

    pub fn log_probability(&self) -> f64 {
        self.decisions
            .iter()
            .map(|d| d.probs[d.chosen].ln())
            .sum()
    }
}

/// What to materialize on the trace.
#[derive(Debug, Clone, Copy, Default)]
pub struct TraceOptions {
    /// Also thread full-width embeddings through every node.
    pub with_full_pathway: bool,
}

/// Deterministic parse: argmax merges, leftmost on ties.
pub fn parse_greedy(model: &EmbeddingModel, caption: &Caption) -> Result<SpanTree> {
    Ok(trace_greedy(model, caption, TraceOptions::default())?.tree())
}

/// Greedy parse keeping the full trace.
pub fn trace_greedy(
    model: &EmbeddingModel,
    caption: &Caption,
    opts: TraceOptions,
) -> Result<ParseTrace> {
    trace_core(model, caption, opts, |scores| Ok(greedy_choice(scores)))
}

/// Stochastic parse: each merge is sampled from `softmax(scores / temperature)`.
pub fn trace_stochastic(
    model: &EmbeddingModel,
    caption: &Caption,
    temperature: f64,
    rng: &mut impl Rng,
    opts: TraceOptions,
) -> Result<ParseTrace> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::BadTemperature { t: temperature });
    }
    trace_core(model, caption, opts, |scores| {
        let probs = softmax_scaled(scores, temperature);
        let chosen = sample_index(&probs, rng.random::<f64>());
        Ok((chosen, probs))
    })
}

/// Replay a fixed decision sequence, recording the probability each choice
/// would have had under `softmax(scores / temperature)`. Takes exactly
/// `n - 1` choices, each indexing the candidate list at its step.
pub fn trace_replay(
    model: &EmbeddingModel,
    caption: &Caption,
    choices: &[usize],
    temperature: f64,
    opts: TraceOptions,
) -> Result<ParseTrace> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::BadTemperature { t: temperature });
    }
    if choices.len() + 1 != caption.n() {
        return Err(Error::LengthMismatch {
            what: "replay choices",
            expected: caption.n() - 1,
            got: choices.len(),
        });
    }
    let mut step = 0;
    trace_core(model, caption, opts, |scores| {
        let k = choices[step];
        step += 1;
        if k >= scores.len() {
            return Err(Error::ConfigInvalid {
                problems: vec![format!(
                    "replay choice {k} out of range at step {step} ({} candidates)",
                    scores.len()
                )],
            });
        }
        Ok((k, softmax_scaled(scores, temperature)))
    })
}

/// Greedy-parse a corpus of captions.
pub fn parse_corpus(
    model: &EmbeddingModel,
    captions: &[Caption],
    par: Parallelism,
) -> Result<Vec<SpanTree>> {
    try_map_ordered(par, captions, |_, c| parse_greedy(model, c))
}

/// Stochastically parse a corpus. Each caption gets its own generator
/// derived from `seed` and its index, so results do not depend on the
/// execution strategy.
pub fn trace_corpus_stochastic(
    model: &EmbeddingModel,
    captions: &[Caption],
    temperature: f64,
    seed: u64,
    par: Parallelism,
    opts: TraceOptions,
) -> Result<Vec<ParseTrace>> {
    try_map_ordered(par, captions, |i, c| {
        let mut rng = caption_rng(seed, i);
        trace_stochastic(model, c, temperature, &mut rng, opts)
    })
}

/// Per-caption generator for corpus-level stochastic parsing.
pub fn caption_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn greedy_choice(scores: &[f64]) -> (usize, Vec<f64>) {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    let mut probs = vec![0.0; scores.len()];
    probs[best] = 1.0;
    (best, probs)
}

/// Numerically stable `softmax(scores / t)`.
fn softmax_scaled(scores: &[f64], t: f64) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = scores.iter().map(|s| ((s - max) / t).exp()).collect();
    let z: f64 = e.iter().sum();
    for p in e.iter_mut() {
        *p /= z;
    }
    e
}

/// Inverse-CDF sample; `u` is uniform in `[0, 1)`.
fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

fn trace_core(
    model: &EmbeddingModel,
    caption: &Caption,
    opts: TraceOptions,
    mut choose: impl FnMut(&[f64]) -> Result<(usize, Vec<f64>)>,
) -> Result<ParseTrace> {
    let n = caption.n();
    let mut nodes: Vec<TraceNode> = Vec::with_capacity(2 * n - 1);
    for (k, token) in caption.tokens().iter().enumerate() {
        let row = model.token_index(&token.surface)?;
        nodes.push(TraceNode {
            span: Span::new(k + 1, k + 1),
            source: NodeSource::Leaf { token_row: row },
            emb: model.reduced_embedding(row),
            full_emb: opts
                .with_full_pathway
                .then(|| model.full_embedding(row).to_vec()),
        });
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut pair_scores: Vec<f64> = Vec::with_capacity(n.saturating_sub(1));
    for w in active.windows(2) {
        pair_scores.push(model.score_pair(&nodes[w[0]].emb, &nodes[w[1]].emb)?);
    }

    let mut decisions = Vec::with_capacity(n.saturating_sub(1));
    let mut probability = 1.0;
    while active.len() > 1 {
        let candidates: Vec<(usize, usize)> =
            active.windows(2).map(|w| (w[0], w[1])).collect();
        let scores = pair_scores.clone();
        let (chosen, probs) = choose(&scores)?;
        probability *= probs[chosen];

        let (li, ri) = candidates[chosen];
        let span = Span::new(nodes[li].span.start, nodes[ri].span.end);
        let emb = model
            .combine_pair(&nodes[li].emb, &nodes[ri].emb)
            .map_err(|e| attach_span(e, span))?;
        let full_emb = match (&nodes[li].full_emb, &nodes[ri].full_emb) {
            (Some(l), Some(r)) => {
                Some(combine_l2sum(l, r).map_err(|e| attach_span(e, span))?)
            }
            _ => None,
        };
        nodes.push(TraceNode {
            span,
            source: NodeSource::Merge { left: li, right: ri },
            emb,
            full_emb,
        });
        let merged = nodes.len() - 1;
        decisions.push(Decision {
            candidates,
            scores,
            probs,
            chosen,
            merged,
        });

        active[chosen] = merged;
        active.remove(chosen + 1);
        pair_scores.remove(chosen);
        if chosen > 0 {
            pair_scores[chosen - 1] =
                model.score_pair(&nodes[active[chosen - 1]].emb, &nodes[merged].emb)?;
        }
        if chosen + 1 < active.len() {
            pair_scores[chosen] =
                model.score_pair(&nodes[merged].emb, &nodes[active[chosen + 1]].emb)?;
        }
    }

    Ok(ParseTrace {
        n,
        nodes,
        decisions,
        probability,
    })
}

fn attach_span(e: Error, span: Span) -> Error {
    match e {
        Error::DegenerateSum { span: None } => Error::DegenerateSum { span: Some(span) },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingTable;
    use crate::model::{ModelConfig, OovPolicy};
    use crate::score::{CombineKind, ScoreKind, ScoreParams};
    use crate::types::Corpus;

    /// Scalar-embedding model over an explicit token -> value map, scored
    /// by `u.l + v.r` with unit weights and composed by elementwise mean.
    fn scalar_model(values: &[(&str, f64)], combine: CombineKind) -> EmbeddingModel {
        let mut pairs: Vec<(String, f64)> = values
            .iter()
            .map(|(w, x)| (w.to_string(), *x))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let vocab: Vec<String> = pairs.iter().map(|(w, _)| w.clone()).collect();
        let data: Vec<f64> = pairs.iter().map(|(_, x)| *x).collect();
        let config = ModelConfig {
            d_full: 1,
            d_reduced: None,
            score: ScoreKind::WeightedSum,
            combine,
            oov: OovPolicy::Strict,
            ..ModelConfig::default()
        };
        EmbeddingModel::from_parts(
            config,
            vocab.clone(),
            EmbeddingTable {
                rows: vocab.len(),
                dim: 1,
                data,
            },
            None,
            ScoreParams::WeightedSum {
                u: vec![1.0],
                v: vec![1.0],
            },
        )
        .unwrap()
    }

    fn caption(s: &str) -> Caption {
        Caption::from_line(s).unwrap()
    }

    fn spans(tree: &SpanTree) -> Vec<(usize, usize)> {
        tree.spans_filtered(false)
            .iter()
            .map(|s| (s.start, s.end))
            .collect()
    }

    #[test]
    fn rising_values_parse_right_branching() {
        let m = scalar_model(
            &[("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)],
            CombineKind::Mean,
        );
        let tree = parse_greedy(&m, &caption("a b c d")).unwrap();
        assert_eq!(spans(&tree), vec![(2, 4), (3, 4)]);
    }

    #[test]
    fn falling_values_parse_left_branching() {
        let m = scalar_model(
            &[("a", 0.4), ("b", 0.3), ("c", 0.2), ("d", 0.1)],
            CombineKind::Mean,
        );
        let tree = parse_greedy(&m, &caption("a b c d")).unwrap();
        assert_eq!(spans(&tree), vec![(1, 2), (1, 3)]);
    }

    #[test]
    fn equal_scores_tie_break_leftmost() {
        let m = scalar_model(&[("x", 0.5)], CombineKind::Mean);
        let tree = parse_greedy(&m, &caption("x x x x x")).unwrap();
        assert_eq!(spans(&tree), vec![(1, 2), (1, 3), (1, 4)]);
    }

    #[test]
    fn unit_norm_constant_embeddings_stay_constant_under_l2sum() {
        let m = scalar_model(&[("x", 1.0)], CombineKind::L2Sum);
        let trace = trace_greedy(&m, &caption("x x x x"), TraceOptions::default()).unwrap();
        for node in &trace.nodes {
            assert_eq!(node.emb, vec![1.0]);
        }
        assert_eq!(spans(&trace.tree()), vec![(1, 2), (1, 3)]);
    }

    #[test]
    fn single_token_caption() {
        let m = scalar_model(&[("a", 0.1)], CombineKind::Mean);
        let trace = trace_greedy(&m, &caption("a"), TraceOptions::default()).unwrap();
        assert!(trace.decisions.is_empty());
        assert_eq!(trace.probability, 1.0);
        assert_eq!(trace.tree().spans().len(), 1);
    }

    #[test]
    fn two_token_caption_has_one_forced_merge() {
        let m = scalar_model(&[("a", 0.1), ("b", 0.2)], CombineKind::Mean);
        let trace = trace_greedy(&m, &caption("a b"), TraceOptions::default()).unwrap();
        assert_eq!(trace.decisions.len(), 1);
        assert_eq!(trace.decisions[0].candidates.len(), 1);
        assert_eq!(trace.probability, 1.0);
    }

    #[test]
    fn greedy_trace_records_one_hot_probs_and_unit_probability() {
        let m = scalar_model(
            &[("a", 0.1), ("b", 0.2), ("c", 0.3)],
            CombineKind::Mean,
        );
        let trace = trace_greedy(&m, &caption("a b c"), TraceOptions::default()).unwrap();
        assert_eq!(trace.probability, 1.0);
        for d in &trace.decisions {
            assert_eq!(d.probs[d.chosen], 1.0);
            assert_eq!(d.probs.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn degenerate_combine_reports_span() {
        let config = ModelConfig {
            d_full: 2,
            score: ScoreKind::WeightedSum,
            combine: CombineKind::L2Sum,
            oov: OovPolicy::Strict,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::from_parts(
            config,
            vec!["a".into(), "b".into()],
            EmbeddingTable {
                rows: 2,
                dim: 2,
                data: vec![1.0, 0.5, -1.0, -0.5],
            },
            None,
            ScoreParams::WeightedSum {
                u: vec![1.0, 0.0],
                v: vec![1.0, 0.0],
            },
        )
        .unwrap();
        match parse_greedy(&m, &caption("a b")).unwrap_err() {
            Error::DegenerateSum { span: Some(s) } => {
                assert_eq!((s.start, s.end), (1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oov_respects_policy() {
        let strict = scalar_model(&[("a", 0.1)], CombineKind::Mean);
        assert!(matches!(
            parse_greedy(&strict, &caption("a zebra")).unwrap_err(),
            Error::OovToken { .. }
        ));

        let config = ModelConfig {
            d_full: 4,
            ..ModelConfig::default()
        };
        let lenient =
            EmbeddingModel::init(config, vec!["a".to_string()], 3).unwrap();
        parse_greedy(&lenient, &caption("a zebra")).unwrap();
    }

    /// From-scratch reference: recompute every pair score each round and
    /// every span embedding recursively from the leaves.
    fn reference_greedy(model: &EmbeddingModel, caption: &Caption) -> (SpanTree, Vec<Vec<f64>>) {
        fn span_emb(model: &EmbeddingModel, caption: &Caption, s: Span, split_of: &dyn Fn(Span) -> usize) -> Vec<f64> {
            if s.is_single() {
                let row = model.token_index(&caption.tokens()[s.start - 1].surface).unwrap();
                return model.reduced_embedding(row);
            }
            let k = split_of(s);
            let l = span_emb(model, caption, Span::new(s.start, k), split_of);
            let r = span_emb(model, caption, Span::new(k + 1, s.end), split_of);
            model.combine_pair(&l, &r).unwrap()
        }

        let n = caption.n();
        let mut splits: std::collections::HashMap<Span, usize> = std::collections::HashMap::new();
        let mut frontier: Vec<Span> = (1..=n).map(|i| Span::new(i, i)).collect();
        let mut all_scores = Vec::new();
        let mut merged_spans = Vec::new();
        while frontier.len() > 1 {
            let splits_ref = splits.clone();
            let split_of = move |s: Span| splits_ref[&s];
            let scores: Vec<f64> = frontier
                .windows(2)
                .map(|w| {
                    let l = span_emb(model, caption, w[0], &split_of);
                    let r = span_emb(model, caption, w[1], &split_of);
                    model.score_pair(&l, &r).unwrap()
                })
                .collect();
            let mut best = 0;
            for (k, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = k;
                }
            }
            all_scores.push(scores);
            let merged = Span::new(frontier[best].start, frontier[best + 1].end);
            splits.insert(merged, frontier[best].end);
            merged_spans.push(merged);
            frontier[best] = merged;
            frontier.remove(best + 1);
        }
        (SpanTree::new(n, merged_spans).unwrap(), all_scores)
    }

    #[test]
    fn cached_scores_match_from_scratch_recomputation() {
        let sentences = [
            "a dog runs fast",
            "the small cat sat on a mat",
            "one two three four five six seven eight",
            "b a c a b",
        ];
        let vocab: Vec<String> = sentences
            .iter()
            .flat_map(|s| s.split_whitespace().map(str::to_string))
            .collect();
        for (seed, combine) in [(1, CombineKind::L2Sum), (2, CombineKind::Mean), (3, CombineKind::Max)] {
            let config = ModelConfig {
                d_full: 8,
                combine,
                ..ModelConfig::default()
            };
            let m = EmbeddingModel::init(config, vocab.clone(), seed).unwrap();
            for s in sentences {
                let cap = caption(s);
                let trace = trace_greedy(&m, &cap, TraceOptions::default()).unwrap();
                let (ref_tree, ref_scores) = reference_greedy(&m, &cap);
                assert_eq!(trace.tree(), ref_tree, "tree mismatch on {s:?}");
                let trace_scores: Vec<Vec<f64>> =
                    trace.decisions.iter().map(|d| d.scores.clone()).collect();
                assert_eq!(trace_scores, ref_scores, "score cache drift on {s:?}");
            }
        }
    }

    #[test]
    fn stochastic_probs_are_a_distribution_and_product_matches() {
        let config = ModelConfig {
            d_full: 8,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(
            config,
            "a b c d e".split_whitespace().map(str::to_string),
            5,
        )
        .unwrap();
        let cap = caption("a b c d e");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace =
            trace_stochastic(&m, &cap, 1.0, &mut rng, TraceOptions::default()).unwrap();
        assert_eq!(trace.decisions.len(), 4);
        let mut product = 1.0;
        for d in &trace.decisions {
            assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.probs.iter().all(|&p| p >= 0.0));
            product *= d.probs[d.chosen];
        }
        assert_eq!(trace.probability, product);
        assert!((trace.log_probability() - product.ln()).abs() < 1e-12);
    }

    #[test]
    fn stochastic_is_deterministic_given_seed() {
        let config = ModelConfig {
            d_full: 8,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(
            config,
            "a b c d".split_whitespace().map(str::to_string),
            5,
        )
        .unwrap();
        let cap = caption("a b c d");
        let t1 = trace_stochastic(
            &m,
            &cap,
            1.0,
            &mut ChaCha8Rng::seed_from_u64(9),
            TraceOptions::default(),
        )
        .unwrap();
        let t2 = trace_stochastic(
            &m,
            &cap,
            1.0,
            &mut ChaCha8Rng::seed_from_u64(9),
            TraceOptions::default(),
        )
        .unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn tiny_temperature_recovers_greedy() {
        let m = scalar_model(
            &[("a", 0.15), ("b", 0.3), ("c", 0.45), ("d", 0.2)],
            CombineKind::Mean,
        );
        let cap = caption("a b c d");
        let greedy = parse_greedy(&m, &cap).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let sampled =
            trace_stochastic(&m, &cap, 1e-9, &mut rng, TraceOptions::default()).unwrap();
        assert_eq!(sampled.tree(), greedy);
        assert!(sampled.probability > 0.999);
    }

    #[test]
    fn bad_temperature_is_rejected() {
        let m = scalar_model(&[("a", 0.1)], CombineKind::Mean);
        let cap = caption("a a");
        for t in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            assert!(matches!(
                trace_stochastic(&m, &cap, t, &mut rng, TraceOptions::default()),
                Err(Error::BadTemperature { .. })
            ));
        }
    }

    #[test]
    fn huge_score_gaps_do_not_overflow_softmax() {
        let m = scalar_model(
            &[("a", 1e6), ("b", -1e6), ("c", 0.0)],
            CombineKind::Mean,
        );
        let cap = caption("a b c");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace =
            trace_stochastic(&m, &cap, 1.0, &mut rng, TraceOptions::default()).unwrap();
        for d in &trace.decisions {
            assert!(d.probs.iter().all(|p| p.is_finite()));
        }
    }

    #[test]
    fn full_pathway_tracks_l2_normalized_sums() {
        let config = ModelConfig {
            d_full: 16,
            d_reduced: Some(1),
            score: ScoreKind::WeightedSum,
            combine: CombineKind::Mean,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(
            config,
            "a b c d".split_whitespace().map(str::to_string),
            2,
        )
        .unwrap();
        let cap = caption("a b c d");
        let trace = trace_greedy(
            &m,
            &cap,
            TraceOptions {
                with_full_pathway: true,
            },
        )
        .unwrap();
        for node in &trace.nodes {
            let full = node.full_emb.as_ref().expect("full pathway requested");
            assert_eq!(full.len(), 16);
            assert_eq!(node.emb.len(), 1);
            match node.source {
                NodeSource::Leaf { token_row } => {
                    assert_eq!(full, &m.full_embedding(token_row).to_vec());
                }
                NodeSource::Merge { left, right } => {
                    let expect = combine_l2sum(
                        trace.nodes[left].full_emb.as_ref().unwrap(),
                        trace.nodes[right].full_emb.as_ref().unwrap(),
                    )
                    .unwrap();
                    assert_eq!(full, &expect);
                }
            }
        }
    }

    #[test]
    fn corpus_parse_matches_across_strategies() {
        let lines = ["a dog runs", "the cat sat on a mat", "a b c d e f g"];
        let caps: Vec<Caption> = lines.iter().map(|l| caption(l)).collect();
        let corpus = Corpus::new(caps);
        let m = EmbeddingModel::init(
            ModelConfig {
                d_full: 8,
                ..ModelConfig::default()
            },
            corpus.vocab(),
            7,
        )
        .unwrap();
        let seq = parse_corpus(&m, &corpus.captions, Parallelism::Sequential).unwrap();
        let par = parse_corpus(&m, &corpus.captions, Parallelism::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 3);

        let st_seq = trace_corpus_stochastic(
            &m,
            &corpus.captions,
            1.0,
            11,
            Parallelism::Sequential,
            TraceOptions::default(),
        )
        .unwrap();
        let st_par = trace_corpus_stochastic(
            &m,
            &corpus.captions,
            1.0,
            11,
            Parallelism::Parallel,
            TraceOptions::default(),
        )
        .unwrap();
        assert_eq!(st_seq, st_par);
    }
}
