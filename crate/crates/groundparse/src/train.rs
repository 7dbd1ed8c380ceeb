//! Policy-gradient training of the parser.
//!
//! Each sampled merge is an action; its reward is how "groundable" the
//! merged span is, either read off a ground-truth concreteness table or
//! measured by a learned caption-scene matcher. Updates follow the score
//! function estimator with an exponential-moving-average baseline:
//! maximize `sum_t (r_t - b) * ln pi(a_t)` by plain SGD. All gradients are
//! hand-derived; `reinforce gradients match finite differences` below and
//! the matcher tests keep them honest.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::analysis::ConcretenessTable;
use crate::embed::Mlp2Grad;
use crate::error::{Error, Result};
use crate::model::{EmbeddingModel, ModelConfig};
use crate::par::{try_map_ordered, Parallelism};
use crate::parser::{
    trace_stochastic, NodeSource, ParseTrace, TraceOptions,
};
use crate::score::{combine_backward, score_backward, ScoreGrad, ScoreParams};
use crate::types::{Caption, Corpus, Span, SpanTree};
use crate::vecmath::{cosine, dot, l2_norm, scaled_add};

/// Where constituent rewards come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewardSource {
    /// Mean ground-truth concreteness of the span's tokens.
    #[default]
    Concreteness,
    /// Cosine match between the span's full-width embedding and the scene,
    /// both sent through a learned joint projection.
    VisualMatch,
}

/// Training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Parser learning rate (SGD).
    pub lr: f64,
    /// Matcher learning rate (SGD).
    pub matcher_lr: f64,
    /// Sampling temperature for exploration.
    pub temperature: f64,
    /// EMA decay of the reward baseline.
    pub baseline_decay: f64,
    pub reward: RewardSource,
    /// Hinge margin of the matcher's ranking loss.
    pub margin: f64,
    /// Width of the joint caption-scene space.
    pub matcher_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 16,
            lr: 0.05,
            matcher_lr: 0.05,
            temperature: 1.0,
            baseline_decay: 0.9,
            reward: RewardSource::Concreteness,
            margin: 0.2,
            matcher_dim: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.batch_size == 0 {
            problems.push("batch_size must be positive".to_string());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            problems.push(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            problems.push(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            problems.push(format!(
                "baseline_decay must be in [0,1), got {}",
                self.baseline_decay
            ));
        }
        if self.reward == RewardSource::VisualMatch {
            if self.margin <= 0.0 {
                problems.push(format!("margin must be positive, got {}", self.margin));
            }
            if self.matcher_dim == 0 {
                problems.push("matcher_dim must be positive".to_string());
            }
            if !(self.matcher_lr > 0.0 && self.matcher_lr.is_finite()) {
                problems.push(format!(
                    "matcher_lr must be positive, got {}",
                    self.matcher_lr
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid { problems })
        }
    }
}

/// Mean concreteness of a span's tokens; tokens missing from the table
/// count as zero. Always lands in [0, 1] for tables bounded by [0, 1].
pub fn concreteness_reward(table: &ConcretenessTable, caption: &Caption, span: Span) -> f64 {
    let toks = caption.tokens();
    let sum: f64 = (span.start..=span.end)
        .map(|i| table.value_or_zero(&toks[i - 1].surface))
        .sum();
    sum / span.len() as f64
}

/// Shannon entropy of one decision distribution, in nats.
pub fn decision_entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Exponential-moving-average reward baseline. The first batch is centered
/// on its own mean; later batches subtract the average of history.
#[derive(Debug, Clone, Default)]
pub struct Baseline {
    value: Option<f64>,
    decay: f64,
}

impl Baseline {
    pub fn new(decay: f64) -> Self {
        Baseline { value: None, decay }
    }

    /// Baseline to subtract for a batch with this mean reward; folds the
    /// mean into the average afterwards.
    pub fn advantage_reference(&mut self, batch_mean: f64) -> f64 {
        match self.value {
            None => {
                self.value = Some(batch_mean);
                batch_mean
            }
            Some(v) => {
                self.value = Some(self.decay * v + (1.0 - self.decay) * batch_mean);
                v
            }
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

/// Linear caption and scene projections into a shared space, compared by
/// cosine. Trained with a bidirectional max-margin ranking loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherParams {
    pub dim: usize,
    pub text_in: usize,
    pub scene_in: usize,
    /// Row-major `dim x text_in`.
    pub w_text: Vec<f64>,
    /// Row-major `dim x scene_in`.
    pub w_scene: Vec<f64>,
}

impl MatcherParams {
    pub fn init(rng: &mut impl Rng, text_in: usize, scene_in: usize, dim: usize) -> Self {
        let mut draw = |rows: usize, cols: usize| -> Vec<f64> {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            (0..rows * cols)
                .map(|_| rng.random_range(-limit..limit))
                .collect()
        };
        MatcherParams {
            dim,
            text_in,
            scene_in,
            w_text: draw(dim, text_in),
            w_scene: draw(dim, scene_in),
        }
    }

    pub fn project_text(&self, x: &[f64]) -> Vec<f64> {
        project(&self.w_text, self.dim, self.text_in, x)
    }

    pub fn project_scene(&self, v: &[f64]) -> Vec<f64> {
        project(&self.w_scene, self.dim, self.scene_in, v)
    }

    /// Cosine match between a full-width span embedding and a scene.
    pub fn match_score(&self, text: &[f64], scene: &[f64]) -> f64 {
        cosine(&self.project_text(text), &self.project_scene(scene))
    }
}

fn project(w: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), cols);
    (0..rows)
        .map(|r| dot(&w[r * cols..(r + 1) * cols], x))
        .collect()
}

/// Gradients for [`MatcherParams`].
#[derive(Debug, Clone)]
pub struct MatcherGrad {
    pub dw_text: Vec<f64>,
    pub dw_scene: Vec<f64>,
}

impl MatcherGrad {
    pub fn zeros_like(m: &MatcherParams) -> Self {
        MatcherGrad {
            dw_text: vec![0.0; m.w_text.len()],
            dw_scene: vec![0.0; m.w_scene.len()],
        }
    }
}

/// Bidirectional hinge ranking loss over a batch of aligned caption and
/// scene embeddings. For every aligned pair `k` and every distractor
/// `j != k` it penalizes `margin - s_kk + s_kj` (wrong scene) and
/// `margin - s_kk + s_jk` (wrong caption) when positive. Gradients flow
/// into the projections only; inputs are treated as constants.
pub fn triplet_loss(
    matcher: &MatcherParams,
    captions: &[Vec<f64>],
    scenes: &[Vec<f64>],
    margin: f64,
    grad: &mut MatcherGrad,
) -> Result<f64> {
    if captions.len() != scenes.len() {
        return Err(Error::LengthMismatch {
            what: "matcher batch",
            expected: captions.len(),
            got: scenes.len(),
        });
    }
    let k = captions.len();
    if k < 2 {
        return Err(Error::BatchTooSmall { size: k });
    }
    let a: Vec<Vec<f64>> = captions.iter().map(|c| matcher.project_text(c)).collect();
    let b: Vec<Vec<f64>> = scenes.iter().map(|v| matcher.project_scene(v)).collect();
    let mut s = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            s[i][j] = cosine(&a[i], &b[j]);
        }
    }

    // Coefficient of each s_ij in the total loss.
    let mut ds = vec![vec![0.0; k]; k];
    let mut loss = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let wrong_scene = margin - s[i][i] + s[i][j];
            if wrong_scene > 0.0 {
                loss += wrong_scene;
                ds[i][i] -= 1.0;
                ds[i][j] += 1.0;
            }
            let wrong_caption = margin - s[j][j] + s[i][j];
            if wrong_caption > 0.0 {
                loss += wrong_caption;
                ds[j][j] -= 1.0;
                ds[i][j] += 1.0;
            }
        }
    }

    // d cos(a,b)/da = b/(|a||b|) - cos * a/|a|^2, and symmetrically for b.
    let mut da = vec![vec![0.0; matcher.dim]; k];
    let mut db = vec![vec![0.0; matcher.dim]; k];
    for i in 0..k {
        for j in 0..k {
            let c = ds[i][j];
            if c == 0.0 {
                continue;
            }
            let na = l2_norm(&a[i]);
            let nb = l2_norm(&b[j]);
            if na < 1e-12 || nb < 1e-12 {
                continue;
            }
            for t in 0..matcher.dim {
                da[i][t] += c * (b[j][t] / (na * nb) - s[i][j] * a[i][t] / (na * na));
                db[j][t] += c * (a[i][t] / (na * nb) - s[i][j] * b[j][t] / (nb * nb));
            }
        }
    }
    for i in 0..k {
        for r in 0..matcher.dim {
            if da[i][r] != 0.0 {
                scaled_add(
                    &mut grad.dw_text[r * matcher.text_in..(r + 1) * matcher.text_in],
                    da[i][r],
                    &captions[i],
                );
            }
            if db[i][r] != 0.0 {
                scaled_add(
                    &mut grad.dw_scene[r * matcher.scene_in..(r + 1) * matcher.scene_in],
                    db[i][r],
                    &scenes[i],
                );
            }
        }
    }
    Ok(loss)
}

/// Caption embedding used on the matcher side: the L2-normalized sum of
/// the full-width token embeddings.
pub fn caption_embedding(model: &EmbeddingModel, caption: &Caption) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; model.config.d_full];
    for t in caption.tokens() {
        scaled_add(&mut sum, 1.0, model.full_embedding(model.token_index(&t.surface)?));
    }
    let norm = l2_norm(&sum);
    if norm < 1e-12 {
        return Err(Error::DegenerateSum { span: None });
    }
    for x in sum.iter_mut() {
        *x /= norm;
    }
    Ok(sum)
}

/// Accumulated parameter gradients for one batch.
#[derive(Debug, Clone)]
pub struct GradAccum {
    /// Sparse per-row embedding gradients, full width.
    pub emb_rows: HashMap<usize, Vec<f64>>,
    pub bottleneck: Option<Mlp2Grad>,
    pub score: ScoreGrad,
    /// Traces folded in, for mean application.
    pub count: usize,
}

impl GradAccum {
    pub fn zeros_like(model: &EmbeddingModel) -> Self {
        GradAccum {
            emb_rows: HashMap::new(),
            bottleneck: model.bottleneck.as_ref().map(Mlp2Grad::zeros_like),
            score: ScoreGrad::zeros_like(&model.score),
            count: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        let rows = self
            .emb_rows
            .values()
            .all(|g| g.iter().all(|x| x.is_finite()));
        let net = match &self.bottleneck {
            Some(g) => [&g.l1.dw, &g.l1.db, &g.l2.dw, &g.l2.db]
                .iter()
                .all(|v| v.iter().all(|x| x.is_finite())),
            None => true,
        };
        let score = match &self.score {
            ScoreGrad::Mlp(g) => [&g.l1.dw, &g.l1.db, &g.l2.dw, &g.l2.db]
                .iter()
                .all(|v| v.iter().all(|x| x.is_finite())),
            ScoreGrad::WeightedSum { du, dv } => {
                du.iter().chain(dv).all(|x| x.is_finite())
            }
            ScoreGrad::Mean => true,
        };
        rows && net && score
    }
}

/// Fold one sampled trace into the gradient of the objective
/// `sum_t advantage_t * ln pi_t(a_t)`. `advantages` is parallel to the
/// trace's decisions and treated as constant.
pub fn accumulate_reinforce(
    model: &EmbeddingModel,
    trace: &ParseTrace,
    advantages: &[f64],
    temperature: f64,
    accum: &mut GradAccum,
) -> Result<()> {
    if advantages.len() != trace.decisions.len() {
        return Err(Error::LengthMismatch {
            what: "advantages",
            expected: trace.decisions.len(),
            got: advantages.len(),
        });
    }
    let tau = model.config.resolved_tau();
    let mut node_grads: Vec<Vec<f64>> = trace
        .nodes
        .iter()
        .map(|n| vec![0.0; n.emb.len()])
        .collect();

    // Score-level gradients: d/ds_p = A * (1{p = chosen} - pi_p) / T.
    for (d, &adv) in trace.decisions.iter().zip(advantages) {
        for (p, &(li, ri)) in d.candidates.iter().enumerate() {
            let indicator = if p == d.chosen { 1.0 } else { 0.0 };
            let dscore = adv * (indicator - d.probs[p]) / temperature;
            if dscore == 0.0 {
                continue;
            }
            let (dl, dr) = score_backward(
                &model.score,
                tau,
                &trace.nodes[li].emb,
                &trace.nodes[ri].emb,
                dscore,
                &mut accum.score,
            );
            scaled_add(&mut node_grads[li], 1.0, &dl);
            scaled_add(&mut node_grads[ri], 1.0, &dr);
        }
    }

    // Push merged-node gradients down to the leaves. Reverse creation
    // order guarantees parents run before their children.
    for id in (0..trace.nodes.len()).rev() {
        if node_grads[id].iter().all(|&g| g == 0.0) {
            continue;
        }
        match trace.nodes[id].source {
            NodeSource::Merge { left, right } => {
                let (dl, dr) = combine_backward(
                    model.config.combine,
                    &trace.nodes[left].emb,
                    &trace.nodes[right].emb,
                    &trace.nodes[id].emb,
                    &node_grads[id],
                );
                scaled_add(&mut node_grads[left], 1.0, &dl);
                scaled_add(&mut node_grads[right], 1.0, &dr);
            }
            NodeSource::Leaf { token_row } => {
                let d_full = match (&model.bottleneck, &mut accum.bottleneck) {
                    (Some(net), Some(grad)) => {
                        net.backward(model.full_embedding(token_row), &node_grads[id], grad)
                    }
                    _ => node_grads[id].clone(),
                };
                scaled_add(
                    accum
                        .emb_rows
                        .entry(token_row)
                        .or_insert_with(|| vec![0.0; model.config.d_full]),
                    1.0,
                    &d_full,
                );
            }
        }
    }
    accum.count += 1;
    Ok(())
}

/// Gradient-ascent step with the batch-mean gradient.
pub fn apply_gradients(model: &mut EmbeddingModel, accum: &GradAccum, lr: f64) {
    if accum.count == 0 {
        return;
    }
    let step = lr / accum.count as f64;
    for (&row, g) in &accum.emb_rows {
        scaled_add(model.embeddings.row_mut(row), step, g);
    }
    if let (Some(net), Some(g)) = (&mut model.bottleneck, &accum.bottleneck) {
        apply_mlp(net, g, step);
    }
    match (&mut model.score, &accum.score) {
        (ScoreParams::Mlp(net), ScoreGrad::Mlp(g)) => apply_mlp(net, g, step),
        (ScoreParams::WeightedSum { u, v }, ScoreGrad::WeightedSum { du, dv }) => {
            scaled_add(u, step, du);
            scaled_add(v, step, dv);
        }
        (ScoreParams::Mean, ScoreGrad::Mean) => {}
        _ => unreachable!("gradient shape mismatch"),
    }
}

fn apply_mlp(net: &mut crate::embed::Mlp2, g: &Mlp2Grad, step: f64) {
    scaled_add(&mut net.l1.w, step, &g.l1.dw);
    scaled_add(&mut net.l1.b, step, &g.l1.db);
    scaled_add(&mut net.l2.w, step, &g.l2.dw);
    scaled_add(&mut net.l2.b, step, &g.l2.db);
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    /// Negated policy surrogate for the batch (lower is better).
    pub loss: f64,
    pub mean_reward: f64,
    /// Mean per-decision entropy, nats.
    pub entropy: f64,
    /// Matcher ranking loss, when a matcher is being trained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matcher_loss: Option<f64>,
}

/// Everything produced by training one seed.
#[derive(Debug, Clone)]
pub struct CheckpointStream {
    pub seed: u64,
    /// Initial model plus one checkpoint per epoch.
    pub checkpoints: Vec<EmbeddingModel>,
    pub log: Vec<StepRecord>,
    pub matcher: Option<MatcherParams>,
}

/// Streams for all requested seeds, in seed order.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub streams: Vec<CheckpointStream>,
}

/// Train one model per seed. Seeds are independent: each gets its own
/// parameter initialization and sampling stream, so they can run in
/// parallel without changing results.
pub fn train(
    corpus: &Corpus,
    model_config: &ModelConfig,
    config: &TrainConfig,
    seeds: &[u64],
    table: Option<&ConcretenessTable>,
    par: Parallelism,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if seeds.is_empty() {
        return Err(Error::ConfigInvalid {
            problems: vec!["need at least one training seed".to_string()],
        });
    }
    match config.reward {
        RewardSource::Concreteness => {
            if table.is_none() {
                return Err(Error::MissingOracleTable);
            }
        }
        RewardSource::VisualMatch => {
            if corpus.scenes.is_none() {
                return Err(Error::MissingScene);
            }
            if config.batch_size < 2 {
                return Err(Error::BatchTooSmall {
                    size: config.batch_size,
                });
            }
        }
    }

    let streams = try_map_ordered(par, seeds, |_, &seed| {
        train_one_seed(corpus, model_config, config, seed, table)
    })?;
    Ok(TrainOutcome { streams })
}

fn train_one_seed(
    corpus: &Corpus,
    model_config: &ModelConfig,
    config: &TrainConfig,
    seed: u64,
    table: Option<&ConcretenessTable>,
) -> Result<CheckpointStream> {
    let mut model = EmbeddingModel::init(model_config.clone(), corpus.vocab(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    let mut matcher = match config.reward {
        RewardSource::VisualMatch => {
            let scene_dim = corpus.scenes.as_ref().unwrap()[0].len();
            Some(MatcherParams::init(
                &mut rng,
                model_config.d_full,
                scene_dim,
                config.matcher_dim,
            ))
        }
        RewardSource::Concreteness => None,
    };
    let want_full = matcher.is_some();

    let mut checkpoints = vec![model.clone()];
    let mut log = Vec::new();
    let mut baseline = Baseline::new(config.baseline_decay);
    let mut step: u64 = 0;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            step += 1;
            // Sample a trace per caption and collect per-decision rewards.
            let mut traces: Vec<(usize, ParseTrace)> = Vec::with_capacity(batch.len());
            for &i in batch {
                let trace = trace_stochastic(
                    &model,
                    &corpus.captions[i],
                    config.temperature,
                    &mut rng,
                    TraceOptions {
                        with_full_pathway: want_full,
                    },
                )?;
                traces.push((i, trace));
            }

            let mut rewards: Vec<Vec<f64>> = Vec::with_capacity(traces.len());
            for (i, trace) in &traces {
                let mut rs = Vec::with_capacity(trace.decisions.len());
                for d in &trace.decisions {
                    let node = &trace.nodes[d.merged];
                    let r = match config.reward {
                        RewardSource::Concreteness => {
                            concreteness_reward(table.unwrap(), &corpus.captions[*i], node.span)
                        }
                        RewardSource::VisualMatch => {
                            let scene = &corpus.scenes.as_ref().unwrap()[*i];
                            let full = node
                                .full_emb
                                .as_ref()
                                .ok_or(Error::MissingFullEmbedding)?;
                            matcher.as_ref().unwrap().match_score(full, scene)
                        }
                    };
                    rs.push(r);
                }
                rewards.push(rs);
            }

            let flat: Vec<f64> = rewards.iter().flatten().copied().collect();
            let mean_reward = if flat.is_empty() {
                0.0
            } else {
                flat.iter().sum::<f64>() / flat.len() as f64
            };
            let reference = baseline.advantage_reference(mean_reward);

            let mut accum = GradAccum::zeros_like(&model);
            let mut surrogate = 0.0;
            let mut entropy_sum = 0.0;
            let mut entropy_n = 0usize;
            for ((_, trace), rs) in traces.iter().zip(&rewards) {
                let advantages: Vec<f64> = rs.iter().map(|r| r - reference).collect();
                for (d, &a) in trace.decisions.iter().zip(&advantages) {
                    surrogate += a * d.probs[d.chosen].ln();
                    entropy_sum += decision_entropy(&d.probs);
                    entropy_n += 1;
                }
                accumulate_reinforce(&model, trace, &advantages, config.temperature, &mut accum)?;
            }
            if !accum.is_finite() {
                return Err(Error::NonFiniteGradient { seed, step });
            }
            apply_gradients(&mut model, &accum, config.lr);

            // Alternate with a matcher step on the same batch.
            let mut matcher_loss = None;
            if let Some(m) = matcher.as_mut() {
                if batch.len() >= 2 {
                    let caps: Vec<Vec<f64>> = traces
                        .iter()
                        .map(|(i, _)| caption_embedding(&model, &corpus.captions[*i]))
                        .collect::<Result<_>>()?;
                    let scenes: Vec<Vec<f64>> = batch
                        .iter()
                        .map(|&i| corpus.scenes.as_ref().unwrap()[i].clone())
                        .collect();
                    let mut grad = MatcherGrad::zeros_like(m);
                    let loss = triplet_loss(m, &caps, &scenes, config.margin, &mut grad)?;
                    let s = config.matcher_lr / batch.len() as f64;
                    scaled_add(&mut m.w_text, -s, &grad.dw_text);
                    scaled_add(&mut m.w_scene, -s, &grad.dw_scene);
                    matcher_loss = Some(loss / batch.len() as f64);
                }
            }

            log.push(StepRecord {
                step,
                epoch,
                loss: -surrogate / traces.len() as f64,
                mean_reward,
                entropy: if entropy_n == 0 {
                    0.0
                } else {
                    entropy_sum / entropy_n as f64
                },
                matcher_loss,
            });
        }
        checkpoints.push(model.clone());
    }

    Ok(CheckpointStream {
        seed,
        checkpoints,
        log,
        matcher,
    })
}

/// Pick one checkpoint per stream so the chosen parses agree most with
/// each other, measured by mean pairwise span F1.
///
/// `parses[s][c]` holds stream `s`, checkpoint `c` parsing a shared
/// caption list. Starts from every stream's final checkpoint and runs
/// synchronous rounds of per-stream best responses (all streams updated
/// against the same previous assignment, which keeps the procedure
/// independent of stream order), tracking the best assignment seen. Ties
/// go to the later checkpoint.
pub fn select_checkpoints(parses: &[Vec<Vec<SpanTree>>]) -> Result<Vec<usize>> {
    use crate::metrics::parse_set_f1;

    if parses.is_empty() {
        return Err(Error::ModelSetTooSmall { got: 0, need: 1 });
    }
    for (index, stream) in parses.iter().enumerate() {
        if stream.is_empty() {
            return Err(Error::EmptyStream { index });
        }
    }
    let s = parses.len();
    if s == 1 {
        return Ok(vec![parses[0].len() - 1]);
    }

    // Cache pair F1 between checkpoints of different streams.
    let mut cache: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    let pair = |cache: &mut HashMap<(usize, usize, usize, usize), f64>,
                    i: usize,
                    ci: usize,
                    j: usize,
                    cj: usize|
     -> Result<f64> {
        let key = if i < j { (i, ci, j, cj) } else { (j, cj, i, ci) };
        if let Some(&v) = cache.get(&key) {
            return Ok(v);
        }
        let v = parse_set_f1(&parses[key.0][key.1], &parses[key.2][key.3])?;
        cache.insert(key, v);
        Ok(v)
    };

    let objective = |cache: &mut HashMap<(usize, usize, usize, usize), f64>,
                     sel: &[usize]|
     -> Result<f64> {
        let mut total = 0.0;
        let mut n = 0usize;
        for i in 0..s {
            for j in (i + 1)..s {
                total += pair(cache, i, sel[i], j, sel[j])?;
                n += 1;
            }
        }
        Ok(total / n as f64)
    };

    let mut sel: Vec<usize> = parses.iter().map(|st| st.len() - 1).collect();
    let mut best_sel = sel.clone();
    let mut best_obj = objective(&mut cache, &sel)?;

    for _ in 0..64 {
        let mut next = sel.clone();
        for i in 0..s {
            let mut best_c = sel[i];
            let mut best_sum = f64::NEG_INFINITY;
            for c in 0..parses[i].len() {
                let mut sum = 0.0;
                for j in 0..s {
                    if j != i {
                        sum += pair(&mut cache, i, c, j, sel[j])?;
                    }
                }
                if sum > best_sum || (sum == best_sum && c > best_c) {
                    best_sum = sum;
                    best_c = c;
                }
            }
            next[i] = best_c;
        }
        if next == sel {
            break;
        }
        sel = next;
        let obj = objective(&mut cache, &sel)?;
        if obj > best_obj {
            best_obj = obj;
            best_sel = sel.clone();
        }
    }
    Ok(best_sel)
}
