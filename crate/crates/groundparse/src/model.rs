//! Model configuration, parameter initialization, and checkpoint files.
//!
//! A model is a token embedding table plus an optional reduction net that
//! squeezes embeddings down to one or two dimensions before any parsing
//! decision, plus the scorer's trainable state. Rewards are always computed
//! from the full-width pathway; only the decisions are starved.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingTable, Mlp2};
use crate::error::{Error, Result};
use crate::score::{self, CombineKind, ScoreKind, ScoreParams};

/// Reserved surface for out-of-vocabulary tokens under [`OovPolicy::Unk`].
pub const UNK_TOKEN: &str = "<unk>";

/// Current checkpoint file format version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// What to do with tokens absent from the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OovPolicy {
    /// Map them to a shared `<unk>` row.
    #[default]
    Unk,
    /// Reject them with an error.
    Strict,
}

/// Static description of a model variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Width of stored token embeddings.
    pub d_full: usize,
    /// If set, decisions run on embeddings reduced to this width (1 or 2).
    pub d_reduced: Option<usize>,
    pub score: ScoreKind,
    pub combine: CombineKind,
    /// Mixing weight for the mean scorers; `None` uses the kind's default.
    pub tau: Option<f64>,
    pub oov: OovPolicy,
    /// Hidden width of the reduction net.
    pub bottleneck_hidden: usize,
    /// Hidden width of the MLP scorer.
    pub score_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_full: 512,
            d_reduced: None,
            score: ScoreKind::Mlp,
            combine: CombineKind::L2Sum,
            tau: None,
            oov: OovPolicy::Unk,
            bottleneck_hidden: 128,
            score_hidden: 128,
        }
    }
}

impl ModelConfig {
    /// Width of the embeddings that scoring and combining actually see.
    pub fn effective_dim(&self) -> usize {
        self.d_reduced.unwrap_or(self.d_full)
    }

    /// The `tau` in effect for this configuration.
    pub fn resolved_tau(&self) -> f64 {
        self.tau.unwrap_or(self.score.default_tau())
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.d_full == 0 {
            problems.push("d_full must be positive".to_string());
        }
        if let Some(d) = self.d_reduced {
            if d != 1 && d != 2 {
                problems.push(format!("d_reduced must be 1 or 2, got {d}"));
            }
            if d > self.d_full {
                problems.push(format!(
                    "d_reduced ({d}) cannot exceed d_full ({})",
                    self.d_full
                ));
            }
            if self.bottleneck_hidden == 0 {
                problems.push("bottleneck_hidden must be positive".to_string());
            }
        }
        if self.score.requires_scalar() && self.effective_dim() != 1 {
            problems.push(format!(
                "scorer {} needs one-dimensional embeddings, effective dim is {}",
                self.score.label(),
                self.effective_dim()
            ));
        }
        if let Some(tau) = self.tau {
            if !self.score.uses_tau() {
                problems.push(format!("scorer {} ignores tau", self.score.label()));
            } else if tau <= 0.0 {
                problems.push(format!("tau must be positive, got {tau}"));
            }
        }
        if self.score == ScoreKind::Mlp && self.score_hidden == 0 {
            problems.push("score_hidden must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid { problems })
        }
    }

    /// Compact `dim,score,combine` label, e.g. `512,mlp,l2sum` or `1,ws,me`.
    pub fn variant(&self) -> String {
        format!(
            "{},{},{}",
            self.effective_dim(),
            self.score.label(),
            self.combine.label()
        )
    }

    /// Parse a `dim,score,combine` label. Dimensions 1 and 2 become a
    /// reduction target below the default full width; anything larger is
    /// taken as the full width itself with no reduction.
    pub fn from_variant(s: &str) -> Result<ModelConfig> {
        let mut problems = Vec::new();
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::ConfigInvalid {
                problems: vec![format!(
                    "variant {s:?} must have three comma-separated fields: dim,score,combine"
                )],
            });
        }
        let mut config = ModelConfig::default();
        match parts[0].parse::<usize>() {
            Ok(d) if d == 1 || d == 2 => config.d_reduced = Some(d),
            Ok(d) if d > 2 => {
                config.d_full = d;
                config.d_reduced = None;
            }
            _ => problems.push(format!("bad dimension {:?}", parts[0])),
        }
        match parts[1] {
            "mlp" => config.score = ScoreKind::Mlp,
            "ws" => config.score = ScoreKind::WeightedSum,
            "m" => config.score = ScoreKind::Mean,
            "mhi" => config.score = ScoreKind::MeanHeadInitial,
            other => problems.push(format!("unknown scorer {other:?}")),
        }
        match parts[2] {
            "l2sum" => config.combine = CombineKind::L2Sum,
            "me" => config.combine = CombineKind::Mean,
            "mx" => config.combine = CombineKind::Max,
            other => problems.push(format!("unknown composer {other:?}")),
        }
        if !problems.is_empty() {
            return Err(Error::ConfigInvalid { problems });
        }
        config.validate()?;
        Ok(config)
    }
}

/// A fully materialized model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub config: ModelConfig,
    /// Sorted; includes [`UNK_TOKEN`] under [`OovPolicy::Unk`].
    pub vocab: Vec<String>,
    /// `|vocab| x d_full`.
    pub embeddings: EmbeddingTable,
    /// Present exactly when `config.d_reduced` is set.
    pub bottleneck: Option<Mlp2>,
    pub score: ScoreParams,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl EmbeddingModel {
    /// Deterministic initialization from a seed. The vocabulary is sorted
    /// and deduplicated; draw order is embeddings, then the reduction net,
    /// then scorer parameters, so models sharing a seed and vocabulary have
    /// identical embeddings regardless of scorer choice.
    pub fn init(
        config: ModelConfig,
        vocab: impl IntoIterator<Item = String>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut vocab: Vec<String> = vocab.into_iter().collect();
        vocab.sort();
        vocab.dedup();
        if vocab.is_empty() {
            return Err(Error::EmptyVocab);
        }
        if config.oov == OovPolicy::Unk {
            if let Err(pos) = vocab.binary_search_by(|w| w.as_str().cmp(UNK_TOKEN)) {
                vocab.insert(pos, UNK_TOKEN.to_string());
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embeddings = EmbeddingTable::init(&mut rng, vocab.len(), config.d_full);
        let bottleneck = config
            .d_reduced
            .map(|d| Mlp2::init(&mut rng, config.d_full, config.bottleneck_hidden, d));
        let eff = config.effective_dim();
        let score = match config.score {
            ScoreKind::Mlp => {
                ScoreParams::Mlp(Mlp2::init(&mut rng, 2 * eff, config.score_hidden, 1))
            }
            ScoreKind::WeightedSum => {
                let limit = (6.0 / (eff + 1) as f64).sqrt();
                let mut draw = |n: usize| -> Vec<f64> {
                    use rand::Rng;
                    (0..n).map(|_| rng.random_range(-limit..limit)).collect()
                };
                let u = draw(eff);
                let v = draw(eff);
                ScoreParams::WeightedSum { u, v }
            }
            ScoreKind::Mean | ScoreKind::MeanHeadInitial => ScoreParams::Mean,
        };

        let mut model = EmbeddingModel {
            config,
            vocab,
            embeddings,
            bottleneck,
            score,
            index: HashMap::new(),
        };
        model.rebuild_index();
        Ok(model)
    }

    /// Assemble a model from existing parts, checking shape consistency.
    pub fn from_parts(
        config: ModelConfig,
        vocab: Vec<String>,
        embeddings: EmbeddingTable,
        bottleneck: Option<Mlp2>,
        score: ScoreParams,
    ) -> Result<Self> {
        let mut model = EmbeddingModel {
            config,
            vocab,
            embeddings,
            bottleneck,
            score,
            index: HashMap::new(),
        };
        model.rebuild_index();
        model.validate()?;
        Ok(model)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    /// Shape and invariant checks, used after loading a checkpoint.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.vocab.is_empty() {
            return Err(Error::EmptyVocab);
        }
        self.embeddings.validate()?;
        if self.embeddings.rows != self.vocab.len() {
            return Err(Error::Checkpoint(format!(
                "embedding table has {} rows for {} vocabulary entries",
                self.embeddings.rows,
                self.vocab.len()
            )));
        }
        if self.embeddings.dim != self.config.d_full {
            return Err(Error::Checkpoint(format!(
                "embedding width {} does not match configured d_full {}",
                self.embeddings.dim, self.config.d_full
            )));
        }
        match (&self.bottleneck, self.config.d_reduced) {
            (Some(net), Some(d)) => {
                if net.in_dim() != self.config.d_full || net.out_dim() != d {
                    return Err(Error::Checkpoint(format!(
                        "reduction net maps {} -> {}, config wants {} -> {d}",
                        net.in_dim(),
                        net.out_dim(),
                        self.config.d_full
                    )));
                }
            }
            (None, None) => {}
            (Some(_), None) => {
                return Err(Error::Checkpoint(
                    "reduction net present but d_reduced unset".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(Error::Checkpoint(
                    "d_reduced set but reduction net missing".into(),
                ))
            }
        }
        if !self.score.matches(self.config.score) {
            return Err(Error::Checkpoint(
                "scorer parameters do not match configured scorer kind".into(),
            ));
        }
        let eff = self.config.effective_dim();
        match &self.score {
            ScoreParams::Mlp(net) => {
                if net.in_dim() != 2 * eff || net.out_dim() != 1 {
                    return Err(Error::Checkpoint(format!(
                        "score net maps {} -> {}, expected {} -> 1",
                        net.in_dim(),
                        net.out_dim(),
                        2 * eff
                    )));
                }
            }
            ScoreParams::WeightedSum { u, v } => {
                if u.len() != eff || v.len() != eff {
                    return Err(Error::Checkpoint(format!(
                        "scorer weight lengths {}/{} do not match effective dim {eff}",
                        u.len(),
                        v.len()
                    )));
                }
            }
            ScoreParams::Mean => {}
        }
        Ok(())
    }

    /// Vocabulary row for a surface, honoring the OOV policy.
    pub fn token_index(&self, surface: &str) -> Result<usize> {
        match self.index.get(surface) {
            Some(&i) => Ok(i),
            None => match self.config.oov {
                OovPolicy::Unk => self
                    .index
                    .get(UNK_TOKEN)
                    .copied()
                    .ok_or_else(|| Error::Checkpoint("vocabulary lacks the <unk> row".into())),
                OovPolicy::Strict => Err(Error::OovToken {
                    token: surface.to_string(),
                }),
            },
        }
    }

    /// Full-width embedding of a vocabulary row.
    pub fn full_embedding(&self, row: usize) -> &[f64] {
        self.embeddings.row(row)
    }

    /// Decision-pathway embedding of a vocabulary row: the full embedding
    /// pushed through the reduction net when one is configured.
    pub fn reduced_embedding(&self, row: usize) -> Vec<f64> {
        let full = self.embeddings.row(row);
        match &self.bottleneck {
            Some(net) => net.forward(full),
            None => full.to_vec(),
        }
    }

    /// Decision-pathway embedding of a surface form.
    pub fn embed_token(&self, surface: &str) -> Result<Vec<f64>> {
        Ok(self.reduced_embedding(self.token_index(surface)?))
    }

    /// Merge score for two decision-pathway embeddings.
    pub fn score_pair(&self, l: &[f64], r: &[f64]) -> Result<f64> {
        score::score_pair(&self.score, self.config.resolved_tau(), l, r)
    }

    /// Embedding of a merged span on the decision pathway.
    pub fn combine_pair(&self, l: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        score::combine(self.config.combine, l, r)
    }

    /// Save as versioned JSON. Floating-point values survive the round trip
    /// exactly: the writer emits shortest-round-trip decimal forms.
    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string(&file)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Load a checkpoint, checking the format version and model invariants.
    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CheckpointFile = serde_json::from_str(&text)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: file.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let mut model = file.model;
        model.rebuild_index();
        model.validate()?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    model: EmbeddingModel,
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_vocab() -> Vec<String> {
        ["dog", "cat", "a", "runs"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn default_config_is_valid() {
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn validate_collects_all_problems() {
        let config = ModelConfig {
            d_full: 0,
            d_reduced: Some(3),
            score: ScoreKind::Mean,
            tau: Some(-2.0),
            ..ModelConfig::default()
        };
        match config.validate().unwrap_err() {
            Error::ConfigInvalid { problems } => {
                assert!(problems.len() >= 4, "{problems:?}");
                assert!(problems.iter().any(|p| p.contains("d_full")));
                assert!(problems.iter().any(|p| p.contains("1 or 2")));
                assert!(problems.iter().any(|p| p.contains("tau")));
                assert!(problems.iter().any(|p| p.contains("one-dimensional")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scalar_scorers_need_dim_one() {
        let bad = ModelConfig {
            score: ScoreKind::MeanHeadInitial,
            d_reduced: Some(2),
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let good = ModelConfig {
            score: ScoreKind::MeanHeadInitial,
            d_reduced: Some(1),
            ..ModelConfig::default()
        };
        good.validate().unwrap();
        assert_eq!(good.resolved_tau(), 20.0);
    }

    #[test]
    fn tau_on_mlp_is_rejected() {
        let config = ModelConfig {
            tau: Some(2.0),
            ..ModelConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn variant_labels_round_trip() {
        for s in ["512,mlp,l2sum", "1,ws,me", "2,ws,me", "1,m,me", "1,mhi,mx", "64,mlp,me"] {
            let config = ModelConfig::from_variant(s).unwrap();
            assert_eq!(config.variant(), s, "label changed for {s}");
        }
        let c = ModelConfig::from_variant("1,ws,me").unwrap();
        assert_eq!(c.d_reduced, Some(1));
        assert_eq!(c.d_full, 512);
        let c = ModelConfig::from_variant("64,mlp,me").unwrap();
        assert_eq!(c.d_reduced, None);
        assert_eq!(c.d_full, 64);
    }

    #[test]
    fn bad_variants_are_rejected() {
        assert!(ModelConfig::from_variant("1,ws").is_err());
        assert!(ModelConfig::from_variant("0,ws,me").is_err());
        assert!(ModelConfig::from_variant("1,nope,me").is_err());
        assert!(ModelConfig::from_variant("1,ws,nope").is_err());
        // Mean scorer at full width is invalid.
        assert!(ModelConfig::from_variant("512,m,l2sum").is_err());
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let config = ModelConfig {
            d_full: 8,
            ..ModelConfig::default()
        };
        let a = EmbeddingModel::init(config.clone(), small_vocab(), 42).unwrap();
        let b = EmbeddingModel::init(config.clone(), small_vocab(), 42).unwrap();
        assert_eq!(a, b);
        let c = EmbeddingModel::init(config, small_vocab(), 43).unwrap();
        assert_ne!(a.embeddings, c.embeddings);
    }

    #[test]
    fn embeddings_shared_across_scorer_choice() {
        let base = ModelConfig {
            d_full: 8,
            ..ModelConfig::default()
        };
        let ws = ModelConfig {
            score: ScoreKind::WeightedSum,
            ..base.clone()
        };
        let a = EmbeddingModel::init(base, small_vocab(), 7).unwrap();
        let b = EmbeddingModel::init(ws, small_vocab(), 7).unwrap();
        assert_eq!(a.embeddings, b.embeddings);
    }

    #[test]
    fn unk_policy_inserts_row() {
        let config = ModelConfig {
            d_full: 4,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(config, small_vocab(), 0).unwrap();
        assert!(m.vocab.contains(&UNK_TOKEN.to_string()));
        assert_eq!(m.vocab.len(), 5);
        let unk = m.token_index("zebra").unwrap();
        assert_eq!(m.vocab[unk], UNK_TOKEN);
        assert_ne!(m.token_index("dog").unwrap(), unk);
    }

    #[test]
    fn strict_policy_rejects_oov() {
        let config = ModelConfig {
            d_full: 4,
            oov: OovPolicy::Strict,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(config, small_vocab(), 0).unwrap();
        assert_eq!(m.vocab.len(), 4);
        assert!(matches!(
            m.token_index("zebra").unwrap_err(),
            Error::OovToken { .. }
        ));
    }

    #[test]
    fn reduction_pathway_shapes() {
        let config = ModelConfig {
            d_full: 16,
            d_reduced: Some(2),
            score: ScoreKind::WeightedSum,
            combine: CombineKind::Mean,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(config, small_vocab(), 1).unwrap();
        assert_eq!(m.full_embedding(0).len(), 16);
        assert_eq!(m.reduced_embedding(0).len(), 2);
        assert_eq!(m.embed_token("dog").unwrap().len(), 2);
    }

    #[test]
    fn no_reduction_means_identity() {
        let config = ModelConfig {
            d_full: 8,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(config, small_vocab(), 1).unwrap();
        let row = m.token_index("dog").unwrap();
        assert_eq!(m.reduced_embedding(row), m.full_embedding(row).to_vec());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let config = ModelConfig {
            d_full: 16,
            d_reduced: Some(1),
            score: ScoreKind::WeightedSum,
            combine: CombineKind::Mean,
            ..ModelConfig::default()
        };
        let m = EmbeddingModel::init(config, small_vocab(), 99).unwrap();
        m.save_checkpoint(&path).unwrap();
        let loaded = EmbeddingModel::load_checkpoint(&path).unwrap();
        assert_eq!(m, loaded);
    }

    #[test]
    fn checkpoint_version_is_checked() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = EmbeddingModel::init(
            ModelConfig {
                d_full: 4,
                ..ModelConfig::default()
            },
            small_vocab(),
            0,
        )
        .unwrap();
        m.save_checkpoint(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bumped = text.replacen("\"version\":1", "\"version\":99", 1);
        std::fs::write(&path, bumped).unwrap();
        assert!(matches!(
            EmbeddingModel::load_checkpoint(&path).unwrap_err(),
            Error::CheckpointVersion {
                found: 99,
                expected: CHECKPOINT_VERSION
            }
        ));
    }

    #[test]
    fn corrupt_checkpoint_shape_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = EmbeddingModel::init(
            ModelConfig {
                d_full: 4,
                ..ModelConfig::default()
            },
            small_vocab(),
            0,
        )
        .unwrap();
        let mut bad = m.clone();
        bad.vocab.push("extra".into());
        bad.save_checkpoint(&path).unwrap();
        assert!(EmbeddingModel::load_checkpoint(&path).is_err());
    }

    #[test]
    fn empty_vocab_rejected() {
        let config = ModelConfig {
            d_full: 4,
            oov: OovPolicy::Strict,
            ..ModelConfig::default()
        };
        assert!(matches!(
            EmbeddingModel::init(config, Vec::<String>::new(), 0).unwrap_err(),
            Error::EmptyVocab
        ));
    }
}
