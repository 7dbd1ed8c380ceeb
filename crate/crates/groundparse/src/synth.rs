//! Synthetic caption corpus with gold trees, POS tags, scene features, and
//! a ground-truth concreteness table.
//!
//! Sentences come from a small fixed PCFG over a lexicon of 38 words.
//! Every lexicon entry carries a concreteness value in [0, 1]; concrete
//! nouns sit at the top, abstract nouns well below them, and function
//! words near zero. Scene vectors mirror what a caption depicts: one slot
//! per noun lexeme holding its concreteness (plus slight noise) when that
//! noun occurs in the caption, and trailing pure-noise dimensions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::error::Result;
use crate::types::{Caption, Corpus, LabeledConstituent, LabeledTree, Span, Token};

/// One lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexEntry {
    pub surface: &'static str,
    pub pos: &'static str,
    pub concreteness: f64,
}

const fn lex(surface: &'static str, pos: &'static str, concreteness: f64) -> LexEntry {
    LexEntry {
        surface,
        pos,
        concreteness,
    }
}

/// Concreteness at or above this marks a concrete noun.
pub const CONCRETE_THRESHOLD: f64 = 0.7;

/// The full lexicon. Noun entries (NOUN and PROPN) come first and their
/// order fixes the scene-slot layout.
pub const LEXICON: &[LexEntry] = &[
    // Concrete nouns.
    lex("elephant", "NOUN", 1.00),
    lex("giraffe", "NOUN", 0.98),
    lex("dog", "NOUN", 0.96),
    lex("cat", "NOUN", 0.94),
    lex("ball", "NOUN", 0.92),
    lex("car", "NOUN", 0.90),
    lex("tree", "NOUN", 0.88),
    lex("pizza", "NOUN", 0.86),
    lex("bird", "NOUN", 0.84),
    lex("boat", "NOUN", 0.82),
    lex("horse", "NOUN", 0.80),
    lex("cup", "NOUN", 0.78),
    // Proper names.
    lex("rex", "PROPN", 0.75),
    lex("momo", "PROPN", 0.72),
    // Abstract nouns.
    lex("idea", "NOUN", 0.30),
    lex("plan", "NOUN", 0.28),
    lex("story", "NOUN", 0.26),
    lex("thought", "NOUN", 0.24),
    lex("reason", "NOUN", 0.22),
    lex("dream", "NOUN", 0.20),
    // Verbs.
    lex("sees", "VERB", 0.48),
    lex("chases", "VERB", 0.46),
    lex("finds", "VERB", 0.44),
    lex("likes", "VERB", 0.42),
    lex("wants", "VERB", 0.40),
    lex("describes", "VERB", 0.38),
    // Adjectives.
    lex("big", "ADJ", 0.35),
    lex("small", "ADJ", 0.32),
    lex("red", "ADJ", 0.29),
    lex("old", "ADJ", 0.26),
    lex("vague", "ADJ", 0.18),
    lex("strange", "ADJ", 0.15),
    // Adverbs.
    lex("very", "ADV", 0.10),
    lex("quite", "ADV", 0.08),
    // Prepositions.
    lex("on", "ADP", 0.09),
    lex("near", "ADP", 0.05),
    // Determiners.
    lex("the", "DET", 0.07),
    lex("a", "DET", 0.06),
];

/// Lexicon entries whose occurrences get a scene slot, in slot order.
pub fn noun_entries() -> Vec<&'static LexEntry> {
    LEXICON
        .iter()
        .filter(|e| e.pos == "NOUN" || e.pos == "PROPN")
        .collect()
}

/// `(token, concreteness)` pairs for the whole lexicon.
pub fn concreteness_table() -> Vec<(String, f64)> {
    LEXICON
        .iter()
        .map(|e| (e.surface.to_string(), e.concreteness))
        .collect()
}

/// Generation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Number of captions.
    pub size: usize,
    pub seed: u64,
    /// Pure-noise dimensions appended to each scene vector.
    pub noise_dims: usize,
    /// Standard deviation of scene noise.
    pub scene_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            size: 1000,
            seed: 0,
            noise_dims: 4,
            scene_noise: 0.01,
        }
    }
}

/// A generated corpus and the table its rewards are defined by.
#[derive(Debug, Clone)]
pub struct SynthBundle {
    /// Captions with POS tags, gold trees, and scene vectors.
    pub corpus: Corpus,
    pub concreteness: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy)]
enum Sym {
    S,
    Np,
    Nbar,
    AdjP,
    Vp,
    Pp,
    Det,
    Noun,
    PropN,
    Adj,
    Adv,
    Verb,
    Prep,
}

impl Sym {
    fn label(self) -> Option<&'static str> {
        match self {
            Sym::S => Some("S"),
            Sym::Np => Some("NP"),
            Sym::Nbar => Some("NBAR"),
            Sym::AdjP => Some("ADJP"),
            Sym::Vp => Some("VP"),
            Sym::Pp => Some("PP"),
            _ => None,
        }
    }

    fn word_class(self) -> Option<&'static str> {
        match self {
            Sym::Det => Some("DET"),
            Sym::Noun => Some("NOUN"),
            Sym::PropN => Some("PROPN"),
            Sym::Adj => Some("ADJ"),
            Sym::Adv => Some("ADV"),
            Sym::Verb => Some("VERB"),
            Sym::Prep => Some("ADP"),
            _ => None,
        }
    }
}

/// Expansion probabilities.
fn expand_rule(sym: Sym, u: f64) -> Vec<Sym> {
    match sym {
        Sym::S => {
            if u < 0.8 {
                vec![Sym::Np, Sym::Vp]
            } else {
                vec![Sym::PropN, Sym::Vp]
            }
        }
        Sym::Np => {
            if u < 0.55 {
                vec![Sym::Det, Sym::Noun]
            } else {
                vec![Sym::Det, Sym::Nbar]
            }
        }
        Sym::Nbar => {
            if u < 0.65 {
                vec![Sym::Adj, Sym::Noun]
            } else {
                vec![Sym::AdjP, Sym::Noun]
            }
        }
        Sym::AdjP => vec![Sym::Adv, Sym::Adj],
        Sym::Vp => {
            if u < 0.5 {
                vec![Sym::Verb, Sym::Np]
            } else if u < 0.75 {
                vec![Sym::Verb, Sym::Pp]
            } else {
                vec![Sym::Verb, Sym::PropN]
            }
        }
        Sym::Pp => vec![Sym::Prep, Sym::Np],
        _ => unreachable!("terminals are not expanded"),
    }
}

struct Growing {
    tokens: Vec<Token>,
    constituents: Vec<LabeledConstituent>,
    preterminals: Vec<LabeledConstituent>,
}

fn expand(sym: Sym, rng: &mut ChaCha8Rng, out: &mut Growing) {
    if let Some(class) = sym.word_class() {
        let choices: Vec<&LexEntry> = LEXICON.iter().filter(|e| e.pos == class).collect();
        let entry = choices[rng.random_range(0..choices.len())];
        out.tokens
            .push(Token::with_pos(entry.surface, entry.pos).expect("lexicon surfaces are valid"));
        let i = out.tokens.len();
        out.preterminals.push(LabeledConstituent {
            span: Span::new(i, i),
            label: class.to_string(),
        });
        return;
    }
    let label = sym.label().expect("non-terminal");
    let slot = out.constituents.len();
    out.constituents.push(LabeledConstituent {
        span: Span::new(usize::MAX - 1, usize::MAX - 1),
        label: label.to_string(),
    });
    let start = out.tokens.len() + 1;
    let u = rng.random::<f64>();
    for child in expand_rule(sym, u) {
        expand(child, rng, out);
    }
    out.constituents[slot].span = Span::new(start, out.tokens.len());
}

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generate a corpus. Deterministic in the configuration.
pub fn generate(config: &SynthConfig) -> Result<SynthBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nouns = noun_entries();
    let mut captions = Vec::with_capacity(config.size);
    let mut gold = Vec::with_capacity(config.size);
    let mut scenes = Vec::with_capacity(config.size);

    for _ in 0..config.size {
        let mut grow = Growing {
            tokens: Vec::new(),
            constituents: Vec::new(),
            preterminals: Vec::new(),
        };
        expand(Sym::S, &mut rng, &mut grow);

        let tree = LabeledTree {
            n: grow.tokens.len(),
            constituents: grow.constituents,
            preterminals: grow.preterminals,
            tokens: grow.tokens.iter().map(|t| t.surface.clone()).collect(),
        };
        tree.validate()?;

        let mut scene = vec![0.0; nouns.len() + config.noise_dims];
        for (slot, entry) in nouns.iter().enumerate() {
            if grow.tokens.iter().any(|t| t.surface == entry.surface) {
                scene[slot] = entry.concreteness + config.scene_noise * gaussian(&mut rng);
            }
        }
        for k in 0..config.noise_dims {
            scene[nouns.len() + k] = config.scene_noise * gaussian(&mut rng);
        }

        captions.push(Caption::new(grow.tokens)?);
        gold.push(tree);
        scenes.push(scene);
    }

    let corpus = Corpus::new(captions)
        .with_gold(gold)?
        .with_scenes(scenes)?;
    Ok(SynthBundle {
        corpus,
        concreteness: concreteness_table(),
    })
}
