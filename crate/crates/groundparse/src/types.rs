//! Tokens, spans, trees, and corpora — the shared vocabulary of every other
//! module.
//!
//! Span indices are 1-based and inclusive throughout. All file formats use
//! token offsets, never character offsets. Every type here is immutable after
//! construction and safe to share across parallel workers.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single token: non-empty surface form with an optional universal POS tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: Option<String>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(Error::BadToken { token: surface });
        }
        Ok(Token { surface, pos: None })
    }

    pub fn with_pos(surface: impl Into<String>, pos: impl Into<String>) -> Result<Self> {
        let mut t = Token::new(surface)?;
        t.pos = Some(pos.into());
        Ok(t)
    }
}

/// A tokenized sentence of length `n >= 1`. POS tags are all-or-none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    tokens: Vec<Token>,
}

impl Caption {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyCaption { line: 0 });
        }
        let tagged = tokens.iter().filter(|t| t.pos.is_some()).count();
        if tagged != 0 && tagged != tokens.len() {
            return Err(Error::PosMismatch {
                line: 0,
                expected: tokens.len(),
                got: tagged,
            });
        }
        Ok(Caption { tokens })
    }

    /// Build from whitespace-separated surfaces, without tags.
    pub fn from_line(line: &str) -> Result<Self> {
        let tokens = line
            .split_whitespace()
            .map(Token::new)
            .collect::<Result<Vec<_>>>()?;
        Caption::new(tokens)
    }

    pub fn n(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn has_pos(&self) -> bool {
        self.tokens.first().map_or(false, |t| t.pos.is_some())
    }

    pub fn text(&self) -> String {
        self.surfaces().join(" ")
    }
}

/// A constituent span `[i,j]`, 1-based inclusive.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Panics if `start` is 0 or `start > end`; bounds against a sentence
    /// length are checked where a length is known.
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start >= 1 && start <= end, "invalid span [{start},{end}]");
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_single(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// True when the two spans overlap without one containing the other.
    pub fn crosses(&self, other: &Span) -> bool {
        let overlap = self.start <= other.end && other.start <= self.end;
        overlap && !self.contains(other) && !other.contains(self)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// An unlabeled constituent set over a sentence of length `n`.
///
/// Always contains every single-token span and the full span `[1,n]`; the
/// span set is pairwise non-crossing. Parser output additionally satisfies
/// the binary-tree property (`2n - 1` spans).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanTree {
    n: usize,
    spans: BTreeSet<Span>,
}

impl SpanTree {
    /// Build from any set of extra spans; singletons and the full span are
    /// inserted automatically. Rejects out-of-bounds and crossing spans.
    pub fn new(n: usize, extra: impl IntoIterator<Item = Span>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyCaption { line: 0 });
        }
        let mut spans: BTreeSet<Span> = (1..=n).map(|i| Span::new(i, i)).collect();
        spans.insert(Span::new(1, n));
        for s in extra {
            if s.start < 1 || s.end > n {
                return Err(Error::SpanBounds {
                    i: s.start,
                    j: s.end,
                    n,
                });
            }
            spans.insert(s);
        }
        let tree = SpanTree { n, spans };
        tree.check_non_crossing()?;
        Ok(tree)
    }

    fn check_non_crossing(&self) -> Result<()> {
        let v: Vec<&Span> = self.spans.iter().collect();
        for (idx, a) in v.iter().enumerate() {
            for b in &v[idx + 1..] {
                if a.crosses(b) {
                    return Err(Error::Crossing { a: **a, b: **b });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spans(&self) -> &BTreeSet<Span> {
        &self.spans
    }

    pub fn contains(&self, span: &Span) -> bool {
        self.spans.contains(span)
    }

    /// True when the tree has exactly `2n - 1` spans.
    pub fn is_binary(&self) -> bool {
        self.spans.len() == 2 * self.n - 1
    }

    /// The span set with trivial spans (single tokens and `[1,n]`) removed
    /// when `include_trivial` is false.
    pub fn spans_filtered(&self, include_trivial: bool) -> BTreeSet<Span> {
        filter_spans(self.spans.iter().copied(), self.n, include_trivial)
    }

    /// Render as one bracketed line. Leaves are token surfaces when a
    /// caption is supplied, 1-based indices otherwise.
    pub fn to_bracket_line(&self, caption: Option<&Caption>) -> String {
        if let Some(c) = caption {
            debug_assert_eq!(c.n(), self.n);
        }
        let mut out = String::new();
        self.render_span(Span::new(1, self.n), caption, &mut out);
        out
    }

    fn render_span(&self, span: Span, caption: Option<&Caption>, out: &mut String) {
        if span.is_single() {
            match caption {
                Some(c) => out.push_str(&c.tokens()[span.start - 1].surface),
                None => out.push_str(&span.start.to_string()),
            }
            return;
        }
        out.push_str("( ");
        for child in self.children_of(span) {
            self.render_span(child, caption, out);
            out.push(' ');
        }
        out.push(')');
    }

    /// Maximal proper subspans of `span`, in left-to-right order. Positions
    /// not covered by any recorded subspan appear as singletons.
    pub fn children_of(&self, span: Span) -> Vec<Span> {
        let mut children = Vec::new();
        let mut pos = span.start;
        while pos <= span.end {
            // widest recorded span starting at pos that stays proper
            let best = self
                .spans
                .iter()
                .filter(|s| s.start == pos && s.end <= span.end && **s != span)
                .map(|s| s.end)
                .max()
                .unwrap_or(pos);
            children.push(Span::new(pos, best));
            pos = best + 1;
        }
        children
    }

    /// Parse one bracketed line produced by [`SpanTree::to_bracket_line`].
    ///
    /// With `indices` set, leaves must be the integers `1..=n` in order;
    /// otherwise leaves are arbitrary surfaces, returned alongside the tree.
    pub fn from_bracket_line(line: &str, indices: bool) -> Result<(Self, Option<Vec<String>>)> {
        let mut leaves: Vec<String> = Vec::new();
        let mut spans: Vec<Span> = Vec::new();
        let mut stack: Vec<usize> = Vec::new(); // start position of each open group
        for piece in line.split_whitespace() {
            match piece {
                "(" => stack.push(leaves.len() + 1),
                ")" => {
                    let start = stack.pop().ok_or_else(|| Error::TreeFormat {
                        line: 0,
                        msg: "unbalanced ')'".into(),
                    })?;
                    let end = leaves.len();
                    if end < start {
                        return Err(Error::TreeFormat {
                            line: 0,
                            msg: "empty group".into(),
                        });
                    }
                    spans.push(Span::new(start, end));
                }
                leaf => leaves.push(leaf.to_string()),
            }
        }
        if !stack.is_empty() {
            return Err(Error::TreeFormat {
                line: 0,
                msg: "unbalanced '('".into(),
            });
        }
        if leaves.is_empty() {
            return Err(Error::TreeFormat {
                line: 0,
                msg: "no tokens".into(),
            });
        }
        if indices {
            for (k, leaf) in leaves.iter().enumerate() {
                if leaf.parse::<usize>() != Ok(k + 1) {
                    return Err(Error::TreeFormat {
                        line: 0,
                        msg: format!("expected index {} at leaf, got {leaf:?}", k + 1),
                    });
                }
            }
        }
        let n = leaves.len();
        let tree = SpanTree::new(n, spans)?;
        let surfaces = if indices { None } else { Some(leaves) };
        Ok((tree, surfaces))
    }
}

/// Remove `[i,i]` spans and `[1,n]` unless `include_trivial` is set.
pub fn filter_spans(
    spans: impl IntoIterator<Item = Span>,
    n: usize,
    include_trivial: bool,
) -> BTreeSet<Span> {
    spans
        .into_iter()
        .filter(|s| include_trivial || (!s.is_single() && !(s.start == 1 && s.end == n)))
        .collect()
}

/// A labeled constituent of a gold tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledConstituent {
    pub span: Span,
    pub label: String,
}

/// A gold bracketed tree. Constituents are phrase-level brackets;
/// preterminal (POS) brackets are kept apart, flagged trivial by nature.
/// Gold trees need not be binary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTree {
    pub n: usize,
    /// Phrase brackets in pre-order (outermost first for equal spans).
    pub constituents: Vec<LabeledConstituent>,
    /// Innermost single-token POS brackets.
    pub preterminals: Vec<LabeledConstituent>,
    /// Leaf surfaces.
    pub tokens: Vec<String>,
}

impl LabeledTree {
    pub fn validate(&self) -> Result<()> {
        for c in self.constituents.iter().chain(&self.preterminals) {
            if c.span.start < 1 || c.span.end > self.n {
                return Err(Error::SpanBounds {
                    i: c.span.start,
                    j: c.span.end,
                    n: self.n,
                });
            }
        }
        let spans: Vec<Span> = self.constituents.iter().map(|c| c.span).collect();
        for (idx, a) in spans.iter().enumerate() {
            for b in &spans[idx + 1..] {
                if a.crosses(b) {
                    return Err(Error::Crossing { a: *a, b: *b });
                }
            }
        }
        Ok(())
    }

    /// Deduplicated constituent span set. With `include_trivial`, preterminal
    /// spans are included as well; otherwise trivial spans are dropped.
    pub fn span_set(&self, include_trivial: bool) -> BTreeSet<Span> {
        let mut all: BTreeSet<Span> = self.constituents.iter().map(|c| c.span).collect();
        if include_trivial {
            all.extend(self.preterminals.iter().map(|c| c.span));
        }
        filter_spans(all, self.n, include_trivial)
    }
}

/// A list of captions with optional parallel gold trees and scene features.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub captions: Vec<Caption>,
    pub gold: Option<Vec<LabeledTree>>,
    pub scenes: Option<Vec<Vec<f64>>>,
}

impl Corpus {
    pub fn new(captions: Vec<Caption>) -> Self {
        Corpus {
            captions,
            gold: None,
            scenes: None,
        }
    }

    pub fn with_gold(mut self, gold: Vec<LabeledTree>) -> Result<Self> {
        if gold.len() != self.captions.len() {
            return Err(Error::LengthMismatch {
                what: "gold trees",
                expected: self.captions.len(),
                got: gold.len(),
            });
        }
        for (c, g) in self.captions.iter().zip(&gold) {
            if c.n() != g.n {
                return Err(Error::LengthMismatch {
                    what: "gold tree token count",
                    expected: c.n(),
                    got: g.n,
                });
            }
        }
        self.gold = Some(gold);
        Ok(self)
    }

    pub fn with_scenes(mut self, scenes: Vec<Vec<f64>>) -> Result<Self> {
        if scenes.len() != self.captions.len() {
            return Err(Error::LengthMismatch {
                what: "scene features",
                expected: self.captions.len(),
                got: scenes.len(),
            });
        }
        self.scenes = Some(scenes);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }

    /// Unique token surfaces in sorted order.
    pub fn vocab(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .captions
            .iter()
            .flat_map(|c| c.tokens().iter().map(|t| t.surface.as_str()))
            .collect();
        set.into_iter().map(str::to_string).collect()
    }
}
