//! Reader and writer for PTB-style bracketed treebanks, one tree per line.
//!
//! `(S (NP (DT a) (NN dog)) (VP (VBZ runs)))` yields phrase constituents
//! `{S:[1,3], NP:[1,2], VP:[3,3]}` plus the DT/NN/VBZ preterminals.
//! Gold trees are not required to be binary.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{LabeledConstituent, LabeledTree, Span};

/// Parse a treebank file. Errors carry the 1-based line number and, for
/// syntax problems, the character offset within the line.
pub fn read_treebank(path: impl AsRef<Path>) -> Result<Vec<LabeledTree>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut trees = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let tree = parse_tree_line(line).map_err(|e| match e {
            Error::Treebank { offset, msg, .. } => Error::Treebank {
                line: k + 1,
                offset,
                msg,
            },
            other => other,
        })?;
        trees.push(tree);
    }
    Ok(trees)
}

/// Serialize trees back to bracketed lines.
pub fn write_treebank(trees: &[LabeledTree]) -> Result<String> {
    let mut out = String::new();
    for t in trees {
        out.push_str(&tree_to_line(t)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug)]
enum RawNode {
    Terminal(String),
    Inner { label: String, children: Vec<RawNode> },
}

struct Parser<'a> {
    chars: Vec<(usize, char)>, // (byte offset, char)
    pos: usize,
    line: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        let offset = self
            .chars
            .get(self.pos)
            .map(|(o, _)| *o)
            .unwrap_or(self.line.len());
        Error::Treebank {
            line: 0,
            offset,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some((_, c)) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn atom(&mut self) -> String {
        let start = self.pos;
        while matches!(self.chars.get(self.pos), Some((_, c)) if !c.is_whitespace() && *c != '(' && *c != ')')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().map(|(_, c)| c).collect()
    }

    fn node(&mut self) -> Result<RawNode> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                self.skip_ws();
                let label = self.atom();
                if label.is_empty() {
                    return Err(self.err("missing node label"));
                }
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        Some('(') => children.push(self.node()?),
                        Some(_) => {
                            let word = self.atom();
                            children.push(RawNode::Terminal(word));
                        }
                        None => return Err(self.err("unbalanced: expected ')'")),
                    }
                }
                if children.is_empty() {
                    return Err(self.err(format!("node {label:?} has no children")));
                }
                Ok(RawNode::Inner { label, children })
            }
            Some(c) => Err(self.err(format!("expected '(', found {c:?}"))),
            None => Err(self.err("empty tree")),
        }
    }
}

/// Parse a single bracketed tree. Errors carry a character offset; the
/// line number is zero and is filled in by [`read_treebank`].
pub fn parse_tree_line(line: &str) -> Result<LabeledTree> {
    let mut p = Parser {
        chars: line.char_indices().collect(),
        pos: 0,
        line,
    };
    p.skip_ws();
    if p.peek().is_none() {
        return Err(p.err("empty tree"));
    }
    let root = p.node()?;
    p.skip_ws();
    if p.peek().is_some() {
        return Err(p.err("trailing content after tree"));
    }

    let mut tokens = Vec::new();
    let mut constituents = Vec::new();
    let mut preterminals = Vec::new();
    collect(&root, &mut tokens, &mut constituents, &mut preterminals)?;
    let tree = LabeledTree {
        n: tokens.len(),
        constituents,
        preterminals,
        tokens,
    };
    tree.validate()?;
    Ok(tree)
}

/// Pre-order walk; returns the span covered by `node`. A bracket whose single
/// child is a bare terminal is a preterminal; everything else is a phrase
/// constituent.
fn collect(
    node: &RawNode,
    tokens: &mut Vec<String>,
    constituents: &mut Vec<LabeledConstituent>,
    preterminals: &mut Vec<LabeledConstituent>,
) -> Result<Span> {
    match node {
        RawNode::Terminal(word) => {
            tokens.push(word.clone());
            let i = tokens.len();
            Ok(Span::new(i, i))
        }
        RawNode::Inner { label, children } => {
            if children.len() == 1 {
                if let RawNode::Terminal(word) = &children[0] {
                    tokens.push(word.clone());
                    let i = tokens.len();
                    let span = Span::new(i, i);
                    preterminals.push(LabeledConstituent {
                        span,
                        label: label.clone(),
                    });
                    return Ok(span);
                }
            }
            // Reserve the slot now so equal spans stay outermost-first.
            let slot = constituents.len();
            constituents.push(LabeledConstituent {
                span: Span::new(usize::MAX - 1, usize::MAX - 1),
                label: label.clone(),
            });
            let start = tokens.len() + 1;
            for child in children {
                collect(child, tokens, constituents, preterminals)?;
            }
            let span = Span::new(start, tokens.len());
            constituents[slot].span = span;
            Ok(span)
        }
    }
}

fn tree_to_line(tree: &LabeledTree) -> Result<String> {
    if tree.constituents.is_empty() {
        // A bare preterminal tree like `(A a)`.
        if tree.n == 1 && tree.preterminals.len() == 1 {
            return Ok(format!(
                "({} {})",
                tree.preterminals[0].label, tree.tokens[0]
            ));
        }
        return Err(Error::TreeFormat {
            line: 0,
            msg: "tree has no constituents".into(),
        });
    }
    // Order: by start ascending, then end descending; stable so that equal
    // spans keep their recorded outer-to-inner order.
    let mut order: Vec<usize> = (0..tree.constituents.len()).collect();
    order.sort_by_key(|&k| {
        let s = tree.constituents[k].span;
        (s.start, std::cmp::Reverse(s.end))
    });
    let root_span = tree.constituents[order[0]].span;
    if root_span.start != 1 || root_span.end != tree.n {
        return Err(Error::TreeFormat {
            line: 0,
            msg: "tree has no root bracket spanning the whole sentence".into(),
        });
    }
    let pre: Vec<Option<&str>> = {
        let mut v = vec![None; tree.n];
        for p in &tree.preterminals {
            v[p.span.start - 1].get_or_insert(p.label.as_str());
        }
        v
    };
    let mut cursor = 0usize;
    let mut out = String::new();
    emit(tree, &order, &mut cursor, &pre, &mut out);
    Ok(out)
}

fn emit(
    tree: &LabeledTree,
    order: &[usize],
    cursor: &mut usize,
    pre: &[Option<&str>],
    out: &mut String,
) {
    let me = order[*cursor];
    *cursor += 1;
    let span = tree.constituents[me].span;
    out.push('(');
    out.push_str(&tree.constituents[me].label);
    let mut pos = span.start;
    while pos <= span.end {
        out.push(' ');
        // Does the next constituent in order start here and nest inside us?
        let next_starts_here = order.get(*cursor).map_or(false, |&k| {
            let s = tree.constituents[k].span;
            s.start == pos && s.end <= span.end
        });
        if next_starts_here {
            let child_span = tree.constituents[order[*cursor]].span;
            emit(tree, order, cursor, pre, out);
            pos = child_span.end + 1;
        } else {
            match pre[pos - 1] {
                Some(tag) => {
                    out.push('(');
                    out.push_str(tag);
                    out.push(' ');
                    out.push_str(&tree.tokens[pos - 1]);
                    out.push(')');
                }
                None => out.push_str(&tree.tokens[pos - 1]),
            }
            pos += 1;
        }
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn spans(tree: &LabeledTree) -> Vec<(&str, usize, usize)> {
        tree.constituents
            .iter()
            .map(|c| (c.label.as_str(), c.span.start, c.span.end))
            .collect()
    }

    #[test]
    fn basic_tree() {
        let t = parse_tree_line("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))").unwrap();
        assert_eq!(t.n, 3);
        assert_eq!(t.tokens, vec!["a", "dog", "runs"]);
        assert_eq!(spans(&t), vec![("S", 1, 3), ("NP", 1, 2), ("VP", 3, 3)]);
        let pre: Vec<&str> = t.preterminals.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(pre, vec!["DT", "NN", "VBZ"]);
    }

    #[test]
    fn single_token_tree() {
        let t = parse_tree_line("(X (A a))").unwrap();
        assert_eq!(spans(&t), vec![("X", 1, 1)]);
        assert_eq!(t.preterminals.len(), 1);
        assert_eq!(t.preterminals[0].label, "A");
    }

    #[test]
    fn unbalanced_is_error_with_offset() {
        let e = parse_tree_line("(S (A a) (B b)").unwrap_err();
        match e {
            Error::Treebank { offset, msg, .. } => {
                assert_eq!(offset, 14);
                assert!(msg.contains("unbalanced"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_line_is_error() {
        assert!(parse_tree_line("").is_err());
        assert!(parse_tree_line("   ").is_err());
    }

    #[test]
    fn round_trip_preserves_span_set() {
        let lines = [
            "(S (NP (DT a) (NN dog)) (VP (VBZ runs)))",
            "(S (NP (NP (DT the) (NN dog)) (PP (IN on) (NP (DT a) (NN mat)))) (VP (VBZ sleeps)))",
            "(TOP (S (NP (PRP it)) (VP (VBZ is) (ADJP (JJ red)))))",
            "(X (A a))",
        ];
        for line in lines {
            let t = parse_tree_line(line).unwrap();
            let re = tree_to_line(&t).unwrap();
            let t2 = parse_tree_line(&re).unwrap();
            let set1: BTreeSet<_> = t.constituents.iter().map(|c| c.span).collect();
            let set2: BTreeSet<_> = t2.constituents.iter().map(|c| c.span).collect();
            assert_eq!(set1, set2, "span set changed for {line}");
            assert_eq!(t.tokens, t2.tokens);
        }
    }

    #[test]
    fn unary_chain_spans_deduplicate_in_span_set() {
        let t = parse_tree_line("(S (NP (NP (NN dogs))) (VP (VBP run)))").unwrap();
        // NP:[1,1] twice plus S:[1,2], VP:[2,2]
        assert_eq!(t.constituents.len(), 4);
        let set = t.span_set(true);
        assert_eq!(set.len(), 3); // [1,1], [2,2], [1,2]
        let nontrivial = t.span_set(false);
        assert!(nontrivial.is_empty());
    }

    #[test]
    fn non_binary_gold_ingests() {
        let t = parse_tree_line("(S (NP (DT a) (JJ big) (NN dog)) (VBZ runs))").unwrap();
        assert_eq!(spans(&t), vec![("S", 1, 4), ("NP", 1, 3)]);
    }
}
