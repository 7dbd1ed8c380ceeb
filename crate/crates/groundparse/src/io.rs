//! File formats: caption text, POS sidecars, scene vectors, norm tables,
//! and per-line bracketed tree output.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::types::{Caption, SpanTree, Token};

/// Sidecar path for a caption file: the `.pos` suffix is appended to the
/// full file name (`captions.txt` pairs with `captions.txt.pos`).
pub fn pos_sidecar_path(captions: impl AsRef<Path>) -> PathBuf {
    let p = captions.as_ref();
    let mut name = p.file_name().map(|s| s.to_owned()).unwrap_or_default();
    name.push(".pos");
    p.with_file_name(name)
}

/// Read whitespace-tokenized captions, one per line. If a `.pos` sidecar
/// exists next to the file, its tags are attached token-for-token; line or
/// token count mismatches are errors. Empty caption lines are errors and
/// are reported with their 1-based line number.
pub fn read_captions(path: impl AsRef<Path>) -> Result<Vec<Caption>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sidecar = pos_sidecar_path(path);
    let tags: Option<Vec<Vec<String>>> = if sidecar.exists() {
        let pos_text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        Some(
            pos_text
                .lines()
                .map(|l| l.split_whitespace().map(str::to_owned).collect())
                .collect(),
        )
    } else {
        None
    };

    let lines: Vec<&str> = text.lines().collect();
    if let Some(tags) = &tags {
        if tags.len() != lines.len() {
            return Err(Error::PosLineCount {
                expected: lines.len(),
                got: tags.len(),
            });
        }
    }

    let mut captions = Vec::with_capacity(lines.len());
    for (k, line) in lines.iter().enumerate() {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            return Err(Error::EmptyCaption { line: k + 1 });
        }
        let tokens: Vec<Token> = match &tags {
            Some(tags) => {
                let row = &tags[k];
                if row.len() != words.len() {
                    return Err(Error::PosMismatch {
                        line: k + 1,
                        expected: words.len(),
                        got: row.len(),
                    });
                }
                words
                    .iter()
                    .zip(row)
                    .map(|(w, t)| Token::with_pos(*w, t))
                    .collect::<Result<_>>()?
            }
            None => words.iter().map(|w| Token::new(*w)).collect::<Result<_>>()?,
        };
        captions.push(Caption::new(tokens)?);
    }
    Ok(captions)
}

/// Write captions one per line, and a `.pos` sidecar when tags are present.
pub fn write_captions(path: impl AsRef<Path>, captions: &[Caption]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for c in captions {
        text.push_str(&c.text());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    if captions.iter().all(|c| c.has_pos()) && !captions.is_empty() {
        let sidecar = pos_sidecar_path(path);
        let mut pos_text = String::new();
        for c in captions {
            let tags: Vec<&str> = c
                .tokens()
                .iter()
                .map(|t| t.pos.as_deref().unwrap())
                .collect();
            pos_text.push_str(&tags.join(" "));
            pos_text.push('\n');
        }
        fs::write(&sidecar, pos_text).map_err(|e| Error::io(&sidecar, e))?;
    }
    Ok(())
}

/// Read scene vectors, one whitespace-separated row of floats per line.
/// All rows must have the same width.
pub fn read_scenes(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::TreeFormat {
                    line: k + 1,
                    msg: format!("bad scene value {s:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::LengthMismatch {
                    what: "scene vector width",
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Write scene vectors, one row per line.
pub fn write_scenes(path: impl AsRef<Path>, scenes: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for row in scenes {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        text.push_str(&cells.join(" "));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Read a token-score table: `token<TAB>score`, one per line.
pub fn read_norms(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (token, score) = line.split_once('\t').ok_or_else(|| Error::TreeFormat {
            line: k + 1,
            msg: "expected token<TAB>score".into(),
        })?;
        let score: f64 = score.trim().parse().map_err(|_| Error::TreeFormat {
            line: k + 1,
            msg: format!("bad score {score:?}"),
        })?;
        out.push((token.to_owned(), score));
    }
    Ok(out)
}

/// Write a token-score table in `read_norms` format.
pub fn write_norms(path: impl AsRef<Path>, norms: &[(String, f64)]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for (token, score) in norms {
        text.push_str(&format!("{token}\t{score}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Render parses one per line. With `surfaces` set, leaves are caption
/// tokens; otherwise 1-based token indices.
pub fn write_parses(
    path: impl AsRef<Path>,
    trees: &[SpanTree],
    captions: Option<&[Caption]>,
    surfaces: bool,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(caps) = captions {
        if caps.len() != trees.len() {
            return Err(Error::LengthMismatch {
                what: "captions for parse output",
                expected: trees.len(),
                got: caps.len(),
            });
        }
    }
    let mut text = String::new();
    for (k, tree) in trees.iter().enumerate() {
        let cap = if surfaces {
            Some(captions.ok_or(Error::MissingPos).map(|c| &c[k])?)
        } else {
            None
        };
        text.push_str(&tree.to_bracket_line(cap));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Read parses written by [`write_parses`]. Leaves may be indices or
/// surfaces; each line must be a well-formed bracketing.
pub fn read_parses(path: impl AsRef<Path>) -> Result<Vec<SpanTree>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let (tree, _) = SpanTree::from_bracket_line(line, false).map_err(|e| match e {
            Error::TreeFormat { msg, .. } => Error::TreeFormat { line: k + 1, msg },
            other => other,
        })?;
        out.push(tree);
    }
    Ok(out)
}
