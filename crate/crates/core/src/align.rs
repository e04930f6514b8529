//! Alignment of consecutive edit scripts within a chunk.
//!
//! Script `i` of a chunk turns version `i` into version `i + 1`. Every real
//! difference marks a token range on the version it touches: deletes mark the
//! old side, inserts mark the new side. Marks travel across scripts through
//! the version two neighbouring scripts share, but only through common text:
//! a forward sweep carries them from the first version to the last, a
//! backward sweep carries them back. Wherever a mark then covers common text
//! of a script, that text is split off as a pseudo-difference (a delete and
//! an insert with identical tokens, both flagged `pseudo`).
//!
//! Equal spans are only ever split, never merged, so the work is linear in
//! the number of changes and marks of the chunk.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{Change, EditScript, Op, VersionId};

/// An edit script after alignment; pseudo-differences carry `pseudo = true`.
pub type AlignedScript = EditScript;

pub const DEFAULT_CHUNK_SIZE: usize = 10;
/// Sites are capped at 100 versions, so no chunk can hold more scripts.
pub const MAX_CHUNK_SIZE: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error("chunk size {0} is invalid: use 0 (no alignment) or 2..={MAX_CHUNK_SIZE}")]
    InvalidChunkSize(usize),
    #[error("chunk of {len} scripts exceeds chunk size {chunk_size}")]
    ChunkTooLarge { len: usize, chunk_size: usize },
    #[error(
        "scripts do not chain: new side of {first_old}->{first_new} differs from old side of \
         {second_old}->{second_new} at token {offset}"
    )]
    ChainMismatch {
        first_old: VersionId,
        first_new: VersionId,
        second_old: VersionId,
        second_new: VersionId,
        offset: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentConfig {
    chunk_size: usize,
}

impl AlignmentConfig {
    pub fn new(chunk_size: usize) -> Result<Self, AlignError> {
        if chunk_size == 1 || chunk_size > MAX_CHUNK_SIZE {
            return Err(AlignError::InvalidChunkSize(chunk_size));
        }
        Ok(AlignmentConfig { chunk_size })
    }

    /// Chunk size 0: scripts pass through untouched.
    pub fn disabled() -> Self {
        AlignmentConfig { chunk_size: 0 }
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    pub fn is_disabled(&self) -> bool {
        self.chunk_size == 0
    }
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

/// Splits a site's scripts into consecutive chunks of `chunk_size` and
/// aligns each chunk on its own.
pub fn align_site(
    scripts: &[EditScript],
    config: AlignmentConfig,
) -> Result<Vec<AlignedScript>, AlignError> {
    if config.is_disabled() {
        return Ok(scripts.to_vec());
    }
    let mut out = Vec::with_capacity(scripts.len());
    for chunk in scripts.chunks(config.chunk_size) {
        out.extend(align_chunk(chunk, config)?);
    }
    Ok(out)
}

pub fn align_chunk(
    scripts: &[EditScript],
    config: AlignmentConfig,
) -> Result<Vec<AlignedScript>, AlignError> {
    if config.is_disabled() {
        return Ok(scripts.to_vec());
    }
    if scripts.len() > config.chunk_size {
        return Err(AlignError::ChunkTooLarge {
            len: scripts.len(),
            chunk_size: config.chunk_size,
        });
    }
    check_chain(scripts)?;
    if scripts.len() < 2 {
        return Ok(scripts.to_vec());
    }

    let views: Vec<Vec<Segment>> = scripts.iter().map(segments).collect();
    let versions = scripts.len() + 1;
    let mut marks: Vec<Vec<Span>> = vec![Vec::new(); versions];
    for (i, segs) in views.iter().enumerate() {
        for seg in segs {
            if let Segment::Real {
                old,
                del,
                new,
                ins,
                ..
            } = *seg
            {
                if del > 0 {
                    marks[i].push(Span::new(old, old + del));
                }
                if ins > 0 {
                    marks[i + 1].push(Span::new(new, new + ins));
                }
            }
        }
    }
    for m in &mut marks {
        normalize(m);
    }

    for i in 0..scripts.len() {
        let carried = carry(&marks[i], &views[i], Direction::Forward);
        marks[i + 1].extend(carried);
        normalize(&mut marks[i + 1]);
    }
    for i in (0..scripts.len()).rev() {
        let carried = carry(&marks[i + 1], &views[i], Direction::Backward);
        marks[i].extend(carried);
        normalize(&mut marks[i]);
    }

    Ok(scripts
        .iter()
        .zip(&views)
        .zip(&marks)
        .map(|((script, segs), old_marks)| split_script(script, segs, old_marks))
        .collect())
}

fn check_chain(scripts: &[EditScript]) -> Result<(), AlignError> {
    for pair in scripts.windows(2) {
        let produced = side_tokens(&pair[0], Op::Insert);
        let consumed = side_tokens(&pair[1], Op::Delete);
        let offset = produced
            .iter()
            .zip(&consumed)
            .position(|(a, b)| a != b)
            .or_else(|| (produced.len() != consumed.len()).then(|| produced.len().min(consumed.len())));
        if let Some(offset) = offset {
            return Err(AlignError::ChainMismatch {
                first_old: pair[0].old_version_id,
                first_new: pair[0].new_version_id,
                second_old: pair[1].old_version_id,
                second_new: pair[1].new_version_id,
                offset,
            });
        }
    }
    Ok(())
}

fn side_tokens(script: &EditScript, side: Op) -> Vec<&str> {
    script
        .changes
        .iter()
        .filter(|c| c.op == Op::Equal || c.op == side)
        .flat_map(|c| c.tokens.iter().map(|t| t.text.as_str()))
        .collect()
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Span {
    start: usize,
    end: usize,
}

impl Span {
    fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

/// Sorts spans and unions the overlapping ones; touching spans stay apart.
fn normalize(spans: &mut Vec<Span>) {
    spans.retain(|s| s.start < s.end);
    spans.sort_unstable();
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for s in spans.drain(..) {
        match out.last_mut() {
            Some(last) if s.start < last.end => last.end = last.end.max(s.end),
            _ => out.push(s),
        }
    }
    *spans = out;
}

/// Coordinates of one script, with each edit block collapsed into one entry.
#[derive(Debug, Clone, Copy)]
enum Segment {
    Equal {
        old: usize,
        new: usize,
        len: usize,
        change: usize,
    },
    Pseudo {
        old: usize,
        new: usize,
        len: usize,
    },
    Real {
        old: usize,
        del: usize,
        new: usize,
        ins: usize,
    },
}

fn segments(script: &EditScript) -> Vec<Segment> {
    let mut out = Vec::with_capacity(script.changes.len());
    let (mut old, mut new) = (0usize, 0usize);
    let changes = &script.changes;
    let mut i = 0;
    while i < changes.len() {
        let c = &changes[i];
        match c.op {
            Op::Equal => {
                out.push(Segment::Equal {
                    old,
                    new,
                    len: c.len(),
                    change: i,
                });
                old += c.len();
                new += c.len();
                i += 1;
            }
            Op::Delete
                if c.pseudo
                    && changes
                        .get(i + 1)
                        .is_some_and(|n| n.op == Op::Insert && n.pseudo && n.tokens == c.tokens) =>
            {
                out.push(Segment::Pseudo {
                    old,
                    new,
                    len: c.len(),
                });
                old += c.len();
                new += c.len();
                i += 2;
            }
            _ => {
                let (o, n) = (old, new);
                let (mut del, mut ins) = (0, 0);
                while let Some(c) = changes.get(i) {
                    let pseudo_pair = c.pseudo
                        && c.op == Op::Delete
                        && changes
                            .get(i + 1)
                            .is_some_and(|n| n.op == Op::Insert && n.pseudo && n.tokens == c.tokens);
                    match c.op {
                        Op::Delete if !pseudo_pair => del += c.len(),
                        Op::Insert => ins += c.len(),
                        _ => break,
                    }
                    i += 1;
                }
                old += del;
                new += ins;
                out.push(Segment::Real {
                    old: o,
                    del,
                    new: n,
                    ins,
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

/// Maps marks through the common text (equal or pseudo) of one script.
/// Parts of a mark that fall on a real difference are absorbed.
fn carry(marks: &[Span], segs: &[Segment], dir: Direction) -> Vec<Span> {
    let mut out = Vec::new();
    let mut mi = 0;
    for seg in segs {
        let (old, new, len) = match *seg {
            Segment::Equal { old, new, len, .. } | Segment::Pseudo { old, new, len } => (old, new, len),
            Segment::Real { .. } => continue,
        };
        let (from, to) = match dir {
            Direction::Forward => (old, new),
            Direction::Backward => (new, old),
        };
        let seg_end = from + len;
        while mi < marks.len() && marks[mi].end <= from {
            mi += 1;
        }
        let mut j = mi;
        while j < marks.len() && marks[j].start < seg_end {
            let s = marks[j].start.max(from);
            let e = marks[j].end.min(seg_end);
            if s < e {
                out.push(Span::new(s - from + to, e - from + to));
            }
            j += 1;
        }
    }
    out
}

fn split_script(script: &EditScript, segs: &[Segment], old_marks: &[Span]) -> AlignedScript {
    let mut changes: Vec<Change> = Vec::with_capacity(script.changes.len());
    let mut emitted = 0;
    let mut mi = 0;
    for seg in segs {
        let Segment::Equal {
            old, len, change, ..
        } = *seg
        else {
            continue;
        };
        changes.extend(script.changes[emitted..change].iter().cloned());
        emitted = change + 1;

        let tokens = &script.changes[change].tokens;
        let end = old + len;
        while mi < old_marks.len() && old_marks[mi].end <= old {
            mi += 1;
        }
        let mut cursor = old;
        let mut j = mi;
        while j < old_marks.len() && old_marks[j].start < end {
            let s = old_marks[j].start.max(old);
            let e = old_marks[j].end.min(end);
            if cursor < s {
                changes.push(Change::new(Op::Equal, tokens[cursor - old..s - old].to_vec()));
            }
            let piece = tokens[s - old..e - old].to_vec();
            changes.push(Change {
                op: Op::Delete,
                tokens: piece.clone(),
                pseudo: true,
            });
            changes.push(Change {
                op: Op::Insert,
                tokens: piece,
                pseudo: true,
            });
            cursor = e;
            j += 1;
        }
        if cursor < end {
            changes.push(Change::new(Op::Equal, tokens[cursor - old..].to_vec()));
        }
    }
    changes.extend(script.changes[emitted..].iter().cloned());
    EditScript {
        changes,
        ..script.clone()
    }
}
