//! Token-level edit scripts between consecutive page versions.
//!
//! Every distinct token is interned to a `u32` symbol and the symbol
//! sequences are diffed with Myers' linear-space bisection, trimming common
//! prefixes and suffixes first. The search is bounded by a wall-clock
//! budget; once it is spent, the remaining sub-problems collapse to a plain
//! delete/insert pair, which is always a valid (if coarser) script.

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::tokenize::{Token, TokenStream};

pub const DEFAULT_BUDGET: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VersionId(pub u32);

impl fmt::Display for VersionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Equal,
    Delete,
    Insert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub op: Op,
    pub tokens: Vec<Token>,
    /// Set only by the aligner on split-off common text.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pseudo: bool,
}

impl Change {
    pub fn new(op: Op, tokens: Vec<Token>) -> Self {
        Change {
            op,
            tokens,
            pseudo: false,
        }
    }

    pub fn text(&self) -> String {
        crate::tokenize::concat(&self.tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub old_version_id: VersionId,
    pub new_version_id: VersionId,
    pub changes: Vec<Change>,
    pub budget_exhausted: bool,
}

impl EditScript {
    pub fn between(mut self, old: VersionId, new: VersionId) -> Self {
        self.old_version_id = old;
        self.new_version_id = new;
        self
    }

    /// Number of deleted plus inserted tokens, ignoring pseudo-differences.
    pub fn edit_cost(&self) -> usize {
        self.changes
            .iter()
            .filter(|c| c.op != Op::Equal && !c.pseudo)
            .map(Change::len)
            .sum()
    }

    pub fn old_len(&self) -> usize {
        self.side_len(Op::Delete)
    }

    pub fn new_len(&self) -> usize {
        self.side_len(Op::Insert)
    }

    fn side_len(&self, side: Op) -> usize {
        self.changes
            .iter()
            .filter(|c| c.op == Op::Equal || c.op == side)
            .map(Change::len)
            .sum()
    }

    /// True when no two adjacent changes share an op and no change is empty.
    pub fn is_canonical(&self) -> bool {
        self.changes.iter().all(|c| !c.tokens.is_empty())
            && self.changes.windows(2).all(|w| w[0].op != w[1].op)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffOptions {
    pub budget: Duration,
    /// Drop short equalities swamped by the edits around them.
    pub semantic_cleanup: bool,
}

impl Default for DiffOptions {
    fn default() -> Self {
        DiffOptions {
            budget: DEFAULT_BUDGET,
            semantic_cleanup: false,
        }
    }
}

impl DiffOptions {
    pub fn with_budget(budget: Duration) -> Self {
        DiffOptions {
            budget,
            ..Self::default()
        }
    }
}

pub fn token_diff(a: &TokenStream, b: &TokenStream, opts: &DiffOptions) -> EditScript {
    let (syms_a, syms_b) = intern(a, b);
    let mut search = Search {
        deadline: Instant::now().checked_add(opts.budget),
        exhausted: false,
    };
    let mut edits = Vec::new();
    search.diff(&syms_a, &syms_b, 0, 0, &mut edits);
    let mut runs = canonicalize(edits);
    if opts.semantic_cleanup {
        runs = cleanup_semantic(runs);
    }
    let changes = runs
        .into_iter()
        .map(|r| {
            let tokens = match r.op {
                Op::Equal | Op::Delete => a.tokens()[r.a..r.a + r.len].to_vec(),
                Op::Insert => b.tokens()[r.b..r.b + r.len].to_vec(),
            };
            Change::new(r.op, tokens)
        })
        .collect();
    EditScript {
        old_version_id: VersionId(0),
        new_version_id: VersionId(1),
        changes,
        budget_exhausted: search.exhausted,
    }
}

pub fn reconstruct_old(script: &EditScript) -> TokenStream {
    reconstruct(script, Op::Delete)
}

pub fn reconstruct_new(script: &EditScript) -> TokenStream {
    reconstruct(script, Op::Insert)
}

fn reconstruct(script: &EditScript, side: Op) -> TokenStream {
    script
        .changes
        .iter()
        .filter(|c| c.op == Op::Equal || c.op == side)
        .flat_map(|c| c.tokens.iter().cloned())
        .collect()
}

fn intern<'t>(a: &'t TokenStream, b: &'t TokenStream) -> (Vec<u32>, Vec<u32>) {
    let mut table: HashMap<&'t str, u32> = HashMap::new();
    let mut map = |ts: &'t TokenStream| -> Vec<u32> {
        ts.iter()
            .map(|t| {
                let next = table.len() as u32;
                *table.entry(t.text.as_str()).or_insert(next)
            })
            .collect()
    };
    let sa = map(a);
    let sb = map(b);
    (sa, sb)
}

/// A run of one op, addressed by offsets into both symbol sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Run {
    op: Op,
    a: usize,
    b: usize,
    len: usize,
}

struct Search {
    deadline: Option<Instant>,
    exhausted: bool,
}

impl Search {
    fn out_of_time(&mut self) -> bool {
        if !self.exhausted {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.exhausted = true;
                }
            }
        }
        self.exhausted
    }

    fn diff(&mut self, a: &[u32], b: &[u32], off_a: usize, off_b: usize, out: &mut Vec<Run>) {
        let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        let (a_rest, b_rest) = (&a[prefix..], &b[prefix..]);
        let suffix = a_rest
            .iter()
            .rev()
            .zip(b_rest.iter().rev())
            .take_while(|(x, y)| x == y)
            .count();
        let mid_a = &a_rest[..a_rest.len() - suffix];
        let mid_b = &b_rest[..b_rest.len() - suffix];

        push(out, Op::Equal, off_a, off_b, prefix);
        let (ma, mb) = (off_a + prefix, off_b + prefix);
        if mid_a.is_empty() || mid_b.is_empty() || self.out_of_time() {
            push(out, Op::Delete, ma, mb, mid_a.len());
            push(out, Op::Insert, ma + mid_a.len(), mb, mid_b.len());
        } else {
            self.bisect(mid_a, mid_b, ma, mb, out);
        }
        push(
            out,
            Op::Equal,
            off_a + a.len() - suffix,
            off_b + b.len() - suffix,
            suffix,
        );
    }

    /// Finds the middle snake of an optimal path and recurses on both halves.
    fn bisect(&mut self, a: &[u32], b: &[u32], off_a: usize, off_b: usize, out: &mut Vec<Run>) {
        let n = a.len() as isize;
        let m = b.len() as isize;
        let max_d = (n + m + 1) / 2;
        let v_offset = max_d;
        let v_len = (2 * max_d + 2) as usize;
        let mut v1 = vec![-1isize; v_len];
        let mut v2 = vec![-1isize; v_len];
        v1[(v_offset + 1) as usize] = 0;
        v2[(v_offset + 1) as usize] = 0;
        let delta = n - m;
        // With an odd delta the forward path detects the overlap.
        let front = delta % 2 != 0;
        let (mut k1start, mut k1end, mut k2start, mut k2end) = (0isize, 0isize, 0isize, 0isize);

        for d in 0..max_d {
            if self.out_of_time() {
                break;
            }
            let mut k1 = -d + k1start;
            while k1 <= d - k1end {
                let k1_off = (v_offset + k1) as usize;
                let mut x1 = if k1 == -d || (k1 != d && v1[k1_off - 1] < v1[k1_off + 1]) {
                    v1[k1_off + 1]
                } else {
                    v1[k1_off - 1] + 1
                };
                let mut y1 = x1 - k1;
                while x1 < n && y1 < m && a[x1 as usize] == b[y1 as usize] {
                    x1 += 1;
                    y1 += 1;
                }
                v1[k1_off] = x1;
                if x1 > n {
                    k1end += 2;
                } else if y1 > m {
                    k1start += 2;
                } else if front {
                    let k2_off = v_offset + delta - k1;
                    if k2_off >= 0 && (k2_off as usize) < v_len && v2[k2_off as usize] != -1 {
                        let x2 = n - v2[k2_off as usize];
                        if x1 >= x2 {
                            self.split(a, b, x1 as usize, y1 as usize, off_a, off_b, out);
                            return;
                        }
                    }
                }
                k1 += 2;
            }

            let mut k2 = -d + k2start;
            while k2 <= d - k2end {
                let k2_off = (v_offset + k2) as usize;
                let mut x2 = if k2 == -d || (k2 != d && v2[k2_off - 1] < v2[k2_off + 1]) {
                    v2[k2_off + 1]
                } else {
                    v2[k2_off - 1] + 1
                };
                let mut y2 = x2 - k2;
                while x2 < n && y2 < m && a[(n - x2 - 1) as usize] == b[(m - y2 - 1) as usize] {
                    x2 += 1;
                    y2 += 1;
                }
                v2[k2_off] = x2;
                if x2 > n {
                    k2end += 2;
                } else if y2 > m {
                    k2start += 2;
                } else if !front {
                    let k1_off = v_offset + delta - k2;
                    if k1_off >= 0 && (k1_off as usize) < v_len && v1[k1_off as usize] != -1 {
                        let x1 = v1[k1_off as usize];
                        let y1 = v_offset + x1 - k1_off;
                        if x1 >= n - x2 {
                            self.split(a, b, x1 as usize, y1 as usize, off_a, off_b, out);
                            return;
                        }
                    }
                }
                k2 += 2;
            }
        }
        // No common symbol at all, or the budget ran out.
        push(out, Op::Delete, off_a, off_b, a.len());
        push(out, Op::Insert, off_a + a.len(), off_b, b.len());
    }

    #[allow(clippy::too_many_arguments)]
    fn split(
        &mut self,
        a: &[u32],
        b: &[u32],
        x: usize,
        y: usize,
        off_a: usize,
        off_b: usize,
        out: &mut Vec<Run>,
    ) {
        self.diff(&a[..x], &b[..y], off_a, off_b, out);
        self.diff(&a[x..], &b[y..], off_a + x, off_b + y, out);
    }
}

fn push(out: &mut Vec<Run>, op: Op, a: usize, b: usize, len: usize) {
    if len > 0 {
        out.push(Run { op, a, b, len });
    }
}

/// Merges adjacent runs of the same op and orders every edit block between
/// two equalities as one delete followed by one insert.
fn canonicalize(runs: Vec<Run>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    let mut del: Option<Run> = None;
    let mut ins: Option<Run> = None;

    fn extend(slot: &mut Option<Run>, r: Run) {
        match slot {
            // Edits of one block are contiguous on their own side.
            Some(s) => s.len += r.len,
            None => *slot = Some(r),
        }
    }

    for r in runs {
        match r.op {
            Op::Delete => extend(&mut del, r),
            Op::Insert => extend(&mut ins, r),
            Op::Equal => {
                out.extend(del.take());
                out.extend(ins.take());
                match out.last_mut() {
                    Some(last) if last.op == Op::Equal => last.len += r.len,
                    _ => out.push(r),
                }
            }
        }
    }
    out.extend(del.take());
    out.extend(ins.take());
    out
}

/// Eliminates equalities no longer than the edits on both sides of them,
/// re-expressing them as a delete plus an insert.
fn cleanup_semantic(runs: Vec<Run>) -> Vec<Run> {
    let mut runs = runs;
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < runs.len() {
            if runs[i].op == Op::Equal && i > 0 && i + 1 < runs.len() {
                let edits = |range: &[Run]| -> (usize, usize) {
                    let mut acc = (0, 0);
                    for r in range.iter().rev().take_while(|r| r.op != Op::Equal) {
                        match r.op {
                            Op::Delete => acc.0 += r.len,
                            _ => acc.1 += r.len,
                        }
                    }
                    acc
                };
                let before = edits(&runs[..i]);
                let after = {
                    let mut acc = (0, 0);
                    for r in runs[i + 1..].iter().take_while(|r| r.op != Op::Equal) {
                        match r.op {
                            Op::Delete => acc.0 += r.len,
                            _ => acc.1 += r.len,
                        }
                    }
                    acc
                };
                let len = runs[i].len;
                if len <= before.0.max(before.1) && len <= after.0.max(after.1) {
                    let eq = runs[i];
                    runs[i] = Run {
                        op: Op::Delete,
                        ..eq
                    };
                    runs.insert(
                        i + 1,
                        Run {
                            op: Op::Insert,
                            ..eq
                        },
                    );
                    changed = true;
                    i += 2;
                    continue;
                }
            }
            i += 1;
        }
        if !changed {
            return runs;
        }
        runs = regroup(runs);
    }
}

/// Like [`canonicalize`] but tolerates edit runs that are not contiguous on
/// their own side, which happens once equalities have been dissolved.
fn regroup(runs: Vec<Run>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    let mut block: Vec<Run> = Vec::new();
    let flush = |block: &mut Vec<Run>, out: &mut Vec<Run>| {
        if block.is_empty() {
            return;
        }
        let a0 = block.iter().filter(|r| r.op == Op::Delete).map(|r| r.a).min().unwrap_or(0);
        let b0 = block.iter().filter(|r| r.op == Op::Insert).map(|r| r.b).min().unwrap_or(0);
        let dl: usize = block.iter().filter(|r| r.op == Op::Delete).map(|r| r.len).sum();
        let il: usize = block.iter().filter(|r| r.op == Op::Insert).map(|r| r.len).sum();
        push(out, Op::Delete, a0, b0, dl);
        push(out, Op::Insert, a0 + dl, b0, il);
        block.clear();
    };
    for r in runs {
        if r.op == Op::Equal {
            flush(&mut block, &mut out);
            match out.last_mut() {
                Some(last) if last.op == Op::Equal => last.len += r.len,
                _ => out.push(r),
            }
        } else {
            block.push(r);
        }
    }
    flush(&mut block, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::{detokenize, tokenize};
    use proptest::prelude::*;

    /// O(n·m) insert/delete-only edit distance.
    fn dp_distance(a: &[u32], b: &[u32]) -> usize {
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut cur = vec![i; b.len() + 1];
            for j in 1..=b.len() {
                cur[j] = if a[i - 1] == b[j - 1] {
                    prev[j - 1]
                } else {
                    1 + prev[j].min(cur[j - 1])
                };
            }
            prev = cur;
        }
        prev[b.len()]
    }

    fn stream(symbols: &[u32]) -> TokenStream {
        symbols
            .iter()
            .map(|s| Token::new(format!("t{s}"), crate::tokenize::TokenKind::Word))
            .collect()
    }

    fn view(script: &EditScript) -> Vec<(Op, String)> {
        script.changes.iter().map(|c| (c.op, c.text())).collect()
    }

    #[test]
    fn single_date_change() {
        let a = tokenize("Lorem 2022-04-05 ipsum");
        let b = tokenize("Lorem 2022-04-06 ipsum");
        let s = token_diff(&a, &b, &DiffOptions::default());
        assert_eq!(
            view(&s),
            [
                (Op::Equal, "Lorem ".to_owned()),
                (Op::Delete, "2022-04-05".to_owned()),
                (Op::Insert, "2022-04-06".to_owned()),
                (Op::Equal, " ipsum".to_owned()),
            ]
        );
        assert_eq!(detokenize(&reconstruct_old(&s)), "Lorem 2022-04-05 ipsum");
        assert_eq!(detokenize(&reconstruct_new(&s)), "Lorem 2022-04-06 ipsum");
        assert!(!s.budget_exhausted);
    }

    #[test]
    fn identical_inputs_are_one_equal() {
        let a = tokenize("<p>same page</p>");
        let s = token_diff(&a, &a, &DiffOptions::default());
        assert_eq!(s.changes.len(), 1);
        assert_eq!(s.changes[0].op, Op::Equal);
        assert_eq!(reconstruct_old(&s), a);
    }

    #[test]
    fn empty_script_reconstructs_empty() {
        let s = token_diff(&TokenStream::new(), &TokenStream::new(), &DiffOptions::default());
        assert!(s.changes.is_empty());
        assert!(reconstruct_new(&s).is_empty());
    }

    #[test]
    fn zero_budget_still_round_trips() {
        let a = stream(&[1, 2, 3, 4, 5, 6, 7, 8]);
        let b = stream(&[1, 9, 3, 4, 10, 6, 8, 11]);
        let s = token_diff(&a, &b, &DiffOptions::with_budget(Duration::ZERO));
        assert!(s.budget_exhausted);
        assert_eq!(reconstruct_old(&s), a);
        assert_eq!(reconstruct_new(&s), b);
        assert!(s.is_canonical());
    }

    #[test]
    fn semantic_cleanup_dissolves_small_equalities() {
        let a = stream(&[1, 2, 3, 4, 5, 6, 7]);
        let b = stream(&[8, 9, 3, 10, 11, 6, 7]);
        let raw = token_diff(&a, &b, &DiffOptions::default());
        let opts = DiffOptions {
            semantic_cleanup: true,
            ..DiffOptions::default()
        };
        let clean = token_diff(&a, &b, &opts);
        assert!(clean.changes.len() < raw.changes.len());
        assert!(clean.is_canonical());
        assert_eq!(reconstruct_old(&clean), a);
        assert_eq!(reconstruct_new(&clean), b);
    }

    proptest! {
        #[test]
        fn matches_dp_oracle(
            a in prop::collection::vec(0u32..6, 0..40),
            b in prop::collection::vec(0u32..6, 0..40),
        ) {
            let (sa, sb) = (stream(&a), stream(&b));
            let s = token_diff(&sa, &sb, &DiffOptions::default());
            prop_assert!(!s.budget_exhausted);
            prop_assert_eq!(s.edit_cost(), dp_distance(&a, &b));
            prop_assert_eq!(reconstruct_old(&s), sa.clone());
            prop_assert_eq!(reconstruct_new(&s), sb.clone());
            prop_assert!(s.is_canonical());
            let back = token_diff(&sb, &sa, &DiffOptions::default());
            prop_assert_eq!(back.edit_cost(), s.edit_cost());
        }

        #[test]
        fn semantic_cleanup_round_trips(
            a in prop::collection::vec(0u32..5, 0..30),
            b in prop::collection::vec(0u32..5, 0..30),
        ) {
            let (sa, sb) = (stream(&a), stream(&b));
            let opts = DiffOptions { semantic_cleanup: true, ..DiffOptions::default() };
            let s = token_diff(&sa, &sb, &opts);
            prop_assert_eq!(reconstruct_old(&s), sa);
            prop_assert_eq!(reconstruct_new(&s), sb);
            prop_assert!(s.is_canonical());
        }
    }
}
