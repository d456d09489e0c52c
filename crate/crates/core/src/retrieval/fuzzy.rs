use std::collections::{BTreeSet, HashMap};

use crate::graph::{Graph, NodeId};
use crate::text::tokens;

/// Score at or above which a node text is taken to contain a sentence.
pub const MATCH_THRESHOLD: u32 = 80;

/// Longest common block of `a[alo..ahi]` and `b[blo..bhi]` as `(i, j, k)`.
/// Among blocks of maximal length the one starting earliest in `a`, then in
/// `b`, wins.
fn longest_match(
    a: &[char],
    b2j: &HashMap<char, Vec<usize>>,
    (alo, ahi): (usize, usize),
    (blo, bhi): (usize, usize),
) -> (usize, usize, usize) {
    let (mut bi, mut bj, mut bk) = (alo, blo, 0);
    let mut j2len: HashMap<usize, usize> = HashMap::new();
    for (i, c) in a.iter().enumerate().take(ahi).skip(alo) {
        let mut next = HashMap::new();
        if let Some(js) = b2j.get(c) {
            for &j in js {
                if j < blo {
                    continue;
                }
                if j >= bhi {
                    break;
                }
                let k = j
                    .checked_sub(1)
                    .and_then(|p| j2len.get(&p))
                    .copied()
                    .unwrap_or(0)
                    + 1;
                next.insert(j, k);
                if k > bk {
                    (bi, bj, bk) = (i + 1 - k, j + 1 - k, k);
                }
            }
        }
        j2len = next;
    }
    (bi, bj, bk)
}

/// Total size of the matching blocks found by recursively taking the
/// longest common block and recursing on both sides of it.
pub fn matching_chars(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut b2j: HashMap<char, Vec<usize>> = HashMap::new();
    for (j, &c) in b.iter().enumerate() {
        b2j.entry(c).or_default().push(j);
    }
    let mut total = 0;
    let mut queue = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = queue.pop() {
        let (i, j, k) = longest_match(&a, &b2j, (alo, ahi), (blo, bhi));
        if k == 0 {
            continue;
        }
        total += k;
        if alo < i && blo < j {
            queue.push((alo, i, blo, j));
        }
        if i + k < ahi && j + k < bhi {
            queue.push((i + k, ahi, j + k, bhi));
        }
    }
    total
}

/// `round(100 * 2M / (|a| + |b|))` over characters, with ties rounded to
/// even. Arguments are put in a fixed order first so the value is symmetric.
pub fn ratio(a: &str, b: &str) -> u32 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let total = a.chars().count() + b.chars().count();
    if total == 0 {
        return 100;
    }
    (200.0 * matching_chars(a, b) as f64 / total as f64).round_ties_even() as u32
}

/// The three strings compared by [`token_set_ratio`]: the sorted common
/// tokens, and that followed by each side's sorted remaining tokens.
fn set_strings(a: &str, b: &str) -> Option<[String; 3]> {
    let ta: BTreeSet<String> = tokens(a).collect();
    let tb: BTreeSet<String> = tokens(b).collect();
    if ta.is_empty() || tb.is_empty() {
        return None;
    }
    let join = |v: Vec<&String>| {
        v.into_iter()
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let sect = join(ta.intersection(&tb).collect());
    let with = |rest: String| format!("{sect} {rest}").trim().to_string();
    let ra = with(join(ta.difference(&tb).collect()));
    let rb = with(join(tb.difference(&ta).collect()));
    Some([sect, ra, rb])
}

fn empty_score(a: &str, b: &str) -> u32 {
    // both sides without tokens count as identical
    if tokens(a).next().is_none() && tokens(b).next().is_none() {
        100
    } else {
        0
    }
}

/// Fuzzy similarity in `[0, 100]` over token sets: the best [`ratio`] among
/// the sorted intersection and the intersection extended by either side's
/// leftover tokens. A side whose tokens are a subset of the other's scores
/// 100. Two texts without tokens score 100; one empty side scores 0.
pub fn token_set_ratio(a: &str, b: &str) -> u32 {
    match set_strings(a, b) {
        None => empty_score(a, b),
        Some([s, ra, rb]) => ratio(&s, &ra).max(ratio(&s, &rb)).max(ratio(&ra, &rb)),
    }
}

/// Upper bound on `ratio(x, y)` from the lengths alone.
fn ratio_bound(x: &str, y: &str) -> u32 {
    let (lx, ly) = (x.chars().count(), y.chars().count());
    if lx + ly == 0 {
        return 100;
    }
    (200.0 * lx.min(ly) as f64 / (lx + ly) as f64).round_ties_even() as u32
}

/// `token_set_ratio(a, b) >= threshold`, skipping comparisons whose length
/// bound already rules them out.
pub fn token_set_at_least(a: &str, b: &str, threshold: u32) -> bool {
    match set_strings(a, b) {
        None => empty_score(a, b) >= threshold,
        Some([s, ra, rb]) => {
            if s == ra || s == rb {
                return true;
            }
            [(&s, &ra), (&s, &rb), (&ra, &rb)]
                .iter()
                .any(|(x, y)| ratio_bound(x, y) >= threshold && ratio(x, y) >= threshold)
        }
    }
}

/// Nodes whose text matches `sentence` with a token set ratio of at least
/// [`MATCH_THRESHOLD`].
pub fn align_evidence(sentence: &str, g: &Graph) -> Vec<NodeId> {
    g.nodes()
        .iter()
        .filter(|n| token_set_at_least(sentence, &n.text, MATCH_THRESHOLD))
        .map(|n| n.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_subset_score_100() {
        assert_eq!(token_set_ratio("the quick fox", "the quick fox"), 100);
        assert_eq!(token_set_ratio("barack obama", "obama"), 100);
        assert_eq!(token_set_ratio("Obama, Barack!", "barack obama"), 100);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(token_set_ratio("", "..."), 100);
        assert_eq!(token_set_ratio("", "word"), 0);
    }

    #[test]
    fn hand_traced_ratio() {
        // "abcd" vs "bcde": one block "bcd", 2*3/8
        assert_eq!(matching_chars("abcd", "bcde"), 3);
        assert_eq!(ratio("abcd", "bcde"), 75);
        // disjoint single tokens: no common characters
        assert_eq!(token_set_ratio("aaa", "bbb"), 0);
        // "ab" vs "ba": one char matches, 2*1/4
        assert_eq!(ratio("ab", "ba"), 50);
    }

    #[test]
    fn threshold_check_agrees_with_full_score() {
        let pairs = [
            ("alpha beta gamma", "alpha beta delta"),
            ("one two three four five", "one"),
            ("red green", "blue yellow purple"),
            ("kappa lambda mu nu", "kappa lambda mu xi"),
        ];
        for (a, b) in pairs {
            for t in [50, 80, 95] {
                assert_eq!(
                    token_set_at_least(a, b, t),
                    token_set_ratio(a, b) >= t,
                    "{a} / {b} at {t}"
                );
            }
        }
    }
}
