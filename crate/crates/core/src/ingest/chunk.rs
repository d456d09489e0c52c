use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hyperlink inside a document body. Offsets count Unicode scalar values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub target_title: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    #[serde(default)]
    pub links: Vec<Link>,
}

impl RawDocument {
    pub fn validate(&self) -> Result<()> {
        let len = self.body.chars().count();
        let mut spans: Vec<(usize, usize)> = self
            .links
            .iter()
            .map(|l| (l.char_start, l.char_end))
            .collect();
        spans.sort_unstable();
        for &(s, e) in &spans {
            if s >= e || e > len {
                return Err(Error::invalid(format!(
                    "document {}: link span [{s}, {e}) invalid for body of {len} chars",
                    self.doc_id
                )));
            }
        }
        if spans.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::invalid(format!(
                "document {}: overlapping link spans",
                self.doc_id
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub text: String,
    /// Links whose start offset falls in this chunk, with offsets relative to
    /// `text` (ends clipped to the chunk).
    pub links: Vec<Link>,
}

fn is_sentence_end(word: &str) -> bool {
    let trimmed = word.trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}']);
    trimmed.ends_with(['.', '!', '?'])
}

/// Splits a body into blocks of about `target_words` whitespace-separated
/// words.
///
/// A block ends at a sentence boundary when one lies within
/// `min(20, target_words - 1)` words of the target length (the closest one,
/// earlier on ties), otherwise after exactly `target_words` words. A tail no
/// longer than target plus that window stays in the last block, so no block
/// exceeds twice the target.
pub fn chunk_document(doc: &RawDocument, target_words: usize) -> Vec<Chunk> {
    let target = target_words.max(1);
    let window = 20.min(target - 1);
    let body = doc.body.as_str();

    let words: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        let mut start = None;
        for (i, c) in body.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    v.push((s, i));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            v.push((s, body.len()));
        }
        v
    };
    if words.is_empty() {
        return Vec::new();
    }

    let mut bounds = Vec::new();
    let mut s = 0;
    while s < words.len() {
        let remaining = words.len() - s;
        let e = if remaining <= target + window {
            words.len()
        } else {
            let ideal = s + target;
            (ideal - window..=ideal + window)
                .filter(|&e| is_sentence_end(&body[words[e - 1].0..words[e - 1].1]))
                .min_by_key(|&e| (e.abs_diff(ideal), e))
                .unwrap_or(ideal)
        };
        bounds.push((s, e));
        s = e;
    }

    // char offset -> byte offset
    let char_to_byte: Vec<usize> = body
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(body.len()))
        .collect();
    let byte_to_char = |b: usize| char_to_byte.partition_point(|&x| x < b);

    let mut chunks: Vec<Chunk> = bounds
        .iter()
        .map(|&(s, e)| Chunk {
            text: body[words[s].0..words[e - 1].1].to_owned(),
            links: Vec::new(),
        })
        .collect();

    for link in &doc.links {
        let Some(&start_b) = char_to_byte.get(link.char_start) else {
            continue;
        };
        // region of chunk i: from its first word up to the next chunk's first word
        let idx = bounds
            .partition_point(|&(s, _)| words[s].0 <= start_b)
            .saturating_sub(1);
        let (s, e) = bounds[idx];
        let chunk_start = byte_to_char(words[s].0);
        let chunk_end = byte_to_char(words[e - 1].1);
        let rel_start = link
            .char_start
            .saturating_sub(chunk_start)
            .min(chunk_end - chunk_start);
        let rel_end = link
            .char_end
            .min(chunk_end)
            .saturating_sub(chunk_start)
            .max(rel_start);
        chunks[idx].links.push(Link {
            target_title: link.target_title.clone(),
            char_start: rel_start,
            char_end: rel_end,
        });
    }
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(body: &str, links: Vec<Link>) -> RawDocument {
        RawDocument {
            doc_id: "d".into(),
            title: "Doc".into(),
            body: body.into(),
            links,
        }
    }

    fn words(n: usize) -> String {
        (0..n)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn short_document_is_one_chunk() {
        let c = chunk_document(&doc(&words(40), vec![]), 100);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].text, words(40));
    }

    #[test]
    fn empty_body_has_no_chunks() {
        assert!(chunk_document(&doc("   ", vec![]), 100).is_empty());
    }

    #[test]
    fn unpunctuated_250_words_split_100_100_50() {
        let c = chunk_document(&doc(&words(250), vec![]), 100);
        // independent count: plain whitespace split of each chunk
        let counts: Vec<usize> = c
            .iter()
            .map(|c| c.text.split_whitespace().count())
            .collect();
        assert_eq!(counts, [100, 100, 50]);
        let joined: Vec<&str> = c.iter().flat_map(|c| c.text.split_whitespace()).collect();
        assert_eq!(joined.join(" "), words(250));
    }

    #[test]
    fn prefers_nearest_sentence_boundary() {
        // sentence ends after word 90 (index 89) and after word 115
        let mut w: Vec<String> = (0..260).map(|i| format!("w{i}")).collect();
        w[89].push('.');
        w[114].push('.');
        let c = chunk_document(&doc(&w.join(" "), vec![]), 100);
        assert_eq!(c[0].text.split_whitespace().count(), 90);
        assert!(c[0].text.ends_with("w89."));
    }

    #[test]
    fn chunks_never_exceed_twice_target() {
        for n in [1, 5, 99, 120, 121, 333] {
            for target in [1, 3, 10, 100] {
                for ch in chunk_document(&doc(&words(n), vec![]), target) {
                    assert!(ch.text.split_whitespace().count() <= 2 * target);
                }
            }
        }
    }

    #[test]
    fn link_goes_to_chunk_of_its_start() {
        let body = words(250);
        // "w99 w100" straddles the first boundary
        let start = body.find("w99 ").unwrap();
        let end = body.find("w100 ").unwrap() + 4;
        let link = Link {
            target_title: "T".into(),
            char_start: start,
            char_end: end,
        };
        let c = chunk_document(&doc(&body, vec![link]), 100);
        assert_eq!(c[0].links.len(), 1);
        assert!(c[1].links.is_empty());
        let l = &c[0].links[0];
        assert_eq!(&c[0].text[l.char_start..l.char_end], "w99");
    }

    #[test]
    fn link_offsets_are_remapped_to_chunk() {
        let body = words(250);
        let start = body.find("w150").unwrap();
        let link = Link {
            target_title: "T".into(),
            char_start: start,
            char_end: start + 4,
        };
        let c = chunk_document(&doc(&body, vec![link]), 100);
        let l = &c[1].links[0];
        assert_eq!(&c[1].text[l.char_start..l.char_end], "w150");
    }

    #[test]
    fn validation_rejects_bad_spans() {
        let bad = doc(
            "abc def",
            vec![Link {
                target_title: "x".into(),
                char_start: 3,
                char_end: 99,
            }],
        );
        assert!(bad.validate().is_err());
        let overlapping = doc(
            "abc def ghi",
            vec![
                Link {
                    target_title: "x".into(),
                    char_start: 0,
                    char_end: 5,
                },
                Link {
                    target_title: "y".into(),
                    char_start: 4,
                    char_end: 7,
                },
            ],
        );
        assert!(overlapping.validate().is_err());
    }
}
