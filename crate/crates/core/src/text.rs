//! Tokenization and sentence segmentation shared by the embedders, the BM25
//! index, TF-IDF re-ranking and fuzzy matching.

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    tokens(text).collect()
}

pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

pub fn count_tokens(text: &str) -> usize {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .count()
}

/// Splits on `.`, `!` or `?` followed by whitespace. Pieces with fewer than
/// three tokens are merged into the following sentence (or the previous one
/// when they come last).
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut raw: Vec<&str> = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(j, next)) = chars.peek() {
                if next.is_whitespace() {
                    raw.push(&text[start..j]);
                    start = j;
                }
            }
        }
    }
    raw.push(&text[start..]);

    let mut out: Vec<String> = Vec::new();
    let mut pending = String::new();
    for piece in raw {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        if !pending.is_empty() {
            pending.push(' ');
        }
        pending.push_str(piece);
        if count_tokens(&pending) >= 3 {
            out.push(std::mem::take(&mut pending));
        }
    }
    if !pending.is_empty() {
        match out.last_mut() {
            Some(last) => {
                last.push(' ');
                last.push_str(&pending);
            }
            None => out.push(pending),
        }
    }
    out
}
