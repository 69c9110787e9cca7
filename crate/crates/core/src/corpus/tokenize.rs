/// Punctuation split off wherever it occurs.
const ALWAYS_SPLIT: &[char] = &[',', ';', ':', '!', '?', '"', '(', ')'];
/// Punctuation split off only at the edges of a word, so contractions and
/// abbreviations with inner periods stay whole.
const EDGE_SPLIT: &[char] = &['.', '\''];

/// Whitespace tokenizer that detaches punctuation into separate tokens.
///
/// ```
/// use udssm::corpus::tokenize;
///
/// assert_eq!(tokenize("a,b"), vec!["a", ",", "b"]);
/// assert_eq!(tokenize("he wasn't there."), vec!["he", "wasn't", "there", "."]);
/// ```
pub fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in line.split_whitespace() {
        let mut piece = String::new();
        for ch in chunk.chars() {
            if ALWAYS_SPLIT.contains(&ch) {
                flush_piece(&mut piece, &mut out);
                out.push(ch.to_string());
            } else {
                piece.push(ch);
            }
        }
        flush_piece(&mut piece, &mut out);
    }
    out
}

fn flush_piece(piece: &mut String, out: &mut Vec<String>) {
    if piece.is_empty() {
        return;
    }
    let word = std::mem::take(piece);
    let body = word.trim_matches(EDGE_SPLIT);
    if body.is_empty() {
        out.extend(word.chars().map(String::from));
        return;
    }
    let start = word.find(body).expect("trimmed body is a substring");
    out.extend(word[..start].chars().map(String::from));
    out.push(body.to_string());
    out.extend(word[start + body.len()..].chars().map(String::from));
}
