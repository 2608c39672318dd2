use crate::sql::{tokenize_prefix, Parser, TokenKind};

/// Pulls the first parseable SQL statement out of raw model output, dropping
/// echoed questions, answers and other prose around it. Each `SELECT` word is
/// tried in turn and the longest token run after it that parses wins. Returns
/// the normalized statement, or `None` when nothing parses.
pub fn recover_sql(raw: &str) -> Option<String> {
    let lower = raw.to_ascii_lowercase();
    let bytes = raw.as_bytes();
    let mut from = 0;
    while let Some(pos) = lower[from..].find("select") {
        let start = from + pos;
        from = start + "select".len();
        if start > 0 && (bytes[start - 1].is_ascii_alphanumeric() || bytes[start - 1] == b'_') {
            continue;
        }
        let (tokens, _) = tokenize_prefix(&raw[start..]);
        let starts_with_select =
            matches!(tokens.first().map(|t| &t.kind), Some(TokenKind::Word(w)) if w.eq_ignore_ascii_case("select"));
        if !starts_with_select {
            continue;
        }
        for end in (1..=tokens.len()).rev() {
            let run = &tokens[..end];
            if let Ok(stmt) = Parser::new(run, run[end - 1].end).parse_statement() {
                return Some(stmt.to_string());
            }
        }
    }
    None
}
