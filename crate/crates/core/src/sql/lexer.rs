use super::SqlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier or keyword, as written.
    Word(String),
    /// Numeric literal text, sign included.
    Number(String),
    /// Text literal with quotes removed and escapes resolved.
    Str(String),
    Comma,
    LParen,
    RParen,
    Star,
    Semicolon,
    Dot,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => w.clone(),
            TokenKind::Number(n) => n.clone(),
            TokenKind::Str(s) => format!("'{s}'"),
            TokenKind::Comma => ",".into(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Star => "*".into(),
            TokenKind::Semicolon => ";".into(),
            TokenKind::Dot => ".".into(),
            TokenKind::Eq => "=".into(),
            TokenKind::Lt => "<".into(),
            TokenKind::Gt => ">".into(),
            TokenKind::Le => "<=".into(),
            TokenKind::Ge => ">=".into(),
            TokenKind::Ne => "<>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the token start in the source text.
    pub offset: usize,
    /// Byte offset just past the token.
    pub end: usize,
}

/// Tokenizes the whole input.
pub fn tokenize(src: &str) -> Result<Vec<Token>, SqlError> {
    let (tokens, err) = tokenize_prefix(src);
    match err {
        Some(e) => Err(e),
        None => Ok(tokens),
    }
}

/// Tokenizes as far as possible, returning the tokens read before the first
/// lexical error together with that error.
pub fn tokenize_prefix(src: &str) -> (Vec<Token>, Option<SqlError>) {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = |k: TokenKind| Some((k, start + 1));
        let next = match c {
            b',' => single(TokenKind::Comma),
            b'(' => single(TokenKind::LParen),
            b')' => single(TokenKind::RParen),
            b'*' => single(TokenKind::Star),
            b';' => single(TokenKind::Semicolon),
            b'=' => single(TokenKind::Eq),
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => single(TokenKind::Dot),
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => Some((TokenKind::Le, i + 2)),
                Some(b'>') => Some((TokenKind::Ne, i + 2)),
                _ => single(TokenKind::Lt),
            },
            b'>' => match bytes.get(i + 1) {
                Some(b'=') => Some((TokenKind::Ge, i + 2)),
                _ => single(TokenKind::Gt),
            },
            b'!' if bytes.get(i + 1) == Some(&b'=') => Some((TokenKind::Ne, i + 2)),
            b'\'' | b'"' => match read_quoted(src, i) {
                Ok((s, end)) => Some((TokenKind::Str(s), end)),
                Err(e) => return (tokens, Some(e)),
            },
            b'0'..=b'9' | b'.' => Some(read_number(bytes, i, i)),
            b'-' if bytes
                .get(i + 1)
                .is_some_and(|b| b.is_ascii_digit() || *b == b'.') =>
            {
                Some(read_number(bytes, i, i + 1))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                Some((TokenKind::Word(src[i..j].to_string()), j))
            }
            _ => None,
        };
        match next {
            Some((kind, end)) => {
                tokens.push(Token {
                    kind,
                    offset: start,
                    end,
                });
                i = end;
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return (
                    tokens,
                    Some(SqlError::Lex {
                        offset: i,
                        message: format!("unexpected character {ch:?}"),
                    }),
                );
            }
        }
    }
    (tokens, None)
}

fn read_number(bytes: &[u8], start: usize, digits_from: usize) -> (TokenKind, usize) {
    let mut j = digits_from;
    let mut seen_dot = false;
    while j < bytes.len() {
        match bytes[j] {
            b'0'..=b'9' => {}
            b'.' if !seen_dot => seen_dot = true,
            _ => break,
        }
        j += 1;
    }
    let text = std::str::from_utf8(&bytes[start..j]).expect("ascii digits");
    (TokenKind::Number(text.to_string()), j)
}

fn read_quoted(src: &str, start: usize) -> Result<(String, usize), SqlError> {
    let bytes = src.as_bytes();
    let quote = bytes[start];
    let mut out = String::new();
    let mut j = start + 1;
    let mut seg = j;
    while j < bytes.len() {
        if bytes[j] == quote {
            out.push_str(&src[seg..j]);
            if bytes.get(j + 1) == Some(&quote) {
                out.push(quote as char);
                j += 2;
                seg = j;
                continue;
            }
            return Ok((out, j + 1));
        }
        j += 1;
    }
    Err(SqlError::Lex {
        offset: start,
        message: "unterminated text literal".into(),
    })
}
