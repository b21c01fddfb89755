use super::SourceError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Unsigned decimal literal, kept as text so `-9223372036854775808` can be
    /// assembled by the parser.
    Int(String),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

const SYMBOLS: [&str; 23] = [
    "&&", "||", "==", "!=", "<=", ">=", "+{", "&{", "+", "-", "&", "!", "?", ".", ",", "(", ")", "{", "}", "[", "]", ":", "<",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SourceError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_owned()), offset: start });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Token { tok: Tok::Int(src[start..i].to_owned()), offset: start });
            continue;
        }
        if c == b'"' {
            let (s, next) = lex_string(src, i)?;
            out.push(Token { tok: Tok::Str(s), offset: start });
            i = next;
            continue;
        }
        if c == b'>' {
            // `>` and `>=` are not in SYMBOLS because `is<..>` closes with a bare `>`.
            let sym = if bytes.get(i + 1) == Some(&b'=') { ">=" } else { ">" };
            i += sym.len();
            out.push(Token { tok: Tok::Sym(sym), offset: start });
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(*s)) {
            Some(sym) => {
                i += sym.len();
                out.push(Token { tok: Tok::Sym(sym), offset: start });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(SourceError::at(src, start, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, offset: src.len() });
    Ok(out)
}

fn lex_string(src: &str, open: usize) -> Result<(String, usize), SourceError> {
    let mut s = String::new();
    let mut chars = src[open + 1..].char_indices();
    while let Some((rel, c)) = chars.next() {
        let at = open + 1 + rel;
        match c {
            '"' => return Ok((s, at + 1)),
            '\\' => match chars.next() {
                Some((_, '"')) => s.push('"'),
                Some((_, '\\')) => s.push('\\'),
                Some((_, 'n')) => s.push('\n'),
                Some((_, 't')) => s.push('\t'),
                Some((_, other)) => return Err(SourceError::at(src, at, format!("unknown escape `\\{other}`"))),
                None => break,
            },
            '\n' => return Err(SourceError::at(src, at, "newline in string literal")),
            c => s.push(c),
        }
    }
    Err(SourceError::at(src, open, "unterminated string literal"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn symbols_and_comments() {
        assert_eq!(
            toks("&{ ?A(x:Int) } # trailing\n&& >="),
            vec![
                Tok::Sym("&{"),
                Tok::Sym("?"),
                Tok::Ident("A".into()),
                Tok::Sym("("),
                Tok::Ident("x".into()),
                Tok::Sym(":"),
                Tok::Ident("Int".into()),
                Tok::Sym(")"),
                Tok::Sym("}"),
                Tok::Sym("&&"),
                Tok::Sym(">="),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(toks(r#""a\"b\\c\n""#), vec![Tok::Str("a\"b\\c\n".into()), Tok::Eof]);
        assert!(tokenize(r#""\q""#).is_err());
        assert!(tokenize("\"open").is_err());
    }
}
