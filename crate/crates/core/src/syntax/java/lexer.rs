use super::super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Literal(String),
    Op(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "(", ")", "{", "}", "[", "]", ";",
    ",", ".", "@", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    let peek = |p: usize| bytes.get(p).copied().unwrap_or(0);
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        if c == b'/' && peek(pos + 1) == b'/' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        if c == b'/' && peek(pos + 1) == b'*' {
            let start = pos;
            pos += 2;
            loop {
                if pos + 1 >= bytes.len() {
                    return Err(ParseError::at(src, start, "unterminated comment"));
                }
                if bytes[pos] == b'*' && bytes[pos + 1] == b'/' {
                    pos += 2;
                    break;
                }
                pos += 1;
            }
            continue;
        }
        let start = pos;
        if c == b'_' || c == b'$' || c.is_ascii_alphabetic() || c >= 0x80 {
            while pos < bytes.len() {
                let c = bytes[pos];
                if c == b'_' || c == b'$' || c.is_ascii_alphanumeric() || c >= 0x80 {
                    pos += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(src[start..pos].to_string()),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && peek(pos + 1).is_ascii_digit()) {
            pos = number_end(bytes, pos);
            if peek(pos).is_ascii_alphabetic() || peek(pos) == b'_' {
                return Err(ParseError::at(src, pos, "invalid numeric literal"));
            }
            out.push(Token {
                tok: Tok::Literal(src[start..pos].to_string()),
                offset: start,
            });
            continue;
        }
        if c == b'"' || c == b'\'' {
            pos += 1;
            loop {
                match peek(pos) {
                    0 | b'\n' => return Err(ParseError::at(src, start, "unterminated literal")),
                    b'\\' => pos += 2,
                    q if q == c => {
                        pos += 1;
                        break;
                    }
                    _ => pos += 1,
                }
            }
            out.push(Token {
                tok: Tok::Literal(src[start..pos].to_string()),
                offset: start,
            });
            continue;
        }
        let rest = &src[pos..];
        let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)).copied() else {
            let ch = rest.chars().next().unwrap();
            return Err(ParseError::at(
                src,
                pos,
                format!("unexpected character {ch:?}"),
            ));
        };
        out.push(Token {
            tok: Tok::Op(op),
            offset: pos,
        });
        pos += op.len();
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: src.len(),
    });
    Ok(out)
}

fn number_end(bytes: &[u8], mut pos: usize) -> usize {
    let peek = |p: usize| bytes.get(p).copied().unwrap_or(0);
    if peek(pos) == b'0' && matches!(peek(pos + 1) | 0x20, b'x' | b'b') {
        pos += 2;
        while peek(pos).is_ascii_hexdigit() || peek(pos) == b'_' {
            pos += 1;
        }
    } else {
        while peek(pos).is_ascii_digit() || peek(pos) == b'_' {
            pos += 1;
        }
        if peek(pos) == b'.' && peek(pos + 1) != b'.' && !peek(pos + 1).is_ascii_alphabetic() {
            pos += 1;
            while peek(pos).is_ascii_digit() || peek(pos) == b'_' {
                pos += 1;
            }
        } else if peek(pos) == b'.'
            && matches!(peek(pos + 1), b'e' | b'E' | b'f' | b'F' | b'd' | b'D')
        {
            pos += 1;
        }
        if matches!(peek(pos), b'e' | b'E') {
            let sign = usize::from(matches!(peek(pos + 1), b'+' | b'-'));
            if peek(pos + 1 + sign).is_ascii_digit() {
                pos += 1 + sign;
                while peek(pos).is_ascii_digit() {
                    pos += 1;
                }
            }
        }
    }
    if matches!(peek(pos), b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
        pos += 1;
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("int x = 0x1F; // c\n/* b */ x >>>= 2L;"),
            vec![
                Tok::Ident("int".into()),
                Tok::Ident("x".into()),
                Tok::Op("="),
                Tok::Literal("0x1F".into()),
                Tok::Op(";"),
                Tok::Ident("x".into()),
                Tok::Op(">>>="),
                Tok::Literal("2L".into()),
                Tok::Op(";"),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn literals() {
        let t = toks(r#"s = "a\"b" + 'c' + 1.5e3f + .5 + 3.;"#);
        assert!(t.contains(&Tok::Literal(r#""a\"b""#.into())));
        assert!(t.contains(&Tok::Literal("'c'".into())));
        assert!(t.contains(&Tok::Literal("1.5e3f".into())));
        assert!(t.contains(&Tok::Literal(".5".into())));
        assert!(t.contains(&Tok::Literal("3.".into())));
    }

    #[test]
    fn errors() {
        assert!(tokenize("\"abc").is_err());
        assert!(tokenize("/* open").is_err());
        assert!(tokenize("int #x;").is_err());
    }
}
