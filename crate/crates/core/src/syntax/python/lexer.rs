use super::super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Name(String),
    Number(String),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        depth: 0,
        open: Vec::new(),
        indents: vec![0],
        out: Vec::new(),
    }
    .run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
    // Offsets of unclosed brackets.
    open: Vec<usize>,
    indents: Vec<usize>,
    out: Vec<Token>,
}

impl Lexer<'_> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::at(self.src, self.pos, message)
    }

    fn push(&mut self, tok: Tok, offset: usize) {
        self.out.push(Token { tok, offset });
    }

    fn peek(&self, ahead: usize) -> u8 {
        self.bytes.get(self.pos + ahead).copied().unwrap_or(0)
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut at_line_start = true;
        while self.pos < self.bytes.len() {
            if at_line_start && self.depth == 0 {
                if self.handle_indentation()? {
                    continue;
                }
                at_line_start = false;
            }
            let c = self.peek(0);
            match c {
                b'\n' => {
                    self.pos += 1;
                    if self.depth == 0
                        && !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None)
                    {
                        self.push(Tok::Newline, self.pos - 1);
                    }
                    at_line_start = self.depth == 0;
                }
                b'\r' | b' ' | b'\t' | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.peek(0) != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\\'
                    if self.peek(1) == b'\n'
                        || (self.peek(1) == b'\r' && self.peek(2) == b'\n') =>
                {
                    self.pos += if self.peek(1) == b'\r' { 3 } else { 2 };
                }
                b'0'..=b'9' => self.number()?,
                b'.' if self.peek(1).is_ascii_digit() => self.number()?,
                b'"' | b'\'' => self.string(self.pos)?,
                c if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => {
                    let start = self.pos;
                    while self.pos < self.bytes.len() {
                        let c = self.peek(0);
                        if c == b'_' || c.is_ascii_alphanumeric() || c >= 0x80 {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    let word = &self.src[start..self.pos];
                    let is_prefix = word.len() <= 2
                        && word
                            .chars()
                            .all(|ch| matches!(ch.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'));
                    if is_prefix && matches!(self.peek(0), b'"' | b'\'') {
                        self.string(start)?;
                    } else {
                        self.push(Tok::Name(word.to_string()), start);
                    }
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    let op = OPERATORS.iter().find(|op| rest.starts_with(**op)).copied();
                    let Some(op) = op else {
                        return Err(self.err(format!(
                            "unexpected character {:?}",
                            rest.chars().next().unwrap()
                        )));
                    };
                    match op {
                        "(" | "[" | "{" => {
                            self.depth += 1;
                            self.open.push(self.pos);
                        }
                        ")" | "]" | "}" => {
                            if self.depth == 0 {
                                return Err(self.err(format!("unmatched {op:?}")));
                            }
                            self.depth -= 1;
                            self.open.pop();
                        }
                        _ => {}
                    }
                    self.push(Tok::Op(op), self.pos);
                    self.pos += op.len();
                }
            }
        }
        if let Some(&offset) = self.open.last() {
            let bracket = &self.src[offset..offset + 1];
            return Err(ParseError::at(
                self.src,
                offset,
                format!("'{bracket}' was never closed"),
            ));
        }
        if !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None) {
            self.push(Tok::Newline, self.pos);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, self.pos);
        }
        self.push(Tok::Eof, self.pos);
        Ok(self.out)
    }

    /// Measures indentation at the start of a logical line. Returns true when
    /// the line is blank or a comment and was consumed entirely.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        let mut width = 0;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                0x0c => width = 0,
                _ => break,
            }
            p += 1;
        }
        let next = self.bytes.get(p).copied().unwrap_or(b'\n');
        if matches!(next, b'\n' | b'#' | b'\r') || p >= self.bytes.len() {
            while p < self.bytes.len() && self.bytes[p] != b'\n' {
                p += 1;
            }
            if p < self.bytes.len() {
                p += 1;
            }
            self.pos = p;
            return Ok(true);
        }
        self.pos = p;
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.push(Tok::Indent, p);
        } else {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push(Tok::Dedent, p);
            }
            if width != *self.indents.last().unwrap() {
                return Err(self.err("unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn number(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let radix_prefix =
            self.peek(0) == b'0' && matches!(self.peek(1) | 0x20, b'x' | b'o' | b'b');
        if radix_prefix {
            self.pos += 2;
            while self.peek(0).is_ascii_hexdigit() || self.peek(0) == b'_' {
                self.pos += 1;
            }
        } else {
            while self.peek(0).is_ascii_digit() || self.peek(0) == b'_' {
                self.pos += 1;
            }
            if self.peek(0) == b'.' {
                self.pos += 1;
                while self.peek(0).is_ascii_digit() || self.peek(0) == b'_' {
                    self.pos += 1;
                }
            }
            if matches!(self.peek(0), b'e' | b'E')
                && (self.peek(1).is_ascii_digit()
                    || (matches!(self.peek(1), b'+' | b'-') && self.peek(2).is_ascii_digit()))
            {
                self.pos += 2;
                while self.peek(0).is_ascii_digit() || self.peek(0) == b'_' {
                    self.pos += 1;
                }
            }
            if matches!(self.peek(0), b'j' | b'J') {
                self.pos += 1;
            }
        }
        if self.peek(0).is_ascii_alphabetic() || self.peek(0) == b'_' {
            return Err(self.err("invalid numeric literal"));
        }
        let text = self.src[start..self.pos].to_string();
        self.push(Tok::Number(text), start);
        Ok(())
    }

    fn string(&mut self, start: usize) -> Result<(), ParseError> {
        let quote = self.peek(0);
        let triple = self.peek(1) == quote && self.peek(2) == quote;
        self.pos += if triple { 3 } else { 1 };
        loop {
            if self.pos >= self.bytes.len() {
                return Err(ParseError::at(
                    self.src,
                    start,
                    "unterminated string literal",
                ));
            }
            let c = self.peek(0);
            if c == b'\\' {
                self.pos += 2;
                continue;
            }
            if c == b'\n' && !triple {
                return Err(ParseError::at(
                    self.src,
                    start,
                    "unterminated string literal",
                ));
            }
            if c == quote && (!triple || (self.peek(1) == quote && self.peek(2) == quote)) {
                self.pos += if triple { 3 } else { 1 };
                break;
            }
            self.pos += 1;
        }
        let text = self.src[start..self.pos].to_string();
        self.push(Tok::Str(text), start);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_tokens() {
        let toks = kinds("if x:\n    y = 1\n\n    # c\nz\n");
        assert_eq!(
            toks,
            vec![
                Tok::Name("if".into()),
                Tok::Name("x".into()),
                Tok::Op(":"),
                Tok::Newline,
                Tok::Indent,
                Tok::Name("y".into()),
                Tok::Op("="),
                Tok::Number("1".into()),
                Tok::Newline,
                Tok::Dedent,
                Tok::Name("z".into()),
                Tok::Newline,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn brackets_join_lines() {
        let toks = kinds("f(a,\n  b)\n");
        assert!(!toks[..toks.len() - 2].contains(&Tok::Newline));
    }

    #[test]
    fn strings_and_numbers() {
        let toks = kinds("x = rb'a\\'b' + \"\"\"q\n\"\"\" + 0x1F + 1.5e-3j\n");
        assert!(toks.contains(&Tok::Str("rb'a\\'b'".into())));
        assert!(toks.contains(&Tok::Str("\"\"\"q\n\"\"\"".into())));
        assert!(toks.contains(&Tok::Number("0x1F".into())));
        assert!(toks.contains(&Tok::Number("1.5e-3j".into())));
    }

    #[test]
    fn lexical_errors() {
        assert!(tokenize("x = 'abc\n").is_err());
        assert!(tokenize("if x:\n    y\n  z\n").is_err());
        assert!(tokenize("f(\n").is_err());
        assert!(tokenize("x = $\n").is_err());
    }
}
