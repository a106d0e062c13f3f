use super::ast::{mask, Literal, Radix};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// `$name`; always rejected by the parser, kept for a precise message.
    System(String),
    Number(Literal),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::System(s) => format!("`${s}`"),
            Tok::Number(_) => "number".to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

// Longest first so that greedy matching works.
const SYMBOLS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "**", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "~&", "~|",
    "~^", "^~", "+:", "-:", "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "#", "@", "=", "+",
    "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "?",
];

pub struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    file: &'a str,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str, file: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
            file,
        }
    }

    fn err(&self, line: u32, col: u32, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.file, line, col, msg)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                (Some(b'/'), Some(b'/')) => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some(b'/'), Some(b'*')) => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some(b'*'), Some(b'/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.err(line, col, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                Tok::Ident(self.ident())
            } else if c == b'\\' {
                return Err(self
                    .err(line, col, "escaped identifiers are not supported")
                    .unsupported("escaped identifier"));
            } else if c == b'$' {
                self.bump();
                Tok::System(self.ident())
            } else if c == b'`' {
                self.bump();
                let name = self.ident();
                return Err(self
                    .err(line, col, format!("preprocessor directive `{name} is not supported"))
                    .unsupported("preprocessor directive"));
            } else if c == b'"' {
                return Err(self
                    .err(line, col, "string literals are not supported")
                    .unsupported("string literal"));
            } else if c.is_ascii_digit() || c == b'\'' {
                Tok::Number(self.number(line, col)?)
            } else {
                let rest = &self.src[self.pos..];
                let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(s.as_bytes())) else {
                    return Err(self.err(line, col, format!("unexpected character `{}`", c as char)));
                };
                for _ in 0..sym.len() {
                    self.bump();
                }
                Tok::Sym(sym)
            };
            out.push(Token { tok, line, col });
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'$' {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn digits(&mut self, allow: impl Fn(u8) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c == b'_' {
                self.bump();
            } else if allow(c) {
                s.push(c as char);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, line: u32, col: u32) -> Result<Literal, ParseError> {
        let mut width = None;
        if self.peek() != Some(b'\'') {
            let dec = self.digits(|c| c.is_ascii_digit());
            if self.peek() == Some(b'.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                return Err(self
                    .err(line, col, "real numbers are not supported")
                    .unsupported("real number"));
            }
            // A size may be separated from its base by whitespace.
            let save = (self.pos, self.line, self.col);
            while self.peek().is_some_and(|c| c == b' ' || c == b'\t') {
                self.bump();
            }
            if self.peek() != Some(b'\'') {
                (self.pos, self.line, self.col) = save;
                let value = parse_radix(&dec, 10)
                    .ok_or_else(|| self.err(line, col, "integer literal does not fit in 64 bits"))?;
                return Ok(Literal::plain(value));
            }
            let w: u32 = dec
                .parse()
                .map_err(|_| self.err(line, col, "invalid literal size"))?;
            if w == 0 {
                return Err(self.err(line, col, "literal size must be at least 1"));
            }
            if w > 64 {
                return Err(self
                    .err(line, col, "values wider than 64 bits are not supported")
                    .unsupported("wide literal"));
            }
            width = Some(w);
        }
        self.bump(); // the quote
        if matches!(self.peek(), Some(b's' | b'S')) {
            return Err(self
                .err(line, col, "signed literals are not supported")
                .unsupported("signed literal"));
        }
        let (radix, bits) = match self.bump() {
            Some(b'b' | b'B') => (Radix::Binary, 1),
            Some(b'o' | b'O') => (Radix::Octal, 3),
            Some(b'd' | b'D') => (Radix::Decimal, 0),
            Some(b'h' | b'H') => (Radix::Hex, 4),
            _ => return Err(self.err(line, col, "expected a base (b, o, d, h) after `'`")),
        };
        while self.peek().is_some_and(|c| c == b' ' || c == b'\t') {
            self.bump();
        }
        let text = self.digits(|c| c.is_ascii_hexdigit() || matches!(c, b'x' | b'X' | b'z' | b'Z' | b'?'));
        if text.is_empty() {
            return Err(self.err(line, col, "missing digits in based literal"));
        }
        if text.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z')) {
            return Err(self
                .err(line, col, "x/z literal bits are not supported (two-valued logic only)")
                .unsupported("x/z literal"));
        }
        let mut value: u64 = 0;
        let mut dont_care: u64 = 0;
        if bits == 0 {
            if text.contains('?') {
                return Err(self.err(line, col, "`?` is not allowed in decimal literals"));
            }
            value = parse_radix(&text, 10)
                .ok_or_else(|| self.err(line, col, "integer literal does not fit in 64 bits"))?;
        } else {
            let base = 1u32 << bits;
            for ch in text.chars() {
                if (value | dont_care) >> (64 - bits) != 0 {
                    return Err(self.err(line, col, "integer literal does not fit in 64 bits"));
                }
                value <<= bits;
                dont_care <<= bits;
                if ch == '?' {
                    dont_care |= mask(bits);
                } else {
                    let d = ch
                        .to_digit(base)
                        .ok_or_else(|| self.err(line, col, format!("digit `{ch}` invalid for base")))?;
                    value |= d as u64;
                }
            }
        }
        let w = width.unwrap_or(64);
        let radix = if dont_care != 0 { Radix::Binary } else { radix };
        Ok(Literal {
            width,
            value: value & mask(w),
            dont_care: dont_care & mask(w),
            radix,
            based: true,
        })
    }
}

fn parse_radix(s: &str, radix: u32) -> Option<u64> {
    u64::from_str_radix(s, radix).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        Lexer::new(s, "t.v")
            .tokenize()
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn sized_and_unsized_numbers() {
        let t = toks("8'hFF 4'b1010 12, 'd7 3'b1?0");
        let lits: Vec<Literal> = t
            .iter()
            .filter_map(|t| match t {
                Tok::Number(l) => Some(*l),
                _ => None,
            })
            .collect();
        assert_eq!(lits[0].width, Some(8));
        assert_eq!(lits[0].value, 0xff);
        assert_eq!(lits[1].value, 0b1010);
        assert_eq!(lits[2], Literal::plain(12));
        assert_eq!(lits[3].value, 7);
        assert_eq!(lits[4].dont_care, 0b010);
        assert_eq!(lits[4].value, 0b100);
    }

    #[test]
    fn truncates_to_declared_width() {
        let t = toks("4'hFF");
        assert_eq!(t[0], Tok::Number(Literal::sized(4, 0xf)));
    }

    #[test]
    fn comments_and_symbols() {
        let t = toks("a <= b; // c\n/* d */ x<<1");
        assert_eq!(
            t,
            vec![
                Tok::Ident("a".into()),
                Tok::Sym("<="),
                Tok::Ident("b".into()),
                Tok::Sym(";"),
                Tok::Ident("x".into()),
                Tok::Sym("<<"),
                Tok::Number(Literal::plain(1)),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn rejects_xz() {
        let e = Lexer::new("4'bx01z", "t.v").tokenize().unwrap_err();
        assert!(e.message.contains("x/z"));
    }

    #[test]
    fn positions() {
        let t = Lexer::new("a\n  b", "t.v").tokenize().unwrap();
        assert_eq!((t[1].line, t[1].col), (2, 3));
    }
}
