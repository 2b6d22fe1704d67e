use super::{ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Decimal literal text, possibly negative.
    Number(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Comma,
    Dot,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Assign,
    Arrow,
    LeftArrow,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.punct()),
        }
    }

    fn punct(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Assign => "=",
            Tok::Arrow => "->",
            Tok::LeftArrow => "<-",
            Tok::Star => "*",
            Tok::Slash => "/",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    file: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, line: usize, col: usize, start: usize) -> SourceSpan {
        SourceSpan::new(self.file, line, col, self.pos - start)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(file: &str, text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut cur = Cursor {
        file,
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek(0) {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '/' && cur.peek(1) == Some('/') {
                while cur.peek(0).is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let (line, col, start) = (cur.line, cur.col, cur.pos);
        let Some(c) = cur.peek(0) else {
            out.push(Token {
                tok: Tok::Eof,
                span: SourceSpan::new(file, line, col, 0),
            });
            return Ok(out);
        };
        let tok = if is_ident_start(c) {
            let mut s = String::new();
            while let Some(c) = cur.peek(0) {
                // `-` belongs to the identifier only between identifier characters.
                let dash = c == '-' && cur.peek(1).is_some_and(is_ident_char);
                if is_ident_char(c) || dash {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() || (c == '-' && cur.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut s = String::new();
            s.push(cur.bump().unwrap());
            while cur.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                s.push(cur.bump().unwrap());
            }
            if cur.peek(0) == Some('.') && cur.peek(1).is_some_and(|c| c.is_ascii_digit()) {
                s.push(cur.bump().unwrap());
                while cur.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    s.push(cur.bump().unwrap());
                }
            }
            Tok::Number(s)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => {
                        return Err(ParseDiagnostic::error(
                            cur.span_from(line, col, start),
                            "unterminated string literal",
                        ))
                    }
                    Some('"') => break,
                    Some('\\') => {
                        let esc = match cur.bump() {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            other => {
                                return Err(ParseDiagnostic::error(
                                    cur.span_from(line, col, start),
                                    format!("unknown escape `\\{}`", other.unwrap_or(' ')),
                                ))
                            }
                        };
                        s.push(esc);
                    }
                    Some(c) => s.push(c),
                }
            }
            Tok::Str(s)
        } else {
            cur.bump();
            let two = |cur: &mut Cursor, next: char, yes: Tok, no: Tok| {
                if cur.peek(0) == Some(next) {
                    cur.bump();
                    yes
                } else {
                    no
                }
            };
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '>' => two(&mut cur, '=', Tok::Ge, Tok::Gt),
                '=' => two(&mut cur, '=', Tok::EqEq, Tok::Assign),
                '<' => match cur.peek(0) {
                    Some('=') => {
                        cur.bump();
                        Tok::Le
                    }
                    Some('-') => {
                        cur.bump();
                        Tok::LeftArrow
                    }
                    _ => Tok::Lt,
                },
                '-' if cur.peek(0) == Some('>') => {
                    cur.bump();
                    Tok::Arrow
                }
                '!' if cur.peek(0) == Some('=') => {
                    cur.bump();
                    Tok::Ne
                }
                other => {
                    return Err(ParseDiagnostic::error(
                        cur.span_from(line, col, start),
                        format!("unexpected character `{}`", other.escape_default()),
                    ))
                }
            }
        };
        out.push(Token {
            tok,
            span: cur.span_from(line, col, start),
        });
    }
}

/// Reports the first unbalanced delimiter. An unclosed one is reported at the
/// end of input, since that is where the missing closer belongs.
pub(crate) fn check_delimiters(tokens: &[Token]) -> Result<(), ParseDiagnostic> {
    let mut stack: Vec<&Token> = Vec::new();
    for t in tokens {
        let close = match t.tok {
            Tok::LBrace | Tok::LParen | Tok::LBracket => {
                stack.push(t);
                continue;
            }
            Tok::RBrace => Tok::LBrace,
            Tok::RParen => Tok::LParen,
            Tok::RBracket => Tok::LBracket,
            Tok::Eof => {
                if let Some(open) = stack.last() {
                    return Err(ParseDiagnostic::error(
                        t.span.clone(),
                        format!(
                            "expected `{}` to close `{}` opened at {}:{}, found end of input",
                            match open.tok {
                                Tok::LBrace => "}",
                                Tok::LParen => ")",
                                _ => "]",
                            },
                            open.tok.punct(),
                            open.span.line,
                            open.span.column
                        ),
                    ));
                }
                return Ok(());
            }
            _ => continue,
        };
        match stack.pop() {
            Some(open) if open.tok == close => {}
            _ => {
                return Err(ParseDiagnostic::error(
                    t.span.clone(),
                    format!("unmatched {}", t.tok.describe()),
                ))
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize("t", s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn idents_numbers_and_arrows() {
        assert_eq!(
            toks("a-b->c <- -1.5 120s // x\n"),
            vec![
                Tok::Ident("a-b".into()),
                Tok::Arrow,
                Tok::Ident("c".into()),
                Tok::LeftArrow,
                Tok::Number("-1.5".into()),
                Tok::Number("120".into()),
                Tok::Ident("s".into()),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("1.x"),
            vec![Tok::Number("1".into()), Tok::Dot, Tok::Ident("x".into()), Tok::Eof]
        );
    }

    #[test]
    fn strings_unescape() {
        assert_eq!(toks(r#""a\"b\\n\n""#)[0], Tok::Str("a\"b\\n\n".into()));
        assert!(tokenize("t", "\"abc").is_err());
    }

    #[test]
    fn spans_are_one_based() {
        let t = tokenize("t", "x\n  yy").unwrap();
        assert_eq!((t[1].span.line, t[1].span.column, t[1].span.length), (2, 3, 2));
        assert_eq!((t[2].span.line, t[2].span.column), (2, 5));
    }

    #[test]
    fn unclosed_brace_reported_at_eof() {
        let t = tokenize("t", "entity AGV : { speed = 1.0 m/s").unwrap();
        let d = check_delimiters(&t).unwrap_err();
        assert_eq!((d.span.line, d.span.column, d.span.length), (1, 31, 0));
        let t = tokenize("t", "a }").unwrap();
        assert_eq!(check_delimiters(&t).unwrap_err().span.column, 3);
    }
}
