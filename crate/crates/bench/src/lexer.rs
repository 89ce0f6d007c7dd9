//! Tokenizer. Newlines are tokens; `#` starts a comment running to the end
//! of the line.

use crate::diagnostic::{Diagnostic, DiagnosticKind, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Number text plus an optional unit glued to it (`4mm`).
    Number { text: String, unit: Option<String> },
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Semi,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number { text, unit } => format!("`{text}{}`", unit.as_deref().unwrap_or("")),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Position of the unit suffix, for numbers that have one.
    pub unit_pos: Option<Pos>,
}

fn is_unit_char(c: char) -> bool {
    c.is_alphabetic() || c == 'µ' || c == 'μ'
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool, out: &mut String) {
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let pos = cur.pos;
        let simple = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semi),
            '\n' => Some(Tok::Newline),
            _ => None,
        };
        if let Some(tok) = simple {
            cur.bump();
            out.push(Token { tok, pos, unit_pos: None });
            continue;
        }
        if c == '#' {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (matches!(c, '+' | '-' | '.')
                && cur.peek2().is_some_and(|d| d.is_ascii_digit() || d == '.'));
        if starts_number {
            let mut text = String::new();
            text.push(c);
            cur.bump();
            cur.take_while(|c| c.is_ascii_digit() || c == '.', &mut text);
            if matches!(cur.peek(), Some('e' | 'E')) {
                let next = cur.peek2();
                let signed = matches!(next, Some('+' | '-'));
                let mut probe = cur.chars.clone();
                probe.next();
                if signed {
                    probe.next();
                }
                if probe.next().is_some_and(|d| d.is_ascii_digit()) {
                    text.push(cur.bump().expect("peeked"));
                    if signed {
                        text.push(cur.bump().expect("peeked"));
                    }
                    cur.take_while(|c| c.is_ascii_digit(), &mut text);
                }
            }
            let (unit, unit_pos) = if cur.peek().is_some_and(is_unit_char) {
                let upos = cur.pos;
                let mut u = String::new();
                cur.take_while(|c| is_unit_char(c) || c.is_ascii_digit(), &mut u);
                (Some(u), Some(upos))
            } else {
                (None, None)
            };
            out.push(Token {
                tok: Tok::Number { text, unit },
                pos,
                unit_pos,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            cur.take_while(|c| c.is_alphanumeric() || c == '_', &mut s);
            out.push(Token {
                tok: Tok::Ident(s),
                pos,
                unit_pos: None,
            });
            continue;
        }
        return Err(Diagnostic::new(
            pos,
            DiagnosticKind::Syntax,
            format!("unexpected character `{c}`"),
        ));
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: cur.pos,
        unit_pos: None,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    fn num(text: &str, unit: Option<&str>) -> Tok {
        Tok::Number {
            text: text.into(),
            unit: unit.map(Into::into),
        }
    }

    #[test]
    fn numbers_with_units_and_exponents() {
        assert_eq!(
            toks("d=4mm x=1.5e-3 y=-2e3kHz z=3em"),
            vec![
                Tok::Ident("d".into()),
                Tok::Eq,
                num("4", Some("mm")),
                Tok::Ident("x".into()),
                Tok::Eq,
                num("1.5e-3", None),
                Tok::Ident("y".into()),
                Tok::Eq,
                num("-2e3", Some("kHz")),
                Tok::Ident("z".into()),
                Tok::Eq,
                num("3", Some("em")),
                Tok::Eof,
            ]
        );
        assert_eq!(toks("t=5µs")[2], num("5", Some("µs")));
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("# header\n  device { # trailing\n}").unwrap();
        assert_eq!(t[0].tok, Tok::Newline);
        assert_eq!(t[1].tok, Tok::Ident("device".into()));
        assert_eq!(t[1].pos, Pos { line: 2, column: 3 });
        assert_eq!(t[2].pos, Pos { line: 2, column: 10 });
        assert_eq!(t[4].tok, Tok::RBrace);
        assert_eq!(t[4].pos, Pos { line: 3, column: 1 });
    }

    #[test]
    fn stray_characters_are_reported() {
        let e = tokenize("a = 1\nb = @").unwrap_err();
        assert_eq!((e.line(), e.column()), (2, 5));
    }
}
